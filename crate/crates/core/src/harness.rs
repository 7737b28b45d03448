//! Experiment driver: configurations of the compared schemes, Monte-Carlo
//! BER estimation, required-Eb/N0 search and CSV output.
//!
//! Eb/N0 accounting: the codes radiate unit total power per channel use and
//! every link has unit average gain, so at 0 dB imbalance each receive antenna
//! collects `Es = 1` per channel use. With `eta` information bits per channel
//! use, `N0 = 1 / (eta * Eb/N0)`. Unbalanced scenarios keep the same `N0`, so
//! sweeping the imbalance shows the loss of received power.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bics::puncture::CodeRate;
use crate::bics::qam::QamOrder;
use crate::bics::{Bicm, CodecConfig};
use crate::channel::{ChannelKind, ChannelModel, DVBT_8K_SPACING_HZ};
use crate::exec::Execution;
use crate::geometry::{AntennaProfile, SfnScenario, DEFAULT_ALPHA_PROP};
use crate::linmodel::{build_equivalent, complex_awgn, forward_complex, stack_real_imag, PowerMatrix};
use crate::receiver::{turbo_detect, Projection, ReceiverConfig};
use crate::stcodes::{CodeKind, StCode};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Constellation and convolutional code rate of a scheme at a spectral efficiency.
pub fn scheme_table(code: CodeKind, eta: u32) -> Result<(QamOrder, CodeRate)> {
    use CodeKind::*;
    match (eta, code) {
        (4, Alamouti) => Ok((QamOrder::Qam64, CodeRate::TwoThirds)),
        (4, SpatialMultiplexing | Golden | ThreeD) => Ok((QamOrder::Qam16, CodeRate::Half)),
        (6, Alamouti) => Ok((QamOrder::Qam256, CodeRate::ThreeQuarters)),
        (6, SpatialMultiplexing | Golden | ThreeD) => Ok((QamOrder::Qam64, CodeRate::Half)),
        _ => Err(Error::Config(format!("no configuration of {code} for {eta} b/s/Hz (expected 4 or 6)"))),
    }
}

/// Per-antenna imbalance: the first site is the reference, the second is
/// received `beta_db` below it.
pub fn antenna_betas(code: CodeKind, beta_db: f64) -> Vec<f64> {
    let per_site = code.antennas_per_site();
    let mut b = vec![0.0; per_site];
    b.extend(std::iter::repeat(beta_db).take(per_site));
    b
}

/// Received power and CIR delay of every transmit antenna.
pub fn scenario_from_geometry(d1_m: f64, alpha_prop: f64, betas_db: &[f64]) -> Result<Vec<AntennaProfile>> {
    SfnScenario::new(d1_m, alpha_prop, betas_db.to_vec())?.profiles()
}

/// `N0` for a given Eb/N0 (dB) and spectral efficiency.
pub fn noise_density(ebn0_db: f64, eta: f64) -> f64 {
    1.0 / (eta * 10f64.powf(ebn0_db / 10.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub code: CodeKind,
    pub eta: u32,
    pub qam: QamOrder,
    pub rate: CodeRate,
    pub n_subcarriers: usize,
    pub channel: ChannelKind,
    pub spacing_hz: f64,
    pub d1_m: f64,
    pub alpha_prop: f64,
    pub betas_db: Vec<f64>,
    pub ebn0_db: Vec<f64>,
    pub target_ber: f64,
    pub receiver: ReceiverConfig,
    pub seed: u64,
    pub interleaver_seed: u64,
    pub n_rx: usize,
    /// A point stops once it has this many bit errors...
    pub min_errors: usize,
    /// ...or this many simulated information bits.
    pub max_bits: usize,
    /// Frames simulated between stopping checks.
    pub batch_frames: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        let n_subcarriers = 1024;
        Self {
            code: CodeKind::ThreeD,
            eta: 4,
            qam: QamOrder::Qam16,
            rate: CodeRate::Half,
            n_subcarriers,
            channel: ChannelKind::RayleighIid,
            spacing_hz: default_spacing(n_subcarriers),
            d1_m: 5000.0,
            alpha_prop: DEFAULT_ALPHA_PROP,
            betas_db: vec![0.0],
            ebn0_db: vec![],
            target_ber: 1e-3,
            receiver: ReceiverConfig::default(),
            seed: 1,
            interleaver_seed: 7,
            n_rx: 2,
            min_errors: 100,
            max_bits: 200_000,
            batch_frames: 4,
        }
    }
}

/// Spacing that spreads `n_subcarriers` over the band of the 8K DVB-T mode.
pub fn default_spacing(n_subcarriers: usize) -> f64 {
    DVBT_8K_SPACING_HZ * 8192.0 / n_subcarriers as f64
}

fn parse_list(value: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let fields: Vec<&str> = part.split(':').collect();
        match fields.as_slice() {
            [v] => out.push(parse_f64(v)?),
            [start, step, stop] => {
                let (start, step, stop) = (parse_f64(start)?, parse_f64(step)?, parse_f64(stop)?);
                if step == 0.0 || (stop - start) * step < 0.0 {
                    return Err(Error::Config(format!("bad range '{part}'")));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                out.extend((0..=n).map(|k| start + k as f64 * step));
            }
            _ => return Err(Error::Config(format!("bad list entry '{part}'"))),
        }
    }
    Ok(out)
}

fn parse_f64(v: &str) -> Result<f64> {
    match v.trim() {
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t.parse().map_err(|_| Error::Config(format!("'{t}' is not a number"))),
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
}

/// Splits a configuration text into its `(key, value)` lines.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

impl SimConfig {
    /// Configuration of `code` at spectral efficiency `eta` with the other
    /// fields at their defaults.
    pub fn for_scheme(code: CodeKind, eta: u32) -> Result<Self> {
        let (qam, rate) = scheme_table(code, eta)?;
        Ok(Self {
            code,
            eta,
            qam,
            rate,
            ..Self::default()
        })
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = parse_pairs(text)?;
        Self::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut cfg = Self::default();
        let mut qam = None;
        let mut rate = None;
        let mut spacing = None;
        for (k, v) in pairs {
            match k {
                "st_code" | "scheme" => cfg.code = v.parse()?,
                "eta" => cfg.eta = parse_num(k, v)?,
                "qam" => qam = Some(v.parse::<QamOrder>()?),
                "rc" => rate = Some(v.parse::<CodeRate>()?),
                "nc" => cfg.n_subcarriers = parse_num(k, v)?,
                "channel" => cfg.channel = v.parse()?,
                "spacing_hz" => spacing = Some(parse_f64(v)?),
                "d1_m" => cfg.d1_m = parse_f64(v)?,
                "alpha_prop" => cfg.alpha_prop = parse_f64(v)?,
                "beta_db" => cfg.betas_db = parse_list(v)?,
                "ebn0_db" => cfg.ebn0_db = parse_list(v)?,
                "target_ber" => cfg.target_ber = parse_f64(v)?,
                "iterations" => cfg.receiver.iterations = parse_num(k, v)?,
                "receiver" => cfg.receiver.mode = v.parse()?,
                "seed" => cfg.seed = parse_num(k, v)?,
                "interleaver_seed" => cfg.interleaver_seed = parse_num(k, v)?,
                "mr" => cfg.n_rx = parse_num(k, v)?,
                "min_errors" => cfg.min_errors = parse_num(k, v)?,
                "max_bits" => cfg.max_bits = parse_num(k, v)?,
                "batch_frames" => cfg.batch_frames = parse_num(k, v)?,
                other => return Err(Error::Config(format!("unknown key '{other}'"))),
            }
        }
        let (tq, tr) = scheme_table(cfg.code, cfg.eta)?;
        if qam.is_some_and(|q| q != tq) || rate.is_some_and(|r| r != tr) {
            return Err(Error::Config(format!(
                "{} at {} b/s/Hz uses {tq} with rate {tr}",
                cfg.code, cfg.eta
            )));
        }
        cfg.qam = tq;
        cfg.rate = tr;
        cfg.spacing_hz = spacing.unwrap_or_else(|| default_spacing(cfg.n_subcarriers));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let (q, r) = scheme_table(self.code, self.eta)?;
        if (q, r) != (self.qam, self.rate) {
            return Err(Error::Config(format!("{} at {} b/s/Hz uses {q} with rate {r}", self.code, self.eta)));
        }
        let realized = q.bits_per_symbol() as f64 * r.value() * StCode::new(self.code).rate();
        if (realized - self.eta as f64).abs() > 1e-9 {
            return Err(Error::Config(format!("realized efficiency {realized} differs from eta {}", self.eta)));
        }
        if self.n_subcarriers == 0 || self.n_rx == 0 || self.batch_frames == 0 {
            return Err(Error::Config("nc, mr and batch_frames must be positive".into()));
        }
        if !(self.target_ber > 0.0 && self.target_ber < 0.5) {
            return Err(Error::Config(format!("target BER {} outside (0, 0.5)", self.target_ber)));
        }
        if !(self.spacing_hz > 0.0) {
            return Err(Error::Config("spacing_hz must be positive".into()));
        }
        if let Some(b) = self.betas_db.iter().find(|b| !(**b <= 0.0)) {
            return Err(Error::Config(format!("beta {b} dB must be <= 0")));
        }
        if self.channel == ChannelKind::Tu6 && self.betas_db.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config("the TU-6 channel needs finite beta values for its delays".into()));
        }
        self.receiver.validate()
    }

    /// Serializes the configuration in the format read by [`SimConfig::parse`].
    pub fn to_kv(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let _ = writeln!(s, "st_code = {}", self.code);
        let _ = writeln!(s, "eta = {}", self.eta);
        let _ = writeln!(s, "qam = {}", self.qam);
        let _ = writeln!(s, "rc = {}", self.rate);
        let _ = writeln!(s, "nc = {}", self.n_subcarriers);
        let _ = writeln!(s, "channel = {}", self.channel);
        let _ = writeln!(s, "spacing_hz = {}", self.spacing_hz);
        let _ = writeln!(s, "d1_m = {}", self.d1_m);
        let _ = writeln!(s, "alpha_prop = {}", self.alpha_prop);
        let _ = writeln!(s, "beta_db = {}", list(&self.betas_db));
        let _ = writeln!(s, "ebn0_db = {}", list(&self.ebn0_db));
        let _ = writeln!(s, "target_ber = {}", self.target_ber);
        let _ = writeln!(s, "iterations = {}", self.receiver.iterations);
        let _ = writeln!(s, "receiver = {}", self.receiver.mode);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "interleaver_seed = {}", self.interleaver_seed);
        let _ = writeln!(s, "mr = {}", self.n_rx);
        let _ = writeln!(s, "min_errors = {}", self.min_errors);
        let _ = writeln!(s, "max_bits = {}", self.max_bits);
        let _ = writeln!(s, "batch_frames = {}", self.batch_frames);
        s
    }
}

/// Monte-Carlo estimate at one `(beta, Eb/N0)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub beta_db: f64,
    pub ebn0_db: f64,
    pub frames: usize,
    pub frame_errors: usize,
    pub bits: usize,
    pub errors: usize,
    /// Bit errors after each receiver pass.
    pub iteration_errors: Vec<usize>,
    pub wall_time: Duration,
}

impl PointResult {
    pub fn ber(&self) -> f64 {
        self.errors as f64 / self.bits as f64
    }

    pub fn fer(&self) -> f64 {
        self.frame_errors as f64 / self.frames as f64
    }

    pub fn iteration_ber(&self) -> Vec<f64> {
        self.iteration_errors.iter().map(|&e| e as f64 / self.bits as f64).collect()
    }

    /// Normal-approximation 95% half-width of the BER.
    pub fn ber_ci95(&self) -> f64 {
        let p = self.ber();
        1.96 * (p * (1.0 - p) / self.bits as f64).sqrt()
    }

    pub fn low_confidence(&self, min_errors: usize) -> bool {
        self.errors < min_errors
    }
}

#[derive(Debug, Clone)]
struct FrameOutcome {
    bits: usize,
    iteration_errors: Vec<usize>,
}

/// Prepared simulation of one configuration; reusable across points.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    code: StCode,
    bicm: Bicm,
    exec: Execution,
}

impl Simulator {
    pub fn new(config: SimConfig, exec: Execution) -> Result<Self> {
        config.validate()?;
        let code = StCode::new(config.code);
        let bicm = Bicm::new(
            CodecConfig {
                rate: config.rate,
                qam: config.qam,
            },
            config.n_subcarriers * code.q(),
            config.interleaver_seed,
        )?;
        Ok(Self {
            config,
            code,
            bicm,
            exec,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn info_bits_per_frame(&self) -> usize {
        self.bicm.n_info()
    }

    fn channel_model(&self, betas: &[f64]) -> Result<ChannelModel> {
        let tx_delays_s = match self.config.channel {
            ChannelKind::RayleighIid => vec![0.0; betas.len()],
            ChannelKind::Tu6 => scenario_from_geometry(self.config.d1_m, self.config.alpha_prop, betas)?
                .iter()
                .map(|p| p.delay_s)
                .collect(),
        };
        Ok(ChannelModel {
            kind: self.config.channel,
            n_rx: self.config.n_rx,
            n_subcarriers: self.config.n_subcarriers,
            spacing_hz: self.config.spacing_hz,
            tx_delays_s,
        })
    }

    /// Simulates frame `index`. The random stream depends only on the seed and
    /// the frame index, so every point of a sweep sees the same bits, channels
    /// and normalized noise.
    fn simulate_frame(&self, index: u64, model: &ChannelModel, power: &PowerMatrix, n0: f64) -> Result<FrameOutcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(index);
        let info: Vec<u8> = (0..self.bicm.n_info()).map(|_| rng.random_range(0..2u8)).collect();
        let symbols = self.bicm.encode(&info)?;
        let realization = model.draw(&mut rng);
        let q = self.code.q();
        let mut projections = Vec::with_capacity(self.config.n_subcarriers);
        for n in 0..self.config.n_subcarriers {
            let h = realization.matrix(n);
            let x = self.code.encode(&symbols[n * q..(n + 1) * q])?;
            let w = complex_awgn(&mut rng, self.config.n_rx, self.code.t(), n0);
            let y = stack_real_imag(&forward_complex(&h, power, &x, &w)?);
            let sys = build_equivalent(&h, power, &self.code, n0 / 2.0)?;
            projections.push(Projection::new(&sys, &y)?);
        }
        let out = turbo_detect(&self.bicm, &projections, &self.config.receiver, self.exec)?;
        Ok(FrameOutcome {
            bits: info.len(),
            iteration_errors: out.error_trace(&info),
        })
    }

    pub fn run_point(&self, beta_db: f64, ebn0_db: f64) -> Result<PointResult> {
        let start = Instant::now();
        let betas = antenna_betas(self.config.code, beta_db);
        let model = self.channel_model(&betas)?;
        let power = PowerMatrix::from_betas_db(&betas)?;
        let n0 = noise_density(ebn0_db, self.config.eta as f64);
        let passes = self.config.receiver.passes();
        let mut res = PointResult {
            beta_db,
            ebn0_db,
            frames: 0,
            frame_errors: 0,
            bits: 0,
            errors: 0,
            iteration_errors: vec![0; passes],
            wall_time: Duration::ZERO,
        };
        while res.errors < self.config.min_errors && res.bits < self.config.max_bits {
            let first = res.frames as u64;
            let batch = self
                .exec
                .try_map(self.config.batch_frames, |k| self.simulate_frame(first + k as u64, &model, &power, n0))?;
            for f in batch {
                res.frames += 1;
                res.bits += f.bits;
                let final_errors = *f.iteration_errors.last().expect("one pass");
                res.errors += final_errors;
                res.frame_errors += usize::from(final_errors > 0);
                for (acc, e) in res.iteration_errors.iter_mut().zip(&f.iteration_errors) {
                    *acc += e;
                }
            }
        }
        res.wall_time = start.elapsed();
        log::debug!(
            "{} eta={} beta={} ebn0={} ber={:.3e} frames={} ({:.1?})",
            self.config.code,
            self.config.eta,
            beta_db,
            ebn0_db,
            res.ber(),
            res.frames,
            res.wall_time
        );
        Ok(res)
    }

    pub fn run_sweep(&self) -> Result<SweepResult> {
        let mut points = Vec::new();
        for &beta in &self.config.betas_db {
            for &ebn0 in &self.config.ebn0_db {
                points.push(self.run_point(beta, ebn0)?);
            }
        }
        Ok(SweepResult {
            config: self.config.clone(),
            points,
        })
    }

    /// Eb/N0 (dB) at which the BER crosses `target`.
    ///
    /// Steps by 2 dB from `start_db` until the target is bracketed, bisects the
    /// bracket down to the 0.25 dB grid, then interpolates `log10(BER)`
    /// linearly between the bracketing points. A target that cannot be
    /// bracketed inside `[-10, 40]` dB gives a censored result.
    pub fn required_ebn0(&self, beta_db: f64, target: f64, start_db: f64) -> Result<RequiredEbn0> {
        const GRID: f64 = 0.25;
        const STEP: f64 = 2.0;
        const LOWEST: f64 = -10.0;
        const HIGHEST: f64 = 40.0;
        let snap = |x: f64| (x / GRID).round() * GRID;
        let mut evaluated: Vec<PointResult> = Vec::new();
        let mut eval = |x: f64| -> Result<f64> {
            if let Some(p) = evaluated.iter().find(|p| p.ebn0_db == x) {
                return Ok(p.ber());
            }
            let p = self.run_point(beta_db, x)?;
            let ber = p.ber();
            evaluated.push(p);
            Ok(ber)
        };
        let censored = |evaluated: Vec<PointResult>| RequiredEbn0 {
            beta_db,
            target_ber: target,
            value_db: None,
            evaluated,
        };

        let mut x = snap(start_db).clamp(LOWEST, HIGHEST);
        let (mut lo, mut hi);
        if eval(x)? > target {
            lo = x;
            loop {
                x += STEP;
                if x > HIGHEST {
                    return Ok(censored(evaluated));
                }
                if eval(x)? <= target {
                    hi = x;
                    break;
                }
                lo = x;
            }
        } else {
            hi = x;
            loop {
                x -= STEP;
                if x < LOWEST {
                    return Ok(censored(evaluated));
                }
                if eval(x)? > target {
                    lo = x;
                    break;
                }
                hi = x;
            }
        }
        while hi - lo > GRID + 1e-9 {
            let mid = snap((lo + hi) / 2.0);
            let mid = if mid <= lo || mid >= hi { lo + GRID } else { mid };
            if eval(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let floor_log = |p: &PointResult| (p.ber().max(0.5 / p.bits as f64)).log10();
        let p_lo = evaluated.iter().find(|p| p.ebn0_db == lo).expect("evaluated");
        let p_hi = evaluated.iter().find(|p| p.ebn0_db == hi).expect("evaluated");
        let (l_lo, l_hi) = (floor_log(p_lo), floor_log(p_hi));
        let t = target.log10();
        let value = if l_lo > l_hi {
            lo + (hi - lo) * ((l_lo - t) / (l_lo - l_hi)).clamp(0.0, 1.0)
        } else {
            hi
        };
        Ok(RequiredEbn0 {
            beta_db,
            target_ber: target,
            value_db: Some(value),
            evaluated,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config: SimConfig,
    pub points: Vec<PointResult>,
}

#[derive(Debug, Clone)]
pub struct RequiredEbn0 {
    pub beta_db: f64,
    pub target_ber: f64,
    /// `None` when the target could not be bracketed.
    pub value_db: Option<f64>,
    pub evaluated: Vec<PointResult>,
}

impl RequiredEbn0 {
    pub fn censored(&self) -> bool {
        self.value_db.is_none()
    }
}

pub const SWEEP_COLUMNS: &[&str] = &[
    "scheme",
    "eta",
    "beta_db",
    "ebn0_db",
    "ber",
    "fer",
    "bits",
    "errors",
    "iters",
    "seed",
    "nc",
    "channel",
    "alpha_prop",
    "d1_m",
    "qam",
    "rc",
    "mr",
    "receiver",
    "interleaver_seed",
    "spacing_hz",
    "frames",
    "ber_ci95",
    "low_confidence",
    "min_errors",
    "max_bits",
    "batch_frames",
    "version",
];

pub const REQUIRED_COLUMNS: &[&str] = &[
    "scheme",
    "eta",
    "beta_db",
    "required_ebn0_db",
    "target_ber",
    "censored",
    "iters",
    "seed",
    "nc",
    "channel",
    "alpha_prop",
    "d1_m",
    "qam",
    "rc",
    "mr",
    "receiver",
    "interleaver_seed",
    "spacing_hz",
    "min_errors",
    "max_bits",
    "batch_frames",
    "version",
];

fn config_fields(c: &SimConfig) -> [String; 6] {
    [
        c.qam.to_string(),
        c.rate.to_string(),
        c.n_rx.to_string(),
        c.receiver.mode.to_string(),
        c.interleaver_seed.to_string(),
        c.spacing_hz.to_string(),
    ]
}

/// Appends sweep rows (no header) to `out`.
pub fn write_sweep_rows(out: &mut String, result: &SweepResult) {
    let c = &result.config;
    for p in &result.points {
        let mut row = vec![
            c.code.to_string(),
            c.eta.to_string(),
            p.beta_db.to_string(),
            p.ebn0_db.to_string(),
            p.ber().to_string(),
            p.fer().to_string(),
            p.bits.to_string(),
            p.errors.to_string(),
            c.receiver.passes().to_string(),
            c.seed.to_string(),
            c.n_subcarriers.to_string(),
            c.channel.to_string(),
            c.alpha_prop.to_string(),
            c.d1_m.to_string(),
        ];
        row.extend(config_fields(c));
        row.extend([
            p.frames.to_string(),
            p.ber_ci95().to_string(),
            p.low_confidence(c.min_errors).to_string(),
            c.min_errors.to_string(),
            c.max_bits.to_string(),
            c.batch_frames.to_string(),
            VERSION.to_string(),
        ]);
        out.push_str(&row.join(","));
        out.push('\n');
    }
}

pub fn sweep_csv(results: &[SweepResult]) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    for r in results {
        write_sweep_rows(&mut out, r);
    }
    out
}

pub fn required_csv(rows: &[(SimConfig, RequiredEbn0)]) -> String {
    let mut out = REQUIRED_COLUMNS.join(",");
    out.push('\n');
    for (c, r) in rows {
        let mut row = vec![
            c.code.to_string(),
            c.eta.to_string(),
            r.beta_db.to_string(),
            r.value_db.map(|v| v.to_string()).unwrap_or_default(),
            r.target_ber.to_string(),
            r.censored().to_string(),
            c.receiver.passes().to_string(),
            c.seed.to_string(),
            c.n_subcarriers.to_string(),
            c.channel.to_string(),
            c.alpha_prop.to_string(),
            c.d1_m.to_string(),
        ];
        row.extend(config_fields(c));
        row.extend([
            c.min_errors.to_string(),
            c.max_bits.to_string(),
            c.batch_frames.to_string(),
            VERSION.to_string(),
        ]);
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Receiver description echoed in output headers.
pub fn describe(c: &SimConfig) -> String {
    format!(
        "{} eta={} ({} rate {}) {} nc={} mr={} receiver={} passes={} seed={} | Eb/N0: N0 = 1/(eta*Eb/N0), Es = 1 per Rx antenna at beta = 0",
        c.code,
        c.eta,
        c.qam,
        c.rate,
        c.channel,
        c.n_subcarriers,
        c.n_rx,
        c.receiver.mode,
        c.receiver.passes(),
        c.seed
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_efficiencies() {
        for eta in [4, 6] {
            for code in CodeKind::ALL {
                let (q, r) = scheme_table(code, eta).unwrap();
                let realized = q.bits_per_symbol() as f64 * r.value() * StCode::new(code).rate();
                assert!((realized - eta as f64).abs() < 1e-12);
            }
        }
        assert_eq!(scheme_table(CodeKind::Alamouti, 4).unwrap(), (QamOrder::Qam64, CodeRate::TwoThirds));
        assert_eq!(scheme_table(CodeKind::Alamouti, 6).unwrap(), (QamOrder::Qam256, CodeRate::ThreeQuarters));
        assert_eq!(scheme_table(CodeKind::ThreeD, 6).unwrap(), (QamOrder::Qam64, CodeRate::Half));
        assert!(scheme_table(CodeKind::Golden, 5).is_err());
    }

    #[test]
    fn betas_per_site() {
        assert_eq!(antenna_betas(CodeKind::Alamouti, -6.0), vec![0.0, -6.0]);
        assert_eq!(antenna_betas(CodeKind::ThreeD, -12.0), vec![0.0, 0.0, -12.0, -12.0]);
    }

    #[test]
    fn geometry_scenarios() {
        let p = scenario_from_geometry(5000.0, 2.0, &[0.0, 0.0]).unwrap();
        assert!(p.iter().all(|a| a.delay_s == 0.0 && a.power == 1.0));
        let p = scenario_from_geometry(5000.0, 2.0, &antenna_betas(CodeKind::ThreeD, -12.0)).unwrap();
        assert_eq!(p[0].delay_s, 0.0);
        assert!((p[2].delay_s - 49.72e-6).abs() < 0.01e-6, "{}", p[2].delay_s);
        assert_eq!(p[2], p[3]);
        assert!((p[3].power - 10f64.powf(-1.2)).abs() < 1e-15);
    }

    #[test]
    fn parse_config() {
        let cfg = SimConfig::parse(
            "# comment\nst_code = golden\neta = 6\nbeta_db = 0, -6\nebn0_db = 2:0.5:4\nreceiver = mmse\nseed = 9 # trailing\n",
        )
        .unwrap();
        assert_eq!(cfg.code, CodeKind::Golden);
        assert_eq!(cfg.qam, QamOrder::Qam64);
        assert_eq!(cfg.rate, CodeRate::Half);
        assert_eq!(cfg.betas_db, vec![0.0, -6.0]);
        assert_eq!(cfg.ebn0_db, vec![2.0, 2.5, 3.0, 3.5, 4.0]);
        assert_eq!(cfg.receiver.mode, crate::receiver::ReceiverMode::MmseOnly);
        assert_eq!(cfg.seed, 9);
        assert_eq!(SimConfig::parse(&cfg.to_kv()).unwrap(), cfg);
    }

    #[test]
    fn config_errors() {
        assert!(SimConfig::parse("st_code = alamouti\nqam = 16qam\n").is_err());
        assert!(SimConfig::parse("st_code = alamouti\nrc = 1/2\n").is_err());
        assert!(SimConfig::parse("eta = 5\n").is_err());
        assert!(SimConfig::parse("bogus = 1\n").is_err());
        assert!(SimConfig::parse("st_code\n").is_err());
        assert!(SimConfig::parse("beta_db = 3\n").is_err());
        assert!(SimConfig::parse("iterations = 0\n").is_err());
        assert!(SimConfig::parse("channel = tu6\nbeta_db = -inf\n").is_err());
        assert!(SimConfig::parse("st_code = alamouti\nqam = 64qam\nrc = 2/3\n").is_ok());
    }

    #[test]
    fn noise_accounting() {
        assert!((noise_density(0.0, 4.0) - 0.25).abs() < 1e-15);
        assert!((noise_density(10.0, 6.0) - 1.0 / 60.0).abs() < 1e-15);
    }

    fn small(code: CodeKind) -> SimConfig {
        SimConfig {
            n_subcarriers: 32,
            batch_frames: 2,
            max_bits: 2000,
            min_errors: 10,
            ..SimConfig::for_scheme(code, 4).unwrap()
        }
    }

    #[test]
    fn noiseless_frames_decode() {
        for code in CodeKind::ALL {
            let sim = Simulator::new(small(code), Execution::Sequential).unwrap();
            let p = sim.run_point(0.0, 80.0).unwrap();
            assert_eq!(p.errors, 0, "{code}");
            assert!(p.iteration_errors.iter().all(|&e| e == 0));
        }
    }

    #[test]
    fn execution_policies_agree() {
        let cfg = SimConfig {
            channel: ChannelKind::Tu6,
            ..small(CodeKind::ThreeD)
        };
        let seq = Simulator::new(cfg.clone(), Execution::Sequential).unwrap().run_point(-6.0, 3.0).unwrap();
        let par = Simulator::new(cfg, Execution::Parallel).unwrap().run_point(-6.0, 3.0).unwrap();
        assert_eq!(seq.errors, par.errors);
        assert_eq!(seq.iteration_errors, par.iteration_errors);
        assert_eq!(seq.frames, par.frames);
    }

    fn waterfall_point(code: CodeKind, ebn0: f64) -> PointResult {
        let cfg = SimConfig {
            max_bits: 150_000,
            min_errors: 1_000_000,
            ..SimConfig::for_scheme(code, 4).unwrap()
        };
        Simulator::new(cfg, Execution::Parallel).unwrap().run_point(0.0, ebn0).unwrap()
    }

    #[test]
    fn iterations_do_not_raise_ber_in_waterfall() {
        let p = waterfall_point(CodeKind::Golden, 6.0);
        let first = p.iteration_errors[0];
        assert!(first > 100, "{:?}", p.iteration_errors);
        for w in p.iteration_errors.windows(2) {
            let (a, b) = (w[0] as f64, w[1] as f64);
            // Counts are paired over the same frames; allow 2 sigma of Poisson noise.
            assert!(b <= a + 2.0 * a.max(1.0).sqrt(), "{:?}", p.iteration_errors);
        }
        assert!(*p.iteration_errors.last().unwrap() < first / 10);
    }

    #[test]
    fn alamouti_iterations_change_little() {
        let p = waterfall_point(CodeKind::Alamouti, 6.0);
        let first = p.iteration_errors[0] as f64;
        assert!(first > 500.0, "{:?}", p.iteration_errors);
        for &e in &p.iteration_errors[1..] {
            assert!((e as f64 / first - 1.0).abs() < 0.25, "{:?}", p.iteration_errors);
        }
    }

    #[test]
    fn csv_shape() {
        let sim = Simulator::new(small(CodeKind::Alamouti), Execution::Sequential).unwrap();
        let sweep = SweepResult {
            config: sim.config().clone(),
            points: vec![sim.run_point(-3.0, 6.0).unwrap()],
        };
        let csv = sweep_csv(&[sweep]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
        assert!(lines[0].starts_with("scheme,eta,beta_db,ebn0_db,ber,fer,bits,errors,iters,seed,nc,channel,alpha_prop,d1_m"));
        assert!(lines[1].starts_with("alamouti,4,-3,6,"));
    }
}
