//! Frequency-domain MIMO channel coefficients per subcarrier.
//!
//! Every link has unit average power; the SFN power imbalance is applied
//! separately by the power matrix of [`crate::linmodel`]. A realization is
//! held for one space-time codeword and redrawn independently for the next.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{CMatrix, Error, Result, C64};

/// DVB-T 8K-mode subcarrier spacing (Hz).
pub const DVBT_8K_SPACING_HZ: f64 = 8e6 * 8.0 / 7.0 / 8192.0;
/// Longest DVB-T 8K guard interval (1/4 of the useful symbol), seconds.
pub const DVBT_8K_MAX_GUARD_S: f64 = 224e-6;

/// COST 207 Typical Urban, 6-tap profile.
pub const TU6_DELAYS_S: [f64; 6] = [0.0, 0.2e-6, 0.5e-6, 1.6e-6, 2.3e-6, 5.0e-6];
pub const TU6_POWERS_DB: [f64; 6] = [-3.0, 0.0, -2.0, -6.0, -8.0, -10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    RayleighIid,
    Tu6,
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelKind::RayleighIid => "rayleigh",
            ChannelKind::Tu6 => "tu6",
        })
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rayleigh" => Ok(ChannelKind::RayleighIid),
            "tu6" | "tu-6" => Ok(ChannelKind::Tu6),
            other => Err(Error::Config(format!("unknown channel '{other}' (expected rayleigh|tu6)"))),
        }
    }
}

/// Tapped delay line with tap powers normalized to unit total energy.
#[derive(Debug, Clone, PartialEq)]
pub struct TapProfile {
    pub delays_s: Vec<f64>,
    pub powers: Vec<f64>,
}

impl TapProfile {
    pub fn new(delays_s: Vec<f64>, powers_db: &[f64]) -> Result<Self> {
        if delays_s.len() != powers_db.len() || delays_s.is_empty() {
            return Err(Error::dim("tap profile", delays_s.len(), powers_db.len()));
        }
        let lin: Vec<f64> = powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        Ok(Self {
            delays_s,
            powers: lin.iter().map(|p| p / total).collect(),
        })
    }

    pub fn tu6() -> Self {
        Self::new(TU6_DELAYS_S.to_vec(), &TU6_POWERS_DB).expect("static profile")
    }

    pub fn max_delay(&self) -> f64 {
        self.delays_s.iter().cloned().fold(0.0, f64::max)
    }
}

/// Channel coefficients `h[j][i][n]` of one quasi-static block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    n_rx: usize,
    n_tx: usize,
    n_subcarriers: usize,
    coeffs: Vec<C64>,
}

impl ChannelRealization {
    pub fn from_fn(n_rx: usize, n_tx: usize, n_subcarriers: usize, mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        let mut coeffs = Vec::with_capacity(n_rx * n_tx * n_subcarriers);
        for n in 0..n_subcarriers {
            for j in 0..n_rx {
                for i in 0..n_tx {
                    coeffs.push(f(j, i, n));
                }
            }
        }
        Self {
            n_rx,
            n_tx,
            n_subcarriers,
            coeffs,
        }
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn get(&self, j: usize, i: usize, n: usize) -> C64 {
        self.coeffs[(n * self.n_rx + j) * self.n_tx + i]
    }

    /// `M_R x n_tx` channel matrix of subcarrier `n`.
    pub fn matrix(&self, n: usize) -> CMatrix {
        let base = n * self.n_rx * self.n_tx;
        CMatrix::from_row_slice(self.n_rx, self.n_tx, &self.coeffs[base..base + self.n_rx * self.n_tx])
    }
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

/// Independent unit-variance Rayleigh coefficient for every link and subcarrier.
pub fn draw_rayleigh<R: Rng + ?Sized>(rng: &mut R, n_rx: usize, n_tx: usize, n_subcarriers: usize) -> ChannelRealization {
    ChannelRealization::from_fn(n_rx, n_tx, n_subcarriers, |_, _, _| complex_gaussian(rng, 1.0))
}

/// Frequency response at subcarriers `0..n_subcarriers` of taps `gains` at
/// `delays_s`, all shifted by `offset_s`.
pub fn frequency_response(gains: &[C64], delays_s: &[f64], offset_s: f64, spacing_hz: f64, n_subcarriers: usize) -> Vec<C64> {
    // Per-tap phase rotation between adjacent subcarriers.
    let steps: Vec<C64> = delays_s
        .iter()
        .map(|d| C64::from_polar(1.0, -2.0 * PI * spacing_hz * (d + offset_s)))
        .collect();
    let mut rot: Vec<C64> = vec![C64::new(1.0, 0.0); gains.len()];
    (0..n_subcarriers)
        .map(|n| {
            if n % 64 == 0 {
                // Re-anchor to keep the recurrence from drifting.
                for (r, d) in rot.iter_mut().zip(delays_s) {
                    *r = C64::from_polar(1.0, -2.0 * PI * n as f64 * spacing_hz * (d + offset_s));
                }
            }
            let h = gains.iter().zip(&rot).map(|(g, r)| g * r).sum();
            for (r, s) in rot.iter_mut().zip(&steps) {
                *r *= s;
            }
            h
        })
        .collect()
}

/// Tapped-delay-line channel with independent complex Gaussian taps per link;
/// transmit antenna `i` is delayed by `tx_delays_s[i]`.
pub fn draw_tdl<R: Rng + ?Sized>(
    rng: &mut R,
    profile: &TapProfile,
    n_rx: usize,
    tx_delays_s: &[f64],
    n_subcarriers: usize,
    spacing_hz: f64,
) -> ChannelRealization {
    let n_tx = tx_delays_s.len();
    let max_excess = profile.max_delay() + tx_delays_s.iter().cloned().fold(0.0, f64::max);
    if max_excess > DVBT_8K_MAX_GUARD_S {
        log::warn!(
            "channel delay spread {:.1} us exceeds the {:.0} us guard interval",
            max_excess * 1e6,
            DVBT_8K_MAX_GUARD_S * 1e6
        );
    }
    let mut responses = Vec::with_capacity(n_rx * n_tx);
    for _ in 0..n_rx {
        for &offset in tx_delays_s {
            let gains: Vec<C64> = profile.powers.iter().map(|&p| complex_gaussian(rng, p)).collect();
            responses.push(frequency_response(&gains, &profile.delays_s, offset, spacing_hz, n_subcarriers));
        }
    }
    ChannelRealization::from_fn(n_rx, n_tx, n_subcarriers, |j, i, n| responses[j * n_tx + i][n])
}

pub fn draw_tu6<R: Rng + ?Sized>(
    rng: &mut R,
    n_rx: usize,
    tx_delays_s: &[f64],
    n_subcarriers: usize,
    spacing_hz: f64,
) -> ChannelRealization {
    draw_tdl(rng, &TapProfile::tu6(), n_rx, tx_delays_s, n_subcarriers, spacing_hz)
}

/// Channel model of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    pub n_rx: usize,
    pub n_subcarriers: usize,
    pub spacing_hz: f64,
    /// Per-transmit-antenna CIR delay; its length fixes the transmit antenna count.
    pub tx_delays_s: Vec<f64>,
}

impl ChannelModel {
    pub fn n_tx(&self) -> usize {
        self.tx_delays_s.len()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        match self.kind {
            ChannelKind::RayleighIid => draw_rayleigh(rng, self.n_rx, self.n_tx(), self.n_subcarriers),
            ChannelKind::Tu6 => draw_tu6(rng, self.n_rx, &self.tx_delays_s, self.n_subcarriers, self.spacing_hz),
        }
    }
}
