//! Iterative detection and decoding.
//!
//! The first pass filters each subcarrier with MMSE; later passes cancel the
//! soft-mapped estimates of all other real symbol components and apply a
//! matched filter. Detector and decoder exchange extrinsic LLRs only.

use std::fmt;
use std::str::FromStr;

use crate::bics::qam::AxisObservation;
use crate::bics::Bicm;
use crate::exec::Execution;
use crate::linmodel::EquivalentSystem;
use crate::{Error, RMatrix, RVector, Result, C64};

/// Floor on demapper variances; keeps the Gaussian metric finite when a
/// component is received essentially noise free.
const MIN_VARIANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceiverMode {
    /// One MMSE detection followed by one decoder pass.
    MmseOnly,
    /// MMSE first, interference cancellation with decoder feedback afterwards.
    MmsePic,
}

impl fmt::Display for ReceiverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReceiverMode::MmseOnly => "mmse",
            ReceiverMode::MmsePic => "mmse+pic",
        })
    }
}

impl FromStr for ReceiverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mmse" => Ok(ReceiverMode::MmseOnly),
            "mmse+pic" | "pic" => Ok(ReceiverMode::MmsePic),
            other => Err(Error::Config(format!("unknown receiver '{other}' (expected mmse|mmse+pic)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverConfig {
    pub iterations: usize,
    pub mode: ReceiverMode,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            iterations: 4,
            mode: ReceiverMode::MmsePic,
        }
    }
}

impl ReceiverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("receiver needs at least one iteration".into()));
        }
        Ok(())
    }

    /// Detector/decoder passes actually run.
    pub fn passes(&self) -> usize {
        match self.mode {
            ReceiverMode::MmseOnly => 1,
            ReceiverMode::MmsePic => self.iterations,
        }
    }
}

/// MMSE estimates of the real symbol components with the bias and variance of
/// the model `s_hat_p = bias_p * s_p + n_p`.
#[derive(Debug, Clone)]
pub struct MmseOutput {
    pub estimates: Vec<f64>,
    pub bias: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Gram matrix `Geq^T Geq` and matched-filter output `Geq^T y` of one
/// subcarrier; everything the detectors need after the observation is taken.
#[derive(Debug, Clone)]
pub struct Projection {
    gram: RMatrix,
    mf: RVector,
    noise_var: f64,
}

impl Projection {
    pub fn new(sys: &EquivalentSystem, y: &RVector) -> Result<Self> {
        if y.len() != sys.rows() {
            return Err(Error::dim("observation length", sys.rows(), y.len()));
        }
        Ok(Self {
            gram: sys.geq.tr_mul(&sys.geq),
            mf: sys.geq.tr_mul(y),
            noise_var: sys.noise_var_per_dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.mf.len()
    }

    /// `s_hat = g_p^T (Geq Geq^T + (sigma^2 / Es) I)^-1 y`, evaluated as
    /// `((Geq^T Geq + (sigma^2 / Es) I)^-1 Geq^T y)_p`.
    pub fn mmse(&self, symbol_power: f64) -> Result<MmseOutput> {
        let reg = self.noise_var / symbol_power;
        let n = self.dim();
        let k = &self.gram + RMatrix::identity(n, n) * reg;
        let chol = k.cholesky().ok_or_else(|| {
            Error::Singular(format!("MMSE matrix is not positive definite (regularization {reg})"))
        })?;
        let estimates = chol.solve(&self.mf);
        let filt = chol.solve(&self.gram);
        let bias: Vec<f64> = (0..n).map(|p| filt[(p, p)]).collect();
        let variance = bias
            .iter()
            .map(|&mu| (symbol_power * mu * (1.0 - mu)).max(MIN_VARIANCE))
            .collect();
        Ok(MmseOutput {
            estimates: estimates.iter().cloned().collect(),
            bias,
            variance,
        })
    }

    /// `s_hat_p = g_p^T (y - sum_{k != p} g_k s_tilde_k) / g_p^T g_p`.
    pub fn pic(&self, s_tilde: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if s_tilde.len() != n {
            return Err(Error::dim("PIC feedback", n, s_tilde.len()));
        }
        let st = RVector::from_column_slice(s_tilde);
        let resid = &self.mf - &self.gram * &st;
        (0..n)
            .map(|p| {
                let e = self.gram[(p, p)];
                if !(e > 0.0) {
                    return Err(Error::Singular(format!("column {p} of the equivalent channel is zero")));
                }
                Ok(s_tilde[p] + resid[p] / e)
            })
            .collect()
    }

    /// Variance of the PIC output around the true component: noise after the
    /// matched filter plus residual interference from imperfect feedback.
    pub fn pic_variance(&self, feedback_var: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|p| {
                let e = self.gram[(p, p)];
                let interference: f64 = (0..n)
                    .filter(|&k| k != p)
                    .map(|k| self.gram[(p, k)].powi(2) * feedback_var[k])
                    .sum();
                (self.noise_var / e + interference / (e * e)).max(MIN_VARIANCE)
            })
            .collect()
    }
}

/// Linear MMSE estimate of every real symbol component.
///
/// `symbol_power` is the per-component symbol energy; with 1.0 this is the
/// plain `(Geq Geq^T + sigma^2 I)^-1` filter.
pub fn mmse_estimate(sys: &EquivalentSystem, y: &RVector, symbol_power: f64) -> Result<MmseOutput> {
    Projection::new(sys, y)?.mmse(symbol_power)
}

/// Parallel interference cancellation with matched-filter re-estimation.
pub fn pic_estimate(sys: &EquivalentSystem, y: &RVector, s_tilde: &[f64]) -> Result<Vec<f64>> {
    Projection::new(sys, y)?.pic(s_tilde)
}

/// Exhaustive maximum-likelihood detection, `argmin ||y - Geq s||^2` over
/// all symbol vectors. Refuses when `|constellation|^Q > cap`.
pub fn ml_detect(sys: &EquivalentSystem, y: &RVector, constellation: &[C64], cap: u128) -> Result<Vec<C64>> {
    let q = sys.cols() / 2;
    let size = (constellation.len() as u128).checked_pow(q as u32).unwrap_or(u128::MAX);
    if size > cap {
        return Err(Error::EnumerationCap { size, cap });
    }
    if y.len() != sys.rows() {
        return Err(Error::dim("observation length", sys.rows(), y.len()));
    }
    let mut idx = vec![0usize; q];
    let mut s = RVector::zeros(2 * q);
    let mut best = (f64::INFINITY, idx.clone());
    loop {
        for (k, &i) in idx.iter().enumerate() {
            s[2 * k] = constellation[i].re;
            s[2 * k + 1] = constellation[i].im;
        }
        let d = (y - &sys.geq * &s).norm_squared();
        if d < best.0 {
            best = (d, idx.clone());
        }
        let mut k = 0;
        loop {
            if k == q {
                return Ok(best.1.iter().map(|&i| constellation[i]).collect());
            }
            idx[k] += 1;
            if idx[k] < constellation.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Hard decisions of every detector/decoder pass over one frame.
#[derive(Debug, Clone)]
pub struct TurboOutput {
    pub iteration_bits: Vec<Vec<u8>>,
}

impl TurboOutput {
    pub fn final_bits(&self) -> &[u8] {
        self.iteration_bits.last().expect("at least one pass")
    }

    /// Bit errors of every pass against `reference`.
    pub fn error_trace(&self, reference: &[u8]) -> Vec<usize> {
        self.iteration_bits
            .iter()
            .map(|b| b.iter().zip(reference).filter(|(a, r)| a != r).count())
            .collect()
    }
}

/// Iterative receiver over one frame.
///
/// `projections[n]` belongs to subcarrier `n`, which carries frame symbols
/// `n*Q .. (n+1)*Q`. Detection is independent per subcarrier and runs under
/// `exec`; each decoder pass waits for the whole frame.
pub fn turbo_detect(bicm: &Bicm, projections: &[Projection], config: &ReceiverConfig, exec: Execution) -> Result<TurboOutput> {
    config.validate()?;
    let qam = bicm.qam();
    let m = qam.bits_per_symbol();
    let h = qam.bits_per_axis();
    let dims: usize = projections.iter().map(|p| p.dim()).sum();
    if dims != 2 * bicm.n_symbols() {
        return Err(Error::dim("frame real symbol components", 2 * bicm.n_symbols(), dims));
    }
    let offsets: Vec<usize> = projections
        .iter()
        .scan(0, |acc, p| {
            let o = *acc;
            *acc += p.dim() / 2;
            Some(o)
        })
        .collect();
    // Per-component symbol energy of a unit-energy square QAM.
    let symbol_power = 0.5;

    let mut iteration_bits = Vec::with_capacity(config.passes());
    let mut feedback: Option<Vec<f64>> = None;
    for _ in 0..config.passes() {
        let prior = feedback.as_deref();
        let chunks: Vec<Vec<f64>> = exec.try_map(projections.len(), |n| {
            let proj = &projections[n];
            let q = proj.dim() / 2;
            let base = offsets[n] * m;
            let bits = base..base + q * m;
            let (est, bias, var) = match prior {
                None => {
                    let out = proj.mmse(symbol_power)?;
                    (out.estimates, out.bias, out.variance)
                }
                Some(ext) => {
                    let mut s_tilde = vec![0.0; 2 * q];
                    let mut v_tilde = vec![0.0; 2 * q];
                    for (p, chunk) in ext[bits.clone()].chunks(h).enumerate() {
                        let soft = qam.soft_axis(chunk);
                        s_tilde[p] = soft.mean;
                        v_tilde[p] = soft.variance;
                    }
                    let est = proj.pic(&s_tilde)?;
                    let var = proj.pic_variance(&v_tilde);
                    (est, vec![1.0; 2 * q], var)
                }
            };
            let mut llrs = vec![0.0; q * m];
            let zeros = vec![0.0; h];
            for p in 0..2 * q {
                let pri = match prior {
                    Some(ext) => &ext[base + p * h..base + (p + 1) * h],
                    None => &zeros[..],
                };
                qam.demap_axis(
                    AxisObservation {
                        value: est[p],
                        bias: bias[p],
                        variance: var[p],
                    },
                    pri,
                    &mut llrs[p * h..(p + 1) * h],
                )?;
            }
            Ok::<_, Error>(llrs)
        })?;
        let llrs: Vec<f64> = chunks.concat();
        let dec = bicm.decode(&llrs)?;
        iteration_bits.push(dec.bits);
        feedback = Some(dec.extrinsic);
    }
    Ok(TurboOutput { iteration_bits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_gaussian, draw_rayleigh};
    use crate::linmodel::{build_equivalent, stack_symbols, PowerMatrix};
    use crate::stcodes::{CodeKind, StCode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(rng: &mut ChaCha8Rng, kind: CodeKind, n_rx: usize, sigma2: f64) -> EquivalentSystem {
        let code = StCode::new(kind);
        let h = draw_rayleigh(rng, n_rx, code.n_tx(), 1).matrix(0);
        let betas: Vec<f64> = (0..code.n_tx()).map(|i| if i == 0 { 0.0 } else { -6.0 * rng.random::<f64>() }).collect();
        build_equivalent(&h, &PowerMatrix::from_betas_db(&betas).unwrap(), &code, sigma2).unwrap()
    }

    fn random_real(rng: &mut ChaCha8Rng, n: usize) -> RVector {
        RVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn mmse_matches_literal_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for kind in CodeKind::ALL {
            for _ in 0..50 {
                let sys = random_system(&mut rng, kind, 2, 0.2);
                let y = random_real(&mut rng, sys.rows());
                let out = mmse_estimate(&sys, &y, 1.0).unwrap();
                let r = sys.rows();
                let a = &sys.geq * sys.geq.transpose() + RMatrix::identity(r, r) * sys.noise_var_per_dim;
                let ainv = a.try_inverse().unwrap();
                for p in 0..sys.cols() {
                    let g = sys.geq.column(p);
                    let literal = (g.transpose() * &ainv * &y)[(0, 0)];
                    let mu = (g.transpose() * &ainv * g)[(0, 0)];
                    assert!((out.estimates[p] - literal).abs() < 1e-10, "{kind} p={p}");
                    assert!((out.bias[p] - mu).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn mmse_zero_forcing_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        for kind in [CodeKind::SpatialMultiplexing, CodeKind::Golden, CodeKind::ThreeD] {
            // M_R = 2 makes these systems square.
            let sys = random_system(&mut rng, kind, 2, 0.0);
            assert_eq!(sys.rows(), sys.cols());
            let s = random_real(&mut rng, sys.cols());
            let y = &sys.geq * &s;
            let out = mmse_estimate(&sys, &y, 1.0).unwrap();
            for p in 0..sys.cols() {
                assert!((out.estimates[p] - s[p]).abs() < 1e-8, "{kind}");
            }
        }
    }

    #[test]
    fn mmse_singular_without_regularization() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let mut sys = random_system(&mut rng, CodeKind::Golden, 2, 0.0);
        sys.geq.column_mut(3).fill(0.0);
        let y = RVector::zeros(sys.rows());
        assert!(matches!(mmse_estimate(&sys, &y, 1.0), Err(Error::Singular(_))));
    }

    #[test]
    fn mmse_orthogonal_is_scaled_matched_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let sys = random_system(&mut rng, CodeKind::Alamouti, 2, 0.3);
        let y = random_real(&mut rng, sys.rows());
        let out = mmse_estimate(&sys, &y, 1.0).unwrap();
        for p in 0..sys.cols() {
            let g = sys.geq.column(p);
            let e = g.norm_squared();
            let expect = g.dot(&y) / (e + 0.3);
            assert!((out.estimates[p] - expect).abs() < 1e-12);
            assert!((out.bias[p] - e / (e + 0.3)).abs() < 1e-12);
        }
    }

    #[test]
    fn mmse_bias_variance_model_is_calibrated() {
        // Monte-Carlo check of s_hat = mu s + n with var(n) = Es mu (1 - mu).
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        let sys = random_system(&mut rng, CodeKind::Golden, 2, 0.1);
        let es = 0.5;
        let out0 = mmse_estimate(&sys, &RVector::zeros(sys.rows()), es).unwrap();
        let trials = 20_000;
        let mut err = vec![0.0; sys.cols()];
        for _ in 0..trials {
            let s = RVector::from_fn(sys.cols(), |_, _| if rng.random::<bool>() { es.sqrt() } else { -es.sqrt() });
            let w = RVector::from_fn(sys.rows(), |_, _| rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng) * 0.1f64.sqrt());
            let y = &sys.geq * &s + w;
            let out = mmse_estimate(&sys, &y, es).unwrap();
            for p in 0..sys.cols() {
                err[p] += (out.estimates[p] - out0.bias[p] * s[p]).powi(2);
            }
        }
        for p in 0..sys.cols() {
            let emp = err[p] / trials as f64;
            assert!((emp / out0.variance[p] - 1.0).abs() < 0.05, "p={p}: {emp} vs {}", out0.variance[p]);
        }
    }

    #[test]
    fn pic_perfect_feedback_recovers_symbols() {
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        for kind in CodeKind::ALL {
            for _ in 0..100 {
                let sys = random_system(&mut rng, kind, 2, 0.0);
                let s = random_real(&mut rng, sys.cols());
                let y = &sys.geq * &s;
                let est = pic_estimate(&sys, &y, s.as_slice()).unwrap();
                for p in 0..sys.cols() {
                    assert!((est[p] - s[p]).abs() < 1e-10, "{kind}");
                }
            }
        }
    }

    #[test]
    fn pic_matches_literal_column_deletion() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for kind in CodeKind::ALL {
            let sys = random_system(&mut rng, kind, 2, 0.1);
            let y = random_real(&mut rng, sys.rows());
            let st = random_real(&mut rng, sys.cols());
            let est = pic_estimate(&sys, &y, st.as_slice()).unwrap();
            for p in 0..sys.cols() {
                let g_minus = sys.geq.clone().remove_column(p);
                let s_minus = st.clone().remove_row(p);
                let y_tilde = &y - g_minus * s_minus;
                let g = sys.geq.column(p);
                let literal = g.dot(&y_tilde) / g.dot(&g);
                assert!((est[p] - literal).abs() < 1e-10, "{kind} p={p}");
            }
            // Zero feedback reduces to the per-column matched filter.
            let est0 = pic_estimate(&sys, &y, &vec![0.0; sys.cols()]).unwrap();
            for p in 0..sys.cols() {
                let g = sys.geq.column(p);
                assert!((est0[p] - g.dot(&y) / g.dot(&g)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pic_rejects_dead_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(68);
        let mut sys = random_system(&mut rng, CodeKind::SpatialMultiplexing, 2, 0.1);
        sys.geq.column_mut(1).fill(0.0);
        let y = RVector::zeros(sys.rows());
        assert!(pic_estimate(&sys, &y, &[0.0; 4]).is_err());
    }

    #[test]
    fn ml_noiseless_and_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(69);
        let qpsk = crate::bics::qam::Qam::new(crate::bics::qam::QamOrder::Qam4).constellation();
        for kind in [CodeKind::SpatialMultiplexing, CodeKind::Alamouti, CodeKind::Golden] {
            let sys = random_system(&mut rng, kind, 2, 0.0);
            let s: Vec<C64> = (0..sys.cols() / 2).map(|_| qpsk[rng.random_range(0..4)]).collect();
            let y = &sys.geq * stack_symbols(&s);
            assert_eq!(ml_detect(&sys, &y, &qpsk, 1_000_000).unwrap(), s);
        }
        let sys = random_system(&mut rng, CodeKind::ThreeD, 2, 0.0);
        let big = crate::bics::qam::Qam::new(crate::bics::qam::QamOrder::Qam16).constellation();
        assert!(ml_detect(&sys, &RVector::zeros(16), &big, 1_000_000).is_err());
    }

    #[test]
    fn pic_variance_model_is_calibrated() {
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let sys = random_system(&mut rng, CodeKind::Golden, 2, 0.05);
        let n = sys.cols();
        let fb_var: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.3)).collect();
        let proj0 = Projection::new(&sys, &RVector::zeros(sys.rows())).unwrap();
        let model = proj0.pic_variance(&fb_var);
        let trials = 20_000;
        let mut err = vec![0.0; n];
        for _ in 0..trials {
            let s = random_real(&mut rng, n);
            let st: Vec<f64> = (0..n).map(|k| s[k] + complex_gaussian(&mut rng, 2.0 * fb_var[k]).re).collect();
            let w = RVector::from_fn(sys.rows(), |_, _| complex_gaussian(&mut rng, 0.1).re);
            let y = &sys.geq * &s + w;
            let est = pic_estimate(&sys, &y, &st).unwrap();
            for p in 0..n {
                err[p] += (est[p] - s[p]).powi(2);
            }
        }
        for p in 0..n {
            let emp = err[p] / trials as f64;
            assert!((emp / model[p] - 1.0).abs() < 0.05, "p={p}: {emp} vs {}", model[p]);
        }
    }

    #[test]
    fn pic_ignores_feedback_on_orthogonal_code() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..50 {
            let sys = random_system(&mut rng, CodeKind::Alamouti, 2, 0.1);
            let y = random_real(&mut rng, sys.rows());
            let proj = Projection::new(&sys, &y).unwrap();
            let base = proj.pic(&[0.0; 4]).unwrap();
            let fb: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let got = proj.pic(&fb).unwrap();
            for (a, b) in base.iter().zip(&got) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn receiver_names() {
        assert_eq!("mmse+pic".parse::<ReceiverMode>().unwrap(), ReceiverMode::MmsePic);
        assert_eq!("mmse".parse::<ReceiverMode>().unwrap(), ReceiverMode::MmseOnly);
        assert!(ReceiverConfig { iterations: 0, mode: ReceiverMode::MmsePic }.validate().is_err());
    }
}
