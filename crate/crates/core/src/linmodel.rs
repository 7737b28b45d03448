//! Real-valued equivalent of the per-subcarrier MIMO model.
//!
//! The complex model `Y = H P X + W` becomes `y = G B F s + w = Geq s + w`.
//! Vectors stack real and imaginary parts interleaved, matrices are read row by
//! row: `x = [Re x_11, Im x_11, Re x_12, ..., Im x_{nTx,T}]`.

use rand::Rng;

use crate::channel::complex_gaussian;
use crate::stcodes::StCode;
use crate::{CMatrix, Error, RMatrix, RVector, Result, C64};

/// Row-wise real/imaginary stacking of a complex matrix.
pub fn stack_real_imag(m: &CMatrix) -> RVector {
    let (rows, cols) = m.shape();
    let mut v = RVector::zeros(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let z = m[(r, c)];
            let k = 2 * (r * cols + c);
            v[k] = z.re;
            v[k + 1] = z.im;
        }
    }
    v
}

/// `[Re s_1, Im s_1, ..., Re s_Q, Im s_Q]`.
pub fn stack_symbols(s: &[C64]) -> RVector {
    RVector::from_iterator(2 * s.len(), s.iter().flat_map(|z| [z.re, z.im]))
}

/// Inverse of [`stack_symbols`].
pub fn unstack_symbols(v: &[f64]) -> Vec<C64> {
    v.chunks(2).map(|c| C64::new(c[0], c[1])).collect()
}

/// Per-antenna received amplitudes `sqrt(P_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMatrix {
    amplitudes: Vec<f64>,
}

impl PowerMatrix {
    pub fn from_powers(powers: &[f64]) -> Result<Self> {
        if let Some(p) = powers.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::Domain(format!("received power must be finite and non-negative, got {p}")));
        }
        Ok(Self {
            amplitudes: powers.iter().map(|p| p.sqrt()).collect(),
        })
    }

    /// From per-antenna imbalances in dB; `-inf` switches an antenna off.
    pub fn from_betas_db(betas_db: &[f64]) -> Result<Self> {
        Self::from_powers(&betas_db.iter().map(|b| 10f64.powf(b / 10.0)).collect::<Vec<_>>())
    }

    pub fn identity(n_tx: usize) -> Self {
        Self {
            amplitudes: vec![1.0; n_tx],
        }
    }

    pub fn n_tx(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Complex diagonal `P` of the complex-domain model.
    pub fn complex_diag(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.n_tx(),
            self.amplitudes.iter().map(|&a| C64::from(a)),
        ))
    }

    /// Real diagonal `B` acting on stacked codewords of `t` slots: each
    /// antenna's amplitude repeated over its `2t` entries.
    pub fn expanded(&self, t: usize) -> RMatrix {
        let diag = RVector::from_iterator(
            2 * t * self.n_tx(),
            self.amplitudes.iter().flat_map(|&a| std::iter::repeat(a).take(2 * t)),
        );
        RMatrix::from_diagonal(&diag)
    }
}

/// Complex white Gaussian noise with variance `n0` per entry (`n0/2` per real dimension).
pub fn complex_awgn<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, n0: f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, n0))
}

/// `Y = H P X + W`.
pub fn forward_complex(h: &CMatrix, p: &PowerMatrix, x: &CMatrix, w: &CMatrix) -> Result<CMatrix> {
    if h.ncols() != p.n_tx() {
        return Err(Error::dim("channel columns vs power matrix", p.n_tx(), h.ncols()));
    }
    if x.nrows() != p.n_tx() {
        return Err(Error::dim("codeword rows vs transmit antennas", p.n_tx(), x.nrows()));
    }
    if w.shape() != (h.nrows(), x.ncols()) {
        return Err(Error::dim("noise shape", h.nrows() * x.ncols(), w.nrows() * w.ncols()));
    }
    Ok(h * p.complex_diag() * x + w)
}

/// Real channel matrix `G` (`2 M_R T x 2 n_tx T`) built from 2x2 rotation
/// blocks `[[Re h, -Im h], [Im h, Re h]]`, one per time slot and link.
pub fn channel_real_matrix(h: &CMatrix, t: usize) -> RMatrix {
    let (n_rx, n_tx) = h.shape();
    let mut g = RMatrix::zeros(2 * n_rx * t, 2 * n_tx * t);
    for j in 0..n_rx {
        for i in 0..n_tx {
            let z = h[(j, i)];
            for slot in 0..t {
                let r = 2 * (j * t + slot);
                let c = 2 * (i * t + slot);
                g[(r, c)] = z.re;
                g[(r, c + 1)] = -z.im;
                g[(r + 1, c)] = z.im;
                g[(r + 1, c + 1)] = z.re;
            }
        }
    }
    g
}

/// `y = Geq s + w` for one subcarrier and codeword block.
#[derive(Debug, Clone)]
pub struct EquivalentSystem {
    pub g: RMatrix,
    pub b: RMatrix,
    pub f: RMatrix,
    pub geq: RMatrix,
    /// `sigma_w^2 = N0 / 2`.
    pub noise_var_per_dim: f64,
}

impl EquivalentSystem {
    pub fn rows(&self) -> usize {
        self.geq.nrows()
    }

    /// Number of real symbol components, `2Q`.
    pub fn cols(&self) -> usize {
        self.geq.ncols()
    }
}

pub fn build_equivalent(h: &CMatrix, p: &PowerMatrix, code: &StCode, noise_var_per_dim: f64) -> Result<EquivalentSystem> {
    if h.ncols() != code.n_tx() || p.n_tx() != code.n_tx() {
        return Err(Error::dim("transmit antennas", code.n_tx(), h.ncols().min(p.n_tx())));
    }
    let g = channel_real_matrix(h, code.t());
    let b = p.expanded(code.t());
    let f = code.generator_matrix().clone();
    // G B scales the columns of G; avoid the dense diagonal product.
    let mut gb = g.clone();
    for (c, mut col) in gb.column_iter_mut().enumerate() {
        col *= b[(c, c)];
    }
    let geq = gb * &f;
    Ok(EquivalentSystem {
        g,
        b,
        f,
        geq,
        noise_var_per_dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_rayleigh;
    use crate::stcodes::CodeKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_symbols(rng: &mut ChaCha8Rng, q: usize) -> Vec<C64> {
        (0..q).map(|_| complex_gaussian(rng, 1.0)).collect()
    }

    #[test]
    fn identity_channel_passes_codeword() {
        let code = StCode::new(CodeKind::Golden);
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let x = code.encode(&random_symbols(&mut rng, 4)).unwrap();
        let y = forward_complex(&CMatrix::identity(2, 2), &PowerMatrix::identity(2), &x, &CMatrix::zeros(2, 2)).unwrap();
        assert!((y - x).iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn power_gating() {
        let code = StCode::new(CodeKind::ThreeD);
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let h = draw_rayleigh(&mut rng, 2, 4, 1).matrix(0);
        let p = PowerMatrix::from_betas_db(&[0.0, 0.0, f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap();
        let x = code.encode(&random_symbols(&mut rng, 8)).unwrap();
        let mut x2 = x.clone();
        for c in 0..4 {
            x2[(2, c)] = complex_gaussian(&mut rng, 1.0);
            x2[(3, c)] = complex_gaussian(&mut rng, 1.0);
        }
        let w = CMatrix::zeros(2, 4);
        let y1 = forward_complex(&h, &p, &x, &w).unwrap();
        let y2 = forward_complex(&h, &p, &x2, &w).unwrap();
        assert!((y1 - y2).iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn shape_mismatch() {
        let h = CMatrix::zeros(2, 2);
        let x = CMatrix::zeros(4, 4);
        assert!(forward_complex(&h, &PowerMatrix::identity(2), &x, &CMatrix::zeros(2, 4)).is_err());
    }

    #[test]
    fn complex_and_real_models_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for kind in CodeKind::ALL {
            let code = StCode::new(kind);
            let n_tx = code.n_tx();
            for _ in 0..1000 {
                let h = draw_rayleigh(&mut rng, 2, n_tx, 1).matrix(0);
                let betas: Vec<f64> = (0..n_tx).map(|i| if i == 0 { 0.0 } else { -30.0 * rand::Rng::random::<f64>(&mut rng) }).collect();
                let p = PowerMatrix::from_betas_db(&betas).unwrap();
                let s = random_symbols(&mut rng, code.q());
                let w = complex_awgn(&mut rng, 2, code.t(), 0.3);
                let y = forward_complex(&h, &p, &code.encode(&s).unwrap(), &w).unwrap();
                let sys = build_equivalent(&h, &p, &code, 0.15).unwrap();
                let y_real = &sys.geq * stack_symbols(&s) + stack_real_imag(&w);
                assert!((stack_real_imag(&y) - &y_real).amax() < 1e-10, "{kind}");
                // y = G B x + w applied to the codeword itself.
                let x = stack_real_imag(&code.encode(&s).unwrap());
                let via_g = &sys.g * &sys.b * x + stack_real_imag(&w);
                assert!((stack_real_imag(&y) - via_g).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn sm_single_slot_blocks() {
        let h = CMatrix::from_row_slice(2, 2, &[C64::new(0.1, 0.2), C64::new(-0.3, 0.4), C64::new(0.5, -0.6), C64::new(0.7, 0.8)]);
        let p = PowerMatrix::from_powers(&[1.0, 0.25]).unwrap();
        let code = StCode::new(CodeKind::SpatialMultiplexing);
        let sys = build_equivalent(&h, &p, &code, 0.1).unwrap();
        assert_eq!(sys.geq.shape(), (4, 4));
        let n = code.norm_factor();
        for j in 0..2 {
            for i in 0..2 {
                let z = h[(j, i)] * p.amplitudes()[i] * n;
                let blk = sys.geq.view((2 * j, 2 * i), (2, 2));
                let expect = RMatrix::from_row_slice(2, 2, &[z.re, -z.im, z.im, z.re]);
                assert!((blk - expect).amax() < 1e-15);
            }
        }
    }

    #[test]
    fn alamouti_equivalent_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let code = StCode::new(CodeKind::Alamouti);
        for betas in [[0.0, 0.0], [0.0, -12.0]] {
            let p = PowerMatrix::from_betas_db(&betas).unwrap();
            for _ in 0..100 {
                let h = draw_rayleigh(&mut rng, 2, 2, 1).matrix(0);
                let sys = build_equivalent(&h, &p, &code, 0.1).unwrap();
                let gram = sys.geq.transpose() * &sys.geq;
                let d = gram[(0, 0)];
                assert!((gram - RMatrix::identity(4, 4) * d).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn balanced_power_matrix() {
        let p = PowerMatrix::from_betas_db(&[0.0; 4]).unwrap();
        assert_eq!(p.expanded(4), RMatrix::identity(32, 32));
        let b = PowerMatrix::from_betas_db(&[0.0, -6.0]).unwrap().expanded(2);
        assert_eq!(b[(3, 3)], 1.0);
        assert!((b[(4, 4)] - 10f64.powf(-0.6).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn column_energy_matches_weighted_codeword_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let code = StCode::new(CodeKind::Golden);
        let h = draw_rayleigh(&mut rng, 2, 2, 1).matrix(0);
        let p = PowerMatrix::from_betas_db(&[0.0, -8.0]).unwrap();
        let sys = build_equivalent(&h, &p, &code, 0.1).unwrap();
        for q in 0..code.q() {
            for (col, disp) in [(2 * q, code.dispersion_re(q).clone()), (2 * q + 1, code.dispersion_im(q) * C64::i())] {
                let received = &h * p.complex_diag() * disp;
                let expect = received.norm_squared();
                assert!((sys.geq.column(col).norm_squared() - expect).abs() < 1e-12);
            }
        }
    }
}
