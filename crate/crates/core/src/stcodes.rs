//! Linear space-time block codes described by dispersion matrices.
//!
//! A codeword is `X = norm * sum_q (Re(s_q) U_q + j Im(s_q) V_q)`, with one
//! row per transmit antenna and one column per time slot. The dispersion
//! matrices are obtained by probing the direct construction of each code with
//! unit symbols, so `encode` and [`direct_codeword`] are two independent routes
//! to the same map.

use std::fmt;
use std::str::FromStr;

use crate::linmodel::stack_real_imag;
use crate::{CMatrix, Error, RMatrix, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeKind {
    Alamouti,
    SpatialMultiplexing,
    Golden,
    /// Alamouti across the two sites, Golden within each two-antenna site.
    ThreeD,
}

impl CodeKind {
    pub const ALL: [CodeKind; 4] = [
        CodeKind::Alamouti,
        CodeKind::SpatialMultiplexing,
        CodeKind::Golden,
        CodeKind::ThreeD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CodeKind::Alamouti => "alamouti",
            CodeKind::SpatialMultiplexing => "sm",
            CodeKind::Golden => "golden",
            CodeKind::ThreeD => "3d",
        }
    }

    /// `(transmit antennas, input symbols Q, time slots T)`.
    pub fn shape(self) -> (usize, usize, usize) {
        match self {
            CodeKind::Alamouti => (2, 2, 2),
            CodeKind::SpatialMultiplexing => (2, 2, 1),
            CodeKind::Golden => (2, 4, 2),
            CodeKind::ThreeD => (4, 8, 4),
        }
    }

    /// Antennas per site: 1 for the single-layer codes, 2 for the 3D code.
    pub fn antennas_per_site(self) -> usize {
        self.shape().0 / 2
    }
}

impl fmt::Display for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alamouti" => Ok(CodeKind::Alamouti),
            "sm" => Ok(CodeKind::SpatialMultiplexing),
            "golden" => Ok(CodeKind::Golden),
            "3d" | "threed" => Ok(CodeKind::ThreeD),
            other => Err(Error::Config(format!(
                "unknown space-time code '{other}' (expected alamouti|sm|golden|3d)"
            ))),
        }
    }
}

/// Constants of the Golden code.
#[derive(Debug, Clone, Copy)]
pub struct GoldenConstants {
    pub theta: f64,
    pub theta_bar: f64,
    pub alpha: C64,
    pub alpha_bar: C64,
    pub scale: f64,
}

impl GoldenConstants {
    pub fn new() -> Self {
        let sqrt5 = 5f64.sqrt();
        let theta = (1.0 + sqrt5) / 2.0;
        let theta_bar = 1.0 - theta;
        Self {
            theta,
            theta_bar,
            alpha: C64::new(1.0, 1.0 - theta),
            alpha_bar: C64::new(1.0, 1.0 - theta_bar),
            scale: 1.0 / sqrt5,
        }
    }

    /// Golden codeword of four symbols, including the `1/sqrt(5)` factor.
    pub fn block(&self, s: &[C64]) -> CMatrix {
        let (t, tb) = (self.theta, self.theta_bar);
        let j = C64::i();
        CMatrix::from_row_slice(
            2,
            2,
            &[
                self.alpha * (s[0] + s[1] * t),
                self.alpha * (s[2] + s[3] * t),
                j * self.alpha_bar * (s[2] + s[3] * tb),
                self.alpha_bar * (s[0] + s[1] * tb),
            ],
        ) * C64::from(self.scale)
    }
}

impl Default for GoldenConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// Codeword built directly from each code's definition, including the power
/// normalization `1/sqrt(n_tx)`.
///
/// The 3D code is laid out as `[[G1, G2], [-G2*, G1*]]` with `G1`, `G2` Golden
/// blocks of `s1..s4` and `s5..s8` and `*` the entry-wise conjugate. The
/// published 4x4 matrix differs from this in a few entries (`theta` where the
/// Golden code has `theta_bar` in the second antenna row, and the sign pattern
/// of the fourth row); the block rule keeps the Alamouti layer across sites
/// and the Golden layer within a site exact.
pub fn direct_codeword(kind: CodeKind, s: &[C64]) -> Result<CMatrix> {
    let (n_tx, q, _) = kind.shape();
    if s.len() != q {
        return Err(Error::dim("space-time code input symbols", q, s.len()));
    }
    let x = match kind {
        CodeKind::Alamouti => {
            CMatrix::from_row_slice(2, 2, &[s[0], -s[1].conj(), s[1], s[0].conj()])
        }
        CodeKind::SpatialMultiplexing => CMatrix::from_row_slice(2, 1, &[s[0], s[1]]),
        CodeKind::Golden => GoldenConstants::new().block(s),
        CodeKind::ThreeD => {
            let gc = GoldenConstants::new();
            let g1 = gc.block(&s[..4]);
            let g2 = gc.block(&s[4..]);
            let mut x = CMatrix::zeros(4, 4);
            x.view_mut((0, 0), (2, 2)).copy_from(&g1);
            x.view_mut((0, 2), (2, 2)).copy_from(&g2);
            x.view_mut((2, 0), (2, 2)).copy_from(&(-g2.map(|v| v.conj())));
            x.view_mut((2, 2), (2, 2)).copy_from(&g1.map(|v| v.conj()));
            x
        }
    };
    Ok(x * C64::from(1.0 / (n_tx as f64).sqrt()))
}

/// A linear space-time block code in dispersion form.
#[derive(Debug, Clone)]
pub struct StCode {
    kind: CodeKind,
    n_tx: usize,
    q: usize,
    t: usize,
    norm: f64,
    /// Normalized real-part dispersion matrices (`norm * U_q`).
    disp_u: Vec<CMatrix>,
    /// Normalized imaginary-part dispersion matrices (`norm * V_q`).
    disp_v: Vec<CMatrix>,
    generator: RMatrix,
}

impl StCode {
    pub fn new(kind: CodeKind) -> Self {
        let (n_tx, q, t) = kind.shape();
        let norm = 1.0 / (n_tx as f64).sqrt();
        let mut disp_u = Vec::with_capacity(q);
        let mut disp_v = Vec::with_capacity(q);
        let mut unit = vec![C64::new(0.0, 0.0); q];
        for k in 0..q {
            unit[k] = C64::new(1.0, 0.0);
            disp_u.push(direct_codeword(kind, &unit).expect("shape matches"));
            unit[k] = C64::new(0.0, 1.0);
            // X(j e_k) = j V_k
            disp_v.push(direct_codeword(kind, &unit).expect("shape matches") * -C64::i());
            unit[k] = C64::new(0.0, 0.0);
        }
        let mut generator = RMatrix::zeros(2 * n_tx * t, 2 * q);
        for k in 0..q {
            let re = stack_real_imag(&disp_u[k]);
            let im = stack_real_imag(&(&disp_v[k] * C64::i()));
            generator.set_column(2 * k, &re);
            generator.set_column(2 * k + 1, &im);
        }
        Self {
            kind,
            n_tx,
            q,
            t,
            norm,
            disp_u,
            disp_v,
            generator,
        }
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    /// Complex input symbols per codeword.
    pub fn q(&self) -> usize {
        self.q
    }

    /// Time slots per codeword.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn rate(&self) -> f64 {
        self.q as f64 / self.t as f64
    }

    pub fn norm_factor(&self) -> f64 {
        self.norm
    }

    /// Real-part dispersion matrix of symbol `k`, normalization included.
    pub fn dispersion_re(&self, k: usize) -> &CMatrix {
        &self.disp_u[k]
    }

    /// Imaginary-part dispersion matrix of symbol `k`, normalization included.
    pub fn dispersion_im(&self, k: usize) -> &CMatrix {
        &self.disp_v[k]
    }

    pub fn encode(&self, s: &[C64]) -> Result<CMatrix> {
        if s.len() != self.q {
            return Err(Error::dim("space-time code input symbols", self.q, s.len()));
        }
        let mut x = CMatrix::zeros(self.n_tx, self.t);
        for (k, sym) in s.iter().enumerate() {
            x += &self.disp_u[k] * C64::from(sym.re);
            x += &self.disp_v[k] * C64::new(0.0, sym.im);
        }
        Ok(x)
    }

    /// Real generator `F` with `stack(X(s)) = F * stack(s)`; `2 n_tx T x 2Q`.
    pub fn generator_matrix(&self) -> &RMatrix {
        &self.generator
    }

    /// Minimum over distinct codeword pairs of `det(D D^H)` with `D` their
    /// difference; for square codes this is `|det D|^2`.
    ///
    /// Enumerates the nonzero symbol-difference vectors, which by linearity
    /// covers every codeword pair. Refuses when there are more than `cap`.
    pub fn min_det_difference(&self, constellation: &[C64], cap: u128) -> Result<f64> {
        let mut diffs: Vec<C64> = Vec::new();
        for a in constellation {
            for b in constellation {
                let d = a - b;
                if !diffs.iter().any(|e| (e - d).norm() < 1e-9) {
                    diffs.push(d);
                }
            }
        }
        let size = (diffs.len() as u128).checked_pow(self.q as u32).unwrap_or(u128::MAX);
        if size > cap {
            return Err(Error::EnumerationCap { size, cap });
        }
        let zero = diffs
            .iter()
            .position(|d| d.norm() < 1e-9)
            .expect("difference set contains zero");
        let mut idx = vec![0usize; self.q];
        let mut best = f64::INFINITY;
        let mut s = vec![C64::new(0.0, 0.0); self.q];
        loop {
            if idx.iter().any(|&i| i != zero) {
                for (k, &i) in idx.iter().enumerate() {
                    s[k] = diffs[i];
                }
                let d = self.encode(&s)?;
                let gram = &d * d.adjoint();
                best = best.min(gram.determinant().re.max(0.0));
            }
            let mut k = 0;
            loop {
                if k == self.q {
                    return Ok(best);
                }
                idx[k] += 1;
                if idx[k] < diffs.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}
