//! Square Gray-labelled QAM with per-axis max-log demapping and soft mapping.
//!
//! The first half of a symbol's bits label the in-phase axis and the second
//! half the quadrature axis, each with a binary reflected Gray code over the
//! amplitude levels. The constellation has unit average energy.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QamOrder {
    Qam4,
    Qam16,
    Qam64,
    Qam256,
}

impl QamOrder {
    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            QamOrder::Qam4 => 2,
            QamOrder::Qam16 => 4,
            QamOrder::Qam64 => 6,
            QamOrder::Qam256 => 8,
        }
    }
}

impl fmt::Display for QamOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}qam", self.order())
    }
}

impl FromStr for QamOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        match t.trim_end_matches("qam") {
            "4" => Ok(QamOrder::Qam4),
            "16" => Ok(QamOrder::Qam16),
            "64" => Ok(QamOrder::Qam64),
            "256" => Ok(QamOrder::Qam256),
            _ => Err(Error::Config(format!("unsupported constellation '{s}'"))),
        }
    }
}

/// One real observation of a QAM axis: `value = bias * a + n`, `n ~ N(0, variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisObservation {
    pub value: f64,
    pub bias: f64,
    pub variance: f64,
}

/// Posterior mean and variance of one axis given bit LLRs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSoft {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone)]
pub struct Qam {
    order: QamOrder,
    bits_per_axis: usize,
    /// Amplitude of each axis label, indexed by the label read MSB first.
    amplitudes: Vec<f64>,
}

const LLR_CLIP: f64 = 50.0;

fn gray_to_binary(mut g: usize) -> usize {
    let mut b = 0;
    while g != 0 {
        b ^= g;
        g >>= 1;
    }
    b
}

impl Qam {
    pub fn new(order: QamOrder) -> Self {
        let bits_per_axis = order.bits_per_symbol() / 2;
        let levels = 1usize << bits_per_axis;
        let scale = (3.0 / (2.0 * (order.order() as f64 - 1.0))).sqrt();
        let amplitudes = (0..levels)
            .map(|label| (2.0 * gray_to_binary(label) as f64 - (levels as f64 - 1.0)) * scale)
            .collect();
        Self {
            order,
            bits_per_axis,
            amplitudes,
        }
    }

    pub fn order(&self) -> QamOrder {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_axis
    }

    pub fn bits_per_axis(&self) -> usize {
        self.bits_per_axis
    }

    /// Axis amplitudes indexed by label.
    pub fn axis_amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    fn axis_label(bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
    }

    fn label_bit(&self, label: usize, k: usize) -> usize {
        (label >> (self.bits_per_axis - 1 - k)) & 1
    }

    /// Point of the full symbol label (I bits then Q bits, MSB first).
    pub fn point(&self, label: usize) -> C64 {
        let i = label >> self.bits_per_axis;
        let q = label & ((1 << self.bits_per_axis) - 1);
        C64::new(self.amplitudes[i], self.amplitudes[q])
    }

    /// All points, indexed by full symbol label.
    pub fn constellation(&self) -> Vec<C64> {
        (0..self.order.order()).map(|l| self.point(l)).collect()
    }

    pub fn map(&self, bits: &[u8]) -> Result<Vec<C64>> {
        let m = self.bits_per_symbol();
        if bits.len() % m != 0 {
            return Err(Error::dim("QAM bit block (multiple of bits per symbol)", m, bits.len() % m));
        }
        Ok(bits
            .chunks(m)
            .map(|c| {
                C64::new(
                    self.amplitudes[Self::axis_label(&c[..self.bits_per_axis])],
                    self.amplitudes[Self::axis_label(&c[self.bits_per_axis..])],
                )
            })
            .collect())
    }

    /// Extrinsic max-log LLRs of the bits of one axis. `priors` are the
    /// a-priori LLRs of the same bits; they shape the metric but are removed
    /// from the output.
    pub fn demap_axis(&self, obs: AxisObservation, priors: &[f64], out: &mut [f64]) -> Result<()> {
        if !(obs.variance > 0.0) {
            return Err(Error::Domain(format!("demapper variance must be positive, got {}", obs.variance)));
        }
        let nb = self.bits_per_axis;
        if priors.len() != nb || out.len() != nb {
            return Err(Error::dim("axis bit count", nb, priors.len().min(out.len())));
        }
        let mut best = [[f64::NEG_INFINITY; 2]; 4];
        let inv = 0.5 / obs.variance;
        for (label, &a) in self.amplitudes.iter().enumerate() {
            let d = obs.value - obs.bias * a;
            let mut m = -d * d * inv;
            for k in 0..nb {
                m += if self.label_bit(label, k) == 0 { 0.5 * priors[k] } else { -0.5 * priors[k] };
            }
            for k in 0..nb {
                let b = self.label_bit(label, k);
                if m > best[k][b] {
                    best[k][b] = m;
                }
            }
        }
        for k in 0..nb {
            out[k] = best[k][0] - best[k][1] - priors[k];
        }
        Ok(())
    }

    /// Extrinsic LLRs of all bits of one symbol under
    /// `s_hat = bias * s + n`, with `variance` per real dimension.
    pub fn demap_llr(&self, s_hat: C64, bias: f64, variance: f64, priors: &[f64]) -> Result<Vec<f64>> {
        let m = self.bits_per_symbol();
        if priors.len() != m {
            return Err(Error::dim("symbol prior LLRs", m, priors.len()));
        }
        let h = self.bits_per_axis;
        let mut out = vec![0.0; m];
        self.demap_axis(
            AxisObservation { value: s_hat.re, bias, variance },
            &priors[..h],
            &mut out[..h],
        )?;
        self.demap_axis(
            AxisObservation { value: s_hat.im, bias, variance },
            &priors[h..],
            &mut out[h..],
        )?;
        Ok(out)
    }

    /// Mean and variance of one axis under independent bit probabilities.
    pub fn soft_axis(&self, llrs: &[f64]) -> AxisSoft {
        debug_assert_eq!(llrs.len(), self.bits_per_axis);
        let p0: Vec<f64> = llrs
            .iter()
            .map(|&l| 1.0 / (1.0 + (-l.clamp(-LLR_CLIP, LLR_CLIP)).exp()))
            .collect();
        let mut mean = 0.0;
        let mut second = 0.0;
        for (label, &a) in self.amplitudes.iter().enumerate() {
            let mut p = 1.0;
            for (k, &pk) in p0.iter().enumerate() {
                p *= if self.label_bit(label, k) == 0 { pk } else { 1.0 - pk };
            }
            mean += p * a;
            second += p * a * a;
        }
        AxisSoft {
            mean,
            variance: (second - mean * mean).max(0.0),
        }
    }

    /// Soft symbols `E[s]` and residual variances `E|s|^2 - |E[s]|^2` from
    /// coded-bit LLRs.
    pub fn soft_map(&self, llrs: &[f64]) -> Result<Vec<(C64, f64)>> {
        let m = self.bits_per_symbol();
        if llrs.len() % m != 0 {
            return Err(Error::dim("soft mapper LLR block (multiple of bits per symbol)", m, llrs.len() % m));
        }
        let h = self.bits_per_axis;
        Ok(llrs
            .chunks(m)
            .map(|c| {
                let i = self.soft_axis(&c[..h]);
                let q = self.soft_axis(&c[h..]);
                (C64::new(i.mean, q.mean), i.variance + q.variance)
            })
            .collect())
    }
}
