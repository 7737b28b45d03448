//! The 64-state (133,171) rate-1/2 convolutional code and its max-log-MAP
//! soft-input soft-output decoder.
//!
//! LLRs follow `L = ln P(b=0) / P(b=1)`. Coded bits are serialized as
//! `X0 Y0 X1 Y1 ...`, where `X` is the output of the first generator.

use crate::{Error, Result};

/// Generator polynomials, octal, first output first.
pub const GENERATORS: [u32; 2] = [0o133, 0o171];
pub const CONSTRAINT_LENGTH: usize = 7;
pub const MEMORY: usize = CONSTRAINT_LENGTH - 1;
pub const N_STATES: usize = 1 << MEMORY;

const NEG_INF: f64 = f64::NEG_INFINITY;

/// Trellis of the feed-forward encoder.
///
/// The shift register is `(u << 6) | state`; bit 5 of the state holds the most
/// recent past input.
#[derive(Debug, Clone)]
pub struct ConvCode {
    next: [[u8; 2]; N_STATES],
    out: [[u8; 2]; N_STATES],
}

/// Decoder output for one terminated block.
#[derive(Debug, Clone)]
pub struct SisoOutput {
    /// Hard decisions on the information bits (tail excluded).
    pub bits: Vec<u8>,
    /// A-posteriori LLRs of the information bits.
    pub info_llrs: Vec<f64>,
    /// Extrinsic LLRs of the coded bits, same layout as the input.
    pub extrinsic: Vec<f64>,
}

impl Default for ConvCode {
    fn default() -> Self {
        Self::new()
    }
}

impl ConvCode {
    pub fn new() -> Self {
        let mut next = [[0u8; 2]; N_STATES];
        let mut out = [[0u8; 2]; N_STATES];
        for s in 0..N_STATES {
            for u in 0..2 {
                let reg = ((u as u32) << MEMORY) | s as u32;
                let x = (reg & GENERATORS[0]).count_ones() & 1;
                let y = (reg & GENERATORS[1]).count_ones() & 1;
                next[s][u] = (reg >> 1) as u8;
                out[s][u] = ((x << 1) | y) as u8;
            }
        }
        Self { next, out }
    }

    /// Mother-code length for `n_info` information bits (tail included).
    pub fn coded_len(n_info: usize) -> usize {
        2 * (n_info + MEMORY)
    }

    /// Encodes `bits` and appends the zero tail that returns the register to state 0.
    pub fn encode(&self, bits: &[u8]) -> Vec<u8> {
        let mut state = 0usize;
        let mut coded = Vec::with_capacity(Self::coded_len(bits.len()));
        for &u in bits.iter().chain(std::iter::repeat(&0u8).take(MEMORY)) {
            let u = (u & 1) as usize;
            let o = self.out[state][u];
            coded.push(o >> 1);
            coded.push(o & 1);
            state = self.next[state][u] as usize;
        }
        coded
    }

    /// Max-log-MAP (BCJR) decoding of a terminated block.
    pub fn siso_decode(&self, llrs: &[f64]) -> Result<SisoOutput> {
        if llrs.len() % 2 != 0 || llrs.len() < 2 * (MEMORY + 1) {
            return Err(Error::Pattern(format!(
                "decoder input of {} LLRs is not a whole terminated trellis",
                llrs.len()
            )));
        }
        let steps = llrs.len() / 2;
        let n_info = steps - MEMORY;

        // Branch metric of output pair o: +-L/2 per bit.
        let gamma = |k: usize, o: u8| -> f64 {
            let lx = llrs[2 * k];
            let ly = llrs[2 * k + 1];
            let sx = if o & 2 == 0 { 0.5 } else { -0.5 };
            let sy = if o & 1 == 0 { 0.5 } else { -0.5 };
            sx * lx + sy * ly
        };

        let mut alpha = vec![[NEG_INF; N_STATES]; steps + 1];
        alpha[0][0] = 0.0;
        for k in 0..steps {
            let inputs = if k < n_info { 2 } else { 1 };
            let g = [gamma(k, 0), gamma(k, 1), gamma(k, 2), gamma(k, 3)];
            let (cur, rest) = alpha.split_at_mut(k + 1);
            let cur = &cur[k];
            let nxt = &mut rest[0];
            for s in 0..N_STATES {
                let a = cur[s];
                if a == NEG_INF {
                    continue;
                }
                for u in 0..inputs {
                    let ns = self.next[s][u] as usize;
                    let m = a + g[self.out[s][u] as usize];
                    if m > nxt[ns] {
                        nxt[ns] = m;
                    }
                }
            }
            let top = nxt.iter().cloned().fold(NEG_INF, f64::max);
            if top.is_finite() {
                nxt.iter_mut().for_each(|v| *v -= top);
            }
        }

        let mut beta = vec![[NEG_INF; N_STATES]; steps + 1];
        beta[steps][0] = 0.0;
        for k in (0..steps).rev() {
            let inputs = if k < n_info { 2 } else { 1 };
            let g = [gamma(k, 0), gamma(k, 1), gamma(k, 2), gamma(k, 3)];
            let (head, tail) = beta.split_at_mut(k + 1);
            let nxt = &tail[0];
            let cur = &mut head[k];
            for s in 0..N_STATES {
                let mut best = NEG_INF;
                for u in 0..inputs {
                    let ns = self.next[s][u] as usize;
                    let b = nxt[ns];
                    if b == NEG_INF {
                        continue;
                    }
                    let m = b + g[self.out[s][u] as usize];
                    if m > best {
                        best = m;
                    }
                }
                cur[s] = best;
            }
            let top = cur.iter().cloned().fold(NEG_INF, f64::max);
            if top.is_finite() {
                cur.iter_mut().for_each(|v| *v -= top);
            }
        }

        let mut bits = Vec::with_capacity(n_info);
        let mut info_llrs = Vec::with_capacity(n_info);
        let mut extrinsic = vec![0.0; llrs.len()];
        for k in 0..steps {
            let inputs = if k < n_info { 2 } else { 1 };
            let g = [gamma(k, 0), gamma(k, 1), gamma(k, 2), gamma(k, 3)];
            let mut best_u = [NEG_INF; 2];
            let mut best_x = [NEG_INF; 2];
            let mut best_y = [NEG_INF; 2];
            for s in 0..N_STATES {
                let a = alpha[k][s];
                if a == NEG_INF {
                    continue;
                }
                for u in 0..inputs {
                    let ns = self.next[s][u] as usize;
                    let b = beta[k + 1][ns];
                    if b == NEG_INF {
                        continue;
                    }
                    let o = self.out[s][u];
                    let m = a + g[o as usize] + b;
                    let xi = (o >> 1) as usize;
                    let yi = (o & 1) as usize;
                    best_u[u] = best_u[u].max(m);
                    best_x[xi] = best_x[xi].max(m);
                    best_y[yi] = best_y[yi].max(m);
                }
            }
            extrinsic[2 * k] = llr_diff(best_x) - llrs[2 * k];
            extrinsic[2 * k + 1] = llr_diff(best_y) - llrs[2 * k + 1];
            if k < n_info {
                let l = llr_diff(best_u);
                info_llrs.push(l);
                bits.push(u8::from(l < 0.0));
            }
        }
        Ok(SisoOutput {
            bits,
            info_llrs,
            extrinsic,
        })
    }
}

/// `best[0] - best[1]`, saturating when one hypothesis is unreachable.
fn llr_diff(best: [f64; 2]) -> f64 {
    const SAT: f64 = 1e6;
    match (best[0].is_finite(), best[1].is_finite()) {
        (true, true) => best[0] - best[1],
        (true, false) => SAT,
        (false, true) => -SAT,
        (false, false) => 0.0,
    }
}
