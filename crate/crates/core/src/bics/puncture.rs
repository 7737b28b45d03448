//! Puncturing of the rate-1/2 mother code to rates 2/3 and 3/4 with the
//! DVB-T patterns (`X1 Y1 Y2` and `X1 Y1 Y2 X3`).

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeRate {
    Half,
    TwoThirds,
    ThreeQuarters,
}

impl CodeRate {
    /// Keep mask over one period of the serialized mother output `X1 Y1 X2 Y2 ...`.
    pub fn keep_mask(self) -> &'static [bool] {
        match self {
            CodeRate::Half => &[true, true],
            CodeRate::TwoThirds => &[true, true, false, true],
            CodeRate::ThreeQuarters => &[true, true, false, true, true, false],
        }
    }

    pub fn value(self) -> f64 {
        match self {
            CodeRate::Half => 0.5,
            CodeRate::TwoThirds => 2.0 / 3.0,
            CodeRate::ThreeQuarters => 0.75,
        }
    }

    /// Number of bits kept out of `mother_len` serialized mother-code bits.
    pub fn punctured_len(self, mother_len: usize) -> usize {
        let mask = self.keep_mask();
        let per_period = mask.iter().filter(|&&k| k).count();
        let full = mother_len / mask.len();
        let rem = mother_len % mask.len();
        full * per_period + mask[..rem].iter().filter(|&&k| k).count()
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeRate::Half => "1/2",
            CodeRate::TwoThirds => "2/3",
            CodeRate::ThreeQuarters => "3/4",
        })
    }
}

impl FromStr for CodeRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1/2" => Ok(CodeRate::Half),
            "2/3" => Ok(CodeRate::TwoThirds),
            "3/4" => Ok(CodeRate::ThreeQuarters),
            other => Err(Error::Config(format!("unsupported code rate '{other}' (expected 1/2, 2/3 or 3/4)"))),
        }
    }
}

pub fn puncture<T: Copy>(mother: &[T], rate: CodeRate) -> Result<Vec<T>> {
    if mother.len() % 2 != 0 {
        return Err(Error::Pattern(format!(
            "mother-code stream of length {} is not a whole number of trellis steps",
            mother.len()
        )));
    }
    let mask = rate.keep_mask();
    Ok(mother
        .iter()
        .zip(mask.iter().cycle())
        .filter(|(_, &keep)| keep)
        .map(|(&v, _)| v)
        .collect())
}

/// Re-inserts zero LLRs at the punctured positions of a `mother_len` stream.
pub fn depuncture(llrs: &[f64], rate: CodeRate, mother_len: usize) -> Result<Vec<f64>> {
    if mother_len % 2 != 0 {
        return Err(Error::Pattern(format!(
            "mother-code length {mother_len} is not a whole number of trellis steps"
        )));
    }
    let expected = rate.punctured_len(mother_len);
    if llrs.len() != expected {
        return Err(Error::Pattern(format!(
            "rate {rate} keeps {expected} of {mother_len} bits, got {} LLRs",
            llrs.len()
        )));
    }
    let mut it = llrs.iter();
    Ok(rate
        .keep_mask()
        .iter()
        .cycle()
        .take(mother_len)
        .map(|&keep| if keep { *it.next().expect("length checked") } else { 0.0 })
        .collect())
}
