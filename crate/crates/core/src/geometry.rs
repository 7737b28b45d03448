//! Received powers, power-imbalance factors and relative channel delays for
//! a two-site SFN.
//!
//! Distances are in meters, delays in seconds and powers linear; decibels
//! appear only in the `*_db` arguments.

use crate::{Error, Result};

/// Propagation speed (m/s).
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Free-space propagation exponent.
pub const DEFAULT_ALPHA_PROP: f64 = 2.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Power received at distance `d` from an antenna radiating `p0`: `p0 / d^alpha`.
pub fn received_power(p0: f64, d: f64, alpha_prop: f64) -> Result<f64> {
    if !(p0 > 0.0) || !(d > 0.0) {
        return Err(Error::Domain(format!(
            "received power needs positive power and distance, got p0={p0}, d={d}"
        )));
    }
    check_alpha(alpha_prop)?;
    Ok(p0 / d.powf(alpha_prop))
}

/// Power imbalance (dB) of an antenna at `d_i` relative to the reference at `d1`.
///
/// The reference site is the closest one, so the result is never positive.
pub fn beta_from_distances(d_i: f64, d1: f64, alpha_prop: f64) -> Result<f64> {
    check_alpha(alpha_prop)?;
    if !(d1 > 0.0) {
        return Err(Error::Domain(format!("reference distance must be positive, got {d1}")));
    }
    if !(d_i >= d1) {
        return Err(Error::Domain(format!(
            "antenna distance {d_i} m is closer than the reference site at {d1} m"
        )));
    }
    Ok(-10.0 * alpha_prop * (d_i / d1).log10())
}

/// Delay (s) of the channel impulse response of an antenna received `beta_db`
/// below the reference, relative to the reference antenna at `d1`.
pub fn relative_delay(beta_db: f64, d1: f64, alpha_prop: f64) -> Result<f64> {
    check_alpha(alpha_prop)?;
    if !(d1 > 0.0) {
        return Err(Error::Domain(format!("reference distance must be positive, got {d1}")));
    }
    if !(beta_db <= 0.0) || !beta_db.is_finite() {
        return Err(Error::Domain(format!(
            "power imbalance must be a finite value <= 0 dB, got {beta_db}"
        )));
    }
    Ok((10f64.powf(-beta_db / (10.0 * alpha_prop)) - 1.0) * d1 / SPEED_OF_LIGHT)
}

fn check_alpha(alpha_prop: f64) -> Result<()> {
    if alpha_prop > 0.0 && alpha_prop.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("propagation constant must be positive, got {alpha_prop}")))
    }
}

/// Per-transmit-antenna power imbalance of a two-site SFN as seen by one receiver.
///
/// Antennas of one site share their site's imbalance; the first antenna is the
/// 0 dB reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SfnScenario {
    pub d1_m: f64,
    pub alpha_prop: f64,
    pub betas_db: Vec<f64>,
}

/// Received power (linear, relative to the reference) and CIR delay of one antenna.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaProfile {
    pub power: f64,
    pub delay_s: f64,
}

impl SfnScenario {
    pub fn new(d1_m: f64, alpha_prop: f64, betas_db: Vec<f64>) -> Result<Self> {
        check_alpha(alpha_prop)?;
        if !(d1_m > 0.0) {
            return Err(Error::Domain(format!("reference distance must be positive, got {d1_m}")));
        }
        match betas_db.first() {
            Some(&b) if b == 0.0 => {}
            Some(&b) => {
                return Err(Error::Domain(format!(
                    "reference antenna must be at 0 dB, got {b} dB"
                )))
            }
            None => return Err(Error::Domain("scenario needs at least one antenna".into())),
        }
        if let Some(b) = betas_db.iter().find(|b| !(**b <= 0.0) || !b.is_finite()) {
            return Err(Error::Domain(format!("power imbalance must be <= 0 dB, got {b}")));
        }
        Ok(Self {
            d1_m,
            alpha_prop,
            betas_db,
        })
    }

    /// Two sites with `antennas_per_site` co-located antennas each; the second
    /// site is received `beta_db` below the first.
    pub fn two_sites(d1_m: f64, alpha_prop: f64, antennas_per_site: usize, beta_db: f64) -> Result<Self> {
        let mut betas = vec![0.0; antennas_per_site];
        betas.extend(std::iter::repeat(beta_db).take(antennas_per_site));
        Self::new(d1_m, alpha_prop, betas)
    }

    pub fn n_antennas(&self) -> usize {
        self.betas_db.len()
    }

    pub fn distances(&self) -> Vec<f64> {
        self.betas_db
            .iter()
            .map(|b| self.d1_m * 10f64.powf(-b / (10.0 * self.alpha_prop)))
            .collect()
    }

    pub fn delays(&self) -> Result<Vec<f64>> {
        self.betas_db
            .iter()
            .map(|&b| relative_delay(b, self.d1_m, self.alpha_prop))
            .collect()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.betas_db.iter().map(|&b| db_to_linear(b)).collect()
    }

    pub fn profiles(&self) -> Result<Vec<AntennaProfile>> {
        Ok(self
            .powers()
            .into_iter()
            .zip(self.delays()?)
            .map(|(power, delay_s)| AntennaProfile { power, delay_s })
            .collect())
    }
}
