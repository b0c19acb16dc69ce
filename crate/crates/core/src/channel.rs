//! Urban-macro aerial-vehicle air-to-ground channel: LOS probability,
//! LOS/NLOS path loss and log-normal shadowing.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LinkDistance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    /// Carrier frequency in GHz.
    pub fc_ghz: f64,
    /// LOS shadowing std is `a · exp(−b · h_UT)` dB; this is `a`.
    pub los_shadow_std_a_db: f64,
    /// ... and this is `b`, per metre.
    pub los_shadow_std_b_per_m: f64,
    pub nlos_shadow_std_db: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            fc_ghz: 2.0,
            los_shadow_std_a_db: 4.64,
            los_shadow_std_b_per_m: 0.0066,
            nlos_shadow_std_db: 6.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.fc_ghz.is_finite() && self.fc_ghz > 0.0) {
            return Err(Error::config("channel.fc_ghz", format!("must be positive, got {}", self.fc_ghz)));
        }
        for (key, v) in [
            ("channel.los_shadow_std_a_db", self.los_shadow_std_a_db),
            ("channel.los_shadow_std_b_per_m", self.los_shadow_std_b_per_m),
            ("channel.nlos_shadow_std_db", self.nlos_shadow_std_db),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(key, format!("must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Shadowing standard deviation in dB.
    pub fn shadowing_std(&self, h_ut: f64, los: bool) -> f64 {
        if los {
            self.los_shadow_std_a_db * (-self.los_shadow_std_b_per_m * h_ut).exp()
        } else {
            self.nlos_shadow_std_db
        }
    }
}

/// One realised UAV-to-site link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub d2d: f64,
    pub d3d: f64,
    pub los: bool,
    pub path_loss_db: f64,
    pub shadowing_db: f64,
}

/// Breakpoint distance below which the link is always LOS.
pub fn los_breakpoint(h_ut: f64) -> f64 {
    (460.0 * h_ut.log10() - 700.0).max(18.0)
}

fn los_decay_length(h_ut: f64) -> f64 {
    4300.0 * h_ut.log10() - 3800.0
}

/// Probability of line of sight at horizontal distance `d2d` and UAV altitude `h_ut`.
///
/// The result is clamped to `[0, 1]`; below roughly 7.6 m altitude the decay
/// length goes negative and the raw expression leaves the unit interval.
pub fn los_probability(d2d: f64, h_ut: f64) -> Result<f64> {
    if !d2d.is_finite() || !h_ut.is_finite() {
        return Err(Error::domain(format!("los_probability({d2d}, {h_ut}): non-finite input")));
    }
    if d2d < 0.0 || h_ut <= 0.0 {
        return Err(Error::domain(format!(
            "los_probability({d2d}, {h_ut}): need d2d >= 0 and h_ut > 0"
        )));
    }
    let d1 = los_breakpoint(h_ut);
    if d2d <= d1 {
        return Ok(1.0);
    }
    let ratio = d1 / d2d;
    let p = ratio + (-d2d / los_decay_length(h_ut)).exp() * (1.0 - ratio);
    Ok(p.clamp(0.0, 1.0))
}

fn check_distance_and_freq(d3d: f64, fc_ghz: f64) -> Result<()> {
    if !(d3d.is_finite() && d3d >= 1.0) {
        return Err(Error::domain(format!("path loss needs d3d >= 1 m, got {d3d}")));
    }
    if !(fc_ghz.is_finite() && fc_ghz > 0.0) {
        return Err(Error::domain(format!("path loss needs fc > 0 GHz, got {fc_ghz}")));
    }
    Ok(())
}

/// LOS path loss in dB, `d3d` in metres, `fc_ghz` in GHz.
pub fn path_loss_los(d3d: f64, fc_ghz: f64) -> Result<f64> {
    check_distance_and_freq(d3d, fc_ghz)?;
    Ok(28.0 + 22.0 * d3d.log10() + 20.0 * fc_ghz.log10())
}

/// NLOS path loss in dB. The distance exponent shrinks with altitude.
pub fn path_loss_nlos(d3d: f64, h_ut: f64, fc_ghz: f64) -> Result<f64> {
    check_distance_and_freq(d3d, fc_ghz)?;
    if !(h_ut.is_finite() && h_ut > 1.0) {
        return Err(Error::domain(format!("NLOS path loss needs h_ut > 1 m, got {h_ut}")));
    }
    let slope = 46.0 - 7.0 * h_ut.log10();
    Ok(-17.5 + slope * d3d.log10() + 20.0 * (40.0 * std::f64::consts::PI * fc_ghz / 3.0).log10())
}

/// Draws the LOS state, path loss and shadowing of one link.
///
/// Consumes exactly one uniform and one standard normal from `rng`.
pub fn sample_link<R: Rng + ?Sized>(
    dist: LinkDistance,
    h_ut: f64,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<LinkState> {
    let p_los = los_probability(dist.d2d, h_ut)?;
    let los = rng.random::<f64>() < p_los;
    let path_loss_db = if los {
        path_loss_los(dist.d3d, params.fc_ghz)?
    } else {
        path_loss_nlos(dist.d3d, h_ut, params.fc_ghz)?
    };
    let z: f64 = rng.sample(StandardNormal);
    Ok(LinkState {
        d2d: dist.d2d,
        d3d: dist.d3d,
        los,
        path_loss_db,
        shadowing_db: z * params.shadowing_std(h_ut, los),
    })
}
