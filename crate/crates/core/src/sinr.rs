//! Received power ranking, Bernoulli activity and per-target SINR.
//!
//! Powers are handled in milliwatts internally; dBm and dB appear only at
//! the edges.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::LinkState;
use crate::error::{Error, Result};

/// Thermal noise density at room temperature, dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Noise power in dBm over `bandwidth_hz` for a receiver with the given noise figure.
pub fn noise_power(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioParams {
    /// Per-site transmit power, dBm.
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            tx_power_dbm: 46.0,
            bandwidth_hz: 10e6,
            noise_figure_db: 9.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        if !self.tx_power_dbm.is_finite() {
            return Err(Error::config("radio.tx_power_dbm", "must be finite"));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::config(
                "radio.bandwidth_hz",
                format!("must be positive, got {}", self.bandwidth_hz),
            ));
        }
        if !self.noise_figure_db.is_finite() {
            return Err(Error::config("radio.noise_figure_db", "must be finite"));
        }
        Ok(())
    }

    pub fn noise_power_dbm(&self) -> f64 {
        noise_power(self.bandwidth_hz, self.noise_figure_db)
    }
}

/// The links of one snapshot ordered by mean received power.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSnapshot {
    links: Vec<LinkState>,
    order: Vec<usize>,
    /// Received power including shadowing, mW, indexed by rank.
    rx_mw: Vec<f64>,
    noise_mw: f64,
}

impl RankedSnapshot {
    pub fn links(&self) -> &[LinkState] {
        &self.links
    }

    /// Site indices from strongest to weakest mean received power.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Received power (shadowing included) of the site at `rank`, in mW.
    pub fn rx_mw(&self, rank: usize) -> f64 {
        self.rx_mw[rank]
    }

    pub fn noise_mw(&self) -> f64 {
        self.noise_mw
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }
}

/// Orders sites by `tx − path loss`, strongest first. Shadowing is not part
/// of the key; ties keep the lower site index first.
///
/// # Panics
/// If `links` is empty.
pub fn rank_by_mean_power(links: Vec<LinkState>, radio: &RadioParams) -> RankedSnapshot {
    assert!(!links.is_empty(), "rank_by_mean_power: no links");
    let mut order: Vec<usize> = (0..links.len()).collect();
    order.sort_by(|&a, &b| links[a].path_loss_db.total_cmp(&links[b].path_loss_db));
    let rx_mw = order
        .iter()
        .map(|&k| {
            let l = &links[k];
            db_to_linear(radio.tx_power_dbm - l.path_loss_db + l.shadowing_db)
        })
        .collect();
    RankedSnapshot {
        links,
        order,
        rx_mw,
        noise_mw: db_to_linear(radio.noise_power_dbm()),
    }
}

/// Transmit indicators of the other sites during one localization signal.
///
/// `r[k]` covers the participating ranks `0..B`, `s[j]` the remaining
/// `T − B` ranks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActivityDraw {
    pub r: Vec<bool>,
    pub s: Vec<bool>,
}

fn check_activity_params(b: usize, t: usize, p: f64, q: f64) -> Result<()> {
    if b == 0 || b > t {
        return Err(Error::config("experiment.b", format!("need 1 <= B <= T = {t}, got {b}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config("scenario.p", format!("must be in [0, 1], got {p}")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::config("scenario.q", format!("must be in [0, 1], got {q}")));
    }
    Ok(())
}

impl ActivityDraw {
    /// Redraws in place, reusing the buffers. Consumes exactly `t` uniforms,
    /// each compared against `p` or `q`, so draws at different activity
    /// factors share their randomness.
    pub(crate) fn fill<R: Rng + ?Sized>(&mut self, b: usize, t: usize, p: f64, q: f64, rng: &mut R) {
        self.r.clear();
        self.s.clear();
        self.r.extend((0..b).map(|_| rng.random::<f64>() < p));
        self.s.extend((b..t).map(|_| rng.random::<f64>() < q));
    }
}

pub fn draw_activity<R: Rng + ?Sized>(
    b: usize,
    t: usize,
    p: f64,
    q: f64,
    rng: &mut R,
) -> Result<ActivityDraw> {
    check_activity_params(b, t, p, q)?;
    let mut draw = ActivityDraw::default();
    draw.fill(b, t, p, q, rng);
    Ok(draw)
}

/// Linear SINR of the localization signal from the site at rank `target`
/// (zero based) when the top `b` ranks participate.
///
/// Participating interferers contribute when `r` is set, the others when
/// `s` is set. The target's own `r` entry is ignored.
///
/// # Panics
/// If `target >= b`, `b > T`, or `activity` does not match `b`.
pub fn sinr_for_target(target: usize, b: usize, snapshot: &RankedSnapshot, activity: &ActivityDraw) -> f64 {
    let t = snapshot.len();
    assert!(target < b && b <= t, "sinr_for_target: need target < B <= T, got {target}, {b}, {t}");
    assert!(
        activity.r.len() == b && activity.s.len() == t - b,
        "sinr_for_target: activity draw does not match B = {b}, T = {t}"
    );
    let rx = &snapshot.rx_mw;
    let i1: f64 = (0..b)
        .filter(|&k| k != target && activity.r[k])
        .map(|k| rx[k])
        .sum();
    let i2: f64 = activity
        .s
        .iter()
        .zip(&rx[b..])
        .filter(|(on, _)| **on)
        .map(|(_, v)| v)
        .sum();
    rx[target] / (i1 + i2 + snapshot.noise_mw)
}
