//! Monte Carlo estimation of the B-localizability probability.
//!
//! Each snapshot draws a UAV position, the LOS state and shadowing of every
//! link, and fresh activity indicators for every (target, B) pair. From
//! those draws we keep, for every candidate B, the smallest SINR among the B
//! strongest sites. `Ψ(α)` is the largest B whose minimum clears `α`, so one
//! pass over the snapshots answers every threshold with common random
//! numbers.

use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_link, ChannelParams};
use crate::error::{Error, Result};
use crate::geometry::{build_hex_layout, link_distances, sample_uav_position, NetworkLayout, UavPosition};
use crate::sinr::{linear_to_db, rank_by_mean_power, sinr_for_target, ActivityDraw, RadioParams, RankedSnapshot};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Range searched for the pre-processing threshold by the gain solver, dB.
pub const GAIN_SEARCH_RANGE_DB: (f64, f64) = (-60.0, 0.0);
/// Bisection stops once the bracket is this narrow, dB.
pub const GAIN_TOLERANCE_DB: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutParams {
    pub isd_m: f64,
    pub tiers: usize,
    pub h_bs_m: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            isd_m: 500.0,
            tiers: 2,
            h_bs_m: 25.0,
        }
    }
}

impl LayoutParams {
    pub fn build(&self) -> Result<NetworkLayout> {
        build_hex_layout(self.isd_m, self.tiers, self.h_bs_m)
    }
}

/// Per-run scenario: altitude, thresholds, activity factors and Monte Carlo budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub h_ut_m: f64,
    /// Pre-processing SINR threshold.
    pub alpha_db: f64,
    /// Post-processing SINR threshold.
    pub beta_db: f64,
    /// Activity factor of participating sites.
    pub p: f64,
    /// Activity factor of non-participating sites.
    pub q: f64,
    pub n_snapshots: usize,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            h_ut_m: 30.0,
            alpha_db: -16.0,
            beta_db: -6.0,
            p: 1.0,
            q: 1.0,
            n_snapshots: 100_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub layout: LayoutParams,
    pub channel: ChannelParams,
    pub radio: RadioParams,
    pub scenario: Scenario,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.layout.build()?;
        self.channel.validate()?;
        self.radio.validate()?;
        let s = &self.scenario;
        // the NLOS path-loss model needs h_UT > 1 m
        if !(s.h_ut_m.is_finite() && s.h_ut_m > 1.0) {
            return Err(Error::config("scenario.h_ut_m", format!("must be greater than 1 m, got {}", s.h_ut_m)));
        }
        if !s.alpha_db.is_finite() {
            return Err(Error::config("scenario.alpha_db", "must be finite"));
        }
        if !s.beta_db.is_finite() {
            return Err(Error::config("scenario.beta_db", "must be finite"));
        }
        if !(0.0..=1.0).contains(&s.p) {
            return Err(Error::config("scenario.p", format!("must be in [0, 1], got {}", s.p)));
        }
        if !(0.0..=1.0).contains(&s.q) {
            return Err(Error::config("scenario.q", format!("must be in [0, 1], got {}", s.q)));
        }
        if s.n_snapshots == 0 {
            return Err(Error::config("scenario.n_snapshots", "must be at least 1"));
        }
        Ok(())
    }
}

/// Random stream of snapshot `index`: ChaCha8 keyed by the master seed, one
/// stream per snapshot. Independent of evaluation order.
pub fn snapshot_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Channel part of one Monte Carlo draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub uav: UavPosition,
    pub ranked: RankedSnapshot,
}

/// Draws the UAV position and all link states, then ranks the sites.
pub fn sample_snapshot<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    config: &SimConfig,
    rng: &mut R,
) -> Result<Snapshot> {
    let h_ut = config.scenario.h_ut_m;
    let uav = sample_uav_position(layout, h_ut, rng)?;
    let links = link_distances(layout, &uav)
        .into_iter()
        .map(|d| sample_link(d, h_ut, &config.channel, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(Snapshot {
        uav,
        ranked: rank_by_mean_power(links, &config.radio),
    })
}

/// Per-B worst SINR of one snapshot, in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrProfile {
    /// `min_db[B-1]` = min over the top B targets of SINR_i(B).
    min_db: Vec<f64>,
    /// `reach_db[B-1]` = max over B' >= B of `min_db[B'-1]`.
    reach_db: Vec<f64>,
}

impl SinrProfile {
    /// Draws activity for every (B, target) pair, B ascending then target
    /// ascending, and records the worst SINR per B.
    pub fn evaluate<R: Rng + ?Sized>(snapshot: &RankedSnapshot, p: f64, q: f64, rng: &mut R) -> Self {
        let t = snapshot.len();
        let mut activity = ActivityDraw::default();
        let mut min_db = Vec::with_capacity(t);
        for b in 1..=t {
            let mut worst = f64::INFINITY;
            for target in 0..b {
                activity.fill(b, t, p, q, rng);
                worst = worst.min(sinr_for_target(target, b, snapshot, &activity));
            }
            min_db.push(linear_to_db(worst));
        }
        let mut reach_db = min_db.clone();
        for k in (0..t.saturating_sub(1)).rev() {
            reach_db[k] = reach_db[k].max(reach_db[k + 1]);
        }
        Self { min_db, reach_db }
    }

    pub fn min_sinr_db(&self) -> &[f64] {
        &self.min_db
    }

    /// Largest B whose B strongest signals all reach `alpha_db`, or 0.
    ///
    /// Every B is checked; the indicator product need not be monotone in B.
    pub fn psi(&self, alpha_db: f64) -> usize {
        self.min_db.iter().rposition(|&m| m >= alpha_db).map_or(0, |k| k + 1)
    }

    /// Whether `Ψ(alpha_db) >= b`.
    pub fn localizable(&self, alpha_db: f64, b: usize) -> bool {
        b == 0 || self.reach_db.get(b - 1).is_some_and(|&r| r >= alpha_db)
    }
}

/// Number of sites that successfully deliver localization signals in this
/// snapshot at threshold `alpha_db`.
pub fn psi<R: Rng + ?Sized>(snapshot: &RankedSnapshot, alpha_db: f64, p: f64, q: f64, rng: &mut R) -> usize {
    SinrProfile::evaluate(snapshot, p, q, rng).psi(alpha_db)
}

/// A binomial proportion with its 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub successes: usize,
    pub trials: usize,
    pub pb: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn wilson(successes: usize, trials: usize) -> Self {
        assert!(trials > 0 && successes <= trials);
        let n = trials as f64;
        let phat = successes as f64 / n;
        let z2 = Z_95 * Z_95;
        let denom = 1.0 + z2 / n;
        let centre = (phat + z2 / (2.0 * n)) / denom;
        let half = Z_95 / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
        Self {
            successes,
            trials,
            pb: phat,
            ci_low: if successes == 0 { 0.0 } else { (centre - half).max(0.0) },
            ci_high: if successes == trials { 1.0 } else { (centre + half).min(1.0) },
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Solution of the processing-gain search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainOutcome {
    Solved { alpha_star_db: f64, gamma_db: f64 },
    /// The target is not crossed anywhere on [`GAIN_SEARCH_RANGE_DB`].
    NoSolution,
}

/// Profiles of every snapshot of one configuration, kept in snapshot order.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    profiles: Vec<SinrProfile>,
    sites: usize,
}

impl SnapshotSet {
    /// Simulates `config.scenario.n_snapshots` snapshots on the configured
    /// hexagonal layout. `workers` fixes the thread count (`None` lets rayon
    /// decide); the result does not depend on it.
    pub fn simulate(config: &SimConfig, workers: Option<usize>) -> Result<Self> {
        config.validate()?;
        let layout = config.layout.build()?;
        Self::simulate_on(&layout, config, workers)
    }

    /// As [`SnapshotSet::simulate`], on an explicit layout.
    pub fn simulate_on(layout: &NetworkLayout, config: &SimConfig, workers: Option<usize>) -> Result<Self> {
        let s = config.scenario;
        let run = || {
            (0..s.n_snapshots as u64)
                .into_par_iter()
                .map(|index| {
                    let mut rng = snapshot_rng(s.seed, index);
                    let snap = sample_snapshot(layout, config, &mut rng)?;
                    Ok(SinrProfile::evaluate(&snap.ranked, s.p, s.q, &mut rng))
                })
                .collect::<Result<Vec<_>>>()
        };
        let profiles = match workers {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::config("workers", e.to_string()))?
                .install(run)?,
            None => run()?,
        };
        Ok(Self {
            profiles,
            sites: layout.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn profiles(&self) -> &[SinrProfile] {
        &self.profiles
    }

    /// Per-snapshot Ψ at `alpha_db`.
    pub fn psi_values(&self, alpha_db: f64) -> Vec<usize> {
        self.profiles.iter().map(|p| p.psi(alpha_db)).collect()
    }

    fn count(&self, alpha_db: f64, b: usize) -> usize {
        self.profiles.iter().filter(|p| p.localizable(alpha_db, b)).count()
    }

    /// `Pr(Ψ >= b)` at threshold `alpha_db`.
    pub fn estimate(&self, alpha_db: f64, b: usize) -> Estimate {
        Estimate::wilson(self.count(alpha_db, b), self.len())
    }

    /// Finds the threshold at which `P_b` crosses `target_pb` by bisection
    /// over [`GAIN_SEARCH_RANGE_DB`]; every evaluation reuses the same
    /// snapshots.
    pub fn alpha_for_target(&self, b: usize, target_pb: f64) -> Option<f64> {
        let n = self.len() as f64;
        let meets = |alpha: f64| self.count(alpha, b) as f64 / n >= target_pb;
        let (mut lo, mut hi) = GAIN_SEARCH_RANGE_DB;
        if !meets(lo) || meets(hi) {
            return None;
        }
        while hi - lo > GAIN_TOLERANCE_DB {
            let mid = 0.5 * (lo + hi);
            if meets(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Processing gain `γ = β − α*` needed to reach `target_pb` for `b` sites.
    pub fn required_gain(&self, beta_db: f64, target_pb: f64, b: usize) -> Result<GainOutcome> {
        check_target(target_pb)?;
        check_b(b, self.sites)?;
        Ok(match self.alpha_for_target(b, target_pb) {
            Some(alpha_star_db) => GainOutcome::Solved {
                alpha_star_db,
                gamma_db: beta_db - alpha_star_db,
            },
            None => GainOutcome::NoSolution,
        })
    }
}

fn check_target(target_pb: f64) -> Result<()> {
    if !(target_pb > 0.0 && target_pb < 1.0) {
        return Err(Error::config(
            "gain.target_pb",
            format!("must lie strictly between 0 and 1, got {target_pb}"),
        ));
    }
    Ok(())
}

pub(crate) fn check_b(b: usize, sites: usize) -> Result<()> {
    if b == 0 || b > sites {
        return Err(Error::config("experiment.b", format!("need 1 <= B <= T = {sites}, got {b}")));
    }
    Ok(())
}

/// One estimated point of a localizability curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub alpha_db: f64,
    pub h_ut_m: f64,
    pub b: usize,
    pub p: f64,
    pub q: f64,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizabilityCurve {
    /// Names of the swept parameters, outermost first.
    pub swept: Vec<String>,
    pub points: Vec<CurvePoint>,
    pub n_snapshots: usize,
    pub seed: u64,
}

/// Estimates `P_B` at the configured threshold for every B in `b_list`.
pub fn estimate_pb(config: &SimConfig, b_list: &[usize]) -> Result<LocalizabilityCurve> {
    if b_list.is_empty() {
        return Err(Error::config("experiment.b", "must be non-empty"));
    }
    let set = SnapshotSet::simulate(config, None)?;
    let s = config.scenario;
    let points = b_list
        .iter()
        .map(|&b| {
            check_b(b, set.sites())?;
            Ok(CurvePoint {
                alpha_db: s.alpha_db,
                h_ut_m: s.h_ut_m,
                b,
                p: s.p,
                q: s.q,
                estimate: set.estimate(s.alpha_db, b),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalizabilityCurve {
        swept: vec!["B".into()],
        points,
        n_snapshots: s.n_snapshots,
        seed: s.seed,
    })
}

/// Simulates `config` and solves for the processing gain that brings `P_b`
/// to `target_pb` at post-processing threshold `beta_db`.
pub fn required_processing_gain(config: &SimConfig, beta_db: f64, target_pb: f64, b: usize) -> Result<GainOutcome> {
    check_target(target_pb)?;
    SnapshotSet::simulate(config, None)?.required_gain(beta_db, target_pb, b)
}
