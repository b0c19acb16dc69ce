//! Experiment files, parameter sweeps and CSV/metadata output.
//!
//! An experiment file is TOML: the `[layout]`, `[channel]`, `[radio]` and
//! `[scenario]` tables give the base configuration (every key optional,
//! defaults are the urban-macro reference values), `[experiment]` names the
//! B list and output, and each `[[sweep]]` table adds one axis. Axes nest in
//! the order they appear, the first outermost.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localizability::{
    check_b, CurvePoint, GainOutcome, LocalizabilityCurve, SimConfig, SnapshotSet, GAIN_SEARCH_RANGE_DB,
    GAIN_TOLERANCE_DB,
};

pub const SIMULATE_COLUMNS: [&str; 9] = [
    "alpha_db",
    "h_ut_m",
    "B",
    "p",
    "q",
    "pb",
    "ci_low",
    "ci_high",
    "n_snapshots",
];

pub const GAIN_COLUMNS: [&str; 9] = [
    "h_ut_m",
    "p",
    "q",
    "B",
    "beta_db",
    "target_pb",
    "alpha_star_db",
    "gamma_db",
    "n_snapshots",
];

const PRESETS: [(&str, &str); 5] = [
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

/// Source text of a built-in experiment file.
pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, src)| *src)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "h_ut")]
    HUt,
    #[serde(rename = "B")]
    B,
    #[serde(rename = "p")]
    P,
    #[serde(rename = "q")]
    Q,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Alpha => "alpha",
            SweepParam::HUt => "h_ut",
            SweepParam::B => "B",
            SweepParam::P => "p",
            SweepParam::Q => "q",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    #[default]
    Simulate,
    Gain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub kind: Kind,
    /// Localization orders reported per row, unless B is swept.
    pub b: Vec<usize>,
    pub output: Option<PathBuf>,
    pub format: Format,
    /// Target `P_B` for the gain solver.
    pub target_pb: Option<f64>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            kind: Kind::Simulate,
            b: vec![4],
            output: None,
            format: Format::Csv,
            target_pb: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentSpec {
    pub base: SimConfig,
    pub experiment: ExperimentSection,
    pub sweep: Vec<Sweep>,
}

/// On-disk layout of an experiment file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SpecFile {
    layout: crate::localizability::LayoutParams,
    channel: crate::channel::ChannelParams,
    radio: crate::sinr::RadioParams,
    scenario: crate::localizability::Scenario,
    experiment: ExperimentSection,
    sweep: Vec<Sweep>,
}

impl ExperimentSpec {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let file: SpecFile = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        let spec = ExperimentSpec {
            base: SimConfig {
                layout: file.layout,
                channel: file.channel,
                radio: file.radio,
                scenario: file.scenario,
            },
            experiment: file.experiment,
            sweep: file.sweep,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn preset(name: &str) -> Result<Self> {
        let src = preset_source(name).ok_or_else(|| {
            Error::config(
                "preset",
                format!("unknown preset {name:?}, expected one of {}", preset_names().collect::<Vec<_>>().join(", ")),
            )
        })?;
        Self::parse(src, &format!("preset {name}"))
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let sites = self.base.layout.build()?.len();
        if !self.sweeps(SweepParam::B) {
            if self.experiment.b.is_empty() {
                return Err(Error::config("experiment.b", "must be non-empty"));
            }
            for &b in &self.experiment.b {
                check_b(b, sites)?;
            }
        }
        if let Some(t) = self.experiment.target_pb {
            check_target_key(t)?;
        }
        let mut seen = Vec::new();
        for sweep in &self.sweep {
            if seen.contains(&sweep.param) {
                return Err(Error::config("sweep.param", format!("{} is swept twice", sweep.param)));
            }
            seen.push(sweep.param);
            if sweep.values.is_empty() {
                return Err(Error::config("sweep.values", "must be non-empty"));
            }
            for &v in &sweep.values {
                if sweep.param == SweepParam::B {
                    if v.fract() != 0.0 || v < 1.0 || v > sites as f64 {
                        return Err(Error::config(
                            "sweep.values",
                            format!("B values must be integers in 1..={sites}, got {v}"),
                        ));
                    }
                } else {
                    let mut c = self.base;
                    apply(&mut c, sweep.param, v);
                    c.validate().map_err(|e| match e {
                        Error::Config { message, .. } => {
                            Error::config("sweep.values", format!("{} value {v}: {message}", sweep.param))
                        }
                        other => other,
                    })?;
                }
            }
        }
        Ok(())
    }

    fn sweeps(&self, param: SweepParam) -> bool {
        self.sweep.iter().any(|s| s.param == param)
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self> {
        if let Some(seed) = o.seed {
            self.base.scenario.seed = seed;
        }
        if let Some(n) = o.snapshots {
            self.base.scenario.n_snapshots = n;
        }
        if let Some(out) = &o.out {
            self.experiment.output = Some(out.clone());
        }
        if let Some(beta) = o.beta_db {
            self.base.scenario.beta_db = beta;
        }
        if let Some(t) = o.target_pb {
            self.experiment.target_pb = Some(t);
        }
        self.validate()?;
        Ok(self)
    }

    /// Every combination of sweep values, outermost axis first.
    fn grid(&self) -> Vec<Vec<(SweepParam, f64)>> {
        let mut combos = vec![Vec::new()];
        for sweep in &self.sweep {
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    sweep.values.iter().map(move |&v| {
                        let mut c = prefix.clone();
                        c.push((sweep.param, v));
                        c
                    })
                })
                .collect();
        }
        combos
    }

    fn resolve(&self, combo: &[(SweepParam, f64)]) -> (SimConfig, Vec<usize>) {
        let mut config = self.base;
        let mut bs = self.experiment.b.clone();
        for &(param, v) in combo {
            if param == SweepParam::B {
                bs = vec![v as usize];
            } else {
                apply(&mut config, param, v);
            }
        }
        (config, bs)
    }
}

fn check_target_key(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::config(
            "experiment.target_pb",
            format!("must lie strictly between 0 and 1, got {t}; P_B = 1 is unreachable with noise-limited SINR"),
        ));
    }
    Ok(())
}

fn apply(config: &mut SimConfig, param: SweepParam, v: f64) {
    let s = &mut config.scenario;
    match param {
        SweepParam::Alpha => s.alpha_db = v,
        SweepParam::HUt => s.h_ut_m = v,
        SweepParam::P => s.p = v,
        SweepParam::Q => s.q = v,
        SweepParam::B => {}
    }
}

/// Command-line overrides applied on top of an experiment file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub snapshots: Option<usize>,
    pub out: Option<PathBuf>,
    pub beta_db: Option<f64>,
    pub target_pb: Option<f64>,
}

/// Snapshot sets keyed by the parameters that change the draws. Threshold
/// and B axes are answered from the same snapshots.
struct SnapshotCache {
    workers: Option<usize>,
    sets: HashMap<[u64; 3], SnapshotSet>,
}

impl SnapshotCache {
    fn new(workers: Option<usize>) -> Self {
        Self {
            workers,
            sets: HashMap::new(),
        }
    }

    fn get(&mut self, config: &SimConfig) -> Result<&SnapshotSet> {
        let s = config.scenario;
        let key = [s.h_ut_m.to_bits(), s.p.to_bits(), s.q.to_bits()];
        if !self.sets.contains_key(&key) {
            let set = SnapshotSet::simulate(config, self.workers)?;
            self.sets.insert(key, set);
        }
        Ok(&self.sets[&key])
    }
}

/// Runs every sweep point and returns one curve point per (point, B).
pub fn simulate(spec: &ExperimentSpec, workers: Option<usize>) -> Result<LocalizabilityCurve> {
    spec.validate()?;
    let mut cache = SnapshotCache::new(workers);
    let mut points = Vec::new();
    for combo in spec.grid() {
        let (config, bs) = spec.resolve(&combo);
        let set = cache.get(&config)?;
        let s = config.scenario;
        for b in bs {
            points.push(CurvePoint {
                alpha_db: s.alpha_db,
                h_ut_m: s.h_ut_m,
                b,
                p: s.p,
                q: s.q,
                estimate: set.estimate(s.alpha_db, b),
            });
        }
    }
    Ok(LocalizabilityCurve {
        swept: spec.sweep.iter().map(|s| s.param.to_string()).collect(),
        points,
        n_snapshots: spec.base.scenario.n_snapshots,
        seed: spec.base.scenario.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainRow {
    pub h_ut_m: f64,
    pub p: f64,
    pub q: f64,
    pub b: usize,
    pub beta_db: f64,
    pub target_pb: f64,
    pub outcome: GainOutcome,
    pub n_snapshots: usize,
}

/// Solves for the processing gain at every sweep point and B.
pub fn solve_gain(spec: &ExperimentSpec, workers: Option<usize>) -> Result<Vec<GainRow>> {
    spec.validate()?;
    if spec.sweeps(SweepParam::Alpha) {
        return Err(Error::config(
            "sweep.param",
            "alpha cannot be swept by the gain solver, it is the unknown",
        ));
    }
    let target_pb = spec
        .experiment
        .target_pb
        .ok_or_else(|| Error::config("experiment.target_pb", "is required for the gain solver (or pass --target)"))?;
    let beta_db = spec.base.scenario.beta_db;
    let mut cache = SnapshotCache::new(workers);
    let mut rows = Vec::new();
    for combo in spec.grid() {
        let (config, bs) = spec.resolve(&combo);
        let set = cache.get(&config)?;
        let s = config.scenario;
        for b in bs {
            rows.push(GainRow {
                h_ut_m: s.h_ut_m,
                p: s.p,
                q: s.q,
                b,
                beta_db,
                target_pb,
                outcome: set.required_gain(beta_db, target_pb, b)?,
                n_snapshots: s.n_snapshots,
            });
        }
    }
    Ok(rows)
}

fn create_output(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn num(v: f64) -> String {
    // Display prints the shortest string that parses back to the same f64.
    v.to_string()
}

pub fn write_curve_csv(path: &Path, curve: &LocalizabilityCurve) -> Result<()> {
    let mut w = create_output(path)?;
    w.write_record(SIMULATE_COLUMNS)?;
    for pt in &curve.points {
        let e = &pt.estimate;
        w.write_record([
            num(pt.alpha_db),
            num(pt.h_ut_m),
            pt.b.to_string(),
            num(pt.p),
            num(pt.q),
            num(e.pb),
            num(e.ci_low),
            num(e.ci_high),
            e.trials.to_string(),
        ])?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Unsolved rows leave `alpha_star_db` and `gamma_db` empty.
pub fn write_gain_csv(path: &Path, rows: &[GainRow]) -> Result<()> {
    let mut w = create_output(path)?;
    w.write_record(GAIN_COLUMNS)?;
    for r in rows {
        let (alpha, gamma) = match r.outcome {
            GainOutcome::Solved { alpha_star_db, gamma_db } => (num(alpha_star_db), num(gamma_db)),
            GainOutcome::NoSolution => (String::new(), String::new()),
        };
        w.write_record([
            num(r.h_ut_m),
            num(r.p),
            num(r.q),
            r.b.to_string(),
            num(r.beta_db),
            num(r.target_pb),
            alpha,
            gamma,
            r.n_snapshots.to_string(),
        ])?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Serialize)]
struct GainMeta {
    beta_db: f64,
    target_pb: f64,
    search_range_db: [f64; 2],
    tolerance_db: f64,
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    kind: Kind,
    seed: u64,
    n_snapshots: usize,
    rng: &'static str,
    common_random_numbers: &'static str,
    b: &'a [usize],
    #[serde(skip_serializing_if = "Option::is_none")]
    gain: Option<GainMeta>,
    config: &'a SimConfig,
    sweep: &'a [Sweep],
}

/// Path of the metadata sidecar for `output`: the same path with `.meta` appended.
pub fn meta_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn write_meta(output: &Path, spec: &ExperimentSpec) -> Result<()> {
    let s = spec.base.scenario;
    let gain = (spec.experiment.kind == Kind::Gain || spec.experiment.target_pb.is_some()).then(|| GainMeta {
        beta_db: s.beta_db,
        target_pb: spec.experiment.target_pb.unwrap_or(f64::NAN),
        search_range_db: [GAIN_SEARCH_RANGE_DB.0, GAIN_SEARCH_RANGE_DB.1],
        tolerance_db: GAIN_TOLERANCE_DB,
    });
    let meta = Meta {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        kind: spec.experiment.kind,
        seed: s.seed,
        n_snapshots: s.n_snapshots,
        rng: "ChaCha8, seeded from the master seed, one stream per snapshot index",
        common_random_numbers: "yes: threshold and B values share snapshots; h_ut, p and q values reuse the same per-snapshot streams",
        b: &spec.experiment.b,
        gain,
        config: &spec.base,
        sweep: &spec.sweep,
    };
    let text = toml::to_string(&meta).map_err(|e| Error::Parse {
        path: meta_path(output).display().to_string(),
        message: e.to_string(),
    })?;
    let path = meta_path(output);
    std::fs::write(&path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn output_path(spec: &ExperimentSpec) -> Result<PathBuf> {
    spec.experiment
        .output
        .clone()
        .ok_or_else(|| Error::config("experiment.output", "must be set (or pass --out)"))
}

/// Runs a simulate experiment and writes the CSV and its sidecar.
pub fn run_experiment(spec: &ExperimentSpec, workers: Option<usize>) -> Result<(PathBuf, LocalizabilityCurve)> {
    let out = output_path(spec)?;
    let curve = simulate(spec, workers)?;
    write_curve_csv(&out, &curve)?;
    write_meta(&out, spec)?;
    Ok((out, curve))
}

/// Runs the gain solver over the sweep and writes the CSV and its sidecar.
pub fn run_gain_solver(spec: &ExperimentSpec, workers: Option<usize>) -> Result<(PathBuf, Vec<GainRow>)> {
    let out = output_path(spec)?;
    let rows = solve_gain(spec, workers)?;
    write_gain_csv(&out, &rows)?;
    write_meta(&out, spec)?;
    Ok((out, rows))
}
