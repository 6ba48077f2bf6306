//! Grid sweeps over (n_g, f) for any subset of the coupling models, model comparison
//! tables and CSV/JSON emission.

use crate::circuit::{self, CircuitError, CouplingResult, ModelTag};
use crate::fock::{self, FockConfig, FockError};
use crate::params::{
    island_capacitance, params_from_energies, validate, BiasPoint, CircuitParams, ParamError,
    ParamsInput, Rest, ValidatedParams,
};
use crate::perturbative::{self, Expansion, PerturbativeError};
use crate::spectrum::SpectrumError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const CSV_HEADER: &str = "n_g,f,model,omega_c_hz,g_rp_hz,g_0_hz,g_ck_hz,enhancement,flags";
/// The Fock oracle is refused on grids larger than this per axis.
pub const ORACLE_AXIS_LIMIT: usize = 64;
/// A ratio is excluded when either side is below this fraction of the largest value of
/// that model in the table (g_rp at the degeneracy point is 0/0).
pub const RATIO_EXCLUSION: f64 = 1e-4;
pub const JOBS_ENV: &str = "CPB_OPTOMECH_JOBS";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("the Fock oracle is limited to {ORACLE_AXIS_LIMIT}×{ORACLE_AXIS_LIMIT} grids, got {n_g}×{f}")]
    OracleBudgetExceeded { n_g: usize, f: usize },
    #[error("i/o on {path}: {message}")]
    Io { path: String, message: String },
}

impl From<ParamError> for SweepError {
    fn from(e: ParamError) -> Self {
        SweepError::ConfigInvalid(e.to_string())
    }
}

/// `[lo, hi, count]`, inclusive, evenly spaced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis(pub f64, pub f64, pub usize);

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        let Axis(lo, hi, n) = *self;
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    fn check(&self, name: &str) -> Result<(), SweepError> {
        if self.2 < 2 {
            return Err(SweepError::ConfigInvalid(format!("{name}: count must be ≥ 2")));
        }
        if !self.0.is_finite() || !self.1.is_finite() {
            return Err(SweepError::ConfigInvalid(format!("{name}: range must be finite")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    pub format: Format,
}

/// Allowed |ratio − 1| per coupling in comparison reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceBands {
    pub g_rp: f64,
    pub g_ck: f64,
}

impl Default for ToleranceBands {
    fn default() -> Self {
        ToleranceBands { g_rp: 0.2, g_ck: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub params: ParamsInput,
    pub n_g_range: Axis,
    pub f_range: Axis,
    pub models: Vec<ModelTag>,
    /// E_J/E_C values; E_J, d, the gate fraction and everything else stay fixed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ej_ec_ratios: Option<Vec<f64>>,
    #[serde(default)]
    pub fock: FockConfig,
    /// (numerator, denominator) pairs for `compare`; by default every requested model
    /// against the first one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparisons: Option<Vec<(ModelTag, ModelTag)>>,
    #[serde(default)]
    pub tolerance: ToleranceBands,
    /// Largest tolerated fraction of flagged rows before the CLI exits with status 2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag_gate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, SweepError> {
        let cfg: SweepConfig =
            serde_json::from_str(text).map_err(|e| SweepError::ConfigInvalid(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SweepError> {
        let text = std::fs::read_to_string(path).map_err(|e| SweepError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn check(&self) -> Result<(), SweepError> {
        if self.models.is_empty() {
            return Err(SweepError::ConfigInvalid("no models requested".into()));
        }
        for (i, m) in self.models.iter().enumerate() {
            if self.models[..i].contains(m) {
                return Err(SweepError::ConfigInvalid(format!("model `{m}` listed twice")));
            }
        }
        self.n_g_range.check("n_g_range")?;
        self.f_range.check("f_range")?;
        if self.models.contains(&ModelTag::FockOracle)
            && (self.n_g_range.2 > ORACLE_AXIS_LIMIT || self.f_range.2 > ORACLE_AXIS_LIMIT)
        {
            return Err(SweepError::OracleBudgetExceeded {
                n_g: self.n_g_range.2,
                f: self.f_range.2,
            });
        }
        self.fock
            .validate()
            .map_err(|e| SweepError::ConfigInvalid(format!("fock: {e}")))?;
        if let Some(r) = &self.ej_ec_ratios {
            if r.is_empty() || r.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(SweepError::ConfigInvalid(
                    "ej_ec_ratios must be positive and finite".into(),
                ));
            }
        }
        if let Some(g) = self.flag_gate {
            if !(0.0..=1.0).contains(&g) {
                return Err(SweepError::ConfigInvalid("flag_gate must lie in [0, 1]".into()));
            }
        }
        if let Some(pairs) = &self.comparisons {
            for (a, b) in pairs {
                if !self.models.contains(a) || !self.models.contains(b) {
                    return Err(SweepError::ConfigInvalid(format!(
                        "comparison {a}/{b} uses a model that is not swept"
                    )));
                }
            }
        }
        for (name, x) in [("g_rp", self.tolerance.g_rp), ("g_ck", self.tolerance.g_ck)] {
            if !(x >= 0.0) {
                return Err(SweepError::ConfigInvalid(format!("tolerance.{name} must be ≥ 0")));
            }
        }
        self.base_params()?;
        Ok(())
    }

    pub fn base_params(&self) -> Result<ValidatedParams, SweepError> {
        Ok(validate(&self.params.resolve()?)?)
    }

    /// One parameter set per table: the base set, or one per E_J/E_C ratio.
    pub fn parameter_sets(&self) -> Result<Vec<(Option<f64>, ValidatedParams)>, SweepError> {
        let base = self.base_params()?;
        match &self.ej_ec_ratios {
            None => Ok(vec![(None, base)]),
            Some(ratios) => ratios
                .iter()
                .map(|&r| Ok((Some(r), validate(&at_ratio(&base, r)?)?)))
                .collect(),
        }
    }

    /// Hex SHA-256 of the canonical JSON (keys sorted) of the config.
    pub fn fingerprint(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }

    fn comparison_pairs(&self) -> Vec<(ModelTag, ModelTag)> {
        self.comparisons.clone().unwrap_or_else(|| {
            let first = self.models[0];
            self.models[1..].iter().map(|&m| (m, first)).collect()
        })
    }
}

/// Same device with E_C = E_J/ratio: the gate keeps its share of the island
/// capacitance, every other element is unchanged.
pub fn at_ratio(base: &ValidatedParams, ratio: f64) -> Result<CircuitParams, ParamError> {
    let e_j = base.e_j;
    let e_c = e_j / ratio;
    let share = base.raw.c_g10 / base.c_sigma1;
    let p = &base.raw;
    let rest = Rest {
        c_cavity: p.c_cavity,
        l_cavity: p.l_cavity,
        c_g2: p.c_g2,
        v_gate: p.v_gate,
        gap_d0: p.gap_d0,
        x_zp: p.x_zp,
        omega_m: p.omega_m,
        band_index: p.band_index,
    };
    let d = if e_j > 0.0 { (p.e_j1 - p.e_j2) / e_j } else { 0.0 };
    params_from_energies(e_c, e_j, d, share * island_capacitance(e_c), &rest)
}

/// Row-level numerical conditions. They never abort a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flag {
    NonAnalyticPoint,
    SeriesDivergence,
    LabelingAmbiguous,
    DegenerateBand,
    DegeneratePoint,
    Unconverged,
    TruncationFailure,
}

impl Flag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Flag::NonAnalyticPoint => "NonAnalyticPoint",
            Flag::SeriesDivergence => "SeriesDivergence",
            Flag::LabelingAmbiguous => "LabelingAmbiguous",
            Flag::DegenerateBand => "DegenerateBand",
            Flag::DegeneratePoint => "DegeneratePoint",
            Flag::Unconverged => "Unconverged",
            Flag::TruncationFailure => "TruncationFailure",
        }
    }
}

fn spectrum_flag(e: &SpectrumError) -> Flag {
    match e {
        SpectrumError::NonAnalytic { .. } => Flag::NonAnalyticPoint,
        SpectrumError::DegenerateBand { .. } => Flag::DegenerateBand,
        SpectrumError::TruncationTooSmall(_)
        | SpectrumError::ConvergenceFailure(_)
        | SpectrumError::BandOutOfRange(_) => Flag::TruncationFailure,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n_g: f64,
    pub f: f64,
    pub model: ModelTag,
    pub omega_c: f64,
    pub g_rp: f64,
    pub g_0: f64,
    pub g_ck: f64,
    pub enhancement: f64,
    pub flags: Vec<Flag>,
}

impl Row {
    fn from_result(bias: &BiasPoint, r: CouplingResult) -> Self {
        Row {
            n_g: bias.n_g0,
            f: bias.f,
            model: r.model,
            omega_c: r.omega_c,
            g_rp: r.g_rp,
            g_0: r.g_0,
            g_ck: r.g_ck,
            enhancement: r.enhancement,
            flags: Vec::new(),
        }
    }

    fn flagged(v: &ValidatedParams, bias: &BiasPoint, model: ModelTag, omega_c: f64, flag: Flag) -> Self {
        Row {
            n_g: bias.n_g0,
            f: bias.f,
            model,
            omega_c,
            g_rp: f64::NAN,
            g_0: circuit::direct_coupling(v),
            g_ck: f64::NAN,
            enhancement: f64::NAN,
            flags: vec![flag],
        }
    }

    pub fn is_flagged(&self) -> bool {
        !self.flags.is_empty()
    }
}

/// Every requested model at one bias point, in config order. Numerical trouble becomes
/// a row flag.
pub fn eval_point(
    v: &ValidatedParams,
    bias: &BiasPoint,
    models: &[ModelTag],
    fock_cfg: &FockConfig,
) -> Vec<Row> {
    models
        .iter()
        .map(|&m| eval_model(v, bias, m, fock_cfg))
        .collect()
}

fn eval_model(v: &ValidatedParams, bias: &BiasPoint, model: ModelTag, fock_cfg: &FockConfig) -> Row {
    let pert = |e: Expansion| match perturbative::evaluate(v, bias, e) {
        Ok(r) => Row::from_result(bias, r),
        Err(PerturbativeError::DegeneratePoint { .. }) => {
            Row::flagged(v, bias, model, v.omega_c0, Flag::DegeneratePoint)
        }
        Err(PerturbativeError::UnsupportedOrder(_)) => unreachable!("fixed orders"),
    };
    match model {
        ModelTag::Circuit => match circuit::evaluate(v, bias) {
            Ok(r) => Row::from_result(bias, r),
            Err(e) => {
                let flag = match &e {
                    CircuitError::Spectrum(s) => spectrum_flag(s),
                    CircuitError::SeriesDivergence { .. } => Flag::SeriesDivergence,
                    CircuitError::NotInPureCkRegime { .. } => unreachable!("not raised by evaluate"),
                };
                Row::flagged(v, bias, model, f64::NAN, flag)
            }
        },
        ModelTag::Perturbative2 => pert(Expansion::SECOND),
        ModelTag::Perturbative3 => pert(Expansion::THIRD),
        ModelTag::FockOracle => match fock::evaluate(v, bias, fock_cfg) {
            Ok(r) => Row::from_result(bias, r),
            Err(e) => {
                let flag = match e {
                    FockError::LabelingAmbiguous { .. } => Flag::LabelingAmbiguous,
                    FockError::DegenerateQubit => Flag::DegeneratePoint,
                    FockError::Unconverged { .. } => Flag::Unconverged,
                    FockError::InvalidCutoff(_) | FockError::DimensionCap(_) => {
                        unreachable!("cutoffs are checked with the config")
                    }
                };
                Row::flagged(v, bias, model, v.omega_c0, flag)
            }
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    /// E_J/E_C of this table in ratio mode.
    pub ej_ec_ratio: Option<f64>,
    pub rows: Vec<Row>,
}

impl SweepTable {
    pub fn flagged_fraction(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.is_flagged()).count() as f64 / self.rows.len() as f64
    }

    pub fn max_abs_enhancement(&self, model: ModelTag) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.model == model && r.enhancement.is_finite())
            .fold(0.0, |m, r| m.max(r.enhancement.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub fingerprint: String,
    pub config: SweepConfig,
    pub tables: Vec<SweepTable>,
}

/// Worker count: the environment override wins over the argument; 0 means all cores.
pub fn resolve_jobs(requested: usize) -> usize {
    std::env::var(JOBS_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(requested)
}

fn grid(cfg: &SweepConfig) -> Vec<BiasPoint> {
    let n_gs = cfg.n_g_range.values();
    cfg.f_range
        .values()
        .into_iter()
        .flat_map(|f| n_gs.iter().map(move |&n| BiasPoint::new(n, f)))
        .collect()
}

/// Full grid for every parameter set, rows ordered f-major, then n_g, then model.
pub fn run_sweep(cfg: &SweepConfig, jobs: usize) -> Result<SweepOutput, SweepError> {
    cfg.check()?;
    let points = grid(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SweepError::ConfigInvalid(format!("thread pool: {e}")))?;
    let mut tables = Vec::new();
    for (ratio, v) in cfg.parameter_sets()? {
        let per_point: Vec<Vec<Row>> = pool.install(|| {
            points
                .par_iter()
                .map(|b| eval_point(&v, b, &cfg.models, &cfg.fock))
                .collect()
        });
        tables.push(SweepTable {
            ej_ec_ratio: ratio,
            rows: per_point.into_iter().flatten().collect(),
        });
    }
    Ok(SweepOutput {
        fingerprint: cfg.fingerprint(),
        config: cfg.clone(),
        tables,
    })
}

/// Shortest round-trip decimal; exponent form outside [1e-4, 1e15).
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || a.is_infinite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn hz(x: f64) -> f64 {
    x / (2.0 * PI)
}

pub fn table_csv(t: &SweepTable) -> String {
    let mut out = String::with_capacity(64 * (t.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &t.rows {
        let flags: Vec<&str> = r.flags.iter().map(Flag::as_str).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            format_float(r.n_g),
            format_float(r.f),
            r.model,
            format_float(hz(r.omega_c)),
            format_float(hz(r.g_rp)),
            format_float(hz(r.g_0)),
            format_float(hz(r.g_ck)),
            format_float(r.enhancement),
            flags.join(";")
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct JsonRow {
    n_g: f64,
    f: f64,
    model: ModelTag,
    omega_c: f64,
    g_rp: f64,
    g_0: f64,
    g_ck: f64,
    omega_c_hz: f64,
    g_rp_hz: f64,
    g_0_hz: f64,
    g_ck_hz: f64,
    enhancement: f64,
    flags: Vec<Flag>,
}

pub fn output_json(o: &SweepOutput) -> String {
    let tables: Vec<serde_json::Value> = o
        .tables
        .iter()
        .map(|t| {
            let rows: Vec<JsonRow> = t
                .rows
                .iter()
                .map(|r| JsonRow {
                    n_g: r.n_g,
                    f: r.f,
                    model: r.model,
                    omega_c: r.omega_c,
                    g_rp: r.g_rp,
                    g_0: r.g_0,
                    g_ck: r.g_ck,
                    omega_c_hz: hz(r.omega_c),
                    g_rp_hz: hz(r.g_rp),
                    g_0_hz: hz(r.g_0),
                    g_ck_hz: hz(r.g_ck),
                    enhancement: r.enhancement,
                    flags: r.flags.clone(),
                })
                .collect();
            serde_json::json!({ "ej_ec_ratio": t.ej_ec_ratio, "rows": rows })
        })
        .collect();
    let doc = serde_json::json!({
        "fingerprint": o.fingerprint,
        "config": o.config,
        "tables": tables,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json");
    s.push('\n');
    s
}

/// File name for one table: the given path, or `<stem>_ejec<ratio>.<ext>` in ratio mode.
pub fn table_path(base: &Path, ratio: Option<f64>) -> PathBuf {
    match ratio {
        None => base.to_path_buf(),
        Some(r) => {
            let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
            let name = match base.extension().and_then(|s| s.to_str()) {
                Some(ext) => format!("{stem}_ejec{}.{ext}", format_float(r)),
                None => format!("{stem}_ejec{}", format_float(r)),
            };
            base.with_file_name(name)
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), SweepError> {
    std::fs::write(path, text).map_err(|e| SweepError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Writes CSV (one file per table) or a single JSON document. Returns the paths written.
pub fn emit(o: &SweepOutput, path: &Path, format: Format) -> Result<Vec<PathBuf>, SweepError> {
    match format {
        Format::Json => {
            write_file(path, &output_json(o))?;
            Ok(vec![path.to_path_buf()])
        }
        Format::Csv => o
            .tables
            .iter()
            .map(|t| {
                let p = table_path(path, t.ej_ec_ratio);
                write_file(&p, &table_csv(t))?;
                Ok(p)
            })
            .collect(),
    }
}

/// One point of a ratio table; `None` marks an excluded ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub ej_ec_ratio: Option<f64>,
    pub n_g: f64,
    pub f: f64,
    pub numerator: ModelTag,
    pub denominator: ModelTag,
    pub g_rp_ratio: Option<f64>,
    pub g_ck_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    /// Largest |ratio − 1|.
    pub worst_deviation: f64,
}

fn quantiles(mut xs: Vec<f64>) -> Option<Quantiles> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let median = if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    };
    let worst = xs.iter().fold(0.0f64, |m, x| m.max((x - 1.0).abs()));
    Some(Quantiles {
        count: n,
        min: xs[0],
        median,
        max: xs[n - 1],
        worst_deviation: worst,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub ej_ec_ratio: Option<f64>,
    pub numerator: ModelTag,
    pub denominator: ModelTag,
    pub g_rp: Option<Quantiles>,
    pub g_ck: Option<Quantiles>,
    pub excluded: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub fingerprint: String,
    pub tolerance: ToleranceBands,
    pub rows: Vec<RatioRow>,
    pub summaries: Vec<PairSummary>,
    pub pass: bool,
}

fn ratio(num: f64, den: f64, (num_floor, den_floor): (f64, f64)) -> Option<f64> {
    let usable = num.is_finite() && den.is_finite() && den != 0.0;
    (usable && num.abs() >= num_floor && den.abs() >= den_floor).then(|| num / den)
}

/// Ratio tables between model pairs plus a pass/fail against the tolerance bands.
pub fn compare_models(cfg: &SweepConfig, jobs: usize) -> Result<ComparisonReport, SweepError> {
    let pairs = cfg.comparison_pairs();
    if pairs.is_empty() {
        return Err(SweepError::ConfigInvalid(
            "compare needs at least two models or an explicit comparison".into(),
        ));
    }
    let out = run_sweep(cfg, jobs)?;
    let n_models = cfg.models.len();
    let idx = |m: ModelTag| cfg.models.iter().position(|&x| x == m).expect("checked");
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for t in &out.tables {
        for &(num, den) in &pairs {
            let dens: Vec<&Row> = t.rows.iter().skip(idx(den)).step_by(n_models).collect();
            let nums: Vec<&Row> = t.rows.iter().skip(idx(num)).step_by(n_models).collect();
            let floor = |rows: &[&Row], get: fn(&Row) -> f64| {
                rows.iter()
                    .map(|r| get(r).abs())
                    .filter(|x| x.is_finite())
                    .fold(0.0f64, f64::max)
                    * RATIO_EXCLUSION
            };
            let rp_floor = (floor(&nums, |r| r.g_rp), floor(&dens, |r| r.g_rp));
            let ck_floor = (floor(&nums, |r| r.g_ck), floor(&dens, |r| r.g_ck));
            let mut excluded = 0;
            let (mut rp, mut ck) = (Vec::new(), Vec::new());
            for (a, b) in nums.iter().zip(&dens) {
                let g_rp_ratio = ratio(a.g_rp, b.g_rp, rp_floor);
                let g_ck_ratio = ratio(a.g_ck, b.g_ck, ck_floor);
                excluded += g_rp_ratio.is_none() as usize + g_ck_ratio.is_none() as usize;
                rp.extend(g_rp_ratio);
                ck.extend(g_ck_ratio);
                rows.push(RatioRow {
                    ej_ec_ratio: t.ej_ec_ratio,
                    n_g: a.n_g,
                    f: a.f,
                    numerator: num,
                    denominator: den,
                    g_rp_ratio,
                    g_ck_ratio,
                });
            }
            let g_rp = quantiles(rp);
            let g_ck = quantiles(ck);
            let within = |q: &Option<Quantiles>, tol: f64| q.map_or(true, |q| q.worst_deviation <= tol);
            summaries.push(PairSummary {
                ej_ec_ratio: t.ej_ec_ratio,
                numerator: num,
                denominator: den,
                pass: within(&g_rp, cfg.tolerance.g_rp) && within(&g_ck, cfg.tolerance.g_ck),
                g_rp,
                g_ck,
                excluded,
            });
        }
    }
    Ok(ComparisonReport {
        fingerprint: out.fingerprint,
        tolerance: cfg.tolerance,
        pass: summaries.iter().all(|s| s.pass),
        rows,
        summaries,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "excluded".into(), format_float)
}

pub fn report_csv(r: &ComparisonReport) -> String {
    let mut out = String::from("ej_ec_ratio,n_g,f,numerator,denominator,g_rp_ratio,g_ck_ratio\n");
    for row in &r.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.ej_ec_ratio.map_or_else(String::new, format_float),
            format_float(row.n_g),
            format_float(row.f),
            row.numerator,
            row.denominator,
            opt(row.g_rp_ratio),
            opt(row.g_ck_ratio)
        );
    }
    out
}

pub fn report_json(r: &ComparisonReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("json");
    s.push('\n');
    s
}

/// Plain-text summary lines for the terminal.
pub fn report_summary(r: &ComparisonReport) -> String {
    let mut out = String::new();
    for s in &r.summaries {
        let q = |q: &Option<Quantiles>| {
            q.map_or_else(
                || "none".to_string(),
                |q| format!("n={} median={:.4} worst|r-1|={:.4}", q.count, q.median, q.worst_deviation),
            )
        };
        let _ = writeln!(
            out,
            "{} {}/{}: g_rp {} | g_ck {} | excluded {} | {}",
            s.ej_ec_ratio.map_or_else(|| "-".into(), |x| format!("EJ/EC={}", format_float(x))),
            s.numerator,
            s.denominator,
            q(&s.g_rp),
            q(&s.g_ck),
            s.excluded,
            if s.pass { "PASS" } else { "FAIL" }
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn energy_form(e_c_ghz: f64, e_j_ghz: f64) -> ParamsInput {
        ParamsInput {
            e_c_ghz: Some(e_c_ghz),
            e_j_ghz: Some(e_j_ghz),
            ..ParamsInput::default()
        }
    }

    fn small(models: &[ModelTag]) -> SweepConfig {
        SweepConfig {
            params: energy_form(30.0, 7.5),
            n_g_range: Axis(0.0, 1.0, 11),
            f_range: Axis(0.0, 0.5, 3),
            models: models.to_vec(),
            ej_ec_ratios: None,
            fock: FockConfig::default(),
            comparisons: None,
            tolerance: ToleranceBands::default(),
            flag_gate: None,
            output: None,
        }
    }

    #[test]
    fn axis_hits_endpoints_and_midpoint() {
        let v = Axis(0.0, 1.0, 101).values();
        assert_eq!(v[0], 0.0);
        assert_eq!(v[50], 0.5);
        assert_eq!(v[100], 1.0);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(small(&[]).check(), Err(SweepError::ConfigInvalid(_))));
        let mut c = small(&[ModelTag::Circuit]);
        c.n_g_range = Axis(0.0, 1.0, 1);
        assert!(c.check().is_err());
        let mut c = small(&[ModelTag::FockOracle]);
        c.n_g_range = Axis(0.0, 1.0, 65);
        assert!(matches!(c.check(), Err(SweepError::OracleBudgetExceeded { .. })));
        let c = small(&[ModelTag::Circuit, ModelTag::Circuit]);
        assert!(c.check().is_err());
        assert!(SweepConfig::from_json(r#"{"params": {}, "bogus": 1}"#).is_err());
    }

    #[test]
    fn row_order_and_count() {
        let cfg = small(&[ModelTag::Circuit, ModelTag::Perturbative3]);
        let out = run_sweep(&cfg, 2).unwrap();
        let t = &out.tables[0];
        assert_eq!(t.rows.len(), 11 * 3 * 2);
        assert_eq!((t.rows[0].f, t.rows[0].n_g, t.rows[0].model), (0.0, 0.0, ModelTag::Circuit));
        assert_eq!(t.rows[1].model, ModelTag::Perturbative3);
        assert_eq!(t.rows[2].n_g, 0.1);
        assert_eq!(t.rows[22].f, 0.25);
    }

    #[test]
    fn flags_instead_of_aborts() {
        let cfg = small(&[ModelTag::Circuit, ModelTag::Perturbative3]);
        let t = &run_sweep(&cfg, 1).unwrap().tables[0];
        // (0.5, 0.5) with symmetric junctions is an exact crossing
        let at = |model| {
            t.rows
                .iter()
                .find(|r| r.n_g == 0.5 && r.f == 0.5 && r.model == model)
                .unwrap()
        };
        assert_eq!(at(ModelTag::Circuit).flags, vec![Flag::NonAnalyticPoint]);
        assert!(at(ModelTag::Circuit).g_rp.is_nan());
        assert_eq!(at(ModelTag::Perturbative3).flags, vec![Flag::DegeneratePoint]);
        let csv = table_csv(t);
        assert!(csv.contains(",NonAnalyticPoint\n"));
        assert!(csv.lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn repeated_points_are_bit_identical() {
        let v = small(&[ModelTag::Circuit]).base_params().unwrap();
        let b = BiasPoint::new(0.37, 0.11);
        let models = [ModelTag::Circuit, ModelTag::Perturbative2, ModelTag::Perturbative3];
        let a = eval_point(&v, &b, &models, &FockConfig::default());
        let c = eval_point(&v, &b, &models, &FockConfig::default());
        assert_eq!(format!("{a:?}"), format!("{c:?}"));
    }

    #[test]
    fn parallel_equals_sequential() {
        let cfg = small(&[ModelTag::Circuit, ModelTag::Perturbative2]);
        let a = table_csv(&run_sweep(&cfg, 1).unwrap().tables[0]);
        let b = table_csv(&run_sweep(&cfg, 4).unwrap().tables[0]);
        assert_eq!(a, b);
    }

    #[test]
    fn fingerprint_tracks_every_field() {
        let base = small(&[ModelTag::Circuit]);
        let fp = base.fingerprint();
        assert_eq!(fp, base.clone().fingerprint());
        assert_eq!(fp.len(), 64);
        let mut c = base.clone();
        c.n_g_range.2 = 12;
        assert_ne!(c.fingerprint(), fp);
        let mut c = base.clone();
        c.fock.n_mech = 9;
        assert_ne!(c.fingerprint(), fp);
        let mut c = base.clone();
        c.params.v_gate = Some(9.0);
        assert_ne!(c.fingerprint(), fp);
        let mut c = base;
        c.tolerance.g_ck = 0.3;
        assert_ne!(c.fingerprint(), fp);
    }

    #[test]
    fn json_config_round_trips() {
        let cfg = small(&[ModelTag::Circuit]);
        let out = run_sweep(&cfg, 1).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&output_json(&out)).unwrap();
        let back = SweepConfig::from_json(&doc["config"].to_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.fingerprint(), doc["fingerprint"].as_str().unwrap());
    }

    #[test]
    fn self_comparison_is_exactly_one() {
        let mut cfg = small(&[ModelTag::Circuit]);
        cfg.comparisons = Some(vec![(ModelTag::Circuit, ModelTag::Circuit)]);
        let r = compare_models(&cfg, 1).unwrap();
        for row in &r.rows {
            for x in [row.g_rp_ratio, row.g_ck_ratio].into_iter().flatten() {
                assert_eq!(x, 1.0);
            }
        }
        assert!(r.pass);
    }

    #[test]
    fn degeneracy_ratio_is_excluded() {
        let mut cfg = small(&[ModelTag::Circuit, ModelTag::Perturbative3]);
        cfg.f_range = Axis(0.0, 0.2, 2);
        let r = compare_models(&cfg, 1).unwrap();
        let half = r.rows.iter().find(|x| x.n_g == 0.5 && x.f == 0.0).unwrap();
        assert_eq!(half.g_rp_ratio, None);
        assert!(half.g_ck_ratio.is_some());
    }

    #[test]
    fn ratio_mode_keeps_ej_and_geometry() {
        let mut cfg = small(&[ModelTag::Circuit]);
        cfg.params = energy_form(20.0, 5.0);
        cfg.ej_ec_ratios = Some(vec![0.25, 0.1, 0.02]);
        let sets = cfg.parameter_sets().unwrap();
        assert_eq!(sets.len(), 3);
        for (r, v) in &sets {
            assert!((v.e_j / v.e_c - r.unwrap()).abs() < 1e-12);
            assert!((v.raw.c_g10 / v.c_sigma1 - 0.99).abs() < 1e-12);
            assert_eq!(v.raw.x_zp, sets[0].1.raw.x_zp);
            assert_eq!(v.raw.c_g2, sets[0].1.raw.c_g2);
        }
        assert_eq!(
            table_path(Path::new("out/s.csv"), Some(0.02)),
            PathBuf::from("out/s_ejec0.02.csv")
        );
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.5, 1e-20, 6.283185307179586e9, -3.25e17, 0.0, 1234.5678] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(f64::NAN), "NaN");
        assert_eq!(format_float(0.5), "0.5");
    }
}
