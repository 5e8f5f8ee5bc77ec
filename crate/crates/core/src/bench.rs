//! Seeded experiment runner: sweeps over sparsity and noise level, one CSV
//! row per trial plus a JSON summary per sweep point.

use crate::arith::mix_seed;
use crate::error::{invalid, Error, Result};
use crate::index_sets::{read_set, FrequencySet};
use crate::lattice::{read_lattice_file, BandwidthMethod, CbcOptions, CbcSearch, Rank1Lattice};
use crate::multisft::{approximation_error, phase_encode, two_dim_dft, BandwidthMode, RecoveryConfig};
use crate::sampling::{Sampler, Signal};
use crate::signals::{random_sparse_poly, BSplineFunction, BSplineTerm, FourierTruth, TrigPolynomial};
use crate::usft::{SftRequest, SftVariant};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

pub const CSV_HEADER: &str =
    "algorithm,set_kind,d,N,alpha,s,snr_db,random_scale,trial,seed,success,rel_l2_coeff,rel_L2_func,samples,wall_time_ms";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Phase,
    Twodim,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Phase => "phase",
            Algorithm::Twodim => "twodim",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase" => Ok(Algorithm::Phase),
            "twodim" => Ok(Algorithm::Twodim),
            _ => Err(Error::Parse(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// Textual description of a frequency set:
/// `hc:d=3,N=9`, `whc:d=10,N=33,alpha=1.7`, `cuboid:5,7,9` or `file:<path>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SetSpec {
    HyperbolicCross { d: usize, n: u64 },
    Weighted { d: usize, n: u64, alpha: f64 },
    Cuboid(Vec<u64>),
    File(PathBuf),
}

fn key_values(body: &str) -> Result<Vec<(&str, &str)>> {
    body.split(',')
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {kv:?}")))
        })
        .collect()
}

fn lookup<V: FromStr>(pairs: &[(&str, &str)], key: &str) -> Result<V> {
    let raw = pairs
        .iter()
        .find(|(k, _)| *k == key)
        .map(|p| p.1)
        .ok_or_else(|| Error::Parse(format!("missing {key}")))?;
    raw.parse().map_err(|_| Error::Parse(format!("bad value for {key}: {raw:?}")))
}

impl FromStr for SetSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s.split_once(':').ok_or_else(|| Error::Parse(format!("set spec {s:?} lacks a kind")))?;
        match kind {
            "hc" => {
                let kv = key_values(body)?;
                Ok(SetSpec::HyperbolicCross { d: lookup(&kv, "d")?, n: lookup(&kv, "N")? })
            }
            "whc" => {
                let kv = key_values(body)?;
                Ok(SetSpec::Weighted { d: lookup(&kv, "d")?, n: lookup(&kv, "N")?, alpha: lookup(&kv, "alpha")? })
            }
            "cuboid" => body
                .split(',')
                .map(|t| t.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad cuboid side {t:?}"))))
                .collect::<Result<Vec<_>>>()
                .map(SetSpec::Cuboid),
            "file" => Ok(SetSpec::File(PathBuf::from(body))),
            _ => Err(Error::Parse(format!("unknown set kind {kind:?}"))),
        }
    }
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSpec::HyperbolicCross { d, n } => write!(f, "hc:d={d},N={n}"),
            SetSpec::Weighted { d, n, alpha } => write!(f, "whc:d={d},N={n},alpha={alpha}"),
            SetSpec::Cuboid(sides) => {
                let s: Vec<String> = sides.iter().map(|x| x.to_string()).collect();
                write!(f, "cuboid:{}", s.join(","))
            }
            SetSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl TryFrom<String> for SetSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SetSpec> for String {
    fn from(s: SetSpec) -> String {
        s.to_string()
    }
}

impl SetSpec {
    pub fn build(&self) -> Result<FrequencySet> {
        match self {
            SetSpec::HyperbolicCross { d, n } => FrequencySet::hyperbolic_cross(*d, *n),
            SetSpec::Weighted { d, n, alpha } => FrequencySet::weighted_hyperbolic_cross(*d, *n, *alpha),
            SetSpec::Cuboid(sides) => FrequencySet::cuboid(sides),
            SetSpec::File(p) => read_set(std::io::BufReader::new(std::fs::File::open(p)?)),
        }
    }
}

/// `cbc`, `cbc:integer` (fast integer-greedy search) or `file:<path>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LatticeSource {
    Cbc(CbcSearch),
    File(PathBuf),
}

impl Default for LatticeSource {
    fn default() -> Self {
        LatticeSource::Cbc(CbcSearch::PerSize)
    }
}

impl FromStr for LatticeSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cbc" => Ok(LatticeSource::Cbc(CbcSearch::PerSize)),
            "cbc:integer" => Ok(LatticeSource::Cbc(CbcSearch::IntegerThenReduce)),
            _ => match s.strip_prefix("file:") {
                Some(p) => Ok(LatticeSource::File(PathBuf::from(p))),
                None => Err(Error::Parse(format!("unknown lattice source {s:?}"))),
            },
        }
    }
}

impl fmt::Display for LatticeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeSource::Cbc(CbcSearch::PerSize) => write!(f, "cbc"),
            LatticeSource::Cbc(CbcSearch::IntegerThenReduce) => write!(f, "cbc:integer"),
            LatticeSource::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl TryFrom<String> for LatticeSource {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LatticeSource> for String {
    fn from(s: LatticeSource) -> String {
        s.to_string()
    }
}

/// `sparse` for random sparse polynomials, or a B-spline sum such as
/// `bspline:2@0,1+4@2` (order `@` zero-based dimensions, terms joined by `+`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SignalSpec {
    #[default]
    Sparse,
    BSpline(Vec<BSplineTerm>),
}

impl FromStr for SignalSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "sparse" {
            return Ok(SignalSpec::Sparse);
        }
        let body = s.strip_prefix("bspline:").ok_or_else(|| Error::Parse(format!("unknown signal {s:?}")))?;
        let mut terms = Vec::new();
        for t in body.split('+') {
            let (order, dims) = t.split_once('@').ok_or_else(|| Error::Parse(format!("bad B-spline term {t:?}")))?;
            let order = order.trim().parse().map_err(|_| Error::Parse(format!("bad order in {t:?}")))?;
            let dims = dims
                .split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad dimension in {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            terms.push(BSplineTerm { dims, order });
        }
        Ok(SignalSpec::BSpline(terms))
    }
}

impl fmt::Display for SignalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalSpec::Sparse => write!(f, "sparse"),
            SignalSpec::BSpline(terms) => {
                let parts: Vec<String> = terms
                    .iter()
                    .map(|t| {
                        let dims: Vec<String> = t.dims.iter().map(|x| x.to_string()).collect();
                        format!("{}@{}", t.order, dims.join(","))
                    })
                    .collect();
                write!(f, "bspline:{}", parts.join("+"))
            }
        }
    }
}

impl TryFrom<String> for SignalSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SignalSpec> for String {
    fn from(s: SignalSpec) -> String {
        s.to_string()
    }
}

fn parse_bandwidth_mode(s: &str) -> Result<BandwidthMode> {
    match s {
        "auto" => Ok(BandwidthMode::Auto),
        "lattice" => Ok(BandwidthMode::Lattice),
        other => other.parse::<BandwidthMethod>().map(BandwidthMode::Widened),
    }
}

fn default_sft() -> String {
    "dense_reference".into()
}
fn default_bandwidth() -> String {
    "auto".into()
}
fn default_one() -> f64 {
    1.0
}
fn default_sigma() -> f64 {
    1.0 / 3.0
}
fn default_true() -> bool {
    true
}
fn default_time_limit() -> f64 {
    60.0
}

/// One experiment, as read from a JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub set: SetSpec,
    #[serde(default)]
    pub lattice: LatticeSource,
    #[serde(default)]
    pub signal: SignalSpec,
    /// `dense_reference`, `sublinear_deterministic` or `sublinear_monte_carlo`.
    #[serde(default = "default_sft")]
    pub sft: String,
    #[serde(default = "default_one")]
    pub random_scale: f64,
    /// Failure probability handed to the Monte Carlo SFT.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_one")]
    pub rate_constant: f64,
    #[serde(default)]
    pub union_bound: bool,
    pub sparsity: Vec<usize>,
    /// Noise levels; absent means noiseless.
    #[serde(default)]
    pub snr_db: Option<Vec<f64>>,
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// `auto`, `lattice`, or a bandwidth method name.
    #[serde(default = "default_bandwidth")]
    pub bandwidth: String,
    #[serde(default = "default_true")]
    pub check_membership: bool,
    /// Check the lattice before sampling; otherwise it is trusted.
    #[serde(default = "default_true")]
    pub verify_lattice: bool,
    /// Wall-time cap per trial, in seconds.
    #[serde(default = "default_time_limit")]
    pub trial_time_limit_s: f64,
    /// Record wall times. Off by default so that the CSV is reproducible byte for byte.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Config with defaults for everything but the essentials.
    pub fn new(algorithm: Algorithm, set: SetSpec, sparsity: Vec<usize>, trials: usize) -> Self {
        ExperimentConfig {
            algorithm,
            set,
            lattice: LatticeSource::default(),
            signal: SignalSpec::Sparse,
            sft: default_sft(),
            random_scale: 1.0,
            sigma: default_sigma(),
            rate_constant: 1.0,
            union_bound: false,
            sparsity,
            snr_db: None,
            trials,
            base_seed: 0,
            bandwidth: default_bandwidth(),
            check_membership: true,
            verify_lattice: true,
            trial_time_limit_s: default_time_limit(),
            timing: false,
            output: None,
            summary: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn variant(&self) -> Result<SftVariant> {
        self.sft.parse()
    }

    pub fn bandwidth_mode(&self) -> Result<BandwidthMode> {
        parse_bandwidth_mode(&self.bandwidth)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.sparsity.is_empty() || self.sparsity.contains(&0) {
            return Err(invalid("sparsity list must be non-empty and positive"));
        }
        if let Some(v) = &self.snr_db {
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                return Err(invalid("snr_db list must be non-empty and finite"));
            }
        }
        if self.trial_time_limit_s.is_nan() || self.trial_time_limit_s <= 0.0 {
            return Err(invalid("trial time limit must be positive"));
        }
        self.variant()?;
        self.bandwidth_mode()?;
        Ok(())
    }

    /// `(s, snr_db)` in sweep order: sparsity outer, noise inner.
    pub fn sweep_points(&self) -> Vec<(usize, Option<f64>)> {
        let snrs: Vec<Option<f64>> = match &self.snr_db {
            Some(v) => v.iter().map(|&x| Some(x)).collect(),
            None => vec![None],
        };
        self.sparsity.iter().flat_map(|&s| snrs.iter().map(move |&n| (s, n))).collect()
    }

    fn recovery_config(&self, s: usize, lat: &Rank1Lattice, seed: u64) -> Result<RecoveryConfig> {
        let mut req = SftRequest::new(s, lat.size(), self.variant()?);
        req.random_scale = self.random_scale;
        req.failure_probability = self.sigma;
        req.rate_constant = self.rate_constant;
        req.seed = seed;
        let mut rc = RecoveryConfig::new(req);
        rc.bandwidth = self.bandwidth_mode()?;
        rc.check_membership = self.check_membership;
        rc.union_bound = self.union_bound;
        Ok(rc)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub algorithm: String,
    pub set_kind: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: u64,
    pub alpha: f64,
    pub s: usize,
    pub snr_db: Option<f64>,
    pub random_scale: f64,
    pub trial: usize,
    pub seed: u64,
    /// Support of the output contains every true frequency; empty for
    /// signals without a finite spectrum.
    pub success: Option<bool>,
    pub rel_l2_coeff: f64,
    #[serde(rename = "rel_L2_func")]
    pub rel_l2_func: f64,
    pub samples: u64,
    pub wall_time_ms: f64,
}

/// Aggregates over the trials of one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub algorithm: String,
    pub set_kind: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: u64,
    pub alpha: f64,
    pub random_scale: f64,
    pub s: usize,
    pub snr_db: Option<f64>,
    pub trials: usize,
    pub success_rate: Option<f64>,
    pub success_std: Option<f64>,
    pub rel_l2_coeff_mean: f64,
    pub rel_l2_coeff_std: f64,
    pub rel_l2_coeff_median: f64,
    #[serde(rename = "rel_L2_func_mean")]
    pub rel_l2_func_mean: f64,
    #[serde(rename = "rel_L2_func_std")]
    pub rel_l2_func_std: f64,
    pub samples_mean: f64,
    pub samples_std: f64,
    pub wall_time_ms_mean: f64,
    pub wall_time_ms_std: f64,
    /// Relative L2 error of the best `2s`-term approximation from the set,
    /// for B-spline signals.
    pub best_2s_reference: Option<f64>,
}

impl PointSummary {
    pub fn key(&self) -> String {
        let snr = self.snr_db.map_or_else(|| "none".to_string(), |x| x.to_string());
        format!(
            "{}|{}|d={}|N={}|alpha={}|rs={}|s={}|snr_db={}",
            self.algorithm, self.set_kind, self.d, self.n, self.alpha, self.random_scale, self.s, snr
        )
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub lattice: Rank1Lattice,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<PointSummary>,
}

enum TrialSignal {
    Poly(TrigPolynomial<f64>),
    Spline(BSplineFunction),
}

impl TrialSignal {
    fn signal(&self) -> &dyn Signal<f64> {
        match self {
            TrialSignal::Poly(p) => p,
            TrialSignal::Spline(b) => b,
        }
    }
    fn truth(&self) -> &dyn FourierTruth<f64> {
        match self {
            TrialSignal::Poly(p) => p,
            TrialSignal::Spline(b) => b,
        }
    }
}

/// Lattice for `set` according to `source`; the two-dimensional method also
/// needs the projected sets reconstructed.
pub fn prepare_lattice(source: &LatticeSource, set: &FrequencySet, algorithm: Algorithm, verify: bool) -> Result<Rank1Lattice> {
    let projections = algorithm == Algorithm::Twodim;
    match source {
        LatticeSource::Cbc(search) => {
            let opts = CbcOptions { search: *search, require_projections: projections, ..Default::default() };
            Rank1Lattice::cbc_construct(set, &opts)
        }
        LatticeSource::File(p) => {
            let lat = read_lattice_file(p)?;
            if verify {
                let ok = if projections {
                    lat.is_reconstructing_with_projections(set)?
                } else {
                    lat.is_reconstructing(set)?
                };
                if !ok {
                    return Err(Error::Precondition(format!("lattice {lat} is not reconstructing for the set")));
                }
            }
            Ok(lat)
        }
    }
}

/// Runs every `(s, snr, trial)` on the current rayon pool. Records come back in
/// sweep order whatever the scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let set = cfg.set.build()?;
    let lattice = prepare_lattice(&cfg.lattice, &set, cfg.algorithm, cfg.verify_lattice)?;
    let spline = match &cfg.signal {
        SignalSpec::BSpline(terms) => Some(BSplineFunction::new(set.dim(), terms.clone())?),
        SignalSpec::Sparse => None,
    };
    let points = cfg.sweep_points();
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..cfg.trials).map(move |t| (p, t))).collect();
    let records = jobs
        .par_iter()
        .map(|&(p, t)| {
            let (s, snr) = points[p];
            run_trial(cfg, &set, &lattice, spline.as_ref(), p, s, snr, t)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut summary = summarize(&records);
    if let Some(b) = &spline {
        for ps in &mut summary {
            ps.best_2s_reference = Some(b.best_n_term_error(&set, 2 * ps.s));
        }
    }
    Ok(ExperimentResult { lattice, records, summary })
}

/// [`run_experiment`] on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    pool.install(|| run_experiment(cfg))
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    cfg: &ExperimentConfig,
    set: &FrequencySet,
    lat: &Rank1Lattice,
    spline: Option<&BSplineFunction>,
    point: usize,
    s: usize,
    snr: Option<f64>,
    trial: usize,
) -> Result<TrialRecord> {
    let seed = mix_seed(&[cfg.base_seed, point as u64, trial as u64]);
    let signal = match spline {
        Some(b) => TrialSignal::Spline(b.clone()),
        None => TrialSignal::Poly(random_sparse_poly(set, s, mix_seed(&[seed, 1]))?),
    };
    let sampler = Sampler::noisy(signal.signal(), snr, mix_seed(&[seed, 2]))?
        .with_deadline(Instant::now() + Duration::from_secs_f64(cfg.trial_time_limit_s));
    let rc = cfg.recovery_config(s, lat, mix_seed(&[seed, 3]))?;
    let start = Instant::now();
    let rec = match cfg.algorithm {
        Algorithm::Phase => phase_encode(&sampler, set, lat, &rc)?,
        Algorithm::Twodim => two_dim_dft(&sampler, set, lat, &rc)?,
    };
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    debug_assert_eq!(rec.sample_count, sampler.evaluations());
    let err = approximation_error(&rec.spectrum, signal.truth());
    let success = signal.truth().finite_spectrum().map(|c| c.support().all(|k| rec.spectrum.contains(k)));
    Ok(TrialRecord {
        algorithm: cfg.algorithm.as_str().into(),
        set_kind: set.kind().as_str().into(),
        d: set.dim(),
        n: set.expansion(),
        alpha: set.alpha(),
        s,
        snr_db: snr,
        random_scale: cfg.random_scale,
        trial,
        seed,
        success,
        rel_l2_coeff: err.rel_l2_coeff,
        rel_l2_func: err.rel_l2_func,
        samples: rec.sample_count,
        wall_time_ms: if cfg.timing { elapsed } else { 0.0 },
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let h = v.len() / 2;
    if v.len() % 2 == 1 {
        v[h]
    } else {
        0.5 * (v[h - 1] + v[h])
    }
}

/// Groups records by sweep point (first-appearance order) and aggregates.
/// Standard deviations use the `n - 1` denominator.
pub fn summarize(records: &[TrialRecord]) -> Vec<PointSummary> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: std::collections::HashMap<String, Vec<&TrialRecord>> = std::collections::HashMap::new();
    for r in records {
        let head = point_of(r);
        let key = head.key();
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .iter()
        .map(|key| {
            let g = &groups[key];
            let mut ps = point_of(g[0]);
            ps.trials = g.len();
            let col = |f: fn(&TrialRecord) -> f64| g.iter().map(|r| f(r)).collect::<Vec<f64>>();
            if g.iter().all(|r| r.success.is_some()) {
                let (m, sd) = mean_std(&col(|r| if r.success == Some(true) { 1.0 } else { 0.0 }));
                ps.success_rate = Some(m);
                ps.success_std = Some(sd);
            }
            let coeff = col(|r| r.rel_l2_coeff);
            (ps.rel_l2_coeff_mean, ps.rel_l2_coeff_std) = mean_std(&coeff);
            ps.rel_l2_coeff_median = median(&coeff);
            (ps.rel_l2_func_mean, ps.rel_l2_func_std) = mean_std(&col(|r| r.rel_l2_func));
            (ps.samples_mean, ps.samples_std) = mean_std(&col(|r| r.samples as f64));
            (ps.wall_time_ms_mean, ps.wall_time_ms_std) = mean_std(&col(|r| r.wall_time_ms));
            ps
        })
        .collect()
}

fn point_of(r: &TrialRecord) -> PointSummary {
    PointSummary {
        algorithm: r.algorithm.clone(),
        set_kind: r.set_kind.clone(),
        d: r.d,
        n: r.n,
        alpha: r.alpha,
        random_scale: r.random_scale,
        s: r.s,
        snr_db: r.snr_db,
        trials: 0,
        success_rate: None,
        success_std: None,
        rel_l2_coeff_mean: 0.0,
        rel_l2_coeff_std: 0.0,
        rel_l2_coeff_median: 0.0,
        rel_l2_func_mean: 0.0,
        rel_l2_func_std: 0.0,
        samples_mean: 0.0,
        samples_std: 0.0,
        wall_time_ms_mean: 0.0,
        wall_time_ms_std: 0.0,
        best_2s_reference: None,
    }
}

pub fn write_csv<W: std::io::Write>(records: &[TrialRecord], w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
    for r in records {
        wr.serialize(r).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(r: R) -> Result<Vec<TrialRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header {:?}", header.join(","))));
    }
    rd.deserialize().map(|row| row.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

pub fn emit_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    write_csv(records, std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// One JSON object keyed by [`PointSummary::key`].
pub fn summary_json(summary: &[PointSummary]) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for ps in summary {
        map.insert(ps.key(), serde_json::to_value(ps).expect("summary serialises"));
    }
    serde_json::Value::Object(map)
}

pub fn emit_summary(summary: &[PointSummary], path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&summary_json(summary)).expect("summary serialises");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Fast sanity checks across the library; `(name, passed)` per check.
pub fn selftest() -> Vec<(&'static str, bool)> {
    vec![
        ("dft roundtrip", check_dft()),
        ("weighted cross cardinality", check_cardinality()),
        ("cbc lattice reconstructing", check_cbc()),
        ("phase encoding exact recovery", check_recovery(Algorithm::Phase, "dense_reference")),
        ("two-dimensional exact recovery", check_recovery(Algorithm::Twodim, "dense_reference")),
        ("sublinear phase encoding", check_recovery(Algorithm::Phase, "sublinear_deterministic")),
        ("csv roundtrip", check_csv()),
    ]
}

fn check_dft() -> bool {
    use num_complex::Complex;
    let a: Vec<Complex<f64>> = (0..31).map(|j| Complex::new((j as f64).sin(), (0.7 * j as f64).cos())).collect();
    let back = crate::fft::idft(&crate::fft::dft(&a));
    a.iter().zip(&back).all(|(x, y)| (x - y).norm() < 1e-12)
}

fn check_cardinality() -> bool {
    FrequencySet::weighted_hyperbolic_cross(10, 33, 1.7).map(|s| s.cardinality() == 101).unwrap_or(false)
}

fn check_cbc() -> bool {
    let Ok(set) = FrequencySet::hyperbolic_cross(4, 9) else { return false };
    let Ok(lat) = Rank1Lattice::cbc_construct(&set, &CbcOptions::default()) else { return false };
    crate::lattice::collisions(&lat, &set).map(|c| c.is_empty()).unwrap_or(false)
}

fn check_recovery(algorithm: Algorithm, sft: &str) -> bool {
    let mut cfg = ExperimentConfig::new(algorithm, SetSpec::HyperbolicCross { d: 3, n: 9 }, vec![3], 3);
    cfg.sft = sft.into();
    match run_experiment(&cfg) {
        Ok(r) => r.records.iter().all(|t| t.success == Some(true) && t.rel_l2_coeff < 1e-8),
        Err(_) => false,
    }
}

fn check_csv() -> bool {
    let mut cfg = ExperimentConfig::new(Algorithm::Phase, SetSpec::Cuboid(vec![5, 5]), vec![1, 2], 2);
    cfg.snr_db = Some(vec![10.0]);
    let Ok(r) = run_experiment(&cfg) else { return false };
    let mut buf = Vec::new();
    if write_csv(&r.records, &mut buf).is_err() {
        return false;
    }
    read_csv(buf.as_slice()).map(|back| back == r.records).unwrap_or(false)
}
