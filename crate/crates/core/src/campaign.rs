//! Parameter sweeps: sample cuts, run the full pipeline on each map and
//! aggregate the outcomes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attractors::{
    attractor_set, direct_attractor_oracle, BasinConfig, OracleVerdict, BASIN_ITERATION_CAP,
    BASIN_TOL,
};
use crate::branch::{BranchKind, BranchSystem};
use crate::error::{Error, Result};
use crate::expanding::ExpandingMap;
use crate::orbits::{detect_g_connection, itinerary, Classification, DEFAULT_K_MAX};
use crate::pc::{BoundaryAssignment, ParameterPoint, PiecewiseContraction};
use crate::presets::{preset, SystemSpec};
use crate::quasi_partition::{
    default_gap_budget, from_hits, gap_hits, symbolic_itinerary_from_tau, verify_quasi_partition,
    HitVerdict,
};
use crate::scalar::{Backend, Float, Rational, Scalar};

pub const TRIAL_SCHEMA: &str = "pclab-trial/1";
pub const SUMMARY_SCHEMA: &str = "pclab-summary/1";

/// Prime denominator used to rationalize sampled points.
pub const SAMPLE_DENOMINATOR: i64 = 999_983;
const SAMPLE_RETRY_CAP: usize = 1000;
/// Trials evaluated in parallel between flushes of the record stream.
const CHUNK: usize = 64;

/// Uniform point of `[0,1)`; a multiple of `1/SAMPLE_DENOMINATOR` on the
/// rational backend.
pub fn sample_point<S: Scalar, R: Rng + ?Sized>(rng: &mut R) -> S {
    if S::is_exact() {
        S::from_ratio(rng.gen_range(0..SAMPLE_DENOMINATOR), SAMPLE_DENOMINATOR)
    } else {
        S::from_f64(rng.gen::<f64>())
    }
}

/// `n − 1` strictly increasing cuts drawn uniformly from `(0,1)`.
pub fn sample_omega<S: Scalar, R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<ParameterPoint<S>> {
    if n < 2 {
        return Err(Error::Parameters(format!("need n >= 2, got {n}")));
    }
    for _ in 0..SAMPLE_RETRY_CAP {
        let mut cuts: Vec<S> = (0..n - 1).map(|_| sample_point(rng)).collect();
        cuts.sort_by(|a, b| a.total_cmp(b));
        if cuts[0].is_positive() && cuts.windows(2).all(|w| w[0] < w[1]) {
            return ParameterPoint::new(cuts);
        }
    }
    Err(Error::Parameters(format!(
        "no admissible cuts after {SAMPLE_RETRY_CAP} draws"
    )))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignmentPolicy {
    #[default]
    AllLeft,
    AllRight,
    EnumerateAll,
}

impl AssignmentPolicy {
    pub fn assignments(self, n: usize) -> Vec<BoundaryAssignment> {
        match self {
            AssignmentPolicy::AllLeft => vec![BoundaryAssignment::all_left(n)],
            AssignmentPolicy::AllRight => vec![BoundaryAssignment::all_right(n)],
            AssignmentPolicy::EnumerateAll => BoundaryAssignment::enumerate(n),
        }
    }
}

/// A preset name or an inline system description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemChoice {
    Preset(String),
    Inline(SystemSpec),
}

impl SystemChoice {
    pub fn resolve(&self) -> Result<SystemSpec> {
        match self {
            SystemChoice::Preset(name) => preset(name),
            SystemChoice::Inline(spec) => Ok(spec.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub k_max: usize,
    /// Defaults to [`default_gap_budget`] per map.
    pub gap_budget: Option<usize>,
    pub basin_iterations: usize,
    /// Defaults to [`oracle_burn_in`] per map.
    pub oracle_burn_in: Option<usize>,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            k_max: DEFAULT_K_MAX,
            gap_budget: None,
            basin_iterations: BASIN_ITERATION_CAP,
            oracle_burn_in: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleCounts {
    /// Initial points attributed to basins per map.
    pub basin_points: usize,
    /// Points whose itinerary is checked against the `τ` word.
    pub itinerary_points: usize,
    /// Basin points re-checked by the brute-force oracle.
    pub oracle_points: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts {
            basin_points: 100,
            itinerary_points: 10,
            oracle_points: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub basin: f64,
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            basin: BASIN_TOL,
            oracle: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    /// Line-delimited JSON trial records.
    pub records: Option<PathBuf>,
    /// Summary JSON.
    pub summary: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub system: SystemChoice,
    /// Must match the system when given.
    #[serde(default)]
    pub n: Option<usize>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to the system's preferred backend.
    #[serde(default)]
    pub backend: Option<Backend>,
    #[serde(default)]
    pub assignment: AssignmentPolicy,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub samples: SampleCounts,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputPaths,
}

impl CampaignConfig {
    pub fn new(system: SystemChoice, trials: usize, seed: u64) -> Self {
        CampaignConfig {
            system,
            n: None,
            trials,
            seed,
            backend: None,
            assignment: AssignmentPolicy::default(),
            budgets: Budgets::default(),
            samples: SampleCounts::default(),
            tolerances: Tolerances::default(),
            output: OutputPaths::default(),
        }
    }

    /// Parse TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Resolve the system and check every field.
    pub fn validate(&self) -> Result<(SystemSpec, Backend)> {
        let spec = self.system.resolve()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        let b = &self.budgets;
        if b.k_max == 0 || b.gap_budget == Some(0) || b.basin_iterations == 0 {
            return Err(Error::Config("budgets must be positive".into()));
        }
        let t = &self.tolerances;
        if !(t.basin > 0.0 && t.oracle > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if let Some(n) = self.n {
            if n != spec.n() {
                return Err(Error::Config(format!(
                    "n = {n} but the system has {} branches",
                    spec.n()
                )));
            }
        }
        if spec.n() < 2 {
            return Err(Error::Config("campaigns need at least two branches".into()));
        }
        if spec.general_mode {
            return Err(Error::GeneralMode("campaigns"));
        }
        let backend = self.backend.unwrap_or_else(|| spec.default_backend());
        if backend == Backend::Rational
            && spec
                .branches
                .iter()
                .any(|b| b.kind == BranchKind::Quadratic)
        {
            return Err(Error::Backend {
                backend: Backend::Rational,
                what: "quadratic branches".into(),
            });
        }
        Ok((spec, backend))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscardReason {
    GConnection,
    BudgetExhausted,
    HitBoundary,
}

impl DiscardReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DiscardReason::GConnection => "g-connection",
            DiscardReason::BudgetExhausted => "budget-exhausted",
            DiscardReason::HitBoundary => "hit-boundary",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Outcome {
    Success {
        r: usize,
        /// Orbit periods, ascending.
        periods: Vec<usize>,
        q: usize,
        m: usize,
        hitting_times: Vec<usize>,
        basin_points: usize,
        max_basin_iterations: usize,
        oracle_checks: usize,
        itinerary_checks: usize,
    },
    Discarded {
        reason: DiscardReason,
        detail: String,
    },
    InvariantViolation {
        details: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub schema: String,
    pub trial: usize,
    pub cuts: Vec<String>,
    pub assignment: String,
    #[serde(flatten)]
    pub outcome: Outcome,
    /// Wall time; the only field that varies between identical runs.
    pub elapsed_ms: f64,
}

impl TrialRecord {
    pub fn is_success(&self) -> bool {
        matches!(self.outcome, Outcome::Success { .. })
    }

    /// One flat row for tabular output.
    pub fn flat(&self) -> FlatRecord {
        let mut row = FlatRecord {
            trial: self.trial,
            cuts: self.cuts.join(" "),
            assignment: self.assignment.clone(),
            outcome: String::new(),
            r: None,
            periods: String::new(),
            q: None,
            m: None,
            detail: String::new(),
            elapsed_ms: self.elapsed_ms,
        };
        match &self.outcome {
            Outcome::Success {
                r, periods, q, m, ..
            } => {
                row.outcome = "success".into();
                row.r = Some(*r);
                row.periods = periods
                    .iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                row.q = Some(*q);
                row.m = Some(*m);
            }
            Outcome::Discarded { reason, detail } => {
                row.outcome = format!("discarded:{}", reason.as_str());
                row.detail = detail.clone();
            }
            Outcome::InvariantViolation { details } => {
                row.outcome = "invariant-violation".into();
                row.detail = details.join("; ");
            }
        }
        row
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatRecord {
    pub trial: usize,
    pub cuts: String,
    pub assignment: String,
    pub outcome: String,
    pub r: Option<usize>,
    pub periods: String,
    pub q: Option<usize>,
    pub m: Option<usize>,
    pub detail: String,
    pub elapsed_ms: f64,
}

/// Settings of [`run_trial`] that do not depend on the system.
#[derive(Clone, Debug, Default)]
pub struct TrialSettings {
    pub budgets: Budgets,
    pub samples: SampleCounts,
    pub tolerances: Tolerances,
}

impl From<&CampaignConfig> for TrialSettings {
    fn from(c: &CampaignConfig) -> Self {
        TrialSettings {
            budgets: c.budgets.clone(),
            samples: c.samples.clone(),
            tolerances: c.tolerances.clone(),
        }
    }
}

/// Steps after which every orbit is within `tol/1000` of its limit cycle:
/// `m` steps to enter a cycle of components plus the contraction time.
pub fn oracle_burn_in(kappa: f64, m: usize, tol: f64) -> usize {
    let contraction = ((1e-3 * tol).ln() / kappa.ln()).ceil();
    m + if contraction.is_finite() {
        contraction.max(0.0) as usize
    } else {
        0
    }
}

/// Full pipeline on one map: g-connection scan, gap hits, quasi-partition
/// and its verification, attractors with basins, the brute-force oracle on
/// some basin points and the symbolic itinerary check. `rng` drives the
/// sampled points.
pub fn run_trial<S: Scalar, R: Rng + ?Sized>(
    system: &BranchSystem<S>,
    params: &ParameterPoint<S>,
    assignment: &BoundaryAssignment,
    settings: &TrialSettings,
    rng: &mut R,
) -> TrialRecord {
    let start = Instant::now();
    let outcome = pipeline(system, params, assignment, settings, rng).unwrap_or_else(|e| {
        Outcome::InvariantViolation {
            details: vec![e.to_string()],
        }
    });
    TrialRecord {
        schema: TRIAL_SCHEMA.to_string(),
        trial: 0,
        cuts: params.cuts().iter().map(|c| c.to_string()).collect(),
        assignment: assignment.to_string(),
        outcome,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn pipeline<S: Scalar, R: Rng + ?Sized>(
    system: &BranchSystem<S>,
    params: &ParameterPoint<S>,
    assignment: &BoundaryAssignment,
    settings: &TrialSettings,
    rng: &mut R,
) -> Result<Outcome> {
    let f = PiecewiseContraction::new(system.clone(), params.clone(), assignment.clone())?;
    let g = ExpandingMap::build(system)?;
    let budgets = &settings.budgets;

    if let Some(c) = detect_g_connection(&f, &g, budgets.k_max)? {
        return Ok(Outcome::Discarded {
            reason: DiscardReason::GConnection,
            detail: format!("g^{}(x_{}) = x_{}", c.k, c.cut, c.endpoint),
        });
    }
    let budget = budgets
        .gap_budget
        .unwrap_or_else(|| default_gap_budget(&f, &g));
    let hits = gap_hits(&f, &g, budget)?;
    for hit in &hits {
        let reason = match hit.verdict {
            HitVerdict::HitInterior => continue,
            HitVerdict::BudgetExhausted => DiscardReason::BudgetExhausted,
            HitVerdict::HitBoundary => DiscardReason::HitBoundary,
        };
        return Ok(Outcome::Discarded {
            reason,
            detail: format!("x_{} after {} steps", hit.cut, hit.q),
        });
    }

    let qp = from_hits(&f, &hits)?;
    let report = verify_quasi_partition(&f, &qp);
    let mut violations: Vec<String> = report
        .failed()
        .map(|c| format!("{}: {}", c.name, c.detail))
        .collect();
    if !violations.is_empty() {
        return Ok(Outcome::InvariantViolation {
            details: violations,
        });
    }

    let samples: Vec<S> = (0..settings.samples.basin_points)
        .map(|_| sample_point(rng))
        .collect();
    let basin_config = BasinConfig {
        tol: settings.tolerances.basin,
        iteration_cap: budgets.basin_iterations,
    };
    let attractors = attractor_set(&f, &qp, &samples, &basin_config)?;
    for orbit in attractors.orbits.iter().filter(|o| !o.stable) {
        violations.push(format!("orbit through {} meets a cut", orbit.points[0]));
    }
    if attractors.unattributed() > 0 {
        violations.push(format!(
            "{} basin points not attributed",
            attractors.unattributed()
        ));
    }

    // oracle cross-check on the first basin points
    let oracle_tol = S::from_f64(settings.tolerances.oracle);
    let probe = (4 * qp.m()).max(16);
    let burn_in = budgets.oracle_burn_in.unwrap_or_else(|| {
        oracle_burn_in(
            f.system().kappa().to_f64(),
            qp.m(),
            settings.tolerances.oracle,
        )
    });
    let mut oracle_checks = 0;
    for entry in attractors
        .basins
        .iter()
        .take(settings.samples.oracle_points)
    {
        let Some(o) = entry.orbit else { continue };
        oracle_checks += 1;
        match direct_attractor_oracle(&f, &entry.x, burn_in, probe, &oracle_tol)? {
            OracleVerdict::Orbit { points, .. }
                if attractors.orbits[o].matches(&points, &oracle_tol) => {}
            other => violations.push(format!("oracle disagrees at x = {}: {other:?}", entry.x)),
        }
    }

    // symbolic itinerary against the numerical one
    let len = (2 * qp.m()).max(50);
    let mut itinerary_checks = 0;
    let mut draws = 0;
    while itinerary_checks < settings.samples.itinerary_points
        && draws < 100 * settings.samples.itinerary_points
    {
        draws += 1;
        let x: S = sample_point(rng);
        let Some(l) = qp.component_of(&x) else {
            continue;
        };
        itinerary_checks += 1;
        let word = symbolic_itinerary_from_tau(&qp, l)?;
        if let Classification::EventuallyPeriodic { preperiod, period } = word.classification {
            if preperiod + period > qp.m() {
                violations.push(format!(
                    "tau word of J_{} has preperiod + period > m",
                    l + 1
                ));
            }
        }
        let numeric = itinerary(&f, &x, len)?;
        if Some(numeric.digits.clone()) != word.prefix(len) {
            violations.push(format!(
                "itinerary of {x} differs from the tau word of J_{}",
                l + 1
            ));
        }
    }

    if !violations.is_empty() {
        return Ok(Outcome::InvariantViolation {
            details: violations,
        });
    }
    let mut periods: Vec<usize> = attractors.orbits.iter().map(|o| o.period).collect();
    periods.sort_unstable();
    Ok(Outcome::Success {
        r: attractors.r,
        periods,
        q: qp.q,
        m: qp.m(),
        hitting_times: hits.iter().map(|h| h.q).collect(),
        basin_points: samples.len(),
        max_basin_iterations: attractors.max_iterations(),
        oracle_checks,
        itinerary_checks,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub schema: String,
    pub system: String,
    pub backend: Backend,
    pub n: usize,
    pub trials: usize,
    pub records: usize,
    pub successes: usize,
    pub discarded: usize,
    pub invariant_violations: usize,
    pub success_rate: f64,
    pub discard_reasons: BTreeMap<String, usize>,
    pub r_distribution: BTreeMap<usize, usize>,
    pub period_distribution: BTreeMap<usize, usize>,
    pub q_distribution: BTreeMap<usize, usize>,
    pub m_distribution: BTreeMap<usize, usize>,
    pub max_r: usize,
}

impl CampaignSummary {
    pub fn new(system: String, backend: Backend, n: usize, trials: usize) -> Self {
        CampaignSummary {
            schema: SUMMARY_SCHEMA.to_string(),
            system,
            backend,
            n,
            trials,
            records: 0,
            successes: 0,
            discarded: 0,
            invariant_violations: 0,
            success_rate: 0.0,
            discard_reasons: BTreeMap::new(),
            r_distribution: BTreeMap::new(),
            period_distribution: BTreeMap::new(),
            q_distribution: BTreeMap::new(),
            m_distribution: BTreeMap::new(),
            max_r: 0,
        }
    }

    pub fn add(&mut self, record: &TrialRecord) {
        self.records += 1;
        match &record.outcome {
            Outcome::Success {
                r, periods, q, m, ..
            } => {
                self.successes += 1;
                *self.r_distribution.entry(*r).or_default() += 1;
                for p in periods {
                    *self.period_distribution.entry(*p).or_default() += 1;
                }
                *self.q_distribution.entry(*q).or_default() += 1;
                *self.m_distribution.entry(*m).or_default() += 1;
                self.max_r = self.max_r.max(*r);
            }
            Outcome::Discarded { reason, .. } => {
                self.discarded += 1;
                *self
                    .discard_reasons
                    .entry(reason.as_str().to_string())
                    .or_default() += 1;
            }
            Outcome::InvariantViolation { .. } => self.invariant_violations += 1,
        }
        self.success_rate = self.successes as f64 / self.records as f64;
    }

    pub fn discard_rate(&self, reason: DiscardReason) -> f64 {
        let count = self
            .discard_reasons
            .get(reason.as_str())
            .copied()
            .unwrap_or(0);
        count as f64 / self.records.max(1) as f64
    }

    /// `key, value` rows.
    pub fn rows(&self) -> Vec<(String, String)> {
        fn dist(d: &BTreeMap<usize, usize>) -> String {
            d.iter()
                .map(|(k, v)| format!("{k}:{v}"))
                .collect::<Vec<_>>()
                .join(" ")
        }
        let mut rows = vec![
            ("schema".to_string(), self.schema.clone()),
            ("system".into(), self.system.clone()),
            (
                "backend".into(),
                format!("{:?}", self.backend).to_lowercase(),
            ),
            ("n".into(), self.n.to_string()),
            ("trials".into(), self.trials.to_string()),
            ("records".into(), self.records.to_string()),
            ("successes".into(), self.successes.to_string()),
            ("discarded".into(), self.discarded.to_string()),
            (
                "invariant_violations".into(),
                self.invariant_violations.to_string(),
            ),
            ("success_rate".into(), format!("{:.6}", self.success_rate)),
        ];
        for (reason, count) in &self.discard_reasons {
            rows.push((format!("discard:{reason}"), count.to_string()));
        }
        rows.push(("r_distribution".into(), dist(&self.r_distribution)));
        rows.push((
            "period_distribution".into(),
            dist(&self.period_distribution),
        ));
        rows.push(("q_distribution".into(), dist(&self.q_distribution)));
        rows.push(("m_distribution".into(), dist(&self.m_distribution)));
        rows.push(("max_r".into(), self.max_r.to_string()));
        rows
    }
}

#[derive(Clone, Debug)]
pub struct CampaignResult {
    pub summary: CampaignSummary,
    pub records: Vec<TrialRecord>,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

/// Records for one trial index: one per boundary assignment, all sharing
/// the same cuts and sampled points.
fn trial_records<S: Scalar>(
    system: &BranchSystem<S>,
    config: &CampaignConfig,
    settings: &TrialSettings,
    trial: usize,
) -> Vec<TrialRecord> {
    let mut rng = trial_rng(config.seed, trial);
    let params = match sample_omega::<S, _>(system.n(), &mut rng) {
        Ok(p) => p,
        Err(e) => {
            return vec![TrialRecord {
                schema: TRIAL_SCHEMA.to_string(),
                trial,
                cuts: Vec::new(),
                assignment: String::new(),
                outcome: Outcome::InvariantViolation {
                    details: vec![e.to_string()],
                },
                elapsed_ms: 0.0,
            }]
        }
    };
    config
        .assignment
        .assignments(system.n())
        .iter()
        .map(|a| {
            let mut record = run_trial(system, &params, a, settings, &mut rng.clone());
            record.trial = trial;
            record
        })
        .collect()
}

fn campaign_on<S: Scalar>(
    config: &CampaignConfig,
    spec: &SystemSpec,
    backend: Backend,
) -> Result<CampaignResult> {
    let system = spec.system::<S>()?;
    let settings = TrialSettings::from(config);
    let name = spec.name.clone().unwrap_or_else(|| "inline".to_string());
    let mut summary = CampaignSummary::new(name, backend, spec.n(), config.trials);
    let mut writer = match &config.output.records {
        Some(path) => Some(BufWriter::new(
            File::create(path).map_err(|e| io_error(path, e))?,
        )),
        None => None,
    };
    let mut records = Vec::new();
    let indices: Vec<usize> = (0..config.trials).collect();
    for chunk in indices.chunks(CHUNK) {
        let batch: Vec<Vec<TrialRecord>> = chunk
            .par_iter()
            .map(|&t| trial_records(&system, config, &settings, t))
            .collect();
        for record in batch.into_iter().flatten() {
            summary.add(&record);
            if let (Some(w), Some(path)) = (writer.as_mut(), config.output.records.as_ref()) {
                let line = serde_json::to_string(&record).expect("plain data");
                writeln!(w, "{line}").map_err(|e| io_error(path, e))?;
            }
            records.push(record);
        }
        if let (Some(w), Some(path)) = (writer.as_mut(), config.output.records.as_ref()) {
            w.flush().map_err(|e| io_error(path, e))?;
        }
    }
    if let Some(path) = &config.output.summary {
        let text = serde_json::to_string_pretty(&summary).expect("plain data");
        std::fs::write(path, text).map_err(|e| io_error(path, e))?;
    }
    Ok(CampaignResult { summary, records })
}

/// Run every trial of `config`, in parallel and deterministically in the
/// seed.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignResult> {
    let (spec, backend) = config.validate()?;
    match backend {
        Backend::Rational => campaign_on::<Rational>(config, &spec, backend),
        Backend::Float => campaign_on::<Float>(config, &spec, backend),
    }
}
