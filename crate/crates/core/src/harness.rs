//! Experiment plumbing: decoding-radius comparison, Monte Carlo campaigns
//! and single-instance decodes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::erasure::{erase_decode_quantum, DecodeStatus, DecodeVerdict, ErasureError};
use crate::graph::{audit_expansion, gen_biregular, BipartiteGraph, ExpansionProfile, GraphError, Side};
use crate::hgp::{CheckSet, HgpCode, QubitSet};
use crate::io::{self, ParseError};
use crate::reduction::{reduce_error, ReductionError, ReductionMode, EXACT_MAX_GENERATORS};
use crate::ssfind::{check_run_invariants, ssfind, DecodeError, DecoderConfig, SsfindOutcome};
use crate::Rational;

/// Environment variable holding the Monte Carlo worker count.
pub const WORKERS_ENV: &str = "SSFIND_WORKERS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("config line {line}: {msg}")]
    ConfigLine { line: usize, msg: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Erasure(#[from] ErasureError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("trial {trial}: no reduced error of weight {weight} after {tries} draws")]
    Sampling { trial: usize, weight: usize, tries: usize },
    #[error("worker pool: {0}")]
    Pool(String),
}

fn read_file(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses `a/b`, an integer, or a decimal such as `0.05`.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
        let b: i64 = b.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
        if b == 0 {
            return Err(format!("zero denominator in `{s}`"));
        }
        return Ok(Rational::new(a, b));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let digits = frac.len() as u32;
        if digits > 15 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(format!("bad decimal `{s}`"));
        }
        let neg = int.starts_with('-');
        let int: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| format!("bad decimal `{s}`"))? };
        let scale = 10i64.pow(digits);
        let frac: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| format!("bad decimal `{s}`"))? };
        let mag = int.abs() * scale + frac;
        return Ok(Rational::new(if neg { -mag } else { mag }, scale));
    }
    s.parse::<i64>().map(Rational::from_integer).map_err(|_| format!("bad number `{s}`"))
}

pub fn rational_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

// ---- decoding radius table ------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusRow {
    pub algorithm: &'static str,
    pub r: Rational,
    pub epsilon: Rational,
    pub delta_c: usize,
    /// Radius as a multiple of the distance `D`.
    pub coefficient: f64,
    /// The coefficient when it is rational.
    pub exact: Option<Rational>,
    /// The formula applies for `ε` below this value.
    pub epsilon_limit: Rational,
    pub valid: bool,
}

/// Decoding radii of three small-set decoders as multiples of `D`, for
/// `r = Δ_V/Δ_C`. Rows outside their `ε` range are kept and flagged.
pub fn radius_table(r: Rational, epsilon: Rational, delta_c: usize) -> Result<Vec<RadiusRow>, HarnessError> {
    let zero = Rational::from_integer(0);
    let one = Rational::from_integer(1);
    if r <= zero || r > one {
        return Err(HarnessError::Config(format!("r must satisfy 0 < r <= 1, got {r}")));
    }
    if epsilon < zero {
        return Err(HarnessError::Config(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if delta_c == 0 {
        return Err(HarnessError::Config("deltaC must be positive".into()));
    }
    let row = |algorithm, exact: Option<Rational>, coefficient: f64, limit: Rational| RadiusRow {
        algorithm,
        r,
        epsilon,
        delta_c,
        coefficient,
        exact,
        epsilon_limit: limit,
        valid: epsilon < limit,
    };

    let ltz = Rational::new(1, 3 * (1 + delta_c as i64));
    let t = r * 2 * (one - epsilon * 8);
    let rational_part = t / (Rational::from_integer(4) + t) * r;
    let grospellier = rational_to_f64(rational_part) / (1.0 + rational_to_f64(r * r)).sqrt();
    let ours = (one - epsilon * 10) / 4 * r;
    Ok(vec![
        row("ssflip-ltz", Some(ltz), rational_to_f64(ltz), Rational::new(1, 6)),
        row("ssflip-grospellier", None, grospellier, Rational::new(1, 8)),
        row("ssfind", Some(ours), rational_to_f64(ours), Rational::new(1, 10)),
    ])
}

pub fn render_radius_table(rows: &[RadiusRow]) -> String {
    let mut out = format!("{:<20} {:>6} {:>8} {:>7} {:>12} {:>10} {:>6}\n", "algorithm", "r", "epsilon", "deltaC", "coefficient", "eps_limit", "valid");
    for row in rows {
        let _ = writeln!(
            out,
            "{:<20} {:>6} {:>8} {:>7} {:>12.6} {:>10} {:>6}",
            row.algorithm,
            row.r.to_string(),
            row.epsilon.to_string(),
            row.delta_c,
            row.coefficient,
            format!("<{}", row.epsilon_limit),
            if row.valid { "yes" } else { "no" }
        );
    }
    out
}

// ---- epsilon selection ----------------------------------------------------

/// How the decoder's `ε` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonChoice {
    Fixed(Rational),
    /// `max(ε_V, ε_C)` over all sets of size at most `s_max`, audited exhaustively.
    Audited { s_max: usize },
}

impl std::str::FromStr for EpsilonChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "audit" => Ok(EpsilonChoice::Audited { s_max: 3 }),
            t if t.starts_with("audit:") => t[6..]
                .parse()
                .map(|s_max| EpsilonChoice::Audited { s_max })
                .map_err(|_| format!("bad audit size in `{t}`")),
            t => parse_rational(t).map(EpsilonChoice::Fixed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionAudit {
    pub left: ExpansionProfile,
    pub right: ExpansionProfile,
}

impl ExpansionAudit {
    pub fn run(graph: &BipartiteGraph, s_max: usize) -> Result<Self, HarnessError> {
        Ok(ExpansionAudit {
            left: audit_expansion(graph, Side::Left, s_max.min(graph.n()), None)?,
            right: audit_expansion(graph, Side::Right, s_max.min(graph.m()), None)?,
        })
    }

    pub fn epsilon(&self) -> Rational {
        self.left.max_epsilon().max(self.right.max_epsilon())
    }
}

/// Resolves `choice` on `graph`, returning the audit when one was run.
pub fn resolve_epsilon(graph: &BipartiteGraph, choice: EpsilonChoice) -> Result<(Rational, Option<ExpansionAudit>), HarnessError> {
    match choice {
        EpsilonChoice::Fixed(e) => Ok((e, None)),
        EpsilonChoice::Audited { s_max } => {
            let audit = ExpansionAudit::run(graph, s_max)?;
            Ok((audit.epsilon(), Some(audit)))
        }
    }
}

// ---- Monte Carlo ----------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignConfig {
    pub graph_seed: u64,
    pub n: usize,
    pub delta_v: usize,
    pub delta_c: usize,
    /// Error weights, assigned to trials round-robin.
    pub weights: Vec<usize>,
    /// Total number of trials.
    pub trials: usize,
    pub epsilon: EpsilonChoice,
    pub reduction: ReductionMode,
    /// Base seed of the per-trial streams.
    pub trial_seed: u64,
    /// Recheck cached scores during each decode and the run invariants after it.
    pub check_invariants: bool,
    /// Draws per trial before giving up on finding a reduced error.
    pub max_draws: usize,
}

impl CampaignConfig {
    pub fn new(graph_seed: u64, n: usize, delta_v: usize, delta_c: usize) -> Self {
        CampaignConfig {
            graph_seed,
            n,
            delta_v,
            delta_c,
            weights: vec![1],
            trials: 1,
            epsilon: EpsilonChoice::Audited { s_max: 3 },
            reduction: ReductionMode::Greedy,
            trial_seed: graph_seed,
            check_invariants: false,
            max_draws: 1000,
        }
    }

    /// Parses `key=value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut kv = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let (k, v) = l.split_once('=').ok_or_else(|| HarnessError::ConfigLine {
                line: i + 1,
                msg: format!("expected key=value, got `{l}`"),
            })?;
            if kv.insert(k.trim().to_string(), (i + 1, v.trim().to_string())).is_some() {
                return Err(HarnessError::ConfigLine {
                    line: i + 1,
                    msg: format!("duplicate key `{}`", k.trim()),
                });
            }
        }
        let mut take = |key: &str| kv.remove(key);
        let bad = |line: usize, msg: String| HarnessError::ConfigLine { line, msg };
        fn num<T: std::str::FromStr>(key: &str, entry: Option<(usize, String)>) -> Result<Option<T>, HarnessError> {
            entry
                .map(|(line, v)| {
                    v.parse().map_err(|_| HarnessError::ConfigLine {
                        line,
                        msg: format!("bad value `{v}` for {key}"),
                    })
                })
                .transpose()
        }
        let required = |key: &str| HarnessError::Config(format!("missing required key `{key}`"));

        let graph_seed: u64 = num("graph_seed", take("graph_seed"))?.ok_or_else(|| required("graph_seed"))?;
        let n = num("n", take("n"))?.ok_or_else(|| required("n"))?;
        let delta_v = num("delta_v", take("delta_v"))?.ok_or_else(|| required("delta_v"))?;
        let delta_c = num("delta_c", take("delta_c"))?.ok_or_else(|| required("delta_c"))?;
        let mut cfg = CampaignConfig::new(graph_seed, n, delta_v, delta_c);
        if let Some((line, v)) = take("weights") {
            cfg.weights = parse_weights(&v).map_err(|m| bad(line, m))?;
        }
        if let Some(t) = num("trials", take("trials"))? {
            cfg.trials = t;
        }
        if let Some((line, v)) = take("epsilon") {
            cfg.epsilon = v.parse().map_err(|m| bad(line, m))?;
        }
        if let Some(s_max) = num::<usize>("s_max", take("s_max"))? {
            match cfg.epsilon {
                EpsilonChoice::Audited { .. } => cfg.epsilon = EpsilonChoice::Audited { s_max },
                EpsilonChoice::Fixed(_) => return Err(HarnessError::Config("s_max only applies with epsilon=audit".into())),
            }
        }
        if let Some((line, v)) = take("reduction") {
            cfg.reduction = match v.as_str() {
                "greedy" => ReductionMode::Greedy,
                "exact" => ReductionMode::Exact,
                other => return Err(bad(line, format!("reduction must be greedy or exact, got `{other}`"))),
            };
        }
        if let Some(s) = num("trial_seed", take("trial_seed"))? {
            cfg.trial_seed = s;
        }
        if let Some(b) = num("check_invariants", take("check_invariants"))? {
            cfg.check_invariants = b;
        }
        if let Some(d) = num("max_draws", take("max_draws"))? {
            cfg.max_draws = d;
        }
        if let Some((k, (line, _))) = kv.into_iter().next() {
            return Err(bad(line, format!("unknown key `{k}`")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let eps = match self.epsilon {
            EpsilonChoice::Fixed(e) => e.to_string(),
            EpsilonChoice::Audited { s_max } => format!("audit:{s_max}"),
        };
        let weights: Vec<String> = self.weights.iter().map(usize::to_string).collect();
        format!(
            "graph_seed={}\nn={}\ndelta_v={}\ndelta_c={}\nweights={}\ntrials={}\nepsilon={}\nreduction={}\ntrial_seed={}\ncheck_invariants={}\nmax_draws={}\n",
            self.graph_seed,
            self.n,
            self.delta_v,
            self.delta_c,
            weights.join(","),
            self.trials,
            eps,
            match self.reduction {
                ReductionMode::Greedy => "greedy",
                ReductionMode::Exact => "exact",
            },
            self.trial_seed,
            self.check_invariants,
            self.max_draws
        )
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.weights.is_empty() {
            return Err(HarnessError::Config("weights must not be empty".into()));
        }
        if self.max_draws == 0 {
            return Err(HarnessError::Config("max_draws must be positive".into()));
        }
        if let EpsilonChoice::Fixed(e) = self.epsilon {
            if e < Rational::from_integer(0) {
                return Err(HarnessError::Config(format!("epsilon must be >= 0, got {e}")));
            }
        }
        if let EpsilonChoice::Audited { s_max: 0 } = self.epsilon {
            return Err(HarnessError::Config("s_max must be positive".into()));
        }
        Ok(())
    }
}

/// `1,2,3`, `1-3`, or a mix such as `0,2-4`.
pub fn parse_weights(s: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let a: usize = a.trim().parse().map_err(|_| format!("bad weight range `{part}`"))?;
            let b: usize = b.trim().parse().map_err(|_| format!("bad weight range `{part}`"))?;
            if a > b {
                return Err(format!("empty weight range `{part}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad weight `{part}`"))?);
        }
    }
    if out.is_empty() {
        return Err("no weights given".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub trial: usize,
    /// Base seed; the trial's stream number is `trial`.
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub delta_v: usize,
    pub delta_c: usize,
    /// Worst audited `ε` per set size for the left and right sides.
    pub audited_left: Arc<[Rational]>,
    pub audited_right: Arc<[Rational]>,
    pub epsilon: Rational,
    pub weight: usize,
    /// Draws rejected because they did not reduce to the requested weight.
    pub rejected_draws: usize,
    pub error: QubitSet,
    pub syndrome_size: usize,
    pub envelope_size: usize,
    pub iterations: usize,
    pub seeded_generators: usize,
    pub covered: bool,
    pub status: DecodeStatus,
    pub coset_equivalent: bool,
    pub rows_touched: usize,
    /// Whether the trial meets the size condition under which the envelope
    /// bound is proved.
    pub hypothesis: bool,
    /// `|L| ≤ 4/(1-10ε) · (Δ_C/Δ_V) · |E|`, checked when `hypothesis` holds.
    pub envelope_bound_ok: Option<bool>,
    /// Invariant check result when enabled; `Err` carries the violation.
    pub invariants: Option<Result<(), String>>,
    pub wall: Duration,
}

impl TrialReport {
    pub fn ratio(&self) -> f64 {
        if self.error.is_empty() {
            0.0
        } else {
            self.envelope_size as f64 / self.error.len() as f64
        }
    }

    pub fn recovered(&self) -> bool {
        self.status == DecodeStatus::Success && self.coset_equivalent
    }

    /// One line, fixed field order. Wall time is left out so that reports
    /// compare bit for bit across runs.
    pub fn render(&self) -> String {
        format!(
            "trial={} weight={} rejected={} syndrome={} envelope={} ratio={:.6} iterations={} seeded={} covered={} status={} coset={} rows={} hypothesis={} envelope_bound={} invariants={}",
            self.trial,
            self.weight,
            self.rejected_draws,
            self.syndrome_size,
            self.envelope_size,
            self.ratio(),
            self.iterations,
            self.seeded_generators,
            self.covered,
            self.status,
            self.coset_equivalent,
            self.rows_touched,
            self.hypothesis,
            match self.envelope_bound_ok {
                None => "n/a",
                Some(true) => "ok",
                Some(false) => "violated",
            },
            match &self.invariants {
                None => "unchecked".to_string(),
                Some(Ok(())) => "ok".to_string(),
                Some(Err(e)) => format!("violated({})", e.replace(' ', "_")),
            }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSummary {
    pub weight: usize,
    pub trials: usize,
    pub recovered: usize,
    pub covered: usize,
    pub max_ratio: f64,
    pub mean_envelope: f64,
    pub hypothesis: usize,
    pub bound_violations: usize,
    pub invariant_failures: usize,
}

impl WeightSummary {
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            1.0
        } else {
            self.recovered as f64 / self.trials as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    pub config: CampaignConfig,
    pub num_qubits: usize,
    pub logical_qubits: usize,
    pub epsilon: Rational,
    pub audit: Option<ExpansionAudit>,
    pub trials: Vec<TrialReport>,
}

impl CampaignReport {
    /// Per-weight aggregates, recomputed from the trial reports.
    pub fn summary(&self) -> Vec<WeightSummary> {
        let mut by_weight: BTreeMap<usize, Vec<&TrialReport>> = BTreeMap::new();
        for t in &self.trials {
            by_weight.entry(t.weight).or_default().push(t);
        }
        by_weight
            .into_iter()
            .map(|(weight, ts)| WeightSummary {
                weight,
                trials: ts.len(),
                recovered: ts.iter().filter(|t| t.recovered()).count(),
                covered: ts.iter().filter(|t| t.covered).count(),
                max_ratio: ts.iter().map(|t| t.ratio()).fold(0.0, f64::max),
                mean_envelope: ts.iter().map(|t| t.envelope_size as f64).sum::<f64>() / ts.len() as f64,
                hypothesis: ts.iter().filter(|t| t.hypothesis).count(),
                bound_violations: ts.iter().filter(|t| t.envelope_bound_ok == Some(false)).count(),
                invariant_failures: ts.iter().filter(|t| matches!(t.invariants, Some(Err(_)))).count(),
            })
            .collect()
    }

    pub fn all_recovered(&self) -> bool {
        self.trials.iter().all(TrialReport::recovered)
    }

    pub fn render_summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# n={} m={} deltaV={} deltaC={} N={} K={} epsilon={} ({:.6})",
            self.config.n,
            self.trials.first().map_or(self.config.n * self.config.delta_v / self.config.delta_c.max(1), |t| t.m),
            self.config.delta_v,
            self.config.delta_c,
            self.num_qubits,
            self.logical_qubits,
            self.epsilon,
            rational_to_f64(self.epsilon)
        );
        if let Some(a) = &self.audit {
            let fmt = |p: &ExpansionProfile| p.worst_epsilon_by_size[1..].iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",");
            let _ = writeln!(out, "# audited epsilon by size: left=[{}] right=[{}]", fmt(&a.left), fmt(&a.right));
        }
        let _ = writeln!(
            out,
            "{:>6} {:>7} {:>9} {:>8} {:>12} {:>10} {:>13} {:>10} {:>12} {:>10}",
            "weight", "trials", "recovered", "covered", "success_rate", "max_ratio", "mean_envelope", "hypothesis", "bound_viol", "inv_fail"
        );
        for s in self.summary() {
            let _ = writeln!(
                out,
                "{:>6} {:>7} {:>9} {:>8} {:>12.6} {:>10.6} {:>13.6} {:>10} {:>12} {:>10}",
                s.weight,
                s.trials,
                s.recovered,
                s.covered,
                s.success_rate(),
                s.max_ratio,
                s.mean_envelope,
                s.hypothesis,
                s.bound_violations,
                s.invariant_failures
            );
        }
        out
    }

    /// Summary followed by one line per trial. Deterministic for a given config.
    pub fn render(&self) -> String {
        let mut out = self.render_summary();
        for t in &self.trials {
            out.push_str(&t.render());
            out.push('\n');
        }
        out
    }
}

/// Worker count from [`WORKERS_ENV`], if set.
pub fn workers_from_env() -> Result<Option<usize>, HarnessError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&w| w > 0)
            .map(Some)
            .ok_or_else(|| HarnessError::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

/// The RNG for one trial: stream `trial` of the base seed.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Draws qubit sets of the given weight until one is its own reduced form.
pub fn sample_reduced_error(
    code: &HgpCode,
    rng: &mut ChaCha8Rng,
    weight: usize,
    mode: ReductionMode,
    max_draws: usize,
) -> Result<Option<(QubitSet, usize)>, ReductionError> {
    for draw in 0..max_draws {
        let e: QubitSet = sample(rng, code.num_qubits(), weight).into_iter().map(|i| code.qubit_at(i)).collect();
        let reduced = reduce_error(code, &e, mode)?;
        if reduced.len() == weight {
            return Ok(Some((reduced, draw)));
        }
    }
    Ok(None)
}

/// The size condition of the envelope bound: `ε < 1/10` and
/// `Δ(‖E‖+1)·4/(1-10ε) ≤ min(α_V Δ_V n, α_C Δ_C m)`, with `α_V n` and
/// `α_C m` the audited set sizes.
pub fn envelope_bound_hypothesis(code: &HgpCode, e: &QubitSet, epsilon: Rational, audited: Option<&ExpansionAudit>) -> bool {
    let Some(a) = audited else { return false };
    let one = Rational::from_integer(1);
    if epsilon < Rational::from_integer(0) || epsilon >= Rational::new(1, 10) {
        return false;
    }
    let lhs = Rational::from_integer((code.scaled_norm(e) + code.delta()) as i64) * 4 / (one - epsilon * 10);
    let cap_v = a.left.max_set_size * code.delta_v();
    let cap_c = a.right.max_set_size * code.delta_c();
    lhs <= Rational::from_integer(cap_v.min(cap_c) as i64)
}

/// `4/(1-10ε) · (Δ_C/Δ_V) · |E|`.
pub fn envelope_bound(code: &HgpCode, e: &QubitSet, epsilon: Rational) -> Rational {
    let one = Rational::from_integer(1);
    Rational::from_integer(4) / (one - epsilon * 10) * Rational::new(code.delta_c() as i64, code.delta_v() as i64) * Rational::from_integer(e.len() as i64)
}

struct Campaign<'a> {
    cfg: &'a CampaignConfig,
    code: &'a HgpCode,
    epsilon: Rational,
    audit: Option<&'a ExpansionAudit>,
    left: Arc<[Rational]>,
    right: Arc<[Rational]>,
}

impl Campaign<'_> {
    fn run_trial(&self, trial: usize) -> Result<TrialReport, HarnessError> {
        let start = Instant::now();
        let code = self.code;
        let weight = self.cfg.weights[trial % self.cfg.weights.len()];
        let mut rng = trial_rng(self.cfg.trial_seed, trial);
        let (error, rejected_draws) = sample_reduced_error(code, &mut rng, weight, self.cfg.reduction, self.cfg.max_draws)?
            .ok_or(HarnessError::Sampling {
                trial,
                weight,
                tries: self.cfg.max_draws,
            })?;
        let sigma = code.syndrome(&error);
        let dcfg = DecoderConfig::new(self.epsilon).with_verify_cache(self.cfg.check_invariants);
        let (outcome, invariants) = match ssfind(code, &sigma, &dcfg) {
            Ok(o) => {
                let inv = self
                    .cfg
                    .check_invariants
                    .then(|| check_run_invariants(code, &sigma, &dcfg, &o).map_err(|e| e.to_string()));
                (o, inv)
            }
            Err(DecodeError::CacheMismatch { .. }) if self.cfg.check_invariants => {
                let e = ssfind(code, &sigma, &dcfg).unwrap_err();
                let o = ssfind(code, &sigma, &dcfg.clone().with_verify_cache(false))?;
                (o, Some(Err(e.to_string())))
            }
            Err(e) => return Err(e.into()),
        };
        let verdict = erase_decode_quantum(code, &sigma, &outcome.envelope)?.judge(code, &error);
        let hypothesis = envelope_bound_hypothesis(code, &error, self.epsilon, self.audit);
        let envelope_bound_ok =
            hypothesis.then(|| Rational::from_integer(outcome.envelope.len() as i64) <= envelope_bound(code, &error, self.epsilon));
        Ok(TrialReport {
            trial,
            seed: self.cfg.trial_seed,
            n: code.n(),
            m: code.m(),
            delta_v: code.delta_v(),
            delta_c: code.delta_c(),
            audited_left: self.left.clone(),
            audited_right: self.right.clone(),
            epsilon: self.epsilon,
            weight,
            rejected_draws,
            covered: error.is_subset(&outcome.envelope),
            syndrome_size: sigma.len(),
            envelope_size: outcome.envelope.len(),
            iterations: outcome.trace.len(),
            seeded_generators: outcome.stats.seeded_generators,
            status: verdict.status,
            coset_equivalent: verdict.coset_equivalent == Some(true),
            rows_touched: verdict.rows_touched,
            hypothesis,
            envelope_bound_ok,
            invariants,
            error,
            wall: start.elapsed(),
        })
    }
}

/// Runs a campaign. Trials run on a worker pool sized by [`WORKERS_ENV`]
/// (or the machine) and come back ordered by trial index.
pub fn montecarlo(cfg: &CampaignConfig) -> Result<CampaignReport, HarnessError> {
    cfg.validate()?;
    let graph = gen_biregular(cfg.n, cfg.delta_v, cfg.delta_c, cfg.graph_seed)?;
    let code = HgpCode::new(graph);
    montecarlo_on(cfg, &code)
}

/// Same as [`montecarlo`] on an already built code; the graph fields of the
/// config are only echoed.
pub fn montecarlo_on(cfg: &CampaignConfig, code: &HgpCode) -> Result<CampaignReport, HarnessError> {
    cfg.validate()?;
    if cfg.reduction == ReductionMode::Exact && code.num_generators() > EXACT_MAX_GENERATORS {
        return Err(HarnessError::Config(format!(
            "exact reduction needs at most {EXACT_MAX_GENERATORS} generators, code has {}",
            code.num_generators()
        )));
    }
    if let Some(&w) = cfg.weights.iter().find(|&&w| w > code.num_qubits()) {
        return Err(HarnessError::Config(format!("weight {w} exceeds the {} qubits", code.num_qubits())));
    }
    let (epsilon, audit) = resolve_epsilon(code.graph(), cfg.epsilon)?;
    let (left, right): (Arc<[Rational]>, Arc<[Rational]>) = match &audit {
        Some(a) => (a.left.worst_epsilon_by_size.clone().into(), a.right.worst_epsilon_by_size.clone().into()),
        None => (Arc::from(Vec::new()), Arc::from(Vec::new())),
    };
    let campaign = Campaign {
        cfg,
        code,
        epsilon,
        audit: audit.as_ref(),
        left,
        right,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers_from_env()? {
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| HarnessError::Pool(e.to_string()))?;
    let trials = pool.install(|| (0..cfg.trials).into_par_iter().map(|t| campaign.run_trial(t)).collect::<Result<Vec<_>, _>>())?;
    Ok(CampaignReport {
        config: cfg.clone(),
        num_qubits: code.num_qubits(),
        logical_qubits: code.k(),
        epsilon,
        audit,
        trials,
    })
}

// ---- single decode --------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DecodeOnce {
    pub code: HgpCode,
    pub epsilon: Rational,
    pub error: QubitSet,
    pub syndrome: CheckSet,
    pub outcome: SsfindOutcome,
    pub verdict: DecodeVerdict,
}

impl DecodeOnce {
    pub fn covered(&self) -> bool {
        self.error.is_subset(&self.outcome.envelope)
    }

    pub fn render_verdict(&self) -> String {
        format!(
            "status={}\ncoset_equivalent={}\ncovered={}\nepsilon={}\nerror={}\nsyndrome={}\nenvelope={}\niterations={}\nrows_touched={}\n",
            self.verdict.status,
            self.verdict.coset_equivalent.map_or("unknown".to_string(), |b| b.to_string()),
            self.covered(),
            self.epsilon,
            self.error.len(),
            self.syndrome.len(),
            self.outcome.envelope.len(),
            self.outcome.trace.len(),
            self.verdict.rows_touched
        )
    }
}

/// Decodes the error in `error_text` on the code of `graph_text`.
pub fn decode_text(graph_text: &str, error_text: &str, epsilon: EpsilonChoice, verify_cache: bool) -> Result<DecodeOnce, HarnessError> {
    let code = HgpCode::new(io::parse_graph(graph_text)?);
    let error = io::parse_qubits(error_text, Some(&code))?;
    let (epsilon, _) = resolve_epsilon(code.graph(), epsilon)?;
    let syndrome = code.syndrome(&error);
    let outcome = ssfind(&code, &syndrome, &DecoderConfig::new(epsilon).with_verify_cache(verify_cache))?;
    let verdict = erase_decode_quantum(&code, &syndrome, &outcome.envelope)?.judge(&code, &error);
    Ok(DecodeOnce {
        code,
        epsilon,
        error,
        syndrome,
        outcome,
        verdict,
    })
}

/// Reads the two files, decodes, and writes `envelope.txt`, `trace.txt`
/// and `verdict.txt` into `out_dir` when given.
pub fn decode_once(
    graph_path: &Path,
    error_path: &Path,
    epsilon: EpsilonChoice,
    verify_cache: bool,
    out_dir: Option<&Path>,
) -> Result<DecodeOnce, HarnessError> {
    let d = decode_text(&read_file(graph_path)?, &read_file(error_path)?, epsilon, verify_cache)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        write_file(&dir.join("envelope.txt"), &io::write_qubits(&d.outcome.envelope))?;
        write_file(&dir.join("trace.txt"), &io::write_trace(&d.outcome.trace))?;
        write_file(&dir.join("verdict.txt"), &d.render_verdict())?;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_parse() {
        assert_eq!(parse_rational("1/20").unwrap(), Rational::new(1, 20));
        assert_eq!(parse_rational("0.05").unwrap(), Rational::new(1, 20));
        assert_eq!(parse_rational("2").unwrap(), Rational::from_integer(2));
        assert_eq!(parse_rational("-.5").unwrap(), Rational::new(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn radius_rows() {
        let rows = radius_table(Rational::new(1, 2), Rational::new(1, 20), 6).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].exact, Some(Rational::new(1, 21)));
        assert_eq!(rows[2].exact, Some(Rational::new(1, 16)));
        assert!(rows.iter().all(|r| r.valid));
        // 2r(1-8ε) = 3/5, so the rational factor is (3/5)/(23/5)·(1/2) = 3/46.
        let expected = 3.0 / 46.0 / (1.25f64).sqrt();
        assert!((rows[1].coefficient - expected).abs() < 1e-15);
        let text = render_radius_table(&rows);
        assert!(text.contains("0.062500"));
        assert!(text.contains("0.047619"));

        let rows = radius_table(Rational::new(1, 2), Rational::new(1, 8), 6).unwrap();
        assert_eq!(rows.iter().map(|r| r.valid).collect::<Vec<_>>(), vec![true, false, false]);
        assert!(radius_table(Rational::from_integer(0), Rational::new(1, 20), 6).is_err());
        assert!(radius_table(Rational::new(1, 2), Rational::new(-1, 20), 6).is_err());
    }

    #[test]
    fn config_round_trip_and_errors() {
        let text = "graph_seed=1\nn=60\ndelta_v=3\ndelta_c=6 # comment\nweights=1-3\ntrials=12\nepsilon=audit\ns_max=3\n";
        let cfg = CampaignConfig::parse(text).unwrap();
        assert_eq!(cfg.weights, vec![1, 2, 3]);
        assert_eq!(cfg.epsilon, EpsilonChoice::Audited { s_max: 3 });
        assert_eq!(CampaignConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert!(matches!(CampaignConfig::parse("n=60\n"), Err(HarnessError::Config(_))));
        assert!(matches!(
            CampaignConfig::parse("graph_seed=1\nn=6\ndelta_v=3\ndelta_c=6\nbogus=1\n"),
            Err(HarnessError::ConfigLine { line: 5, .. })
        ));
        assert!(matches!(
            CampaignConfig::parse("graph_seed=1\nn=6\ndelta_v=3\ndelta_c=6\nweights=3-1\n"),
            Err(HarnessError::ConfigLine { line: 5, .. })
        ));
        assert!(CampaignConfig::parse("graph_seed=1\nn=6\ndelta_v=3\ndelta_c=6\nepsilon=1/20\ns_max=2\n").is_err());
    }

    #[test]
    fn weights_parse() {
        assert_eq!(parse_weights("0,2-4").unwrap(), vec![0, 2, 3, 4]);
        assert!(parse_weights("").is_err());
        assert!(parse_weights("x").is_err());
    }

    #[test]
    fn trial_streams_are_independent_of_order() {
        use rand::RngCore;
        let a = trial_rng(5, 3).next_u64();
        let _ = trial_rng(5, 2).next_u64();
        assert_eq!(trial_rng(5, 3).next_u64(), a);
        assert_ne!(trial_rng(5, 4).next_u64(), a);
    }

    #[test]
    fn weight_zero_campaign_always_succeeds() {
        let mut cfg = CampaignConfig::new(1, 12, 3, 6);
        cfg.weights = vec![0];
        cfg.trials = 5;
        cfg.epsilon = EpsilonChoice::Fixed(Rational::new(1, 20));
        let rep = montecarlo(&cfg).unwrap();
        assert!(rep.all_recovered());
        assert!(rep.trials.iter().all(|t| t.envelope_size == 0));
        assert_eq!(rep.summary()[0].success_rate(), 1.0);
    }

    #[test]
    fn campaigns_are_reproducible() {
        let mut cfg = CampaignConfig::new(2, 24, 3, 6);
        cfg.weights = vec![1, 2];
        cfg.trials = 8;
        cfg.epsilon = EpsilonChoice::Fixed(Rational::new(1, 20));
        cfg.check_invariants = true;
        let a = montecarlo(&cfg).unwrap();
        let b = montecarlo(&cfg).unwrap();
        assert_eq!(a.render(), b.render());
        // A single trial recomputed alone matches its campaign entry.
        let code = HgpCode::new(gen_biregular(24, 3, 6, 2).unwrap());
        let mut rng = trial_rng(cfg.trial_seed, 5);
        let (e, _) = sample_reduced_error(&code, &mut rng, 2, ReductionMode::Greedy, 1000).unwrap().unwrap();
        assert_eq!(a.trials[5].error, e);
        assert!(a.trials.iter().all(|t| t.invariants == Some(Ok(()))));
    }

    #[test]
    fn exact_reduction_is_rejected_on_large_codes() {
        let mut cfg = CampaignConfig::new(1, 12, 3, 6);
        cfg.reduction = ReductionMode::Exact;
        assert!(matches!(montecarlo(&cfg), Err(HarnessError::Config(_))));
    }

    #[test]
    fn decode_text_examples() {
        let graph = io::write_graph(&gen_biregular(24, 3, 6, 1).unwrap());
        let d = decode_text(&graph, "VV 3 5\nCC 2 7\n", EpsilonChoice::Fixed(Rational::new(1, 20)), true).unwrap();
        assert!(d.covered());
        assert_eq!(d.verdict.status, DecodeStatus::Success);
        assert_eq!(d.verdict.coset_equivalent, Some(true));
        // On the path-graph code the envelope {(v0,v0),(v0,v1)} is itself a
        // logical operator, so the solve is flagged even though it lands in
        // the right coset.
        let path_graph = "2 1 1 2\n0\n0\n";
        let d = decode_text(path_graph, "VV 0 0\n", EpsilonChoice::Fixed(Rational::new(1, 20)), true).unwrap();
        assert!(d.covered());
        assert_eq!(io::write_qubits(&d.outcome.envelope), "VV 0 0\nVV 0 1\n");
        assert_eq!(d.verdict.status, DecodeStatus::AmbiguousLogical);
        assert_eq!(d.verdict.coset_equivalent, Some(true));
        let d = decode_text(path_graph, "", EpsilonChoice::Fixed(Rational::new(1, 20)), true).unwrap();
        assert!(d.outcome.envelope.is_empty());
        assert_eq!(d.verdict.status, DecodeStatus::Success);
        let err = decode_text(path_graph, "VV 0 0\nVV zero 1\n", EpsilonChoice::Fixed(Rational::new(1, 20)), true).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
