//! Deterministic randomized verification campaigns.
//!
//! A campaign sweeps cells `(prime, dim, operator class)`, generates
//! `trials_per_cell` instances per cell, runs the applicable checks and
//! aggregates the verdicts. Each instance is drawn from its own ChaCha8
//! stream whose seed is a SplitMix64 hash of `(seed, prime, dim, class,
//! trial)`, so any instance can be regenerated from its descriptor alone
//! and the report does not depend on scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::Prime;
use crate::operator::{GeometricRule, Matrix, POperator};
use crate::space::{self, PVector};
use crate::uncertainty::{CheckError, CheckId, Instance, Verdict};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorClass {
    /// Symmetric dense matrices, hence self-adjoint.
    Symmetric,
    /// Unconstrained dense matrices.
    General,
    /// Diagonal operators on `c0` with unbounded entry rules.
    C0Diagonal,
}

impl OperatorClass {
    pub const ALL: [OperatorClass; 3] =
        [OperatorClass::Symmetric, OperatorClass::General, OperatorClass::C0Diagonal];

    pub fn name(self) -> &'static str {
        match self {
            OperatorClass::Symmetric => "symmetric",
            OperatorClass::General => "general",
            OperatorClass::C0Diagonal => "c0_diagonal",
        }
    }

    pub fn is_selfadjoint(self) -> bool {
        !matches!(self, OperatorClass::General)
    }
}

impl fmt::Display for OperatorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for OperatorClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OperatorClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown operator class {s:?}"))
    }
}

/// Which checks a campaign dispatches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Every inequality and identity whose hypotheses the class meets.
    #[default]
    Full,
    /// Only the expansion identity and the self-adjoint notes.
    Identity,
}

impl Suite {
    pub fn checks(self, class: OperatorClass) -> Vec<CheckId> {
        let candidates: &[CheckId] = match self {
            Suite::Full => &CheckId::ALL,
            Suite::Identity => &[CheckId::IdentII, CheckId::NoteCommZero, CheckId::NoteAnticommDouble],
        };
        candidates.iter().copied().filter(|c| class.is_selfadjoint() || !c.requires_selfadjoint()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub primes: Vec<Prime>,
    pub dims: Vec<usize>,
    pub trials_per_cell: usize,
    pub size_bound: u64,
    pub operator_classes: Vec<OperatorClass>,
    pub witnesses_per_instance: usize,
    pub seed: u64,
    #[serde(default)]
    pub suite: Suite,
    /// Judge every verdict with its comparison reversed (harness self-test).
    #[serde(default)]
    pub mutate: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            primes: [2, 3, 5, 7].map(|p| Prime::new(p).expect("prime")).to_vec(),
            dims: vec![2, 3, 4],
            trials_per_cell: 50,
            size_bound: 16,
            operator_classes: OperatorClass::ALL.to_vec(),
            witnesses_per_instance: 4,
            seed: 42,
            suite: Suite::Full,
            mutate: false,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.primes.is_empty() {
            return Err(invalid("primes", "at least one prime is required"));
        }
        if self.dims.is_empty() {
            return Err(invalid("dims", "at least one dimension is required"));
        }
        if let Some(d) = self.dims.iter().find(|d| !(MIN_DIM..=MAX_DIM).contains(*d)) {
            return Err(invalid("dims", format!("{d} is outside {MIN_DIM}..={MAX_DIM}")));
        }
        if self.trials_per_cell == 0 {
            return Err(invalid("trials_per_cell", "must be at least 1"));
        }
        if self.size_bound == 0 {
            return Err(invalid("size_bound", "must be at least 1"));
        }
        if self.operator_classes.is_empty() {
            return Err(invalid("operator_classes", "at least one class is required"));
        }
        if self.witnesses_per_instance == 0 {
            return Err(invalid("witnesses_per_instance", "must be at least 1"));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &p in &self.primes {
            for &dim in &self.dims {
                for &class in &self.operator_classes {
                    cells.push(Cell { p, dim, class });
                }
            }
        }
        cells
    }

    /// Instance `trial` of `cell`; a pure function of `(cell, trial, seed)`
    /// and the size parameters.
    pub fn generate_instance(&self, cell: Cell, trial: u64) -> Instance {
        generate_instance(cell, trial, self.seed, self.size_bound, self.witnesses_per_instance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub p: Prime,
    pub dim: usize,
    pub class: OperatorClass,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_seed(seed: u64, cell: Cell, trial: u64) -> u64 {
    let class = OperatorClass::ALL.iter().position(|c| *c == cell.class).unwrap() as u64;
    [cell.p.get(), cell.dim as u64, class, trial].into_iter().fold(splitmix64(seed), |h, w| splitmix64(h ^ w))
}

/// Human-readable reproduction descriptor.
pub fn descriptor(seed: u64, cell: Cell, trial: u64) -> String {
    format!("seed={seed};p={};dim={};class={};trial={trial}", cell.p, cell.dim, cell.class)
}

fn random_matrix<R: Rng>(rng: &mut R, p: Prime, d: usize, bound: u64, symmetric: bool) -> POperator {
    let mut m = Matrix::from_fn(d, |_, _| space::random_rational(rng, p, bound));
    if symmetric {
        let upper = m.clone();
        m = Matrix::from_fn(d, |i, j| upper.get(i.min(j), i.max(j)).clone());
    }
    POperator::dense(p, m)
}

/// One or two geometric terms, at least one with a negative rate so the
/// entries are unbounded, plus random overrides on part of the support.
fn random_diagonal<R: Rng>(rng: &mut R, p: Prime, support: &[usize], bound: u64) -> POperator {
    let nonzero = |rng: &mut R| loop {
        let c = space::random_rational(rng, p, bound);
        if !c.is_zero() {
            return c;
        }
    };
    let mut rule = GeometricRule::term(nonzero(rng), -rng.random_range(1..=2));
    if rng.random_bool(0.5) {
        rule = rule.add(&GeometricRule::term(nonzero(rng), rng.random_range(0..=2)));
    }
    let mut entries = BTreeMap::new();
    for &n in support {
        if rng.random_bool(0.3) {
            entries.insert(n, space::random_rational(rng, p, bound));
        }
    }
    POperator::diagonal(p, entries, rule)
}

pub fn generate_instance(cell: Cell, trial: u64, seed: u64, size_bound: u64, witnesses: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, cell, trial));
    let (p, d) = (cell.p, cell.dim);
    let (a, b, x) = match cell.class {
        OperatorClass::Symmetric | OperatorClass::General => {
            let symmetric = cell.class == OperatorClass::Symmetric;
            let a = random_matrix(&mut rng, p, d, size_bound, symmetric);
            let b = random_matrix(&mut rng, p, d, size_bound, symmetric);
            let x = space::sample_normalized(p, d, &mut rng, size_bound).expect("d ≥ 2");
            (a, b, x)
        }
        OperatorClass::C0Diagonal => {
            let mut support = index::sample(&mut rng, 3 * d, d).into_vec();
            support.sort_unstable();
            let a = random_diagonal(&mut rng, p, &support, size_bound);
            let b = random_diagonal(&mut rng, p, &support, size_bound);
            let x = space::sample_normalized_c0(p, &support, &mut rng, size_bound).expect("d ≥ 2");
            (a, b, x)
        }
    };
    // The first witness is forced to zero whenever there is room for random ones too.
    let forced_zero = usize::from(witnesses >= 2);
    let mut ys = vec![PVector::zero(p, x.dim()); forced_zero];
    for _ in forced_zero..witnesses {
        ys.push(space::orthogonal_witness(&x, &mut rng, size_bound).expect("x is normalized"));
    }
    Instance { p, x, a, b, witnesses: ys, checks: None }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub passed: u64,
    pub failed: u64,
    pub tight: u64,
    pub degenerate: u64,
}

impl Totals {
    fn record(&mut self, v: &Verdict) {
        if v.holds {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        self.tight += u64::from(v.tight);
        self.degenerate += u64::from(v.degenerate);
    }

    pub fn merge(&mut self, other: &Totals) {
        self.passed += other.passed;
        self.failed += other.failed;
        self.tight += other.tight;
        self.degenerate += other.degenerate;
    }

    pub fn total(&self) -> u64 {
        self.passed + self.failed
    }

    pub fn nondegenerate(&self) -> u64 {
        self.total() - self.degenerate
    }
}

/// Totals of one check within one cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellTotals {
    pub check: CheckId,
    pub prime: Prime,
    pub dim: usize,
    pub class: OperatorClass,
    #[serde(flatten)]
    pub totals: Totals,
}

/// A failed verdict with everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub cell: Cell,
    pub trial: u64,
    pub verdict: Verdict,
    /// Restricted to the failing check (and witness, for MP checks).
    pub instance: Instance,
    pub mutate: bool,
}

impl Failure {
    /// Re-evaluates the stored instance the same way the campaign did.
    pub fn recheck(&self) -> Result<Vec<Verdict>, CheckError> {
        let verdicts = self.instance.evaluate()?;
        Ok(if self.mutate { verdicts.iter().map(Verdict::reversed).collect() } else { verdicts })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub config: CampaignConfig,
    pub totals: BTreeMap<CheckId, Totals>,
    pub cells: Vec<CellTotals>,
    pub failed: u64,
    pub failures: Vec<Failure>,
    pub wall_time_ms: u64,
}

impl CampaignReport {
    fn empty(config: CampaignConfig) -> Self {
        CampaignReport {
            config,
            totals: BTreeMap::new(),
            cells: Vec::new(),
            failed: 0,
            failures: Vec::new(),
            wall_time_ms: 0,
        }
    }

    pub fn totals_for(&self, check: CheckId) -> Totals {
        self.totals.get(&check).copied().unwrap_or_default()
    }

    /// Cells and checks with fewer than `min` non-degenerate verdicts.
    pub fn coverage_gaps(&self, min: u64) -> Vec<&CellTotals> {
        self.cells.iter().filter(|c| c.totals.nondegenerate() < min).collect()
    }
}

struct TrialOutcome {
    totals: BTreeMap<CheckId, Totals>,
    failures: Vec<Failure>,
}

fn run_trial(config: &CampaignConfig, cell: Cell, trial: u64) -> TrialOutcome {
    let instance = config.generate_instance(cell, trial);
    let mut totals: BTreeMap<CheckId, Totals> = BTreeMap::new();
    let mut failures = Vec::new();
    for check in config.suite.checks(cell.class) {
        let verdicts = instance
            .run(check)
            .unwrap_or_else(|e| panic!("generated instance violates a hypothesis of {check}: {e}"));
        for (idx, v) in verdicts.into_iter().enumerate() {
            let v = if config.mutate { v.reversed() } else { v };
            totals.entry(check).or_default().record(&v);
            if !v.holds {
                let mut tag = descriptor(config.seed, cell, trial);
                let witnesses = if check.needs_witness() {
                    tag.push_str(&format!(";witness={idx}"));
                    vec![instance.witnesses[idx].clone()]
                } else {
                    Vec::new()
                };
                let repro = Instance { witnesses, checks: Some(vec![check]), ..instance.clone() };
                failures.push(Failure {
                    cell,
                    trial,
                    verdict: v.with_seed(tag),
                    instance: repro,
                    mutate: config.mutate,
                });
            }
        }
    }
    TrialOutcome { totals, failures }
}

/// Runs every cell of the campaign. Trials run on the current rayon pool;
/// the report is merged in cell/trial order and does not depend on it.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignReport, ConfigError> {
    config.validate()?;
    let start = Instant::now();
    let jobs: Vec<(Cell, u64)> = config
        .cells()
        .into_iter()
        .flat_map(|cell| (0..config.trials_per_cell as u64).map(move |t| (cell, t)))
        .collect();
    let outcomes: Vec<TrialOutcome> =
        jobs.par_iter().map(|&(cell, trial)| run_trial(config, cell, trial)).collect();

    let mut report = CampaignReport::empty(config.clone());
    let mut per_cell: BTreeMap<(Cell, CheckId), Totals> = BTreeMap::new();
    for ((cell, _), outcome) in jobs.iter().zip(outcomes) {
        for (check, t) in &outcome.totals {
            per_cell.entry((*cell, *check)).or_default().merge(t);
            report.totals.entry(*check).or_default().merge(t);
        }
        report.failures.extend(outcome.failures);
    }
    // rows in configuration order
    for cell in config.cells() {
        for check in config.suite.checks(cell.class) {
            let totals = per_cell.get(&(cell, check)).copied().unwrap_or_default();
            report.cells.push(CellTotals { check, prime: cell.p, dim: cell.dim, class: cell.class, totals });
        }
    }
    report.failed = report.failures.len() as u64;
    report.wall_time_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
    Text,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "text" => Ok(ReportFormat::Text),
            _ => Err(format!("unknown format {s:?} (expected json, csv or text)")),
        }
    }
}

pub const CSV_HEADER: &str = "check,prime,dim,class,passed,failed,tight,degenerate";

pub fn emit_report<W: Write>(report: &CampaignReport, format: ReportFormat, mut out: W) -> io::Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            writeln!(out)
        }
        ReportFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for row in &report.cells {
                let t = &row.totals;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    row.check, row.prime, row.dim, row.class, t.passed, t.failed, t.tight, t.degenerate
                )?;
            }
            Ok(())
        }
        ReportFormat::Text => {
            let c = &report.config;
            writeln!(
                out,
                "campaign seed={} trials/cell={} size_bound={} witnesses={}{}",
                c.seed,
                c.trials_per_cell,
                c.size_bound,
                c.witnesses_per_instance,
                if c.mutate { " [mutated]" } else { "" }
            )?;
            writeln!(
                out,
                "{:<22} {:>9} {:>7} {:>9} {:>11}",
                "check", "passed", "failed", "tight", "degenerate"
            )?;
            for (check, t) in &report.totals {
                writeln!(
                    out,
                    "{:<22} {:>9} {:>7} {:>9} {:>11}",
                    check.name(),
                    t.passed,
                    t.failed,
                    t.tight,
                    t.degenerate
                )?;
            }
            for f in &report.failures {
                writeln!(out, "FAIL {} {}", f.verdict.check, f.verdict.seed)?;
            }
            writeln!(out, "failed: {}", report.failed)?;
            writeln!(out, "wall_time_ms: {}", report.wall_time_ms)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Rational;
    use crate::space::Dim;

    fn small() -> CampaignConfig {
        CampaignConfig {
            primes: vec![Prime::new(3).unwrap()],
            dims: vec![2, 3],
            trials_per_cell: 4,
            witnesses_per_instance: 3,
            ..CampaignConfig::default()
        }
    }

    #[test]
    fn rejects_invalid_configs() {
        let bad = CampaignConfig { trials_per_cell: 0, ..small() };
        assert!(matches!(bad.validate(), Err(ConfigError::Invalid { field: "trials_per_cell", .. })));
        let bad = CampaignConfig { dims: vec![1], ..small() };
        assert!(matches!(bad.validate(), Err(ConfigError::Invalid { field: "dims", .. })));
        let bad = CampaignConfig { dims: vec![17], ..small() };
        assert!(run_campaign(&bad).is_err());
        let json = r#"{"primes":[3],"dims":[2],"trials_per_cell":1,"size_bound":8,
            "operator_classes":["general"],"witnesses_per_instance":1,"seed":1,"bogus":true}"#;
        assert!(serde_json::from_str::<CampaignConfig>(json).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = small();
        for cell in cfg.cells() {
            assert_eq!(cfg.generate_instance(cell, 3), cfg.generate_instance(cell, 3));
            assert_ne!(cfg.generate_instance(cell, 3), cfg.generate_instance(cell, 4));
        }
    }

    #[test]
    fn generated_instances_meet_hypotheses() {
        let cfg = CampaignConfig { witnesses_per_instance: 5, ..small() };
        for cell in cfg.cells() {
            for trial in 0..5 {
                let inst = cfg.generate_instance(cell, trial);
                assert_eq!(inst.x.inner(&inst.x).unwrap(), Rational::one());
                assert_eq!(inst.a.is_selfadjoint(), cell.class.is_selfadjoint());
                assert!(inst.witnesses[0].is_zero());
                for y in &inst.witnesses {
                    assert!(inst.x.inner(y).unwrap().is_zero());
                    assert!(y.norm() <= crate::field::Exponent::ONE);
                }
                if cell.class == OperatorClass::C0Diagonal {
                    assert_eq!(inst.x.dim(), Dim::C0);
                    assert_eq!(inst.x.coords().len(), cell.dim);
                }
            }
        }
    }

    #[test]
    fn small_campaign_is_reproducible() {
        let cfg = small();
        let a = run_campaign(&cfg).unwrap();
        let b = run_campaign(&cfg).unwrap();
        // the max-form bound of HRS_ii is the only one with counterexamples
        assert!(a.failures.iter().all(|f| f.verdict.check == CheckId::HrsII));
        assert_eq!(a.failed, a.totals_for(CheckId::HrsII).failed);
        assert_eq!(CampaignReport { wall_time_ms: 0, ..a.clone() }, CampaignReport { wall_time_ms: 0, ..b });
        assert_eq!(a.totals_for(CheckId::MpPlus).total(), 2 * 3 * 4 * 3);
        // self-adjoint-only checks skip the general class
        assert_eq!(a.totals_for(CheckId::HrsII).total(), 2 * 2 * 4);
    }

    #[test]
    fn mutation_is_detected_and_reproducible() {
        let cfg = CampaignConfig { mutate: true, ..small() };
        let report = run_campaign(&cfg).unwrap();
        assert!(report.failed > 0);
        assert_eq!(report.failed as usize, report.failures.len());
        for f in &report.failures {
            let json = serde_json::to_string(f).unwrap();
            let back: Failure = serde_json::from_str(&json).unwrap();
            let again = back.recheck().unwrap();
            assert_eq!(again.len(), 1);
            assert!(!again[0].holds);
            assert_eq!(again[0].lhs, f.verdict.lhs);
            assert_eq!(again[0].rhs, f.verdict.rhs);
        }
    }

    #[test]
    fn identity_suite_dispatch() {
        let cfg = CampaignConfig { suite: Suite::Identity, ..small() };
        let report = run_campaign(&cfg).unwrap();
        let checks: Vec<CheckId> = report.totals.keys().copied().collect();
        assert_eq!(checks, vec![CheckId::IdentII, CheckId::NoteCommZero, CheckId::NoteAnticommDouble]);
        assert_eq!(report.failed, 0);
    }

    #[test]
    fn csv_rows() {
        let report = run_campaign(&small()).unwrap();
        let mut buf = Vec::new();
        emit_report(&report, ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.count(), report.cells.len());
    }

    #[test]
    fn empty_report_is_zeroed() {
        let report = CampaignReport::empty(small());
        let mut buf = Vec::new();
        emit_report(&report, ReportFormat::Text, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("failed: 0"));
        assert_eq!(report.totals_for(CheckId::HrsI), Totals::default());
    }
}
