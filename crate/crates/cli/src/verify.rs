//! Exact-identity verification suite behind `ldgap verify`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ldgap_core::cumulant::finite::{indicator_vars, joint_cumulant, label_space, total_cumulance};
use ldgap_core::cumulant::{
    count_admissible, explicit_bound_coeff, fubini_bound, fubini_number, nullity_predicate, standard_mobius,
    CumulantEngine, MultiIndex,
};
use ldgap_core::metrics::{check_loss_inequality, mtog_sides};
use ldgap_core::rng::rng_from_seed;
use ldgap_core::{ModelKind, ModelSpec, Partition};
use num_rational::Rational64;
use rand::Rng;

use crate::error::HarnessResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

impl Level {
    pub fn max_degree(self) -> u32 {
        match self {
            Level::Fast => 4,
            Level::Full => 6,
        }
    }

    fn random_pairs(self) -> usize {
        match self {
            Level::Fast => 200,
            Level::Full => 1000,
        }
    }
}

/// Deliberate faults for mutation testing of the suite itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    MobiusSign,
}

/// One family of identities: e.g. every α on one spec for one property.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub id: String,
    pub passed: bool,
    pub checked: usize,
    /// Exact values of the first failure, or a short summary.
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn identities(&self) -> usize {
        self.checks.iter().map(|c| c.checked).sum()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.checks.iter().map(|c| c.id.as_str()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.id == id)
    }

    /// Checks whose id starts with `prefix`.
    pub fn family(&self, prefix: &str) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| c.id.starts_with(prefix)).collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{tag} {} checked={} {}", c.id, c.checked, c.detail);
        }
        let _ = writeln!(
            out,
            "summary: {} identities in {} checks, {} failed",
            self.identities(),
            self.checks.len(),
            self.checks.iter().filter(|c| !c.passed).count()
        );
        out
    }
}

/// Specs on the oracle grid: n ≤ 4, p ≤ 3, K ∈ {2,3}, L ∈ {2,3}, ρ ∈ {1/2,1/3}.
pub fn oracle_specs() -> Vec<ModelSpec> {
    let mut out = Vec::new();
    for n in 2..=4 {
        for p in 1..=3 {
            for k in [2, 3] {
                out.push(ModelSpec::clustering(n, p, k));
                for rho in [Rational64::new(1, 2), Rational64::new(1, 3)] {
                    out.push(ModelSpec::sparse(n, p, k, rho));
                }
                for l in [2, 3] {
                    out.push(ModelSpec::biclustering(n, p, k, l));
                }
            }
        }
    }
    out.retain(|s| s.validate().is_ok());
    out
}

pub fn spec_label(spec: &ModelSpec) -> String {
    let mut s = format!("{}/n{}p{}K{}", spec.kind.name(), spec.n, spec.p, spec.k);
    match spec.kind {
        ModelKind::SparseClustering => {
            let _ = write!(s, "rho{}", spec.rho);
        }
        ModelKind::Biclustering => {
            let _ = write!(s, "L{}", spec.l);
        }
        ModelKind::Clustering => {}
    }
    s
}

struct Tally {
    id: String,
    checked: usize,
    failure: Option<String>,
}

impl Tally {
    fn new(id: String) -> Self {
        Tally {
            id,
            checked: 0,
            failure: None,
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(detail());
        }
    }

    fn finish(self, summary: impl Into<String>) -> CheckResult {
        let passed = self.failure.is_none();
        CheckResult {
            id: self.id,
            passed,
            checked: self.checked,
            detail: self.failure.unwrap_or_else(|| summary.into()),
        }
    }
}

fn error_check(id: String, e: impl std::fmt::Display) -> CheckResult {
    CheckResult {
        id,
        passed: false,
        checked: 1,
        detail: format!("error: {e}"),
    }
}

/// Oracle equivalence, nullity soundness and (clustering) the explicit bound
/// for every nonzero α with |α| ≤ `max_degree` on one spec. Also returns the
/// number of unflagged α with κ ≠ 0.
pub fn cumulant_checks(spec: &ModelSpec, max_degree: u32, fault: Option<Fault>) -> (Vec<CheckResult>, usize) {
    let label = spec_label(spec);
    let mut eng = CumulantEngine::new(spec);
    if fault == Some(Fault::MobiusSign) {
        eng = eng.with_mobius(|b| -standard_mobius(b));
    }
    let mut oracle = Tally::new(format!("oracle/{label}"));
    let mut nullity = Tally::new(format!("nullity/{label}"));
    let mut bound = Tally::new(format!("bound/{label}"));
    let mut witnesses = 0usize;
    for alpha in MultiIndex::all_up_to(spec.n, spec.p, max_degree) {
        if alpha.is_zero() {
            continue;
        }
        let (brute, cond) = match (eng.bruteforce(true, &alpha), eng.conditioned(&alpha)) {
            (Ok(b), Ok(c)) => (b, c),
            (Err(e), _) | (_, Err(e)) => return (vec![error_check(oracle.id, format!("α={alpha}: {e}"))], 0),
        };
        oracle.record(brute == cond || (brute.is_zero() && cond.is_zero()), || {
            format!("α={alpha} brute={brute} conditioned={cond}")
        });
        if nullity_predicate(spec.kind, &alpha) {
            nullity.record(brute.is_zero(), || format!("flagged α={alpha} has κ={brute}"));
        } else if !brute.is_zero() {
            witnesses += 1;
        }
        if spec.kind == ModelKind::Clustering {
            match explicit_bound_coeff(&alpha, spec.k) {
                Ok(b) => bound.record(brute.abs().coeff <= b, || {
                    format!("α={alpha} |κ|={} bound={b}", brute.abs())
                }),
                Err(e) => bound.record(false, || format!("α={alpha}: {e}")),
            }
        }
    }
    let oracle_checked = oracle.checked;
    let mut out = vec![
        oracle.finish(format!("{oracle_checked} exact matches")),
        nullity.finish(format!("{witnesses} unflagged nonzero witnesses")),
    ];
    if spec.kind == ModelKind::Clustering {
        out.push(bound.finish("exact rational comparison"));
    }
    (out, witnesses)
}

/// Non-vacuity: at least one unflagged α with κ ≠ 0 per model kind.
fn non_vacuity(per_spec: &BTreeMap<ModelKind, usize>, max_degree: u32) -> Vec<CheckResult> {
    [
        ModelKind::Clustering,
        ModelKind::SparseClustering,
        ModelKind::Biclustering,
    ]
    .into_iter()
    .map(|kind| {
        let w = per_spec.get(&kind).copied().unwrap_or(0);
        CheckResult {
            id: format!("nonvacuity/{}", kind.name()),
            passed: w > 0,
            checked: 1,
            detail: format!("{w} unflagged α with κ≠0 up to degree {max_degree}"),
        }
    })
    .collect()
}

/// Admissible counts never exceed the counting bound for d ≤ `max_degree`.
pub fn counting_checks(max_degree: u32) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for n in 2..=4 {
        for p in 1..=3 {
            let mut t = Tally::new(format!("counting/n{n}p{p}"));
            let mut total = 0u64;
            for d in 1..=max_degree {
                for m in 1..=n {
                    for r in 1..=p {
                        match count_admissible(d, m, r, n, p) {
                            Ok(c) => {
                                total += c.count;
                                t.record(c.within_bound(), || {
                                    format!("d={d} m={m} r={r} count={} bound={}", c.count, c.bound)
                                });
                            }
                            Err(e) => t.record(false, || format!("d={d} m={m} r={r}: {e}")),
                        }
                    }
                }
            }
            out.push(t.finish(format!("{total} admissible α counted")));
        }
    }
    out
}

pub const FUBINI_TABLE: [u64; 7] = [1, 1, 3, 13, 75, 541, 4683];

pub fn fubini_checks() -> Vec<CheckResult> {
    let mut values = Tally::new("fubini/values".into());
    for (l, &want) in FUBINI_TABLE.iter().enumerate() {
        match fubini_number(l) {
            Ok(got) => values.record(got == want, || format!("f_{l}={got}, expected {want}")),
            Err(e) => values.record(false, || format!("f_{l}: {e}")),
        }
    }
    let mut bound = Tally::new("fubini/bound".into());
    for l in 0..=12 {
        match fubini_number(l) {
            Ok(f) => bound.record(f <= fubini_bound(l), || format!("f_{l}={f} > {}", fubini_bound(l))),
            Err(e) => bound.record(false, || format!("f_{l}: {e}")),
        }
    }
    vec![values.finish("f_0..f_6 match"), bound.finish("l ≤ 12")]
}

fn random_balanced<R: Rng>(rng: &mut R, n: usize, k: usize) -> Partition {
    loop {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let p = Partition::from_labels(labels, k).expect("labels in range");
        if p.nonempty_groups() == k {
            return p;
        }
    }
}

/// Randomized partnership identities on pairs with n ≤ 12.
pub fn partition_checks(pairs: usize, seed: u64) -> Vec<CheckResult> {
    let mut rng = rng_from_seed(seed);
    let mut mtog = Tally::new("partnership/mtog".into());
    let mut loss = Tally::new("partnership/loss".into());
    for _ in 0..pairs {
        let k = rng.random_range(2..=4usize);
        let n = rng.random_range(k.max(4)..=12usize);
        let a = random_balanced(&mut rng, n, k);
        let b = random_balanced(&mut rng, n, k);
        match mtog_sides(&a, &b) {
            Ok((l, r)) => mtog.record(l <= r, || format!("{:?} vs {:?}: {l} > {r}", a.labels(), b.labels())),
            Err(e) => mtog.record(false, || e.to_string()),
        }
        match check_loss_inequality(&a, &b) {
            Ok(c) => loss.record(c.holds, || {
                format!("{:?} vs {:?}: slack {}", a.labels(), b.labels(), c.slack)
            }),
            Err(e) => loss.record(false, || e.to_string()),
        }
    }
    vec![mtog.finish("random pairs"), loss.finish("random pairs")]
}

/// Law of total cumulance on indicator variables, conditioning on one label.
pub fn total_cumulance_checks(k: usize) -> Vec<CheckResult> {
    let mut t = Tally::new(format!("total-cumulance/K{k}"));
    let families: [&[(usize, usize)]; 4] = [
        &[(0, 1), (1, 2)],
        &[(0, 1), (0, 2), (1, 2)],
        &[(0, 1), (1, 2), (2, 0), (0, 1)],
        &[(0, 1), (0, 1), (0, 1)],
    ];
    for pairs in families {
        let vars = indicator_vars(k, pairs);
        let m = pairs.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
        let z: Vec<usize> = label_space(k, m).iter().map(|w| w[0]).collect();
        match (joint_cumulant(&vars), total_cumulance(&vars, &z)) {
            (Ok(a), Ok(b)) => t.record(a == b, || format!("{pairs:?}: direct={a} total={b}")),
            (Err(e), _) | (_, Err(e)) => t.record(false, || e.to_string()),
        }
    }
    vec![t.finish("exact")]
}

/// The pruned brute-force route matches the literal partition-lattice sum.
pub fn pruning_checks(max_degree: u32) -> Vec<CheckResult> {
    let d = max_degree.min(4);
    let mut out = Vec::new();
    for spec in [
        ModelSpec::clustering(2, 2, 2),
        ModelSpec::sparse(3, 1, 2, Rational64::new(1, 2)),
        ModelSpec::biclustering(2, 2, 2, 2),
    ] {
        let mut eng = CumulantEngine::new(&spec);
        let mut t = Tally::new(format!("pruning/{}", spec_label(&spec)));
        for alpha in MultiIndex::all_up_to(spec.n, spec.p, d) {
            if alpha.is_zero() {
                continue;
            }
            match (eng.bruteforce(true, &alpha), eng.bruteforce_literal(true, &alpha)) {
                (Ok(a), Ok(b)) => t.record(a.coeff == b.coeff, || format!("α={alpha}: pruned={a} literal={b}")),
                (Err(e), _) | (_, Err(e)) => t.record(false, || e.to_string()),
            }
        }
        out.push(t.finish("exact"));
    }
    out
}

/// Runs the suite. The report lists every family; the caller decides the exit code.
pub fn run_verify(level: Level, fault: Option<Fault>) -> HarnessResult<VerifyReport> {
    let dmax = level.max_degree();
    let mut checks = Vec::new();
    let mut witnesses: BTreeMap<ModelKind, usize> = BTreeMap::new();
    for spec in oracle_specs() {
        let (res, w) = cumulant_checks(&spec, dmax, fault);
        *witnesses.entry(spec.kind).or_default() += w;
        checks.extend(res);
    }
    checks.extend(non_vacuity(&witnesses, dmax));
    checks.extend(counting_checks(dmax));
    checks.extend(fubini_checks());
    checks.extend(partition_checks(level.random_pairs(), 0x5EED_0001));
    for k in [2, 3] {
        checks.extend(total_cumulance_checks(k));
    }
    checks.extend(pruning_checks(dmax));
    Ok(VerifyReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_covers_all_kinds() {
        let specs = oracle_specs();
        for kind in [
            ModelKind::Clustering,
            ModelKind::SparseClustering,
            ModelKind::Biclustering,
        ] {
            assert!(specs.iter().any(|s| s.kind == kind));
        }
        assert!(specs.iter().all(|s| s.n <= 4 && s.p <= 3));
    }

    #[test]
    fn small_spec_passes_and_fault_fails() {
        let spec = ModelSpec::clustering(2, 1, 2);
        assert!(cumulant_checks(&spec, 3, None).0.iter().all(|c| c.passed));
        let (bad, _) = cumulant_checks(&spec, 3, Some(Fault::MobiusSign));
        assert!(bad.iter().any(|c| !c.passed));
    }

    #[test]
    fn side_checks_pass() {
        assert!(fubini_checks().iter().all(|c| c.passed));
        assert!(partition_checks(50, 1).iter().all(|c| c.passed));
        assert!(total_cumulance_checks(2).iter().all(|c| c.passed));
        assert!(counting_checks(3).iter().all(|c| c.passed));
    }
}
