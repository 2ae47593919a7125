//! Self-checks run by `gaugeint check`: randomized invariant suites over the
//! partitioner, kernel sums, residues, the Cantor evaluator and the corpus.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{builtin, builtins, cantor_function, ProblemSpec};
use crate::decomposition::{check_expectations, decompose, DecomposeOptions, Verdict};
use crate::exceptional::ExceptionalSet;
use crate::integrator::{limit_check, proximity_violations, LimitCheckOptions};
use crate::kernel::{delta_f, interval_sum, riemann_sum, Interval};
use crate::partition::{cousin_partition, in_restriction, random_partition, validate, Caps, Gauge, TagPolicy};
use crate::residue::{basic_sum, cantor_level_sums, point_residue, residue_function_profile, ResidueOptions, ResidueStatus};

pub const SUITES: [&str; 7] = [
    "partitions",
    "proximity",
    "additivity",
    "residues",
    "cantor-levels",
    "cantor-evaluator",
    "corpus",
];

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub cases: usize,
    /// At most [`MAX_REPORTED`] messages; `failed` has the full count.
    pub failures: Vec<String>,
    pub failed: usize,
    pub elapsed: Duration,
}

const MAX_REPORTED: usize = 10;

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

impl fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<17} {}  {} cases, {} failed, {:.2}s",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.cases,
            self.failed,
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown suite `{0}`")]
pub struct UnknownSuite(pub String);

struct Tally {
    cases: usize,
    failed: usize,
    failures: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally { cases: 0, failed: 0, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < MAX_REPORTED {
                self.failures.push(what());
            }
        }
    }
}

/// Runs the named suite, or all of them for `"all"`.
pub fn run(name: &str, seed: u64) -> Result<Vec<SuiteOutcome>, UnknownSuite> {
    if name == "all" {
        return Ok(SUITES.iter().map(|s| run_one(s, seed)).collect());
    }
    let suite = SUITES.iter().find(|s| **s == name).ok_or_else(|| UnknownSuite(name.to_string()))?;
    Ok(vec![run_one(suite, seed)])
}

fn run_one(name: &'static str, seed: u64) -> SuiteOutcome {
    let start = Instant::now();
    let mut t = Tally::new();
    match name {
        "partitions" => partitions(&mut t, seed),
        "proximity" => proximity(&mut t, seed),
        "additivity" => additivity(&mut t, seed),
        "residues" => residues(&mut t),
        "cantor-levels" => cantor_levels(&mut t),
        "cantor-evaluator" => cantor_evaluator(&mut t, seed),
        "corpus" => corpus(&mut t, seed),
        _ => unreachable!("suite list and dispatch agree"),
    }
    SuiteOutcome {
        name,
        cases: t.cases,
        failures: t.failures,
        failed: t.failed,
        elapsed: start.elapsed(),
    }
}

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).expect("ordered interval")
}

/// A random exceptional set inside `ambient`.
fn random_set(rng: &mut ChaCha8Rng, ambient: Interval) -> ExceptionalSet {
    match rng.gen_range(0..3) {
        0 => ExceptionalSet::Empty,
        1 => {
            let n = rng.gen_range(1..6);
            let mut pts: Vec<f64> = (0..n)
                .map(|_| rng.gen_range(ambient.lo()..ambient.hi()))
                .filter(|&p| p > ambient.lo())
                .collect();
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            ExceptionalSet::points(pts).expect("sorted finite points")
        }
        _ => ExceptionalSet::cantor(ambient),
    }
}

/// `δ(x) = c₁ + c₂·dist(x, E)` with random coefficients.
fn random_gauge(rng: &mut ChaCha8Rng, e: &ExceptionalSet, len: f64) -> Gauge {
    let c1 = len * 10f64.powf(rng.gen_range(-3.0..-1.0));
    let c2 = rng.gen_range(0.0..0.5);
    let e = e.clone();
    Gauge::new(move |x| {
        let d = e.distance(x);
        c1 + if d.is_finite() { c2 * d } else { 0.0 }
    })
}

fn partitions(t: &mut Tally, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ambients = [Interval::UNIT, iv(-1.0, 1.0), iv(-3.0, 7.5)];
    for case in 0..1000 {
        let ambient = ambients[case % ambients.len()];
        let e = random_set(&mut rng, ambient);
        let gauge = random_gauge(&mut rng, &e, ambient.length());
        let policy = TagPolicy::ALL[rng.gen_range(0..4)];
        let part_seed = rng.gen();
        let built = if case % 2 == 0 {
            random_partition(ambient, &gauge, &e, policy, part_seed, Caps::default())
        } else {
            cousin_partition(ambient, &gauge, &e, policy, Caps::default())
        };
        match built {
            Ok(p) => {
                let v = validate(&p, &ambient, Some(&gauge), policy, &e);
                t.check(v.is_empty(), || {
                    format!("case {case} ({policy}, seed {part_seed}, {e:?}): {}", v[0])
                });
            }
            Err(err) => t.check(false, || format!("case {case}: {err}")),
        }
    }
}

/// Smooth corpus problems: `(name, bound on |F''|)`.
const SMOOTH: [(&str, f64); 3] = [("polynomial", 2.0), ("sine", 1.0), ("abs", 0.0)];

fn proximity(t: &mut Tally, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (name, curvature) in SMOOTH {
        let p = builtin(name).expect("smooth builtin");
        let big_f = p.extended_antiderivative();
        let f = p.extended_derivative();
        for round in 0..50 {
            let delta = p.ambient.length() * 10f64.powf(rng.gen_range(-4.0..-2.0));
            let gauge = Gauge::constant(delta);
            let policy = TagPolicy::ALL[round % 4];
            // an outside tag can sit across the kink of |x| from its cell
            if name == "abs" && policy == TagPolicy::McShane {
                continue;
            }
            let part = random_partition(p.ambient, &gauge, &p.exceptional, policy, rng.gen(), Caps::default())
                .expect("constant gauge partitions");
            // tag and cell lie within δ, so |f(x)|I| - ΔF(I)| <= 2δ·max|F''|·|I|
            let eps = (4.0 * delta * curvature).max(1e-12);
            let bad = proximity_violations(&big_f, &f, &part, &p.exceptional, eps);
            t.check(bad.is_empty(), || {
                format!("{name}: {} pairs break the bound at ε = {eps:e} ({policy})", bad.len())
            });
            // summed over the pairs off E; f_ex vanishes on E tags
            let sum = riemann_sum(&f, &part);
            let off_e: Vec<_> = part.pairs().iter().filter(|q| !in_restriction(q, &p.exceptional)).copied().collect();
            let exact = interval_sum(&big_f, &off_e);
            t.check((sum - exact).abs() <= eps * p.ambient.length() + 1e-12, || {
                format!("{name}: Riemann sum {sum} vs Σ ΔF {exact} off E ({policy})")
            });
        }
    }
    for p in builtins() {
        let opts = LimitCheckOptions {
            eps: 1e-3,
            samples: 1000,
            seed,
            policy: TagPolicy::Henstock,
        };
        let bad = limit_check(&p.extended_antiderivative(), &p.extended_derivative(), p.ambient, &p.exceptional, &opts);
        t.check(bad.is_empty(), || format!("{}: f is not the derivative of F near {:?}", p.name, bad.first()));
    }
}

fn additivity(t: &mut Tally, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in builtins() {
        let big_f = p.extended_antiderivative();
        for _ in 0..40 {
            let gauge = Gauge::constant(p.ambient.length() * 10f64.powf(rng.gen_range(-4.0..-1.0)));
            let policy = TagPolicy::ALL[rng.gen_range(0..4)];
            let part = random_partition(p.ambient, &gauge, &p.exceptional, policy, rng.gen(), Caps::default())
                .expect("constant gauge partitions");
            let sum = interval_sum(&big_f, part.pairs());
            let whole = delta_f(&big_f, &p.ambient);
            let scale = part
                .pairs()
                .iter()
                .flat_map(|q| [big_f.value(q.cell.lo()), big_f.value(q.cell.hi())])
                .fold(0.0f64, |m, v| m.max(v.abs()));
            let bound = part.len() as f64 * 4.0 * ulp(scale);
            t.check((sum - whole).abs() <= bound, || {
                format!("{}: Σ ΔF = {sum:e} vs ΔF = {whole:e} over {} cells", p.name, part.len())
            });
        }
    }
}

fn ulp(v: f64) -> f64 {
    let v = v.abs();
    if v == 0.0 {
        return f64::from_bits(1);
    }
    f64::from_bits(v.to_bits() + 1) - v
}

fn residues(t: &mut Tally) {
    let alt_ratios = vec![1.0, 1.0 / 3.0, 1.0 / 16.0];
    for p in builtins() {
        let tol = p.tol.unwrap_or(1e-6);
        let big_f = p.extended_antiderivative();
        let opts = ResidueOptions { tol, ..Default::default() };
        let alt = ResidueOptions { ratios: alt_ratios.clone(), ..opts.clone() };
        for &x in p.exceptional.finite_points() {
            let a = point_residue(&big_f, x, p.ambient, &opts);
            let b = point_residue(&big_f, x, p.ambient, &alt);
            t.check(a.status == b.status, || format!("{} at {x}: {} vs {} under other ratios", p.name, a.status, b.status));
            if a.status == ResidueStatus::Summable {
                t.check((a.value - b.value).abs() <= tol, || {
                    format!("{} at {x}: {} vs {} under other ratios", p.name, a.value, b.value)
                });
            }
            if p.flags.continuous_at_e {
                t.check(a.status == ResidueStatus::Summable && a.value.abs() <= tol, || {
                    format!("{} at {x}: continuous but residue {} {}", p.name, a.status, a.value)
                });
            }
        }
    }
    // all variation of a step function sits on its jumps, and splits over E
    for name in ["heaviside", "staircase"] {
        let p = builtin(name).expect("step builtin");
        let big_f = p.extended_antiderivative();
        let opts = ResidueOptions { tol: 1e-12, ..Default::default() };
        let r = basic_sum(&big_f, &p.exceptional, p.ambient, &opts);
        let whole = delta_f(&big_f, &p.ambient);
        t.check(r.status == ResidueStatus::Summable && r.value == whole, || {
            format!("{name}: residues sum to {} {}, ΔF = {whole}", r.status, r.value)
        });
        let pts = p.exceptional.finite_points();
        for cut in 1..pts.len() {
            let left = ExceptionalSet::points(pts[..cut].to_vec()).expect("sorted");
            let right = ExceptionalSet::points(pts[cut..].to_vec()).expect("sorted");
            let split = basic_sum(&big_f, &left, p.ambient, &opts).value + basic_sum(&big_f, &right, p.ambient, &opts).value;
            t.check((split - r.value).abs() <= 2e-12, || format!("{name}: split at {cut} sums to {split}"));
        }
    }
    // the Cantor function is continuous, so its residue function vanishes
    let cantor = builtin("cantor").expect("cantor builtin");
    let profile = residue_function_profile(
        &cantor.extended_antiderivative(),
        &cantor.exceptional,
        cantor.ambient,
        100,
        &ResidueOptions { tol: 1e-9, ..Default::default() },
    );
    for (x, r) in profile {
        t.check(r.status == ResidueStatus::Summable && r.value.abs() <= 1e-9, || {
            format!("cantor residue at {x}: {} {}", r.status, r.value)
        });
    }
}

fn cantor_levels(t: &mut Tally) {
    for (i, s) in cantor_level_sums(20).into_iter().enumerate() {
        t.check((s - 1.0).abs() <= 1e-12, || format!("level {}: S = {s:e}", i + 1));
    }
}

fn cantor_evaluator(t: &mut Tally, seed: u64) {
    let c = |x: f64| cantor_function(x).expect("inside [0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<f64> = (0..100_000).map(|_| rng.gen_range(0.0..=1.0)).collect();
    xs.sort_by(f64::total_cmp);
    for w in xs.windows(2) {
        t.check(c(w[0]) <= c(w[1]), || format!("C({}) > C({})", w[0], w[1]));
    }
    for &x in xs.iter().step_by(10) {
        let half = c(x) / 2.0;
        let left = c(x / 3.0);
        t.check((left - half).abs() <= 2.0 * ulp(half), || format!("C(x/3) = {left:e} ≠ C(x)/2 = {half:e} at {x}"));
        let right = c(2.0 / 3.0 + x / 3.0);
        t.check((right - (0.5 + c(x) / 2.0)).abs() <= 1e-12, || format!("C(2/3 + x/3) ≠ 1/2 + C(x)/2 at {x}"));
        let middle = c(1.0 / 3.0 + x / 3.0);
        t.check(middle == 0.5, || format!("C not 1/2 on the middle third at {x}"));
    }
    t.check(c(0.0) == 0.0 && c(1.0) == 1.0 && (c(0.25) - 1.0 / 3.0).abs() <= 1e-15, || "fixed values".into());
}

fn corpus(t: &mut Tally, seed: u64) {
    for p in builtins() {
        corpus_problem(t, &p, seed);
    }
}

fn corpus_problem(t: &mut Tally, p: &ProblemSpec, _seed: u64) {
    let tol = p.tol.unwrap_or(1e-6);
    let opts = DecomposeOptions { tol, ..Default::default() };
    let report = decompose(p, &opts);
    let want = if p.name == "log_divergent" { Verdict::IndeterminateForm } else { Verdict::IdentityHolds };
    t.check(report.verdict == want, || {
        format!("{}: verdict {} (gap {:?})", p.name, report.verdict, report.identity_gap)
    });
    let mismatches = check_expectations(p, &report, tol);
    t.check(mismatches.is_empty(), || format!("{}: {}", p.name, mismatches.join("; ")));
    if p.flags.absolutely_continuous {
        t.check(report.residue.value.abs() <= tol, || {
            format!("{}: absolutely continuous but ℜ = {}", p.name, report.residue.value)
        });
    }
    t.check(!report.riemann.trace.is_empty(), || format!("{}: empty trace", p.name));
}
