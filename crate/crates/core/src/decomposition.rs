//! `ΔF([a,b]) = (gauge integral of f_ex) + ℜ`, computed part by part and
//! compared.

use std::fmt;

use serde::ser::{Serialize, SerializeStruct, Serializer};
use serde_json::value::RawValue;

use crate::corpus::{ExpectedValue, ProblemSpec};
use crate::integrator::{gr_integral, IntegralResult, IntegralStatus, IntegratorOptions};
use crate::kernel::{delta_f, Interval};
use crate::partition::{Caps, TagPolicy};
use crate::residue::{basic_sum, ResidueOptions, ResidueResult, ResidueStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    IdentityHolds,
    /// Both parts converged but do not add up to `ΔF`.
    IdentityFails,
    IndeterminateForm,
    NotBs,
    Budget,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::IdentityHolds => "IDENTITY_HOLDS",
            Verdict::IdentityFails => "IDENTITY_FAILS",
            Verdict::IndeterminateForm => "INDETERMINATE_FORM",
            Verdict::NotBs => "NOT_BS",
            Verdict::Budget => "BUDGET",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::IdentityHolds => 0,
            Verdict::IndeterminateForm | Verdict::NotBs => 2,
            Verdict::Budget => 3,
            Verdict::IdentityFails => 4,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeOptions {
    pub tol: f64,
    pub policy: TagPolicy,
    pub caps: Caps,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            tol: 1e-6,
            policy: TagPolicy::Henstock,
            caps: Caps::default(),
        }
    }
}

impl DecomposeOptions {
    pub fn integrator(&self, problem: &ProblemSpec) -> IntegratorOptions {
        IntegratorOptions {
            tol: self.tol,
            policy: self.policy,
            caps: self.caps,
            ..Default::default()
        }
        .with_hints(&problem.gauge)
    }

    pub fn residue(&self) -> ResidueOptions {
        ResidueOptions {
            tol: self.tol,
            max_cells: self.caps.max_cells,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub problem: String,
    pub ambient: Interval,
    pub delta_f: f64,
    pub riemann: IntegralResult,
    pub residue: ResidueResult,
    /// `|ΔF - (riemann + residue)|`, when both parts have values.
    pub identity_gap: Option<f64>,
    pub verdict: Verdict,
    pub tol: f64,
    pub policy: TagPolicy,
}

impl DecompositionReport {
    /// `tol·(|[a,b]| + 1)`.
    pub fn bound(&self) -> f64 {
        self.tol * (self.ambient.length() + 1.0)
    }

    /// The report as pretty JSON. Numbers carry 17 significant digits;
    /// non-finite ones become `null`.
    pub fn to_json(&self, traces: bool) -> String {
        let mut out = serde_json::to_string_pretty(&ReportJson { report: self, traces }).expect("report serializes");
        out.push('\n');
        out
    }
}

/// `ΔF` over the ambient interval.
pub fn total_integral(problem: &ProblemSpec) -> f64 {
    delta_f(&problem.extended_antiderivative(), &problem.ambient)
}

pub fn decompose(problem: &ProblemSpec, opts: &DecomposeOptions) -> DecompositionReport {
    let f_ex = problem.extended_derivative();
    let big_f = problem.extended_antiderivative();
    let e = &problem.exceptional;
    let delta = total_integral(problem);
    let integrator = opts.integrator(problem);
    let residue_opts = opts.residue();
    let (riemann, residue) = std::thread::scope(|s| {
        let residue = s.spawn(|| basic_sum(&big_f, e, problem.ambient, &residue_opts));
        let riemann = gr_integral(&f_ex, problem.ambient, e, &integrator);
        (riemann, residue.join().expect("residue worker panicked"))
    });
    assemble(problem.name.clone(), problem.ambient, delta, riemann, residue, opts.tol, opts.policy)
}

fn assemble(
    problem: String,
    ambient: Interval,
    delta_f: f64,
    riemann: IntegralResult,
    residue: ResidueResult,
    tol: f64,
    policy: TagPolicy,
) -> DecompositionReport {
    let both = riemann.status == IntegralStatus::Converged && residue.status == ResidueStatus::Summable;
    let identity_gap = both.then(|| (delta_f - (riemann.value + residue.value)).abs());
    let mut report = DecompositionReport {
        problem,
        ambient,
        delta_f,
        riemann,
        residue,
        identity_gap,
        verdict: Verdict::Budget,
        tol,
        policy,
    };
    report.verdict = verdict_of(&report);
    report
}

fn verdict_of(report: &DecompositionReport) -> Verdict {
    if report.riemann.status == IntegralStatus::Divergent {
        return Verdict::IndeterminateForm;
    }
    if report.residue.status == ResidueStatus::NotBasicallySummable {
        return Verdict::NotBs;
    }
    match report.identity_gap {
        None => Verdict::Budget,
        Some(gap) if gap <= report.bound() => Verdict::IdentityHolds,
        Some(_) => Verdict::IdentityFails,
    }
}

/// Re-checks the identity from the report's own numbers at `tol`.
pub fn verify_identity(report: &DecompositionReport, tol: f64) -> bool {
    report
        .identity_gap
        .is_some_and(|gap| gap <= tol * (report.ambient.length() + 1.0))
}

/// Differences between the report and the problem's expectations, if any.
pub fn check_expectations(problem: &ProblemSpec, report: &DecompositionReport, tol: f64) -> Vec<String> {
    let mut problems = Vec::new();
    let Some(expected) = &problem.expected else {
        return problems;
    };
    let close = |a: f64, b: f64| (a - b).abs() <= tol;
    if let Some(d) = expected.delta_f {
        if !close(d, report.delta_f) {
            problems.push(format!("delta_F: expected {d}, got {}", report.delta_f));
        }
    }
    if let Some(want) = expected.riemann {
        let r = &report.riemann;
        let ok = match want {
            ExpectedValue::Value(v) => r.status == IntegralStatus::Converged && close(v, r.value),
            ExpectedValue::Divergent => r.status == IntegralStatus::Divergent,
            ExpectedValue::NotBs => false,
        };
        if !ok {
            problems.push(format!("riemann: expected {want:?}, got {} {}", r.status, r.value));
        }
    }
    if let Some(want) = expected.residue {
        let r = &report.residue;
        let ok = match want {
            ExpectedValue::Value(v) => r.status == ResidueStatus::Summable && close(v, r.value),
            ExpectedValue::NotBs => r.status == ResidueStatus::NotBasicallySummable,
            ExpectedValue::Divergent => false,
        };
        if !ok {
            problems.push(format!("residue: expected {want:?}, got {} {}", r.status, r.value));
        }
    }
    problems
}

/// `{:.16e}`, i.e. 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// A float serialized with 17 significant digits, or `null` if not finite.
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            RawValue::from_string(format_number(self.0))
                .expect("float literal is valid JSON")
                .serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

struct ReportJson<'a> {
    report: &'a DecompositionReport,
    traces: bool,
}

impl Serialize for ReportJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let r = self.report;
        let mut st = s.serialize_struct("DecompositionReport", 8)?;
        st.serialize_field("problem", &r.problem)?;
        st.serialize_field("ambient", &[Real(r.ambient.lo()), Real(r.ambient.hi())])?;
        st.serialize_field("delta_F", &Real(r.delta_f))?;
        st.serialize_field("riemann", &IntegralJson { result: &r.riemann, traces: self.traces })?;
        st.serialize_field("residue", &ResidueJson { result: &r.residue, traces: self.traces })?;
        match r.identity_gap {
            Some(gap) => st.serialize_field("identity_gap", &Real(gap))?,
            None => st.serialize_field("identity_gap", "NOT_APPLICABLE")?,
        }
        st.serialize_field("verdict", r.verdict.name())?;
        st.serialize_field(
            "tolerances",
            &Tolerances {
                tol: r.tol,
                bound: r.bound(),
                policy: r.policy,
            },
        )?;
        st.end()
    }
}

struct Tolerances {
    tol: f64,
    bound: f64,
    policy: TagPolicy,
}

impl Serialize for Tolerances {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Tolerances", 3)?;
        st.serialize_field("tol", &Real(self.tol))?;
        st.serialize_field("identity_bound", &Real(self.bound))?;
        st.serialize_field("policy", self.policy.name())?;
        st.end()
    }
}

/// Integration result as JSON, shared with the CLI's `integrate`.
pub struct IntegralJson<'a> {
    pub result: &'a IntegralResult,
    pub traces: bool,
}

impl Serialize for IntegralJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let r = self.result;
        let mut st = s.serialize_struct("IntegralResult", 4)?;
        st.serialize_field("value", &Real(r.value))?;
        st.serialize_field("status", r.status.name())?;
        st.serialize_field("note", &r.note)?;
        if self.traces {
            let rows: Vec<_> = r.trace.iter().map(|t| TraceJson(*t)).collect();
            st.serialize_field("trace", &rows)?;
        } else {
            st.skip_field("trace")?;
        }
        st.end()
    }
}

struct TraceJson(crate::integrator::TraceRow);

impl Serialize for TraceJson {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let t = &self.0;
        let mut st = s.serialize_struct("TraceRow", 6)?;
        st.serialize_field("k", &t.k)?;
        st.serialize_field("h", &Real(t.h))?;
        st.serialize_field("gamma", &Real(t.gamma))?;
        st.serialize_field("cells", &t.cells)?;
        st.serialize_field("value", &Real(t.value))?;
        st.serialize_field("spread", &Real(t.spread))?;
        st.end()
    }
}

/// Residue result as JSON, shared with the CLI's `residue`.
pub struct ResidueJson<'a> {
    pub result: &'a ResidueResult,
    pub traces: bool,
}

impl Serialize for ResidueJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let r = self.result;
        let mut st = s.serialize_struct("ResidueResult", 4)?;
        st.serialize_field("value", &Real(r.value))?;
        st.serialize_field("status", r.status.name())?;
        st.serialize_field("note", &r.note)?;
        if self.traces {
            let probes: Vec<_> = r
                .probes
                .iter()
                .map(|p| [Real(p.scale), Real(p.ratio), Real(p.value)])
                .collect();
            st.serialize_field("probes", &probes)?;
        } else {
            st.skip_field("probes")?;
        }
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::builtin;

    fn run(name: &str) -> (ProblemSpec, DecompositionReport) {
        let p = builtin(name).unwrap();
        let opts = DecomposeOptions {
            tol: p.tol.unwrap(),
            ..Default::default()
        };
        let r = decompose(&p, &opts);
        (p, r)
    }

    #[test]
    fn total_integral_examples() {
        assert_eq!(total_integral(&builtin("polynomial").unwrap()), 1.0);
        assert_eq!(total_integral(&builtin("cantor").unwrap()), 1.0);
        assert!((total_integral(&builtin("oscillatory").unwrap()) - 1f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn heaviside() {
        let (p, r) = run("heaviside");
        assert_eq!(r.verdict, Verdict::IdentityHolds);
        assert_eq!((r.delta_f, r.riemann.value, r.residue.value), (1.0, 0.0, 1.0));
        assert!(check_expectations(&p, &r, p.tol.unwrap()).is_empty());
    }

    #[test]
    fn cantor() {
        let (p, r) = run("cantor");
        assert_eq!(r.verdict, Verdict::IdentityHolds);
        assert_eq!(r.delta_f, 1.0);
        assert_eq!(r.riemann.value, 0.0);
        assert!((r.residue.value - 1.0).abs() <= 1e-9);
        assert!(check_expectations(&p, &r, p.tol.unwrap()).is_empty());
    }

    #[test]
    fn log_divergent() {
        let (p, r) = run("log_divergent");
        assert_eq!(r.verdict, Verdict::IndeterminateForm);
        assert_eq!(r.delta_f, 0.0);
        assert_eq!(r.residue.status, ResidueStatus::NotBasicallySummable);
        assert_eq!(r.identity_gap, None);
        assert!(check_expectations(&p, &r, p.tol.unwrap()).is_empty());
        assert_eq!(r.verdict.exit_code(), 2);
    }

    #[test]
    fn verify_identity_examples() {
        let (_, r) = run("polynomial");
        assert!(verify_identity(&r, 1e-8));
        let fake = DecompositionReport {
            identity_gap: Some(0.5),
            ambient: Interval::UNIT,
            ..r.clone()
        };
        assert!(!verify_identity(&fake, 1e-3));
        let (_, r) = run("sqrt");
        assert!(verify_identity(&r, 1e-4), "{:?}", r.identity_gap);
    }

    #[test]
    fn verdict_is_total() {
        let (_, base) = run("polynomial");
        let statuses = [IntegralStatus::Converged, IntegralStatus::Divergent, IntegralStatus::BudgetExhausted];
        let residues = [ResidueStatus::Summable, ResidueStatus::NotBasicallySummable, ResidueStatus::BudgetExhausted];
        for rs in statuses {
            for qs in residues {
                let mut riemann = base.riemann.clone();
                riemann.status = rs;
                let mut residue = base.residue.clone();
                residue.status = qs;
                let r = assemble("p".into(), Interval::UNIT, 1.0, riemann, residue, 1e-6, TagPolicy::Henstock);
                let expected = match (rs, qs) {
                    (IntegralStatus::Divergent, _) => Verdict::IndeterminateForm,
                    (_, ResidueStatus::NotBasicallySummable) => Verdict::NotBs,
                    (IntegralStatus::Converged, ResidueStatus::Summable) => r.verdict,
                    _ => Verdict::Budget,
                };
                assert_eq!(r.verdict, expected);
                assert_eq!(r.identity_gap.is_some(), rs == IntegralStatus::Converged && qs == ResidueStatus::Summable);
            }
        }
    }

    #[test]
    fn json_report() {
        let (_, r) = run("heaviside");
        let text = r.to_json(true);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["verdict"], "IDENTITY_HOLDS");
        assert_eq!(v["delta_F"], 1.0);
        assert!(text.contains("\"delta_F\": 1.0000000000000000e0"));
        assert!(v["riemann"]["trace"].as_array().is_some_and(|t| !t.is_empty()));
        let bare: serde_json::Value = serde_json::from_str(&r.to_json(false)).unwrap();
        assert!(bare["riemann"].get("trace").is_none());
        assert_eq!(r.to_json(true), text);

        let (_, r) = run("log_divergent");
        let v: serde_json::Value = serde_json::from_str(&r.to_json(false)).unwrap();
        assert_eq!(v["identity_gap"], "NOT_APPLICABLE");
    }
}
