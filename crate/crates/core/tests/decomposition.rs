use gaugeint::corpus::{builtin, builtins, ExpectedValue};
use gaugeint::decomposition::{check_expectations, decompose, verify_identity, DecomposeOptions, Verdict};
use gaugeint::integrator::IntegralStatus;
use gaugeint::residue::ResidueStatus;
use gaugeint::TagPolicy;

fn at_own_tol(name: &str) -> DecomposeOptions {
    DecomposeOptions {
        tol: builtin(name).unwrap().tol.unwrap(),
        ..Default::default()
    }
}

#[test]
fn every_builtin_meets_its_expectations() {
    for p in builtins() {
        let opts = at_own_tol(&p.name);
        let r = decompose(&p, &opts);
        let mismatches = check_expectations(&p, &r, opts.tol);
        assert!(mismatches.is_empty(), "{}: {mismatches:?}", p.name);
        if p.name == "log_divergent" {
            assert_eq!(r.verdict, Verdict::IndeterminateForm);
        } else {
            assert_eq!(r.verdict, Verdict::IdentityHolds, "{}: gap {:?}", p.name, r.identity_gap);
            assert!(verify_identity(&r, opts.tol));
        }
        if p.flags.absolutely_continuous {
            assert!(r.residue.value.abs() <= opts.tol, "{}: {}", p.name, r.residue.value);
        }
        assert!(!r.riemann.trace.is_empty(), "{}", p.name);
    }
}

#[test]
fn smooth_problems_close_tightly() {
    for name in ["polynomial", "sine"] {
        let p = builtin(name).unwrap();
        let r = decompose(&p, &DecomposeOptions { tol: 1e-8, ..Default::default() });
        let gap = r.identity_gap.unwrap();
        assert!(gap <= 1e-8 * (p.ambient.length() + 1.0), "{name}: {gap:e}");
    }
}

#[test]
fn cantor_split_is_exact() {
    let p = builtin("cantor").unwrap();
    let r = decompose(&p, &DecomposeOptions { tol: 1e-9, ..Default::default() });
    assert_eq!(r.delta_f, 1.0);
    assert_eq!(r.riemann.value, 0.0);
    assert_eq!(r.riemann.status, IntegralStatus::Converged);
    assert_eq!(r.residue.status, ResidueStatus::Summable);
    assert!((r.residue.value - 1.0).abs() <= 1e-9);
}

#[test]
fn heaviside_under_every_policy() {
    let p = builtin("heaviside").unwrap();
    for policy in TagPolicy::ALL {
        let r = decompose(&p, &DecomposeOptions { tol: 1e-9, policy, ..Default::default() });
        assert_eq!(r.verdict, Verdict::IdentityHolds, "{policy}");
        assert_eq!((r.riemann.value, r.residue.value), (0.0, 1.0));
    }
}

#[test]
fn log_divergent_is_indeterminate() {
    let p = builtin("log_divergent").unwrap();
    let expected = p.expected.clone().unwrap();
    assert_eq!(expected.riemann, Some(ExpectedValue::Divergent));
    assert_eq!(expected.residue, Some(ExpectedValue::NotBs));
    let r = decompose(&p, &DecomposeOptions::default());
    assert_eq!(r.delta_f, 0.0);
    assert_eq!(r.riemann.status, IntegralStatus::Divergent);
    assert_eq!(r.residue.status, ResidueStatus::NotBasicallySummable);
    assert_eq!(r.verdict, Verdict::IndeterminateForm);
    assert_eq!(r.verdict.exit_code(), 2);
}

#[test]
fn reports_are_deterministic() {
    let p = builtin("sqrt").unwrap();
    let opts = at_own_tol("sqrt");
    assert_eq!(decompose(&p, &opts).to_json(true), decompose(&p, &opts).to_json(true));
}
