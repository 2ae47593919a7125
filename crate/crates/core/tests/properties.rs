use gaugeint::exceptional::ExceptionalSet;
use gaugeint::integrator::{gr_integral, limit_check, IntegralStatus, IntegratorOptions, LimitCheckOptions};
use gaugeint::kernel::{extend_fn, interval_sum};
use gaugeint::partition::{random_partition, Caps};
use gaugeint::residue::{basic_sum, ResidueOptions, ResidueStatus};
use gaugeint::{delta_f, Gauge, Interval, TagPolicy};
use proptest::prelude::*;

fn cubic(c: [f64; 4]) -> impl Fn(f64) -> f64 + Copy {
    move |x| c[0] + x * (c[1] + x * (c[2] + x * c[3]))
}

fn cubic_antiderivative(c: [f64; 4]) -> impl Fn(f64) -> f64 + Copy {
    move |x| x * (c[0] + x * (c[1] / 2.0 + x * (c[2] / 3.0 + x * c[3] / 4.0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn policies_agree_on_polynomials(c in prop::array::uniform4(-3.0..3.0f64), lo in -2.0..0.0f64, len in 0.5..3.0f64) {
        let tol = 1e-5;
        let ambient = Interval::new(lo, lo + len).unwrap();
        let f = cubic(c);
        let big_f = cubic_antiderivative(c);
        let exact = big_f(ambient.hi()) - big_f(ambient.lo());
        let integrand = extend_fn(move |x| Some(f(x)), ExceptionalSet::Empty);
        for policy in [TagPolicy::Henstock, TagPolicy::McShane] {
            let opts = IntegratorOptions { tol, policy, ..Default::default() };
            let r = gr_integral(&integrand, ambient, &ExceptionalSet::Empty, &opts);
            prop_assert_eq!(r.status, IntegralStatus::Converged);
            prop_assert!((r.value - exact).abs() <= 2.0 * tol * exact.abs().max(1.0), "{}: {} vs {}", policy, r.value, exact);
        }
        // Endpoint tags converge only at first order: at 1e-5 a steep cubic may
        // legitimately run out of cells, but must never claim a wrong value.
        for policy in [TagPolicy::LeftEndpoint, TagPolicy::RightEndpoint] {
            for tol in [tol, 1e-3] {
                let opts = IntegratorOptions { tol, policy, ..Default::default() };
                let r = gr_integral(&integrand, ambient, &ExceptionalSet::Empty, &opts);
                if tol == 1e-3 {
                    prop_assert_eq!(r.status, IntegralStatus::Converged);
                }
                prop_assert!(r.status != IntegralStatus::Divergent);
                if r.status == IntegralStatus::Converged {
                    prop_assert!((r.value - exact).abs() <= 2.0 * tol * exact.abs().max(1.0), "{}: {} vs {}", policy, r.value, exact);
                }
            }
        }
    }

    #[test]
    fn polynomial_pairs_pass_the_limit_check(c in prop::array::uniform4(-3.0..3.0f64), seed in any::<u64>()) {
        let f = cubic(c);
        let big_f = cubic_antiderivative(c);
        let opts = LimitCheckOptions { samples: 100, seed, ..Default::default() };
        let bad = limit_check(
            &extend_fn(move |x| Some(big_f(x)), ExceptionalSet::Empty),
            &extend_fn(move |x| Some(f(x)), ExceptionalSet::Empty),
            Interval::new(-1.0, 1.0).unwrap(),
            &ExceptionalSet::Empty,
            &opts,
        );
        prop_assert!(bad.is_empty(), "{:?}", bad.first());
    }

    #[test]
    fn step_residues_add_up(mut jumps in prop::collection::vec((-0.95..0.95f64, -5.0..5.0f64), 1..6)) {
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        jumps.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-3);
        let points: Vec<f64> = jumps.iter().map(|j| j.0).collect();
        let e = ExceptionalSet::points(points).unwrap();
        let steps = jumps.clone();
        let big_f = extend_fn(move |x: f64| Some(steps.iter().filter(|j| x >= j.0).map(|j| j.1).sum()), e.clone());
        let ambient = Interval::new(-1.0, 1.0).unwrap();
        let opts = ResidueOptions { tol: 1e-12, ..Default::default() };
        let r = basic_sum(&big_f, &e, ambient, &opts);
        prop_assert_eq!(r.status, ResidueStatus::Summable);
        let total: f64 = jumps.iter().map(|j| j.1).sum();
        prop_assert!((r.value - total).abs() <= 1e-12);
        prop_assert!((r.value - delta_f(&big_f, &ambient)).abs() <= 1e-12);
    }

    #[test]
    fn interval_sums_telescope(seed in any::<u64>(), width in 1e-3..0.2f64) {
        let ambient = Interval::new(0.0, 1.0).unwrap();
        let e = ExceptionalSet::cantor(ambient);
        let big_f = extend_fn(|x: f64| Some(x.exp() * x.sin()), e.clone());
        let p = random_partition(ambient, &Gauge::constant(width), &e, TagPolicy::McShane, seed, Caps::default()).unwrap();
        let sum = interval_sum(&big_f, p.pairs());
        prop_assert!((sum - delta_f(&big_f, &ambient)).abs() <= p.len() as f64 * 4.0 * f64::EPSILON * 3.0);
    }
}
