#![no_main]

use gaugeint::corpus::parse_problem;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    match parse_problem(data) {
        Ok(p) => {
            let (lo, hi) = (p.ambient.lo(), p.ambient.hi());
            assert!(lo < hi && lo.is_finite() && hi.is_finite());
            let f = p.extended_antiderivative();
            assert!(f.value(lo).is_finite() && f.value(hi).is_finite());
        }
        Err(e) => {
            assert!(matches!(e.kind(), "SCHEMA_ERROR" | "PARSE_ERROR"));
        }
    }
});
