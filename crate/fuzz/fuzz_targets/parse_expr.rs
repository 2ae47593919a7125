#![no_main]

use gaugeint::corpus::Expr;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(e) = Expr::parse(data) {
        // evaluation is total: a finite value or None, never a panic
        for x in [-1.0, -0.5, 0.0, 1e-300, 0.5, 1.0, f64::MAX] {
            if let Some(v) = e.eval(x) {
                assert!(v.is_finite());
            }
        }
    }
});
