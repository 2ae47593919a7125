#![no_main]

use gaugeint::partition::TagPolicy;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(policy) = data.parse::<TagPolicy>() {
        assert_eq!(policy.name().parse::<TagPolicy>().ok(), Some(policy));
    }
});
