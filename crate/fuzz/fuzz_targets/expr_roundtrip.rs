#![no_main]

use gaugeint::corpus::Expr;
use libfuzzer_sys::fuzz_target;

// printing is fully parenthesized, so parse(print(e)) must give back e
fuzz_target!(|data: &str| {
    let Ok(e) = Expr::parse(data) else { return };
    let printed = e.to_string();
    let again = Expr::parse(&printed).unwrap_or_else(|err| panic!("{printed:?} does not reparse: {err}"));
    assert_eq!(again, e, "{printed}");
    assert_eq!(again.to_string(), printed);
});
