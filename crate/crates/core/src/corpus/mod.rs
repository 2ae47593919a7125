//! Problem definitions: the expression language, the Cantor function, problem
//! files and the built-in corpus.

mod cantor;
pub mod expr;
mod problem;

pub use cantor::{cantor_function, DomainError};
pub use expr::{Expr, ParseError};
pub use problem::{
    load_problem, parse_problem, Builtin, Expected, ExpectedValue, Flags, FunctionSource,
    GaugeHints, ProblemError, ProblemSpec,
};

const BUILTINS: &[(&str, &str)] = &[
    ("polynomial", include_str!("../../corpus/polynomial.json")),
    ("sine", include_str!("../../corpus/sine.json")),
    ("heaviside", include_str!("../../corpus/heaviside.json")),
    ("sqrt", include_str!("../../corpus/sqrt.json")),
    ("oscillatory", include_str!("../../corpus/oscillatory.json")),
    ("cantor", include_str!("../../corpus/cantor.json")),
    ("log_divergent", include_str!("../../corpus/log_divergent.json")),
    ("abs", include_str!("../../corpus/abs.json")),
    ("staircase", include_str!("../../corpus/staircase.json")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(name, _)| *name)
}

pub fn builtin(name: &str) -> Option<ProblemSpec> {
    let (_, text) = BUILTINS.iter().find(|(n, _)| *n == name)?;
    Some(parse_problem(text).unwrap_or_else(|e| panic!("builtin problem `{name}` is invalid: {e}")))
}

/// The JSON text a builtin is defined by.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn builtins() -> Vec<ProblemSpec> {
    builtin_names().filter_map(builtin).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exceptional::ExceptionalSet;
    use crate::kernel::Interval;

    #[test]
    fn every_builtin_loads_under_its_own_name() {
        for name in builtin_names() {
            assert_eq!(builtin(name).unwrap().name, name);
        }
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn cantor_builtin() {
        let p = builtin("cantor").unwrap();
        assert_eq!(p.antiderivative, FunctionSource::Builtin(Builtin::Cantor));
        assert_eq!(p.derivative, FunctionSource::Builtin(Builtin::Zero));
        assert_eq!(p.exceptional, ExceptionalSet::cantor(Interval::UNIT));
        assert_eq!(p.expected.unwrap().residue, Some(ExpectedValue::Value(1.0)));
    }

    #[test]
    fn heaviside_expectations() {
        let e = builtin("heaviside").unwrap().expected.unwrap();
        assert_eq!(e.delta_f, Some(1.0));
        assert_eq!(e.riemann, Some(ExpectedValue::Value(0.0)));
        assert_eq!(e.residue, Some(ExpectedValue::Value(1.0)));
    }
}
