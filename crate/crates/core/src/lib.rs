//! Interval-function integration: `∫f = ΔF`, split into a gauge (generalized
//! Riemann) integral of the zero-extended integrand plus a residue sum over
//! the exceptional set where `F` or `f` misbehave.

pub mod checks;
pub mod corpus;
pub mod decomposition;
pub mod exceptional;
pub mod integrator;
pub mod kernel;
pub mod partition;
pub mod residue;
mod ternary;

pub use corpus::{builtin, cantor_function, load_problem, Expr, ProblemSpec};

pub use exceptional::ExceptionalSet;

pub use kernel::{
    delta_f, extend, extend_fn, interval_sum, riemann_sum, ExtendedFunction, Interval,
    TaggedPair, TaggedPartition,
};
pub use partition::{cousin_partition, Gauge, TagPolicy};

pub use integrator::{gr_integral, ordinary_riemann, IntegralResult, IntegralStatus};
pub use residue::{basic_sum, point_residue, ResidueResult, ResidueStatus};
pub use decomposition::{decompose, total_integral, verify_identity, DecompositionReport, Verdict};
