//! Core value types: compact intervals, tagged partitions, zero-extended
//! point functions, and the two sums every other module is built on.
//!
//! The *interval sum* `Σ ΔF(I_i)` telescopes to `ΔF([a,b])` over a full
//! partition, while the *Riemann sum* `Σ f(x_i)|I_i|` only approximates it.
//! The difference between them, cell by cell, is what the integrator and the
//! residue module measure.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::exceptional::ExceptionalSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("invalid interval [{lo}, {hi}]: bounds must be finite with lo <= hi")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("interval [{lo}, {hi}] has zero length")]
    ZeroLength { lo: f64, hi: f64 },
    #[error("partition is malformed at pair {index}: {reason}")]
    MalformedPartition { index: usize, reason: &'static str },
}

/// A compact interval `[lo, hi]` of the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, KernelError> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(KernelError::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    /// The unit interval `[0, 1]`.
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// `|I| = hi - lo`.
    #[inline]
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn midpoint(&self) -> f64 {
        self.lo + 0.5 * (self.hi - self.lo)
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    #[inline]
    pub fn is_degenerate(&self) -> bool {
        self.lo >= self.hi
    }

    /// True when `other` lies inside `self`.
    pub fn encloses(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Intersection with `other`, if nonempty.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// One interval-point pair `(I_i, x_i)` of a tagged partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedPair {
    pub cell: Interval,
    pub tag: f64,
}

impl TaggedPair {
    pub fn new(cell: Interval, tag: f64) -> Self {
        TaggedPair { cell, tag }
    }
}

/// A finite tagged partition of an ambient interval.
///
/// Pairs are stored sorted by `cell.lo` with consecutive cells sharing their
/// endpoints exactly. [`TaggedPartition::new`] enforces this layout;
/// [`TaggedPartition::new_unchecked`] exists so malformed inputs can still be
/// handed to the validator and reported on.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedPartition {
    ambient: Interval,
    pairs: Vec<TaggedPair>,
}

impl TaggedPartition {
    pub fn new(ambient: Interval, pairs: Vec<TaggedPair>) -> Result<Self, KernelError> {
        let malformed = |index, reason| Err(KernelError::MalformedPartition { index, reason });
        let Some(first) = pairs.first() else {
            return malformed(0, "partition has no cells");
        };
        if first.cell.lo != ambient.lo {
            return malformed(0, "first cell does not start at the ambient left endpoint");
        }
        for (i, pair) in pairs.iter().enumerate() {
            if pair.cell.is_degenerate() {
                return malformed(i, "zero-length cell");
            }
            if i > 0 && pairs[i - 1].cell.hi != pair.cell.lo {
                return malformed(i, "cell does not start where the previous cell ends");
            }
            if !ambient.contains(pair.tag) {
                return malformed(i, "tag lies outside the ambient interval");
            }
        }
        if pairs[pairs.len() - 1].cell.hi != ambient.hi {
            return malformed(pairs.len() - 1, "last cell does not end at the ambient right endpoint");
        }
        Ok(TaggedPartition { ambient, pairs })
    }

    /// Builds a partition without checking the layout invariants.
    pub fn new_unchecked(ambient: Interval, pairs: Vec<TaggedPair>) -> Self {
        TaggedPartition { ambient, pairs }
    }

    pub fn ambient(&self) -> Interval {
        self.ambient
    }

    pub fn pairs(&self) -> &[TaggedPair] {
        &self.pairs
    }

    /// Number of cells, `ν`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn into_pairs(self) -> Vec<TaggedPair> {
        self.pairs
    }
}

/// A real point function that may be undefined (or infinite) at some inputs.
///
/// `None` stands for "undefined or infinite". Implementations must be pure.
pub trait PointFn: Send + Sync {
    fn eval(&self, x: f64) -> Option<f64>;
}

impl<F> PointFn for F
where
    F: Fn(f64) -> Option<f64> + Send + Sync,
{
    fn eval(&self, x: f64) -> Option<f64> {
        self(x)
    }
}

/// A point function extended by zero across its singular set: the value is
/// `0` on `E` and wherever the base function is undefined or infinite, and the
/// base value everywhere else.
///
/// The two hull endpoints of a Cantor-type set are treated as regular points,
/// matching the standing assumption that the ends of the ambient interval do
/// not belong to `E`.
#[derive(Clone)]
pub struct ExtendedFunction {
    base: Arc<dyn PointFn>,
    singular: Arc<ExceptionalSet>,
}

impl ExtendedFunction {
    pub fn value(&self, x: f64) -> f64 {
        if self.singular.zeroes(x) {
            return 0.0;
        }
        match self.base.eval(x) {
            Some(v) if v.is_finite() => v,
            _ => 0.0,
        }
    }

    pub fn singular_set(&self) -> &ExceptionalSet {
        &self.singular
    }

    pub fn base(&self) -> &Arc<dyn PointFn> {
        &self.base
    }
}

impl fmt::Debug for ExtendedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExtendedFunction")
            .field("singular", &self.singular)
            .finish_non_exhaustive()
    }
}

impl PointFn for ExtendedFunction {
    fn eval(&self, x: f64) -> Option<f64> {
        Some(self.value(x))
    }
}

/// Zero-extends `base` across `singular`.
pub fn extend(base: Arc<dyn PointFn>, singular: ExceptionalSet) -> ExtendedFunction {
    ExtendedFunction {
        base,
        singular: Arc::new(singular),
    }
}

/// Convenience wrapper for closures.
pub fn extend_fn<F>(base: F, singular: ExceptionalSet) -> ExtendedFunction
where
    F: Fn(f64) -> Option<f64> + Send + Sync + 'static,
{
    extend(Arc::new(base), singular)
}

#[inline]
pub fn length(interval: &Interval) -> f64 {
    interval.length()
}

/// `ΔF(I) = F(hi) - F(lo)`, always finite under the extension convention.
#[inline]
pub fn delta_f(antiderivative: &ExtendedFunction, interval: &Interval) -> f64 {
    antiderivative.value(interval.hi) - antiderivative.value(interval.lo)
}

/// `ΔF(I) / |I|`.
pub fn difference_quotient(
    antiderivative: &ExtendedFunction,
    interval: &Interval,
) -> Result<f64, KernelError> {
    let len = interval.length();
    if len <= 0.0 {
        return Err(KernelError::ZeroLength {
            lo: interval.lo,
            hi: interval.hi,
        });
    }
    Ok(delta_f(antiderivative, interval) / len)
}

/// `Σ f(x_i)·|I_i|` over the pairs of `partition`.
pub fn riemann_sum(integrand: &ExtendedFunction, partition: &TaggedPartition) -> f64 {
    riemann_sum_pairs(integrand, partition.pairs())
}

pub fn riemann_sum_pairs(integrand: &ExtendedFunction, pairs: &[TaggedPair]) -> f64 {
    pairs
        .iter()
        .map(|p| integrand.value(p.tag) * p.cell.length())
        .collect::<CompensatedSum>()
        .value()
}

/// `Σ ΔF(I_i)` over `pairs`.
pub fn interval_sum(antiderivative: &ExtendedFunction, pairs: &[TaggedPair]) -> f64 {
    pairs
        .iter()
        .map(|p| delta_f(antiderivative, &p.cell))
        .collect::<CompensatedSum>()
        .value()
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::cantor_function;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn square() -> ExtendedFunction {
        extend_fn(|x| Some(x * x), ExceptionalSet::Empty)
    }

    fn heaviside() -> ExtendedFunction {
        let step = |x: f64| Some(if x < 0.0 { 0.0 } else { 1.0 });
        extend_fn(step, ExceptionalSet::points(vec![0.0]).unwrap())
    }

    fn cantor(singular: ExceptionalSet) -> ExtendedFunction {
        extend_fn(|x| cantor_function(x).ok(), singular)
    }

    #[test]
    fn lengths() {
        assert_eq!(length(&iv(0.0, 1.0)), 1.0);
        assert_eq!(length(&iv(2.0, 2.0)), 0.0);
        assert_eq!(length(&iv(-1.0, 3.0)), 4.0);
    }

    #[test]
    fn interval_rejects_reversed_and_nonfinite_bounds() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(f64::NAN, 0.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn delta_f_examples() {
        assert_eq!(delta_f(&square(), &iv(0.0, 1.0)), 1.0);
        assert_eq!(delta_f(&heaviside(), &iv(-1.0, 1.0)), 1.0);
        let c = cantor(ExceptionalSet::cantor(Interval::UNIT));
        assert_eq!(delta_f(&c, &Interval::UNIT), 1.0);
    }

    #[test]
    fn extension_zeroes_singular_and_undefined_points() {
        let recip = extend_fn(
            |x| if x == 0.0 { None } else { Some(1.0 / x) },
            ExceptionalSet::points(vec![0.0]).unwrap(),
        );
        assert_eq!(recip.value(0.0), 0.0);
        assert_eq!(recip.value(2.0), 0.5);

        let ident = extend_fn(Some, ExceptionalSet::Empty);
        for x in [-3.5, 0.0, 1e-300, 7.25] {
            assert_eq!(ident.value(x), x);
        }

        let inv_sqrt = extend_fn(
            |x: f64| (x > 0.0).then(|| 1.0 / x.sqrt()),
            ExceptionalSet::points(vec![0.0]).unwrap(),
        );
        assert_eq!(inv_sqrt.value(0.0), 0.0);

        let infinite = extend_fn(|_| Some(f64::INFINITY), ExceptionalSet::Empty);
        assert_eq!(infinite.value(1.0), 0.0);
    }

    #[test]
    fn extension_is_idempotent() {
        let e = ExceptionalSet::points(vec![0.0, 0.5]).unwrap();
        let once = extend_fn(|x: f64| (x != 0.0).then(|| 1.0 / x), e.clone());
        let twice = extend(Arc::new(once.clone()), e);
        for i in -20..=20 {
            let x = f64::from(i) / 8.0;
            assert_eq!(once.value(x).to_bits(), twice.value(x).to_bits());
        }
    }

    #[test]
    fn difference_quotient_examples() {
        let q = difference_quotient(&square(), &iv(1.0, 1.01)).unwrap();
        // (1.01^2 - 1) / 0.01 evaluated in binary64
        assert!((q - 2.01).abs() < 1e-12, "{q}");
        let five = extend_fn(|_| Some(5.0), ExceptionalSet::Empty);
        assert_eq!(difference_quotient(&five, &iv(-2.0, 3.0)).unwrap(), 0.0);
        let ident = extend_fn(Some, ExceptionalSet::Empty);
        assert_eq!(difference_quotient(&ident, &iv(0.25, 4.0)).unwrap(), 1.0);
        assert!(matches!(
            difference_quotient(&ident, &iv(2.0, 2.0)),
            Err(KernelError::ZeroLength { .. })
        ));
    }

    #[test]
    fn difference_quotient_times_length_is_delta_f() {
        let f = square();
        for (lo, hi) in [(0.0, 1.0), (-2.0, 0.5), (0.125, 0.375)] {
            let i = iv(lo, hi);
            let q = difference_quotient(&f, &i).unwrap();
            assert!((q * i.length() - delta_f(&f, &i)).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn riemann_sum_examples() {
        let one = extend_fn(|_| Some(1.0), ExceptionalSet::Empty);
        let halves = TaggedPartition::new(
            Interval::UNIT,
            vec![
                TaggedPair::new(iv(0.0, 0.5), 0.5),
                TaggedPair::new(iv(0.5, 1.0), 0.5),
            ],
        )
        .unwrap();
        assert_eq!(riemann_sum(&one, &halves), 1.0);
        let two_x = extend_fn(|x| Some(2.0 * x), ExceptionalSet::Empty);
        assert_eq!(riemann_sum(&two_x, &halves), 1.0);
        // derivative of the Cantor function: zero off the Cantor set, zero-extended on it
        let c_ex = extend_fn(|_| Some(0.0), ExceptionalSet::cantor(Interval::UNIT));
        assert_eq!(riemann_sum(&c_ex, &halves), 0.0);
    }

    #[test]
    fn interval_sum_examples() {
        let quarters: Vec<_> = (0..4)
            .map(|i| {
                let lo = f64::from(i) / 4.0;
                TaggedPair::new(iv(lo, lo + 0.25), lo)
            })
            .collect();
        assert_eq!(interval_sum(&square(), &quarters), 1.0);

        let c = cantor(ExceptionalSet::Empty);
        let level1 = [
            TaggedPair::new(iv(0.0, 1.0 / 3.0), 0.0),
            TaggedPair::new(iv(2.0 / 3.0, 1.0), 1.0),
        ];
        assert_eq!(delta_f(&c, &level1[0].cell), 0.5);
        assert_eq!(delta_f(&c, &level1[1].cell), 0.5);
        assert_eq!(interval_sum(&c, &level1), 1.0);
        assert_eq!(interval_sum(&c, &[]), 0.0);
    }

    #[test]
    fn partition_layout_is_enforced() {
        let gap = vec![
            TaggedPair::new(iv(0.0, 0.4), 0.2),
            TaggedPair::new(iv(0.5, 1.0), 0.7),
        ];
        assert!(TaggedPartition::new(Interval::UNIT, gap).is_err());
        let degenerate = vec![
            TaggedPair::new(iv(0.0, 0.0), 0.0),
            TaggedPair::new(iv(0.0, 1.0), 0.7),
        ];
        assert!(TaggedPartition::new(Interval::UNIT, degenerate).is_err());
        assert!(TaggedPartition::new(Interval::UNIT, vec![]).is_err());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..1000 {
            acc.add(1e-16);
        }
        acc.add(-1.0);
        // each 1e-16 is below half an ulp of 1, so plain summation loses all of them
        let naive = (0..1000).fold(1.0, |s, _| s + 1e-16) - 1.0;
        assert_eq!(naive, 0.0);
        assert!((acc.value() - 1e-13).abs() < 1e-24);
    }
}
