//! Measure-zero exceptional sets: finite point sets and the middle-thirds
//! Cantor set mapped onto an interval.

use thiserror::Error;

use crate::kernel::Interval;
use crate::ternary::{self, POW3};

/// Ternary depth used for membership tests by the rest of the crate.
pub const WORKING_DEPTH: u32 = 40;

/// Deepest membership query accepted by [`ExceptionalSet::contains`].
pub const MAX_MEMBERSHIP_DEPTH: u32 = 60;

/// Deepest Cantor level whose endpoints are resolvable in binary64 on a unit
/// ambient interval. Tag search and distances stop here.
pub const RESOLVED_LEVEL: u32 = 30;

/// Deepest Cantor cover that may be requested.
pub const MAX_COVER_DEPTH: u32 = 40;

/// Largest cover that [`ExceptionalSet::cover`] will materialize.
pub const MAX_COVER_CELLS: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExceptionalError {
    #[error("exceptional points must be finite")]
    NonFinitePoint,
    #[error("exceptional points must be strictly increasing (violated at index {index})")]
    UnsortedPoints { index: usize },
    #[error("cover base radius must be positive and finite, got {radius}")]
    InvalidRadius { radius: f64 },
    #[error("cover cells around points {index} and {} overlap; shrink the base radius", index + 1)]
    CoverOverlap { index: usize },
    #[error("cover depth {depth} exceeds the supported maximum {max}")]
    CoverTooDeep { depth: u32, max: u32 },
    #[error("cover at depth {depth} would have {cells} cells (limit {limit})")]
    CoverTooLarge { depth: u32, cells: u128, limit: usize },
}

/// A set of Lebesgue measure zero on which an antiderivative or its
/// derivative may be undefined.
#[derive(Debug, Clone, PartialEq)]
pub enum ExceptionalSet {
    Empty,
    /// Strictly increasing finite points.
    FinitePoints(Vec<f64>),
    /// The middle-thirds Cantor set mapped affinely onto the interval.
    CantorMiddleThirds(Interval),
}

/// Closed, pairwise disjoint cells around an exceptional set.
#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    pub depth: u32,
    pub cells: Vec<Interval>,
}

impl Cover {
    pub fn total_length(&self) -> f64 {
        self.cells.iter().map(Interval::length).sum()
    }
}

impl ExceptionalSet {
    pub fn points(points: Vec<f64>) -> Result<Self, ExceptionalError> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(ExceptionalError::NonFinitePoint);
        }
        if let Some(i) = points.windows(2).position(|w| w[0] >= w[1]) {
            return Err(ExceptionalError::UnsortedPoints { index: i + 1 });
        }
        if points.is_empty() {
            return Ok(ExceptionalSet::Empty);
        }
        Ok(ExceptionalSet::FinitePoints(points))
    }

    pub fn cantor(ambient: Interval) -> Self {
        ExceptionalSet::CantorMiddleThirds(ambient)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, ExceptionalSet::Empty)
    }

    /// The finite points, or an empty slice for the other variants.
    pub fn finite_points(&self) -> &[f64] {
        match self {
            ExceptionalSet::FinitePoints(points) => points,
            _ => &[],
        }
    }

    /// Smallest interval containing the set.
    pub fn hull(&self) -> Option<Interval> {
        match self {
            ExceptionalSet::Empty => None,
            ExceptionalSet::FinitePoints(p) => Interval::new(p[0], p[p.len() - 1]).ok(),
            ExceptionalSet::CantorMiddleThirds(ambient) => Some(*ambient),
        }
    }

    /// Membership of `x`. Finite sets use exact equality; the Cantor set
    /// inspects the first `depth` ternary digits of the normalized abscissa.
    pub fn contains(&self, x: f64, depth: u32) -> bool {
        match self {
            ExceptionalSet::Empty => false,
            ExceptionalSet::FinitePoints(points) => points.binary_search_by(|p| p.total_cmp(&x)).is_ok(),
            ExceptionalSet::CantorMiddleThirds(ambient) => {
                let depth = depth.min(MAX_MEMBERSHIP_DEPTH);
                match normalize(ambient, x) {
                    Some((t, slack)) => ternary::in_cantor_set_within(t, depth, slack),
                    None => false,
                }
            }
        }
    }

    /// Whether the zero-extension convention applies at `x`: membership at
    /// working depth, except at the two hull endpoints of a Cantor set.
    pub fn zeroes(&self, x: f64) -> bool {
        if let ExceptionalSet::CantorMiddleThirds(ambient) = self {
            if x == ambient.lo() || x == ambient.hi() {
                return false;
            }
        }
        self.contains(x, WORKING_DEPTH)
    }

    /// Level-`depth` cover. Finite points get cells of radius
    /// `base_radius * 2^-depth`; the Cantor set gets its `2^depth` standard
    /// closed construction intervals.
    pub fn cover(&self, depth: u32, base_radius: f64) -> Result<Cover, ExceptionalError> {
        let cells = match self {
            ExceptionalSet::Empty => Vec::new(),
            ExceptionalSet::FinitePoints(points) => {
                if !(base_radius > 0.0 && base_radius.is_finite()) {
                    return Err(ExceptionalError::InvalidRadius { radius: base_radius });
                }
                let r = base_radius * 0.5f64.powi(depth.min(1074) as i32);
                if let Some(index) = points.windows(2).position(|w| w[0] + r >= w[1] - r) {
                    return Err(ExceptionalError::CoverOverlap { index });
                }
                points
                    .iter()
                    .map(|&p| Interval::new(p - r, p + r).expect("finite radius"))
                    .collect()
            }
            ExceptionalSet::CantorMiddleThirds(ambient) => {
                if depth > MAX_COVER_DEPTH {
                    return Err(ExceptionalError::CoverTooDeep {
                        depth,
                        max: MAX_COVER_DEPTH,
                    });
                }
                let count = 1u128 << depth;
                if count > MAX_COVER_CELLS as u128 {
                    return Err(ExceptionalError::CoverTooLarge {
                        depth,
                        cells: count,
                        limit: MAX_COVER_CELLS,
                    });
                }
                cantor_cells(ambient, depth).collect()
            }
        };
        Ok(Cover { depth, cells })
    }

    /// A point of `E ∩ cell`, if one can be exhibited: the smallest finite
    /// point, or the leftmost Cantor point resolvable at [`RESOLVED_LEVEL`].
    pub fn pick_tag(&self, cell: &Interval) -> Option<f64> {
        match self {
            ExceptionalSet::Empty => None,
            ExceptionalSet::FinitePoints(points) => {
                let i = points.partition_point(|&p| p < cell.lo());
                points.get(i).copied().filter(|&p| p <= cell.hi())
            }
            ExceptionalSet::CantorMiddleThirds(ambient) => {
                let len = ambient.length();
                if len <= 0.0 {
                    return (cell.contains(ambient.lo())).then_some(ambient.lo());
                }
                if self.contains(cell.lo(), WORKING_DEPTH) {
                    return Some(cell.lo());
                }
                let lo_t = ((cell.lo() - ambient.lo()) / len).max(0.0);
                let hi_t = (cell.hi() - ambient.lo()) / len;
                if hi_t < 0.0 || lo_t > 1.0 {
                    return None;
                }
                let (num, level) = leftmost_cantor_point(lo_t)?;
                // Deep endpoints may not survive the affine map; coarser
                // endpoints further right are tried until one verifies.
                for coarse in (0..=level).rev() {
                    let shift = POW3[(level - coarse) as usize];
                    let c = num.div_ceil(shift);
                    if !triadic_in_cantor(c, coarse) {
                        continue;
                    }
                    let t = c as f64 / POW3[coarse as usize] as f64;
                    if t > hi_t {
                        return None;
                    }
                    let x = if c == POW3[coarse as usize] {
                        ambient.hi()
                    } else {
                        ambient.lo() + len * t
                    };
                    if x > cell.hi() {
                        return None;
                    }
                    if x >= cell.lo() && self.contains(x, WORKING_DEPTH) {
                        return Some(x);
                    }
                }
                None
            }
        }
    }

    /// Whether `cell` meets the set (as far as [`Self::pick_tag`] can tell).
    pub fn meets(&self, cell: &Interval) -> bool {
        self.pick_tag(cell).is_some()
    }

    /// Distance from `x` to the set; `+inf` for the empty set. For the
    /// Cantor set this is exact outside the level-[`RESOLVED_LEVEL`]
    /// construction intervals and an upper bound inside them.
    pub fn distance(&self, x: f64) -> f64 {
        match self {
            ExceptionalSet::Empty => f64::INFINITY,
            ExceptionalSet::FinitePoints(points) => {
                let i = points.partition_point(|&p| p < x);
                let right = points.get(i).map_or(f64::INFINITY, |p| p - x);
                let left = if i > 0 { x - points[i - 1] } else { f64::INFINITY };
                left.min(right)
            }
            ExceptionalSet::CantorMiddleThirds(ambient) => {
                let len = ambient.length();
                if x <= ambient.lo() {
                    return ambient.lo() - x;
                }
                if x >= ambient.hi() {
                    return x - ambient.hi();
                }
                cantor_distance((x - ambient.lo()) / len) * len
            }
        }
    }
}

/// `x` mapped affinely onto `[0, 1]`, with the snapping tolerance (in ulp of
/// the result) that covers the rounding of the forward and inverse maps.
fn normalize(ambient: &Interval, x: f64) -> Option<(f64, u64)> {
    let len = ambient.length();
    if len <= 0.0 {
        return (x == ambient.lo()).then_some((0.0, 2));
    }
    if x == ambient.lo() {
        return Some((0.0, 2));
    }
    if x == ambient.hi() {
        return Some((1.0, 2));
    }
    let t = (x - ambient.lo()) / len;
    if !(0.0..=1.0).contains(&t) {
        return None;
    }
    if ambient.lo() == 0.0 && len == 1.0 {
        return Some((t, 2));
    }
    let magnitude = x.abs().max(ambient.lo().abs()).max(ambient.hi().abs());
    let abs_err = 2.0 * ulp(magnitude) / len;
    let slack = 2.0 + (abs_err / ulp(t)).ceil();
    Some((t, if slack < 1e15 { slack as u64 } else { 1 << 50 }))
}

fn ulp(v: f64) -> f64 {
    let v = v.abs();
    if v == 0.0 {
        return f64::from_bits(1);
    }
    f64::from_bits(v.to_bits() + 1) - v
}

/// Left numerators (over `3^depth`) of the level-`depth` construction
/// intervals, in increasing order.
pub(crate) fn cantor_numerators(depth: u32) -> impl Iterator<Item = u64> {
    // i -> i + 1 clears the trailing ones of i and sets the next bit; on the
    // numerator 2·Σ 3^bit that adds 3^j + 1 for j trailing ones
    let count = 1u64 << depth;
    let mut num = 0u64;
    (0..count).map(move |i| {
        let current = num;
        if i + 1 < count {
            num += POW3[i.trailing_ones() as usize] + 1;
        }
        current
    })
}

/// The `2^depth` level-`depth` construction intervals mapped onto `ambient`.
pub fn cantor_cells(ambient: &Interval, depth: u32) -> impl Iterator<Item = Interval> + '_ {
    let scale = POW3[depth as usize] as f64;
    let map = move |num: u64| {
        if num == POW3[depth as usize] {
            ambient.hi()
        } else {
            ambient.lo() + ambient.length() * (num as f64 / scale)
        }
    };
    cantor_numerators(depth).map(move |num| Interval::new(map(num), map(num + 1)).expect("ordered cell"))
}

/// Leftmost Cantor point `>= lo_t` as `(p, k)` meaning `p / 3^k`.
fn leftmost_cantor_point(lo_t: f64) -> Option<(u64, u32)> {
    let mut stack = vec![(0u64, 0u32)];
    while let Some((num, level)) = stack.pop() {
        let scale = POW3[level as usize] as f64;
        let left = num as f64 / scale;
        let right = (num + 1) as f64 / scale;
        if right < lo_t {
            continue;
        }
        if left >= lo_t {
            return Some(reduce(num, level));
        }
        if level == RESOLVED_LEVEL {
            return Some(reduce(num + 1, level));
        }
        stack.push((3 * num + 2, level + 1));
        stack.push((3 * num, level + 1));
    }
    None
}

/// Whether `num / 3^level` is a Cantor point, on exact digits.
fn triadic_in_cantor(mut num: u64, level: u32) -> bool {
    if num == POW3[level as usize] {
        return true;
    }
    let mut last = true;
    for _ in 0..level {
        let digit = num % 3;
        num /= 3;
        // a trailing 1 followed by zeros is an endpoint; any other 1 is not
        if digit == 1 && !last {
            return false;
        }
        if digit != 0 {
            last = false;
        }
    }
    true
}

fn reduce(mut num: u64, mut level: u32) -> (u64, u32) {
    while level > 0 && num % 3 == 0 {
        num /= 3;
        level -= 1;
    }
    (num, level)
}

fn cantor_distance(t: f64) -> f64 {
    let mut num = 0u64;
    for level in 0..RESOLVED_LEVEL {
        let scale = POW3[level as usize + 1] as f64;
        let gap_lo = (3 * num + 1) as f64 / scale;
        let gap_hi = (3 * num + 2) as f64 / scale;
        if t <= gap_lo {
            num *= 3;
        } else if t >= gap_hi {
            num = 3 * num + 2;
        } else {
            return (t - gap_lo).min(gap_hi - t);
        }
    }
    let scale = POW3[RESOLVED_LEVEL as usize] as f64;
    let left = num as f64 / scale;
    let right = (num + 1) as f64 / scale;
    (t - left).min(right - t).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn unit_cantor() -> ExceptionalSet {
        ExceptionalSet::cantor(Interval::UNIT)
    }

    /// Independent membership oracle on exact rationals p/q: ternary digits
    /// by long division, with the terminating-1 endpoint rule.
    fn rational_in_cantor(p: u128, q: u128, depth: usize) -> bool {
        let mut rem = p;
        let mut digits = Vec::new();
        for _ in 0..depth {
            rem *= 3;
            digits.push(rem / q);
            rem %= q;
        }
        match digits.iter().position(|&d| d == 1) {
            None => true,
            Some(i) => rem == 0 && digits[i + 1..].iter().all(|&d| d == 0),
        }
    }

    #[test]
    fn point_set_constructor_validates() {
        assert!(ExceptionalSet::points(vec![0.0, 0.0]).is_err());
        assert!(ExceptionalSet::points(vec![1.0, 0.0]).is_err());
        assert!(ExceptionalSet::points(vec![f64::NAN]).is_err());
        assert_eq!(ExceptionalSet::points(vec![]).unwrap(), ExceptionalSet::Empty);
    }

    #[test]
    fn membership_examples() {
        let origin = ExceptionalSet::points(vec![0.0]).unwrap();
        assert!(origin.contains(0.0, 1));
        assert!(!origin.contains(1e-300, 1));
        assert!(rational_in_cantor(1, 3, 30));
        assert!(unit_cantor().contains(1.0 / 3.0, 30));
        assert!(!rational_in_cantor(1, 2, 30));
        assert!(!unit_cantor().contains(0.5, 30));
    }

    #[test]
    fn membership_agrees_with_rational_oracle() {
        for q in [4u128, 7, 10, 13, 27, 81, 243, 40, 91] {
            for p in 0..=q {
                let x = p as f64 / q as f64;
                assert_eq!(
                    unit_cantor().contains(x, 20),
                    rational_in_cantor(p, q, 20),
                    "{p}/{q}"
                );
            }
        }
    }

    #[test]
    fn membership_on_shifted_ambient() {
        let e = ExceptionalSet::cantor(iv(2.0, 5.0));
        assert!(e.contains(3.0, 30));
        assert!(e.contains(4.0, 30));
        assert!(!e.contains(3.5, 30));
        assert!(!e.contains(1.9, 30));
        assert!(e.zeroes(3.0));
        assert!(!e.zeroes(2.0));
        assert!(!e.zeroes(5.0));
        // mapped construction endpoints stay members despite rounding
        let e = ExceptionalSet::cantor(iv(-1.0, 1.0));
        for n in 1..=12 {
            for cell in cantor_cells(&iv(-1.0, 1.0), n) {
                assert!(e.contains(cell.lo(), WORKING_DEPTH), "{cell}");
                assert!(e.contains(cell.hi(), WORKING_DEPTH), "{cell}");
            }
        }
        for i in 0..200 {
            let cell = iv(-1.0 + f64::from(i) / 101.0, -1.0 + f64::from(i) / 101.0 + 0.003);
            if let Some(t) = e.pick_tag(&cell) {
                assert!(e.contains(t, WORKING_DEPTH), "tag {t} for {cell}");
            }
        }
    }

    #[test]
    fn cantor_cover_examples() {
        let c1 = unit_cantor().cover(1, 1.0).unwrap();
        assert_eq!(c1.cells, vec![iv(0.0, 1.0 / 3.0), iv(2.0 / 3.0, 1.0)]);
        let c2 = unit_cantor().cover(2, 1.0).unwrap();
        assert_eq!(c2.cells.len(), 4);
        for cell in &c2.cells {
            assert!((cell.length() - 1.0 / 9.0).abs() < 1e-15);
        }
        assert!(matches!(
            unit_cantor().cover(41, 1.0),
            Err(ExceptionalError::CoverTooDeep { .. })
        ));
    }

    #[test]
    fn point_cover_examples() {
        let origin = ExceptionalSet::points(vec![0.0]).unwrap();
        let c = origin.cover(3, 0.8).unwrap();
        assert_eq!(c.cells, vec![iv(-0.1, 0.1)]);
        let pair = ExceptionalSet::points(vec![0.0, 0.1]).unwrap();
        assert!(matches!(pair.cover(0, 0.05), Err(ExceptionalError::CoverOverlap { index: 0 })));
        assert!(pair.cover(1, 0.05).is_ok());
        assert!(origin.cover(0, 0.0).is_err());
    }

    #[test]
    fn covers_refine_and_shrink() {
        let e = unit_cantor();
        for n in 0..12 {
            let coarse = e.cover(n, 1.0).unwrap();
            let fine = e.cover(n + 1, 1.0).unwrap();
            for cell in &fine.cells {
                assert!(coarse.cells.iter().any(|c| c.encloses(cell)), "depth {n}");
            }
            let expected = (2.0f64 / 3.0).powi(n as i32);
            assert!((coarse.total_length() - expected).abs() < 1e-12);
            for cell in &coarse.cells {
                assert!(e.contains(cell.lo(), n.max(1)));
                assert!(e.contains(cell.hi(), n.max(1)));
            }
        }
        let points = ExceptionalSet::points(vec![-0.5, 0.25]).unwrap();
        for n in 0..8 {
            let coarse = points.cover(n, 0.2).unwrap();
            let fine = points.cover(n + 1, 0.2).unwrap();
            for (c, f) in coarse.cells.iter().zip(&fine.cells) {
                assert!(c.encloses(f));
            }
        }
    }

    #[test]
    fn pick_tag_examples() {
        let origin = ExceptionalSet::points(vec![0.0]).unwrap();
        assert_eq!(origin.pick_tag(&iv(-0.5, 0.5)), Some(0.0));
        assert_eq!(origin.pick_tag(&iv(0.2, 0.4)), None);
        assert_eq!(unit_cantor().pick_tag(&iv(0.6, 0.7)), Some(2.0 / 3.0));
        assert_eq!(unit_cantor().pick_tag(&iv(0.4, 0.6)), None);
        assert_eq!(unit_cantor().pick_tag(&iv(0.0, 0.01)), Some(0.0));
        assert_eq!(ExceptionalSet::Empty.pick_tag(&iv(-1.0, 1.0)), None);
    }

    #[test]
    fn picked_tags_are_members_inside_the_cell() {
        let e = unit_cantor();
        for i in 0..500 {
            let lo = f64::from(i) / 503.0;
            let cell = iv(lo, lo + 0.004);
            if let Some(t) = e.pick_tag(&cell) {
                assert!(cell.contains(t));
                assert!(e.contains(t, WORKING_DEPTH), "tag {t} for {cell}");
            }
        }
    }

    #[test]
    fn distances() {
        let pts = ExceptionalSet::points(vec![-1.0, 2.0]).unwrap();
        assert_eq!(pts.distance(0.0), 1.0);
        assert_eq!(pts.distance(1.5), 0.5);
        assert_eq!(ExceptionalSet::Empty.distance(0.0), f64::INFINITY);
        let e = unit_cantor();
        assert!((e.distance(0.5) - 1.0 / 6.0).abs() < 1e-15);
        assert!((e.distance(0.4) - (0.4 - 1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(e.distance(-0.25), 0.25);
        assert!(e.distance(1.0 / 3.0) < 1e-14);
        assert!(e.distance(0.25) < 1e-14);
    }
}
