//! Residues: how much of `ΔF` sits on the exceptional set.
//!
//! At a point `x` the residue is the limit of `ΔF([x - h, x + ρh])` as
//! `h → 0`, probed for several shapes `ρ`; it exists only if every shape
//! gives the same limit. Over a Cantor set the residue sum is the limit of
//! `ΔF` summed over the level-`n` construction cells.

use std::fmt;

use crate::corpus::cantor_function;
use crate::exceptional::{cantor_cells, ExceptionalSet, WORKING_DEPTH};
use crate::kernel::{CompensatedSum, ExtendedFunction, Interval};
use crate::partition::DEFAULT_MAX_CELLS;

/// Deepest Cantor level attempted by [`basic_sum`].
pub const MAX_CANTOR_LEVEL: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidueStatus {
    Summable,
    NotBasicallySummable,
    BudgetExhausted,
}

impl ResidueStatus {
    pub fn name(self) -> &'static str {
        match self {
            ResidueStatus::Summable => "SUMMABLE",
            ResidueStatus::NotBasicallySummable => "NOT_BASICALLY_SUMMABLE",
            ResidueStatus::BudgetExhausted => "BUDGET_EXHAUSTED",
        }
    }
}

impl fmt::Display for ResidueStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One evaluation: `ΔF` over the probe cell(s) at `scale` with right/left
/// extent ratio `ratio`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub scale: f64,
    pub ratio: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidueResult {
    pub value: f64,
    pub status: ResidueStatus,
    pub probes: Vec<Probe>,
    pub note: Option<String>,
}

impl ResidueResult {
    fn empty_sum() -> Self {
        ResidueResult {
            value: 0.0,
            status: ResidueStatus::Summable,
            probes: Vec::new(),
            note: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidueOptions {
    pub tol: f64,
    pub ratios: Vec<f64>,
    pub max_levels: u32,
    /// Defaults to `10⁻²·|ambient|`, further limited by the distance to the
    /// ends and to neighbouring singular points.
    pub h0: Option<f64>,
    /// Limits the Cantor level to `2^n <= max_cells`.
    pub max_cells: usize,
}

impl Default for ResidueOptions {
    fn default() -> Self {
        ResidueOptions {
            tol: 1e-6,
            ratios: vec![1.0, 0.5, 0.125],
            max_levels: 40,
            h0: None,
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

/// The residue of `F` at `x`.
///
/// At an end of `ambient` the probe cells are one-sided, `[x, x + ρh]` or
/// `[x - ρh, x]`, as the cells of a partition of `ambient` would be.
pub fn point_residue(
    antiderivative: &ExtendedFunction,
    x: f64,
    ambient: Interval,
    opts: &ResidueOptions,
) -> ResidueResult {
    if !ambient.contains(x) {
        return ResidueResult {
            value: f64::NAN,
            status: ResidueStatus::BudgetExhausted,
            probes: Vec::new(),
            note: Some(format!("{x} lies outside {ambient}")),
        };
    }
    let h0 = initial_scale(antiderivative.singular_set(), x, ambient, opts);
    let at_lo = x == ambient.lo();
    let at_hi = x == ambient.hi();
    let f = |t: f64| antiderivative.value(t);
    let probe = |h: f64, rho: f64| -> f64 {
        if at_lo {
            f(x + rho * h) - f(x)
        } else if at_hi {
            f(x) - f(x - rho * h)
        } else {
            f(x + rho * h) - f(x - h)
        }
    };

    let mut probes = Vec::new();
    let mut spreads: Vec<f64> = Vec::new();
    let mut prev: Option<f64> = None;
    let mut stable = 0;
    for k in 0..opts.max_levels {
        let h = h0 * 0.5f64.powi(k as i32);
        let values: Vec<f64> = opts.ratios.iter().map(|&rho| probe(h, rho)).collect();
        probes.extend(opts.ratios.iter().zip(&values).map(|(&ratio, &value)| Probe { scale: h, ratio, value }));
        let lead = values[0];
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let spread = max - min;
        spreads.push(spread);
        // settle well inside tol: slowly vanishing jumps (√h) would
        // otherwise stop with an error of nearly tol
        let settled = spread <= opts.tol / 4.0 && prev.is_some_and(|p| (lead - p).abs() <= opts.tol / 4.0);
        stable = if settled { stable + 1 } else { 0 };
        if stable >= 2 {
            return ResidueResult {
                value: lead,
                status: ResidueStatus::Summable,
                probes,
                note: None,
            };
        }
        prev = Some(lead);
    }
    let value = prev.unwrap_or(f64::NAN);
    let finest = &spreads[spreads.len().saturating_sub(2)..];
    if finest.len() == 2 && finest.iter().all(|&s| s > 10.0 * opts.tol || s.is_nan()) {
        ResidueResult {
            value,
            status: ResidueStatus::NotBasicallySummable,
            probes,
            note: Some(format!(
                "cell shapes disagree by {:e} at the finest scale",
                finest[1]
            )),
        }
    } else {
        ResidueResult {
            value,
            status: ResidueStatus::BudgetExhausted,
            probes,
            note: Some(format!("no stable limit within {} levels", opts.max_levels)),
        }
    }
}

fn initial_scale(singular: &ExceptionalSet, x: f64, ambient: Interval, opts: &ResidueOptions) -> f64 {
    let mut h = opts.h0.unwrap_or(1e-2 * ambient.length());
    for end in [ambient.lo(), ambient.hi()] {
        if x != end {
            h = h.min((x - end).abs() / 2.0);
        }
    }
    match singular {
        ExceptionalSet::FinitePoints(points) => {
            for &p in points {
                if p != x {
                    h = h.min((p - x).abs() / 2.0);
                }
            }
        }
        ExceptionalSet::CantorMiddleThirds(_) if !singular.contains(x, WORKING_DEPTH) => {
            h = h.min(singular.distance(x) / 2.0);
        }
        _ => {}
    }
    h
}

/// The residue sum `ℜ` of `F` over `E`.
pub fn basic_sum(
    antiderivative: &ExtendedFunction,
    exceptional: &ExceptionalSet,
    ambient: Interval,
    opts: &ResidueOptions,
) -> ResidueResult {
    match exceptional {
        ExceptionalSet::Empty => ResidueResult::empty_sum(),
        ExceptionalSet::FinitePoints(points) => {
            let mut sum = CompensatedSum::new();
            let mut probes = Vec::new();
            let mut worst = ResidueStatus::Summable;
            let mut note = None;
            for &p in points {
                let r = point_residue(antiderivative, p, ambient, opts);
                sum.add(r.value);
                probes.extend(r.probes);
                if r.status != ResidueStatus::Summable {
                    // NOT_BS dominates a budget failure
                    if worst != ResidueStatus::NotBasicallySummable {
                        worst = r.status;
                    }
                    note.get_or_insert_with(|| format!("at {p}: {}", r.note.unwrap_or_default()));
                }
            }
            ResidueResult {
                value: sum.value(),
                status: worst,
                probes,
                note,
            }
        }
        ExceptionalSet::CantorMiddleThirds(set) => cantor_sum(antiderivative, set, ambient, opts),
    }
}

fn cantor_sum(antiderivative: &ExtendedFunction, set: &Interval, ambient: Interval, opts: &ResidueOptions) -> ResidueResult {
    let mut probes = Vec::new();
    let mut prev: Option<f64> = None;
    let mut stable = 0;
    for n in 1..=MAX_CANTOR_LEVEL {
        if (1usize << n) > opts.max_cells {
            return ResidueResult {
                value: prev.unwrap_or(f64::NAN),
                status: ResidueStatus::BudgetExhausted,
                probes,
                note: Some(format!("level {n} needs 2^{n} cells, over the budget of {}", opts.max_cells)),
            };
        }
        let eta = 3f64.powi(-(n as i32) - 4) * set.length();
        let mut sum = CompensatedSum::new();
        for cell in cantor_cells(set, n) {
            let lo = (cell.lo() - eta).max(ambient.lo());
            let hi = (cell.hi() + eta).min(ambient.hi());
            sum.add(antiderivative.value(hi) - antiderivative.value(lo));
        }
        let s = sum.value();
        probes.push(Probe {
            scale: 3f64.powi(-(n as i32)) * set.length(),
            ratio: 1.0,
            value: s,
        });
        stable = match prev {
            Some(p) if (s - p).abs() < opts.tol => stable + 1,
            _ => 0,
        };
        if stable >= 2 {
            return ResidueResult {
                value: s,
                status: ResidueStatus::Summable,
                probes,
                note: None,
            };
        }
        prev = Some(s);
    }
    ResidueResult {
        value: prev.unwrap_or(f64::NAN),
        status: ResidueStatus::BudgetExhausted,
        probes,
        note: Some(format!("no stable level sum up to level {MAX_CANTOR_LEVEL}")),
    }
}

/// Point residues on a midpoint grid of `grid_count` non-singular points,
/// plus every point of a finite `E`, sorted by abscissa.
pub fn residue_function_profile(
    antiderivative: &ExtendedFunction,
    exceptional: &ExceptionalSet,
    ambient: Interval,
    grid_count: usize,
    opts: &ResidueOptions,
) -> Vec<(f64, ResidueResult)> {
    let step = ambient.length() / grid_count as f64;
    let mut xs: Vec<f64> = (0..grid_count)
        .map(|i| ambient.lo() + (i as f64 + 0.5) * step)
        .filter(|&x| !exceptional.contains(x, WORKING_DEPTH))
        .chain(exceptional.finite_points().iter().copied())
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.into_iter()
        .map(|x| (x, point_residue(antiderivative, x, ambient, opts)))
        .collect()
}

/// `Σ ΔC` over the level-`n` Cantor cells of `[0, 1]`, for `n = 1..=n_max`.
pub fn cantor_level_sums(n_max: u32) -> Vec<f64> {
    let n_max = n_max.min(MAX_CANTOR_LEVEL);
    (1..=n_max)
        .map(|n| {
            cantor_cells(&Interval::UNIT, n)
                .map(|cell| {
                    let c = |t: f64| cantor_function(t).expect("cell inside [0, 1]");
                    c(cell.hi()) - c(cell.lo())
                })
                .collect::<CompensatedSum>()
                .value()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Builtin;
    use crate::kernel::{extend, extend_fn};
    use std::sync::Arc;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn origin() -> ExceptionalSet {
        ExceptionalSet::points(vec![0.0]).unwrap()
    }

    fn opts(tol: f64) -> ResidueOptions {
        ResidueOptions { tol, ..Default::default() }
    }

    fn step() -> ExtendedFunction {
        extend_fn(|x: f64| Some(if x < 0.0 { 0.0 } else { 1.0 }), origin())
    }

    #[test]
    fn point_residue_examples() {
        let r = point_residue(&step(), 0.0, iv(-1.0, 1.0), &opts(1e-9));
        assert_eq!(r.status, ResidueStatus::Summable);
        assert_eq!(r.value, 1.0);

        let square = extend_fn(|x: f64| Some(x * x), origin());
        let r = point_residue(&square, 0.0, iv(-1.0, 1.0), &opts(1e-9));
        assert_eq!(r.status, ResidueStatus::Summable);
        assert!(r.value.abs() <= 1e-9);

        let log = extend_fn(|x: f64| Some(x.abs().ln()), origin());
        let r = point_residue(&log, 0.0, iv(-1.0, 1.0), &opts(1e-6));
        assert_eq!(r.status, ResidueStatus::NotBasicallySummable);
        // ln(ρh) - ln(h) = ln ρ
        let eighth = r.probes.iter().rev().find(|p| p.ratio == 0.125).unwrap();
        assert!((eighth.value - 0.125f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn basic_sum_examples() {
        let cantor = ExceptionalSet::cantor(Interval::UNIT);
        let c = extend(Arc::new(Builtin::Cantor), cantor.clone());
        let r = basic_sum(&c, &cantor, Interval::UNIT, &opts(1e-9));
        assert_eq!(r.status, ResidueStatus::Summable);
        assert!((r.value - 1.0).abs() <= 1e-9, "{}", r.value);

        let r = basic_sum(&step(), &origin(), iv(-1.0, 1.0), &opts(1e-9));
        assert_eq!(r.status, ResidueStatus::Summable);
        assert_eq!(r.value, 1.0);

        // 0 at the left end of the interval
        let sqrt = extend_fn(|x: f64| (x >= 0.0).then(|| x.sqrt()), origin());
        let r = basic_sum(&sqrt, &origin(), Interval::UNIT, &opts(1e-4));
        assert_eq!(r.status, ResidueStatus::Summable);
        assert!(r.value.abs() <= 1e-4);
    }

    #[test]
    fn empty_set_sums_to_zero() {
        let r = basic_sum(&step(), &ExceptionalSet::Empty, Interval::UNIT, &opts(1e-9));
        assert_eq!((r.value, r.status), (0.0, ResidueStatus::Summable));
    }

    #[test]
    fn cantor_budget() {
        let cantor = ExceptionalSet::cantor(Interval::UNIT);
        let c = extend(Arc::new(Builtin::Cantor), cantor.clone());
        let o = ResidueOptions { max_cells: 2, ..opts(1e-9) };
        assert_eq!(basic_sum(&c, &cantor, Interval::UNIT, &o).status, ResidueStatus::BudgetExhausted);
    }

    #[test]
    fn level_sums() {
        let sums = cantor_level_sums(20);
        assert_eq!(sums.len(), 20);
        assert_eq!(sums[0], 1.0);
        assert_eq!(sums[1], 1.0);
        for s in sums {
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn profiles() {
        let cantor = ExceptionalSet::cantor(Interval::UNIT);
        let c = extend(Arc::new(Builtin::Cantor), cantor.clone());
        let profile = residue_function_profile(&c, &cantor, Interval::UNIT, 100, &opts(1e-9));
        assert!(profile.len() >= 90);
        for (x, r) in &profile {
            assert_eq!(r.status, ResidueStatus::Summable, "{x}");
            assert!(r.value.abs() <= 1e-9, "{x}: {}", r.value);
        }

        let profile = residue_function_profile(&step(), &origin(), iv(-1.0, 1.0), 50, &opts(1e-9));
        for (x, r) in &profile {
            let expected = if *x == 0.0 { 1.0 } else { 0.0 };
            assert_eq!(r.value, expected, "{x}");
        }
    }

    #[test]
    fn jumps_carry_all_variation() {
        let e = ExceptionalSet::points(vec![-0.5, 0.25, 0.5]).unwrap();
        let f = extend_fn(
            |x: f64| {
                Some(if x < -0.5 {
                    2.0
                } else if x < 0.25 {
                    -1.0
                } else if x < 0.5 {
                    0.5
                } else {
                    4.0
                })
            },
            e.clone(),
        );
        let ambient = iv(-1.0, 1.0);
        let r = basic_sum(&f, &e, ambient, &opts(1e-12));
        assert_eq!(r.status, ResidueStatus::Summable);
        assert_eq!(r.value, f.value(1.0) - f.value(-1.0));

        let left = ExceptionalSet::points(vec![-0.5]).unwrap();
        let right = ExceptionalSet::points(vec![0.25, 0.5]).unwrap();
        let split = basic_sum(&f, &left, ambient, &opts(1e-12)).value + basic_sum(&f, &right, ambient, &opts(1e-12)).value;
        assert!((split - r.value).abs() <= 2e-12);
    }

    #[test]
    fn other_ratio_sets_agree() {
        let alt = ResidueOptions {
            ratios: vec![1.0, 1.0 / 3.0, 1.0 / 16.0],
            ..opts(1e-9)
        };
        let a = point_residue(&step(), 0.0, iv(-1.0, 1.0), &opts(1e-9));
        let b = point_residue(&step(), 0.0, iv(-1.0, 1.0), &alt);
        assert_eq!(b.status, ResidueStatus::Summable);
        assert!((a.value - b.value).abs() <= 1e-9);
    }
}
