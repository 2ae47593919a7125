//! Generalized Riemann integration by gauge refinement.
//!
//! Level `k` uses the gauge `δ_k(x) = γ_k` on `E` and
//! `min(h_k, c·dist(x, E)^p)` off it, with `h_k = h₀·2^-k` and
//! `γ_k = γ₀·4^-k`, and evaluates the Riemann sum over the Cousin partition
//! of that gauge. When `E` is a finite set, each level also sums over a few
//! deliberately lopsided δ_k-fine partitions whose singular cells are
//! `[p - γ/2, p + ργ/2]`: an integrand whose integral only exists as a
//! symmetric principal value gives visibly different sums on those, which
//! is what separates `1/x` from an integrable singularity.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::GaugeHints;
use crate::exceptional::{ExceptionalSet, WORKING_DEPTH};
use crate::kernel::{difference_quotient, riemann_sum, CompensatedSum, ExtendedFunction, Interval, TaggedPartition};
use crate::partition::{cousin_visit, in_restriction, random_partition, Caps, Gauge, PartitionError, TagPolicy};

/// Values beyond this magnitude are taken as a blow-up.
pub const DIVERGENCE_MAGNITUDE: f64 = 1e12;
/// Consecutive non-contracting levels after which a run is declared divergent.
pub const DIVERGENCE_RUN: u32 = 5;
/// A lopsided-window sum may use at most this many times the cells of the
/// base partition; beyond that it is skipped for the level.
pub const VARIANT_COST_FACTOR: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralStatus {
    Converged,
    Divergent,
    BudgetExhausted,
}

impl IntegralStatus {
    pub fn name(self) -> &'static str {
        match self {
            IntegralStatus::Converged => "CONVERGED",
            IntegralStatus::Divergent => "DIVERGENT",
            IntegralStatus::BudgetExhausted => "BUDGET_EXHAUSTED",
        }
    }
}

impl fmt::Display for IntegralStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One refinement level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: u32,
    pub h: f64,
    pub gamma: f64,
    /// Cells in the base partition.
    pub cells: usize,
    pub value: f64,
    /// Largest deviation of a lopsided-window sum from `value` (0 if none).
    pub spread: f64,
    /// Lopsided-window sums that fit their budget.
    pub variants: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralResult {
    /// Last computed value (NaN if no level completed).
    pub value: f64,
    pub status: IntegralStatus,
    pub trace: Vec<TraceRow>,
    /// Why the run stopped, when it did not converge.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaugeStrategy {
    Uniform { h: f64 },
    SingularityAdapted { h: f64, c: f64, gamma: f64, dist_power: f64 },
}

impl GaugeStrategy {
    pub fn gauge(&self, exceptional: &ExceptionalSet) -> Gauge {
        match *self {
            GaugeStrategy::Uniform { h } => Gauge::constant(h),
            GaugeStrategy::SingularityAdapted { h, c, gamma, dist_power } => {
                if exceptional.is_empty() {
                    return Gauge::constant(h);
                }
                let e = Arc::new(exceptional.clone());
                Gauge::new(move |x| {
                    if e.contains(x, WORKING_DEPTH) {
                        return gamma;
                    }
                    let d = e.distance(x);
                    let scaled = if dist_power == 1.0 { c * d } else { c * d.powf(dist_power) };
                    let delta = h.min(scaled);
                    if delta > 0.0 {
                        delta
                    } else {
                        gamma
                    }
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorOptions {
    pub tol: f64,
    pub policy: TagPolicy,
    pub caps: Caps,
    pub max_levels: u32,
    /// Defaults to `|ambient| / 8`.
    pub h0: Option<f64>,
    pub c: f64,
    /// Defaults to `1e-6·|ambient|`.
    pub gamma0: Option<f64>,
    pub dist_power: f64,
    /// Right/left extent ratios of the lopsided singular windows.
    pub window_ratios: Vec<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            tol: 1e-6,
            policy: TagPolicy::Henstock,
            caps: Caps::default(),
            max_levels: 40,
            h0: None,
            c: 0.5,
            gamma0: None,
            dist_power: 1.0,
            window_ratios: vec![1.0, 0.5, 0.125],
        }
    }
}

impl IntegratorOptions {
    pub fn with_hints(mut self, hints: &GaugeHints) -> Self {
        if hints.h0.is_some() {
            self.h0 = hints.h0;
        }
        if let Some(c) = hints.c {
            self.c = c;
        }
        if hints.gamma0.is_some() {
            self.gamma0 = hints.gamma0;
        }
        if let Some(p) = hints.dist_power {
            self.dist_power = p;
        }
        self
    }
}

/// The generalized Riemann integral of `f` over `ambient`, where `f` may be
/// singular on `exceptional`.
pub fn gr_integral(
    f: &ExtendedFunction,
    ambient: Interval,
    exceptional: &ExceptionalSet,
    opts: &IntegratorOptions,
) -> IntegralResult {
    refine(opts, |k| {
        let strategy = level_strategy(ambient, opts, k);
        let GaugeStrategy::SingularityAdapted { h, gamma, .. } = strategy else {
            unreachable!("levels are singularity-adapted")
        };
        let gauge = strategy.gauge(exceptional);
        let (value, cells) = partition_sum(f, ambient, &gauge, exceptional, opts.policy, opts.caps)?;
        let mut spread = 0.0f64;
        let mut variants = 0;
        for &rho in &opts.window_ratios {
            let budget = cells.saturating_mul(VARIANT_COST_FACTOR).min(opts.caps.max_cells);
            if let Some(s) = lopsided_sum(f, ambient, &gauge, exceptional, gamma, rho, opts.policy, Caps { max_cells: budget, ..opts.caps }) {
                spread = spread.max((s - value).abs());
                variants += 1;
            }
        }
        Ok(TraceRow { k, h, gamma, cells, value, spread, variants })
    })
}

/// The gauge of refinement level `k`.
pub fn level_strategy(ambient: Interval, opts: &IntegratorOptions, k: u32) -> GaugeStrategy {
    let len = ambient.length();
    let scale = 0.5f64.powi(k as i32);
    GaugeStrategy::SingularityAdapted {
        h: opts.h0.unwrap_or(len / 8.0) * scale,
        c: opts.c,
        gamma: opts.gamma0.unwrap_or(1e-6 * len) * scale * scale,
        dist_power: opts.dist_power,
    }
}

/// A Riemann sum over a pseudo-random partition that is fine for the gauge
/// of level `k`: a spot check that the value does not depend on the
/// Cousin construction. Returns the sum and the cell count.
pub fn random_cross_check(
    f: &ExtendedFunction,
    ambient: Interval,
    exceptional: &ExceptionalSet,
    opts: &IntegratorOptions,
    k: u32,
    seed: u64,
) -> Result<(f64, usize), PartitionError> {
    let gauge = level_strategy(ambient, opts, k).gauge(exceptional);
    let partition = random_partition(ambient, &gauge, exceptional, opts.policy, seed, opts.caps)?;
    Ok((riemann_sum(f, &partition), partition.len()))
}

/// The ordinary Riemann integral: uniform gauges, tags inside their cells.
pub fn ordinary_riemann(f: &ExtendedFunction, ambient: Interval, opts: &IntegratorOptions) -> IntegralResult {
    let h0 = opts.h0.unwrap_or(ambient.length() / 8.0);
    let policy = match opts.policy {
        TagPolicy::McShane => TagPolicy::Henstock,
        p => p,
    };
    refine(opts, |k| {
        let h = h0 * 0.5f64.powi(k as i32);
        let gauge = Gauge::constant(h);
        let (value, cells) = partition_sum(f, ambient, &gauge, &ExceptionalSet::Empty, policy, opts.caps)?;
        Ok(TraceRow { k, h, gamma: h, cells, value, spread: 0.0, variants: 0 })
    })
}

fn refine(
    opts: &IntegratorOptions,
    mut level: impl FnMut(u32) -> Result<TraceRow, PartitionError>,
) -> IntegralResult {
    let half_tol = opts.tol / 2.0;
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut prev_change: Option<f64> = None;
    let mut stable = 0;
    let mut growing = 0;
    let finish = |trace: Vec<TraceRow>, status, note: Option<String>| IntegralResult {
        value: trace.last().map_or(f64::NAN, |r| r.value),
        status,
        trace,
        note,
    };
    for k in 0..opts.max_levels {
        let row = match level(k) {
            Ok(row) => row,
            Err(e) => return finish(trace, IntegralStatus::BudgetExhausted, Some(e.to_string())),
        };
        let prev = trace.last().map(|r| r.value);
        trace.push(row);
        if !row.value.is_finite() || row.value.abs() > DIVERGENCE_MAGNITUDE {
            let note = format!("|value| exceeded {DIVERGENCE_MAGNITUDE:e} at level {k}");
            return finish(trace, IntegralStatus::Divergent, Some(note));
        }
        let Some(prev) = prev else { continue };
        let change = (row.value - prev).abs().max(row.spread);
        if change < half_tol {
            stable += 1;
            if stable >= 2 {
                return finish(trace, IntegralStatus::Converged, None);
            }
        } else {
            stable = 0;
        }
        if change >= half_tol && prev_change.is_some_and(|p| change > 0.9 * p) {
            growing += 1;
            if growing >= DIVERGENCE_RUN {
                let note = format!(
                    "level-to-level change failed to contract for {DIVERGENCE_RUN} levels (last {change:e})"
                );
                return finish(trace, IntegralStatus::Divergent, Some(note));
            }
        } else {
            growing = 0;
        }
        prev_change = Some(change);
    }
    let note = format!("no convergence within {} levels", opts.max_levels);
    finish(trace, IntegralStatus::BudgetExhausted, Some(note))
}

fn partition_sum(
    f: &ExtendedFunction,
    segment: Interval,
    gauge: &Gauge,
    exceptional: &ExceptionalSet,
    policy: TagPolicy,
    caps: Caps,
) -> Result<(f64, usize), PartitionError> {
    let mut sum = CompensatedSum::new();
    let cells = cousin_visit(segment, gauge, exceptional, policy, caps, |pair| {
        sum.add(f.value(pair.tag) * pair.cell.length());
    })?;
    Ok((sum.value(), cells))
}

/// Riemann sum over a δ-fine partition whose cell at each point `p` of a
/// finite `E` is `[p - γ/2, p + ργ/2]`. `None` when `E` is not a finite set,
/// the windows would collide, or the partition exceeds `caps`.
#[allow(clippy::too_many_arguments)]
fn lopsided_sum(
    f: &ExtendedFunction,
    ambient: Interval,
    gauge: &Gauge,
    exceptional: &ExceptionalSet,
    gamma: f64,
    rho: f64,
    policy: TagPolicy,
    caps: Caps,
) -> Option<f64> {
    let points = exceptional.finite_points();
    if points.is_empty() {
        return None;
    }
    let mut windows = Vec::with_capacity(points.len());
    let mut start = ambient.lo();
    for &p in points {
        let lo = (p - gamma / 2.0).max(ambient.lo());
        let hi = (p + rho * gamma / 2.0).min(ambient.hi());
        if lo < start || hi <= lo || !gauge.covers(&Interval::new(lo, hi).ok()?, p) {
            return None;
        }
        windows.push((lo, hi, p));
        start = hi;
    }
    let mut sum = CompensatedSum::new();
    let mut left = caps.max_cells;
    let mut gap = |lo: f64, hi: f64, sum: &mut CompensatedSum| -> Option<()> {
        if hi > lo {
            let seg = Interval::new(lo, hi).ok()?;
            let caps = Caps { max_cells: left, ..caps };
            let (s, cells) = partition_sum(f, seg, gauge, exceptional, policy, caps).ok()?;
            sum.add(s);
            left -= cells;
        }
        Some(())
    };
    let mut start = ambient.lo();
    for (lo, hi, p) in windows {
        gap(start, lo, &mut sum)?;
        sum.add(f.value(p) * (hi - lo));
        start = hi;
    }
    gap(start, ambient.hi(), &mut sum)?;
    Some(sum.value())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitCheckOptions {
    pub eps: f64,
    pub samples: usize,
    pub seed: u64,
    pub policy: TagPolicy,
}

impl Default for LimitCheckOptions {
    fn default() -> Self {
        LimitCheckOptions {
            eps: 1e-3,
            samples: 1000,
            seed: 0,
            policy: TagPolicy::Henstock,
        }
    }
}

/// A sampled tag at which the difference quotient of `F` never came within
/// `ε` of `f(tag)`, reported at the smallest scale tried.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitViolation {
    pub tag: f64,
    pub cell: Interval,
    pub quotient: f64,
    pub value: f64,
}

/// Samples tags away from `E` and checks that `ΔF(I)/|I| → f(tag)` as the
/// cells `I` around each tag shrink.
///
/// The scale ladder stops where rounding in `ΔF` would dominate, so a tag
/// passes when some tested scale gets the quotient within `ε`.
pub fn limit_check(
    antiderivative: &ExtendedFunction,
    derivative: &ExtendedFunction,
    ambient: Interval,
    exceptional: &ExceptionalSet,
    opts: &LimitCheckOptions,
) -> Vec<LimitViolation> {
    let len = ambient.length();
    let margin = 1e-2 * len;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut violations = Vec::new();
    let mut drawn = 0;
    let mut attempts = 0;
    while drawn < opts.samples && attempts < 100 * opts.samples.max(1) {
        attempts += 1;
        let tag = rng.gen_range(ambient.lo() + margin..=ambient.hi() - margin);
        let dist = exceptional.distance(tag);
        if dist < margin || exceptional.contains(tag, WORKING_DEPTH) {
            continue;
        }
        drawn += 1;
        let value = derivative.value(tag);
        let reach = (tag - ambient.lo()).min(ambient.hi() - tag);
        let mut scale = (len / 8.0).min(dist / 2.0).min(reach / 2.0);
        let magnitude = antiderivative.value(tag).abs().max(f64::MIN_POSITIVE);
        let floor = 64.0 * ulp(magnitude).max(ulp(tag)) / opts.eps;
        let offset: f64 = rng.gen_range(0.0..=1.0);
        let mut best = f64::INFINITY;
        let mut finest = None;
        while scale >= floor {
            let cell = shaped_cell(tag, scale, offset, opts.policy);
            if let Ok(q) = difference_quotient(antiderivative, &cell) {
                best = best.min((q - value).abs());
                finest = Some((cell, q));
            }
            if best < opts.eps {
                break;
            }
            scale /= 2.0;
        }
        if best >= opts.eps {
            if let Some((cell, quotient)) = finest {
                violations.push(LimitViolation { tag, cell, quotient, value });
            }
        }
    }
    violations
}

/// A cell of length `scale` placed around `tag` as the policy allows.
fn shaped_cell(tag: f64, scale: f64, offset: f64, policy: TagPolicy) -> Interval {
    let (lo, hi) = match policy {
        TagPolicy::Henstock => (tag - offset * scale, tag + (1.0 - offset) * scale),
        // tag up to half a cell outside
        TagPolicy::McShane => {
            let lo = tag + (offset * 2.0 - 1.5) * scale;
            (lo, lo + scale)
        }
        TagPolicy::LeftEndpoint => (tag, tag + scale),
        TagPolicy::RightEndpoint => (tag - scale, tag),
    };
    Interval::new(lo, hi).expect("finite cell")
}

fn ulp(v: f64) -> f64 {
    let v = v.abs();
    f64::from_bits(v.to_bits() + 1) - v
}

/// Indices of pairs outside the restriction to `E` that break
/// `|f(x)·|I| - ΔF(I)| < ε·|I|`.
pub fn proximity_violations(
    antiderivative: &ExtendedFunction,
    derivative: &ExtendedFunction,
    partition: &TaggedPartition,
    exceptional: &ExceptionalSet,
    eps: f64,
) -> Vec<usize> {
    partition
        .pairs()
        .iter()
        .enumerate()
        .filter(|(_, pair)| !in_restriction(pair, exceptional))
        .filter(|(_, pair)| {
            let len = pair.cell.length();
            let linear = derivative.value(pair.tag) * len;
            let delta = antiderivative.value(pair.cell.hi()) - antiderivative.value(pair.cell.lo());
            let gap = (linear - delta).abs();
            gap.is_nan() || gap >= eps * len
        })
        .map(|(i, _)| i)
        .collect()
}

pub fn proximity_check(
    antiderivative: &ExtendedFunction,
    derivative: &ExtendedFunction,
    partition: &TaggedPartition,
    exceptional: &ExceptionalSet,
    eps: f64,
) -> bool {
    proximity_violations(antiderivative, derivative, partition, exceptional, eps).is_empty()
}
