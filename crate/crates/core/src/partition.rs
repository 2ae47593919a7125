//! Gauges, tag policies and the construction of δ-fine tagged partitions.
//!
//! Partitions are built by Cousin-style bisection: a segment is accepted as
//! one cell as soon as some admissible tag has a gauge window covering it,
//! and is halved otherwise. A segment that meets the exceptional set `E` is
//! only ever tagged at a point of `E` inside it, which makes every generated
//! partition *E-compatible*.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exceptional::{ExceptionalSet, WORKING_DEPTH};
use crate::kernel::{Interval, TaggedPair, TaggedPartition};

pub const DEFAULT_MAX_DEPTH: u32 = 60;
pub const DEFAULT_MAX_CELLS: usize = 20_000_000;

/// A strictly positive point function `δ`.
#[derive(Clone)]
pub struct Gauge(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl Gauge {
    pub fn new(delta: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Gauge(Arc::new(delta))
    }

    pub fn constant(h: f64) -> Self {
        Gauge::new(move |_| h)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.0)(x)
    }

    /// Whether `cell ⊂ (tag - δ(tag), tag + δ(tag))`.
    #[inline]
    pub fn covers(&self, cell: &Interval, tag: f64) -> bool {
        let d = self.eval(tag);
        tag - d < cell.lo() && cell.hi() < tag + d
    }
}

impl fmt::Debug for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Gauge(..)")
    }
}

/// Where a tag may sit relative to its cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum TagPolicy {
    /// Inside the cell.
    #[default]
    Henstock,
    /// Anywhere in the ambient interval.
    McShane,
    LeftEndpoint,
    RightEndpoint,
}

impl TagPolicy {
    pub const ALL: [TagPolicy; 4] = [
        TagPolicy::Henstock,
        TagPolicy::McShane,
        TagPolicy::LeftEndpoint,
        TagPolicy::RightEndpoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TagPolicy::Henstock => "henstock",
            TagPolicy::McShane => "mcshane",
            TagPolicy::LeftEndpoint => "left",
            TagPolicy::RightEndpoint => "right",
        }
    }

    /// The tag this policy puts on a cell free of `E`.
    fn default_tag(self, cell: &Interval) -> f64 {
        match self {
            TagPolicy::Henstock | TagPolicy::McShane => cell.midpoint(),
            TagPolicy::LeftEndpoint => cell.lo(),
            TagPolicy::RightEndpoint => cell.hi(),
        }
    }

    fn admits(self, cell: &Interval, tag: f64, ambient: &Interval) -> bool {
        match self {
            TagPolicy::Henstock => cell.contains(tag),
            TagPolicy::McShane => ambient.contains(tag),
            TagPolicy::LeftEndpoint => tag == cell.lo(),
            TagPolicy::RightEndpoint => tag == cell.hi(),
        }
    }
}

impl fmt::Display for TagPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown tag policy `{0}` (expected henstock, mcshane, left or right)")]
pub struct UnknownPolicy(pub String);

impl FromStr for TagPolicy {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "henstock" => Ok(TagPolicy::Henstock),
            "mcshane" => Ok(TagPolicy::McShane),
            "left" | "leftendpoint" | "left-endpoint" => Ok(TagPolicy::LeftEndpoint),
            "right" | "rightendpoint" | "right-endpoint" => Ok(TagPolicy::RightEndpoint),
            _ => Err(UnknownPolicy(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub max_depth: u32,
    pub max_cells: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_depth: DEFAULT_MAX_DEPTH,
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionError {
    #[error("bisection depth limit {max_depth} reached at [{lo}, {hi}]")]
    DepthExceeded { max_depth: u32, lo: f64, hi: f64 },
    #[error("cell budget of {max_cells} exceeded")]
    CellBudgetExceeded { max_cells: usize },
    #[error("gauge is not strictly positive at {x} (value {value})")]
    NonPositiveGauge { x: f64, value: f64 },
}

/// Whether every pair is δ-fine.
pub fn is_delta_fine(partition: &TaggedPartition, gauge: &Gauge) -> bool {
    partition.pairs().iter().all(|p| gauge.covers(&p.cell, p.tag))
}

/// A δ-fine, policy-conformant, E-compatible partition of `ambient`.
pub fn cousin_partition(
    ambient: Interval,
    gauge: &Gauge,
    exceptional: &ExceptionalSet,
    policy: TagPolicy,
    caps: Caps,
) -> Result<TaggedPartition, PartitionError> {
    let mut pairs = Vec::new();
    cousin_visit(ambient, gauge, exceptional, policy, caps, |pair| pairs.push(pair))?;
    Ok(TaggedPartition::new_unchecked(ambient, pairs))
}

/// [`cousin_partition`] without materializing the pairs: `visit` receives
/// them left to right. Returns the number of cells.
pub fn cousin_visit(
    ambient: Interval,
    gauge: &Gauge,
    exceptional: &ExceptionalSet,
    policy: TagPolicy,
    caps: Caps,
    visit: impl FnMut(TaggedPair),
) -> Result<usize, PartitionError> {
    bisect(ambient, gauge, exceptional, caps, visit, |segment, _| {
        vec![policy.default_tag(segment)]
    }, midpoint_split, &mut NoExtraSplits)
}

/// Like [`cousin_partition`] but with pseudo-random split points, tags and
/// extra refinement, reproducible from `seed`.
pub fn random_partition(
    ambient: Interval,
    gauge: &Gauge,
    exceptional: &ExceptionalSet,
    policy: TagPolicy,
    seed: u64,
    caps: Caps,
) -> Result<TaggedPartition, PartitionError> {
    let rng = std::cell::RefCell::new(ChaCha8Rng::seed_from_u64(seed));
    let mut pairs = Vec::new();
    let mut extra = RandomExtraSplits {
        rng: &rng,
        max_depth: caps.max_depth.saturating_sub(8),
    };
    bisect(
        ambient,
        gauge,
        exceptional,
        caps,
        |pair| pairs.push(pair),
        |segment, _| {
            let mut rng = rng.borrow_mut();
            let len = segment.length();
            let mut candidates = Vec::with_capacity(3);
            match policy {
                TagPolicy::Henstock => {
                    candidates.push(rng.gen_range(segment.lo()..=segment.hi()));
                }
                TagPolicy::McShane => {
                    let lo = (segment.lo() - len / 2.0).max(ambient.lo());
                    let hi = (segment.hi() + len / 2.0).min(ambient.hi());
                    let t = rng.gen_range(lo..=hi);
                    if !exceptional.contains(t, WORKING_DEPTH) {
                        candidates.push(t);
                    }
                }
                TagPolicy::LeftEndpoint | TagPolicy::RightEndpoint => {}
            }
            candidates.push(policy.default_tag(segment));
            candidates
        },
        |segment| {
            let u: f64 = rng.borrow_mut().gen_range(0.25..=0.75);
            let m = segment.lo() + segment.length() * u;
            if m > segment.lo() && m < segment.hi() {
                Some(m)
            } else {
                midpoint_split(segment)
            }
        },
        &mut extra,
    )?;
    Ok(TaggedPartition::new_unchecked(ambient, pairs))
}

trait ExtraSplits {
    fn split_anyway(&mut self, depth: u32) -> bool;
}

struct NoExtraSplits;

impl ExtraSplits for NoExtraSplits {
    fn split_anyway(&mut self, _: u32) -> bool {
        false
    }
}

struct RandomExtraSplits<'a> {
    rng: &'a std::cell::RefCell<ChaCha8Rng>,
    max_depth: u32,
}

impl ExtraSplits for RandomExtraSplits<'_> {
    fn split_anyway(&mut self, depth: u32) -> bool {
        depth < self.max_depth && self.rng.borrow_mut().gen_bool(0.3)
    }
}

fn midpoint_split(segment: &Interval) -> Option<f64> {
    let m = segment.midpoint();
    (m > segment.lo() && m < segment.hi()).then_some(m)
}

#[allow(clippy::too_many_arguments)]
fn bisect(
    ambient: Interval,
    gauge: &Gauge,
    exceptional: &ExceptionalSet,
    caps: Caps,
    mut visit: impl FnMut(TaggedPair),
    mut free_tags: impl FnMut(&Interval, u32) -> Vec<f64>,
    mut split: impl FnMut(&Interval) -> Option<f64>,
    extra: &mut dyn ExtraSplits,
) -> Result<usize, PartitionError> {
    let mut emitted = 0usize;
    let mut stack = vec![(ambient, 0u32)];
    while let Some((segment, depth)) = stack.pop() {
        let tags = match exceptional.pick_tag(&segment) {
            Some(t) => vec![t],
            None => free_tags(&segment, depth),
        };
        let mut accepted = None;
        for &t in &tags {
            let d = gauge.eval(t);
            if d.is_nan() || d <= 0.0 {
                return Err(PartitionError::NonPositiveGauge { x: t, value: d });
            }
            if gauge.covers(&segment, t) {
                accepted = Some(t);
                break;
            }
        }
        if let Some(tag) = accepted {
            if !extra.split_anyway(depth) {
                if emitted >= caps.max_cells {
                    return Err(PartitionError::CellBudgetExceeded {
                        max_cells: caps.max_cells,
                    });
                }
                emitted += 1;
                visit(TaggedPair::new(segment, tag));
                continue;
            }
        }
        let too_deep = || PartitionError::DepthExceeded {
            max_depth: caps.max_depth,
            lo: segment.lo(),
            hi: segment.hi(),
        };
        if depth >= caps.max_depth {
            return Err(too_deep());
        }
        let Some(m) = split(&segment) else {
            return Err(too_deep());
        };
        let left = Interval::new(segment.lo(), m).expect("split inside segment");
        let right = Interval::new(m, segment.hi()).expect("split inside segment");
        // left half is processed first so pairs come out in order
        stack.push((right, depth + 1));
        stack.push((left, depth + 1));
    }
    Ok(emitted)
}

/// The pairs of a partition whose cells meet `E` and whose tags lie in `E`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Restriction {
    pub pairs: Vec<TaggedPair>,
}

impl Restriction {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub fn restriction(partition: &TaggedPartition, exceptional: &ExceptionalSet) -> Restriction {
    Restriction {
        pairs: partition
            .pairs()
            .iter()
            .filter(|p| in_restriction(p, exceptional))
            .copied()
            .collect(),
    }
}

pub(crate) fn in_restriction(pair: &TaggedPair, exceptional: &ExceptionalSet) -> bool {
    !exceptional.is_empty()
        && exceptional.contains(pair.tag, WORKING_DEPTH)
        && exceptional.meets(&pair.cell)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    /// Cells leave part of the ambient interval uncovered.
    UnionGap,
    Overlap,
    DegenerateCell,
    TagOutsideAmbient,
    /// Tag position not allowed by the policy.
    Policy,
    /// A cell meeting `E` is not tagged at a point of `E` inside it.
    ETag,
    NotDeltaFine,
}

impl ViolationKind {
    pub fn name(self) -> &'static str {
        match self {
            ViolationKind::UnionGap => "UNION_GAP",
            ViolationKind::Overlap => "OVERLAP",
            ViolationKind::DegenerateCell => "DEGENERATE_CELL",
            ViolationKind::TagOutsideAmbient => "TAG_OUTSIDE_AMBIENT",
            ViolationKind::Policy => "POLICY",
            ViolationKind::ETag => "E_TAG",
            ViolationKind::NotDeltaFine => "NOT_DELTA_FINE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub index: usize,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at pair {}", self.kind.name(), self.index)
    }
}

/// Every way in which `partition` fails to be a valid, policy-conformant,
/// E-compatible (and, given a gauge, δ-fine) partition of `ambient`.
pub fn validate(
    partition: &TaggedPartition,
    ambient: &Interval,
    gauge: Option<&Gauge>,
    policy: TagPolicy,
    exceptional: &ExceptionalSet,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |kind, index| out.push(Violation { kind, index });
    let pairs = partition.pairs();
    if pairs.is_empty() {
        push(ViolationKind::UnionGap, 0);
        return out;
    }
    if pairs[0].cell.lo() > ambient.lo() {
        push(ViolationKind::UnionGap, 0);
    }
    if pairs[0].cell.lo() < ambient.lo() {
        push(ViolationKind::Overlap, 0);
    }
    let last = pairs.len() - 1;
    if pairs[last].cell.hi() < ambient.hi() {
        push(ViolationKind::UnionGap, last);
    }
    if pairs[last].cell.hi() > ambient.hi() {
        push(ViolationKind::Overlap, last);
    }
    for (i, pair) in pairs.iter().enumerate() {
        let cell = &pair.cell;
        if i > 0 {
            let prev = pairs[i - 1].cell.hi();
            if cell.lo() > prev {
                push(ViolationKind::UnionGap, i);
            } else if cell.lo() < prev {
                push(ViolationKind::Overlap, i);
            }
        }
        if cell.is_degenerate() {
            push(ViolationKind::DegenerateCell, i);
        }
        if !ambient.contains(pair.tag) {
            push(ViolationKind::TagOutsideAmbient, i);
        }
        if exceptional.meets(cell) {
            // tagged in E, inside the cell, whatever the policy
            if !(cell.contains(pair.tag) && exceptional.contains(pair.tag, WORKING_DEPTH)) {
                push(ViolationKind::ETag, i);
            }
        } else if !policy.admits(cell, pair.tag, ambient) {
            push(ViolationKind::Policy, i);
        }
        if let Some(gauge) = gauge {
            if !gauge.covers(cell, pair.tag) {
                push(ViolationKind::NotDeltaFine, i);
            }
        }
    }
    out
}
