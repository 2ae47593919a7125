//! Exact ternary expansions of binary64 values in `[0, 1]`.
//!
//! A float is first snapped to the simplest triadic rational `p / 3^k`
//! lying within two ulp of it, so that values such as `1/3` or `2/9`, which
//! binary64 cannot represent, still get their finite ternary expansion.
//! Snapping only considers levels whose spacing `3^-k` is at least 36 ulp;
//! finer triadics are dense at float resolution and every input would snap
//! to one of them. Inputs that do not snap are expanded exactly from their
//! binary representation. All digit arithmetic is done on integers.

pub(crate) const MAX_LEVEL: u32 = 40;

pub(crate) const POW3: [u64; MAX_LEVEL as usize + 1] = {
    let mut table = [1u64; MAX_LEVEL as usize + 1];
    let mut i = 1;
    while i <= MAX_LEVEL as usize {
        table[i] = table[i - 1] * 3;
        i += 1;
    }
    table
};

/// Largest binary exponent shift for which `mantissa * 3^40` and `2^shift`
/// both fit in a `u128`.
const MAX_SHIFT: u32 = 116;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Ternary {
    /// The value 1, whose Cantor-relevant expansion is `0.222…`.
    One,
    Digits {
        digits: [u8; MAX_LEVEL as usize],
        len: usize,
        /// All digits after `len` are zero.
        terminating: bool,
    },
}

/// `mantissa * 2^-shift == t` exactly, for normal `t` in `(0, 1)`.
fn binary_parts(t: f64) -> Option<(u64, u32)> {
    let bits = t.to_bits();
    let exponent = ((bits >> 52) & 0x7ff) as u32;
    if exponent == 0 {
        return None;
    }
    let mantissa = (bits & ((1u64 << 52) - 1)) | (1u64 << 52);
    let shift = 1075 - exponent;
    (shift <= MAX_SHIFT).then_some((mantissa, shift))
}

fn digits_of(mut num: u64, level: u32) -> Ternary {
    let mut digits = [0u8; MAX_LEVEL as usize];
    for i in (0..level as usize).rev() {
        digits[i] = (num % 3) as u8;
        num /= 3;
    }
    Ternary::Digits {
        digits,
        len: level as usize,
        terminating: true,
    }
}

/// Nearest simplest triadic rational within two ulp of `t`, as `(p, k)`.
#[cfg(test)]
fn snap(t: f64) -> Option<(u64, u32)> {
    snap_within(t, 2)
}

/// Like [`snap`] with a tolerance of `slack` ulp, for inputs that carry more
/// rounding error than a single operation. Levels finer than `18 * slack`
/// ulp are not considered.
pub(crate) fn snap_within(t: f64, slack: u64) -> Option<(u64, u32)> {
    let slack = u128::from(slack.max(2));
    if t == 0.0 {
        return Some((0, 0));
    }
    if t == 1.0 {
        return Some((1, 0));
    }
    let (mantissa, shift) = binary_parts(t)?;
    let one = 1u128 << shift;
    // At the finest admissible level candidates are at least 18·slack ulp
    // apart, so at most one lies within slack ulp, and every coarser
    // triadic is also a triadic of that level.
    let fits = |k: u32| 18 * slack * u128::from(POW3[k as usize]) <= one;
    // estimate from bit lengths, then settle exactly
    let slack_bits = 128 - (18 * slack).leading_zeros();
    // log3(2) ≈ 1292/2048
    let mut level = (shift.saturating_sub(slack_bits) * 1292 / 2048).min(MAX_LEVEL);
    while level > 0 && !fits(level) {
        level -= 1;
    }
    while level < MAX_LEVEL && fits(level + 1) {
        level += 1;
    }
    if !fits(level) {
        return None;
    }
    let p3 = u128::from(POW3[level as usize]);
    let scaled = u128::from(mantissa) * p3;
    let floor = scaled >> shift;
    let rem = scaled & (one - 1);
    let (num, dist) = if 2 * rem >= one { (floor + 1, one - rem) } else { (floor, rem) };
    // |t - num/3^k| = dist / (2^shift 3^k) and ulp(t) = 2^-shift
    if dist > slack * p3 {
        return None;
    }
    let mut num = num as u64;
    while level > 0 && num % 3 == 0 {
        num /= 3;
        level -= 1;
    }
    Some((num, level))
}

/// Ternary expansion of `t` in `[0, 1]` (values outside are clamped).
#[cfg(test)]
pub(crate) fn expand(t: f64) -> Ternary {
    expand_within(t, 2)
}

pub(crate) fn expand_within(t: f64, slack: u64) -> Ternary {
    let t = t.clamp(0.0, 1.0);
    if let Some((num, level)) = snap_within(t, slack) {
        if num == POW3[level as usize] {
            return Ternary::One;
        }
        return digits_of(num, level);
    }
    let mut digits = [0u8; MAX_LEVEL as usize];
    match binary_parts(t) {
        Some((mantissa, shift)) => {
            let mask = (1u128 << shift) - 1;
            let mut rem = u128::from(mantissa);
            for d in digits.iter_mut() {
                rem *= 3;
                *d = (rem >> shift) as u8;
                rem &= mask;
            }
            Ternary::Digits {
                digits,
                len: MAX_LEVEL as usize,
                terminating: rem == 0,
            }
        }
        // below 2^-64 every one of the first 40 digits is zero
        None => Ternary::Digits {
            digits,
            len: MAX_LEVEL as usize,
            terminating: false,
        },
    }
}

/// Membership of `t` in the middle-thirds Cantor set, judged on the first
/// `depth` ternary digits.
#[cfg(test)]
fn in_cantor_set(t: f64, depth: u32) -> bool {
    in_cantor_set_within(t, depth, 2)
}

pub(crate) fn in_cantor_set_within(t: f64, depth: u32, slack: u64) -> bool {
    if !(0.0..=1.0).contains(&t) {
        return false;
    }
    match expand_within(t, slack) {
        Ternary::One => true,
        Ternary::Digits {
            digits,
            len,
            terminating,
        } => {
            let depth = (depth as usize).min(len);
            match digits[..depth].iter().position(|&d| d == 1) {
                None => true,
                // 0.xx1000… is the endpoint 0.xx0222…
                Some(i) => terminating && digits[i + 1..len].iter().all(|&d| d == 0),
            }
        }
    }
}

/// Cantor function value from the ternary expansion.
pub(crate) fn cantor_value(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    if let Some((num, level)) = snap_within(t, 2) {
        return triadic_cantor_value(num, level);
    }
    match binary_parts(t) {
        Some((mantissa, shift)) => {
            // digits stream exactly; stop once they no longer move the result
            let mask = (1u128 << shift) - 1;
            let mut rem = u128::from(mantissa);
            let mut acc = 0.0f64;
            let mut bit = 0.5f64;
            while acc == 0.0 || bit >= acc * f64::EPSILON / 4.0 {
                rem *= 3;
                match rem >> shift {
                    0 => {}
                    2 => acc += bit,
                    _ => return acc + bit,
                }
                rem &= mask;
                if rem == 0 {
                    break;
                }
                bit *= 0.5;
            }
            acc
        }
        // C(t) = C(3^j t) / 2^j; one rounding in the product
        None if t > 0.0 => cantor_value(t * 3f64.powi(33)) / 2f64.powi(33),
        None => 0.0,
    }
}

/// `C(num / 3^level)`, folding digits from the least significant:
/// `C(0.0r) = C(0.r)/2`, `C(0.2r) = 1/2 + C(0.r)/2`, `C(0.1r) = 1/2`.
fn triadic_cantor_value(mut num: u64, level: u32) -> f64 {
    if num == POW3[level as usize] {
        return 1.0;
    }
    let mut acc = 0.0f64;
    for _ in 0..level {
        let digit = num % 3;
        // branch-free: digits are unpredictable
        let folded = digit as f64 * 0.25 + acc * 0.5;
        acc = if digit == 1 { 0.5 } else { folded };
        num /= 3;
    }
    acc
}
