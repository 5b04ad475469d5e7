//! Arithmetic progressions, their discrete-log images on `[0, 1)`, and exact
//! discrepancy.
//!
//! Points are stored as integer numerators over a common denominator and
//! interval endpoints as small exact fractions, so every count and every
//! discrepancy value is an exact rational. Floats only appear when a value
//! is reported.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dlog::DlogTable;

/// Cardinality limit of [`brute_force_extreme_discrepancy`].
pub const BRUTE_FORCE_CAP: usize = 5000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TorusError {
    #[error("fraction {num}/{den} is not in [0, 1] with a nonzero denominator")]
    BadFraction { num: u64, den: u64 },
    #[error("cannot parse {0:?} as a fraction in [0, 1]")]
    Parse(String),
    #[error("interval endpoints out of order: alpha > beta")]
    Reversed,
    #[error("progression needs r ≥ 1 and N ≥ 1")]
    DegenerateProgression,
    #[error("progression {a} + j·{r}, j = 1..{n}, leaves [1, {max}]")]
    ProgressionOutOfRange { a: u64, r: u64, n: u64, max: u64 },
    #[error("progression element {0} is divisible by p")]
    ZeroElement(u64),
    #[error("numerator {num} is not below the denominator {den}")]
    PointOutOfRange { num: u64, den: u64 },
    #[error("point set is empty")]
    Empty,
    #[error("brute force is limited to {BRUTE_FORCE_CAP} points, got {0}")]
    TooManyPoints(usize),
}

/// An exact fraction in `[0, 1]` with a 32-bit numerator and denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Frac {
    num: u32,
    den: u32,
}

impl Frac {
    pub const ZERO: Frac = Frac { num: 0, den: 1 };
    pub const ONE: Frac = Frac { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self, TorusError> {
        if den == 0 || num > den {
            return Err(TorusError::BadFraction { num, den });
        }
        let g = crate::numtheory::gcd(num, den);
        let (num, den) = (num / g, den / g);
        match (u32::try_from(num), u32::try_from(den)) {
            (Ok(num), Ok(den)) => Ok(Self { num, den }),
            _ => Err(TorusError::BadFraction { num, den }),
        }
    }

    pub fn num(self) -> u64 {
        self.num as u64
    }

    pub fn den(self) -> u64 {
        self.den as u64
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Compares `self` with the point `n / d`.
    fn cmp_point(self, n: u64, d: u64) -> Ordering {
        (self.num as u128 * d as u128).cmp(&(n as u128 * self.den as u128))
    }
}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_point(other.num as u64, other.den as u64)
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Accepts `n/d` or a decimal literal such as `0.25`.
impl FromStr for Frac {
    type Err = TorusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TorusError::Parse(s.to_string());
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            return Frac::new(n, d).map_err(|_| bad());
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 9 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = 10u64.pow(frac.len() as u32);
        let frac_part: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        Frac::new(int * den + frac_part, den).map_err(|_| bad())
    }
}

/// A subinterval `[alpha, beta]` of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub alpha: Frac,
    pub beta: Frac,
}

impl Interval {
    pub const FULL: Interval = Interval {
        alpha: Frac::ZERO,
        beta: Frac::ONE,
    };

    pub fn new(alpha: Frac, beta: Frac) -> Result<Self, TorusError> {
        if alpha > beta {
            return Err(TorusError::Reversed);
        }
        Ok(Self { alpha, beta })
    }

    pub fn length(&self) -> f64 {
        self.beta.to_f64() - self.alpha.to_f64()
    }

    /// `beta − alpha` as an unreduced fraction over `den(alpha)·den(beta)`.
    fn width(&self) -> (u128, u128) {
        let (an, ad) = (self.alpha.num as u128, self.alpha.den as u128);
        let (bn, bd) = (self.beta.num as u128, self.beta.den as u128);
        (bn * ad - an * bd, ad * bd)
    }
}

/// Whether the right endpoint belongs to the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Closure {
    /// `[alpha, beta]`
    #[default]
    Closed,
    /// `[alpha, beta)`
    HalfOpen,
}

/// An exact signed rational `num / den` with `den > 0`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Discrepancy {
    pub num: i128,
    pub den: u128,
}

impl Discrepancy {
    pub fn new(num: i128, den: u128) -> Self {
        assert!(den > 0, "zero denominator");
        Self { num, den }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn abs(self) -> Self {
        Self {
            num: self.num.abs(),
            den: self.den,
        }
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    fn common(self, other: Self) -> (i128, i128, u128) {
        if self.den == other.den {
            return (self.num, other.num, self.den);
        }
        let g = gcd_u128(self.den, other.den);
        let fa = other.den / g;
        let fb = self.den / g;
        let den = self
            .den
            .checked_mul(fa)
            .expect("discrepancy denominator overflow");
        let a = self
            .num
            .checked_mul(fa as i128)
            .expect("discrepancy overflow");
        let b = other
            .num
            .checked_mul(fb as i128)
            .expect("discrepancy overflow");
        (a, b, den)
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl PartialEq for Discrepancy {
    fn eq(&self, other: &Self) -> bool {
        let (a, b, _) = self.common(*other);
        a == b
    }
}

impl Eq for Discrepancy {}

impl PartialOrd for Discrepancy {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Discrepancy {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.common(*other);
        a.cmp(&b)
    }
}

impl Add for Discrepancy {
    type Output = Discrepancy;
    fn add(self, rhs: Self) -> Self {
        let (a, b, den) = self.common(rhs);
        Discrepancy::new(a + b, den)
    }
}

impl Sub for Discrepancy {
    type Output = Discrepancy;
    fn sub(self, rhs: Self) -> Self {
        let (a, b, den) = self.common(rhs);
        Discrepancy::new(a - b, den)
    }
}

/// The progression `J = {a + r, a + 2r, …, a + N·r}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progression {
    pub a: u64,
    pub r: u64,
    pub n: u64,
}

impl Progression {
    pub fn new(a: u64, r: u64, n: u64) -> Result<Self, TorusError> {
        if r == 0 || n == 0 {
            return Err(TorusError::DegenerateProgression);
        }
        Ok(Self { a, r, n })
    }

    /// `{1, …, p − 1}`.
    pub fn full(p: u64) -> Self {
        Self {
            a: 0,
            r: 1,
            n: p - 1,
        }
    }

    /// `{1, …, n}`.
    pub fn initial(n: u64) -> Self {
        Self { a: 0, r: 1, n }
    }

    /// Checks `J ⊂ [1, p − 1]`.
    pub fn validate(&self, p: u64) -> Result<(), TorusError> {
        let last = self
            .r
            .checked_mul(self.n)
            .and_then(|x| x.checked_add(self.a));
        match last {
            Some(last) if last < p => Ok(()),
            _ => Err(TorusError::ProgressionOutOfRange {
                a: self.a,
                r: self.r,
                n: self.n,
                max: p - 1,
            }),
        }
    }

    /// `a + j·r` for `j = 1..=N`.
    pub fn element(&self, j: u64) -> u64 {
        self.a + j * self.r
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (1..=self.n).map(|j| self.element(j))
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// A sorted multiset of points `numerator / denominator` in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusPoints {
    denominator: u64,
    numerators: Vec<u64>,
}

impl TorusPoints {
    pub fn new(denominator: u64, mut numerators: Vec<u64>) -> Result<Self, TorusError> {
        if let Some(&num) = numerators.iter().find(|&&n| n >= denominator) {
            return Err(TorusError::PointOutOfRange {
                num,
                den: denominator,
            });
        }
        numerators.sort_unstable();
        Ok(Self {
            denominator,
            numerators,
        })
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn numerators(&self) -> &[u64] {
        &self.numerators
    }

    pub fn card(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    pub fn iter_f64(&self) -> impl Iterator<Item = f64> + '_ {
        let d = self.denominator as f64;
        self.numerators.iter().map(move |&n| n as f64 / d)
    }

    /// Number of points in the interval, by binary search on exact comparisons.
    pub fn count_in(&self, interval: &Interval, closure: Closure) -> usize {
        let d = self.denominator;
        let lo = self
            .numerators
            .partition_point(|&n| interval.alpha.cmp_point(n, d) == Ordering::Greater);
        let hi = match closure {
            Closure::Closed => self
                .numerators
                .partition_point(|&n| interval.beta.cmp_point(n, d) != Ordering::Less),
            Closure::HalfOpen => self
                .numerators
                .partition_point(|&n| interval.beta.cmp_point(n, d) == Ordering::Greater),
        };
        hi.saturating_sub(lo)
    }

    /// Multiset union of two point sets over the same denominator.
    pub fn union(&self, other: &TorusPoints) -> Option<TorusPoints> {
        if self.denominator != other.denominator {
            return None;
        }
        let mut numerators = self.numerators.clone();
        numerators.extend_from_slice(&other.numerators);
        numerators.sort_unstable();
        Some(TorusPoints {
            denominator: self.denominator,
            numerators,
        })
    }
}

/// The image `{log_g z / (p − 1) : z ∈ J}`.
pub fn log_image(table: &DlogTable, j: &Progression) -> Result<TorusPoints, TorusError> {
    let p = table.ctx().p();
    j.validate(p)?;
    let mut numerators = Vec::with_capacity(j.n as usize);
    for z in j.iter() {
        if z % p == 0 {
            return Err(TorusError::ZeroElement(z));
        }
        numerators.push(table.log_unchecked(z % p) as u64);
    }
    TorusPoints::new(p - 1, numerators)
}

/// `D(M; α, β) = card(M ∩ I) − (β − α)·card(M)`, exactly.
pub fn interval_discrepancy(m: &TorusPoints, interval: &Interval, closure: Closure) -> Discrepancy {
    let count = m.count_in(interval, closure) as i128;
    let (wn, wd) = interval.width();
    let n = m.card() as i128;
    let num = count
        .checked_mul(wd as i128)
        .and_then(|c| (wn as i128).checked_mul(n).map(|w| c - w))
        .expect("interval discrepancy overflow");
    Discrepancy::new(num, wd)
}

/// Discrepancies for many intervals; evaluated in parallel, returned in input order.
pub fn interval_discrepancies(
    m: &TorusPoints,
    intervals: &[Interval],
    closure: Closure,
) -> Vec<Discrepancy> {
    intervals
        .par_iter()
        .map(|i| interval_discrepancy(m, i, closure))
        .collect()
}

/// One end of the interval attaining the extreme discrepancy, at
/// `numerator / denominator`. With `limit` set the supremum is approached
/// from inside the interval without the endpoint itself being reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoint {
    pub numerator: u64,
    pub limit: bool,
}

/// What a [`DiscrepancyReport`] measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scope {
    Interval {
        interval: Interval,
        closure: Closure,
    },
    Extreme {
        denominator: u64,
        alpha: Endpoint,
        beta: Endpoint,
    },
}

/// A measured discrepancy. For the extreme scope `raw` is `sup |D|`;
/// for a single interval it is the signed `D`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub scope: Scope,
    pub raw: f64,
    pub normalized: f64,
    pub cardinality: u64,
    #[serde(skip_serializing, default = "zero_discrepancy")]
    pub exact: Discrepancy,
}

fn zero_discrepancy() -> Discrepancy {
    Discrepancy::new(0, 1)
}

impl DiscrepancyReport {
    pub fn for_interval(m: &TorusPoints, interval: &Interval, closure: Closure) -> Self {
        let exact = interval_discrepancy(m, interval, closure);
        let raw = exact.to_f64();
        Self {
            scope: Scope::Interval {
                interval: *interval,
                closure,
            },
            raw,
            normalized: if m.is_empty() {
                0.0
            } else {
                raw / m.card() as f64
            },
            cardinality: m.card() as u64,
            exact,
        }
    }

    fn extreme(m: &TorusPoints, scaled: i128, alpha: Endpoint, beta: Endpoint) -> Self {
        let exact = Discrepancy::new(scaled, m.denominator as u128);
        let raw = exact.to_f64();
        Self {
            scope: Scope::Extreme {
                denominator: m.denominator,
                alpha,
                beta,
            },
            raw,
            normalized: raw / m.card() as f64,
            cardinality: m.card() as u64,
            exact,
        }
    }
}

/// Distinct positions with cumulative counts `C_t` (points at or before position `t`).
fn grouped(m: &TorusPoints) -> (Vec<u64>, Vec<i128>) {
    let mut pos = Vec::new();
    let mut cum = Vec::new();
    for (i, &n) in m.numerators.iter().enumerate() {
        if pos.last() == Some(&n) {
            *cum.last_mut().unwrap() = i as i128 + 1;
        } else {
            pos.push(n);
            cum.push(i as i128 + 1);
        }
    }
    (pos, cum)
}

/// Extreme discrepancy `sup_{0≤α≤β≤1} |D(M; α, β)|` over closed intervals,
/// in `O(card)` after sorting.
///
/// Work is in units of `1/denominator`. The excess `count − length·N` is
/// maximised over closed intervals whose ends sit on points; the deficit
/// `length·N − count` over intervals stretching to the neighbouring points
/// (or to 0 and 1), which is a supremum of closed intervals. Both reduce to
/// a running maximum over left ends. The half-open supremum is the same
/// number.
pub fn extreme_discrepancy(m: &TorusPoints) -> Result<DiscrepancyReport, TorusError> {
    if m.is_empty() {
        return Err(TorusError::Empty);
    }
    let d = m.denominator as i128;
    let n = m.card() as i128;
    let (pos, cum) = grouped(m);
    let k = pos.len();
    let y = |t: usize| pos[t] as i128;
    let before = |t: usize| if t == 0 { 0 } else { cum[t - 1] };

    // excess: [y_s, y_t], value (C_t − C_{s−1})·d − (y_t − y_s)·N
    let mut best_excess = (i128::MIN, 0usize, 0usize);
    let mut left = (i128::MIN, 0usize);
    for t in 0..k {
        let cand = y(t) * n - before(t) * d;
        if cand > left.0 {
            left = (cand, t);
        }
        let v = cum[t] * d - y(t) * n + left.0;
        if v > best_excess.0 {
            best_excess = (v, left.1, t);
        }
    }

    // deficit: interval strictly between neighbours L_s and R_t, covering
    // positions s..=t (possibly none, when s = t + 1)
    let mut best_deficit = (i128::MIN, 0usize, 0usize);
    let mut left = (i128::MIN, 0usize);
    for t in 0..=k {
        // s = t + 1 in 1-based terms: left neighbour is position t − 1
        let (l_pos, c_before) = if t == 0 {
            (0, 0)
        } else {
            (y(t - 1), cum[t - 1])
        };
        let cand = c_before * d - l_pos * n;
        if cand > left.0 {
            left = (cand, t);
        }
        let (r_pos, c_upto) = if t == k {
            (d, cum[k - 1])
        } else {
            (y(t), before(t))
        };
        let v = r_pos * n - c_upto * d + left.0;
        if v > best_deficit.0 {
            best_deficit = (v, left.1, t);
        }
    }

    let report = if best_excess.0 >= best_deficit.0 {
        let (v, s, t) = best_excess;
        DiscrepancyReport::extreme(
            m,
            v,
            Endpoint {
                numerator: pos[s],
                limit: false,
            },
            Endpoint {
                numerator: pos[t],
                limit: false,
            },
        )
    } else {
        let (v, s, t) = best_deficit;
        let alpha = if s == 0 {
            Endpoint {
                numerator: 0,
                limit: false,
            }
        } else {
            Endpoint {
                numerator: pos[s - 1],
                limit: true,
            }
        };
        let beta = if t == k {
            Endpoint {
                numerator: m.denominator,
                limit: false,
            }
        } else {
            Endpoint {
                numerator: pos[t],
                limit: true,
            }
        };
        DiscrepancyReport::extreme(m, v, alpha, beta)
    };
    Ok(report)
}

/// Reference `O(card²·log card)` scan of every candidate interval.
///
/// Left ends range over `0` and each point position taken either inclusively
/// or as a limit from the right; right ends over `1` and each position taken
/// inclusively or as a limit from the left. Counts come from binary search
/// on the raw sorted points. Under [`Closure::HalfOpen`] the roles of
/// "inclusive" and "limit" at the right end swap.
pub fn brute_force_extreme_discrepancy(
    m: &TorusPoints,
    closure: Closure,
) -> Result<DiscrepancyReport, TorusError> {
    if m.is_empty() {
        return Err(TorusError::Empty);
    }
    if m.card() > BRUTE_FORCE_CAP {
        return Err(TorusError::TooManyPoints(m.card()));
    }
    let d = m.denominator;
    let pts = &m.numerators;
    let n = pts.len() as i128;
    let mut positions: Vec<u64> = pts.clone();
    positions.dedup();

    // (position, excluded)
    let mut lefts = vec![(0u64, false)];
    let mut rights = vec![(d, false)];
    for &y in &positions {
        lefts.push((y, false));
        lefts.push((y, true));
        rights.push((y, false));
        rights.push((y, true));
    }

    let mut best: Option<(i128, (u64, bool), (u64, bool))> = None;
    for &(a, a_excl) in &lefts {
        let lo = if a_excl {
            pts.partition_point(|&x| x <= a)
        } else {
            pts.partition_point(|&x| x < a)
        };
        for &(b, b_flag) in &rights {
            if b < a || (b == a && (a_excl || (closure == Closure::Closed && b_flag))) {
                continue;
            }
            let b_incl = match closure {
                Closure::Closed => !b_flag,
                Closure::HalfOpen => b_flag,
            };
            let hi = if b_incl {
                pts.partition_point(|&x| x <= b)
            } else {
                pts.partition_point(|&x| x < b)
            };
            let count = hi.saturating_sub(lo) as i128;
            let v = (count * d as i128 - (b - a) as i128 * n).abs();
            if best.is_none_or(|(bv, _, _)| v > bv) {
                best = Some((v, (a, a_excl), (b, b_flag)));
            }
        }
    }
    let (v, (a, a_excl), (b, b_flag)) = best.expect("candidate set is nonempty");
    let beta_limit = match closure {
        Closure::Closed => b_flag,
        Closure::HalfOpen => !b_flag && b != d,
    };
    Ok(DiscrepancyReport::extreme(
        m,
        v,
        Endpoint {
            numerator: a,
            limit: a_excl,
        },
        Endpoint {
            numerator: b,
            limit: beta_limit,
        },
    ))
}
