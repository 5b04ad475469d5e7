//! Experiments on how the discrete logarithm scrambles structured sets:
//! additivity of discrepancy over disjoint unions, polynomial and
//! multi-base twists of log-character sums, and the relative order of logs
//! of increasing tuples.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dlog::DlogTable;
use crate::expsum::{CompensatedSum, UnitRoots};
use crate::numtheory::{mod_inverse, mul_mod};
use crate::torus::{
    interval_discrepancy, Closure, Discrepancy, Interval, Progression, TorusError, TorusPoints,
};

/// Largest tuple size for ordering histograms.
pub const MAX_TUPLE: usize = 8;

/// Largest number of tuples visited in exhaustive mode.
pub const MAX_EXHAUSTIVE_TUPLES: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error("point sets share the point {0}")]
    Overlap(u64),
    #[error("denominators differ: {0} vs {1}")]
    DenominatorMismatch(u64, u64),
    #[error("polynomial needs a nonzero leading coefficient modulo {0}")]
    ZeroLeading(u64),
    #[error("polynomial is reduced modulo {poly} but the exponent group has order {group}")]
    ModulusMismatch { poly: u64, group: u64 },
    #[error("{0} is not a primitive root")]
    NonGenerator(u64),
    #[error("at least one (base, coefficient) pair is required")]
    NoBases,
    #[error("tuple size must be in 1..={MAX_TUPLE}, got {0}")]
    TupleSize(usize),
    #[error("progression has {n} elements, fewer than the tuple size {r}")]
    TooFewElements { n: u64, r: usize },
    #[error("exhaustive mode would visit {0} tuples (limit {MAX_EXHAUSTIVE_TUPLES})")]
    TooManyTuples(u64),
}

/// `|D(M₁ ∪ M₂; I) − D(M₁; I) − D(M₂; I)|` for disjoint `M₁`, `M₂`, exactly.
pub fn union_discrepancy_check(
    m1: &TorusPoints,
    m2: &TorusPoints,
    interval: &Interval,
    closure: Closure,
) -> Result<Discrepancy, ExperimentError> {
    if m1.denominator() != m2.denominator() {
        return Err(ExperimentError::DenominatorMismatch(
            m1.denominator(),
            m2.denominator(),
        ));
    }
    let (a, b) = (m1.numerators(), m2.numerators());
    let (mut i, mut k) = (0, 0);
    while i < a.len() && k < b.len() {
        match a[i].cmp(&b[k]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => k += 1,
            std::cmp::Ordering::Equal => return Err(ExperimentError::Overlap(a[i])),
        }
    }
    let union = m1.union(m2).expect("denominators checked");
    let whole = interval_discrepancy(&union, interval, closure);
    let parts =
        interval_discrepancy(m1, interval, closure) + interval_discrepancy(m2, interval, closure);
    Ok((whole - parts).abs())
}

/// `P(x) = a₀ + a₁x + … + a_n xⁿ` with coefficients reduced modulo `modulus`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntPolynomial {
    coefficients: Vec<u64>,
    modulus: u64,
}

impl IntPolynomial {
    /// `coefficients[i]` is the coefficient of `x^i`.
    pub fn new(coefficients: &[i64], modulus: u64) -> Result<Self, ExperimentError> {
        let coefficients: Vec<u64> = coefficients
            .iter()
            .map(|&c| (c as i128).rem_euclid(modulus as i128) as u64)
            .collect();
        match coefficients.last() {
            Some(&lead) if lead != 0 => Ok(Self {
                coefficients,
                modulus,
            }),
            _ => Err(ExperimentError::ZeroLeading(modulus)),
        }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coefficients
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Horner evaluation modulo `modulus`.
    pub fn eval(&self, x: u64) -> u64 {
        let m = self.modulus;
        let x = x % m;
        self.coefficients
            .iter()
            .rev()
            .fold(0, |acc, &c| (mul_mod(acc, x, m) + c) % m)
    }
}

/// `Σ_{x ∈ J} e_{p−1}(P(log_g x))`.
pub fn poly_twist_sum(
    table: &DlogTable,
    j: &Progression,
    poly: &IntPolynomial,
) -> Result<Complex64, ExperimentError> {
    let ctx = table.ctx();
    j.validate(ctx.p())?;
    if poly.modulus() != ctx.order() {
        return Err(ExperimentError::ModulusMismatch {
            poly: poly.modulus(),
            group: ctx.order(),
        });
    }
    let roots = UnitRoots::new(ctx.order());
    let acc: CompensatedSum = j
        .iter()
        .map(|x| roots.get(poly.eval(table.log_unchecked(x) as u64)))
        .collect();
    Ok(acc.value())
}

/// Coefficients of `a·x + Σ bᵢ log_{gᵢ} x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiBaseSpec {
    pub a: i64,
    /// `(gᵢ, bᵢ)` pairs.
    pub pairs: Vec<(u64, i64)>,
}

/// `Σ_{x ∈ J} e_{p−1}(a x + b₁ log_{g₁} x + … + b_r log_{g_r} x)`.
///
/// Logs to each base come from the table's base by change of base:
/// `log_{gᵢ} x = log_g x · (log_g gᵢ)^{−1} mod (p − 1)`.
pub fn multibase_sum(
    table: &DlogTable,
    j: &Progression,
    spec: &MultiBaseSpec,
) -> Result<Complex64, ExperimentError> {
    let ctx = table.ctx();
    j.validate(ctx.p())?;
    if spec.pairs.is_empty() {
        return Err(ExperimentError::NoBases);
    }
    let n = ctx.order();
    let reduce = |c: i64| (c as i128).rem_euclid(n as i128) as u64;
    // Σ bᵢ log_{gᵢ} x = log_g x · Σ bᵢ (log_g gᵢ)^{−1}
    let mut weight = 0u64;
    for &(g, b) in &spec.pairs {
        if g % ctx.p() == 0 || !ctx.is_primitive_root(g) {
            return Err(ExperimentError::NonGenerator(g));
        }
        let inv = mod_inverse(table.log_unchecked(g % ctx.p()) as u64, n)
            .expect("log of a primitive root is a unit");
        weight = (weight + mul_mod(reduce(b), inv, n)) % n;
    }
    let a = reduce(spec.a);
    let roots = UnitRoots::new(n);
    let acc: CompensatedSum = j
        .iter()
        .map(|x| {
            let lx = table.log_unchecked(x) as u64;
            roots.get((mul_mod(a, x % n, n) + mul_mod(weight, lx, n)) % n)
        })
        .collect();
    Ok(acc.value())
}

/// How tuples from `J` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum TupleMode {
    /// Every increasing `r`-tuple.
    Exhaustive,
    /// Every run of `r` consecutive elements of `J`.
    ExhaustiveAdjacent,
    /// `samples` tuples of distinct elements drawn uniformly; sample `i`
    /// uses stream `i` of a ChaCha generator keyed by `seed`.
    Sampled { samples: u64, seed: u64 },
}

/// Counts of the relative orders of `(log x₁, …, log x_r)` over increasing
/// tuples `x₁ < … < x_r`.
///
/// The pattern of a tuple lists the rank (from 1) of each `log xᵢ` within
/// the tuple, so `[1, 2]` means `log x₁ < log x₂`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderingHistogram {
    r: usize,
    counts: Vec<u64>,
    total: u64,
}

fn factorial(r: usize) -> usize {
    (1..=r).product()
}

/// Lehmer rank of the pattern of `logs`.
fn pattern_rank(logs: &[u64]) -> usize {
    let r = logs.len();
    let mut rank = 0;
    for i in 0..r {
        let smaller_after = logs[i + 1..].iter().filter(|&&l| l < logs[i]).count();
        rank = rank * (r - i) + smaller_after;
    }
    rank
}

fn pattern_from_rank(mut rank: usize, r: usize) -> Vec<u8> {
    let mut digits = vec![0usize; r];
    for i in (0..r).rev() {
        let base = r - i;
        digits[i] = rank % base;
        rank /= base;
    }
    let mut free: Vec<u8> = (1..=r as u8).collect();
    digits.into_iter().map(|d| free.remove(d)).collect()
}

impl OrderingHistogram {
    fn empty(r: usize) -> Self {
        Self {
            r,
            counts: vec![0; factorial(r)],
            total: 0,
        }
    }

    fn record(&mut self, logs: &[u64]) {
        self.counts[pattern_rank(logs)] += 1;
        self.total += 1;
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.total += other.total;
        self
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// All `r!` patterns in lexicographic order with their counts.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<u8>, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(|(rank, &c)| (pattern_from_rank(rank, self.r), c))
    }

    pub fn count(&self, pattern: &[u8]) -> Option<u64> {
        if pattern.len() != self.r {
            return None;
        }
        let logs: Vec<u64> = pattern.iter().map(|&x| x as u64).collect();
        let mut sorted = logs.clone();
        sorted.sort_unstable();
        if sorted != (1..=self.r as u64).collect::<Vec<_>>() {
            return None;
        }
        Some(self.counts[pattern_rank(&logs)])
    }

    pub fn frequency(&self, pattern: &[u8]) -> Option<f64> {
        self.count(pattern).map(|c| c as f64 / self.total as f64)
    }

    /// Largest `|frequency − 1/r!|` over all patterns.
    pub fn max_deviation_from_uniform(&self) -> f64 {
        let expected = 1.0 / self.counts.len() as f64;
        self.counts
            .iter()
            .map(|&c| (c as f64 / self.total as f64 - expected).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct HistogramView {
    r: usize,
    total: u64,
    counts: BTreeMap<String, u64>,
}

impl Serialize for OrderingHistogram {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let counts = self
            .iter()
            .map(|(pat, c)| {
                let key = pat
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                (key, c)
            })
            .collect();
        HistogramView {
            r: self.r,
            total: self.total,
            counts,
        }
        .serialize(serializer)
    }
}

fn binomial_saturating(n: u64, r: usize) -> u64 {
    let mut acc: u128 = 1;
    for i in 0..r as u64 {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Visits every increasing index tuple extending `prefix`.
fn visit_combinations(
    logs: &[u64],
    r: usize,
    prefix: &mut Vec<usize>,
    hist: &mut OrderingHistogram,
    buf: &mut Vec<u64>,
) {
    if prefix.len() == r {
        buf.clear();
        buf.extend(prefix.iter().map(|&i| logs[i]));
        hist.record(buf);
        return;
    }
    let start = prefix.last().map_or(0, |&i| i + 1);
    let remaining = r - prefix.len();
    for i in start..=logs.len() - remaining {
        prefix.push(i);
        visit_combinations(logs, r, prefix, hist, buf);
        prefix.pop();
    }
}

/// Histogram of log orderings over tuples of `J` chosen by `mode`.
/// Deterministic for a given mode, whatever the thread count.
pub fn ordering_frequencies(
    table: &DlogTable,
    j: &Progression,
    r: usize,
    mode: TupleMode,
) -> Result<OrderingHistogram, ExperimentError> {
    j.validate(table.ctx().p())?;
    if r == 0 || r > MAX_TUPLE {
        return Err(ExperimentError::TupleSize(r));
    }
    if j.n < r as u64 {
        return Err(ExperimentError::TooFewElements { n: j.n, r });
    }
    // J is increasing in j, so index order is value order
    let logs: Vec<u64> = j.iter().map(|x| table.log_unchecked(x) as u64).collect();
    let hist = match mode {
        TupleMode::ExhaustiveAdjacent => logs
            .par_windows(r)
            .fold(
                || OrderingHistogram::empty(r),
                |mut h, w| {
                    h.record(w);
                    h
                },
            )
            .reduce(|| OrderingHistogram::empty(r), OrderingHistogram::merge),
        TupleMode::Exhaustive => {
            let tuples = binomial_saturating(j.n, r);
            if tuples > MAX_EXHAUSTIVE_TUPLES {
                return Err(ExperimentError::TooManyTuples(tuples));
            }
            (0..=logs.len() - r)
                .into_par_iter()
                .map(|first| {
                    let mut h = OrderingHistogram::empty(r);
                    let mut prefix = vec![first];
                    visit_combinations(&logs, r, &mut prefix, &mut h, &mut Vec::with_capacity(r));
                    h
                })
                .reduce(|| OrderingHistogram::empty(r), OrderingHistogram::merge)
        }
        TupleMode::Sampled { samples, seed } => (0..samples)
            .into_par_iter()
            .fold(
                || (OrderingHistogram::empty(r), Vec::with_capacity(r)),
                |(mut h, mut buf), i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i);
                    let mut idx = rand::seq::index::sample(&mut rng, logs.len(), r).into_vec();
                    idx.sort_unstable();
                    buf.clear();
                    buf.extend(idx.iter().map(|&k| logs[k]));
                    h.record(&buf);
                    (h, buf)
                },
            )
            .map(|(h, _)| h)
            .reduce(|| OrderingHistogram::empty(r), OrderingHistogram::merge),
    };
    Ok(hist)
}
