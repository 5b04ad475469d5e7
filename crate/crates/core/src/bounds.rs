//! Erdős–Turán evaluation and empirical discrepancy envelopes.
//!
//! The Erdős–Turán inequality is a theorem, so measured discrepancies are
//! checked against it. The `√p log p` envelopes only hold up to unknown
//! absolute constants; they are reported as ratios and never asserted here.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dlog::DlogTable;
use crate::expsum::{CompensatedSum, UnitRoots};
use crate::numtheory::mul_mod;
use crate::torus::{
    extreme_discrepancy, interval_discrepancy, log_image, Closure, Frac, Interval, Progression,
    TorusError, TorusPoints,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error("truncation order K must be at least 1")]
    ZeroTruncation,
    #[error("window [{s}, {t}] must satisfy 0 ≤ s ≤ t ≤ {max}")]
    BadWindow { s: u64, t: u64, max: u64 },
    #[error("delta must be a positive finite number")]
    BadDelta,
}

/// Truncation order `K` of the Erdős–Turán sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EtParams {
    pub k: u64,
}

impl EtParams {
    pub fn new(k: u64) -> Result<Self, BoundsError> {
        if k == 0 {
            return Err(BoundsError::ZeroTruncation);
        }
        Ok(Self { k })
    }
}

/// `|Σ_{x∈M} e(kx)|` for `k = 1..=k_max`.
///
/// These do not depend on the interval, so one instance serves every
/// interval and every truncation order up to `k_max`.
#[derive(Debug, Clone)]
pub struct FourierModuli {
    card: usize,
    moduli: Vec<f64>,
}

impl FourierModuli {
    pub fn compute(m: &TorusPoints, k_max: u64) -> Self {
        let d = m.denominator();
        let roots = UnitRoots::new(d);
        let moduli = (1..=k_max)
            .into_par_iter()
            .map(|k| {
                let k = k % d;
                let acc: CompensatedSum = m
                    .numerators()
                    .iter()
                    .map(|&x| roots.get(mul_mod(k, x, d)))
                    .collect();
                acc.value().norm()
            })
            .collect();
        Self {
            card: m.card(),
            moduli,
        }
    }

    pub fn k_max(&self) -> u64 {
        self.moduli.len() as u64
    }

    pub fn moduli(&self) -> &[f64] {
        &self.moduli
    }

    /// `card/(K+1) + 2 Σ_{k=1}^{K} (1/(K+1) + min(β−α, 1/(πk))) |Σ_x e(kx)|`.
    pub fn rhs(&self, params: EtParams, interval: &Interval) -> f64 {
        let k_trunc = params.k;
        assert!(k_trunc <= self.k_max(), "K exceeds the precomputed range");
        let width = interval.length();
        let inv = 1.0 / (k_trunc + 1) as f64;
        let mut acc = 0.0;
        let mut comp = 0.0;
        for (i, &s) in self.moduli[..k_trunc as usize].iter().enumerate() {
            let k = (i + 1) as f64;
            let term = (inv + width.min(1.0 / (PI * k))) * s;
            let t = acc + term;
            comp += if acc.abs() >= term.abs() {
                (acc - t) + term
            } else {
                (term - t) + acc
            };
            acc = t;
        }
        self.card as f64 * inv + 2.0 * (acc + comp)
    }
}

/// Right-hand side of the Erdős–Turán inequality for `M`, `K` and `[α, β]`.
pub fn erdos_turan_rhs(m: &TorusPoints, params: EtParams, interval: &Interval) -> f64 {
    FourierModuli::compute(m, params.k).rhs(params, interval)
}

/// `√p · ln p · (2 + ln(p(β − α)))`.
pub fn theorem1_envelope(p: u64, width: f64) -> f64 {
    let pf = p as f64;
    pf.sqrt() * pf.ln() * (2.0 + (pf * width).ln())
}

/// `√p · ln²p / card`.
pub fn extreme_envelope(p: u64, card: usize) -> f64 {
    let pf = p as f64;
    pf.sqrt() * pf.ln().powi(2) / card as f64
}

/// One interval measured against the Erdős–Turán chain and the `√p log p` form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub interval: Interval,
    pub truncation: u64,
    /// Measured `|D(M; α, β)|`.
    pub lhs: f64,
    pub rhs_explicit: f64,
    /// `√p ln p (2 + ln p(β−α))`, without constant.
    pub rhs_theorem: f64,
    /// `lhs / rhs_theorem`, an empirical estimate of the constant.
    pub ratio: f64,
    /// Whether `p(β − α) > 1/π`.
    pub hypothesis: bool,
}

impl BoundReport {
    /// Erdős–Turán holds up to a relative floating tolerance.
    pub fn et_holds(&self, rel_tol: f64) -> bool {
        self.lhs <= self.rhs_explicit * (1.0 + rel_tol)
    }
}

fn bound_report(
    p: u64,
    m: &TorusPoints,
    moduli: &FourierModuli,
    params: EtParams,
    interval: &Interval,
) -> BoundReport {
    let lhs = interval_discrepancy(m, interval, Closure::Closed)
        .abs()
        .to_f64();
    let width = interval.length();
    let hypothesis = p as f64 * width > 1.0 / PI;
    let rhs_theorem = if hypothesis {
        theorem1_envelope(p, width)
    } else {
        f64::NAN
    };
    BoundReport {
        interval: *interval,
        truncation: params.k,
        lhs,
        rhs_explicit: moduli.rhs(params, interval),
        rhs_theorem,
        ratio: lhs / rhs_theorem,
        hypothesis,
    }
}

/// Measures each interval against the Erdős–Turán chain with truncation
/// `K` (`p − 1` by default) and against the `√p log p` envelope.
///
/// Intervals violating `p(β − α) > 1/π` are kept; their report carries
/// `hypothesis = false` and a NaN ratio.
pub fn theorem1_check(
    table: &DlogTable,
    j: &Progression,
    intervals: &[Interval],
    truncation: Option<u64>,
) -> Result<Vec<BoundReport>, BoundsError> {
    let p = table.ctx().p();
    let params = EtParams::new(truncation.unwrap_or(p - 1))?;
    let m = log_image(table, j)?;
    let moduli = FourierModuli::compute(&m, params.k);
    Ok(intervals
        .par_iter()
        .map(|i| bound_report(p, &m, &moduli, params, i))
        .collect())
}

/// Certified bound on how many points of `M` fit in a closed interval of
/// length `1/(πp)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacityReport {
    /// Smallest gap between consecutive points, as a numerator over the denominator.
    pub min_gap: u64,
    pub denominator: u64,
    /// Upper bound on the number of points in any window of length `1/(πp)`.
    pub max_points: u64,
}

impl CapacityReport {
    pub fn holds(&self) -> bool {
        self.max_points <= 1
    }
}

/// Points `x < y` can share a window of length `1/(πp)` only if
/// `(y − x)/d ≤ 1/(πp)`. Since `π > 333/106`, that forces
/// `333 · p · (y − x) < 106 · d`; windows are sized with this weaker test,
/// so the count is an exact upper bound.
pub fn short_interval_capacity(m: &TorusPoints, p: u64) -> CapacityReport {
    let d = m.denominator() as u128;
    let pts = m.numerators();
    let fits = |gap: u64| (333 * p as u128 * gap as u128) < 106 * d;
    let mut max_points = 0u64;
    let mut lo = 0;
    for hi in 0..pts.len() {
        while !fits(pts[hi] - pts[lo]) {
            lo += 1;
        }
        max_points = max_points.max((hi - lo + 1) as u64);
    }
    let min_gap = pts
        .windows(2)
        .map(|w| w[1] - w[0])
        .min()
        .unwrap_or(m.denominator());
    CapacityReport {
        min_gap,
        denominator: m.denominator(),
        max_points,
    }
}

/// Extreme discrepancy of `M(g, J)` against `√p ln²p / card`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtremeBoundReport {
    pub p: u64,
    pub cardinality: u64,
    pub raw: f64,
    pub normalized: f64,
    pub envelope: f64,
    /// `normalized / envelope`, an empirical estimate of the constant.
    pub ratio: f64,
    /// Bound `2/card` that applies to intervals shorter than `1/(πp)`.
    pub short_interval_bound: f64,
    pub capacity: CapacityReport,
}

pub fn extreme_bound_check(
    table: &DlogTable,
    j: &Progression,
) -> Result<ExtremeBoundReport, BoundsError> {
    let p = table.ctx().p();
    let m = log_image(table, j)?;
    let ext = extreme_discrepancy(&m)?;
    let envelope = extreme_envelope(p, m.card());
    Ok(ExtremeBoundReport {
        p,
        cardinality: m.card() as u64,
        raw: ext.raw,
        normalized: ext.normalized,
        envelope,
        ratio: ext.normalized / envelope,
        short_interval_bound: 2.0 / m.card() as f64,
        capacity: short_interval_capacity(&m, p),
    })
}

/// Count of `log_g z`, `z ∈ J`, in an integer window `[s, t]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub s: u64,
    pub t: u64,
    pub window_length: u64,
    pub count: u64,
    /// `MN/p`.
    pub mn_over_p: f64,
    /// `|count − MN/p| / (MN/p)`.
    pub mn_deviation: f64,
    pub within_delta: bool,
    /// Window integers in `[0, p − 2]` times `N/(p − 1)`.
    pub lattice_expected: f64,
    /// `(count − lattice_expected) / lattice_expected`, computed exactly.
    pub relative_deviation: f64,
    /// `D(M; s/(p−1), t/(p−1))`.
    pub torus_discrepancy: f64,
    pub c3: f64,
    pub delta: f64,
    /// `(c3/δ) p^{3/2} ln²p`.
    pub hypothesis_threshold: f64,
    /// Whether `MN` exceeds the threshold.
    pub hypothesis: bool,
}

pub fn corollary1_count(
    table: &DlogTable,
    j: &Progression,
    s: u64,
    t: u64,
    delta: f64,
    c3: f64,
) -> Result<CorollaryReport, BoundsError> {
    let p = table.ctx().p();
    if s > t || t > p - 1 {
        return Err(BoundsError::BadWindow { s, t, max: p - 1 });
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(BoundsError::BadDelta);
    }
    let m = log_image(table, j)?;
    let pts = m.numerators();
    let count = (pts.partition_point(|&x| x <= t) - pts.partition_point(|&x| x < s)) as u64;

    let n = j.n;
    let big_m = t - s;
    let mn_over_p = big_m as f64 * n as f64 / p as f64;
    let mn_deviation = (count as f64 - mn_over_p).abs() / mn_over_p;

    let lattice = t.min(p - 2).saturating_sub(s) + u64::from(s <= p - 2);
    let lattice_expected = lattice as f64 * n as f64 / (p - 1) as f64;
    // (count·(p−1) − lattice·N) / (lattice·N)
    let dev_num = count as i128 * (p - 1) as i128 - lattice as i128 * n as i128;
    let relative_deviation = if lattice == 0 {
        0.0
    } else {
        dev_num as f64 / (lattice as i128 * n as i128) as f64
    };

    let interval = Interval::new(Frac::new(s, p - 1)?, Frac::new(t, p - 1)?)?;
    let torus_discrepancy = interval_discrepancy(&m, &interval, Closure::Closed).to_f64();

    let pf = p as f64;
    let hypothesis_threshold = c3 / delta * pf.powf(1.5) * pf.ln().powi(2);
    Ok(CorollaryReport {
        s,
        t,
        window_length: big_m,
        count,
        mn_over_p,
        mn_deviation,
        within_delta: mn_deviation <= delta,
        lattice_expected,
        relative_deviation,
        torus_discrepancy,
        c3,
        delta,
        hypothesis_threshold,
        hypothesis: (big_m as f64) * (n as f64) > hypothesis_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dlog::build_table;
    use crate::numtheory::build_ctx;
    use crate::torus::Frac;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table(p: u64) -> DlogTable {
        build_table(&build_ctx(p, None).unwrap()).unwrap()
    }

    fn random_interval(rng: &mut impl Rng, den: u64) -> Interval {
        let a = rng.gen_range(0..=den);
        let b = rng.gen_range(0..=den);
        Interval::new(
            Frac::new(a.min(b), den).unwrap(),
            Frac::new(a.max(b), den).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn et_hand_example() {
        let m = TorusPoints::new(2, vec![0, 1]).unwrap();
        let i = Interval::new(Frac::ZERO, Frac::new(1, 2).unwrap()).unwrap();
        let rhs = erdos_turan_rhs(&m, EtParams::new(1).unwrap(), &i);
        assert!((rhs - 1.0).abs() < 1e-15, "{rhs}");
        assert_eq!(EtParams::new(0), Err(BoundsError::ZeroTruncation));
    }

    #[test]
    fn et_direct_formula() {
        // independent evaluation with exp() over float points
        let m = TorusPoints::new(10, vec![0, 3, 4, 9]).unwrap();
        let i = Interval::new(Frac::new(1, 5).unwrap(), Frac::new(7, 10).unwrap()).unwrap();
        let k_trunc = 6u64;
        let mut expected = 4.0 / 7.0;
        for k in 1..=k_trunc {
            let s: num_complex::Complex64 = m
                .iter_f64()
                .map(|x| num_complex::Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x))
                .sum();
            expected += 2.0 * (1.0 / 7.0 + (0.5f64).min(1.0 / (PI * k as f64))) * s.norm();
        }
        let got = erdos_turan_rhs(&m, EtParams::new(k_trunc).unwrap(), &i);
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn et_dominates_measured_discrepancy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in [101u64, 1009] {
            let t = table(p);
            let j = Progression::initial((p - 1) / 2);
            let m = log_image(&t, &j).unwrap();
            let moduli = FourierModuli::compute(&m, p - 1);
            for _ in 0..40 {
                let i = random_interval(&mut rng, 10_000);
                let d = interval_discrepancy(&m, &i, Closure::Closed).abs().to_f64();
                for k in [1, 10, 100, p - 1] {
                    let rhs = moduli.rhs(EtParams::new(k).unwrap(), &i);
                    assert!(d <= rhs * (1.0 + 1e-6));
                    assert!(rhs >= m.card() as f64 / (k + 1) as f64);
                }
            }
        }
    }

    #[test]
    fn theorem1_full_interval_is_zero() {
        let t = table(7);
        let r = theorem1_check(&t, &Progression::full(7), &[Interval::FULL], None).unwrap();
        assert_eq!(r[0].lhs, 0.0);
        assert!(r[0].rhs_explicit >= 0.0);
        assert!(r[0].hypothesis);
        assert_eq!(r[0].truncation, 6);
    }

    #[test]
    fn theorem1_flags_short_intervals() {
        let t = table(101);
        let i = Interval::new(Frac::new(1, 1000).unwrap(), Frac::new(2, 1000).unwrap()).unwrap();
        let r = theorem1_check(&t, &Progression::full(101), &[i], Some(10)).unwrap();
        assert!(!r[0].hypothesis);
        assert!(r[0].ratio.is_nan());
        assert!(r[0].et_holds(1e-6));
    }

    #[test]
    fn capacity_certificate() {
        let t = table(10007);
        let r = extreme_bound_check(&t, &Progression::initial(5003)).unwrap();
        assert!(r.capacity.holds());
        assert!(r.capacity.min_gap >= 1);
        // duplicates always break the capacity
        let m = TorusPoints::new(10, vec![2, 2]).unwrap();
        assert_eq!(short_interval_capacity(&m, 11).max_points, 2);
        // points far apart relative to 1/(πp)
        let m = TorusPoints::new(10, vec![1, 2, 3]).unwrap();
        assert_eq!(short_interval_capacity(&m, 11).max_points, 1);
        // gaps of 1/d fall well inside a window of length 1/(11π)
        let m = TorusPoints::new(1_000_000, vec![1, 2, 3]).unwrap();
        assert_eq!(short_interval_capacity(&m, 11).max_points, 3);
    }

    #[test]
    fn full_range_extreme_is_one_point() {
        let t = table(10007);
        let r = extreme_bound_check(&t, &Progression::full(10007)).unwrap();
        assert_eq!(r.raw, 1.0);
        assert_eq!(r.normalized, 1.0 / 10006.0);
    }

    #[test]
    fn corollary_full_window_exact() {
        for p in [7u64, 101, 10007] {
            let t = table(p);
            let r = corollary1_count(&t, &Progression::full(p), 0, p - 1, 0.1, 1.0).unwrap();
            assert_eq!(r.count, p - 1);
            assert_eq!(r.relative_deviation, 0.0);
        }
    }

    #[test]
    fn corollary_window_errors() {
        let t = table(101);
        let j = Progression::full(101);
        assert!(matches!(
            corollary1_count(&t, &j, 5, 4, 0.1, 1.0),
            Err(BoundsError::BadWindow { .. })
        ));
        assert!(matches!(
            corollary1_count(&t, &j, 0, 101, 0.1, 1.0),
            Err(BoundsError::BadWindow { .. })
        ));
        assert_eq!(
            corollary1_count(&t, &j, 0, 10, 0.0, 1.0).unwrap_err(),
            BoundsError::BadDelta
        );
        assert_eq!(
            corollary1_count(&t, &j, 0, 10, f64::NAN, 1.0).unwrap_err(),
            BoundsError::BadDelta
        );
    }

    #[test]
    fn corollary_count_matches_filter() {
        let t = table(101);
        let j = Progression::new(3, 2, 25).unwrap();
        let logs: Vec<u64> = j.iter().map(|z| t.log(z).unwrap()).collect();
        for s in 0..100 {
            for w in [0u64, 1, 7, 50] {
                let tt = (s + w).min(100);
                let r = corollary1_count(&t, &j, s, tt, 0.5, 1.0).unwrap();
                let expected = logs.iter().filter(|&&l| s <= l && l <= tt).count() as u64;
                assert_eq!(r.count, expected);
            }
        }
    }

    #[test]
    fn corollary_grid_quarter_range() {
        let t = table(101);
        let j = Progression::initial(25);
        let mut worst = 0.0f64;
        for s in 0..=100 {
            for tt in s + 1..=100 {
                let r = corollary1_count(&t, &j, s, tt, 0.1, 1.0).unwrap();
                assert!(r.count <= 25 && r.relative_deviation.is_finite());
                assert!(!r.hypothesis);
                worst = worst.max(r.mn_deviation);
            }
        }
        // short windows may hold no logs at all, so the worst case is large
        assert!(worst >= 1.0);
    }
}
