//! Lagrangian resolvents and the exponential sums built from them.
//!
//! With `θ = e_{p−1}(1)` and `ζ = e_p(1)`, where `e_q(x) = exp(2πi x / q)`,
//! the resolvent is
//!
//! ```text
//! S(θ^k, ζ^u) = Σ_{j=0}^{p−2} θ^{kj} ζ^{u·g^j}
//! ```
//!
//! For `k ≢ 0 (mod p − 1)` and `u ≢ 0 (mod p)` this is a Gauss sum, so
//! `|S|² = p`. The inversion `θ^{k log z} = (1/p) Σ_u ζ^{−uz} S(θ^k, ζ^u)`
//! expresses log-characters through resolvents; summing it over a
//! progression splits a log-character sum into resolvents times
//! geometric phase sums, which yields the `√p (2 + ln p)` bound.
//!
//! Every sum runs in a fixed order with Neumaier-compensated accumulation.
//! Roots of unity come from a precomputed table indexed by the exponent
//! reduced modulo the order, so trigonometric arguments stay in `[0, 2π)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dlog::DlogTable;
use crate::numtheory::mul_mod;
use crate::torus::Progression;

/// `c_mach` in `err_bound = c_mach · terms · ε`. Covers the table error of
/// each root (about 1 ulp per component), the rounding of one complex
/// product and the compensated accumulation (2 ulp per term).
pub const ERR_BOUND_CONST: f64 = 16.0;

/// Absolute slack on a float modulus compared against an exact bound.
pub const MODULUS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpSumError {
    #[error("k ≡ 0 (mod p − 1) is the trivial multiplicative twist")]
    TrivialK,
    #[error("u ≡ 0 (mod p) is the trivial additive twist")]
    TrivialU,
    #[error(transparent)]
    Progression(#[from] crate::torus::TorusError),
}

/// `e_q(x) = exp(2πi x / q)` with `x` reduced modulo `q` before scaling.
pub fn unit_root(q: u64, x: u64) -> Complex64 {
    let x = x % q;
    let (s, c) = (TAU * x as f64 / q as f64).sin_cos();
    Complex64::new(c, s)
}

/// `e_q(m)` for every `m` in `[0, q)`.
#[derive(Debug, Clone)]
pub struct UnitRoots {
    q: u64,
    table: Vec<Complex64>,
}

impl UnitRoots {
    pub fn new(q: u64) -> Self {
        let table = (0..q).map(|m| unit_root(q, m)).collect();
        Self { q, table }
    }

    pub fn order(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn get(&self, m: u64) -> Complex64 {
        self.table[(m % self.q) as usize]
    }

    /// `e_q(−m)`.
    #[inline]
    pub fn get_neg(&self, m: u64) -> Complex64 {
        let m = m % self.q;
        self.table[((self.q - m) % self.q) as usize]
    }
}

/// Neumaier-compensated accumulator for complex values.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: Complex64) {
        neumaier(&mut self.sum.re, &mut self.comp.re, v.re);
        neumaier(&mut self.sum.im, &mut self.comp.im, v.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

impl FromIterator<Complex64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Serializes a complex number as `{"re": …, "im": …}`.
pub mod complex_re_im {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct ReIm {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        ReIm { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let ReIm { re, im } = ReIm::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

/// A resolvent value with its rounding budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventValue {
    #[serde(with = "complex_re_im")]
    pub value: Complex64,
    pub terms: u64,
    pub err_bound: f64,
}

impl ResolventValue {
    fn from_sum(value: Complex64, terms: u64) -> Self {
        Self {
            value,
            terms,
            err_bound: ERR_BOUND_CONST * terms as f64 * f64::EPSILON,
        }
    }
}

/// A geometric sum `Σ_{z ∈ J} e_p(−u z)` with its bound `min(N, (2‖ur/p‖)^{−1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSum {
    #[serde(with = "complex_re_im")]
    pub value: Complex64,
    /// The bound as an exact fraction `bound_num / bound_den`.
    pub bound_num: u64,
    pub bound_den: u64,
    pub bound: f64,
}

impl PhaseSum {
    pub fn within_bound(&self) -> bool {
        self.value.norm() <= self.bound + MODULUS_SLACK
    }
}

/// `Σ_{j=1}^{N} e_p(−u(a + jr))` in closed form.
///
/// With `w = e_p(−ur) ≠ 1` the sum is `e_p(−u(a+r)) (1 − w^N)/(1 − w)`;
/// when `ur ≡ 0` every term equals `e_p(−ua)`.
pub fn progression_phase_sum(p: u64, j: &Progression, u: u64) -> PhaseSum {
    let u = u % p;
    let n = j.n;
    let ur = mul_mod(u, j.r % p, p);
    let (bound_num, bound_den) = if ur == 0 {
        (n, 1)
    } else {
        // (2‖ur/p‖)^{−1} = p / (2 min(m, p − m))
        let dist = ur.min(p - ur);
        if n as u128 * 2 * dist as u128 <= p as u128 {
            (n, 1)
        } else {
            (p, 2 * dist)
        }
    };
    let neg = |x: u64| unit_root(p, (p - x % p) % p);
    let value = if ur == 0 {
        neg(mul_mod(u, j.a % p, p)) * n as f64
    } else {
        let first = neg(mul_mod(u, (j.a % p + j.r % p) % p, p));
        let w = neg(ur);
        let w_n = neg(mul_mod(ur, n % p, p));
        first * (Complex64::new(1.0, 0.0) - w_n) / (Complex64::new(1.0, 0.0) - w)
    };
    PhaseSum {
        value,
        bound_num,
        bound_den,
        bound: bound_num as f64 / bound_den as f64,
    }
}

/// `√p (2 + ln p)`.
pub fn pv_bound(p: u64) -> f64 {
    let p = p as f64;
    p.sqrt() * (2.0 + p.ln())
}

/// Worst log-character sum over a set of twists, relative to `√p (2 + ln p)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PvReport {
    pub bound: f64,
    pub max_modulus: f64,
    pub max_ratio: f64,
    pub worst_k: u64,
    pub checked: usize,
}

impl PvReport {
    pub fn holds(&self) -> bool {
        self.max_ratio <= 1.0
    }
}

/// Exponential sums over a fixed field, sharing one log table and the root
/// tables for orders `p` and `p − 1`.
#[derive(Debug, Clone)]
pub struct ExpSums<'a> {
    table: &'a DlogTable,
    roots_p: UnitRoots,
    roots_n: UnitRoots,
}

impl<'a> ExpSums<'a> {
    pub fn new(table: &'a DlogTable) -> Self {
        let p = table.ctx().p();
        Self {
            table,
            roots_p: UnitRoots::new(p),
            roots_n: UnitRoots::new(p - 1),
        }
    }

    pub fn table(&self) -> &DlogTable {
        self.table
    }

    pub fn p(&self) -> u64 {
        self.table.ctx().p()
    }

    fn order(&self) -> u64 {
        self.p() - 1
    }

    /// `S(θ^k, ζ^u)` by direct summation over `j` ascending.
    pub fn resolvent(&self, k: u64, u: u64) -> ResolventValue {
        let n = self.order();
        let p = self.p();
        let (k, u) = (k % n, u % p);
        let mut acc = CompensatedSum::new();
        let mut kj = 0u64;
        for &gj in self.table.powers() {
            let ug = mul_mod(u, gj as u64, p);
            acc.add(self.roots_n.get(kj) * self.roots_p.get(ug));
            kj += k;
            if kj >= n {
                kj -= n;
            }
        }
        ResolventValue::from_sum(acc.value(), n)
    }

    /// `S(θ^k, ζ^u)` for every `k` in `[0, p − 2]` at fixed `u`, by one
    /// inverse DFT of length `p − 1` of the sequence `j ↦ ζ^{u g^j}`.
    pub fn resolvent_column(&self, u: u64) -> Vec<Complex64> {
        let p = self.p();
        let u = u % p;
        let mut buf: Vec<Complex64> = self
            .table
            .powers()
            .iter()
            .map(|&gj| self.roots_p.get(mul_mod(u, gj as u64, p)))
            .collect();
        FftPlanner::new()
            .plan_fft_inverse(buf.len())
            .process(&mut buf);
        buf
    }

    /// `S(θ^k, ζ^u)` for every `u` in `[0, p − 1]` at fixed `k`, by one
    /// inverse DFT of length `p` of the sequence `x ↦ θ^{k log x}` (zero at 0).
    pub fn resolvent_row(&self, k: u64) -> ResolventRow {
        let p = self.p();
        let n = self.order();
        let k = k % n;
        let mut buf = Vec::with_capacity(p as usize);
        buf.push(Complex64::new(0.0, 0.0));
        for x in 1..p {
            let lx = self.table.log_unchecked(x) as u64;
            buf.push(self.roots_n.get(mul_mod(k, lx, n)));
        }
        FftPlanner::new()
            .plan_fft_inverse(buf.len())
            .process(&mut buf);
        ResolventRow { k, values: buf }
    }

    /// `| |S(θ^k, ζ^u)|² − p |` for a doubly nontrivial pair.
    pub fn resolvent_modulus_sq_check(&self, k: u64, u: u64) -> Result<f64, ExpSumError> {
        if k % self.order() == 0 {
            return Err(ExpSumError::TrivialK);
        }
        if u % self.p() == 0 {
            return Err(ExpSumError::TrivialU);
        }
        let s = self.resolvent(k, u).value;
        Ok((s.norm_sqr() - self.p() as f64).abs())
    }

    /// `Σ_{z ∈ J} e_{p−1}(k log_g z)`, summed over `j` ascending.
    pub fn log_character_sum(&self, j: &Progression, k: u64) -> Result<Complex64, ExpSumError> {
        let p = self.p();
        j.validate(p)?;
        let n = self.order();
        let k = k % n;
        let acc: CompensatedSum = j
            .iter()
            .map(|z| {
                let lz = self.table.log_unchecked(z) as u64;
                self.roots_n.get(mul_mod(k, lz, n))
            })
            .collect();
        Ok(acc.value())
    }

    /// Residual of the inversion identity at `(k, z)`.
    pub fn verify_inversion(&self, k: u64, z: u64) -> f64 {
        self.resolvent_row(k).inversion_residual(self, z)
    }

    /// Residual between the direct log-character sum and its expansion
    /// `(1/p) Σ_{u=1}^{p} S(θ^k, ζ^u) Σ_{z∈J} e_p(−uz)`.
    pub fn verify_decomposition(&self, j: &Progression, k: u64) -> Result<f64, ExpSumError> {
        let direct = self.log_character_sum(j, k)?;
        let row = self.resolvent_row(k);
        Ok((direct - row.decomposition(self.p(), j)).norm())
    }

    /// `Σ_{z∈J} e_{p−1}(k log_g z)` for every `k` in `[0, p − 2]`, by one
    /// inverse DFT of length `p − 1` of the indicator of `log_g J`.
    pub fn log_character_sums_all(&self, j: &Progression) -> Result<Vec<Complex64>, ExpSumError> {
        j.validate(self.p())?;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.order() as usize];
        for z in j.iter() {
            buf[self.table.log_unchecked(z) as usize] += 1.0;
        }
        FftPlanner::new()
            .plan_fft_inverse(buf.len())
            .process(&mut buf);
        Ok(buf)
    }

    /// Maximum of `|Σ_{z∈J} e_{p−1}(k log z)| / (√p (2 + ln p))` over the
    /// given nontrivial `k`, summed directly. With `ks = None` every `k` in
    /// `1..p−1` is covered through [`Self::log_character_sums_all`].
    pub fn pv_bound_check(
        &self,
        j: &Progression,
        ks: Option<&[u64]>,
    ) -> Result<PvReport, ExpSumError> {
        j.validate(self.p())?;
        let n = self.order();
        let moduli: Vec<(u64, f64)> = match ks {
            Some(ks) => ks
                .par_iter()
                .filter(|&&k| k % n != 0)
                .map(|&k| {
                    (
                        k,
                        self.log_character_sum(j, k)
                            .map(|s| s.norm())
                            .unwrap_or(f64::NAN),
                    )
                })
                .collect(),
            None => self
                .log_character_sums_all(j)?
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, s)| (k as u64, s.norm()))
                .collect(),
        };
        let bound = pv_bound(self.p());
        let (worst_k, max_modulus) =
            moduli.iter().copied().fold(
                (0, 0.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        Ok(PvReport {
            bound,
            max_modulus,
            max_ratio: max_modulus / bound,
            worst_k,
            checked: moduli.len(),
        })
    }
}

/// `S(θ^k, ζ^u)` for all `u` at a fixed `k`.
#[derive(Debug, Clone)]
pub struct ResolventRow {
    pub k: u64,
    pub values: Vec<Complex64>,
}

impl ResolventRow {
    /// `(1/p) Σ_{u=1}^{p} ζ^{−uz} S(θ^k, ζ^u)`.
    pub fn inversion_rhs(&self, sums: &ExpSums<'_>, z: u64) -> Complex64 {
        let p = self.values.len() as u64;
        let z = z % p;
        let acc: CompensatedSum = (1..=p)
            .map(|u| sums.roots_p.get_neg(mul_mod(u, z, p)) * self.values[(u % p) as usize])
            .collect();
        acc.value() / p as f64
    }

    /// `|θ^{k log z} − (1/p) Σ_u ζ^{−uz} S(θ^k, ζ^u)|`.
    pub fn inversion_residual(&self, sums: &ExpSums<'_>, z: u64) -> f64 {
        let n = sums.order();
        let lz = sums.table.log_unchecked(z % sums.p()) as u64;
        let lhs = sums.roots_n.get(mul_mod(self.k, lz, n));
        (lhs - self.inversion_rhs(sums, z)).norm()
    }

    /// `(1/p) Σ_{u=1}^{p} S(θ^k, ζ^u) Σ_{z∈J} e_p(−uz)`.
    pub fn decomposition(&self, p: u64, j: &Progression) -> Complex64 {
        let acc: CompensatedSum = (1..=p)
            .map(|u| self.values[(u % p) as usize] * progression_phase_sum(p, j, u).value)
            .collect();
        acc.value() / p as f64
    }
}
