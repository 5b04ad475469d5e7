//! Discrete logarithm solvers.
//!
//! Logs are canonical representatives in `[0, p − 2]`. Three routes are
//! provided: a full lookup table for small `p`, baby-step giant-step, and
//! Pollard rho with Floyd cycle detection.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::numtheory::{gcd, mod_inverse, mul_mod, FieldCtx};

/// Largest prime for which a full table is materialised.
pub const TABLE_CAP: u64 = 100_000_000;

/// Restarts allowed before Pollard rho gives up.
const RHO_MAX_RESTARTS: u32 = 64;

/// Largest number of congruence candidates tested after a degenerate collision.
const RHO_MAX_CANDIDATES: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DlogError {
    #[error("{x} is divisible by p = {p} and has no logarithm")]
    ZeroResidue { p: u64, x: u64 },
    #[error("p = {0} exceeds the table cap {TABLE_CAP}")]
    TableTooLarge(u64),
    #[error("pollard rho exhausted {0} restarts")]
    RetriesExhausted(u32),
}

fn check_residue(ctx: &FieldCtx, x: u64) -> Result<u64, DlogError> {
    let r = x % ctx.p();
    if r == 0 {
        return Err(DlogError::ZeroResidue { p: ctx.p(), x });
    }
    Ok(r)
}

/// Table of `log_g x` for every `x` in `[1, p − 1]`.
#[derive(Debug, Clone)]
pub struct DlogTable {
    ctx: FieldCtx,
    // logs[0] is unused
    logs: Vec<u32>,
    powers: Vec<u32>,
}

impl DlogTable {
    /// Walks `x ← g·x` once, recording each power.
    pub fn build(ctx: &FieldCtx) -> Result<Self, DlogError> {
        let p = ctx.p();
        if p > TABLE_CAP {
            return Err(DlogError::TableTooLarge(p));
        }
        let n = (p - 1) as usize;
        let mut logs = vec![u32::MAX; p as usize];
        let mut powers = Vec::with_capacity(n);
        let mut x = 1u64;
        for j in 0..n {
            logs[x as usize] = j as u32;
            powers.push(x as u32);
            x = x * ctx.g() % p;
        }
        debug_assert_eq!(x, 1);
        Ok(Self {
            ctx: ctx.clone(),
            logs,
            powers,
        })
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    /// `log_g x`; `x` is reduced modulo `p` first.
    pub fn log(&self, x: u64) -> Result<u64, DlogError> {
        let r = check_residue(&self.ctx, x)?;
        Ok(self.logs[r as usize] as u64)
    }

    /// Unchecked lookup for `x` in `[1, p − 1]`.
    #[inline]
    pub fn log_unchecked(&self, x: u64) -> u32 {
        self.logs[x as usize]
    }

    /// `g^j` for `j` in `[0, p − 2]`.
    #[inline]
    pub fn power(&self, j: u64) -> u64 {
        self.powers[j as usize] as u64
    }

    /// The sequence `g^0, g^1, …, g^(p−2)`.
    pub fn powers(&self) -> &[u32] {
        &self.powers
    }

    /// Log of `h` to another primitive root `base` (same prime), by change of base.
    pub fn log_to_base(&self, base: u64, h: u64) -> Result<u64, DlogError> {
        let n = self.ctx.order();
        let lb = self.log(base)?;
        let inv = mod_inverse(lb, n).expect("base must be a primitive root");
        Ok(mul_mod(self.log(h)?, inv, n))
    }
}

/// Builds the table for `ctx`; see [`DlogTable::build`].
pub fn build_table(ctx: &FieldCtx) -> Result<DlogTable, DlogError> {
    DlogTable::build(ctx)
}

/// Baby-step giant-step with block size `⌈√(p − 1)⌉`.
pub fn dlog_bsgs(ctx: &FieldCtx, x: u64) -> Result<u64, DlogError> {
    let x = check_residue(ctx, x)?;
    let p = ctx.p();
    let n = ctx.order();
    let mut m = (n as f64).sqrt() as u64;
    while m * m < n {
        m += 1;
    }

    let mut baby: HashMap<u64, u64> = HashMap::with_capacity(m as usize);
    let mut e = 1u64;
    for j in 0..m {
        baby.entry(e).or_insert(j);
        e = mul_mod(e, ctx.g(), p);
    }
    // giant step g^(−m)
    let giant = ctx.pow(ctx.g(), n - m % n);
    let mut y = x;
    for i in 0..=m {
        if let Some(&j) = baby.get(&y) {
            return Ok((i * m + j) % n);
        }
        y = mul_mod(y, giant, p);
    }
    unreachable!("g is a generator, so every residue has a logarithm")
}

#[derive(Debug, Clone, Copy)]
struct Walk {
    y: u64,
    // y = g^a · x^b
    a: u64,
    b: u64,
}

impl Walk {
    fn step(&mut self, ctx: &FieldCtx, x: u64) {
        let p = ctx.p();
        let n = ctx.order();
        match self.y % 3 {
            0 => {
                self.y = mul_mod(self.y, self.y, p);
                self.a = mul_mod(self.a, 2, n);
                self.b = mul_mod(self.b, 2, n);
            }
            1 => {
                self.y = mul_mod(self.y, x, p);
                self.b = (self.b + 1) % n;
            }
            _ => {
                self.y = mul_mod(self.y, ctx.g(), p);
                self.a = (self.a + 1) % n;
            }
        }
    }
}

/// Solves `coef · L ≡ rhs (mod n)` and returns the candidate `L` with `g^L = x`.
fn resolve_collision(ctx: &FieldCtx, x: u64, coef: u64, rhs: u64) -> Option<u64> {
    let n = ctx.order();
    if coef == 0 {
        return None;
    }
    let d = gcd(coef, n);
    if rhs % d != 0 || d > RHO_MAX_CANDIDATES {
        return None;
    }
    let nd = n / d;
    let base = if nd == 1 {
        0
    } else {
        let inv = mod_inverse((coef / d) % nd, nd)?;
        mul_mod((rhs / d) % nd, inv, nd)
    };
    (0..d)
        .map(|i| base + i * nd)
        .find(|&cand| ctx.pow(ctx.g(), cand) == x)
}

/// Pollard rho with the three-way partition walk and Floyd cycle detection.
///
/// Starting points are drawn from a ChaCha stream keyed by `seed`, so the
/// run is reproducible. The result is the canonical log in `[0, p − 2]`
/// whatever the seed.
pub fn dlog_pollard_rho(ctx: &FieldCtx, x: u64, seed: u64) -> Result<u64, DlogError> {
    let x = check_residue(ctx, x)?;
    if x == 1 {
        return Ok(0);
    }
    let p = ctx.p();
    let n = ctx.order();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // bounded walk length; a healthy walk collides after O(√p) steps
    let max_steps = 64 * ((p as f64).sqrt() as u64 + 16);

    for _ in 0..RHO_MAX_RESTARTS {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let y = mul_mod(ctx.pow(ctx.g(), a), ctx.pow(x, b), p);
        let mut tortoise = Walk { y, a, b };
        let mut hare = tortoise;
        let mut collided = false;
        for _ in 0..max_steps {
            tortoise.step(ctx, x);
            hare.step(ctx, x);
            hare.step(ctx, x);
            if tortoise.y == hare.y {
                collided = true;
                break;
            }
        }
        if !collided {
            continue;
        }
        // g^(a1) x^(b1) = g^(a2) x^(b2)  ⇒  (b1 − b2)·L ≡ a2 − a1 (mod n)
        let coef = (tortoise.b + n - hare.b) % n;
        let rhs = (hare.a + n - tortoise.a) % n;
        if let Some(l) = resolve_collision(ctx, x, coef, rhs) {
            return Ok(l);
        }
    }
    Err(DlogError::RetriesExhausted(RHO_MAX_RESTARTS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::build_ctx;
    use rand::Rng;

    #[test]
    fn table_for_seven() {
        let ctx = build_ctx(7, None).unwrap();
        let t = build_table(&ctx).unwrap();
        let expected = [(1, 0), (3, 1), (2, 2), (6, 3), (4, 4), (5, 5)];
        for (x, l) in expected {
            assert_eq!(t.log(x).unwrap(), l, "log_3 {x}");
        }
        assert_eq!(t.log(6).unwrap(), 3);
        assert_eq!(t.log(0), Err(DlogError::ZeroResidue { p: 7, x: 0 }));
        assert_eq!(t.log(14), Err(DlogError::ZeroResidue { p: 7, x: 14 }));
        assert_eq!(t.log(12).unwrap(), 5);
    }

    #[test]
    fn table_is_a_bijection() {
        for p in [3u64, 101, 1009, 10007] {
            let ctx = build_ctx(p, None).unwrap();
            let t = build_table(&ctx).unwrap();
            assert_eq!(t.log(1).unwrap(), 0);
            let mut seen = vec![false; (p - 1) as usize];
            for x in 1..p {
                let l = t.log(x).unwrap();
                assert_eq!(ctx.pow(ctx.g(), l), x);
                assert!(!seen[l as usize]);
                seen[l as usize] = true;
            }
        }
    }

    #[test]
    fn table_cap_enforced() {
        let p = 100_000_007;
        let ctx = build_ctx(p, None).unwrap();
        assert_eq!(build_table(&ctx).unwrap_err(), DlogError::TableTooLarge(p));
    }

    #[test]
    fn bsgs_examples() {
        let ctx = build_ctx(7, None).unwrap();
        assert_eq!(dlog_bsgs(&ctx, 5), Ok(5));
        assert_eq!(dlog_bsgs(&ctx, 1), Ok(0));
        assert_eq!(dlog_bsgs(&ctx, 3), Ok(1));
        assert_eq!(
            dlog_bsgs(&ctx, 7),
            Err(DlogError::ZeroResidue { p: 7, x: 7 })
        );
        let ctx = build_ctx(3, None).unwrap();
        assert_eq!(dlog_bsgs(&ctx, 2), Ok(1));
    }

    #[test]
    fn rho_examples() {
        let ctx = build_ctx(7, None).unwrap();
        for seed in 0..20 {
            assert_eq!(dlog_pollard_rho(&ctx, 4, seed), Ok(4));
        }
        let ctx = build_ctx(11, None).unwrap();
        assert_eq!(dlog_pollard_rho(&ctx, 1, 99), Ok(0));
        assert_eq!(
            dlog_pollard_rho(&ctx, 22, 1),
            Err(DlogError::ZeroResidue { p: 11, x: 22 })
        );
    }

    #[test]
    fn all_solvers_agree_on_small_primes_exhaustively() {
        for p in [3u64, 5, 7, 11, 13, 101, 1009] {
            let ctx = build_ctx(p, None).unwrap();
            let t = build_table(&ctx).unwrap();
            for x in 1..p {
                let l = t.log(x).unwrap();
                assert_eq!(dlog_bsgs(&ctx, x).unwrap(), l, "bsgs p={p} x={x}");
                assert_eq!(dlog_pollard_rho(&ctx, x, x).unwrap(), l, "rho p={p} x={x}");
            }
        }
    }

    #[test]
    fn solvers_agree_at_10007_and_beyond_table() {
        let ctx = build_ctx(10007, None).unwrap();
        let t = build_table(&ctx).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let x = rng.gen_range(1..10007);
            let l = t.log(x).unwrap();
            assert_eq!(dlog_bsgs(&ctx, x).unwrap(), l);
            assert_eq!(dlog_pollard_rho(&ctx, x, rng.gen()).unwrap(), l);
        }
        // no table at this size; round trip is the oracle
        let ctx = build_ctx(1_000_000_007, None).unwrap();
        for _ in 0..5 {
            let x = rng.gen_range(1..1_000_000_007);
            let l = dlog_bsgs(&ctx, x).unwrap();
            assert_eq!(ctx.pow(ctx.g(), l), x);
            assert_eq!(dlog_pollard_rho(&ctx, x, 3).unwrap(), l);
        }
    }

    #[test]
    fn homomorphism() {
        let ctx = build_ctx(10007, Some(5)).unwrap();
        let t = build_table(&ctx).unwrap();
        let n = ctx.order();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = rng.gen_range(1..ctx.p());
            let y = rng.gen_range(1..ctx.p());
            let lxy = t.log(ctx.mul(x, y)).unwrap();
            assert_eq!(lxy, (t.log(x).unwrap() + t.log(y).unwrap()) % n);
        }
    }

    #[test]
    fn change_of_base() {
        let ctx = build_ctx(101, None).unwrap();
        let t = build_table(&ctx).unwrap();
        let other = (3..101).find(|&h| ctx.is_primitive_root(h)).unwrap();
        let t2 = build_table(&build_ctx(101, Some(other)).unwrap()).unwrap();
        for x in 1..101 {
            assert_eq!(t.log_to_base(other, x).unwrap(), t2.log(x).unwrap());
        }
    }
}
