//! Primality, factorisation, modular exponentiation and primitive roots.
//!
//! All arithmetic is on `u64` with `u128` intermediates, so products never
//! overflow. Primes handed to [`FieldCtx`] are capped at [`MAX_PRIME`].

use thiserror::Error;

/// Largest modulus accepted by [`FieldCtx`].
pub const MAX_PRIME: u64 = 1 << 62;

/// Trial division bound used before switching to Pollard rho.
const TRIAL_DIVISION_LIMIT: u64 = 1_000_000;

/// Witness set that makes Miller–Rabin deterministic below 2^64.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumTheoryError {
    #[error("modulus must be at least 2, got {0}")]
    BadModulus(u64),
    #[error("cannot factorize {0}: input must be at least 2")]
    FactorizeTooSmall(u64),
    #[error("{0} is not an odd prime")]
    NotPrime(u64),
    #[error("prime {0} exceeds the supported cap 2^62")]
    PrimeTooLarge(u64),
    #[error("{g} is not a primitive root modulo {p}")]
    NonGenerator { p: u64, g: u64 },
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `base^exp mod modulus` without argument checks; `modulus` must be ≥ 1.
#[inline]
pub(crate) fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let mut result = 1u64;
    let mut b = base % modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, b, modulus);
        }
        b = mul_mod(b, b, modulus);
        exp >>= 1;
    }
    result
}

/// Discrete exponentiation `base^exponent mod modulus`.
pub fn mod_pow(base: u64, exponent: u64, modulus: u64) -> Result<u64, NumTheoryError> {
    if modulus < 2 {
        return Err(NumTheoryError::BadModulus(modulus));
    }
    Ok(pow_mod(base, exponent, modulus))
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub(crate) fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// Deterministic primality test, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &MR_WITNESSES {
        if n % q == 0 {
            return n == q;
        }
    }
    let mut d = n - 1;
    let s = d.trailing_zeros();
    d >>= s;
    'witness: for &a in &MR_WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Brent's variant of Pollard rho; returns a nontrivial factor of the odd
/// composite `n`.
fn pollard_brent(n: u64) -> u64 {
    let f = |x: u64, c: u64| (mul_mod(x, x, n) + c) % n;
    for c in 1.. {
        let mut y = 2u64;
        let mut r = 1u64;
        let mut q = 1u64;
        let mut g = 1u64;
        let mut x = y;
        let mut ys = y;
        const BATCH: u64 = 128;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y, c);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = f(y, c);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += BATCH;
            }
            r *= 2;
        }
        if g == n {
            // batch overshot: replay one step at a time
            loop {
                ys = f(ys, c);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
    }
    unreachable!("pollard rho exhausted every polynomial")
}

fn split_into(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_brent(n);
    split_into(d, out);
    split_into(n / d, out);
}

/// Prime factorisation of `n` as `(prime, multiplicity)` with increasing primes.
pub fn factorize(n: u64) -> Result<Vec<(u64, u32)>, NumTheoryError> {
    if n < 2 {
        return Err(NumTheoryError::FactorizeTooSmall(n));
    }
    let mut rest = n;
    let mut primes = Vec::new();
    while rest % 2 == 0 {
        primes.push(2);
        rest /= 2;
    }
    let mut d = 3u64;
    while d <= TRIAL_DIVISION_LIMIT && d * d <= rest {
        while rest % d == 0 {
            primes.push(d);
            rest /= d;
        }
        d += 2;
    }
    if rest > 1 {
        if d * d > rest {
            primes.push(rest);
        } else {
            split_into(rest, &mut primes);
        }
    }
    primes.sort_unstable();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    for q in primes {
        match factors.last_mut() {
            Some((last, mult)) if *last == q => *mult += 1,
            _ => factors.push((q, 1)),
        }
    }
    Ok(factors)
}

fn check_odd_prime(p: u64) -> Result<(), NumTheoryError> {
    if p == 2 || !is_prime(p) {
        return Err(NumTheoryError::NotPrime(p));
    }
    if p > MAX_PRIME {
        return Err(NumTheoryError::PrimeTooLarge(p));
    }
    Ok(())
}

fn is_generator(g: u64, p: u64, factors: &[(u64, u32)]) -> bool {
    let g = g % p;
    g != 0
        && factors
            .iter()
            .all(|&(q, _)| pow_mod(g, (p - 1) / q, p) != 1)
}

/// Smallest `g ≥ 2` generating the multiplicative group modulo the odd prime `p`.
pub fn smallest_primitive_root(p: u64) -> Result<u64, NumTheoryError> {
    check_odd_prime(p)?;
    let factors = factorize(p - 1)?;
    Ok(first_generator(p, &factors))
}

fn first_generator(p: u64, factors: &[(u64, u32)]) -> u64 {
    (2..p)
        .find(|&g| is_generator(g, p, factors))
        .expect("every odd prime has a primitive root")
}

/// The prime field `Z/pZ` together with a fixed primitive root and the
/// factorisation of the group order `p − 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldCtx {
    p: u64,
    g: u64,
    factors: Vec<(u64, u32)>,
}

impl FieldCtx {
    /// Builds the context for `p`; picks the smallest primitive root when
    /// `g` is `None`.
    pub fn new(p: u64, g: Option<u64>) -> Result<Self, NumTheoryError> {
        check_odd_prime(p)?;
        let factors = factorize(p - 1)?;
        let g = match g {
            Some(g) if (2..p).contains(&g) && is_generator(g, p, &factors) => g,
            Some(g) => return Err(NumTheoryError::NonGenerator { p, g }),
            None => first_generator(p, &factors),
        };
        Ok(Self { p, g, factors })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn g(&self) -> u64 {
        self.g
    }

    /// Order of the multiplicative group, `p − 1`.
    pub fn order(&self) -> u64 {
        self.p - 1
    }

    pub fn factors_of_order(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn pow(&self, base: u64, exp: u64) -> u64 {
        pow_mod(base, exp, self.p)
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.p)
    }

    /// Whether `h` generates the multiplicative group.
    pub fn is_primitive_root(&self, h: u64) -> bool {
        is_generator(h, self.p, &self.factors)
    }
}

/// Builds a [`FieldCtx`]; see [`FieldCtx::new`].
pub fn build_ctx(p: u64, g: Option<u64>) -> Result<FieldCtx, NumTheoryError> {
    FieldCtx::new(p, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trial_division_is_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn small_primality_examples() {
        assert!(is_prime(7));
        assert!(!is_prime(1));
        assert!(!is_prime(0));
        assert!(is_prime(10007));
        assert!(is_prime(2));
        assert!(!is_prime(561));
    }

    #[test]
    fn primality_matches_trial_division_to_a_million() {
        // sieve as the exhaustive oracle
        const LIMIT: usize = 1_000_000;
        let mut composite = vec![false; LIMIT + 1];
        composite[0] = true;
        composite[1] = true;
        let mut i = 2;
        while i * i <= LIMIT {
            if !composite[i] {
                let mut j = i * i;
                while j <= LIMIT {
                    composite[j] = true;
                    j += i;
                }
            }
            i += 1;
        }
        for n in 0..=LIMIT {
            assert_eq!(is_prime(n as u64), !composite[n], "n = {n}");
        }
        for n in [999_983u64, 1_000_003, 10_007, 5003] {
            assert_eq!(is_prime(n), trial_division_is_prime(n));
        }
    }

    #[test]
    fn primality_large_known_values() {
        assert!(is_prime(18_446_744_073_709_551_557)); // largest prime below 2^64
        assert!(!is_prime(18_446_744_073_709_551_615));
        assert!(is_prime((1u64 << 61) - 1));
        // strong pseudoprime to bases 2..=37 fails only with the full set
        assert!(!is_prime(3_825_123_056_546_413_051));
        assert!(!is_prime(4_611_686_014_132_420_609)); // (2^31-1)^2
    }

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(12).unwrap(), vec![(2, 2), (3, 1)]);
        assert_eq!(factorize(10006).unwrap(), vec![(2, 1), (5003, 1)]);
        assert_eq!(factorize(6).unwrap(), vec![(2, 1), (3, 1)]);
        assert_eq!(factorize(2).unwrap(), vec![(2, 1)]);
        assert_eq!(factorize(1), Err(NumTheoryError::FactorizeTooSmall(1)));
        assert_eq!(factorize(0), Err(NumTheoryError::FactorizeTooSmall(0)));
    }

    #[test]
    fn factorize_beyond_trial_division() {
        // both prime factors exceed the trial-division bound
        let a = 1_000_003u64;
        let b = 999_999_937u64;
        assert_eq!(factorize(a * b).unwrap(), vec![(a, 1), (b, 1)]);
        assert_eq!(factorize(b * b).unwrap(), vec![(b, 2)]);
        let n = (1u64 << 62) - 57 - 1; // p − 1 for a prime near the cap
        let f = factorize(n).unwrap();
        assert_eq!(f.iter().map(|&(q, m)| q.pow(m)).product::<u64>(), n);
        assert!(f.iter().all(|&(q, _)| is_prime(q)));
    }

    #[test]
    fn factorize_reconstructs_up_to_ten_million_sampled() {
        let mut n = 2u64;
        while n <= 10_000_000 {
            let f = factorize(n).unwrap();
            assert!(f.windows(2).all(|w| w[0].0 < w[1].0));
            assert_eq!(f.iter().map(|&(q, m)| q.pow(m)).product::<u64>(), n);
            n += 997;
        }
    }

    #[test]
    fn mod_pow_examples() {
        assert_eq!(mod_pow(3, 5, 7), Ok(5));
        assert_eq!(mod_pow(3, 0, 7), Ok(1));
        assert_eq!(mod_pow(3, 6, 7), Ok(1));
        assert_eq!(mod_pow(3, 6, 1), Err(NumTheoryError::BadModulus(1)));
        assert_eq!(mod_pow(3, 6, 0), Err(NumTheoryError::BadModulus(0)));
        let m = u64::MAX - 58;
        assert_eq!(mod_pow(m - 1, 2, m), Ok(1));
    }

    #[test]
    fn primitive_root_examples() {
        assert_eq!(smallest_primitive_root(7), Ok(3));
        assert_eq!(smallest_primitive_root(11), Ok(2));
        assert_eq!(smallest_primitive_root(101), Ok(2));
        assert_eq!(smallest_primitive_root(1009), Ok(11));
        assert_eq!(smallest_primitive_root(10007), Ok(5));
        assert_eq!(smallest_primitive_root(1_000_003), Ok(2));
        assert_eq!(smallest_primitive_root(9), Err(NumTheoryError::NotPrime(9)));
        assert_eq!(smallest_primitive_root(2), Err(NumTheoryError::NotPrime(2)));
    }

    #[test]
    fn primitive_root_matches_order_enumeration() {
        for p in [3u64, 5, 7, 11, 13, 101, 997] {
            let by_order = (2..p)
                .find(|&g| {
                    let mut x = 1;
                    (1..p - 1).all(|_| {
                        x = x * g % p;
                        x != 1
                    })
                })
                .unwrap();
            assert_eq!(smallest_primitive_root(p).unwrap(), by_order);
        }
    }

    #[test]
    fn build_ctx_examples() {
        let ctx = build_ctx(7, None).unwrap();
        assert_eq!((ctx.p(), ctx.g()), (7, 3));
        assert_eq!(ctx.factors_of_order(), &[(2, 1), (3, 1)]);
        assert_eq!(build_ctx(7, Some(5)).unwrap().g(), 5);
        assert_eq!(
            build_ctx(7, Some(2)),
            Err(NumTheoryError::NonGenerator { p: 7, g: 2 })
        );
        assert_eq!(build_ctx(8, None), Err(NumTheoryError::NotPrime(8)));
        assert_eq!(
            build_ctx(7, Some(10)),
            Err(NumTheoryError::NonGenerator { p: 7, g: 10 })
        );
        let big = (1u64 << 62) + 135; // prime above the cap
        assert!(is_prime(big));
        assert_eq!(
            build_ctx(big, None),
            Err(NumTheoryError::PrimeTooLarge(big))
        );
    }

    #[test]
    fn ctx_generator_invariant() {
        for p in [
            3u64,
            7,
            101,
            1009,
            10007,
            1_000_003,
            2_305_843_009_213_693_951,
        ] {
            let ctx = build_ctx(p, None).unwrap();
            assert_eq!(ctx.pow(ctx.g(), p - 1), 1);
            for &(q, _) in ctx.factors_of_order() {
                assert_ne!(ctx.pow(ctx.g(), (p - 1) / q), 1);
            }
        }
    }

    proptest! {
        #[test]
        fn factorize_round_trips(n in 2u64..u64::MAX / 2) {
            let f = factorize(n).unwrap();
            prop_assert!(f.iter().all(|&(q, _)| is_prime(q)));
            prop_assert_eq!(f.iter().map(|&(q, m)| q.pow(m)).product::<u64>(), n);
        }

        #[test]
        fn inverse_is_inverse(a in 1u64..10_000, m in 2u64..10_000) {
            match mod_inverse(a, m) {
                Some(inv) => prop_assert_eq!(mul_mod(a, inv, m), 1 % m),
                None => prop_assert!(gcd(a, m) > 1),
            }
        }
    }
}
