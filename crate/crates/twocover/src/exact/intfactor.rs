//! Integer factorization: trial division, deterministic Miller–Rabin below
//! 2⁶⁴, and Pollard rho with Brent cycle detection under a configurable
//! budget.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;
// Pow is used via fully-qualified calls below.

/// Iteration budget for the factorization of one integer.
#[derive(Debug, Clone)]
pub struct FactorBudget {
    /// Trial-divide by every prime up to this bound first.
    pub trial_bound: u64,
    /// Maximum Brent iterations per rho attempt.
    pub rho_iterations: u64,
    /// Maximum rho attempts per composite cofactor.
    pub rho_attempts: u32,
}

impl Default for FactorBudget {
    fn default() -> Self {
        FactorBudget { trial_bound: 1_000_000, rho_iterations: 50_000_000, rho_attempts: 8 }
    }
}

#[derive(Debug, Clone)]
pub struct PrimeFactors {
    pub negative: bool,
    /// Prime factors with exponents, primes ascending.
    pub factors: Vec<(BigUint, u32)>,
}

impl PrimeFactors {
    pub fn value(&self) -> BigInt {
        let mut v = BigInt::one();
        for (p, e) in &self.factors {
            v *= BigInt::from(p.clone()).pow(*e);
        }
        if self.negative {
            -v
        } else {
            v
        }
    }

    /// Prime support as ascending u64 primes (panics above 2⁶⁴; discriminant
    /// prime factors in scope always fit).
    pub fn primes_u64(&self) -> Vec<u64> {
        self.factors.iter().map(|(p, _)| p.to_u64().expect("prime exceeds u64")).collect()
    }

    pub fn ord_of(&self, p: u64) -> u32 {
        let pb = BigUint::from(p);
        self.factors.iter().find(|(q, _)| *q == pb).map(|(_, e)| *e).unwrap_or(0)
    }
}

#[derive(Debug, Error)]
pub enum IntFactorError {
    #[error("factorization budget exceeded; unfactored cofactor {cofactor}")]
    BudgetExceeded { partial: Vec<(BigUint, u32)>, cofactor: BigUint },
    #[error("cannot factor zero")]
    Zero,
}

/// Sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    if n >= 1 {
        sieve[1] = false;
    }
    let mut i = 2usize;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u64).collect()
}

fn mulmod_u128(a: u128, b: u128, m: u128) -> u128 {
    // Shift-add fallback for products overflowing u128; m < 2^127 assumed.
    if let Some(ab) = a.checked_mul(b) {
        return ab % m;
    }
    let mut result = 0u128;
    let mut a = a % m;
    let mut b = b % m;
    while b > 0 {
        if b & 1 == 1 {
            result = (result + a) % m;
        }
        a = (a << 1) % m;
        b >>= 1;
    }
    result
}

fn powmod_u128(mut a: u128, mut e: u128, m: u128) -> u128 {
    let mut acc = 1u128 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod_u128(acc, a, m);
        }
        a = mulmod_u128(a, a, m);
        e >>= 1;
    }
    acc
}

fn miller_rabin_u128(n: u128, bases: &[u128]) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'next: for &a in bases {
        let a = a % n;
        if a == 0 {
            continue;
        }
        let mut x = powmod_u128(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod_u128(x, x, n);
            if x == n - 1 {
                continue 'next;
            }
        }
        return false;
    }
    true
}

/// Primality test: deterministic for n < 2⁶⁴ (fixed Miller–Rabin base set),
/// otherwise Miller–Rabin with 40 fixed pseudo-random bases plus small trial
/// division.
pub fn is_prime(n: &BigUint) -> bool {
    if let Some(v) = n.to_u128() {
        if v < (1u128 << 64) {
            // This base set is deterministic below 2^64.
            return miller_rabin_u128(v, &[2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]);
        }
        let bases: Vec<u128> = (0..40u64).map(|i| 2 + (0x9e3779b97f4a7c15u64.wrapping_mul(i + 1) >> 8) as u128).collect();
        return miller_rabin_u128(v, &bases);
    }
    // Very large input: BigUint Miller–Rabin.
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    if n.is_even() {
        return false;
    }
    let nm1 = n - &one;
    let mut d = nm1.clone();
    let mut s = 0u32;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }
    'next: for i in 0..40u64 {
        let a = BigUint::from(2u64 + i * i + 1);
        let mut x = a.modpow(&d, n);
        if x == one || x == nm1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == nm1 {
                continue 'next;
            }
        }
        return false;
    }
    true
}

fn brent_rho_u128(n: u128, budget: u64, seed: u64) -> Option<u128> {
    // Brent's cycle detection for x ↦ x² + c mod n.
    let c = (seed as u128 % (n - 1)) + 1;
    let mut y = 2u128 + seed as u128 % (n - 2);
    let mut iters = 0u64;
    let m = 128u64;
    let mut g = 1u128;
    let mut r = 1u64;
    let mut q = 1u128;
    let mut x = y;
    let mut ys = y;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = (mulmod_u128(y, y, n) + c) % n;
        }
        let mut k = 0u64;
        while k < r && g == 1 {
            ys = y;
            let lim = m.min(r - k);
            for _ in 0..lim {
                y = (mulmod_u128(y, y, n) + c) % n;
                let diff = if x > y { x - y } else { y - x };
                q = mulmod_u128(q, diff.max(1), n);
            }
            g = gcd_u128(q, n);
            k += m;
            iters += lim;
            if iters > budget {
                return None;
            }
        }
        r *= 2;
    }
    if g == n {
        // Backtrack.
        loop {
            ys = (mulmod_u128(ys, ys, n) + c) % n;
            let diff = if x > ys { x - ys } else { ys - x };
            g = gcd_u128(diff.max(1), n);
            if g > 1 {
                break;
            }
        }
    }
    if g > 1 && g < n {
        Some(g)
    } else {
        None
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Factor a nonzero integer into primes. The product of the returned primes
/// (with the sign) equals the input exactly; every factor passes the
/// primality test in [`is_prime`].
pub fn integer_factor(n: &BigInt, budget: &FactorBudget) -> Result<PrimeFactors, IntFactorError> {
    if n.is_zero() {
        return Err(IntFactorError::Zero);
    }
    let negative = n.is_negative();
    let mut rem = n.abs().to_biguint().unwrap();
    let mut factors: Vec<(BigUint, u32)> = Vec::new();

    let push = |factors: &mut Vec<(BigUint, u32)>, p: BigUint, e: u32| {
        for (q, m) in factors.iter_mut() {
            if *q == p {
                *m += e;
                return;
            }
        }
        factors.push((p, e));
    };

    // Trial division by 2 and odd numbers up to the bound (odd trial division
    // is as fast as a sieve at this scale and needs no memory).
    let one = BigUint::one();
    for p in [2u64, 3, 5] {
        let pb = BigUint::from(p);
        let mut e = 0u32;
        while (&rem % &pb).is_zero() {
            rem /= &pb;
            e += 1;
        }
        if e > 0 {
            push(&mut factors, pb, e);
        }
    }
    let mut d = 7u64;
    let wheel = [4u64, 2, 4, 2, 4, 6, 2, 6];
    let mut wi = 0usize;
    while d <= budget.trial_bound {
        if let Some(r64) = rem.to_u64() {
            if (d as u128) * (d as u128) > r64 as u128 {
                break;
            }
        }
        let db = BigUint::from(d);
        if (&rem % &db).is_zero() {
            let mut e = 0u32;
            while (&rem % &db).is_zero() {
                rem /= &db;
                e += 1;
            }
            push(&mut factors, db, e);
        }
        d += wheel[wi];
        wi = (wi + 1) % wheel.len();
    }

    // Remaining cofactor: split with rho recursively.
    let mut stack = vec![rem];
    while let Some(m) = stack.pop() {
        if m == one {
            continue;
        }
        if is_prime(&m) {
            push(&mut factors, m, 1);
            continue;
        }
        // Perfect power check keeps rho away from p^k inputs.
        let mut split_as_power = false;
        for k in 2..=m.bits() {
            let r = m.nth_root(k as u32);
            if num_traits::Pow::pow(&r, k as u32) == m {
                for _ in 0..k {
                    stack.push(r.clone());
                }
                split_as_power = true;
                break;
            }
        }
        if split_as_power {
            continue;
        }
        let v = match m.to_u128() {
            Some(v) => v,
            None => {
                // Beyond 2¹²⁸: out of scope for the rho budget here.
                factors.sort_by(|a, b| a.0.cmp(&b.0));
                return Err(IntFactorError::BudgetExceeded { partial: factors, cofactor: m });
            }
        };
        let mut found = None;
        for attempt in 0..budget.rho_attempts {
            if let Some(g) = brent_rho_u128(v, budget.rho_iterations, 0x1234_5678u64.wrapping_add(attempt as u64 * 0x9e37)) {
                found = Some(g);
                break;
            }
        }
        match found {
            Some(g) => {
                stack.push(BigUint::from(g));
                stack.push(BigUint::from(v / g));
            }
            None => {
                factors.sort_by(|a, b| a.0.cmp(&b.0));
                return Err(IntFactorError::BudgetExceeded { partial: factors, cofactor: m });
            }
        }
    }

    factors.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(PrimeFactors { negative, factors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factor_i64(n: i64) -> PrimeFactors {
        integer_factor(&BigInt::from(n), &FactorBudget::default()).unwrap()
    }

    #[test]
    fn paper_discriminant_factorizations() {
        let f = factor_i64(47725744);
        assert_eq!(
            f.factors,
            vec![(BigUint::from(2u32), 4), (BigUint::from(11u32), 1), (BigUint::from(271169u32), 1)]
        );
        let f = factor_i64(143135548);
        assert_eq!(f.factors, vec![(BigUint::from(2u32), 2), (BigUint::from(35783887u32), 1)]);
        let f = factor_i64(1);
        assert!(f.factors.is_empty());
        assert_eq!(f.value(), BigInt::one());
    }

    #[test]
    fn roundtrip_and_primality() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..60 {
            let n: i128 = rng.gen_range(2..1i128 << 40);
            let n = BigInt::from(n) * if rng.gen_bool(0.5) { -1 } else { 1 };
            let f = integer_factor(&n, &FactorBudget::default()).unwrap();
            assert_eq!(f.value(), n);
            for (p, _) in &f.factors {
                assert!(is_prime(p), "non-prime factor {p}");
            }
        }
    }

    #[test]
    fn semiprime_beyond_trial_range() {
        // 1299709 · 1299721 (both prime, above any small trial range product).
        let n = BigInt::from(1299709u64) * BigInt::from(1299721u64);
        let f = integer_factor(&n, &FactorBudget::default()).unwrap();
        assert_eq!(f.factors.len(), 2);
        assert_eq!(f.value(), n);
    }

    #[test]
    fn budget_exhaustion_reports_cofactor() {
        let n = BigInt::from(1299709u64) * BigInt::from(1299721u64);
        let budget = FactorBudget { trial_bound: 100, rho_iterations: 1, rho_attempts: 1 };
        match integer_factor(&n, &budget) {
            Err(IntFactorError::BudgetExceeded { cofactor, .. }) => {
                assert_eq!(BigInt::from(cofactor), n);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn prime_sieve() {
        assert_eq!(primes_up_to(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(is_prime(&BigUint::from(1153u32)));
        assert!(is_prime(&BigUint::from(66553u32)));
        assert!(!is_prime(&BigUint::from(66551u32)));
    }
}
