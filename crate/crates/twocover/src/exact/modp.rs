//! Polynomial arithmetic and factorization over prime fields F_p (p < 2⁶³),
//! used for factorization over Q, residue computations and prime splitting.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::poly::ZPoly;

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    acc
}

fn invmod(a: u64, p: u64) -> u64 {
    powmod(a, p - 2, p)
}

/// Dense polynomial over F_p, ascending coefficients, canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FpPoly {
    pub p: u64,
    coeffs: Vec<u64>,
}

impl FpPoly {
    pub fn new(p: u64, coeffs: Vec<u64>) -> Self {
        let mut f = FpPoly { p, coeffs: coeffs.into_iter().map(|c| c % p).collect() };
        f.normalize();
        f
    }

    pub fn zero(p: u64) -> Self {
        FpPoly { p, coeffs: Vec::new() }
    }

    pub fn one(p: u64) -> Self {
        FpPoly::new(p, vec![1])
    }

    pub fn x(p: u64) -> Self {
        FpPoly::new(p, vec![0, 1])
    }

    pub fn from_zpoly(f: &ZPoly, p: u64) -> Self {
        let pb = BigInt::from(p);
        let coeffs = f
            .coeffs()
            .iter()
            .map(|c| {
                let mut r = c.mod_floor(&pb);
                if r.is_negative() {
                    r += &pb;
                }
                r.to_u64().unwrap()
            })
            .collect();
        FpPoly::new(p, coeffs)
    }

    fn normalize(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> u64 {
        self.coeffs.get(k).copied().unwrap_or(0)
    }

    pub fn lc(&self) -> u64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, x: u64) -> u64 {
        let mut acc = 0u64;
        for &c in self.coeffs.iter().rev() {
            acc = (mulmod(acc, x, self.p) + c) % self.p;
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| (self.coeff(i) + other.coeff(i)) % self.p).collect();
        FpPoly::new(self.p, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| (self.p + self.coeff(i) - other.coeff(i)) % self.p).collect();
        FpPoly::new(self.p, coeffs)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return FpPoly::zero(self.p);
        }
        let mut coeffs = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = (coeffs[i + j] + mulmod(a, b, self.p)) % self.p;
            }
        }
        FpPoly::new(self.p, coeffs)
    }

    pub fn scale(&self, c: u64) -> Self {
        FpPoly::new(self.p, self.coeffs.iter().map(|&a| mulmod(a, c, self.p)).collect())
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(invmod(self.lc(), self.p))
    }

    pub fn divrem(&self, div: &Self) -> (Self, Self) {
        assert!(!div.is_zero());
        let dd = div.degree().unwrap();
        let inv = invmod(div.lc(), self.p);
        let p = self.p;
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0u64; rem.len().saturating_sub(dd)];
        while rem.len() > dd {
            let k = rem.len() - 1 - dd;
            let c = mulmod(*rem.last().unwrap(), inv, p);
            if c != 0 {
                for i in 0..dd {
                    let t = mulmod(div.coeffs[i], c, p);
                    rem[k + i] = (rem[k + i] + p - t) % p;
                }
                quot[k] = c;
            }
            rem.pop();
        }
        (FpPoly::new(p, quot), FpPoly::new(p, rem))
    }

    pub fn rem(&self, div: &Self) -> Self {
        self.divrem(div).1
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return FpPoly::zero(self.p);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| mulmod(c, (i as u64) % self.p, self.p))
            .collect();
        FpPoly::new(self.p, coeffs)
    }

    pub fn pow_mod(&self, mut e: u64, modulus: &Self) -> Self {
        let mut base = self.rem(modulus);
        let mut acc = FpPoly::one(self.p);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).rem(modulus);
            }
            base = base.mul(&base).rem(modulus);
            e >>= 1;
        }
        acc
    }

    pub fn is_squarefree(&self) -> bool {
        if self.is_zero() {
            return false;
        }
        self.gcd(&self.derivative()).degree() == Some(0)
    }

    /// Full factorization into monic irreducibles with multiplicity, plus the
    /// leading unit. Deterministic for a fixed input.
    pub fn factor(&self) -> (u64, Vec<(FpPoly, usize)>) {
        assert!(!self.is_zero());
        let unit = self.lc();
        let mut out: Vec<(FpPoly, usize)> = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f0f0);
        let mut stack = vec![(self.monic(), 1usize)];
        while let Some((f, mult)) = stack.pop() {
            if f.degree() == Some(0) {
                continue;
            }
            let d = f.derivative();
            if d.is_zero() {
                // f = g(x^p); over F_p this means f = h(x)^p with h obtained by
                // taking p-th roots of coefficients (identity on F_p).
                let mut coeffs = Vec::new();
                let step = self.p as usize;
                let mut i = 0;
                while i < f.coeffs.len() {
                    coeffs.push(f.coeffs[i]);
                    i += step;
                }
                stack.push((FpPoly::new(self.p, coeffs), mult * self.p as usize));
                continue;
            }
            let g = f.gcd(&d);
            if g.degree() != Some(0) {
                // f/g carries each factor of multiplicity coprime to p once;
                // factors with multiplicity divisible by p survive only in the
                // remaining cofactor, handled by the derivative-zero branch.
                let sf = f.divrem(&g).0;
                let mut remaining = f.clone();
                for (irr, _) in factor_squarefree(&sf, &mut rng) {
                    let mut m = 0usize;
                    loop {
                        let (q, r) = remaining.divrem(&irr);
                        if !r.is_zero() {
                            break;
                        }
                        m += 1;
                        remaining = q;
                    }
                    merge_factor(&mut out, irr, m * mult);
                }
                if remaining.degree().map_or(false, |d| d > 0) {
                    stack.push((remaining.monic(), mult));
                }
                continue;
            }
            for (irr, m) in factor_squarefree(&f, &mut rng) {
                merge_factor(&mut out, irr, m * mult);
            }
        }
        out.sort_by(|a, b| a.0.degree().cmp(&b.0.degree()).then(a.0.coeffs.cmp(&b.0.coeffs)));
        (unit, out)
    }

    /// Roots in F_p.
    pub fn roots(&self) -> Vec<u64> {
        let (_, fac) = self.factor();
        let mut out: Vec<u64> = fac
            .iter()
            .filter(|(g, _)| g.degree() == Some(1))
            .map(|(g, _)| (self.p - g.coeff(0)) % self.p)
            .collect();
        out.sort_unstable();
        out
    }
}

fn merge_factor(out: &mut Vec<(FpPoly, usize)>, f: FpPoly, m: usize) {
    for (g, e) in out.iter_mut() {
        if *g == f {
            *e += m;
            return;
        }
    }
    out.push((f, m));
}

/// Cantor–Zassenhaus on a squarefree monic polynomial.
fn factor_squarefree(f: &FpPoly, rng: &mut ChaCha8Rng) -> Vec<(FpPoly, usize)> {
    let p = f.p;
    let mut result = Vec::new();
    // Distinct-degree splitting.
    let mut h = FpPoly::x(p);
    let mut v = f.monic();
    let mut d = 0u32;
    while let Some(deg) = v.degree() {
        if deg == 0 {
            break;
        }
        d += 1;
        if (deg as u32) < 2 * d {
            // Remainder is irreducible.
            result.push((v.monic(), deg));
            break;
        }
        h = h.pow_mod(p, &v);
        let g = v.gcd(&h.sub(&FpPoly::x(p)));
        if g.degree() != Some(0) {
            result.push((g.clone(), d as usize));
            v = v.divrem(&g).0;
            h = h.rem(&v);
        }
    }
    // Equal-degree splitting.
    let mut out = Vec::new();
    for (prod, d) in result {
        let deg = prod.degree().unwrap();
        if deg == d {
            out.push((prod, 1usize));
            continue;
        }
        let mut parts = vec![prod];
        while let Some(g) = parts.pop() {
            let gd = g.degree().unwrap();
            if gd == d {
                out.push((g, 1));
                continue;
            }
            let split = equal_degree_split(&g, d, rng);
            parts.push(split.clone());
            parts.push(g.divrem(&split).0);
        }
    }
    out.sort_by(|a, b| a.0.degree().cmp(&b.0.degree()).then(a.0.coeffs.cmp(&b.0.coeffs)));
    out
}

fn equal_degree_split(f: &FpPoly, d: usize, rng: &mut ChaCha8Rng) -> FpPoly {
    let p = f.p;
    let deg = f.degree().unwrap();
    loop {
        let coeffs: Vec<u64> = (0..deg).map(|_| rng.gen_range(0..p)).collect();
        let a = FpPoly::new(p, coeffs);
        if a.degree().is_none() {
            continue;
        }
        let g = f.gcd(&a);
        if g.degree().map_or(false, |dg| dg > 0 && dg < deg) {
            return g;
        }
        let h = if p == 2 {
            // Trace map over F_2: a + a² + ⋯ + a^(2^(d−1)) mod f.
            let mut t = a.clone();
            let mut acc = a.clone();
            for _ in 1..d {
                t = t.mul(&t).rem(f);
                acc = acc.add(&t);
            }
            acc
        } else {
            // a^((q−1)/2) − 1 with q = p^d.
            let mut e = num_bigint::BigUint::from(p);
            e = num_traits::Pow::pow(e, d as u32);
            e -= 1u32;
            e /= 2u32;
            pow_mod_biguint(&a, &e, f).sub(&FpPoly::one(p))
        };
        let g = f.gcd(&h);
        if g.degree().map_or(false, |dg| dg > 0 && dg < deg) {
            return g;
        }
    }
}

fn pow_mod_biguint(a: &FpPoly, e: &num_bigint::BigUint, modulus: &FpPoly) -> FpPoly {
    let base = a.rem(modulus);
    let mut acc = FpPoly::one(a.p);
    for i in (0..e.bits()).rev() {
        acc = acc.mul(&acc).rem(modulus);
        if e.bit(i) {
            acc = acc.mul(&base).rem(modulus);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_small() {
        let f = FpPoly::new(5, vec![4, 0, 1]); // x²+4 = (x+2)(x+3) mod 5
        let (u, fac) = f.factor();
        assert_eq!(u, 1);
        assert_eq!(fac.len(), 2);
        for (g, m) in &fac {
            assert_eq!(*m, 1);
            assert_eq!(g.degree(), Some(1));
        }
    }

    #[test]
    fn factor_with_multiplicity() {
        // (x+1)²(x²+x+1) mod 2 = x⁴+x³+x+1
        let a = FpPoly::new(2, vec![1, 1]);
        let b = FpPoly::new(2, vec![1, 1, 1]);
        let f = a.mul(&a).mul(&b);
        let (_, fac) = f.factor();
        assert_eq!(fac.len(), 2);
        let mut seen_sq = false;
        for (g, m) in fac {
            if g == a {
                assert_eq!(m, 2);
                seen_sq = true;
            } else {
                assert_eq!(g, b);
                assert_eq!(m, 1);
            }
        }
        assert!(seen_sq);
    }

    #[test]
    fn factor_product_roundtrip_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for &p in &[2u64, 3, 5, 13, 101] {
            for _ in 0..30 {
                let deg = rng.gen_range(1..9);
                let mut coeffs: Vec<u64> = (0..=deg).map(|_| rng.gen_range(0..p)).collect();
                if coeffs[deg] == 0 {
                    coeffs[deg] = 1;
                }
                let f = FpPoly::new(p, coeffs);
                let (u, fac) = f.factor();
                let mut prod = FpPoly::one(p).scale(u);
                for (g, m) in &fac {
                    assert!(g.lc() == 1);
                    for _ in 0..*m {
                        prod = prod.mul(g);
                    }
                }
                assert_eq!(prod, f);
            }
        }
    }

    #[test]
    fn roots_mod_p() {
        let f = FpPoly::new(7, vec![6, 0, 1]); // x²−1 mod 7
        assert_eq!(f.roots(), vec![1, 6]);
    }
}
