//! Dense univariate polynomials over Q (and an integral variant), ascending
//! coefficient order. The representation is canonical: an empty coefficient
//! vector is the zero polynomial, otherwise the last coefficient is nonzero.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Polynomial with rational coefficients, `coeffs[i]` the coefficient of xⁱ.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QPoly {
    coeffs: Vec<BigRational>,
}

/// Polynomial with integer coefficients, same conventions as [`QPoly`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ZPoly {
    coeffs: Vec<BigInt>,
}

impl fmt::Debug for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QPoly[{}]", self.display())
    }
}

impl fmt::Debug for ZPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ZPoly[{}]", self.to_qpoly().display())
    }
}

impl QPoly {
    pub fn zero() -> Self {
        QPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        QPoly::constant(BigRational::one())
    }

    pub fn x() -> Self {
        QPoly { coeffs: vec![BigRational::zero(), BigRational::one()] }
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = QPoly { coeffs: vec![c] };
        p.normalize();
        p
    }

    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        let mut p = QPoly { coeffs };
        p.normalize();
        p
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        QPoly::from_coeffs(coeffs.iter().map(|&c| BigRational::from_integer(BigInt::from(c))).collect())
    }

    /// Monomial c·xᵏ.
    pub fn monomial(c: BigRational, k: usize) -> Self {
        if c.is_zero() {
            return QPoly::zero();
        }
        let mut coeffs = vec![BigRational::zero(); k + 1];
        coeffs[k] = c;
        QPoly { coeffs }
    }

    fn normalize(&mut self) {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
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

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Coefficient of xᵏ (zero when k exceeds the degree).
    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn lc(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn neg(&self) -> Self {
        QPoly { coeffs: self.coeffs.iter().map(|c| -c.clone()).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            coeffs.push(self.coeff(i) + other.coeff(i));
        }
        QPoly::from_coeffs(coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return QPoly::zero();
        }
        let mut coeffs = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    coeffs[i + j] += a * b;
                }
            }
        }
        QPoly::from_coeffs(coeffs)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return QPoly::zero();
        }
        QPoly { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn pow(&self, mut e: usize) -> Self {
        let mut base = self.clone();
        let mut acc = QPoly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Euclidean division: self = q·div + r with deg r < deg div.
    pub fn divrem(&self, div: &Self) -> (Self, Self) {
        assert!(!div.is_zero(), "division by zero polynomial");
        let dd = div.degree().unwrap();
        let lc = div.lc().unwrap().clone();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigRational::zero(); self.coeffs.len().saturating_sub(dd)];
        while rem.len() > dd {
            let k = rem.len() - 1 - dd;
            let c = rem.last().unwrap() / &lc;
            if !c.is_zero() {
                for i in 0..dd {
                    let t = &div.coeffs[i] * &c;
                    rem[k + i] -= t;
                }
                quot[k] = c;
            }
            rem.pop();
        }
        (QPoly::from_coeffs(quot), QPoly::from_coeffs(rem))
    }

    pub fn rem(&self, div: &Self) -> Self {
        self.divrem(div).1
    }

    /// Exact division, panics if the division leaves a remainder.
    pub fn exact_div(&self, div: &Self) -> Self {
        let (q, r) = self.divrem(div);
        assert!(r.is_zero(), "exact_div with nonzero remainder");
        q
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return QPoly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
            .collect();
        QPoly::from_coeffs(coeffs)
    }

    /// Monic gcd.
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
            let lc = a.lc().unwrap().clone();
            a.scale(&lc.recip())
        }
    }

    /// Extended gcd: returns (g, u, v) monic with u·self + v·other = g.
    pub fn xgcd(&self, other: &Self) -> (Self, Self, Self) {
        let (mut r0, mut r1) = (self.clone(), other.clone());
        let (mut s0, mut s1) = (QPoly::one(), QPoly::zero());
        let (mut t0, mut t1) = (QPoly::zero(), QPoly::one());
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1);
            let s = s0.sub(&q.mul(&s1));
            let t = t0.sub(&q.mul(&t1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
            t0 = t1;
            t1 = t;
        }
        if r0.is_zero() {
            (r0, s0, t0)
        } else {
            let c = r0.lc().unwrap().recip();
            (r0.scale(&c), s0.scale(&c), t0.scale(&c))
        }
    }

    /// Resultant of self and other.
    pub fn resultant(&self, other: &Self) -> BigRational {
        if self.is_zero() || other.is_zero() {
            return BigRational::zero();
        }
        let mut a = self.clone();
        let mut b = other.clone();
        let mut acc = BigRational::one();
        let mut sign_pos = true;
        loop {
            let da = a.degree().unwrap();
            let db = b.degree().unwrap();
            if db == 0 {
                // res(a, c) = c^deg(a)
                acc *= b.lc().unwrap().clone().pow(da as i32);
                break;
            }
            let r = a.rem(&b);
            if r.is_zero() {
                return BigRational::zero();
            }
            let dr = r.degree().unwrap();
            // res(a,b) = (−1)^{da·db} lc(b)^{da−dr} res(b,r)
            acc *= b.lc().unwrap().clone().pow((da - dr) as i32);
            if (da * db) % 2 == 1 {
                sign_pos = !sign_pos;
            }
            a = b;
            b = r;
        }
        if sign_pos {
            acc
        } else {
            -acc
        }
    }

    /// Discriminant: (−1)^{n(n−1)/2} res(f, f') / lc(f).
    pub fn discriminant(&self) -> BigRational {
        let n = match self.degree() {
            None | Some(0) => return BigRational::zero(),
            Some(n) => n,
        };
        let res = self.resultant(&self.derivative());
        let mut d = res / self.lc().unwrap();
        if (n * (n - 1) / 2) % 2 == 1 {
            d = -d;
        }
        d
    }

    /// f / gcd(f, f'): same roots, each simple.
    pub fn squarefree_part(&self) -> Self {
        if self.is_zero() {
            return QPoly::zero();
        }
        let g = self.gcd(&self.derivative());
        if g.degree() == Some(0) {
            self.clone()
        } else {
            self.exact_div(&g)
        }
    }

    /// Taylor shift: returns f(x + a).
    pub fn shift(&self, a: &BigRational) -> Self {
        // Synthetic division by (x − a) repeatedly; remainders are the Taylor
        // coefficients at a.
        let mut work = self.coeffs.clone();
        let n = work.len();
        let mut out = vec![BigRational::zero(); n];
        for t in out.iter_mut().take(n) {
            let mut carry = BigRational::zero();
            for c in work.iter_mut().rev() {
                carry = carry * a + c.clone();
                *c = carry.clone();
            }
            *t = work.remove(0);
        }
        QPoly::from_coeffs(out)
    }

    /// Substitute x ↦ c·x.
    pub fn scale_var(&self, c: &BigRational) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        let mut pw = BigRational::one();
        for a in &self.coeffs {
            coeffs.push(a * &pw);
            pw *= c;
        }
        QPoly::from_coeffs(coeffs)
    }

    /// Reversal x^n·f(1/x) for n = deg f (or a specified length).
    pub fn reverse(&self, len: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); len + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            assert!(i <= len);
            coeffs[len - i] = c.clone();
        }
        QPoly::from_coeffs(coeffs)
    }

    /// Content (positive rational) and primitive integral part, with
    /// `self = content · primitive` and the primitive part having positive
    /// leading coefficient... the sign is carried by the content.
    pub fn content_primitive(&self) -> (BigRational, ZPoly) {
        assert!(!self.is_zero());
        let mut den = BigInt::one();
        for c in &self.coeffs {
            den = den.lcm(c.denom());
        }
        let ints: Vec<BigInt> = self.coeffs.iter().map(|c| (c * BigRational::from_integer(den.clone())).to_integer()).collect();
        let mut g = BigInt::zero();
        for c in &ints {
            g = g.gcd(c);
        }
        let mut content = BigRational::new(g.clone(), den);
        let mut prim: Vec<BigInt> = ints.iter().map(|c| c / &g).collect();
        if prim.last().unwrap().is_negative() {
            content = -content;
            for c in &mut prim {
                *c = -c.clone();
            }
        }
        (content, ZPoly { coeffs: prim })
    }

    /// Canonical ordering key: by degree, then lexicographic on coefficients
    /// from the constant term up.
    pub fn order_key(&self) -> (usize, Vec<BigRational>) {
        (self.coeffs.len(), self.coeffs.clone())
    }

    pub fn display(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let cs = c.to_string();
            let term = match i {
                0 => cs,
                1 if c.is_one() => "x".to_string(),
                1 => format!("{cs}·x"),
                _ if c.is_one() => format!("x^{i}"),
                _ => format!("{cs}·x^{i}"),
            };
            parts.push(term);
        }
        parts.join(" + ")
    }
}

impl ZPoly {
    pub fn zero() -> Self {
        ZPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        ZPoly { coeffs: vec![BigInt::one()] }
    }

    pub fn x() -> Self {
        ZPoly { coeffs: vec![BigInt::zero(), BigInt::one()] }
    }

    pub fn from_coeffs(coeffs: Vec<BigInt>) -> Self {
        let mut p = ZPoly { coeffs };
        p.normalize();
        p
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        ZPoly::from_coeffs(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    fn normalize(&mut self) {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
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

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> BigInt {
        self.coeffs.get(k).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn lc(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_rational(&self, x: &BigRational) -> BigRational {
        self.to_qpoly().eval(x)
    }

    /// bⁿ·f(a/b) for n = deg f: the homogeneous evaluation.
    pub fn eval_homogeneous(&self, a: &BigInt, b: &BigInt) -> BigInt {
        let n = match self.degree() {
            None => return BigInt::zero(),
            Some(n) => n,
        };
        let mut acc = BigInt::zero();
        let mut bpow = BigInt::one();
        // acc = Σ f_{n−j} a^{n−j} b^j  computed by Horner in a.
        for c in self.coeffs.iter().rev() {
            acc = acc * a + c * &bpow;
            bpow *= b;
        }
        let _ = n;
        acc
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return ZPoly::zero();
        }
        let coeffs = self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c * BigInt::from(i)).collect();
        ZPoly::from_coeffs(coeffs)
    }

    pub fn neg(&self) -> Self {
        ZPoly { coeffs: self.coeffs.iter().map(|c| -c.clone()).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return ZPoly::zero();
        }
        let mut coeffs = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    coeffs[i + j] += a * b;
                }
            }
        }
        ZPoly::from_coeffs(coeffs)
    }

    pub fn to_qpoly(&self) -> QPoly {
        QPoly::from_coeffs(self.coeffs.iter().map(|c| BigRational::from_integer(c.clone())).collect())
    }

    pub fn from_qpoly(p: &QPoly) -> Option<Self> {
        if !p.is_integral() {
            return None;
        }
        Some(ZPoly { coeffs: p.coeffs().iter().map(|c| c.to_integer()).collect() })
    }

    /// Reversal with explicit length: coefficients of x^len·f(1/x).
    pub fn reverse(&self, len: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); len + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            assert!(i <= len);
            coeffs[len - i] = c.clone();
        }
        ZPoly::from_coeffs(coeffs)
    }

    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.coeffs {
            g = g.gcd(c);
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_poly(rng: &mut ChaCha8Rng, deg: usize, bound: i64) -> QPoly {
        loop {
            let coeffs: Vec<i64> = (0..=deg).map(|_| rng.gen_range(-bound..=bound)).collect();
            let p = QPoly::from_i64(&coeffs);
            if p.degree() == Some(deg) {
                return p;
            }
        }
    }

    #[test]
    fn divrem_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let da = rng.gen_range(1..8);
            let db = rng.gen_range(1..5);
            let a = rand_poly(&mut rng, da, 9);
            let b = rand_poly(&mut rng, db, 9);
            let (q, r) = a.divrem(&b);
            assert_eq!(q.mul(&b).add(&r), a);
            assert!(r.degree().map_or(true, |d| d < b.degree().unwrap()));
        }
    }

    #[test]
    fn resultant_multiplicative_in_discriminant_relation() {
        // disc(f·g) = disc(f)·disc(g)·res(f,g)² for coprime f, g.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 25 {
            let df = rng.gen_range(1..5);
            let dg = rng.gen_range(1..5);
            let f = rand_poly(&mut rng, df, 6);
            let g = rand_poly(&mut rng, dg, 6);
            if f.gcd(&g).degree() != Some(0) {
                continue;
            }
            let lhs = f.mul(&g).discriminant();
            let r = f.resultant(&g);
            let rhs = f.discriminant() * g.discriminant() * (&r * &r);
            assert_eq!(lhs, rhs);
            checked += 1;
        }
    }

    #[test]
    fn shift_and_scale() {
        let f = QPoly::from_i64(&[1, 2, 3]); // 3x²+2x+1
        let a = BigRational::from_integer(BigInt::from(5));
        let g = f.shift(&a);
        // g(x) = f(x+5)
        for t in -3i64..3 {
            let t = BigRational::from_integer(BigInt::from(t));
            assert_eq!(g.eval(&t), f.eval(&(&t + &a)));
        }
        let s = f.scale_var(&BigRational::from_integer(BigInt::from(2)));
        let two = BigRational::from_integer(BigInt::from(2));
        let x = BigRational::from_integer(BigInt::from(3));
        assert_eq!(s.eval(&x), f.eval(&(&two * &x)));
    }

    #[test]
    fn discriminant_known_values() {
        // disc(x²+bx+c) = b²−4c
        let f = QPoly::from_i64(&[3, 5, 1]);
        assert_eq!(f.discriminant(), BigRational::from_integer(BigInt::from(25 - 12)));
        // disc(x³+px+q) = −4p³−27q²
        let f = QPoly::from_i64(&[2, -1, 0, 1]);
        assert_eq!(f.discriminant(), BigRational::from_integer(BigInt::from(4 - 108)));
    }

    #[test]
    fn homogeneous_eval() {
        let f = ZPoly::from_i64(&[-2, 0, 3, 0, 1, 0, 2]);
        let a = BigInt::from(3);
        let b = BigInt::from(2);
        // b⁶ f(a/b) = 2·3⁶ + 3⁴·2² + 3·3²·2⁴ − 2·2⁶ = 2086
        let expect = BigInt::from(2086);
        assert_eq!(f.eval_homogeneous(&a, &b), expect);
        let x = BigRational::new(a.clone(), b.clone());
        let v = f.eval_rational(&x) * BigRational::from_integer(b.pow(6));
        assert_eq!(v, BigRational::from_integer(expect));
    }

    #[test]
    fn xgcd_bezout() {
        let a = QPoly::from_i64(&[1, 0, 1]); // x²+1
        let b = QPoly::from_i64(&[1, 1]); // x+1
        let (g, u, v) = a.xgcd(&b);
        assert_eq!(g.degree(), Some(0));
        assert_eq!(u.mul(&a).add(&v.mul(&b)), g);
    }
}
