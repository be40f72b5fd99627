//! p-adic arithmetic to bounded precision: scalar square tests in Q_p,
//! ε-valuations of polynomial increments, root finding in Z_p, factorization
//! of squarefree polynomials over Q_p, and local square-class groups of étale
//! algebras Q_p[x]/(f).

mod roots;

pub use roots::{zp_roots, ZpRoot};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::sync::Arc;
use thiserror::Error;

use crate::exact::{factor_over_q, QPoly, ZPoly};
use crate::orders::{field_at_p, FieldAtP, LocalPrimeInfo, OrderError};

#[derive(Debug, Error)]
pub enum PadicError {
    #[error("p-adic precision exhausted: {0}")]
    Precision(String),
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// ord_p of a nonzero integer.
pub fn ord_p_int(n: &BigInt, p: u64) -> u32 {
    assert!(!n.is_zero());
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut m = n.clone();
    while (&m % &pb).is_zero() {
        m /= &pb;
        v += 1;
    }
    v
}

/// ord_p of a nonzero rational.
pub fn ord_p_rat(q: &BigRational, p: u64) -> i64 {
    assert!(!q.is_zero());
    ord_p_int(q.numer(), p) as i64 - ord_p_int(q.denom(), p) as i64
}

/// Unit part u with q = p^ord·u (u a p-adic unit given exactly as a rational).
pub fn unit_part(q: &BigRational, p: u64) -> BigRational {
    let v = ord_p_rat(q, p);
    let pb = BigRational::from_integer(BigInt::from(p));
    let mut u = q.clone();
    let mut v = v;
    while v > 0 {
        u /= &pb;
        v -= 1;
    }
    while v < 0 {
        u *= &pb;
        v += 1;
    }
    u
}

/// Whether a nonzero rational is a square in Q_p*. Exact.
pub fn is_square_qp(q: &BigRational, p: u64) -> bool {
    let v = ord_p_rat(q, p);
    if v % 2 != 0 {
        return false;
    }
    let u = unit_part(q, p);
    unit_is_square_qp(&u, p)
}

/// Whether a p-adic unit (given exactly as a rational with numerator and
/// denominator prime to p) is a square in Z_p*.
pub fn unit_is_square_qp(u: &BigRational, p: u64) -> bool {
    if p == 2 {
        // u ≡ 1 mod 8.
        residue_mod(u, &BigInt::from(8)) == BigInt::one()
    } else {
        let pb = BigInt::from(p);
        let r = residue_mod(u, &pb);
        legendre_u64(r.to_u64().expect("residue fits"), p) == 1
    }
}

/// Residue of a p-integral rational modulo m (m a power of p).
pub fn residue_mod(q: &BigRational, m: &BigInt) -> BigInt {
    let num = q.numer().mod_floor(m);
    let den = q.denom().mod_floor(m);
    let dinv = crate::orders::mod_inverse(&den, m).expect("denominator invertible");
    (num * dinv).mod_floor(m)
}

/// Legendre symbol (a/p) for odd p: returns 1, −1, or 0.
pub fn legendre_u64(a: u64, p: u64) -> i32 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    // Euler criterion.
    let mut acc = 1u64;
    let mut base = a;
    let mut e = (p - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = ((acc as u128 * base as u128) % p as u128) as u64;
        }
        base = ((base as u128 * base as u128) % p as u128) as u64;
        e >>= 1;
    }
    if acc == 1 {
        1
    } else {
        -1
    }
}

/// Squareness of a unit residue u modulo p^j, for the recursion's pruning
/// tables: decides membership in ((Z/p^j)*)². Only 1 ≤ j ≤ ord_p(4)+1 carry
/// information beyond the stable answer.
pub fn unit_square_mod(u: &BigInt, p: u64, j: u32) -> bool {
    if j == 0 {
        return true;
    }
    if p == 2 {
        match j {
            1 => true,
            2 => u.mod_floor(&BigInt::from(4)) == BigInt::one(),
            _ => u.mod_floor(&BigInt::from(8)) == BigInt::one(),
        }
    } else {
        let r = u.mod_floor(&BigInt::from(p)).to_u64().unwrap();
        legendre_u64(r, p) == 1
    }
}

/// ord of f(x₀ + ε·p^e) − f(x₀) as a polynomial in the indeterminate ε:
/// the minimum over i ≥ 1 of ord_p(cᵢ(x₀)) + i·e, where cᵢ are the Taylor
/// coefficients of f at x₀. This is the largest E with
/// f(x₀ + p^e·Z_p) ⊆ f(x₀) + p^E·Z_p.
pub fn taylor_ord(f: &ZPoly, x0: &BigInt, e: u32, p: u64) -> i64 {
    let n = match f.degree() {
        None | Some(0) => return i64::MAX,
        Some(n) => n,
    };
    // Taylor coefficients at x0 by repeated synthetic division.
    let mut work: Vec<BigInt> = f.coeffs().to_vec();
    let mut taylor: Vec<BigInt> = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        let mut carry = BigInt::zero();
        for c in work.iter_mut().rev() {
            carry = &carry * x0 + &*c;
            *c = carry.clone();
        }
        taylor.push(work.remove(0));
    }
    let mut best = i64::MAX;
    for (i, c) in taylor.iter().enumerate().skip(1) {
        if !c.is_zero() {
            best = best.min(ord_p_int(c, p) as i64 + (i as i64) * e as i64);
        }
    }
    best
}

/// One irreducible factor of f over Q_p: the completion of a number-field
/// factor of f at one of its primes above p.
#[derive(Clone)]
pub struct LocalFieldFactor {
    pub p: u64,
    /// Monic integral defining polynomial over Z_p, coefficients accurate
    /// modulo p^prec. The root is ℓ·θ for ℓ the leading coefficient of the
    /// global polynomial (étale monicization).
    pub poly: ZPoly,
    pub e: usize,
    pub d: usize,
    pub prec: u32,
    /// Global (rational) data backing this factor.
    field: Arc<FieldAtP>,
    prime_index: usize,
    scale: BigInt,
}

impl LocalFieldFactor {
    /// Extended valuation of z (a polynomial in the étale algebra generator θ
    /// with rational coefficients), in units of ord(p) = 1: values in (1/e)Z
    /// are returned as (numerator, e).
    pub fn ord(&self, z: &QPoly) -> Result<(i64, usize), PadicError> {
        let w = self.field.ord_at(self.prime_index, &self.embed(z))?;
        Ok((w, self.e))
    }

    /// Whether z is a square in this local field.
    pub fn is_square(&self, z: &QPoly) -> Result<bool, PadicError> {
        Ok(self.field.is_square_at(self.prime_index, &self.embed(z))?)
    }

    /// Whether L(√z)/L is unramified.
    pub fn is_unramified_class(&self, z: &QPoly) -> Result<bool, PadicError> {
        Ok(self.field.is_unramified_at(self.prime_index, &self.embed(z))?)
    }

    /// F₂ coordinates of the square class of z.
    pub fn class_coords(&self, z: &QPoly) -> Result<Vec<bool>, PadicError> {
        Ok(self.field.class_coords(self.prime_index, &self.embed(z))?)
    }

    pub fn info(&self) -> LocalPrimeInfo {
        self.field.info(self.prime_index)
    }

    /// Substitute θ = y/ℓ into z and reduce into the monic model.
    fn embed(&self, z: &QPoly) -> QPoly {
        if self.scale.is_one() {
            return z.clone();
        }
        let inv = BigRational::new(BigInt::one(), self.scale.clone());
        z.scale_var(&inv)
    }
}

/// Factor a squarefree integral polynomial over Q_p. Factors are certified by
/// the global factorization over Q plus prime splitting of the p-maximal
/// orders; raising `prec` refines coefficients without changing the shape.
pub fn factor_over_qp(f: &ZPoly, p: u64, prec: u32) -> Result<Vec<LocalFieldFactor>, PadicError> {
    let n = f.degree().ok_or_else(|| PadicError::Invalid("zero polynomial".into()))?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let fac = factor_over_q(&f.to_qpoly());
    if fac.factors.iter().any(|(_, m)| *m > 1) {
        return Err(PadicError::Invalid("polynomial is not squarefree".into()));
    }
    let lc = f.lc().unwrap().clone();
    let mut out = Vec::new();
    for (g, _) in &fac.factors {
        // Monicize with the global leading coefficient so that all factors
        // live in one model y = ℓ·x.
        let monic = monicize_with(g, &lc);
        let field = field_at_p(&monic, p, prec)?;
        for i in 0..field.prime_count() {
            let info = field.info(i);
            let comp = field.completion_poly(i);
            out.push(LocalFieldFactor {
                p,
                poly: comp,
                e: info.e,
                d: info.d,
                prec: field.level(),
                field: field.clone(),
                prime_index: i,
                scale: lc.clone(),
            });
        }
    }
    // Σ e·d = deg f.
    let total: usize = out.iter().map(|l| l.e * l.d).sum();
    debug_assert_eq!(total, n);
    Ok(out)
}

/// Monic integral model of g under y = ℓ·x: G(y) = g(y/ℓ)·ℓ^deg(g)/lc(g).
pub fn monicize_with(g: &ZPoly, ell: &BigInt) -> ZPoly {
    let d = g.degree().unwrap();
    if d == 0 {
        return ZPoly::one();
    }
    let lcg = g.lc().unwrap().clone();
    let gq = g.to_qpoly();
    let scaled = gq
        .scale_var(&BigRational::new(BigInt::one(), ell.clone()))
        .scale(&BigRational::new(ell.pow(d as u32), lcg));
    ZPoly::from_qpoly(&scaled).expect("monicization is integral when lc(g) divides ℓ^k")
}

/// The local square-class group of the étale algebra A_p = Q_p[x]/(f),
/// presenting classes by concatenated F₂ coordinates across all primes of
/// all factors.
pub struct LocalSquareClassGroup {
    pub p: u64,
    pub factors: Vec<LocalFieldFactor>,
    f: ZPoly,
    bits: usize,
}

impl LocalSquareClassGroup {
    pub fn new(f: &ZPoly, p: u64, prec: u32) -> Result<Self, PadicError> {
        let factors = factor_over_qp(f, p, prec)?;
        let bits = factors.iter().map(|l| 1 + l.info().unit_bits).sum();
        Ok(LocalSquareClassGroup { p, factors, f: f.clone(), bits })
    }

    pub fn total_bits(&self) -> usize {
        self.bits
    }

    /// Coordinates of the class of z ∈ A* (a polynomial in θ over Q).
    pub fn coords(&self, z: &QPoly) -> Result<Vec<bool>, PadicError> {
        let zr = z.rem(&self.f.to_qpoly());
        let mut out = Vec::with_capacity(self.bits);
        for l in &self.factors {
            out.extend(l.class_coords(&zr)?);
        }
        Ok(out)
    }

    /// Coordinates of a nonzero rational scalar embedded diagonally.
    pub fn scalar_coords(&self, c: &BigRational) -> Result<Vec<bool>, PadicError> {
        let z = QPoly::constant(c.clone());
        let mut out = Vec::with_capacity(self.bits);
        for l in &self.factors {
            out.extend(l.class_coords(&z)?);
        }
        Ok(out)
    }

    /// Generators of the image of Q_p* (mod squares) under the diagonal
    /// embedding: coordinates of −1 (p = 2 only), a non-square unit, and p.
    pub fn scalar_subspace(&self) -> Result<Vec<Vec<bool>>, PadicError> {
        let mut gens: Vec<BigRational> = Vec::new();
        if self.p == 2 {
            gens.push(BigRational::from_integer(BigInt::from(-1)));
            gens.push(BigRational::from_integer(BigInt::from(5)));
            gens.push(BigRational::from_integer(BigInt::from(2)));
        } else {
            let nr = (2..self.p).find(|&a| legendre_u64(a, self.p) == -1).unwrap();
            gens.push(BigRational::from_integer(BigInt::from(nr)));
            gens.push(BigRational::from_integer(BigInt::from(self.p)));
        }
        gens.iter().map(|c| self.scalar_coords(c)).collect()
    }

    /// Exact square test in the algebra (square in every factor).
    pub fn is_square(&self, z: &QPoly) -> Result<bool, PadicError> {
        Ok(self.coords(z)?.iter().all(|&b| !b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zp(c: &[i64]) -> ZPoly {
        ZPoly::from_i64(c)
    }

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn scalar_squares_in_q2() {
        assert!(is_square_qp(&q(17), 2));
        assert!(!is_square_qp(&q(2), 2));
        assert!(is_square_qp(&q(1), 2));
        assert!(is_square_qp(&q(4), 2));
        assert!(!is_square_qp(&q(8), 2));
        assert!(!is_square_qp(&q(-4), 2));
        assert!(is_square_qp(&BigRational::new(BigInt::from(1), BigInt::from(4)), 2));
    }

    #[test]
    fn taylor_ord_examples() {
        // f = x², x₀ = 0, e = 1, p = 3 → 2.
        assert_eq!(taylor_ord(&zp(&[0, 0, 1]), &BigInt::zero(), 1, 3), 2);
        // f = x²+x, x₀ = 0, e = 2, p = 2 → 2 (linear term dominates).
        assert_eq!(taylor_ord(&zp(&[0, 1, 1]), &BigInt::zero(), 2, 2), 2);
        // f = 2x⁶+x+2, x₀ = 1, e = 1, p = 5 → 1.
        assert_eq!(taylor_ord(&zp(&[2, 1, 0, 0, 0, 0, 2]), &BigInt::one(), 1, 5), 1);
    }

    #[test]
    fn taylor_ord_matches_symbolic_expansion() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let deg = rng.gen_range(1..=6);
            let coeffs: Vec<i64> = (0..=deg).map(|_| rng.gen_range(-20..=20)).collect();
            let f = ZPoly::from_i64(&coeffs);
            if f.degree() != Some(deg) {
                continue;
            }
            let p = *[2u64, 3, 5].get(rng.gen_range(0..3)).unwrap();
            let x0 = BigInt::from(rng.gen_range(-9i64..=9));
            let e = rng.gen_range(0..4u32);
            // Oracle: expand f(x0 + p^e·t) − f(x0) symbolically in t and take
            // the min valuation over nonconstant coefficients.
            let pe = BigRational::from_integer(BigInt::from(p).pow(e));
            let shifted = f
                .to_qpoly()
                .shift(&BigRational::from_integer(x0.clone()))
                .scale_var(&pe);
            let mut expect = i64::MAX;
            for (i, c) in shifted.coeffs().iter().enumerate() {
                if i >= 1 && !c.is_zero() {
                    expect = expect.min(ord_p_rat(c, p));
                }
            }
            assert_eq!(taylor_ord(&f, &x0, e, p), expect, "f={coeffs:?} p={p} x0={x0} e={e}");
        }
    }

    #[test]
    fn factor_shapes() {
        // x² − 1 at 3: two linear factors.
        let fs = factor_over_qp(&zp(&[-1, 0, 1]), 3, 8).unwrap();
        assert_eq!(fs.len(), 2);
        assert!(fs.iter().all(|l| l.e == 1 && l.d == 1));

        // x² + 1 at 5: two linear factors (roots ±2 mod 5).
        let fs = factor_over_qp(&zp(&[1, 0, 1]), 5, 8).unwrap();
        assert_eq!(fs.len(), 2);
        assert!(fs.iter().all(|l| l.e == 1 && l.d == 1));
        // The completions are x − r with r² ≡ −1: check r mod 5 ∈ {2, 3}.
        for l in &fs {
            let r = (-l.poly.coeff(0)).mod_floor(&BigInt::from(5u32)).to_u64().unwrap();
            assert!(r == 2 || r == 3);
            // And r² ≡ −1 mod 5^prec-ish: verify mod 5⁴ via exhaustive lift.
            let m = BigInt::from(5u32).pow(4);
            let rr = (-l.poly.coeff(0)).mod_floor(&m);
            assert_eq!((&rr * &rr).mod_floor(&m), (BigInt::from(-1)).mod_floor(&m));
        }

        // 2x⁶+x+2 at 2: shapes (e·d = 1) and (e = 5, d = 1).
        let fs = factor_over_qp(&zp(&[2, 1, 0, 0, 0, 0, 2]), 2, 8).unwrap();
        let mut shapes: Vec<(usize, usize)> = fs.iter().map(|l| (l.e, l.d)).collect();
        shapes.sort();
        assert_eq!(shapes, vec![(1, 1), (5, 1)]);
    }

    #[test]
    fn newton_polygon_oracle_for_paper_sextic() {
        // Newton polygon of the monicized y⁶+16y+64 at 2: vertices (0,6),
        // (1,4), (6,0) → slopes −2 (length 1) and −4/5 (length 5): one
        // unramified degree-1 piece and one totally ramified degree-5 piece.
        let f = zp(&[64, 16, 0, 0, 0, 0, 1]);
        let pts: Vec<(usize, u32)> = f
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i, ord_p_int(c, 2)))
            .collect();
        assert_eq!(pts, vec![(0, 6), (1, 4), (6, 0)]);
        // Lower hull slopes: (6−4)/(0−1) = −2 and (4−0)/(1−6) = −4/5.
    }

    #[test]
    fn local_factor_square_classes() {
        // Factors of x²−2 at 2: single ramified quadratic; θ·θ = 2 scaled...
        let f = zp(&[-2, 0, 1]);
        let fs = factor_over_qp(&f, 2, 10).unwrap();
        assert_eq!(fs.len(), 1);
        let l = &fs[0];
        assert_eq!((l.e, l.d), (2, 1));
        // θ² = 2: ord(θ) = 1.
        assert_eq!(l.ord(&QPoly::from_i64(&[0, 1])).unwrap(), (1, 2));
        // 2/θ² = 1 is a square; θ itself is not.
        assert!(l.is_square(&QPoly::from_i64(&[1])).unwrap());
        assert!(!l.is_square(&QPoly::from_i64(&[0, 1])).unwrap());
        // 17 is a square in every 2-adic field (1 mod 8 ⊆ squares).
        assert!(l.is_square(&QPoly::from_i64(&[17])).unwrap());
    }

    #[test]
    fn algebra_group_dimensions() {
        // A = Q2[x]/(x²−1) ≅ Q2 × Q2: each factor contributes 2^3 classes,
        // coordinates 3 bits each.
        let g = LocalSquareClassGroup::new(&zp(&[-1, 0, 1]), 2, 8).unwrap();
        assert_eq!(g.total_bits(), 6);
        // p odd: 4 classes per factor = 2 bits.
        let g = LocalSquareClassGroup::new(&zp(&[-1, 0, 1]), 7, 8).unwrap();
        assert_eq!(g.total_bits(), 4);
        // Scalar subspace of Q7* diag: rank 2.
        let sub = g.scalar_subspace().unwrap();
        assert_eq!(sub.len(), 2);
    }
}
