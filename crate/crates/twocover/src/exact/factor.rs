//! Factorization of univariate polynomials over Q: squarefree decomposition,
//! factorization modulo a good prime, quadratic Hensel lifting and factor
//! recombination.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::modp::FpPoly;
use super::poly::{QPoly, ZPoly};

/// Factorization of a nonzero rational polynomial: content times the product
/// of irreducible primitive integer polynomials (positive leading
/// coefficients) with multiplicities. Factors are ordered by degree, then
/// lexicographically on the coefficient sequence.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub content: BigRational,
    pub factors: Vec<(ZPoly, usize)>,
}

impl Factorization {
    pub fn product(&self) -> QPoly {
        let mut acc = QPoly::constant(self.content.clone());
        for (f, m) in &self.factors {
            acc = acc.mul(&f.to_qpoly().pow(*m));
        }
        acc
    }
}

/// Factor a nonzero polynomial over Q.
pub fn factor_over_q(f: &QPoly) -> Factorization {
    assert!(!f.is_zero(), "cannot factor the zero polynomial");
    let (content, prim) = f.content_primitive();
    if prim.degree() == Some(0) {
        return Factorization { content, factors: Vec::new() };
    }

    let mut factors: Vec<(ZPoly, usize)> = Vec::new();

    // Split off powers of x.
    let mut coeffs = prim.coeffs().to_vec();
    let mut xmult = 0usize;
    while coeffs.first().map_or(false, |c| c.is_zero()) {
        coeffs.remove(0);
        xmult += 1;
    }
    if xmult > 0 {
        factors.push((ZPoly::x(), xmult));
    }
    let g = ZPoly::from_coeffs(coeffs);
    if g.degree() == Some(0) {
        let fac = Factorization { content, factors };
        debug_assert_eq!(fac.product(), *f);
        return fac;
    }

    // Squarefree decomposition (Yun).
    for (part, mult) in squarefree_decomposition(&g.to_qpoly()) {
        let (_, prim_part) = part.content_primitive();
        for irred in factor_primitive_squarefree(&prim_part) {
            factors.push((irred, mult));
        }
    }

    factors.sort_by(|a, b| {
        a.0.degree()
            .cmp(&b.0.degree())
            .then_with(|| a.0.coeffs().cmp(b.0.coeffs()))
    });
    let fac = Factorization { content, factors };
    debug_assert_eq!(fac.product(), *f);
    fac
}

/// Yun's squarefree decomposition: returns pairs (squarefree part, multiplicity).
fn squarefree_decomposition(f: &QPoly) -> Vec<(QPoly, usize)> {
    let mut out = Vec::new();
    let d = f.gcd(&f.derivative());
    if d.degree() == Some(0) {
        out.push((f.clone(), 1));
        return out;
    }
    let mut w = f.exact_div(&d);
    let mut y = f.derivative().exact_div(&d);
    let mut i = 1usize;
    loop {
        let z = y.sub(&w.derivative());
        if z.is_zero() {
            if w.degree().map_or(false, |dw| dw > 0) {
                out.push((w, i));
            }
            break;
        }
        let g = w.gcd(&z);
        if g.degree().map_or(false, |dg| dg > 0) {
            out.push((g.clone(), i));
        }
        w = w.exact_div(&g);
        y = z.exact_div(&g);
        i += 1;
    }
    out
}

/// Factor a primitive squarefree integer polynomial of degree ≥ 1 into
/// irreducible primitive factors with positive leading coefficients.
fn factor_primitive_squarefree(g: &ZPoly) -> Vec<ZPoly> {
    let n = g.degree().unwrap();
    if n == 1 {
        return vec![positivize(g.clone())];
    }

    // Monicize: G(y) = lc^(n−1)·g(y/lc) is monic and integral; its factors map
    // back to factors of g via y = lc·x.
    let lc = g.lc().unwrap().clone();
    let gq = g.to_qpoly();
    let scaled = gq
        .scale_var(&BigRational::new(BigInt::one(), lc.clone()))
        .scale(&BigRational::from_integer(lc.pow((n - 1) as u32)));
    let gg = ZPoly::from_qpoly(&scaled).expect("monicized polynomial is integral");
    debug_assert_eq!(gg.lc(), Some(&BigInt::one()));

    // Choose a prime where the reduction stays squarefree.
    let mut p = 3u64;
    let modular = loop {
        p = next_prime(p);
        let fp = FpPoly::from_zpoly(&gg, p);
        if fp.degree() == Some(n) && fp.is_squarefree() {
            break fp;
        }
    };
    let (_, fac) = modular.factor();
    debug_assert!(fac.iter().all(|(_, m)| *m == 1));
    let mods: Vec<FpPoly> = fac.into_iter().map(|(h, _)| h).collect();
    if mods.len() == 1 {
        return vec![positivize(g.clone())];
    }

    // Lift to p^k beyond twice the Mignotte factor bound of gg.
    let bound = mignotte_bound(&gg);
    let mut k = 1u32;
    let mut pk = BigInt::from(p);
    let two_bound = BigInt::from(2) * &bound;
    while pk <= two_bound {
        pk = &pk * &pk;
        k *= 2;
    }
    let lifted = hensel_lift_tree(&gg, &mods, p, k);

    // Recombination on subsets of modular factors.
    let mut remaining: Vec<ZkPoly> = lifted;
    let mut current = gg.clone();
    let mut monic_factors: Vec<ZPoly> = Vec::new();
    let modulus = BigInt::from(p).pow(k);
    'outer: loop {
        let r = remaining.len();
        if r == 0 {
            break;
        }
        if r == 1 {
            monic_factors.push(current.clone());
            break;
        }
        let max_size = r / 2;
        for size in 1..=max_size {
            for subset in subsets_of_size(r, size) {
                // Skip the complement duplicate when size == r/2 and 0 ∉ subset.
                if 2 * size == r && !subset.contains(&0) {
                    continue;
                }
                let mut cand = ZkPoly::one(&modulus);
                for &i in &subset {
                    cand = cand.mul(&remaining[i], &modulus);
                }
                let cand_int = cand.centered(&modulus);
                if let Some(quot) = try_exact_divide(&current, &cand_int) {
                    monic_factors.push(cand_int);
                    current = quot;
                    let mut keep = Vec::new();
                    for (i, f) in remaining.into_iter().enumerate() {
                        if !subset.contains(&i) {
                            keep.push(f);
                        }
                    }
                    remaining = keep;
                    continue 'outer;
                }
            }
        }
        // No proper subset worked: the rest is irreducible.
        monic_factors.push(current.clone());
        break;
    }

    // Map back through the monicization.
    let inv = BigRational::from_integer(lc.clone());
    monic_factors
        .into_iter()
        .map(|h| {
            let hq = h.to_qpoly().scale_var(&inv);
            let (_, prim) = hq.content_primitive();
            positivize(prim)
        })
        .collect()
}

fn positivize(f: ZPoly) -> ZPoly {
    if f.lc().map_or(false, |c| c.is_negative()) {
        f.neg()
    } else {
        f
    }
}

fn next_prime(n: u64) -> u64 {
    let mut c = n + 1;
    loop {
        if super::intfactor::is_prime(&BigUint::from(c)) {
            return c;
        }
        c += 1;
    }
}

/// Mignotte-style bound on the coefficients of any monic factor of a monic
/// integer polynomial: 2^n · ‖f‖₂.
fn mignotte_bound(f: &ZPoly) -> BigInt {
    let n = f.degree().unwrap();
    let norm2: BigInt = f.coeffs().iter().map(|c| c * c).sum();
    let root = norm2.sqrt() + 1;
    (BigInt::one() << n) * root
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn try_exact_divide(f: &ZPoly, g: &ZPoly) -> Option<ZPoly> {
    if g.degree()? > f.degree()? {
        return None;
    }
    let (q, r) = f.to_qpoly().divrem(&g.to_qpoly());
    if r.is_zero() {
        ZPoly::from_qpoly(&q)
    } else {
        None
    }
}

/// Integer polynomial with coefficients understood modulo p^k.
#[derive(Clone, Debug)]
struct ZkPoly {
    coeffs: Vec<BigInt>,
}

impl ZkPoly {
    fn one(_m: &BigInt) -> Self {
        ZkPoly { coeffs: vec![BigInt::one()] }
    }

    fn from_zpoly(f: &ZPoly, m: &BigInt) -> Self {
        ZkPoly { coeffs: f.coeffs().iter().map(|c| c.mod_floor(m)).collect() }
    }

    fn from_fp(f: &FpPoly) -> Self {
        ZkPoly { coeffs: f.coeffs().iter().map(|&c| BigInt::from(c)).collect() }
    }

    fn trim(mut self) -> Self {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
            self.coeffs.pop();
        }
        self
    }

    fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    fn mul(&self, other: &Self, m: &BigInt) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return ZkPoly { coeffs: Vec::new() };
        }
        let mut coeffs = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = (&coeffs[i + j] + a * b).mod_floor(m);
            }
        }
        ZkPoly { coeffs }.trim()
    }

    fn add(&self, other: &Self, m: &BigInt) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).cloned().unwrap_or_else(BigInt::zero);
                let b = other.coeffs.get(i).cloned().unwrap_or_else(BigInt::zero);
                (a + b).mod_floor(m)
            })
            .collect();
        ZkPoly { coeffs }.trim()
    }

    fn sub(&self, other: &Self, m: &BigInt) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).cloned().unwrap_or_else(BigInt::zero);
                let b = other.coeffs.get(i).cloned().unwrap_or_else(BigInt::zero);
                (a - b).mod_floor(m)
            })
            .collect();
        ZkPoly { coeffs }.trim()
    }

    /// Division with remainder by a monic divisor, coefficients mod m.
    fn divrem_monic(&self, div: &Self, m: &BigInt) -> (Self, Self) {
        let dd = div.degree().expect("monic divisor");
        debug_assert!(div.coeffs[dd].is_one());
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigInt::zero(); rem.len().saturating_sub(dd)];
        while rem.len() > dd {
            let k = rem.len() - 1 - dd;
            let c = rem.last().unwrap().clone();
            if !c.is_zero() {
                for i in 0..dd {
                    rem[k + i] = (&rem[k + i] - &div.coeffs[i] * &c).mod_floor(m);
                }
                quot[k] = c;
            }
            rem.pop();
        }
        (ZkPoly { coeffs: quot }.trim(), ZkPoly { coeffs: rem }.trim())
    }

    /// Lift coefficients to the symmetric range (−m/2, m/2].
    fn centered(&self, m: &BigInt) -> ZPoly {
        let half = m / 2;
        ZPoly::from_coeffs(
            self.coeffs
                .iter()
                .map(|c| {
                    let c = c.mod_floor(m);
                    if c > half {
                        c - m
                    } else {
                        c
                    }
                })
                .collect(),
        )
    }
}

/// Hensel-lift a pairwise-coprime monic factorization of a monic integer
/// polynomial from mod p to mod p^k (k rounded up to a power of two), with
/// coefficients returned in the symmetric range.
pub fn hensel_lift_monic_coprime(f: &ZPoly, parts: &[FpPoly], p: u64, k: u32) -> Vec<ZPoly> {
    let k = k.next_power_of_two();
    let m = BigInt::from(p).pow(k);
    hensel_lift_tree(f, parts, p, k).into_iter().map(|z| z.centered(&m)).collect()
}

/// Lift the monic modular factorization of a monic integer polynomial from
/// mod p to mod p^k (k a power of two times the starting exponent) by a
/// balanced tree of quadratic two-factor lifts.
fn hensel_lift_tree(f: &ZPoly, mods: &[FpPoly], p: u64, k: u32) -> Vec<ZkPoly> {
    if mods.len() == 1 {
        let m = BigInt::from(p).pow(k);
        return vec![ZkPoly::from_zpoly(f, &m)];
    }
    let mid = mods.len() / 2;
    let (left, right) = mods.split_at(mid);
    let mut a = FpPoly::one(p);
    for h in left {
        a = a.mul(h);
    }
    let mut b = FpPoly::one(p);
    for h in right {
        b = b.mul(h);
    }
    let (fa, fb) = hensel_lift_pair(f, &a, &b, p, k);
    let m = BigInt::from(p).pow(k);
    let fa_z = fa.centered(&m);
    let fb_z = fb.centered(&m);
    let mut out = hensel_lift_tree(&fa_z, left, p, k);
    out.extend(hensel_lift_tree(&fb_z, right, p, k));
    out
}

/// Quadratic Hensel lifting of a coprime monic pair: f ≡ a·b mod p with
/// gcd(a,b) = 1 mod p lifts to f ≡ A·B mod p^k (k a power of two).
///
/// Maintains Bezout cofactors s·a + t·b ≡ 1 along the lift.
fn hensel_lift_pair(f: &ZPoly, a0: &FpPoly, b0: &FpPoly, p: u64, k: u32) -> (ZkPoly, ZkPoly) {
    let (g, s0, t0) = fp_xgcd(a0, b0);
    assert_eq!(g.degree(), Some(0), "modular factors are not coprime");
    let ginv = fp_inv_constant(&g);
    let s0 = s0.scale(ginv);
    let t0 = t0.scale(ginv);

    let mut prec = 1u32;
    let mut m = BigInt::from(p);
    let mut a = ZkPoly::from_fp(a0);
    let mut b = ZkPoly::from_fp(b0);
    let mut s = ZkPoly::from_fp(&s0);
    let mut t = ZkPoly::from_fp(&t0);

    while prec < k {
        let m2 = &m * &m;
        let fz = ZkPoly::from_zpoly(f, &m2);
        // e ≡ 0 mod m by the invariant f ≡ a·b.
        let e = fz.sub(&a.mul(&b, &m2), &m2);
        // a ← a + t·e + q·a, b ← b + r where s·e = q·b + r.
        let (q, r) = s.mul(&e, &m2).divrem_monic(&b, &m2);
        let a_new = a.add(&t.mul(&e, &m2), &m2).add(&q.mul(&a, &m2), &m2);
        let b_new = b.add(&r, &m2);
        // Bezout defect and correction: s ← s − d, t ← t − t·u − c·a
        // where u = s·a + t·b − 1 and s·u = c·b + d.
        let u = s.mul(&a_new, &m2).add(&t.mul(&b_new, &m2), &m2).sub(&ZkPoly::one(&m2), &m2);
        let (c, d) = s.mul(&u, &m2).divrem_monic(&b_new, &m2);
        let s_new = s.sub(&d, &m2);
        let t_new = t.sub(&t.mul(&u, &m2), &m2).sub(&c.mul(&a_new, &m2), &m2);

        a = a_new;
        b = b_new;
        s = s_new;
        t = t_new;
        m = m2;
        prec *= 2;
    }
    debug_assert_eq!(prec, k);
    (a, b)
}

fn fp_xgcd(a: &FpPoly, b: &FpPoly) -> (FpPoly, FpPoly, FpPoly) {
    let p = a.p;
    let (mut r0, mut r1) = (a.clone(), b.clone());
    let (mut s0, mut s1) = (FpPoly::one(p), FpPoly::zero(p));
    let (mut t0, mut t1) = (FpPoly::zero(p), FpPoly::one(p));
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
    (r0, s0, t0)
}

fn fp_inv_constant(g: &FpPoly) -> u64 {
    assert_eq!(g.degree(), Some(0));
    let p = g.p;
    let c = g.coeff(0);
    // Fermat inverse.
    let mut acc = 1u64;
    let mut base = c % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = ((acc as u128 * base as u128) % p as u128) as u64;
        }
        base = ((base as u128 * base as u128) % p as u128) as u64;
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zp(coeffs: &[i64]) -> ZPoly {
        ZPoly::from_i64(coeffs)
    }

    #[test]
    fn irreducible_sextic() {
        let f = zp(&[2, 1, 0, 0, 0, 0, 2]).to_qpoly();
        let fac = factor_over_q(&f);
        assert_eq!(fac.factors.len(), 1);
        assert_eq!(fac.factors[0].0, zp(&[2, 1, 0, 0, 0, 0, 2]));
        assert_eq!(fac.factors[0].1, 1);
    }

    #[test]
    fn difference_of_squares() {
        let f = zp(&[-1, 0, 1]).to_qpoly();
        let fac = factor_over_q(&f);
        assert_eq!(fac.factors.len(), 2);
        assert_eq!(fac.factors[0].0, zp(&[-1, 1]));
        assert_eq!(fac.factors[1].0, zp(&[1, 1]));
    }

    #[test]
    fn split_sextic_from_conjugate_quadratics() {
        // 2x⁶+x⁴+3x²−2 = (2x²−1)(x⁴+x²+2); verified by expansion.
        let a = zp(&[-1, 0, 2]);
        let b = zp(&[2, 0, 1, 0, 1]);
        let f = a.mul(&b);
        assert_eq!(f, zp(&[-2, 0, 3, 0, 1, 0, 2]));
        let fac = factor_over_q(&f.to_qpoly());
        assert_eq!(fac.factors.len(), 2);
        assert_eq!(fac.factors[0].0, a);
        assert_eq!(fac.factors[1].0, b);
    }

    #[test]
    fn multiplicities_and_content() {
        // 12·x²·(x−1)³·(x²+1)
        let f = QPoly::from_i64(&[0, 0, 12])
            .mul(&QPoly::from_i64(&[-1, 1]).pow(3))
            .mul(&QPoly::from_i64(&[1, 0, 1]));
        let fac = factor_over_q(&f);
        assert_eq!(fac.product(), f);
        let mut found = 0;
        for (g, m) in &fac.factors {
            if *g == ZPoly::x() {
                assert_eq!(*m, 2);
                found += 1;
            }
            if *g == zp(&[-1, 1]) {
                assert_eq!(*m, 3);
                found += 1;
            }
            if *g == zp(&[1, 0, 1]) {
                assert_eq!(*m, 1);
                found += 1;
            }
        }
        assert_eq!(found, 3);
    }

    #[test]
    fn random_products_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let deg = rng.gen_range(1..=8);
            let coeffs: Vec<i64> = (0..=deg).map(|_| rng.gen_range(-20..=20)).collect();
            let f = QPoly::from_i64(&coeffs);
            if f.is_zero() {
                continue;
            }
            let fac = factor_over_q(&f);
            assert_eq!(fac.product(), f, "roundtrip failed for {coeffs:?}");
            for (g, _) in &fac.factors {
                assert!(g.lc().unwrap().is_positive());
                assert_eq!(g.content(), BigInt::one());
            }
        }
    }

    #[test]
    fn deterministic_ordering() {
        let f = zp(&[0, -1, 0, 1]).to_qpoly(); // x³−x = x(x−1)(x+1)
        let fac = factor_over_q(&f);
        let names: Vec<ZPoly> = fac.factors.iter().map(|(g, _)| g.clone()).collect();
        assert_eq!(names, vec![zp(&[-1, 1]), zp(&[0, 1]), zp(&[1, 1])]);
    }
}
