//! Real root isolation by Sturm sequences, with exact rational interval
//! endpoints. Signs of arbitrary polynomials at isolated roots are decided
//! exactly; no floating point is involved anywhere.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::sync::Arc;

use super::poly::QPoly;

/// Sturm chain of a squarefree polynomial, primitive-scaled at each step
/// (positive scalings preserve the sign-variation count).
#[derive(Debug, Clone)]
pub struct SturmChain {
    chain: Vec<QPoly>,
}

impl SturmChain {
    pub fn new(f: &QPoly) -> Self {
        let mut chain = Vec::new();
        let mut p0 = primitive_pos(f);
        let mut p1 = primitive_pos(&f.derivative());
        chain.push(p0.clone());
        if p1.is_zero() {
            return SturmChain { chain };
        }
        chain.push(p1.clone());
        loop {
            let r = p0.rem(&p1);
            if r.is_zero() {
                break;
            }
            let next = primitive_pos(&r.neg());
            chain.push(next.clone());
            p0 = p1;
            p1 = next;
            if p1.degree() == Some(0) {
                break;
            }
        }
        SturmChain { chain }
    }

    fn variations_at(&self, x: &BigRational) -> usize {
        let signs: Vec<i8> = self.chain.iter().map(|p| sign_of(&p.eval(x))).collect();
        count_variations(&signs)
    }

    fn variations_at_neg_inf(&self) -> usize {
        let signs: Vec<i8> = self
            .chain
            .iter()
            .map(|p| {
                let d = p.degree().unwrap_or(0);
                let s = sign_of(p.lc().unwrap_or(&BigRational::zero()));
                if d % 2 == 1 {
                    -s
                } else {
                    s
                }
            })
            .collect();
        count_variations(&signs)
    }

    fn variations_at_pos_inf(&self) -> usize {
        let signs: Vec<i8> = self.chain.iter().map(|p| sign_of(p.lc().unwrap_or(&BigRational::zero()))).collect();
        count_variations(&signs)
    }

    /// Number of real roots in the half-open interval (lo, hi].
    pub fn count_in(&self, lo: &BigRational, hi: &BigRational) -> usize {
        self.variations_at(lo) - self.variations_at(hi)
    }

    pub fn count_all(&self) -> usize {
        self.variations_at_neg_inf() - self.variations_at_pos_inf()
    }
}

/// Scale to a primitive integer polynomial by a positive rational, keeping
/// the sign (Sturm chains tolerate positive scalings only).
fn primitive_pos(f: &QPoly) -> QPoly {
    if f.is_zero() {
        return QPoly::zero();
    }
    let (content, prim) = f.content_primitive();
    if content.is_negative() {
        prim.to_qpoly().neg()
    } else {
        prim.to_qpoly()
    }
}

fn sign_of(x: &BigRational) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

fn count_variations(signs: &[i8]) -> usize {
    let mut count = 0;
    let mut last = 0i8;
    for &s in signs {
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// One isolated real root of a squarefree polynomial: either an exact
/// rational value or an open isolating interval (lo, hi) containing exactly
/// one root, with f(lo)·f(hi) < 0.
#[derive(Debug, Clone)]
pub struct RealRoot {
    f: Arc<QPoly>,
    chain: Arc<SturmChain>,
    lo: BigRational,
    hi: BigRational,
    exact: bool,
}

impl RealRoot {
    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn poly(&self) -> &QPoly {
        &self.f
    }

    /// Midpoint approximation.
    pub fn approx(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2))
    }

    /// Shrink the isolating interval below the requested width.
    pub fn refined(&self, width: &BigRational) -> RealRoot {
        let mut r = self.clone();
        while !r.exact && (&r.hi - &r.lo) > *width {
            r = r.bisect();
        }
        r
    }

    fn bisect(&self) -> RealRoot {
        debug_assert!(!self.exact);
        let mid = self.approx();
        let fm = self.f.eval(&mid);
        if fm.is_zero() {
            return RealRoot { f: self.f.clone(), chain: self.chain.clone(), lo: mid.clone(), hi: mid, exact: true };
        }
        let flo = self.f.eval(&self.lo);
        if sign_of(&flo) != sign_of(&fm) {
            RealRoot { f: self.f.clone(), chain: self.chain.clone(), lo: self.lo.clone(), hi: mid, exact: false }
        } else {
            RealRoot { f: self.f.clone(), chain: self.chain.clone(), lo: mid, hi: self.hi.clone(), exact: false }
        }
    }

    /// Exact comparison of the root against a rational number.
    pub fn cmp_rational(&self, q: &BigRational) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        if self.exact {
            return self.lo.cmp(q);
        }
        if *q <= self.lo {
            return Ordering::Greater;
        }
        if *q >= self.hi {
            return Ordering::Less;
        }
        // q lies strictly inside the isolating interval: one sign test decides.
        let fq = self.f.eval(q);
        if fq.is_zero() {
            return Ordering::Equal;
        }
        if sign_of(&self.f.eval(&self.lo)) != sign_of(&fq) {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

/// Isolate all real roots of a squarefree polynomial, sorted in strictly
/// decreasing order (largest root first).
pub fn real_roots(f: &QPoly) -> Vec<RealRoot> {
    let n = match f.degree() {
        None | Some(0) => return Vec::new(),
        Some(n) => n,
    };
    let _ = n;
    let fsq = Arc::new(primitive_pos(f));
    let chain = Arc::new(SturmChain::new(&fsq));
    let bound = cauchy_bound(&fsq);
    let mut out = Vec::new();
    let total = chain.count_in(&-bound.clone(), &bound);
    debug_assert_eq!(total, chain.count_all());
    let mut stack = vec![(-bound.clone(), bound.clone(), total)];
    while let Some((lo, hi, count)) = stack.pop() {
        if count == 0 {
            continue;
        }
        if count == 1 {
            // Tighten endpoints so that neither is a root and f changes sign.
            let root = isolate_single(&fsq, &chain, lo, hi);
            out.push(root);
            continue;
        }
        let mid = (&lo + &hi) / BigRational::from_integer(BigInt::from(2));
        let left = chain.count_in(&lo, &mid);
        stack.push((lo, mid.clone(), left));
        stack.push((mid, hi, count - left));
    }
    out.sort_by(|a, b| cmp_roots(b, a));
    out
}

fn cmp_roots(a: &RealRoot, b: &RealRoot) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let mut aa = a.clone();
    let mut bb = b.clone();
    loop {
        if aa.exact && bb.exact {
            return aa.lo.cmp(&bb.lo);
        }
        if aa.hi <= bb.lo && !(aa.exact && bb.exact && aa.lo == bb.lo) {
            if aa.hi == bb.lo && aa.exact && bb.exact {
                return Ordering::Equal;
            }
            return Ordering::Less;
        }
        if bb.hi <= aa.lo {
            return Ordering::Greater;
        }
        // Overlapping intervals of distinct roots: refine both.
        if !aa.exact {
            aa = aa.bisect();
        }
        if !bb.exact {
            bb = bb.bisect();
        }
    }
}

fn isolate_single(f: &Arc<QPoly>, chain: &Arc<SturmChain>, lo: BigRational, hi: BigRational) -> RealRoot {
    // (lo, hi] contains exactly one root θ. Produce either the exact root or
    // an open interval (lo, hi) with f(lo)·f(hi) < 0.
    if f.eval(&hi).is_zero() {
        return RealRoot { f: f.clone(), chain: chain.clone(), lo: hi.clone(), hi, exact: true };
    }
    let mut lo = lo;
    let mut hi = hi;
    loop {
        let flo = f.eval(&lo);
        if !flo.is_zero() && sign_of(&flo) != sign_of(&f.eval(&hi)) {
            return RealRoot { f: f.clone(), chain: chain.clone(), lo, hi, exact: false };
        }
        let mid = (&lo + &hi) / BigRational::from_integer(BigInt::from(2));
        if f.eval(&mid).is_zero() {
            // The only root in the interval is the midpoint itself.
            return RealRoot { f: f.clone(), chain: chain.clone(), lo: mid.clone(), hi: mid, exact: true };
        }
        if chain.count_in(&lo, &mid) == 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

fn cauchy_bound(f: &QPoly) -> BigRational {
    let lc = f.lc().unwrap().abs();
    let mut m = BigRational::zero();
    for c in f.coeffs() {
        let a = c.abs() / &lc;
        if a > m {
            m = a;
        }
    }
    m + BigRational::one()
}

/// Exact sign of g at an isolated real root θ of f (the root handle's
/// polynomial). Returns 0 only when g(θ) = 0 exactly.
pub fn sign_at_root(g: &QPoly, root: &RealRoot) -> i8 {
    if g.is_zero() {
        return 0;
    }
    if root.exact {
        return sign_of(&g.eval(&root.lo));
    }
    // If g shares the root with f, the sign is 0: check via gcd.
    let common = root.f.gcd(g);
    if common.degree().map_or(false, |d| d > 0) {
        let cchain = SturmChain::new(&common.squarefree_part());
        if cchain.count_in(&root.lo, &root.hi) > 0 {
            // The shared root could still be a different root of f in the
            // interval; but the interval isolates θ, so any root of common
            // inside it is θ itself.
            return 0;
        }
    }
    // Refine until g has no root in the isolating interval; then the sign at
    // any interior point is the sign at θ.
    let gsf = g.squarefree_part();
    let gchain = SturmChain::new(&gsf);
    let mut r = root.clone();
    loop {
        if r.exact {
            return sign_of(&g.eval(&r.lo));
        }
        if gchain.count_in(&r.lo, &r.hi) == 0 && !g.eval(&r.lo).is_zero() && !g.eval(&r.hi).is_zero() {
            return sign_of(&g.eval(&r.approx()));
        }
        r = r.bisect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn qr(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn sqrt2_roots() {
        let f = QPoly::from_i64(&[-2, 0, 1]);
        let roots = real_roots(&f);
        assert_eq!(roots.len(), 2);
        // Decreasing order: +√2 then −√2.
        assert!(roots[0].cmp_rational(&q(1)) == std::cmp::Ordering::Greater);
        assert!(roots[0].cmp_rational(&qr(3, 2)) == std::cmp::Ordering::Less);
        assert!(roots[1].cmp_rational(&q(-1)) == std::cmp::Ordering::Less);
        let r = roots[0].refined(&qr(1, 100_000_000));
        let mid = r.approx();
        let err = (&mid * &mid - q(2)).abs();
        assert!(err < qr(1, 1_000_000));
    }

    #[test]
    fn paper_sextic_two_real_roots() {
        // −x⁶+2x⁵+3x⁴−x³+x²+x−3 has exactly two real roots, near 0.85 and 2.94.
        let f = QPoly::from_i64(&[-3, 1, 1, -1, 3, 2, -1]);
        let roots = real_roots(&f);
        assert_eq!(roots.len(), 2);
        let big = roots[0].refined(&qr(1, 100));
        let small = roots[1].refined(&qr(1, 100));
        assert!(big.cmp_rational(&qr(293, 100)) == std::cmp::Ordering::Greater);
        assert!(big.cmp_rational(&qr(295, 100)) == std::cmp::Ordering::Less);
        assert!(small.cmp_rational(&qr(84, 100)) == std::cmp::Ordering::Greater);
        assert!(small.cmp_rational(&qr(86, 100)) == std::cmp::Ordering::Less);
    }

    #[test]
    fn no_real_roots_quartic() {
        // Sturm count certifies x⁴+x²+2 has no real roots.
        let f = QPoly::from_i64(&[2, 0, 1, 0, 1]);
        assert!(real_roots(&f).is_empty());
        assert_eq!(SturmChain::new(&f).count_all(), 0);
    }

    #[test]
    fn rational_roots_are_exact() {
        // (x−1)(x+2)x
        let f = QPoly::from_i64(&[0, -2, 1, 1]).mul(&QPoly::one());
        let roots = real_roots(&f);
        assert_eq!(roots.len(), 3);
        for r in &roots {
            let v = r.clone().refined(&qr(1, 10_000));
            let _ = v;
        }
        // Decreasing: 1, 0, −2.
        assert_eq!(roots[0].cmp_rational(&q(1)), std::cmp::Ordering::Equal);
        assert_eq!(roots[1].cmp_rational(&q(0)), std::cmp::Ordering::Equal);
        assert_eq!(roots[2].cmp_rational(&q(-2)), std::cmp::Ordering::Equal);
    }

    #[test]
    fn sign_at_algebraic_point() {
        let f = QPoly::from_i64(&[-2, 0, 1]); // roots ±√2
        let roots = real_roots(&f);
        let pos = &roots[0];
        // x² − 3 < 0 at √2, x − 1 > 0, and x² − 2 = 0.
        assert_eq!(sign_at_root(&QPoly::from_i64(&[-3, 0, 1]), pos), -1);
        assert_eq!(sign_at_root(&QPoly::from_i64(&[-1, 1]), pos), 1);
        assert_eq!(sign_at_root(&QPoly::from_i64(&[-2, 0, 1]), pos), 0);
        assert_eq!(sign_at_root(&QPoly::from_i64(&[-4, 0, 0, 0, 1]), pos), 0); // x⁴−4
    }

    #[test]
    fn sturm_count_matches_isolation_on_random_squarefree() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let mut done = 0;
        while done < 100 {
            let deg = rng.gen_range(1..=7);
            let coeffs: Vec<i64> = (0..=deg).map(|_| rng.gen_range(-9..=9)).collect();
            let f = QPoly::from_i64(&coeffs);
            if f.degree() != Some(deg) || f.discriminant().is_zero() {
                continue;
            }
            let roots = real_roots(&f);
            assert_eq!(roots.len(), SturmChain::new(&f).count_all());
            // Pairwise disjoint and strictly decreasing.
            for w in roots.windows(2) {
                assert_eq!(cmp_roots(&w[0], &w[1]), std::cmp::Ordering::Greater);
            }
            done += 1;
        }
    }
}
