//! Independent reference implementations used by the heavier test suites:
//! a brute-force enumeration of local images with stability certificates.
//! These deliberately avoid the production recursion's bookkeeping (factor
//! sets, determination counters); decisions come from direct certificates.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::HashSet;

use crate::exact::{factor_over_q, QPoly, ZPoly};
use crate::local_image::{
    cofactor_mod, qp_root_locs, taylor_ord_mod, weierstrass_rep, CoordOracle, LocalImageError,
};
use crate::padic::{is_square_qp, ord_p_int, taylor_ord, unit_part, unit_square_mod, zp_roots, ZpRoot};

/// Brute-force μ_p(C(Q_p)) as a set of coordinate vectors (with sample
/// representatives), comparable against [`crate::local_image::local_image`]
/// output computed over the same polynomial.
pub struct BruteImage {
    pub classes: Vec<(Vec<bool>, QPoly)>,
    pub oracle: CoordOracle,
}

impl BruteImage {
    pub fn coord_set(&self) -> HashSet<Vec<bool>> {
        self.classes.iter().map(|(c, _)| c.clone()).collect()
    }
}

struct Collector<'a> {
    oracle: &'a CoordOracle,
    f: ZPoly,
    classes: Vec<(Vec<bool>, QPoly)>,
    seen: HashSet<Vec<bool>>,
    generation: u64,
}

impl<'a> Collector<'a> {
    fn add(&mut self, rep: QPoly) -> Result<(), LocalImageError> {
        let coords = self.oracle.coords(&rep)?;
        if self.oracle.generation() != self.generation {
            // Precision escalated: recompute everything in the new basis.
            loop {
                let gen = self.oracle.generation();
                let mut fresh = Vec::with_capacity(self.classes.len());
                for (_, r) in &self.classes {
                    fresh.push(self.oracle.coords(r)?);
                }
                if self.oracle.generation() != gen {
                    continue;
                }
                self.seen.clear();
                for ((c, _), nc) in self.classes.iter_mut().zip(fresh) {
                    self.seen.insert(nc.clone());
                    *c = nc;
                }
                self.generation = gen;
                break;
            }
            return self.add(rep);
        }
        if self.seen.insert(coords.clone()) {
            self.classes.push((coords, rep));
        }
        Ok(())
    }
}

/// Evaluate μ on one side: x ↦ x − θ on the main chart, z ↦ z(1 − zθ) on the
/// chart at infinity.
fn side_rep(tilde: bool, x1: &BigInt) -> QPoly {
    if !tilde {
        QPoly::from_coeffs(vec![BigRational::from_integer(x1.clone()), BigRational::from_integer(BigInt::from(-1))])
    } else {
        let z = BigRational::from_integer(x1.clone());
        QPoly::from_coeffs(vec![z.clone(), -(&z * &z)])
    }
}

pub fn local_image_brute(f: &ZPoly, p: u64) -> Result<BruteImage, LocalImageError> {
    let n = f.degree().expect("nonzero polynomial");
    let oracle = CoordOracle::new(f, p)?;
    let mut col = Collector { oracle: &oracle, f: f.clone(), classes: Vec::new(), seen: HashSet::new(), generation: oracle.generation() };

    // Definitional seeds: Weierstrass points and points at infinity.
    for root in &qp_root_locs(f, p)? {
        let rep = weierstrass_rep(f, p, root, &oracle)?;
        col.add(rep)?;
    }
    let fn_val = BigRational::from_integer(f.lc().unwrap().clone());
    let fn_square = is_square_qp(&fn_val, p);
    if n % 2 == 1 || fn_square {
        col.add(QPoly::constant(fn_val))?;
    }

    // Main chart over Z_p, then the chart at infinity over p·Z_p.
    enumerate_side(&mut col, f, p, false)?;
    let ftilde = if n % 2 == 0 { f.reverse(n) } else { f.reverse(n + 1) };
    enumerate_side(&mut col, &ftilde, p, true)?;

    let Collector { classes, .. } = col;
    Ok(BruteImage { classes, oracle })
}

/// Breadth-first disc refinement with certificate-driven stopping.
fn enumerate_side(col: &mut Collector, fs: &ZPoly, p: u64, tilde: bool) -> Result<(), LocalImageError> {
    let ord2: i64 = if p == 2 { 1 } else { 0 };
    let stable = 2 * ord2 + 1;
    let factors: Vec<ZPoly> = factor_over_q(&fs.to_qpoly()).factors.into_iter().map(|(g, _)| g).collect();
    let mut factor_roots: Vec<Vec<ZpRoot>> = Vec::new();
    for g in &factors {
        factor_roots.push(zp_roots(g, p)?);
    }
    let all_roots: Vec<ZpRoot> = factor_roots.iter().flatten().cloned().collect();

    let disc = fs.to_qpoly().discriminant().to_integer();
    let cap = ord_p_int(&disc, p) + 2 * ord_p_int(fs.lc().unwrap(), p) + 2 * fs.degree().unwrap() as u32 + 40;

    let start_depth = if tilde { 1 } else { 0 };
    let mut queue: Vec<(BigInt, u32)> = vec![(BigInt::zero(), start_depth)];
    while let Some((x0, e)) = queue.pop() {
        if e > cap {
            return Err(LocalImageError::Internal("oracle enumeration exceeded its depth cap".into()));
        }
        let pe = BigInt::from(p).pow(e);
        for r in 0..p {
            let x1 = &x0 + BigInt::from(r) * &pe;
            if tilde && x1.is_zero() {
                // The z = 0 fibre holds the points at infinity (seeded); the
                // rest of its disc is covered by the subdivision below.
                queue.push((x1, e + 1));
                continue;
            }
            let val = fs.eval(&x1);
            if val.is_zero() {
                // Weierstrass centre (seeded). Points nearby are covered by
                // the subdivision of the sibling residues plus the chain of
                // this exact root, which is its own disc forever: enumerate
                // the chain x = x₁ + p^t·u directly.
                enumerate_chain(col, fs, p, tilde, &x1, e + 1, stable as u32)?;
                continue;
            }
            let v1 = ord_p_int(&val, p) as i64;
            let e1 = taylor_ord(fs, &x1, e + 1, p);
            if e1 > v1 {
                // Value determined on the disc.
                let certainly_square = v1 % 2 == 0 && {
                    let u = unit_part(&BigRational::from_integer(val.clone()), p);
                    (e1 - v1) >= stable && unit_square_mod(&u.to_integer(), p, stable as u32)
                };
                let certainly_nonsquare = v1 % 2 != 0 || {
                    let u = unit_part(&BigRational::from_integer(val.clone()), p);
                    let j = ((e1 - v1).min(stable)) as u32;
                    !unit_square_mod(&u.to_integer(), p, j)
                };
                if certainly_nonsquare {
                    continue;
                }
                if certainly_square && factors_pinned(&factors, &factor_roots, &x1, e + 1, p, stable)? {
                    col.add(side_rep(tilde, &x1))?;
                    continue;
                }
                queue.push((x1, e + 1));
                continue;
            }
            // Undetermined: either a root lives here (chain it) or subdivide.
            if let Some(root) = root_in_disc(&all_roots, &x1, e + 1, p) {
                if chain_applicable(&factors, &factor_roots, &root, &x1, e + 1, p, stable)? {
                    enumerate_chain(col, fs, p, tilde, &x1, e + 1, stable as u32)?;
                    continue;
                }
            }
            queue.push((x1, e + 1));
        }
    }
    Ok(())
}

/// Every factor's square class is pinned on the disc x₁ + p^e·Z_p.
fn factors_pinned(
    factors: &[ZPoly],
    factor_roots: &[Vec<ZpRoot>],
    x1: &BigInt,
    e: u32,
    p: u64,
    stable: i64,
) -> Result<bool, LocalImageError> {
    for (g, roots) in factors.iter().zip(factor_roots.iter()) {
        if roots.is_empty() {
            let v = ord_p_int(&g.eval(x1), p) as i64;
            if taylor_ord(g, x1, e, p) < v + stable {
                return Ok(false);
            }
        } else {
            // Use the numeric cofactor and the linear parts separately.
            let k = 48u32;
            let pk = BigInt::from(p).pow(k);
            let cof = cofactor_mod(g, roots, k, p);
            let cval = poly_eval_mod(&cof, x1, &pk);
            if cval.is_zero() {
                return Ok(false);
            }
            let v = ord_p_int(&cval, p) as i64;
            match taylor_ord_mod(&cof, x1, e, p, &pk) {
                Some(t) if t < (k as i64) - 2 && v < (k as i64) - 2 => {
                    if t < v + stable {
                        return Ok(false);
                    }
                }
                _ => return Ok(false),
            }
            for rt in roots {
                // Linear part pinned iff e ≥ ord(x₁ − r) + stable.
                let dist = linear_dist(rt, x1, p);
                match dist {
                    Some(d) => {
                        if (e as i64) < d + stable {
                            return Ok(false);
                        }
                    }
                    None => return Ok(false),
                }
            }
        }
    }
    Ok(true)
}

fn linear_dist(rt: &ZpRoot, x1: &BigInt, p: u64) -> Option<i64> {
    if let Some(v) = rt.exact_value() {
        let d = x1 - v;
        if d.is_zero() {
            return None;
        }
        return Some(ord_p_int(&d, p) as i64);
    }
    let mut k = 8u32;
    loop {
        let a = rt.approx_mod(k);
        let pk = BigInt::from(p).pow(k);
        let d = (x1 - &a).mod_floor(&pk);
        if !d.is_zero() {
            return Some(ord_p_int(&d, p) as i64);
        }
        k *= 2;
        if k > 1 << 13 {
            return None;
        }
    }
}

fn root_in_disc(roots: &[ZpRoot], x1: &BigInt, e: u32, p: u64) -> Option<ZpRoot> {
    let pe = BigInt::from(p).pow(e);
    for rt in roots {
        let a = match rt.exact_value() {
            Some(v) => v.mod_floor(&pe),
            None => rt.approx_mod(e),
        };
        if a == x1.mod_floor(&pe) {
            return Some(rt.clone());
        }
    }
    None
}

/// The chain shortcut is valid when the disc contains exactly one root and
/// every other local factor (including the root's own cofactor) is pinned.
fn chain_applicable(
    factors: &[ZPoly],
    factor_roots: &[Vec<ZpRoot>],
    root: &ZpRoot,
    x1: &BigInt,
    e: u32,
    p: u64,
    stable: i64,
) -> Result<bool, LocalImageError> {
    // Exactly one root inside.
    let pe = BigInt::from(p).pow(e);
    let mut inside = 0;
    for roots in factor_roots {
        for rt in roots {
            let a = match rt.exact_value() {
                Some(v) => v.mod_floor(&pe),
                None => rt.approx_mod(e),
            };
            if a == x1.mod_floor(&pe) {
                inside += 1;
            }
        }
    }
    if inside != 1 {
        return Ok(false);
    }
    // All factors pinned except the root's linear part.
    for (g, roots) in factors.iter().zip(factor_roots.iter()) {
        let k = 48u32;
        let pk = BigInt::from(p).pow(k);
        let strip: Vec<ZpRoot> = roots
            .iter()
            .filter(|rt|

                match (rt.exact_value(), root.exact_value()) {
                    (Some(a), Some(b)) => a == b,
                    (None, None) => rt.approx_mod(e) == root.approx_mod(e),
                    _ => false,
                })
            .cloned()
            .collect();
        let body = if strip.is_empty() && roots.is_empty() {
            g.clone()
        } else {
            // Strip the chained root if it belongs to this factor, and keep
            // the other rational roots inside the cofactor body for the
            // pinning test (their linear parts are checked separately).
            cofactor_mod(g, roots, k, p)
        };
        if body.degree().map_or(true, |d| d == 0) {
            continue;
        }
        let v = {
            let val = poly_eval_mod(&body, x1, &pk);
            if val.is_zero() {
                return Ok(false);
            }
            ord_p_int(&val, p) as i64
        };
        match taylor_ord_mod(&body, x1, e, p, &pk) {
            Some(t) if t < (k as i64) - 2 && v < (k as i64) - 2 => {
                if t < v + stable {
                    return Ok(false);
                }
            }
            _ => return Ok(false),
        }
        // Non-chained linear parts must also be pinned.
        for rt in roots {
            let same = match (rt.exact_value(), root.exact_value()) {
                (Some(a), Some(b)) => a == b,
                (None, None) => rt.approx_mod(e + 4) == root.approx_mod(e + 4),
                _ => false,
            };
            if same {
                continue;
            }
            match linear_dist(rt, x1, p) {
                Some(d) => {
                    if (e as i64) < d + stable {
                        return Ok(false);
                    }
                }
                None => return Ok(false),
            }
        }
    }
    Ok(true)
}

/// Enumerate the points x = centre + p^t·u for t ∈ {e, e+1} and all unit
/// digit patterns u modulo p^(1+2·ord₂(p)); deeper points repeat these
/// classes with period two in t.
fn enumerate_chain(
    col: &mut Collector,
    fs: &ZPoly,
    p: u64,
    tilde: bool,
    centre: &BigInt,
    e: u32,
    stable: u32,
) -> Result<(), LocalImageError> {
    let ud = stable; // 1 + 2·ord₂ digits of the unit
    let span = BigInt::from(p).pow(ud);
    for t in e..e + 4 {
        let pt = BigInt::from(p).pow(t);
        let mut u = BigInt::one();
        while u < span {
            if !(&u % p).is_zero() {
                let x1 = centre + &u * &pt;
                let val = fs.eval(&x1);
                if !val.is_zero() && is_square_qp(&BigRational::from_integer(val), p) {
                    col.add(side_rep(tilde, &x1))?;
                }
            }
            u += 1;
        }
    }
    let _ = &col.f;
    Ok(())
}

fn poly_eval_mod(f: &ZPoly, x: &BigInt, pk: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    for c in f.coeffs().iter().rev() {
        acc = (acc * x + c).mod_floor(pk);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_image::local_image;
    use rand::{Rng, SeedableRng};

    fn compare(f: &ZPoly, p: u64) {
        let img = local_image(f, p).expect("local image");
        let brute = local_image_brute(f, p).expect("brute image");
        let a: HashSet<Vec<bool>> = img.classes.iter().map(|c| c.coords.clone()).collect();
        let b = brute.coord_set();
        assert_eq!(a, b, "image mismatch for {f:?} at p = {p}: algorithm {} vs brute {}", a.len(), b.len());
    }

    #[test]
    fn oracle_agreement_small_sample() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xa11ce);
        let mut done = 0;
        while done < 10 {
            let deg = rng.gen_range(4..=6);
            let coeffs: Vec<i64> = (0..=deg).map(|_| rng.gen_range(-5..=5)).collect();
            let f = ZPoly::from_i64(&coeffs);
            if f.degree() != Some(deg) || f.to_qpoly().discriminant().is_zero() {
                continue;
            }
            for p in [2u64, 3, 5] {
                compare(&f, p);
            }
            done += 1;
        }
    }

    #[test]
    fn oracle_agreement_paper_curves() {
        compare(&ZPoly::from_i64(&[2, 1, 0, 0, 0, 0, 2]), 2);
        compare(&ZPoly::from_i64(&[-3, 1, 1, -1, 3, 2, -1]), 2);
        compare(&ZPoly::from_i64(&[-2, 0, 3, 0, 1, 0, 2]), 2);
        compare(&ZPoly::from_i64(&[-3, 1, 1, -1, 3, 2, -1]), 73);
    }
}
