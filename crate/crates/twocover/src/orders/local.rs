//! Per-prime local data of a number field K = Q[x]/(g) at a rational prime:
//! ramification and residue degrees, valuations, and F₂ coordinates of local
//! square classes. Built either on a lightweight path (good odd primes) or on
//! the full order machinery (p = 2 and primes dividing the discriminant more
//! than once).

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

use super::linalg::{charpoly_mod_pk, invert_mod_pk, invert_rational, mod_inverse, solve_mod_pk, solve_rational};
use super::maximal::{fp_inv, p_maximal_order, FpAlgebra, OrderBasis};
use super::OrderError;
use crate::exact::{hensel_lift_monic_coprime, FpPoly, QPoly, ZPoly};

/// Shape data of one prime P | p of K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalPrimeInfo {
    pub e: usize,
    pub d: usize,
    /// Number of F₂ coordinates describing the unit part of a square class.
    pub unit_bits: usize,
}

pub struct FieldAtP {
    g: ZPoly,
    p: u64,
    level: u32,
    pk: BigInt,
    inner: Inner,
}

enum Inner {
    GoodOdd(Vec<GoodFactor>),
    General(General),
}

enum GoodFactor {
    /// Unramified factor: O_L = Z_p[x]/(H), residue field F_p[x]/(h̄).
    Unram { hbar: FpPoly, lift: ZPoly, d: usize },
    /// Ramified quadratic over the unramified extension of degree d:
    /// e = 2, residue field F_p[x]/(h̄), uniformizer π = A(θ) with A a monic
    /// lift of h̄; κ is the Legendre character of the residue of π²/p.
    Ram { hbar: FpPoly, lift: ZPoly, pi: ZPoly, kappa: bool, d: usize },
}

struct General {
    n: usize,
    /// Power-basis coordinates → order coordinates, mod p^k (row-major n×n).
    to_order: Vec<Vec<BigInt>>,
    /// ord_p of the denominator of the order basis (index bookkeeping).
    primes: Vec<GeneralPrime>,
}

struct GeneralPrime {
    e: usize,
    d: usize,
    n_i: usize,
    /// Order coordinates → component coordinates (n_i × n, mod p^k).
    proj: Vec<Vec<BigInt>>,
    /// Structure constants of the component algebra.
    mul: Vec<Vec<Vec<BigInt>>>,
    one: Vec<BigInt>,
    pi: Vec<BigInt>,
    /// Multiplication-by-π matrix (row-major n_i×n_i).
    mpi: Vec<Vec<BigInt>>,
    /// Monic defining polynomial of the completion, coefficients mod p^k.
    completion: ZPoly,
    sq: SquareData,
}

enum SquareData {
    /// p odd: Legendre character in the residue field, exponent (q−1)/2.
    Odd { qm1_half: BigUint },
    /// p = 2: canonical class table in C/π^m, m = 2e+1.
    Two {
        /// Canonical reduction data modulo π^m.
        howell_m: Vec<(usize, u32, Vec<BigInt>)>,
        class_of: HashMap<Vec<BigInt>, u32>,
        class_bits: Vec<Vec<bool>>,
        unramified: Vec<bool>,
    },
}

impl FieldAtP {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn defining_poly(&self) -> &ZPoly {
        &self.g
    }

    pub fn prime_count(&self) -> usize {
        match &self.inner {
            Inner::GoodOdd(fs) => fs.len(),
            Inner::General(g) => g.primes.len(),
        }
    }

    pub fn info(&self, i: usize) -> LocalPrimeInfo {
        match &self.inner {
            Inner::GoodOdd(fs) => match &fs[i] {
                GoodFactor::Unram { d, .. } => LocalPrimeInfo { e: 1, d: *d, unit_bits: 1 },
                GoodFactor::Ram { d, .. } => LocalPrimeInfo { e: 2, d: *d, unit_bits: 1 },
            },
            Inner::General(g) => {
                let pr = &g.primes[i];
                let unit_bits = if self.p == 2 { pr.n_i + 1 } else { 1 };
                LocalPrimeInfo { e: pr.e, d: pr.d, unit_bits }
            }
        }
    }

    pub fn infos(&self) -> Vec<LocalPrimeInfo> {
        (0..self.prime_count()).map(|i| self.info(i)).collect()
    }

    /// Monic defining polynomial of the completion K_P over Q_p, with integer
    /// coefficients accurate mod p^level.
    pub fn completion_poly(&self, i: usize) -> ZPoly {
        match &self.inner {
            Inner::GoodOdd(fs) => match &fs[i] {
                GoodFactor::Unram { lift, .. } => lift.clone(),
                GoodFactor::Ram { lift, .. } => lift.clone(),
            },
            Inner::General(g) => g.primes[i].completion.clone(),
        }
    }

    /// P-adic valuation ord_P(z) (normalized ord_P(π) = 1, so ord_P(p) = e).
    pub fn ord_at(&self, i: usize, z: &QPoly) -> Result<i64, OrderError> {
        let (num, a) = self.split_denominator(z)?;
        let e = self.info(i).e as i64;
        let v = self.integral_ord(i, &num)?;
        Ok(v - a * e)
    }

    /// F₂ coordinates of the class of z in K_P*/K_P*²: [ord mod 2, unit bits].
    pub fn class_coords(&self, i: usize, z: &QPoly) -> Result<Vec<bool>, OrderError> {
        let (num, a) = self.split_denominator(z)?;
        let e = self.info(i).e as i64;
        let (v, unit_bits) = self.integral_unit_class(i, &num)?;
        let ord = v - a * e;
        let mut out = vec![ord % 2 != 0];
        out.extend(unit_bits);
        Ok(out)
    }

    pub fn is_square_at(&self, i: usize, z: &QPoly) -> Result<bool, OrderError> {
        Ok(self.class_coords(i, z)?.iter().all(|&b| !b))
    }

    /// Whether K_P(√z)/K_P is unramified.
    pub fn is_unramified_at(&self, i: usize, z: &QPoly) -> Result<bool, OrderError> {
        let (num, a) = self.split_denominator(z)?;
        let e = self.info(i).e as i64;
        let (v, unit_bits) = self.integral_unit_class(i, &num)?;
        if (v - a * e) % 2 != 0 {
            return Ok(false);
        }
        if self.p != 2 {
            return Ok(true);
        }
        match &self.inner {
            Inner::General(g) => match &g.primes[i].sq {
                SquareData::Two { class_bits, unramified, .. } => {
                    let id = class_bits.iter().position(|b| *b == unit_bits).ok_or_else(|| {
                        OrderError::Internal("unit class not in table".into())
                    })?;
                    Ok(unramified[id])
                }
                SquareData::Odd { .. } => Err(OrderError::Internal("odd data at p = 2".into())),
            },
            Inner::GoodOdd(_) => Err(OrderError::Internal("good-odd path at p = 2".into())),
        }
    }

    /// Split z = num(θ)/(p^a·m) with num integral and m inverted mod p^level;
    /// returns (num·m⁻¹ as integer poly mod p^level, a).
    fn split_denominator(&self, z: &QPoly) -> Result<(ZPoly, i64), OrderError> {
        let zr = z.rem(&self.g.to_qpoly());
        if zr.is_zero() {
            return Err(OrderError::NotInvertible);
        }
        let mut den = BigInt::one();
        for c in zr.coeffs() {
            den = den.lcm(c.denom());
        }
        let pb = BigInt::from(self.p);
        let mut a = 0i64;
        let mut m = den.clone();
        while (&m % &pb).is_zero() {
            m /= &pb;
            a += 1;
        }
        let minv = mod_inverse(&m.mod_floor(&self.pk), &self.pk)
            .ok_or_else(|| OrderError::Internal("denominator unit not invertible".into()))?;
        let coeffs: Vec<BigInt> = zr
            .coeffs()
            .iter()
            .map(|c| {
                let scaled = c * BigRational::from_integer(den.clone());
                debug_assert!(scaled.is_integer());
                (scaled.to_integer() * &minv).mod_floor(&self.pk)
            })
            .collect();
        Ok((ZPoly::from_coeffs(coeffs), a))
    }

    fn integral_ord(&self, i: usize, num: &ZPoly) -> Result<i64, OrderError> {
        match &self.inner {
            Inner::GoodOdd(fs) => good_odd_ord(&fs[i], num, self.p, self.level, &self.pk).map(|(v, _, _)| v),
            Inner::General(g) => {
                let comp = g.component_coords(i, num, &self.pk);
                g.primes[i].ord(comp, self.p, self.level, 0)
            }
        }
    }

    /// (ord, unit class bits) of an integral element.
    fn integral_unit_class(&self, i: usize, num: &ZPoly) -> Result<(i64, Vec<bool>), OrderError> {
        match &self.inner {
            Inner::GoodOdd(fs) => {
                let (v, unit, flip) = good_odd_ord(&fs[i], num, self.p, self.level, &self.pk)?;
                let leg = good_odd_legendre(&fs[i], &unit)? ^ flip;
                Ok((v, vec![leg]))
            }
            Inner::General(g) => {
                let pr = &g.primes[i];
                let comp = g.component_coords(i, num, &self.pk);
                let (v, unit) = pr.ord_and_unit(comp, self.p, self.level)?;
                let bits = pr.unit_class_bits(&unit, self.p, self.level, &self.pk)?;
                Ok((v, bits))
            }
        }
    }

    pub(super) fn build(g: &ZPoly, p: u64, level: u32) -> Result<FieldAtP, OrderError> {
        let n = g.degree().ok_or(OrderError::BadPolynomial)?;
        if !g.lc().map_or(false, |c| c.is_one()) {
            return Err(OrderError::BadPolynomial);
        }
        let disc = g.to_qpoly().discriminant();
        debug_assert!(disc.is_integer());
        let disc = disc.to_integer();
        let pb = BigInt::from(p);
        let mut dv = 0u32;
        let mut dd = disc.clone();
        while !dd.is_zero() && (&dd % &pb).is_zero() {
            dd /= &pb;
            dv += 1;
        }
        // Working level: requested, but at least enough to resolve the
        // square-class precision of every possible shape.
        let level = level.max(dv + if p == 2 { 4 } else { 0 } + 6);
        let pk = pb.pow(level);

        let inner = if p != 2 && dv <= 1 {
            Inner::GoodOdd(build_good_odd(g, p, level, dv)?)
        } else {
            Inner::General(build_general(g, p, level, n)?)
        };
        Ok(FieldAtP { g: g.clone(), p, level, pk, inner })
    }
}

// ---------------------------------------------------------------------------
// Good odd primes: ord_p(disc g) ≤ 1, p odd.
// ---------------------------------------------------------------------------

fn build_good_odd(g: &ZPoly, p: u64, level: u32, disc_val: u32) -> Result<Vec<GoodFactor>, OrderError> {
    let gbar = FpPoly::from_zpoly(g, p);
    let (_, fac) = gbar.factor();
    let mut parts: Vec<FpPoly> = Vec::new();
    let mut ram: Option<FpPoly> = None;
    for (h, m) in &fac {
        match m {
            1 => parts.push(h.clone()),
            2 => {
                if ram.is_some() {
                    return Err(OrderError::Internal("two repeated factors at a good odd prime".into()));
                }
                ram = Some(h.clone());
                parts.push(h.mul(h));
            }
            _ => return Err(OrderError::Internal("unexpected multiplicity at a good odd prime".into())),
        }
    }
    if (disc_val == 0) != ram.is_none() {
        return Err(OrderError::Internal("reduction shape inconsistent with disc valuation".into()));
    }
    let lifts = hensel_lift_monic_coprime(g, &parts, p, level);
    let pk = BigInt::from(p).pow(level);
    let mut out = Vec::new();
    for (part, lift) in parts.iter().zip(lifts.iter()) {
        let lift = normalize_mod(lift, &pk);
        let is_ram = ram.as_ref().map_or(false, |h| part.degree() == h.mul(h).degree() && *part == h.mul(h));
        if !is_ram {
            out.push(GoodFactor::Unram { hbar: part.clone(), lift, d: part.degree().unwrap() });
        } else {
            let hbar = ram.clone().unwrap();
            let d = hbar.degree().unwrap();
            // π = A(θ) for A a monic integer lift of h̄.
            let pi = ZPoly::from_coeffs(hbar.coeffs().iter().map(|&c| BigInt::from(c)).collect());
            // κ = Legendre of the residue of π²/p = (A² mod H)/p.
            let pi_sq = pi.mul(&pi);
            let diff = sub_mod(&pi_sq, &lift, &pk);
            // A² − H ≡ p·W mod p^level with W a unit at the prime.
            let w: Vec<BigInt> = diff.coeffs().iter().map(|c| {
                let c = c.mod_floor(&pk);
                debug_assert!((&c % p).is_zero(), "π² − H not divisible by p");
                c / p
            }).collect();
            let wp = ZPoly::from_coeffs(w);
            let wres = residue_in_field(&wp, &hbar, p);
            if wres.is_zero() {
                return Err(OrderError::Internal("uniformizer residue vanished".into()));
            }
            let kappa = !legendre_in_field(&wres, &hbar, p)?;
            out.push(GoodFactor::Ram { hbar, lift, pi, kappa, d });
        }
    }
    Ok(out)
}

fn normalize_mod(f: &ZPoly, pk: &BigInt) -> ZPoly {
    ZPoly::from_coeffs(f.coeffs().iter().map(|c| c.mod_floor(pk)).collect())
}

fn sub_mod(a: &ZPoly, b: &ZPoly, pk: &BigInt) -> ZPoly {
    let n = a.coeffs().len().max(b.coeffs().len());
    ZPoly::from_coeffs((0..n).map(|i| (a.coeff(i) - b.coeff(i)).mod_floor(pk)).collect())
}

/// Reduce an integer polynomial modulo (p, h̄): its image in F_p[x]/(h̄).
fn residue_in_field(z: &ZPoly, hbar: &FpPoly, p: u64) -> FpPoly {
    FpPoly::from_zpoly(z, p).rem(hbar)
}

/// Legendre character of a nonzero element of F_p[x]/(h̄): true iff a square.
fn legendre_in_field(z: &FpPoly, hbar: &FpPoly, p: u64) -> Result<bool, OrderError> {
    let d = hbar.degree().unwrap() as u32;
    let q = BigUint::from(p).pow(d);
    let exp = (&q - 1u32) / 2u32;
    let r = fp_powmod_biguint(z, &exp, hbar);
    if r.degree() == Some(0) && r.coeff(0) == 1 {
        Ok(true)
    } else if r.degree() == Some(0) && r.coeff(0) == hbar.p - 1 {
        Ok(false)
    } else {
        Err(OrderError::Internal("Legendre exponentiation out of ±1".into()))
    }
}

fn fp_powmod_biguint(a: &FpPoly, e: &BigUint, modulus: &FpPoly) -> FpPoly {
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

/// (ord_P, unit representative, Legendre flip) of an integral z at a good odd
/// factor. The flip accounts for the unit representative differing from the
/// true unit part z·π^(−ord) by a power of π²/p.
fn good_odd_ord(
    f: &GoodFactor,
    num: &ZPoly,
    p: u64,
    level: u32,
    pk: &BigInt,
) -> Result<(i64, ZPoly, bool), OrderError> {
    match f {
        GoodFactor::Unram { lift, .. } => {
            let z = poly_rem_mod(num, lift, pk);
            if z.is_zero() {
                return Err(OrderError::Precision { needed: level * 2, cap: super::LEVEL_CAP });
            }
            let pb = BigInt::from(p);
            let mut v = u32::MAX;
            for c in z.coeffs() {
                if !c.is_zero() {
                    v = v.min(ord_p_big(c, &pb));
                }
            }
            if v + 2 >= level {
                return Err(OrderError::Precision { needed: level * 2, cap: super::LEVEL_CAP });
            }
            let ppow = pb.pow(v);
            let unit = ZPoly::from_coeffs(z.coeffs().iter().map(|c| c / &ppow).collect());
            Ok((v as i64, unit, false))
        }
        GoodFactor::Ram { lift, pi, kappa, d, .. } => {
            let z = poly_rem_mod(num, lift, pk);
            if z.is_zero() {
                return Err(OrderError::Precision { needed: level * 2, cap: super::LEVEL_CAP });
            }
            // ord via the norm: ord_P(z) = ord_p(Res(lift, z))/d.
            let res = lift.to_qpoly().resultant(&z.to_qpoly());
            debug_assert!(res.is_integer());
            let res = res.to_integer();
            let pb = BigInt::from(p);
            let rr = res.mod_floor(pk);
            if rr.is_zero() {
                return Err(OrderError::Precision { needed: level * 2, cap: super::LEVEL_CAP });
            }
            let v = ord_p_big(&rr, &pb);
            if (v as usize) % d != 0 {
                return Err(OrderError::Internal("norm valuation not divisible by residue degree".into()));
            }
            let w = (v as usize / *d) as i64;
            if v + 2 * *d as u32 >= level {
                return Err(OrderError::Precision { needed: level * 2, cap: super::LEVEL_CAP });
            }
            // Unit representative: û = z·π^b / p^(a+b) where w = 2a + b; then
            // û = u₀·(π²/p)^(a+b), so the Legendre of u₀ flips by κ^(a+b).
            let aa = w.div_euclid(2);
            let b = w.rem_euclid(2);
            let mut u = z;
            if b == 1 {
                u = poly_rem_mod(&u.mul(pi), lift, pk);
            }
            let div = pb.pow((aa + b) as u32);
            let coeffs: Vec<BigInt> = u
                .coeffs()
                .iter()
                .map(|c| {
                    debug_assert!((c % &div).is_zero(), "unit extraction division failed");
                    c / &div
                })
                .collect();
            let flip = *kappa && (aa + b) % 2 == 1;
            Ok((w, ZPoly::from_coeffs(coeffs), flip))
        }
    }
}

/// Legendre bit of the unit representative at a good odd factor
/// (true = non-square residue).
fn good_odd_legendre(f: &GoodFactor, unit: &ZPoly) -> Result<bool, OrderError> {
    let hbar = match f {
        GoodFactor::Unram { hbar, .. } => hbar,
        GoodFactor::Ram { hbar, .. } => hbar,
    };
    let p = hbar.p;
    let r = residue_in_field(unit, hbar, p);
    if r.is_zero() {
        return Err(OrderError::Internal("unit part has zero residue".into()));
    }
    Ok(!legendre_in_field(&r, hbar, p)?)
}

fn poly_rem_mod(a: &ZPoly, modulus: &ZPoly, pk: &BigInt) -> ZPoly {
    // modulus monic: exact division remainder with coefficient reduction.
    let dd = modulus.degree().expect("monic modulus");
    let mut rem: Vec<BigInt> = a.coeffs().iter().map(|c| c.mod_floor(pk)).collect();
    while rem.len() > dd {
        let k = rem.len() - 1 - dd;
        let c = rem.last().unwrap().clone();
        if !c.is_zero() {
            for i in 0..dd {
                rem[k + i] = (&rem[k + i] - &modulus.coeff(i) * &c).mod_floor(pk);
            }
        }
        rem.pop();
    }
    ZPoly::from_coeffs(rem)
}

// ---------------------------------------------------------------------------
// General path: p = 2 or ord_p(disc) ≥ 2.
// ---------------------------------------------------------------------------

impl General {
    /// Component coordinates of an integral element given as a polynomial in θ.
    fn component_coords(&self, i: usize, num: &ZPoly, pk: &BigInt) -> Vec<BigInt> {
        let n = self.n;
        // Power coords reduced mod p^k (num already reduced mod g upstream).
        let mut pw = vec![BigInt::zero(); n];
        for (j, c) in num.coeffs().iter().enumerate() {
            pw[j] = c.mod_floor(pk);
        }
        // Order coords.
        let oc: Vec<BigInt> = (0..n)
            .map(|r| {
                let mut acc = BigInt::zero();
                for (c, pwc) in self.to_order[r].iter().zip(pw.iter()) {
                    acc += c * pwc;
                }
                acc.mod_floor(pk)
            })
            .collect();
        // Component coords.
        let pr = &self.primes[i];
        (0..pr.n_i)
            .map(|r| {
                let mut acc = BigInt::zero();
                for (c, occ) in pr.proj[r].iter().zip(oc.iter()) {
                    acc += c * occ;
                }
                acc.mod_floor(pk)
            })
            .collect()
    }
}

impl GeneralPrime {
    fn mul_vec(&self, a: &[BigInt], b: &[BigInt], pk: &BigInt) -> Vec<BigInt> {
        let n = self.n_i;
        let mut out = vec![BigInt::zero(); n];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                let c = (ai * bj).mod_floor(pk);
                for (k, m) in self.mul[i][j].iter().enumerate() {
                    out[k] += &c * m;
                }
            }
        }
        for o in out.iter_mut() {
            *o = o.mod_floor(pk);
        }
        out
    }

    fn ord(&self, comp: Vec<BigInt>, p: u64, level: u32, reserve: u32) -> Result<i64, OrderError> {
        self.ord_and_unit_impl(comp, p, level, reserve).map(|(v, _)| v)
    }

    fn ord_and_unit(&self, comp: Vec<BigInt>, p: u64, level: u32) -> Result<(i64, Vec<BigInt>), OrderError> {
        let reserve = if p == 2 { 2 * self.e as u32 + 2 } else { 2 };
        self.ord_and_unit_impl(comp, p, level, reserve)
    }

    /// Repeated division by π. Results are trusted only while the remaining
    /// precision exceeds `reserve` π-adic digits.
    fn ord_and_unit_impl(
        &self,
        comp: Vec<BigInt>,
        p: u64,
        level: u32,
        reserve: u32,
    ) -> Result<(i64, Vec<BigInt>), OrderError> {
        let ke = level as i64 * self.e as i64;
        let mut cur = comp;
        let mut v = 0i64;
        if cur.iter().all(|c| c.is_zero()) {
            return Err(OrderError::Precision { needed: level * 2, cap: super::LEVEL_CAP });
        }
        loop {
            match solve_mod_pk(&self.mpi, &cur, p, level) {
                Some(q) => {
                    v += 1;
                    cur = q;
                    if v + (reserve as i64) >= ke {
                        return Err(OrderError::Precision { needed: level * 2, cap: super::LEVEL_CAP });
                    }
                }
                None => return Ok((v, cur)),
            }
        }
    }

    fn unit_class_bits(&self, unit: &[BigInt], p: u64, _level: u32, pk: &BigInt) -> Result<Vec<bool>, OrderError> {
        match &self.sq {
            SquareData::Odd { qm1_half } => {
                // Legendre by exponentiation in the component.
                let mut acc = self.one.clone();
                let base = unit.to_vec();
                let mut sq = base;
                let bits = qm1_half.bits();
                // Left-to-right would need the base; right-to-left is simpler.
                let mut e = qm1_half.clone();
                while !e.is_zero() {
                    if e.bit(0) {
                        acc = self.mul_vec(&acc, &sq, pk);
                    }
                    sq = self.mul_vec(&sq, &sq, pk);
                    e >>= 1;
                }
                let _ = bits;
                // acc ≡ ±1 mod π: test acc − 1 and acc + 1 for divisibility.
                let minus: Vec<BigInt> = acc.iter().zip(self.one.iter()).map(|(a, o)| (a - o).mod_floor(pk)).collect();
                if self.divisible_by_pi(&minus, p, pk) {
                    return Ok(vec![false]);
                }
                let plus: Vec<BigInt> = acc.iter().zip(self.one.iter()).map(|(a, o)| (a + o).mod_floor(pk)).collect();
                if self.divisible_by_pi(&plus, p, pk) {
                    return Ok(vec![true]);
                }
                Err(OrderError::Internal("Legendre exponentiation out of ±1".into()))
            }
            SquareData::Two { howell_m, class_of, class_bits, .. } => {
                let rep = howell_reduce(howell_m, unit, pk);
                let id = *class_of
                    .get(&rep)
                    .ok_or_else(|| OrderError::Internal("unit representative missing from class table".into()))?;
                Ok(class_bits[id as usize].clone())
            }
        }
    }

    fn divisible_by_pi(&self, v: &[BigInt], p: u64, _pk: &BigInt) -> bool {
        if v.iter().all(|c| c.is_zero()) {
            return true;
        }
        solve_mod_pk(&self.mpi, v, p, 1).is_some()
    }
}

/// Howell-style canonical reduction basis of the span of the given columns
/// over Z/p^k; entries are (pivot row, pivot p-exponent, column).
fn howell_basis(cols: Vec<Vec<BigInt>>, n: usize, p: u64, k: u32) -> Vec<(usize, u32, Vec<BigInt>)> {
    let pk = BigInt::from(p).pow(k);
    let pb = BigInt::from(p);
    let mut work: Vec<Vec<BigInt>> = cols
        .into_iter()
        .map(|c| c.into_iter().map(|x| x.mod_floor(&pk)).collect())
        .filter(|c: &Vec<BigInt>| c.iter().any(|x| !x.is_zero()))
        .collect();
    let mut basis: Vec<(usize, u32, Vec<BigInt>)> = Vec::new();
    for row in 0..n {
        // Find minimal-valuation entry at this row.
        let mut best: Option<(usize, u32)> = None;
        for (j, c) in work.iter().enumerate() {
            if c[row].is_zero() {
                continue;
            }
            let v = ord_p_big(&c[row], &pb);
            if best.map_or(true, |(_, bv)| v < bv) {
                best = Some((j, v));
            }
        }
        let Some((bj, s)) = best else { continue };
        let mut piv = work.swap_remove(bj);
        // Scale so that the pivot entry is exactly p^s.
        let unit = &piv[row] / pb.pow(s);
        let uinv = mod_inverse(&unit.mod_floor(&pk), &pk).expect("unit inverse");
        for x in piv.iter_mut() {
            *x = (&*x * &uinv).mod_floor(&pk);
        }
        // Eliminate the row entry from all other columns.
        let ps = pb.pow(s);
        for c in work.iter_mut() {
            if !c[row].is_zero() {
                let q = &c[row] / &ps;
                for (x, pv) in c.iter_mut().zip(piv.iter()) {
                    *x = (&*x - &q * pv).mod_floor(&pk);
                }
            }
        }
        // Annihilator closure: p^(k−s)·pivot re-enters the working set.
        if s > 0 {
            let mult = pb.pow(k - s);
            let extra: Vec<BigInt> = piv.iter().map(|x| (x * &mult).mod_floor(&pk)).collect();
            if extra.iter().any(|x| !x.is_zero()) {
                work.push(extra);
            }
        }
        basis.push((row, s, piv));
        work.retain(|c| c.iter().any(|x| !x.is_zero()));
    }
    basis
}

fn howell_reduce(basis: &[(usize, u32, Vec<BigInt>)], v: &[BigInt], pk: &BigInt) -> Vec<BigInt> {
    let mut out: Vec<BigInt> = v.iter().map(|x| x.mod_floor(pk)).collect();
    for (row, _s, col) in basis {
        // The pivot entry col[row] is exactly p^s.
        if !out[*row].is_zero() {
            let q = &out[*row] / &col[*row];
            if !q.is_zero() {
                for (x, c) in out.iter_mut().zip(col.iter()) {
                    *x = (&*x - &q * c).mod_floor(pk);
                }
            }
        }
    }
    out
}

fn ord_p_big(x: &BigInt, p: &BigInt) -> u32 {
    let mut v = 0u32;
    let mut c = x.clone();
    while !c.is_zero() && (&c % p).is_zero() {
        c /= p;
        v += 1;
    }
    v
}

fn build_general(g: &ZPoly, p: u64, level: u32, n: usize) -> Result<General, OrderError> {
    let pk = BigInt::from(p).pow(level);

    let basis: OrderBasis = p_maximal_order(g, p)?;
    let cols = basis.columns_rational();

    // Power → order coordinate change (integer matrix).
    let winv = invert_rational(&cols).ok_or_else(|| OrderError::Internal("order basis singular".into()))?;
    let mut to_order = vec![vec![BigInt::zero(); n]; n];
    for (j, col) in winv.iter().enumerate() {
        for (i, q) in col.iter().enumerate() {
            if !q.is_integer() {
                return Err(OrderError::Internal("power basis not contained in order".into()));
            }
            to_order[i][j] = q.to_integer().mod_floor(&pk);
        }
    }

    // Structure constants of O mod p^k in order coordinates.
    let gq = g.to_qpoly();
    let mut strc = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let prod = basis.element(i).mul(&basis.element(j)).rem(&gq);
            let mut t = prod.coeffs().to_vec();
            t.resize(n, BigRational::zero());
            let x = solve_rational(&cols, &t).ok_or_else(|| OrderError::Internal("order basis singular".into()))?;
            let v: Vec<BigInt> = x
                .iter()
                .map(|q| rational_mod_pk(q, &pk))
                .collect::<Result<_, _>>()?;
            strc[i][j] = v.clone();
            strc[j][i] = v;
        }
    }
    let mut one_t = vec![BigRational::zero(); n];
    one_t[0] = BigRational::one();
    let one_order: Vec<BigInt> = solve_rational(&cols, &one_t)
        .ok_or_else(|| OrderError::Internal("order basis singular".into()))?
        .iter()
        .map(|q| rational_mod_pk(q, &pk))
        .collect::<Result<_, _>>()?;

    let rk = RkAlgebra { n, pk: pk.clone(), mul: strc, one: one_order.clone() };

    // Level-1 algebra and its radical.
    let alg1 = rk.reduce_mod_p(p);
    let rad = alg1.radical();

    // Primitive idempotents mod p, lifted to mod p^k.
    let idems1 = primitive_idempotents(&alg1, &rad)?;
    let mut idems = Vec::new();
    for (e1, d) in &idems1 {
        let ek = rk.lift_idempotent(e1, p, level)?;
        idems.push((ek, *d));
    }
    // Σ ê = 1 sanity.
    {
        let mut s = vec![BigInt::zero(); n];
        for (e, _) in &idems {
            for (a, b) in s.iter_mut().zip(e.iter()) {
                *a = (&*a + b).mod_floor(&pk);
            }
        }
        if s != one_order {
            return Err(OrderError::Internal("idempotents do not sum to 1".into()));
        }
    }

    // θ in order coordinates: the power-basis coordinates of x mod g pushed
    // through the coordinate change (x mod g is a constant when deg g = 1).
    let theta_power = QPoly::x().rem(&gq);
    let mut theta_pw = vec![BigInt::zero(); n];
    for (j, c) in theta_power.coeffs().iter().enumerate() {
        debug_assert!(c.is_integer());
        theta_pw[j] = c.to_integer().mod_floor(&pk);
    }
    let theta_order: Vec<BigInt> = (0..n)
        .map(|i| {
            let mut acc = BigInt::zero();
            for (c, x) in to_order[i].iter().zip(theta_pw.iter()) {
                acc += c * x;
            }
            acc.mod_floor(&pk)
        })
        .collect();

    let mut primes = Vec::new();
    for (ek, d) in idems {
        let pr = build_component(&rk, &rad, &ek, d, &theta_order, p, level)?;
        primes.push(pr);
    }
    // Consistency: Σ e·d = n.
    let total: usize = primes.iter().map(|pr| pr.n_i).sum();
    if total != n {
        return Err(OrderError::Internal("component dimensions do not sum to the degree".into()));
    }
    primes.sort_by_key(|pr| (pr.d, pr.e));
    Ok(General { n, to_order, primes })
}

fn rational_mod_pk(q: &BigRational, pk: &BigInt) -> Result<BigInt, OrderError> {
    let den = q.denom();
    let dinv = mod_inverse(&den.mod_floor(pk), pk)
        .ok_or_else(|| OrderError::Internal("non-p-integral coordinate".into()))?;
    Ok((q.numer().mod_floor(pk) * dinv).mod_floor(pk))
}

/// O/p^k·O with structure constants in order coordinates.
struct RkAlgebra {
    n: usize,
    pk: BigInt,
    mul: Vec<Vec<Vec<BigInt>>>,
    one: Vec<BigInt>,
}

impl RkAlgebra {
    fn mul_vec(&self, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.n];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                let c = (ai * bj).mod_floor(&self.pk);
                for (k, m) in self.mul[i][j].iter().enumerate() {
                    out[k] += &c * m;
                }
            }
        }
        for o in out.iter_mut() {
            *o = o.mod_floor(&self.pk);
        }
        out
    }

    fn reduce_mod_p(&self, p: u64) -> FpAlgebra {
        let pb = BigInt::from(p);
        let mul = self
            .mul
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| v.iter().map(|c| c.mod_floor(&pb).to_u64().unwrap()).collect())
                    .collect()
            })
            .collect();
        let one = self.one.iter().map(|c| c.mod_floor(&pb).to_u64().unwrap()).collect();
        FpAlgebra { p, n: self.n, mul, one }
    }

    /// Lift an idempotent mod p to an idempotent mod p^k.
    fn lift_idempotent(&self, e1: &[u64], p: u64, _level: u32) -> Result<Vec<BigInt>, OrderError> {
        let mut e: Vec<BigInt> = e1.iter().map(|&c| BigInt::from(c)).collect();
        let _ = p;
        for _ in 0..64 {
            let e2 = self.mul_vec(&e, &e);
            if e2 == e {
                return Ok(e);
            }
            // e ← 3e² − 2e³
            let e3 = self.mul_vec(&e2, &e);
            let mut next = vec![BigInt::zero(); self.n];
            for i in 0..self.n {
                next[i] = (BigInt::from(3) * &e2[i] - BigInt::from(2) * &e3[i]).mod_floor(&self.pk);
            }
            e = next;
        }
        Err(OrderError::Internal("idempotent lift failed to converge".into()))
    }
}

/// Primitive idempotents of O/pO with residue degrees, through the radical.
fn primitive_idempotents(alg: &FpAlgebra, rad: &[Vec<u64>]) -> Result<Vec<(Vec<u64>, usize)>, OrderError> {
    let p = alg.p;
    let n = alg.n;
    // Quotient S = A/rad.
    let (proj, lift, sdim) = quotient_space(rad, n, p);
    // Structure of S.
    let smul = |a: &[u64], b: &[u64]| -> Vec<u64> {
        let av = apply(&lift, a, p);
        let bv = apply(&lift, b, p);
        apply(&proj, &alg.mul_vec(&av, &bv), p)
    };
    let sone = apply(&proj, &alg.one, p);

    // Split S into fields by idempotents.
    let mut rng = ChaCha8Rng::seed_from_u64(0x0dde_55);
    let mut fields: Vec<(Vec<u64>, usize)> = Vec::new();
    let mut stack = vec![sone.clone()];
    while let Some(eps) = stack.pop() {
        // Subalgebra basis: span of ε·eⱼ.
        let mut span: Vec<Vec<u64>> = Vec::new();
        for j in 0..sdim {
            let mut ej = vec![0u64; sdim];
            ej[j] = 1;
            let v = smul(&eps, &ej);
            add_to_span(&mut span, v, p);
        }
        let t = span.len();
        if t == 1 {
            fields.push((eps, 1));
            continue;
        }
        let mut split = false;
        for _attempt in 0..500 {
            let z: Vec<u64> = {
                let r: Vec<u64> = (0..sdim).map(|_| rng.gen_range(0..p)).collect();
                smul(&eps, &r)
            };
            // Minimal polynomial of z on εS with identity ε.
            let mut pows: Vec<Vec<u64>> = vec![eps.clone()];
            let mut span2: Vec<Vec<u64>> = Vec::new();
            add_to_span(&mut span2, eps.clone(), p);
            let mut cur = eps.clone();
            let mpoly;
            loop {
                cur = smul(&cur, &z);
                if !add_to_span(&mut span2, cur.clone(), p) {
                    // cur depends on previous powers: solve for coefficients.
                    let cols: Vec<Vec<u64>> = pows.clone();
                    let coeffs = solve_fp(&cols, &cur, p)
                        .ok_or_else(|| OrderError::Internal("minpoly dependency solve failed".into()))?;
                    // minpoly = x^deg − Σ coeffs_i x^i.
                    let mut mp = vec![0u64; pows.len() + 1];
                    for (i, c) in coeffs.iter().enumerate() {
                        mp[i] = (p - c % p) % p;
                    }
                    mp[pows.len()] = 1;
                    mpoly = FpPoly::new(p, mp);
                    break;
                }
                pows.push(cur.clone());
            }
            let (_, fac) = mpoly.factor();
            if fac.iter().any(|(_, m)| *m > 1) {
                return Err(OrderError::Internal("non-squarefree minimal polynomial in semisimple quotient".into()));
            }
            if fac.len() == 1 {
                let dm = fac[0].0.degree().unwrap();
                if dm == t {
                    fields.push((eps.clone(), t));
                    split = true;
                    break;
                }
                continue; // z generates a proper subfield; retry.
            }
            // CRT idempotents of F_p[z].
            for (mi, _) in &fac {
                let rest = mpoly.divrem(mi).0;
                // hᵢ = rest · (rest⁻¹ mod mᵢ); εᵢ = hᵢ(z).
                let (gg, s, _t) = fp_xgcd2(&rest, mi);
                if gg.degree() != Some(0) {
                    return Err(OrderError::Internal("CRT factors not coprime".into()));
                }
                let ginv = fp_inv(gg.coeff(0), p);
                let hi = rest.mul(&s.scale(ginv)).rem(&mpoly);
                // Evaluate at z with ε as identity.
                let mut acc = vec![0u64; sdim];
                for (k, &c) in hi.coeffs().iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    // c·z^k·ε  — powers: pows[k] when k < len, else extend.
                    let zk = if k < pows.len() {
                        pows[k].clone()
                    } else {
                        let mut v = pows.last().unwrap().clone();
                        for _ in pows.len()..=k {
                            v = smul(&v, &z);
                        }
                        v
                    };
                    for (a, b) in acc.iter_mut().zip(zk.iter()) {
                        *a = (*a + (c as u128 * *b as u128 % p as u128) as u64) % p;
                    }
                }
                stack.push(acc);
            }
            split = true;
            break;
        }
        if !split {
            return Err(OrderError::Internal("failed to split semisimple algebra".into()));
        }
    }

    // Map field idempotents back to A and lift through the radical.
    let mut out = Vec::new();
    for (eps, d) in fields {
        let mut e = apply(&lift, &eps, p);
        for _ in 0..64 {
            let e2 = alg.mul_vec(&e, &e);
            if e2 == e {
                break;
            }
            let e3 = alg.mul_vec(&e2, &e);
            let mut next = vec![0u64; n];
            for i in 0..n {
                let v = (3 * e2[i] as u128 % p as u128 + 2 * p as u128 * p as u128
                    - 2 * e3[i] as u128 % p as u128)
                    % p as u128;
                next[i] = v as u64;
            }
            e = next;
        }
        if alg.mul_vec(&e, &e) != e {
            return Err(OrderError::Internal("idempotent lift through radical failed".into()));
        }
        out.push((e, d));
    }
    Ok(out)
}

/// Row-reduced quotient by the span of `rad`: returns (proj, lift, dim) where
/// proj maps A-coords to quotient coords and lift is a section.
fn quotient_space(rad: &[Vec<u64>], n: usize, p: u64) -> (Vec<Vec<u64>>, Vec<Vec<u64>>, usize) {
    // Echelonize rad as rows.
    let mut rows: Vec<Vec<u64>> = rad.to_vec();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0usize;
    for c in 0..n {
        let piv = (r..rows.len()).find(|&i| rows[i][c] != 0);
        let Some(piv) = piv else { continue };
        rows.swap(r, piv);
        let inv = fp_inv(rows[r][c], p);
        for x in rows[r].iter_mut() {
            *x = (*x as u128 * inv as u128 % p as u128) as u64;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] != 0 {
                let f = rows[i][c];
                for k in 0..n {
                    let t = rows[r][k] as u128 * f as u128 % p as u128;
                    rows[i][k] = ((rows[i][k] as u128 + p as u128 - t) % p as u128) as u64;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let sdim = free.len();
    // proj: v ↦ coordinates at free positions after eliminating pivot coords.
    // proj matrix rows: for each free index fi: e_fi − Σ corrections.
    let mut proj = vec![vec![0u64; n]; sdim];
    for (k, &fi) in free.iter().enumerate() {
        proj[k][fi] = 1;
        // Eliminate contributions of pivots: v − Σ v[pivot]·row has the same
        // class; its free coords are v[fi] − Σ v[pivots]·row[fi].
        for (ri, &pc) in pivots.iter().enumerate() {
            let c = rows[ri][fi];
            if c != 0 {
                proj[k][pc] = (p - c) % p;
            }
        }
    }
    // lift: quotient basis vector k ↦ e_{free[k]}.
    let mut lift = vec![vec![0u64; sdim]; n];
    for (k, &fi) in free.iter().enumerate() {
        lift[fi][k] = 1;
    }
    (proj, lift, sdim)
}

/// Apply a row-major matrix over F_p.
fn apply(m: &[Vec<u64>], v: &[u64], p: u64) -> Vec<u64> {
    m.iter()
        .map(|row| {
            let mut acc = 0u128;
            for (c, x) in row.iter().zip(v.iter()) {
                acc = (acc + *c as u128 * *x as u128) % p as u128;
            }
            acc as u64
        })
        .collect()
}

/// Gaussian incremental span; returns false if v was already in the span.
fn add_to_span(span: &mut Vec<Vec<u64>>, mut v: Vec<u64>, p: u64) -> bool {
    for b in span.iter() {
        let piv = b.iter().position(|&x| x != 0).unwrap();
        if v[piv] != 0 {
            let f = (v[piv] as u128 * fp_inv(b[piv], p) as u128 % p as u128) as u64;
            for (x, y) in v.iter_mut().zip(b.iter()) {
                let t = f as u128 * *y as u128 % p as u128;
                *x = ((*x as u128 + p as u128 - t) % p as u128) as u64;
            }
        }
    }
    if v.iter().all(|&x| x == 0) {
        return false;
    }
    span.push(v);
    // Keep rows reduced against each other for stable pivots.
    span.sort_by_key(|b| b.iter().position(|&x| x != 0).unwrap());
    true
}

/// Solve Σ xⱼ·colⱼ = b over F_p.
fn solve_fp(cols: &[Vec<u64>], b: &[u64], p: u64) -> Option<Vec<u64>> {
    let n = b.len();
    let m = cols.len();
    let mut a: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            let mut row: Vec<u64> = (0..m).map(|j| cols[j][i]).collect();
            row.push(b[i]);
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m {
        let piv = (r..n).find(|&i| a[i][c] != 0);
        let Some(piv) = piv else { continue };
        a.swap(r, piv);
        let inv = fp_inv(a[r][c], p);
        for x in a[r].iter_mut() {
            *x = (*x as u128 * inv as u128 % p as u128) as u64;
        }
        for i in 0..n {
            if i != r && a[i][c] != 0 {
                let f = a[i][c];
                for k in 0..=m {
                    let t = a[r][k] as u128 * f as u128 % p as u128;
                    a[i][k] = ((a[i][k] as u128 + p as u128 - t) % p as u128) as u64;
                }
            }
        }
        pivots.push((r, c));
        r += 1;
    }
    for i in r..n {
        if a[i][m] != 0 {
            return None;
        }
    }
    let mut x = vec![0u64; m];
    for (r, c) in pivots {
        x[c] = a[r][m];
    }
    Some(x)
}

fn fp_xgcd2(a: &FpPoly, b: &FpPoly) -> (FpPoly, FpPoly, FpPoly) {
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

fn build_component(
    rk: &RkAlgebra,
    rad: &[Vec<u64>],
    ek: &[BigInt],
    d: usize,
    theta_order: &[BigInt],
    p: u64,
    level: u32,
) -> Result<GeneralPrime, OrderError> {
    let n = rk.n;
    let pk = &rk.pk;
    let pb = BigInt::from(p);

    // Projector columns ê·eⱼ.
    let ecols: Vec<Vec<BigInt>> = (0..n)
        .map(|j| {
            let mut ej = vec![BigInt::zero(); n];
            ej[j] = BigInt::one();
            rk.mul_vec(ek, &ej)
        })
        .collect();

    // Extract a free basis of the image using unit pivots.
    let mut basis: Vec<Vec<BigInt>> = Vec::new();
    let mut pivrows: Vec<usize> = Vec::new();
    for col in &ecols {
        let mut c = col.clone();
        for (b, &pr) in basis.iter().zip(pivrows.iter()) {
            if !c[pr].is_zero() {
                let binv = mod_inverse(&b[pr], pk).expect("unit pivot");
                let f = (&c[pr] * &binv).mod_floor(pk);
                for (x, y) in c.iter_mut().zip(b.iter()) {
                    *x = (&*x - &f * y).mod_floor(pk);
                }
            }
        }
        // A unit entry in an unused row makes this a new basis vector.
        let unit_row = (0..n).find(|&r| !pivrows.contains(&r) && !(&c[r] % &pb).is_zero());
        if let Some(r) = unit_row {
            basis.push(c);
            pivrows.push(r);
        }
    }
    let n_i = basis.len();
    if n_i == 0 {
        return Err(OrderError::Internal("empty component".into()));
    }

    // proj = (pivot-submatrix)⁻¹ · E_pivotrows.
    let sub: Vec<Vec<BigInt>> = pivrows.iter().map(|&r| basis.iter().map(|b| b[r].clone()).collect()).collect();
    let subinv = invert_mod_pk(&sub, pk).ok_or_else(|| OrderError::Internal("component pivot submatrix singular".into()))?;
    // E rows at pivot rows: E is the matrix with columns ecols.
    let mut proj = vec![vec![BigInt::zero(); n]; n_i];
    for (ri, row) in proj.iter_mut().enumerate() {
        for j in 0..n {
            let mut acc = BigInt::zero();
            for (t, &prow) in pivrows.iter().enumerate() {
                acc += &subinv[ri][t] * &ecols[j][prow];
            }
            row[j] = acc.mod_floor(pk);
        }
    }

    let project = |v: &[BigInt]| -> Vec<BigInt> {
        proj.iter()
            .map(|row| {
                let mut acc = BigInt::zero();
                for (c, x) in row.iter().zip(v.iter()) {
                    acc += c * x;
                }
                acc.mod_floor(pk)
            })
            .collect()
    };

    // Component structure constants and distinguished elements.
    let mut mul = vec![vec![Vec::new(); n_i]; n_i];
    for i in 0..n_i {
        for j in 0..=i {
            let prod = rk.mul_vec(&basis[i], &basis[j]);
            let v = project(&prod);
            mul[i][j] = v.clone();
            mul[j][i] = v;
        }
    }
    let one = project(ek);
    let theta = project(&rk.mul_vec(ek, theta_order));
    let e = n_i / d;
    if e * d != n_i {
        return Err(OrderError::Internal("component dimension not divisible by residue degree".into()));
    }

    let tmp = GeneralPrime {
        e,
        d,
        n_i,
        proj,
        mul,
        one: one.clone(),
        pi: Vec::new(),
        mpi: Vec::new(),
        completion: ZPoly::zero(),
        sq: SquareData::Odd { qm1_half: BigUint::one() },
    };

    // Uniformizer.
    let pi: Vec<BigInt> = if e == 1 {
        one.iter().map(|c| (c * &pb).mod_floor(pk)).collect()
    } else {
        // Component image of the radical mod p; pick an element outside rad².
        let rad_comp: Vec<Vec<u64>> = rad
            .iter()
            .map(|r| {
                let ri: Vec<BigInt> = r.iter().map(|&c| BigInt::from(c)).collect();
                let v = rk.mul_vec(ek, &ri);
                let cv = tmp_project_mod_p(&tmp, &v, p, pk);
                cv
            })
            .collect();
        let mut rspan: Vec<Vec<u64>> = Vec::new();
        for r in rad_comp {
            add_to_span(&mut rspan, r, p);
        }
        // rad² span.
        let mut r2span: Vec<Vec<u64>> = Vec::new();
        for a in rspan.iter() {
            for b in rspan.iter() {
                let ab = tmp_mul_mod_p(&tmp, a, b, p, pk);
                add_to_span(&mut r2span, ab, p);
            }
        }
        let cand = rspan
            .iter()
            .find(|v| {
                let mut probe = r2span.clone();
                add_to_span(&mut probe, (*v).clone(), p)
            })
            .ok_or_else(|| OrderError::Internal("no uniformizer candidate outside rad²".into()))?;
        cand.iter().map(|&c| BigInt::from(c)).collect()
    };

    let mut mpi = vec![vec![BigInt::zero(); n_i]; n_i];
    for j in 0..n_i {
        let mut ej = vec![BigInt::zero(); n_i];
        ej[j] = BigInt::one();
        let col = tmp.mul_vec(&pi, &ej, pk);
        for (i, c) in col.into_iter().enumerate() {
            mpi[i][j] = c;
        }
    }

    // Completion defining polynomial: charpoly of multiplication by θ.
    let mut mtheta = vec![vec![BigInt::zero(); n_i]; n_i];
    for j in 0..n_i {
        let mut ej = vec![BigInt::zero(); n_i];
        ej[j] = BigInt::one();
        let col = tmp.mul_vec(&theta, &ej, pk);
        for (i, c) in col.into_iter().enumerate() {
            mtheta[i][j] = c;
        }
    }
    let cp = charpoly_mod_pk(&mtheta, p, level);
    let completion = ZPoly::from_coeffs(cp);

    let mut prime = GeneralPrime { pi: pi.clone(), mpi, completion, ..tmp };

    // Verify ord_P(p) = e.
    {
        let pvec: Vec<BigInt> = prime.one.iter().map(|c| (c * &pb).mod_floor(pk)).collect();
        let v = prime.ord(pvec, p, level, 0)?;
        if v != e as i64 {
            return Err(OrderError::Internal(format!("ord_P(p) = {v}, expected e = {e}")));
        }
    }

    // Square-class data.
    prime.sq = if p != 2 {
        let q = BigUint::from(p).pow(d as u32);
        SquareData::Odd { qm1_half: (&q - 1u32) / 2u32 }
    } else {
        build_two_adic_classes(&prime, level, pk)?
    };

    Ok(prime)
}

fn tmp_project_mod_p(pr: &GeneralPrime, v: &[BigInt], p: u64, pk: &BigInt) -> Vec<u64> {
    let pb = BigInt::from(p);
    pr.proj
        .iter()
        .map(|row| {
            let mut acc = BigInt::zero();
            for (c, x) in row.iter().zip(v.iter()) {
                acc += c * x;
            }
            acc.mod_floor(pk).mod_floor(&pb).to_u64().unwrap()
        })
        .collect()
}

fn tmp_mul_mod_p(pr: &GeneralPrime, a: &[u64], b: &[u64], p: u64, pk: &BigInt) -> Vec<u64> {
    let ab: Vec<BigInt> = pr.mul_vec(
        &a.iter().map(|&c| BigInt::from(c)).collect::<Vec<_>>(),
        &b.iter().map(|&c| BigInt::from(c)).collect::<Vec<_>>(),
        pk,
    );
    let pb = BigInt::from(p);
    ab.iter().map(|c| c.mod_floor(&pb).to_u64().unwrap()).collect()
}

/// Compact u128 mirror of a 2-adic component, used to build the unit
/// square-class tables quickly (entries are < 2^level ≤ 2^48 here).
struct CompU {
    n: usize,
    mask: u128,
    mul: Vec<Vec<Vec<u128>>>,
    one: Vec<u128>,
}

impl CompU {
    fn from_prime(pr: &GeneralPrime, level: u32, pk: &BigInt) -> Result<CompU, OrderError> {
        if level > 48 {
            return Err(OrderError::Internal("2-adic class tables need level ≤ 48".into()));
        }
        let conv = |v: &BigInt| -> u128 { v.mod_floor(pk).to_u128().unwrap() };
        let mul = pr
            .mul
            .iter()
            .map(|row| row.iter().map(|v| v.iter().map(conv).collect()).collect())
            .collect();
        let one = pr.one.iter().map(conv).collect();
        Ok(CompU { n: pr.n_i, mask: (1u128 << level) - 1, mul, one })
    }

    fn mul_vec(&self, a: &[u128], b: &[u128]) -> Vec<u128> {
        let mut out = vec![0u128; self.n];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                if bj == 0 {
                    continue;
                }
                let c = (ai * bj) & self.mask;
                for (k, &m) in self.mul[i][j].iter().enumerate() {
                    out[k] = (out[k] + c.wrapping_mul(m)) & self.mask;
                }
            }
        }
        out
    }
}

/// Howell-style reduction data in u128 coordinates.
struct HowellU {
    rows: Vec<(usize, u32, Vec<u128>)>,
    mask: u128,
}

impl HowellU {
    fn from_big(basis: &[(usize, u32, Vec<BigInt>)], level: u32, pk: &BigInt) -> HowellU {
        let rows = basis
            .iter()
            .map(|(r, s, col)| (*r, *s, col.iter().map(|c| c.mod_floor(pk).to_u128().unwrap()).collect()))
            .collect();
        HowellU { rows, mask: (1u128 << level) - 1 }
    }

    fn reduce(&self, v: &[u128]) -> Vec<u128> {
        let mut out: Vec<u128> = v.iter().map(|&x| x & self.mask).collect();
        for (row, s, col) in &self.rows {
            let q = out[*row] >> s;
            if q != 0 {
                for (x, &c) in out.iter_mut().zip(col.iter()) {
                    *x = x.wrapping_sub(q.wrapping_mul(c)) & self.mask;
                }
            }
        }
        out
    }
}

/// Unit square-class tables of a 2-adic completion: canonical representatives
/// in C/π^m with m = 2e+1, square cosets, F₂ coordinates and the unramified
/// class set.
fn build_two_adic_classes(pr: &GeneralPrime, level: u32, pk: &BigInt) -> Result<SquareData, OrderError> {
    let p = 2u64;
    let e = pr.e;
    let n_i = pr.n_i;
    let m = 2 * e + 1;

    // Spans of π^m·C, π^(2e)·C and π·C as Howell bases.
    let pow_cols = |t: usize| -> Vec<Vec<BigInt>> {
        (0..n_i)
            .map(|j| {
                let mut v = vec![BigInt::zero(); n_i];
                v[j] = BigInt::one();
                for _ in 0..t {
                    v = pr.mul_vec(&pr.pi, &v, pk);
                }
                v
            })
            .collect()
    };
    let howell_m = howell_basis(pow_cols(m), n_i, p, level);
    let howell_1 = howell_basis(pow_cols(1), n_i, p, level);

    let comp = CompU::from_prime(pr, level, pk)?;
    let hm = HowellU::from_big(&howell_m, level, pk);
    let h1 = HowellU::from_big(&howell_1, level, pk);
    let pi_u: Vec<u128> = pr.pi.iter().map(|c| c.mod_floor(pk).to_u128().unwrap()).collect();

    // Canonical representatives of C/π^m from the pivot structure: the entry
    // at pivot row r ranges over [0, 2^s_r); every row must carry a pivot.
    let mut pivot_pow = vec![u32::MAX; n_i];
    for (row, s, _) in &howell_m {
        pivot_pow[*row] = *s;
    }
    if pivot_pow.iter().any(|&s| s == u32::MAX) {
        return Err(OrderError::Internal("π^m span is not of finite index".into()));
    }
    let total_bits: u32 = pivot_pow.iter().sum();
    if total_bits > 22 {
        return Err(OrderError::Internal(format!("unit class table too large: 2^{total_bits}")));
    }
    let mut reps: Vec<Vec<u128>> = vec![vec![0u128; n_i]];
    for (row, &bits) in pivot_pow.iter().enumerate() {
        let mut next = Vec::with_capacity(reps.len() << bits);
        for rep in &reps {
            for v in 0..(1u128 << bits) {
                let mut r = rep.clone();
                r[row] = v;
                next.push(r);
            }
        }
        reps = next;
    }

    let is_unit = |v: &[u128]| -> bool { h1.reduce(v).iter().any(|&c| c != 0) };

    // Square cosets.
    let mut squares: Vec<Vec<u128>> = Vec::new();
    let mut square_set: std::collections::HashSet<Vec<u128>> = std::collections::HashSet::new();
    for u in reps.iter().filter(|v| is_unit(v)) {
        let s = hm.reduce(&comp.mul_vec(u, u));
        if square_set.insert(s.clone()) {
            squares.push(s);
        }
    }
    let mut class_of_u: HashMap<Vec<u128>, u32> = HashMap::new();
    let mut class_reps: Vec<Vec<u128>> = Vec::new();
    for u in reps.iter().filter(|v| is_unit(v)) {
        let ur = hm.reduce(u);
        if class_of_u.contains_key(&ur) {
            continue;
        }
        let id = class_reps.len() as u32;
        for s in &squares {
            class_of_u.insert(hm.reduce(&comp.mul_vec(&ur, s)), id);
        }
        class_reps.push(ur);
    }
    let class_count = class_reps.len();
    let bits_len = n_i + 1;
    if class_count != (1usize << bits_len) {
        return Err(OrderError::Internal(format!(
            "unit square-class count {class_count} ≠ 2^{bits_len}"
        )));
    }

    // F₂ coordinates by extending a basis over the class group.
    let mul_class = |a: u32, b: u32| -> u32 {
        let prod = comp.mul_vec(&class_reps[a as usize], &class_reps[b as usize]);
        class_of_u[&hm.reduce(&prod)]
    };
    let one_id = class_of_u[&hm.reduce(&comp.one)];
    let mut class_bits: Vec<Option<Vec<bool>>> = vec![None; class_count];
    class_bits[one_id as usize] = Some(vec![false; bits_len]);
    let mut basis_count = 0usize;
    for id in 0..class_count as u32 {
        if class_bits[id as usize].is_some() {
            continue;
        }
        let assigned: Vec<(u32, Vec<bool>)> = class_bits
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.clone().map(|b| (i as u32, b)))
            .collect();
        for (i, b) in assigned {
            let mut nb = b;
            nb[basis_count] = true;
            let target = mul_class(i, id);
            if class_bits[target as usize].is_none() {
                class_bits[target as usize] = Some(nb);
            }
        }
        basis_count += 1;
        if basis_count > bits_len {
            return Err(OrderError::Internal("unit class group rank exceeded expectation".into()));
        }
    }
    if basis_count != bits_len {
        return Err(OrderError::Internal("unit class group rank below expectation".into()));
    }
    let class_bits: Vec<Vec<bool>> = class_bits.into_iter().map(|b| b.unwrap()).collect();

    // Unramified unit classes: classes meeting 1 + π^(2e)·C. The image of
    // π^(2e)·C in C/π^m has exactly 2^d elements, so the scan stops once all
    // are seen.
    let mut unramified = vec![false; class_count];
    let mut seen = std::collections::HashSet::new();
    for r in &reps {
        let mut v = r.clone();
        for _ in 0..(2 * e) {
            v = comp.mul_vec(&pi_u, &v);
        }
        let w: Vec<u128> = comp.one.iter().zip(v.iter()).map(|(&o, &x)| (o + x) & comp.mask).collect();
        let wr = hm.reduce(&w);
        if !seen.insert(wr.clone()) {
            continue;
        }
        if let Some(&id) = class_of_u.get(&wr) {
            unramified[id as usize] = true;
        }
        if seen.len() == 1usize << pr.d {
            break;
        }
    }
    let unram_count = unramified.iter().filter(|&&b| b).count();
    if unram_count != 2 {
        return Err(OrderError::Internal(format!("expected 2 unramified unit classes, found {unram_count}")));
    }

    // Re-key the class map with BigInt vectors for lookups from ord_and_unit.
    let class_of: HashMap<Vec<BigInt>, u32> =
        class_of_u.into_iter().map(|(k, v)| (k.into_iter().map(BigInt::from).collect(), v)).collect();

    Ok(SquareData::Two { howell_m, class_of, class_bits, unramified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orders::{field_at_p, with_precision};

    fn q(coeffs: &[i64]) -> QPoly {
        QPoly::from_i64(coeffs)
    }

    #[test]
    fn split_primes_in_quadratic_field() {
        // x²+1: 5 splits, 3 inert, 2 ramified.
        let g = ZPoly::from_i64(&[1, 0, 1]);
        let f5 = field_at_p(&g, 5, 6).unwrap();
        assert_eq!(f5.prime_count(), 2);
        assert!(f5.infos().iter().all(|i| i.e == 1 && i.d == 1));

        let f3 = field_at_p(&g, 3, 6).unwrap();
        assert_eq!(f3.prime_count(), 1);
        assert_eq!(f3.info(0), LocalPrimeInfo { e: 1, d: 2, unit_bits: 1 });

        let f2 = field_at_p(&g, 2, 6).unwrap();
        assert_eq!(f2.prime_count(), 1);
        assert_eq!(f2.info(0).e, 2);
        assert_eq!(f2.info(0).d, 1);
    }

    #[test]
    fn ramified_odd_prime() {
        // x² − 5 at 5: ramified; ord of √5 is 1, ord of 5 is 2.
        let g = ZPoly::from_i64(&[-5, 0, 1]);
        let f = field_at_p(&g, 5, 6).unwrap();
        assert_eq!(f.prime_count(), 1);
        assert_eq!(f.info(0).e, 2);
        let theta = q(&[0, 1]);
        assert_eq!(f.ord_at(0, &theta).unwrap(), 1);
        assert_eq!(f.ord_at(0, &q(&[5])).unwrap(), 2);
        assert_eq!(f.ord_at(0, &q(&[1, 1])).unwrap(), 0);
    }

    #[test]
    fn quadratic_unramified_squares_at_3() {
        // In Q_9 = Q_3(i): −1 is a square (i ∈ Q_9), 3 is not.
        let g = ZPoly::from_i64(&[1, 0, 1]);
        let f = field_at_p(&g, 3, 8).unwrap();
        assert!(f.is_square_at(0, &q(&[-1])).unwrap());
        assert!(!f.is_square_at(0, &q(&[3])).unwrap());
        assert!(f.is_square_at(0, &q(&[9])).unwrap());
        // θ = i: i = (unit)² in Q_9? i has order 4 in μ_8 ⊆ Q_9*: yes, i is a
        // square (μ_8 is cyclic of order 8).
        assert!(f.is_square_at(0, &q(&[0, 1])).unwrap());
    }

    #[test]
    fn rational_squares_in_q2() {
        // Degree-1 "field": K = Q via g = x. Classes in Q_2*.
        let g = ZPoly::from_i64(&[0, 1]);
        let f = field_at_p(&g, 2, 8).unwrap();
        assert_eq!(f.prime_count(), 1);
        assert_eq!(f.info(0), LocalPrimeInfo { e: 1, d: 1, unit_bits: 2 });
        assert!(f.is_square_at(0, &q(&[17])).unwrap());
        assert!(!f.is_square_at(0, &q(&[2])).unwrap());
        assert!(!f.is_square_at(0, &q(&[3])).unwrap());
        assert!(!f.is_square_at(0, &q(&[5])).unwrap());
        assert!(!f.is_square_at(0, &q(&[-1])).unwrap());
        assert!(f.is_square_at(0, &q(&[4])).unwrap());
        // Unramified: 5 yes (Q_2(√5)/Q_2 unramified), 3 no, 2 no.
        assert!(f.is_unramified_at(0, &q(&[5])).unwrap());
        assert!(f.is_unramified_at(0, &q(&[1])).unwrap());
        assert!(!f.is_unramified_at(0, &q(&[3])).unwrap());
        assert!(!f.is_unramified_at(0, &q(&[2])).unwrap());
        assert!(!f.is_unramified_at(0, &q(&[-1])).unwrap());
        assert!(f.is_unramified_at(0, &q(&[20])).unwrap()); // 4·5
    }

    #[test]
    fn odd_prime_unramified_iff_even_ord() {
        let g = ZPoly::from_i64(&[0, 1]);
        let f = field_at_p(&g, 7, 8).unwrap();
        assert!(f.is_unramified_at(0, &q(&[3])).unwrap());
        assert!(!f.is_unramified_at(0, &q(&[7])).unwrap());
        assert!(f.is_unramified_at(0, &q(&[49])).unwrap());
        assert!(!f.is_square_at(0, &q(&[3])).unwrap()); // 3 is not a QR mod 7
        assert!(f.is_square_at(0, &q(&[2])).unwrap()); // 2 = 3² − 7
    }

    #[test]
    fn paper_prime_splitting_shape() {
        // The monicized sextic y⁶+16y+64 (from 2x⁶+x+2): 2 factors as P·Q⁵.
        let g = ZPoly::from_i64(&[64, 16, 0, 0, 0, 0, 1]);
        let f = with_precision(&g, 2, 8, |d| {
            Ok(d.infos())
        })
        .unwrap();
        let mut shapes: Vec<(usize, usize)> = f.iter().map(|i| (i.e, i.d)).collect();
        shapes.sort();
        assert_eq!(shapes, vec![(1, 1), (5, 1)]);
    }

    #[test]
    fn class_coords_are_homomorphic() {
        use rand::{Rng, SeedableRng};
        let g = ZPoly::from_i64(&[1, 0, 1]);
        for p in [2u64, 3, 5] {
            let f = field_at_p(&g, p, 8).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17 + p);
            for i in 0..f.prime_count() {
                for _ in 0..40 {
                    let a = q(&[rng.gen_range(-9i64..=9), rng.gen_range(-9..=9)]);
                    let b = q(&[rng.gen_range(-9i64..=9), rng.gen_range(-9..=9)]);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    let ab = a.mul(&b);
                    let (ca, cb, cab) = match (
                        f.class_coords(i, &a),
                        f.class_coords(i, &b),
                        f.class_coords(i, &ab),
                    ) {
                        (Ok(x), Ok(y), Ok(z)) => (x, y, z),
                        _ => continue,
                    };
                    let sum: Vec<bool> = ca.iter().zip(cb.iter()).map(|(x, y)| x ^ y).collect();
                    assert_eq!(sum, cab, "p={p} a={a:?} b={b:?}");
                }
            }
        }
    }

    #[test]
    fn square_multiples_have_trivial_relative_class() {
        use rand::{Rng, SeedableRng};
        // is_square(a·b²) == is_square(a) over several fields and primes.
        let gs = [ZPoly::from_i64(&[1, 0, 1]), ZPoly::from_i64(&[-2, 0, 1]), ZPoly::from_i64(&[2, 3, 0, 1])];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for g in &gs {
            let n = g.degree().unwrap();
            for p in [2u64, 3, 7] {
                let f = field_at_p(g, p, 9).unwrap();
                for i in 0..f.prime_count() {
                    let mut done = 0;
                    while done < 25 {
                        let a = QPoly::from_i64(&(0..n).map(|_| rng.gen_range(-9i64..=9)).collect::<Vec<_>>());
                        let b = QPoly::from_i64(&(0..n).map(|_| rng.gen_range(-9i64..=9)).collect::<Vec<_>>());
                        if a.is_zero() || b.is_zero() || a.rem(&g.to_qpoly()).is_zero() || b.rem(&g.to_qpoly()).is_zero() {
                            continue;
                        }
                        let ab2 = a.mul(&b).mul(&b);
                        let (sa, sab2) = match (f.is_square_at(i, &a), f.is_square_at(i, &ab2)) {
                            (Ok(x), Ok(y)) => (x, y),
                            _ => continue,
                        };
                        assert_eq!(sa, sab2);
                        done += 1;
                    }
                }
            }
        }
    }

    #[test]
    fn eisenstein_quintic_at_2() {
        // x⁵ − 2: totally ramified at 2: e = 5, d = 1.
        let g = ZPoly::from_i64(&[-2, 0, 0, 0, 0, 1]);
        let f = field_at_p(&g, 2, 8).unwrap();
        assert_eq!(f.prime_count(), 1);
        assert_eq!(f.info(0).e, 5);
        assert_eq!(f.info(0).d, 1);
        assert_eq!(f.ord_at(0, &q(&[0, 1])).unwrap(), 1);
        assert_eq!(f.ord_at(0, &q(&[2])).unwrap(), 5);
        // θ⁵ = 2, so 2·θ⁻⁵ = 1 exactly: 2/θ⁵ must be a square (it is 1).
        let theta5 = q(&[0, 0, 0, 0, 0, 1]);
        assert_eq!(f.ord_at(0, &theta5).unwrap(), 5);
    }

    #[test]
    fn unit_square_class_counts() {
        // p odd: 4 classes per factor; p = 2: 2^(2+[L:Q2]).
        // Checked via unit_bits: total classes = 2^(1+unit_bits).
        for (coeffs, p, expect_bits) in [
            (vec![1i64, 0, 1], 3u64, 1usize), // unramified quadratic, odd p
            (vec![1, 0, 1], 2, 3),            // L = Q2(i): 2^(2+2) = 16 = 2^(1+3)
            (vec![0, 1], 2, 2),               // L = Q2: 2^(2+1) = 8 = 2^(1+2)
            (vec![-2, 0, 1], 2, 3),           // L = Q2(√2)
        ] {
            let g = ZPoly::from_coeffs(coeffs.iter().map(|&c| BigInt::from(c)).collect());
            let f = field_at_p(&g, p, 8).unwrap();
            assert_eq!(f.info(0).unit_bits, expect_bits, "poly {coeffs:?} at {p}");
        }
    }
}
