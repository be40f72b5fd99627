//! Exact arithmetic substrate: arbitrary-precision rationals, univariate
//! polynomials over Q, factorization over Q, integer factorization, and real
//! root isolation with Sturm sequences.
//!
//! All values are immutable after construction and all operations are pure.

mod factor;
mod intfactor;
mod modp;
mod poly;
mod roots;

pub use factor::{factor_over_q, hensel_lift_monic_coprime, Factorization};
pub use intfactor::{integer_factor, is_prime, primes_up_to, FactorBudget, IntFactorError, PrimeFactors};
pub use modp::FpPoly;
pub use poly::{QPoly, ZPoly};
pub use roots::{real_roots, sign_at_root, RealRoot};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("the zero polynomial is not a valid input")]
    ZeroPolynomial,
    #[error("polynomial has non-integral coefficients")]
    NonIntegral,
    #[error("polynomial is not squarefree")]
    NotSquarefree,
    #[error("degree {0} is too small for a curve model (need at least 3)")]
    DegreeTooSmall(usize),
}

/// A hyperelliptic curve model y² = f(x) with integral squarefree f.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveModel {
    f: ZPoly,
    genus: usize,
}

impl CurveModel {
    pub fn new(f: ZPoly) -> Result<Self, ExactError> {
        let n = f.degree().ok_or(ExactError::ZeroPolynomial)?;
        if n < 3 {
            return Err(ExactError::DegreeTooSmall(n));
        }
        if f.to_qpoly().discriminant().is_zero() {
            return Err(ExactError::NotSquarefree);
        }
        Ok(CurveModel { f, genus: (n - 1) / 2 })
    }

    pub fn f(&self) -> &ZPoly {
        &self.f
    }

    pub fn degree(&self) -> usize {
        self.f.degree().unwrap()
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn leading_coeff(&self) -> &BigInt {
        self.f.lc().unwrap()
    }

    /// True when the desingularized model has rational points above x = ∞,
    /// i.e. when deg f is odd or the leading coefficient is a rational square.
    pub fn has_rational_infinity(&self) -> bool {
        self.degree() % 2 == 1 || is_rational_square_int(self.leading_coeff())
    }
}

/// Discriminant, squarefreeness and genus of an integral polynomial.
///
/// The genus is that of the hyperelliptic model y² = f(x), namely
/// ⌊(deg f − 1)/2⌋.
pub fn poly_invariants(f: &ZPoly) -> Result<(BigInt, bool, usize), ExactError> {
    let n = f.degree().ok_or(ExactError::ZeroPolynomial)?;
    let disc = f.to_qpoly().discriminant();
    debug_assert!(disc.is_integer());
    let disc = disc.to_integer();
    let genus = if n == 0 { 0 } else { (n - 1) / 2 };
    Ok((disc.clone(), !disc.is_zero(), genus))
}

/// Whether a rational number is a square in Q.
pub fn is_rational_square(q: &BigRational) -> bool {
    if q.is_zero() {
        return true;
    }
    if q.is_negative() {
        return false;
    }
    is_square_int(&q.numer().clone()) && is_square_int(&q.denom().clone())
}

fn is_square_int(n: &BigInt) -> bool {
    if n.is_negative() {
        return false;
    }
    let r = n.sqrt();
    &r * &r == *n
}

fn is_rational_square_int(n: &BigInt) -> bool {
    !n.is_negative() && is_square_int(n)
}

/// Exact integer square root when the argument is a perfect square.
pub fn exact_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    if &r * &r == *n {
        Some(r)
    } else {
        None
    }
}

/// Squarefree kernel of a nonzero rational: the unique squarefree integer d
/// with q ∈ d·Q*².
pub fn squarefree_kernel(q: &BigRational) -> BigInt {
    assert!(!q.is_zero());
    let n = q.numer() * q.denom();
    let fac = integer_factor(&n, &FactorBudget::default()).expect("squarefree kernel factorization");
    let mut d = BigInt::from(if fac.negative { -1 } else { 1 });
    for (p, e) in &fac.factors {
        if e % 2 == 1 {
            d *= BigInt::from(p.clone());
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn curve_model_checks() {
        let f = ZPoly::from_i64(&[2, 1, 0, 0, 0, 0, 2]);
        let c = CurveModel::new(f).unwrap();
        assert_eq!(c.degree(), 6);
        assert_eq!(c.genus(), 2);
        assert!(!c.has_rational_infinity());

        // x² − 2x + 1 has a repeated root.
        assert!(CurveModel::new(ZPoly::from_i64(&[1, -2, 1])).is_err());
        assert!(CurveModel::new(ZPoly::from_i64(&[1, 1])).is_err());
    }

    #[test]
    fn poly_invariants_paper_discriminants() {
        // Signed discriminant is negative here (three complex-conjugate root
        // pairs); the published factorization 2⁴·11·271169 is up to sign.
        let (d, sf, g) = poly_invariants(&ZPoly::from_i64(&[2, 1, 0, 0, 0, 0, 2])).unwrap();
        assert_eq!(d.abs(), BigInt::from(47725744i64));
        assert!(sf);
        assert_eq!(g, 2);

        let (d, sf, g) = poly_invariants(&ZPoly::from_i64(&[-3, 1, 1, -1, 3, 2, -1])).unwrap();
        assert_eq!(d, BigInt::from(143135548i64)); // 2² · 35783887
        assert!(sf);
        assert_eq!(g, 2);

        let (d, sf, _) = poly_invariants(&ZPoly::from_i64(&[1, -2, 1])).unwrap();
        assert!(d.is_zero());
        assert!(!sf);
    }

    #[test]
    fn square_detection() {
        assert!(is_rational_square(&BigRational::new(BigInt::from(4), BigInt::from(9))));
        assert!(!is_rational_square(&BigRational::new(BigInt::from(2), BigInt::one())));
        assert!(!is_rational_square(&BigRational::new(BigInt::from(-4), BigInt::one())));
        assert_eq!(squarefree_kernel(&BigRational::new(BigInt::from(18), BigInt::one())), BigInt::from(2));
        assert_eq!(squarefree_kernel(&BigRational::new(BigInt::from(-4), BigInt::from(3))), BigInt::from(-3));
    }
}
