//! p-maximal orders by the multiplier-ring iteration: starting from the
//! equation order Z[θ], repeatedly replace O by the ring of multipliers of
//! its p-radical until stable.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::linalg::{hnf_lattice, invert_rational, solve_rational};
use super::OrderError;
use crate::exact::{QPoly, ZPoly};

/// Basis of an order in Q[x]/(g): column j is (1/den)·Σᵢ num[j][i]·θ^i,
/// with den a power of p.
#[derive(Debug, Clone)]
pub struct OrderBasis {
    pub num: Vec<Vec<BigInt>>,
    pub den: BigInt,
    pub n: usize,
}

impl OrderBasis {
    fn equation_order(n: usize) -> Self {
        let num = (0..n)
            .map(|j| (0..n).map(|i| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        OrderBasis { num, den: BigInt::one(), n }
    }

    pub fn columns_rational(&self) -> Vec<Vec<BigRational>> {
        self.num
            .iter()
            .map(|col| col.iter().map(|c| BigRational::new(c.clone(), self.den.clone())).collect())
            .collect()
    }

    /// Basis element j as a polynomial in θ.
    pub fn element(&self, j: usize) -> QPoly {
        QPoly::from_coeffs(self.num[j].iter().map(|c| BigRational::new(c.clone(), self.den.clone())).collect())
    }

    fn simplify(&mut self, p: &BigInt) {
        // Remove common p factors between den and all numerators.
        loop {
            if self.den.is_one() {
                return;
            }
            if self.num.iter().all(|col| col.iter().all(|c| (c % p).is_zero())) {
                for col in self.num.iter_mut() {
                    for c in col.iter_mut() {
                        *c = &*c / p;
                    }
                }
                self.den = &self.den / p;
            } else {
                return;
            }
        }
    }
}

/// F_p-algebra given by structure constants over a chosen basis.
pub struct FpAlgebra {
    pub p: u64,
    pub n: usize,
    /// mul[i][j] = coordinates of ωᵢ·ωⱼ.
    pub mul: Vec<Vec<Vec<u64>>>,
    pub one: Vec<u64>,
}

impl FpAlgebra {
    pub fn mul_vec(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let p = self.p as u128;
        let mut out = vec![0u128; self.n];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                if bj == 0 {
                    continue;
                }
                let c = (ai as u128 * bj as u128) % p;
                for (k, &mij) in self.mul[i][j].iter().enumerate() {
                    out[k] = (out[k] + c * mij as u128) % p;
                }
            }
        }
        out.iter().map(|&x| x as u64).collect()
    }

    pub fn pow_vec(&self, a: &[u64], mut e: u64) -> Vec<u64> {
        let mut acc = self.one.clone();
        let mut base = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_vec(&acc, &base);
            }
            base = self.mul_vec(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Radical as the kernel of the m-fold Frobenius (an F_p-linear map),
    /// m = ⌈log_p n⌉, returned as a basis of coordinate vectors.
    pub fn radical(&self) -> Vec<Vec<u64>> {
        let p = self.p;
        let mut m = 1u32;
        let mut q = p as u128;
        while q < self.n as u128 {
            q *= p as u128;
            m += 1;
        }
        // Build the matrix of x ↦ x^(p^m) columnwise.
        let mut cols = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut e = vec![0u64; self.n];
            e[i] = 1;
            let mut v = e;
            for _ in 0..m {
                v = self.pow_vec(&v, p);
            }
            cols.push(v);
        }
        fp_kernel(&cols, self.n, p)
    }
}

/// Kernel of the F_p-linear map with the given columns (map sends eᵢ to
/// cols[i]); returns a basis of the kernel.
pub fn fp_kernel(cols: &[Vec<u64>], n: usize, p: u64) -> Vec<Vec<u64>> {
    let m = cols.len();
    // Row-reduce the n×m matrix.
    let mut a: Vec<Vec<u64>> = (0..n).map(|i| (0..m).map(|j| cols[j][i] % p).collect()).collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row = 0;
    for col in 0..m {
        let piv = (row..n).find(|&r| a[r][col] != 0);
        let Some(piv) = piv else { continue };
        a.swap(row, piv);
        let inv = fp_inv(a[row][col], p);
        for x in a[row].iter_mut() {
            *x = ((*x as u128 * inv as u128) % p as u128) as u64;
        }
        for r in 0..n {
            if r != row && a[r][col] != 0 {
                let f = a[r][col];
                for c in 0..m {
                    let t = (a[row][c] as u128 * f as u128) % p as u128;
                    a[r][c] = ((a[r][c] as u128 + p as u128 - t) % p as u128) as u64;
                }
            }
        }
        pivots.push((row, col));
        row += 1;
        if row == n {
            break;
        }
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let mut basis = Vec::new();
    for free in 0..m {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![0u64; m];
        v[free] = 1;
        for &(r, c) in &pivots {
            // x_c = −a[r][free]
            v[c] = (p - a[r][free]) % p;
        }
        basis.push(v);
    }
    basis
}

pub fn fp_inv(a: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    let mut base = a % p;
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

/// Multiplication structure of the order modulo p: coordinates of ωᵢ·ωⱼ in
/// the order basis, entries mod p (rational solve, denominators prime to p).
fn structure_mod_p(g: &ZPoly, basis: &OrderBasis, p: u64) -> Result<FpAlgebra, OrderError> {
    let n = basis.n;
    let cols = basis.columns_rational();
    let gq = g.to_qpoly();
    let pb = BigInt::from(p);
    let mut mul = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let prod = basis.element(i).mul(&basis.element(j)).rem(&gq);
            let mut target = prod.coeffs().to_vec();
            target.resize(n, BigRational::zero());
            let x = solve_rational(&cols, &target)
                .ok_or_else(|| OrderError::Internal("order basis is singular".into()))?;
            let v: Result<Vec<u64>, OrderError> = x.iter().map(|q| rational_mod_p(q, &pb)).collect();
            let v = v?;
            mul[i][j] = v.clone();
            mul[j][i] = v;
        }
    }
    // Coordinates of 1.
    let mut one_t = vec![BigRational::zero(); n];
    one_t[0] = BigRational::one();
    let one = solve_rational(&cols, &one_t)
        .ok_or_else(|| OrderError::Internal("order basis is singular".into()))?
        .iter()
        .map(|q| rational_mod_p(q, &pb))
        .collect::<Result<Vec<u64>, _>>()?;
    Ok(FpAlgebra { p, n, mul, one })
}

fn rational_mod_p(q: &BigRational, p: &BigInt) -> Result<u64, OrderError> {
    let den = q.denom();
    if (den % p).is_zero() {
        return Err(OrderError::Internal("non-p-integral coordinate in order arithmetic".into()));
    }
    let num = q.numer().mod_floor(p);
    let dinv = super::linalg::mod_inverse(&den.mod_floor(p), p)
        .ok_or_else(|| OrderError::Internal("denominator not invertible".into()))?;
    Ok((num * dinv).mod_floor(p).to_u64().unwrap())
}

/// Compute a basis of the p-maximal order of Q[x]/(g) (g monic integral
/// squarefree).
pub fn p_maximal_order(g: &ZPoly, p: u64) -> Result<OrderBasis, OrderError> {
    let n = g.degree().ok_or(OrderError::BadPolynomial)?;
    if !g.lc().unwrap().is_one() {
        return Err(OrderError::BadPolynomial);
    }
    let pb = BigInt::from(p);
    let mut basis = OrderBasis::equation_order(n);
    loop {
        let alg = structure_mod_p(g, &basis, p)?;
        let rad = alg.radical();
        if rad.is_empty() {
            return Ok(basis);
        }
        // Radical ideal I ⊆ O: spanned by radical vectors and p·O, in order
        // coordinates.
        let mut icols: Vec<Vec<BigInt>> = rad
            .iter()
            .map(|v| v.iter().map(|&c| BigInt::from(c)).collect())
            .collect();
        for i in 0..n {
            let mut e = vec![BigInt::zero(); n];
            e[i] = pb.clone();
            icols.push(e);
        }
        let ibasis = hnf_lattice(&icols, n);

        // Multiplier condition: y ∈ O with y·I ⊆ p·I, i.e. for every ideal
        // basis vector v: (1/p)·B_I⁻¹·M_v·y ∈ Z^n, solved mod p.
        let cols = basis.columns_rational();
        let gq = g.to_qpoly();
        let ibasis_rat: Vec<Vec<BigRational>> = ibasis
            .iter()
            .map(|c| c.iter().map(|x| BigRational::from_integer(x.clone())).collect())
            .collect();
        let iinv = invert_rational(&ibasis_rat)
            .ok_or_else(|| OrderError::Internal("ideal basis singular".into()))?;

        // Stacked F_p conditions on y (order coordinates).
        let mut cond_cols: Vec<Vec<u64>> = vec![Vec::new(); n];
        for (ycoord, cond) in cond_cols.iter_mut().enumerate() {
            // Column for basis vector e_ycoord: compute all conditions.
            let y = basis.element(ycoord);
            let mut col = Vec::new();
            for vcol in &ibasis {
                // v as field element.
                let mut velem = QPoly::zero();
                for (j, c) in vcol.iter().enumerate() {
                    velem = velem.add(&basis.element(j).scale(&BigRational::from_integer(c.clone())));
                }
                let prod = y.mul(&velem).rem(&gq);
                // Coordinates in order basis.
                let mut t = prod.coeffs().to_vec();
                t.resize(n, BigRational::zero());
                let in_order = solve_rational(&cols, &t)
                    .ok_or_else(|| OrderError::Internal("order basis singular".into()))?;
                // Coordinates in ideal basis: B_I⁻¹ · in_order.
                for i in 0..n {
                    let mut acc = BigRational::zero();
                    for (j, oin) in in_order.iter().enumerate() {
                        acc += &iinv[j][i] * oin;
                    }
                    // Condition: acc/p integral, i.e. acc ≡ 0 mod p.
                    col.push(rational_mod_p(&acc, &pb)?);
                }
            }
            *cond = col;
        }
        let kernel = fp_kernel(&cond_cols, cond_cols[0].len(), p);
        if kernel.is_empty() {
            return Ok(basis);
        }
        // Enlarge: O' = O + (1/p)·(kernel lifts).
        let mut newcols: Vec<Vec<BigInt>> = Vec::new();
        for j in 0..n {
            // p · e_j (order coords scaled by p to work integrally).
            let mut e = vec![BigInt::zero(); n];
            e[j] = pb.clone();
            newcols.push(e);
        }
        for v in &kernel {
            newcols.push(v.iter().map(|&c| BigInt::from(c)).collect());
        }
        let enlarged = hnf_lattice(&newcols, n);
        // Convert back to power-basis numerators: new_num = old_num · enlarged,
        // new_den = old_den · p.
        let mut num = Vec::with_capacity(n);
        for col in &enlarged {
            let mut acc = vec![BigInt::zero(); n];
            for (j, c) in col.iter().enumerate() {
                for i in 0..n {
                    acc[i] += &basis.num[j][i] * c;
                }
            }
            num.push(acc);
        }
        let mut newbasis = OrderBasis { num, den: &basis.den * &pb, n };
        newbasis.simplify(&pb);
        if newbasis.den == basis.den {
            // No growth: maximal.
            return Ok(basis);
        }
        basis = newbasis;
    }
}

/// ord_p of the index [O_max : Z[θ]] (from the basis denominator structure).
pub fn index_valuation(basis: &OrderBasis, p: u64) -> u32 {
    // det(basis matrix) = ± p^{-v}; compute v from the HNF diagonal.
    let pb = BigInt::from(p);
    let mut det = BigRational::one();
    let cols = basis.columns_rational();
    // The basis is triangular-ish only after HNF; compute det exactly.
    let n = basis.n;
    let mut mat: Vec<Vec<BigRational>> = (0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect();
    let mut sign = 1i32;
    for c in 0..n {
        let piv = (c..n).find(|&r| !mat[r][c].is_zero()).expect("basis nonsingular");
        if piv != c {
            mat.swap(c, piv);
            sign = -sign;
        }
        let pv = mat[c][c].clone();
        det *= &pv;
        for r in (c + 1)..n {
            if !mat[r][c].is_zero() {
                let f = &mat[r][c] / &pv;
                for k in c..n {
                    let t = &mat[c][k] * &f;
                    mat[r][k] = &mat[r][k] - t;
                }
            }
        }
    }
    let _ = sign;
    // det = ±1/p^v
    let mut v = 0u32;
    let mut den = det.denom().abs();
    while (&den % &pb).is_zero() {
        den /= &pb;
        v += 1;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn already_maximal() {
        // Z[i]: x²+1 at p = 2 is maximal (disc −4, index 1).
        let g = ZPoly::from_i64(&[1, 0, 1]);
        let b = p_maximal_order(&g, 2).unwrap();
        assert_eq!(index_valuation(&b, 2), 0);
    }

    #[test]
    fn index_two_case() {
        // x² − 5: maximal order Z[(1+√5)/2], index 2 at p = 2.
        let g = ZPoly::from_i64(&[-5, 0, 1]);
        let b = p_maximal_order(&g, 2).unwrap();
        assert_eq!(index_valuation(&b, 2), 1);
    }

    #[test]
    fn dedekind_example() {
        // x³ − x − 4: index 2 at p = 2 (classical example; disc = −428 = −2²·107,
        // field disc −107).
        let g = ZPoly::from_i64(&[-4, -1, 0, 1]);
        let b = p_maximal_order(&g, 2).unwrap();
        assert_eq!(index_valuation(&b, 2), 1);
        // At 107 the equation order is maximal.
        let b = p_maximal_order(&g, 107).unwrap();
        assert_eq!(index_valuation(&b, 107), 0);
    }

    #[test]
    fn ramified_stays_equation_order() {
        // x² − 2 at p = 2: Z[√2] is maximal.
        let g = ZPoly::from_i64(&[-2, 0, 1]);
        let b = p_maximal_order(&g, 2).unwrap();
        assert_eq!(index_valuation(&b, 2), 0);
    }
}
