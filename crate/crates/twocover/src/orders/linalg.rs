//! Small dense linear algebra used by the order machinery: exact rational
//! elimination, integer HNF for lattices, Smith-form solving over Z/p^k, and
//! a division-free characteristic polynomial.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Solve A·x = b over Q; A square nonsingular (columns of A given).
pub fn solve_rational(a_cols: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = b.len();
    debug_assert!(a_cols.iter().all(|c| c.len() == n));
    let m = a_cols.len();
    // Augmented row-major matrix.
    let mut rows: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut r: Vec<BigRational> = (0..m).map(|j| a_cols[j][i].clone()).collect();
            r.push(b[i].clone());
            r
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut row = 0usize;
    for col in 0..m {
        let piv = (row..n).find(|&r| !rows[r][col].is_zero());
        let Some(piv) = piv else { continue };
        rows.swap(row, piv);
        let inv = rows[row][col].clone().recip();
        for x in rows[row].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..n {
            if r != row && !rows[r][col].is_zero() {
                let f = rows[r][col].clone();
                for c in col..=m {
                    let t = &rows[row][c] * &f;
                    rows[r][c] = &rows[r][c] - t;
                }
            }
        }
        pivot_cols.push((row, col));
        row += 1;
        if row == n {
            break;
        }
    }
    // Consistency: rows without pivots must have zero rhs.
    for r in row..n {
        if !rows[r][m].is_zero() {
            return None;
        }
    }
    let mut x = vec![BigRational::zero(); m];
    for (r, c) in pivot_cols {
        x[c] = rows[r][m].clone();
    }
    Some(x)
}

/// Invert a square rational matrix given by columns; returns columns of the
/// inverse.
pub fn invert_rational(a_cols: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let n = a_cols.len();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![BigRational::zero(); n];
        e[j] = BigRational::one();
        out.push(solve_rational(a_cols, &e)?);
    }
    Some(out)
}

/// Column-style Hermite normal form of the lattice spanned by the given
/// columns in Z^n. Returns n columns forming a triangular basis; panics if
/// the columns do not span a full-rank lattice.
pub fn hnf_lattice(cols: &[Vec<BigInt>], n: usize) -> Vec<Vec<BigInt>> {
    let mut work: Vec<Vec<BigInt>> = cols.to_vec();
    let mut basis: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for row in 0..n {
        // Reduce all columns against each other on this row by gcd steps.
        loop {
            let mut nonzero: Vec<usize> = (0..work.len()).filter(|&j| !work[j][row].is_zero()).collect();
            if nonzero.len() <= 1 {
                break;
            }
            // Pick the column with smallest |entry| as pivot and reduce others.
            nonzero.sort_by_key(|&j| work[j][row].abs());
            let pj = nonzero[0];
            let pval = work[pj][row].clone();
            for &j in &nonzero[1..] {
                let q = div_round(&work[j][row], &pval);
                if !q.is_zero() {
                    for i in 0..n {
                        let t = &work[pj][i] * &q;
                        work[j][i] -= t;
                    }
                }
            }
        }
        let pj = (0..work.len()).find(|&j| !work[j][row].is_zero());
        let Some(pj) = pj else {
            panic!("hnf_lattice: columns do not span full rank at row {row}");
        };
        let mut piv = work.swap_remove(pj);
        if piv[row].is_negative() {
            for x in piv.iter_mut() {
                *x = -x.clone();
            }
        }
        basis.push(piv);
    }
    // Normalize above-diagonal entries into [0, pivot).
    for r in (0..n).rev() {
        let pivval = basis[r][r].clone();
        for j in 0..r {
            let q = basis[j][r].div_floor(&pivval);
            if !q.is_zero() {
                for i in 0..n {
                    let t = &basis[r][i] * &q;
                    basis[j][i] -= t;
                }
            }
        }
    }
    basis
}

fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    // Nearest-integer division.
    let (q, r) = a.div_rem(b);
    let two_r = BigInt::from(2) * r.abs();
    if two_r > b.abs() {
        if (a.is_negative()) != (b.is_negative()) {
            q - 1
        } else {
            q + 1
        }
    } else {
        q
    }
}

/// Smith normal form with transforms: M = U⁻¹·S·V⁻¹ ... concretely returns
/// (U, S, V) with S = U·M·V diagonal, U and V unimodular.
pub fn smith_normal_form(m: &[Vec<BigInt>]) -> (Vec<Vec<BigInt>>, Vec<Vec<BigInt>>, Vec<Vec<BigInt>>) {
    let rows = m.len();
    let cols = if rows > 0 { m[0].len() } else { 0 };
    let mut s: Vec<Vec<BigInt>> = m.to_vec();
    let mut u = identity(rows);
    let mut v = identity(cols);

    let dim = rows.min(cols);
    for t in 0..dim {
        loop {
            // Find a nonzero pivot in the remaining block with minimal |value|.
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if !s[i][j].is_zero() {
                        if let Some((bi, bj)) = best {
                            if s[i][j].abs() < s[bi][bj].abs() {
                                best = Some((i, j));
                            }
                        } else {
                            best = Some((i, j));
                        }
                    }
                }
            }
            let Some((bi, bj)) = best else { return (u, s, v) };
            swap_rows(&mut s, &mut u, t, bi);
            swap_cols(&mut s, &mut v, t, bj);
            let mut clean = true;
            let piv = s[t][t].clone();
            for i in (t + 1)..rows {
                if !s[i][t].is_zero() {
                    let q = div_round(&s[i][t], &piv);
                    row_axpy(&mut s, &mut u, i, t, &-q);
                    if !s[i][t].is_zero() {
                        clean = false;
                    }
                }
            }
            for j in (t + 1)..cols {
                if !s[t][j].is_zero() {
                    let q = div_round(&s[t][j], &piv);
                    col_axpy(&mut s, &mut v, j, t, &-q);
                    if !s[t][j].is_zero() {
                        clean = false;
                    }
                }
            }
            if clean {
                if s[t][t].is_negative() {
                    for j in 0..cols {
                        s[t][j] = -s[t][j].clone();
                    }
                    for j in 0..rows {
                        u[t][j] = -u[t][j].clone();
                    }
                }
                break;
            }
        }
    }
    (u, s, v)
}

fn identity(n: usize) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

fn swap_rows(s: &mut [Vec<BigInt>], u: &mut [Vec<BigInt>], a: usize, b: usize) {
    if a != b {
        s.swap(a, b);
        u.swap(a, b);
    }
}

fn swap_cols(s: &mut [Vec<BigInt>], v: &mut [Vec<BigInt>], a: usize, b: usize) {
    if a == b {
        return;
    }
    for row in s.iter_mut() {
        row.swap(a, b);
    }
    for row in v.iter_mut() {
        row.swap(a, b);
    }
}

fn row_axpy(s: &mut [Vec<BigInt>], u: &mut [Vec<BigInt>], dst: usize, src: usize, q: &BigInt) {
    let cols = s[0].len();
    for j in 0..cols {
        let t = &s[src][j] * q;
        s[dst][j] += t;
    }
    let un = u[0].len();
    for j in 0..un {
        let t = &u[src][j] * q;
        u[dst][j] += t;
    }
}

fn col_axpy(s: &mut [Vec<BigInt>], v: &mut [Vec<BigInt>], dst: usize, src: usize, q: &BigInt) {
    for row in s.iter_mut() {
        let t = &row[src] * q;
        row[dst] += t;
    }
    for row in v.iter_mut() {
        let t = &row[src] * q;
        row[dst] += t;
    }
}

/// Solve M·x ≡ b (mod p^k) via Smith normal form; returns a canonical
/// solution if one exists. M is row-major (rows × cols).
pub fn solve_mod_pk(m: &[Vec<BigInt>], b: &[BigInt], p: u64, k: u32) -> Option<Vec<BigInt>> {
    let pk = BigInt::from(p).pow(k);
    let rows = m.len();
    let cols = if rows > 0 { m[0].len() } else { 0 };
    let (u, s, v) = smith_normal_form(m);
    // c = U·b
    let c: Vec<BigInt> = (0..rows).map(|i| (0..rows).map(|j| &u[i][j] * &b[j]).sum::<BigInt>().mod_floor(&pk)).collect();
    let mut y = vec![BigInt::zero(); cols];
    for i in 0..rows {
        let si = if i < cols { s[i][i].clone() } else { BigInt::zero() };
        let ci = &c[i];
        if si.is_zero() {
            if !ci.mod_floor(&pk).is_zero() {
                return None;
            }
            continue;
        }
        // Solve si·yi ≡ ci mod p^k.
        let g = si.gcd(&pk);
        if !ci.mod_floor(&g).is_zero() {
            return None;
        }
        let si_red = &si / &g;
        let pk_red = &pk / &g;
        let ci_red = ci / &g;
        let inv = mod_inverse(&si_red.mod_floor(&pk_red), &pk_red)?;
        y[i] = (ci_red * inv).mod_floor(&pk_red);
    }
    // x = V·y
    let x: Vec<BigInt> = (0..cols).map(|i| (0..cols).map(|j| &v[i][j] * &y[j]).sum::<BigInt>().mod_floor(&pk)).collect();
    Some(x)
}

/// Invert a square matrix over Z/p^k (row-major); requires the reduction mod
/// p to be invertible.
pub fn invert_mod_pk(m: &[Vec<BigInt>], pk: &BigInt) -> Option<Vec<Vec<BigInt>>> {
    let n = m.len();
    let mut a: Vec<Vec<BigInt>> = m.iter().map(|r| r.iter().map(|x| x.mod_floor(pk)).collect()).collect();
    let mut inv: Vec<Vec<BigInt>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    for c in 0..n {
        let piv = (c..n).find(|&r| mod_inverse(&a[r][c], pk).is_some())?;
        a.swap(c, piv);
        inv.swap(c, piv);
        let pinv = mod_inverse(&a[c][c], pk)?;
        for j in 0..n {
            a[c][j] = (&a[c][j] * &pinv).mod_floor(pk);
            inv[c][j] = (&inv[c][j] * &pinv).mod_floor(pk);
        }
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for j in 0..n {
                    a[r][j] = (&a[r][j] - &f * &a[c][j]).mod_floor(pk);
                    inv[r][j] = (&inv[r][j] - &f * &inv[c][j]).mod_floor(pk);
                }
            }
        }
    }
    Some(inv)
}

pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    if m.is_one() {
        return Some(BigInt::zero());
    }
    let e = a.extended_gcd(m);
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(m))
}

/// Characteristic polynomial of a square matrix over Z/p^k by the Berkowitz
/// (division-free) algorithm. Returns monic coefficients c_0..c_n with
/// det(xI − M) = Σ c_i x^i, reduced mod p^k.
pub fn charpoly_mod_pk(m: &[Vec<BigInt>], p: u64, k: u32) -> Vec<BigInt> {
    let n = m.len();
    let pk = BigInt::from(p).pow(k);
    if n == 0 {
        return vec![BigInt::one()];
    }
    // Berkowitz: iteratively build the characteristic polynomial vector.
    // c starts as (1) for the empty matrix; at step r we incorporate the
    // leading principal (r+1)×(r+1) submatrix.
    let mut c: Vec<BigInt> = vec![BigInt::one(), (-m[0][0].clone()).mod_floor(&pk)];
    for r in 1..n {
        // R = row (m[r][0..r]), C = column (m[0..r][r]), A = leading r×r block.
        // Toeplitz vector t_i: t_0 = 1 (coeff of x), t_1 = −m[r][r],
        // t_{i+1} = −R·A^{i−1}·C.
        let mut t: Vec<BigInt> = Vec::with_capacity(r + 2);
        t.push(BigInt::one());
        t.push((-m[r][r].clone()).mod_floor(&pk));
        // v = C; iterate v ← A·v computing R·v each time.
        let mut v: Vec<BigInt> = (0..r).map(|i| m[i][r].clone()).collect();
        for _ in 0..r {
            let rv: BigInt = (0..r).map(|j| &m[r][j] * &v[j]).sum();
            t.push((-rv).mod_floor(&pk));
            let nv: Vec<BigInt> = (0..r)
                .map(|i| (0..r).map(|j| &m[i][j] * &v[j]).sum::<BigInt>().mod_floor(&pk))
                .collect();
            v = nv;
        }
        // c_new = t ⋆ c (polynomial-style convolution, degree grows by 1).
        let mut c_new = vec![BigInt::zero(); c.len() + 1];
        for (i, ti) in t.iter().enumerate() {
            for (j, cj) in c.iter().enumerate() {
                if i + j < c_new.len() {
                    c_new[i + j] = (&c_new[i + j] + ti * cj).mod_floor(&pk);
                }
            }
        }
        c = c_new;
    }
    // c holds coefficients of det(xI − M) from x^n down to x^0.
    c.reverse();
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(n: i64) -> BigInt {
        BigInt::from(n)
    }

    fn br(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn rational_solve() {
        // [[2,1],[1,3]] x = (5, 10) → x = (1, 3)
        let cols = vec![vec![br(2), br(1)], vec![br(1), br(3)]];
        let x = solve_rational(&cols, &[br(5), br(10)]).unwrap();
        assert_eq!(x, vec![br(1), br(3)]);
        let inv = invert_rational(&cols).unwrap();
        // A·A⁻¹ = I: check one entry.
        let e00 = &cols[0][0] * &inv[0][0] + &cols[1][0] * &inv[0][1];
        assert_eq!(e00, br(1));
    }

    #[test]
    fn hnf_simple() {
        // Lattice spanned by (2,0),(0,2),(1,1): index-2 sublattice of Z².
        let cols = vec![vec![bi(2), bi(0)], vec![bi(0), bi(2)], vec![bi(1), bi(1)]];
        let basis = hnf_lattice(&cols, 2);
        let det = &basis[0][0] * &basis[1][1] - &basis[0][1] * &basis[1][0];
        assert_eq!(det.abs(), bi(2));
    }

    #[test]
    fn smith_and_solve() {
        let m = vec![vec![bi(2), bi(4)], vec![bi(6), bi(8)]];
        let (u, s, v) = smith_normal_form(&m);
        // S = U·M·V diagonal; check diagonality and product identity.
        assert!(s[0][1].is_zero() && s[1][0].is_zero());
        let det_u = &u[0][0] * &u[1][1] - &u[0][1] * &u[1][0];
        assert_eq!(det_u.abs(), bi(1));
        let det_v = &v[0][0] * &v[1][1] - &v[0][1] * &v[1][0];
        assert_eq!(det_v.abs(), bi(1));

        // Solve 2x ≡ 6 mod 8 through the SNF path.
        let m = vec![vec![bi(2)]];
        let x = solve_mod_pk(&m, &[bi(6)], 2, 3).unwrap();
        assert_eq!((bi(2) * &x[0]).mod_floor(&bi(8)), bi(6));
        assert!(solve_mod_pk(&m, &[bi(3)], 2, 3).is_none());
    }

    #[test]
    fn charpoly_small() {
        // M = [[1,2],[3,4]]: charpoly x² −5x −2.
        let m = vec![vec![bi(1), bi(2)], vec![bi(3), bi(4)]];
        let c = charpoly_mod_pk(&m, 101, 1);
        assert_eq!(c, vec![bi(-2).mod_floor(&bi(101)), bi(-5).mod_floor(&bi(101)), bi(1)]);
    }
}
