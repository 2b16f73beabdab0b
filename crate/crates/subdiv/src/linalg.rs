//! Small exact linear-algebra helpers over `BigInt` / `BigRational`.
//!
//! Everything here is dimension-tiny (ambient dimension ≤ 6 or so), so the
//! implementations favor clarity over asymptotics: fraction-full Gaussian
//! elimination and Euclidean column reduction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type QVec = Vec<BigRational>;
pub type QMat = Vec<Vec<BigRational>>;
pub type ZVec = Vec<BigInt>;
pub type ZMat = Vec<Vec<BigInt>>;

pub fn to_rational_vec(v: &[BigInt]) -> QVec {
    v.iter().map(|x| BigRational::from_integer(x.clone())).collect()
}

pub fn to_rational_mat(m: &[Vec<BigInt>]) -> QMat {
    m.iter().map(|r| to_rational_vec(r)).collect()
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut QMat) -> Vec<usize> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in &mut m[r] {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let sub = &f * &m[r][j];
                    m[i][j] -= sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &[Vec<BigRational>]) -> usize {
    let mut m = m.to_vec();
    rref(&mut m).len()
}

/// Rank of the integer row span — used for affine dimension of point sets.
pub fn rank_int(m: &[Vec<BigInt>]) -> usize {
    rank(&to_rational_mat(m))
}

/// Solves `a x = b` for square `a`; None when singular.
pub fn solve(a: &QMat, b: &QVec) -> Option<QVec> {
    let n = a.len();
    let mut m: QMat = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut m);
    if pivots.len() != n || pivots.iter().any(|&c| c >= n) {
        return None;
    }
    Some((0..n).map(|i| m[i][n].clone()).collect())
}

/// Inverse of a square rational matrix; None when singular.
pub fn invert(a: &QMat) -> Option<QMat> {
    let n = a.len();
    let mut m: QMat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            for j in 0..n {
                r.push(if i == j { BigRational::one() } else { BigRational::zero() });
            }
            r
        })
        .collect();
    let pivots = rref(&mut m);
    if pivots.len() != n || pivots.iter().any(|&c| c >= n) {
        return None;
    }
    Some((0..n).map(|i| m[i][n..].to_vec()).collect())
}

pub fn determinant(a: &QMat) -> BigRational {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return BigRational::zero();
        };
        if p != c {
            m.swap(c, p);
            det = -det;
        }
        det *= &m[c][c];
        let inv = m[c][c].recip();
        for i in c + 1..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] * &inv;
            for j in c..n {
                let sub = &f * &m[c][j];
                m[i][j] -= sub;
            }
        }
    }
    det
}

pub fn determinant_int(a: &[Vec<BigInt>]) -> BigInt {
    let d = determinant(&to_rational_mat(a));
    debug_assert!(d.is_integer());
    d.to_integer()
}

/// A basis of the rational nullspace `{x : m x = 0}` (column vectors).
pub fn nullspace(m: &[Vec<BigRational>]) -> Vec<QVec> {
    let rows = m.len();
    let cols = if rows == 0 { return Vec::new() } else { m[0].len() };
    let mut a = m.to_vec();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![BigRational::zero(); cols];
            x[f] = BigRational::one();
            for (r, &p) in pivots.iter().enumerate() {
                x[p] = -a[r][f].clone();
            }
            x
        })
        .collect()
}

/// Clears denominators and divides by the gcd, preferring a positive leading
/// entry; the zero vector maps to itself.
pub fn primitive(v: &[BigRational]) -> ZVec {
    let mut lcm = BigInt::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let mut ints: ZVec = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return ints;
    }
    for x in &mut ints {
        *x /= &g;
    }
    if let Some(first) = ints.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            for x in &mut ints {
                *x = -x.clone();
            }
        }
    }
    ints
}

/// Integer kernel of an integer matrix: a ℤ-basis of `{x ∈ ℤ^cols : m x = 0}`,
/// computed by Euclidean column reduction with a unimodular transform.
pub fn integer_kernel(m: &[Vec<BigInt>]) -> Vec<ZVec> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    if cols == 0 {
        return Vec::new();
    }
    let mut a: ZMat = m.to_vec();
    // w tracks the column operations: columns of the original identity.
    let mut w: ZMat = (0..cols)
        .map(|i| (0..cols).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let col_sub = |a: &mut ZMat, w: &mut ZMat, src: usize, dst: usize, q: &BigInt| {
        for r in 0..rows {
            let sub = q * &a[r][src];
            a[r][dst] -= sub;
        }
        for r in 0..cols {
            let sub = q * &w[r][src];
            w[r][dst] -= sub;
        }
    };
    let col_swap = |a: &mut ZMat, w: &mut ZMat, i: usize, j: usize| {
        for r in 0..rows {
            a[r].swap(i, j);
        }
        for r in 0..cols {
            w[r].swap(i, j);
        }
    };
    let mut lead = 0;
    for r in 0..rows {
        if lead == cols {
            break;
        }
        loop {
            // Pick the column with the smallest nonzero entry in row r.
            let mut best: Option<usize> = None;
            for j in lead..cols {
                if !a[r][j].is_zero()
                    && best.is_none_or(|b| a[r][j].abs() < a[r][b].abs())
                {
                    best = Some(j);
                }
            }
            let Some(b) = best else { break };
            col_swap(&mut a, &mut w, lead, b);
            let mut done = true;
            for j in lead + 1..cols {
                if a[r][j].is_zero() {
                    continue;
                }
                let q = a[r][j].div_floor(&a[r][lead]);
                col_sub(&mut a, &mut w, lead, j, &q);
                if !a[r][j].is_zero() {
                    done = false;
                }
            }
            if done {
                lead += 1;
                break;
            }
        }
    }
    // Columns from `lead` on are zero in a; the matching columns of w span
    // the kernel.
    (lead..cols)
        .map(|j| (0..cols).map(|r| w[r][j].clone()).collect())
        .collect()
}

/// A ℤ-basis of the saturation `span_ℚ(rows) ∩ ℤ^d`.
///
/// The ℤ-span of the rows can have finite index in the saturation (a segment
/// from 0 to (2,0) spans 2ℤ×0 but saturates to ℤ×0); normalized volumes and
/// box-point counts need the saturated lattice.
pub fn saturated_basis(rows: &[Vec<BigInt>]) -> Vec<ZVec> {
    let d = match rows.first() {
        Some(r) => r.len(),
        None => return Vec::new(),
    };
    let mut m = to_rational_mat(rows);
    let pivots = rref(&mut m);
    let k = pivots.len();
    if k == 0 {
        return Vec::new();
    }
    let basis_rows: QMat = m[..k].to_vec();
    // delta clears every denominator in the rref basis.
    let mut delta = BigInt::one();
    for row in &basis_rows {
        for x in row {
            delta = delta.lcm(x.denom());
        }
    }
    // c ∈ ℤ^k parameterizes span points Σ c_i row_i; integrality of the
    // result is the condition N c ≡ 0 (mod delta) with N = delta·rowsᵀ.
    let n_mat: ZMat = (0..d)
        .map(|j| {
            (0..k)
                .map(|i| {
                    let x = &basis_rows[i][j];
                    x.numer() * (&delta / x.denom())
                })
                .collect()
        })
        .collect();
    // Kernel of [N | -delta·I] in ℤ^{k+d}; the first k coordinates of the
    // kernel basis span the valid coefficient lattice.
    let stacked: ZMat = (0..d)
        .map(|j| {
            let mut row = n_mat[j].clone();
            for i in 0..d {
                row.push(if i == j { -delta.clone() } else { BigInt::zero() });
            }
            row
        })
        .collect();
    let kernel = integer_kernel(&stacked);
    debug_assert_eq!(kernel.len(), k);
    kernel
        .iter()
        .map(|c| {
            (0..d)
                .map(|j| {
                    let mut acc = BigRational::zero();
                    for i in 0..k {
                        acc += BigRational::from_integer(c[i].clone()) * &basis_rows[i][j];
                    }
                    debug_assert!(acc.is_integer());
                    acc.to_integer()
                })
                .collect()
        })
        .collect()
}

/// Lower-triangular column Hermite form of a nonsingular square matrix:
/// same column ℤ-span, positive diagonal. The diagonal entries give coset
/// representatives of `ℤ^n / colspan(m)` as `{r : 0 ≤ r_i < h_ii}`.
pub fn column_hermite(m: &[Vec<BigInt>]) -> ZMat {
    let n = m.len();
    let mut a: ZMat = m.to_vec();
    for r in 0..n {
        // Euclidean steps shrink entries right of the pivot to zero.
        loop {
            let mut best: Option<usize> = None;
            for j in r..n {
                if !a[r][j].is_zero() && best.is_none_or(|b| a[r][j].abs() < a[r][b].abs()) {
                    best = Some(j);
                }
            }
            let b = best.expect("nonsingular input");
            for row in &mut a {
                row.swap(r, b);
            }
            let mut done = true;
            for j in r + 1..n {
                if a[r][j].is_zero() {
                    continue;
                }
                let q = a[r][j].div_floor(&a[r][r]);
                for row in &mut a {
                    let sub = &q * &row[r];
                    row[j] -= sub;
                }
                if !a[r][j].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if a[r][r].is_negative() {
            for row in &mut a {
                row[r] = -row[r].clone();
            }
        }
        // Normalize entries left of the pivot into [0, pivot).
        for j in 0..r {
            let q = a[r][j].div_floor(&a[r][r]);
            if q.is_zero() {
                continue;
            }
            for row in &mut a {
                let sub = &q * &row[r];
                row[j] -= sub;
            }
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zi(v: &[i64]) -> ZVec {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn qm(m: &[&[i64]]) -> QMat {
        m.iter().map(|r| to_rational_vec(&zi(r))).collect()
    }

    #[test]
    fn rref_rank() {
        assert_eq!(rank(&qm(&[&[1, 2], &[2, 4]])), 1);
        assert_eq!(rank(&qm(&[&[1, 0], &[0, 1]])), 2);
        assert_eq!(rank(&qm(&[&[0, 0]])), 0);
    }

    #[test]
    fn solve_and_invert() {
        let a = qm(&[&[2, 1], &[1, 1]]);
        let b = to_rational_vec(&zi(&[3, 2]));
        let x = solve(&a, &b).unwrap();
        assert_eq!(x, to_rational_vec(&zi(&[1, 1])));
        let inv = invert(&a).unwrap();
        // a * inv = id
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = BigRational::zero();
                for k in 0..2 {
                    acc += &a[i][k] * &inv[k][j];
                }
                assert_eq!(acc, if i == j { BigRational::one() } else { BigRational::zero() });
            }
        }
        assert!(invert(&qm(&[&[1, 2], &[2, 4]])).is_none());
    }

    #[test]
    fn determinant_signs() {
        assert_eq!(determinant_int(&[zi(&[0, 1]), zi(&[1, 0])]), BigInt::from(-1));
        assert_eq!(determinant_int(&[zi(&[2, 0]), zi(&[0, 3])]), BigInt::from(6));
    }

    #[test]
    fn nullspace_primitive_normal() {
        // Points on the plane x + 2y - z = 0.
        let m = qm(&[&[1, 0, 1], &[0, 1, 2]]);
        let ns = nullspace(&m);
        assert_eq!(ns.len(), 1);
        assert_eq!(primitive(&ns[0]), zi(&[-1, -2, 1]).iter().map(|x| -x).collect::<Vec<_>>());
    }

    #[test]
    fn integer_kernel_small() {
        // Kernel of (2 -1 0) in Z^3 is spanned by (1,2,0) and (0,0,1).
        let kern = integer_kernel(&[zi(&[2, -1, 0])]);
        assert_eq!(kern.len(), 2);
        for v in &kern {
            assert_eq!(&v[0] * 2 - &v[1], BigInt::zero());
        }
        // The kernel lattice contains (1,2,0).
        let target = zi(&[1, 2, 0]);
        // Solve c1*k1 + c2*k2 = target over ℚ, demand integrality.
        let a: QMat = (0..3).map(|j| vec![
            BigRational::from_integer(kern[0][j].clone()),
            BigRational::from_integer(kern[1][j].clone()),
        ]).collect();
        let mut aug = a.clone();
        for (j, row) in aug.iter_mut().enumerate() {
            row.push(BigRational::from_integer(target[j].clone()));
        }
        let piv = rref(&mut aug);
        assert_eq!(piv.len(), 2);
        for j in 0..2 {
            assert!(aug[j][2].is_integer());
        }
    }

    #[test]
    fn saturation_beats_span() {
        // The row span of (2,0) is 2ℤ×0; its saturation is ℤ×0.
        let sat = saturated_basis(&[zi(&[2, 0])]);
        assert_eq!(sat.len(), 1);
        assert_eq!(sat[0][0].abs(), BigInt::one());
        assert_eq!(sat[0][1], BigInt::zero());

        // Full-rank integer basis saturates to all of ℤ².
        let sat = saturated_basis(&[zi(&[1, 1]), zi(&[1, -1])]);
        assert_eq!(sat.len(), 2);
        let det = determinant_int(&sat);
        assert_eq!(det.abs(), BigInt::one());
    }

    #[test]
    fn column_hermite_preserves_determinant_and_span() {
        let m = vec![zi(&[2, 1]), zi(&[0, 3])];
        let h = column_hermite(&m);
        assert_eq!(determinant_int(&h).abs(), determinant_int(&m).abs());
        // Lower triangular with positive diagonal.
        assert!(h[0][1].is_zero());
        assert!(h[0][0].is_positive() && h[1][1].is_positive());
        // Each column of m is an integer combination of columns of h.
        for j in 0..2 {
            let c0 = &m[0][j] / &h[0][0];
            assert_eq!(&c0 * &h[0][0], m[0][j]);
            let rem = &m[1][j] - &c0 * &h[1][0];
            assert!((&rem % &h[1][1]).is_zero());
        }
    }

    #[test]
    fn saturation_of_diagonal_sublattice() {
        // (1,1,1) and (0,3,3) span a rank-2 lattice whose saturation adds (0,1,1).
        let sat = saturated_basis(&[zi(&[1, 1, 1]), zi(&[0, 3, 3])]);
        assert_eq!(sat.len(), 2);
        // (0,1,1) must be an integer combination of the saturated basis.
        let a: QMat = (0..3).map(|j| vec![
            BigRational::from_integer(sat[0][j].clone()),
            BigRational::from_integer(sat[1][j].clone()),
            BigRational::from_integer(BigInt::from([0, 1, 1][j])),
        ]).collect();
        let mut aug = a;
        let piv = rref(&mut aug);
        assert_eq!(piv.len(), 2, "target must lie in the span");
        for row in &aug {
            assert!(row[2].is_integer());
        }
    }
}
