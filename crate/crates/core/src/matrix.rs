//! Exact integer matrix normal forms.
//!
//! Everything here works over arbitrary-precision integers: row-style
//! Hermite normal form, Smith normal form (with or without transform
//! matrices), integer kernels and integer linear solving. These are the
//! workhorses behind smoothness tests, relation-lattice reduction and
//! graded-isomorphism comparisons.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Dense integer matrix, row major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<BigInt>,
}

impl IMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IMat {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IMat::zero(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix");
            data.extend(row);
        }
        IMat {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> IMat {
        let mut t = IMat::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IMat) -> IMat {
        assert_eq!(self.cols, other.rows);
        let mut out = IMat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    if other[(k, j)].is_zero() {
                        continue;
                    }
                    let prod = &self[(i, k)] * &other[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut s = BigInt::zero();
                for j in 0..self.cols {
                    if !self[(i, j)].is_zero() && !v[j].is_zero() {
                        s += &self[(i, j)] * &v[j];
                    }
                }
                s
            })
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[a] += k * row[b]
    fn addmul_row(&mut self, a: usize, b: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let t = &self[(b, j)] * k;
            self[(a, j)] += t;
        }
    }

    /// col[a] += k * col[b]
    fn addmul_col(&mut self, a: usize, b: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let t = &self[(i, b)] * k;
            self[(i, a)] += t;
        }
    }

    fn negate_row(&mut self, a: usize) {
        for j in 0..self.cols {
            let v = -self[(a, j)].clone();
            self[(a, j)] = v;
        }
    }
}

impl std::ops::Index<(usize, usize)> for IMat {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

/// Row-style Hermite normal form: echelon with positive pivots, entries
/// above a pivot reduced into `[0, pivot)`. Zero rows are dropped, so the
/// result is a canonical basis of the row lattice.
pub fn hnf(mat: &IMat) -> IMat {
    let mut m = mat.clone();
    let mut pivot_row = 0;
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    for col in 0..m.cols {
        if pivot_row >= m.rows {
            break;
        }
        // Euclidean elimination below pivot_row in this column.
        loop {
            let mut best: Option<usize> = None;
            for i in pivot_row..m.rows {
                if !m[(i, col)].is_zero() {
                    best = match best {
                        None => Some(i),
                        Some(b) => {
                            if m[(i, col)].abs() < m[(b, col)].abs() {
                                Some(i)
                            } else {
                                Some(b)
                            }
                        }
                    };
                }
            }
            let Some(b) = best else { break };
            m.swap_rows(pivot_row, b);
            let mut done = true;
            for i in pivot_row + 1..m.rows {
                if !m[(i, col)].is_zero() {
                    let q = div_round(&m[(i, col)], &m[(pivot_row, col)]);
                    m.addmul_row(i, pivot_row, &(-q));
                    if !m[(i, col)].is_zero() {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if m[(pivot_row, col)].is_zero() {
            continue;
        }
        if m[(pivot_row, col)].is_negative() {
            m.negate_row(pivot_row);
        }
        // Reduce entries above the pivot into [0, pivot).
        for i in 0..pivot_row {
            let q = m[(i, col)].div_floor(&m[(pivot_row, col)]);
            m.addmul_row(i, pivot_row, &(-q));
        }
        pivots.push((pivot_row, col));
        pivot_row += 1;
    }
    IMat::from_rows((0..pivot_row).map(|i| m.row(i).to_vec()).collect())
}

/// Nearest-integer division, used to shrink entries fast during HNF.
fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(b);
    let two_r: BigInt = &r * 2;
    if two_r.abs() > b.abs() {
        if (r.is_negative()) == (b.is_negative()) {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

pub fn rank(mat: &IMat) -> usize {
    hnf(mat).rows
}

/// Smith normal form result with transforms: `u * a * v = d` where `u`, `v`
/// are unimodular and `d` is diagonal with the divisibility chain.
pub struct Snf {
    pub u: IMat,
    pub v: IMat,
    /// Inverse of `v`, maintained alongside.
    pub vinv: IMat,
    pub d: IMat,
    pub rank: usize,
}

pub fn snf(mat: &IMat) -> Snf {
    let mut a = mat.clone();
    let mut u = IMat::identity(a.rows);
    let mut v = IMat::identity(a.cols);
    let mut vinv = IMat::identity(a.cols);
    let n = a.rows.min(a.cols);
    let mut t = 0;
    while t < n {
        // Find a nonzero entry of minimal absolute value in the remaining block.
        let mut pos: Option<(usize, usize)> = None;
        for i in t..a.rows {
            for j in t..a.cols {
                if !a[(i, j)].is_zero() {
                    pos = match pos {
                        None => Some((i, j)),
                        Some(p) => {
                            if a[(i, j)].abs() < a[p].abs() {
                                Some((i, j))
                            } else {
                                Some(p)
                            }
                        }
                    };
                }
            }
        }
        let Some((pi, pj)) = pos else { break };
        a.swap_rows(t, pi);
        u.swap_rows(t, pi);
        a.swap_cols(t, pj);
        v.swap_cols(t, pj);
        vinv.swap_rows(t, pj);
        // Clear row and column t.
        let mut clean = true;
        for i in t + 1..a.rows {
            if !a[(i, t)].is_zero() {
                let q = div_round(&a[(i, t)], &a[(t, t)]);
                a.addmul_row(i, t, &(-q.clone()));
                u.addmul_row(i, t, &(-q));
                if !a[(i, t)].is_zero() {
                    clean = false;
                }
            }
        }
        for j in t + 1..a.cols {
            if !a[(t, j)].is_zero() {
                let q = div_round(&a[(t, j)], &a[(t, t)]);
                a.addmul_col(j, t, &(-q.clone()));
                v.addmul_col(j, t, &(-q.clone()));
                // vinv tracks the inverse: column op C_j += k*C_t on v
                // corresponds to row op R_t -= k*R_j on vinv.
                vinv.addmul_row(t, j, &q);
                if !a[(t, j)].is_zero() {
                    clean = false;
                }
            }
        }
        if !clean {
            continue;
        }
        // Enforce divisibility: pivot must divide the rest of the block.
        let mut offender: Option<usize> = None;
        'scan: for i in t + 1..a.rows {
            for j in t + 1..a.cols {
                if !(&a[(i, j)] % &a[(t, t)]).is_zero() {
                    offender = Some(i);
                    break 'scan;
                }
            }
        }
        if let Some(i) = offender {
            a.addmul_row(t, i, &BigInt::one());
            u.addmul_row(t, i, &BigInt::one());
            continue;
        }
        if a[(t, t)].is_negative() {
            a.negate_row(t);
            u.negate_row(t);
        }
        t += 1;
    }
    let rank = (0..n).take_while(|&i| !a[(i, i)].is_zero()).count();
    Snf {
        u,
        v,
        vinv,
        d: a,
        rank,
    }
}

/// Nonzero invariant factors (elementary divisors) of `mat`.
pub fn elementary_divisors(mat: &IMat) -> Vec<BigInt> {
    if mat.rows == 0 || mat.cols == 0 {
        return Vec::new();
    }
    let s = snf(mat);
    (0..s.rank).map(|i| s.d[(i, i)].clone()).collect()
}

/// Canonical basis of the right kernel `{x : mat * x = 0}`, returned as rows
/// in Hermite normal form.
pub fn kernel(mat: &IMat) -> Vec<Vec<BigInt>> {
    if mat.cols == 0 {
        return Vec::new();
    }
    if mat.rows == 0 {
        return IMat::identity(mat.cols).to_rows();
    }
    let s = snf(mat);
    // mat = u^-1 d v^-1, so mat*x = 0 iff d * (v^-1 x) = 0 iff v^-1 x has
    // support beyond the rank; kernel basis = trailing columns of v.
    let mut rows = Vec::new();
    for j in s.rank..mat.cols {
        rows.push((0..mat.cols).map(|i| s.v[(i, j)].clone()).collect());
    }
    if rows.is_empty() {
        return rows;
    }
    hnf(&IMat::from_rows(rows)).to_rows()
}

/// One integer solution of `mat * x = b`, if any.
pub fn solve(mat: &IMat, b: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(mat.rows, b.len());
    if mat.cols == 0 {
        return if b.iter().all(|x| x.is_zero()) {
            Some(Vec::new())
        } else {
            None
        };
    }
    let s = snf(mat);
    let ub = s.u.mul_vec(b);
    let mut y = vec![BigInt::zero(); mat.cols];
    for i in 0..mat.rows {
        if i < s.rank {
            let (q, r) = ub[i].div_rem(&s.d[(i, i)]);
            if !r.is_zero() {
                return None;
            }
            y[i] = q;
        } else if !ub[i].is_zero() {
            return None;
        }
    }
    Some(s.v.mul_vec(&y))
}
