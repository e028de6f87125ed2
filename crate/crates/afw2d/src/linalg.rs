//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// SVD with singular values sorted in descending order. Returns (U, s, V) with
/// full V for square inputs.
pub fn svd_sorted(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let s = svd.singular_values;
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal));
    let k = idx.len();
    let mut us = DMatrix::zeros(u.nrows(), k);
    let mut vs = DMatrix::zeros(vt.ncols(), k);
    let mut ss = Vec::with_capacity(k);
    for (j, &i) in idx.iter().enumerate() {
        us.set_column(j, &u.column(i));
        vs.set_column(j, &vt.row(i).transpose());
        ss.push(s[i]);
    }
    (us, ss, vs)
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Smallest singular value of a square matrix (0 for an empty matrix is reported as +inf).
pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    singular_values(m).last().copied().unwrap_or(f64::INFINITY)
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&a), Some(&b)) if b > 0.0 => a / b,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

/// Orthonormal basis of the null space of `m`, using a relative singular value cutoff.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let rows = m.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let (_, s, v) = svd_sorted(&padded);
    let smax = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&x| x > rel_tol * smax).count();
    v.columns(rank, n - rank).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the column span of `m` in R^{nrows}.
pub fn complement(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    null_space(&m.transpose(), rel_tol)
}

/// Orthonormal basis for the column span of `m` (assumed full column rank).
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return m.clone();
    }
    let (u, s, _) = svd_sorted(m);
    let rank = s.iter().filter(|&&x| x > 1e-12 * s[0]).count();
    u.columns(0, rank).into_owned()
}

/// Moore-Penrose pseudo-inverse.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (u, s, v) = svd_sorted(m);
    let smax = s.first().copied().unwrap_or(0.0);
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (k, &sk) in s.iter().enumerate() {
        if sk > 1e-13 * smax {
            out += (v.column(k) * u.column(k).transpose()) / sk;
        }
    }
    out
}

/// A factorized square system that also carries its conditioning data.
#[derive(Clone, Debug)]
pub struct SquareSolver {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    pub min_sv: f64,
    pub max_norm: f64,
    pub cond: f64,
}

impl SquareSolver {
    pub fn new(m: &DMatrix<f64>) -> Option<Self> {
        assert_eq!(m.nrows(), m.ncols(), "square system expected");
        let s = singular_values(m);
        let (smax, smin) = match (s.first(), s.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (1.0, 1.0),
        };
        let max_norm = max_abs(m).max(f64::MIN_POSITIVE);
        if m.nrows() > 0 && smin <= 1e-13 * smax {
            return None;
        }
        Some(SquareSolver {
            lu: m.clone().lu(),
            min_sv: smin,
            max_norm,
            cond: if smin > 0.0 { smax / smin } else { f64::INFINITY },
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.l().nrows()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        if b.len() == 0 {
            return b.clone();
        }
        self.lu.solve(b).expect("factorization checked at construction")
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        if b.nrows() == 0 {
            return b.clone();
        }
        self.lu.solve(b).expect("factorization checked at construction")
    }
}

/// 90 degree clockwise rotation; maps a counterclockwise tangent to the outward normal.
#[inline]
pub fn rot_cw(a: Vec2) -> Vec2 {
    Vec2::new(a.y, -a.x)
}

/// Adjugate of a 2x2 matrix: det(m) m^{-1}.
#[inline]
pub fn adj(m: &Mat2) -> Mat2 {
    Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let n = null_space(&m, 1e-12);
        assert_eq!(n.ncols(), 2);
        assert!((&m * &n).norm() < 1e-14);
        assert!((n.transpose() * &n - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn pinv_inverts_square() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let p = pinv(&m);
        assert!((&m * p - DMatrix::identity(2, 2)).norm() < 1e-13);
    }

    #[test]
    fn adjugate_identity() {
        let m = Mat2::new(1.0, 2.0, 3.0, 5.0);
        let a = adj(&m);
        assert!((m * a - Mat2::identity() * m.determinant()).norm() < 1e-14);
    }

    #[test]
    fn rotation_identity_for_piola_flux() {
        // adj(B)^T R a = R B a
        let b = Mat2::new(1.3, -0.2, 0.4, 0.9);
        let a = Vec2::new(0.3, -1.1);
        let lhs = adj(&b).transpose() * rot_cw(a);
        let rhs = rot_cw(b * a);
        assert!((lhs - rhs).norm() < 1e-14);
    }
}
