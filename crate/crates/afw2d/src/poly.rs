//! Orthonormal polynomial bases: a hierarchical L2-orthonormal basis of P_n on the
//! reference triangle (ordered by total degree) and orthonormal Legendre
//! polynomials on [0, 1].

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::quadrature::QuadRule;

/// Highest supported polynomial degree on the triangle.
pub const NMAX: usize = 16;

#[inline]
pub fn dim(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}


#[inline]
fn idx(p: usize, q: usize) -> usize {
    (p + q) * (p + q + 1) / 2 + q
}

/// Values and first derivatives of the basis at a set of points;
/// each matrix is `npts x dim(n)`.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub n: usize,
    pub val: DMatrix<f64>,
    pub dx: DMatrix<f64>,
    pub dy: DMatrix<f64>,
}

fn raw_at(n: usize, x: f64, y: f64, v: &mut [f64], vx: &mut [f64], vy: &mut [f64]) {
    let x1 = 2.0 * y - 1.0;
    let f3 = 0.25 * (1.0 - x1) * (1.0 - x1);
    let f3y = -(1.0 - x1);
    v[0] = 1.0;
    vx[0] = 0.0;
    vy[0] = 0.0;
    let g = 2.0 * x + y - 1.0;
    for p in 1..=n {
        let a = (2 * p - 1) as f64 / p as f64;
        let i = idx(p, 0);
        let i1 = idx(p - 1, 0);
        v[i] = a * g * v[i1];
        vx[i] = a * (2.0 * v[i1] + g * vx[i1]);
        vy[i] = a * (v[i1] + g * vy[i1]);
        if p > 1 {
            let i2 = idx(p - 2, 0);
            v[i] -= f3 * (a - 1.0) * v[i2];
            vx[i] -= f3 * (a - 1.0) * vx[i2];
            vy[i] -= (a - 1.0) * (f3y * v[i2] + f3 * vy[i2]);
        }
    }
    for p in 0..n {
        let i0 = idx(p, 0);
        let i1 = idx(p, 1);
        let h = x1 * (1.5 + p as f64) + 0.5 + p as f64;
        let hy = 2.0 * (1.5 + p as f64);
        v[i1] = v[i0] * h;
        vx[i1] = vx[i0] * h;
        vy[i1] = vy[i0] * h + v[i0] * hy;
        for q in 1..(n - p) {
            let (a1, a2, a3) = jrc(2 * p + 1, q);
            let iq = idx(p, q);
            let iqm = idx(p, q - 1);
            let iqp = idx(p, q + 1);
            let l = x1 * a1 + a2;
            v[iqp] = v[iq] * l - v[iqm] * a3;
            vx[iqp] = vx[iq] * l - vx[iqm] * a3;
            vy[iqp] = vy[iq] * l + v[iq] * 2.0 * a1 - vy[iqm] * a3;
        }
    }
    for p in 0..=n {
        for q in 0..=(n - p) {
            let s = ((p as f64 + 0.5) * (p + q + 1) as f64).sqrt() * 2.0;
            let i = idx(p, q);
            v[i] *= s;
            vx[i] *= s;
            vy[i] *= s;
        }
    }
}

fn jrc(a: usize, n: usize) -> (f64, f64, f64) {
    let (a, n) = (a as f64, n as f64);
    let an = (a + 2.0 * n + 1.0) * (a + 2.0 * n + 2.0) / (2.0 * (n + 1.0) * (a + n + 1.0));
    let bn = a * a * (a + 2.0 * n + 1.0) / (2.0 * (n + 1.0) * (a + n + 1.0) * (a + 2.0 * n));
    let cn = n * (a + n) * (a + 2.0 * n + 2.0) / ((n + 1.0) * (a + n + 1.0) * (a + 2.0 * n));
    (an, bn, cn)
}

/// Upper-triangular correction `C` such that `raw * C` is exactly orthonormal.
/// Its leading blocks serve every lower degree because the basis is hierarchical.
fn correction() -> &'static DMatrix<f64> {
    static C: OnceLock<DMatrix<f64>> = OnceLock::new();
    C.get_or_init(|| {
        let d = dim(NMAX);
        let rule = QuadRule::triangle(2 * NMAX).expect("supported degree");
        let mut gram = DMatrix::<f64>::zeros(d, d);
        let (mut v, mut vx, mut vy) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            raw_at(NMAX, p[0], p[1], &mut v, &mut vx, &mut vy);
            for i in 0..d {
                let wi = w * v[i];
                for j in 0..=i {
                    gram[(i, j)] += wi * v[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                gram[(j, i)] = gram[(i, j)];
            }
        }
        let l = gram.cholesky().expect("Gram matrix is SPD").unpack();
        // raw = L * orth  =>  orth = L^{-1} raw  =>  row-vector form: orth^T = raw^T L^{-T}
        let linv = l.solve_lower_triangular(&DMatrix::identity(d, d)).expect("nonsingular");
        linv.transpose()
    })
}

/// Tabulate the orthonormal basis of P_n and its gradient at `points`.
pub fn tabulate(n: usize, points: &[[f64; 2]]) -> Tabulation {
    assert!(n <= NMAX, "degree {n} above supported maximum {NMAX}");
    let d = dim(n);
    let npts = points.len();
    let mut raw = DMatrix::zeros(npts, d);
    let mut rawx = DMatrix::zeros(npts, d);
    let mut rawy = DMatrix::zeros(npts, d);
    let (mut v, mut vx, mut vy) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    for (k, p) in points.iter().enumerate() {
        raw_at(n, p[0], p[1], &mut v, &mut vx, &mut vy);
        for i in 0..d {
            raw[(k, i)] = v[i];
            rawx[(k, i)] = vx[i];
            rawy[(k, i)] = vy[i];
        }
    }
    let c = correction().view((0, 0), (d, d));
    Tabulation { n, val: &raw * c, dx: &rawx * c, dy: &rawy * c }
}

/// L2 projection coefficients of a pointwise function onto P_n, using a rule exact
/// for degree `quad_degree` (exact when f is a polynomial of degree quad_degree - n).
pub fn project(n: usize, quad_degree: usize, f: impl Fn([f64; 2]) -> f64) -> nalgebra::DVector<f64> {
    let rule = QuadRule::triangle(quad_degree).expect("supported degree");
    let tab = tabulate(n, &rule.points);
    let mut out = nalgebra::DVector::zeros(dim(n));
    for (k, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let fw = w * f(*p);
        for j in 0..dim(n) {
            out[j] += fw * tab.val[(k, j)];
        }
    }
    out
}

/// Orthonormal Legendre polynomials on [0, 1]: sqrt(2k+1) P_k(2s-1), k = 0..=n.
pub fn legendre01(n: usize, s: f64) -> Vec<f64> {
    let z = 2.0 * s - 1.0;
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = z;
    }
    for k in 2..=n {
        p[k] = ((2 * k - 1) as f64 * z * p[k - 1] - (k - 1) as f64 * p[k - 2]) / k as f64;
    }
    for (k, v) in p.iter_mut().enumerate() {
        *v *= ((2 * k + 1) as f64).sqrt();
    }
    p
}

/// Polynomials orthogonal on [0, 1] under the weight s(1-s): the derivatives
/// P'_{k+1}(2s-1), k = 0..=n.
pub fn bubble_weighted01(n: usize, s: f64) -> Vec<f64> {
    let z = 2.0 * s - 1.0;
    (0..=n).map(|k| crate::quadrature::legendre_with_derivative(k + 1, z).1).collect()
}
