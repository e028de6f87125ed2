//! Polynomial spaces on the reference triangle with vertices (0,0), (1,0), (0,1).
//!
//! Local edge `i` runs from vertex `i` to vertex `i+1` (counterclockwise). Every
//! space is stored as coefficient columns over the orthonormal basis of
//! `poly::tabulate`, so L2 inner products of functions are plain dot products of
//! coefficient vectors.
//!
//! Hierarchical bases are built as duals of boundary functionals (vertex values,
//! edge moments) taken with minimal norm, plus an orthonormal basis of the
//! functions on which all boundary functionals vanish. Variable edge orders are
//! obtained by dropping edge functions whose trace degree exceeds the edge order.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, Vec2};
use crate::poly::{self, dim, Tabulation};
use crate::quadrature::{self, QuadRule};

/// Highest supported displacement order.
pub const R_MAX: usize = 6;

pub const VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Point on local edge `i` at parameter `s`.
#[inline]
pub fn edge_point(i: usize, s: f64) -> [f64; 2] {
    let a = VERTICES[i];
    let b = VERTICES[(i + 1) % 3];
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

/// Tangent of local edge `i` (not normalized, length of the edge).
#[inline]
pub fn edge_tangent(i: usize) -> Vec2 {
    let a = VERTICES[i];
    let b = VERTICES[(i + 1) % 3];
    Vec2::new(b[0] - a[0], b[1] - a[1])
}

/// Outward normal of local edge `i` scaled by the edge length.
#[inline]
pub fn edge_normal(i: usize) -> Vec2 {
    linalg::rot_cw(edge_tangent(i))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FormKind {
    /// scalar H1 polynomials
    Lambda0,
    /// full vector polynomials P_n with normal traces
    Lambda1,
    /// Raviart-Thomas type space [P_{n-1}]^2 + x P_{n-1}
    Lambda1Minus,
    /// discontinuous scalars
    Lambda2,
}

/// A polynomial space on the reference triangle. `edge_trace` gives the polynomial
/// degree allowed for the (normal) trace on each local edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PolySpaceSpec {
    pub kind: FormKind,
    pub order: usize,
    pub edge_trace: [usize; 3],
}

impl PolySpaceSpec {
    pub fn uniform(kind: FormKind, order: usize) -> Self {
        let t = PolySpaceSpec::max_trace(kind, order);
        PolySpaceSpec { kind, order, edge_trace: [t; 3] }
    }

    fn max_trace(kind: FormKind, order: usize) -> usize {
        match kind {
            FormKind::Lambda1Minus => order.saturating_sub(1),
            _ => order,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let max_order = R_MAX + 2;
        if self.order > max_order {
            return Err(Error::InvalidOrder(format!("order {} above supported maximum {}", self.order, max_order)));
        }
        match self.kind {
            FormKind::Lambda1 | FormKind::Lambda1Minus | FormKind::Lambda0 if self.order == 0 => {
                return Err(Error::InvalidOrder(format!("{:?} requires order >= 1", self.kind)))
            }
            _ => {}
        }
        if self.kind == FormKind::Lambda2 {
            return Ok(());
        }
        let t = PolySpaceSpec::max_trace(self.kind, self.order);
        for (i, &e) in self.edge_trace.iter().enumerate() {
            if e > t {
                return Err(Error::InvalidOrder(format!(
                    "edge {i} trace degree {e} exceeds the interior maximum {t}"
                )));
            }
            if self.kind == FormKind::Lambda0 && e < 1 {
                return Err(Error::InvalidOrder(format!("edge {i}: H1 traces need degree >= 1")));
            }
        }
        Ok(())
    }

    /// Dimension of the space.
    pub fn dimension(&self) -> usize {
        let n = self.order;
        let e: usize = self.edge_trace.iter().sum();
        match self.kind {
            FormKind::Lambda2 => dim(n),
            FormKind::Lambda1 => e + 3 + (n + 1) * n.saturating_sub(1),
            FormKind::Lambda1Minus => e + 3 + n * n.saturating_sub(1),
            FormKind::Lambda0 => e + n.saturating_sub(1) * n.saturating_sub(2) / 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Vertex(usize),
    Edge { edge: usize, k: usize },
    Interior,
}

/// A set of polynomial functions stored as coefficient columns.
#[derive(Clone, Debug)]
pub struct BasisSet {
    pub spec: PolySpaceSpec,
    /// degree of the orthonormal expansion
    pub degree: usize,
    /// number of components (1 or 2)
    pub ncomp: usize,
    /// `(ncomp * dim(degree)) x len()`
    pub coef: DMatrix<f64>,
    pub roles: Vec<Role>,
}

/// Values and derivatives of a basis set at points; each matrix is `npts x nfun`.
#[derive(Clone, Debug)]
pub struct BasisTab {
    pub v: Vec<DMatrix<f64>>,
    pub dx: Vec<DMatrix<f64>>,
    pub dy: Vec<DMatrix<f64>>,
}

impl BasisTab {
    pub fn div(&self) -> DMatrix<f64> {
        &self.dx[0] + &self.dy[1]
    }
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.coef.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.coef.ncols() == 0
    }

    /// Polynomial degree of the trace of function `j` on its edge.
    pub fn trace_degree(&self, j: usize) -> Option<usize> {
        match self.roles[j] {
            Role::Vertex(_) => Some(1),
            Role::Edge { k, .. } => Some(match self.spec.kind {
                FormKind::Lambda0 => k + 2,
                _ => k,
            }),
            Role::Interior => None,
        }
    }

    pub fn tabulate(&self, points: &[[f64; 2]]) -> BasisTab {
        self.tabulate_with(&poly::tabulate(self.degree, points))
    }

    /// Evaluate with a precomputed tabulation of degree >= `self.degree`.
    pub fn tabulate_with(&self, tab: &Tabulation) -> BasisTab {
        let d = dim(self.degree);
        assert!(tab.n >= self.degree);
        let val = tab.val.columns(0, d);
        let dx = tab.dx.columns(0, d);
        let dy = tab.dy.columns(0, d);
        let mut out = BasisTab { v: vec![], dx: vec![], dy: vec![] };
        for c in 0..self.ncomp {
            let block = self.coef.rows(c * d, d);
            out.v.push(val * block);
            out.dx.push(dx * block);
            out.dy.push(dy * block);
        }
        out
    }

    /// Keep only the functions whose trace degree fits `edge_trace`.
    pub fn restrict(&self, edge_trace: [usize; 3]) -> BasisSet {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&j| match self.roles[j] {
                Role::Edge { edge, .. } => self.trace_degree(j).unwrap() <= edge_trace[edge],
                _ => true,
            })
            .collect();
        let mut coef = DMatrix::zeros(self.coef.nrows(), keep.len());
        for (c, &j) in keep.iter().enumerate() {
            coef.set_column(c, &self.coef.column(j));
        }
        BasisSet {
            spec: PolySpaceSpec { edge_trace, ..self.spec },
            degree: self.degree,
            ncomp: self.ncomp,
            coef,
            roles: keep.iter().map(|&j| self.roles[j]).collect(),
        }
    }

    /// Drop vertex functions (used for spaces vanishing at the vertices).
    pub fn without_vertices(&self) -> BasisSet {
        let keep: Vec<usize> = (0..self.len()).filter(|&j| !matches!(self.roles[j], Role::Vertex(_))).collect();
        let mut coef = DMatrix::zeros(self.coef.nrows(), keep.len());
        for (c, &j) in keep.iter().enumerate() {
            coef.set_column(c, &self.coef.column(j));
        }
        BasisSet { coef, roles: keep.iter().map(|&j| self.roles[j]).collect(), ..self.clone() }
    }
}

/// Re-expand vector coefficients (2 components) from degree `from` to degree `to >= from`.
pub fn embed_vector(coef: &DMatrix<f64>, from: usize, to: usize) -> DMatrix<f64> {
    let (df, dt) = (dim(from), dim(to));
    let mut out = DMatrix::zeros(2 * dt, coef.ncols());
    for c in 0..2 {
        out.view_mut((c * dt, 0), (df, coef.ncols())).copy_from(&coef.rows(c * df, df));
    }
    out
}

/// Basis of P_n itself (orthonormal, hierarchical), optionally differentiated.
pub fn scalar_basis(order: usize) -> Result<BasisSet> {
    let spec = PolySpaceSpec::uniform(FormKind::Lambda2, order);
    spec.validate()?;
    Ok(lambda2(order))
}

/// Hierarchical basis of the space described by `spec`.
pub fn vector_space(spec: PolySpaceSpec) -> Result<BasisSet> {
    spec.validate()?;
    let full = full_space(spec.kind, spec.order);
    Ok(full.restrict(spec.edge_trace))
}

fn full_space(kind: FormKind, order: usize) -> Arc<BasisSet> {
    static CACHE: OnceLock<Mutex<HashMap<(FormKind, usize), Arc<BasisSet>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().unwrap().get(&(kind, order)) {
        return b.clone();
    }
    let b = Arc::new(match kind {
        FormKind::Lambda0 => lambda0(order),
        FormKind::Lambda1 => lambda1(order),
        FormKind::Lambda1Minus => lambda1_minus(order),
        FormKind::Lambda2 => lambda2(order),
    });
    cache.lock().unwrap().insert((kind, order), b.clone());
    b
}

fn lambda2(n: usize) -> BasisSet {
    BasisSet {
        spec: PolySpaceSpec::uniform(FormKind::Lambda2, n),
        degree: n,
        ncomp: 1,
        coef: DMatrix::identity(dim(n), dim(n)),
        roles: vec![Role::Interior; dim(n)],
    }
}

/// Normal moment functionals k = 0..=m on each edge, applied to vector coefficient
/// columns of degree `n`. Rows are ordered edge-major.
fn normal_moment_rows(coef: &DMatrix<f64>, n: usize, m: usize) -> DMatrix<f64> {
    let (s, w) = quadrature::gauss_legendre(n + m + 2);
    let d = dim(n);
    let mut rows = DMatrix::zeros(3 * (m + 1), coef.ncols());
    for i in 0..3 {
        let pts: Vec<[f64; 2]> = s.iter().map(|&t| edge_point(i, t)).collect();
        let tab = poly::tabulate(n, &pts);
        let c0 = &tab.val * coef.rows(0, d);
        let c1 = &tab.val * coef.rows(d, d);
        let nrm = edge_normal(i);
        for (q, (&t, &wq)) in s.iter().zip(&w).enumerate() {
            let l = poly::legendre01(m, t);
            for j in 0..coef.ncols() {
                let fl = nrm.x * c0[(q, j)] + nrm.y * c1[(q, j)];
                for k in 0..=m {
                    rows[(i * (m + 1) + k, j)] += wq * l[k] * fl;
                }
            }
        }
    }
    rows
}

/// Split a dictionary into boundary duals and an interior complement.
/// Returns (duals, interior) as coefficient matrices.
fn dual_split(dict: &DMatrix<f64>, functionals: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = dict.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let phi_t = r
        .transpose()
        .solve_lower_triangular(&functionals.transpose())
        .expect("dictionary has full column rank");
    let phi = phi_t.transpose();
    let duals = &q * linalg::pinv(&phi);
    let interior = &q * linalg::null_space(&phi, 1e-10);
    (duals, interior)
}

fn lambda1(n: usize) -> BasisSet {
    let d = dim(n);
    let dict = DMatrix::identity(2 * d, 2 * d);
    let f = normal_moment_rows(&dict, n, n);
    let (duals, interior) = dual_split(&dict, &f);
    let mut roles = Vec::new();
    for i in 0..3 {
        for k in 0..=n {
            roles.push(Role::Edge { edge: i, k });
        }
    }
    roles.extend(std::iter::repeat_n(Role::Interior, interior.ncols()));
    let mut coef = DMatrix::zeros(2 * d, roles.len());
    coef.columns_mut(0, duals.ncols()).copy_from(&duals);
    coef.columns_mut(duals.ncols(), interior.ncols()).copy_from(&interior);
    BasisSet { spec: PolySpaceSpec::uniform(FormKind::Lambda1, n), degree: n, ncomp: 2, coef, roles }
}

/// Coefficients (degree n) of the fields x * m for the homogeneous monomials m of degree n-1.
fn x_times_homogeneous(n: usize) -> DMatrix<f64> {
    let d = dim(n);
    let mut out = DMatrix::zeros(2 * d, n);
    for a in 0..n {
        let b = n - 1 - a;
        let mono = move |p: [f64; 2]| p[0].powi(a as i32) * p[1].powi(b as i32);
        let c0 = poly::project(n, 2 * n, move |p| p[0] * mono(p));
        let c1 = poly::project(n, 2 * n, move |p| p[1] * mono(p));
        out.view_mut((0, a), (d, 1)).copy_from(&c0);
        out.view_mut((d, a), (d, 1)).copy_from(&c1);
    }
    out
}

fn lambda1_minus(n: usize) -> BasisSet {
    assert!(n >= 1);
    let d = dim(n);
    let dl = dim(n - 1);
    let mut dict = DMatrix::zeros(2 * d, 2 * dl + n);
    dict.columns_mut(0, 2 * dl).copy_from(&embed_vector(&DMatrix::identity(2 * dl, 2 * dl), n - 1, n));
    dict.columns_mut(2 * dl, n).copy_from(&x_times_homogeneous(n));
    let m = n - 1;
    let f = normal_moment_rows(&dict, n, m);
    let (duals, interior) = dual_split(&dict, &f);
    let mut roles = Vec::new();
    for i in 0..3 {
        for k in 0..=m {
            roles.push(Role::Edge { edge: i, k });
        }
    }
    roles.extend(std::iter::repeat_n(Role::Interior, interior.ncols()));
    let mut coef = DMatrix::zeros(2 * d, roles.len());
    coef.columns_mut(0, duals.ncols()).copy_from(&duals);
    coef.columns_mut(duals.ncols(), interior.ncols()).copy_from(&interior);
    BasisSet { spec: PolySpaceSpec::uniform(FormKind::Lambda1Minus, n), degree: n, ncomp: 2, coef, roles }
}

fn lambda0(n: usize) -> BasisSet {
    assert!(n >= 1);
    let d = dim(n);
    let ne = n - 1; // edge functionals per edge
    let nb = 3 + 3 * ne;
    let mut f = DMatrix::zeros(nb, d);
    let tv = poly::tabulate(n, &VERTICES);
    for v in 0..3 {
        for j in 0..d {
            f[(v, j)] = tv.val[(v, j)];
        }
    }
    if ne > 0 {
        let (s, w) = quadrature::gauss_legendre(n + 2);
        for i in 0..3 {
            let pts: Vec<[f64; 2]> = s.iter().map(|&t| edge_point(i, t)).collect();
            let tab = poly::tabulate(n, &pts);
            let (a, b) = (i, (i + 1) % 3);
            for (q, (&t, &wq)) in s.iter().zip(&w).enumerate() {
                let qk = poly::bubble_weighted01(ne - 1, t);
                for j in 0..d {
                    let u = tab.val[(q, j)] - (1.0 - t) * tv.val[(a, j)] - t * tv.val[(b, j)];
                    for k in 0..ne {
                        f[(3 + i * ne + k, j)] += wq * qk[k] * u;
                    }
                }
            }
        }
    }
    let dict = DMatrix::identity(d, d);
    let (duals, interior) = dual_split(&dict, &f);
    let mut roles: Vec<Role> = (0..3).map(Role::Vertex).collect();
    for i in 0..3 {
        for k in 0..ne {
            roles.push(Role::Edge { edge: i, k });
        }
    }
    roles.extend(std::iter::repeat_n(Role::Interior, interior.ncols()));
    let mut coef = DMatrix::zeros(d, roles.len());
    coef.columns_mut(0, duals.ncols()).copy_from(&duals);
    coef.columns_mut(duals.ncols(), interior.ncols()).copy_from(&interior);
    BasisSet { spec: PolySpaceSpec::uniform(FormKind::Lambda0, n), degree: n, ncomp: 1, coef, roles }
}

/// Orthonormal basis of curl(P_m vanishing on the boundary), expanded in degree m-1.
/// Returns a `2 dim(m-1) x (m-1)(m-2)/2` matrix (empty for m < 3).
pub fn bubble_curl_basis(m: usize) -> DMatrix<f64> {
    let n = m.saturating_sub(1);
    let d = dim(n);
    if m < 3 {
        return DMatrix::zeros(2 * d, 0);
    }
    let nb = dim(m - 3);
    let mut raw = DMatrix::zeros(2 * d, nb);
    let rule = QuadRule::triangle(2 * n).expect("supported degree");
    let tb = poly::tabulate(m - 3, &rule.points);
    let tn = poly::tabulate(n, &rule.points);
    for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let (x, y) = (p[0], p[1]);
        let chi = x * y * (1.0 - x - y);
        let chix = y * (1.0 - 2.0 * x - y);
        let chiy = x * (1.0 - x - 2.0 * y);
        for j in 0..nb {
            let (b, bx, by) = (tb.val[(q, j)], tb.dx[(q, j)], tb.dy[(q, j)]);
            // curl(s) = (ds/dy, -ds/dx)
            let c0 = chiy * b + chi * by;
            let c1 = -(chix * b + chi * bx);
            for i in 0..d {
                raw[(i, j)] += w * c0 * tn.val[(q, i)];
                raw[(d + i, j)] += w * c1 * tn.val[(q, i)];
            }
        }
    }
    linalg::orthonormalize(&raw)
}

/// The blended family h_i(t) = (1-t) f_i + t g_i used to close the
/// Raviart-Thomas type interpolation for displacement order `r`.
#[derive(Clone, Debug)]
pub struct HFamily {
    pub order: usize,
    /// degree of the coefficient expansion (= order)
    pub degree: usize,
    /// basis of curl of bubbles of degree order+1
    pub f: DMatrix<f64>,
    /// orthonormal complement of grad P_order in [P_{order-1}]^2
    pub g: DMatrix<f64>,
}

impl HFamily {
    pub fn len(&self) -> usize {
        self.f.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.f.ncols() == 0
    }

    pub fn at(&self, t: f64) -> DMatrix<f64> {
        &self.f * (1.0 - t) + &self.g * t
    }
}

pub fn h_family(r: usize) -> Result<HFamily> {
    if r > R_MAX {
        return Err(Error::InvalidOrder(format!("order {r} above supported maximum {R_MAX}")));
    }
    let d = dim(r);
    if r < 2 {
        return Ok(HFamily { order: r, degree: r, f: DMatrix::zeros(2 * d, 0), g: DMatrix::zeros(2 * d, 0) });
    }
    let f = bubble_curl_basis(r + 1);
    let dl = dim(r - 1);
    let rule = QuadRule::triangle(2 * r).expect("supported degree");
    let tr = poly::tabulate(r, &rule.points);
    let tl = poly::tabulate(r - 1, &rule.points);
    let mut grads = DMatrix::zeros(2 * dl, d - 1);
    for (q, w) in rule.weights.iter().enumerate() {
        for j in 1..d {
            for i in 0..dl {
                grads[(i, j - 1)] += w * tr.dx[(q, j)] * tl.val[(q, i)];
                grads[(dl + i, j - 1)] += w * tr.dy[(q, j)] * tl.val[(q, i)];
            }
        }
    }
    let g = embed_vector(&linalg::complement(&grads, 1e-10), r - 1, r);
    debug_assert_eq!(f.ncols(), g.ncols());
    Ok(HFamily { order: r, degree: r, f, g })
}

/// Evaluate vector coefficient columns of degree `n` at quadrature points.
pub fn eval_vector(coef: &DMatrix<f64>, n: usize, tab: &Tabulation) -> [DMatrix<f64>; 2] {
    let d = dim(n);
    let val = tab.val.columns(0, d);
    [val * coef.rows(0, d), val * coef.rows(d, d)]
}

/// L2 projection of a scalar function onto P_n given by values at a rule's points.
pub fn project_values(n: usize, rule: &QuadRule, values: &[f64]) -> DVector<f64> {
    let tab = poly::tabulate(n, &rule.points);
    let wv = DVector::from_iterator(values.len(), values.iter().zip(&rule.weights).map(|(v, w)| v * w));
    tab.val.transpose() * wv
}

/// Reference quadrature (re-exported for the module map).
pub fn quadrature(degree: usize) -> Result<Arc<QuadRule>> {
    QuadRule::triangle(degree)
}
