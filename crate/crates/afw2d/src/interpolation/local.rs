//! Element operators: weighted L2 projection, the two H(div) interpolants, the
//! vertex-free H1 interpolant and the choice of the blending parameter.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use super::{FieldSamples, Functionals, InteriorTest, RefVectorPoly, SamplePlan};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, min_singular_value, rot_cw, Mat2, SquareSolver, Vec2};
use crate::poly::{self, dim};
use crate::reference::{edge_point, edge_tangent, project_values, BasisSet, BasisTab, R_MAX};
use crate::spaces::{cached, LocalOrder};

/// Admissibility threshold for scaled smallest singular values.
pub const TAU_T: f64 = 1e-8;
/// The blending parameter is searched on {k / T_GRID}.
pub const T_GRID: usize = 16;

/// Coefficients of an element operator with the conditioning of its system.
#[derive(Clone, Debug)]
pub struct LocalResult {
    pub coef: DVector<f64>,
    pub cond: f64,
}

type Cache<K, V> = OnceLock<Mutex<HashMap<K, V>>>;

fn memo<K: std::hash::Hash + Eq + Clone, V: Clone>(cache: &Cache<K, V>, key: K, f: impl FnOnce() -> V) -> V {
    let m = cache.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = m.lock().unwrap().get(&key) {
        return v.clone();
    }
    let v = f();
    m.lock().unwrap().insert(key, v.clone());
    v
}

fn reference_plan(r: usize) -> Arc<SamplePlan> {
    static C: Cache<usize, Arc<SamplePlan>> = OnceLock::new();
    memo(&C, r, || Arc::new(SamplePlan::reference(super::moment_degree(r, false))))
}

/// Samples of the functions of a two-component basis on the reference triangle.
fn reference_samples(basis: &BasisSet, plan: &SamplePlan) -> Vec<FieldSamples> {
    let tab = basis.tabulate(&plan.rule.points);
    let edge: Vec<BasisTab> = (0..3)
        .map(|i| {
            let pts: Vec<[f64; 2]> = plan.edge_s.iter().map(|&s| edge_point(i, s)).collect();
            basis.tabulate(&pts)
        })
        .collect();
    (0..basis.len())
        .map(|j| FieldSamples {
            val: (0..plan.x.len()).map(|q| Vec2::new(tab.v[0][(q, j)], tab.v[1][(q, j)])).collect(),
            grad: (0..plan.x.len())
                .map(|q| Mat2::new(tab.dx[0][(q, j)], tab.dy[0][(q, j)], tab.dx[1][(q, j)], tab.dy[1][(q, j)]))
                .collect(),
            edge_val: std::array::from_fn(|i| {
                (0..plan.edge_s.len()).map(|q| Vec2::new(edge[i].v[0][(q, j)], edge[i].v[1][(q, j)])).collect()
            }),
        })
        .collect()
}

fn system(f: &Functionals, basis: &BasisSet, plan: &SamplePlan) -> DMatrix<f64> {
    let samples = reference_samples(basis, plan);
    let mut m = DMatrix::zeros(f.len(), basis.len());
    for (j, s) in samples.iter().enumerate() {
        m.set_column(j, &f.apply(plan, s));
    }
    m
}

fn pi1_functionals(lo: LocalOrder) -> Functionals {
    Functionals { r: lo.r, interior: InteriorTest::Bubbles, edge: lo.edge.map(|e| e + 2), tangential: false }
}

fn pi1_minus_functionals(lo: LocalOrder, t: f64) -> Functionals {
    Functionals { r: lo.r, interior: InteriorTest::Blend(t), edge: lo.edge.map(|e| e + 1), tangential: false }
}

fn w_functionals(lo: LocalOrder, t: f64) -> Functionals {
    Functionals { r: lo.r, interior: InteriorTest::Blend(t), edge: lo.edge.map(|e| e + 1), tangential: true }
}

/// Moment matrix of the full-order H(div) interpolant on the reference triangle.
pub fn pi1_matrix(lo: LocalOrder) -> DMatrix<f64> {
    system(&pi1_functionals(lo), &cached(lo.stress_spec()), &reference_plan(lo.r))
}

/// Moment matrix of the reduced H(div) interpolant at blending parameter `t`.
pub fn pi1_minus_matrix(lo: LocalOrder, t: f64) -> DMatrix<f64> {
    system(&pi1_minus_functionals(lo, t), &cached(lo.pi_minus_spec()), &reference_plan(lo.r))
}

/// Vertex-free vector H1 basis (component 0 functions, then component 1).
pub(crate) fn w_basis(lo: LocalOrder) -> Arc<BasisSet> {
    static C: Cache<LocalOrder, Arc<BasisSet>> = OnceLock::new();
    memo(&C, lo, || Arc::new(cached(lo.w_spec()).without_vertices()))
}

struct WTab {
    v: DMatrix<f64>,
    dx: DMatrix<f64>,
    dy: DMatrix<f64>,
    edge: [DMatrix<f64>; 3],
}

fn w_tab(lo: LocalOrder, degree: usize) -> Arc<WTab> {
    static C: Cache<(LocalOrder, usize), Arc<WTab>> = OnceLock::new();
    memo(&C, (lo, degree), || {
        let b = w_basis(lo);
        let rule = crate::quadrature::QuadRule::triangle(degree).expect("supported degree");
        let t = b.tabulate(&rule.points);
        let (s, _) = crate::quadrature::gauss_legendre(degree / 2 + 2);
        let edge = std::array::from_fn(|i| {
            let pts: Vec<[f64; 2]> = s.iter().map(|&x| edge_point(i, x)).collect();
            b.tabulate(&pts).v[0].clone()
        });
        Arc::new(WTab { v: t.v[0].clone(), dx: t.dx[0].clone(), dy: t.dy[0].clone(), edge })
    })
}

/// Moment matrix of the H1 interpolant on an element. The unknown reference
/// field v is mapped to w = B v / det B with B the centroid Jacobian; the
/// physical field is w composed with the inverse element map.
pub fn e_matrix(lo: LocalOrder, t: f64, plan: &SamplePlan) -> DMatrix<f64> {
    let f = w_functionals(lo, t);
    let tab = w_tab(lo, plan.degree);
    let n = tab.v.ncols();
    let b = plan.b;
    let detb = b.determinant();
    let inv: Vec<Mat2> = plan.dg.iter().map(|j| j.try_inverse().expect("regular map")).collect();
    let mut m = DMatrix::zeros(f.len(), 2 * n);
    for c in 0..2 {
        let bc: Vec2 = b.column(c) / detb;
        for j in 0..n {
            let s = FieldSamples {
                val: (0..plan.x.len()).map(|q| bc * tab.v[(q, j)]).collect(),
                grad: (0..plan.x.len())
                    .map(|q| bc * nalgebra::RowVector2::new(tab.dx[(q, j)], tab.dy[(q, j)]) * inv[q])
                    .collect(),
                edge_val: std::array::from_fn(|i| (0..plan.edge_s.len()).map(|q| bc * tab.edge[i][(q, j)]).collect()),
            };
            m.set_column(c * n + j, &f.apply(plan, &s));
        }
    }
    m
}

/// The H1 interpolant's moment matrix on the reference triangle.
pub fn c_matrix(lo: LocalOrder, t: f64) -> DMatrix<f64> {
    e_matrix(lo, t, &reference_plan(lo.r))
}

fn solver(m: &DMatrix<f64>, context: &str) -> Result<Arc<SquareSolver>> {
    SquareSolver::new(m)
        .map(Arc::new)
        .ok_or_else(|| Error::SingularSystem { context: context.to_string(), element: None, c_h: None })
}

fn pi1_solver(lo: LocalOrder) -> Result<Arc<SquareSolver>> {
    static C: Cache<LocalOrder, Result<Arc<SquareSolver>>> = OnceLock::new();
    memo(&C, lo, || solver(&pi1_matrix(lo), "full H(div) interpolant"))
}

fn pi1_minus_solver(lo: LocalOrder, t: f64) -> Result<Arc<SquareSolver>> {
    static C: Cache<(LocalOrder, u64), Result<Arc<SquareSolver>>> = OnceLock::new();
    memo(&C, (lo, t.to_bits()), || solver(&pi1_minus_matrix(lo, t), "reduced H(div) interpolant"))
}

fn c_solver(lo: LocalOrder, t: f64) -> Result<Arc<SquareSolver>> {
    static C: Cache<(LocalOrder, u64), Result<Arc<SquareSolver>>> = OnceLock::new();
    memo(&C, (lo, t.to_bits()), || solver(&c_matrix(lo, t), "H1 interpolant"))
}

/// Weighted L2 projection from values at the plan's interior points.
pub fn pi2_values(plan: &SamplePlan, r: usize, values: &[f64]) -> DVector<f64> {
    let weighted: Vec<f64> = values.iter().zip(&plan.det).map(|(v, d)| v * d).collect();
    project_values(r, &plan.rule, &weighted)
}

/// Weighted L2 projection of a scalar function onto the (pulled-back) P_r.
pub fn proj_pi2(plan: &SamplePlan, r: usize, f: &dyn Fn([f64; 2]) -> f64) -> DVector<f64> {
    let vals: Vec<f64> = plan.x.iter().map(|&x| f(x)).collect();
    pi2_values(plan, r, &vals)
}

/// Weighted L2 projection of the divergence of a sampled field. The mean is
/// taken from the boundary flux, which is exact for the interpolants.
pub fn pi2_div(plan: &SamplePlan, r: usize, s: &FieldSamples) -> DVector<f64> {
    let vals: Vec<f64> = s.grad.iter().map(|g| g.trace()).collect();
    let mut out = pi2_values(plan, r, &vals);
    let mut flux = 0.0;
    for i in 0..3 {
        let zeta = edge_tangent(i);
        for (q, &wq) in plan.edge_w.iter().enumerate() {
            flux += wq * s.edge_val[i][q].dot(&rot_cw(plan.edge_dg[i][q] * zeta));
        }
    }
    out[0] = flux * poly::tabulate(0, &[[0.0, 0.0]]).val[(0, 0)];
    out
}

/// Matrix taking basis coefficients to the P_r coefficients of the reference divergence.
pub fn div_coefficients(basis: &BasisSet, r: usize) -> DMatrix<f64> {
    let rule = crate::quadrature::QuadRule::triangle(2 * basis.degree + 2).expect("supported degree");
    let div = basis.tabulate(&rule.points).div();
    let mut out = DMatrix::zeros(dim(r), basis.len());
    for j in 0..basis.len() {
        let vals: Vec<f64> = (0..rule.len()).map(|q| div[(q, j)]).collect();
        out.set_column(j, &project_values(r, &rule, &vals));
    }
    out
}

/// Full-order H(div) interpolant of a sampled field.
pub fn proj_pi1(plan: &SamplePlan, lo: LocalOrder, s: &FieldSamples) -> Result<LocalResult> {
    let sol = pi1_solver(lo)?;
    let rhs = pi1_functionals(lo).apply(plan, s);
    Ok(LocalResult { coef: sol.solve(&rhs), cond: sol.cond })
}

/// Reduced H(div) interpolant of a sampled field at blending parameter `t`.
pub fn proj_pi1_minus(plan: &SamplePlan, lo: LocalOrder, t: f64, s: &FieldSamples) -> Result<LocalResult> {
    let sol = pi1_minus_solver(lo, t)?;
    let rhs = pi1_minus_functionals(lo, t).apply(plan, s);
    Ok(LocalResult { coef: sol.solve(&rhs), cond: sol.cond })
}

/// Result of the H1 interpolant on one element.
#[derive(Clone, Debug)]
pub struct WLocal {
    pub lo: LocalOrder,
    /// coefficients over the vertex-free vector basis
    pub coef: DVector<f64>,
    pub b: Mat2,
    pub cond: f64,
}

impl WLocal {
    /// The reference field w = B v / det B as a polynomial of degree r + 2.
    pub fn to_poly(&self) -> RefVectorPoly {
        let basis = w_basis(self.lo);
        let n = basis.len();
        let v = [&basis.coef * self.coef.rows(0, n), &basis.coef * self.coef.rows(n, n)];
        let detb = self.b.determinant();
        let mut out = RefVectorPoly::zeros(basis.degree);
        for c in 0..2 {
            out.coef[c] = (&v[0] * self.b[(c, 0)] + &v[1] * self.b[(c, 1)]) / detb;
        }
        out
    }
}

/// H1 interpolant vanishing at the vertices. `element` and `c_h` only
/// annotate errors.
pub fn op_w(plan: &SamplePlan, lo: LocalOrder, t: f64, s: &FieldSamples, element: Option<usize>) -> Result<WLocal> {
    let sol = if plan_is_affine(plan) {
        c_solver(lo, t)?
    } else {
        let e = e_matrix(lo, t, plan);
        match SquareSolver::new(&e) {
            Some(x) => Arc::new(x),
            None => {
                return Err(Error::SingularSystem {
                    context: "H1 interpolant on a curved element".into(),
                    element,
                    c_h: Some(plan_distortion(plan)),
                })
            }
        }
    };
    let rhs = w_functionals(lo, t).apply(plan, s);
    Ok(WLocal { lo, coef: sol.solve(&rhs), b: plan.b, cond: sol.cond })
}

fn plan_is_affine(plan: &SamplePlan) -> bool {
    let scale = plan.b.amax();
    plan.dg.iter().all(|j| (j - plan.b).amax() <= 1e-14 * scale)
}

fn plan_distortion(plan: &SamplePlan) -> f64 {
    let binv = plan.b.try_inverse().unwrap_or_else(Mat2::zeros);
    let nb = binv.singular_values().max();
    plan.dg.iter().map(|j| (j - plan.b).singular_values().max() * nb).fold(0.0, f64::max)
}

/// Chosen blending parameter for one order with the scaled smallest singular
/// values of both reference systems.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TSelection {
    pub r: usize,
    pub t: f64,
    pub min_sv_pi_minus: f64,
    pub min_sv_c: f64,
}

fn scaled_min_sv(m: &DMatrix<f64>) -> f64 {
    min_singular_value(m) / max_abs(m).max(f64::MIN_POSITIVE)
}

/// Scaled smallest singular values of both systems on the t grid.
pub fn t_scan(r: usize) -> Vec<TSelection> {
    let lo = LocalOrder::uniform(r);
    (0..=T_GRID)
        .map(|k| {
            let t = k as f64 / T_GRID as f64;
            TSelection {
                r,
                t,
                min_sv_pi_minus: scaled_min_sv(&pi1_minus_matrix(lo, t)),
                min_sv_c: scaled_min_sv(&c_matrix(lo, t)),
            }
        })
        .collect()
}

/// Grid value of t maximizing the worse of the two scaled singular values.
/// Ties keep the smallest t.
pub fn select_t(r: usize) -> Result<TSelection> {
    if r > R_MAX {
        return Err(Error::InvalidOrder(format!("order {r} above {R_MAX}")));
    }
    static C: Cache<usize, Result<TSelection>> = OnceLock::new();
    memo(&C, r, || {
        // below order 2 there are no blended moments and t is irrelevant
        let scan = if r < 2 { t_scan(r).into_iter().take(1).collect() } else { t_scan(r) };
        let mut best = scan[0];
        for s in &scan[1..] {
            if s.min_sv_pi_minus.min(s.min_sv_c) > best.min_sv_pi_minus.min(best.min_sv_c) {
                best = *s;
            }
        }
        if best.min_sv_pi_minus.min(best.min_sv_c) <= TAU_T {
            return Err(Error::NoAdmissibleT(r));
        }
        Ok(best)
    })
}

/// Polynomial coefficients of the reference Lagrange hats (degree 1).
pub(crate) fn hat_coefficients() -> [DVector<f64>; 3] {
    [
        poly::project(1, 2, |p| 1.0 - p[0] - p[1]),
        poly::project(1, 2, |p| p[0]),
        poly::project(1, 2, |p| p[1]),
    ]
}
