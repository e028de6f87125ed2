//! Projection-based interpolation operators and their verification.
//!
//! All element operators are defined by moments of the pulled-back field on the
//! reference triangle. Moments are computed from one set of samples per element
//! (values and physical gradients at interior quadrature points, values at edge
//! quadrature points), so operators that share functionals agree exactly.

mod global;
mod local;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::fields::VectorField;
use crate::linalg::{adj, rot_cw, Mat2, Vec2};
use crate::mesh::ElementMap;
use crate::poly::{self, dim};
use crate::quadrature::{gauss_legendre, QuadRule};
use crate::reference::{bubble_curl_basis, edge_point, edge_tangent, eval_vector, h_family};

pub use global::{
    check_commuting, clement, op_wtilde, projection_gap, projection_gap_sampled, sample_field, wtilde_residual,
    Clement, CommutingReport,
    ElementGap, WTilde,
};
pub use local::{
    c_matrix, div_coefficients, e_matrix, op_w, pi1_matrix, pi1_minus_matrix, pi2_div, pi2_values, proj_pi1,
    proj_pi1_minus, proj_pi2, select_t, t_scan, LocalResult, TSelection, WLocal, T_GRID, TAU_T,
};

/// Quadrature degree used for element moments at displacement order `r`.
pub fn moment_degree(r: usize, curved: bool) -> usize {
    2 * r + 8 + if curved { 10 } else { 0 }
}

/// Reference points and map data shared by all moments on one element.
#[derive(Clone, Debug)]
pub struct SamplePlan {
    pub degree: usize,
    pub rule: Arc<QuadRule>,
    pub x: Vec<[f64; 2]>,
    pub dg: Vec<Mat2>,
    pub det: Vec<f64>,
    pub edge_s: Vec<f64>,
    pub edge_w: Vec<f64>,
    pub edge_x: [Vec<[f64; 2]>; 3],
    pub edge_dg: [Vec<Mat2>; 3],
    /// Jacobian at the centroid
    pub b: Mat2,
}

impl SamplePlan {
    pub fn new(map: &ElementMap, degree: usize) -> SamplePlan {
        let rule = QuadRule::triangle(degree).expect("supported quadrature degree");
        let mut x = Vec::with_capacity(rule.len());
        let mut dg = Vec::with_capacity(rule.len());
        for &p in &rule.points {
            let (xp, j) = map.eval(p);
            x.push([xp.x, xp.y]);
            dg.push(j);
        }
        let det = dg.iter().map(|j| j.determinant()).collect();
        let (edge_s, edge_w) = gauss_legendre(degree / 2 + 2);
        let mut edge_x: [Vec<[f64; 2]>; 3] = Default::default();
        let mut edge_dg: [Vec<Mat2>; 3] = Default::default();
        for i in 0..3 {
            for &s in &edge_s {
                let (xp, j) = map.eval(edge_point(i, s));
                edge_x[i].push([xp.x, xp.y]);
                edge_dg[i].push(j);
            }
        }
        SamplePlan { degree, rule, x, dg, det, edge_s, edge_w, edge_x, edge_dg, b: map.centroid_jacobian() }
    }

    /// Plan on the reference triangle itself (identity map).
    pub fn reference(degree: usize) -> SamplePlan {
        SamplePlan::new(&reference_map(), degree)
    }

    pub fn sample(&self, f: &dyn VectorField) -> FieldSamples {
        let mut val = Vec::with_capacity(self.x.len());
        let mut grad = Vec::with_capacity(self.x.len());
        for &p in &self.x {
            let (v, g) = f.eval(p);
            val.push(v);
            grad.push(g);
        }
        let edge_val = std::array::from_fn(|i| self.edge_x[i].iter().map(|&p| f.value(p)).collect());
        FieldSamples { val, grad, edge_val }
    }

    /// Samples of the physical field whose pullback by composition is the
    /// reference polynomial `p`.
    pub fn sample_composed(&self, p: &RefVectorPoly) -> FieldSamples {
        let tab = poly::tabulate(p.degree, &self.rule.points);
        let mut val = Vec::with_capacity(self.x.len());
        let mut grad = Vec::with_capacity(self.x.len());
        for q in 0..self.x.len() {
            let (v, d) = p.eval_tab(&tab, q);
            val.push(v);
            grad.push(d * self.dg[q].try_inverse().expect("regular map"));
        }
        let edge_val = std::array::from_fn(|i| {
            let pts: Vec<[f64; 2]> = self.edge_s.iter().map(|&s| edge_point(i, s)).collect();
            let t = poly::tabulate(p.degree, &pts);
            (0..pts.len()).map(|q| p.eval_tab(&t, q).0).collect()
        });
        FieldSamples { val, grad, edge_val }
    }

    pub fn is_identity(&self) -> bool {
        self.dg.iter().all(|j| (j - Mat2::identity()).amax() == 0.0)
    }
}

pub(crate) fn reference_map() -> ElementMap {
    use crate::mesh::PatchMap;
    let v = crate::reference::VERTICES;
    ElementMap::new(PatchMap::Affine { p: v }, v)
}

/// Values and physical gradients of a field at the points of a plan.
#[derive(Clone, Debug, Default)]
pub struct FieldSamples {
    pub val: Vec<Vec2>,
    pub grad: Vec<Mat2>,
    pub edge_val: [Vec<Vec2>; 3],
}

impl FieldSamples {
    pub fn sub(&self, other: &FieldSamples) -> FieldSamples {
        FieldSamples {
            val: self.val.iter().zip(&other.val).map(|(a, b)| a - b).collect(),
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| a - b).collect(),
            edge_val: std::array::from_fn(|i| {
                self.edge_val[i].iter().zip(&other.edge_val[i]).map(|(a, b)| a - b).collect()
            }),
        }
    }
}

/// Vector polynomial on the reference triangle in the orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct RefVectorPoly {
    pub degree: usize,
    pub coef: [DVector<f64>; 2],
}

impl RefVectorPoly {
    pub fn zeros(degree: usize) -> Self {
        RefVectorPoly { degree, coef: [DVector::zeros(dim(degree)), DVector::zeros(dim(degree))] }
    }

    /// Value and reference Jacobian from a tabulation of degree >= self.degree.
    pub fn eval_tab(&self, tab: &poly::Tabulation, q: usize) -> (Vec2, Mat2) {
        let mut v = Vec2::zeros();
        let mut d = Mat2::zeros();
        for c in 0..2 {
            for j in 0..dim(self.degree) {
                let a = self.coef[c][j];
                v[c] += a * tab.val[(q, j)];
                d[(c, 0)] += a * tab.dx[(q, j)];
                d[(c, 1)] += a * tab.dy[(q, j)];
            }
        }
        (v, d)
    }

    pub fn eval(&self, xh: [f64; 2]) -> (Vec2, Mat2) {
        self.eval_tab(&poly::tabulate(self.degree, &[xh]), 0)
    }

    /// Re-expand in a higher degree.
    pub fn raise(&self, degree: usize) -> RefVectorPoly {
        assert!(degree >= self.degree);
        let mut out = RefVectorPoly::zeros(degree);
        for c in 0..2 {
            out.coef[c].rows_mut(0, dim(self.degree)).copy_from(&self.coef[c]);
        }
        out
    }

    pub fn add(&self, other: &RefVectorPoly) -> RefVectorPoly {
        let n = self.degree.max(other.degree);
        let (a, b) = (self.raise(n), other.raise(n));
        RefVectorPoly { degree: n, coef: [&a.coef[0] + &b.coef[0], &a.coef[1] + &b.coef[1]] }
    }
}

/// Interior test functions of a functional set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InteriorTest {
    /// curl of bubbles of degree r + 2
    Bubbles,
    /// the blended family at parameter t
    Blend(f64),
}

/// A set of moment functionals on one element.
///
/// Ordering: divergence moments against the non-constant orthonormal P_r
/// functions, interior moments, normal moments per edge, then (optionally)
/// tangential moments per edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Functionals {
    pub r: usize,
    pub interior: InteriorTest,
    /// number of normal (and tangential) moments on each local edge
    pub edge: [usize; 3],
    pub tangential: bool,
}

struct Tables {
    psi: DMatrix<f64>,
    bubble: [DMatrix<f64>; 2],
    hf: [DMatrix<f64>; 2],
    hg: [DMatrix<f64>; 2],
    leg: DMatrix<f64>,
}

fn tables(r: usize, degree: usize) -> Arc<Tables> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Tables>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&(r, degree)) {
        return t.clone();
    }
    let rule = QuadRule::triangle(degree).expect("supported quadrature degree");
    let tab = poly::tabulate(r + 1, &rule.points);
    let psi = tab.val.columns(0, dim(r)).into_owned();
    let bubble = eval_vector(&bubble_curl_basis(r + 2), r + 1, &tab);
    let h = h_family(r).expect("order within range");
    let hf = eval_vector(&h.f, r, &tab);
    let hg = eval_vector(&h.g, r, &tab);
    let (s, _) = gauss_legendre(degree / 2 + 2);
    let mut leg = DMatrix::zeros(s.len(), r + 3);
    for (q, &sq) in s.iter().enumerate() {
        for (k, v) in poly::legendre01(r + 2, sq).into_iter().enumerate() {
            leg[(q, k)] = v;
        }
    }
    let t = Arc::new(Tables { psi, bubble, hf, hg, leg });
    cache.lock().unwrap().insert((r, degree), t.clone());
    t
}

impl Functionals {
    pub fn interior_len(&self) -> usize {
        match self.interior {
            InteriorTest::Bubbles => (self.r + 1) * self.r / 2,
            InteriorTest::Blend(_) => self.r * self.r.saturating_sub(1) / 2,
        }
    }

    pub fn len(&self) -> usize {
        let e: usize = self.edge.iter().sum();
        dim(self.r) - 1 + self.interior_len() + e * if self.tangential { 2 } else { 1 }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Apply all functionals to the samples of one field.
    pub fn apply(&self, plan: &SamplePlan, s: &FieldSamples) -> DVector<f64> {
        let tb = tables(self.r, plan.degree);
        let mut out = DVector::zeros(self.len());
        let nd = dim(self.r) - 1;
        let ni = self.interior_len();
        let w = &plan.rule.weights;
        for q in 0..w.len() {
            let div = plan.det[q] * s.grad[q].trace() * w[q];
            for j in 0..nd {
                out[j] += div * tb.psi[(q, j + 1)];
            }
            if ni > 0 {
                let pulled = adj(&plan.dg[q]) * s.val[q] * w[q];
                for i in 0..ni {
                    let test = match self.interior {
                        InteriorTest::Bubbles => Vec2::new(tb.bubble[0][(q, i)], tb.bubble[1][(q, i)]),
                        InteriorTest::Blend(t) => {
                            Vec2::new(tb.hf[0][(q, i)], tb.hf[1][(q, i)]) * (1.0 - t)
                                + Vec2::new(tb.hg[0][(q, i)], tb.hg[1][(q, i)]) * t
                        }
                    };
                    out[nd + i] += pulled.dot(&test);
                }
            }
        }
        let mut off = nd + ni;
        let tan_off = off + self.edge.iter().sum::<usize>();
        let mut toff = tan_off;
        for i in 0..3 {
            let m = self.edge[i];
            let zeta = edge_tangent(i);
            for (q, &wq) in plan.edge_w.iter().enumerate() {
                let dz = plan.edge_dg[i][q] * zeta;
                let v = s.edge_val[i][q];
                let fln = v.dot(&rot_cw(dz)) * wq;
                let flt = v.dot(&dz) * wq;
                for k in 0..m {
                    out[off + k] += fln * tb.leg[(q, k)];
                    if self.tangential {
                        out[toff + k] += flt * tb.leg[(q, k)];
                    }
                }
            }
            if self.tangential {
                // express the tangential rows in the frame of the centroid Jacobian
                let bt = plan.b.transpose() * plan.b * zeta;
                let nz = zeta.norm_squared();
                let alpha = bt.dot(&zeta) / nz;
                let beta = bt.dot(&rot_cw(zeta)) / nz;
                let detb = plan.b.determinant();
                for k in 0..m {
                    out[toff + k] = (detb * out[toff + k] - beta * out[off + k]) / alpha;
                }
            }
            off += m;
            toff += m;
        }
        out
    }
}
