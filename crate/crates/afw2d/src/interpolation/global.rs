//! Mesh-level operators: Clement quasi-interpolation, the corrected H1
//! interpolant, the commuting-diagram check and the projection gap on curved
//! elements.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::SeedableRng;

use super::local::{div_coefficients, hat_coefficients, op_w, proj_pi1, proj_pi1_minus, select_t};
use super::{moment_degree, pi2_div, RefVectorPoly, SamplePlan};
use crate::error::Result;
use crate::fields::{PolyField, TrigField, VectorField};
use crate::linalg::Vec2;
use crate::mesh::Mesh;
use crate::par::map_indexed;
use crate::poly;
use crate::quadrature::QuadRule;
use crate::reference::{BasisSet, PolySpaceSpec};
use crate::spaces::{cached, OrderMap};

/// Vertex values of the Clement quasi-interpolant (continuous, piecewise
/// linear in reference coordinates of each element).
#[derive(Clone, Debug)]
pub struct Clement {
    pub values: Vec<Vec2>,
}

impl Clement {
    /// The interpolant on triangle `t` as a reference polynomial.
    pub fn local_poly(&self, mesh: &Mesh, t: usize) -> RefVectorPoly {
        let hats = hat_coefficients();
        let mut out = RefVectorPoly::zeros(1);
        for (i, &v) in mesh.triangles[t].v.iter().enumerate() {
            for c in 0..2 {
                out.coef[c] += &hats[i] * self.values[v][c];
            }
        }
        out
    }
}

/// Per vertex: L2 projection onto affine functions over the vertex patch,
/// evaluated at the vertex.
pub fn clement(mesh: &Mesh, f: &dyn VectorField) -> Clement {
    let degree = if mesh.is_affine() { 8 } else { 16 };
    let rule = QuadRule::triangle(degree).expect("supported degree");
    let nv = mesh.vertices.len();
    let mut gram = vec![Matrix3::<f64>::zeros(); nv];
    let mut rhs = vec![[Vector3::<f64>::zeros(); 2]; nv];
    let contributions = map_indexed(mesh.n_triangles(), |t| {
        let map = mesh.map(t);
        let tri = &mesh.triangles[t];
        let mut g = [Matrix3::<f64>::zeros(); 3];
        let mut b = [[Vector3::<f64>::zeros(); 2]; 3];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let (x, dg) = map.eval(*p);
            let wq = w * dg.determinant();
            let val = f.value([x.x, x.y]);
            for (i, &v) in tri.v.iter().enumerate() {
                let xv = mesh.vertices[v];
                let phi = Vector3::new(1.0, x.x - xv[0], x.y - xv[1]);
                g[i] += phi * phi.transpose() * wq;
                for c in 0..2 {
                    b[i][c] += phi * (val[c] * wq);
                }
            }
        }
        (g, b)
    });
    for (t, (g, b)) in contributions.into_iter().enumerate() {
        for (i, &v) in mesh.triangles[t].v.iter().enumerate() {
            gram[v] += g[i];
            for c in 0..2 {
                rhs[v][c] += b[i][c];
            }
        }
    }
    let values = (0..nv)
        .map(|v| {
            let lu = gram[v].lu();
            // the basis is centred at the vertex, so the value is the constant coefficient
            Vec2::new(
                lu.solve(&rhs[v][0]).map(|s| s[0]).unwrap_or(0.0),
                lu.solve(&rhs[v][1]).map(|s| s[0]).unwrap_or(0.0),
            )
        })
        .collect();
    Clement { values }
}

/// Corrected H1 interpolant W(I - R) + R, stored per element as a reference
/// polynomial of degree r + 2 (physical field = composition with the inverse map).
#[derive(Clone, Debug)]
pub struct WTilde {
    pub local: Vec<RefVectorPoly>,
    pub clement: Clement,
    pub max_cond: f64,
}

fn plan_for(mesh: &Mesh, t: usize, r: usize) -> SamplePlan {
    let map = mesh.map(t);
    SamplePlan::new(&map, moment_degree(r, !map.is_affine()))
}

pub fn op_wtilde(mesh: &Mesh, orders: &OrderMap, f: &dyn VectorField) -> Result<WTilde> {
    let cl = clement(mesh, f);
    let local = map_indexed(mesh.n_triangles(), |t| -> Result<(RefVectorPoly, f64)> {
        let lo = orders.local(mesh, t);
        let sel = select_t(lo.r)?;
        let plan = plan_for(mesh, t, lo.r);
        let rhat = cl.local_poly(mesh, t);
        let diff = plan.sample(f).sub(&plan.sample_composed(&rhat));
        let w = op_w(&plan, lo, sel.t, &diff, Some(t))?;
        Ok((w.to_poly().add(&rhat), w.cond))
    });
    let mut out = Vec::with_capacity(local.len());
    let mut max_cond: f64 = 0.0;
    for l in local {
        let (p, c) = l?;
        out.push(p);
        max_cond = max_cond.max(c);
    }
    Ok(WTilde { local: out, clement: cl, max_cond })
}

/// Maximum relative residuals of the three commuting identities.
#[derive(Clone, Debug, Default)]
pub struct CommutingReport {
    pub n_samples: usize,
    /// div of the full-order interpolant vs projected divergence
    pub div_pi1: f64,
    /// div of the reduced interpolant vs projected divergence
    pub div_pi1_minus: f64,
    /// reduced interpolant of the corrected H1 interpolant vs of the field
    pub wtilde: Option<f64>,
    /// reason the corrected H1 interpolant could not be formed
    pub wtilde_failure: Option<String>,
    pub max_cond: f64,
}

fn rel(diff: &DVector<f64>, reference: &DVector<f64>) -> f64 {
    let d = diff.amax();
    let s = reference.amax();
    if s > 0.0 {
        d / s
    } else {
        d
    }
}

fn div_matrix(spec: PolySpaceSpec, r: usize) -> Arc<DMatrix<f64>> {
    static C: OnceLock<Mutex<HashMap<(PolySpaceSpec, usize), Arc<DMatrix<f64>>>>> = OnceLock::new();
    let m = C.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(d) = m.lock().unwrap().get(&(spec, r)) {
        return d.clone();
    }
    let basis: Arc<BasisSet> = cached(spec);
    let d = Arc::new(div_coefficients(&basis, r));
    m.lock().unwrap().insert((spec, r), d.clone());
    d
}

/// Random smooth test field number `k` of a sample sequence.
pub fn sample_field(k: usize, degree: usize, seed: u64) -> Box<dyn VectorField> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(k as u64));
    if k % 2 == 0 {
        Box::new(PolyField::random(degree, &mut rng))
    } else {
        Box::new(TrigField::random(3, 3.0, &mut rng))
    }
}

/// Residuals of the commuting identities over `n_samples` random smooth fields.
/// Never fails; operator breakdowns are reported in the result.
pub fn check_commuting(mesh: &Mesh, orders: &OrderMap, n_samples: usize, seed: u64) -> CommutingReport {
    let mut rep = CommutingReport { n_samples, wtilde: Some(0.0), ..Default::default() };
    let degree = orders.max_order() + 3;
    for k in 0..n_samples {
        let field = sample_field(k, degree, seed);
        let f: &dyn VectorField = field.as_ref();
        let per = map_indexed(mesh.n_triangles(), |t| {
            let lo = orders.local(mesh, t);
            let plan = plan_for(mesh, t, lo.r);
            let s = plan.sample(f);
            let target = pi2_div(&plan, lo.r, &s);
            let mut out = (0.0f64, 0.0f64, 0.0f64);
            if let Ok(p1) = proj_pi1(&plan, lo, &s) {
                out.0 = rel(&(&*div_matrix(lo.stress_spec(), lo.r) * &p1.coef - &target), &target);
                out.2 = p1.cond;
            } else {
                out.0 = f64::INFINITY;
            }
            match select_t(lo.r).and_then(|sel| proj_pi1_minus(&plan, lo, sel.t, &s)) {
                Ok(pm) => {
                    out.1 = rel(&(&*div_matrix(lo.pi_minus_spec(), lo.r) * &pm.coef - &target), &target);
                    out.2 = out.2.max(pm.cond);
                }
                Err(_) => out.1 = f64::INFINITY,
            }
            out
        });
        for (a, b, c) in per {
            rep.div_pi1 = rep.div_pi1.max(a);
            rep.div_pi1_minus = rep.div_pi1_minus.max(b);
            rep.max_cond = rep.max_cond.max(c);
        }
        if rep.wtilde_failure.is_none() {
            match wtilde_residual(mesh, orders, f) {
                Ok(r) => rep.wtilde = rep.wtilde.map(|w| w.max(r)),
                Err(e) => {
                    rep.wtilde = None;
                    rep.wtilde_failure = Some(e.to_string());
                }
            }
        }
    }
    rep
}

/// max over elements of the relative coefficient difference between the reduced
/// interpolants of the corrected H1 interpolant and of the field itself.
pub fn wtilde_residual(mesh: &Mesh, orders: &OrderMap, f: &dyn VectorField) -> Result<f64> {
    let wt = op_wtilde(mesh, orders, f)?;
    let res = map_indexed(mesh.n_triangles(), |t| -> Result<f64> {
        let lo = orders.local(mesh, t);
        let sel = select_t(lo.r)?;
        let plan = plan_for(mesh, t, lo.r);
        let a = proj_pi1_minus(&plan, lo, sel.t, &plan.sample(f))?;
        let b = proj_pi1_minus(&plan, lo, sel.t, &plan.sample_composed(&wt.local[t]))?;
        Ok(rel(&(&b.coef - &a.coef), &a.coef))
    });
    res.into_iter().try_fold(0.0f64, |m, r| r.map(|r| m.max(r)))
}

/// Gap between the weighted and the standard L2 projection on one element.
#[derive(Clone, Debug)]
pub struct ElementGap {
    pub element: usize,
    pub gap: f64,
}

fn gram_pair(mesh: &Mesh, t: usize, r: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let map = mesh.map(t);
    let rule = QuadRule::triangle(2 * r + 16).expect("supported degree");
    let tab = poly::tabulate(r, &rule.points);
    let d = poly::dim(r);
    let mut g_inv = DMatrix::zeros(d, d);
    let mut g_j = DMatrix::zeros(d, d);
    for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let j = map.eval(*p).1.determinant();
        let row = tab.val.row(q);
        let outer = row.transpose() * row;
        g_inv += &outer * (w / j);
        g_j += &outer * (w * j);
    }
    (g_inv, g_j)
}

/// Exact operator norm of (weighted projection - L2 projection) per element:
/// sqrt(lambda_max(G_{1/J} G_J) - 1).
pub fn projection_gap(mesh: &Mesh, orders: &OrderMap) -> Vec<ElementGap> {
    map_indexed(mesh.n_triangles(), |t| {
        if mesh.map(t).is_affine() {
            return ElementGap { element: t, gap: 0.0 };
        }
        let (g_inv, g_j) = gram_pair(mesh, t, orders.triangle[t]);
        let l = g_j.cholesky().expect("positive Gram matrix").l();
        let s = l.transpose() * g_inv * &l;
        let lmax = s.symmetric_eigenvalues().max();
        ElementGap { element: t, gap: (lmax - 1.0).max(0.0).sqrt() }
    })
}

/// Sampled estimate of the same gap: max over random u (polynomials of degree
/// r + 2 in reference coordinates) of the norm ratio.
pub fn projection_gap_sampled(mesh: &Mesh, orders: &OrderMap, n_samples: usize, seed: u64) -> f64 {
    use rand::Rng;
    let res = map_indexed(mesh.n_triangles(), |t| {
        let r = orders.triangle[t];
        let map = mesh.map(t);
        let plan = SamplePlan::new(&map, 2 * r + 16);
        let tab = poly::tabulate(r, &plan.rule.points);
        // test functions reach beyond the target space so the complement is probed
        let utab = poly::tabulate(r + 2, &plan.rule.points);
        let d = poly::dim(r);
        let mut gphi = DMatrix::zeros(d, d);
        for (q, w) in plan.rule.weights.iter().enumerate() {
            let row = tab.val.row(q);
            gphi += row.transpose() * row * (w / plan.det[q]);
        }
        let chol = gphi.clone().cholesky().expect("positive Gram matrix");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (t as u64).wrapping_mul(0x9e37_79b9));
        let mut worst: f64 = 0.0;
        for _ in 0..n_samples {
            let a = DVector::from_fn(utab.val.ncols(), |_, _| rng.random_range(-1.0..1.0));
            let u = &utab.val * &a;
            let weighted = super::local::pi2_values(&plan, r, u.as_slice());
            let mut b = DVector::zeros(d);
            let mut norm2 = 0.0;
            for (q, w) in plan.rule.weights.iter().enumerate() {
                b += tab.val.row(q).transpose() * (w * u[q]);
                norm2 += w * u[q] * u[q] * plan.det[q];
            }
            let standard = chol.solve(&b);
            let diff = weighted - standard;
            let num = (diff.transpose() * &gphi * &diff)[(0, 0)];
            worst = worst.max((num / norm2).sqrt());
        }
        worst
    });
    res.into_iter().fold(0.0, f64::max)
}
