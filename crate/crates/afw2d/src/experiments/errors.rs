//! Error norms of discrete solutions and best approximations.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::exact::ExactSolution;
use crate::assembly::{local_coefficients, ElementTab, MixedSystem, Solution};
use crate::error::Result;
use crate::mesh::Mesh;
use crate::par::map_indexed;
use crate::quadrature::QuadRule;
use crate::spaces::DofMap;
use crate::sparse::{Csr, SparseLu};

/// Layers of geometric grading towards a singular vertex.
pub const CORNER_LAYERS: usize = 3;

/// Errors in the norms of the stability estimate, with the matching norms of
/// the exact solution.
#[derive(Clone, Debug, Default)]
pub struct ErrorRecord {
    pub sigma_l2: f64,
    pub div_sigma_l2: f64,
    pub sigma_hdiv: f64,
    pub u_l2: f64,
    pub p_l2: f64,
    /// sqrt of the sum of the squared stress (H(div)), displacement and rotation errors
    pub total: f64,
    /// the same combination of norms of the exact solution
    pub norm: f64,
    /// squared total error per element
    pub element_sq: Vec<f64>,
}

impl ErrorRecord {
    /// Total error as a percentage of the norm of the solution.
    pub fn total_pct(&self) -> f64 {
        100.0 * self.total / self.norm
    }
}

/// Quadrature for error integrals on triangle `t`, graded towards a vertex
/// that coincides with the singular point of the solution.
pub fn error_rule(mesh: &Mesh, t: usize, r: usize, exact: &dyn ExactSolution) -> Arc<QuadRule> {
    let curved = !mesh.map(t).is_affine();
    let degree = 2 * r + 10 + if curved { 8 } else { 0 };
    if let Some(c) = exact.singular_point() {
        for (i, &v) in mesh.triangles[t].v.iter().enumerate() {
            let x = mesh.vertices[v];
            if (x[0] - c[0]).hypot(x[1] - c[1]) < 1e-12 {
                return Arc::new(QuadRule::graded(degree, i, CORNER_LAYERS).expect("supported degree"));
            }
        }
    }
    QuadRule::triangle(degree).expect("supported degree")
}

/// Integrals of squared errors and squared exact norms on one element:
/// [stress, div stress, displacement, rotation] for each.
fn element_errors(mesh: &Mesh, dofs: &DofMap, sol: &Solution, exact: &dyn ExactSolution, t: usize) -> ([f64; 4], [f64; 4]) {
    let rule = error_rule(mesh, t, dofs.local[t].r, exact);
    let et = ElementTab::new(mesh, dofs, t, &rule);
    let lc = local_coefficients(dofs, sol, t);
    let mut err = [0.0; 4];
    let mut norm = [0.0; 4];
    for q in 0..et.w.len() {
        let x = et.x[q];
        let w = et.w[q];
        let (u, g, _) = exact.eval(x);
        let sigma = exact.material().stress(&((g + g.transpose()) * 0.5));
        let div = exact.div_stress(x);
        let p = 0.5 * (g[(1, 0)] - g[(0, 1)]);
        let mut es = 0.0;
        let mut ed = 0.0;
        for s in 0..2 {
            let mut row = nalgebra::Vector2::zeros();
            let mut dv = 0.0;
            for k in 0..et.nb {
                row += et.phi[q][k] * lc.stress[s][k];
                dv += et.div[q][k] * lc.stress[s][k];
            }
            es += (row - sigma.row(s).transpose()).norm_squared();
            ed += (dv - div[s]).powi(2);
        }
        let mut uh = nalgebra::Vector2::zeros();
        let mut ph = 0.0;
        for i in 0..et.nd {
            uh[0] += et.psi[q][i] * lc.u[0][i];
            uh[1] += et.psi[q][i] * lc.u[1][i];
            ph += et.psi[q][i] * lc.p[i];
        }
        err[0] += w * es;
        err[1] += w * ed;
        err[2] += w * (uh - u).norm_squared();
        err[3] += w * (ph - p).powi(2);
        norm[0] += w * sigma.norm_squared();
        norm[1] += w * div.norm_squared();
        norm[2] += w * u.norm_squared();
        norm[3] += w * p * p;
    }
    (err, norm)
}

pub fn compute_errors(mesh: &Mesh, dofs: &DofMap, sol: &Solution, exact: &dyn ExactSolution) -> ErrorRecord {
    let parts = map_indexed(mesh.n_triangles(), |t| element_errors(mesh, dofs, sol, exact, t));
    let mut e = [0.0; 4];
    let mut n = [0.0; 4];
    let mut element_sq = Vec::with_capacity(parts.len());
    for (pe, pn) in &parts {
        for i in 0..4 {
            e[i] += pe[i];
            n[i] += pn[i];
        }
        element_sq.push(pe.iter().sum());
    }
    ErrorRecord {
        sigma_l2: e[0].sqrt(),
        div_sigma_l2: e[1].sqrt(),
        sigma_hdiv: (e[0] + e[1]).sqrt(),
        u_l2: e[2].sqrt(),
        p_l2: e[3].sqrt(),
        total: e.iter().sum::<f64>().sqrt(),
        norm: n.iter().sum::<f64>().sqrt(),
        element_sq,
    }
}

struct ElementProjection {
    stress_rhs: DVector<f64>,
    u: [DVector<f64>; 2],
    p: DVector<f64>,
}

fn element_projection(mesh: &Mesh, dofs: &DofMap, exact: &dyn ExactSolution, t: usize) -> ElementProjection {
    let rule = error_rule(mesh, t, dofs.local[t].r, exact);
    let et = ElementTab::new(mesh, dofs, t, &rule);
    let (nb, nd) = (et.nb, et.nd);
    let mut stress_rhs = DVector::zeros(2 * nb);
    let mut mass = DMatrix::zeros(nd, nd);
    let mut rhs = DMatrix::zeros(nd, 3);
    for q in 0..et.w.len() {
        let x = et.x[q];
        let w = et.w[q];
        let (u, g, _) = exact.eval(x);
        let sigma = exact.material().stress(&((g + g.transpose()) * 0.5));
        let div = exact.div_stress(x);
        let p = 0.5 * (g[(1, 0)] - g[(0, 1)]);
        for s in 0..2 {
            for k in 0..nb {
                stress_rhs[s * nb + k] += w * (sigma.row(s).transpose().dot(&et.phi[q][k]) + div[s] * et.div[q][k]);
            }
        }
        for i in 0..nd {
            for j in 0..nd {
                mass[(i, j)] += w * et.psi[q][i] * et.psi[q][j];
            }
            rhs[(i, 0)] += w * u[0] * et.psi[q][i];
            rhs[(i, 1)] += w * u[1] * et.psi[q][i];
            rhs[(i, 2)] += w * p * et.psi[q][i];
        }
    }
    let sol = mass.cholesky().expect("positive mass matrix").solve(&rhs);
    ElementProjection {
        stress_rhs,
        u: [sol.column(0).into_owned(), sol.column(1).into_owned()],
        p: sol.column(2).into_owned(),
    }
}

/// Best approximation of the exact solution in the discrete product space:
/// H(div) projection of the stress, L2 projections of displacement and rotation.
/// Returns the projected coefficients and their errors.
pub fn best_approx(mesh: &Mesh, sys: &MixedSystem, exact: &dyn ExactSolution) -> Result<(Solution, ErrorRecord)> {
    let dofs = &sys.dofs;
    let parts = map_indexed(mesh.n_triangles(), |t| element_projection(mesh, dofs, exact, t));
    let ns = dofs.n_stress();
    let mut b = DVector::zeros(ns);
    let mut u = DVector::zeros(dofs.n_disp);
    let mut p = DVector::zeros(dofs.n_rot);
    for (t, part) in parts.iter().enumerate() {
        let g = &dofs.gather[t];
        let nb = g.len();
        for s in 0..2 {
            for (k, &(d, sign)) in g.iter().enumerate() {
                b[dofs.stress_index(s, d)] += sign * part.stress_rhs[s * nb + k];
            }
        }
        for c in 0..2 {
            for (i, v) in part.u[c].iter().enumerate() {
                u[dofs.disp_index(t, c, i) - ns] = *v;
            }
        }
        for (i, v) in part.p.iter().enumerate() {
            p[dofs.rot_index(t, i) - ns - dofs.n_disp] = *v;
        }
    }
    let mut gram: Vec<(usize, usize, f64)> = sys.stress_l2.iter().collect();
    gram.extend(sys.stress_divdiv.iter());
    let sigma = SparseLu::new(&Csr::from_triplets(ns, ns, gram))?.solve(&b)?;
    let sol = Solution { sigma, u, p, residual: 0.0, weak_symmetry: 0.0 };
    let rec = compute_errors(mesh, dofs, &sol, exact);
    Ok((sol, rec))
}
