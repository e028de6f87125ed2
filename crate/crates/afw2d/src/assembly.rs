//! Mixed system for plane elasticity with weakly imposed stress symmetry.
//!
//! Unknowns are the stress (two H(div) rows), the displacement and the
//! rotation. The discrete equations are
//!
//! ```text
//! (A s, t) + (div t, u) - (S t, p) = <u0, t n>     for all stress t
//! (div s, v)                       = -(f, v)       for all displacement v
//! (S s, q)                         = 0             for all rotation q
//! ```
//!
//! with the isotropic compliance `A` and `S t = t_12 - t_21`.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::linalg::{rot_cw, Mat2, Vec2};
use crate::mesh::Mesh;
use crate::par::map_indexed;
use crate::poly;
use crate::quadrature::{gauss_legendre, QuadRule};
use crate::reference::{edge_point, edge_tangent};
use crate::spaces::{stress_basis, DofMap, OrderMap};
use crate::sparse::{Csr, SparseLu};

/// Isotropic material given by its Lame constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material {
    pub mu: f64,
    pub lambda: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material { mu: 1.0, lambda: 1.0 }
    }
}

impl Material {
    pub fn new(mu: f64, lambda: f64) -> Result<Material> {
        if !(mu > 0.0 && mu.is_finite()) || !(lambda >= 0.0) || lambda.is_nan() {
            return Err(Error::InvalidArgument(format!("material needs mu > 0 and lambda >= 0 (got {mu}, {lambda})")));
        }
        Ok(Material { mu, lambda })
    }

    /// Lame constants from Young's modulus and Poisson ratio (plane strain).
    pub fn from_engineering(e: f64, nu: f64) -> Result<Material> {
        Material::new(e / (2.0 * (1.0 + nu)), e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)))
    }

    /// Weight of the trace term in the compliance; stays below 1/2 as lambda grows.
    pub fn trace_weight(&self) -> f64 {
        if self.lambda.is_infinite() {
            0.5
        } else {
            self.lambda / (2.0 * self.mu + 2.0 * self.lambda)
        }
    }

    pub fn compliance(&self, s: &Mat2) -> Mat2 {
        (s - Mat2::identity() * (self.trace_weight() * s.trace())) / (2.0 * self.mu)
    }

    pub fn stress(&self, strain: &Mat2) -> Mat2 {
        strain * (2.0 * self.mu) + Mat2::identity() * (self.lambda * strain.trace())
    }
}

pub type PointFn = Arc<dyn Fn([f64; 2]) -> Vec2 + Send + Sync>;

/// Material, body force and displacement prescribed on the whole boundary.
#[derive(Clone)]
pub struct Problem {
    pub material: Material,
    pub body_force: PointFn,
    pub boundary_displacement: PointFn,
}

impl Problem {
    /// Zero load and zero boundary displacement.
    pub fn homogeneous(material: Material) -> Problem {
        let zero: PointFn = Arc::new(|_| Vec2::zeros());
        Problem { material, body_force: zero.clone(), boundary_displacement: zero }
    }
}

/// Triangle quadrature degree for element integrals at order `r`.
pub fn quad_degree(r: usize, curved: bool) -> usize {
    if curved {
        2 * r + 14
    } else {
        2 * r + 4
    }
}

/// Basis functions of one element evaluated at its quadrature points, mapped to
/// physical space.
pub struct ElementTab {
    pub nb: usize,
    pub nd: usize,
    pub x: Vec<[f64; 2]>,
    /// quadrature weight times Jacobian
    pub w: Vec<f64>,
    /// `phi[q][k]`: physical stress-row basis function k
    pub phi: Vec<Vec<Vec2>>,
    pub div: Vec<Vec<f64>>,
    /// physical scalar basis (displacement components and rotation)
    pub psi: Vec<Vec<f64>>,
}

impl ElementTab {
    pub fn new(mesh: &Mesh, dofs: &DofMap, t: usize, rule: &QuadRule) -> ElementTab {
        let lo = dofs.local[t];
        let basis = stress_basis(lo);
        let map = mesh.map(t);
        let tab = basis.tabulate(&rule.points);
        let div = tab.div();
        let stab = poly::tabulate(lo.r, &rule.points);
        let nb = basis.len();
        let nd = lo.scalar_dim();
        let mut out = ElementTab { nb, nd, x: vec![], w: vec![], phi: vec![], div: vec![], psi: vec![] };
        for (q, (p, wq)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let (x, dg) = map.eval(*p);
            let j = dg.determinant();
            out.x.push([x.x, x.y]);
            out.w.push(wq * j);
            out.phi.push((0..nb).map(|k| dg * Vec2::new(tab.v[0][(q, k)], tab.v[1][(q, k)]) / j).collect());
            out.div.push((0..nb).map(|k| div[(q, k)] / j).collect());
            out.psi.push((0..nd).map(|i| stab.val[(q, i)] / j).collect());
        }
        out
    }

    pub fn for_element(mesh: &Mesh, dofs: &DofMap, t: usize) -> ElementTab {
        let rule = QuadRule::triangle(quad_degree(dofs.local[t].r, !mesh.map(t).is_affine())).expect("supported degree");
        ElementTab::new(mesh, dofs, t, &rule)
    }
}

/// Skew part of a matrix field whose only nonzero row is `row` with value `v`.
fn skew(row: usize, v: Vec2) -> f64 {
    if row == 0 {
        v.y
    } else {
        -v.x
    }
}

struct ElementBlocks {
    a: DMatrix<f64>,
    l2: DMatrix<f64>,
    divdiv: DMatrix<f64>,
    bd: DMatrix<f64>,
    bs: DMatrix<f64>,
    mass: DMatrix<f64>,
    g: DVector<f64>,
    f: DVector<f64>,
}

fn element_blocks(mesh: &Mesh, dofs: &DofMap, problem: &Problem, boundary: &[bool], t: usize) -> ElementBlocks {
    let et = ElementTab::for_element(mesh, dofs, t);
    let (nb, nd) = (et.nb, et.nd);
    let mu2 = 2.0 * problem.material.mu;
    let c = problem.material.trace_weight();
    let mut b = ElementBlocks {
        a: DMatrix::zeros(2 * nb, 2 * nb),
        l2: DMatrix::zeros(2 * nb, 2 * nb),
        divdiv: DMatrix::zeros(2 * nb, 2 * nb),
        bd: DMatrix::zeros(2 * nd, 2 * nb),
        bs: DMatrix::zeros(nd, 2 * nb),
        mass: DMatrix::zeros(nd, nd),
        g: DVector::zeros(2 * nb),
        f: DVector::zeros(2 * nd),
    };
    for q in 0..et.w.len() {
        let w = et.w[q];
        let phi = &et.phi[q];
        let div = &et.div[q];
        let psi = &et.psi[q];
        for k in 0..nb {
            for l in 0..nb {
                let dot = w * phi[k].dot(&phi[l]);
                let dd = w * div[k] * div[l];
                for s in 0..2 {
                    b.l2[(s * nb + k, s * nb + l)] += dot;
                    b.divdiv[(s * nb + k, s * nb + l)] += dd;
                    b.a[(s * nb + k, s * nb + l)] += dot / mu2;
                    for s2 in 0..2 {
                        b.a[(s * nb + k, s2 * nb + l)] -= w * c * phi[k][s] * phi[l][s2] / mu2;
                    }
                }
            }
        }
        for i in 0..nd {
            for k in 0..nb {
                for s in 0..2 {
                    b.bd[(s * nd + i, s * nb + k)] += w * div[k] * psi[i];
                    b.bs[(i, s * nb + k)] += w * skew(s, phi[k]) * psi[i];
                }
            }
            for j in 0..nd {
                b.mass[(i, j)] += w * psi[i] * psi[j];
            }
        }
        let f = (problem.body_force)(et.x[q]);
        for i in 0..nd {
            for s in 0..2 {
                b.f[s * nd + i] += w * f[s] * psi[i];
            }
        }
    }
    for m in [&mut b.a, &mut b.l2, &mut b.divdiv] {
        *m = (&*m + m.transpose()) * 0.5;
    }
    let tri = &mesh.triangles[t];
    let map = mesh.map(t);
    let lo = dofs.local[t];
    let basis = stress_basis(lo);
    let (gs, gw) = gauss_legendre(lo.r + 8);
    for i in 0..3 {
        if !boundary[tri.e[i]] {
            continue;
        }
        let pts: Vec<[f64; 2]> = gs.iter().map(|&s| edge_point(i, s)).collect();
        let tab = basis.tabulate(&pts);
        let n = rot_cw(edge_tangent(i));
        for (q, p) in pts.iter().enumerate() {
            let u0 = (problem.boundary_displacement)(map.point(*p));
            for k in 0..nb {
                let flux = tab.v[0][(q, k)] * n.x + tab.v[1][(q, k)] * n.y;
                for s in 0..2 {
                    b.g[s * nb + k] += gw[q] * u0[s] * flux;
                }
            }
        }
    }
    b
}

/// Assembled blocks of the mixed system.
#[derive(Clone, Debug)]
pub struct MixedSystem {
    pub dofs: DofMap,
    /// compliance block, stress x stress
    pub a: Csr,
    /// divergence block, displacement x stress
    pub b_div: Csr,
    /// skew block, rotation x stress
    pub b_skew: Csr,
    pub stress_l2: Csr,
    pub stress_divdiv: Csr,
    /// L2 Gram matrix of displacement and rotation (indices relative to the first displacement dof)
    pub scalar_mass: Csr,
    /// boundary term for the stress equation
    pub load_stress: DVector<f64>,
    /// body force moments for the displacement equation
    pub load_disp: DVector<f64>,
}

/// Boundary flag per edge.
pub fn boundary_edges(mesh: &Mesh) -> Vec<bool> {
    mesh.edge_triangles().iter().zip(&mesh.edges).map(|(t, e)| t.len() == 1 || e.boundary.is_some()).collect()
}

pub fn assemble(mesh: &Mesh, orders: &OrderMap, problem: &Problem) -> Result<MixedSystem> {
    let dofs = DofMap::build(mesh, orders)?;
    let boundary = boundary_edges(mesh);
    let blocks = map_indexed(mesh.n_triangles(), |t| element_blocks(mesh, &dofs, problem, &boundary, t));
    let ns = dofs.n_stress();
    let n_disp = dofs.n_disp;
    let mut ta = Vec::new();
    let mut tl2 = Vec::new();
    let mut tdd = Vec::new();
    let mut tbd = Vec::new();
    let mut tbs = Vec::new();
    let mut tm = Vec::new();
    let mut g = DVector::zeros(ns);
    let mut f = DVector::zeros(n_disp);
    for (t, b) in blocks.iter().enumerate() {
        let lo = dofs.local[t];
        let nb = dofs.gather[t].len();
        let nd = lo.scalar_dim();
        let sg: Vec<(usize, f64)> = (0..2 * nb)
            .map(|k| {
                let (d, sign) = dofs.gather[t][k % nb];
                (dofs.stress_index(k / nb, d), sign)
            })
            .collect();
        for (k, &(gk, sk)) in sg.iter().enumerate() {
            g[gk] += sk * b.g[k];
            for (l, &(gl, sl)) in sg.iter().enumerate() {
                let s = sk * sl;
                ta.push((gk, gl, s * b.a[(k, l)]));
                tl2.push((gk, gl, s * b.l2[(k, l)]));
                tdd.push((gk, gl, s * b.divdiv[(k, l)]));
            }
            for c in 0..2 {
                for i in 0..nd {
                    let row = dofs.disp_index(t, c, i) - ns;
                    tbd.push((row, gk, sk * b.bd[(c * nd + i, k)]));
                }
            }
            for i in 0..nd {
                tbs.push((dofs.rot_index(t, i) - ns - n_disp, gk, sk * b.bs[(i, k)]));
            }
        }
        for c in 0..2 {
            for i in 0..nd {
                f[dofs.disp_index(t, c, i) - ns] += b.f[c * nd + i];
            }
        }
        let scalar_rows: Vec<Vec<usize>> = vec![
            (0..nd).map(|i| dofs.disp_index(t, 0, i) - ns).collect(),
            (0..nd).map(|i| dofs.disp_index(t, 1, i) - ns).collect(),
            (0..nd).map(|i| dofs.rot_index(t, i) - ns).collect(),
        ];
        for rows in &scalar_rows {
            for i in 0..nd {
                for j in 0..nd {
                    tm.push((rows[i], rows[j], b.mass[(i, j)]));
                }
            }
        }
    }
    let nc = n_disp + dofs.n_rot;
    Ok(MixedSystem {
        a: Csr::from_triplets(ns, ns, ta),
        b_div: Csr::from_triplets(n_disp, ns, tbd),
        b_skew: Csr::from_triplets(dofs.n_rot, ns, tbs),
        stress_l2: Csr::from_triplets(ns, ns, tl2),
        stress_divdiv: Csr::from_triplets(ns, ns, tdd),
        scalar_mass: Csr::from_triplets(nc, nc, tm),
        load_stress: g,
        load_disp: f,
        dofs,
    })
}

impl MixedSystem {
    pub fn n_stress(&self) -> usize {
        self.dofs.n_stress()
    }

    /// Full symmetric indefinite matrix.
    pub fn matrix(&self) -> Csr {
        let ns = self.n_stress();
        let nd = self.dofs.n_disp;
        let n = self.dofs.total();
        let mut t: Vec<(usize, usize, f64)> = self.a.iter().collect();
        for (i, j, v) in self.b_div.iter() {
            t.push((ns + i, j, v));
            t.push((j, ns + i, v));
        }
        for (i, j, v) in self.b_skew.iter() {
            t.push((ns + nd + i, j, -v));
            t.push((j, ns + nd + i, -v));
        }
        Csr::from_triplets(n, n, t)
    }

    pub fn rhs(&self) -> DVector<f64> {
        let ns = self.n_stress();
        let mut b = DVector::zeros(self.dofs.total());
        b.rows_mut(0, ns).copy_from(&self.load_stress);
        b.rows_mut(ns, self.dofs.n_disp).copy_from(&(-&self.load_disp));
        b
    }
}

/// Coefficients of the discrete stress, displacement and rotation.
#[derive(Clone, Debug)]
pub struct Solution {
    pub sigma: DVector<f64>,
    pub u: DVector<f64>,
    pub p: DVector<f64>,
    /// ||K x - b|| / ||b|| (absolute when b = 0)
    pub residual: f64,
    /// max over rotation basis functions q of |(S sigma, q)| / (||q|| ||sigma||)
    pub weak_symmetry: f64,
}

impl Solution {
    pub fn stacked(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.sigma.len() + self.u.len() + self.p.len());
        x.rows_mut(0, self.sigma.len()).copy_from(&self.sigma);
        x.rows_mut(self.sigma.len(), self.u.len()).copy_from(&self.u);
        x.rows_mut(self.sigma.len() + self.u.len(), self.p.len()).copy_from(&self.p);
        x
    }

    /// One `field,index,value` line per unknown.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("field,index,value\n");
        for (name, v) in [("stress", &self.sigma), ("displacement", &self.u), ("rotation", &self.p)] {
            for (i, x) in v.iter().enumerate() {
                writeln!(s, "{name},{i},{x:.17e}").unwrap();
            }
        }
        s
    }
}

pub fn weak_symmetry_residual(sys: &MixedSystem, sigma: &DVector<f64>) -> f64 {
    let norm = sigma.dot(&sys.stress_l2.mul(sigma)).max(0.0).sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    let skew = sys.b_skew.mul(sigma);
    let off = sys.dofs.n_disp;
    let mut diag = vec![0.0; sys.dofs.n_rot];
    for (i, j, v) in sys.scalar_mass.iter() {
        if i == j && i >= off {
            diag[i - off] = v;
        }
    }
    skew.iter().zip(&diag).map(|(s, d)| s.abs() / d.sqrt()).fold(0.0, f64::max) / norm
}

pub fn solve(sys: &MixedSystem) -> Result<Solution> {
    let k = sys.matrix();
    let b = sys.rhs();
    let lu = SparseLu::new(&k)?;
    let mut x = lu.solve(&b)?;
    // one step of iterative refinement
    let r = &b - k.mul(&x);
    x += lu.solve(&r)?;
    let res = (&b - k.mul(&x)).norm();
    let bn = b.norm();
    let residual = if bn > 0.0 { res / bn } else { res };
    if !residual.is_finite() || residual > 1e-6 {
        return Err(Error::Solver(format!("mixed system residual {residual:.3e}")));
    }
    let ns = sys.n_stress();
    let nd = sys.dofs.n_disp;
    let sigma = x.rows(0, ns).into_owned();
    let weak_symmetry = weak_symmetry_residual(sys, &sigma);
    Ok(Solution {
        u: x.rows(ns, nd).into_owned(),
        p: x.rows(ns + nd, sys.dofs.n_rot).into_owned(),
        sigma,
        residual,
        weak_symmetry,
    })
}

/// Coefficients of one element over its local bases.
pub struct LocalCoefficients {
    /// per stress row, over the local stress-row basis (signs applied)
    pub stress: [DVector<f64>; 2],
    pub u: [DVector<f64>; 2],
    pub p: DVector<f64>,
}

pub fn local_coefficients(dofs: &DofMap, sol: &Solution, t: usize) -> LocalCoefficients {
    let ns = dofs.n_stress();
    let nd = dofs.local[t].scalar_dim();
    let g = &dofs.gather[t];
    let stress = std::array::from_fn(|s| DVector::from_iterator(g.len(), g.iter().map(|&(d, sign)| sign * sol.sigma[dofs.stress_index(s, d)])));
    let u = std::array::from_fn(|c| DVector::from_fn(nd, |i, _| sol.u[dofs.disp_index(t, c, i) - ns]));
    let p = DVector::from_fn(nd, |i, _| sol.p[dofs.rot_index(t, i) - ns - dofs.n_disp]);
    LocalCoefficients { stress, u, p }
}

/// Pointwise values of the discrete solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointValue {
    pub sigma: Mat2,
    pub div_sigma: Vec2,
    pub u: Vec2,
    pub p: f64,
}

/// Values at the reference point `xh` of triangle `t`.
pub fn eval_local(mesh: &Mesh, dofs: &DofMap, sol: &Solution, t: usize, xh: [f64; 2]) -> PointValue {
    let lc = local_coefficients(dofs, sol, t);
    let lo = dofs.local[t];
    let basis = stress_basis(lo);
    let tab = basis.tabulate(&[xh]);
    let div = tab.div();
    let st = poly::tabulate(lo.r, &[xh]);
    let (_, dg) = mesh.map(t).eval(xh);
    let j = dg.determinant();
    let mut sigma = Mat2::zeros();
    let mut div_sigma = Vec2::zeros();
    for s in 0..2 {
        let mut v = Vec2::zeros();
        for k in 0..basis.len() {
            v += Vec2::new(tab.v[0][(0, k)], tab.v[1][(0, k)]) * lc.stress[s][k];
            div_sigma[s] += div[(0, k)] * lc.stress[s][k] / j;
        }
        let phys = dg * v / j;
        sigma[(s, 0)] = phys.x;
        sigma[(s, 1)] = phys.y;
    }
    let psi = st.val.row(0);
    let u = Vec2::new((psi * &lc.u[0])[0], (psi * &lc.u[1])[0]) / j;
    let p = (psi * &lc.p)[0] / j;
    PointValue { sigma, div_sigma, u, p }
}

pub fn eval_solution(mesh: &Mesh, dofs: &DofMap, sol: &Solution, points: &[[f64; 2]]) -> Result<Vec<PointValue>> {
    points
        .iter()
        .map(|&x| {
            let (t, xh) = mesh.locate(x).ok_or(Error::PointOutside(x[0], x[1]))?;
            Ok(eval_local(mesh, dofs, sol, t, xh))
        })
        .collect()
}

/// Discrete inf-sup constant of the constraint block (divergence and skew part)
/// with the H(div) norm on stresses and the L2 norm on (displacement, rotation).
#[derive(Clone, Copy, Debug)]
pub struct InfSup {
    pub beta: f64,
    pub dense: bool,
}

const DENSE_LIMIT: usize = 2500;

pub fn estimate_inf_sup(mesh: &Mesh, orders: &OrderMap) -> Result<InfSup> {
    let sys = assemble(mesh, orders, &Problem::homogeneous(Material::default()))?;
    inf_sup(&sys)
}

fn constraint(sys: &MixedSystem) -> Csr {
    let nd = sys.dofs.n_disp;
    let mut t: Vec<(usize, usize, f64)> = sys.b_div.iter().collect();
    t.extend(sys.b_skew.iter().map(|(i, j, v)| (nd + i, j, v)));
    Csr::from_triplets(nd + sys.dofs.n_rot, sys.n_stress(), t)
}

fn hdiv_gram(sys: &MixedSystem) -> Csr {
    let mut t: Vec<(usize, usize, f64)> = sys.stress_l2.iter().collect();
    t.extend(sys.stress_divdiv.iter());
    Csr::from_triplets(sys.n_stress(), sys.n_stress(), t)
}

pub fn inf_sup(sys: &MixedSystem) -> Result<InfSup> {
    if sys.n_stress() <= DENSE_LIMIT {
        inf_sup_dense(sys).map(|beta| InfSup { beta, dense: true })
    } else {
        inf_sup_lanczos(sys, 1).map(|beta| InfSup { beta, dense: false })
    }
}

fn eig_fail(what: &str) -> Error {
    Error::Solver(format!("inf-sup eigensolve: {what}"))
}

/// Smallest generalized eigenvalue of (B M^-1 B^T, M_c), square-rooted.
pub fn inf_sup_dense(sys: &MixedSystem) -> Result<f64> {
    let m = hdiv_gram(sys).to_dense();
    let b = constraint(sys).to_dense();
    let mc = sys.scalar_mass.to_dense();
    let chol = m.cholesky().ok_or_else(|| eig_fail("stress Gram matrix not positive definite"))?;
    let x = chol.solve(&b.transpose());
    let s = &b * x;
    let lc = mc.cholesky().ok_or_else(|| eig_fail("scalar mass not positive definite"))?.l();
    let linv = lc.try_inverse().ok_or_else(|| eig_fail("singular mass factor"))?;
    let c = &linv * s * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let lmin = c.symmetric_eigenvalues().min();
    Ok(lmin.max(0.0).sqrt())
}

/// Lanczos iteration on (B M^-1 B^T)^-1 M_c in the M_c inner product, using
/// sparse saddle-point solves; the largest Ritz value is 1 / beta^2.
pub fn inf_sup_lanczos(sys: &MixedSystem, seed: u64) -> Result<f64> {
    let m = hdiv_gram(sys);
    let b = constraint(sys);
    let ns = sys.n_stress();
    let nc = b.nrows;
    let mut t: Vec<(usize, usize, f64)> = m.iter().collect();
    for (i, j, v) in b.iter() {
        t.push((ns + i, j, v));
        t.push((j, ns + i, v));
    }
    let lu = SparseLu::new(&Csr::from_triplets(ns + nc, ns + nc, t))?;
    let mc = &sys.scalar_mass;
    let apply = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let mut rhs = DVector::zeros(ns + nc);
        rhs.rows_mut(ns, nc).copy_from(&mc.mul(x));
        Ok(-lu.solve(&rhs)?.rows(ns, nc).into_owned())
    };
    let inner = |x: &DVector<f64>, y: &DVector<f64>| x.dot(&mc.mul(y));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(nc, |_, _| rng.random_range(-1.0..1.0));
    v /= inner(&v, &v).sqrt();
    let mut basis: Vec<DVector<f64>> = vec![v];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut prev = 0.0;
    let steps = nc.min(150);
    for k in 0..steps {
        let mut w = apply(&basis[k])?;
        alpha.push(inner(&w, &basis[k]));
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for q in &basis {
                let c = inner(&w, q);
                w -= q * c;
            }
        }
        let n = alpha.len();
        let mut tri = DMatrix::zeros(n, n);
        for i in 0..n {
            tri[(i, i)] = alpha[i];
            if i + 1 < n {
                tri[(i, i + 1)] = beta[i];
                tri[(i + 1, i)] = beta[i];
            }
        }
        let top = tri.symmetric_eigenvalues().max();
        let nb = inner(&w, &w).max(0.0).sqrt();
        if k > 5 && ((top - prev).abs() <= 1e-12 * top || nb <= 1e-14 * top) {
            return Ok(1.0 / top.sqrt());
        }
        prev = top;
        if nb <= 1e-14 * top {
            break;
        }
        beta.push(nb);
        basis.push(w / nb);
    }
    if prev > 0.0 {
        Ok(1.0 / prev.sqrt())
    } else {
        Err(eig_fail("Lanczos did not produce a positive Ritz value"))
    }
}
