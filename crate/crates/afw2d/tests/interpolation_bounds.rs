//! Fitted constants of interpolation error and stability estimates stay
//! bounded as the mesh is refined.

use afw2d::fields::{FnField, PolyField, VectorField};
use afw2d::interpolation::{clement, moment_degree, op_w, op_wtilde, select_t, RefVectorPoly, SamplePlan};
use afw2d::linalg::{Mat2, Vec2};
use afw2d::mesh::{build_domain, refine_uniform, Mesh};
use afw2d::quadrature::QuadRule;
use afw2d::spaces::{LocalOrder, OrderMap};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// L2 norm, H1 seminorm of a field and L2 norm of the gradient of the
/// difference `field - poly` on triangle `t` (poly in reference coordinates).
struct Norms {
    l2: f64,
    h1_semi: f64,
    diff_l2: f64,
    poly_grad_l2: f64,
}

fn element_norms(mesh: &Mesh, t: usize, f: &dyn VectorField, p: Option<&RefVectorPoly>) -> Norms {
    let rule = QuadRule::triangle(20).unwrap();
    let map = mesh.map(t);
    let mut n = Norms { l2: 0.0, h1_semi: 0.0, diff_l2: 0.0, poly_grad_l2: 0.0 };
    for (xh, w) in rule.points.iter().zip(&rule.weights) {
        let (x, dg) = map.eval(*xh);
        let wq = w * dg.determinant();
        let (v, g) = f.eval([x.x, x.y]);
        n.l2 += wq * v.norm_squared();
        n.h1_semi += wq * g.norm_squared();
        if let Some(p) = p {
            let (pv, pg) = p.eval(*xh);
            n.diff_l2 += wq * (v - pv).norm_squared();
            n.poly_grad_l2 += wq * (pg * dg.try_inverse().unwrap()).norm_squared();
        }
    }
    Norms { l2: n.l2.sqrt(), h1_semi: n.h1_semi.sqrt(), diff_l2: n.diff_l2.sqrt(), poly_grad_l2: n.poly_grad_l2.sqrt() }
}

fn spread(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[test]
fn local_h1_interpolant_curl_bound_is_uniform_in_h() {
    let r = 2;
    let lo = LocalOrder::uniform(r);
    let t = select_t(r).unwrap().t;
    let base = [[0.1, 0.2], [0.9, 0.35], [0.3, 0.8]];
    let mut fitted = Vec::new();
    for k in 0..4 {
        let h = 0.5f64.powi(k);
        let v: Vec<[f64; 2]> = base.iter().map(|p| [p[0] * h, p[1] * h]).collect();
        let mesh = Mesh::from_affine("triangle", v, &[[0, 1, 2]]).unwrap();
        let plan = SamplePlan::new(&mesh.map(0), moment_degree(r, false));
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut c: f64 = 0.0;
        for _ in 0..100 {
            let f = PolyField::random(r + 3, &mut rng);
            let w = op_w(&plan, lo, t, &plan.sample(&f), Some(0)).unwrap().to_poly();
            let n = element_norms(&mesh, 0, &f, Some(&w));
            c = c.max(n.poly_grad_l2 / (n.l2 / mesh.diameter(0) + n.h1_semi));
        }
        fitted.push(c);
    }
    assert!(fitted.iter().all(|c| c.is_finite()));
    assert!(spread(&fitted) < 2.0, "{fitted:?}");
}

fn bump(x: [f64; 2]) -> (Vec2, Mat2) {
    let (cx, cy, eps) = (0.35, -0.4, 0.3);
    let (dx, dy) = (x[0] - cx, x[1] - cy);
    let g = (-(dx * dx + dy * dy) / (eps * eps)).exp();
    let dir = Vec2::new(1.0, 0.5);
    let dg = Vec2::new(-2.0 * dx / (eps * eps) * g, -2.0 * dy / (eps * eps) * g);
    (dir * g, dir * dg.transpose())
}

#[test]
fn clement_local_error_constant_is_stable() {
    let f = FnField(bump);
    let mut mesh = refine_uniform(&build_domain("lshape_affine").unwrap()).unwrap();
    let mut fitted = Vec::new();
    for _ in 0..3 {
        let cl = clement(&mesh, &f);
        let patches = mesh.vertex_patches();
        let local: Vec<Norms> = (0..mesh.n_triangles()).map(|t| element_norms(&mesh, t, &f, Some(&cl.local_poly(&mesh, t)))).collect();
        let mut c: f64 = 0.0;
        for t in 0..mesh.n_triangles() {
            let mut patch: Vec<usize> = mesh.triangles[t].v.iter().flat_map(|&v| patches[v].iter().copied()).collect();
            patch.sort_unstable();
            patch.dedup();
            let h1: f64 = patch.iter().map(|&s| local[s].l2.powi(2) + local[s].h1_semi.powi(2)).sum::<f64>().sqrt();
            if h1 > 1e-8 {
                c = c.max(local[t].diff_l2 / (mesh.diameter(t) * h1));
            }
        }
        fitted.push(c);
        mesh = refine_uniform(&mesh).unwrap();
    }
    assert!(spread(&fitted) < 3.0, "{fitted:?}");
}

#[test]
fn corrected_interpolant_curl_is_bounded_by_the_h1_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let fields: Vec<PolyField> = (0..5).map(|_| PolyField::random(4, &mut rng)).collect();
    let mut mesh = build_domain("lshape_affine").unwrap();
    let mut fitted = Vec::new();
    for _ in 0..4 {
        let orders = OrderMap::uniform(&mesh, 1).unwrap();
        let mut c: f64 = 0.0;
        for f in &fields {
            let wt = op_wtilde(&mesh, &orders, f).unwrap();
            let (mut curl, mut h1) = (0.0, 0.0);
            for t in 0..mesh.n_triangles() {
                let n = element_norms(&mesh, t, f, Some(&wt.local[t]));
                curl += n.poly_grad_l2.powi(2);
                h1 += n.l2.powi(2) + n.h1_semi.powi(2);
            }
            c = c.max((curl / h1).sqrt());
        }
        fitted.push(c);
        mesh = refine_uniform(&mesh).unwrap();
    }
    assert!(spread(&fitted) < 2.0, "{fitted:?}");
}
