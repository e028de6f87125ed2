//! Independent checks of assembled operators and discrete solutions.

use afw2d::assembly::{assemble, estimate_inf_sup, eval_local, solve, Material, Solution};
use afw2d::experiments::{compute_errors, exact_solution, problem_for, ExactSolution, SmoothPoly};
use afw2d::linalg::{Mat2, Vec2};
use afw2d::mesh::{build_domain, refine_uniform, Mesh, DOMAINS};
use afw2d::poly;
use afw2d::quadrature::QuadRule;
use afw2d::reference::edge_point;
use afw2d::spaces::OrderMap;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn refined(domain: &str, n: usize) -> Mesh {
    let mut m = build_domain(domain).unwrap();
    for _ in 0..n {
        m = refine_uniform(&m).unwrap();
    }
    m
}

fn random_stress(ns: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(ns, |_, _| rng.random_range(-1.0..1.0))
}

/// Divergence block against moments of the pointwise divergence, with a
/// different quadrature than assembly uses.
fn check_b_div(mesh: &Mesh, orders: &OrderMap, tol: f64) {
    let exact = exact_solution("smooth_trig", None).unwrap();
    let sys = assemble(mesh, orders, &problem_for(exact)).unwrap();
    let dofs = &sys.dofs;
    let ns = dofs.n_stress();
    let sigma = random_stress(ns, 3);
    let sol = Solution {
        sigma: sigma.clone(),
        u: DVector::zeros(dofs.n_disp),
        p: DVector::zeros(dofs.n_rot),
        residual: 0.0,
        weak_symmetry: 0.0,
    };
    let assembled = sys.b_div.mul(&sigma);
    let mut oracle = DVector::zeros(dofs.n_disp);
    for t in 0..mesh.n_triangles() {
        let r = dofs.local[t].r;
        let rule = QuadRule::triangle(2 * r + 30).unwrap();
        let psi = poly::tabulate(r, &rule.points);
        for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let (_, dg) = mesh.map(t).eval(*p);
            let j = dg.determinant();
            let v = eval_local(mesh, dofs, &sol, t, *p);
            for c in 0..2 {
                for i in 0..poly::dim(r) {
                    // physical displacement basis is the reference one divided by J
                    oracle[dofs.disp_index(t, c, i) - ns] += w * j * v.div_sigma[c] * psi.val[(q, i)] / j;
                }
            }
        }
    }
    let err = (&assembled - &oracle).amax() / oracle.amax();
    assert!(err < tol, "{}: relative mismatch {err:.2e}", mesh.name);
}

#[test]
fn divergence_block_matches_independent_quadrature() {
    let m = build_domain("lshape_affine").unwrap();
    check_b_div(&m, &OrderMap::uniform(&m, 2).unwrap(), 1e-11);
    check_b_div(&m, &OrderMap::per_patch(&m, &[0, 1, 2, 3, 4, 2]).unwrap(), 1e-11);
    let c = refined("lshape_circular", 1);
    check_b_div(&c, &OrderMap::uniform(&c, 1).unwrap(), 1e-10);
}

#[test]
fn pointwise_divergence_matches_finite_differences() {
    let mesh = build_domain("lshape_circular").unwrap();
    let orders = OrderMap::uniform(&mesh, 2).unwrap();
    let sys = assemble(&mesh, &orders, &problem_for(exact_solution("smooth_trig", None).unwrap())).unwrap();
    let sol = solve(&sys).unwrap();
    let h = 1e-6;
    for t in 0..mesh.n_triangles() {
        let xh = [0.27, 0.31];
        let (_, dg) = mesh.map(t).eval(xh);
        let dinv = dg.try_inverse().unwrap();
        let s = |y: [f64; 2]| eval_local(&mesh, &sys.dofs, &sol, t, y).sigma;
        let d0 = (s([xh[0] + h, xh[1]]) - s([xh[0] - h, xh[1]])) / (2.0 * h);
        let d1 = (s([xh[0], xh[1] + h]) - s([xh[0], xh[1] - h])) / (2.0 * h);
        // d sigma / d x_k = sum_m d sigma / d xh_m * (DG^-1)_{m k}
        let dx = |k: usize| d0 * dinv[(0, k)] + d1 * dinv[(1, k)];
        let fd = Vec2::new(dx(0)[(0, 0)] + dx(1)[(0, 1)], dx(0)[(1, 0)] + dx(1)[(1, 1)]);
        let v = eval_local(&mesh, &sys.dofs, &sol, t, xh).div_sigma;
        assert!((fd - v).norm() < 1e-6 * (1.0 + v.norm()), "element {t}: {fd} vs {v}");
    }
}

#[test]
fn normal_stress_is_continuous_across_interior_edges() {
    let mesh = refined("lshape_circular", 1);
    let orders = OrderMap::per_patch(&mesh, &[0, 1, 2, 3, 1, 2]).unwrap();
    let sys = assemble(&mesh, &orders, &problem_for(exact_solution("smooth_trig", None).unwrap())).unwrap();
    let sol = solve(&sys).unwrap();
    let adj = mesh.edge_triangles();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut checked = 0;
    for (e, tris) in adj.iter().enumerate() {
        if tris.len() != 2 {
            continue;
        }
        for s in [0.13, 0.5, 0.91] {
            let mut vals = Vec::new();
            for &t in tris {
                let i = mesh.triangles[t].e.iter().position(|&x| x == e).unwrap();
                let sl = if mesh.edge_aligned(t, i) { s } else { 1.0 - s };
                vals.push(eval_local(&mesh, &sys.dofs, &sol, t, edge_point(i, sl)).sigma);
            }
            let a = mesh.edge_point(e, s - 1e-7);
            let b = mesh.edge_point(e, s + 1e-7);
            let tangent = Vec2::new(b[0] - a[0], b[1] - a[1]).normalize();
            let n = Vec2::new(tangent.y, -tangent.x);
            worst = worst.max((vals[0] * n - vals[1] * n).norm());
            scale = scale.max(vals[0].norm());
            checked += 1;
        }
    }
    assert!(checked > 0);
    assert!(worst < 1e-9 * scale.max(1.0), "normal jump {worst:.2e}");
}

#[test]
fn linear_displacement_is_reproduced_with_its_rotation() {
    let m = Material::new(0.7, 2.3).unwrap();
    let grad = Mat2::new(0.3, -0.8, 0.5, 0.2);
    let exact = SmoothPoly::linear(m, Vec2::new(0.1, -0.4), grad);
    let rot = 0.5 * (grad[(1, 0)] - grad[(0, 1)]);
    let stress = exact.stress([0.0, 0.0]);
    for domain in ["unit_square", "lshape_affine"] {
        let mesh = refined(domain, 1);
        for r in 1..=2 {
            let sys = assemble(&mesh, &OrderMap::uniform(&mesh, r).unwrap(), &problem_for(std::sync::Arc::new(SmoothPoly::linear(m, Vec2::new(0.1, -0.4), grad)))).unwrap();
            let sol = solve(&sys).unwrap();
            for t in 0..mesh.n_triangles() {
                let v = eval_local(&mesh, &sys.dofs, &sol, t, [0.2, 0.3]);
                let x = mesh.map(t).point([0.2, 0.3]);
                assert!((v.p - rot).abs() < 1e-9, "{domain} r={r}: rotation {} vs {rot}", v.p);
                assert!((v.sigma - stress).amax() < 1e-9);
                assert!((v.u - exact.displacement(x)).amax() < 1e-9);
            }
        }
    }
}

#[test]
fn rotation_converges_to_the_skew_gradient() {
    let exact = exact_solution("smooth_trig", None).unwrap();
    let mut errs = Vec::new();
    let mut mesh = build_domain("unit_square").unwrap();
    for _ in 0..4 {
        let sys = assemble(&mesh, &OrderMap::uniform(&mesh, 1).unwrap(), &problem_for(exact.clone())).unwrap();
        let sol = solve(&sys).unwrap();
        errs.push(compute_errors(&mesh, &sys.dofs, &sol, exact.as_ref()).p_l2);
        mesh = refine_uniform(&mesh).unwrap();
    }
    for w in errs.windows(2) {
        assert!(w[1] < 0.5 * w[0], "{errs:?}");
    }
    // a flipped sign would leave an O(1) error
    let rule = QuadRule::triangle(12).unwrap();
    let norm: f64 = (0..2)
        .map(|t| {
            let map = build_domain("unit_square").unwrap().map(t);
            rule.points.iter().zip(&rule.weights).map(|(p, w)| w * 0.5 * exact.rotation(map.point(*p)).powi(2)).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt();
    assert!(errs[3] < 0.05 * norm, "{} vs {norm}", errs[3]);
}

#[test]
fn norms_of_a_linear_field_match_closed_form() {
    let (a, b, c, d) = (0.3, -0.8, 0.5, 0.2);
    let m = Material::new(1.0, 1.0).unwrap();
    let exact = SmoothPoly::linear(m, Vec2::zeros(), Mat2::new(a, b, c, d));
    let mesh = refine_uniform(&build_domain("unit_square").unwrap()).unwrap();
    let sys = assemble(&mesh, &OrderMap::uniform(&mesh, 0).unwrap(), &problem_for(exact_solution("smooth_poly", None).unwrap())).unwrap();
    let zero = Solution {
        sigma: DVector::zeros(sys.n_stress()),
        u: DVector::zeros(sys.dofs.n_disp),
        p: DVector::zeros(sys.dofs.n_rot),
        residual: 0.0,
        weak_symmetry: 0.0,
    };
    let rec = compute_errors(&mesh, &sys.dofs, &zero, &exact);
    // int over the unit square of (a x + b y)^2 = a^2/3 + ab/2 + b^2/3
    let sq = |p: f64, q: f64| p * p / 3.0 + p * q / 2.0 + q * q / 3.0;
    let u2 = sq(a, b) + sq(c, d);
    assert!((rec.u_l2 - u2.sqrt()).abs() < 1e-10);
    assert!((rec.p_l2 - (0.5 * (c - b)).abs()).abs() < 1e-10);
    let sigma = exact.stress([0.0, 0.0]);
    assert!((rec.sigma_l2 - sigma.norm()).abs() < 1e-10);
    assert!(rec.div_sigma_l2 < 1e-12);
}

#[test]
fn errors_decrease_under_uniform_refinement() {
    for (domain, r, kind) in [("unit_square", 0, "smooth_poly"), ("lshape_circular", 1, "smooth_trig")] {
        let exact = exact_solution(kind, None).unwrap();
        let mut mesh = build_domain(domain).unwrap();
        let mut prev = f64::INFINITY;
        for _ in 0..3 {
            let sys = assemble(&mesh, &OrderMap::uniform(&mesh, r).unwrap(), &problem_for(exact.clone())).unwrap();
            let sol = solve(&sys).unwrap();
            let e = compute_errors(&mesh, &sys.dofs, &sol, exact.as_ref());
            assert!(e.total < prev, "{domain}: {} after {prev}", e.total);
            prev = e.total;
            mesh = refine_uniform(&mesh).unwrap();
        }
    }
}

#[test]
fn inf_sup_is_positive_on_builtin_meshes() {
    for domain in DOMAINS {
        let mesh = build_domain(domain).unwrap();
        for r in 0..=3 {
            let b = estimate_inf_sup(&mesh, &OrderMap::uniform(&mesh, r).unwrap()).unwrap();
            assert!(b.beta > 1e-3, "{domain} r={r}: {}", b.beta);
        }
        if domain == "lshape_affine" {
            let b = estimate_inf_sup(&mesh, &OrderMap::per_patch(&mesh, &[0, 1, 2, 3, 4, 2]).unwrap()).unwrap();
            assert!(b.beta > 1e-3);
        }
    }
}
