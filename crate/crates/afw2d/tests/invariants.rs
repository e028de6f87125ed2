use afw2d::assembly::{assemble, eval_local, solve, Material};
use afw2d::experiments::{characteristic_determinant, corner_exponent, mark_greedy, plane_stress, problem_for, CornerBc, CornerConfig, SmoothPoly};
use afw2d::fields::PolyField;
use afw2d::interpolation::{check_commuting, sample_field};
use afw2d::linalg::{Mat2, Vec2};
use afw2d::mesh::{build_domain, parse_mesh, refine_bisect, refine_uniform, regularity, write_mesh, Mesh};
use afw2d::quadrature::QuadRule;
use afw2d::sparse::Csr;
use afw2d::spaces::OrderMap;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn area(mesh: &Mesh) -> f64 {
    let rule = QuadRule::triangle(12).unwrap();
    (0..mesh.n_triangles())
        .map(|t| {
            let map = mesh.map(t);
            rule.points.iter().zip(&rule.weights).map(|(p, w)| w * map.eval(*p).1.determinant()).sum::<f64>()
        })
        .sum()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn marks(n: usize, bits: &[bool]) -> Vec<usize> {
    let m: Vec<usize> = (0..n).filter(|&t| bits[t % bits.len()]).collect();
    if m.is_empty() {
        vec![0]
    } else {
        m
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quadrature_integrates_monomials(deg in 0usize..30, a in 0u32..30) {
        let a = a.min(deg as u32);
        let b = deg as u32 - a;
        let rule = QuadRule::triangle(deg).unwrap();
        let got = rule.integrate(|x| x[0].powi(a as i32) * x[1].powi(b as i32));
        let want = factorial(a) * factorial(b) / factorial(a + b + 2);
        prop_assert!((got - want).abs() <= 1e-13 * want.max(1e-300) + 1e-16, "{} vs {}", got, want);
    }

    #[test]
    fn sparse_products_match_dense(entries in prop::collection::vec((0usize..7, 0usize..5, -1.0f64..1.0), 0..40),
                                   x in prop::collection::vec(-1.0f64..1.0, 5), y in prop::collection::vec(-1.0f64..1.0, 7)) {
        let a = Csr::from_triplets(7, 5, entries.clone());
        let mut dense = nalgebra::DMatrix::zeros(7, 5);
        for (i, j, v) in entries {
            dense[(i, j)] += v;
        }
        let x = nalgebra::DVector::from_vec(x);
        let y = nalgebra::DVector::from_vec(y);
        prop_assert!((a.mul(&x) - &dense * &x).amax() < 1e-14);
        prop_assert!((a.mul_transpose(&y) - dense.transpose() * &y).amax() < 1e-14);
        prop_assert!((a.transpose().to_dense() - dense.transpose()).amax() == 0.0);
    }

    #[test]
    fn bisection_is_conforming_and_keeps_area(domain in prop::sample::select(vec!["lshape_affine", "lshape_circular", "unit_square"]),
                                             bits in prop::collection::vec(any::<bool>(), 1..9), rounds in 1usize..5) {
        let mut mesh = build_domain(domain).unwrap();
        let a0 = area(&mesh);
        for _ in 0..rounds {
            let n = mesh.n_triangles();
            let m = marks(n, &bits);
            mesh = refine_bisect(&mesh, &m).unwrap();
            prop_assert!(mesh.validate().is_ok());
            prop_assert!(mesh.n_triangles() >= n + m.len());
        }
        prop_assert!((area(&mesh) - a0).abs() < 1e-12);
    }

    #[test]
    fn mesh_text_round_trip(bits in prop::collection::vec(any::<bool>(), 1..6)) {
        let mesh = build_domain("lshape_circular").unwrap();
        let mesh = refine_bisect(&mesh, &marks(mesh.n_triangles(), &bits)).unwrap();
        let back = parse_mesh(&write_mesh(&mesh)).unwrap();
        prop_assert_eq!(&back.triangles, &mesh.triangles);
        prop_assert_eq!(&back.vertices, &mesh.vertices);
        for t in 0..mesh.n_triangles() {
            let (a, b) = (mesh.map(t).point([0.2, 0.3]), back.map(t).point([0.2, 0.3]));
            prop_assert!((a[0] - b[0]).abs() + (a[1] - b[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn commuting_on_random_triangles(p in prop::collection::vec(-0.4f64..0.4, 6), r in 0usize..5, seed in 0u64..1000) {
        let v = vec![[p[0], p[1]], [p[2] + 2.0, p[3]], [p[4], p[5] + 2.0]];
        let mesh = Mesh::from_affine("triangle", v, &[[0, 1, 2]]).unwrap();
        let orders = OrderMap::uniform(&mesh, r).unwrap();
        let rep = check_commuting(&mesh, &orders, 3, seed);
        prop_assert!(rep.div_pi1 < 1e-9 && rep.div_pi1_minus < 1e-9, "{:?}", rep);
    }

    #[test]
    fn linear_displacement_patch_test(shift in prop::collection::vec(-0.06f64..0.06, 8), mu in 0.2f64..5.0, lambda in 0.0f64..50.0,
                                       g in prop::collection::vec(-1.0f64..1.0, 6), r in 0usize..3) {
        // 3x3 grid of the unit square with moved interior vertices
        let mut v = Vec::new();
        for j in 0..4 {
            for i in 0..4 {
                let mut x = [i as f64 / 3.0, j as f64 / 3.0];
                if (1..3).contains(&i) && (1..3).contains(&j) {
                    let k = 2 * ((j - 1) * 2 + (i - 1));
                    x[0] += shift[k];
                    x[1] += shift[k + 1];
                }
                v.push(x);
            }
        }
        let mut tris = Vec::new();
        for j in 0..3 {
            for i in 0..3 {
                let a = 4 * j + i;
                tris.push([a + 5, a, a + 1]);
                tris.push([a, a + 5, a + 4]);
            }
        }
        let mesh = Mesh::from_affine("patch", v, &tris).unwrap();
        let m = Material::new(mu, lambda).unwrap();
        let grad = Mat2::new(g[0], g[1], g[2], g[3]);
        let exact = std::sync::Arc::new(SmoothPoly::linear(m, Vec2::new(g[4], g[5]), grad));
        let sys = assemble(&mesh, &OrderMap::uniform(&mesh, r).unwrap(), &problem_for(exact.clone())).unwrap();
        let sol = solve(&sys).unwrap();
        prop_assert!(sol.weak_symmetry < 1e-9);
        let stress = m.stress(&((grad + grad.transpose()) * 0.5));
        let scale = stress.amax().max(1.0);
        for t in 0..mesh.n_triangles() {
            let pv = eval_local(&mesh, &sys.dofs, &sol, t, [0.3, 0.3]);
            prop_assert!((pv.sigma - stress).amax() < 1e-8 * scale);
            prop_assert!((pv.p - 0.5 * (grad[(1, 0)] - grad[(0, 1)])).abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn reentrant_clamped_exponents_are_roots_in_range(deg in 190.0f64..350.0, nu in 0.0f64..0.45) {
        let cfg = CornerConfig { material: plane_stress(1.0, nu), angle: deg.to_radians(), bc: CornerBc::ClampedClamped };
        let l = corner_exponent(&cfg).unwrap();
        prop_assert!(l > 0.5 && l < 1.0, "{}", l);
        let scale = characteristic_determinant(&cfg, 0.5 * l).abs().max(characteristic_determinant(&cfg, 0.5 * (1.0 + l)).abs());
        prop_assert!(characteristic_determinant(&cfg, l).abs() < 1e-10 * scale.max(1e-300));
    }

    #[test]
    fn greedy_marking_takes_the_largest(v in prop::collection::vec(0.0f64..1.0, 1..60), frac in 0.01f64..1.0) {
        let m = mark_greedy(&v, frac);
        let k = ((frac * v.len() as f64).ceil() as usize).clamp(1, v.len());
        prop_assert_eq!(m.len(), k);
        let min_marked = m.iter().map(|&i| v[i]).fold(f64::INFINITY, f64::min);
        for i in 0..v.len() {
            if !m.contains(&i) {
                prop_assert!(v[i] <= min_marked);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn random_adaptive_rounds_keep_shape_regularity(seed in 0u64..10_000) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mesh = build_domain("lshape_affine").unwrap();
        let initial = regularity(&mesh).max_shape_ratio;
        for _ in 0..20 {
            let n = mesh.n_triangles();
            let k = (n / 10).max(1);
            let m: Vec<usize> = (0..k).map(|_| rng.random_range(0..n)).collect();
            mesh = refine_bisect(&mesh, &m).unwrap();
        }
        prop_assert!(mesh.validate().is_ok());
        let ratio = regularity(&mesh).max_shape_ratio;
        prop_assert!(ratio <= 2.0 * initial, "{} vs {}", ratio, initial);
    }
}

#[test]
fn uniform_refinement_quadruples_and_preserves_area() {
    for name in ["unit_square", "lshape_affine", "lshape_circular"] {
        let m0 = build_domain(name).unwrap();
        let m1 = refine_uniform(&m0).unwrap();
        assert_eq!(m1.n_triangles(), 4 * m0.n_triangles());
        assert!((area(&m1) - area(&m0)).abs() < 1e-12);
    }
}

#[test]
fn sample_fields_are_deterministic() {
    let a = sample_field(4, 5, 9);
    let b = sample_field(4, 5, 9);
    assert_eq!(a.value([0.3, 0.2]), b.value([0.3, 0.2]));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = PolyField::random(2, &mut rng);
    assert_eq!(p.terms.len(), 6);
}
