use std::sync::Arc;

use afw2d::assembly::Material;
use afw2d::experiments::{
    exact_solution, mark_greedy, records_from_csv, records_to_csv, run_adaptive, run_convergence, solve_level, svg_plot, ExactSolution, OrderSpec,
    SmoothPoly, StudyConfig, CSV_HEADER,
};
use afw2d::linalg::{Mat2, Vec2};
use afw2d::mesh::{build_domain, refine_bisect, Mesh};
use afw2d::spaces::OrderMap;

/// Distance from the origin to the closest point of an affine triangle.
fn distance_to_origin(mesh: &Mesh, t: usize) -> f64 {
    let v = mesh.triangles[t].v.map(|i| mesh.vertices[i]);
    let seg = |a: [f64; 2], b: [f64; 2]| {
        let d = [b[0] - a[0], b[1] - a[1]];
        let s = (-(a[0] * d[0] + a[1] * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
        (a[0] + s * d[0]).hypot(a[1] + s * d[1])
    };
    (0..3).map(|i| seg(v[i], v[(i + 1) % 3])).fold(f64::INFINITY, f64::min)
}

#[test]
fn adaptive_refinement_concentrates_at_the_corner() {
    let exact = exact_solution("lshape_singular", None).unwrap();
    let mut mesh = build_domain("lshape_affine").unwrap();
    for _ in 0..5 {
        let res = solve_level(&mesh, &OrderMap::uniform(&mesh, 1).unwrap(), &exact).unwrap();
        mesh = refine_bisect(&mesh, &mark_greedy(&res.errors.element_sq, 0.2)).unwrap();
    }
    let res = solve_level(&mesh, &OrderMap::uniform(&mesh, 1).unwrap(), &exact).unwrap();
    let marked = mark_greedy(&res.errors.element_sq, 0.2);
    let near = marked.iter().filter(|&&t| distance_to_origin(&mesh, t) < 0.25).count();
    assert!(2 * near >= marked.len(), "{near} of {} marked elements near the corner", marked.len());
}

#[test]
fn adaptive_run_ends_below_uniform() {
    let cfg = StudyConfig::new("lshape_affine", OrderSpec::Uniform(1), "lshape_singular");
    let uniform = run_convergence(&cfg, 4).unwrap();
    let run = run_adaptive(&cfg, 8, 0.2).unwrap();
    let a = run.records.last().unwrap();
    // the uniform curve at the adaptive ndof, interpolated in log-log
    let w = uniform.windows(2).find(|w| w[0].ndof <= a.ndof && a.ndof <= w[1].ndof).unwrap();
    let s = (a.ndof as f64 / w[0].ndof as f64).ln() / (w[1].ndof as f64 / w[0].ndof as f64).ln();
    let u = (w[0].total_pct.ln() * (1.0 - s) + w[1].total_pct.ln() * s).exp();
    assert!(a.total_pct < u, "{} vs {u}", a.total_pct);
    assert_eq!(run.marked.len(), 7);
    assert!(run.final_mesh.validate().is_ok());
}

#[test]
fn circular_convergence_table() {
    let cfg = StudyConfig::new("lshape_circular", OrderSpec::Uniform(1), "smooth_trig");
    let recs = run_convergence(&cfg, 4).unwrap();
    assert_eq!(recs.len(), 4);
    for w in recs.windows(2) {
        assert!(w[1].total_pct < w[0].total_pct);
        assert!(w[1].ndof > w[0].ndof);
    }
    let csv = records_to_csv(&recs);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.len() == 9));
    assert_eq!(rows[0][8], "");
    for (r, rec) in rows.iter().zip(&recs) {
        assert_eq!(r[1].parse::<usize>().unwrap(), rec.ndof);
        let pct: f64 = r[6].parse().unwrap();
        assert!((pct - rec.total_pct).abs() <= 1e-9 * rec.total_pct);
    }
    let back = records_from_csv(&csv).unwrap();
    assert_eq!(records_to_csv(&back), csv);
    assert!(records_from_csv("level,ndof\n").is_err());
    let svg = svg_plot("circular", &[("r=1", &recs)]);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn order_specs_parse() {
    assert_eq!("2".parse::<OrderSpec>().unwrap(), OrderSpec::Uniform(2));
    assert_eq!("0,1,2, 3".parse::<OrderSpec>().unwrap(), OrderSpec::PerPatch(vec![0, 1, 2, 3]));
    assert!("x".parse::<OrderSpec>().is_err());
    assert_eq!(OrderSpec::PerPatch(vec![0, 4]).to_string(), "0,4");
}

#[test]
fn full_marking_bisects_every_element() {
    let mesh = build_domain("lshape_circular").unwrap();
    let all = mark_greedy(&vec![1.0; mesh.n_triangles()], 1.0);
    assert_eq!(all, (0..mesh.n_triangles()).collect::<Vec<_>>());
    let fine = refine_bisect(&mesh, &all).unwrap();
    assert!(fine.n_triangles() >= 2 * mesh.n_triangles());
    assert!(fine.h() < mesh.h() + 1e-14);
}

#[test]
fn best_approximation_is_below_the_discrete_error() {
    for (domain, solution, r) in [("lshape_affine", "lshape_singular", 0), ("lshape_circular", "smooth_trig", 1), ("unit_square", "smooth_poly", 2)] {
        let recs = run_convergence(&StudyConfig::new(domain, OrderSpec::Uniform(r), solution), 2).unwrap();
        for rec in &recs {
            assert!(rec.best_pct <= rec.total_pct * (1.0 + 1e-9), "{domain} {rec:?}");
        }
    }
}

#[test]
fn linear_field_is_in_the_space() {
    let m = Material::new(1.0, 2.0).unwrap();
    let exact: Arc<dyn ExactSolution> = Arc::new(SmoothPoly::linear(m, Vec2::new(0.3, -0.1), Mat2::new(1.0, 0.4, -0.2, 0.5)));
    let mesh = build_domain("lshape_affine").unwrap();
    let res = solve_level(&mesh, &OrderMap::uniform(&mesh, 1).unwrap(), &exact).unwrap();
    assert!(res.best.total_pct() < 1e-8, "{}", res.best.total_pct());
    assert!(res.errors.total_pct() < 1e-8, "{}", res.errors.total_pct());
}

#[test]
fn percent_errors_do_not_depend_on_the_solution_scale() {
    let m = Material::new(1.0, 1.0).unwrap();
    let base = SmoothPoly::cubic(m);
    let mut scaled = SmoothPoly::cubic(m);
    for t in &mut scaled.field.terms {
        t.2 *= 37.5;
    }
    let mesh = build_domain("lshape_circular").unwrap();
    let orders = OrderMap::uniform(&mesh, 1).unwrap();
    let a = solve_level(&mesh, &orders, &(Arc::new(base) as Arc<dyn ExactSolution>)).unwrap();
    let b = solve_level(&mesh, &orders, &(Arc::new(scaled) as Arc<dyn ExactSolution>)).unwrap();
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs();
    assert!(rel(a.errors.total_pct(), b.errors.total_pct()) < 1e-9);
    assert!(rel(a.best.total_pct(), b.best.total_pct()) < 1e-9);
}
