//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::time::{Duration, Instant};

use afw2d::assembly::{estimate_inf_sup, solve, Problem};
use afw2d::experiments::{
    corner_exponent, exact_solution, problem_for, run_adaptive, run_convergence, CornerConfig, ConvergenceRecord,
    OrderSpec, StudyConfig,
};
use afw2d::interpolation::{check_commuting, projection_gap_sampled, select_t, t_scan, wtilde_residual, sample_field, TAU_T};
use afw2d::mesh::{build_domain, refine_uniform, regularity, Mesh};
use afw2d::spaces::OrderMap;

const R_MAX: usize = 6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn levels(domain: &str, n: usize) -> Vec<Mesh> {
    let mut out = vec![build_domain(domain).unwrap()];
    while out.len() < n {
        let next = refine_uniform(out.last().unwrap()).unwrap();
        out.push(next);
    }
    out
}

fn pair_slope(a: (usize, f64), b: (usize, f64)) -> f64 {
    (a.1 / b.1).ln() / (b.0 as f64 / a.0 as f64).ln()
}

fn corner_exponent_matches() -> Outcome {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/williams.toml"));
    let cfg = match text.map_err(|e| e.to_string()).and_then(|t| CornerConfig::from_toml(&t).map_err(|e| e.to_string())) {
        Ok(c) => c,
        Err(e) => return outcome(false, format!("shipped corner configuration unreadable: {e}")),
    };
    let start = Instant::now();
    let l = corner_exponent(&cfg);
    let dt = start.elapsed();
    match l {
        Ok(l) => outcome(
            (l - 0.60404).abs() < 1e-4 && dt < Duration::from_secs(1),
            format!("exponent {l:.7}, stress exponent {:.5}, {dt:.2?}", l - 1.0),
        ),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn commuting_suite() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut where_ = String::new();
    for domain in ["lshape_affine", "lshape_circular"] {
        let mesh = build_domain(domain).unwrap();
        for r in 0..=R_MAX {
            let orders = OrderMap::uniform(&mesh, r).unwrap();
            let rep = check_commuting(&mesh, &orders, 100, 7);
            let m = rep.div_pi1.max(rep.div_pi1_minus);
            if m > worst || m.is_nan() {
                worst = m;
                where_ = format!("{domain} r={r}");
            }
        }
    }
    let dt = start.elapsed();
    outcome(
        worst < 1e-9 && dt < Duration::from_secs(120),
        format!("max relative residual {worst:.2e} ({where_}), {dt:.1?}"),
    )
}

fn wtilde_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut fail = None;
    let affine = build_domain("lshape_affine").unwrap();
    let circular = levels("lshape_circular", 3).pop().unwrap();
    for (name, mesh, orders) in [("affine", &affine, 0..=R_MAX), ("circular level 2", &circular, 0..=R_MAX)] {
        for r in orders {
            let om = OrderMap::uniform(mesh, r).unwrap();
            for k in 0..4 {
                let f = sample_field(k, r + 3, 11);
                match wtilde_residual(mesh, &om, f.as_ref()) {
                    Ok(v) => worst = worst.max(v),
                    Err(e) => fail = Some(format!("{name} r={r}: {e}")),
                }
            }
        }
    }
    match fail {
        Some(f) => outcome(false, f),
        None => outcome(worst < 1e-9, format!("max relative residual {worst:.2e}")),
    }
}

fn t_selection() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for r in 0..=R_MAX {
        match select_t(r) {
            Ok(s) => parts.push(format!("r{r}:t={:.3}", s.t)),
            Err(e) => {
                ok = false;
                parts.push(format!("r{r}:{e}"));
            }
        }
        if r <= 3 {
            let at0 = t_scan(r)[0];
            if at0.min_sv_pi_minus.min(at0.min_sv_c) <= TAU_T {
                ok = false;
                parts.push(format!("r{r}: t=0 inadmissible"));
            }
        }
    }
    outcome(ok, parts.join(" "))
}

fn weak_symmetry() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let cases: Vec<(&str, OrderSpec, &str, usize)> = vec![
        ("unit_square", OrderSpec::Uniform(0), "smooth_trig", 2),
        ("unit_square", OrderSpec::Uniform(3), "smooth_poly", 1),
        ("lshape_affine", OrderSpec::PerPatch(vec![0, 1, 2, 3, 4, 2]), "lshape_singular", 2),
        ("lshape_circular", OrderSpec::Uniform(0), "smooth_trig", 2),
        ("lshape_circular", OrderSpec::Uniform(2), "smooth_trig", 2),
    ];
    for (domain, orders, sol, n) in cases {
        let exact = exact_solution(sol, None).unwrap();
        for mesh in levels(domain, n) {
            let om = orders.build(&mesh).unwrap();
            let sys = afw2d::assembly::assemble(&mesh, &om, &problem_for(exact.clone())).unwrap();
            match solve(&sys) {
                Ok(s) => worst = worst.max(s.weak_symmetry),
                Err(e) => return outcome(false, format!("{domain}: {e}")),
            }
            count += 1;
        }
    }
    let mesh = build_domain("lshape_affine").unwrap();
    let sys = afw2d::assembly::assemble(&mesh, &OrderMap::uniform(&mesh, 1).unwrap(), &Problem::homogeneous(Default::default())).unwrap();
    worst = worst.max(solve(&sys).unwrap().weak_symmetry);
    count += 1;
    outcome(worst < 1e-9, format!("{count} solutions, max relative skew moment {worst:.2e}"))
}

fn smooth_rates() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for r in 0..=2 {
        let recs = run_convergence(&StudyConfig::new("unit_square", OrderSpec::Uniform(r), "smooth_trig"), 4).unwrap();
        let (a, b) = (&recs[2], &recs[3]);
        let slope = (a.err_u_l2 / b.err_u_l2).ln() / (a.h / b.h).ln();
        ok &= (slope - (r + 1) as f64).abs() <= 0.15;
        parts.push(format!("r{r}: {slope:.3}"));
    }
    let dt = start.elapsed();
    ok &= dt < Duration::from_secs(300);
    outcome(ok, format!("displacement slopes {} ({dt:.1?})", parts.join(", ")))
}

fn parallel_lines(recs: &[ConvergenceRecord]) -> (f64, f64) {
    let mut ratio: f64 = 0.0;
    let mut gap: f64 = 0.0;
    for (i, r) in recs.iter().enumerate() {
        ratio = ratio.max(r.total_pct / r.best_pct);
        if i > 0 {
            let p = &recs[i - 1];
            let fe = pair_slope((p.ndof, p.total_pct), (r.ndof, r.total_pct));
            let best = pair_slope((p.ndof, p.best_pct), (r.ndof, r.best_pct));
            gap = gap.max((fe - best).abs());
        }
    }
    (ratio, gap)
}

fn stability_regression() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut final_slopes = Vec::new();
    for orders in [OrderSpec::Uniform(0), OrderSpec::Uniform(1), OrderSpec::Uniform(2), OrderSpec::PerPatch(vec![0, 1, 2, 3, 4, 2])] {
        let recs = run_convergence(&StudyConfig::new("lshape_affine", orders.clone(), "lshape_singular"), 4).unwrap();
        let (ratio, gap) = parallel_lines(&recs);
        ok &= ratio <= 10.0 && gap < 0.1;
        final_slopes.push(recs.last().unwrap().slope.unwrap());
        parts.push(format!("[{orders}] ratio<={ratio:.3} slope gap {gap:.3}"));
    }
    // variable orders converge at the rate of the lowest order
    let var_gap = (final_slopes[3] - final_slopes[0]).abs();
    ok &= var_gap < 0.1;
    outcome(ok, format!("{}; variable vs order 0 slope gap {var_gap:.3}", parts.join("; ")))
}

fn inf_sup_robustness() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in 0..=1 {
        let betas: Vec<f64> = levels("lshape_affine", 5)
            .iter()
            .map(|m| estimate_inf_sup(m, &OrderMap::uniform(m, r).unwrap()).unwrap().beta)
            .collect();
        let max = betas.iter().cloned().fold(0.0, f64::max);
        let min = betas.iter().cloned().fold(f64::INFINITY, f64::min);
        let var = (max - min) / max;
        ok &= var < 0.2;
        parts.push(format!("affine r{r} {} (spread {:.1}%)", fmt_seq(&betas), 100.0 * var));
    }
    for r in 0..=1 {
        let meshes = levels("lshape_circular", 6);
        let betas: Vec<f64> = meshes.iter().map(|m| estimate_inf_sup(m, &OrderMap::uniform(m, r).unwrap()).unwrap().beta).collect();
        let ch: Vec<f64> = meshes.iter().map(|m| regularity(m).c_h).collect();
        // the tail is monotone and its increments shrink
        let d: Vec<f64> = betas.windows(2).map(|w| w[1] - w[0]).collect();
        let n = d.len();
        let monotone = d[n - 2].signum() == d[n - 1].signum() || d[n - 1] == 0.0;
        let shrinking = d[n - 1].abs() < d[n - 2].abs();
        ok &= monotone && shrinking;
        parts.push(format!("circular r{r} {} with c_h {}", fmt_seq(&betas), fmt_seq(&ch)));
    }
    outcome(ok, parts.join("; "))
}

fn fmt_seq(v: &[f64]) -> String {
    let s: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", s.join(" "))
}

fn projection_asymptotics() -> Outcome {
    let gaps: Vec<f64> = levels("lshape_circular", 4)
        .iter()
        .map(|m| projection_gap_sampled(m, &OrderMap::uniform(m, 1).unwrap(), 100, 5))
        .collect();
    let ratios: Vec<f64> = gaps.windows(2).map(|w| w[0] / w[1]).collect();
    let ok = ratios.iter().all(|&q| q >= 1.5);
    outcome(ok, format!("sampled gaps {} ratios {}", fmt_seq(&gaps), fmt_seq(&ratios)))
}

/// Log-log interpolation of a uniform error curve at `ndof`.
fn interpolate(curve: &[ConvergenceRecord], ndof: usize) -> Option<f64> {
    let x = (ndof as f64).ln();
    curve.windows(2).find_map(|w| {
        let (x0, x1) = ((w[0].ndof as f64).ln(), (w[1].ndof as f64).ln());
        (x >= x0 && x <= x1).then(|| {
            let s = (x - x0) / (x1 - x0);
            (w[0].total_pct.ln() * (1.0 - s) + w[1].total_pct.ln() * s).exp()
        })
    })
}

fn adaptivity_beats_uniform() -> Outcome {
    let cfg = StudyConfig::new("lshape_affine", OrderSpec::Uniform(1), "lshape_singular");
    let uniform = run_convergence(&cfg, 5).unwrap();
    let adaptive = run_adaptive(&cfg, 12, 0.2).unwrap().records;
    let mut ok = true;
    let mut parts = Vec::new();
    for rec in &adaptive[3..] {
        match interpolate(&uniform, rec.ndof) {
            Some(u) => {
                ok &= rec.total_pct < u;
                parts.push(format!("{}:{:.2}<{:.2}", rec.ndof, rec.total_pct, u));
            }
            None => {
                ok = false;
                parts.push(format!("{}: outside uniform range", rec.ndof));
            }
        }
    }
    outcome(ok, format!("ndof:adaptive%<uniform% {}", parts.join(" ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("corner exponent", corner_exponent_matches),
        ("commuting diagrams", commuting_suite),
        ("corrected H1 interpolant identity", wtilde_identity),
        ("blending parameter selection", t_selection),
        ("weak symmetry", weak_symmetry),
        ("smooth convergence rates", smooth_rates),
        ("error vs best approximation", stability_regression),
        ("inf-sup robustness", inf_sup_robustness),
        ("curved projection asymptotics", projection_asymptotics),
        ("adaptive vs uniform", adaptivity_beats_uniform),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let res = std::panic::catch_unwind(run).unwrap_or_else(|_| outcome(false, "panicked".into()));
        println!("criterion {:>2} {:<36} {}  {}", i + 1, name, if res.pass { "PASS" } else { "FAIL" }, res.detail);
        failed += usize::from(!res.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
