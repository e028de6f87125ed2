use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use afw2d::assembly::{assemble, estimate_inf_sup, solve as solve_system};
use afw2d::experiments::{
    compute_errors, corner_exponent, exact_solution, problem_for, records_from_csv, records_to_csv, run_adaptive, run_convergence, svg_plot,
    CornerConfig, StudyConfig,
};
use afw2d::interpolation::{check_commuting, moment_degree};
use afw2d::mesh::{build_domain, load_mesh, refine_bisect, refine_uniform, regularity, svg_mesh, write_mesh, Mesh};
use afw2d::quadrature::QuadRule;
use afw2d::spaces::{stress_basis, LocalOrder, OrderMap};

use crate::config::RunConfig;
use crate::CliError;

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn mesh_at(domain: &str, level: usize) -> Result<Mesh, CliError> {
    let mut m = build_domain(domain)?;
    for _ in 0..level {
        m = refine_uniform(&m)?;
    }
    Ok(m)
}

fn study(cfg: &RunConfig) -> StudyConfig {
    StudyConfig { domain: cfg.domain.clone(), orders: cfg.order.clone(), solution: cfg.solution.clone(), material: cfg.material }
}

pub fn solve(cfg: &RunConfig, level: usize) -> Result<(), CliError> {
    let mesh = mesh_at(&cfg.domain, level)?;
    let orders = cfg.order.build(&mesh)?;
    let exact = exact_solution(&cfg.solution, cfg.material)?;
    let sys = assemble(&mesh, &orders, &problem_for(exact.clone()))?;
    let sol = solve_system(&sys)?;
    let err = compute_errors(&mesh, &sys.dofs, &sol, exact.as_ref());
    write(&cfg.out, "solution.csv", &sol.to_csv())?;
    write(&cfg.out, "matrix.txt", &sys.matrix().to_coordinate_text())?;
    write(&cfg.out, "dofs.csv", &sys.dofs.to_csv())?;
    println!("domain {} level {level} orders {} solution {}", cfg.domain, cfg.order, cfg.solution);
    println!("triangles {} unknowns {} (stress {}, displacement {}, rotation {})", mesh.n_triangles(), sys.dofs.total(), sys.n_stress(), sys.dofs.n_disp, sys.dofs.n_rot);
    println!("relative residual {:.3e}", sol.residual);
    println!("weak symmetry {:.3e}", sol.weak_symmetry);
    println!(
        "errors: stress H(div) {:.6e}, displacement L2 {:.6e}, rotation L2 {:.6e}, total {:.4}%",
        err.sigma_hdiv,
        err.u_l2,
        err.p_l2,
        err.total_pct()
    );
    if sol.weak_symmetry > cfg.tol.weak_symmetry {
        return Err(CliError::Runtime(format!("weak symmetry {:.3e} above tolerance {:.1e}", sol.weak_symmetry, cfg.tol.weak_symmetry)));
    }
    Ok(())
}

fn check_symmetry(cfg: &RunConfig, records: &[afw2d::experiments::ConvergenceRecord]) -> Result<(), CliError> {
    match records.iter().find(|r| r.weak_symmetry > cfg.tol.weak_symmetry) {
        Some(r) => Err(CliError::Runtime(format!("weak symmetry {:.3e} at level {}", r.weak_symmetry, r.level))),
        None => Ok(()),
    }
}

pub fn converge(cfg: &RunConfig) -> Result<(), CliError> {
    let records = run_convergence(&study(cfg), cfg.levels)?;
    let csv = records_to_csv(&records);
    let title = format!("{} {}, orders {}, uniform", cfg.domain, cfg.solution, cfg.order);
    write(&cfg.out, "converge.csv", &csv)?;
    write(&cfg.out, "converge.svg", &svg_plot(&title, &[("uniform", &records)]))?;
    print!("{csv}");
    check_symmetry(cfg, &records)
}

pub fn adapt(cfg: &RunConfig, compare_levels: usize) -> Result<(), CliError> {
    let sc = study(cfg);
    let run = run_adaptive(&sc, cfg.steps, cfg.fraction)?;
    let csv = records_to_csv(&run.records);
    write(&cfg.out, "adapt.csv", &csv)?;
    write(&cfg.out, "adapt_mesh.txt", &write_mesh(&run.final_mesh))?;
    write(&cfg.out, "adapt_mesh.svg", &svg_mesh(&run.final_mesh))?;
    let title = format!("{} {}, orders {}", cfg.domain, cfg.solution, cfg.order);
    let mut series = vec![("adaptive", run.records.as_slice())];
    let uniform;
    if compare_levels > 0 {
        uniform = run_convergence(&sc, compare_levels)?;
        write(&cfg.out, "uniform.csv", &records_to_csv(&uniform))?;
        series.push(("uniform", uniform.as_slice()));
    }
    write(&cfg.out, "adapt.svg", &svg_plot(&title, &series))?;
    print!("{csv}");
    check_symmetry(cfg, &run.records)
}

pub fn verify(cfg: &RunConfig, level: usize, samples: usize, tables: bool) -> Result<(), CliError> {
    let mesh = mesh_at(&cfg.domain, level)?;
    let reg = regularity(&mesh);
    let mut csv = String::from("operator,mesh_level,order,max_residual,max_condition\n");
    let mut diag = String::from("mesh_level,order,inf_sup,c_h,max_shape_ratio\n");
    let mut failures = Vec::new();
    for &r in &cfg.orders {
        let orders = OrderMap::uniform(&mesh, r)?;
        let rep = check_commuting(&mesh, &orders, samples, cfg.seed);
        let wt = rep.wtilde.unwrap_or(f64::NAN);
        for (name, v) in [("div_pi1", rep.div_pi1), ("div_pi1_minus", rep.div_pi1_minus), ("wtilde", wt)] {
            writeln!(csv, "{name},{level},{r},{v:.6e},{:.6e}", rep.max_cond).unwrap();
            if v > cfg.tol.commuting || (v.is_nan() && mesh.is_affine()) {
                failures.push(format!("{name} order {r}: {v:.3e}"));
            }
        }
        if let Some(reason) = &rep.wtilde_failure {
            eprintln!("note: corrected H1 interpolant unavailable for order {r}: {reason}");
        }
        let beta = estimate_inf_sup(&mesh, &orders)?.beta;
        if !(beta > cfg.tol.inf_sup) {
            failures.push(format!("inf-sup order {r}: {beta:.3e}"));
        }
        writeln!(diag, "{level},{r},{beta:.6e},{:.6e},{:.6e}", reg.c_h, reg.max_shape_ratio).unwrap();
    }
    write(&cfg.out, "verify.csv", &csv)?;
    write(&cfg.out, "verify_stability.csv", &diag)?;
    if let Some(&r) = cfg.orders.first() {
        let orders = OrderMap::uniform(&mesh, r)?;
        write(&cfg.out, "dofs.csv", &afw2d::spaces::DofMap::build(&mesh, &orders)?.to_csv())?;
    }
    if tables {
        write_tables(cfg)?;
    }
    print!("{csv}");
    eprint!("{diag}");
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("verification failed: {}", failures.join("; "))))
    }
}

fn write_tables(cfg: &RunConfig) -> Result<(), CliError> {
    let mut quad = String::from("degree,index,x,y,weight\n");
    let mut basis = String::from("order,function,point,x,y,v0,v1,div\n");
    for &r in &cfg.orders {
        let deg = moment_degree(r, false);
        let rule = QuadRule::triangle(deg)?;
        for (i, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            writeln!(quad, "{deg},{i},{:.17e},{:.17e},{w:.17e}", p[0], p[1]).unwrap();
        }
        let b = stress_basis(LocalOrder::uniform(r));
        let tab = b.tabulate(&rule.points);
        let div = tab.div();
        for k in 0..b.len() {
            for (q, p) in rule.points.iter().enumerate() {
                writeln!(basis, "{r},{k},{q},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", p[0], p[1], tab.v[0][(q, k)], tab.v[1][(q, k)], div[(q, k)]).unwrap();
            }
        }
    }
    write(&cfg.out, "quadrature.csv", &quad)?;
    write(&cfg.out, "basis.csv", &basis)
}

pub fn mesh(cfg: &RunConfig, input: Option<&Path>, level: usize, mark: Option<&str>) -> Result<(), CliError> {
    let mut m = match input {
        Some(p) => load_mesh(p)?,
        None => build_domain(&cfg.domain)?,
    };
    for _ in 0..level {
        m = refine_uniform(&m)?;
    }
    if let Some(list) = mark {
        let marked = list
            .split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("'{s}' is not a triangle index"))))
            .collect::<Result<Vec<_>, _>>()?;
        m = refine_bisect(&m, &marked)?;
    }
    m.validate()?;
    let reg = regularity(&m);
    write(&cfg.out, "mesh.txt", &write_mesh(&m))?;
    write(&cfg.out, "mesh.svg", &svg_mesh(&m))?;
    println!("mesh {}", m.name);
    println!("vertices {} edges {} triangles {}", m.vertices.len(), m.edges.len(), m.n_triangles());
    println!("h {:.6e} c_h {:.6e} max shape ratio {:.6}", reg.h, reg.c_h, reg.max_shape_ratio);
    println!("affine {}", m.is_affine());
    Ok(())
}

pub fn corner(file: Option<&Path>) -> Result<(), CliError> {
    let cfg = match file {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            CornerConfig::from_toml(&text)?
        }
        None => CornerConfig::default(),
    };
    let l = corner_exponent(&cfg)?;
    println!("angle {:.6} degrees, faces {:?}", cfg.angle.to_degrees(), cfg.bc);
    println!("mu {:.10} lambda {:.10}", cfg.material.mu, cfg.material.lambda);
    println!("displacement exponent {l:.10}");
    println!("stress exponent {:.10}", l - 1.0);
    Ok(())
}

pub fn plot(series: &[String], title: &str, output: &Path) -> Result<(), CliError> {
    let mut loaded = Vec::new();
    for s in series {
        let (label, file) = s.rsplit_once('=').ok_or_else(|| CliError::Usage(format!("series '{s}' must be LABEL=FILE")))?;
        let text = fs::read_to_string(file).map_err(|e| CliError::Usage(format!("cannot read {file}: {e}")))?;
        let recs = records_from_csv(&text).map_err(|e| CliError::Usage(format!("{file}: {e}")))?;
        loaded.push((label.to_string(), recs));
    }
    let refs: Vec<(&str, &[afw2d::experiments::ConvergenceRecord])> = loaded.iter().map(|(l, r)| (l.as_str(), r.as_slice())).collect();
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(output, svg_plot(title, &refs))?;
    println!("wrote {}", output.display());
    Ok(())
}
