//! Uniform and adaptive refinement studies with CSV and SVG output.

use std::fmt::Write as _;
use std::sync::Arc;

use super::errors::{best_approx, compute_errors, ErrorRecord};
use super::exact::{exact_solution, problem_for, ExactSolution};
use crate::assembly::{assemble, solve, Material, MixedSystem, Solution};
use crate::error::{Error, Result};
use crate::mesh::{build_domain, refine_bisect, refine_uniform, Mesh};
use crate::spaces::OrderMap;

/// Displacement orders: one order everywhere or one per initial patch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrderSpec {
    Uniform(usize),
    PerPatch(Vec<usize>),
}

impl OrderSpec {
    pub fn build(&self, mesh: &Mesh) -> Result<OrderMap> {
        match self {
            OrderSpec::Uniform(r) => OrderMap::uniform(mesh, *r),
            OrderSpec::PerPatch(v) => OrderMap::per_patch(mesh, v),
        }
    }
}

impl std::str::FromStr for OrderSpec {
    type Err = Error;
    /// `2` or a comma separated list of per-patch orders.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| Error::InvalidOrder(format!("'{t}' is not an order")));
        if s.contains(',') {
            Ok(OrderSpec::PerPatch(s.split(',').map(parse).collect::<Result<_>>()?))
        } else {
            Ok(OrderSpec::Uniform(parse(s)?))
        }
    }
}

impl std::fmt::Display for OrderSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrderSpec::Uniform(r) => write!(f, "{r}"),
            OrderSpec::PerPatch(v) => {
                let s: Vec<String> = v.iter().map(|r| r.to_string()).collect();
                write!(f, "{}", s.join(","))
            }
        }
    }
}

/// One row of a refinement study.
#[derive(Clone, Debug)]
pub struct ConvergenceRecord {
    pub level: usize,
    pub ndof: usize,
    pub h: f64,
    pub err_sigma_hdiv: f64,
    pub err_u_l2: f64,
    pub err_p_l2: f64,
    pub total_pct: f64,
    pub best_pct: f64,
    /// -d log(total_pct) / d log(ndof) against the previous row
    pub slope: Option<f64>,
    pub weak_symmetry: f64,
    pub n_triangles: usize,
}

/// Everything computed on one mesh.
pub struct LevelResult {
    pub system: MixedSystem,
    pub solution: Solution,
    pub errors: ErrorRecord,
    pub best: ErrorRecord,
}

pub fn solve_level(mesh: &Mesh, orders: &OrderMap, exact: &Arc<dyn ExactSolution>) -> Result<LevelResult> {
    let problem = problem_for(exact.clone());
    let system = assemble(mesh, orders, &problem)?;
    let solution = solve(&system)?;
    let errors = compute_errors(mesh, &system.dofs, &solution, exact.as_ref());
    let (_, best) = best_approx(mesh, &system, exact.as_ref())?;
    Ok(LevelResult { system, solution, errors, best })
}

fn record(level: usize, mesh: &Mesh, res: &LevelResult, prev: Option<&ConvergenceRecord>) -> ConvergenceRecord {
    let ndof = res.system.dofs.total();
    let total_pct = res.errors.total_pct();
    ConvergenceRecord {
        level,
        ndof,
        h: mesh.h(),
        err_sigma_hdiv: res.errors.sigma_hdiv,
        err_u_l2: res.errors.u_l2,
        err_p_l2: res.errors.p_l2,
        total_pct,
        best_pct: res.best.total_pct(),
        slope: prev.map(|p| (p.total_pct / total_pct).ln() / (ndof as f64 / p.ndof as f64).ln()),
        weak_symmetry: res.solution.weak_symmetry,
        n_triangles: mesh.n_triangles(),
    }
}

/// Study parameters shared by the uniform and adaptive runs.
#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub domain: String,
    pub orders: OrderSpec,
    pub solution: String,
    pub material: Option<Material>,
}

impl StudyConfig {
    pub fn new(domain: &str, orders: OrderSpec, solution: &str) -> StudyConfig {
        StudyConfig { domain: domain.into(), orders, solution: solution.into(), material: None }
    }
}

/// Uniform refinement: `levels` meshes starting from the initial one.
pub fn run_convergence(cfg: &StudyConfig, levels: usize) -> Result<Vec<ConvergenceRecord>> {
    let exact = exact_solution(&cfg.solution, cfg.material)?;
    let mut mesh = build_domain(&cfg.domain)?;
    let mut out: Vec<ConvergenceRecord> = Vec::new();
    for level in 0..levels {
        if level > 0 {
            mesh = refine_uniform(&mesh)?;
        }
        let orders = cfg.orders.build(&mesh)?;
        let res = solve_level(&mesh, &orders, &exact)?;
        let rec = record(level, &mesh, &res, out.last());
        out.push(rec);
    }
    Ok(out)
}

/// Indices of the largest `fraction` of the indicators (at least one).
pub fn mark_greedy(indicators: &[f64], fraction: f64) -> Vec<usize> {
    let n = indicators.len();
    let k = ((fraction.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n.max(1));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// Adaptive run driven by the true element errors.
pub struct AdaptiveRun {
    pub records: Vec<ConvergenceRecord>,
    pub final_mesh: Mesh,
    /// triangles marked at each step
    pub marked: Vec<Vec<usize>>,
}

pub fn run_adaptive(cfg: &StudyConfig, steps: usize, fraction: f64) -> Result<AdaptiveRun> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("marking fraction {fraction} not in (0, 1]")));
    }
    let exact = exact_solution(&cfg.solution, cfg.material)?;
    let mut mesh = build_domain(&cfg.domain)?;
    let mut records: Vec<ConvergenceRecord> = Vec::new();
    let mut marked_all = Vec::new();
    for step in 0..steps {
        let orders = cfg.orders.build(&mesh)?;
        let res = solve_level(&mesh, &orders, &exact)?;
        let rec = record(step, &mesh, &res, records.last());
        records.push(rec);
        if step + 1 < steps {
            let marked = mark_greedy(&res.errors.element_sq, fraction);
            mesh = refine_bisect(&mesh, &marked)?;
            mesh.validate()?;
            marked_all.push(marked);
        }
    }
    Ok(AdaptiveRun { records, final_mesh: mesh, marked: marked_all })
}

pub const CSV_HEADER: &str = "level,ndof,h,err_sigma_hdiv,err_u_l2,err_p_l2,total_pct,best_pct,slope";

pub fn records_to_csv(records: &[ConvergenceRecord]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in records {
        let slope = r.slope.map(|v| format!("{v:.6}")).unwrap_or_default();
        writeln!(
            s,
            "{},{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{}",
            r.level, r.ndof, r.h, r.err_sigma_hdiv, r.err_u_l2, r.err_p_l2, r.total_pct, r.best_pct, slope
        )
        .unwrap();
    }
    s
}

/// Reads a table written by [`records_to_csv`]. Columns not stored in the
/// table (`weak_symmetry`, `n_triangles`) come back as zero.
pub fn records_from_csv(text: &str) -> Result<Vec<ConvergenceRecord>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Parse { line: 1, msg: format!("expected header '{CSV_HEADER}'") }),
    }
    lines
        .map(|(i, l)| {
            let bad = |msg: String| Error::Parse { line: i + 1, msg };
            let c: Vec<&str> = l.split(',').map(str::trim).collect();
            if c.len() != 9 {
                return Err(bad(format!("expected 9 columns, found {}", c.len())));
            }
            let f = |k: usize| c[k].parse::<f64>().map_err(|_| bad(format!("'{}' is not a number", c[k])));
            let n = |k: usize| c[k].parse::<usize>().map_err(|_| bad(format!("'{}' is not an integer", c[k])));
            Ok(ConvergenceRecord {
                level: n(0)?,
                ndof: n(1)?,
                h: f(2)?,
                err_sigma_hdiv: f(3)?,
                err_u_l2: f(4)?,
                err_p_l2: f(5)?,
                total_pct: f(6)?,
                best_pct: f(7)?,
                slope: if c[8].is_empty() { None } else { Some(f(8)?) },
                weak_symmetry: 0.0,
                n_triangles: 0,
            })
        })
        .collect()
}

/// Log-log plot of error percentages against the number of unknowns. Each
/// series contributes its discrete error (solid) and best approximation (dashed).
pub fn svg_plot(title: &str, series: &[(&str, &[ConvergenceRecord])]) -> String {
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let (w, h, ml, mr, mt, mb) = (640.0, 440.0, 70.0, 170.0, 40.0, 50.0);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, rs)| rs.iter().flat_map(|r| [(r.ndof as f64, r.total_pct), (r.ndof as f64, r.best_pct)]))
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .collect();
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n");
    writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>").unwrap();
    writeln!(s, "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>", ml + (w - ml - mr) / 2.0, escape(title)).unwrap();
    if pts.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let dec = |v: f64| v.log10();
    let x0 = pts.iter().map(|p| dec(p.0)).fold(f64::INFINITY, f64::min).floor();
    let x1 = pts.iter().map(|p| dec(p.0)).fold(f64::NEG_INFINITY, f64::max).ceil().max(x0 + 1.0);
    let y0 = pts.iter().map(|p| dec(p.1)).fold(f64::INFINITY, f64::min).floor();
    let y1 = pts.iter().map(|p| dec(p.1)).fold(f64::NEG_INFINITY, f64::max).ceil().max(y0 + 1.0);
    let px = |x: f64| ml + (dec(x) - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (dec(y) - y0) / (y1 - y0) * (h - mt - mb);
    writeln!(s, "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>", w - ml - mr, h - mt - mb).unwrap();
    for d in x0 as i32..=x1 as i32 {
        let x = px(10f64.powi(d));
        writeln!(s, "<line x1=\"{x:.1}\" y1=\"{mt}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"#ddd\"/>", h - mb).unwrap();
        writeln!(s, "<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">1e{d}</text>", h - mb + 16.0).unwrap();
    }
    for d in y0 as i32..=y1 as i32 {
        let y = py(10f64.powi(d));
        writeln!(s, "<line x1=\"{ml}\" y1=\"{y:.1}\" x2=\"{}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>", w - mr).unwrap();
        writeln!(s, "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">1e{d}</text>", ml - 6.0, y + 4.0).unwrap();
    }
    writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">number of unknowns</text>", ml + (w - ml - mr) / 2.0, h - 10.0).unwrap();
    writeln!(s, "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">error (% of solution norm)</text>", h / 2.0, h / 2.0).unwrap();
    for (i, (name, rs)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        for (dash, pick, label) in [("", 0, "error"), (" stroke-dasharray=\"5,4\"", 1, "best approx.")] {
            let line: Vec<String> = rs
                .iter()
                .map(|r| (r.ndof as f64, if pick == 0 { r.total_pct } else { r.best_pct }))
                .filter(|(x, y)| *x > 0.0 && *y > 0.0)
                .map(|(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
                .collect();
            writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>", line.join(" ")).unwrap();
            for p in &line {
                let (a, b) = p.split_once(',').unwrap();
                writeln!(s, "<circle cx=\"{a}\" cy=\"{b}\" r=\"2.5\" fill=\"{color}\"/>").unwrap();
            }
            let ly = mt + 14.0 + (2 * i + pick) as f64 * 18.0;
            let lx = w - mr + 12.0;
            writeln!(s, "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>", lx + 22.0).unwrap();
            writeln!(s, "<text x=\"{}\" y=\"{}\">{} {}</text>", lx + 28.0, ly + 4.0, escape(name), label).unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
