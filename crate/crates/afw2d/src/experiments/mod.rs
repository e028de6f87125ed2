//! Corner exponents, manufactured solutions, error measurement and
//! refinement studies.

mod errors;
mod exact;
mod study;
mod williams;

pub use errors::{best_approx, compute_errors, error_rule, ErrorRecord, CORNER_LAYERS};
pub use exact::{exact_solution, problem_for, CornerSingular, ExactSolution, SmoothPoly, SmoothTrig, SOLUTIONS};
pub use study::{
    mark_greedy, records_from_csv, records_to_csv, run_adaptive, run_convergence, solve_level, svg_plot, AdaptiveRun, ConvergenceRecord,
    LevelResult, OrderSpec, StudyConfig, CSV_HEADER,
};
pub use williams::{
    characteristic_determinant, characteristic_matrix, corner_exponent, kolosov, plane_stress, CornerBc, CornerConfig,
    CornerField,
};

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}
