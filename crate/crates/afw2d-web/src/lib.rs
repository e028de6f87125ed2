//! wasm-bindgen entry points for the static page in `www/`.
//!
//! Each function returns a JSON string so the page needs no generated
//! type glue beyond the functions themselves.

use afw2d::experiments::{corner_exponent as exponent, mark_greedy, plane_stress, solve_level, CornerConfig};
use afw2d::experiments::exact_solution;
use afw2d::mesh::{build_domain, refine_bisect, refine_uniform, regularity, svg_mesh, Mesh};
use afw2d::spaces::OrderMap;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Displacement exponent of a plane-stress corner.
#[wasm_bindgen]
pub fn corner_exponent(angle_degrees: f64, poisson_ratio: f64, faces: &str) -> Result<f64, JsValue> {
    corner_report(angle_degrees, poisson_ratio, faces).map_err(err)
}

pub fn corner_report(angle_degrees: f64, poisson_ratio: f64, faces: &str) -> afw2d::Result<f64> {
    if !(angle_degrees > 0.0 && angle_degrees < 360.0 && poisson_ratio > -1.0 && poisson_ratio < 0.5) {
        return Err(afw2d::Error::InvalidArgument(format!("angle {angle_degrees}, nu {poisson_ratio}")));
    }
    let cfg = CornerConfig { material: plane_stress(1.0, poisson_ratio), angle: angle_degrees.to_radians(), bc: faces.parse()? };
    exponent(&cfg)
}

fn mesh_json(m: &Mesh) -> String {
    let reg = regularity(m);
    json!({
        "triangles": m.n_triangles(),
        "h": reg.h,
        "c_h": reg.c_h,
        "shape_ratio": reg.max_shape_ratio,
        "svg": svg_mesh(m),
    })
    .to_string()
}

/// Mesh after `levels` uniform refinements, as JSON with an SVG drawing.
#[wasm_bindgen]
pub fn mesh(domain: &str, levels: usize) -> Result<String, JsValue> {
    uniform_mesh(domain, levels).map(|m| mesh_json(&m)).map_err(err)
}

fn uniform_mesh(domain: &str, levels: usize) -> afw2d::Result<Mesh> {
    let mut m = build_domain(domain)?;
    for _ in 0..levels.min(5) {
        m = refine_uniform(&m)?;
    }
    Ok(m)
}

/// Greedy adaptive loop on the corner problem; one JSON row per solve.
pub fn adaptive_report(domain: &str, order: usize, steps: usize, fraction: f64) -> afw2d::Result<String> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(afw2d::Error::InvalidArgument(format!("fraction {fraction}")));
    }
    let exact = exact_solution("lshape_singular", None)?;
    let mut m = build_domain(domain)?;
    let mut rows = Vec::new();
    for step in 0..steps.clamp(1, 12) {
        let res = solve_level(&m, &OrderMap::uniform(&m, order)?, &exact)?;
        rows.push(json!({
            "step": step,
            "ndof": res.system.dofs.total(),
            "total_pct": res.errors.total_pct(),
            "best_pct": res.best.total_pct(),
            "weak_symmetry": res.solution.weak_symmetry,
        }));
        if step + 1 < steps {
            m = refine_bisect(&m, &mark_greedy(&res.errors.element_sq, fraction))?;
        }
    }
    let mut out: serde_json::Value = serde_json::from_str(&mesh_json(&m)).expect("valid json");
    out["rows"] = serde_json::Value::Array(rows);
    Ok(out.to_string())
}

/// Adaptive solve of the corner problem; returns the error history and the final mesh.
#[wasm_bindgen]
pub fn adapt(domain: &str, order: usize, steps: usize, fraction: f64) -> Result<String, JsValue> {
    adaptive_report(domain, order, steps, fraction).map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_parse() {
        assert!((corner_report(270.0, 0.3, "clamped-clamped").unwrap() - 0.6040444).abs() < 1e-6);
        assert!(corner_report(400.0, 0.3, "clamped-clamped").is_err());
        let v: serde_json::Value = serde_json::from_str(&mesh_json(&uniform_mesh("lshape_circular", 1).unwrap())).unwrap();
        assert_eq!(v["triangles"], 24);
        let a: serde_json::Value = serde_json::from_str(&adaptive_report("lshape_affine", 0, 3, 0.2).unwrap()).unwrap();
        let rows = a["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[2]["total_pct"].as_f64().unwrap() < rows[0]["total_pct"].as_f64().unwrap());
    }
}
