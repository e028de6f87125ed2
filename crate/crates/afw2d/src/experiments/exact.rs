//! Manufactured solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use super::williams::{CornerConfig, CornerField};
use crate::assembly::{Material, PointFn, Problem};
use crate::error::{Error, Result};
use crate::fields::{PolyField, TrigField};
use crate::linalg::{Mat2, Vec2};

/// A displacement field with its first and second derivatives; stress,
/// rotation and load follow from the material.
pub trait ExactSolution: Send + Sync {
    fn name(&self) -> &str;
    fn material(&self) -> Material;
    /// Displacement, gradient (`g[(i, j)] = du_i/dx_j`) and Hessians per component.
    fn eval(&self, x: [f64; 2]) -> (Vec2, Mat2, [Mat2; 2]);
    /// Point where the solution is singular, if any.
    fn singular_point(&self) -> Option<[f64; 2]> {
        None
    }

    fn displacement(&self, x: [f64; 2]) -> Vec2 {
        self.eval(x).0
    }

    fn stress(&self, x: [f64; 2]) -> Mat2 {
        let g = self.eval(x).1;
        self.material().stress(&((g + g.transpose()) * 0.5))
    }

    /// Skew part of the displacement gradient, (du_2/dx_1 - du_1/dx_2) / 2.
    fn rotation(&self, x: [f64; 2]) -> f64 {
        let g = self.eval(x).1;
        0.5 * (g[(1, 0)] - g[(0, 1)])
    }

    fn div_stress(&self, x: [f64; 2]) -> Vec2 {
        let h = self.eval(x).2;
        let m = self.material();
        let graddiv = |i: usize| h[0][(0, i)] + h[1][(1, i)];
        Vec2::from_fn(|i, _| m.mu * (h[i][(0, 0)] + h[i][(1, 1)]) + (m.lambda + m.mu) * graddiv(i))
    }
}

/// Problem data (load and boundary displacement) for an exact solution.
pub fn problem_for(exact: Arc<dyn ExactSolution>) -> Problem {
    let e1 = exact.clone();
    let body_force: PointFn = Arc::new(move |x| -e1.div_stress(x));
    let e2 = exact.clone();
    let boundary_displacement: PointFn = Arc::new(move |x| e2.displacement(x));
    Problem { material: exact.material(), body_force, boundary_displacement }
}

pub struct SmoothPoly {
    pub field: PolyField,
    pub material: Material,
}

impl SmoothPoly {
    /// A fixed cubic field.
    pub fn cubic(material: Material) -> SmoothPoly {
        let terms = vec![
            (1, 0, Vec2::new(0.5, -0.2)),
            (0, 1, Vec2::new(0.1, 0.3)),
            (2, 1, Vec2::new(1.0, 0.0)),
            (1, 1, Vec2::new(-1.0, 0.4)),
            (0, 3, Vec2::new(0.5, 0.0)),
            (3, 0, Vec2::new(0.0, 1.0)),
            (1, 2, Vec2::new(0.0, -1.0)),
        ];
        SmoothPoly { field: PolyField { degree: 3, terms }, material }
    }

    pub fn linear(material: Material, a: Vec2, m: Mat2) -> SmoothPoly {
        let terms = vec![(0, 0, a), (1, 0, m.column(0).into()), (0, 1, m.column(1).into())];
        SmoothPoly { field: PolyField { degree: 1, terms }, material }
    }
}

impl ExactSolution for SmoothPoly {
    fn name(&self) -> &str {
        "smooth_poly"
    }
    fn material(&self) -> Material {
        self.material
    }
    fn eval(&self, x: [f64; 2]) -> (Vec2, Mat2, [Mat2; 2]) {
        use crate::fields::VectorField;
        let (v, g) = self.field.eval(x);
        (v, g, self.field.hessian(x))
    }
}

pub struct SmoothTrig {
    pub field: TrigField,
    pub material: Material,
}

impl SmoothTrig {
    pub fn new(material: Material) -> SmoothTrig {
        let waves = vec![
            (Vec2::new(PI, 0.5 * PI), 0.3, Vec2::new(1.0, 0.5)),
            (Vec2::new(-0.7 * PI, PI), 1.1, Vec2::new(-0.4, 1.0)),
        ];
        SmoothTrig { field: TrigField { waves }, material }
    }
}

impl ExactSolution for SmoothTrig {
    fn name(&self) -> &str {
        "smooth_trig"
    }
    fn material(&self) -> Material {
        self.material
    }
    fn eval(&self, x: [f64; 2]) -> (Vec2, Mat2, [Mat2; 2]) {
        use crate::fields::VectorField;
        let (v, g) = self.field.eval(x);
        (v, g, self.field.hessian(x))
    }
}

/// Leading corner singularity of the reentrant corner at the origin; solves
/// the homogeneous equations exactly.
pub struct CornerSingular {
    pub field: CornerField,
}

impl ExactSolution for CornerSingular {
    fn name(&self) -> &str {
        "lshape_singular"
    }
    fn material(&self) -> Material {
        self.field.material
    }
    fn eval(&self, x: [f64; 2]) -> (Vec2, Mat2, [Mat2; 2]) {
        self.field.eval(x)
    }
    fn singular_point(&self) -> Option<[f64; 2]> {
        Some([0.0, 0.0])
    }
    fn div_stress(&self, _x: [f64; 2]) -> Vec2 {
        Vec2::zeros()
    }
}

pub const SOLUTIONS: [&str; 3] = ["smooth_trig", "smooth_poly", "lshape_singular"];

/// Named exact solution. `material` overrides the default of smooth solutions;
/// the corner solution always uses the corner configuration's material.
pub fn exact_solution(kind: &str, material: Option<Material>) -> Result<Arc<dyn ExactSolution>> {
    let m = material.unwrap_or_default();
    match kind {
        "smooth_trig" => Ok(Arc::new(SmoothTrig::new(m))),
        "smooth_poly" => Ok(Arc::new(SmoothPoly::cubic(m))),
        "lshape_singular" => {
            let mut cfg = CornerConfig::default();
            if let Some(mat) = material {
                cfg.material = mat;
            }
            Ok(Arc::new(CornerSingular { field: CornerField::new(&cfg)? }))
        }
        _ => Err(Error::InvalidArgument(format!("unknown solution '{kind}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_field_has_constant_stress_and_no_load() {
        let m = Material::new(1.0, 2.0).unwrap();
        let s = SmoothPoly::linear(m, Vec2::new(1.0, 2.0), Mat2::new(0.1, 0.2, -0.3, 0.4));
        let s0 = s.stress([0.0, 0.0]);
        for x in [[0.3, 0.1], [-2.0, 1.0]] {
            assert!((s.stress(x) - s0).norm() < 1e-14);
            assert!(s.div_stress(x).norm() < 1e-14);
            assert!((s.rotation(x) + 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn divergence_of_stress_matches_finite_differences() {
        for kind in SOLUTIONS {
            let e = exact_solution(kind, None).unwrap();
            let h = 1e-6;
            for x in [[0.3, 0.4], [0.7, 0.2], [-0.4, 0.5]] {
                let dx = (e.stress([x[0] + h, x[1]]) - e.stress([x[0] - h, x[1]])) / (2.0 * h);
                let dy = (e.stress([x[0], x[1] + h]) - e.stress([x[0], x[1] - h])) / (2.0 * h);
                let fd = Vec2::new(dx[(0, 0)] + dy[(0, 1)], dx[(1, 0)] + dy[(1, 1)]);
                assert!((fd - e.div_stress(x)).norm() < 1e-6, "{kind}");
            }
        }
    }

    #[test]
    fn corner_solution_equilibrium_on_a_ring() {
        let e = exact_solution("lshape_singular", None).unwrap();
        let h = 1e-5;
        for k in 0..16 {
            let th = 1.5 * PI * (k as f64 + 0.5) / 16.0;
            let x = [0.5 * th.cos(), 0.5 * th.sin()];
            let dx = (e.stress([x[0] + h, x[1]]) - e.stress([x[0] - h, x[1]])) / (2.0 * h);
            let dy = (e.stress([x[0], x[1] + h]) - e.stress([x[0], x[1] - h])) / (2.0 * h);
            let fd = Vec2::new(dx[(0, 0)] + dy[(0, 1)], dx[(1, 0)] + dy[(1, 1)]);
            assert!(fd.norm() < 1e-6);
        }
    }

    #[test]
    fn corner_stress_scales_with_the_exponent() {
        let e = exact_solution("lshape_singular", None).unwrap();
        let x = [0.3 * 0.6f64.cos(), 0.3 * 0.6f64.sin()];
        let y = [x[0] * 0.01, x[1] * 0.01];
        let ratio = e.stress(y).norm() / e.stress(x).norm();
        assert!((ratio.ln() / 0.01f64.ln() - (0.60404 - 1.0)).abs() < 1e-4);
    }
}
