//! Shape regularity and curvature diagnostics.

use super::{sample_points, ElementMap, Mesh};
use crate::linalg::Mat2;

/// h/rho of the reference triangle.
pub const REFERENCE_SHAPE_RATIO: f64 = 1.0 + std::f64::consts::SQRT_2;

#[derive(Clone, Debug)]
pub struct ElementRegularity {
    /// sup |DG - B| |B^{-1}| over the element (B = DG at the centroid)
    pub c_t: f64,
    /// diameter over inscribed diameter of the affine approximation
    pub shape_ratio: f64,
    /// |B| |B^{-1}| in the spectral norm
    pub kappa_b: f64,
    pub h_t: f64,
}

#[derive(Clone, Debug)]
pub struct RegularityReport {
    pub elements: Vec<ElementRegularity>,
    pub c_h: f64,
    pub max_shape_ratio: f64,
    pub h: f64,
}

fn spectral_norm(m: &Mat2) -> f64 {
    m.singular_values().max()
}

/// sup |DG - B| |B^{-1}| over a lattice of sample points.
pub fn element_distortion(map: &ElementMap) -> f64 {
    if map.is_affine() {
        return 0.0;
    }
    let b = map.centroid_jacobian();
    let nb = spectral_norm(&b.try_inverse().unwrap_or_else(Mat2::zeros));
    sample_points(12).iter().map(|&p| spectral_norm(&(map.eval(p).1 - b)) * nb).fold(0.0, f64::max)
}

pub fn regularity(mesh: &Mesh) -> RegularityReport {
    let mut elements = Vec::with_capacity(mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let map = mesh.map(t);
        let b = map.centroid_jacobian();
        let nb = spectral_norm(&b.try_inverse().unwrap_or_else(Mat2::zeros));
        let c_t = element_distortion(&map);
        // affine approximation through the centroid
        let (xc, _) = map.eval([1.0 / 3.0, 1.0 / 3.0]);
        let corner = |v: [f64; 2]| xc + b * nalgebra::Vector2::new(v[0] - 1.0 / 3.0, v[1] - 1.0 / 3.0);
        let p = [corner([0.0, 0.0]), corner([1.0, 0.0]), corner([0.0, 1.0])];
        let l = [(p[1] - p[0]).norm(), (p[2] - p[1]).norm(), (p[0] - p[2]).norm()];
        let area = 0.5 * b.determinant().abs();
        let diam = l[0].max(l[1]).max(l[2]);
        let inscribed = 4.0 * area / (l[0] + l[1] + l[2]);
        elements.push(ElementRegularity {
            c_t,
            shape_ratio: diam / inscribed,
            kappa_b: spectral_norm(&b) * nb,
            h_t: mesh.diameter(t),
        });
    }
    RegularityReport {
        c_h: elements.iter().map(|e| e.c_t).fold(0.0, f64::max),
        max_shape_ratio: elements.iter().map(|e| e.shape_ratio).fold(0.0, f64::max),
        h: mesh.h(),
        elements,
    }
}
