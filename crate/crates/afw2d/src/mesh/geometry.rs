//! Curves, patch maps and element maps.
//!
//! A patch map sends the reference triangle onto a (possibly curved) triangle of
//! the initial mesh. Refined elements are affine sub-triangles of their patch's
//! reference triangle, so every element map is `G_patch(A x + c)`.

use crate::linalg::{Mat2, Vec2};
use crate::quadrature;

#[derive(Clone, Debug, PartialEq)]
pub enum Curve {
    Straight { a: [f64; 2], b: [f64; 2] },
    /// x(s) = center + radius (cos th, sin th), th = theta0 + s (theta1 - theta0)
    Arc { center: [f64; 2], radius: f64, theta0: f64, theta1: f64 },
}

impl Curve {
    pub fn start(&self) -> [f64; 2] {
        self.eval(0.0)
    }

    pub fn end(&self) -> [f64; 2] {
        self.eval(1.0)
    }

    pub fn eval(&self, s: f64) -> [f64; 2] {
        match *self {
            Curve::Straight { a, b } => [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])],
            Curve::Arc { center, radius, theta0, theta1 } => {
                let th = theta0 + s * (theta1 - theta0);
                [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            }
        }
    }

    /// Derivative of order `k` (1..=3) with respect to s.
    pub fn derivative(&self, k: usize, s: f64) -> Vec2 {
        match *self {
            Curve::Straight { a, b } => {
                if k == 1 {
                    Vec2::new(b[0] - a[0], b[1] - a[1])
                } else {
                    Vec2::zeros()
                }
            }
            Curve::Arc { radius, theta0, theta1, .. } => {
                let d = theta1 - theta0;
                let th = theta0 + s * d;
                let (c, sn) = (th.cos(), th.sin());
                let f = radius * d.powi(k as i32);
                match k % 4 {
                    1 => Vec2::new(-sn, c) * f,
                    2 => Vec2::new(-c, -sn) * f,
                    3 => Vec2::new(sn, -c) * f,
                    _ => Vec2::new(c, sn) * f,
                }
            }
        }
    }

    pub fn is_straight(&self) -> bool {
        matches!(self, Curve::Straight { .. })
    }

    /// Deviation kernel k(s) = d(s) / (s (1 - s)) with d the deviation from the chord,
    /// and its derivative. Evaluated through the Green's function of d'' so it is
    /// stable up to and including the endpoints.
    pub fn kernel(&self, s: f64) -> (Vec2, Vec2) {
        if self.is_straight() {
            return (Vec2::zeros(), Vec2::zeros());
        }
        let (u, w) = quadrature::gauss_legendre(24);
        let mut k = Vec2::zeros();
        let mut dk = Vec2::zeros();
        for (&ui, &wi) in u.iter().zip(&w) {
            let t1 = s * ui;
            let t2 = 1.0 - (1.0 - s) * ui;
            let (d2a, d3a) = (self.derivative(2, t1), self.derivative(3, t1));
            let (d2b, d3b) = (self.derivative(2, t2), self.derivative(3, t2));
            k -= (d2a * (s * ui) + d2b * ((1.0 - s) * ui)) * wi;
            dk -= (d2a * ui + d3a * (s * ui * ui) - d2b * ui + d3b * ((1.0 - s) * ui * ui)) * wi;
        }
        (k, dk)
    }
}

/// Map of the reference triangle onto a patch of the initial mesh.
#[derive(Clone, Debug, PartialEq)]
pub enum PatchMap {
    Affine { p: [[f64; 2]; 3] },
    /// Transfinite blending x = sum lam_k p_k + sum_i lam_i lam_{i+1} k_i(lam_{i+1});
    /// `curves[i]` runs from `p[i]` to `p[i+1]`.
    Transfinite { p: [[f64; 2]; 3], curves: [Curve; 3] },
}

impl PatchMap {
    pub fn vertices(&self) -> [[f64; 2]; 3] {
        match self {
            PatchMap::Affine { p } | PatchMap::Transfinite { p, .. } => *p,
        }
    }

    pub fn is_affine(&self) -> bool {
        match self {
            PatchMap::Affine { .. } => true,
            PatchMap::Transfinite { curves, .. } => curves.iter().all(Curve::is_straight),
        }
    }

    fn affine_part(&self) -> (Vec2, Mat2) {
        let p = self.vertices();
        let b = Vec2::new(p[0][0], p[0][1]);
        let m = Mat2::new(p[1][0] - p[0][0], p[2][0] - p[0][0], p[1][1] - p[0][1], p[2][1] - p[0][1]);
        (b, m)
    }

    /// Value and Jacobian at reference point `y`.
    pub fn eval(&self, y: [f64; 2]) -> (Vec2, Mat2) {
        let (b, m) = self.affine_part();
        let mut x = b + m * Vec2::new(y[0], y[1]);
        let mut jac = m;
        if let PatchMap::Transfinite { curves, .. } = self {
            let lam = [1.0 - y[0] - y[1], y[0], y[1]];
            let dlam = [Vec2::new(-1.0, -1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
            for (i, c) in curves.iter().enumerate() {
                if c.is_straight() {
                    continue;
                }
                let j = (i + 1) % 3;
                let s = lam[j].clamp(0.0, 1.0);
                let (k, dk) = c.kernel(s);
                let prod = lam[i] * lam[j];
                x += k * prod;
                let dprod = dlam[j] * lam[i] + dlam[i] * lam[j];
                let prod_ds = dlam[j] * prod;
                jac += k * dprod.transpose() + dk * prod_ds.transpose();
            }
        }
        (x, jac)
    }
}

/// Element map G(x) = patch(A x + c).
#[derive(Clone, Debug)]
pub struct ElementMap {
    pub patch: PatchMap,
    pub a: Mat2,
    pub c: Vec2,
    affine: Option<(Vec2, Mat2)>,
}

impl ElementMap {
    pub fn new(patch: PatchMap, chain: [[f64; 2]; 3]) -> Self {
        let c = Vec2::new(chain[0][0], chain[0][1]);
        let a = Mat2::new(
            chain[1][0] - chain[0][0],
            chain[2][0] - chain[0][0],
            chain[1][1] - chain[0][1],
            chain[2][1] - chain[0][1],
        );
        let affine = if patch.is_affine() {
            let (b0, m) = patch.affine_part();
            Some((b0 + m * c, m * a))
        } else {
            None
        };
        ElementMap { patch, a, c, affine }
    }

    pub fn is_affine(&self) -> bool {
        self.affine.is_some()
    }

    /// Physical point and Jacobian at reference point `xh`.
    #[inline]
    pub fn eval(&self, xh: [f64; 2]) -> (Vec2, Mat2) {
        if let Some((b, m)) = &self.affine {
            return (b + m * Vec2::new(xh[0], xh[1]), *m);
        }
        let y = self.a * Vec2::new(xh[0], xh[1]) + self.c;
        let (x, dg) = self.patch.eval([y.x, y.y]);
        (x, dg * self.a)
    }

    pub fn point(&self, xh: [f64; 2]) -> [f64; 2] {
        let (x, _) = self.eval(xh);
        [x.x, x.y]
    }

    /// Jacobian at the reference centroid (the affine part of the map).
    pub fn centroid_jacobian(&self) -> Mat2 {
        self.eval([1.0 / 3.0, 1.0 / 3.0]).1
    }

    /// Newton solve of G(xh) = x starting from the centroid.
    pub fn inverse(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        let target = Vec2::new(x[0], x[1]);
        let mut xh = Vec2::new(1.0 / 3.0, 1.0 / 3.0);
        let (x0, b) = self.eval([xh.x, xh.y]);
        let scale = (b.norm() + (x0 - target).norm()).max(1e-300);
        for _ in 0..60 {
            let (g, dg) = self.eval([xh.x, xh.y]);
            let r = g - target;
            if r.norm() <= 1e-14 * scale {
                return Some([xh.x, xh.y]);
            }
            let step = dg.try_inverse()? * r;
            // damp steps that leave a generous neighbourhood of the reference triangle
            let mut t = 1.0;
            while t > 1e-3 {
                let cand = xh - step * t;
                if cand.x > -2.0 && cand.y > -2.0 && cand.x + cand.y < 3.0 {
                    break;
                }
                t *= 0.5;
            }
            xh -= step * t;
        }
        let (g, _) = self.eval([xh.x, xh.y]);
        ((g - target).norm() <= 1e-10 * scale).then_some([xh.x, xh.y])
    }
}
