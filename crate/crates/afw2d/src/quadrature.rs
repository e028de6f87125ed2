//! Quadrature on the reference triangle (0,0), (1,0), (0,1) and on [0, 1].
//!
//! Degrees 0..=2 use small symmetric rules; higher degrees use a collapsed
//! (Duffy) tensor product of Gauss-Legendre rules, which is positive and exact.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 96;

#[derive(Clone, Debug)]
pub struct QuadRule {
    pub degree: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Barycentric coordinates of point `i`.
    pub fn barycentric(&self, i: usize) -> [f64; 3] {
        let [x, y] = self.points[i];
        [1.0 - x - y, x, y]
    }

    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    /// Rule exact for polynomials of total degree `degree` on the reference triangle.
    pub fn triangle(degree: usize) -> Result<Arc<QuadRule>> {
        if degree > MAX_DEGREE {
            return Err(Error::QuadratureDegree(degree, MAX_DEGREE));
        }
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(r) = cache.lock().unwrap().get(&degree) {
            return Ok(r.clone());
        }
        let rule = Arc::new(build_triangle_rule(degree));
        cache.lock().unwrap().insert(degree, rule.clone());
        Ok(rule)
    }

    /// Rule graded towards reference vertex `vertex` by `layers` levels of
    /// red refinement, each sub-triangle using the degree-`degree` rule.
    pub fn graded(degree: usize, vertex: usize, layers: usize) -> Result<QuadRule> {
        let base = QuadRule::triangle(degree)?;
        let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let mut tri = [corners[vertex], corners[(vertex + 1) % 3], corners[(vertex + 2) % 3]];
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut push = |t: &[[f64; 2]; 3]| {
            let a = [t[1][0] - t[0][0], t[1][1] - t[0][1]];
            let b = [t[2][0] - t[0][0], t[2][1] - t[0][1]];
            let det = (a[0] * b[1] - a[1] * b[0]).abs();
            for (p, w) in base.points.iter().zip(&base.weights) {
                points.push([t[0][0] + a[0] * p[0] + b[0] * p[1], t[0][1] + a[1] * p[0] + b[1] * p[1]]);
                weights.push(w * det);
            }
        };
        for _ in 0..layers {
            let mid = |p: [f64; 2], q: [f64; 2]| [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
            let m01 = mid(tri[0], tri[1]);
            let m12 = mid(tri[1], tri[2]);
            let m20 = mid(tri[2], tri[0]);
            push(&[m01, tri[1], m12]);
            push(&[m20, m12, tri[2]]);
            push(&[m12, m20, m01]);
            tri = [tri[0], m01, m20];
        }
        push(&tri);
        Ok(QuadRule { degree, points, weights })
    }
}

fn build_triangle_rule(degree: usize) -> QuadRule {
    match degree {
        0 | 1 => QuadRule { degree, points: vec![[1.0 / 3.0, 1.0 / 3.0]], weights: vec![0.5] },
        2 => QuadRule {
            degree,
            points: vec![[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]],
            weights: vec![1.0 / 6.0; 3],
        },
        _ => {
            // the collapsed direction carries one extra degree from the Jacobian
            let n = (degree + 3) / 2;
            let (x, w) = gauss_legendre(n);
            let mut points = Vec::with_capacity(n * n);
            let mut weights = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    points.push([x[i] * (1.0 - x[j]), x[j]]);
                    weights.push(w[i] * w[j] * (1.0 - x[j]));
                }
            }
            QuadRule { degree, points, weights }
        }
    }
}

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        // map from [-1, 1] to [0, 1]
        x[n - 1 - i] = 0.5 * (z + 1.0);
        w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    cache.lock().unwrap().insert(n, (x.clone(), w.clone()));
    (x, w)
}

/// Legendre polynomial P_n and its derivative at z in [-1, 1].
pub fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = if (1.0 - z * z).abs() < 1e-300 {
        let s = if z > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * (n * (n + 1)) as f64 / 2.0
    } else {
        n as f64 * (p0 - z * p1) / (1.0 - z * z)
    };
    (p1, d)
}

/// Edge rule on [0, 1] exact for polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_legendre(degree / 2 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_monomial(a: u32, b: u32) -> f64 {
        // int_T x^a y^b = a! b! / (a + b + 2)!
        let f = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    #[test]
    fn area_and_first_moments() {
        let r = QuadRule::triangle(1).unwrap();
        assert!((r.integrate(|_| 1.0) - 0.5).abs() < 1e-15);
        let r = QuadRule::triangle(4).unwrap();
        assert!((r.integrate(|p| p[0] * p[1]) - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn monomials_exact_up_to_degree() {
        for d in [0usize, 1, 2, 3, 5, 8, 13, 20, 31] {
            let r = QuadRule::triangle(d).unwrap();
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let q = r.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    let e = exact_monomial(a, b);
                    assert!((q - e).abs() < 1e-14 * e.max(1e-3), "deg {d} a {a} b {b}: {q} vs {e}");
                }
            }
        }
    }

    #[test]
    fn rejects_excessive_degree() {
        assert!(QuadRule::triangle(MAX_DEGREE + 1).is_err());
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..30 {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n {n} k {k}");
            }
        }
    }

    #[test]
    fn graded_rule_preserves_polynomials() {
        let r = QuadRule::graded(6, 1, 3).unwrap();
        let q = r.integrate(|p| p[0].powi(3) * p[1] + 1.0);
        let e = exact_monomial(3, 1) + 0.5;
        assert!((q - e).abs() < 1e-14);
    }

    #[test]
    fn graded_rule_improves_singular_integral() {
        // int_T r^{-0.8} with the singularity at vertex 0
        let f = |p: [f64; 2]| (p[0] * p[0] + p[1] * p[1]).powf(-0.4);
        let fine = QuadRule::graded(20, 0, 14).unwrap().integrate(f);
        let plain = (QuadRule::triangle(10).unwrap().integrate(f) - fine).abs();
        let graded = (QuadRule::graded(10, 0, 3).unwrap().integrate(f) - fine).abs();
        assert!(graded < plain);
    }
}
