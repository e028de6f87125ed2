//! Vector fields with gradients, used as inputs to interpolation operators,
//! right-hand sides and exact solutions.

use rand::Rng;

use crate::linalg::{Mat2, Vec2};

/// A vector field together with its Jacobian (`grad[(i, j)] = d f_i / d x_j`).
pub trait VectorField: Sync {
    fn eval(&self, x: [f64; 2]) -> (Vec2, Mat2);

    fn value(&self, x: [f64; 2]) -> Vec2 {
        self.eval(x).0
    }
}

/// Adapter for closures returning value and Jacobian.
pub struct FnField<F>(pub F);

impl<F: Fn([f64; 2]) -> (Vec2, Mat2) + Sync> VectorField for FnField<F> {
    fn eval(&self, x: [f64; 2]) -> (Vec2, Mat2) {
        (self.0)(x)
    }
}

/// Constant plus linear field a + M x.
#[derive(Clone, Debug)]
pub struct AffineField {
    pub a: Vec2,
    pub m: Mat2,
}

impl VectorField for AffineField {
    fn eval(&self, x: [f64; 2]) -> (Vec2, Mat2) {
        (self.a + self.m * Vec2::new(x[0], x[1]), self.m)
    }
}

/// Polynomial vector field sum_{a+b<=n} c_ab x^a y^b.
#[derive(Clone, Debug)]
pub struct PolyField {
    pub degree: usize,
    /// `(a, b, coefficient)`
    pub terms: Vec<(u32, u32, Vec2)>,
}

impl PolyField {
    pub fn random<R: Rng>(degree: usize, rng: &mut R) -> PolyField {
        let mut terms = Vec::new();
        for a in 0..=degree as u32 {
            for b in 0..=(degree as u32 - a) {
                let c = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                terms.push((a, b, c));
            }
        }
        PolyField { degree, terms }
    }
}

fn powi(x: f64, k: u32) -> f64 {
    x.powi(k as i32)
}

impl PolyField {
    /// Hessians of both components.
    pub fn hessian(&self, x: [f64; 2]) -> [Mat2; 2] {
        let d = |k: u32, e: u32| -> f64 {
            if e > k {
                0.0
            } else {
                (0..e).map(|i| (k - i) as f64).product()
            }
        };
        let mut h = [Mat2::zeros(), Mat2::zeros()];
        for &(a, b, c) in &self.terms {
            for (i, j) in [(0usize, 0usize), (0, 1), (1, 1)] {
                let ea = (i == 0) as u32 + (j == 0) as u32;
                let eb = 2 - ea;
                if ea > a || eb > b {
                    continue;
                }
                let m = d(a, ea) * d(b, eb) * powi(x[0], a - ea) * powi(x[1], b - eb);
                for k in 0..2 {
                    h[k][(i, j)] += c[k] * m;
                    if i != j {
                        h[k][(j, i)] += c[k] * m;
                    }
                }
            }
        }
        h
    }
}

impl VectorField for PolyField {
    fn eval(&self, x: [f64; 2]) -> (Vec2, Mat2) {
        let mut v = Vec2::zeros();
        let mut g = Mat2::zeros();
        for &(a, b, c) in &self.terms {
            let m = powi(x[0], a) * powi(x[1], b);
            v += c * m;
            let mx = if a > 0 { a as f64 * powi(x[0], a - 1) * powi(x[1], b) } else { 0.0 };
            let my = if b > 0 { b as f64 * powi(x[0], a) * powi(x[1], b - 1) } else { 0.0 };
            g += c * nalgebra::RowVector2::new(mx, my);
        }
        (v, g)
    }
}

/// Sum of plane waves c sin(k.x + phase).
#[derive(Clone, Debug)]
pub struct TrigField {
    pub waves: Vec<(Vec2, f64, Vec2)>,
}

impl TrigField {
    pub fn random<R: Rng>(n: usize, max_wavenumber: f64, rng: &mut R) -> TrigField {
        let waves = (0..n)
            .map(|_| {
                let k = Vec2::new(
                    rng.random_range(-max_wavenumber..max_wavenumber),
                    rng.random_range(-max_wavenumber..max_wavenumber),
                );
                let c = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (k, rng.random_range(0.0..std::f64::consts::TAU), c)
            })
            .collect();
        TrigField { waves }
    }
}

impl TrigField {
    pub fn hessian(&self, x: [f64; 2]) -> [Mat2; 2] {
        let mut h = [Mat2::zeros(), Mat2::zeros()];
        for (k, ph, c) in &self.waves {
            let s = (k.x * x[0] + k.y * x[1] + ph).sin();
            for (i, hi) in h.iter_mut().enumerate() {
                *hi -= k * k.transpose() * (c[i] * s);
            }
        }
        h
    }
}

impl VectorField for TrigField {
    fn eval(&self, x: [f64; 2]) -> (Vec2, Mat2) {
        let mut v = Vec2::zeros();
        let mut g = Mat2::zeros();
        for (k, ph, c) in &self.waves {
            let arg = k.x * x[0] + k.y * x[1] + ph;
            v += c * arg.sin();
            g += c * k.transpose() * arg.cos();
        }
        (v, g)
    }
}
