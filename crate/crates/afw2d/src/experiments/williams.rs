//! Corner singularities of plane elasticity in a wedge, from complex potentials
//! phi = A z^l, psi = B z^l:
//!
//! ```text
//! 2 mu (u_x + i u_y) = kappa phi - z conj(phi') - conj(psi)
//! ```

use std::f64::consts::PI;

use nalgebra::{Complex, Matrix4, Vector4};

use crate::assembly::Material;
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};

type C = Complex<f64>;

/// Boundary conditions on the faces theta = 0 and theta = angle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CornerBc {
    ClampedClamped,
    FreeFree,
    ClampedFree,
}

impl std::str::FromStr for CornerBc {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clamped-clamped" => Ok(CornerBc::ClampedClamped),
            "free-free" => Ok(CornerBc::FreeFree),
            "clamped-free" => Ok(CornerBc::ClampedFree),
            _ => Err(Error::InvalidArgument(format!("unknown corner condition '{s}'"))),
        }
    }
}

/// Kolosov constant of a two-dimensional isotropic material.
pub fn kolosov(m: &Material) -> f64 {
    (m.lambda + 3.0 * m.mu) / (m.lambda + m.mu)
}

/// Shipped corner configuration: plane stress with E = 1, nu = 0.3, both faces
/// of the 270 degree reentrant corner clamped.
#[derive(Clone, Copy, Debug)]
pub struct CornerConfig {
    pub material: Material,
    pub angle: f64,
    pub bc: CornerBc,
}

impl Default for CornerConfig {
    fn default() -> Self {
        CornerConfig { material: plane_stress(1.0, 0.3), angle: 1.5 * PI, bc: CornerBc::ClampedClamped }
    }
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct CornerFile {
    corner: CornerSection,
    material: MaterialSection,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct CornerSection {
    angle_degrees: f64,
    faces: String,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialSection {
    model: String,
    youngs_modulus: Option<f64>,
    poisson_ratio: Option<f64>,
    mu: Option<f64>,
    lambda: Option<f64>,
}

impl CornerConfig {
    /// Reads a `[corner]` / `[material]` TOML document.
    pub fn from_toml(text: &str) -> Result<CornerConfig> {
        let f: CornerFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let missing = |k: &str| Error::Config(format!("material model '{}' needs '{k}'", f.material.model));
        let m = &f.material;
        let material = match m.model.as_str() {
            "plane_stress" => {
                let e = m.youngs_modulus.ok_or_else(|| missing("youngs_modulus"))?;
                let nu = m.poisson_ratio.ok_or_else(|| missing("poisson_ratio"))?;
                if !(e > 0.0 && nu > -1.0 && nu < 0.5) {
                    return Err(Error::InvalidArgument(format!("E = {e}, nu = {nu} not admissible")));
                }
                plane_stress(e, nu)
            }
            "lame" => Material::new(m.mu.ok_or_else(|| missing("mu"))?, m.lambda.ok_or_else(|| missing("lambda"))?)?,
            other => return Err(Error::Config(format!("unknown material model '{other}'"))),
        };
        let cfg = CornerConfig { material, angle: f.corner.angle_degrees.to_radians(), bc: f.corner.faces.parse()? };
        if !(cfg.angle > 0.0 && cfg.angle < 2.0 * PI) {
            return Err(Error::InvalidArgument(format!("corner angle {} degrees outside (0, 360)", f.corner.angle_degrees)));
        }
        Ok(cfg)
    }
}

/// Two-dimensional Lame constants of a thin plate in plane stress.
pub fn plane_stress(e: f64, nu: f64) -> Material {
    Material { mu: e / (2.0 * (1.0 + nu)), lambda: e * nu / (1.0 - nu * nu) }
}

/// Face data (displacement or traction, as a complex number) produced by
/// unit potential coefficients, for exponent `l` on the ray `theta`.
fn face_response(kappa: f64, l: f64, theta: f64, clamped: bool, a: C, b: C) -> C {
    let e = |x: f64| C::from_polar(1.0, x);
    if clamped {
        // r^-l (kappa phi - z conj(phi') - conj(psi)) with r = 1
        a * kappa * e(l * theta) - a.conj() * l * e(-(l - 2.0) * theta) - b.conj() * e(-l * theta)
    } else {
        // r^(1-l) (sigma_tt + i sigma_rt) = phi' + conj(phi') + e^{2it}(conj(z) phi'' + psi')
        let phi1 = a * l * e((l - 1.0) * theta);
        let phi2 = a * l * (l - 1.0) * e((l - 2.0) * theta);
        let psi1 = b * l * e((l - 1.0) * theta);
        phi1 + phi1.conj() + e(2.0 * theta) * (e(-theta) * phi2 + psi1)
    }
}

/// Real 4x4 matrix mapping (Re A, Im A, Re B, Im B) to the face conditions.
pub fn characteristic_matrix(cfg: &CornerConfig, l: f64) -> Matrix4<f64> {
    let kappa = kolosov(&cfg.material);
    let (c0, c1) = match cfg.bc {
        CornerBc::ClampedClamped => (true, true),
        CornerBc::FreeFree => (false, false),
        CornerBc::ClampedFree => (true, false),
    };
    let unit = [(C::new(1.0, 0.0), C::new(0.0, 0.0)), (C::new(0.0, 1.0), C::new(0.0, 0.0)), (C::new(0.0, 0.0), C::new(1.0, 0.0)), (C::new(0.0, 0.0), C::new(0.0, 1.0))];
    let mut m = Matrix4::zeros();
    for (j, (a, b)) in unit.iter().enumerate() {
        let r0 = face_response(kappa, l, 0.0, c0, *a, *b);
        let r1 = face_response(kappa, l, cfg.angle, c1, *a, *b);
        m[(0, j)] = r0.re;
        m[(1, j)] = r0.im;
        m[(2, j)] = r1.re;
        m[(3, j)] = r1.im;
    }
    m
}

pub fn characteristic_determinant(cfg: &CornerConfig, l: f64) -> f64 {
    characteristic_matrix(cfg, l).determinant()
}

/// Smallest exponent in (0, l_max) at which the determinant changes sign,
/// refined by bisection.
pub fn corner_exponent(cfg: &CornerConfig) -> Result<f64> {
    if !(cfg.angle > 0.0 && cfg.angle < 2.0 * PI) {
        return Err(Error::InvalidArgument(format!("corner angle {} outside (0, 2 pi)", cfg.angle)));
    }
    let f = |l: f64| characteristic_determinant(cfg, l);
    let (lo, step, hi) = (1e-3, 1e-3, 4.0);
    let mut prev: Option<(f64, f64)> = None;
    let mut a = lo;
    let mut fa = f(a);
    while a < hi {
        let b = a + step;
        let fb = f(b);
        if fb == 0.0 {
            return Ok(b);
        }
        if fa.signum() != fb.signum() {
            return Ok(bisect(&f, a, b, fa));
        }
        // even multiplicity roots touch zero without a sign change
        if let Some((_, fp)) = prev {
            if fa.abs() < fp.abs() && fa.abs() <= fb.abs() {
                let (x, fx) = minimize_abs(&f, a - step, a + step);
                if fx.abs() < 1e-9 * fp.abs().max(fb.abs()) {
                    return Ok(x);
                }
            }
        }
        prev = Some((a, fa));
        a = b;
        fa = fb;
    }
    Err(Error::NoRoot(format!("no corner exponent below {hi}")))
}

fn bisect(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64) -> f64 {
    let (mut x0, mut x1, mut f0) = (a, b, fa);
    for _ in 0..200 {
        let mid = 0.5 * (x0 + x1);
        let fm = f(mid);
        if fm == 0.0 || x1 - x0 < 1e-15 {
            return mid;
        }
        if fm.signum() == f0.signum() {
            x0 = mid;
            f0 = fm;
        } else {
            x1 = mid;
        }
    }
    0.5 * (x0 + x1)
}

/// Golden section search for the minimum of |f| on [a, b].
fn minimize_abs(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c).abs(), f(d).abs());
    while b - a > 1e-14 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c).abs();
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d).abs();
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// The leading singular displacement field around a corner at the origin
/// whose faces are the rays theta = 0 and theta = angle.
#[derive(Clone, Debug)]
pub struct CornerField {
    pub exponent: f64,
    pub material: Material,
    pub angle: f64,
    a: C,
    b: C,
}

impl CornerField {
    pub fn new(cfg: &CornerConfig) -> Result<CornerField> {
        let l = corner_exponent(cfg)?;
        let m = characteristic_matrix(cfg, l);
        let svd = m.svd(false, true);
        let vt = svd.v_t.ok_or_else(|| Error::NoRoot("null vector".into()))?;
        let k = svd.singular_values.imin();
        let mut v: Vector4<f64> = vt.row(k).transpose();
        v /= v.amax();
        // fix the sign so the field is reproducible
        if v[v.iamax()] < 0.0 {
            v = -v;
        }
        Ok(CornerField {
            exponent: l,
            material: cfg.material,
            angle: cfg.angle,
            a: C::new(v[0], v[1]),
            b: C::new(v[2], v[3]),
        })
    }

    fn polar(&self, x: [f64; 2]) -> (f64, f64) {
        let mut th = x[1].atan2(x[0]);
        // branch cut through the exterior of the wedge
        let gap = 0.5 * (2.0 * PI - self.angle);
        if th < -gap {
            th += 2.0 * PI;
        }
        ((x[0] * x[0] + x[1] * x[1]).sqrt(), th)
    }

    /// z^p on the wedge branch.
    fn pow(&self, r: f64, th: f64, p: f64) -> C {
        C::from_polar(r.powf(p), p * th)
    }

    /// Displacement, gradient (`g[(i, j)] = du_i/dx_j`) and Hessians.
    pub fn eval(&self, x: [f64; 2]) -> (Vec2, Mat2, [Mat2; 2]) {
        let (r, th) = self.polar(x);
        let l = self.exponent;
        let mu2 = 2.0 * self.material.mu;
        let kappa = kolosov(&self.material);
        let z = C::new(x[0], x[1]);
        let phi = self.a * self.pow(r, th, l);
        let phi1 = self.a * l * self.pow(r, th, l - 1.0);
        let phi2 = self.a * l * (l - 1.0) * self.pow(r, th, l - 2.0);
        let phi3 = self.a * l * (l - 1.0) * (l - 2.0) * self.pow(r, th, l - 3.0);
        let psi = self.b * self.pow(r, th, l);
        let psi1 = self.b * l * self.pow(r, th, l - 1.0);
        let psi2 = self.b * l * (l - 1.0) * self.pow(r, th, l - 2.0);
        let u = (phi * kappa - z * phi1.conj() - psi.conj()) / mu2;
        let uz = (phi1 * kappa - phi1.conj()) / mu2;
        let uzb = (-z * phi2.conj() - psi1.conj()) / mu2;
        let uzz = phi2 * kappa / mu2;
        let uzzb = -phi2.conj() / mu2;
        let uzbzb = (-z * phi3.conj() - psi2.conj()) / mu2;
        let i = C::new(0.0, 1.0);
        let ux = uz + uzb;
        let uy = i * (uz - uzb);
        let uxx = uzz + uzzb * 2.0 + uzbzb;
        let uyy = -(uzz - uzzb * 2.0 + uzbzb);
        let uxy = i * (uzz - uzbzb);
        let grad = Mat2::new(ux.re, uy.re, ux.im, uy.im);
        let hess = [Mat2::new(uxx.re, uxy.re, uxy.re, uyy.re), Mat2::new(uxx.im, uxy.im, uxy.im, uyy.im)];
        (Vec2::new(u.re, u.im), grad, hess)
    }
}
