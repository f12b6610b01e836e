//! Analytic ingredients for the experiment drivers: exact solutions and
//! forcings, steady velocity fields, initial conditions, and the ambient
//! calculus that evaluates surface quantities from ambient derivatives.

use crate::error::{Result, SurfError};
use nalgebra::{Matrix3, Vector3};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Sparse trivariate polynomial keyed by monomial exponents (x, y, z powers).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly3 {
    terms: BTreeMap<[u32; 3], f64>,
}

impl Poly3 {
    pub fn zero() -> Self {
        Poly3::default()
    }

    pub fn constant(c: f64) -> Self {
        Poly3::monomial([0, 0, 0], c)
    }

    pub fn monomial(exps: [u32; 3], coeff: f64) -> Self {
        let mut terms = BTreeMap::new();
        if coeff != 0.0 {
            terms.insert(exps, coeff);
        }
        Poly3 { terms }
    }

    /// The coordinate polynomial x (axis 0), y (1), or z (2).
    pub fn var(axis: usize) -> Self {
        let mut e = [0u32; 3];
        e[axis] = 1;
        Poly3::monomial(e, 1.0)
    }

    pub fn add(&self, other: &Poly3) -> Poly3 {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            let v = out.terms.entry(*e).or_insert(0.0);
            *v += c;
            let cancelled = *v == 0.0;
            if cancelled {
                out.terms.remove(e);
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly3 {
        if s == 0.0 {
            return Poly3::zero();
        }
        Poly3 {
            terms: self.terms.iter().map(|(e, c)| (*e, c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly3) -> Poly3 {
        let mut terms: BTreeMap<[u32; 3], f64> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                *terms.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        terms.retain(|_, c| *c != 0.0);
        Poly3 { terms }
    }

    pub fn diff(&self, axis: usize) -> Poly3 {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[axis] == 0 {
                continue;
            }
            let mut d = *e;
            d[axis] -= 1;
            terms.insert(d, c * e[axis] as f64);
        }
        Poly3 { terms }
    }

    pub fn eval(&self, p: &Vector3<f64>) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * p.x.powi(e[0] as i32) * p.y.powi(e[1] as i32) * p.z.powi(e[2] as i32)
            })
            .sum()
    }
}

/// A polynomial bundled with its precomputed gradient and Hessian polynomials.
#[derive(Clone, Debug)]
pub struct PolyJet {
    value: Poly3,
    grad: [Poly3; 3],
    hess: [[Poly3; 3]; 3],
}

impl PolyJet {
    pub fn new(value: Poly3) -> Self {
        let grad = [value.diff(0), value.diff(1), value.diff(2)];
        let hess = std::array::from_fn(|i| std::array::from_fn(|j| grad[i].diff(j)));
        PolyJet { value, grad, hess }
    }

    pub fn value(&self, p: &Vector3<f64>) -> f64 {
        self.value.eval(p)
    }

    /// Value, gradient, and Hessian at an ambient point.
    pub fn eval(&self, p: &Vector3<f64>) -> (f64, Vector3<f64>, Matrix3<f64>) {
        let g = Vector3::new(
            self.grad[0].eval(p),
            self.grad[1].eval(p),
            self.grad[2].eval(p),
        );
        let h = Matrix3::from_fn(|i, j| self.hess[i][j].eval(p));
        (self.value.eval(p), g, h)
    }
}

/// Implicit-surface analytics for the built-in experiment surfaces: outward
/// unit normals, mean curvature (divergence of the unit normal field), and
/// the surface Laplacian of an ambient function evaluated from its ambient
/// jet via  lap_S u = tr(H) - n^T H n - kappa (n . grad u).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceGeom {
    /// Any origin-centered sphere (the radius is read off the point).
    Sphere,
    /// Torus of major radius 1, minor radius 1/3 around the z axis.
    Torus,
    /// Tooth surface x^8 + y^8 + z^8 = x^2 + y^2 + z^2.
    Tooth,
}

impl SurfaceGeom {
    pub fn by_name(name: &str) -> Option<SurfaceGeom> {
        match name {
            "sphere" => Some(SurfaceGeom::Sphere),
            "torus" => Some(SurfaceGeom::Torus),
            "tooth" => Some(SurfaceGeom::Tooth),
            _ => None,
        }
    }

    fn psi_gradient(&self, p: &Vector3<f64>) -> Vector3<f64> {
        match self {
            SurfaceGeom::Sphere => 2.0 * p,
            SurfaceGeom::Torus => {
                let rho = (p.x * p.x + p.y * p.y).sqrt().max(1e-300);
                let w = rho - 1.0;
                Vector3::new(2.0 * w * p.x / rho, 2.0 * w * p.y / rho, 2.0 * p.z)
            }
            SurfaceGeom::Tooth => Vector3::new(
                8.0 * p.x.powi(7) - 2.0 * p.x,
                8.0 * p.y.powi(7) - 2.0 * p.y,
                8.0 * p.z.powi(7) - 2.0 * p.z,
            ),
        }
    }

    fn psi_hessian(&self, p: &Vector3<f64>) -> Matrix3<f64> {
        match self {
            SurfaceGeom::Sphere => Matrix3::identity() * 2.0,
            SurfaceGeom::Torus => {
                let rho = (p.x * p.x + p.y * p.y).sqrt().max(1e-300);
                let rho3 = rho * rho * rho;
                let hxx = 2.0 * (1.0 - 1.0 / rho + p.x * p.x / rho3);
                let hyy = 2.0 * (1.0 - 1.0 / rho + p.y * p.y / rho3);
                let hxy = 2.0 * p.x * p.y / rho3;
                Matrix3::new(hxx, hxy, 0.0, hxy, hyy, 0.0, 0.0, 0.0, 2.0)
            }
            SurfaceGeom::Tooth => Matrix3::from_diagonal(&Vector3::new(
                56.0 * p.x.powi(6) - 2.0,
                56.0 * p.y.powi(6) - 2.0,
                56.0 * p.z.powi(6) - 2.0,
            )),
        }
    }

    /// Outward unit normal at a surface point.
    pub fn normal(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let g = self.psi_gradient(p);
        g / g.norm()
    }

    /// Mean curvature kappa = div(n) at a surface point.
    pub fn mean_curvature(&self, p: &Vector3<f64>) -> f64 {
        let g = self.psi_gradient(p);
        let h = self.psi_hessian(p);
        let norm = g.norm();
        let n = g / norm;
        (h.trace() - (h * n).dot(&n)) / norm
    }

    /// Surface Laplacian of an ambient function from its ambient gradient and
    /// Hessian at a surface point.
    pub fn surface_laplacian(
        &self,
        p: &Vector3<f64>,
        grad_u: &Vector3<f64>,
        hess_u: &Matrix3<f64>,
    ) -> f64 {
        let n = self.normal(p);
        hess_u.trace() - (hess_u * n).dot(&n) - self.mean_curvature(p) * n.dot(grad_u)
    }
}

/// Named ambient test functions for the boundary-value problem drivers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestFunction {
    /// -cos(3 pi x / 4) cos(pi y) sin(3 pi z / 2).
    U1,
    /// -x y.
    U2,
}

impl TestFunction {
    pub fn by_name(name: &str) -> Option<TestFunction> {
        match name {
            "u1" => Some(TestFunction::U1),
            "u2" => Some(TestFunction::U2),
            _ => None,
        }
    }

    /// Value, ambient gradient, and ambient Hessian.
    pub fn jet(&self, p: &Vector3<f64>) -> (f64, Vector3<f64>, Matrix3<f64>) {
        match self {
            TestFunction::U1 => u1_jet(p),
            TestFunction::U2 => (
                -p.x * p.y,
                Vector3::new(-p.y, -p.x, 0.0),
                Matrix3::new(0.0, -1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            ),
        }
    }
}

fn u1_jet(p: &Vector3<f64>) -> (f64, Vector3<f64>, Matrix3<f64>) {
    let (a, b, c) = (0.75 * PI, PI, 1.5 * PI);
    let (sa, ca) = (a * p.x).sin_cos();
    let (sb, cb) = (b * p.y).sin_cos();
    let (sc, cc) = (c * p.z).sin_cos();
    let value = -ca * cb * sc;
    let grad = Vector3::new(a * sa * cb * sc, b * ca * sb * sc, -c * ca * cb * cc);
    let hess = Matrix3::new(
        a * a * ca * cb * sc,
        -a * b * sa * sb * sc,
        a * c * sa * cb * cc,
        -a * b * sa * sb * sc,
        b * b * ca * cb * sc,
        b * c * ca * sb * cc,
        a * c * sa * cb * cc,
        b * c * ca * sb * cc,
        c * c * ca * cb * sc,
    );
    (value, grad, hess)
}

/// Exact solution of the forced diffusion test on the torus:
/// u(t, x) = (1/8) e^{-5t} x (x^4 - 10 x^2 y^2 + 5 y^4)(x^2 + y^2 - 60 z^2),
/// with the forcing f = u_t - lap_S u evaluated analytically.
#[derive(Clone, Debug)]
pub struct TorusHeatSolution {
    jet: PolyJet,
}

impl TorusHeatSolution {
    pub fn new() -> Self {
        let x = Poly3::var(0);
        let y = Poly3::var(1);
        let z = Poly3::var(2);
        let x2 = x.mul(&x);
        let y2 = y.mul(&y);
        let z2 = z.mul(&z);
        let quartic = x2
            .mul(&x2)
            .add(&x2.mul(&y2).scale(-10.0))
            .add(&y2.mul(&y2).scale(5.0));
        let cone = x2.add(&y2).add(&z2.scale(-60.0));
        let space = x.mul(&quartic).mul(&cone).scale(0.125);
        TorusHeatSolution {
            jet: PolyJet::new(space),
        }
    }

    pub fn value(&self, t: f64, p: &Vector3<f64>) -> f64 {
        (-5.0 * t).exp() * self.jet.value(p)
    }

    /// Time-independent forcing profile g(x) with f(t, x) = e^{-5t} g(x).
    pub fn forcing_profile(&self, p: &Vector3<f64>) -> f64 {
        let (v, g, h) = self.jet.eval(p);
        -5.0 * v - SurfaceGeom::Torus.surface_laplacian(p, &g, &h)
    }

    pub fn forcing(&self, t: f64, p: &Vector3<f64>) -> f64 {
        (-5.0 * t).exp() * self.forcing_profile(p)
    }
}

impl Default for TorusHeatSolution {
    fn default() -> Self {
        TorusHeatSolution::new()
    }
}

/// Fully normalized real sectoral spherical harmonic Y_ll (Condon-Shortley
/// sign), evaluated as the constant-along-normal extension: the input point is
/// radially projected onto the unit sphere first.
pub fn sectoral_harmonic(l: u32, p: &Vector3<f64>) -> f64 {
    if l == 0 {
        return (0.25 / PI).sqrt();
    }
    let q = p / p.norm();
    let (mut re, mut im) = (1.0, 0.0);
    let mut ratio = 1.0;
    for k in 1..=l {
        let (nre, nim) = (re * q.x - im * q.y, re * q.y + im * q.x);
        re = nre;
        im = nim;
        let kf = k as f64;
        ratio *= (2.0 * kf - 1.0) / (2.0 * kf);
    }
    let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
    sign * ((2.0 * l as f64 + 1.0) / (2.0 * PI) * ratio).sqrt() * re
}

/// Heat-kernel benchmark solution on the unit sphere: the 30-term series
/// u(t) = (20 / 3 pi) sum_l e^{-l^2/9} e^{-t l (l+1)} Y_ll.
pub fn heat_sphere_exact(p: &Vector3<f64>, t: f64) -> f64 {
    let q = p / p.norm();
    let (mut re, mut im) = (1.0, 0.0);
    let mut ratio = 1.0;
    let mut sum = 0.0;
    for l in 1..=30u32 {
        let lf = l as f64;
        let (nre, nim) = (re * q.x - im * q.y, re * q.y + im * q.x);
        re = nre;
        im = nim;
        ratio *= (2.0 * lf - 1.0) / (2.0 * lf);
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        let coeff = sign * ((2.0 * lf + 1.0) / (2.0 * PI) * ratio).sqrt();
        sum += (-lf * lf / 9.0).exp() * (-t * lf * (lf + 1.0)).exp() * coeff * re;
    }
    20.0 / (3.0 * PI) * sum
}

/// Solid-body rotation on the unit sphere: the rigid field omega x p with
/// omega = (0, -sin alpha, -cos alpha), so alpha = 0 spins around the z axis
/// (along the equator) and alpha = pi/2 carries the flow over the poles. The
/// orbit period is 2 pi for every alpha.
pub fn sphere_velocity(p: &Vector3<f64>, alpha: f64) -> Vector3<f64> {
    let (sin_a, cos_a) = alpha.sin_cos();
    Vector3::new(p.y * cos_a - p.z * sin_a, -p.x * cos_a, p.x * sin_a)
}

/// The same rotation in local (east, north) components at longitude lambda
/// and latitude theta.
pub fn sphere_velocity_spherical(lambda: f64, theta: f64, alpha: f64) -> (f64, f64) {
    let u = theta.sin() * lambda.sin() * alpha.sin() - theta.cos() * alpha.cos();
    let v = lambda.cos() * alpha.sin();
    (u, v)
}

/// Steady (3,2)-knot transport field on the torus (R = 1, r = 1/3): exactly
/// tangent, advancing the major angle at rate 3 and the minor angle at rate
/// 2, so every particle orbit closes after time 2 pi.
pub fn torus_velocity(p: &Vector3<f64>) -> Vector3<f64> {
    let rho = (p.x * p.x + p.y * p.y).sqrt().max(1e-300);
    Vector3::new(
        2.0 * p.z * p.x / rho - 3.0 * p.y,
        2.0 * p.z * p.y / rho + 3.0 * p.x,
        -2.0 * (rho - 1.0),
    )
}

/// Cosine bell on the unit sphere centered at (1, 0, 0): compact support of
/// geodesic radius 1/3, continuously differentiable.
pub fn sphere_cosine_bell(p: &Vector3<f64>) -> f64 {
    let r = p.x.clamp(-1.0, 1.0).acos();
    if r < 1.0 / 3.0 {
        0.5 * (1.0 + (3.0 * PI * r).cos())
    } else {
        0.0
    }
}

/// Gaussian bell on the unit sphere centered at (1, 0, 0).
pub fn sphere_gaussian_bell(p: &Vector3<f64>) -> f64 {
    (-6.0 * (p - Vector3::new(1.0, 0.0, 0.0)).norm_squared()).exp()
}

/// Pair of cosine bells on the torus, 0.1 + 0.9 (q1 + q2), with bells of
/// Euclidean support radius 1/2 centered at (+-4/3, 0, 0).
pub fn torus_cosine_bells(p: &Vector3<f64>) -> f64 {
    let bell = |center: Vector3<f64>| {
        let r = (p - center).norm();
        if r < 0.5 {
            0.5 * (1.0 + (2.0 * PI * r).cos())
        } else {
            0.0
        }
    };
    let c = Vector3::new(4.0 / 3.0, 0.0, 0.0);
    0.1 + 0.9 * (bell(c) + bell(-c))
}

/// Pair of anisotropic Gaussian bells on the torus centered at (+-4/3, 0, 0):
/// exp(-a [(x -+ 4/3)^2 + y^2] - 1.5 a z^2) with a = 20.
pub fn torus_gaussian_bells(p: &Vector3<f64>) -> f64 {
    let a = 20.0;
    let g = |x0: f64| {
        (-a * ((p.x - x0) * (p.x - x0) + p.y * p.y) - 1.5 * a * p.z * p.z).exp()
    };
    g(4.0 / 3.0) + g(-4.0 / 3.0)
}

/// Largest admissible |velocity| scale of the torus field, used by the time
/// step rule; sampled over the surface the exact maximum is sqrt(148)/3.
pub const TORUS_VELOCITY_MAX: f64 = 4.1;

/// Evaluate a scalar field on every node point.
pub fn sample<F: Fn(&Vector3<f64>) -> f64>(points: &[Vector3<f64>], f: F) -> Vec<f64> {
    points.iter().map(f).collect()
}

/// Sample a random point on the torus (R = 1, r = 1/3) from two uniform
/// angles in [0, 2 pi).
pub fn torus_point(phi: f64, theta: f64) -> Vector3<f64> {
    let ring = 1.0 + theta.cos() / 3.0;
    Vector3::new(ring * phi.cos(), ring * phi.sin(), theta.sin() / 3.0)
}

/// Reject a non-finite or absurdly scaled field before it enters a driver.
pub fn validate_field(name: &str, values: &[f64]) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(SurfError::invalid(format!(
                "field '{name}' has a non-finite entry at index {i}"
            )));
        }
    }
    Ok(())
}
