//! Built-in families and small test fixtures.

use serde::Serialize;

use super::flow::{ParametrizedFlow, TrappingEllipsoid};
use crate::error::{Error, Result};

/// Planar family `r' = -r^3 (1/r - lambda)^2`, `theta' = 1`, in Cartesian form
/// `x' = -x (1 - lambda r)^2 - y`, `y' = -y (1 - lambda r)^2 + x`.
///
/// The radial factor `(1 - lambda r)^2` is bounded near the origin, so the
/// field is continuous there with value zero. For `lambda > 0` the circle
/// `r = 1/lambda` is a periodic orbit.
pub fn eqn1() -> ParametrizedFlow {
    ParametrizedFlow::new("eqn1", 2, (0.0, 1.0), |p, lambda, out| {
        let (x, y) = (p[0], p[1]);
        let r = x.hypot(y);
        let g = (1.0 - lambda * r).powi(2);
        out[0] = -x * g - y;
        out[1] = -y * g + x;
    })
    .expect("static fixture")
}

/// Closed-form radial velocity of [`eqn1`].
pub fn eqn1_radial_velocity(r: f64, lambda: f64) -> f64 {
    -r * (1.0 - lambda * r).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LorenzParams {
    pub sigma: f64,
    pub b: f64,
    /// `r` at `lambda = 0`.
    pub r_min: f64,
    /// `r` at `lambda = 1`.
    pub r_max: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self { sigma: 10.0, b: 8.0 / 3.0, r_min: 20.0, r_max: 28.0 }
    }
}

impl LorenzParams {
    pub fn r_of(&self, lambda: f64) -> f64 {
        self.r_min + lambda * (self.r_max - self.r_min)
    }

    pub fn lambda_of(&self, r: f64) -> f64 {
        if self.r_max == self.r_min {
            0.0
        } else {
            (r - self.r_min) / (self.r_max - self.r_min)
        }
    }
}

/// Lorenz family with `sigma`, `b` fixed and `lambda` mapped affinely onto
/// `r in [r_min, r_max]`.
pub fn lorenz(params: LorenzParams) -> Result<ParametrizedFlow> {
    let LorenzParams { sigma, b, r_min, r_max } = params;
    if !(sigma > 0.0 && b > 0.0 && r_min > 0.0 && r_max >= r_min) {
        return Err(Error::InvalidArgument(format!("invalid Lorenz parameters {params:?}")));
    }
    let flow = ParametrizedFlow::new("lorenz", 3, (0.0, 1.0), move |p, lambda, out| {
        let r = r_min + lambda * (r_max - r_min);
        let (x, y, z) = (p[0], p[1], p[2]);
        out[0] = sigma * (y - x);
        out[1] = r * x - y - x * z;
        out[2] = x * y - b * z;
    })?;
    flow.with_trapping_ellipsoid(lorenz_family_ellipsoid(&params)?)
}

pub fn builtin_lorenz() -> ParametrizedFlow {
    lorenz(LorenzParams::default()).expect("default Lorenz parameters are valid")
}

/// Sparrow's Lyapunov function `V = r x^2 + sigma y^2 + sigma (z - 2r)^2`.
pub fn sparrow_v(p: &[f64], r: f64, sigma: f64) -> f64 {
    r * p[0] * p[0] + sigma * p[1] * p[1] + sigma * (p[2] - 2.0 * r).powi(2)
}

/// Time derivative of [`sparrow_v`] along the Lorenz field with the same `r`:
/// `-2 sigma (r x^2 + y^2 + b z^2 - 2 b r z)`.
pub fn sparrow_v_dot(p: &[f64], sigma: f64, b: f64, r: f64) -> f64 {
    let (x, y, z) = (p[0], p[1], p[2]);
    -2.0 * sigma * (r * x * x + y * y + b * z * z - 2.0 * b * r * z)
}

/// Largest norm of a point in `{ m (x^2 + y^2) + b (z - c)^2 <= b c^2 }`.
///
/// Outside the returned radius the quadratic form is positive, which is how
/// the derivative of Sparrow-type functions gets its sign.
fn ellipsoid_max_norm(m: f64, b: f64, c: f64) -> f64 {
    // For fixed z the horizontal extent is (b c^2 - b (z - c)^2) / m; maximize
    // that plus z^2 over z in [0, 2c].
    let g = |z: f64| (b * c * c - b * (z - c).powi(2)) / m + z * z;
    let mut best = g(0.0).max(g(2.0 * c));
    if b > m {
        let z = (b * c / (b - m)).clamp(0.0, 2.0 * c);
        best = best.max(g(z));
    }
    best.max(0.0).sqrt()
}

/// Radius outside of which Sparrow's `V` strictly decreases along the flow.
///
/// `V' < 0` off the ellipsoid `r x^2 + y^2 + b (z - r)^2 <= b r^2`; the radius
/// is the exact maximum norm over that ellipsoid. The value is checked by
/// sampling `V'` on the sphere of radius `1.01 rho`.
pub fn sparrow_trapping_radius(sigma: f64, b: f64, r: f64) -> Result<f64> {
    if !(sigma > 0.0 && b > 0.0 && r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sparrow_trapping_radius needs positive parameters, got sigma={sigma} b={b} r={r}"
        )));
    }
    let rho = ellipsoid_max_norm(r.min(1.0), b, r);
    let sphere = fibonacci_sphere(10_000);
    let worst = sphere
        .iter()
        .map(|u| {
            let p = [u[0] * 1.01 * rho, u[1] * 1.01 * rho, u[2] * 1.01 * rho];
            sparrow_v_dot(&p, sigma, b, r)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    if worst >= 0.0 {
        return Err(Error::ValidationFailed(format!(
            "V' = {worst} >= 0 on the sphere of radius {}",
            1.01 * rho
        )));
    }
    Ok(rho)
}

/// Deterministic, nearly uniform unit vectors on S^2.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let th = golden * i as f64;
            [rho * th.cos(), rho * th.sin(), z]
        })
        .collect()
}

/// A single sublevel set of `V` at the mid-range `r*` that is forward
/// invariant for every `r` in `[r_min, r_max]`.
///
/// Along the field with parameter `r0`, `V_{r*}' = 2 sigma ((r0 - r*) x y
/// - r* x^2 - y^2 - b z^2 + 2 b r* z)`. The `(x, y)` block stays negative
/// definite while `r* > (r0 - r*)^2 / 4`, so the set where the derivative is
/// nonnegative is bounded; its radius bound feeds the level.
fn lorenz_family_ellipsoid(params: &LorenzParams) -> Result<TrappingEllipsoid> {
    let LorenzParams { sigma, b, r_min, r_max } = *params;
    let r_star = 0.5 * (r_min + r_max);
    let kappa = 0.5 * (r_max - r_min);
    if r_star <= kappa * kappa / 4.0 {
        return Err(Error::InvalidArgument(format!(
            "Lorenz range [{r_min}, {r_max}] too wide for a single Sparrow level set"
        )));
    }
    // Smallest eigenvalue of [[r*, -k/2], [-k/2, 1]] bounds the xy block.
    let tr = r_star + 1.0;
    let det = r_star - kappa * kappa / 4.0;
    let mu = 0.5 * (tr - (tr * tr - 4.0 * det).sqrt());
    let rho = ellipsoid_max_norm(mu.min(r_star), b, r_star);

    // Max of V_{r*} over the ball of radius rho: put the horizontal part in the
    // heavier coefficient and maximize the resulting quadratic in z.
    let heavy = r_star.max(sigma);
    let g = |z: f64| heavy * (rho * rho - z * z) + sigma * (z - 2.0 * r_star).powi(2);
    let mut level = g(-rho).max(g(rho));
    if heavy > sigma {
        let z = (-sigma * 2.0 * r_star / (heavy - sigma)).clamp(-rho, rho);
        level = level.max(g(z));
    }
    let level = 1.05 * level;
    Ok(TrappingEllipsoid {
        center: vec![0.0, 0.0, 2.0 * r_star],
        semi_axes: vec![(level / r_star).sqrt(), (level / sigma).sqrt(), (level / sigma).sqrt()],
    })
}

/// Linear saddle `x' = x, y' = -y` (parameter ignored).
pub fn saddle() -> ParametrizedFlow {
    ParametrizedFlow::new("saddle", 2, (0.0, 1.0), |p, _, out| {
        out[0] = p[0];
        out[1] = -p[1];
    })
    .expect("static fixture")
}

/// Linear sink `x' = -x` in `dim` dimensions (parameter ignored).
pub fn sink(dim: usize) -> Result<ParametrizedFlow> {
    ParametrizedFlow::new("sink", dim, (0.0, 1.0), |p, _, out| {
        for (o, v) in out.iter_mut().zip(p) {
            *o = -v;
        }
    })
}

/// The zero vector field.
pub fn zero_field(dim: usize) -> Result<ParametrizedFlow> {
    ParametrizedFlow::new("zero", dim, (0.0, 1.0), |_, _, out| out.fill(0.0))
}

/// Double-well Hamiltonian `H = y^2/2 - x^2/2 + x^4/4` with damping toward
/// the separatrix: `x' = H_y - H H_x`, `y' = -H_x - H H_y`. The figure-eight
/// level set `H = 0` attracts from both sides; the well centers `(+-1, 0)`
/// repel.
pub fn figure_eight() -> ParametrizedFlow {
    ParametrizedFlow::new("figure_eight", 2, (0.0, 1.0), |p, _, out| {
        let (x, y) = (p[0], p[1]);
        let hx = x * x * x - x;
        let hy = y;
        let h = 0.5 * y * y - 0.5 * x * x + 0.25 * x.powi(4);
        out[0] = hy - h * hx;
        out[1] = -hx - h * hy;
    })
    .expect("static fixture")
}

/// Looks up a built-in family by name.
pub fn builtin_by_name(name: &str) -> Option<ParametrizedFlow> {
    match name {
        "eqn1" => Some(eqn1()),
        "lorenz" => Some(builtin_lorenz()),
        "saddle" => Some(saddle()),
        "sink2" => sink(2).ok(),
        "sink3" => sink(3).ok(),
        "figure_eight" => Some(figure_eight()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eqn1_values() {
        let f = eqn1();
        // r = 1, lambda = 0: radial speed -1, angular speed 1.
        assert_eq!(f.velocity(&[1.0, 0.0], 0.0), vec![-1.0, 1.0]);
        assert_eq!(f.velocity(&[0.0, 0.0], 0.7), vec![0.0, 0.0]);
        let v = f.velocity(&[2.0, 0.0], 0.5);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 2.0);
    }

    #[test]
    fn eqn1_radial_component_matches_polar_form() {
        let f = eqn1();
        for &(x, y, lam) in &[(0.3, -1.2, 0.25), (3.0, 4.0, 0.5), (-0.01, 0.02, 1.0)] {
            let v = f.velocity(&[x, y], lam);
            let r = f64::hypot(x, y);
            let radial = (x * v[0] + y * v[1]) / r;
            assert!((radial - eqn1_radial_velocity(r, lam)).abs() < 1e-12);
        }
    }

    #[test]
    fn lorenz_values() {
        let f = builtin_lorenz();
        assert_eq!(f.velocity(&[0.0, 0.0, 0.0], 0.3), vec![0.0, 0.0, 0.0]);
        let v = f.velocity(&[1.0, 1.0, 1.0], 1.0);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 26.0);
        assert!((v[2] - (1.0 - 8.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn sparrow_v_at_unit_x() {
        // r*1 + sigma*0 + sigma*(0 - 2r)^2 with r = 2, sigma = 10.
        assert_eq!(sparrow_v(&[1.0, 0.0, 0.0], 2.0, 10.0), 162.0);
        assert_eq!(sparrow_v(&[1.0, 0.0, 0.0], 2.0, 10.0) - 10.0 * 16.0, 2.0);
    }

    #[test]
    fn sparrow_radius_closed_form() {
        // b > 1 = min(r, 1): stationary z = b r / (b - 1) = 1.6 r and
        // rho^2 = r^2 (b - b * 0.36 + 2.56).
        let rho = sparrow_trapping_radius(10.0, 8.0 / 3.0, 28.0).unwrap();
        let expect = 28.0 * (8.0 / 3.0 * 0.64 + 2.56f64).sqrt();
        assert!((rho - expect).abs() < 1e-9, "{rho} vs {expect}");
    }

    #[test]
    fn sparrow_radius_rejects_bad_input() {
        assert!(matches!(sparrow_trapping_radius(0.0, 1.0, 1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn family_ellipsoid_is_forward_invariant_on_its_boundary() {
        let p = LorenzParams::default();
        let e = lorenz_family_ellipsoid(&p).unwrap();
        let f = lorenz(p).unwrap();
        let r_star = 0.5 * (p.r_min + p.r_max);
        for lam in [0.0, 0.5, 1.0] {
            for u in fibonacci_sphere(4000) {
                let q: Vec<f64> = (0..3).map(|i| e.center[i] + e.semi_axes[i] * u[i]).collect();
                let v = f.velocity(&q, lam);
                // Gradient of V_{r*} is normal to the boundary.
                let grad = [
                    2.0 * r_star * q[0],
                    2.0 * p.sigma * q[1],
                    2.0 * p.sigma * (q[2] - 2.0 * r_star),
                ];
                let d: f64 = grad.iter().zip(&v).map(|(g, w)| g * w).sum();
                assert!(d < 0.0, "outward flow at {q:?} for lambda {lam}");
            }
        }
    }
}
