use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Right-hand side `f(x, lambda) -> velocity`, written into the output slice.
pub type FieldFn = dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync;

/// Axis-aligned ellipsoid `sum_i ((x_i - c_i) / s_i)^2 <= 1` known to be
/// forward invariant for every parameter of a family.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TrappingEllipsoid {
    pub center: Vec<f64>,
    pub semi_axes: Vec<f64>,
}

impl TrappingEllipsoid {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.level(x) <= 1.0
    }

    pub fn level(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .zip(&self.semi_axes)
            .map(|((xi, ci), si)| ((xi - ci) / si).powi(2))
            .sum()
    }

    /// Bounding box as `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.center.iter().zip(&self.semi_axes).map(|(c, s)| c - s).collect();
        let hi = self.center.iter().zip(&self.semi_axes).map(|(c, s)| c + s).collect();
        (lo, hi)
    }
}

/// A smooth family of vector fields `x' = f(x, lambda)` on R^n, lambda in a
/// closed subinterval of [0, 1].
#[derive(Clone)]
pub struct ParametrizedFlow {
    name: String,
    dim: usize,
    field: Arc<FieldFn>,
    param_range: (f64, f64),
    lipschitz_hint: Option<f64>,
    trapping: Option<TrappingEllipsoid>,
    reversed: bool,
}

impl fmt::Debug for ParametrizedFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametrizedFlow")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("param_range", &self.param_range)
            .field("lipschitz_hint", &self.lipschitz_hint)
            .field("reversed", &self.reversed)
            .finish()
    }
}

impl ParametrizedFlow {
    pub fn new<F>(name: impl Into<String>, dim: usize, param_range: (f64, f64), field: F) -> Result<Self>
    where
        F: Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::InvalidArgument("flow dimension must be at least 1".into()));
        }
        let (a, b) = param_range;
        if !(a.is_finite() && b.is_finite() && 0.0 <= a && a <= b && b <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "parameter range [{a}, {b}] is not a nonempty subinterval of [0, 1]"
            )));
        }
        Ok(Self {
            name: name.into(),
            dim,
            field: Arc::new(field),
            param_range,
            lipschitz_hint: None,
            trapping: None,
            reversed: false,
        })
    }

    pub fn with_lipschitz_hint(mut self, lip: f64) -> Result<Self> {
        if !(lip.is_finite() && lip >= 0.0) {
            return Err(Error::InvalidArgument(format!("lipschitz hint {lip} must be finite and >= 0")));
        }
        self.lipschitz_hint = Some(lip);
        Ok(self)
    }

    pub fn with_trapping_ellipsoid(mut self, e: TrappingEllipsoid) -> Result<Self> {
        if e.center.len() != self.dim || e.semi_axes.len() != self.dim {
            return Err(Error::InvalidArgument("trapping ellipsoid dimension mismatch".into()));
        }
        if e.semi_axes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidArgument("trapping ellipsoid semi-axes must be positive".into()));
        }
        self.trapping = Some(e);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn param_range(&self) -> (f64, f64) {
        self.param_range
    }

    pub fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz_hint
    }

    /// Family-wide forward-invariant ellipsoid, if one is known.
    pub fn trapping_ellipsoid(&self) -> Option<&TrappingEllipsoid> {
        self.trapping.as_ref()
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    pub fn contains_param(&self, lambda: f64) -> bool {
        lambda >= self.param_range.0 && lambda <= self.param_range.1
    }

    /// The same family with time reversed (`x' = -f(x, lambda)`).
    ///
    /// A reversed flow carries no trapping ellipsoid: forward invariance does
    /// not survive time reversal.
    pub fn reversed(&self) -> Self {
        Self {
            name: self.name.clone(),
            dim: self.dim,
            field: Arc::clone(&self.field),
            param_range: self.param_range,
            lipschitz_hint: self.lipschitz_hint,
            trapping: None,
            reversed: !self.reversed,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], lambda: f64, out: &mut [f64]) {
        (self.field)(x, lambda, out);
        if self.reversed {
            for v in out.iter_mut() {
                *v = -*v;
            }
        }
    }

    pub fn velocity(&self, x: &[f64], lambda: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval(x, lambda, &mut out);
        out
    }
}
