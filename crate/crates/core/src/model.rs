//! Two-time-scale system models in original, shifted, reduced, and
//! boundary-layer coordinates.
//!
//! A [`SystemModel`] couples a slow state `x` with a fast state `z`:
//!
//! ```text
//!   x' = f(x, z)
//!   eps z' = g(x, z)
//! ```
//!
//! together with the quasi-steady-state map `h` (the root of `g(x, .) = 0`),
//! its Jacobian `dh`, and a class-K comparison bound on `|h|`.

use crate::linalg::{matvec, norm, sub};
use crate::real::{approx_f64, Real};
use thiserror::Error;

pub type VectorField2<T> = Box<dyn Fn(&[T], &[T]) -> Vec<T> + Send + Sync>;
pub type VectorField1<T> = Box<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
pub type JacobianField<T> = Box<dyn Fn(&[T]) -> Vec<Vec<T>> + Send + Sync>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("origin is not an equilibrium: |{field}(0,0)| = {norm}")]
    NotEquilibrium { field: &'static str, norm: f64 },
}

/// Named class-K comparison function for `|h(x)| <= zeta(|x|)`.
///
/// Stored as a descriptor rather than an opaque callable so the bound itself
/// can be tested.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum ComparisonBound<T> {
    /// `zeta(r) = r`.
    Identity,
    /// `zeta(r) = gain * r`.
    Linear { gain: T },
}

impl<T: Real> ComparisonBound<T> {
    pub fn eval(&self, r: T) -> T {
        match self {
            ComparisonBound::Identity => r,
            ComparisonBound::Linear { gain } => *gain * r,
        }
    }
}

/// A singularly perturbed system with slow dimension `N` and fast `M`.
pub struct SystemModel<T> {
    slow_dim: usize,
    fast_dim: usize,
    f: VectorField2<T>,
    g: VectorField2<T>,
    h: VectorField1<T>,
    dh: JacobianField<T>,
    comparison_bound: ComparisonBound<T>,
    /// Optional evaluator of `g(x, y + h(x))` written directly in the
    /// deviation variable. Without it, composing through `z = h(x) + y`
    /// cancels catastrophically when `|y| <<  |h(x)|`.
    bl_direct: Option<VectorField2<T>>,
}

impl<T: Real> SystemModel<T> {
    /// Builds a model and spot-checks the origin equilibrium.
    pub fn new(
        slow_dim: usize,
        fast_dim: usize,
        f: VectorField2<T>,
        g: VectorField2<T>,
        h: VectorField1<T>,
        dh: JacobianField<T>,
        comparison_bound: ComparisonBound<T>,
    ) -> Result<Self, ModelError> {
        if slow_dim == 0 {
            return Err(ModelError::InvalidParameter {
                name: "slow_dim",
                value: 0.0,
            });
        }
        if fast_dim == 0 {
            return Err(ModelError::InvalidParameter {
                name: "fast_dim",
                value: 0.0,
            });
        }
        let model = Self {
            slow_dim,
            fast_dim,
            f,
            g,
            h,
            dh,
            comparison_bound,
            bl_direct: None,
        };
        let x0 = vec![T::zero(); slow_dim];
        let z0 = vec![T::zero(); fast_dim];
        let fn0 = norm(&(model.f)(&x0, &z0));
        if fn0 > T::epsilon() {
            return Err(ModelError::NotEquilibrium {
                field: "f",
                norm: approx_f64(fn0),
            });
        }
        let gn0 = norm(&(model.g)(&x0, &z0));
        if gn0 > T::epsilon() {
            return Err(ModelError::NotEquilibrium {
                field: "g",
                norm: approx_f64(gn0),
            });
        }
        Ok(model)
    }

    /// Attaches a boundary-layer evaluator written in the deviation
    /// variable (must equal `g(x, y + h(x))` analytically).
    pub fn with_boundary_layer(mut self, bl: VectorField2<T>) -> Self {
        self.bl_direct = Some(bl);
        self
    }

    pub fn slow_dim(&self) -> usize {
        self.slow_dim
    }

    pub fn fast_dim(&self) -> usize {
        self.fast_dim
    }

    pub fn comparison_bound(&self) -> ComparisonBound<T> {
        self.comparison_bound
    }

    fn check_slow(&self, x: &[T]) -> Result<(), ModelError> {
        if x.len() != self.slow_dim {
            return Err(ModelError::Shape {
                what: "slow state",
                expected: self.slow_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn check_fast(&self, z: &[T], what: &'static str) -> Result<(), ModelError> {
        if z.len() != self.fast_dim {
            return Err(ModelError::Shape {
                what,
                expected: self.fast_dim,
                got: z.len(),
            });
        }
        Ok(())
    }

    /// Full stiff field `(f(x,z), g(x,z)/eps)`.
    pub fn full_field(&self, eps: T, x: &[T], z: &[T]) -> Result<(Vec<T>, Vec<T>), ModelError> {
        if !(eps > T::zero()) || !eps.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "eps",
                value: approx_f64(eps),
            });
        }
        self.check_slow(x)?;
        self.check_fast(z, "fast state")?;
        let slow = (self.f)(x, z);
        let fast = (self.g)(x, z).into_iter().map(|v| v / eps).collect();
        Ok((slow, fast))
    }

    /// Reduced field `f(x, h(x))`.
    pub fn reduced_field(&self, x: &[T]) -> Result<Vec<T>, ModelError> {
        self.check_slow(x)?;
        let h = (self.h)(x);
        Ok((self.f)(x, &h))
    }

    /// Boundary-layer field `g(x, y + h(x))`, with `x` frozen.
    pub fn boundary_layer_field(&self, x: &[T], y: &[T]) -> Result<Vec<T>, ModelError> {
        self.check_slow(x)?;
        self.check_fast(y, "fast deviation")?;
        Ok(self.eval_bl(x, y))
    }

    /// Shifted field in `(x, y)` coordinates with `y = z - h(x)`:
    /// `(f(x, y+h(x)), g(x, y+h(x))/eps - dh(x) f(x, y+h(x)))`.
    pub fn shifted_field(&self, eps: T, x: &[T], y: &[T]) -> Result<(Vec<T>, Vec<T>), ModelError> {
        if !(eps > T::zero()) || !eps.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "eps",
                value: approx_f64(eps),
            });
        }
        self.check_slow(x)?;
        self.check_fast(y, "fast deviation")?;
        let z: Vec<T> = (self.h)(x).iter().zip(y).map(|(&h, &v)| h + v).collect();
        let slow = (self.f)(x, &z);
        let drift = matvec(&(self.dh)(x), &slow);
        let fast = self
            .eval_bl(x, y)
            .into_iter()
            .zip(drift)
            .map(|(g, d)| g / eps - d)
            .collect();
        Ok((slow, fast))
    }

    /// Quasi-steady-state map `h(x)`.
    pub fn quasi_steady_state(&self, x: &[T]) -> Result<Vec<T>, ModelError> {
        self.check_slow(x)?;
        Ok((self.h)(x))
    }

    /// Jacobian `dh(x)` as an `M x N` row-major matrix.
    pub fn quasi_steady_state_jacobian(&self, x: &[T]) -> Result<Vec<Vec<T>>, ModelError> {
        self.check_slow(x)?;
        Ok((self.dh)(x))
    }

    /// Fast residual `z - h(x)`.
    pub fn fast_deviation(&self, x: &[T], z: &[T]) -> Result<Vec<T>, ModelError> {
        self.check_slow(x)?;
        self.check_fast(z, "fast state")?;
        Ok(sub(z, &(self.h)(x)))
    }

    /// Unchecked evaluators for the integrator hot loop. Shapes must have
    /// been validated beforehand.
    #[inline]
    pub(crate) fn eval_f(&self, x: &[T], z: &[T]) -> Vec<T> {
        (self.f)(x, z)
    }

    #[inline]
    pub(crate) fn eval_g(&self, x: &[T], z: &[T]) -> Vec<T> {
        (self.g)(x, z)
    }

    #[inline]
    pub(crate) fn eval_h(&self, x: &[T]) -> Vec<T> {
        (self.h)(x)
    }

    #[inline]
    pub(crate) fn eval_bl(&self, x: &[T], y: &[T]) -> Vec<T> {
        match &self.bl_direct {
            Some(bl) => bl(x, y),
            None => {
                let z: Vec<T> = (self.h)(x).iter().zip(y).map(|(&h, &v)| h + v).collect();
                (self.g)(x, &z)
            }
        }
    }

    #[inline]
    pub(crate) fn eval_dh(&self, x: &[T]) -> Vec<Vec<T>> {
        (self.dh)(x)
    }
}
