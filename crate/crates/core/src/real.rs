//! Scalar abstraction and the power-law primitives shared by every module.
//!
//! All core math is generic over [`Real`], a floating-point scalar backed by
//! `num-traits`. The crate root exposes `f64` aliases for the common types;
//! `f32` works too, though the shipped tolerances assume double precision.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the crate: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + core::fmt::Debug
    + core::fmt::Display
    + core::iter::Sum
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + core::fmt::Debug
        + core::fmt::Display
        + core::iter::Sum
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
#[inline]
pub fn real<T: Real>(v: f64) -> T {
    T::from_f64(v).unwrap_or_else(|| panic!("constant {v} not representable in target scalar"))
}

/// Lossy view of a scalar as `f64`, for error messages and reports.
#[inline]
pub fn approx_f64<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// `x^p` for nonnegative base, evaluated as `exp(p ln x)` with an explicit
/// shortcut `0^p := 0` for `p > 0` (and `0^0 := 1`). Keeps equilibria free of
/// NaN without branching on the caller side. A NaN base propagates (trial
/// integration steps overflow transiently and rely on this).
#[inline]
pub fn pow_nonneg<T: Real>(x: T, p: T) -> T {
    if p.is_zero() {
        return T::one();
    }
    if x > T::zero() {
        return (p * x.ln()).exp();
    }
    if x.is_zero() {
        return if p > T::zero() {
            T::zero()
        } else {
            T::infinity()
        };
    }
    T::nan()
}

/// Signed power `|x|^nu * sign(x)`, the odd extension of the power map.
#[inline]
pub fn signed_power_unchecked<T: Real>(x: T, nu: T) -> T {
    if x.is_zero() {
        return T::zero();
    }
    pow_nonneg(x.abs(), nu) * x.signum()
}

/// Norm threshold below which `v / |v|^xi` is defined as zero.
///
/// The field is continuous there, so the guard only avoids 0/0 and spurious
/// overflow of `|v|^{-xi}` for denormal norms.
#[inline]
pub fn direction_guard<T: Real>() -> T {
    T::from_f64(1e-300).unwrap_or_else(T::zero)
}

/// Dense matrix spectrum queries, implemented per concrete scalar so the rest
/// of the crate can stay generic. Backed by nalgebra: a closed form for 2x2
/// matrices and the real-Schur path for larger ones.
pub trait Spectrum: Real {
    /// Eigenvalues of a (possibly asymmetric) square matrix, sorted
    /// ascending. `None` when any eigenvalue has a significant imaginary
    /// part.
    fn real_eigenvalues(rows: &[Vec<Self>]) -> Option<Vec<Self>>;
    /// Singular values, sorted descending.
    fn singular_values(rows: &[Vec<Self>]) -> Vec<Self>;
}

macro_rules! impl_spectrum {
    ($t:ty) => {
        impl Spectrum for $t {
            fn real_eigenvalues(rows: &[Vec<Self>]) -> Option<Vec<Self>> {
                let n = rows.len();
                if n == 2 {
                    // Characteristic polynomial of the 2x2 case.
                    let (a, b, c, d) = (rows[0][0], rows[0][1], rows[1][0], rows[1][1]);
                    let half_tr = (a + d) / 2.0;
                    let det = a * d - b * c;
                    let disc = half_tr * half_tr - det;
                    if disc < 0.0 {
                        return None;
                    }
                    let s = disc.sqrt();
                    return Some(vec![half_tr - s, half_tr + s]);
                }
                let flat: Vec<Self> = rows.iter().flat_map(|r| r.iter().copied()).collect();
                let m = nalgebra::DMatrix::from_row_slice(n, n, &flat);
                let scale: Self = m.amax().max(Self::MIN_POSITIVE);
                let eig = m.complex_eigenvalues();
                let mut out = Vec::with_capacity(n);
                for ev in eig.iter() {
                    if ev.im.abs() > 1e-9 * scale {
                        return None;
                    }
                    out.push(ev.re);
                }
                out.sort_by(|x, y| x.partial_cmp(y).unwrap());
                Some(out)
            }

            fn singular_values(rows: &[Vec<Self>]) -> Vec<Self> {
                let n = rows.len();
                let m = rows.first().map_or(0, |r| r.len());
                let flat: Vec<Self> = rows.iter().flat_map(|r| r.iter().copied()).collect();
                let mat = nalgebra::DMatrix::from_row_slice(n, m, &flat);
                let mut sv: Vec<Self> = mat.singular_values().iter().copied().collect();
                sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
                sv
            }
        }
    };
}

impl_spectrum!(f32);
impl_spectrum!(f64);
