//! Composite Lyapunov certification for two-time-scale systems.
//!
//! Given power-law decay certificates for the reduced and boundary-layer
//! dynamics plus quadratic interconnection bounds, this module assembles the
//! 2x2 comparison matrix `P`, finds a feasible blending weight `theta`, the
//! time-scale threshold `eps_star` below which `P` is positive definite, the
//! bracketing exponents `gamma1 < 1 < gamma2`, and the resulting settling
//! time bound.

use crate::linalg::{dot, norm, Mat2};
use crate::model::SystemModel;
use crate::real::{approx_f64, pow_nonneg, real, Real};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type ScalarField1<T> = Box<dyn Fn(&[T]) -> T + Send + Sync>;
pub type ScalarField2<T> = Box<dyn Fn(&[T], &[T]) -> T + Send + Sync>;
pub type GradField1<T> = Box<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
pub type GradField2<T> = Box<dyn Fn(&[T], &[T]) -> Vec<T> + Send + Sync>;

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("certificate infeasible: {0}")]
    Infeasible(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Decay constants of the reduced certificate:
/// `<grad V, f(x, h(x))> <= -k1 V^{a1} - k2 V^{a2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedConstants<T> {
    pub k1: T,
    pub k2: T,
    pub a1: T,
    pub a2: T,
}

impl<T: Real> ReducedConstants<T> {
    pub fn validate(&self) -> Result<(), CertifyError> {
        validate_decay("k1", self.k1, "a1", self.a1, "a2", self.a2, self.k2)
    }

    pub fn k_lower(&self) -> T {
        self.k1.min(self.k2)
    }
}

/// Decay constants of the boundary-layer certificate:
/// `<grad_y W, g(x, y + h(x))> <= -kappa1 W^{b1} - kappa2 W^{b2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConstants<T> {
    pub kappa1: T,
    pub kappa2: T,
    pub b1: T,
    pub b2: T,
}

impl<T: Real> BoundaryConstants<T> {
    pub fn validate(&self) -> Result<(), CertifyError> {
        validate_decay(
            "kappa1",
            self.kappa1,
            "b1",
            self.b1,
            "b2",
            self.b2,
            self.kappa2,
        )
    }

    pub fn kappa_lower(&self) -> T {
        self.kappa1.min(self.kappa2)
    }
}

fn validate_decay<T: Real>(
    gain_name: &'static str,
    gain_low: T,
    exp_low_name: &'static str,
    exp_low: T,
    exp_high_name: &'static str,
    exp_high: T,
    gain_high: T,
) -> Result<(), CertifyError> {
    if !(gain_low > T::zero() && gain_high > T::zero()) {
        return Err(CertifyError::InvalidParameter {
            name: gain_name,
            value: approx_f64(gain_low),
        });
    }
    if !(exp_low > T::zero() && exp_low < T::one()) {
        return Err(CertifyError::InvalidParameter {
            name: exp_low_name,
            value: approx_f64(exp_low),
        });
    }
    if !(exp_high > T::one()) {
        return Err(CertifyError::InvalidParameter {
            name: exp_high_name,
            value: approx_f64(exp_high),
        });
    }
    Ok(())
}

/// Quadratic sandwich descriptor `lo |x|^2 <= V(x) <= hi |x|^2`, recorded for
/// the quadratic benchmark certificates and spot-checked in tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticSandwich<T> {
    pub lower: T,
    pub upper: T,
}

/// Lyapunov certificate for the reduced dynamics.
pub struct PowerLawCertificate<T> {
    pub constants: ReducedConstants<T>,
    pub v: ScalarField1<T>,
    pub grad_v: GradField1<T>,
    pub sandwich: Option<QuadraticSandwich<T>>,
}

/// Lyapunov certificate for the boundary-layer dynamics.
pub struct BoundaryCertificate<T> {
    pub constants: BoundaryConstants<T>,
    pub w: ScalarField2<T>,
    pub grad_w_x: GradField2<T>,
    pub grad_w_y: GradField2<T>,
}

/// The six interconnection coefficients of the quadratic cross bounds
/// `I_i <= chi_i tv tw + delta_i tv^2 + c_i tw^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterconnectionBounds<T> {
    pub chi1: T,
    pub delta1: T,
    pub c1: T,
    pub chi2: T,
    pub delta2: T,
    pub c2: T,
}

impl<T: Real> InterconnectionBounds<T> {
    /// The feasibility condition: `delta1 < k_lower/2` or `delta2 < 0`.
    pub fn condition_b(&self, k_lower: T) -> bool {
        self.delta1 < k_lower / real::<T>(2.0) || self.delta2 < T::zero()
    }
}

/// Tilde value `v^{p_low/2} + v^{p_high/2}` of a nonnegative Lyapunov value.
pub fn tilde_value<T: Real>(v: T, p_low: T, p_high: T) -> Result<T, CertifyError> {
    if v < T::zero() {
        return Err(CertifyError::Domain(format!(
            "tilde value requires v >= 0, got {v}"
        )));
    }
    let two = real::<T>(2.0);
    Ok(pow_nonneg(v, p_low / two) + pow_nonneg(v, p_high / two))
}

/// Assembles the comparison matrix
///
/// ```text
/// P11 = theta k_lower / 2 - theta delta1 - (1-theta) delta2
/// P12 = P21 = -(theta chi1 + (1-theta) chi2) / 2
/// P22 = (1-theta) kappa_lower / (2 eps) - theta c1 - (1-theta) c2
/// ```
pub fn build_p<T: Real>(
    k_lower: T,
    kappa_lower: T,
    bounds: &InterconnectionBounds<T>,
    theta: T,
    eps: T,
) -> Result<Mat2<T>, CertifyError> {
    if !(theta > T::zero() && theta < T::one()) {
        return Err(CertifyError::InvalidParameter {
            name: "theta",
            value: approx_f64(theta),
        });
    }
    if !(eps > T::zero()) {
        return Err(CertifyError::InvalidParameter {
            name: "eps",
            value: approx_f64(eps),
        });
    }
    let one = T::one();
    let two = real::<T>(2.0);
    let half = one / two;
    let p11 = theta * k_lower / two - theta * bounds.delta1 - (one - theta) * bounds.delta2;
    // Evaluated as chi2 + theta (chi1 - chi2): exact when chi1 == chi2.
    let p12 = -half * (bounds.chi2 + theta * (bounds.chi1 - bounds.chi2));
    let p22 =
        (one - theta) * kappa_lower / (two * eps) - theta * bounds.c1 - (one - theta) * bounds.c2;
    Ok(Mat2::symmetric(p11, p12, p22))
}

fn p11_of<T: Real>(k_lower: T, bounds: &InterconnectionBounds<T>, theta: T) -> T {
    let one = T::one();
    let two = real::<T>(2.0);
    theta * k_lower / two - theta * bounds.delta1 - (one - theta) * bounds.delta2
}

/// Closed-form positivity threshold from `det P(eps) = 0`:
/// `eps_star = ((1-theta) kappa_lower / 2) / (P12^2/P11 + theta c1 +
/// (1-theta) c2)`, clamped to infinity when the denominator is nonpositive.
pub fn epsilon_star<T: Real>(
    k_lower: T,
    kappa_lower: T,
    bounds: &InterconnectionBounds<T>,
    theta: T,
) -> Result<T, CertifyError> {
    let one = T::one();
    let two = real::<T>(2.0);
    let half = one / two;
    let p11 = p11_of(k_lower, bounds, theta);
    if !(p11 > T::zero()) {
        return Err(CertifyError::Infeasible(format!(
            "P11(theta={theta}) = {p11} is not positive"
        )));
    }
    let p12 = -half * (bounds.chi2 + theta * (bounds.chi1 - bounds.chi2));
    let denom = p12 * p12 / p11 + theta * bounds.c1 + (one - theta) * bounds.c2;
    if denom <= T::zero() {
        return Ok(T::infinity());
    }
    Ok((one - theta) * kappa_lower / two / denom)
}

/// Grid search for the blending weight: over `theta` in {0.001, ..., 0.999},
/// keep those with `P11 > 0` and return the one maximizing `eps_star`
/// (ties resolved toward the smaller theta).
pub fn feasible_theta<T: Real>(
    k_lower: T,
    bounds: &InterconnectionBounds<T>,
) -> Result<T, CertifyError> {
    if !bounds.condition_b(k_lower) {
        return Err(CertifyError::Infeasible(
            "neither delta1 < k_lower/2 nor delta2 < 0 holds".into(),
        ));
    }
    let mut best: Option<(T, T)> = None;
    for i in 1..1000u32 {
        let theta = real::<T>(f64::from(i) / 1000.0);
        if !(p11_of(k_lower, bounds, theta) > T::zero()) {
            continue;
        }
        // kappa_lower scales eps_star uniformly; rank with a unit value.
        let score = epsilon_star(k_lower, T::one(), bounds, theta)?;
        match best {
            Some((_, s)) if score <= s => {}
            _ => best = Some((theta, score)),
        }
    }
    best.map(|(theta, _)| theta)
        .ok_or_else(|| CertifyError::Infeasible("no theta on the 1e-3 grid yields P11 > 0".into()))
}

/// Midpoint selection of the bracketing exponents:
/// `gamma1 = (max(a1,b1)+1)/2`, `gamma2 = (1+min(a2,b2))/2`.
pub fn select_gammas<T: Real>(a1: T, a2: T, b1: T, b2: T) -> Result<(T, T), CertifyError> {
    let one = T::one();
    if !(a1 > T::zero() && a1 < one && b1 > T::zero() && b1 < one) {
        return Err(CertifyError::InvalidInput(
            "low exponents must lie in (0,1)".into(),
        ));
    }
    if !(a2 > one && b2 > one) {
        return Err(CertifyError::InvalidInput(
            "high exponents must exceed 1".into(),
        ));
    }
    let two = real::<T>(2.0);
    Ok(((a1.max(b1) + one) / two, (one + a2.min(b2)) / two))
}

/// Settling-time bound `2/(lambda (1-gamma1)) + 2^{gamma2}/(lambda (gamma2-1))`
/// from the comparison estimate
/// `Psi' <= -(lambda/2)(Psi^{gamma1} + 2^{1-gamma2} Psi^{gamma2})`.
pub fn settling_time_bound<T: Real>(
    lambda_min: T,
    gamma1: T,
    gamma2: T,
) -> Result<T, CertifyError> {
    let one = T::one();
    let two = real::<T>(2.0);
    if !(lambda_min > T::zero()) {
        return Err(CertifyError::Domain("lambda_min must be positive".into()));
    }
    if !(gamma1 > T::zero() && gamma1 < one && gamma2 > one) {
        return Err(CertifyError::Domain(
            "require gamma1 in (0,1) and gamma2 > 1".into(),
        ));
    }
    Ok(two / (lambda_min * (one - gamma1))
        + pow_nonneg(two, gamma2) / (lambda_min * (gamma2 - one)))
}

/// Convex combination `theta v + (1-theta) w` of the two Lyapunov values.
pub fn composite_value<T: Real>(theta: T, v: T, w: T) -> Result<T, CertifyError> {
    if !(theta > T::zero() && theta < T::one()) {
        return Err(CertifyError::InvalidParameter {
            name: "theta",
            value: approx_f64(theta),
        });
    }
    if v < T::zero() || w < T::zero() {
        return Err(CertifyError::Domain(
            "Lyapunov values must be nonnegative".into(),
        ));
    }
    Ok(theta * v + (T::one() - theta) * w)
}

/// Analytic Lie derivative of `Psi = theta V + (1-theta) W` along the shifted
/// dynamics at `(x, y)`:
/// `theta <grad V, f> + (1-theta)(<grad_x W, f> + <grad_y W, g/eps - dh f>)`
/// with `f, g` evaluated at `(x, y + h(x))`.
pub fn composite_lie_derivative<T: Real>(
    model: &SystemModel<T>,
    rc: &PowerLawCertificate<T>,
    bc: &BoundaryCertificate<T>,
    theta: T,
    eps: T,
    x: &[T],
    y: &[T],
) -> Result<T, CertifyError> {
    if !(eps > T::zero()) {
        return Err(CertifyError::InvalidParameter {
            name: "eps",
            value: approx_f64(eps),
        });
    }
    let (slow, fast) = model
        .shifted_field(eps, x, y)
        .map_err(|e| CertifyError::InvalidInput(e.to_string()))?;
    let one = T::one();
    let gv = (rc.grad_v)(x);
    let gwx = (bc.grad_w_x)(x, y);
    let gwy = (bc.grad_w_y)(x, y);
    Ok(theta * dot(&gv, &slow) + (one - theta) * (dot(&gwx, &slow) + dot(&gwy, &fast)))
}

/// Smaller eigenvalue of a symmetric 2x2 matrix in closed form:
/// `trace/2 - sqrt((trace/2)^2 - det)`.
///
/// When the eigenvalues are far apart the subtraction cancels, so the small
/// one is recovered through `det / lambda_max` (an exact identity), which
/// matters for `P(eps)` near the positivity threshold where `P22` dwarfs
/// `P11`.
pub fn lambda_min_2x2<T: Real>(p: &Mat2<T>) -> Result<T, CertifyError> {
    let scale = p.max_abs().max(T::one());
    if (p.m12 - p.m21).abs() > real::<T>(1e-12) * scale {
        return Err(CertifyError::InvalidInput(format!(
            "matrix is not symmetric: |{} - {}| too large",
            p.m12, p.m21
        )));
    }
    let two = real::<T>(2.0);
    let mid = p.trace() / two;
    let half_diff = (p.m11 - p.m22) / two;
    let off = (p.m12 + p.m21) / two;
    let radius = (half_diff * half_diff + off * off).sqrt();
    if mid > T::zero() && mid + radius > T::zero() {
        Ok(p.det() / (mid + radius))
    } else {
        Ok(mid - radius)
    }
}

/// The full output of a benchmark certification pipeline.
pub type CertificationChain<T> = (
    ReducedConstants<T>,
    BoundaryConstants<T>,
    InterconnectionBounds<T>,
    CompositeCertificate<T>,
);

/// An assembled composite certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeCertificate<T> {
    pub theta: T,
    pub eps_star: T,
    pub gamma1: T,
    pub gamma2: T,
    /// Settling bound evaluated at `eps_report`.
    pub settling_bound: T,
    /// The eps at which `settling_bound` and `lambda_min` were reported.
    pub eps_report: T,
    pub k_lower: T,
    pub kappa_lower: T,
    pub bounds: InterconnectionBounds<T>,
}

impl<T: Real> CompositeCertificate<T> {
    /// Smallest eigenvalue of `P` at a given eps.
    pub fn lambda_min_at(&self, eps: T) -> Result<T, CertifyError> {
        let p = build_p(
            self.k_lower,
            self.kappa_lower,
            &self.bounds,
            self.theta,
            eps,
        )?;
        lambda_min_2x2(&p)
    }
}

/// Runs the certification pipeline on decay constants and interconnection
/// bounds. `theta` fixes the blending weight (otherwise grid-searched) and
/// `eps_hint` selects the reporting eps when it is below `eps_star`.
pub fn certify<T: Real>(
    rc: &ReducedConstants<T>,
    bc: &BoundaryConstants<T>,
    bounds: &InterconnectionBounds<T>,
    theta: Option<T>,
    eps_hint: Option<T>,
) -> Result<CompositeCertificate<T>, CertifyError> {
    rc.validate()?;
    bc.validate()?;
    let k_lower = rc.k_lower();
    let kappa_lower = bc.kappa_lower();
    let theta = match theta {
        Some(t) => {
            if !(p11_of(k_lower, bounds, t) > T::zero()) {
                return Err(CertifyError::Infeasible(format!(
                    "P11 is not positive at the requested theta = {t}"
                )));
            }
            t
        }
        None => feasible_theta(k_lower, bounds)?,
    };
    let eps_star = epsilon_star(k_lower, kappa_lower, bounds, theta)?;
    let (gamma1, gamma2) = select_gammas(rc.a1, rc.a2, bc.b1, bc.b2)?;
    let two = real::<T>(2.0);
    let eps_report = match eps_hint {
        Some(e) if e > T::zero() && e < eps_star => e,
        _ => {
            if eps_star.is_finite() {
                eps_star / two
            } else {
                real::<T>(1e-3)
            }
        }
    };
    let cert = CompositeCertificate {
        theta,
        eps_star,
        gamma1,
        gamma2,
        settling_bound: T::zero(),
        eps_report,
        k_lower,
        kappa_lower,
        bounds: *bounds,
    };
    let lambda = cert.lambda_min_at(eps_report)?;
    if !(lambda > T::zero()) {
        return Err(CertifyError::Infeasible(format!(
            "lambda_min(P) = {lambda} at reporting eps {eps_report}"
        )));
    }
    let settling_bound = settling_time_bound(lambda, gamma1, gamma2)?;
    Ok(CompositeCertificate {
        settling_bound,
        ..cert
    })
}

/// Flat serialization record of a full certificate chain. Field names and
/// order are a stable external interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord<T> {
    pub k1: T,
    pub k2: T,
    pub a1: T,
    pub a2: T,
    pub kappa1: T,
    pub kappa2: T,
    pub b1: T,
    pub b2: T,
    pub chi1: T,
    pub delta1: T,
    pub c1: T,
    pub chi2: T,
    pub delta2: T,
    pub c2: T,
    pub theta: T,
    pub eps_star: T,
    pub gamma1: T,
    pub gamma2: T,
    pub settling_bound: T,
}

impl<T: Real> CertificateRecord<T> {
    pub fn assemble(
        rc: &ReducedConstants<T>,
        bc: &BoundaryConstants<T>,
        bounds: &InterconnectionBounds<T>,
        cert: &CompositeCertificate<T>,
    ) -> Self {
        Self {
            k1: rc.k1,
            k2: rc.k2,
            a1: rc.a1,
            a2: rc.a2,
            kappa1: bc.kappa1,
            kappa2: bc.kappa2,
            b1: bc.b1,
            b2: bc.b2,
            chi1: bounds.chi1,
            delta1: bounds.delta1,
            c1: bounds.c1,
            chi2: bounds.chi2,
            delta2: bounds.delta2,
            c2: bounds.c2,
            theta: cert.theta,
            eps_star: cert.eps_star,
            gamma1: cert.gamma1,
            gamma2: cert.gamma2,
            settling_bound: cert.settling_bound,
        }
    }
}

/// Assumption-style decrease gap for the reduced dynamics at `x`:
/// `-<grad V, f(x,h(x))> - (k1 V^{a1} + k2 V^{a2})`; nonnegative means the
/// decay inequality holds there.
pub fn reduced_decrease_gap<T: Real>(
    model: &SystemModel<T>,
    rc: &PowerLawCertificate<T>,
    x: &[T],
) -> Result<(T, T), CertifyError> {
    let field = model
        .reduced_field(x)
        .map_err(|e| CertifyError::InvalidInput(e.to_string()))?;
    let lie = dot(&(rc.grad_v)(x), &field);
    let v = (rc.v)(x);
    let c = &rc.constants;
    let decay = c.k1 * pow_nonneg(v, c.a1) + c.k2 * pow_nonneg(v, c.a2);
    Ok((-lie - decay, lie.abs() + decay))
}

/// Boundary-layer decrease gap at `(x, y)`; same orientation and scale
/// convention as [`reduced_decrease_gap`].
pub fn boundary_decrease_gap<T: Real>(
    model: &SystemModel<T>,
    bc: &BoundaryCertificate<T>,
    x: &[T],
    y: &[T],
) -> Result<(T, T), CertifyError> {
    let field = model
        .boundary_layer_field(x, y)
        .map_err(|e| CertifyError::InvalidInput(e.to_string()))?;
    let lie = dot(&(bc.grad_w_y)(x, y), &field);
    let w = (bc.w)(x, y);
    let c = &bc.constants;
    let decay = c.kappa1 * pow_nonneg(w, c.b1) + c.kappa2 * pow_nonneg(w, c.b2);
    Ok((-lie - decay, lie.abs() + decay))
}

/// Gap of the quadratic interconnection bound
/// `value <= chi tv tw + delta tv^2 + c tw^2` for one cross term.
pub fn interconnection_bound_gap<T: Real>(chi: T, delta: T, c: T, tv: T, tw: T, value: T) -> T {
    chi * tv * tw + delta * tv * tv + c * tw * tw - value
}

/// Pointwise check of the certified decrease inequality
/// `Psi' <= -(lambda/2)(Psi^{gamma1} + 2^{1-gamma2} Psi^{gamma2})` at `(x,y)`.
/// Returns `(violation_amount, lhs, rhs)`; the violation is positive when the
/// inequality fails beyond the relative slack.
#[allow(clippy::too_many_arguments)]
pub fn decrease_inequality_violation<T: Real>(
    model: &SystemModel<T>,
    rc: &PowerLawCertificate<T>,
    bc: &BoundaryCertificate<T>,
    cert: &CompositeCertificate<T>,
    eps: T,
    x: &[T],
    y: &[T],
    rel_slack: T,
) -> Result<(T, T, T), CertifyError> {
    let lhs = composite_lie_derivative(model, rc, bc, cert.theta, eps, x, y)?;
    let v = (rc.v)(x);
    let w = (bc.w)(x, y);
    let psi = composite_value(cert.theta, v, w)?;
    let lambda = cert.lambda_min_at(eps)?;
    let two = real::<T>(2.0);
    let rhs = -(lambda / two)
        * (pow_nonneg(psi, cert.gamma1)
            + pow_nonneg(two, T::one() - cert.gamma2) * pow_nonneg(psi, cert.gamma2));
    let scale = lhs.abs().max(rhs.abs()).max(T::min_positive_value());
    Ok((lhs - rhs - rel_slack * scale, lhs, rhs))
}

/// Euclidean norm of a split state, shared by settle checks and samplers.
pub fn split_state_norm<T: Real>(x: &[T], y: &[T]) -> T {
    let nx = norm(x);
    let ny = norm(y);
    (nx * nx + ny * ny).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_bounds() -> InterconnectionBounds<f64> {
        InterconnectionBounds {
            chi1: 1.5e6,
            delta1: 0.1,
            c1: 0.1,
            chi2: 1.5e6,
            delta2: 0.1,
            c2: 262.6,
        }
    }

    #[test]
    fn tilde_value_examples() {
        assert_eq!(tilde_value(0.0_f64, 0.8, 1.5).unwrap(), 0.0);
        assert!((tilde_value(1.0_f64, 0.3, 2.7).unwrap() - 2.0).abs() < 1e-15);
        assert!((tilde_value(4.0_f64, 1.0, 2.0).unwrap() - 6.0).abs() < 1e-12);
        assert!(tilde_value(-1.0_f64, 1.0, 2.0).is_err());
    }

    #[test]
    fn build_p_reference_entries() {
        let p = build_p(0.359, 0.27, &reference_bounds(), 2.0 / 3.0, 1e-3).unwrap();
        assert!((p.m11 - 0.0196666666666666).abs() < 1e-12);
        assert_eq!(p.m12, -750_000.0);
        assert_eq!(p.m21, -750_000.0);
        // P22 = 0.045/eps - offset with offset in [87, 88.1].
        let offset = 0.045 / 1e-3 - p.m22;
        assert!((87.0..=88.1).contains(&offset), "offset = {offset}");
    }

    #[test]
    fn build_p_zero_coupling_is_diagonal() {
        let zero = InterconnectionBounds {
            chi1: 0.0,
            delta1: 0.0,
            c1: 0.0,
            chi2: 0.0,
            delta2: 0.0,
            c2: 0.0,
        };
        let p = build_p(2.0, 2.0, &zero, 0.5, 1.0).unwrap();
        assert_eq!((p.m11, p.m12, p.m22), (0.5, 0.0, 0.5));
        assert!(build_p(2.0, 2.0, &zero, 1.0, 1.0).is_err());
    }

    #[test]
    fn build_p_entries_affine_in_theta_and_inverse_eps() {
        let bounds = reference_bounds();
        let thetas = [0.2, 0.5, 0.8];
        let at = |t: f64| build_p(0.4, 0.3, &bounds, t, 1e-2).unwrap();
        // Linear fit through the first two evaluations must predict the third.
        let (p_a, p_b, p_c) = (at(thetas[0]), at(thetas[1]), at(thetas[2]));
        let predict = |f: fn(&Mat2<f64>) -> f64| {
            let slope = (f(&p_b) - f(&p_a)) / (thetas[1] - thetas[0]);
            f(&p_a) + slope * (thetas[2] - thetas[0])
        };
        assert!((predict(|p| p.m11) - p_c.m11).abs() < 1e-9);
        assert!((predict(|p| p.m12) - p_c.m12).abs() < 1e-6);
        assert!((predict(|p| p.m22) - p_c.m22).abs() < 1e-6);
        // P22 affine in 1/eps.
        let p22 = |eps: f64| build_p(0.4, 0.3, &bounds, 0.5, eps).unwrap().m22;
        let (e1, e2, e3) = (1e-2, 2e-2, 5e-2);
        let slope = (p22(e2) - p22(e1)) / (1.0 / e2 - 1.0 / e1);
        let pred = p22(e1) + slope * (1.0 / e3 - 1.0 / e1);
        assert!((pred - p22(e3)).abs() < 1e-9);
    }

    #[test]
    fn build_p_against_independent_entry_expressions() {
        // Second implementation of the three entry formulas, written
        // without the shared subexpressions of `build_p`.
        let (k_lower, kappa_lower, theta, eps) = (1.0_f64, 2f64.powf(5.0 / 8.0), 0.5, 0.02);
        let bounds = InterconnectionBounds {
            chi1: 323.3,
            delta1: 0.4,
            c1: 0.4,
            chi2: 335.3,
            delta2: 0.4,
            c2: 8.4,
        };
        let p = build_p(k_lower, kappa_lower, &bounds, theta, eps).unwrap();
        let p11 = theta * k_lower / 2.0 - theta * bounds.delta1 - (1.0 - theta) * bounds.delta2;
        let p12 = -(theta * bounds.chi1 + (1.0 - theta) * bounds.chi2) / 2.0;
        let p22 = (1.0 - theta) * kappa_lower / (2.0 * eps)
            - theta * bounds.c1
            - (1.0 - theta) * bounds.c2;
        assert!((p.m11 - p11).abs() <= 1e-12 * p11.abs().max(1.0));
        assert!((p.m12 - p12).abs() <= 1e-12 * p12.abs().max(1.0));
        assert!((p.m21 - p12).abs() <= 1e-12 * p12.abs().max(1.0));
        assert!((p.m22 - p22).abs() <= 1e-12 * p22.abs().max(1.0));
    }

    #[test]
    fn feasible_theta_reference_case() {
        let bounds = reference_bounds();
        let theta = feasible_theta(0.359, &bounds).unwrap();
        // The reference weight 2/3 must itself be feasible.
        assert!(p11_of(0.359, &bounds, 2.0 / 3.0) > 0.0);
        // And the returned theta must not do worse.
        let ref_score = epsilon_star(0.359, 1.0, &bounds, 2.0 / 3.0).unwrap();
        let got = epsilon_star(0.359, 1.0, &bounds, theta).unwrap();
        assert!(got >= ref_score);
    }

    #[test]
    fn feasible_theta_zero_coupling_prefers_smallest() {
        let zero = InterconnectionBounds {
            chi1: 0.0,
            delta1: 0.0,
            c1: 0.0,
            chi2: 0.0,
            delta2: 0.0,
            c2: 0.0,
        };
        // All theta tie at eps_star = infinity; ties break low.
        assert_eq!(feasible_theta(2.0, &zero).unwrap(), 0.001);
    }

    #[test]
    fn feasible_theta_infeasible_case() {
        // delta1 > k_lower/2 and delta2 > 0: P11 < 0 on the whole grid.
        let bounds = InterconnectionBounds {
            chi1: 0.0,
            delta1: 0.6,
            c1: 0.0,
            chi2: 0.0,
            delta2: 0.1,
            c2: 0.0,
        };
        assert!(matches!(
            feasible_theta(1.0, &bounds),
            Err(CertifyError::Infeasible(_))
        ));
        // Brute-force confirmation.
        for i in 1..1000 {
            let theta = i as f64 / 1000.0;
            assert!(p11_of(1.0, &bounds, theta) <= 0.0);
        }
    }

    #[test]
    fn epsilon_star_reference_and_det_signs() {
        let bounds = reference_bounds();
        let eps_star = epsilon_star(0.359, 0.27, &bounds, 2.0 / 3.0).unwrap();
        assert!(
            (1e-15..2e-15).contains(&eps_star),
            "eps_star = {eps_star:e}"
        );
        // det P changes sign across the root.
        let det = |eps: f64| build_p(0.359, 0.27, &bounds, 2.0 / 3.0, eps).unwrap().det();
        assert!(det(0.999 * eps_star) > 0.0);
        assert!(det(1.001 * eps_star) < 0.0);
    }

    #[test]
    fn epsilon_star_decoupled_is_unbounded() {
        let zero = InterconnectionBounds {
            chi1: 0.0,
            delta1: 0.0,
            c1: 0.0,
            chi2: 0.0,
            delta2: 0.0,
            c2: 0.0,
        };
        assert!(epsilon_star(2.0_f64, 2.0, &zero, 0.5)
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn epsilon_star_monotone_under_coupling_shrink() {
        let bounds = reference_bounds();
        let theta = 2.0 / 3.0;
        let base = epsilon_star(0.359, 0.27, &bounds, theta).unwrap();
        for scale in [0.9, 0.5, 0.1, 0.0] {
            let shrunk = InterconnectionBounds {
                chi1: bounds.chi1 * scale,
                chi2: bounds.chi2 * scale,
                c1: bounds.c1 * scale,
                c2: bounds.c2 * scale,
                ..bounds
            };
            assert!(epsilon_star(0.359, 0.27, &shrunk, theta).unwrap() >= base);
        }
    }

    #[test]
    fn gamma_selection_examples() {
        let (g1, g2) = select_gammas(0.5_f64, 2.0, 0.5, 2.0).unwrap();
        assert_eq!((g1, g2), (0.75, 1.5));
        // Exponents 1 - xi/2 at xi1 = 1/3, xi2 = -2/3.
        let (g1, g2) = select_gammas(5.0_f64 / 6.0, 4.0 / 3.0, 5.0 / 6.0, 4.0 / 3.0).unwrap();
        assert!((g1 - 11.0 / 12.0).abs() < 1e-15);
        assert!((g2 - 7.0 / 6.0).abs() < 1e-15);
        let (g1, g2) = select_gammas(2.0_f64 / 3.0, 2.0, 5.0 / 8.0, 2.0).unwrap();
        assert!((g1 - 5.0 / 6.0).abs() < 1e-15);
        assert!((g2 - 1.5).abs() < 1e-15);
        assert!(select_gammas(1.2_f64, 2.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn settling_bound_examples_and_monotonicity() {
        assert!((settling_time_bound(2.0_f64, 0.5, 2.0).unwrap() - 4.0).abs() < 1e-12);
        let t = settling_time_bound(0.01_f64, 0.9, 1.15).unwrap();
        let direct = 2.0 / (0.01 * 0.1) + 2f64.powf(1.15) / (0.01 * 0.15);
        assert!((t - direct).abs() < 1e-9);
        assert!((t - 3479.6).abs() < 0.5);
        // Larger lambda shrinks the bound toward zero.
        assert!(
            settling_time_bound(1e6_f64, 0.5, 2.0).unwrap()
                < settling_time_bound(1e3, 0.5, 2.0).unwrap()
        );
        // Decreasing gamma1 shrinks it.
        assert!(
            settling_time_bound(1.0_f64, 0.5, 2.0).unwrap()
                < settling_time_bound(1.0, 0.9, 2.0).unwrap()
        );
        // In gamma2 the bound blows up toward both limits (1 and infinity)
        // with an interior minimum at 1 + 1/ln 2.
        let interior = settling_time_bound(1.0_f64, 0.5, 1.0 + 1.0 / 2f64.ln()).unwrap();
        assert!(interior < settling_time_bound(1.0, 0.5, 1.05).unwrap());
        assert!(interior < settling_time_bound(1.0, 0.5, 6.0).unwrap());
    }

    #[test]
    fn composite_value_examples() {
        assert_eq!(composite_value(0.42_f64, 0.0, 0.0).unwrap(), 0.0);
        assert!((composite_value(2.0_f64 / 3.0, 3.0, 6.0).unwrap() - 4.0).abs() < 1e-15);
        assert!(composite_value(0.0_f64, 1.0, 1.0).is_err());
        // Psi <= V + W.
        for i in 0..100 {
            let theta = 0.01 + 0.98 * (i as f64 / 99.0);
            let (v, w) = (i as f64 * 0.37, (99 - i) as f64 * 0.11);
            assert!(composite_value(theta, v, w).unwrap() <= v + w + 1e-12);
        }
    }

    #[test]
    fn lambda_min_closed_form() {
        let id = Mat2::symmetric(1.0_f64, 0.0, 1.0);
        assert_eq!(lambda_min_2x2(&id).unwrap(), 1.0);
        let diag = Mat2::symmetric(0.5_f64, 0.0, 0.25);
        assert_eq!(lambda_min_2x2(&diag).unwrap(), 0.25);
        let asym = Mat2 {
            m11: 1.0_f64,
            m12: 0.5,
            m21: 0.2,
            m22: 1.0,
        };
        assert!(lambda_min_2x2(&asym).is_err());
    }

    #[test]
    fn lambda_min_residual_property() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let a: f64 = rng.random_range(-5.0..5.0);
            let b: f64 = rng.random_range(-5.0..5.0);
            let d: f64 = rng.random_range(-5.0..5.0);
            let p = Mat2::symmetric(a, b, d);
            let lam = lambda_min_2x2(&p).unwrap();
            let shifted = Mat2::symmetric(a - lam, b, d - lam);
            let scale = p.max_abs().max(1.0);
            assert!(shifted.det().abs() <= 1e-9 * scale * scale);
        }
    }

    #[test]
    fn certificate_record_field_set() {
        let rc = ReducedConstants {
            k1: 0.359,
            k2: 0.453,
            a1: 5.0 / 6.0,
            a2: 4.0 / 3.0,
        };
        let bc = BoundaryConstants {
            kappa1: 0.5,
            kappa2: 0.28,
            b1: 5.0 / 6.0,
            b2: 4.0 / 3.0,
        };
        let cert = certify(&rc, &bc, &reference_bounds(), Some(2.0 / 3.0), None).unwrap();
        let record = CertificateRecord::assemble(&rc, &bc, &reference_bounds(), &cert);
        // Field order in the emitted JSON text is part of the interface.
        let json = serde_json::to_string(&record).unwrap();
        let keys: Vec<String> = json
            .split('"')
            .skip(1)
            .step_by(2)
            .map(str::to_owned)
            .collect();
        assert_eq!(
            keys,
            vec![
                "k1",
                "k2",
                "a1",
                "a2",
                "kappa1",
                "kappa2",
                "b1",
                "b2",
                "chi1",
                "delta1",
                "c1",
                "chi2",
                "delta2",
                "c2",
                "theta",
                "eps_star",
                "gamma1",
                "gamma2",
                "settling_bound"
            ]
        );
    }
}
