//! Second-order benchmark with fixed-time parasitic dynamics:
//!
//! ```text
//!   x1' = -sp(x1, xi1) - x1^3 + z
//!   x2' = -sp(z, xi1)  - z^3  - x1
//!   eps z' = -sp(z - x2, xi2) - (z - x2)^3
//! ```
//!
//! where `sp(v, xi) = |v|^xi sign(v)`. The quasi-steady state is
//! `h(x) = x2` with Jacobian `[0 1]`.

use crate::certify::{
    certify, BoundaryCertificate, BoundaryConstants, CertificateRecord, CertificationChain,
    InterconnectionBounds, PowerLawCertificate, QuadraticSandwich, ReducedConstants,
};
use crate::gradflow::{choose_q, BenchError};
use crate::ineq::alpha_pair;
use crate::model::{ComparisonBound, SystemModel};
use crate::real::{pow_nonneg, real, signed_power_unchecked, Real};
use crate::sim::{
    annotate_trajectory, integrate, monitor_lyapunov, IntegratorConfig, MonitorMode, Trajectory,
    ViolationReport,
};
use serde::{Deserialize, Serialize};

/// Parameters of the second-order benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighOrderParams<T> {
    pub xi1: T,
    pub xi2: T,
    pub mu: T,
    pub q: T,
}

impl<T: Real> HighOrderParams<T> {
    /// Published configuration `xi1 = 1/3`, `xi2 = 1/4` with this crate's
    /// defaults `mu = 0.4` and grid-minimal `q`.
    pub fn reference() -> Self {
        Self::with_auto_q(real(1.0 / 3.0), real(0.25), real(0.4))
    }

    /// Picks `q` by the admissibility rule `1/alpha_lower(q) < mu/12` on the
    /// geometric grid.
    pub fn with_auto_q(xi1: T, xi2: T, mu: T) -> Self {
        let eta = mu / real::<T>(12.0);
        let q = choose_q(eta, |q| combined_alpha_lower(xi1, q));
        Self { xi1, xi2, mu, q }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let one = T::one();
        if !(self.xi2 > T::zero() && self.xi1 < one && self.xi2 <= self.xi1) {
            return Err(BenchError::Precondition(
                "exponents must satisfy 0 < xi2 <= xi1 < 1".into(),
            ));
        }
        // k_lower = 1 for this benchmark, so mu in (0, 1/2).
        if !(self.mu > T::zero() && self.mu < one / real::<T>(2.0)) {
            return Err(BenchError::Precondition("mu must lie in (0, 1/2)".into()));
        }
        if !(self.q > T::zero()) {
            return Err(BenchError::Precondition("q must be positive".into()));
        }
        Ok(())
    }
}

/// Pointwise minimum of the alpha-pair lower maps for the exponent pairs
/// `(1, xi1)` and `(3, 1)` used in the derivation.
pub fn combined_alpha_lower<T: Real>(xi1: T, q: T) -> T {
    let pair_a = alpha_pair(T::one(), xi1).expect("valid exponents");
    let pair_b = alpha_pair(real::<T>(3.0), T::one()).expect("valid exponents");
    pair_a.lower(q).min(pair_b.lower(q))
}

/// Builds the three-state system model.
pub fn build_system<T: Real>(params: &HighOrderParams<T>) -> Result<SystemModel<T>, BenchError> {
    params.validate()?;
    let (xi1, xi2) = (params.xi1, params.xi2);
    let slow = move |x: &[T], z: &[T]| -> Vec<T> {
        let zz = z[0];
        vec![
            -signed_power_unchecked(x[0], xi1) - x[0] * x[0] * x[0] + zz,
            -signed_power_unchecked(zz, xi1) - zz * zz * zz - x[0],
        ]
    };
    let fast = move |x: &[T], z: &[T]| -> Vec<T> {
        let y = z[0] - x[1];
        vec![-signed_power_unchecked(y, xi2) - y * y * y]
    };
    let bl = move |_x: &[T], y: &[T]| -> Vec<T> {
        let v = y[0];
        vec![-signed_power_unchecked(v, xi2) - v * v * v]
    };
    let model = SystemModel::new(
        2,
        1,
        Box::new(slow),
        Box::new(fast),
        Box::new(|x: &[T]| vec![x[1]]),
        Box::new(|_x: &[T]| vec![vec![T::zero(), T::one()]]),
        ComparisonBound::Identity,
    )?
    .with_boundary_layer(Box::new(bl));
    Ok(model)
}

/// Certificate constants: `k1 = k2 = 1`, `a1 = (xi1+1)/2`,
/// `b1 = (xi2+1)/2`, `a2 = b2 = 2`, `kappa1 = 2^{(xi2+1)/2}`, `kappa2 = 4`.
pub fn constants<T: Real>(
    params: &HighOrderParams<T>,
) -> Result<(ReducedConstants<T>, BoundaryConstants<T>), BenchError> {
    params.validate()?;
    let one = T::one();
    let two = real::<T>(2.0);
    let rc = ReducedConstants {
        k1: one,
        k2: one,
        a1: (params.xi1 + one) / two,
        a2: two,
    };
    let bc = BoundaryConstants {
        kappa1: pow_nonneg(two, (params.xi2 + one) / two),
        kappa2: real(4.0),
        b1: (params.xi2 + one) / two,
        b2: two,
    };
    Ok((rc, bc))
}

/// Certificates with evaluators: `V(x) = (x1^2 + x2^2)/2`, `W(y) = y^2/2`.
pub fn certificates<T: Real>(
    params: &HighOrderParams<T>,
) -> Result<(PowerLawCertificate<T>, BoundaryCertificate<T>), BenchError> {
    let (rc, bc) = constants(params)?;
    let two = real::<T>(2.0);
    let half = T::one() / two;
    Ok((
        PowerLawCertificate {
            constants: rc,
            v: Box::new(move |x: &[T]| (x[0] * x[0] + x[1] * x[1]) * half),
            grad_v: Box::new(|x: &[T]| x.to_vec()),
            sandwich: Some(QuadraticSandwich {
                lower: half,
                upper: half,
            }),
        },
        BoundaryCertificate {
            constants: bc,
            w: Box::new(move |_x: &[T], y: &[T]| y[0] * y[0] * half),
            grad_w_x: Box::new(|_x: &[T], _y: &[T]| vec![T::zero(), T::zero()]),
            grad_w_y: Box::new(|_x: &[T], y: &[T]| vec![y[0]]),
        },
    ))
}

/// Interconnection coefficients: `delta1 = c1 = delta2 = mu`,
/// `chi1 = (2^{(9+xi1)/4} + 16) q`, `chi2 = chi1 + 12`, `c2 = mu + 8`.
/// The `chi2`/`c2` composition is validated by the pointwise residual
/// oracles rather than quoted constants.
pub fn interconnection_bounds<T: Real>(
    params: &HighOrderParams<T>,
) -> Result<InterconnectionBounds<T>, BenchError> {
    params.validate()?;
    let eta = params.mu / real::<T>(12.0);
    if !(T::one() / combined_alpha_lower(params.xi1, params.q) < eta) {
        return Err(BenchError::InadmissibleQ {
            q: crate::real::approx_f64(params.q),
            minimal: crate::real::approx_f64(choose_q(eta, |q| {
                combined_alpha_lower(params.xi1, q)
            })),
        });
    }
    let four = real::<T>(4.0);
    let chi1 = (pow_nonneg(real::<T>(2.0), (real::<T>(9.0) + params.xi1) / four) + real::<T>(16.0))
        * params.q;
    Ok(InterconnectionBounds {
        chi1,
        delta1: params.mu,
        c1: params.mu,
        chi2: chi1 + real::<T>(12.0),
        delta2: params.mu,
        c2: params.mu + real::<T>(8.0),
    })
}

/// Closed-form residual
/// `I1 = y x1 - x2 sp(y+x2, xi1) - x2 (y+x2)^3 + x2^4 + x2 sp(x2, xi1)`,
/// with the cubic terms expanded so `x2^4 - x2 (y+x2)^3` does not cancel
/// in floating point when `|y| << |x2|`.
pub fn i1_closed_form<T: Real>(params: &HighOrderParams<T>, x: &[T], y: T) -> T {
    let (x1, x2) = (x[0], x[1]);
    let s = y + x2;
    let three = real::<T>(3.0);
    y * x1 + x2 * (signed_power_unchecked(x2, params.xi1) - signed_power_unchecked(s, params.xi1))
        - x2 * y * y * y
        - three * x2 * x2 * y * y
        - three * x2 * x2 * x2 * y
}

/// Closed-form residual `I2 = y sp(y+x2, xi1) + y (y+x2)^3 + y x1`.
pub fn i2_closed_form<T: Real>(params: &HighOrderParams<T>, x: &[T], y: T) -> T {
    let (x1, x2) = (x[0], x[1]);
    let s = y + x2;
    y * signed_power_unchecked(s, params.xi1) + y * s * s * s + y * x1
}

/// The elementary chain bound on `I1`:
/// `|y||x1| + 2|x2||y|^{xi1} + |y|^3 |x2| + 3 |y||x2|^3`.
pub fn i1_chain_bound<T: Real>(params: &HighOrderParams<T>, x: &[T], y: T) -> T {
    let (x1, x2) = (x[0].abs(), x[1].abs());
    let ay = y.abs();
    let three = real::<T>(3.0);
    ay * x1
        + real::<T>(2.0) * x2 * pow_nonneg(ay, params.xi1)
        + ay * ay * ay * x2
        + three * ay * x2 * x2 * x2
}

/// Full certification chain for the benchmark.
pub fn certification_chain<T: Real>(
    params: &HighOrderParams<T>,
    theta: Option<T>,
    eps_hint: Option<T>,
) -> Result<CertificationChain<T>, BenchError> {
    let (rc, bc) = constants(params)?;
    let bounds = interconnection_bounds(params)?;
    let cert = certify(&rc, &bc, &bounds, theta, eps_hint)?;
    Ok((rc, bc, bounds, cert))
}

/// Reproduction report of the published simulation configuration.
#[derive(Debug, Clone, Serialize)]
pub struct HighOrderReproReport<T> {
    pub eps: T,
    pub x0: [T; 2],
    pub z0: T,
    pub settle_time: Option<T>,
    pub settled_before_t50: bool,
    pub steps: u64,
    pub step_rejections: u64,
    pub certificate: CertificateRecord<T>,
    pub monotonicity: ViolationReport<T>,
}

/// Simulates the published configuration `eps = 0.001`,
/// `x(0) = (356, 241)`, `z(0) = 191` and reports settling plus the full
/// certificate chain and the Lyapunov monotonicity scan (transient window
/// `10 eps` excluded).
pub fn reproduce_reference<T: Real>(
    cfg: &IntegratorConfig<T>,
) -> Result<(HighOrderReproReport<T>, Trajectory<T>), BenchError> {
    let params = HighOrderParams::<T>::reference();
    let model = build_system(&params)?;
    let (rc_consts, bc_consts, bounds, cert) = certification_chain(&params, None, None)?;
    let (rc, bc) = certificates(&params)?;
    let eps = real::<T>(1e-3);
    let x0 = [real::<T>(356.0), real::<T>(241.0)];
    let z0 = real::<T>(191.0);
    let mut traj = integrate(&model, eps, &x0, &[z0], cfg)
        .map_err(|e| BenchError::Integration(e.to_string()))?;
    annotate_trajectory(&mut traj, &model, &rc, &bc, cert.theta)
        .map_err(|e| BenchError::Integration(e.to_string()))?;
    let monotonicity = monitor_lyapunov(
        &model,
        &rc,
        &bc,
        &cert,
        &traj,
        &MonitorMode::Monotonicity {
            transient_window: real::<T>(10.0) * eps,
        },
        cfg,
    )
    .map_err(|e| BenchError::Integration(e.to_string()))?;
    let report = HighOrderReproReport {
        eps,
        x0,
        z0,
        settle_time: traj.settle_time,
        settled_before_t50: traj.settle_time.is_some_and(|t| t < real::<T>(50.0)),
        steps: traj.steps,
        step_rejections: traj.step_rejections,
        certificate: CertificateRecord::assemble(&rc_consts, &bc_consts, &bounds, &cert),
        monotonicity,
    };
    Ok((report, traj))
}
