//! Computable inequality gaps for every auxiliary bound the certificates
//! rely on.
//!
//! Convention: each `*_gap` operation returns `bounding side - bounded side`,
//! so a nonnegative result means the inequality holds. A single randomized
//! runner ([`crate::suite`]) stresses all of them under one contract.

use crate::linalg::{dot, norm, power_direction};
use crate::real::{pow_nonneg, real, signed_power_unchecked, Real};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IneqError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn precondition<T>(msg: impl Into<String>) -> Result<T, IneqError> {
    Err(IneqError::Precondition(msg.into()))
}

/// Majorization test on two nonincreasing sequences: every prefix sum of `a`
/// dominates and the totals agree to relative tolerance 1e-12.
pub fn majorizes<T: Real>(a: &[T], b: &[T]) -> Result<bool, IneqError> {
    if a.len() != b.len() {
        return Err(IneqError::InvalidInput(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    for (name, s) in [("first", a), ("second", b)] {
        if s.windows(2).any(|w| w[0] < w[1]) {
            return Err(IneqError::InvalidInput(format!(
                "{name} sequence is not sorted nonincreasing"
            )));
        }
    }
    let mut pa = T::zero();
    let mut pb = T::zero();
    let tol = real::<T>(1e-12);
    for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
        pa = pa + x;
        pb = pb + y;
        // Prefix domination with the same relative slack as the total
        // equality, so rounding in the running sums cannot flip the verdict.
        if i + 1 < a.len() && pa < pb - tol * pa.abs().max(pb.abs()) {
            return Ok(false);
        }
    }
    let scale = pa.abs().max(pb.abs()).max(T::one());
    Ok((pa - pb).abs() <= tol * scale)
}

/// Karamata gap for the power map `t -> t^p` on nonnegative reals.
///
/// Convex case (`p >= 1`): `sum a_i^p - sum b_i^p`; concave case
/// (`0 < p <= 1`): the reverse orientation. Both vanish at `p = 1`.
pub fn karamata_gap<T: Real>(exponent: T, a: &[T], b: &[T]) -> Result<T, IneqError> {
    if !(exponent > T::zero()) {
        return precondition("karamata exponent must be positive");
    }
    if a.iter().chain(b).any(|&v| v < T::zero()) {
        return precondition("karamata sequences must be nonnegative");
    }
    if !majorizes(a, b)? {
        return precondition("first sequence must majorize the second");
    }
    let sum_pow = |s: &[T]| s.iter().map(|&v| pow_nonneg(v, exponent)).sum::<T>();
    let (sa, sb) = (sum_pow(a), sum_pow(b));
    Ok(if exponent >= T::one() {
        sa - sb
    } else {
        sb - sa
    })
}

/// Middle-power gap `x^a_low + x^a_high - x^a` for `a` strictly between the
/// outer exponents; strictly positive for `x > 0`.
pub fn middle_power_gap<T: Real>(x: T, a: T, a_low: T, a_high: T) -> Result<T, IneqError> {
    if !(x > T::zero()) {
        return precondition("middle-power base must be positive");
    }
    if !(a_low < a && a < a_high) {
        return precondition("exponents must satisfy a_low < a < a_high");
    }
    Ok(pow_nonneg(x, a_low) + pow_nonneg(x, a_high) - pow_nonneg(x, a))
}

/// Weighted AM-GM gap `(1/w) sum w_i x_i - (prod x_i^{w_i})^{1/w}`.
pub fn weighted_amgm_gap<T: Real>(w: &[T], x: &[T]) -> Result<T, IneqError> {
    if w.len() != x.len() || w.is_empty() {
        return Err(IneqError::InvalidInput(
            "weights and values must have equal positive length".into(),
        ));
    }
    if w.iter().any(|&v| !(v > T::zero())) {
        return precondition("weights must be positive");
    }
    if x.iter().any(|&v| v < T::zero()) {
        return precondition("values must be nonnegative");
    }
    let total: T = w.iter().copied().sum();
    let arith = dot(w, x) / total;
    let geom = if x.iter().any(|v| v.is_zero()) {
        T::zero()
    } else {
        (w.iter().zip(x).map(|(&wi, &xi)| wi * xi.ln()).sum::<T>() / total).exp()
    };
    Ok(arith - geom)
}

/// Interconnection residual `Upsilon_i(x, y) = x^T (x/|x|^xi - (y+x)/|y+x|^xi)`.
///
/// `index` selects the exponent regime: 1 requires `xi` in (0,1), 2 requires
/// `xi < 0`. Zero-norm arguments use the zero continuation of the power map.
pub fn upsilon<T: Real>(index: u8, xi: T, x: &[T], y: &[T]) -> Result<T, IneqError> {
    match index {
        1 if !(xi > T::zero() && xi < T::one()) => {
            return precondition("upsilon index 1 requires xi in (0,1)")
        }
        2 if !(xi < T::zero()) => return precondition("upsilon index 2 requires xi < 0"),
        1 | 2 => {}
        _ => {
            return Err(IneqError::InvalidInput(format!(
                "bad upsilon index {index}"
            )))
        }
    }
    if x.len() != y.len() {
        return Err(IneqError::InvalidInput("dimension mismatch".into()));
    }
    let shifted: Vec<T> = x.iter().zip(y).map(|(&a, &b)| a + b).collect();
    let lhs = power_direction(x, xi);
    let rhs = power_direction(&shifted, xi);
    let diff: Vec<T> = lhs.iter().zip(&rhs).map(|(&a, &b)| a - b).collect();
    Ok(dot(x, &diff))
}

/// Total residual `Upsilon_1 + Upsilon_2` for an exponent pair.
pub fn upsilon_total<T: Real>(xi1: T, xi2: T, x: &[T], y: &[T]) -> Result<T, IneqError> {
    Ok(upsilon(1, xi1, x, y)? + upsilon(2, xi2, x, y)?)
}

/// Gap of `|Upsilon_1(x,y)| <= 2^{xi1} |x| |y|^{1-xi1}`.
pub fn upsilon1_bound_gap<T: Real>(xi1: T, x: &[T], y: &[T]) -> Result<T, IneqError> {
    let u = upsilon(1, xi1, x, y)?;
    let bound = pow_nonneg(real::<T>(2.0), xi1) * norm(x) * pow_nonneg(norm(y), T::one() - xi1);
    Ok(bound - u.abs())
}

/// Amplification constant `Delta(xi2) = 1 + max(1, -xi2 / 2^{xi2+1})`.
pub fn upsilon2_amplification<T: Real>(xi2: T) -> Result<T, IneqError> {
    if !(xi2 < T::zero()) {
        return precondition("xi2 must be negative");
    }
    let ratio = -xi2 / pow_nonneg(real::<T>(2.0), xi2 + T::one());
    Ok(T::one() + T::one().max(ratio))
}

/// Gap of `|Upsilon_2(x,y)| <= Delta(xi2) |x||y| (|x|^{-xi2} + |y|^{-xi2})`.
pub fn upsilon2_bound_gap<T: Real>(xi2: T, x: &[T], y: &[T]) -> Result<T, IneqError> {
    let u = upsilon(2, xi2, x, y)?;
    let delta = upsilon2_amplification(xi2)?;
    let (nx, ny) = (norm(x), norm(y));
    let bound = delta * nx * ny * (pow_nonneg(nx, -xi2) + pow_nonneg(ny, -xi2));
    Ok(bound - u.abs())
}

/// Class-K-infinity pair `(alpha_lower, alpha_upper)` supporting the
/// mixed-power split
/// `|x|^{p1}|y|^{p2} <= |x|^p/alpha_lower(q) + alpha_upper(q)|xy|^{p/2} +
/// |y|^p/alpha_lower(q)`.
///
/// Construction: the equal-exponent case uses `(2q, q/4)`; distinct
/// exponents add the weighted-AM-GM variant
/// `alpha_lower_2(q) = (p/dp) q^{p/dp}`, `alpha_upper_2(q) = (2 lo/p)
/// q^{p/(2 lo)}` with `dp = |p1 - p2|`, `lo = min(p1,p2)`, and the final
/// maps are the pointwise min of the lower maps and max of the upper maps.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AlphaPair<T> {
    pub p1: T,
    pub p2: T,
}

impl<T: Real> AlphaPair<T> {
    pub fn p(&self) -> T {
        self.p1 + self.p2
    }

    pub fn lower(&self, q: T) -> T {
        let two = real::<T>(2.0);
        let base = two * q;
        if self.p1 == self.p2 {
            return base;
        }
        let dp = (self.p1 - self.p2).abs();
        let p = self.p();
        let variant = (p / dp) * pow_nonneg(q, p / dp);
        base.min(variant)
    }

    pub fn upper(&self, q: T) -> T {
        let base = q / real::<T>(4.0);
        if self.p1 == self.p2 {
            return base;
        }
        let lo = self.p1.min(self.p2);
        let p = self.p();
        let two = real::<T>(2.0);
        let variant = (two * lo / p) * pow_nonneg(q, p / (two * lo));
        base.max(variant)
    }
}

/// Builds the alpha pair for positive exponents.
pub fn alpha_pair<T: Real>(p1: T, p2: T) -> Result<AlphaPair<T>, IneqError> {
    if !(p1 > T::zero() && p2 > T::zero()) {
        return precondition("alpha pair exponents must be positive");
    }
    Ok(AlphaPair { p1, p2 })
}

/// Single-term mixed-power split gap:
/// `|x|^p/alpha_lower(q) + alpha_upper(q)|xy|^{p/2} + |y|^p/alpha_lower(q)
///  - |x|^{p1}|y|^{p2}`.
pub fn mixed_power_split_gap<T: Real>(
    pair: &AlphaPair<T>,
    q: T,
    x: T,
    y: T,
) -> Result<T, IneqError> {
    if !(q > T::zero()) {
        return precondition("q must be positive");
    }
    let (ax, ay) = (x.abs(), y.abs());
    let p = pair.p();
    let left = pow_nonneg(ax, pair.p1) * pow_nonneg(ay, pair.p2);
    let right = pow_nonneg(ax, p) / pair.lower(q)
        + pair.upper(q) * pow_nonneg(ax * ay, p / real::<T>(2.0))
        + pow_nonneg(ay, p) / pair.lower(q);
    Ok(right - left)
}

/// Two-term variant with doubled right side, covering the symmetric reading
/// `|x|^{p1}|y|^{p2} + |x|^{p2}|y|^{p1} <= 2 * (three-term right side)`.
pub fn mixed_power_split_gap_doubled<T: Real>(
    pair: &AlphaPair<T>,
    q: T,
    x: T,
    y: T,
) -> Result<T, IneqError> {
    if !(q > T::zero()) {
        return precondition("q must be positive");
    }
    let (ax, ay) = (x.abs(), y.abs());
    let p = pair.p();
    let two = real::<T>(2.0);
    let left = pow_nonneg(ax, pair.p1) * pow_nonneg(ay, pair.p2)
        + pow_nonneg(ax, pair.p2) * pow_nonneg(ay, pair.p1);
    let right = two
        * (pow_nonneg(ax, p) / pair.lower(q)
            + pair.upper(q) * pow_nonneg(ax * ay, p / two)
            + pow_nonneg(ay, p) / pair.lower(q));
    Ok(right - left)
}

/// Lower-bound coefficients `r1, r2, r3` for the quadratic-certificate
/// tilde values: `r1 = 2^{xi1/2-1} lam^{1-xi1/2}`, `r2` likewise with `xi2`,
/// `r3 = 2^{(xi1+xi2)/4} lam^{1-(xi1+xi2)/4}`.
pub fn tilde_lower_coefficients<T: Real>(
    lambda_min: T,
    xi1: T,
    xi2: T,
) -> Result<(T, T, T), IneqError> {
    if !(lambda_min > T::zero()) {
        return precondition("lambda_min must be positive");
    }
    if !(xi1 > T::zero() && xi1 < T::one()) {
        return precondition("xi1 must lie in (0,1)");
    }
    if !(xi2 < T::zero()) {
        return precondition("xi2 must be negative");
    }
    let one = T::one();
    let two = real::<T>(2.0);
    let four = real::<T>(4.0);
    let r1 = pow_nonneg(two, xi1 / two - one) * pow_nonneg(lambda_min, one - xi1 / two);
    let r2 = pow_nonneg(two, xi2 / two - one) * pow_nonneg(lambda_min, one - xi2 / two);
    let r3 = pow_nonneg(two, (xi1 + xi2) / four) * pow_nonneg(lambda_min, one - (xi1 + xi2) / four);
    Ok((r1, r2, r3))
}

/// The three tilde lower-bound gaps at the extremal quadratic certificate
/// `V = lam |x|^2 / 2`, `W = lam |y|^2 / 2` (the binding case for any
/// quadratic form with smallest eigenvalue `lam`):
///
/// 1. `tilde(V)^2  - (r1 |x|^{2-xi1} + r2 |x|^{2-xi2} + r3 |x|^{2-(xi1+xi2)/2})`
/// 2. the same in `|y|` for `tilde(W)^2`
/// 3. `tilde(V) tilde(W)` against its mixed-power lower sum.
pub fn tilde_quadratic_lower_gaps<T: Real>(
    lambda_min: T,
    xi1: T,
    xi2: T,
    x: &[T],
    y: &[T],
) -> Result<[T; 3], IneqError> {
    let (r1, r2, r3) = tilde_lower_coefficients(lambda_min, xi1, xi2)?;
    let one = T::one();
    let two = real::<T>(2.0);
    let (a1, a2) = (one - xi1 / two, one - xi2 / two);
    let (nx, ny) = (norm(x), norm(y));
    let v = lambda_min * nx * nx / two;
    let w = lambda_min * ny * ny / two;
    let tilde = |val: T| pow_nonneg(val, a1 / two) + pow_nonneg(val, a2 / two);
    let (tv, tw) = (tilde(v), tilde(w));

    let lower_sq = |n: T| {
        r1 * pow_nonneg(n, two - xi1)
            + r2 * pow_nonneg(n, two - xi2)
            + r3 * pow_nonneg(n, two - (xi1 + xi2) / two)
    };
    let g1 = tv * tv - lower_sq(nx);
    let g2 = tw * tw - lower_sq(ny);

    let e1 = one - xi1 / two;
    let e2 = one - xi2 / two;
    let cross = r1 * pow_nonneg(nx, e1) * pow_nonneg(ny, e1)
        + r2 * pow_nonneg(nx, e2) * pow_nonneg(ny, e2)
        + r3 / two
            * (pow_nonneg(nx, e1) * pow_nonneg(ny, e2) + pow_nonneg(nx, e2) * pow_nonneg(ny, e1));
    let g3 = tv * tw - cross;
    Ok([g1, g2, g3])
}

/// Signed power `|x|^nu sign(x)` with validated exponent.
pub fn signed_power<T: Real>(x: T, nu: T) -> Result<T, IneqError> {
    if !(nu > T::zero()) {
        return precondition("signed power exponent must be positive");
    }
    Ok(signed_power_unchecked(x, nu))
}

/// Gap of the scalar shift bound
/// `x (sp(x, xi) - sp(y + x, xi)) <= 2 |x| |y|^xi` for `xi` in (0,1).
pub fn signed_power_shift_gap<T: Real>(xi: T, x: T, y: T) -> Result<T, IneqError> {
    if !(xi > T::zero() && xi < T::one()) {
        return precondition("shift-bound exponent must lie in (0,1)");
    }
    let lhs = x * (signed_power_unchecked(x, xi) - signed_power_unchecked(y + x, xi));
    let rhs = real::<T>(2.0) * x.abs() * pow_nonneg(y.abs(), xi);
    Ok(rhs - lhs)
}
