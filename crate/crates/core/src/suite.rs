//! Randomized stress suite for the inequality oracles.
//!
//! Every gap operation is exercised on seeded samples with log-uniform
//! magnitudes in `[1e-6, 1e6]` and dimensions 1..=8 under one contract:
//! `gap >= -1e-9 * scale`, where `scale` is the combined magnitude of both
//! sides. Violations are reported with the witness sample. Each sample draws
//! its own ChaCha substream from `(seed, lemma, index)`, so sharding across
//! workers cannot change the results.

use crate::ineq::{
    self, alpha_pair, karamata_gap, middle_power_gap, mixed_power_split_gap,
    mixed_power_split_gap_doubled, signed_power_shift_gap, tilde_quadratic_lower_gaps,
    upsilon1_bound_gap, upsilon2_amplification, upsilon2_bound_gap, weighted_amgm_gap,
};
use crate::linalg::norm;
use crate::real::{approx_f64, pow_nonneg, real, Real};
use crate::sampling;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

/// Relative slack of the nonnegativity contract.
pub const GAP_REL_SLACK: f64 = 1e-9;

/// Per-lemma stress report.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub samples: u64,
    pub violations: u64,
    /// Most negative normalized gap (gap / scale) seen.
    pub worst_gap: f64,
    /// Sample achieving `worst_gap`.
    pub witness: Option<Value>,
}

struct Outcome {
    gap: f64,
    scale: f64,
    witness: Value,
}

fn run_lemma<F>(name: &str, samples: u64, seed: u64, lemma_idx: u64, mut draw: F) -> LemmaReport
where
    F: FnMut(&mut ChaCha8Rng) -> Outcome,
{
    let mut violations = 0;
    let mut worst_gap = f64::INFINITY;
    let mut witness = None;
    for i in 0..samples {
        let mut rng =
            sampling::substream(seed ^ (lemma_idx.wrapping_mul(0x9E37_79B9_7F4A_7C15)), i);
        let out = draw(&mut rng);
        let scale = out.scale.max(f64::MIN_POSITIVE);
        let normalized = out.gap / scale;
        if out.gap < -GAP_REL_SLACK * out.scale {
            violations += 1;
        }
        if normalized < worst_gap {
            worst_gap = normalized;
            witness = Some(out.witness);
        }
    }
    LemmaReport {
        lemma: name.into(),
        samples,
        violations,
        worst_gap: if samples == 0 { 0.0 } else { worst_gap },
        witness,
    }
}

fn vec_f64<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|&x| approx_f64(x)).collect()
}

/// Runs the full randomized suite.
pub fn run_inequality_suite<T: Real>(samples: u64, seed: u64) -> Vec<LemmaReport> {
    let mut reports = Vec::new();

    reports.push(run_lemma("karamata", samples, seed, 1, |rng| {
        let dim = sampling::dimension(rng, 8);
        let (a, b): (Vec<T>, Vec<T>) = sampling::majorizing_pair(rng, dim);
        let p: T = real(rng.random_range(0.1..4.0));
        let gap = karamata_gap(p, &a, &b).expect("generated majorizing pair");
        let scale: T = a.iter().chain(&b).map(|&v| pow_nonneg(v, p)).sum();
        Outcome {
            gap: approx_f64(gap),
            scale: approx_f64(scale),
            witness: json!({"p": approx_f64(p), "a": vec_f64(&a), "b": vec_f64(&b)}),
        }
    }));

    reports.push(run_lemma("middle_power", samples, seed, 2, |rng| {
        let x: T = sampling::log_uniform(rng, 1e-6, 1e6);
        let a_low: T = real(rng.random_range(0.05..3.0));
        let a: T = a_low + real(rng.random_range(1e-3..1.0));
        let a_high: T = a + real(rng.random_range(1e-3..1.0));
        let gap = middle_power_gap(x, a, a_low, a_high).expect("ordered exponents");
        let scale = pow_nonneg(x, a_low) + pow_nonneg(x, a_high) + pow_nonneg(x, a);
        Outcome {
            gap: approx_f64(gap),
            scale: approx_f64(scale),
            witness: json!({
                "x": approx_f64(x), "a": approx_f64(a),
                "a_low": approx_f64(a_low), "a_high": approx_f64(a_high)
            }),
        }
    }));

    reports.push(run_lemma("weighted_am_gm", samples, seed, 3, |rng| {
        let n = sampling::dimension(rng, 8);
        let w: Vec<T> = (0..n)
            .map(|_| sampling::log_uniform(rng, 1e-2, 1e2))
            .collect();
        let x: Vec<T> = (0..n)
            .map(|_| sampling::log_uniform(rng, 1e-6, 1e6))
            .collect();
        let gap = weighted_amgm_gap(&w, &x).expect("positive weights");
        let arith: T =
            w.iter().zip(&x).map(|(&wi, &xi)| wi * xi).sum::<T>() / w.iter().copied().sum::<T>();
        Outcome {
            gap: approx_f64(gap),
            scale: approx_f64(arith + arith),
            witness: json!({"w": vec_f64(&w), "x": vec_f64(&x)}),
        }
    }));

    reports.push(run_lemma("upsilon1_bound", samples, seed, 5, |rng| {
        let dim = sampling::dimension(rng, 8);
        let xi1: T = real(rng.random_range(0.02..0.98));
        let x: Vec<T> = sampling::log_uniform_vector(rng, dim, 1e-6, 1e6);
        let y: Vec<T> = sampling::log_uniform_vector(rng, dim, 1e-6, 1e6);
        let gap = upsilon1_bound_gap(xi1, &x, &y).expect("valid exponent");
        let bound =
            pow_nonneg(real::<T>(2.0), xi1) * norm(&x) * pow_nonneg(norm(&y), T::one() - xi1);
        Outcome {
            gap: approx_f64(gap),
            scale: approx_f64(bound + bound),
            witness: json!({"xi1": approx_f64(xi1), "x": vec_f64(&x), "y": vec_f64(&y)}),
        }
    }));

    reports.push(run_lemma("upsilon2_bound", samples, seed, 6, |rng| {
        let dim = sampling::dimension(rng, 8);
        let xi2: T = real(-rng.random_range(0.02..2.5));
        let x: Vec<T> = sampling::log_uniform_vector(rng, dim, 1e-6, 1e6);
        let y: Vec<T> = sampling::log_uniform_vector(rng, dim, 1e-6, 1e6);
        let gap = upsilon2_bound_gap(xi2, &x, &y).expect("valid exponent");
        let delta = upsilon2_amplification(xi2).expect("negative exponent");
        let (nx, ny) = (norm(&x), norm(&y));
        let bound = delta * nx * ny * (pow_nonneg(nx, -xi2) + pow_nonneg(ny, -xi2));
        Outcome {
            gap: approx_f64(gap),
            scale: approx_f64(bound + bound),
            witness: json!({"xi2": approx_f64(xi2), "x": vec_f64(&x), "y": vec_f64(&y)}),
        }
    }));

    reports.push(run_lemma(
        "mixed_power_split_single",
        samples,
        seed,
        7,
        |rng| {
            let p1: T = real(rng.random_range(0.1..3.5));
            let p2: T = if rng.random_range(0..8) == 0 {
                p1
            } else {
                real(rng.random_range(0.1..3.5))
            };
            let pair = alpha_pair(p1, p2).expect("positive exponents");
            let q: T = sampling::log_uniform(rng, 1e-3, 1e3);
            let x: T = sampling::log_uniform_signed(rng, 1e-6, 1e6);
            let y: T = sampling::log_uniform_signed(rng, 1e-6, 1e6);
            let gap = mixed_power_split_gap(&pair, q, x, y).expect("positive q");
            let left = pow_nonneg(x.abs(), p1) * pow_nonneg(y.abs(), p2);
            Outcome {
                gap: approx_f64(gap),
                scale: approx_f64(gap + left + left),
                witness: json!({
                    "p1": approx_f64(p1), "p2": approx_f64(p2), "q": approx_f64(q),
                    "x": approx_f64(x), "y": approx_f64(y)
                }),
            }
        },
    ));

    reports.push(run_lemma(
        "mixed_power_split_doubled",
        samples,
        seed,
        8,
        |rng| {
            let p1: T = real(rng.random_range(0.1..3.5));
            let p2: T = if rng.random_range(0..8) == 0 {
                p1
            } else {
                real(rng.random_range(0.1..3.5))
            };
            let pair = alpha_pair(p1, p2).expect("positive exponents");
            let q: T = sampling::log_uniform(rng, 1e-3, 1e3);
            let x: T = sampling::log_uniform_signed(rng, 1e-6, 1e6);
            let y: T = sampling::log_uniform_signed(rng, 1e-6, 1e6);
            let gap = mixed_power_split_gap_doubled(&pair, q, x, y).expect("positive q");
            let left = pow_nonneg(x.abs(), p1) * pow_nonneg(y.abs(), p2)
                + pow_nonneg(x.abs(), p2) * pow_nonneg(y.abs(), p1);
            Outcome {
                gap: approx_f64(gap),
                scale: approx_f64(gap + left + left),
                witness: json!({
                    "p1": approx_f64(p1), "p2": approx_f64(p2), "q": approx_f64(q),
                    "x": approx_f64(x), "y": approx_f64(y)
                }),
            }
        },
    ));

    reports.push(run_lemma(
        "tilde_quadratic_lower",
        samples,
        seed,
        9,
        |rng| {
            let lambda: T = sampling::log_uniform(rng, 1e-3, 1e3);
            let xi1: T = real(rng.random_range(0.02..0.98));
            let xi2: T = real(-rng.random_range(0.05..2.5));
            let dim = sampling::dimension(rng, 8);
            let x: Vec<T> = sampling::log_uniform_vector(rng, dim, 1e-6, 1e6);
            let y: Vec<T> = sampling::log_uniform_vector(rng, dim, 1e-6, 1e6);
            let gaps =
                tilde_quadratic_lower_gaps(lambda, xi1, xi2, &x, &y).expect("valid exponents");
            // All three must be nonnegative; track the most negative one
            // against the corresponding tilde magnitude.
            let one = T::one();
            let two = real::<T>(2.0);
            let (a1, a2) = (one - xi1 / two, one - xi2 / two);
            let tilde = |n: T| {
                let v = lambda * n * n / two;
                pow_nonneg(v, a1 / two) + pow_nonneg(v, a2 / two)
            };
            let (tv, tw) = (tilde(norm(&x)), tilde(norm(&y)));
            let scales = [tv * tv * two, tw * tw * two, tv * tw * two];
            let mut gap = T::infinity();
            let mut scale = one;
            for (g, s) in gaps.iter().zip(scales) {
                let norm_g = *g / s.max(T::min_positive_value());
                if norm_g < gap / scale.max(T::min_positive_value()) {
                    gap = *g;
                    scale = s;
                }
            }
            Outcome {
                gap: approx_f64(gap),
                scale: approx_f64(scale),
                witness: json!({
                    "lambda_min": approx_f64(lambda), "xi1": approx_f64(xi1),
                    "xi2": approx_f64(xi2), "x": vec_f64(&x), "y": vec_f64(&y)
                }),
            }
        },
    ));

    reports.push(run_lemma("signed_power_shift", samples, seed, 10, |rng| {
        let xi: T = real(rng.random_range(0.02..0.98));
        let x: T = sampling::log_uniform_signed(rng, 1e-6, 1e6);
        let y: T = sampling::log_uniform_signed(rng, 1e-6, 1e6);
        let gap = signed_power_shift_gap(xi, x, y).expect("valid exponent");
        let rhs = real::<T>(2.0) * x.abs() * pow_nonneg(y.abs(), xi);
        Outcome {
            gap: approx_f64(gap),
            scale: approx_f64(rhs + rhs),
            witness: json!({
                "xi": approx_f64(xi), "x": approx_f64(x), "y": approx_f64(y)
            }),
        }
    }));

    reports
}

/// Searches the seeded sample stream for inputs where the two residual
/// bounds are within 20% of the bounding side, confirming they are
/// exercised rather than vacuous. Returns `(found_for_upsilon1,
/// found_for_upsilon2)`.
pub fn upsilon_bounds_exercised<T: Real>(samples: u64, seed: u64) -> (bool, bool) {
    let mut found = (false, false);
    for i in 0..samples {
        let mut rng = sampling::substream(seed ^ 0x7157_0000, i);
        let dim = sampling::dimension(&mut rng, 8);
        let xi1: T = real(rng.random_range(0.02..0.98));
        let xi2: T = real(-rng.random_range(0.02..2.5));
        let x: Vec<T> = sampling::log_uniform_vector(&mut rng, dim, 1e-6, 1e6);
        let y: Vec<T> = sampling::log_uniform_vector(&mut rng, dim, 1e-6, 1e6);
        if !found.0 {
            let bound =
                pow_nonneg(real::<T>(2.0), xi1) * norm(&x) * pow_nonneg(norm(&y), T::one() - xi1);
            let gap = upsilon1_bound_gap(xi1, &x, &y).expect("valid");
            if gap < real::<T>(0.2) * bound {
                found.0 = true;
            }
        }
        if !found.1 {
            let delta = upsilon2_amplification(xi2).expect("valid");
            let (nx, ny) = (norm(&x), norm(&y));
            let bound = delta * nx * ny * (pow_nonneg(nx, -xi2) + pow_nonneg(ny, -xi2));
            let gap = upsilon2_bound_gap(xi2, &x, &y).expect("valid");
            if gap < real::<T>(0.2) * bound {
                found.1 = true;
            }
        }
        if found.0 && found.1 {
            break;
        }
    }
    found
}

/// Convenience: true when no lemma reported violations.
pub fn all_clean(reports: &[LemmaReport]) -> bool {
    reports.iter().all(|r| r.violations == 0)
}

/// The lemma that ties the Karamata step to the composite argument:
/// `(v + w, 0)` majorizes `(max(v,w), min(v,w))` for nonnegative values.
pub fn composite_majorization_holds<T: Real>(v: T, w: T) -> bool {
    ineq::majorizes(&[v + w, T::zero()], &[v.max(w), v.min(w)]).unwrap_or(false)
}
