//! Randomized pointwise oracles for the benchmark certificates: the decay
//! assumptions, the interconnection bounds, the composite Lie derivative,
//! and the coordinate-consistency invariants of the models.

use fxtsp::certify::{
    boundary_decrease_gap, composite_lie_derivative, composite_value, interconnection_bound_gap,
    reduced_decrease_gap, tilde_value,
};
use fxtsp::linalg::norm;
use fxtsp::real::pow_nonneg;
use fxtsp::sampling;
use fxtsp::{gradflow, highorder};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = sampling::DEFAULT_SEED;

fn gradflow_setup() -> (
    gradflow::GradFlowParams<f64>,
    fxtsp::SystemModel<f64>,
    fxtsp::PowerLawCertificate<f64>,
    fxtsp::BoundaryCertificate<f64>,
) {
    let params = gradflow::GradFlowParams::reference();
    let model = gradflow::build_system(&params).unwrap();
    let rc = gradflow::reduced_certificate(&params).unwrap();
    let bc = gradflow::boundary_certificate(&params).unwrap();
    (params, model, rc, bc)
}

fn highorder_setup() -> (
    highorder::HighOrderParams<f64>,
    fxtsp::SystemModel<f64>,
    fxtsp::PowerLawCertificate<f64>,
    fxtsp::BoundaryCertificate<f64>,
) {
    let params = highorder::HighOrderParams::reference();
    let model = highorder::build_system(&params).unwrap();
    let (rc, bc) = highorder::certificates(&params).unwrap();
    (params, model, rc, bc)
}

fn sample_state(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    (
        sampling::log_uniform_vector(rng, n, 1e-6, 1e6),
        sampling::log_uniform_vector(rng, m, 1e-6, 1e6),
    )
}

#[test]
fn quasi_steady_state_roots_both_benchmarks() {
    let (_, gf, _, _) = gradflow_setup();
    let (_, ho, _, _) = highorder_setup();
    let mut rng = sampling::substream(SEED, 100);
    for _ in 0..10_000 {
        let x2: Vec<f64> = sampling::log_uniform_vector(&mut rng, 2, 1e-6, 1e6);
        let bound = 1e-9 * (1.0 + norm(&x2).powi(3));
        let g = gf.boundary_layer_field(&x2, &[0.0, 0.0]).unwrap();
        assert!(norm(&g) <= bound);
        let g = ho.boundary_layer_field(&x2, &[0.0]).unwrap();
        assert!(norm(&g) <= bound);
        // The comparison bound |h(x)| <= zeta(|x|) holds with the identity.
        for model in [&gf, &ho] {
            let h = model.quasi_steady_state(&x2).unwrap();
            assert!(norm(&h) <= model.comparison_bound().eval(norm(&x2)) + 1e-12);
        }
    }
}

#[test]
fn shifted_field_consistent_with_full_field() {
    // Shifted coordinates at y = z - h(x) must reproduce the full field
    // after the change of variables, to relative tolerance 1e-12.
    let (_, gf, _, _) = gradflow_setup();
    let (_, ho, _, _) = highorder_setup();
    let mut rng = sampling::substream(SEED, 101);
    for _ in 0..2_000 {
        for (model, m) in [(&gf, 2usize), (&ho, 1usize)] {
            // One magnitude for the whole state: the change of variables is
            // exact only up to rounding at the state scale, and mixing
            // scales would just measure that representation error.
            let mag: f64 = sampling::log_uniform(&mut rng, 1e-6, 1e6);
            let x: Vec<f64> = sampling::unit_vector(&mut rng, 2)
                .into_iter()
                .map(|d: f64| d * mag)
                .collect();
            let z: Vec<f64> = sampling::unit_vector(&mut rng, m)
                .into_iter()
                .map(|d: f64| d * mag)
                .collect();
            let eps = sampling::log_uniform(&mut rng, 1e-4, 1.0);
            let y = model.fast_deviation(&x, &z).unwrap();
            let (fs, ys) = model.shifted_field(eps, &x, &y).unwrap();
            let (ff, zf) = model.full_field(eps, &x, &z).unwrap();
            let dh = model.quasi_steady_state_jacobian(&x).unwrap();
            // Components may vanish by cancellation; compare at the
            // field-vector scale with an ulp-level allowance for the state
            // magnitude flowing through the cubic terms.
            let float_floor = 1e-13 * (1.0 + mag + mag.powi(3));
            let slow_tol = 1e-12 * norm(&ff).max(norm(&fs)) + float_floor;
            for i in 0..2 {
                assert!(
                    (fs[i] - ff[i]).abs() <= slow_tol,
                    "slow mismatch {} vs {}",
                    fs[i],
                    ff[i]
                );
            }
            // y' = z' - dh x'.
            let drift: Vec<f64> = dh
                .iter()
                .map(|row| row.iter().zip(&ff).map(|(&d, &f)| d * f).sum())
                .collect();
            let fast_scale = norm(&ys).max(norm(&zf)).max(norm(&drift));
            let fast_tol = 1e-10 * fast_scale + float_floor * (1.0 + 1.0 / eps);
            for j in 0..m {
                let expect = zf[j] - drift[j];
                assert!(
                    (ys[j] - expect).abs() <= fast_tol,
                    "fast mismatch {} vs {}",
                    ys[j],
                    expect
                );
            }
        }
    }
}

#[test]
fn full_field_continuous_at_origin() {
    let (_, gf, _, _) = gradflow_setup();
    let (_, ho, _, _) = highorder_setup();
    let mut rng = sampling::substream(SEED, 102);
    for _ in 0..50 {
        for (model, m) in [(&gf, 2usize), (&ho, 1usize)] {
            let dir: Vec<f64> = sampling::unit_vector(&mut rng, 2 + m);
            let mut prev = f64::INFINITY;
            for k in 1..=12 {
                let s = 10f64.powi(-k);
                let state: Vec<f64> = dir.iter().map(|d| d * s).collect();
                let (f, g) = model.full_field(1.0, &state[..2], &state[2..]).unwrap();
                let mag = (norm(&f).powi(2) + norm(&g).powi(2)).sqrt();
                assert!(mag <= prev + 1e-12, "field must shrink along the ray");
                prev = mag;
            }
            // Slowest vanishing term is |y|^{1/4}: at |state| = 1e-12 the
            // field is at most ~1e-3.
            assert!(prev <= 1e-2);
        }
    }
}

#[test]
fn gradflow_decay_assumptions_pointwise() {
    let (_, model, rc, bc) = gradflow_setup();
    let mut rng = sampling::substream(SEED, 103);
    for _ in 0..10_000 {
        let (x, y) = sample_state(&mut rng, 2, 2);
        let (gap, scale) = reduced_decrease_gap(&model, &rc, &x).unwrap();
        assert!(
            gap >= -1e-9 * scale,
            "reduced decay violated at {x:?}: {gap}"
        );
        let (gap, scale) = boundary_decrease_gap(&model, &bc, &x, &y).unwrap();
        assert!(
            gap >= -1e-9 * scale,
            "boundary decay violated at {y:?}: {gap}"
        );
    }
}

#[test]
fn highorder_decay_assumptions_pointwise() {
    let (_, model, rc, bc) = highorder_setup();
    let mut rng = sampling::substream(SEED, 104);
    for _ in 0..10_000 {
        let (x, y) = sample_state(&mut rng, 2, 1);
        let (gap, scale) = reduced_decrease_gap(&model, &rc, &x).unwrap();
        assert!(
            gap >= -1e-9 * scale,
            "reduced decay violated at {x:?}: {gap}"
        );
        let (gap, scale) = boundary_decrease_gap(&model, &bc, &x, &y).unwrap();
        assert!(
            gap >= -1e-9 * scale,
            "boundary decay violated at {y:?}: {gap}"
        );
    }
}

#[test]
fn gradflow_interconnection_bounds_pointwise() {
    // The residual closed forms must sit below the quadratic forms for both
    // the published q = 3000 and the grid-chosen one.
    let (params, _, rc, bc) = gradflow_setup();
    let rcc = rc.constants;
    let bcc = bc.constants;
    for q in [Some(3000.0), None] {
        let derived = gradflow::interconnection_derivation(&params, 0.1).unwrap();
        let q = q.unwrap_or_else(|| {
            gradflow::choose_q(derived.eta, gradflow::benchmark_alpha_lower::<f64>)
        });
        let bounds = gradflow::interconnection_bounds(&params, 0.1, q).unwrap();
        let mut rng = sampling::substream(SEED, 105);
        for _ in 0..10_000 {
            let x: Vec<f64> = sampling::log_uniform_vector(&mut rng, 2, 1e-6, 1e6);
            let y: Vec<f64> = sampling::log_uniform_vector(&mut rng, 2, 1e-6, 1e6);
            let tv = tilde_value((rc.v)(&x), rcc.a1, rcc.a2).unwrap();
            let tw = tilde_value((bc.w)(&x, &y), bcc.b1, bcc.b2).unwrap();
            let i1 = gradflow::i1_closed_form(&params, &x, &y);
            let g1 = interconnection_bound_gap(bounds.chi1, bounds.delta1, bounds.c1, tv, tw, i1);
            let s1 =
                i1.abs() + bounds.chi1 * tv * tw + bounds.delta1 * tv * tv + bounds.c1 * tw * tw;
            assert!(
                g1 >= -1e-9 * s1,
                "I1 bound violated: gap {g1} at x={x:?} y={y:?}"
            );
            let i2 = gradflow::i2_closed_form(&params, &x, &y);
            let g2 = interconnection_bound_gap(bounds.chi2, bounds.delta2, bounds.c2, tv, tw, i2);
            let s2 =
                i2.abs() + bounds.chi2 * tv * tw + bounds.delta2 * tv * tv + bounds.c2 * tw * tw;
            assert!(
                g2 >= -1e-9 * s2,
                "I2 bound violated: gap {g2} at x={x:?} y={y:?}"
            );
        }
    }
}

#[test]
fn highorder_interconnection_bounds_pointwise() {
    let (params, _, rc, bc) = highorder_setup();
    let rcc = rc.constants;
    let bcc = bc.constants;
    let bounds = highorder::interconnection_bounds(&params).unwrap();
    let mut rng = sampling::substream(SEED, 106);
    for _ in 0..10_000 {
        let x: Vec<f64> = sampling::log_uniform_vector(&mut rng, 2, 1e-6, 1e6);
        let y: f64 = sampling::log_uniform_signed(&mut rng, 1e-6, 1e6);
        let tv = tilde_value((rc.v)(&x), rcc.a1, rcc.a2).unwrap();
        let tw = tilde_value((bc.w)(&x, &[y]), bcc.b1, bcc.b2).unwrap();
        let i1 = highorder::i1_closed_form(&params, &x, y);
        let g1 = interconnection_bound_gap(bounds.chi1, bounds.delta1, bounds.c1, tv, tw, i1);
        let s1 = i1.abs() + bounds.chi1 * tv * tw + bounds.delta1 * tv * tv + bounds.c1 * tw * tw;
        assert!(g1 >= -1e-9 * s1, "I1 bound violated at x={x:?} y={y}");
        let i2 = highorder::i2_closed_form(&params, &x, y);
        let g2 = interconnection_bound_gap(bounds.chi2, bounds.delta2, bounds.c2, tv, tw, i2);
        let s2 = i2.abs() + bounds.chi2 * tv * tw + bounds.delta2 * tv * tv + bounds.c2 * tw * tw;
        assert!(g2 >= -1e-9 * s2, "I2 bound violated at x={x:?} y={y}");
    }
}

#[test]
fn highorder_elementary_chain_pointwise() {
    // I1 <= |y||x1| + 2|x2||y|^{xi1} + |y|^3 |x2| + 3|y||x2|^3, and the
    // cross bound |y||x1| <= 4 tw tv.
    let (params, _, rc, bc) = highorder_setup();
    let rcc = rc.constants;
    let bcc = bc.constants;
    let mut rng = sampling::substream(SEED, 107);
    for _ in 0..10_000 {
        let x: Vec<f64> = sampling::log_uniform_vector(&mut rng, 2, 1e-6, 1e6);
        let y: f64 = sampling::log_uniform_signed(&mut rng, 1e-6, 1e6);
        let i1 = highorder::i1_closed_form(&params, &x, y);
        let chain = highorder::i1_chain_bound(&params, &x, y);
        assert!(
            i1 <= chain + 1e-9 * (i1.abs() + chain),
            "chain bound violated at x={x:?} y={y}"
        );
        let tv = tilde_value((rc.v)(&x), rcc.a1, rcc.a2).unwrap();
        let tw = tilde_value((bc.w)(&x, &[y]), bcc.b1, bcc.b2).unwrap();
        let lhs = y.abs() * x[0].abs();
        assert!(lhs <= 4.0 * tw * tv * (1.0 + 1e-12));
    }
}

#[test]
fn composite_lie_derivative_matches_finite_differences() {
    // Forward difference along the shifted flow, at eps where the flow is
    // well conditioned for differencing.
    let (_, gf, grc, gbc) = gradflow_setup();
    let (_, ho, hrc, hbc) = highorder_setup();
    let delta = 1e-7;
    let mut rng = sampling::substream(SEED, 108);
    for _ in 0..2_000 {
        for (model, rc, bc, m) in [(&gf, &grc, &gbc, 2usize), (&ho, &hrc, &hbc, 1usize)] {
            let theta = 0.3 + 0.4 * rand::RngExt::random::<f64>(&mut rng);
            // Forward differencing needs a well-conditioned flow: moderate
            // states and no time-scale separation, so the quadratic
            // remainder delta/2 |flow|^2 stays below the tolerance even
            // when the derivative itself is near zero.
            let eps = 1.0;
            let x: Vec<f64> = sampling::log_uniform_vector(&mut rng, 2, 0.05, 0.4);
            let y: Vec<f64> = sampling::log_uniform_vector(&mut rng, m, 0.05, 0.4);
            let analytic = composite_lie_derivative(model, rc, bc, theta, eps, &x, &y).unwrap();
            let (fx, fy) = model.shifted_field(eps, &x, &y).unwrap();
            let xp: Vec<f64> = x.iter().zip(&fx).map(|(&v, &d)| v + delta * d).collect();
            let yp: Vec<f64> = y.iter().zip(&fy).map(|(&v, &d)| v + delta * d).collect();
            let psi = |xs: &[f64], ys: &[f64]| {
                composite_value(theta, (rc.v)(xs), (bc.w)(xs, ys)).unwrap()
            };
            let fd = (psi(&xp, &yp) - psi(&x, &y)) / delta;
            assert!(
                (analytic - fd).abs() <= 1e-4 * (1.0 + analytic.abs()),
                "lie derivative mismatch: analytic {analytic}, fd {fd}"
            );
        }
    }
}

#[test]
fn composite_lie_derivative_zero_at_origin() {
    let (_, model, rc, bc) = gradflow_setup();
    let v =
        composite_lie_derivative(&model, &rc, &bc, 0.5, 0.01, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
    assert_eq!(v, 0.0);
}

#[test]
fn gradflow_assumption_sandwich_spot_checks() {
    // Quadratic sandwich from the symmetric-part extremes.
    let (_, _, rc, _) = gradflow_setup();
    let sandwich = rc.sandwich.unwrap();
    let mut rng = sampling::substream(SEED, 109);
    for _ in 0..2_000 {
        let x: Vec<f64> = sampling::log_uniform_vector(&mut rng, 2, 1e-6, 1e6);
        let v = (rc.v)(&x);
        let n2 = norm(&x).powi(2);
        assert!(v >= sandwich.lower * n2 * (1.0 - 1e-12));
        assert!(v <= sandwich.upper * n2 * (1.0 + 1e-12));
        assert!(v > 0.0);
    }
    assert_eq!((rc.v)(&[0.0, 0.0]), 0.0);
}

#[test]
fn tilde_scaling_against_brute_force_powers() {
    // tilde_value is the plain two-power sum; cross-check against direct
    // exponentiation on a log grid.
    for k in -6..=6 {
        let v = 10f64.powi(k);
        let direct = v.powf(5.0 / 12.0) + v.powf(2.0 / 3.0);
        let tv = tilde_value(v, 5.0 / 6.0, 4.0 / 3.0).unwrap();
        assert!((tv - direct).abs() <= 1e-12 * direct.max(1.0));
        let _ = pow_nonneg(v, 0.5);
    }
}

#[test]
fn gradflow_shifted_fast_part_is_boundary_layer_minus_slow() {
    // With h(x) = x the Jacobian is the identity, so the shifted fast part
    // collapses to g_bl(x, y)/eps - f(x, y + x).
    let (_, model, _, _) = gradflow_setup();
    let mut rng = sampling::substream(SEED, 110);
    for _ in 0..500 {
        let x: Vec<f64> = sampling::log_uniform_vector(&mut rng, 2, 1e-3, 1e3);
        let y: Vec<f64> = sampling::log_uniform_vector(&mut rng, 2, 1e-3, 1e3);
        let eps = 0.25;
        let (slow, fast) = model.shifted_field(eps, &x, &y).unwrap();
        let bl = model.boundary_layer_field(&x, &y).unwrap();
        for j in 0..2 {
            let expect = bl[j] / eps - slow[j];
            let scale = fast[j].abs().max(expect.abs()).max(1e-300);
            assert!((fast[j] - expect).abs() <= 1e-12 * scale);
        }
    }
}
