//! `fxtsp` - certify, simulate, and stress-test fixed-time stable
//! two-time-scale systems.
//!
//! Exit codes: 0 success, 1 malformed configuration, 2 certificate
//! infeasibility, 3 integration failure, 4 oracle violations.

mod config;

use clap::{Args, Parser, Subcommand};
use config::{merge, CertificateInput, CustomSystem, Effective, FileConfig, FlagLayer};
use fxtsp::certify::{certify, CertifyError, CompositeCertificate};
use fxtsp::gradflow::{self, BenchError, GradFlowParams};
use fxtsp::highorder::{self, HighOrderParams};
use fxtsp::sampling;
use fxtsp::sim::{
    annotate_trajectory, decrease_rate_over_states, integrate, monitor_lyapunov, sweep,
    write_sweep_csv, write_trajectory_csv, MonitorMode, SimError, SweepTarget,
};
use fxtsp::suite::run_inequality_suite;
use fxtsp::{BoundaryCertificate, CertificateRecord, PowerLawCertificate, SystemModel};
use serde_json::json;

#[derive(Parser)]
#[command(name = "fxtsp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// System: `gradflow`, `highorder`, `custom` (with a JSON path), or a
    /// JSON path directly.
    #[arg(long)]
    system: Option<String>,
    /// Path to a custom system description (used with `--system custom`).
    system_path: Option<String>,
    /// Run-configuration JSON file (flags override file values).
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    /// Comma-separated list of initial-condition magnitudes.
    #[arg(long, value_delimiter = ',')]
    magnitudes: Option<Vec<f64>>,
    /// Check the certified decrease rate at random states instead of
    /// trajectory monotonicity (monitor).
    #[arg(long)]
    rate_mode: bool,
    /// Output path (CSV for simulate/sweep, JSON otherwise).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the composite certificate and emit its JSON record.
    Certify(Common),
    /// Integrate the system and emit a trajectory CSV plus a summary.
    Simulate(Common),
    /// Settling-time sweep over initial-condition magnitudes.
    Sweep(Common),
    /// Randomized stress suite for the inequality oracles.
    CheckInequalities(Common),
    /// Lyapunov monitoring along a trajectory or at random states.
    Monitor(Common),
    /// Recompute the benchmark reference chain and compare against the
    /// published values.
    Reproduce(Common),
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn infeasible(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn integration(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<CertifyError> for Failure {
    fn from(e: CertifyError) -> Self {
        match e {
            CertifyError::Infeasible(_) => Failure::infeasible(e.to_string()),
            _ => Failure::config(e.to_string()),
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::InfeasibleGain { .. } | BenchError::InadmissibleQ { .. } => {
                Failure::infeasible(e.to_string())
            }
            BenchError::Integration(_) => Failure::integration(e.to_string()),
            BenchError::Certify(inner) => inner.into(),
            _ => Failure::config(e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) => Failure::config(e.to_string()),
            _ => Failure::integration(e.to_string()),
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Certify(c) => cmd_certify(&effective(&c)?),
        Command::Simulate(c) => cmd_simulate(&effective(&c)?),
        Command::Sweep(c) => cmd_sweep(&effective(&c)?),
        Command::CheckInequalities(c) => cmd_check(&effective(&c)?),
        Command::Monitor(c) => cmd_monitor(&effective(&c)?),
        Command::Reproduce(c) => cmd_reproduce(&effective(&c)?),
    }
}

struct Resolved {
    effective: Effective,
    system_path: Option<String>,
}

fn effective(common: &Common) -> Result<Resolved, Failure> {
    let file = match &common.config {
        Some(path) => FileConfig::load(path).map_err(Failure::config)?,
        None => FileConfig::default(),
    };
    let flags = FlagLayer {
        system: common.system.clone(),
        eps: common.eps,
        theta: common.theta,
        mu: common.mu,
        q: common.q,
        seed: common.seed,
        samples: common.samples,
        magnitudes: common.magnitudes.clone(),
        rate_mode: common.rate_mode,
        out: common.out.clone(),
    };
    Ok(Resolved {
        effective: merge(flags, file),
        system_path: common.system_path.clone(),
    })
}

enum System {
    GradFlow(GradFlowParams<f64>),
    HighOrder(HighOrderParams<f64>),
    Certificate(CertificateInput),
}

fn resolve_system(r: &Resolved) -> Result<System, Failure> {
    let eff = &r.effective;
    match eff.system.as_str() {
        "gradflow" => Ok(System::GradFlow(GradFlowParams::reference())),
        "highorder" => {
            let mut params = HighOrderParams::<f64>::reference();
            if let Some(mu) = eff.mu {
                params = HighOrderParams::with_auto_q(params.xi1, params.xi2, mu);
            }
            if let Some(q) = eff.q {
                params.q = q;
            }
            Ok(System::HighOrder(params))
        }
        "custom" => {
            let path = r
                .system_path
                .as_deref()
                .ok_or_else(|| Failure::config("--system custom requires a JSON path"))?;
            load_custom(path)
        }
        path if std::path::Path::new(path).exists() => load_custom(path),
        other => Err(Failure::config(format!(
            "unknown system '{other}' (expected gradflow, highorder, custom <path>, or a JSON path)"
        ))),
    }
}

fn load_custom(path: &str) -> Result<System, Failure> {
    Ok(match CustomSystem::load(path).map_err(Failure::config)? {
        CustomSystem::GradFlow(p) => System::GradFlow(p),
        CustomSystem::HighOrder(p) => System::HighOrder(p),
        CustomSystem::Certificate(c) => System::Certificate(c),
    })
}

struct Certified {
    model: SystemModel<f64>,
    rc: PowerLawCertificate<f64>,
    bc: BoundaryCertificate<f64>,
    cert: CompositeCertificate<f64>,
    record: CertificateRecord<f64>,
}

fn certified_system(r: &Resolved) -> Result<Certified, Failure> {
    let eff = &r.effective;
    match resolve_system(r)? {
        System::GradFlow(params) => {
            let mu = eff.mu.unwrap_or(0.1);
            let (rcc, bcc, bounds, cert) =
                gradflow::certification_chain(&params, mu, eff.q, eff.theta, Some(eff.eps))?;
            Ok(Certified {
                model: gradflow::build_system(&params)?,
                rc: gradflow::reduced_certificate(&params)?,
                bc: gradflow::boundary_certificate(&params)?,
                record: CertificateRecord::assemble(&rcc, &bcc, &bounds, &cert),
                cert,
            })
        }
        System::HighOrder(params) => {
            let (rcc, bcc, bounds, cert) =
                highorder::certification_chain(&params, eff.theta, Some(eff.eps))?;
            let (rc, bc) = highorder::certificates(&params)?;
            Ok(Certified {
                model: highorder::build_system(&params)?,
                rc,
                bc,
                record: CertificateRecord::assemble(&rcc, &bcc, &bounds, &cert),
                cert,
            })
        }
        System::Certificate(_) => Err(Failure::config(
            "this command needs a simulatable system, not bare certificate constants",
        )),
    }
}

fn default_initial_state(system: &System) -> (Vec<f64>, Vec<f64>) {
    match system {
        System::GradFlow(p) => {
            let n = p.dim();
            let mut x0 = vec![0.0; n];
            let mut z0 = vec![0.0; n];
            for (i, v) in x0.iter_mut().enumerate() {
                *v = if i % 2 == 0 { 10.0 } else { -10.0 };
            }
            z0[0] = 5.0;
            (x0, z0)
        }
        System::HighOrder(_) => (vec![356.0, 241.0], vec![191.0]),
        System::Certificate(_) => (vec![], vec![]),
    }
}

fn emit_json<S: serde::Serialize>(out: &Option<String>, value: &S) -> Result<(), Failure> {
    // Serialize the typed value directly: struct field order is part of
    // the output interface and `serde_json::Value` would re-sort keys.
    let text = serde_json::to_string_pretty(value).expect("serializable");
    match out {
        Some(path) => std::fs::write(path, text.as_bytes())
            .map_err(|e| Failure::config(format!("cannot write {path}: {e}"))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_certify(r: &Resolved) -> Result<i32, Failure> {
    let record = match resolve_system(r)? {
        System::Certificate(input) => {
            let (rcc, bcc, bounds) = input.split();
            let theta = r.effective.theta.or(input.theta);
            let cert = certify(&rcc, &bcc, &bounds, theta, Some(r.effective.eps))?;
            CertificateRecord::assemble(&rcc, &bcc, &bounds, &cert)
        }
        _ => certified_system(r)?.record,
    };
    emit_json(&r.effective.out, &record)?;
    Ok(0)
}

fn cmd_simulate(r: &Resolved) -> Result<i32, Failure> {
    let eff = &r.effective;
    let system = resolve_system(r)?;
    let certified = certified_system(r)?;
    let (mut x0, mut z0) = default_initial_state(&system);
    if let Some(x) = &eff.x0 {
        x0 = x.clone();
    }
    if let Some(z) = &eff.z0 {
        z0 = z.clone();
    }
    let mut traj = integrate(&certified.model, eff.eps, &x0, &z0, &eff.integrator)?;
    annotate_trajectory(
        &mut traj,
        &certified.model,
        &certified.rc,
        &certified.bc,
        certified.cert.theta,
    )?;
    let csv_path = eff.out.clone().unwrap_or_else(|| "trajectory.csv".into());
    let mut file = std::fs::File::create(&csv_path)
        .map_err(|e| Failure::config(format!("cannot create {csv_path}: {e}")))?;
    write_trajectory_csv(&traj, &mut file)
        .map_err(|e| Failure::config(format!("cannot write {csv_path}: {e}")))?;
    let summary = json!({
        "eps": eff.eps,
        "x0": x0,
        "z0": z0,
        "settle_time": traj.settle_time,
        "steps": traj.steps,
        "step_rejections": traj.step_rejections,
        "captured_at": traj.captured_at,
        "samples": traj.times.len(),
        "t_end": traj.times.last(),
        "trajectory_csv": csv_path,
    });
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    Ok(0)
}

fn sweep_threads() -> usize {
    std::env::var("FXTSP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn cmd_sweep(r: &Resolved) -> Result<i32, Failure> {
    let eff = &r.effective;
    let certified = certified_system(r)?;
    let table = sweep(
        &SweepTarget::Full {
            model: &certified.model,
            eps: eff.eps,
        },
        &eff.magnitudes,
        eff.directions,
        eff.seed,
        sweep_threads(),
        &eff.integrator,
    )?;
    let csv_path = eff.out.clone().unwrap_or_else(|| "sweep.csv".into());
    let mut file = std::fs::File::create(&csv_path)
        .map_err(|e| Failure::config(format!("cannot create {csv_path}: {e}")))?;
    write_sweep_csv(&table, &mut file)
        .map_err(|e| Failure::config(format!("cannot write {csv_path}: {e}")))?;
    let errors: Vec<&str> = table
        .cells
        .iter()
        .filter_map(|c| c.error.as_deref())
        .collect();
    let summary = json!({
        "eps": eff.eps,
        "seed": eff.seed,
        "directions": eff.directions,
        "max_settle_per_magnitude": table
            .max_per_magnitude()
            .iter()
            .map(|(m, s)| json!({"magnitude": m, "max_settle_time": s}))
            .collect::<Vec<_>>(),
        "cell_errors": errors.len(),
        "sweep_csv": csv_path,
    });
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    Ok(if errors.is_empty() { 0 } else { 3 })
}

fn cmd_check(r: &Resolved) -> Result<i32, Failure> {
    let eff = &r.effective;
    let samples = if eff.samples == 10_000 {
        100_000
    } else {
        eff.samples
    };
    let reports = run_inequality_suite::<f64>(samples, eff.seed);
    let violations: u64 = reports.iter().map(|rep| rep.violations).sum();
    emit_json(
        &eff.out,
        &json!({
            "seed": eff.seed,
            "samples_per_lemma": samples,
            "lemmas": reports,
        }),
    )?;
    Ok(if violations == 0 { 0 } else { 4 })
}

fn cmd_monitor(r: &Resolved) -> Result<i32, Failure> {
    let eff = &r.effective;
    let certified = certified_system(r)?;
    let report = if eff.rate_mode {
        // Negated form also rejects NaN.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(eff.eps < certified.cert.eps_star) {
            return Err(Failure::infeasible(format!(
                "decrease-rate monitoring needs eps below the certified threshold {:.3e}, got {:.3e}",
                certified.cert.eps_star, eff.eps
            )));
        }
        let n = certified.model.slow_dim();
        let m = certified.model.fast_dim();
        let mut rng = sampling::substream(eff.seed, 0);
        let states: Vec<(Vec<f64>, Vec<f64>)> = (0..eff.samples)
            .map(|_| {
                (
                    sampling::log_uniform_vector(&mut rng, n, 1e-6, 1e6),
                    sampling::log_uniform_vector(&mut rng, m, 1e-6, 1e6),
                )
            })
            .collect();
        decrease_rate_over_states(
            &certified.model,
            &certified.rc,
            &certified.bc,
            &certified.cert,
            eff.eps,
            &states,
            1e-6,
        )?
    } else {
        let system = resolve_system(r)?;
        let (mut x0, mut z0) = default_initial_state(&system);
        if let Some(x) = &eff.x0 {
            x0 = x.clone();
        }
        if let Some(z) = &eff.z0 {
            z0 = z.clone();
        }
        let mut traj = integrate(&certified.model, eff.eps, &x0, &z0, &eff.integrator)?;
        annotate_trajectory(
            &mut traj,
            &certified.model,
            &certified.rc,
            &certified.bc,
            certified.cert.theta,
        )?;
        monitor_lyapunov(
            &certified.model,
            &certified.rc,
            &certified.bc,
            &certified.cert,
            &traj,
            &MonitorMode::Monotonicity {
                transient_window: 10.0 * eff.eps,
            },
            &eff.integrator,
        )?
    };
    let violations = report.violations;
    emit_json(
        &eff.out,
        &json!({
            "eps": eff.eps,
            "theta": certified.cert.theta,
            "eps_star": certified.cert.eps_star,
            "report": report,
        }),
    )?;
    Ok(if violations == 0 { 0 } else { 4 })
}

fn cmd_reproduce(r: &Resolved) -> Result<i32, Failure> {
    let eff = &r.effective;
    match eff.system.as_str() {
        "gradflow" => {
            let report = gradflow::reproduce_reference::<f64>()?;
            emit_json(&eff.out, &report)?;
            Ok(0)
        }
        "highorder" => {
            let (report, _traj) = highorder::reproduce_reference(&eff.integrator)?;
            emit_json(&eff.out, &report)?;
            Ok(0)
        }
        other => Err(Failure::config(format!(
            "reproduce supports the gradflow and highorder benchmarks, got '{other}'"
        ))),
    }
}
