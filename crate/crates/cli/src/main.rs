use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde_json::json;

use cns_core::config::RunConfig;
use cns_core::diagnostics::{fit_energy_constant, write_csv, Recorder, RunDiagnostics};
use cns_core::fields::snapshot;
use cns_core::sweep::compare;
use cns_core::system::{SimParams, State, Stepper};
use cns_core::verify::{run_suite, Suite};
use cns_core::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BLOW_UP: u8 = 3;
const EXIT_INVARIANT: u8 = 4;

const MASS_TOL: f64 = 1e-10;
const C_TOL: f64 = 1e-8;
const DIV_TOL: f64 = 1e-11;

#[derive(Parser)]
#[command(name = "cns", version, about = "Regularized chemotaxis-fluid simulations and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write diagnostics.csv, snapshots and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a configuration at several ε and compare the final states.
    SweepEps {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated, non-increasing, at least three values.
        #[arg(long)]
        eps_list: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite and print its pass/fail table.
    Verify {
        /// operators, coefficients, inequality, energy, weak or all
        #[arg(long)]
        suite: String,
        /// Also write the tables as JSON into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// An error paired with the exit status it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BlowUp { .. } | Error::Cfl { .. } => EXIT_BLOW_UP,
            Error::Io(_) | Error::Csv(_) => EXIT_FAILURE,
            Error::Config(_)
            | Error::InvalidGrid(_)
            | Error::InvalidParams(_)
            | Error::InvalidCoefficients(_)
            | Error::NonPositiveG { .. }
            | Error::ZeroCeiling
            | Error::Snapshot(_)
            | Error::GridMismatch => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        };
        Failure { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: EXIT_FAILURE, error }
    }
}

type Outcome = Result<u8, Failure>;

fn config_failure(msg: String) -> Failure {
    Failure { code: EXIT_CONFIG, error: anyhow::anyhow!(msg) }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate { config, out } => simulate(&config, out),
        Command::SweepEps { config, eps_list, out } => sweep(&config, &eps_list, out),
        Command::Verify { suite, out } => verify(&suite, out),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(Failure::from)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).context("serializing JSON")?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn save_state(dir: &Path, tag: &str, s: &State) -> cns_core::Result<()> {
    snapshot::save_scalar(dir.join(format!("n_{tag}.cns")), &s.n)?;
    snapshot::save_scalar(dir.join(format!("c_{tag}.cns")), &s.c)?;
    snapshot::save_vector(dir.join(format!("u_{tag}.cns")), &s.u)
}

/// Run with diagnostics, snapshotting every `params.snapshot_every` steps.
fn recorded_run(
    stepper: &Stepper,
    recorder: Recorder,
    state0: State,
    snapshots: Option<&Path>,
) -> cns_core::Result<(State, RunDiagnostics)> {
    let every = stepper.params().snapshot_every;
    let snap_dir = snapshots.filter(|_| every > 0);
    if let Some(dir) = snap_dir {
        fs::create_dir_all(dir)?;
        save_state(dir, &format!("{:06}", 0), &state0)?;
    }
    let mut recorder = recorder;
    let mut step = 0usize;
    let mut io_error = None;
    let last = stepper.run(state0, |s| {
        recorder.observe(s);
        step += 1;
        if let Some(dir) = snap_dir {
            if step % every == 0 && io_error.is_none() {
                io_error = save_state(dir, &format!("{step:06}"), s).err();
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    Ok((last, recorder.finish()?))
}

fn violations(d: &RunDiagnostics) -> Vec<String> {
    let mut v = vec![];
    let drift = d.mass_drift();
    if !(drift <= MASS_TOL) {
        v.push(format!("relative mass drift {drift:.3e} exceeds {MASS_TOL:e}"));
    }
    let c0 = d.records.first().map_or(0.0, |r| r.c_max);
    if let Some(r) = d.records.iter().find(|r| !(r.c_max <= c0 + C_TOL)) {
        v.push(format!("max c rose to {:.10} at t = {:.6}", r.c_max, r.t));
    }
    if !(d.c_floor >= -C_TOL) {
        v.push(format!("min c reached {:.3e}", d.c_floor));
    }
    if !(d.max_divergence <= DIV_TOL) {
        v.push(format!("divergence reached {:.3e}", d.max_divergence));
    }
    if d.records.iter().any(|r| r.dissip_n < 0.0 || r.dissip_c4 < 0.0 || r.dissip_c2 < 0.0 || r.dissip_u < 0.0) {
        v.push("negative dissipation".into());
    }
    v
}

fn simulate(config: &Path, out: Option<PathBuf>) -> Outcome {
    let cfg = RunConfig::load(config)?;
    let out = out.unwrap_or_else(|| cfg.output.clone());
    let sc = cfg.build()?;
    create_dir(&out)?;

    let recorder = Recorder::new(&sc.stepper, sc.derived.clone(), cfg.kappa, cfg.floor, &sc.state0)?;
    let (last, diag) = match recorded_run(&sc.stepper, recorder, sc.state0.clone(), Some(&out.join("snapshots"))) {
        Ok(r) => r,
        Err(e @ (Error::BlowUp { .. } | Error::Cfl { .. })) => {
            eprintln!("blow-up: {e}");
            return Ok(EXIT_BLOW_UP);
        }
        Err(e) => return Err(e.into()),
    };
    let csv_path = out.join("diagnostics.csv");
    write_csv(BufWriter::new(File::create(&csv_path).with_context(|| csv_path.display().to_string())?), &diag.records)?;
    save_state(&out, "final", &last)?;

    let mut problems = violations(&diag);
    let fit = if diag.records.len() >= 10 {
        match fit_energy_constant(&diag.records, cfg.kappa) {
            Ok(f) => Some(f),
            Err(e) => {
                problems.push(e.to_string());
                None
            }
        }
    } else {
        None
    };
    let s0 = sc.stepper.coeffs().s0;
    let c0 = diag.records[0].c_max;
    let summary = json!({
        "steps": diag.records.len() - 1,
        "t_end": last.t,
        "mass_initial": diag.records[0].mass,
        "mass_drift": diag.mass_drift(),
        "c_max_initial": c0,
        "c_max_envelope": diag.c_peak,
        "c_min": diag.c_floor,
        "c_exceeds_s0": diag.c_peak > s0 + C_TOL,
        "max_divergence": diag.max_divergence,
        "kappa": cfg.kappa,
        "k_hat": fit.as_ref().map(|f| f.k_hat),
        "energy_initial": diag.records[0].energy_total,
        "energy_final": diag.records.last().map(|r| r.energy_total),
        "violations": problems,
    });
    write_json(&out.join("summary.json"), &summary)?;
    if diag.c_peak > s0 + C_TOL {
        eprintln!("warning: c exceeded the signal ceiling s0 = {s0}");
    }
    if problems.is_empty() {
        println!(
            "ok: {} steps, mass drift {:.2e}, results in {}",
            diag.records.len() - 1,
            diag.mass_drift(),
            out.display()
        );
        Ok(0)
    } else {
        for p in &problems {
            eprintln!("invariant violation: {p}");
        }
        Ok(EXIT_INVARIANT)
    }
}

fn parse_eps_list(text: &str) -> Result<Vec<f64>, Failure> {
    let eps = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| config_failure(format!("bad ε value `{s}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    if eps.len() < 3 {
        return Err(config_failure("an ε sweep needs at least three values".into()));
    }
    if eps.windows(2).any(|w| w[1] > w[0]) {
        return Err(config_failure("ε values must not increase".into()));
    }
    Ok(eps)
}

fn sweep(config: &Path, eps_list: &str, out: Option<PathBuf>) -> Outcome {
    let cfg = RunConfig::load(config)?;
    let eps = parse_eps_list(eps_list)?;
    let out = out.unwrap_or_else(|| cfg.output.clone());
    let sc = cfg.build()?;
    create_dir(&out)?;

    let steppers = eps
        .iter()
        .map(|&e| {
            let params = SimParams { eps: e, ..*sc.stepper.params() };
            Stepper::new(sc.op.clone(), sc.stepper.coeffs().clone(), params)
        })
        .collect::<cns_core::Result<Vec<_>>>()?;
    let dirs: Vec<PathBuf> = eps.iter().enumerate().map(|(j, e)| out.join(format!("run_{j}_eps_{e}"))).collect();
    let results: Vec<cns_core::Result<State>> = thread::scope(|scope| {
        let handles: Vec<_> = steppers
            .iter()
            .zip(&dirs)
            .map(|(stepper, dir)| {
                let (derived, state0) = (sc.derived.clone(), sc.state0.clone());
                scope.spawn(move || -> cns_core::Result<State> {
                    fs::create_dir_all(dir)?;
                    let rec = Recorder::new(stepper, derived, cfg.kappa, cfg.floor, &state0)?;
                    let (last, diag) = recorded_run(stepper, rec, state0, Some(&dir.join("snapshots")))?;
                    write_csv(BufWriter::new(File::create(dir.join("diagnostics.csv"))?), &diag.records)?;
                    save_state(dir, "final", &last)?;
                    Ok(last)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p))).collect()
    });
    let mut finals = vec![];
    for (r, e) in results.into_iter().zip(&eps) {
        match r {
            Ok(s) => finals.push(s),
            Err(err @ (Error::BlowUp { .. } | Error::Cfl { .. })) => {
                eprintln!("blow-up at ε = {e}: {err}");
                return Ok(EXIT_BLOW_UP);
            }
            Err(err) => return Err(err.into()),
        }
    }
    let report = compare(&eps, &finals);
    let monotone = report.monotone();
    write_json(
        &out.join("sweep.json"),
        &json!({ "report": &report, "monotone": { "n": monotone[0], "c": monotone[1], "u": monotone[2] } }),
    )?;
    let mut w = csv::Writer::from_path(out.join("sweep.csv")).context("writing sweep.csv")?;
    w.write_record(["eps_j", "eps_next", "diff_n_l1", "diff_c_l1", "diff_u_l2"]).context("writing sweep.csv")?;
    for j in 0..report.diff_n.len() {
        w.write_record(
            [eps[j], eps[j + 1], report.diff_n[j], report.diff_c[j], report.diff_u[j]].map(|x| x.to_string()),
        )
        .context("writing sweep.csv")?;
    }
    w.flush().context("writing sweep.csv")?;

    println!("{:>10} {:>10} {:>14} {:>14} {:>14}", "eps_j", "eps_j+1", "|dn|_L1", "|dc|_L1", "|du|_L2");
    for j in 0..report.diff_n.len() {
        println!(
            "{:>10} {:>10} {:>14.6e} {:>14.6e} {:>14.6e}",
            eps[j],
            eps[j + 1],
            report.diff_n[j],
            report.diff_c[j],
            report.diff_u[j]
        );
    }
    if monotone.iter().all(|&m| m) {
        println!("differences non-increasing");
        Ok(0)
    } else {
        eprintln!("differences not monotone (n, c, u): {monotone:?}");
        Ok(EXIT_INVARIANT)
    }
}

fn verify(suite: &str, out: Option<PathBuf>) -> Outcome {
    let suites: Vec<Suite> = if suite == "all" { Suite::ALL.to_vec() } else { vec![suite.parse()?] };
    if let Some(dir) = &out {
        create_dir(dir)?;
    }
    let mut all_ok = true;
    for s in suites {
        let table = run_suite(s)?;
        println!("{table}");
        all_ok &= table.passed();
        if let Some(dir) = &out {
            let value = serde_json::to_value(&table).context("serializing table")?;
            write_json(&dir.join(format!("verify_{}.json", s.name())), &value)?;
        }
    }
    Ok(if all_ok { 0 } else { EXIT_FAILURE })
}
