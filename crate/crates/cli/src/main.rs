//! `hsgd`: recovery, synthetic instances and batch experiments from the command line.
//!
//! Exit codes: 0 success, 1 input error, 2 the solver did not converge.

mod args;
mod manifest;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use hsgd_core::experiments::{
    phase_grid, speed_csv, speed_report, speed_summary_csv, speed_test, summarize, summary_csv,
    timing_csv, trace, trace_csv, trials_csv, Execution, ExperimentGridSpec, GridAxis, SpeedSpec,
};
use hsgd_core::io::{format_mask, format_signal, read_mask, read_signal};
use hsgd_core::synth::{InstanceSpec, SpectralModel};
use hsgd_core::{HankelGeometry, HsgdConfig, HsgdSolver, ObservationMask, ProblemInstance, C64};
use serde_json::json;

use args::{
    Cli, Command, GridArgs, InstanceArgs, RecoverArgs, SpeedArgs, SynthArgs, TraceArgs, Tuning,
};
use manifest::{LoadedManifest, Manifest, ManifestFiles};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    NotConverged(String),
}

impl From<hsgd_core::Error> for CliError {
    fn from(e: hsgd_core::Error) -> Self {
        match e {
            hsgd_core::Error::NonFinite { .. } => Self::NotConverged(e.to_string()),
            other => Self::Input(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(prefix.as_os_str());
    s.push(suffix);
    PathBuf::from(s)
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

impl Tuning {
    /// The configuration file (or defaults) with flag overrides applied. Also returns
    /// whether the file set `rank` explicitly.
    fn config(&self) -> CliResult<(HsgdConfig, bool)> {
        let (mut cfg, has_rank) = match &self.config {
            Some(path) => {
                let bad =
                    |e: &dyn std::fmt::Display| CliError::Input(format!("{}: {e}", path.display()));
                let text = fs::read_to_string(path).map_err(|e| bad(&e))?;
                let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(&e))?;
                let has_rank = value.get("rank").is_some();
                (
                    serde_json::from_value(value).map_err(|e| bad(&e))?,
                    has_rank,
                )
            }
            None => (HsgdConfig::default(), false),
        };
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.eta_scale {
            cfg.eta_scale = v;
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.tol {
            cfg.rel_tol = v;
        }
        if let Some(v) = self.mu {
            cfg.mu = v;
        }
        if self.no_projection {
            cfg.projection = false;
        }
        Ok((cfg, has_rank))
    }
}

fn recover(a: &RecoverArgs) -> CliResult<()> {
    let loaded = a
        .manifest
        .as_deref()
        .map(LoadedManifest::read)
        .transpose()?;
    let (mut cfg, file_rank) = a.tuning.config()?;

    let signal_path = match (&a.signal, &loaded) {
        (Some(p), _) => p.clone(),
        (None, Some(m)) => m.path(&m.manifest.files.observed),
        (None, None) => {
            return Err(CliError::Input(
                "a signal file or --manifest is required".into(),
            ))
        }
    };
    let length = a.length.or(loaded.as_ref().map(|m| m.manifest.n));
    let signal = read_signal(&signal_path, length)?;
    let n = signal.len();

    let mask_path = a
        .mask
        .clone()
        .or_else(|| loaded.as_ref().map(|m| m.path(&m.manifest.files.mask)));
    let mask = match mask_path {
        Some(p) => {
            let mask = read_mask(&p, n)?;
            if let Some(&i) = mask
                .indices()
                .iter()
                .find(|&&i| !signal.values[i].is_finite())
            {
                return Err(CliError::Input(format!(
                    "{}: index {i} is in the mask but has no finite value in {}",
                    p.display(),
                    signal_path.display()
                )));
            }
            mask
        }
        None => ObservationMask::new(signal.finite_indices(), n)
            .map_err(|e| CliError::Input(format!("{}: {e}", signal_path.display())))?,
    };

    cfg.rank = match (a.rank, &loaded, file_rank) {
        (Some(r), _, _) => r,
        (None, Some(m), _) => m.manifest.rank,
        (None, None, true) => cfg.rank,
        (None, None, false) => return Err(CliError::Input("--rank is required".into())),
    };
    if let Some(alpha) = a.alpha.or(loaded.as_ref().map(|m| m.manifest.alpha)) {
        cfg.alpha = alpha;
    }
    if let Some(p) = a.prob {
        cfg.p = Some(p);
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }

    let geom = HankelGeometry::new(n)?;
    let zero = C64::new(0.0, 0.0);
    let f: Vec<C64> = (0..n)
        .map(|i| {
            if mask.contains(i) {
                signal.values[i]
            } else {
                zero
            }
        })
        .collect();
    let solver = HsgdSolver::for_length(n, cfg.clone())?;
    let result = solver.run(&geom.reweight(&f), &mask)?;

    write(
        &with_suffix(&a.out, ".recovered.csv"),
        &format_signal(&result.x_hat),
    )?;
    write(
        &with_suffix(&a.out, ".outliers.csv"),
        &format_signal(&geom.reweight_inv(&result.s_hat)),
    )?;
    let final_residual = *result.residual_trace.last().expect("trace is never empty");
    let report = json!({
        "n": n,
        "observed": mask.len(),
        "sampling_rate": solver.sampling_rate(&mask),
        "config": cfg,
        "iterations": result.iterations,
        "converged": result.converged,
        "svd_converged": result.svd_converged,
        "eta_scale": result.eta_scale,
        "final_residual": final_residual,
        "residual_trace": result.residual_trace,
        "wall_time_seconds": result.wall_time_seconds,
    });
    write(
        &with_suffix(&a.out, ".report.json"),
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    if !result.svd_converged {
        eprintln!("warning: initial truncated SVD hit its step cap before converging");
    }
    if result.converged {
        eprintln!(
            "converged after {} iterations (residual {final_residual:.3e})",
            result.iterations
        );
        Ok(())
    } else {
        Err(CliError::NotConverged(format!(
            "stopped after {} iterations with residual {final_residual:.3e} > {:e}",
            result.iterations, cfg.rel_tol
        )))
    }
}

impl InstanceArgs {
    fn spec(&self) -> CliResult<InstanceSpec> {
        let samples = match (self.samples, self.prob) {
            (Some(m), _) => m,
            (None, Some(p)) if p > 0.0 && p <= 1.0 => (p * self.n as f64).round() as usize,
            (None, Some(p)) => return Err(CliError::Input(format!("--prob {p} outside (0, 1]"))),
            (None, None) => 50,
        };
        let rank = self.frequencies.as_ref().map_or(self.rank, Vec::len);
        Ok(InstanceSpec {
            n: self.n,
            rank,
            samples,
            alpha: self.alpha,
            outlier_scale: self.outlier_scale,
            ..Default::default()
        })
    }

    fn generate(&self) -> CliResult<(InstanceSpec, ProblemInstance)> {
        let spec = self.spec()?;
        let instance = match &self.frequencies {
            Some(freqs) => {
                if let Some(f) = freqs.iter().find(|f| !(0.0..1.0).contains(*f)) {
                    return Err(CliError::Input(format!("frequency {f} outside [0, 1)")));
                }
                let model = SpectralModel {
                    frequencies: freqs.clone(),
                    amplitudes: vec![C64::new(1.0, 0.0); freqs.len()],
                    n: spec.n,
                };
                ProblemInstance::with_model(&spec, model, self.seed)?
            }
            None => ProblemInstance::generate(&spec, self.seed)?,
        };
        Ok((spec, instance))
    }
}

fn synth(a: &SynthArgs) -> CliResult<()> {
    let (spec, inst) = a.instance.generate()?;
    let geom = HankelGeometry::new(spec.n)?;
    let nan = C64::new(f64::NAN, f64::NAN);
    let f = geom.reweight_inv(&inst.f_obs);
    let observed: Vec<C64> = (0..spec.n)
        .map(|i| if inst.mask.contains(i) { f[i] } else { nan })
        .collect();

    let name = |suffix: &str| {
        with_suffix(&a.out, suffix)
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let files = ManifestFiles {
        truth: name(".truth.csv"),
        observed: name(".observed.csv"),
        mask: name(".mask.csv"),
        outliers: name(".outliers.csv"),
    };
    write(
        &with_suffix(&a.out, ".truth.csv"),
        &format_signal(&geom.reweight_inv(&inst.z_true)),
    )?;
    write(
        &with_suffix(&a.out, ".observed.csv"),
        &format_signal(&observed),
    )?;
    write(&with_suffix(&a.out, ".mask.csv"), &format_mask(&inst.mask))?;
    write(
        &with_suffix(&a.out, ".outliers.csv"),
        &format_signal(&geom.reweight_inv(&inst.s_true)),
    )?;
    let manifest = Manifest {
        n: spec.n,
        rank: spec.rank,
        samples: spec.samples,
        alpha: spec.alpha,
        outlier_scale: spec.outlier_scale,
        separation_bins: spec.separation_bins,
        magnitudes: spec.magnitudes,
        seed: a.instance.seed,
        frequencies: inst.model.frequencies.clone(),
        amplitudes: inst.model.amplitudes.iter().map(|c| [c.re, c.im]).collect(),
        files,
    };
    write(
        &with_suffix(&a.out, ".manifest.json"),
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )
}

fn grid(a: &GridArgs) -> CliResult<()> {
    let (solver, _) = a.tuning.config()?;
    let spec = ExperimentGridSpec {
        axis1: GridAxis::parse(&a.axis1)?,
        axis2: GridAxis::parse(&a.axis2)?,
        n: a.n,
        rank: a.rank,
        alpha: a.alpha,
        samples: a.samples,
        trials: a.trials,
        seed_base: a.seed,
        solver,
        outlier_scale: a.outlier_scale,
    };
    let exec = if a.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let records = phase_grid(&spec, exec)?;
    write(&with_suffix(&a.out, ".trials.csv"), &trials_csv(&records))?;
    write(
        &with_suffix(&a.out, ".summary.csv"),
        &summary_csv(&summarize(&records)),
    )?;
    write(&with_suffix(&a.out, ".timing.csv"), &timing_csv(&records))?;
    let errors = records
        .iter()
        .filter(|r| r.status == hsgd_core::experiments::TrialStatus::Error)
        .count();
    if errors > 0 {
        eprintln!("warning: {errors} trials failed with an error and are recorded as failures");
    }
    Ok(())
}

fn speed(a: &SpeedArgs) -> CliResult<()> {
    let (solver, _) = a.tuning.config()?;
    let spec = SpeedSpec {
        sizes: a.sizes.clone(),
        rank: a.rank,
        p: a.prob,
        alpha: a.alpha,
        trials: a.trials,
        seed_base: a.seed,
        solver,
    };
    let records = speed_test(&spec)?;
    let report = speed_report(&records);
    write(&with_suffix(&a.out, ".csv"), &speed_csv(&records))?;
    write(
        &with_suffix(&a.out, ".summary.csv"),
        &speed_summary_csv(&report),
    )?;
    write(
        &with_suffix(&a.out, ".report.json"),
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match report.slope {
        Some(s) => eprintln!("log-log slope over the largest sizes: {s:.3}"),
        None => eprintln!("warning: too few converged sizes to fit a slope"),
    }
    Ok(())
}

fn trace_cmd(a: &TraceArgs) -> CliResult<()> {
    let (mut cfg, _) = a.tuning.config()?;
    let instance = match &a.manifest {
        Some(path) => {
            let loaded = LoadedManifest::read(path)?;
            cfg.rank = loaded.manifest.rank;
            cfg.alpha = loaded.manifest.alpha;
            loaded.instance()?
        }
        None => {
            let (spec, inst) = a.instance.generate()?;
            cfg.rank = spec.rank;
            cfg.alpha = spec.alpha;
            inst
        }
    };
    let rows = trace(&instance, &cfg)?;
    write(&with_suffix(&a.out, ".trace.csv"), &trace_csv(&rows))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Recover(a) => recover(a),
        Command::Synth(a) => synth(a),
        Command::PhaseGrid(a) => grid(a),
        Command::Speed(a) => speed(a),
        Command::Trace(a) => trace_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::NotConverged(msg)) => {
            eprintln!("not converged: {msg}");
            ExitCode::from(2)
        }
    }
}
