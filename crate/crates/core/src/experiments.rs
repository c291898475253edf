//! Batch experiments: phase-transition grids, runtime scaling and convergence traces.
//!
//! Every trial derives its seed from the grid's base seed and its coordinates with
//! [`derive_seed`], so results do not depend on execution order or thread count. CSV
//! bodies contain no wall-clock values except in the speed harness; grid timings go to
//! a separate file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{aligned_distance, classify_success, relative_error};
use crate::hankel::{FactorPair, HankelOps};
use crate::lanczos::truncated_svd_hankel;
use crate::solver::{HsgdConfig, HsgdSolver};
use crate::synth::{InstanceSpec, ProblemInstance};
use crate::{CMatrix, C64};

/// How independent trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon work pool; identical to `Sequential` without the `parallel` feature.
    #[default]
    Parallel,
}

/// Order-preserving map over independent items.
pub fn map_trials<T, U, F>(items: &[T], exec: Execution, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stable per-trial seed: `h = splitmix64(base)`, then `h = splitmix64(h ^ part)` for
/// each coordinate in order.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |h, &p| splitmix64(h ^ p))
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridParam {
    Rank,
    Alpha,
    Samples,
}

impl std::str::FromStr for GridParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rank" | "r" => Ok(Self::Rank),
            "alpha" => Ok(Self::Alpha),
            "samples" | "m" => Ok(Self::Samples),
            other => Err(Error::InvalidParameter(format!(
                "unknown grid axis `{other}` (expected rank, alpha or samples)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub param: GridParam,
    pub values: Vec<f64>,
}

impl GridAxis {
    /// Parses `param=v1,v2,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, list) = text.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!("axis `{text}` must look like `alpha=0.1,0.2`"))
        })?;
        let values = list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("axis value `{v}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            param: name.trim().parse()?,
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGridSpec {
    pub axis1: GridAxis,
    pub axis2: GridAxis,
    pub n: usize,
    /// Values of the parameters not swept by an axis.
    pub rank: usize,
    pub alpha: f64,
    pub samples: usize,
    pub trials: usize,
    pub seed_base: u64,
    pub solver: HsgdConfig,
    pub outlier_scale: f64,
}

/// One grid cell's parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellParams {
    pub rank: usize,
    pub alpha: f64,
    pub samples: usize,
}

fn integral(v: f64, what: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} value {v} must be a positive integer"
        )))
    }
}

impl ExperimentGridSpec {
    fn set(params: &mut CellParams, param: GridParam, v: f64) -> Result<()> {
        match param {
            GridParam::Rank => params.rank = integral(v, "rank")?,
            GridParam::Alpha => params.alpha = v,
            GridParam::Samples => params.samples = integral(v, "samples")?,
        }
        Ok(())
    }

    pub fn cell(&self, i: usize, j: usize) -> Result<CellParams> {
        let mut params = CellParams {
            rank: self.rank,
            alpha: self.alpha,
            samples: self.samples,
        };
        Self::set(&mut params, self.axis1.param, self.axis1.values[i])?;
        Self::set(&mut params, self.axis2.param, self.axis2.values[j])?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axis1.param == self.axis2.param {
            return Err(Error::InvalidParameter("grid axes must differ".into()));
        }
        if self.axis1.values.is_empty() || self.axis2.values.is_empty() {
            return Err(Error::InvalidParameter(
                "grid axes need at least one value".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be positive".into()));
        }
        let max_rank = crate::HankelGeometry::new(self.n)?.max_rank();
        for i in 0..self.axis1.values.len() {
            for j in 0..self.axis2.values.len() {
                let c = self.cell(i, j)?;
                if c.rank == 0 || c.rank > max_rank {
                    return Err(Error::InvalidParameter(format!(
                        "rank {} outside 1..={max_rank}",
                        c.rank
                    )));
                }
                if !(0.0..1.0).contains(&c.alpha) {
                    return Err(Error::InvalidParameter(format!(
                        "alpha {} outside [0, 1)",
                        c.alpha
                    )));
                }
                if c.samples == 0 || c.samples > self.n {
                    return Err(Error::InvalidParameter(format!(
                        "samples {} outside 1..={}",
                        c.samples, self.n
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Converged,
    MaxIters,
    Error,
}

impl TrialStatus {
    fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxIters => "max_iters",
            Self::Error => "error",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "converged" => Some(Self::Converged),
            "max_iters" => Some(Self::MaxIters),
            "error" => Some(Self::Error),
            _ => None,
        }
    }
}

/// Outcome of one solver run on a generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub cell: (usize, usize),
    pub params: CellParams,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub rel_err: f64,
    pub iterations: usize,
    pub status: TrialStatus,
    pub seconds: f64,
}

/// Generates the instance for `seed` and runs the solver on it.
pub fn run_trial(
    n: usize,
    params: CellParams,
    template: &HsgdConfig,
    outlier_scale: f64,
    seed: u64,
) -> Result<(ProblemInstance, crate::RecoveryResult)> {
    let spec = InstanceSpec {
        n,
        rank: params.rank,
        samples: params.samples,
        alpha: params.alpha,
        outlier_scale,
        ..Default::default()
    };
    let instance = ProblemInstance::generate(&spec, seed)?;
    let cfg = HsgdConfig {
        rank: params.rank,
        alpha: params.alpha,
        ..template.clone()
    };
    let solver = HsgdSolver::for_length(n, cfg)?;
    let result = solver.run(&instance.f_obs, &instance.mask)?;
    Ok((instance, result))
}

pub fn phase_grid(spec: &ExperimentGridSpec, exec: Execution) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for i in 0..spec.axis1.values.len() {
        for j in 0..spec.axis2.values.len() {
            for t in 0..spec.trials {
                jobs.push((i, j, t));
            }
        }
    }
    Ok(map_trials(&jobs, exec, |&(i, j, t)| {
        let params = spec.cell(i, j).expect("validated");
        let seed = derive_seed(spec.seed_base, &[i as u64, j as u64, t as u64]);
        let start = Instant::now();
        let outcome = run_trial(spec.n, params, &spec.solver, spec.outlier_scale, seed)
            .and_then(|(inst, res)| Ok((relative_error(&res.z_hat, &inst.z_true)?, res)));
        let seconds = start.elapsed().as_secs_f64();
        let (success, rel_err, iterations, status) = match outcome {
            Ok((rel_err, res)) => (
                classify_success(rel_err),
                rel_err,
                res.iterations,
                if res.converged {
                    TrialStatus::Converged
                } else {
                    TrialStatus::MaxIters
                },
            ),
            Err(_) => (false, f64::NAN, 0, TrialStatus::Error),
        };
        TrialRecord {
            cell: (i, j),
            params,
            trial: t,
            seed,
            success,
            rel_err,
            iterations,
            status,
            seconds,
        }
    }))
}

pub const TRIALS_HEADER: &str = "rank,alpha,samples,trial,seed,success,rel_err,iterations,status";
pub const TIMING_HEADER: &str = "rank,alpha,samples,trial,seconds";
pub const SUMMARY_HEADER: &str = "rank,alpha,samples,trials,successes,success_fraction";

pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(TRIALS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:e},{},{}",
            r.params.rank,
            r.params.alpha,
            r.params.samples,
            r.trial,
            r.seed,
            u8::from(r.success),
            r.rel_err,
            r.iterations,
            r.status.as_str()
        );
    }
    out
}

pub fn timing_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(TIMING_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6}",
            r.params.rank, r.params.alpha, r.params.samples, r.trial, r.seconds
        );
    }
    out
}

/// Per-cell success counts, in first-appearance order of the cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub params: CellParams,
    pub trials: usize,
    pub successes: usize,
}

impl CellSummary {
    pub fn fraction(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

pub fn summarize(records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut order: Vec<(usize, u64, usize)> = Vec::new();
    let mut cells: BTreeMap<(usize, u64, usize), CellSummary> = BTreeMap::new();
    for r in records {
        let key = (r.params.rank, r.params.alpha.to_bits(), r.params.samples);
        let entry = cells.entry(key).or_insert_with(|| {
            order.push(key);
            CellSummary {
                params: r.params,
                trials: 0,
                successes: 0,
            }
        });
        entry.trials += 1;
        entry.successes += usize::from(r.success);
    }
    order.iter().map(|k| cells[k].clone()).collect()
}

pub fn summary_csv(cells: &[CellSummary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.params.rank,
            c.params.alpha,
            c.params.samples,
            c.trials,
            c.successes,
            c.fraction()
        );
    }
    out
}

/// Reads back a trials CSV. Cell indices are not stored, so `cell` is `(0, 0)` and
/// `seconds` is zero.
pub fn parse_trials_csv(text: &str) -> Result<Vec<TrialRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TRIALS_HEADER => {}
        _ => {
            return Err(Error::Parse {
                path: "trials".into(),
                line: 1,
                msg: format!("expected header `{TRIALS_HEADER}`"),
            })
        }
    }
    let mut out = Vec::new();
    for (lineno, line) in lines {
        let bad = |msg: &str| Error::Parse {
            path: "trials".into(),
            line: lineno + 1,
            msg: msg.to_string(),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad("expected 9 fields"));
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad("bad number"));
        let int = |i: usize| f[i].parse::<u64>().map_err(|_| bad("bad integer"));
        out.push(TrialRecord {
            cell: (0, 0),
            params: CellParams {
                rank: int(0)? as usize,
                alpha: num(1)?,
                samples: int(2)? as usize,
            },
            trial: int(3)? as usize,
            seed: int(4)?,
            success: int(5)? == 1,
            rel_err: num(6)?,
            iterations: int(7)? as usize,
            status: TrialStatus::parse(f[8]).ok_or_else(|| bad("bad status"))?,
            seconds: 0.0,
        });
    }
    Ok(out)
}

/// Runtime scaling experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedSpec {
    pub sizes: Vec<usize>,
    pub rank: usize,
    pub p: f64,
    pub alpha: f64,
    pub trials: usize,
    pub seed_base: u64,
    pub solver: HsgdConfig,
}

impl Default for SpeedSpec {
    fn default() -> Self {
        Self {
            sizes: (10..=14).map(|e| 1usize << e).collect(),
            rank: 10,
            p: 0.4,
            alpha: 0.1,
            trials: 20,
            seed_base: 0,
            solver: HsgdConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedRecord {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    pub rel_err: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedSummary {
    pub n: usize,
    pub mean_seconds: f64,
    pub std_seconds: f64,
    pub converged_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedReport {
    pub per_size: Vec<SpeedSummary>,
    /// Slope of `log(mean time)` against `log(n)` over the three largest sizes (fewer if
    /// fewer sizes were run); `None` with fewer than two usable sizes.
    pub slope: Option<f64>,
    pub warnings: Vec<String>,
}

pub const SPEED_HEADER: &str = "n,trial,seed,converged,iterations,rel_err,seconds";
pub const SPEED_SUMMARY_HEADER: &str = "n,mean_seconds,std_seconds,converged_trials";

impl SpeedSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "sizes must be non-empty and increasing".into(),
            ));
        }
        if self.trials == 0 || !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidParameter(
                "need trials > 0 and p in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn samples(&self, n: usize) -> usize {
        ((self.p * n as f64).round() as usize).clamp(1, n)
    }
}

/// Trials run one at a time so timings do not compete for cores. Instance generation is
/// excluded from the measured time.
pub fn speed_test(spec: &SpeedSpec) -> Result<Vec<SpeedRecord>> {
    spec.validate()?;
    let mut out = Vec::new();
    for (si, &n) in spec.sizes.iter().enumerate() {
        for t in 0..spec.trials {
            let seed = derive_seed(spec.seed_base, &[si as u64, t as u64]);
            let inst = ProblemInstance::generate(
                &InstanceSpec {
                    n,
                    rank: spec.rank,
                    samples: spec.samples(n),
                    alpha: spec.alpha,
                    ..Default::default()
                },
                seed,
            )?;
            let cfg = HsgdConfig {
                rank: spec.rank,
                alpha: spec.alpha,
                ..spec.solver.clone()
            };
            let solver = HsgdSolver::for_length(n, cfg)?;
            let start = Instant::now();
            let res = solver.run(&inst.f_obs, &inst.mask)?;
            let seconds = start.elapsed().as_secs_f64();
            out.push(SpeedRecord {
                n,
                trial: t,
                seed,
                converged: res.converged,
                iterations: res.iterations,
                rel_err: relative_error(&res.z_hat, &inst.z_true)?,
                seconds,
            });
        }
    }
    Ok(out)
}

pub fn speed_report(records: &[SpeedRecord]) -> SpeedReport {
    let mut sizes: Vec<usize> = records.iter().map(|r| r.n).collect();
    sizes.dedup();
    let mut warnings = Vec::new();
    let per_size: Vec<SpeedSummary> = sizes
        .iter()
        .map(|&n| {
            let all: Vec<&SpeedRecord> = records.iter().filter(|r| r.n == n).collect();
            let times: Vec<f64> = all
                .iter()
                .filter(|r| r.converged)
                .map(|r| r.seconds)
                .collect();
            if times.len() < all.len() {
                warnings.push(format!(
                    "n={n}: {} of {} trials did not converge and are excluded",
                    all.len() - times.len(),
                    all.len()
                ));
            }
            let k = times.len() as f64;
            let mean = times.iter().sum::<f64>() / k;
            let var = if times.len() > 1 {
                times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            SpeedSummary {
                n,
                mean_seconds: mean,
                std_seconds: var.sqrt(),
                converged_trials: times.len(),
            }
        })
        .collect();
    let usable: Vec<&SpeedSummary> = per_size.iter().filter(|s| s.converged_trials > 0).collect();
    let tail = &usable[usable.len().saturating_sub(3)..];
    let slope = (tail.len() >= 2).then(|| {
        let xs: Vec<f64> = tail.iter().map(|s| (s.n as f64).ln()).collect();
        let ys: Vec<f64> = tail.iter().map(|s| s.mean_seconds.ln()).collect();
        least_squares_slope(&xs, &ys)
    });
    SpeedReport {
        per_size,
        slope,
        warnings,
    }
}

pub fn speed_csv(records: &[SpeedRecord]) -> String {
    let mut out = String::from(SPEED_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:e},{:.6}",
            r.n,
            r.trial,
            r.seed,
            u8::from(r.converged),
            r.iterations,
            r.rel_err,
            r.seconds
        );
    }
    out
}

pub fn speed_summary_csv(report: &SpeedReport) -> String {
    let mut out = String::from(SPEED_SUMMARY_HEADER);
    out.push('\n');
    for s in &report.per_size {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{}",
            s.n, s.mean_seconds, s.std_seconds, s.converged_trials
        );
    }
    out
}

/// Per-iteration diagnostics against a known ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub residual: f64,
    pub rel_err: f64,
    pub dist: f64,
}

pub const TRACE_HEADER: &str = "k,residual,rel_err,dist";

/// Balanced ground-truth factors `(U Σ^½, V Σ^½)` of `G(z)`.
pub fn reference_factors(ops: &HankelOps, z: &[C64], rank: usize) -> Result<FactorPair> {
    let svd = truncated_svd_hankel(ops, z, rank)?;
    let root = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        rank,
        svd.sigma.iter().map(|s| C64::new(s.sqrt(), 0.0)),
    ));
    FactorPair::new(&svd.u * &root, &svd.v * &root)
}

pub fn trace(instance: &ProblemInstance, cfg: &HsgdConfig) -> Result<Vec<TraceRow>> {
    let solver = HsgdSolver::for_length(instance.n(), cfg.clone())?;
    let reference = reference_factors(solver.ops(), &instance.z_true, cfg.rank)?;
    let mut rows = Vec::new();
    let mut failure = None;
    // the observer sees every attempt; a restart after step halving resets k to 0
    solver.run_observed(&instance.f_obs, &instance.mask, |state| {
        if state.k == 0 {
            rows.clear();
        }
        let rel_err = relative_error(&state.z, &instance.z_true);
        let dist = aligned_distance(&state.factors, &reference);
        match (rel_err, dist) {
            (Ok(rel_err), Ok(d)) => rows.push(TraceRow {
                k: state.k,
                residual: state.residual(),
                rel_err,
                dist: d.d,
            }),
            (Err(e), _) | (_, Err(e)) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(rows),
    }
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{:e},{:e},{:e}", r.k, r.residual, r.rel_err, r.dist);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> ExperimentGridSpec {
        ExperimentGridSpec {
            axis1: GridAxis::parse("rank=1,2").unwrap(),
            axis2: GridAxis::parse("alpha=0,0.1").unwrap(),
            n: 41,
            rank: 1,
            alpha: 0.0,
            samples: 30,
            trials: 3,
            seed_base: 17,
            solver: HsgdConfig::default(),
            outlier_scale: 10.0,
        }
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(1, &[2, 3]), derive_seed(1, &[2, 3]));
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_ne!(derive_seed(1, &[0]), derive_seed(2, &[0]));
        // pinned so grids reproduce across machines and releases
        assert_eq!(derive_seed(0, &[]), 0xe220_a839_7b1d_cdaf);
    }

    #[test]
    fn axis_parsing() {
        let a = GridAxis::parse("samples=30,40").unwrap();
        assert_eq!(a.param, GridParam::Samples);
        assert_eq!(a.values, vec![30.0, 40.0]);
        assert!(GridAxis::parse("beta=1").is_err());
        assert!(GridAxis::parse("rank").is_err());
        let mut spec = small_grid();
        spec.axis2 = GridAxis::parse("rank=1").unwrap();
        assert!(spec.validate().is_err());
        let mut spec = small_grid();
        spec.axis1 = GridAxis::parse("rank=1.5").unwrap();
        assert!(spec.validate().is_err());
        let mut spec = small_grid();
        spec.axis1 = GridAxis::parse("samples=42").unwrap();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn grid_is_order_independent() {
        let spec = small_grid();
        let seq = phase_grid(&spec, Execution::Sequential).unwrap();
        let par = phase_grid(&spec, Execution::Parallel).unwrap();
        assert_eq!(trials_csv(&seq), trials_csv(&par));
        assert_eq!(seq.len(), 12);
    }

    #[test]
    fn summary_reproduces_from_csv() {
        let records = phase_grid(&small_grid(), Execution::Parallel).unwrap();
        let text = trials_csv(&records);
        let parsed = parse_trials_csv(&text).unwrap();
        assert_eq!(
            summary_csv(&summarize(&parsed)),
            summary_csv(&summarize(&records))
        );
        assert_eq!(trials_csv(&parsed), text);
    }

    #[test]
    fn slope_of_power_law() {
        let xs: Vec<f64> = [1.0f64, 2.0, 4.0].iter().map(|x| x.ln()).collect();
        let ys: Vec<f64> = [3.0f64, 6.0, 12.0].iter().map(|y| y.ln()).collect();
        assert!((least_squares_slope(&xs, &ys) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn speed_report_excludes_unconverged() {
        let rec = |n, converged, seconds| SpeedRecord {
            n,
            trial: 0,
            seed: 0,
            converged,
            iterations: 1,
            rel_err: 0.0,
            seconds,
        };
        let records = vec![
            rec(100, true, 1.0),
            rec(100, false, 50.0),
            rec(200, true, 2.0),
            rec(400, true, 4.0),
            rec(800, true, 8.0),
        ];
        let rep = speed_report(&records);
        assert_eq!(rep.per_size[0].mean_seconds, 1.0);
        assert_eq!(rep.warnings.len(), 1);
        assert!((rep.slope.unwrap() - 1.0).abs() < 1e-12);
    }
}
