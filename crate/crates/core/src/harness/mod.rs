//! Experiment harness: parameter sweeps over seeded independent runs,
//! success-rate aggregation and CSV output.

mod config;
mod csv;
mod presets;

use std::fmt;
use std::path::PathBuf;

use rayon::prelude::*;

pub use config::{parse_config, parse_config_str, ConfigFields};
pub use csv::{emit_convergence_csv, emit_csv, emit_density_csv, render_results, CSV_HEADER};
pub use presets::{preset, PresetOverrides, PRESETS};

use crate::error::{KboError, Result};
use crate::kbo::{run_with_stream, KboConfig, RunRecord};
use crate::objectives::Objective;
use crate::rng::RngStream;

/// Runs per sweep point.
pub const DEFAULT_M_RUNS: usize = 20;

/// The single parameter varied across an experiment.
#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    Gamma(Vec<f64>),
    Sigma(Vec<f64>),
    Dim(Vec<usize>),
    Objective(Vec<String>),
}

impl Sweep {
    pub fn axis_name(&self) -> &'static str {
        match self {
            Sweep::Gamma(_) => "gamma",
            Sweep::Sigma(_) => "sigma",
            Sweep::Dim(_) => "dim",
            Sweep::Objective(_) => "objective",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::Gamma(v) | Sweep::Sigma(v) => v.len(),
            Sweep::Dim(v) => v.len(),
            Sweep::Objective(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn values(&self) -> Vec<AxisValue> {
        match self {
            Sweep::Gamma(v) | Sweep::Sigma(v) => v.iter().map(|&x| AxisValue::Real(x)).collect(),
            Sweep::Dim(v) => v.iter().map(|&x| AxisValue::Int(x)).collect(),
            Sweep::Objective(v) => v.iter().cloned().map(AxisValue::Name).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AxisValue {
    Real(f64),
    Int(usize),
    Name(String),
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Real(x) => write!(f, "{x}"),
            AxisValue::Int(x) => write!(f, "{x}"),
            AxisValue::Name(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    /// Label, used as the CSV file stem by presets.
    pub name: String,
    pub objective: String,
    /// Fixed run parameters; `base.seed` is the base seed of the experiment.
    pub base: KboConfig,
    pub sweep: Sweep,
    pub m_runs: usize,
    /// Average iterations over successful runs only.
    pub iters_success_only: bool,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let base = KboConfig::default();
        Self {
            name: "experiment".into(),
            objective: "rastrigin".into(),
            sweep: Sweep::Gamma(vec![base.gamma]),
            base,
            m_runs: DEFAULT_M_RUNS,
            iters_success_only: false,
            output: None,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m_runs == 0 {
            return Err(KboError::param("m_runs", "must be at least 1"));
        }
        if self.sweep.is_empty() {
            return Err(KboError::InvalidSweep(format!("{} sweep has no values", self.sweep.axis_name())));
        }
        for (value, cfg, _) in self.points()? {
            cfg.validate().map_err(|e| match self.sweep {
                Sweep::Gamma(_) | Sweep::Sigma(_) | Sweep::Dim(_) => {
                    KboError::InvalidSweep(format!("{} = {value}: {e}", self.sweep.axis_name()))
                }
                Sweep::Objective(_) => e,
            })?;
        }
        Ok(())
    }

    /// One resolved `(axis value, config, objective)` per sweep point.
    fn points(&self) -> Result<Vec<(AxisValue, KboConfig, Objective)>> {
        self.sweep
            .values()
            .into_iter()
            .map(|value| {
                let mut cfg = self.base.clone();
                let mut name = self.objective.as_str();
                match &value {
                    AxisValue::Real(x) => match self.sweep {
                        Sweep::Gamma(_) => cfg.gamma = *x,
                        _ => cfg.sigma = *x,
                    },
                    AxisValue::Int(d) => {
                        cfg.dim = *d;
                        if let Some(b) = cfg.init_box.as_mut() {
                            // A cube box follows the dimension.
                            let (lo, hi) = (b.lo[0], b.hi[0]);
                            *b = crate::kbo::InitBox::cube(lo, hi, *d);
                        }
                    }
                    AxisValue::Name(n) => name = n,
                }
                let obj = Objective::by_name(name, cfg.dim)?;
                Ok((value, cfg, obj))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub axis: AxisValue,
    pub success_rate: f64,
    pub mean_iterations: f64,
    pub m_runs: usize,
    pub seed: u64,
    pub records: Vec<RunRecord>,
}

impl SweepResult {
    fn aggregate(axis: AxisValue, seed: u64, records: Vec<RunRecord>, success_only: bool) -> Self {
        let m = records.len();
        let successes = records.iter().filter(|r| r.success).count();
        let counted: Vec<f64> = records
            .iter()
            .filter(|r| !success_only || r.success)
            .map(|r| r.iterations_used as f64)
            .collect();
        let mean_iterations = if counted.is_empty() {
            f64::NAN
        } else {
            counted.iter().sum::<f64>() / counted.len() as f64
        };
        Self {
            axis,
            success_rate: successes as f64 / m as f64,
            mean_iterations,
            m_runs: m,
            seed,
            records,
        }
    }
}

/// Runs `m_runs` independent runs per sweep point on the current rayon pool.
///
/// Run `i` draws from sub-stream `i` of the base seed, so the results are
/// identical for any number of worker threads.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<SweepResult>> {
    spec.validate()?;
    let seed = spec.base.seed;
    spec.points()?
        .into_iter()
        .map(|(axis, cfg, obj)| {
            let records = (0..spec.m_runs)
                .into_par_iter()
                .map(|i| run_with_stream(&obj, &cfg, &mut RngStream::derived(seed, i as u64)))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepResult::aggregate(axis, seed, records, spec.iters_success_only))
        })
        .collect()
}

/// [`run_experiment`] on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(spec: &ExperimentSpec, workers: usize) -> Result<Vec<SweepResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| KboError::param("workers", e.to_string()))?;
    pool.install(|| run_experiment(spec))
}
