//! Built-in benchmark experiments on the Rastrigin function and the
//! objective suites, all at the default run parameters.

use super::{ExperimentSpec, Sweep};
use crate::error::{KboError, Result};
use crate::kbo::KboConfig;

pub const PRESETS: &[&str] = &["test1", "test2", "test3", "test4", "validate"];

/// `(γ, σ)` regimes compared across dimensions and objectives.
const PURE_JUMPS: (f64, f64) = (2.0, 0.0);
const PURE_DIFFUSION: (f64, f64) = (0.0, 3.0);
const MIXED: (f64, f64) = (2.0, 3.0);

const TEST2_DIMS: &[usize] = &[1, 2, 5, 10, 15, 20, 30, 40, 50];
const DIFFERENTIABLE_SUITE: &[&str] = &["rastrigin", "rosenbrock", "sphere"];
const NON_DIFFERENTIABLE_SUITE: &[&str] = &["modified_alpine", "l1_norm"];

/// Knobs applied on top of a preset, mainly for quick or reproducibility runs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PresetOverrides {
    pub seed: Option<u64>,
    pub m_runs: Option<usize>,
    pub n_t: Option<usize>,
    pub n_particles: Option<usize>,
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

fn spec(name: String, objective: &str, base: KboConfig, sweep: Sweep) -> ExperimentSpec {
    ExperimentSpec {
        name,
        objective: objective.to_string(),
        base,
        sweep,
        ..ExperimentSpec::default()
    }
}

fn regime_label((gamma, sigma): (f64, f64)) -> String {
    format!("g{gamma}_s{sigma}")
}

/// The experiments of a preset (`test1` … `test4`); each becomes one CSV.
/// `validate` is not a sweep and is handled by the validation module.
pub fn preset(name: &str, over: &PresetOverrides) -> Result<Vec<ExperimentSpec>> {
    let base = KboConfig::default();
    let with = |gamma: f64, sigma: f64| KboConfig { gamma, sigma, ..base.clone() };
    let mut specs = match name {
        "test1" => [0.0, 3.0]
            .iter()
            .map(|&sigma| {
                spec(
                    format!("test1_sigma{sigma}"),
                    "rastrigin",
                    with(base.gamma, sigma),
                    Sweep::Gamma(grid(1.0, 5.0, 0.5)),
                )
            })
            .collect::<Vec<_>>(),
        "test2" => [PURE_JUMPS, PURE_DIFFUSION, MIXED]
            .iter()
            .map(|&r| {
                spec(
                    format!("test2_{}", regime_label(r)),
                    "rastrigin",
                    with(r.0, r.1),
                    Sweep::Dim(TEST2_DIMS.to_vec()),
                )
            })
            .collect(),
        "test3" => [0.0, 2.0]
            .iter()
            .map(|&gamma| {
                spec(
                    format!("test3_gamma{gamma}"),
                    "rastrigin",
                    with(gamma, base.sigma),
                    Sweep::Sigma(grid(0.0, 6.0, 0.5)),
                )
            })
            .collect(),
        "test4" => {
            let mut v = Vec::new();
            for (suite, members) in [("diff", DIFFERENTIABLE_SUITE), ("nondiff", NON_DIFFERENTIABLE_SUITE)] {
                for r in [PURE_DIFFUSION, PURE_JUMPS, MIXED] {
                    v.push(spec(
                        format!("test4_{suite}_{}", regime_label(r)),
                        members[0],
                        with(r.0, r.1),
                        Sweep::Objective(members.iter().map(|s| s.to_string()).collect()),
                    ));
                }
            }
            v
        }
        "validate" => {
            return Err(KboError::InvalidSweep(
                "`validate` is not a sweep preset; run the validation study instead".into(),
            ))
        }
        other => return Err(KboError::InvalidSweep(format!("unknown preset `{other}`"))),
    };
    for s in &mut specs {
        if let Some(seed) = over.seed {
            s.base.seed = seed;
        }
        if let Some(m) = over.m_runs {
            s.m_runs = m;
        }
        if let Some(n_t) = over.n_t {
            s.base.n_t = n_t;
        }
        if let Some(n) = over.n_particles {
            s.base.n_particles = n;
        }
    }
    Ok(specs)
}
