//! Flat `key = value` experiment configs (TOML syntax).
//!
//! ```toml
//! objective = "rastrigin"
//! dim = 20
//! sigma = 0.0
//! sweep = "gamma"
//! values = [1.0, 1.5, 2.0]
//! ```
//!
//! Every key is optional; missing keys fall back to the benchmark defaults of
//! [`KboConfig::default`]. Unknown keys and badly typed values are errors.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{ExperimentSpec, Sweep, DEFAULT_M_RUNS};
use crate::error::{KboError, Result};
use crate::kbo::{DiffusionMode, InitBox, KboConfig, StallMode};

/// Every recognized key. Also used for command-line overrides, where a set
/// field replaces the value from the file.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFields {
    pub name: Option<String>,
    pub objective: Option<String>,
    pub dim: Option<usize>,
    pub nu: Option<f64>,
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub dt: Option<f64>,
    pub n_t: Option<usize>,
    pub n_particles: Option<usize>,
    pub diffusion_mode: Option<DiffusionMode>,
    pub delta_stall: Option<f64>,
    pub j_stall: Option<usize>,
    pub stall_mode: Option<StallMode>,
    pub seed: Option<u64>,
    pub init_lo: Option<f64>,
    pub init_hi: Option<f64>,
    pub noise_clip: Option<f64>,
    pub m_runs: Option<usize>,
    /// One of `gamma`, `sigma`, `dim`, `objective`.
    pub sweep: Option<String>,
    pub values: Option<Vec<f64>>,
    pub objectives: Option<Vec<String>>,
    pub iters_success_only: Option<bool>,
    pub output: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl ConfigFields {
    /// Fields set in `other` win.
    pub fn merge(mut self, other: &ConfigFields) -> Self {
        merge_fields!(self, other; name, objective, dim, nu, sigma, gamma, alpha, beta, dt, n_t,
            n_particles, diffusion_mode, delta_stall, j_stall, stall_mode, seed, init_lo, init_hi,
            noise_clip, m_runs, sweep, values, objectives, iters_success_only, output);
        self
    }

    pub fn into_spec(self) -> Result<ExperimentSpec> {
        let d = KboConfig::default();
        let dim = self.dim.unwrap_or(d.dim);
        let init_box = match (self.init_lo, self.init_hi) {
            (None, None) => None,
            (lo, hi) => {
                let (dlo, dhi) = crate::objectives::DEFAULT_INIT_BOX;
                Some(InitBox::cube(lo.unwrap_or(dlo), hi.unwrap_or(dhi), dim))
            }
        };
        let base = KboConfig {
            nu: self.nu.unwrap_or(d.nu),
            sigma: self.sigma.unwrap_or(d.sigma),
            gamma: self.gamma.unwrap_or(d.gamma),
            alpha: self.alpha.unwrap_or(d.alpha),
            beta: self.beta.unwrap_or(d.beta),
            dt: self.dt.unwrap_or(d.dt),
            n_t: self.n_t.unwrap_or(d.n_t),
            n_particles: self.n_particles.unwrap_or(d.n_particles),
            dim,
            diffusion_mode: self.diffusion_mode.unwrap_or(d.diffusion_mode),
            delta_stall: self.delta_stall.unwrap_or(d.delta_stall),
            j_stall: self.j_stall.unwrap_or(d.j_stall),
            stall_mode: self.stall_mode.unwrap_or(d.stall_mode),
            seed: self.seed.unwrap_or(d.seed),
            init_box,
            noise_clip: self.noise_clip,
            record_trajectory: false,
            vp_power: None,
        };

        let sweep = match self.sweep.as_deref() {
            None => {
                if self.values.is_some() || self.objectives.is_some() {
                    return Err(KboError::Config("`values`/`objectives` given without `sweep`".into()));
                }
                base.validate()?;
                Sweep::Gamma(vec![base.gamma])
            }
            Some("objective") => {
                if self.values.is_some() {
                    return Err(KboError::Config("objective sweep takes `objectives`, not `values`".into()));
                }
                Sweep::Objective(self.objectives.ok_or_else(|| {
                    KboError::Config("objective sweep needs `objectives`".into())
                })?)
            }
            Some(axis) => {
                if self.objectives.is_some() {
                    return Err(KboError::Config(format!("{axis} sweep takes `values`, not `objectives`")));
                }
                let values = self
                    .values
                    .ok_or_else(|| KboError::Config(format!("{axis} sweep needs `values`")))?;
                match axis {
                    "gamma" => Sweep::Gamma(values),
                    "sigma" => Sweep::Sigma(values),
                    "dim" => Sweep::Dim(
                        values
                            .iter()
                            .map(|&v| {
                                if v >= 1.0 && v.fract() == 0.0 {
                                    Ok(v as usize)
                                } else {
                                    Err(KboError::Config(format!("dim value {v} is not a positive integer")))
                                }
                            })
                            .collect::<Result<_>>()?,
                    ),
                    other => {
                        return Err(KboError::Config(format!(
                            "unknown sweep axis `{other}` (expected gamma, sigma, dim or objective)"
                        )))
                    }
                }
            }
        };

        let spec = ExperimentSpec {
            name: self.name.unwrap_or_else(|| "experiment".into()),
            objective: self.objective.unwrap_or_else(|| "rastrigin".into()),
            base,
            sweep,
            m_runs: self.m_runs.unwrap_or(DEFAULT_M_RUNS),
            iters_success_only: self.iters_success_only.unwrap_or(false),
            output: self.output,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Parses TOML text into fields; errors carry the offending key and line.
pub fn parse_fields(text: &str) -> Result<ConfigFields> {
    toml::from_str(text).map_err(|e| KboError::Config(e.to_string()))
}

/// Parses `text`, applies `overrides` and builds the spec. Semantic errors
/// are annotated with the line of the key that caused them, when the key
/// appears in `text`.
pub fn parse_config_str(text: &str, overrides: &ConfigFields) -> Result<ExperimentSpec> {
    let fields = parse_fields(text)?.merge(overrides);
    fields.into_spec().map_err(|e| annotate(e, text))
}

pub fn parse_config(path: Option<&Path>, overrides: &ConfigFields) -> Result<ExperimentSpec> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|source| KboError::Io {
            path: p.to_path_buf(),
            source,
        })?,
        None => String::new(),
    };
    parse_config_str(&text, overrides)
}

fn annotate(err: KboError, text: &str) -> KboError {
    let key = match &err {
        KboError::InvalidParameter { name, .. } => *name,
        KboError::InvalidAlpha(_) => "alpha",
        KboError::InvalidSweep(_) => "values",
        KboError::UnknownObjective(_) => "objective",
        _ => return err,
    };
    match key_line(text, key) {
        Some(line) => KboError::Config(format!("key `{key}` at line {line}: {err}")),
        None => err,
    }
}

fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        l.trim_start()
            .strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_benchmark_defaults() {
        let spec = parse_config_str("", &ConfigFields::default()).unwrap();
        assert_eq!(spec.objective, "rastrigin");
        assert_eq!(spec.base, KboConfig::default());
        assert_eq!(spec.base.beta, 5e6);
        assert_eq!(spec.base.n_particles, 200);
        assert_eq!(spec.base.n_t, 10_000);
        assert_eq!(spec.base.dt, 0.1);
        assert_eq!(spec.base.j_stall, 1000);
        assert_eq!(spec.base.delta_stall, 1e-4);
        assert_eq!((spec.base.nu, spec.base.alpha), (1.0, 1.5));
        assert_eq!(spec.m_runs, 20);
        let spec = parse_config_str("", &ConfigFields { dim: Some(7), ..Default::default() }).unwrap();
        assert_eq!(spec.base.dim, 7);
    }

    #[test]
    fn negative_gamma_rejected_with_line() {
        let err = parse_config_str("dim = 2\ngamma = -1\n", &ConfigFields::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gamma") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn unknown_key_and_type_errors_name_key_and_line() {
        let msg = parse_config_str("dim = 2\nbogus = 1\n", &ConfigFields::default())
            .unwrap_err()
            .to_string();
        assert!(msg.contains("bogus") && msg.contains("line 2"), "{msg}");
        let msg = parse_config_str("dt = \"fast\"\n", &ConfigFields::default())
            .unwrap_err()
            .to_string();
        assert!(msg.contains("dt") && msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn flag_override_wins() {
        let over = ConfigFields { dt: Some(0.05), ..Default::default() };
        let spec = parse_config_str("dt = 0.2\n", &over).unwrap();
        assert_eq!(spec.base.dt, 0.05);
    }

    #[test]
    fn sweeps() {
        let spec = parse_config_str("sweep = \"sigma\"\nvalues = [0, 3]\n", &Default::default()).unwrap();
        assert_eq!(spec.sweep, Sweep::Sigma(vec![0.0, 3.0]));
        let spec = parse_config_str("sweep = \"dim\"\nvalues = [1, 5]\n", &Default::default()).unwrap();
        assert_eq!(spec.sweep, Sweep::Dim(vec![1, 5]));
        let spec = parse_config_str(
            "sweep = \"objective\"\nobjectives = [\"sphere\", \"rosenbrock\"]\n",
            &Default::default(),
        )
        .unwrap();
        assert_eq!(spec.sweep.len(), 2);
        for bad in [
            "sweep = \"dim\"\nvalues = [1.5]\n",
            "sweep = \"beta\"\nvalues = [1]\n",
            "values = [1]\n",
            "sweep = \"gamma\"\n",
            "sweep = \"gamma\"\nobjectives = [\"sphere\"]\nvalues = [1]\n",
            "objective = \"nope\"\n",
            "diffusion_mode = \"diagonal\"\n",
        ] {
            assert!(parse_config_str(bad, &Default::default()).is_err(), "{bad}");
        }
    }

    #[test]
    fn modes_and_box() {
        let spec = parse_config_str(
            "diffusion_mode = \"isotropic\"\nstall_mode = \"cumulative\"\ninit_lo = 1\ninit_hi = 2\ndim = 3\n",
            &Default::default(),
        )
        .unwrap();
        assert_eq!(spec.base.diffusion_mode, DiffusionMode::Isotropic);
        assert_eq!(spec.base.stall_mode, StallMode::Cumulative);
        assert_eq!(spec.base.init_box, Some(InitBox::cube(1.0, 2.0, 3)));
        assert!(parse_config_str("init_lo = 3\ninit_hi = 2\n", &Default::default()).is_err());
    }
}
