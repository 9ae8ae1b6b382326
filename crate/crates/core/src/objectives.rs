//! Benchmark objectives with known global minimizers.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{KboError, Result};

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Lower and upper corner of the sampling box used for the initial ensemble.
pub const DEFAULT_INIT_BOX: (f64, f64) = (-5.12, -2.0);

/// Names accepted by [`Objective::by_name`].
pub const REGISTRY: &[&str] = &[
    "rastrigin",
    "rastrigin_std",
    "modified_alpine",
    "rosenbrock",
    "sphere",
    "l1_norm",
];

/// `10 + Σ (x_k² − 10 cos 2πx_k)`. The constant is 10 regardless of `d`, so the
/// minimum value is `10(1 − d)`.
pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 + x
        .iter()
        .map(|&v| v * v - 10.0 * (2.0 * PI * v).cos())
        .sum::<f64>()
}

/// Conventional Rastrigin, `10d + Σ (x_k² − 10 cos 2πx_k)`, minimum 0.
pub fn rastrigin_std(x: &[f64]) -> f64 {
    10.0 * x.len() as f64
        + x.iter()
            .map(|&v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>()
}

pub fn modified_alpine(x: &[f64]) -> f64 {
    x.iter().map(|&v| (v * v.sin()).abs() + 0.2 * v.abs()).sum()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// An objective `ℰ: ℝ^d → ℝ` with its global minimizer and initialization box.
///
/// Cheap to clone and safe to evaluate from many threads.
#[derive(Clone)]
pub struct Objective {
    name: String,
    dim: usize,
    eval: Arc<EvalFn>,
    minimizer: Vec<f64>,
    init_lo: Vec<f64>,
    init_hi: Vec<f64>,
    differentiable: bool,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("minimizer", &self.minimizer)
            .field("differentiable", &self.differentiable)
            .finish()
    }
}

impl Objective {
    pub fn by_name(name: &str, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(KboError::param("dim", "must be at least 1"));
        }
        let (f, min, diff): (fn(&[f64]) -> f64, f64, bool) = match name {
            "rastrigin" => (rastrigin, 0.0, true),
            "rastrigin_std" => (rastrigin_std, 0.0, true),
            "modified_alpine" => (modified_alpine, 0.0, false),
            "rosenbrock" => (rosenbrock, 1.0, true),
            "sphere" => (sphere, 0.0, true),
            "l1_norm" => (l1_norm, 0.0, false),
            _ => return Err(KboError::UnknownObjective(name.to_string())),
        };
        Ok(Self::custom(name, dim, f, vec![min; dim], diff))
    }

    /// Wraps an arbitrary function; the init box defaults to `[-5.12, -2]^dim`.
    pub fn custom<F>(
        name: impl Into<String>,
        dim: usize,
        eval: F,
        minimizer: Vec<f64>,
        differentiable: bool,
    ) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        assert_eq!(minimizer.len(), dim, "minimizer length must equal dim");
        Self {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            minimizer,
            init_lo: vec![DEFAULT_INIT_BOX.0; dim],
            init_hi: vec![DEFAULT_INIT_BOX.1; dim],
            differentiable,
        }
    }

    pub fn with_init_box(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        for v in [&lo, &hi] {
            if v.len() != self.dim {
                return Err(KboError::DimensionMismatch {
                    expected: self.dim,
                    actual: v.len(),
                });
            }
        }
        self.init_lo = lo;
        self.init_hi = hi;
        Ok(self)
    }

    /// `x ↦ ℰ(x − shift)` with minimizer and init box moved by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        self.check_dim(shift.len())?;
        let inner = Arc::clone(&self.eval);
        let a = shift.to_vec();
        let eval = move |x: &[f64]| {
            let y: Vec<f64> = x.iter().zip(&a).map(|(xi, ai)| xi - ai).collect();
            inner(&y)
        };
        let add = |v: &[f64]| v.iter().zip(shift).map(|(x, a)| x + a).collect::<Vec<_>>();
        Ok(Self {
            name: format!("{}_shifted", self.name),
            dim: self.dim,
            eval: Arc::new(eval),
            minimizer: add(&self.minimizer),
            init_lo: add(&self.init_lo),
            init_hi: add(&self.init_hi),
            differentiable: self.differentiable,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn minimizer(&self) -> &[f64] {
        &self.minimizer
    }

    pub fn init_box(&self) -> (&[f64], &[f64]) {
        (&self.init_lo, &self.init_hi)
    }

    pub fn differentiable(&self) -> bool {
        self.differentiable
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok((self.eval)(x))
    }

    /// Evaluation without the dimension check, for hot loops over rows of an
    /// ensemble whose width already matches.
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x)
    }

    fn check_dim(&self, actual: usize) -> Result<()> {
        if actual != self.dim {
            return Err(KboError::DimensionMismatch {
                expected: self.dim,
                actual,
            });
        }
        Ok(())
    }
}

/// Dispatches to `obj` after checking the dimension.
pub fn eval_objective(obj: &Objective, x: &[f64]) -> Result<f64> {
    obj.eval(x)
}
