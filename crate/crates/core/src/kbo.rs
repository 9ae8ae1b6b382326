//! Particle dynamics: consensus point, drift/diffusion splitting and the run
//! loop with stall-based termination.
//!
//! One iteration moves every particle in two stages around the current
//! consensus point `x̄`:
//!
//! ```text
//! x*  = x + ν Δt (x̄ − x)
//! x** = x* + σ √Δt D(x̄, x*) z + γ Δt^{1/α} D(x̄, x*) z̃
//! ```
//!
//! with `z ~ N(0, 1)` and `z̃` unit-scale symmetric α-stable, both drawn
//! componentwise. `x̄` is computed once per iteration, before the drift.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::diagnostics;
use crate::error::{KboError, Result};
use crate::objectives::Objective;
use crate::rng::{RngStream, StableLaw};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffusionMode {
    /// `D = |x̄ − x| Id`.
    Isotropic,
    /// `D = diag(x̄ − x)`.
    #[default]
    Anisotropic,
}

/// How the stall counter `j` reacts to an iteration in which the consensus
/// point moved more than `delta_stall`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StallMode {
    /// Reset to zero: `j_stall` counts consecutive stalled iterations.
    #[default]
    Consecutive,
    /// Keep the count: `j_stall` counts stalled iterations in total.
    Cumulative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminatedBy {
    Stall,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl InitBox {
    pub fn cube(lo: f64, hi: f64, dim: usize) -> Self {
        Self {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        for v in [&self.lo, &self.hi] {
            if v.len() != dim {
                return Err(KboError::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
        }
        for (coord, (&lo, &hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(KboError::DegenerateBox { coord, lo, hi });
            }
        }
        Ok(())
    }
}

/// Run parameters. [`Default`] gives the benchmark setting: `β = 5·10⁶`,
/// `N = 200`, `N_t = 10⁴`, `Δt = 0.1`, `j_stall = 10³`, `δ_stall = 10⁻⁴`,
/// `ν = 1`, `α = 1.5`, pure jumps with `γ = 2`, `d = 20`.
#[derive(Clone, Debug, PartialEq)]
pub struct KboConfig {
    pub nu: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub dt: f64,
    pub n_t: usize,
    pub n_particles: usize,
    pub dim: usize,
    pub diffusion_mode: DiffusionMode,
    pub delta_stall: f64,
    pub j_stall: usize,
    pub stall_mode: StallMode,
    pub seed: u64,
    /// `None` samples from the objective's own box.
    pub init_box: Option<InitBox>,
    /// Bound on the magnitude of each jump increment component. Off by default.
    pub noise_clip: Option<f64>,
    pub record_trajectory: bool,
    /// Exponent `p` of the `V_p` moment recorded every iteration, if any.
    pub vp_power: Option<f64>,
}

impl Default for KboConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            sigma: 0.0,
            gamma: 2.0,
            alpha: 1.5,
            beta: 5e6,
            dt: 0.1,
            n_t: 10_000,
            n_particles: 200,
            dim: 20,
            diffusion_mode: DiffusionMode::Anisotropic,
            delta_stall: 1e-4,
            j_stall: 1_000,
            stall_mode: StallMode::Consecutive,
            seed: 0,
            init_box: None,
            noise_clip: None,
            record_trajectory: false,
            vp_power: None,
        }
    }
}

impl KboConfig {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [("nu", self.nu), ("sigma", self.sigma), ("gamma", self.gamma)];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(KboError::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(KboError::InvalidAlpha(self.alpha));
        }
        if !(self.beta > 0.0) {
            return Err(KboError::param("beta", format!("must be > 0, got {}", self.beta)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(KboError::param("dt", format!("must be > 0, got {}", self.dt)));
        }
        if self.nu * self.dt > 1.0 {
            return Err(KboError::param(
                "nu",
                format!("nu * dt = {} overshoots the consensus point", self.nu * self.dt),
            ));
        }
        if self.n_t == 0 {
            return Err(KboError::param("n_t", "must be at least 1"));
        }
        if self.n_particles == 0 {
            return Err(KboError::param("n_particles", "must be at least 1"));
        }
        if self.dim == 0 {
            return Err(KboError::param("dim", "must be at least 1"));
        }
        if !(self.delta_stall >= 0.0) {
            return Err(KboError::param("delta_stall", "must be >= 0"));
        }
        if self.j_stall == 0 {
            return Err(KboError::param("j_stall", "must be at least 1"));
        }
        if let Some(c) = self.noise_clip {
            if !(c > 0.0) {
                return Err(KboError::param("noise_clip", format!("must be > 0, got {c}")));
            }
        }
        if let Some(p) = self.vp_power {
            if !(p > 0.0) {
                return Err(KboError::param("vp_power", format!("must be > 0, got {p}")));
            }
        }
        if let Some(b) = &self.init_box {
            b.check(self.dim)?;
        }
        Ok(())
    }

    fn resolved_box(&self, obj: Option<&Objective>) -> InitBox {
        match (&self.init_box, obj) {
            (Some(b), _) => b.clone(),
            (None, Some(o)) => {
                let (lo, hi) = o.init_box();
                InitBox {
                    lo: lo.to_vec(),
                    hi: hi.to_vec(),
                }
            }
            (None, None) => {
                let (lo, hi) = crate::objectives::DEFAULT_INIT_BOX;
                InitBox::cube(lo, hi, self.dim)
            }
        }
    }
}

/// `N` particles in `ℝ^d`, one per row.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble {
    positions: Array2<f64>,
    step_index: usize,
}

impl ParticleEnsemble {
    pub fn from_positions(positions: Array2<f64>) -> Result<Self> {
        let (n, d) = positions.dim();
        if n == 0 || d == 0 {
            return Err(KboError::EmptyInput("ensemble"));
        }
        Ok(Self {
            positions: positions.as_standard_layout().into_owned(),
            step_index: 0,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.len() != d {
                return Err(KboError::DimensionMismatch {
                    expected: d,
                    actual: r.len(),
                });
            }
            flat.extend_from_slice(r);
        }
        let positions = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| KboError::param("rows", e.to_string()))?;
        Self::from_positions(positions)
    }

    /// I.i.d. uniform samples on `bbox`.
    pub fn uniform(n: usize, bbox: &InitBox, stream: &mut RngStream) -> Result<Self> {
        if n == 0 {
            return Err(KboError::param("n_particles", "must be at least 1"));
        }
        let d = bbox.lo.len();
        if d == 0 {
            return Err(KboError::param("dim", "must be at least 1"));
        }
        bbox.check(d)?;
        let positions =
            Array2::from_shape_fn((n, d), |(_, k)| stream.uniform_range(bbox.lo[k], bbox.hi[k]));
        Self::from_positions(positions)
    }

    pub fn n_particles(&self) -> usize {
        self.positions.nrows()
    }

    pub fn dim(&self) -> usize {
        self.positions.ncols()
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn positions(&self) -> &Array2<f64> {
        &self.positions
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        self.row_slice(i)
    }

    fn row_slice(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.positions.as_slice().expect("standard layout")[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.positions
            .as_slice()
            .expect("standard layout")
            .chunks_exact(self.dim())
    }

    fn rows_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        let d = self.dim();
        self.positions
            .as_slice_mut()
            .expect("standard layout")
            .chunks_exact_mut(d)
    }

    pub fn energies(&self, obj: &Objective) -> Result<Vec<f64>> {
        if obj.dim() != self.dim() {
            return Err(KboError::DimensionMismatch {
                expected: obj.dim(),
                actual: self.dim(),
            });
        }
        Ok(self.rows().map(|x| obj.eval_unchecked(x)).collect())
    }
}

/// Samples the initial ensemble on the configured box (or the default
/// benchmark box when none is set).
pub fn init_ensemble(config: &KboConfig, stream: &mut RngStream) -> Result<ParticleEnsemble> {
    let bbox = config.resolved_box(None);
    ParticleEnsemble::uniform(config.n_particles, &bbox, stream)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusState {
    pub point: Vec<f64>,
    /// `log Σ_i exp(−β(ℰ_i − min_j ℰ_j))`.
    pub weight_log_normalizer: f64,
    pub best_particle_energy: f64,
}

pub fn consensus_point(
    ensemble: &ParticleEnsemble,
    obj: &Objective,
    beta: f64,
) -> Result<ConsensusState> {
    let energies = ensemble.energies(obj)?;
    consensus_from_energies(ensemble, &energies, beta)
}

/// Gibbs-weighted mean `Σ x_i w_i / Σ w_i` with `w_i = exp(−β(ℰ_i − min ℰ))`.
///
/// The shift by the minimum energy leaves the ratio unchanged and keeps the
/// largest weight at exactly 1, so any finite `β` is safe. Non-finite
/// energies get zero weight.
pub fn consensus_from_energies(
    ensemble: &ParticleEnsemble,
    energies: &[f64],
    beta: f64,
) -> Result<ConsensusState> {
    if !(beta > 0.0) {
        return Err(KboError::param("beta", format!("must be > 0, got {beta}")));
    }
    if energies.len() != ensemble.n_particles() {
        return Err(KboError::DimensionMismatch {
            expected: ensemble.n_particles(),
            actual: energies.len(),
        });
    }
    let best = energies
        .iter()
        .copied()
        .filter(|e| e.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(KboError::AllEnergiesInfinite);
    }
    let mut point = vec![0.0; ensemble.dim()];
    let mut total = 0.0;
    for (x, &e) in ensemble.rows().zip(energies) {
        if !e.is_finite() {
            continue;
        }
        let w = (-beta * (e - best)).exp();
        if w == 0.0 {
            continue;
        }
        total += w;
        for (p, &xk) in point.iter_mut().zip(x) {
            *p += w * xk;
        }
    }
    for p in &mut point {
        *p /= total;
    }
    Ok(ConsensusState {
        point,
        weight_log_normalizer: total.ln(),
        best_particle_energy: best,
    })
}

/// `x ← x + ν Δt (x̄ − x)` for every particle.
pub fn drift_step(
    ensemble: &mut ParticleEnsemble,
    consensus: &[f64],
    nu: f64,
    dt: f64,
) -> Result<()> {
    let rate = nu * dt;
    if !(0.0..=1.0).contains(&rate) {
        return Err(KboError::param("nu", format!("nu * dt = {rate} outside [0, 1]")));
    }
    check_consensus_dim(ensemble, consensus)?;
    if rate == 0.0 {
        return Ok(());
    }
    for x in ensemble.rows_mut() {
        drift_particle(x, consensus, rate);
    }
    Ok(())
}

fn drift_particle(x: &mut [f64], consensus: &[f64], rate: f64) {
    if rate == 1.0 {
        x.copy_from_slice(consensus);
        return;
    }
    for (xk, &ck) in x.iter_mut().zip(consensus) {
        *xk += rate * (ck - *xk);
    }
}

/// `D(x̄, x) · noise`: `|x̄ − x| noise` (isotropic) or `(x̄ − x)_k noise_k`
/// (anisotropic).
pub fn diffusion_apply(
    consensus: &[f64],
    x: &[f64],
    mode: DiffusionMode,
    noise: &[f64],
) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    apply_diffusion_into(consensus, x, mode, noise, &mut out);
    out
}

fn apply_diffusion_into(
    consensus: &[f64],
    x: &[f64],
    mode: DiffusionMode,
    noise: &[f64],
    out: &mut [f64],
) {
    match mode {
        DiffusionMode::Isotropic => {
            let dist = consensus
                .iter()
                .zip(x)
                .map(|(c, v)| (c - v) * (c - v))
                .sum::<f64>()
                .sqrt();
            for (o, n) in out.iter_mut().zip(noise) {
                *o = dist * n;
            }
        }
        DiffusionMode::Anisotropic => {
            for ((o, n), (c, v)) in out.iter_mut().zip(noise).zip(consensus.iter().zip(x)) {
                *o = (c - v) * n;
            }
        }
    }
}

/// Adds the Gaussian and α-stable increments, each modulated by the
/// diffusion matrix at the current (post-drift) positions.
pub fn diffusion_step(
    ensemble: &mut ParticleEnsemble,
    consensus: &[f64],
    config: &KboConfig,
    stream: &mut RngStream,
) -> Result<()> {
    check_consensus_dim(ensemble, consensus)?;
    let gauss_coef = config.sigma * config.dt.sqrt();
    let jump_coef = config.gamma * config.dt.powf(1.0 / config.alpha);
    let law = StableLaw::new(config.alpha)?;
    let d = ensemble.dim();
    let step = ensemble.step_index;
    let mut noise = vec![0.0; d];
    let mut incr = vec![0.0; d];
    let mut total = vec![0.0; d];

    for (i, x) in ensemble.rows_mut().enumerate() {
        total.fill(0.0);
        if gauss_coef > 0.0 {
            for z in noise.iter_mut() {
                *z = stream.sample_normal();
            }
            apply_diffusion_into(consensus, x, config.diffusion_mode, &noise, &mut incr);
            for (t, v) in total.iter_mut().zip(&incr) {
                *t += gauss_coef * v;
            }
        }
        if jump_coef > 0.0 {
            law.fill(&mut noise, stream);
            apply_diffusion_into(consensus, x, config.diffusion_mode, &noise, &mut incr);
            for (t, v) in total.iter_mut().zip(&incr) {
                let jump = jump_coef * v;
                *t += match config.noise_clip {
                    Some(c) => jump.clamp(-c, c),
                    None => jump,
                };
            }
        }
        for (xk, t) in x.iter_mut().zip(&total) {
            *xk += t;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(KboError::NonFinitePosition { particle: i, step });
        }
    }
    Ok(())
}

/// Drift then diffusion around a given consensus point; advances the step
/// index. Use this to drive the ensemble with an externally pinned `x̄`.
pub fn step_with_consensus(
    ensemble: &mut ParticleEnsemble,
    consensus: &[f64],
    config: &KboConfig,
    stream: &mut RngStream,
) -> Result<()> {
    drift_step(ensemble, consensus, config.nu, config.dt)?;
    diffusion_step(ensemble, consensus, config, stream)?;
    ensemble.step_index += 1;
    Ok(())
}

/// One full iteration: consensus on the current ensemble, then drift and
/// diffusion around it. Returns the consensus that was used.
pub fn kbo_step(
    ensemble: &mut ParticleEnsemble,
    obj: &Objective,
    config: &KboConfig,
    stream: &mut RngStream,
) -> Result<ConsensusState> {
    let state = consensus_point(ensemble, obj, config.beta)?;
    step_with_consensus(ensemble, &state.point, config, stream)?;
    Ok(state)
}

fn check_consensus_dim(ensemble: &ParticleEnsemble, consensus: &[f64]) -> Result<()> {
    if consensus.len() != ensemble.dim() {
        return Err(KboError::DimensionMismatch {
            expected: ensemble.dim(),
            actual: consensus.len(),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub success: bool,
    pub iterations_used: usize,
    pub final_consensus: Vec<f64>,
    /// `x̄^0, x̄^1, …, x̄^n` when trajectory recording is on.
    pub consensus_trajectory: Option<Vec<Vec<f64>>>,
    /// `(t_n, V_p(t_n))` when `vp_power` is set.
    pub vp_trajectory: Option<Vec<(f64, f64)>>,
    pub terminated_by: TerminatedBy,
}

pub fn run(obj: &Objective, config: &KboConfig) -> Result<RunRecord> {
    run_with_stream(obj, config, &mut RngStream::new(config.seed))
}

/// The full iteration loop, drawing all randomness from `stream`.
///
/// Terminates after `n_t` iterations or once the stall counter reaches
/// `j_stall`, where an iteration counts as stalled when the consensus point
/// moved at most `delta_stall` in the max norm.
pub fn run_with_stream(
    obj: &Objective,
    config: &KboConfig,
    stream: &mut RngStream,
) -> Result<RunRecord> {
    config.validate()?;
    if obj.dim() != config.dim {
        return Err(KboError::DimensionMismatch {
            expected: config.dim,
            actual: obj.dim(),
        });
    }
    let bbox = config.resolved_box(Some(obj));
    let mut ensemble = ParticleEnsemble::uniform(config.n_particles, &bbox, stream)?;
    let mut consensus = consensus_point(&ensemble, obj, config.beta)?.point;

    let vp_at = |ens: &ParticleEnsemble, p: f64| {
        diagnostics::v_p_moment(ens, obj.minimizer(), p).expect("dimension checked")
    };
    let mut consensus_traj = config.record_trajectory.then(|| vec![consensus.clone()]);
    let mut vp_traj = config.vp_power.map(|p| vec![(0.0, vp_at(&ensemble, p))]);

    let mut n = 0;
    let mut stalled = 0;
    while n < config.n_t && stalled < config.j_stall {
        step_with_consensus(&mut ensemble, &consensus, config, stream)?;
        let next = consensus_point(&ensemble, obj, config.beta)?.point;
        let moved = next
            .iter()
            .zip(&consensus)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if moved <= config.delta_stall {
            stalled += 1;
        } else if config.stall_mode == StallMode::Consecutive {
            stalled = 0;
        }
        consensus = next;
        n += 1;
        if let Some(t) = consensus_traj.as_mut() {
            t.push(consensus.clone());
        }
        if let (Some(t), Some(p)) = (vp_traj.as_mut(), config.vp_power) {
            t.push((n as f64 * config.dt, vp_at(&ensemble, p)));
        }
    }

    let success = diagnostics::success_check(&consensus, obj.minimizer())?;
    Ok(RunRecord {
        success,
        iterations_used: n,
        final_consensus: consensus,
        consensus_trajectory: consensus_traj,
        vp_trajectory: vp_traj,
        terminated_by: if stalled >= config.j_stall {
            TerminatedBy::Stall
        } else {
            TerminatedBy::MaxIter
        },
    })
}
