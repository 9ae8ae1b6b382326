//! One-dimensional check of the particle scheme against a closed-form
//! solution of the fractional Fokker–Planck dynamics.
//!
//! With `x̄ = 0`, `D(x̄, x) = x²`, `σ = 0` and `α = 1`, a standard Cauchy
//! initial law stays Cauchy with scale `b(t) = e^{−t} / (2 − e^{−t})`. The
//! particle positions are histogrammed on a grid and compared with that
//! density in the max norm.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::diagnostics::least_squares_slope;
use crate::error::{KboError, Result};
use crate::rng::{RngStream, StableLaw};

/// Particles per independent random sub-stream.
const CHUNK: usize = 8192;

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationConfig {
    pub n_particles: usize,
    pub dt: f64,
    pub t_final: f64,
    pub alpha: f64,
    pub nu: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            n_particles: 1_000_000,
            dt: 0.01,
            t_final: 2.0,
            alpha: 1.0,
            nu: 1.0,
            gamma: 1.0,
            sigma: 0.0,
            seed: 0,
        }
    }
}

impl ValidationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(KboError::param("n_particles", "must be at least 1"));
        }
        if !(self.dt > 0.0) || !(self.nu * self.dt <= 1.0) || self.nu < 0.0 {
            return Err(KboError::param("dt", "need dt > 0 and 0 <= nu * dt <= 1"));
        }
        if !(self.t_final >= 0.0) {
            return Err(KboError::param("t_final", "must be >= 0"));
        }
        if self.alpha != 1.0 {
            return Err(KboError::param(
                "alpha",
                format!("closed-form comparison needs alpha = 1, got {}", self.alpha),
            ));
        }
        if self.gamma < 0.0 || self.sigma < 0.0 {
            return Err(KboError::param("gamma", "gamma and sigma must be >= 0"));
        }
        Ok(())
    }

    fn steps_to(&self, t: f64) -> Result<usize> {
        let steps = (t / self.dt).round();
        if (steps * self.dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(KboError::param(
                "snapshot",
                format!("time {t} is not a multiple of dt = {}", self.dt),
            ));
        }
        Ok(steps as usize)
    }
}

/// Scale of the exact Cauchy solution at time `t`.
pub fn exact_scale(t: f64) -> f64 {
    let e = (-t).exp();
    e / (2.0 - e)
}

/// `f_ex(x, t) = b(t) / (π (b(t)² + x²))`.
pub fn exact_solution(x: f64, t: f64) -> f64 {
    let b = exact_scale(t);
    b / (PI * (b * b + x * x))
}

/// Uniform histogram grid on `[lo, hi)` with `m_x` cells; values live at cell
/// centers.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub lo: f64,
    pub hi: f64,
    pub m_x: usize,
    pub values: Vec<f64>,
}

impl Default for DensityGrid {
    fn default() -> Self {
        Self::new(-20.0, 20.0, 1 << 10).expect("valid default grid")
    }
}

impl DensityGrid {
    pub fn new(lo: f64, hi: f64, m_x: usize) -> Result<Self> {
        if !(lo < hi) || m_x == 0 {
            return Err(KboError::param("grid", format!("need lo < hi and m_x > 0, got [{lo}, {hi}], {m_x}")));
        }
        Ok(Self {
            lo,
            hi,
            m_x,
            values: vec![0.0; m_x],
        })
    }

    pub fn cell_width(&self) -> f64 {
        (self.hi - self.lo) / self.m_x as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.cell_width()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m_x).map(|k| self.center(k))
    }

    /// Mass captured inside the window.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_width()
    }

    fn bin(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x < self.hi) {
            return None;
        }
        let k = ((x - self.lo) / self.cell_width()) as usize;
        Some(k.min(self.m_x - 1))
    }

    fn check(&self) -> Result<()> {
        if self.values.len() != self.m_x {
            return Err(KboError::DimensionMismatch {
                expected: self.m_x,
                actual: self.values.len(),
            });
        }
        Ok(())
    }

    fn same_geometry(&self, other: &DensityGrid) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.m_x == other.m_x
    }
}

/// Histogram estimate `count_k / (n · cell_width)`. Samples outside the
/// window count toward `n` but fall in no cell.
pub fn reconstruct_density(samples: &[f64], grid: &DensityGrid) -> Result<DensityGrid> {
    if samples.is_empty() {
        return Err(KboError::EmptyInput("samples"));
    }
    grid.check()?;
    let counts = samples
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut c = vec![0u64; grid.m_x];
            for &x in chunk {
                if let Some(k) = grid.bin(x) {
                    c[k] += 1;
                }
            }
            c
        })
        .reduce(
            || vec![0u64; grid.m_x],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let norm = samples.len() as f64 * grid.cell_width();
    Ok(DensityGrid {
        values: counts.into_iter().map(|c| c as f64 / norm).collect(),
        ..grid.clone()
    })
}

/// `max_k |f_ex(center_k, t) − values_k|`.
pub fn linf_error(numeric: &DensityGrid, t: f64) -> Result<f64> {
    numeric.check()?;
    Ok(numeric
        .centers()
        .zip(&numeric.values)
        .map(|(x, v)| (exact_solution(x, t) - v).abs())
        .fold(0.0, f64::max))
}

/// Max-norm distance between two grids of identical geometry.
pub fn linf_distance(a: &DensityGrid, b: &DensityGrid) -> Result<f64> {
    a.check()?;
    b.check()?;
    if !a.same_geometry(b) {
        return Err(KboError::param("grid", "geometry mismatch"));
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Exact density sampled at the cell centers of `grid`.
pub fn exact_grid(grid: &DensityGrid, t: f64) -> DensityGrid {
    DensityGrid {
        values: grid.centers().map(|x| exact_solution(x, t)).collect(),
        ..grid.clone()
    }
}

/// One splitting step with `x̄ = 0` and `D = x²`:
/// `x* = (1 − νΔt) x`, then `x** = x* + (x*)² (σ√Δt z + γ Δt^{1/α} z̃)`.
///
/// Far-out particles take jumps of size `~x²` and can overflow to `±∞`.
/// Those have escaped the window for good; they are left untouched by later
/// steps and the number of escaped particles is returned.
pub fn validation_step(
    positions: &mut [f64],
    config: &ValidationConfig,
    stream: &mut RngStream,
) -> Result<usize> {
    let law = StableLaw::new(config.alpha)?;
    let contraction = 1.0 - config.nu * config.dt;
    let gauss = config.sigma * config.dt.sqrt();
    let jump = config.gamma * config.dt.powf(1.0 / config.alpha);
    let mut escaped = 0;
    for (i, x) in positions.iter_mut().enumerate() {
        if x.is_infinite() {
            escaped += 1;
            continue;
        }
        let xs = contraction * *x;
        let d = xs * xs;
        let mut incr = 0.0;
        if gauss > 0.0 {
            incr += gauss * stream.sample_normal();
        }
        if jump > 0.0 {
            incr += jump * law.sample(stream);
        }
        *x = xs + d * incr;
        if x.is_nan() {
            return Err(KboError::NonFinitePosition { particle: i, step: 0 });
        }
        if x.is_infinite() {
            escaped += 1;
        }
    }
    Ok(escaped)
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub positions: Vec<f64>,
    /// Particles that overflowed to `±∞`.
    pub escaped: usize,
}

/// Simulates the particle system from the standard Cauchy initial law and
/// returns the positions at each requested time (multiples of `dt`, in any
/// order, `0` allowed). Particles are split into fixed chunks with their own
/// derived streams, so results do not depend on the number of threads.
pub fn simulate(config: &ValidationConfig, times: &[f64]) -> Result<Vec<Snapshot>> {
    config.validate()?;
    let mut targets: Vec<(usize, usize)> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| config.steps_to(t).map(|s| (s, i)))
        .collect::<Result<_>>()?;
    targets.sort_unstable();

    let cauchy = StableLaw::new(1.0)?;
    let mut chunks: Vec<(Vec<f64>, RngStream)> = (0..config.n_particles.div_ceil(CHUNK))
        .map(|c| {
            let len = CHUNK.min(config.n_particles - c * CHUNK);
            let mut stream = RngStream::derived(config.seed, c as u64);
            let xs = (0..len).map(|_| cauchy.sample(&mut stream)).collect();
            (xs, stream)
        })
        .collect();

    let mut out: Vec<Option<Snapshot>> = vec![None; times.len()];
    let mut step = 0;
    for (target, idx) in targets {
        while step < target {
            chunks
                .par_iter_mut()
                .enumerate()
                .try_for_each(|(c, (xs, stream))| {
                    validation_step(xs, config, stream).map(drop).map_err(|e| match e {
                        KboError::NonFinitePosition { particle, .. } => KboError::NonFinitePosition {
                            particle: c * CHUNK + particle,
                            step,
                        },
                        other => other,
                    })
                })?;
            step += 1;
        }
        let positions: Vec<f64> = chunks.iter().flat_map(|(xs, _)| xs.iter().copied()).collect();
        let escaped = positions.iter().filter(|x| x.is_infinite()).count();
        out[idx] = Some(Snapshot {
            t: times[idx],
            positions,
            escaped,
        });
    }
    Ok(out.into_iter().map(|s| s.expect("every time visited")).collect())
}

#[derive(Clone, Debug)]
pub struct DensitySnapshot {
    pub t: f64,
    pub numeric: DensityGrid,
    pub error: f64,
    pub escaped: usize,
}

/// Simulates, histograms each snapshot on `grid` and measures the error
/// against the exact density.
pub fn density_snapshots(
    config: &ValidationConfig,
    times: &[f64],
    grid: &DensityGrid,
) -> Result<Vec<DensitySnapshot>> {
    simulate(config, times)?
        .into_iter()
        .map(|s| {
            let numeric = reconstruct_density(&s.positions, grid)?;
            let error = linf_error(&numeric, s.t)?;
            Ok(DensitySnapshot {
                t: s.t,
                numeric,
                error,
                escaped: s.escaped,
            })
        })
        .collect()
}

/// Error at `t_final` on the default grid.
pub fn final_error(config: &ValidationConfig) -> Result<f64> {
    let snaps = density_snapshots(config, &[config.t_final], &DensityGrid::default())?;
    Ok(snaps[0].error)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceStudy {
    /// `(N, error)`; with several seeds the error is the seed average.
    pub points: Vec<(usize, f64)>,
    /// Least-squares slope of `log error` against `log N`.
    pub slope: f64,
}

pub fn convergence_study(config: &ValidationConfig, n_values: &[usize]) -> Result<ConvergenceStudy> {
    convergence_study_seeds(config, n_values, &[config.seed])
}

/// Like [`convergence_study`], averaging the error over `seeds` for every `N`.
pub fn convergence_study_seeds(
    config: &ValidationConfig,
    n_values: &[usize],
    seeds: &[u64],
) -> Result<ConvergenceStudy> {
    if n_values.len() < 3 {
        return Err(KboError::param("n_values", "need at least 3 particle counts"));
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(KboError::param("n_values", "must be strictly ascending"));
    }
    if seeds.is_empty() {
        return Err(KboError::EmptyInput("seeds"));
    }
    let mut points = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let mut total = 0.0;
        for &seed in seeds {
            let cfg = ValidationConfig {
                n_particles: n,
                seed,
                ..config.clone()
            };
            total += final_error(&cfg)?;
        }
        points.push((n, total / seeds.len() as f64));
    }
    let slope = log_log_slope(&points);
    Ok(ConvergenceStudy { points, slope })
}

pub fn log_log_slope(points: &[(usize, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(n, e)| ((n as f64).ln(), e.ln()))
        .collect();
    least_squares_slope(&logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_solution_values() {
        assert_eq!(exact_scale(0.0), 1.0);
        for x in [-3.0, 0.0, 0.5, 10.0] {
            assert_abs_diff_eq!(exact_solution(x, 0.0), 1.0 / (PI * (1.0 + x * x)), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(exact_scale(2.0), 0.072_578_8, epsilon = 1e-7);
        assert_abs_diff_eq!(exact_solution(0.0, 2.0), 4.385_709, epsilon = 1e-6);
    }

    #[test]
    fn step_examples() {
        let cfg = ValidationConfig::default();
        let mut xs = vec![0.0; 10];
        validation_step(&mut xs, &cfg, &mut RngStream::new(0)).unwrap();
        assert!(xs.iter().all(|&x| x == 0.0));

        let cfg0 = ValidationConfig { gamma: 0.0, ..cfg.clone() };
        let mut xs = vec![1.0];
        validation_step(&mut xs, &cfg0, &mut RngStream::new(0)).unwrap();
        assert_abs_diff_eq!(xs[0], 0.99, epsilon = 1e-15);

        let mut xs = vec![1e200, f64::INFINITY, 0.5];
        assert_eq!(validation_step(&mut xs, &cfg, &mut RngStream::new(1)).unwrap(), 2);
        assert!(xs[0].is_infinite() && xs[2].is_finite());
    }

    #[test]
    fn jump_from_unit_position_has_zero_median() {
        let cfg = ValidationConfig { nu: 0.0, ..ValidationConfig::default() };
        let mut xs = vec![1.0; 1_000_000];
        validation_step(&mut xs, &cfg, &mut RngStream::new(21)).unwrap();
        let mut incr: Vec<f64> = xs.iter().map(|x| x - 1.0).collect();
        incr.sort_by(f64::total_cmp);
        assert!(incr[incr.len() / 2].abs() < 0.001);
    }

    #[test]
    fn histogram_of_point_mass() {
        let grid = DensityGrid::default();
        let c = grid.center(100);
        let g = reconstruct_density(&[c; 17], &grid).unwrap();
        assert_abs_diff_eq!(g.values[100], 1.0 / grid.cell_width(), epsilon = 1e-12);
        assert_eq!(g.values.iter().filter(|&&v| v != 0.0).count(), 1);
        assert!(reconstruct_density(&[], &grid).is_err());
    }

    #[test]
    fn outside_samples_reduce_mass() {
        let grid = DensityGrid::default();
        let g = reconstruct_density(&[0.0, 0.0, 25.0, -30.0], &grid).unwrap();
        assert_abs_diff_eq!(g.mass(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn uniform_histogram_within_binomial_error() {
        let grid = DensityGrid::default();
        let n = 1_000_000;
        let mut s = RngStream::new(17);
        let xs: Vec<f64> = (0..n).map(|_| s.uniform_range(-20.0, 20.0)).collect();
        let g = reconstruct_density(&xs, &grid).unwrap();
        let p = 1.0 / grid.m_x as f64;
        let se = (n as f64 * p * (1.0 - p)).sqrt() / (n as f64 * grid.cell_width());
        // 4.5 standard errors keeps the max over 1024 cells well inside the bound.
        for v in &g.values {
            assert!((v - 1.0 / 40.0).abs() < 4.5 * se, "{v}");
        }
    }

    #[test]
    fn linf_error_examples() {
        let grid = DensityGrid::default();
        let mut exact = exact_grid(&grid, 1.0);
        assert_eq!(linf_error(&exact, 1.0).unwrap(), 0.0);
        exact.values[7] += 0.01;
        assert_abs_diff_eq!(linf_error(&exact, 1.0).unwrap(), 0.01, epsilon = 1e-15);
        exact.values.pop();
        assert!(linf_error(&exact, 1.0).is_err());

        let other = DensityGrid::new(-10.0, 10.0, 1024).unwrap();
        assert!(linf_distance(&grid, &other).is_err());
    }

    #[test]
    fn initial_histogram_error_bound() {
        let cfg = ValidationConfig { n_particles: 200_000, seed: 2, ..ValidationConfig::default() };
        let grid = DensityGrid::default();
        let snaps = density_snapshots(&cfg, &[0.0], &grid).unwrap();
        let w = grid.cell_width();
        let bound = 5.0 * (w + 1.0 / (cfg.n_particles as f64 * w).sqrt());
        assert!(snaps[0].error <= bound, "{} > {bound}", snaps[0].error);
    }

    #[test]
    fn median_stays_near_zero() {
        let cfg = ValidationConfig { n_particles: 100_000, seed: 5, ..ValidationConfig::default() };
        for s in simulate(&cfg, &[0.1, 1.0, 2.0]).unwrap() {
            let mut xs = s.positions;
            xs.sort_by(f64::total_cmp);
            let median = xs[xs.len() / 2];
            // Standard error of the Cauchy median: π b / (2 √N).
            let se = PI * exact_scale(s.t) / (2.0 * (xs.len() as f64).sqrt());
            assert!(median.abs() <= 3.0 * se, "t = {}: {median} vs {se}", s.t);
        }
    }

    #[test]
    fn same_seed_same_error() {
        let cfg = ValidationConfig { n_particles: 20_000, seed: 9, ..ValidationConfig::default() };
        assert_eq!(final_error(&cfg).unwrap().to_bits(), final_error(&cfg).unwrap().to_bits());
    }

    #[test]
    fn snapshots_follow_requested_order() {
        let cfg = ValidationConfig { n_particles: 1000, ..ValidationConfig::default() };
        let snaps = simulate(&cfg, &[1.0, 0.0, 0.5]).unwrap();
        let ts: Vec<f64> = snaps.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![1.0, 0.0, 0.5]);
        assert!(simulate(&cfg, &[0.005]).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = ValidationConfig { alpha: 1.5, ..ValidationConfig::default() };
        assert!(cfg.validate().is_err());
        assert!(convergence_study(&ValidationConfig::default(), &[1000]).is_err());
        assert!(convergence_study(&ValidationConfig::default(), &[1000, 100, 10_000]).is_err());
    }
}
