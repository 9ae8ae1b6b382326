//! Runtime diagnostics for the convergence analysis: the `V_p` moment about
//! the minimizer, the success criterion, mass near the minimizer and the
//! Gamma-function constants `B_{p,α}`, `C_{p,α}` and `ω_d`.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{KboError, Result};
use crate::kbo::ParticleEnsemble;

/// Max-norm radius around the minimizer within which a run counts as a success.
pub const SUCCESS_RADIUS: f64 = 0.25;

/// Fraction of leading samples dropped by [`fit_decay_rate`].
pub const DEFAULT_BURN_IN: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct MomentParams {
    pub p: f64,
    pub target: Vec<f64>,
}

impl MomentParams {
    /// Diagnostic mode: any `p > 0`.
    pub fn new(p: f64, target: Vec<f64>) -> Result<Self> {
        if !(p > 0.0) {
            return Err(KboError::param("p", format!("must be > 0, got {p}")));
        }
        Ok(Self { p, target })
    }

    /// Enforces `1 < p < alpha < 2`.
    pub fn theory_valid(p: f64, alpha: f64, target: Vec<f64>) -> Result<Self> {
        check_strip(p, alpha)?;
        Self::new(p, target)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoryConstants {
    pub b_p_alpha: f64,
    pub c_p_alpha: f64,
    pub omega_d: f64,
    /// `ν p > γ^α B_{p,α}`.
    pub condition_ok: bool,
}

/// `(1/N) Σ |x_i − target|^p`, Euclidean norm.
pub fn v_p_moment(ensemble: &ParticleEnsemble, target: &[f64], p: f64) -> Result<f64> {
    if target.len() != ensemble.dim() {
        return Err(KboError::DimensionMismatch {
            expected: ensemble.dim(),
            actual: target.len(),
        });
    }
    let sum: f64 = ensemble
        .rows()
        .map(|x| {
            let d2: f64 = x.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
            d2.powf(0.5 * p)
        })
        .sum();
    Ok(sum / ensemble.n_particles() as f64)
}

pub fn v_p(ensemble: &ParticleEnsemble, params: &MomentParams) -> Result<f64> {
    v_p_moment(ensemble, &params.target, params.p)
}

/// `‖consensus − minimizer‖_∞ ≤ 0.25`.
pub fn success_check(consensus: &[f64], minimizer: &[f64]) -> Result<bool> {
    if consensus.len() != minimizer.len() {
        return Err(KboError::DimensionMismatch {
            expected: minimizer.len(),
            actual: consensus.len(),
        });
    }
    Ok(consensus
        .iter()
        .zip(minimizer)
        .all(|(a, b)| (a - b).abs() <= SUCCESS_RADIUS))
}

/// Fraction of particles within Euclidean distance `r` of `center`.
pub fn mass_in_ball(ensemble: &ParticleEnsemble, center: &[f64], r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(KboError::param("r", format!("must be >= 0, got {r}")));
    }
    if center.len() != ensemble.dim() {
        return Err(KboError::DimensionMismatch {
            expected: ensemble.dim(),
            actual: center.len(),
        });
    }
    let r2 = r * r;
    let inside = ensemble
        .rows()
        .filter(|x| x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r2)
        .count();
    Ok(inside as f64 / ensemble.n_particles() as f64)
}

fn check_strip(p: f64, alpha: f64) -> Result<()> {
    if !(1.0 < p && p < alpha && alpha < 2.0) {
        return Err(KboError::param(
            "p",
            format!("(p, alpha) = ({p}, {alpha}) outside 1 < p < alpha < 2"),
        ));
    }
    Ok(())
}

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        return Err(KboError::param("d", "must be at least 1"));
    }
    Ok(())
}

/// Volume of the unit ball in `ℝ^d`, `π^{d/2} / Γ(d/2 + 1)`.
pub fn omega_d(d: usize) -> f64 {
    let h = 0.5 * d as f64;
    PI.powf(h) / gamma(h + 1.0)
}

/// `B_{p,α} = 2^α Γ((d+p)/2) Γ((α−p)/2) / (|Γ(−p/2)| + Γ((d+p−α)/2))`.
pub fn b_p_alpha(d: usize, p: f64, alpha: f64) -> Result<f64> {
    check_strip(p, alpha)?;
    check_d(d)?;
    let (num, g_neg, g_shift) = b_terms(d as f64, p, alpha);
    Ok(num / (g_neg.abs() + g_shift))
}

/// Variant of [`b_p_alpha`] with the denominator terms multiplied instead of
/// added. For comparison only.
pub fn b_p_alpha_product(d: usize, p: f64, alpha: f64) -> Result<f64> {
    check_strip(p, alpha)?;
    check_d(d)?;
    let (num, g_neg, g_shift) = b_terms(d as f64, p, alpha);
    Ok(num / (g_neg.abs() * g_shift))
}

fn b_terms(d: f64, p: f64, alpha: f64) -> (f64, f64, f64) {
    let num = 2f64.powf(alpha) * gamma(0.5 * (d + p)) * gamma(0.5 * (alpha - p));
    (num, gamma(-0.5 * p), gamma(0.5 * (d + p - alpha)))
}

/// `C_{p,α} = ν p − γ^α B_{p,α}` and the exponential-decay condition.
pub fn c_p_alpha(nu: f64, gamma_jump: f64, d: usize, p: f64, alpha: f64) -> Result<TheoryConstants> {
    let b = b_p_alpha(d, p, alpha)?;
    let jump = gamma_jump.powf(alpha) * b;
    Ok(TheoryConstants {
        b_p_alpha: b,
        c_p_alpha: nu * p - jump,
        omega_d: omega_d(d),
        condition_ok: nu * p > jump,
    })
}

/// Empirical exponential decay rate of a `(t, V_p)` series, with the default
/// 10% burn-in.
pub fn fit_decay_rate(trajectory: &[(f64, f64)]) -> Result<f64> {
    fit_decay_rate_with_burn_in(trajectory, DEFAULT_BURN_IN)
}

/// Negated least-squares slope of `log V_p` against `t`, after dropping the
/// leading `burn_in` fraction of samples.
pub fn fit_decay_rate_with_burn_in(trajectory: &[(f64, f64)], burn_in: f64) -> Result<f64> {
    if trajectory.len() < 3 {
        return Err(KboError::param("vp_trajectory", "need at least 3 points"));
    }
    if !(0.0..1.0).contains(&burn_in) {
        return Err(KboError::param("burn_in", format!("must be in [0, 1), got {burn_in}")));
    }
    if let Some(&(t, v)) = trajectory.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(KboError::param("vp_trajectory", format!("non-positive V_p = {v} at t = {t}")));
    }
    let skip = (burn_in * trajectory.len() as f64).floor() as usize;
    let kept = &trajectory[skip.min(trajectory.len() - 2)..];
    let pts: Vec<(f64, f64)> = kept.iter().map(|&(t, v)| (t, v.ln())).collect();
    Ok(-least_squares_slope(&pts))
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(sxy, sxx), &(x, y)| {
        (sxy + (x - mx) * (y - my), sxx + (x - mx) * (x - mx))
    });
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn ens(rows: &[&[f64]]) -> ParticleEnsemble {
        ParticleEnsemble::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn v_p_examples() {
        assert_relative_eq!(
            v_p_moment(&ens(&[&[2.0, 0.0]]), &[0.0, 0.0], 1.5).unwrap(),
            2f64.powf(1.5)
        );
        assert_eq!(v_p_moment(&ens(&[&[1.0], &[1.0]]), &[1.0], 1.5).unwrap(), 0.0);
        assert_eq!(v_p_moment(&ens(&[&[1.0], &[-3.0]]), &[0.0], 1.0).unwrap(), 2.0);
        let params = MomentParams::theory_valid(1.2, 1.5, vec![0.0]).unwrap();
        assert_eq!(v_p(&ens(&[&[1.0], &[-3.0]]), &params).unwrap(), 0.5 * (1.0 + 3f64.powf(1.2)));
        assert!(MomentParams::theory_valid(1.6, 1.5, vec![0.0]).is_err());
        assert!(MomentParams::new(0.5, vec![0.0]).is_ok());
    }

    #[test]
    fn success_examples() {
        assert!(success_check(&[0.2, -0.1], &[0.0, 0.0]).unwrap());
        assert!(!success_check(&[0.3, 0.0], &[0.0, 0.0]).unwrap());
        assert!(success_check(&[1.0, 1.0], &[1.0, 1.0]).unwrap());
        assert!(success_check(&[0.25], &[0.0]).unwrap());
        assert!(success_check(&[0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn mass_examples() {
        let e = ens(&[&[0.5, 0.0], &[0.0, 1.5], &[-2.5, 0.0], &[0.0, -3.5]]);
        assert_eq!(mass_in_ball(&e, &[0.0, 0.0], 0.0).unwrap(), 0.0);
        assert_eq!(mass_in_ball(&e, &[0.0, 0.0], 2.0).unwrap(), 0.5);
        assert_eq!(mass_in_ball(&e, &[0.0, 0.0], 7.0).unwrap(), 1.0);
        assert!(mass_in_ball(&e, &[0.0, 0.0], -1.0).is_err());
    }

    #[test]
    fn omega_closed_forms() {
        assert_abs_diff_eq!(omega_d(1), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(omega_d(2), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(omega_d(3), 4.0 * PI / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn b_rejects_outside_strip() {
        assert!(b_p_alpha(1, 1.5, 1.5).is_err());
        assert!(b_p_alpha(1, 0.9, 1.5).is_err());
        assert!(b_p_alpha(1, 1.2, 2.0).is_err());
        assert!(b_p_alpha(0, 1.2, 1.5).is_err());
        assert!(b_p_alpha_product(1, 1.2, 1.5).unwrap() > 0.0);
    }

    #[test]
    fn c_trivial_cases() {
        let c = c_p_alpha(1.0, 0.0, 3, 1.2, 1.5).unwrap();
        assert_eq!(c.c_p_alpha, 1.2);
        assert!(c.condition_ok);
        let c = c_p_alpha(0.0, 0.0, 3, 1.2, 1.5).unwrap();
        assert!(!c.condition_ok);
        let c = c_p_alpha(0.0, 0.5, 3, 1.2, 1.5).unwrap();
        assert!(!c.condition_ok);
        assert!(c.c_p_alpha < 0.0);
    }

    #[test]
    fn decay_rate_exact_series() {
        let traj: Vec<(f64, f64)> = (0..50).map(|n| (0.1 * n as f64, 3.0 * (-0.2 * n as f64).exp())).collect();
        assert_abs_diff_eq!(fit_decay_rate(&traj).unwrap(), 2.0, epsilon = 1e-10);
        let flat: Vec<(f64, f64)> = (0..10).map(|n| (n as f64, 0.7)).collect();
        assert_abs_diff_eq!(fit_decay_rate(&flat).unwrap(), 0.0, epsilon = 1e-14);
        assert!(fit_decay_rate(&[(0.0, 1.0), (1.0, 0.5)]).is_err());
        assert!(fit_decay_rate(&[(0.0, 1.0), (1.0, 0.0), (2.0, 0.5)]).is_err());
    }

    #[test]
    fn burn_in_discards_transient() {
        let mut traj: Vec<(f64, f64)> = (0..20).map(|n| (n as f64, (-(n as f64)).exp())).collect();
        traj[0].1 = 100.0;
        traj[1].1 = 50.0;
        assert_abs_diff_eq!(fit_decay_rate_with_burn_in(&traj, 0.1).unwrap(), 1.0, epsilon = 1e-10);
        assert!(fit_decay_rate_with_burn_in(&traj, 0.0).unwrap() > 1.0);
    }
}
