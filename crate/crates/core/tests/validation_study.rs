use kbo_core::validation::{
    convergence_study_seeds, density_snapshots, exact_scale, final_error, DensityGrid, ValidationConfig,
};

fn config(n: usize, seed: u64) -> ValidationConfig {
    ValidationConfig { n_particles: n, seed, ..ValidationConfig::default() }
}

#[test]
fn exact_law_keeps_mass_in_window() {
    let b = exact_scale(2.0);
    let tail = 1.0 - 2.0 * (20.0 / b).atan() / std::f64::consts::PI;
    assert!((tail - 0.0023).abs() < 1e-4, "{tail}");
}

#[test]
fn mass_on_window_at_final_time() {
    let snaps = density_snapshots(&config(100_000, 4), &[2.0], &DensityGrid::default()).unwrap();
    let grid = &snaps[0].numeric;
    assert!(grid.values.iter().all(|&v| v >= 0.0));
    let mass = grid.mass();
    assert!(mass <= 1.0 + 1e-12);
    assert!(
        mass >= 0.95,
        "mass on [-20, 20] at T = 2 is {mass}; {} particles overflowed",
        snaps[0].escaped
    );
}

#[test]
fn doubling_particles_halves_squared_error() {
    let seeds: Vec<u64> = (1..=10).collect();
    let mse = |n: usize| -> f64 {
        seeds.iter().map(|&s| final_error(&config(n, s)).unwrap().powi(2)).sum::<f64>() / seeds.len() as f64
    };
    let ratio = mse(20_000) / mse(10_000);
    assert!((0.35..=0.65).contains(&ratio), "squared-error ratio {ratio}");
}

#[test]
fn convergence_study_rejects_single_n() {
    assert!(convergence_study_seeds(&config(1000, 0), &[1000], &[1]).is_err());
    assert!(convergence_study_seeds(&config(1000, 0), &[1000, 2000, 4000], &[]).is_err());
}
