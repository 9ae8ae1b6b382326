use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use kbo_core::diagnostics::mass_in_ball;
use kbo_core::kbo::{drift_step, kbo_step, run, run_with_stream, step_with_consensus, InitBox};
use kbo_core::{DiffusionMode, KboConfig, Objective, ParticleEnsemble, RngStream};

#[test]
fn sphere_sanity_run() {
    let obj = Objective::by_name("sphere", 2).unwrap();
    let cfg = KboConfig {
        dim: 2,
        nu: 1.0,
        sigma: 1.0,
        gamma: 0.0,
        beta: 1e5,
        dt: 0.1,
        diffusion_mode: DiffusionMode::Isotropic,
        init_box: Some(InitBox::cube(1.0, 2.0, 2)),
        ..KboConfig::default()
    };
    let wins = (0..20u64)
        .filter(|&i| {
            let r = run_with_stream(&obj, &cfg, &mut RngStream::derived(101, i)).unwrap();
            r.final_consensus.iter().all(|x| x.abs() <= 0.25)
        })
        .count();
    assert!(wins >= 19, "{wins}/20");
}

#[test]
fn pinned_drift_contracts_every_distance_geometrically() {
    let (nu, dt) = (1.0, 0.1);
    let star = [0.3, -1.7, 2.0];
    let mut ens = ParticleEnsemble::uniform(30, &InitBox::cube(-5.0, 5.0, 3), &mut RngStream::new(4)).unwrap();
    let dist = |e: &ParticleEnsemble| -> Vec<Vec<f64>> {
        e.rows().map(|x| x.iter().zip(&star).map(|(a, b)| (a - b).abs()).collect()).collect()
    };
    let d0 = dist(&ens);
    for n in 1..=50 {
        drift_step(&mut ens, &star, nu, dt).unwrap();
        let f = (1.0 - nu * dt).powi(n);
        for (now, init) in dist(&ens).iter().zip(&d0) {
            for (a, b) in now.iter().zip(init) {
                assert!((a - b * f).abs() <= 1e-10 * b * f, "step {n}: {a} vs {}", b * f);
            }
        }
    }
}

#[test]
fn translation_equivariance() {
    let shift = [0.75, -1.5, 2.25];
    let base = Objective::by_name("rastrigin", 3).unwrap();
    let moved = base.translated(&shift).unwrap();
    let cfg = KboConfig {
        dim: 3,
        sigma: 0.5,
        gamma: 0.5,
        beta: 30.0,
        n_particles: 60,
        n_t: 40,
        record_trajectory: true,
        seed: 12,
        ..KboConfig::default()
    };
    let a = run(&base, &cfg).unwrap().consensus_trajectory.unwrap();
    let b = run(&moved, &cfg).unwrap().consensus_trajectory.unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        for k in 0..3 {
            assert!((y[k] - x[k] - shift[k]).abs() <= 1e-9, "{} vs {}", y[k] - x[k], shift[k]);
        }
    }
}

#[test]
fn one_consensus_evaluation_per_step_and_diffusion_after_drift() {
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&calls);
    let obj = Objective::custom(
        "counted",
        2,
        move |x| {
            counter.fetch_add(1, Ordering::Relaxed);
            x.iter().map(|v| v * v).sum()
        },
        vec![0.0, 0.0],
        true,
    );
    let cfg = KboConfig { dim: 2, sigma: 0.7, gamma: 0.4, beta: 2.0, ..KboConfig::default() };
    let start = ParticleEnsemble::uniform(25, &InitBox::cube(-1.0, 3.0, 2), &mut RngStream::new(1)).unwrap();

    let mut stepped = start.clone();
    let used = kbo_step(&mut stepped, &obj, &cfg, &mut RngStream::new(2)).unwrap();
    assert_eq!(calls.load(Ordering::Relaxed), 25);

    let mut manual = start;
    step_with_consensus(&mut manual, &used.point, &cfg, &mut RngStream::new(2)).unwrap();
    assert_eq!(stepped, manual);
    assert_eq!(stepped.step_index(), 1);
}

#[test]
fn mass_in_ball_bounds() {
    let ens = ParticleEnsemble::uniform(40, &InitBox::cube(-2.0, 2.0, 2), &mut RngStream::new(6)).unwrap();
    let c = [0.5, 0.5];
    let mut last = 0.0;
    for r in [0.0, 0.5, 1.0, 2.0, 3.0, 4.0] {
        let m = mass_in_ball(&ens, &c, r).unwrap();
        assert!((0.0..=1.0).contains(&m) && m >= last);
        last = m;
    }
    let diameter = ens
        .rows()
        .map(|x| ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt())
        .fold(0.0, f64::max);
    assert_eq!(mass_in_ball(&ens, &c, diameter).unwrap(), 1.0);
}
