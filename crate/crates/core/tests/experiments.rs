use proptest::prelude::*;

use qhop::disorder::{bernoulli_patterns, PatternMatrix};
use qhop::experiments::{
    run_convergence, run_norm_checks, run_retrieval, ConvergenceConfig, FreeEnergySolver, NormCheckConfig,
    RetrievalConfig, A_ENVELOPE,
};
use qhop::meanfield::{fixed_points, minimize_f0};
use qhop::quantum::{
    bogolyubov_bounds, free_energy, gibbs_observables, reduced_spectrum, slq_free_energy, spectrum, FieldMode,
    ModelParams, Operator,
};

fn retrieval(n: usize, beta: f64, d: f64, h: f64) -> qhop::experiments::RetrievalRecord {
    run_retrieval(&RetrievalConfig { n, beta, d, h, seed: 21 }).unwrap()
}

#[test]
fn low_temperature_overlap_tracks_mean_field() {
    let r = retrieval(8, 30.0, 0.2, 0.2);
    assert!((r.overlap - r.meanfield_m).abs() < 0.1, "{r:?}");
}

#[test]
fn high_temperature_overlap_is_small() {
    let r = retrieval(8, 0.1, 0.0, 0.05);
    assert!(r.overlap.abs() < 0.2, "{r:?}");
}

#[test]
fn strong_transverse_field_is_paramagnetic() {
    let r = retrieval(8, 2.0, 5.0, 0.1);
    assert!(r.overlap < 0.1, "{r:?}");
    let zero_field = fixed_points(2.0, 5.0, 0.0).unwrap();
    assert_eq!(zero_field.len(), 1);
    assert!(zero_field[0].m.abs() < 1e-9);
}

#[test]
fn zero_field_overlap_vanishes() {
    for seed in 0..3 {
        let xi = bernoulli_patterns(7, 1, seed).unwrap();
        let params = ModelParams::hopfield(&xi, FieldMode::Uniform(0.0), 0.3, 4.0).unwrap();
        let spec = spectrum(&params, true).unwrap();
        let obs = gibbs_observables(&params, &spec, None).unwrap();
        assert!(obs.overlaps[0].abs() < 1e-10, "{obs:?}");
    }
}

#[test]
fn gauge_transform_leaves_free_energy_unchanged() {
    let n = 6;
    let field = FieldMode::PatternAligned { h: 0.3, pattern: 0 };
    let plus = PatternMatrix::from_rows(&[vec![1.0; n]]).unwrap();
    let f_ref = free_energy(
        &spectrum(&ModelParams::hopfield(&plus, field.clone(), 0.4, 2.0).unwrap(), false).unwrap(),
        2.0,
        n,
    )
    .unwrap();
    for seed in 0..10 {
        let xi = bernoulli_patterns(n, 1, seed).unwrap();
        let params = ModelParams::hopfield(&xi, field.clone(), 0.4, 2.0).unwrap();
        let f = free_energy(&spectrum(&params, false).unwrap(), 2.0, n).unwrap();
        assert!((f - f_ref).abs() < 1e-12);
    }
}

#[test]
fn classical_high_temperature_gap_is_small() {
    let cfg = ConvergenceConfig {
        n_grid: vec![6, 8, 10, 12],
        beta: 0.5,
        d: 0.0,
        h: 0.2,
        samples: 1,
        seed: 0,
        solver: FreeEnergySolver::Symmetric,
    };
    let out = run_convergence(&cfg).unwrap();
    assert!(out[3].gap_corrected < 0.02, "{out:?}");
    assert!(out[3].gap_corrected < out[0].gap_corrected);
}

#[test]
fn convergence_gap_shrinks_at_finite_transverse_field() {
    let cfg = ConvergenceConfig {
        n_grid: vec![6, 12],
        beta: 1.5,
        d: 0.5,
        h: 0.2,
        samples: 1,
        seed: 0,
        solver: FreeEnergySolver::Symmetric,
    };
    let out = run_convergence(&cfg).unwrap();
    assert!(out[1].gap < out[0].gap);
    assert_eq!(out[0].f0_min, minimize_f0(1.5, 0.5, 0.2).unwrap().f0_value);
}

#[test]
fn norm_trends() {
    let report = run_norm_checks(&NormCheckConfig {
        n_grid: vec![64, 128, 256],
        alpha: 0.25,
        samples: 100,
        seed: 0,
        threads: None,
    })
    .unwrap();
    assert!(report.j_flat, "{report:?}");
    assert!(report.a_within_envelope, "{report:?}");
    for r in &report.records {
        assert!(r.mean_a_sq.unwrap() <= A_ENVELOPE * r.alpha);
    }
}

#[test]
fn overlap_norm_decreases_at_fixed_p() {
    let means: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| {
            let alpha = 16.0 / n as f64;
            let report = run_norm_checks(&NormCheckConfig {
                n_grid: vec![n],
                alpha,
                samples: 40,
                seed: 1,
                threads: None,
            })
            .unwrap();
            report.records[0].mean_a_sq.unwrap()
        })
        .collect();
    assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
}

#[test]
fn slq_error_bars_shrink_with_probes() {
    let xi = bernoulli_patterns(9, 2, 4).unwrap();
    let params = ModelParams::hopfield(&xi, FieldMode::Uniform(0.1), 0.6, 1.0).unwrap();
    let small = slq_free_energy(&params, 1.0, 32, 40, 8).unwrap();
    let large = slq_free_energy(&params, 1.0, 128, 40, 8).unwrap();
    let ratio = small.stderr / large.stderr;
    assert!(ratio > 1.3 && ratio < 3.0, "{ratio}");
}

#[test]
fn free_energy_increases_with_beta() {
    // df/dβ = S / (β² n) with S >= 0 the von Neumann entropy.
    let xi = bernoulli_patterns(6, 2, 2).unwrap();
    let params = ModelParams::hopfield(&xi, FieldMode::Uniform(0.2), 0.5, 1.0).unwrap();
    let red = reduced_spectrum(&params).unwrap();
    let fs: Vec<f64> = [0.2, 0.5, 1.0, 2.0, 5.0, 20.0]
        .iter()
        .map(|&b| red.free_energy(b).unwrap())
        .collect();
    assert!(fs.windows(2).all(|w| w[1] >= w[0]), "{fs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bogolyubov_bounds_hold_for_hopfield_steps(
        seed in any::<u64>(),
        n in 1usize..=4,
        h in -1.0f64..1.0,
        d0 in 0.0f64..1.5,
        d1 in -1.0f64..1.0,
        beta in 0.1f64..5.0,
    ) {
        let xi = bernoulli_patterns(n, 2, seed).unwrap();
        let params = ModelParams::hopfield(&xi, FieldMode::Uniform(h), d0, beta).unwrap();
        let h0 = Operator::from_params(&params).unwrap();
        let h1 = Operator::new(n, Operator::transverse(n).matrix() * d1).unwrap();
        let b = bogolyubov_bounds(&h0, &h1, beta).unwrap();
        prop_assert!(b.holds(1e-10), "{b:?}");
    }

    #[test]
    fn symmetric_and_dense_free_energies_agree(
        seed in any::<u64>(),
        n in 2usize..=7,
        p in 0usize..=3,
        h in -1.0f64..1.0,
        d in 0.0f64..2.0,
        beta in 0.05f64..10.0,
    ) {
        let xi = bernoulli_patterns(n, p, seed).unwrap();
        let params = ModelParams::hopfield(&xi, FieldMode::Uniform(h), d, beta).unwrap();
        let dense = free_energy(&spectrum(&params, false).unwrap(), beta, n).unwrap();
        let sym = reduced_spectrum(&params).unwrap().free_energy(beta).unwrap();
        prop_assert!((dense - sym).abs() < 1e-10 * (1.0 + dense.abs()));
    }
}
