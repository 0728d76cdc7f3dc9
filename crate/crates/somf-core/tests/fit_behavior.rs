//! End-to-end behavior of the streaming loop on instances small enough to
//! verify by hand.

mod support;

use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use somf_core::{fit, Algorithm, Budget, EstimatorVariant, FitConfig};
use support::random_matrix;

#[test]
fn single_sample_single_atom_trace() {
    // One sample x = (3,4), one atom, one iteration, λ = 0.
    // Init: the only column projected onto the ½‖d‖² ≤ 1 ball, giving
    // d = √2·(0.6, 0.8). Then G = 2, β = 5√2, α = 5√2/2, and the block
    // update returns B̄/C̄[0,0] = x/α = d: the dictionary is a fixed point
    // and the surrogate value is exactly 0.
    let x = array![[3.0], [4.0]];
    let mut cfg = FitConfig::new(1);
    cfg.batch_size = 1;
    cfg.budget = Budget::Iterations(1);
    let mut clock = || 0.0;
    let report = fit(x.view(), Some(x.view()), &cfg, 1, &mut clock).unwrap();

    let s = 2.0_f64.sqrt();
    assert!((report.state.d[[0, 0]] - 0.6 * s).abs() < 1e-9);
    assert!((report.state.d[[1, 0]] - 0.8 * s).abs() < 1e-9);
    assert_eq!(report.checkpoints.len(), 1);
    let c = &report.checkpoints[0];
    assert_eq!(c.iter, 1);
    assert!(c.train_surrogate.abs() < 1e-8, "surrogate {}", c.train_surrogate);
    assert!(c.test_objective.unwrap().abs() < 1e-8);
    assert!(c.flops > 0);
}

#[test]
fn reduction_one_matches_full_batch_algorithm_bitwise() {
    // With no row subsampling the two loops must produce identical
    // floating-point trajectories, not merely close ones.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let x = random_matrix(15, 40, 1.0, &mut rng);
    let mut cfg = FitConfig::new(4);
    cfg.params.lambda = 0.1;
    cfg.budget = Budget::Iterations(30);
    cfg.seed = 9;
    cfg.algorithm = Algorithm::Somf;
    cfg.reduction = 1.0;
    let mut clock = || 0.0;
    let somf = fit(x.view(), None, &cfg, 10, &mut clock).unwrap();
    cfg.algorithm = Algorithm::Omf;
    let omf = fit(x.view(), None, &cfg, 10, &mut clock).unwrap();

    assert_eq!(somf.state.d, omf.state.d);
    assert_eq!(somf.state.gram, omf.state.gram);
    for (a, b) in somf.checkpoints.iter().zip(&omf.checkpoints) {
        assert_eq!(a.train_surrogate, b.train_surrogate);
        assert_eq!(a.flops, b.flops);
    }
}

#[test]
fn epoch_budget_iteration_count() {
    // n = 10, η = 3: one epoch is ⌈10/3⌉ = 4 iterations.
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let x = random_matrix(6, 10, 1.0, &mut rng);
    let mut cfg = FitConfig::new(2);
    cfg.batch_size = 3;
    cfg.budget = Budget::Epochs(2);
    let mut clock = || 0.0;
    let report = fit(x.view(), None, &cfg, 100, &mut clock).unwrap();
    assert_eq!(report.checkpoints.last().unwrap().iter, 8);
}

#[test]
fn exponent_warnings_surface_in_report() {
    let mut rng = ChaCha8Rng::seed_from_u64(79);
    let x = random_matrix(5, 12, 1.0, &mut rng);
    let mut cfg = FitConfig::new(2);
    cfg.budget = Budget::Iterations(2);
    let mut clock = || 0.0;
    let report = fit(x.view(), None, &cfg, 10, &mut clock).unwrap();
    assert!(report.warnings.is_empty());

    cfg.weight_exponent = 0.5;
    let report = fit(x.view(), None, &cfg, 10, &mut clock).unwrap();
    assert_eq!(report.warnings.len(), 1);

    cfg.variant = EstimatorVariant::Averaged;
    cfg.reduction = 2.0;
    cfg.gamma_exponent = 0.2;
    let report = fit(x.view(), None, &cfg, 10, &mut clock).unwrap();
    assert_eq!(report.warnings.len(), 2);
}

#[test]
fn subsampled_run_stays_feasible_and_finite() {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let x = random_matrix(30, 60, 1.0, &mut rng);
    for variant in [
        EstimatorVariant::Masked,
        EstimatorVariant::Averaged,
        EstimatorVariant::ExactGram,
    ] {
        let mut cfg = FitConfig::new(5);
        cfg.reduction = 3.0;
        cfg.variant = variant;
        cfg.params.lambda = 0.05;
        cfg.budget = Budget::Epochs(3);
        let mut clock = || 0.0;
        let report = fit(x.view(), None, &cfg, 7, &mut clock).unwrap();
        assert!(report.state.d.iter().all(|v| v.is_finite()));
        for j in 0..report.state.k() {
            let col = report.state.d.column(j);
            let norm = 0.5 * col.dot(&col);
            assert!(norm <= 1.0 + 1e-9, "atom {j} norm {norm} ({variant:?})");
        }
        for c in &report.checkpoints {
            assert!(c.train_surrogate.is_finite());
        }
    }
}

#[test]
fn positivity_constraints_hold_throughout() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let x = Array2::from_shape_fn((12, 30), |_| rng.gen_range(0.0..1.0));
    let mut cfg = FitConfig::new(4);
    cfg.reduction = 2.0;
    cfg.params.lambda = 0.05;
    cfg.params.positive_code = true;
    cfg.params.positive_dict = true;
    cfg.budget = Budget::Epochs(4);
    let mut clock = || 0.0;
    let report = fit(x.view(), None, &cfg, 5, &mut clock).unwrap();
    assert!(report.state.d.iter().all(|&v| v >= 0.0));
}
