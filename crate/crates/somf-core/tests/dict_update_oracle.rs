//! Partial dictionary update cross-checked against a straight-line
//! reimplementation built on the exact projection oracle, plus a
//! convergence check of the full update against projected gradient.

mod support;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use somf_core::{
    elastic_net_value, full_dictionary_update, partial_dictionary_update, DictionaryState,
    FlopCounter, Mask, SurrogateStats,
};
use support::{enet_projection_exact, random_matrix, spectral_norm};

/// Literal restatement of one masked block-coordinate pass, kept free of
/// the library's gather/scatter and Gram bookkeeping.
#[allow(clippy::too_many_arguments)]
fn reference_partial_update(
    d: &mut Array2<f64>,
    slack: &mut [f64],
    rows: &[usize],
    c_bar: &Array2<f64>,
    b_bar: &Array2<f64>,
    order: &[usize],
    mu: f64,
    positive: bool,
) {
    let q = rows.len();
    for &j in order {
        let cjj = c_bar[[j, j]];
        if cjj < 1e-12 {
            continue;
        }
        let col: Vec<f64> = rows.iter().map(|&i| d[[i, j]]).collect();
        let norm_sel = elastic_net_value(Array1::from(col.clone()).view(), mu);
        let radius = (slack[j] + norm_sel).max(0.0);

        let mut u = Array1::zeros(q);
        for (s, &i) in rows.iter().enumerate() {
            let mut dc = 0.0;
            for l in 0..c_bar.nrows() {
                dc += d[[i, l]] * c_bar[[l, j]];
            }
            u[s] = d[[i, j]] + (b_bar[[i, j]] - dc) / cjj;
        }
        let new_col = enet_projection_exact(u.view(), radius, mu, positive);
        slack[j] = (radius - elastic_net_value(new_col.view(), mu)).clamp(0.0, 1.0);
        for (s, &i) in rows.iter().enumerate() {
            d[[i, j]] = new_col[s];
        }
    }
}

#[test]
fn partial_update_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    for case in 0..200 {
        let p = rng.gen_range(3..=10);
        let k = rng.gen_range(1..=4);
        let mu = [0.0, 0.5, 1.0][case % 3];
        let positive = case % 4 == 0;
        let d0 = random_matrix(p, k, 0.4, &mut rng);
        let mut state = DictionaryState::from_dictionary(d0, mu, positive, false).unwrap();

        let a = random_matrix(k, k + 2, 1.0, &mut rng);
        let c_bar = a.dot(&a.t()) / (k + 2) as f64;
        let b_bar = random_matrix(p, k, 0.5, &mut rng);
        let rows: Vec<usize> = (0..p).filter(|_| rng.gen_bool(0.5)).collect();
        let mask = Mask::new(rows.clone(), 2.0, p).unwrap();
        let mut order: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }

        let mut ref_d = state.d.clone();
        let mut ref_slack = state.slack().to_vec();
        reference_partial_update(
            &mut ref_d, &mut ref_slack, &rows, &c_bar, &b_bar, &order, mu, positive,
        );

        let mut flops = FlopCounter::new();
        partial_dictionary_update(
            &mut state,
            &mask,
            c_bar.view(),
            b_bar.view(),
            &order,
            &mut flops,
        )
        .unwrap();

        for (got, want) in state.d.iter().zip(ref_d.iter()) {
            assert!((got - want).abs() < 1e-8, "case {case}: {got} vs {want}");
        }
        for (got, want) in state.slack().iter().zip(ref_slack.iter()) {
            assert!((got - want).abs() < 1e-8, "case {case}: slack {got} vs {want}");
        }
    }
}

#[test]
fn repeated_full_updates_reach_projected_gradient_optimum() {
    // The constrained quadratic has a unique-per-atom stationary point set;
    // both solvers must agree on the optimal surrogate value.
    let mut rng = ChaCha8Rng::seed_from_u64(601);
    for case in 0..10 {
        let p = 6;
        let k = 3;
        let mu = if case % 2 == 0 { 1.0 } else { 0.5 };
        let a = random_matrix(k, 8, 1.0, &mut rng);
        let c_bar = a.dot(&a.t()) / 8.0 + Array2::<f64>::eye(k) * 0.05;
        let b_bar = random_matrix(p, k, 0.6, &mut rng);

        let mut stats = SurrogateStats::new(p, k);
        stats.c_bar = c_bar.clone();
        stats.b_bar = b_bar.clone();

        // Library: block coordinate descent to stationarity.
        let d0 = random_matrix(p, k, 0.3, &mut rng);
        let mut state = DictionaryState::from_dictionary(d0.clone(), mu, false, false).unwrap();
        let order: Vec<usize> = (0..k).collect();
        let mut flops = FlopCounter::new();
        for _ in 0..2000 {
            full_dictionary_update(&mut state, c_bar.view(), b_bar.view(), &order, &mut flops)
                .unwrap();
        }
        let bcd_val = stats.surrogate_value(state.d.view());

        // Oracle: projected gradient on the same objective, atom-wise
        // exact projections, small constant step.
        let mut d = DictionaryState::from_dictionary(d0, mu, false, false)
            .unwrap()
            .d;
        let step = 1.0 / spectral_norm(c_bar.view()).max(1e-9);
        for _ in 0..20_000 {
            let grad = d.dot(&c_bar) - &b_bar;
            let cand = &d - &(&grad * step);
            for j in 0..k {
                let proj = enet_projection_exact(cand.column(j), 1.0, mu, false);
                d.column_mut(j).assign(&proj);
            }
        }
        let pg_val = stats.surrogate_value(d.view());

        assert!(
            (bcd_val - pg_val).abs() < 1e-6,
            "case {case}: bcd {bcd_val} vs pg {pg_val}"
        );
    }
}
