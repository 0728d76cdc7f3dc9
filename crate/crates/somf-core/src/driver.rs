//! The OMF and SOMF outer loops, and the full-batch alternate-minimization
//! reference used to benchmark them.
//!
//! One iteration: draw a mini-batch from the per-epoch shuffled sample
//! stream, draw one row mask shared by the batch, compute each sample's
//! code through the configured estimator, fold the batch into the
//! aggregated surrogate, then run the partial dictionary update. In
//! parallel mode the complement rows of `B̄` are updated on a second thread
//! while the dictionary pass runs; results are bit-identical to sequential
//! mode because the two touch disjoint data.

use alloc::string::String;
use alloc::vec::Vec;

use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;

use crate::dict_update::{
    self, draw_atom_order, init_dictionary, partial_dictionary_update_gathered, DictionaryState,
};
use crate::error::{Error, Result};
use crate::estimators::{self, EstimatorVariant, SampleCache};
use crate::flops::FlopCounter;
use crate::proximal::{self, ElasticNetParams};
use crate::rng::{self, RngStreams};
use crate::subsampling::{self, Mask};
use crate::surrogate::{self, SurrogateStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Omf,
    Somf,
}

/// Stopping budget: a raw iteration count or a number of passes over the
/// data (one epoch = ⌈n/η⌉ iterations).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Iterations(u64),
    Epochs(u64),
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub algorithm: Algorithm,
    pub k: usize,
    pub params: ElasticNetParams,
    pub batch_size: usize,
    pub reduction: f64,
    pub variant: EstimatorVariant,
    /// Exponent of the surrogate weight schedule `w_t = t^{-u}`.
    pub weight_exponent: f64,
    /// Exponent of the per-sample estimator schedule `γ_c = c^{-v}`.
    pub gamma_exponent: f64,
    pub budget: Budget,
    pub seed: u64,
    /// In-loop code solver settings.
    pub code_tol: f64,
    pub code_max_iter: usize,
    /// Oracle-grade settings for held-out objective evaluation.
    pub eval_tol: f64,
    pub eval_max_iter: usize,
    /// When false, code inputs and the `B̄` update use the full data
    /// (subsampling only in the dictionary update).
    pub subsample_code: bool,
    /// Overlap the dictionary update with the complement `B̄` update on a
    /// second thread. Requires the `std` feature; results are identical.
    pub parallel: bool,
}

impl FitConfig {
    pub fn new(k: usize) -> Self {
        FitConfig {
            algorithm: Algorithm::Somf,
            k,
            params: ElasticNetParams::default(),
            batch_size: k.max(1),
            reduction: 1.0,
            variant: EstimatorVariant::Masked,
            weight_exponent: 0.917,
            gamma_exponent: 0.751,
            budget: Budget::Epochs(1),
            seed: 0,
            code_tol: 1e-4,
            code_max_iter: 100,
            eval_tol: 1e-8,
            eval_max_iter: 10_000,
            subsample_code: true,
            parallel: false,
        }
    }

    /// Hard validation plus soft warnings for weight exponents outside the
    /// ranges required by the convergence analysis.
    pub fn validate(&self) -> Result<Vec<String>> {
        self.params.validate()?;
        if self.k == 0 {
            return Err(Error::Domain("k must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::Domain("batch size must be >= 1"));
        }
        if !self.reduction.is_finite() || self.reduction < 1.0 {
            return Err(Error::Domain("reduction factor must be >= 1"));
        }
        if self.algorithm == Algorithm::Omf && self.reduction != 1.0 {
            return Err(Error::Domain("OMF requires reduction factor 1"));
        }
        let mut warnings = Vec::new();
        let u = self.weight_exponent;
        if !(u > 11.0 / 12.0 && u < 1.0) {
            warnings.push(String::from(
                "weight exponent u outside (11/12, 1); convergence guarantees do not apply",
            ));
        }
        if self.variant != EstimatorVariant::Masked {
            let v = self.gamma_exponent;
            if !(v > 0.75 && v < 3.0 * u - 2.0) {
                warnings.push(String::from(
                    "gamma exponent v outside (3/4, 3u-2); convergence guarantees do not apply",
                ));
            }
        }
        Ok(warnings)
    }

    fn total_iterations(&self, n: usize) -> u64 {
        let per_epoch = (n as u64).div_ceil(self.batch_size as u64);
        match self.budget {
            Budget::Iterations(t) => t,
            Budget::Epochs(e) => e * per_epoch,
        }
    }
}

/// One emitted metrics record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub iter: u64,
    pub epoch: u64,
    pub wall_seconds: f64,
    pub flops: u64,
    pub train_surrogate: f64,
    pub test_objective: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub checkpoints: Vec<Checkpoint>,
    pub state: DictionaryState,
    pub warnings: Vec<String>,
}

/// Cycles a per-epoch shuffled permutation of the sample indices.
struct SampleStream<R: rand::Rng> {
    perm: Vec<usize>,
    pos: usize,
    rng: R,
}

impl<R: rand::Rng> SampleStream<R> {
    fn new(n: usize, mut rng: R) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        SampleStream { perm, pos: 0, rng }
    }

    fn next_batch(&mut self, eta: usize) -> Vec<usize> {
        let mut batch = Vec::with_capacity(eta);
        for _ in 0..eta {
            if self.pos == self.perm.len() {
                self.perm.shuffle(&mut self.rng);
                self.pos = 0;
            }
            batch.push(self.perm[self.pos]);
            self.pos += 1;
        }
        batch
    }
}

fn check_finite(x: ArrayView2<'_, f64>) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

/// Run OMF or SOMF on `x`, emitting a checkpoint every `checkpoint_every`
/// iterations (and at the last one). `clock` supplies wall time in seconds;
/// the caller decides its epoch.
pub fn fit(
    x: ArrayView2<'_, f64>,
    x_test: Option<ArrayView2<'_, f64>>,
    cfg: &FitConfig,
    checkpoint_every: u64,
    clock: &mut dyn FnMut() -> f64,
) -> Result<FitReport> {
    let warnings = cfg.validate()?;
    check_finite(x)?;
    if let Some(t) = x_test {
        check_finite(t)?;
    }
    let p = x.nrows();
    let n = x.ncols();
    if n == 0 || p == 0 {
        return Err(Error::Domain("input matrix is empty"));
    }
    let k = cfg.k;
    let eta = cfg.batch_size;
    let total = cfg.total_iterations(n);

    let streams = RngStreams::new(cfg.seed);
    let mut mask_rng = streams.stream(rng::STREAM_MASKS);
    let mut atom_rng = streams.stream(rng::STREAM_ATOMS);
    let mut init_rng = streams.stream(rng::STREAM_INIT);
    let sample_rng = streams.stream(rng::STREAM_SAMPLES);

    let maintain_gram = cfg.variant == EstimatorVariant::ExactGram || !cfg.subsample_code;
    let mut state = init_dictionary(
        x,
        k,
        &mut init_rng,
        cfg.params.mu,
        cfg.params.positive_dict,
        maintain_gram,
    )?;
    let mut cache = SampleCache::new(cfg.variant, n, k, cfg.gamma_exponent);
    let mut stats = SurrogateStats::new(p, k);
    let mut stream = SampleStream::new(n, sample_rng);
    // Previous code per sample, used as warm start for consistent variants.
    let mut prev_codes: Option<Array2<f64>> =
        (cfg.variant != EstimatorVariant::Masked).then(|| Array2::zeros((k, n)));

    let mut flops = FlopCounter::new();
    let mut checkpoints = Vec::new();
    let full_mask = Mask::full(p);
    let t0 = clock();

    for t in 1..=total {
        let batch = stream.next_batch(eta);
        let mask = if cfg.algorithm == Algorithm::Omf {
            full_mask.clone()
        } else {
            subsampling::draw_mask(p, cfg.reduction, &mut mask_rng)?
        };

        // Gather the batch columns once.
        let mut x_batch = Array2::zeros((p, eta));
        for (c, &i) in batch.iter().enumerate() {
            x_batch.column_mut(c).assign(&x.column(i));
        }

        // Code computation.
        let mut codes = Array2::zeros((k, eta));
        if cfg.subsample_code {
            let shared_gram = match cfg.variant {
                EstimatorVariant::ExactGram => None,
                _ => Some(estimators::masked_gram(state.d.view(), &mask, &mut flops)?),
            };
            for (c, &i) in batch.iter().enumerate() {
                let (g, beta) = estimators::compute_code_inputs_shared(
                    cfg.variant,
                    state.d.view(),
                    x.column(i),
                    &mask,
                    &mut cache,
                    i,
                    state.gram.as_ref().map(|g| g.view()),
                    shared_gram.as_ref(),
                    &mut flops,
                )?;
                let warm = prev_codes.as_ref().map(|pc| pc.column(i).to_owned());
                let (alpha, sweeps) = proximal::solve_code_counted(
                    g.view(),
                    beta.view(),
                    &cfg.params,
                    warm.as_ref().map(|w| w.view()),
                    cfg.code_tol,
                    cfg.code_max_iter,
                    None,
                )?;
                flops.add((2 * k * k * (sweeps + 1)) as u64);
                if let Some(pc) = prev_codes.as_mut() {
                    pc.column_mut(i).assign(&alpha);
                }
                codes.column_mut(c).assign(&alpha);
            }
        } else {
            // Exact-code configuration: true Gram and β, subsampling only
            // in the dictionary update.
            let gram = state
                .gram
                .as_ref()
                .expect("exact-code mode maintains the Gram matrix");
            for (c, &i) in batch.iter().enumerate() {
                let beta: Array1<f64> = state.d.t().dot(&x.column(i));
                flops.add(2 * (p * k) as u64);
                let warm = prev_codes.as_ref().map(|pc| pc.column(i).to_owned());
                let (alpha, sweeps) = proximal::solve_code_counted(
                    gram.view(),
                    beta.view(),
                    &cfg.params,
                    warm.as_ref().map(|w| w.view()),
                    cfg.code_tol,
                    cfg.code_max_iter,
                    None,
                )?;
                flops.add((2 * k * k * (sweeps + 1)) as u64);
                if let Some(pc) = prev_codes.as_mut() {
                    pc.column_mut(i).assign(&alpha);
                }
                codes.column_mut(c).assign(&alpha);
            }
        }

        // Surrogate parameter updates.
        let w = surrogate::weight(t, cfg.weight_exponent)?;
        let surrogate_mask = if cfg.subsample_code { &mask } else { &full_mask };
        stats.update_c(codes.view(), w, &mut flops)?;
        stats.update_const(x_batch.view(), codes.view(), &cfg.params, w);
        stats.update_b_selected(surrogate_mask, x_batch.view(), codes.view(), w, &mut flops)?;

        // Dictionary update, optionally overlapped with the complement
        // B̄ update.
        let atom_order = draw_atom_order(k, &mut atom_rng);
        let overlap = cfg.parallel && cfg.subsample_code && !mask.is_full();
        if overlap {
            run_overlapped(
                &mut state,
                &mut stats,
                &mask,
                x_batch.view(),
                codes.view(),
                w,
                &atom_order,
                &mut flops,
            )?;
        } else {
            let b_sel = subsampling::gather_rows(stats.b_bar.view(), &mask)?;
            partial_dictionary_update_gathered(
                &mut state,
                &mask,
                stats.c_bar.view(),
                b_sel.view(),
                &atom_order,
                &mut flops,
            )?;
            stats.update_b_complement(surrogate_mask, x_batch.view(), codes.view(), w, &mut flops)?;
        }
        stats.t = t;

        if t % checkpoint_every == 0 || t == total {
            let test_objective = match x_test {
                Some(xt) => Some(surrogate::empirical_objective(
                    xt,
                    state.d.view(),
                    &cfg.params,
                    cfg.eval_tol,
                    cfg.eval_max_iter,
                )?),
                None => None,
            };
            checkpoints.push(Checkpoint {
                iter: t,
                epoch: t * eta as u64 / n as u64,
                wall_seconds: clock() - t0,
                flops: flops.total(),
                train_surrogate: stats.surrogate_value(state.d.view()),
                test_objective,
            });
        }
    }

    Ok(FitReport { checkpoints, state, warnings })
}

/// Two-thread version of step 5: dictionary update on the selected rows
/// while the complement rows of `B̄` are updated on a second thread.
#[cfg(feature = "std")]
#[allow(clippy::too_many_arguments)]
fn run_overlapped(
    state: &mut DictionaryState,
    stats: &mut SurrogateStats,
    mask: &Mask,
    x_batch: ArrayView2<'_, f64>,
    codes: ArrayView2<'_, f64>,
    w: f64,
    atom_order: &[usize],
    flops: &mut FlopCounter,
) -> Result<()> {
    let b_sel = subsampling::gather_rows(stats.b_bar.view(), mask)?;
    let c_bar = stats.c_bar.clone();
    let mut complement_flops = FlopCounter::new();
    let mut dict_result = Ok(());
    std::thread::scope(|scope| {
        let handle = scope.spawn(|| {
            stats.update_b_complement(mask, x_batch, codes, w, &mut complement_flops)
        });
        dict_result = partial_dictionary_update_gathered(
            state,
            mask,
            c_bar.view(),
            b_sel.view(),
            atom_order,
            flops,
        );
        handle.join().expect("complement update thread panicked")
    })?;
    dict_result?;
    flops.add(complement_flops.total());
    Ok(())
}

#[cfg(not(feature = "std"))]
#[allow(clippy::too_many_arguments)]
fn run_overlapped(
    state: &mut DictionaryState,
    stats: &mut SurrogateStats,
    mask: &Mask,
    x_batch: ArrayView2<'_, f64>,
    codes: ArrayView2<'_, f64>,
    w: f64,
    atom_order: &[usize],
    flops: &mut FlopCounter,
) -> Result<()> {
    let b_sel = subsampling::gather_rows(stats.b_bar.view(), mask)?;
    partial_dictionary_update_gathered(state, mask, stats.c_bar.view(), b_sel.view(), atom_order, flops)?;
    stats.update_b_complement(mask, x_batch, codes, w, flops)
}

/// Full-batch alternate minimization: exact codes for every column, then
/// block coordinate descent on the dictionary to convergence, repeated
/// until the relative objective change drops below `outer_tol`. The
/// objective trace is monotone non-increasing.
pub fn alternate_minimization_oracle(
    x: ArrayView2<'_, f64>,
    cfg: &FitConfig,
    outer_tol: f64,
    max_outer: usize,
) -> Result<(DictionaryState, f64)> {
    cfg.validate()?;
    check_finite(x)?;
    let p = x.nrows();
    let n = x.ncols();
    let k = cfg.k;

    let streams = RngStreams::new(cfg.seed);
    let mut init_rng = streams.stream(rng::STREAM_INIT);
    let mut atom_rng = streams.stream(rng::STREAM_ATOMS);
    let mut state = init_dictionary(
        x,
        k,
        &mut init_rng,
        cfg.params.mu,
        cfg.params.positive_dict,
        false,
    )?;

    let mut codes = Array2::<f64>::zeros((k, n));
    let mut flops = FlopCounter::new();
    let mut objective = f64::INFINITY;

    for _ in 0..max_outer {
        // Exact codes for all columns.
        let gram = state.d.t().dot(&state.d);
        let mut new_objective = 0.0;
        for i in 0..n {
            let xi = x.column(i);
            let beta: Array1<f64> = state.d.t().dot(&xi);
            let alpha = proximal::solve_code(
                gram.view(),
                beta.view(),
                &cfg.params,
                Some(codes.column(i)),
                cfg.eval_tol,
                cfg.eval_max_iter,
            )?;
            new_objective += 0.5 * xi.dot(&xi)
                + proximal::code_objective(gram.view(), beta.view(), alpha.view(), &cfg.params);
            codes.column_mut(i).assign(&alpha);
        }
        new_objective /= n as f64;

        let rel_change = (objective - new_objective).abs() / new_objective.abs().max(1e-12);
        objective = new_objective;
        if rel_change < outer_tol {
            break;
        }

        // Dictionary: BCD to convergence on the full-batch surrogate.
        let b_bar = x.dot(&codes.t()) / n as f64;
        let c_bar = codes.dot(&codes.t()) / n as f64;
        let mut stats = SurrogateStats::new(p, k);
        stats.b_bar = b_bar.clone();
        stats.c_bar = c_bar.clone();
        let mut prev = stats.surrogate_value(state.d.view());
        for _ in 0..200 {
            let order = draw_atom_order(k, &mut atom_rng);
            dict_update::full_dictionary_update(
                &mut state,
                c_bar.view(),
                b_bar.view(),
                &order,
                &mut flops,
            )?;
            let val = stats.surrogate_value(state.d.view());
            if prev - val <= 1e-10 * (1.0 + val.abs()) {
                break;
            }
            prev = val;
        }
    }
    Ok((state, objective))
}
