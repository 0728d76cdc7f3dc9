//! Projected block coordinate descent on the dictionary, in full and
//! partial (masked) form, with per-atom slack-norm bookkeeping and online
//! maintenance of the Gram matrix.
//!
//! The partial update freezes every row outside the mask and solves the
//! reduced problem over the selected rows only. Each atom's reduced block
//! has an isotropic Hessian `C̄[j,j]·I`, so projecting the unconstrained
//! block minimizer onto the elastic-net ball of the atom's slack radius is
//! the exact constrained block minimizer: a single pass never increases the
//! surrogate.

use alloc::vec::Vec;

use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::flops::FlopCounter;
use crate::proximal::{elastic_net_value, enet_projection};
use crate::subsampling::{gather_rows, scatter_rows, Mask};

/// Atoms whose aggregated code energy `C̄[j,j]` falls below this are left
/// untouched for the pass; their gradient step is undefined.
const DEAD_ATOM_THRESHOLD: f64 = 1e-12;

/// Dictionary iterate plus the slack norms `n_j = 1 - ‖d_j‖` needed by the
/// partial update, and optionally the maintained Gram matrix `DᵀD`.
#[derive(Debug, Clone)]
pub struct DictionaryState {
    pub d: Array2<f64>,
    slack: Vec<f64>,
    pub gram: Option<Array2<f64>>,
    pub mu: f64,
    pub positive: bool,
}

impl DictionaryState {
    /// Wrap an existing dictionary, projecting each atom onto the unit
    /// elastic-net ball so the state invariants hold.
    pub fn from_dictionary(
        mut d: Array2<f64>,
        mu: f64,
        positive: bool,
        with_gram: bool,
    ) -> Result<Self> {
        let k = d.ncols();
        let mut slack = Vec::with_capacity(k);
        for j in 0..k {
            let col = d.column(j).to_owned();
            let proj = enet_projection(col.view(), 1.0, mu, positive)?;
            d.column_mut(j).assign(&proj);
            slack.push((1.0 - elastic_net_value(proj.view(), mu)).clamp(0.0, 1.0));
        }
        let gram = with_gram.then(|| d.t().dot(&d));
        Ok(DictionaryState { d, slack, gram, mu, positive })
    }

    pub fn k(&self) -> usize {
        self.d.ncols()
    }

    pub fn p(&self) -> usize {
        self.d.nrows()
    }

    /// Slack norms `n_j = 1 - ‖d_j‖` in the elastic-net atom norm.
    pub fn slack(&self) -> &[f64] {
        &self.slack
    }
}

/// Initial dictionary: `k` distinct data columns drawn uniformly at random,
/// each clipped (when positive) and projected onto the unit elastic-net ball.
pub fn init_dictionary<R: Rng>(
    x: ArrayView2<'_, f64>,
    k: usize,
    rng: &mut R,
    mu: f64,
    positive: bool,
    with_gram: bool,
) -> Result<DictionaryState> {
    let n = x.ncols();
    if k == 0 || k > n {
        return Err(Error::Domain("need 1 <= k <= number of samples"));
    }
    let picks = rand::seq::index::sample(rng, n, k);
    let mut d = Array2::zeros((x.nrows(), k));
    for (j, i) in picks.into_iter().enumerate() {
        d.column_mut(j).assign(&x.column(i));
    }
    DictionaryState::from_dictionary(d, mu, positive, with_gram)
}

/// Fresh uniform atom permutation for one update pass.
pub fn draw_atom_order<R: Rng>(k: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(rng);
    order
}

/// One pass of projected block coordinate descent restricted to the rows
/// selected by the mask. Rows outside the mask are bit-identical before and
/// after; the maintained Gram matrix, when present, is refreshed at cost
/// ∝ q·k².
pub fn partial_dictionary_update(
    state: &mut DictionaryState,
    mask: &Mask,
    c_bar: ArrayView2<'_, f64>,
    b_bar: ArrayView2<'_, f64>,
    atom_order: &[usize],
    flops: &mut FlopCounter,
) -> Result<()> {
    if b_bar.nrows() != state.p() {
        return Err(Error::DimMismatch { expected: state.p(), got: b_bar.nrows() });
    }
    let b_sel = gather_rows(b_bar, mask)?;
    partial_dictionary_update_gathered(state, mask, c_bar, b_sel.view(), atom_order, flops)
}

/// As [`partial_dictionary_update`] with the selected rows of `B̄` already
/// gathered (the form used when the complement surrogate update runs on
/// another thread).
pub fn partial_dictionary_update_gathered(
    state: &mut DictionaryState,
    mask: &Mask,
    c_bar: ArrayView2<'_, f64>,
    b_sel: ArrayView2<'_, f64>,
    atom_order: &[usize],
    flops: &mut FlopCounter,
) -> Result<()> {
    let k = state.k();
    let q = mask.q();
    if mask.p() != state.p() {
        return Err(Error::DimMismatch { expected: state.p(), got: mask.p() });
    }
    if c_bar.nrows() != k || c_bar.ncols() != k {
        return Err(Error::DimMismatch { expected: k, got: c_bar.nrows() });
    }
    if b_sel.nrows() != q {
        return Err(Error::DimMismatch { expected: q, got: b_sel.nrows() });
    }
    if atom_order.len() != k {
        return Err(Error::DimMismatch { expected: k, got: atom_order.len() });
    }
    if q == 0 {
        return Ok(());
    }

    let mut d_sel = gather_rows(state.d.view(), mask)?;

    if let Some(gram) = state.gram.as_mut() {
        let prod = d_sel.t().dot(&d_sel);
        *gram -= &prod;
        flops.add(2 * (q * k * k) as u64);
    }

    for &j in atom_order {
        let cjj = c_bar[[j, j]];
        if cjj < DEAD_ATOM_THRESHOLD {
            continue;
        }
        let norm_sel = elastic_net_value(d_sel.column(j), state.mu);
        let radius = (state.slack[j] + norm_sel).max(0.0);

        // Unconstrained block minimizer: d_j + (b_j - D c_j)/C̄[j,j].
        let grad: Array1<f64> = d_sel.dot(&c_bar.column(j));
        let mut u = d_sel.column(j).to_owned();
        for i in 0..q {
            u[i] += (b_sel[[i, j]] - grad[i]) / cjj;
        }

        let new_col = enet_projection(u.view(), radius, state.mu, state.positive)?;
        state.slack[j] = (radius - elastic_net_value(new_col.view(), state.mu)).clamp(0.0, 1.0);
        d_sel.column_mut(j).assign(&new_col);
        flops.add((2 * q * k + 6 * q) as u64);
    }

    scatter_rows(state.d.view_mut(), mask, d_sel.view())?;

    if let Some(gram) = state.gram.as_mut() {
        let prod = d_sel.t().dot(&d_sel);
        *gram += &prod;
        flops.add(2 * (q * k * k) as u64);
    }
    Ok(())
}

/// Full-dictionary update: identical code path with the all-rows mask.
pub fn full_dictionary_update(
    state: &mut DictionaryState,
    c_bar: ArrayView2<'_, f64>,
    b_bar: ArrayView2<'_, f64>,
    atom_order: &[usize],
    flops: &mut FlopCounter,
) -> Result<()> {
    let mask = Mask::full(state.p());
    partial_dictionary_update(state, &mask, c_bar, b_bar, atom_order, flops)
}
