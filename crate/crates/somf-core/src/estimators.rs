//! Per-sample estimators of the code-regression inputs `(G, β)`.
//!
//! Three variants trade memory for consistency:
//! - `Masked`: one-shot masked products, unbiased but not consistent;
//! - `Averaged`: per-sample running averages of both `G` and `β`
//!   (memory `n·k²`), consistent;
//! - `ExactGram`: maintained exact Gram matrix plus averaged `β`
//!   (memory `n·k`), consistent.
//!
//! All masked products touch only the selected rows, so their cost is
//! proportional to `q = p/r` rather than `p`.

use alloc::vec;
use alloc::vec::Vec;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::flops::FlopCounter;
use crate::subsampling::{gather_entries, gather_rows, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorVariant {
    Masked,
    Averaged,
    ExactGram,
}

/// Per-sample running averages and observation counts.
///
/// `Masked` stores nothing, `ExactGram` stores one `k`-vector per sample,
/// `Averaged` additionally one `k×k` matrix per sample.
#[derive(Debug, Clone)]
pub struct SampleCache {
    variant: EstimatorVariant,
    beta: Option<Array2<f64>>,      // k × n, column i = β^(i)
    gram: Option<Vec<Array2<f64>>>, // n entries of k × k
    counts: Vec<u64>,
    v: f64,
}

impl SampleCache {
    pub fn new(variant: EstimatorVariant, n: usize, k: usize, v: f64) -> Self {
        let beta = match variant {
            EstimatorVariant::Masked => None,
            _ => Some(Array2::zeros((k, n))),
        };
        let gram = match variant {
            EstimatorVariant::Averaged => Some(vec![Array2::zeros((k, k)); n]),
            _ => None,
        };
        SampleCache {
            variant,
            beta,
            gram,
            counts: vec![0; n],
            v,
        }
    }

    pub fn variant(&self) -> EstimatorVariant {
        self.variant
    }

    /// How many times sample `i` has been observed.
    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }

    /// Current β estimate for sample `i`, if the variant keeps one.
    pub fn beta(&self, i: usize) -> Option<ArrayView1<'_, f64>> {
        self.beta.as_ref().map(|b| b.column(i))
    }
}

/// `γ_c = c^{-v}`; equals 1 at the first observation so the zero-initialized
/// cache entry is overwritten.
pub fn gamma_weight(c: u64, v: f64) -> Result<f64> {
    if c < 1 {
        return Err(Error::Domain("observation count must be >= 1"));
    }
    Ok(libm::pow(c as f64, -v))
}

/// Masked Gram product `r·(P_t D)ᵀ(P_t D)`, shared by every sample drawn
/// under the same mask.
pub fn masked_gram(
    d: ArrayView2<'_, f64>,
    mask: &Mask,
    flops: &mut FlopCounter,
) -> Result<Array2<f64>> {
    let k = d.ncols();
    let d_sel = gather_rows(d, mask)?;
    let mut g = d_sel.t().dot(&d_sel);
    let r = mask.reduction();
    if r != 1.0 {
        g.mapv_inplace(|x| x * r);
    }
    flops.add(2 * (mask.q() * k * k) as u64);
    Ok(g)
}

/// Masked product `r·(P_t D)ᵀ(P_t x)`.
pub fn masked_beta(
    d: ArrayView2<'_, f64>,
    x: ArrayView1<'_, f64>,
    mask: &Mask,
    flops: &mut FlopCounter,
) -> Result<Array1<f64>> {
    let k = d.ncols();
    let d_sel = gather_rows(d, mask)?;
    let x_sel = gather_entries(x, mask)?;
    let mut b = d_sel.t().dot(&x_sel);
    let r = mask.reduction();
    if r != 1.0 {
        b.mapv_inplace(|v| v * r);
    }
    flops.add(2 * (mask.q() * k) as u64);
    Ok(b)
}

/// Code-regression inputs for one sample under the current mask.
///
/// For `Averaged`/`ExactGram` this increments the sample's observation
/// count and folds the masked products into its cache entry with weight
/// `γ = count^{-v}` before returning the blended values. `ExactGram`
/// requires `maintained_gram = DᵀD`.
#[allow(clippy::too_many_arguments)]
pub fn compute_code_inputs(
    variant: EstimatorVariant,
    d: ArrayView2<'_, f64>,
    x: ArrayView1<'_, f64>,
    mask: &Mask,
    cache: &mut SampleCache,
    sample: usize,
    maintained_gram: Option<ArrayView2<'_, f64>>,
    flops: &mut FlopCounter,
) -> Result<(Array2<f64>, Array1<f64>)> {
    compute_code_inputs_shared(variant, d, x, mask, cache, sample, maintained_gram, None, flops)
}

/// As [`compute_code_inputs`], but with the masked Gram product
/// precomputed once per iteration and shared across the mini-batch.
#[allow(clippy::too_many_arguments)]
pub fn compute_code_inputs_shared(
    variant: EstimatorVariant,
    d: ArrayView2<'_, f64>,
    x: ArrayView1<'_, f64>,
    mask: &Mask,
    cache: &mut SampleCache,
    sample: usize,
    maintained_gram: Option<ArrayView2<'_, f64>>,
    shared_masked_gram: Option<&Array2<f64>>,
    flops: &mut FlopCounter,
) -> Result<(Array2<f64>, Array1<f64>)> {
    if sample >= cache.counts.len() {
        return Err(Error::Domain("sample index out of range"));
    }
    let k = d.ncols();
    let beta_masked = masked_beta(d, x, mask, flops)?;

    match variant {
        EstimatorVariant::Masked => {
            let g = match shared_masked_gram {
                Some(g) => g.clone(),
                None => masked_gram(d, mask, flops)?,
            };
            Ok((g, beta_masked))
        }
        EstimatorVariant::Averaged => {
            cache.counts[sample] += 1;
            let gamma = gamma_weight(cache.counts[sample], cache.v)?;
            let g_masked = match shared_masked_gram {
                Some(g) => g.clone(),
                None => masked_gram(d, mask, flops)?,
            };
            let beta_store = cache.beta.as_mut().expect("averaged cache has beta");
            let mut bcol = beta_store.column_mut(sample);
            bcol.zip_mut_with(&beta_masked, |old, &new| {
                *old = (1.0 - gamma) * *old + gamma * new;
            });
            let gcell = &mut cache.gram.as_mut().expect("averaged cache has gram")[sample];
            gcell.zip_mut_with(&g_masked, |old, &new| {
                *old = (1.0 - gamma) * *old + gamma * new;
            });
            flops.add((3 * k * k + 3 * k) as u64);
            Ok((gcell.clone(), bcol.to_owned()))
        }
        EstimatorVariant::ExactGram => {
            let gram = maintained_gram
                .ok_or(Error::Domain("ExactGram variant needs the maintained Gram matrix"))?;
            cache.counts[sample] += 1;
            let gamma = gamma_weight(cache.counts[sample], cache.v)?;
            let beta_store = cache.beta.as_mut().expect("exact-gram cache has beta");
            let mut bcol = beta_store.column_mut(sample);
            bcol.zip_mut_with(&beta_masked, |old, &new| {
                *old = (1.0 - gamma) * *old + gamma * new;
            });
            flops.add(3 * k as u64);
            Ok((gram.to_owned(), bcol.to_owned()))
        }
    }
}
