//! Aggregated surrogate statistics and objective evaluation.
//!
//! The quadratic surrogate minimized by the dictionary update is
//! `½·Tr(DᵀD C̄) - Tr(Dᵀ B̄)` plus a constant. `B̄` and `C̄` are convex
//! combinations of per-iteration statistics with weights `w_t = t^{-u}`.
//! The constant term (quadratic in the data plus the code penalty) does not
//! affect the minimizer but is tracked so monotonicity diagnostics compare
//! true surrogate values.
//!
//! `B̄` row updates are written as explicit scalar loops in a fixed order so
//! that updating the selected rows and then the complement rows is
//! bit-identical to one full update.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::flops::FlopCounter;
use crate::proximal::{self, ElasticNetParams};
use crate::subsampling::Mask;

/// Aggregated surrogate parameters `B̄` (p×k), `C̄` (k×k), the iteration
/// counter, and the running constant term.
#[derive(Debug, Clone)]
pub struct SurrogateStats {
    pub b_bar: Array2<f64>,
    pub c_bar: Array2<f64>,
    pub t: u64,
    pub const_term: f64,
}

impl SurrogateStats {
    pub fn new(p: usize, k: usize) -> Self {
        SurrogateStats {
            b_bar: Array2::zeros((p, k)),
            c_bar: Array2::zeros((k, k)),
            t: 0,
            const_term: 0.0,
        }
    }
}

/// `w_t = t^{-u}`; `w_1 = 1` so the first update overwrites the zero state.
pub fn weight(t: u64, u: f64) -> Result<f64> {
    if t < 1 {
        return Err(Error::Domain("iteration counter must be >= 1"));
    }
    Ok(libm::pow(t as f64, -u))
}

fn check_w(w: f64) -> Result<()> {
    if !(w > 0.0 && w <= 1.0) {
        return Err(Error::Domain("weight must lie in (0, 1]"));
    }
    Ok(())
}

/// Update rule for a set of `B̄` rows: convex combination with the
/// batch-mean of `x αᵀ` restricted to those rows. Fixed summation order
/// keeps split updates bit-identical to full ones.
fn update_b_rows(
    b_bar: &mut Array2<f64>,
    rows: &[usize],
    x_batch: ArrayView2<'_, f64>,
    codes: ArrayView2<'_, f64>,
    w: f64,
) {
    let k = codes.nrows();
    let eta = codes.ncols();
    let inv_eta = 1.0 / eta as f64;
    for &row in rows {
        for j in 0..k {
            let mut acc = 0.0;
            for s in 0..eta {
                acc += x_batch[[row, s]] * codes[[j, s]];
            }
            b_bar[[row, j]] = (1.0 - w) * b_bar[[row, j]] + w * acc * inv_eta;
        }
    }
}

impl SurrogateStats {
    /// `C̄ ← (1-w)·C̄ + w·mean_batch(α αᵀ)`. Symmetry is preserved exactly
    /// because entries (i,j) and (j,i) run the identical summation.
    pub fn update_c(
        &mut self,
        codes: ArrayView2<'_, f64>,
        w: f64,
        flops: &mut FlopCounter,
    ) -> Result<()> {
        check_w(w)?;
        let k = codes.nrows();
        if self.c_bar.nrows() != k {
            return Err(Error::DimMismatch { expected: self.c_bar.nrows(), got: k });
        }
        let eta = codes.ncols();
        let inv_eta = 1.0 / eta as f64;
        for i in 0..k {
            for j in 0..k {
                let mut acc = 0.0;
                for s in 0..eta {
                    acc += codes[[i, s]] * codes[[j, s]];
                }
                self.c_bar[[i, j]] = (1.0 - w) * self.c_bar[[i, j]] + w * acc * inv_eta;
            }
        }
        flops.add((2 * k * k * eta + 3 * k * k) as u64);
        Ok(())
    }

    /// Update only the rows of `B̄` selected by the mask. Cost ∝ q·k·η.
    pub fn update_b_selected(
        &mut self,
        mask: &Mask,
        x_batch: ArrayView2<'_, f64>,
        codes: ArrayView2<'_, f64>,
        w: f64,
        flops: &mut FlopCounter,
    ) -> Result<()> {
        check_w(w)?;
        self.check_b_dims(mask, x_batch, codes)?;
        update_b_rows(&mut self.b_bar, mask.selected(), x_batch, codes, w);
        flops.add((mask.q() * codes.nrows() * (2 * codes.ncols() + 3)) as u64);
        Ok(())
    }

    /// Update the rows of `B̄` not selected by the mask.
    pub fn update_b_complement(
        &mut self,
        mask: &Mask,
        x_batch: ArrayView2<'_, f64>,
        codes: ArrayView2<'_, f64>,
        w: f64,
        flops: &mut FlopCounter,
    ) -> Result<()> {
        check_w(w)?;
        self.check_b_dims(mask, x_batch, codes)?;
        let rows = mask.complement();
        update_b_rows(&mut self.b_bar, &rows, x_batch, codes, w);
        flops.add((rows.len() * codes.nrows() * (2 * codes.ncols() + 3)) as u64);
        Ok(())
    }

    fn check_b_dims(
        &self,
        mask: &Mask,
        x_batch: ArrayView2<'_, f64>,
        codes: ArrayView2<'_, f64>,
    ) -> Result<()> {
        if mask.p() != self.b_bar.nrows() || x_batch.nrows() != self.b_bar.nrows() {
            return Err(Error::DimMismatch { expected: self.b_bar.nrows(), got: x_batch.nrows() });
        }
        if codes.nrows() != self.b_bar.ncols() {
            return Err(Error::DimMismatch { expected: self.b_bar.ncols(), got: codes.nrows() });
        }
        if codes.ncols() != x_batch.ncols() {
            return Err(Error::DimMismatch { expected: x_batch.ncols(), got: codes.ncols() });
        }
        Ok(())
    }

    /// Fold the batch's `½‖x‖² + λΩ(α)` mean into the running constant.
    pub fn update_const(
        &mut self,
        x_batch: ArrayView2<'_, f64>,
        codes: ArrayView2<'_, f64>,
        params: &ElasticNetParams,
        w: f64,
    ) {
        let eta = x_batch.ncols();
        let mut acc = 0.0;
        for s in 0..eta {
            let x = x_batch.column(s);
            let alpha = codes.column(s);
            acc += 0.5 * x.dot(&x) + params.lambda * proximal::elastic_net_value(alpha, params.nu);
        }
        self.const_term = (1.0 - w) * self.const_term + w * acc / eta as f64;
    }

    /// `½·Tr(DᵀD C̄) - Tr(Dᵀ B̄) + const_term`.
    pub fn surrogate_value(&self, d: ArrayView2<'_, f64>) -> f64 {
        let dtd = d.t().dot(&d);
        let mut quad = 0.0;
        for i in 0..dtd.nrows() {
            for j in 0..dtd.ncols() {
                quad += dtd[[i, j]] * self.c_bar[[j, i]];
            }
        }
        let mut lin = 0.0;
        for (dv, bv) in d.iter().zip(self.b_bar.iter()) {
            lin += dv * bv;
        }
        0.5 * quad - lin + self.const_term
    }
}

/// Mean held-out objective `(1/m)·Σ_i min_α ½‖x_i - Dα‖² + λΩ(α)`,
/// with codes solved to the given tolerance through the Gram route.
pub fn empirical_objective(
    x_test: ArrayView2<'_, f64>,
    d: ArrayView2<'_, f64>,
    params: &ElasticNetParams,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    if x_test.nrows() != d.nrows() {
        return Err(Error::DimMismatch { expected: d.nrows(), got: x_test.nrows() });
    }
    let gram = d.t().dot(&d);
    let m = x_test.ncols();
    let mut total = 0.0;
    for i in 0..m {
        let x = x_test.column(i);
        let beta: Array1<f64> = d.t().dot(&x);
        let alpha = proximal::solve_code(gram.view(), beta.view(), params, None, tol, max_iter)?;
        let half_xx = 0.5 * x.dot(&x);
        total += half_xx + proximal::code_objective(gram.view(), beta.view(), alpha.view(), params);
    }
    Ok(total / m as f64)
}
