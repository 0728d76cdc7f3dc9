//! Bernoulli row masks and the row gather/scatter primitives.
//!
//! A mask stands for the random diagonal matrix that keeps each of the `p`
//! rows independently with probability `1/r`, carrying weight `r` on kept
//! rows so products against it are unbiased. The matrix is never
//! materialized: callers gather the selected rows and scale by `r`.

use alloc::vec::Vec;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut2};
use rand::Rng;

use crate::error::{Error, Result};

/// One iteration's row selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    selected: Vec<usize>,
    reduction: f64,
    p: usize,
}

impl Mask {
    /// Build a mask from explicit indices. Indices must be strictly
    /// increasing and within `[0, p)`.
    pub fn new(selected: Vec<usize>, reduction: f64, p: usize) -> Result<Self> {
        if !reduction.is_finite() || reduction < 1.0 {
            return Err(Error::Domain("reduction factor must be >= 1"));
        }
        for w in selected.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Domain("mask indices must be strictly increasing"));
            }
        }
        if let Some(&last) = selected.last() {
            if last >= p {
                return Err(Error::Domain("mask index out of range"));
            }
        }
        Ok(Mask { selected, reduction, p })
    }

    /// The deterministic mask selecting every row (reduction 1).
    pub fn full(p: usize) -> Self {
        Mask {
            selected: (0..p).collect(),
            reduction: 1.0,
            p,
        }
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn reduction(&self) -> f64 {
        self.reduction
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of selected rows.
    pub fn q(&self) -> usize {
        self.selected.len()
    }

    pub fn is_full(&self) -> bool {
        self.selected.len() == self.p
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Rows not selected, in increasing order.
    pub fn complement(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.p - self.selected.len());
        let mut it = self.selected.iter().copied().peekable();
        for row in 0..self.p {
            if it.peek() == Some(&row) {
                it.next();
            } else {
                out.push(row);
            }
        }
        out
    }
}

/// Draw a Bernoulli mask: each row kept independently with probability `1/r`.
pub fn draw_mask<R: Rng>(p: usize, r: f64, rng: &mut R) -> Result<Mask> {
    if p == 0 {
        return Err(Error::Domain("mask needs at least one row"));
    }
    if !r.is_finite() || r < 1.0 {
        return Err(Error::Domain("reduction factor must be >= 1"));
    }
    let prob = 1.0 / r;
    let mut selected = Vec::with_capacity((p as f64 * prob) as usize + 1);
    for row in 0..p {
        if rng.gen::<f64>() < prob {
            selected.push(row);
        }
    }
    Ok(Mask { selected, reduction: r, p })
}

/// Rows of `y` at the mask's indices, in index order. No `r` scaling.
pub fn gather_rows(y: ArrayView2<'_, f64>, mask: &Mask) -> Result<Array2<f64>> {
    if y.nrows() != mask.p {
        return Err(Error::DimMismatch { expected: mask.p, got: y.nrows() });
    }
    let mut out = Array2::zeros((mask.q(), y.ncols()));
    for (dst, &src) in mask.selected.iter().enumerate() {
        out.row_mut(dst).assign(&y.row(src));
    }
    Ok(out)
}

/// Entries of a vector at the mask's indices.
pub fn gather_entries(x: ArrayView1<'_, f64>, mask: &Mask) -> Result<Array1<f64>> {
    if x.len() != mask.p {
        return Err(Error::DimMismatch { expected: mask.p, got: x.len() });
    }
    Ok(Array1::from_iter(mask.selected.iter().map(|&i| x[i])))
}

/// Write `source` back into the rows of `target` selected by the mask;
/// all other rows are untouched.
pub fn scatter_rows(
    mut target: ArrayViewMut2<'_, f64>,
    mask: &Mask,
    source: ArrayView2<'_, f64>,
) -> Result<()> {
    if target.nrows() != mask.p {
        return Err(Error::DimMismatch { expected: mask.p, got: target.nrows() });
    }
    if source.nrows() != mask.q() {
        return Err(Error::DimMismatch { expected: mask.q(), got: source.nrows() });
    }
    if source.ncols() != target.ncols() {
        return Err(Error::DimMismatch { expected: target.ncols(), got: source.ncols() });
    }
    for (src, &dst) in mask.selected.iter().enumerate() {
        target.row_mut(dst).assign(&source.row(src));
    }
    Ok(())
}
