//! Elastic-net penalty, projection onto the elastic-net ball, and the
//! coordinate-descent code solver.
//!
//! The elastic-net functional with mix `m` is `(1-m)·‖v‖₁ + (m/2)·‖v‖₂²`.
//! It serves both as the code penalty (mix `ν`) and as the per-atom
//! constraint of the dictionary (mix `μ`, ball of radius 1). This is the
//! single definition of that norm; every other module calls in here.

use alloc::vec::Vec;

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Penalty mixes, regularization strength and positivity switches shared by
/// the code solver and the dictionary constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticNetParams {
    /// Code penalty mix: 0 = pure l1 (lasso), 1 = pure ridge.
    pub nu: f64,
    /// Dictionary constraint mix: 0 = l1 ball, 1 = l2 ball.
    pub mu: f64,
    /// Regularization strength on the code.
    pub lambda: f64,
    pub positive_code: bool,
    pub positive_dict: bool,
}

impl ElasticNetParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.nu) {
            return Err(Error::Domain("nu must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::Domain("mu must lie in [0, 1]"));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::Domain("lambda must be finite and >= 0"));
        }
        Ok(())
    }
}

impl Default for ElasticNetParams {
    fn default() -> Self {
        ElasticNetParams {
            nu: 0.0,
            mu: 1.0,
            lambda: 0.0,
            positive_code: false,
            positive_dict: false,
        }
    }
}

/// `(1-mix)·‖v‖₁ + (mix/2)·‖v‖₂²`.
pub fn elastic_net_value(v: ArrayView1<'_, f64>, mix: f64) -> f64 {
    let mut l1 = 0.0;
    let mut sq = 0.0;
    for &x in v.iter() {
        l1 += x.abs();
        sq += x * x;
    }
    (1.0 - mix) * l1 + 0.5 * mix * sq
}

/// Shrinkage map behind the projection: the minimizer of
/// `½(d-c)² + θ·[(1-mix)d + (mix/2)d²]` over `d ≥ 0`, for `c ≥ 0`.
#[inline]
fn shrink(c: f64, theta: f64, mix: f64) -> f64 {
    let num = c - theta * (1.0 - mix);
    if num <= 0.0 {
        0.0
    } else {
        num / (1.0 + theta * mix)
    }
}

fn constraint_at(mags: &[f64], theta: f64, mix: f64) -> f64 {
    let mut l1 = 0.0;
    let mut sq = 0.0;
    for &c in mags {
        let d = shrink(c, theta, mix);
        l1 += d;
        sq += d * d;
    }
    (1.0 - mix) * l1 + 0.5 * mix * sq
}

/// Euclidean projection of `u` onto the elastic-net ball
/// `{d : (1-mix)·‖d‖₁ + (mix/2)·‖d‖₂² ≤ radius}`, optionally intersected
/// with the nonnegative orthant.
///
/// Reduces to a 1-D root-find on the Lagrange multiplier of the shrinkage
/// map, solved by bracketing bisection.
pub fn enet_projection(
    u: ArrayView1<'_, f64>,
    radius: f64,
    mix: f64,
    positive: bool,
) -> Result<Array1<f64>> {
    if !radius.is_finite() || radius < 0.0 {
        return Err(Error::Domain("projection radius must be finite and >= 0"));
    }
    // With positivity the optimum zeroes every coordinate where u <= 0, so
    // both cases reduce to projecting the magnitude vector.
    let signs: Vec<f64> = u
        .iter()
        .map(|&x| if positive { 1.0 } else { x.signum() })
        .collect();
    let mags: Vec<f64> = u
        .iter()
        .map(|&x| if positive { x.max(0.0) } else { x.abs() })
        .collect();

    if radius == 0.0 {
        return Ok(Array1::zeros(u.len()));
    }
    let tol = 1e-12 * radius.max(1.0);
    if constraint_at(&mags, 0.0, mix) <= radius + tol {
        // Feasible up to the bisection residual tolerance: return u itself
        // (clipped when positive). The slack makes re-projection exact.
        let out: Vec<f64> = signs.iter().zip(&mags).map(|(s, c)| s * c).collect();
        return Ok(Array1::from(out));
    }

    // Bracket the multiplier: constraint_at is continuous, strictly
    // decreasing to 0, and > radius at theta = 0.
    let mut lo = 0.0;
    let mut hi = 1.0;
    while constraint_at(&mags, hi, mix) > radius {
        lo = hi;
        hi *= 2.0;
    }
    let mut theta = hi;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let g = constraint_at(&mags, mid, mix);
        if (g - radius).abs() <= tol {
            theta = mid;
            break;
        }
        if g > radius {
            lo = mid;
        } else {
            hi = mid;
        }
        // Keep the feasible end so the returned point never exceeds the
        // ball by more than the residual tolerance.
        theta = hi;
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }

    let out: Vec<f64> = signs
        .iter()
        .zip(&mags)
        .map(|(s, c)| s * shrink(*c, theta, mix))
        .collect();
    Ok(Array1::from(out))
}

/// Soft-threshold step of the coordinate update: minimizer of
/// `½·a·z² - rho·z + lam1·|z| + (lam2/2)·z²` (over `z ≥ 0` when positive).
#[inline]
fn coordinate_min(a: f64, rho: f64, lam1: f64, lam2: f64, positive: bool) -> Option<f64> {
    let denom = a + lam2;
    let num = if positive {
        (rho - lam1).max(0.0)
    } else {
        let shrunk = rho.abs() - lam1;
        if shrunk <= 0.0 {
            0.0
        } else {
            shrunk * rho.signum()
        }
    };
    if num == 0.0 {
        return Some(0.0);
    }
    if denom <= 0.0 {
        return None; // unbounded direction
    }
    Some(num / denom)
}

/// Coordinate-descent solver for the code regression
/// `min_α ½·αᵀGα - αᵀβ + λ[(1-ν)‖α‖₁ + (ν/2)‖α‖₂²]`,
/// with `α ≥ 0` when `params.positive_code`.
///
/// Coordinates are visited cyclically; `order`, when given, fixes a custom
/// visiting order per sweep. Stops when the largest coordinate change of a
/// sweep falls below `tol` relative to the iterate scale, or after
/// `max_iter` sweeps. Returns the solution and the number of sweeps run.
pub fn solve_code_counted(
    g: ArrayView2<'_, f64>,
    beta: ArrayView1<'_, f64>,
    params: &ElasticNetParams,
    warm_start: Option<ArrayView1<'_, f64>>,
    tol: f64,
    max_iter: usize,
    order: Option<&[usize]>,
) -> Result<(Array1<f64>, usize)> {
    let k = beta.len();
    if g.nrows() != k || g.ncols() != k {
        return Err(Error::DimMismatch { expected: k, got: g.nrows() });
    }
    let lam1 = params.lambda * (1.0 - params.nu);
    let lam2 = params.lambda * params.nu;

    let mut alpha: Array1<f64> = match warm_start {
        Some(w) => {
            if w.len() != k {
                return Err(Error::DimMismatch { expected: k, got: w.len() });
            }
            w.to_owned()
        }
        None => Array1::zeros(k),
    };
    // Residual product q = G·α, maintained incrementally.
    let mut q: Array1<f64> = g.dot(&alpha);

    let default_order: Vec<usize> = (0..k).collect();
    let order = order.unwrap_or(&default_order);

    let mut sweeps = 0;
    for _ in 0..max_iter {
        sweeps += 1;
        let mut max_delta = 0.0_f64;
        let mut max_abs = 1.0_f64;
        for &j in order {
            let old = alpha[j];
            let rho = beta[j] - (q[j] - g[[j, j]] * old);
            let new = match coordinate_min(g[[j, j]], rho, lam1, lam2, params.positive_code) {
                Some(z) => z,
                None => return Err(Error::SingularCoordinate { index: j }),
            };
            let delta = new - old;
            if delta != 0.0 {
                for l in 0..k {
                    q[l] += g[[l, j]] * delta;
                }
                alpha[j] = new;
            }
            max_delta = max_delta.max(delta.abs());
            max_abs = max_abs.max(new.abs());
        }
        if max_delta <= tol * max_abs {
            break;
        }
    }
    Ok((alpha, sweeps))
}

/// See [`solve_code_counted`]; this drops the sweep count.
pub fn solve_code(
    g: ArrayView2<'_, f64>,
    beta: ArrayView1<'_, f64>,
    params: &ElasticNetParams,
    warm_start: Option<ArrayView1<'_, f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<Array1<f64>> {
    solve_code_counted(g, beta, params, warm_start, tol, max_iter, None).map(|(a, _)| a)
}

/// Value of the code objective `½αᵀGα - αᵀβ + λΩ(α)`.
pub fn code_objective(
    g: ArrayView2<'_, f64>,
    beta: ArrayView1<'_, f64>,
    alpha: ArrayView1<'_, f64>,
    params: &ElasticNetParams,
) -> f64 {
    let ga = g.dot(&alpha);
    0.5 * alpha.dot(&ga) - alpha.dot(&beta)
        + params.lambda * elastic_net_value(alpha, params.nu)
}
