#![allow(dead_code)] // each test binary uses its own subset

//! Independent reference implementations used only by tests.
//!
//! These deliberately take different algorithmic routes from the library:
//! the projection oracle is an exact sort-and-solve method (closed-form
//! multiplier per active-set segment) instead of bisection, and the code
//! solver oracle is proximal gradient (FISTA) instead of coordinate
//! descent.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

use somf_core::ElasticNetParams;

/// Exact projection onto `{d : (1-mix)‖d‖₁ + (mix/2)‖d‖₂² ≤ radius}`
/// (optionally with `d ≥ 0`) by sorting the magnitudes and solving the
/// multiplier equation in closed form on each active-set segment.
pub fn enet_projection_exact(
    u: ArrayView1<'_, f64>,
    radius: f64,
    mix: f64,
    positive: bool,
) -> Array1<f64> {
    assert!(radius >= 0.0);
    let signs: Vec<f64> = u
        .iter()
        .map(|&x| if positive { 1.0 } else { x.signum() })
        .collect();
    let mags: Vec<f64> = u
        .iter()
        .map(|&x| if positive { x.max(0.0) } else { x.abs() })
        .collect();
    let value =
        |v: &[f64]| (1.0 - mix) * v.iter().sum::<f64>() + 0.5 * mix * v.iter().map(|x| x * x).sum::<f64>();

    if radius == 0.0 {
        return Array1::zeros(u.len());
    }
    if value(&mags) <= radius {
        return Array1::from_iter(signs.iter().zip(&mags).map(|(s, c)| s * c));
    }

    let theta = if mix == 1.0 {
        // Pure l2: scale so ½‖d‖² = radius; d = c/(1+θ).
        let norm = mags.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = (2.0 * radius).sqrt() / norm;
        1.0 / scale - 1.0
    } else {
        solve_multiplier(&mags, radius, mix)
    };

    let l = 1.0 - mix;
    Array1::from_iter(signs.iter().zip(&mags).map(|(s, c)| {
        let num = c - theta * l;
        if num <= 0.0 {
            0.0
        } else {
            s * num / (1.0 + theta * mix)
        }
    }))
}

/// Closed-form multiplier for mix < 1: walk the breakpoints of the active
/// set in ascending order; on each segment the constraint equation is a
/// quadratic in θ.
fn solve_multiplier(mags: &[f64], radius: f64, mix: f64) -> f64 {
    let l = 1.0 - mix;
    let mut c: Vec<f64> = mags.iter().copied().filter(|&x| x > 0.0).collect();
    c.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = c.len();
    // Suffix sums: coordinates with c_i > θ·l stay active.
    let mut s1: Vec<f64> = vec![0.0; n + 1];
    let mut s2: Vec<f64> = vec![0.0; n + 1];
    for i in (0..n).rev() {
        s1[i] = s1[i + 1] + c[i];
        s2[i] = s2[i + 1] + c[i] * c[i];
    }
    let mut lo = 0.0;
    for seg in 0..n {
        let hi = c[seg] / l;
        // Active set on [lo, hi): indices seg..n.
        let m = (n - seg) as f64;
        let (sum1, sum2) = (s1[seg], s2[seg]);
        let a = -0.5 * m * l * l * mix - radius * mix * mix;
        let b = -m * l * l - 2.0 * radius * mix;
        let cc = l * sum1 + 0.5 * mix * sum2 - radius;
        let eps = 1e-9 * (1.0 + hi);
        if a == 0.0 {
            let theta = -cc / b;
            if theta >= lo - eps && theta <= hi + eps {
                return theta.clamp(lo, hi);
            }
        } else {
            let disc = b * b - 4.0 * a * cc;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                for theta in [(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)] {
                    if theta >= lo - eps && theta <= hi + eps {
                        return theta.clamp(lo, hi);
                    }
                }
            }
        }
        lo = hi;
    }
    panic!("no multiplier segment matched; infeasible input should not reach here");
}

/// KKT-style residual of a claimed projection: constraint violation plus
/// distance to the shrinkage fixed point at the implied multiplier.
pub fn projection_constraint_violation(d: ArrayView1<'_, f64>, radius: f64, mix: f64) -> f64 {
    let v = (1.0 - mix) * d.iter().map(|x| x.abs()).sum::<f64>()
        + 0.5 * mix * d.iter().map(|x| x * x).sum::<f64>();
    (v - radius).max(0.0)
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
pub fn spectral_norm(g: ArrayView2<'_, f64>) -> f64 {
    let k = g.nrows();
    let mut v = Array1::from_elem(k, 1.0 / (k as f64).sqrt());
    let mut lam = 0.0;
    for _ in 0..500 {
        let w = g.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lam = norm;
        v = w / norm;
    }
    lam
}

/// FISTA on `½αᵀGα - αᵀβ + λ[(1-ν)‖α‖₁ + (ν/2)‖α‖₂²]`, optionally over
/// `α ≥ 0`. Run to `tol` on the iterate change (l-inf).
pub fn solve_code_fista(
    g: ArrayView2<'_, f64>,
    beta: ArrayView1<'_, f64>,
    params: &ElasticNetParams,
    tol: f64,
    max_iter: usize,
) -> Array1<f64> {
    let k = beta.len();
    let lam1 = params.lambda * (1.0 - params.nu);
    let lam2 = params.lambda * params.nu;
    let lip = spectral_norm(g).max(1e-12);
    let step = 1.0 / lip;

    let prox = |y: f64| -> f64 {
        let scaled1 = step * lam1;
        let denom = 1.0 + step * lam2;
        if params.positive_code {
            ((y - scaled1).max(0.0)) / denom
        } else {
            let s = y.abs() - scaled1;
            if s <= 0.0 {
                0.0
            } else {
                s * y.signum() / denom
            }
        }
    };

    let mut alpha = Array1::<f64>::zeros(k);
    let mut momentum = alpha.clone();
    let mut t_acc = 1.0_f64;
    for _ in 0..max_iter {
        let grad = g.dot(&momentum) - &beta;
        let mut next = Array1::zeros(k);
        for j in 0..k {
            next[j] = prox(momentum[j] - step * grad[j]);
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_acc * t_acc).sqrt());
        let mut diff = 0.0_f64;
        for j in 0..k {
            diff = diff.max((next[j] - alpha[j]).abs());
        }
        let coef = (t_acc - 1.0) / t_next;
        momentum = &next + &((&next - &alpha) * coef);
        alpha = next;
        t_acc = t_next;
        if diff < tol {
            break;
        }
    }
    alpha
}

/// Random symmetric positive definite matrix.
pub fn random_spd<R: Rng>(k: usize, rng: &mut R) -> Array2<f64> {
    let a = Array2::from_shape_fn((k, k), |_| rng.gen_range(-1.0..1.0));
    let mut g = a.t().dot(&a);
    for j in 0..k {
        g[[j, j]] += 0.1;
    }
    g
}

pub fn random_vector<R: Rng>(k: usize, rng: &mut R) -> Array1<f64> {
    Array1::from_shape_fn(k, |_| rng.gen_range(-2.0..2.0))
}

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-scale..scale))
}
