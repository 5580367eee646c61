use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{check_len, check_weight, OperatorError};
use crate::dyadic::DyadicGrid;
use crate::space::FiniteSht;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EstimateKind {
    Exact,
    LowerBound,
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EstimateMethod {
    PowerIteration,
    Exhaustive,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub kind: EstimateKind,
    pub method: EstimateMethod,
    pub iterations: usize,
    pub trials: usize,
    pub seed: u64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    /// Random starting vectors for lower-bound searches.
    pub trials: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Relative tolerance of the iterations.
    pub tol: f64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            trials: 8,
            seed: 0,
            max_iter: 400,
            tol: 1e-10,
        }
    }
}

/// `(Σ |f|^p w mu)^(1/p)`.
pub fn lp_norm(f: &[f64], w: &[f64], mu: &[f64], p: f64) -> f64 {
    f.iter()
        .zip(w)
        .zip(mu)
        .map(|((v, ww), m)| v.abs().powf(p) * ww * m)
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Per-trial generator: the master seed selects the key, the trial index the
/// stream, so results do not depend on scheduling.
pub(crate) fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `‖A‖` on `L^p(w)` for the matrix action `f ↦ A f`.
///
/// `p = 2` gives the largest singular value of `D A D^-1`,
/// `D = diag(sqrt(w mu))`, by power iteration; the result is `EXACT` once the
/// eigen-residual falls below `tol`. Other `p` give `LOWER_BOUND`s from
/// Boyd's nonlinear power method over `trials` random starts.
pub fn weighted_norm(
    a: &DMatrix<f64>,
    space: &FiniteSht,
    p: f64,
    w: &[f64],
    opts: &NormOptions,
) -> Result<NormEstimate, OperatorError> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(OperatorError::PInvalid(p));
    }
    check_weight(w, space.len())?;
    if p == 2.0 {
        let d: Vec<f64> = w.iter().zip(space.masses()).map(|(x, m)| (x * m).sqrt()).collect();
        let b = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| d[i] * a[(i, j)] / d[j]);
        let (sigma, iterations, converged) = top_singular_value(&b, opts.max_iter.max(2000), opts.tol);
        return Ok(NormEstimate {
            value: sigma,
            kind: if converged {
                EstimateKind::Exact
            } else {
                EstimateKind::LowerBound
            },
            method: EstimateMethod::PowerIteration,
            iterations,
            trials: 1,
            seed: opts.seed,
            converged,
        });
    }
    Ok(two_weight_norm_lower_bound(a, space, p, w, w, &[], opts))
}

/// Largest singular value by power iteration on `BᵀB`, accelerated by
/// repeated squaring; returns `(value, iterations, converged)`. When the
/// eigen-residual stalls on clustered top singular values the value comes
/// from a dense symmetric eigensolve instead.
pub(crate) fn top_singular_value(b: &DMatrix<f64>, max_iter: usize, tol: f64) -> (f64, usize, bool) {
    let n = b.ncols();
    let c = b.transpose() * b;
    let scale = c.norm();
    if scale == 0.0 || n == 0 {
        return (0.0, 0, true);
    }
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.25 * ((i + 1) as f64).sin());
    v /= v.norm();
    if n > 2 {
        let mut s = &c / scale;
        for _ in 0..6 {
            s = &s * &s;
            let nrm = s.norm();
            if nrm == 0.0 || !nrm.is_finite() {
                break;
            }
            s /= nrm;
        }
        for _ in 0..8 {
            let next = &s * &v;
            let nrm = next.norm();
            if nrm == 0.0 || !nrm.is_finite() {
                break;
            }
            v = next / nrm;
        }
    }
    let mut lambda = 0.0;
    for it in 1..=max_iter {
        let cv = &c * &v;
        lambda = v.dot(&cv);
        let residual = (&cv - &v * lambda).norm();
        if residual <= tol * lambda.abs() || lambda == 0.0 {
            return (lambda.max(0.0).sqrt(), it, true);
        }
        let nrm = cv.norm();
        if nrm == 0.0 {
            return (0.0, it, true);
        }
        v = cv / nrm;
    }
    let top = c.symmetric_eigenvalues().iter().copied().fold(lambda, f64::max);
    (top.max(0.0).sqrt(), max_iter, top.is_finite())
}

/// Lower bound for `sup ‖A f‖_{L^p(w_out)} / ‖f‖_{L^p(w_in)}` by Boyd's
/// power method from the given starts plus `opts.trials` random ones.
pub fn two_weight_norm_lower_bound(
    a: &DMatrix<f64>,
    space: &FiniteSht,
    p: f64,
    w_out: &[f64],
    w_in: &[f64],
    starts: &[Vec<f64>],
    opts: &NormOptions,
) -> NormEstimate {
    let mu = space.masses();
    let q = p / (p - 1.0);
    let s_out: Vec<f64> = w_out.iter().zip(mu).map(|(w, m)| (w * m).powf(1.0 / p)).collect();
    let s_in: Vec<f64> = w_in.iter().zip(mu).map(|(w, m)| (w * m).powf(1.0 / p)).collect();
    let b = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| s_out[i] * a[(i, j)] / s_in[j]);
    let bt = b.transpose();
    let n = a.ncols();

    let mut initial: Vec<Vec<f64>> = starts
        .iter()
        .map(|f| f.iter().zip(&s_in).map(|(v, s)| v * s).collect())
        .collect();
    let random: Vec<Vec<f64>> = (0..opts.trials)
        .map(|t| {
            let mut rng = trial_rng(opts.seed, t as u64);
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
        })
        .collect();
    initial.extend(random);

    let results: Vec<(f64, usize)> = initial
        .par_iter()
        .map(|x0| boyd(&b, &bt, x0, p, q, opts.max_iter, opts.tol))
        .collect();
    let (value, iterations) = results
        .iter()
        .fold((0.0f64, 0usize), |(v, i), &(r, it)| (v.max(r), i + it));
    NormEstimate {
        value,
        kind: EstimateKind::LowerBound,
        method: EstimateMethod::MonteCarlo,
        iterations,
        trials: initial.len(),
        seed: opts.seed,
        converged: true,
    }
}

fn pnorm(x: &[f64], p: f64) -> f64 {
    x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

fn dual_direction(y: &[f64], p: f64) -> Vec<f64> {
    y.iter().map(|v| v.signum() * v.abs().powf(p - 1.0)).collect()
}

/// Boyd's iteration for `‖B‖_{p→p}`; returns the best ratio and iterations.
fn boyd(b: &DMatrix<f64>, bt: &DMatrix<f64>, x0: &[f64], p: f64, q: f64, max_iter: usize, tol: f64) -> (f64, usize) {
    let nx = pnorm(x0, p);
    if nx == 0.0 || !nx.is_finite() {
        return (0.0, 0);
    }
    let mut x = DVector::from_iterator(x0.len(), x0.iter().map(|v| v / nx));
    let mut best = 0.0f64;
    for it in 1..=max_iter {
        let y = b * &x;
        let val = pnorm(y.as_slice(), p);
        if val <= best * (1.0 + tol) {
            best = best.max(val);
            return (best, it);
        }
        best = val;
        let z = DVector::from_vec(dual_direction(y.as_slice(), p));
        let v = bt * z;
        let xn = dual_direction(v.as_slice(), q);
        let nrm = pnorm(&xn, p);
        if nrm == 0.0 || !nrm.is_finite() {
            return (best, it);
        }
        x = DVector::from_iterator(xn.len(), xn.iter().map(|t| t / nrm));
    }
    (best, max_iter)
}

/// Lower bound for `‖M‖_{L^p(w)}` of the dyadic maximal operator.
///
/// Each step freezes the cube realising `Mf` at every point, takes one Boyd
/// step for that linear averaging operator and re-evaluates `M`; the ratio
/// `‖Mf‖/‖f‖` never decreases along the way.
pub fn maximal_norm_lower_bound(
    grid: &DyadicGrid,
    p: f64,
    w: &[f64],
    starts: &[Vec<f64>],
    opts: &NormOptions,
) -> Result<NormEstimate, OperatorError> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(OperatorError::PInvalid(p));
    }
    let n = grid.len_points();
    check_weight(w, n)?;
    for s in starts {
        check_len(s, n)?;
    }
    let mut initial: Vec<Vec<f64>> = starts.iter().map(|s| s.iter().map(|v| v.abs()).collect()).collect();
    initial.extend((0..opts.trials).map(|t| {
        let mut rng = trial_rng(opts.seed, t as u64);
        (0..n).map(|_| rng.random_range(0.0..1.0f64).powi(4)).collect::<Vec<f64>>()
    }));
    let results: Vec<(f64, usize)> = initial
        .par_iter()
        .map(|f| maximal_ascent(grid, p, w, f, opts.max_iter, opts.tol))
        .collect();
    let (value, iterations) = results
        .iter()
        .fold((0.0f64, 0usize), |(v, i), &(r, it)| (v.max(r), i + it));
    Ok(NormEstimate {
        value,
        kind: EstimateKind::LowerBound,
        method: EstimateMethod::MonteCarlo,
        iterations,
        trials: initial.len(),
        seed: opts.seed,
        converged: true,
    })
}

/// Dyadic maximal function together with the cube attaining it at each point.
fn maximal_with_argmax(grid: &DyadicGrid, f: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let avg = grid.averages(f);
    let mut best = vec![(0.0f64, usize::MAX); grid.cubes().len()];
    for id in grid.cubes_coarse_to_fine() {
        let up = grid.cube(id).parent.map_or((f64::NEG_INFINITY, usize::MAX), |p| best[p]);
        best[id] = if avg[id] >= up.0 { (avg[id], id) } else { up };
    }
    grid.leaf_of_points().into_iter().map(|c| best[c]).unzip()
}

fn maximal_ascent(grid: &DyadicGrid, p: f64, w: &[f64], f0: &[f64], max_iter: usize, tol: f64) -> (f64, usize) {
    let space = grid.space();
    let mu = space.masses();
    let q = p / (p - 1.0);
    let s: Vec<f64> = w.iter().zip(mu).map(|(ww, m)| (ww * m).powf(1.0 / p)).collect();
    let mut f = f0.to_vec();
    let mut best = 0.0f64;
    for it in 1..=max_iter {
        let nf = lp_norm(&f, w, mu, p);
        if nf == 0.0 || !nf.is_finite() {
            return (best, it);
        }
        let (mf, arg) = maximal_with_argmax(grid, &f);
        let val = lp_norm(&mf, w, mu, p) / nf;
        if val <= best * (1.0 + tol) {
            return (best.max(val), it);
        }
        best = val;
        // y = B x with B = S L S^-1, x = S f / ‖f‖: y = S (Mf) / ‖f‖
        let y: Vec<f64> = mf.iter().zip(&s).map(|(v, ss)| v * ss / nf).collect();
        let z = dual_direction(&y, p);
        // Bᵀ z = S^-1 Lᵀ S z
        let u: Vec<f64> = z.iter().zip(&s).map(|(zz, ss)| zz * ss).collect();
        let mut acc = vec![0.0f64; grid.cubes().len()];
        for (x, &c) in arg.iter().enumerate() {
            acc[c] += u[x] / grid.cube(c).measure;
        }
        let mut lt = vec![0.0f64; f.len()];
        for (c, &a) in acc.iter().enumerate() {
            if a != 0.0 {
                for &y in &grid.cube(c).members {
                    lt[y] += a * mu[y];
                }
            }
        }
        let v: Vec<f64> = lt.iter().zip(&s).map(|(t, ss)| t / ss).collect();
        let xn = dual_direction(&v, q);
        f = xn.iter().zip(&s).map(|(x, ss)| (x / ss).max(0.0)).collect();
    }
    (best, max_iter)
}

/// `sup_λ λ w({|g| > λ})` computed exactly by sweeping the sorted values.
pub fn weak_quotient(g: &[f64], w: &[f64], mu: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| g[b].abs().total_cmp(&g[a].abs()));
    let mut mass = 0.0;
    let mut best = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let t = g[order[i]].abs();
        while i < order.len() && g[order[i]].abs() == t {
            mass += w[order[i]] * mu[order[i]];
            i += 1;
        }
        // λ ↑ t: the level set {|g| > λ} holds every value >= t
        best = best.max(t * mass);
    }
    best
}

/// Lower bound for `‖A‖_{L^1(v) → L^{1,∞}(w)}` over the candidate functions.
pub fn weak_norm(
    a: &DMatrix<f64>,
    space: &FiniteSht,
    w: &[f64],
    v: &[f64],
    candidates: &[Vec<f64>],
    seed: u64,
) -> Result<NormEstimate, OperatorError> {
    let n = space.len();
    check_weight(w, n)?;
    check_weight(v, n)?;
    let mu = space.masses();
    let mut value = 0.0f64;
    for f in candidates {
        check_len(f, n)?;
        let denom = lp_norm(f, v, mu, 1.0);
        if denom == 0.0 {
            continue;
        }
        let g = a * DVector::from_column_slice(f);
        value = value.max(weak_quotient(g.as_slice(), w, mu) / denom);
    }
    Ok(NormEstimate {
        value,
        kind: EstimateKind::LowerBound,
        method: EstimateMethod::MonteCarlo,
        iterations: candidates.len(),
        trials: candidates.len(),
        seed,
        converged: true,
    })
}
