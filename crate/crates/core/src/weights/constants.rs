use serde::Serialize;

use super::{ConstantKind, Weight, WeightError};
use crate::dyadic::DyadicGrid;
use crate::operators::maximal;

/// Hölder conjugate `p' = p / (p - 1)`.
pub fn dual_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

fn check_p(p: f64) -> Result<(), WeightError> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(WeightError::PInvalid(p))
    }
}

fn check_grid(w: &Weight, grid: &DyadicGrid) -> Result<(), WeightError> {
    if w.len() != grid.len_points() {
        return Err(WeightError::LengthMismatch {
            expected: grid.len_points(),
            found: w.len(),
        });
    }
    Ok(())
}

/// `max_Q (avg_Q w) (avg_Q w^{1-p'})^{p-1}`.
pub fn ap_constant(w: &Weight, grid: &DyadicGrid, p: f64) -> Result<f64, WeightError> {
    check_p(p)?;
    check_grid(w, grid)?;
    Ok(w.cached((ConstantKind::Ap, grid.id(), p.to_bits()), || {
        let e = 1.0 - dual_exponent(p);
        let dual: Vec<f64> = w.values().iter().map(|v| v.powf(e)).collect();
        let a = grid.averages(w.values());
        let s = grid.averages(&dual);
        a.iter().zip(&s).map(|(x, y)| x * y.powf(p - 1.0)).fold(1.0, f64::max)
    }))
}

/// `max_x Mw(x) / w(x)`, i.e. the largest `avg_Q w / w(x)` over `x ∈ Q`.
pub fn a1_constant(w: &Weight, grid: &DyadicGrid) -> Result<f64, WeightError> {
    check_grid(w, grid)?;
    Ok(w.cached((ConstantKind::A1, grid.id(), 0), || a1_of_values(grid, w.values())))
}

/// `A_1` quotient for a nonnegative function that may vanish: points where
/// both `v` and `Mv` vanish are skipped, a zero of `v` under positive `Mv`
/// gives infinity. The empty maximum is 1.
pub fn a1_of_values(grid: &DyadicGrid, v: &[f64]) -> f64 {
    let mv = maximal(grid, v);
    mv.iter().zip(v).fold(1.0, |acc, (&m, &x)| {
        if m == 0.0 {
            acc
        } else if x == 0.0 {
            f64::INFINITY
        } else {
            acc.max(m / x)
        }
    })
}

/// Fujii–Wilson constant `max_Q w(Q)^{-1} Σ_{x ∈ Q} M(w χ_Q)(x) mu(x)`.
pub fn ainf_fujii_wilson(w: &Weight, grid: &DyadicGrid) -> Result<f64, WeightError> {
    check_grid(w, grid)?;
    Ok(w.cached((ConstantKind::FujiiWilson, grid.id(), 0), || {
        let avg = grid.averages(w.values());
        let mu = grid.space().masses();
        let mut best = vec![0.0f64; grid.cubes().len()];
        let mut out = 1.0f64;
        for q in 0..grid.cubes().len() {
            // running max of averages inside Q, top-down from Q
            let sub = grid.subtree(q);
            for &id in &sub {
                let up = if id == q { 0.0 } else { best[grid.cube(id).parent.expect("inside subtree")] };
                best[id] = avg[id].max(up);
            }
            let mut deepest = vec![usize::MAX; grid.len_points()];
            for &id in &sub {
                for &x in &grid.cube(id).members {
                    deepest[x] = id;
                }
            }
            let cube = grid.cube(q);
            let integral: f64 = cube.members.iter().map(|&x| best[deepest[x]] * mu[x]).sum();
            out = out.max(integral / (avg[q] * cube.measure));
        }
        out
    }))
}

/// Hruščev constant `max_Q (avg_Q w) exp(avg_Q log w^{-1})`.
pub fn ainf_hruscev(w: &Weight, grid: &DyadicGrid) -> Result<f64, WeightError> {
    check_grid(w, grid)?;
    Ok(w.cached((ConstantKind::Hruscev, grid.id(), 0), || {
        let logs: Vec<f64> = w.values().iter().map(|v| -v.ln()).collect();
        let a = grid.averages(w.values());
        let l = grid.averages(&logs);
        a.iter().zip(&l).map(|(x, y)| x * y.exp()).fold(1.0, f64::max)
    }))
}

/// Reverse Hölder exponent `1 / (2 D [w]_{A_∞} - 1)` with `D = 1/ε`.
pub fn rh_exponent(w: &Weight, grid: &DyadicGrid) -> Result<f64, WeightError> {
    let fw = ainf_fujii_wilson(w, grid)?;
    Ok(1.0 / (2.0 * fw / grid.epsilon() - 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightCharacteristics {
    pub p: f64,
    pub ap: f64,
    pub a1: f64,
    pub ainf_fw: f64,
    pub ainf_h: f64,
    pub rh_exponent: f64,
    pub sigma_ainf_fw: f64,
}

pub fn characteristics(w: &Weight, grid: &DyadicGrid, p: f64) -> Result<WeightCharacteristics, WeightError> {
    Ok(WeightCharacteristics {
        p,
        ap: ap_constant(w, grid, p)?,
        a1: a1_constant(w, grid)?,
        ainf_fw: ainf_fujii_wilson(w, grid)?,
        ainf_h: ainf_hruscev(w, grid)?,
        rh_exponent: rh_exponent(w, grid)?,
        sigma_ainf_fw: ainf_fujii_wilson(&w.sigma(p)?, grid)?,
    })
}
