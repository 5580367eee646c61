use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_len, OperatorError};
use crate::space::{approx_le, FiniteSht};

pub const KERNEL_SCHEMA: &str = "sht-kernel/1";

/// Smoothness constants are searched over `eta = 2^-1, ..., 2^-LADDER_DEPTH`.
const LADDER_DEPTH: i32 = 20;

/// Default ceiling on the smoothness constant when choosing `eta`.
pub const DEFAULT_SMOOTHNESS_CAP: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelCertificate {
    /// Smallest `C` with `|K(x0, y)| <= C / mu(B(x0, rho(x0, y)))`.
    pub c_decay: f64,
    pub eta: f64,
    /// Smallest constant making both smoothness conditions hold at `eta`.
    pub c_smooth: f64,
    /// The cap `c_smooth` was compared against.
    pub eta_admissible_threshold: f64,
    /// False when no `eta` on the ladder reached the cap; `eta` is then the
    /// last rung and `c_smooth` its measured constant.
    pub cap_met: bool,
    /// `(eta, c_smooth)` for every rung tried.
    pub ladder: Vec<(f64, f64)>,
}

/// A kernel `K` on a space with the diagonal convention `K(x, x) = 0`.
#[derive(Debug, Clone)]
pub struct KernelOperator {
    space: Arc<FiniteSht>,
    kernel: DMatrix<f64>,
    certificate: Option<KernelCertificate>,
}

impl KernelOperator {
    /// Wraps `kernel` without certifying it; the diagonal is zeroed.
    pub fn new(space: Arc<FiniteSht>, mut kernel: DMatrix<f64>) -> Result<Self, OperatorError> {
        let n = space.len();
        if kernel.shape() != (n, n) {
            return Err(OperatorError::KernelShape {
                rows: kernel.nrows(),
                cols: kernel.ncols(),
                n,
            });
        }
        kernel.fill_diagonal(0.0);
        Ok(Self {
            space,
            kernel,
            certificate: None,
        })
    }

    /// Wraps and certifies with the default smoothness cap.
    pub fn certified(space: Arc<FiniteSht>, kernel: DMatrix<f64>) -> Result<Self, OperatorError> {
        let mut op = Self::new(space, kernel)?;
        op.certificate = Some(certify_kernel(&op.space, &op.kernel, DEFAULT_SMOOTHNESS_CAP)?);
        Ok(op)
    }

    pub fn space(&self) -> &FiniteSht {
        &self.space
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn certificate(&self) -> Option<&KernelCertificate> {
        self.certificate.as_ref()
    }

    /// Matrix of `f ↦ Σ_y K(x, y) f(y) mu(y)`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mu = DVector::from_column_slice(self.space.masses());
        let mut a = self.kernel.clone();
        for (j, mut col) in a.column_iter_mut().enumerate() {
            col *= mu[j];
        }
        a
    }

    /// The operator with kernel `K(y, x)`, adjoint with respect to `mu`.
    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            kernel: self.kernel.transpose(),
            certificate: self.certificate.clone(),
        }
    }
}

/// `K(x, y) = sgn(x - y) / mu(B(x, rho(x, y)))`, ordering points by their
/// coordinates when present and by index otherwise.
pub fn graded_sign_kernel(space: &FiniteSht) -> DMatrix<f64> {
    let balls = space.pair_ball_masses();
    let key = |i: usize| space.coords().map_or(i as f64, |c| c[i]);
    DMatrix::from_fn(space.len(), space.len(), |x, y| {
        if x == y {
            return 0.0;
        }
        let s = match key(x).total_cmp(&key(y)) {
            std::cmp::Ordering::Greater => 1.0,
            std::cmp::Ordering::Less => -1.0,
            std::cmp::Ordering::Equal => (x as f64 - y as f64).signum(),
        };
        s / balls[(x, y)]
    })
}

/// Measures the decay constant and, over a ladder of `eta`, the smoothness
/// constant; keeps the largest `eta` whose constant is at most `cap`.
pub fn certify_kernel(
    space: &FiniteSht,
    kernel: &DMatrix<f64>,
    cap: f64,
) -> Result<KernelCertificate, OperatorError> {
    let n = space.len();
    if kernel.shape() != (n, n) {
        return Err(OperatorError::KernelShape {
            rows: kernel.nrows(),
            cols: kernel.ncols(),
            n,
        });
    }
    let balls = space.pair_ball_masses();
    let mut c_decay = 0.0f64;
    for x0 in 0..n {
        for y in 0..n {
            if x0 != y {
                c_decay = c_decay.max(kernel[(x0, y)].abs() * balls[(x0, y)]);
            }
        }
    }
    if !c_decay.is_finite() {
        return Err(OperatorError::DecayUnbounded);
    }
    let mut ladder = Vec::new();
    let mut chosen = None;
    for j in 1..=LADDER_DEPTH {
        let eta = 0.5f64.powi(j);
        let c = smoothness_constant(space, kernel, &balls, eta);
        ladder.push((eta, c));
        if c <= cap {
            chosen = Some((eta, c));
            break;
        }
    }
    let (eta, c_smooth, cap_met) = match chosen {
        Some((e, c)) => (e, c, true),
        None => {
            let &(e, c) = ladder.last().unwrap();
            (e, c, false)
        }
    };
    Ok(KernelCertificate {
        c_decay,
        eta,
        c_smooth,
        eta_admissible_threshold: cap,
        cap_met,
        ladder,
    })
}

fn smoothness_constant(space: &FiniteSht, kernel: &DMatrix<f64>, balls: &DMatrix<f64>, eta: f64) -> f64 {
    let n = space.len();
    (0..n)
        .into_par_iter()
        .map(|x0| {
            let mut worst = 0.0f64;
            for y in 0..n {
                if y == x0 {
                    continue;
                }
                let r = space.rho(x0, y);
                for x in 0..n {
                    if x == x0 || x == y {
                        continue;
                    }
                    let d = space.rho(x, x0);
                    if !approx_le(d, eta * r) {
                        continue;
                    }
                    let diff = (kernel[(x, y)] - kernel[(x0, y)])
                        .abs()
                        .max((kernel[(y, x)] - kernel[(y, x0)]).abs());
                    let scale = (d / r).powf(eta) / balls[(x0, y)];
                    worst = worst.max(diff / scale);
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// `Tf(x) = Σ_y K(x, y) f(y) mu(y)`.
pub fn kernel_apply(op: &KernelOperator, f: &[f64]) -> Vec<f64> {
    let n = op.space.len();
    assert_eq!(f.len(), n, "function length");
    (0..n)
        .map(|x| (0..n).map(|y| op.kernel[(x, y)] * f[y] * op.space.mu(y)).sum())
        .collect()
}

/// Matrix of the `k`-th commutator `Σ_y (b(x) - b(y))^k K(x, y) f(y) mu(y)`.
pub fn commutator_matrix(op: &KernelOperator, b: &[f64], k: i64) -> Result<DMatrix<f64>, OperatorError> {
    if k < 0 {
        return Err(OperatorError::KNegative(k));
    }
    let n = op.space.len();
    check_len(b, n)?;
    Ok(DMatrix::from_fn(n, n, |x, y| {
        (b[x] - b[y]).powi(k as i32) * op.kernel[(x, y)] * op.space.mu(y)
    }))
}

pub fn commutator_apply(
    op: &KernelOperator,
    b: &[f64],
    k: i64,
    f: &[f64],
) -> Result<Vec<f64>, OperatorError> {
    let a = commutator_matrix(op, b, k)?;
    check_len(f, op.space.len())?;
    Ok((a * DVector::from_column_slice(f)).as_slice().to_vec())
}

/// `T_z f = e^{z b} T(e^{-z b} f)` for real `z`.
pub fn conjugated_operator(
    op: &KernelOperator,
    b: &[f64],
    z: f64,
    f: &[f64],
) -> Result<Vec<f64>, OperatorError> {
    let n = op.space.len();
    check_len(b, n)?;
    check_len(f, n)?;
    let (lo, hi) = b.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let spread = z.abs() * (hi - lo);
    if spread > 700.0 {
        return Err(OperatorError::Overflow(spread));
    }
    // centre b so that neither exponential overflows on its own
    let mid = 0.5 * (hi + lo);
    let g: Vec<f64> = f.iter().zip(b).map(|(v, bb)| v * (-z * (bb - mid)).exp()).collect();
    let tg = kernel_apply(op, &g);
    Ok(tg.iter().zip(b).map(|(v, bb)| v * (z * (bb - mid)).exp()).collect())
}

/// Dense kernel file: `kernel[i][j] = K(i, j)` in space-file point order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KernelFile {
    pub schema: String,
    pub kernel: Vec<Vec<f64>>,
}

impl KernelFile {
    pub fn from_matrix(k: &DMatrix<f64>) -> Self {
        Self {
            schema: KERNEL_SCHEMA.to_string(),
            kernel: k.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }

    pub fn into_matrix(self, n: usize) -> Result<DMatrix<f64>, OperatorError> {
        if self.schema != KERNEL_SCHEMA {
            return Err(OperatorError::Schema(format!(
                "expected schema {KERNEL_SCHEMA}, found {}",
                self.schema
            )));
        }
        if self.kernel.len() != n || self.kernel.iter().any(|r| r.len() != n) {
            return Err(OperatorError::Schema(format!("kernel must be {n}x{n}")));
        }
        if self.kernel.iter().flatten().any(|v| !v.is_finite()) {
            return Err(OperatorError::Schema("kernel entries must be finite".into()));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| self.kernel[i][j]))
    }

    pub fn parse(text: &str, n: usize) -> Result<DMatrix<f64>, OperatorError> {
        serde_json::from_str::<KernelFile>(text)?.into_matrix(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::build_interval_space;

    fn interval_op(n: usize) -> KernelOperator {
        let space = Arc::new(build_interval_space(n).unwrap());
        let k = graded_sign_kernel(&space);
        KernelOperator::certified(space, k).unwrap()
    }

    #[test]
    fn zero_kernel_certifies_trivially() {
        let space = Arc::new(build_interval_space(6).unwrap());
        let op = KernelOperator::certified(space, DMatrix::zeros(6, 6)).unwrap();
        let c = op.certificate().unwrap();
        assert_eq!(c.c_decay, 0.0);
        assert_eq!(c.c_smooth, 0.0);
        assert_eq!(c.eta, 0.5);
        assert_eq!(kernel_apply(&op, &[1.0; 6]), vec![0.0; 6]);
    }

    #[test]
    fn graded_sign_kernel_has_unit_decay() {
        let op = interval_op(32);
        let c = op.certificate().unwrap();
        assert!((c.c_decay - 1.0).abs() < 1e-12);
        assert!(c.c_smooth.is_finite());
    }

    #[test]
    fn graded_sign_on_four_points() {
        // Tf(x) = sum_y sgn(x - y) / #{z : |x - z| < |x - y|}
        let op = interval_op(4);
        let t = kernel_apply(&op, &[1.0; 4]);
        let expected = [-11.0 / 6.0, -1.0 / 3.0, 1.0 / 3.0, 11.0 / 6.0];
        for (a, e) in t.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12, "{t:?}");
        }
    }

    #[test]
    fn huge_entry_still_certifies() {
        let space = Arc::new(build_interval_space(5).unwrap());
        let mut k = graded_sign_kernel(&space);
        k[(0, 4)] = 1e6;
        let v = space.ball_mass(0, space.rho(0, 4));
        let op = KernelOperator::certified(space, k).unwrap();
        assert!(op.certificate().unwrap().c_decay >= 1e6 * v * (1.0 - 1e-12));
    }

    #[test]
    fn commutator_identities() {
        let op = interval_op(8);
        let b: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).sin()).collect();
        let f: Vec<f64> = (0..8).map(|i| (i as f64 * 1.3).cos()).collect();
        assert_eq!(commutator_apply(&op, &b, 0, &f).unwrap(), {
            let a = op.matrix() * DVector::from_column_slice(&f);
            a.as_slice().to_vec()
        });
        let c1 = commutator_apply(&op, &b, 1, &f).unwrap();
        let tf = kernel_apply(&op, &f);
        let bf: Vec<f64> = b.iter().zip(&f).map(|(x, y)| x * y).collect();
        let tbf = kernel_apply(&op, &bf);
        for x in 0..8 {
            let id = b[x] * tf[x] - tbf[x];
            assert!((c1[x] - id).abs() <= 1e-12 * (1.0 + id.abs()));
        }
        assert!(commutator_apply(&op, &[2.0; 8], 2, &f).unwrap().iter().all(|&v| v == 0.0));
        assert!(matches!(commutator_apply(&op, &b, -1, &f), Err(OperatorError::KNegative(-1))));
    }

    #[test]
    fn conjugation_examples() {
        let op = interval_op(8);
        let b: Vec<f64> = (0..8).map(|i| i as f64 * 0.3).collect();
        let f: Vec<f64> = (0..8).map(|i| 1.0 + i as f64).collect();
        let tf = kernel_apply(&op, &f);
        let t0 = conjugated_operator(&op, &b, 0.0, &f).unwrap();
        assert_eq!(t0, tf);
        let tc = conjugated_operator(&op, &[3.0; 8], 1.7, &f).unwrap();
        for (a, e) in tc.iter().zip(&tf) {
            assert!((a - e).abs() < 1e-12 * (1.0 + e.abs()));
        }
        assert!(matches!(
            conjugated_operator(&op, &b, 1000.0, &f),
            Err(OperatorError::Overflow(_))
        ));
    }

    #[test]
    fn kernel_file_roundtrip() {
        let space = build_interval_space(3).unwrap();
        let k = graded_sign_kernel(&space);
        let text = serde_json::to_string(&KernelFile::from_matrix(&k)).unwrap();
        assert_eq!(KernelFile::parse(&text, 3).unwrap(), k);
        assert!(KernelFile::parse(&text, 4).is_err());
    }
}
