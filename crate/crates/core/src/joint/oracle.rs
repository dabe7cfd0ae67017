//! Numerical decision of joint measurability by Dykstra's alternating
//! projections between the product of four PSD cones and the affine set of
//! four-tuples with the required marginals.
//!
//! The affine set is `G(X) = C + s X` with `C = (0, A1, A2, I - A1 - A2)`,
//! `s = (1, -1, -1, 1)` and `X` Hermitian, so its Frobenius projection is
//! `X = sum_i s_i (H_i - C_i) / 4`.
//!
//! Infeasibility is only declared with a Farkas certificate: dual matrices
//! `Y1_j + Y2_k = V_jk >= 0` with `<b, Y> < 0`. The candidate `V` is the
//! negative part of the current affine iterate, projected onto the range of
//! the adjoint marginal map; any residual negativity is absorbed by shifting
//! `Y1_+ , Y1_-` by `eps I`, which costs `eps d`.

use nalgebra::DMatrix;

use super::{FeasibilityReport, JointObservable, Verdict};
use crate::error::Result;
use crate::operators::{ComplexMatrix, DichotomicObservable, PSD_TOL, C64};

/// Consecutive stalled iterations before a certificate is attempted.
pub const STALL_WINDOW: usize = 500;
/// An iteration is stalled when the gap shrinks by less than this fraction.
pub const STALL_REL: f64 = 1e-4;

const SIGNS: [f64; 4] = [1.0, -1.0, -1.0, 1.0];
const METHOD: &str = "dykstra-oracle";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            tol: 1e-9,
        }
    }
}

type Tuple = [DMatrix<C64>; 4];

struct Problem {
    base: Tuple,
    dim: usize,
}

impl Problem {
    fn project_affine(&self, h: &Tuple) -> Tuple {
        let mut x = DMatrix::<C64>::zeros(self.dim, self.dim);
        for i in 0..4 {
            x += (&h[i] - &self.base[i]) * C64::from(SIGNS[i] / 4.0);
        }
        let x = hermitian(&x);
        [0, 1, 2, 3].map(|i| &self.base[i] + &x * C64::from(SIGNS[i]))
    }

    /// Certificate value `(<x, V'> + eps d) / |V'|`; negative separates.
    fn certificate(&self, x: &Tuple) -> Option<f64> {
        let v: Vec<DMatrix<C64>> = x.iter().map(|xi| &project_psd(xi).0 - xi).collect();
        let mut along = DMatrix::<C64>::zeros(self.dim, self.dim);
        for i in 0..4 {
            along += &v[i] * C64::from(SIGNS[i] / 4.0);
        }
        let v: Vec<DMatrix<C64>> = (0..4).map(|i| hermitian(&(&v[i] - &along * C64::from(SIGNS[i])))).collect();
        let norm = v.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let eps = v
            .iter()
            .map(|m| -min_eig(m))
            .fold(0.0f64, f64::max);
        let pairing: f64 = (0..4).map(|i| (&x[i] * &v[i]).trace().re).sum();
        Some((pairing + eps * self.dim as f64) / norm)
    }
}

fn hermitian(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::from(0.5)
}

fn min_eig(m: &DMatrix<C64>) -> f64 {
    m.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Nearest PSD matrix and the smallest eigenvalue of the input.
fn project_psd(m: &DMatrix<C64>) -> (DMatrix<C64>, f64) {
    let eig = m.clone().symmetric_eigen();
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if lo >= 0.0 {
        return (m.clone(), lo);
    }
    let clipped = eig.eigenvalues.map(|l| C64::from(l.max(0.0)));
    let v = &eig.eigenvectors;
    (v * DMatrix::from_diagonal(&clipped) * v.adjoint(), lo)
}

fn distance(a: &Tuple, b: &Tuple) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_squared()).sum::<f64>().sqrt()
}

/// Decides whether the (already smeared) observables `first` and `second`
/// admit a joint observable.
///
/// Feasible once the affine iterate has all eigenvalues `>= -tol`; the witness
/// is that iterate. Infeasible only with a separating certificate, attempted
/// after the PSD-to-affine gap has stayed above `10 tol` without meaningful
/// progress for [`STALL_WINDOW`] iterations. Otherwise undetermined.
pub fn feasibility_oracle(
    first: &DichotomicObservable,
    second: &DichotomicObservable,
    max_iter: usize,
    tol: f64,
) -> Result<FeasibilityReport> {
    let d = first.dim();
    second.yes().matrix().ensure_dim(d)?;
    let a1 = first.yes().matrix().as_dmatrix().clone();
    let a2 = second.yes().matrix().as_dmatrix().clone();
    let id = DMatrix::<C64>::identity(d, d);
    let problem = Problem {
        base: [DMatrix::zeros(d, d), a1.clone(), a2.clone(), &id - &a1 - &a2],
        dim: d,
    };

    // Start from the symmetrized product, which is exact for commuting pairs.
    let start = hermitian(&(&a1 * &a2));
    let mut x = [0, 1, 2, 3].map(|i| &problem.base[i] + &start * C64::from(SIGNS[i]));
    let mut p: Tuple = [0, 1, 2, 3].map(|_| DMatrix::zeros(d, d));
    let mut q: Tuple = p.clone();

    let feasible_report = |x: &Tuple, iterations: usize| -> Result<Option<FeasibilityReport>> {
        let g = x.clone().map(|m| ComplexMatrix::from_dmatrix(m).expect("square"));
        let Ok(witness) = JointObservable::with_tolerance(g, tol.max(PSD_TOL)) else {
            return Ok(None);
        };
        let mut report = FeasibilityReport::with_witness(METHOD, witness, first, second)?;
        report.iterations = iterations;
        Ok(Some(report))
    };

    if x.iter().map(min_eig).fold(f64::INFINITY, f64::min) >= -tol {
        if let Some(r) = feasible_report(&x, 0)? {
            return Ok(r);
        }
    }

    let mut prev_gap = f64::INFINITY;
    let mut stalled = 0usize;
    let mut last_certificate = None;
    for iter in 1..=max_iter {
        let shifted: Tuple = [0, 1, 2, 3].map(|i| &x[i] + &p[i]);
        let y: Tuple = shifted.clone().map(|m| project_psd(&m).0);
        p = [0, 1, 2, 3].map(|i| &shifted[i] - &y[i]);
        let shifted: Tuple = [0, 1, 2, 3].map(|i| &y[i] + &q[i]);
        x = problem.project_affine(&shifted);
        q = [0, 1, 2, 3].map(|i| &shifted[i] - &x[i]);

        let lo = x.iter().map(min_eig).fold(f64::INFINITY, f64::min);
        if lo >= -tol {
            if let Some(r) = feasible_report(&x, iter)? {
                return Ok(r);
            }
        }

        let gap = distance(&x, &y);
        if gap > 10.0 * tol && prev_gap - gap < STALL_REL * gap {
            stalled += 1;
        } else {
            stalled = 0;
        }
        prev_gap = gap;
        if stalled >= STALL_WINDOW {
            stalled = 0;
            let cert = problem.certificate(&x);
            last_certificate = cert;
            if cert.is_some_and(|c| c < -tol) {
                return Ok(FeasibilityReport {
                    feasible: Verdict::Infeasible,
                    witness: None,
                    residuals: None,
                    iterations: iter,
                    method: METHOD,
                    certificate: cert,
                });
            }
        }
    }
    Ok(FeasibilityReport {
        feasible: Verdict::Undetermined,
        witness: None,
        residuals: None,
        iterations: max_iter,
        method: METHOD,
        certificate: last_certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::BlochVector;
    use crate::unsharp::{smear, UnsharpParam};

    fn smeared(v: [f64; 3], lam: f64) -> DichotomicObservable {
        smear(&BlochVector::new(v).unwrap().observable(), UnsharpParam::new(lam).unwrap())
    }

    #[test]
    fn commuting_sharp_pair_is_immediate() {
        let o1 = smeared([0.0, 0.0, 1.0], 1.0);
        let o2 = smeared([0.0, 0.0, -1.0], 1.0);
        let r = feasibility_oracle(&o1, &o2, 1000, 1e-9).unwrap();
        assert_eq!(r.feasible, Verdict::Feasible);
        assert!(r.iterations <= 1);
        let r = feasibility_oracle(&o1, &o1, 1000, 1e-9).unwrap();
        assert_eq!(r.feasible, Verdict::Feasible);
        assert!(r.iterations <= 1);
    }

    #[test]
    fn orthogonal_pair_around_boundary() {
        let ok = feasibility_oracle(&smeared([0.0, 0.0, 1.0], 0.70), &smeared([1.0, 0.0, 0.0], 0.70), 20_000, 1e-9)
            .unwrap();
        assert_eq!(ok.feasible, Verdict::Feasible);
        assert!(ok.residuals.unwrap().passes(1e-9));
        let bad = feasibility_oracle(&smeared([0.0, 0.0, 1.0], 0.72), &smeared([1.0, 0.0, 0.0], 0.72), 20_000, 1e-9)
            .unwrap();
        assert_eq!(bad.feasible, Verdict::Infeasible, "{bad:?}");
        assert!(bad.certificate.unwrap() < 0.0);
    }

    #[test]
    fn iteration_budget_exhaustion_is_undetermined() {
        let r = feasibility_oracle(&smeared([0.0, 0.0, 1.0], 0.72), &smeared([1.0, 0.0, 0.0], 0.72), 10, 1e-9).unwrap();
        assert_eq!(r.feasible, Verdict::Undetermined);
        assert_eq!(r.iterations, 10);
    }
}
