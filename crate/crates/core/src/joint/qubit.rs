use serde::Serialize;

use super::{FeasibilityReport, JointObservable};
use crate::error::{Error, Result};
use crate::operators::{pauli_combination, DichotomicObservable, Projector};
use crate::unsharp::{smear, UnsharpParam};

/// Rounding allowance on the qubit criterion so that the boundary case
/// `lambda = 1/sqrt(2)` with orthogonal directions is accepted.
pub const CRITERION_SLACK: f64 = 1e-12;

const UNIT_TOL: f64 = 1e-12;

/// Unit vector parametrizing the rank-one qubit projector `(I + v.sigma)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BlochVector([f64; 3]);

impl BlochVector {
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = norm(v);
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidBlochVector(n));
        }
        Ok(Self(v))
    }

    /// Rescales a non-zero vector to unit length.
    pub fn normalized(v: [f64; 3]) -> Result<Self> {
        let n = norm(v);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidBlochVector(n));
        }
        Ok(Self(v.map(|x| x / n)))
    }

    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()])
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn projector(&self) -> Projector {
        let half = self.0.map(|x| x / 2.0);
        Projector::with_tolerance(pauli_combination(0.5, half), 1e-10).expect("unit Bloch vector gives a projector")
    }

    pub fn observable(&self) -> DichotomicObservable {
        self.projector().to_observable()
    }
}

fn norm(v: [f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn add(a: [f64; 3], b: [f64; 3], sb: f64) -> [f64; 3] {
    [a[0] + sb * b[0], a[1] + sb * b[1], a[2] + sb * b[2]]
}

/// `lambda (|m + n| + |m - n|)`; the smeared pair is jointly measurable iff
/// this is at most 2.
pub fn qubit_criterion(m: &BlochVector, n: &BlochVector, lam: UnsharpParam) -> f64 {
    let (m, n) = (m.0, n.0);
    lam.value() * (norm(add(m, n, 1.0)) + norm(add(m, n, -1.0)))
}

/// Decides joint measurability of the smeared qubit projectors along `m` and
/// `n` and, when it holds, returns the witness
/// `G_jk = [(1 + jk t) I + lambda (j m + k n).sigma] / 4`
/// with `t = lambda (|m + n| - |m - n|) / 2`.
pub fn qubit_joint_observable(m: &BlochVector, n: &BlochVector, lam: UnsharpParam) -> FeasibilityReport {
    const METHOD: &str = "qubit-closed-form";
    if qubit_criterion(m, n, lam) > 2.0 + CRITERION_SLACK {
        return FeasibilityReport::infeasible(METHOD);
    }
    let l = lam.value();
    let t = l * (norm(add(m.0, n.0, 1.0)) - norm(add(m.0, n.0, -1.0))) / 2.0;
    let g = super::OUTCOMES.map(|(j, k)| {
        let (j, k) = (f64::from(j), f64::from(k));
        let v = [0, 1, 2].map(|i| l * (j * m.0[i] + k * n.0[i]) / 4.0);
        pauli_combination((1.0 + j * k * t) / 4.0, v)
    });
    let witness = JointObservable::new(g).expect("qubit witness is a POVM inside the criterion");
    let first = smear(&m.observable(), lam);
    let second = smear(&n.observable(), lam);
    FeasibilityReport::with_witness(METHOD, witness, &first, &second).expect("dimensions agree")
}
