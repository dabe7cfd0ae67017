//! Joint observables for pairs of unsharp dichotomic observables.
//!
//! Three constructive routes share one report type: the closed-form qubit
//! witness ([`qubit_joint_observable`]), blockwise assembly for projector
//! pairs ([`pvm_joint_observable`]), and the dilate-assemble-compress
//! pipeline for general two-outcome POVMs ([`povm_joint_observable`]).
//! [`feasibility_oracle`] decides the same question numerically without
//! using any of them, and [`lambda_opt_search`] bisects the threshold.

mod oracle;
mod povm;
mod pvm;
mod qubit;
mod search;

pub use oracle::{feasibility_oracle, OracleSettings};
pub use povm::povm_joint_observable;
pub use pvm::{pvm_joint_blockwise, pvm_joint_observable, BlockwiseReport};
pub use qubit::{qubit_criterion, qubit_joint_observable, BlochVector, CRITERION_SLACK};
pub use search::{fibonacci_sphere, AttainingPair, lambda_opt_search, LambdaOptReport, PairSource, SearchSettings};

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::operators::{eigenvalues, validate_effect, ComplexMatrix, DichotomicObservable, Effect, Projector, PSD_TOL};
use crate::unsharp::{smear, UnsharpParam};

/// Normalization tolerance on `sum G_jk = I`.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Outcome labels in storage order.
pub const OUTCOMES: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Four-outcome POVM `{G_++, G_+-, G_-+, G_--}`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointObservable {
    effects: [Effect; 4],
}

impl JointObservable {
    pub fn new(g: [ComplexMatrix; 4]) -> Result<Self> {
        Self::with_tolerance(g, PSD_TOL)
    }

    /// Validates with spectrum slack `psd_tol` on each effect.
    pub fn with_tolerance(g: [ComplexMatrix; 4], psd_tol: f64) -> Result<Self> {
        let d = g[0].dim();
        for m in &g[1..] {
            m.ensure_dim(d)?;
        }
        let sum = g.iter().skip(1).fold(g[0].clone(), |acc, m| &acc + m);
        let residual = sum.max_abs_diff(&ComplexMatrix::identity(d));
        if residual > NORMALIZATION_TOL {
            return Err(Error::NotComplementary { residual });
        }
        let [a, b, c, e] = g;
        Ok(Self {
            effects: [
                validate_effect(a, psd_tol)?,
                validate_effect(b, psd_tol)?,
                validate_effect(c, psd_tol)?,
                validate_effect(e, psd_tol)?,
            ],
        })
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    /// Effect for outcome `(j, k)` with `j, k` in `{+1, -1}`.
    pub fn effect(&self, j: i8, k: i8) -> &Effect {
        let idx = OUTCOMES.iter().position(|&o| o == (j, k)).expect("outcome labels are +1 or -1");
        &self.effects[idx]
    }

    pub fn effects(&self) -> &[Effect; 4] {
        &self.effects
    }

    pub fn matrices(&self) -> [ComplexMatrix; 4] {
        self.effects.clone().map(Effect::into_matrix)
    }

    /// First and second marginal observables.
    pub fn marginals(&self) -> (DichotomicObservable, DichotomicObservable) {
        let g = self.matrices();
        let first = DichotomicObservable::from_trusted(&g[0] + &g[1], &g[2] + &g[3]);
        let second = DichotomicObservable::from_trusted(&g[0] + &g[2], &g[1] + &g[3]);
        (first, second)
    }

    pub fn check(&self, first: &DichotomicObservable, second: &DichotomicObservable) -> Result<JointResiduals> {
        check_joint(&self.matrices(), first, second)
    }
}

impl Serialize for JointObservable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("JointObservable", 5)?;
        st.serialize_field("dim", &self.dim())?;
        st.serialize_field("g_pp", self.effects[0].matrix())?;
        st.serialize_field("g_pm", self.effects[1].matrix())?;
        st.serialize_field("g_mp", self.effects[2].matrix())?;
        st.serialize_field("g_mm", self.effects[3].matrix())?;
        st.end()
    }
}

/// Max-abs residuals of normalization and the two marginal conditions, and
/// the smallest eigenvalue over the four effects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointResiduals {
    pub normalization: f64,
    pub first_marginal: f64,
    pub second_marginal: f64,
    pub min_eigenvalue: f64,
}

impl JointResiduals {
    pub fn marginal(&self) -> f64 {
        self.first_marginal.max(self.second_marginal)
    }

    /// Largest of the three affine residuals.
    pub fn max_affine(&self) -> f64 {
        self.normalization.max(self.marginal())
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_affine() <= tol && self.min_eigenvalue >= -tol
    }
}

/// Residuals of `g` as a joint observable for `first` and `second`.
///
/// Accepts arbitrary matrices so corrupted candidates can be scored; the
/// eigenvalue check uses the Hermitian part.
pub fn check_joint(
    g: &[ComplexMatrix; 4],
    first: &DichotomicObservable,
    second: &DichotomicObservable,
) -> Result<JointResiduals> {
    let d = first.dim();
    second.yes().matrix().ensure_dim(d)?;
    for m in g {
        m.ensure_dim(d)?;
    }
    let id = ComplexMatrix::identity(d);
    let sum = &(&g[0] + &g[1]) + &(&g[2] + &g[3]);
    let normalization = sum.max_abs_diff(&id);
    let first_marginal = (&g[0] + &g[1])
        .max_abs_diff(first.yes().matrix())
        .max((&g[2] + &g[3]).max_abs_diff(first.no().matrix()));
    let second_marginal = (&g[0] + &g[2])
        .max_abs_diff(second.yes().matrix())
        .max((&g[1] + &g[3]).max_abs_diff(second.no().matrix()));
    let min_eigenvalue = g.iter().map(|m| eigenvalues(m)[0]).fold(f64::INFINITY, f64::min);
    Ok(JointResiduals {
        normalization,
        first_marginal,
        second_marginal,
        min_eigenvalue,
    })
}

/// Three-valued decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "yes")]
    Feasible,
    #[serde(rename = "no")]
    Infeasible,
    #[serde(rename = "undetermined")]
    Undetermined,
}

impl Verdict {
    pub fn is_feasible(self) -> bool {
        self == Verdict::Feasible
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: Verdict,
    pub witness: Option<JointObservable>,
    pub residuals: Option<JointResiduals>,
    pub iterations: usize,
    /// Which route produced the verdict.
    pub method: &'static str,
    /// Normalized value of the infeasibility certificate (oracle only; negative
    /// when the certificate separates).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<f64>,
}

impl FeasibilityReport {
    pub(crate) fn infeasible(method: &'static str) -> Self {
        Self {
            feasible: Verdict::Infeasible,
            witness: None,
            residuals: None,
            iterations: 0,
            method,
            certificate: None,
        }
    }

    pub(crate) fn with_witness(
        method: &'static str,
        witness: JointObservable,
        first: &DichotomicObservable,
        second: &DichotomicObservable,
    ) -> Result<Self> {
        let residuals = witness.check(first, second)?;
        Ok(Self {
            feasible: Verdict::Feasible,
            witness: Some(witness),
            residuals: Some(residuals),
            iterations: 0,
            method,
            certificate: None,
        })
    }
}

/// How [`jointly_measurable`] decides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Route {
    /// Blockwise for projector pairs, dilation up to `1/sqrt(2)`, otherwise
    /// the oracle with default settings.
    Auto,
    Oracle(OracleSettings),
}

/// Joint measurability of the smeared pair `(o1^lam, o2^lam)`.
pub fn jointly_measurable(
    o1: &DichotomicObservable,
    o2: &DichotomicObservable,
    lam: UnsharpParam,
    route: Route,
) -> Result<FeasibilityReport> {
    o2.yes().matrix().ensure_dim(o1.dim())?;
    let oracle = |s: OracleSettings| feasibility_oracle(&smear(o1, lam), &smear(o2, lam), s.max_iter, s.tol);
    match route {
        Route::Oracle(s) => oracle(s),
        Route::Auto => {
            if let (Some(p), Some(q)) = (Projector::from_observable(o1), Projector::from_observable(o2)) {
                pvm_joint_observable(&p, &q, lam)
            } else if lam.value() <= FRAC_1_SQRT_2 {
                povm_joint_observable(o1, o2, lam)
            } else {
                oracle(OracleSettings::default())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{pauli_combination, C64};
    use crate::unsharp::{smear, UnsharpParam};

    fn sharp(v: [f64; 3]) -> DichotomicObservable {
        DichotomicObservable::from_yes(Effect::new(pauli_combination(0.5, v.map(|x| x / 2.0))).unwrap())
    }

    #[test]
    fn corrupted_witness_reports_its_error() {
        let lam = UnsharpParam::new(0.6).unwrap();
        let (m, n) = (BlochVector::new([0.0, 0.0, 1.0]).unwrap(), BlochVector::new([1.0, 0.0, 0.0]).unwrap());
        let report = qubit_joint_observable(&m, &n, lam);
        let mut g = report.witness.unwrap().matrices();
        let o1 = smear(&sharp([0.0, 0.0, 1.0]), lam);
        let o2 = smear(&sharp([1.0, 0.0, 0.0]), lam);
        assert!(check_joint(&g, &o1, &o2).unwrap().max_affine() < 1e-15);
        let bumped = g[1].get(0, 1) + C64::new(1e-3, 0.0);
        g[1] = ComplexMatrix::from_fn(2, |i, j| if (i, j) == (0, 1) { bumped } else { g[1].get(i, j) });
        let r = check_joint(&g, &o1, &o2).unwrap();
        assert!((r.normalization - 1e-3).abs() < 1e-12);
        assert!((r.first_marginal - 1e-3).abs() < 1e-12);
        assert!((r.second_marginal - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn identity_split_near_trivial_smearing() {
        let lam = UnsharpParam::new(0.01).unwrap();
        let quarter = ComplexMatrix::identity(2).scale(0.25);
        let g = [quarter.clone(), quarter.clone(), quarter.clone(), quarter];
        let o1 = smear(&sharp([0.0, 0.0, 1.0]), lam);
        let o2 = smear(&sharp([0.6, 0.0, 0.8]), lam);
        let r = check_joint(&g, &o1, &o2).unwrap();
        assert!(r.normalization < 1e-15);
        assert!(r.marginal() <= 0.01);
        assert!((r.marginal() - 0.005).abs() < 1e-15);
    }

    #[test]
    fn check_joint_dimension_mismatch() {
        let g = [0, 1, 2, 3].map(|_| ComplexMatrix::identity(3).scale(0.25));
        let o = sharp([0.0, 0.0, 1.0]);
        assert!(matches!(check_joint(&g, &o, &o), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn joint_observable_validation() {
        let q = ComplexMatrix::identity(2).scale(0.25);
        assert!(JointObservable::new([q.clone(), q.clone(), q.clone(), q.clone()]).is_ok());
        let bad = ComplexMatrix::identity(2).scale(0.3);
        assert!(matches!(
            JointObservable::new([q.clone(), q.clone(), q, bad]),
            Err(Error::NotComplementary { .. })
        ));
    }

    #[test]
    fn verdict_wire_names() {
        assert_eq!(serde_json::to_string(&Verdict::Feasible).unwrap(), "\"yes\"");
        assert_eq!(serde_json::to_string(&Verdict::Infeasible).unwrap(), "\"no\"");
        assert_eq!(serde_json::to_string(&Verdict::Undetermined).unwrap(), "\"undetermined\"");
    }
}
