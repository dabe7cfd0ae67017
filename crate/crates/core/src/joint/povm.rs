use std::f64::consts::FRAC_1_SQRT_2;

use super::pvm::pvm_joint_observable;
use super::{FeasibilityReport, JointObservable, Verdict};
use crate::decompose::{compress_sector, neumark_dilate};
use crate::error::{Error, Result};
use crate::operators::DichotomicObservable;
use crate::unsharp::{smear, UnsharpParam};

const METHOD: &str = "povm-dilation";

/// Joint observable for two smeared two-outcome POVMs on `C^d`.
///
/// Both observables are dilated to projectors on `C^d (x) C^2` with the same
/// ancilla, the projector pair is handled blockwise, and each `G_jk` is
/// compressed with `<0|.|0>` on the ancilla.
pub fn povm_joint_observable(
    o1: &DichotomicObservable,
    o2: &DichotomicObservable,
    lam: UnsharpParam,
) -> Result<FeasibilityReport> {
    o2.yes().matrix().ensure_dim(o1.dim())?;
    if lam.value() > FRAC_1_SQRT_2 {
        return Err(Error::LambdaTooLarge(lam.value()));
    }
    let d1 = neumark_dilate(o1);
    let d2 = neumark_dilate(o2);
    let dilated = pvm_joint_observable(&d1.projector, &d2.projector, lam)?;
    let Some(big) = dilated.witness.filter(|_| dilated.feasible == Verdict::Feasible) else {
        return Err(Error::SelfCheck {
            check: "dilated projector pair is jointly measurable below 1/sqrt(2)",
            residual: f64::NAN,
        });
    };
    let g = big.matrices().map(|m| compress_sector(&m, 0).expect("dilated dimension is even"));
    let witness = JointObservable::new(g)?;
    FeasibilityReport::with_witness(METHOD, witness, &smear(o1, lam), &smear(o2, lam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{pauli_combination, ComplexMatrix, Effect};

    fn scaled_qubit(v: [f64; 3], s: f64) -> DichotomicObservable {
        let e = pauli_combination(0.5, v.map(|x| x / 2.0)).scale(s);
        DichotomicObservable::from_yes(Effect::new(e).unwrap())
    }

    #[test]
    fn identical_observables_diagonal_witness() {
        let o = scaled_qubit([0.0, 0.6, 0.8], 0.9);
        let lam = UnsharpParam::new(0.5).unwrap();
        let r = povm_joint_observable(&o, &o, lam).unwrap();
        assert_eq!(r.feasible, Verdict::Feasible);
        let w = r.witness.unwrap();
        let s = smear(&o, lam);
        assert!(w.effect(1, 1).matrix().max_abs_diff(s.yes().matrix()) < 1e-12);
        assert!(w.effect(-1, -1).matrix().max_abs_diff(s.no().matrix()) < 1e-12);
        assert!(w.effect(1, -1).matrix().max_abs() < 1e-12);
        assert!(w.effect(-1, 1).matrix().max_abs() < 1e-12);
    }

    #[test]
    fn scaled_qubit_effects_at_boundary() {
        let a1 = scaled_qubit([0.0, 0.0, 1.0], 2.0 / 3.0);
        let a2 = scaled_qubit([1.0, 0.0, 0.0], 2.0 / 3.0);
        let r = povm_joint_observable(&a1, &a2, UnsharpParam::TSIRELSON).unwrap();
        assert_eq!(r.feasible, Verdict::Feasible);
        assert!(r.residuals.unwrap().passes(1e-9));
    }

    #[test]
    fn rejects_large_lambda() {
        let o = scaled_qubit([0.0, 0.0, 1.0], 1.0);
        assert!(matches!(
            povm_joint_observable(&o, &o, UnsharpParam::new(0.75).unwrap()),
            Err(Error::LambdaTooLarge(_))
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let o = scaled_qubit([0.0, 0.0, 1.0], 1.0);
        let o3 = DichotomicObservable::from_yes(Effect::new(ComplexMatrix::identity(3).scale(0.5)).unwrap());
        assert!(matches!(
            povm_joint_observable(&o, &o3, UnsharpParam::new(0.5).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
