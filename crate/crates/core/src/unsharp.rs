//! Unsharp smearing of dichotomic observables and mean values.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{DensityMatrix, DichotomicObservable};

/// Agreement required between the two evaluations in [`smeared_mean`].
pub const SCALING_TOL: f64 = 1e-12;

/// Unsharpness `lambda` in the half-open interval `(0, 1]`; `1` is sharp.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct UnsharpParam(f64);

impl UnsharpParam {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidLambda(lambda));
        }
        Ok(Self(lambda))
    }

    pub const SHARP: UnsharpParam = UnsharpParam(1.0);
    pub const TSIRELSON: UnsharpParam = UnsharpParam(std::f64::consts::FRAC_1_SQRT_2);

    pub fn value(self) -> f64 {
        self.0
    }

    /// Weight kept on the original outcome, `(1 + lambda)/2`.
    pub fn keep_weight(self) -> f64 {
        (1.0 + self.0) / 2.0
    }

    /// Weight flipped to the other outcome, `(1 - lambda)/2`.
    pub fn flip_weight(self) -> f64 {
        (1.0 - self.0) / 2.0
    }
}

/// Convex mixing of the outcome rules:
/// `yes' = (1+l)/2 E_yes + (1-l)/2 E_no`, `no' = (1-l)/2 E_yes + (1+l)/2 E_no`.
pub fn smear(obs: &DichotomicObservable, lam: UnsharpParam) -> DichotomicObservable {
    let (keep, flip) = (lam.keep_weight(), lam.flip_weight());
    let yes = obs.yes().matrix();
    let no = obs.no().matrix();
    let yes_l = &yes.scale(keep) + &no.scale(flip);
    let no_l = &yes.scale(flip) + &no.scale(keep);
    // Convex combination of effects stays an effect.
    DichotomicObservable::from_trusted(yes_l, no_l)
}

/// `<A>_rho = p_yes - p_no`.
pub fn mean_value(obs: &DichotomicObservable, state: &DensityMatrix) -> Result<f64> {
    obs.yes().matrix().ensure_dim(state.dim())?;
    let p_yes = state.expectation(obs.yes().matrix())?;
    let p_no = state.expectation(obs.no().matrix())?;
    Ok(p_yes - p_no)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmearedMean {
    /// Mean of the smeared observable.
    pub direct: f64,
    /// `lambda` times the sharp mean.
    pub scaled: f64,
    pub residual: f64,
}

/// Evaluates the smeared mean both directly and as `lambda * <A>`, failing if
/// they disagree by more than [`SCALING_TOL`].
pub fn smeared_mean(obs: &DichotomicObservable, lam: UnsharpParam, state: &DensityMatrix) -> Result<SmearedMean> {
    let direct = mean_value(&smear(obs, lam), state)?;
    let scaled = lam.value() * mean_value(obs, state)?;
    let residual = (direct - scaled).abs();
    if residual > SCALING_TOL {
        return Err(Error::SelfCheck {
            check: "smeared mean equals lambda times mean",
            residual,
        });
    }
    Ok(SmearedMean {
        direct,
        scaled,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{pauli_combination, ComplexMatrix, Effect, Projector};

    fn ket0() -> DensityMatrix {
        DensityMatrix::new(ComplexMatrix::diag(&[1.0, 0.0])).unwrap()
    }

    fn plus_projector() -> Projector {
        Projector::new(pauli_combination(0.5, [0.5, 0.0, 0.0])).unwrap()
    }

    #[test]
    fn lambda_domain() {
        assert!(UnsharpParam::new(0.0).is_err());
        assert!(UnsharpParam::new(-0.1).is_err());
        assert!(UnsharpParam::new(1.0 + 1e-15).is_err());
        assert!(UnsharpParam::new(f64::NAN).is_err());
        assert!(UnsharpParam::new(1.0).is_ok());
        assert!(UnsharpParam::new(1e-300).is_ok());
    }

    #[test]
    fn sharp_smearing_is_identity() {
        let obs = DichotomicObservable::from_yes(Effect::new(pauli_combination(0.4, [0.1, -0.2, 0.05])).unwrap());
        assert_eq!(smear(&obs, UnsharpParam::SHARP), obs);
    }

    #[test]
    fn smeared_ket0_projector() {
        let p = Projector::new(ComplexMatrix::diag(&[1.0, 0.0])).unwrap().to_observable();
        let s = smear(&p, UnsharpParam::TSIRELSON);
        let expected = ComplexMatrix::diag(&[(2.0 + 2f64.sqrt()) / 4.0, (2.0 - 2f64.sqrt()) / 4.0]);
        assert!(s.yes().matrix().max_abs_diff(&expected) < 1e-15);
        assert!(Effect::new(s.yes().matrix().clone()).is_ok());
    }

    #[test]
    fn eigenvalue_map_on_diagonal_effects() {
        let a = [0.0, 0.13, 0.5, 0.77, 1.0];
        let obs = DichotomicObservable::from_yes(Effect::new(ComplexMatrix::diag(&a)).unwrap());
        for &l in &[0.1, 0.5, 0.9] {
            let s = smear(&obs, UnsharpParam::new(l).unwrap());
            for (k, &ak) in a.iter().enumerate() {
                let expected = (1.0 - l) / 2.0 + l * ak;
                assert!((s.yes().matrix().get(k, k).re - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mean_value_examples() {
        let p0 = Projector::new(ComplexMatrix::diag(&[1.0, 0.0])).unwrap().to_observable();
        assert_eq!(mean_value(&p0, &ket0()).unwrap(), 1.0);
        let mixed = DensityMatrix::maximally_mixed(2);
        let obs = DichotomicObservable::from_yes(Effect::new(pauli_combination(0.5, [0.0, 0.3, 0.4])).unwrap());
        assert!(mean_value(&obs, &mixed).unwrap().abs() < 1e-15);
        assert!(mean_value(&plus_projector().to_observable(), &ket0()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn mean_value_dimension_mismatch() {
        let p0 = Projector::new(ComplexMatrix::diag(&[1.0, 0.0])).unwrap().to_observable();
        let rho = DensityMatrix::maximally_mixed(3);
        assert!(matches!(mean_value(&p0, &rho), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(
            smeared_mean(&p0, UnsharpParam::SHARP, &rho),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn smeared_mean_scales() {
        let p0 = Projector::new(ComplexMatrix::diag(&[1.0, 0.0])).unwrap().to_observable();
        let r = smeared_mean(&p0, UnsharpParam::new(0.5).unwrap(), &ket0()).unwrap();
        assert!((r.direct - 0.5).abs() < 1e-15);
        assert!((r.scaled - 0.5).abs() < 1e-15);
        let r1 = smeared_mean(&p0, UnsharpParam::SHARP, &ket0()).unwrap();
        assert_eq!(r1.direct, mean_value(&p0, &ket0()).unwrap());
    }
}
