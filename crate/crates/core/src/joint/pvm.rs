use nalgebra::DMatrix;

use super::qubit::{qubit_joint_observable, BlochVector};
use super::{check_joint, FeasibilityReport, JointObservable, JointResiduals};
use crate::decompose::{two_projector_blocks, Block, BlockDecomposition};
use crate::error::{Error, Result};
use crate::operators::{ComplexMatrix, DichotomicObservable, Projector, C64};
use crate::unsharp::{smear, UnsharpParam};

const METHOD: &str = "pvm-blockwise";

/// Pvm report together with the decomposition and per-block residuals.
#[derive(Debug, Clone)]
pub struct BlockwiseReport {
    pub report: FeasibilityReport,
    pub decomposition: BlockDecomposition,
    /// Residuals of each block's joint observable against the smeared block
    /// restrictions, in block order. Empty when some block is infeasible.
    pub block_residuals: Vec<JointResiduals>,
}

/// Smeared yes/no effects of a sharp block restriction.
fn smear_block(p: &DMatrix<C64>, lam: UnsharpParam) -> (DMatrix<C64>, DMatrix<C64>) {
    let id = DMatrix::<C64>::identity(p.nrows(), p.ncols());
    let q = &id - p;
    let (keep, flip) = (lam.keep_weight(), lam.flip_weight());
    (p * C64::from(keep) + &q * C64::from(flip), p * C64::from(flip) + q * C64::from(keep))
}

/// Joint observable on one block, in the block basis.
///
/// | block                                  | construction                               |
/// |----------------------------------------|--------------------------------------------|
/// | restrictions equal (ranks (0,0), (2,2), aligned (1,1)) | `G_++ = P^l`, `G_-- = (I-P)^l`, rest 0 |
/// | commuting, restrictions differ (ranks (0,k), (k,0), (2,k), (k,2), orthogonal (1,1)) | `G_jk = P_j^l Q_k^l` |
/// | rank (1,1), overlap in (0,1)           | qubit witness with angle `cos(theta/2) = overlap` |
///
/// Only the last row can fail, and only when `lambda > 1/sqrt(2)`.
fn block_joint(block: &Block, lam: UnsharpParam) -> Option<[DMatrix<C64>; 4]> {
    let (bp, bq) = block.model();
    if block.is_nontrivial() {
        let c = block.overlap.expect("non-trivial block has an overlap");
        let s = (1.0 - c * c).max(0.0).sqrt();
        // (c, s) has Bloch vector (2cs, 0, c^2 - s^2) relative to |e1>.
        let m = BlochVector::new([0.0, 0.0, 1.0]).expect("unit");
        let n = BlochVector::normalized([2.0 * c * s, 0.0, c * c - s * s]).expect("non-zero");
        let report = qubit_joint_observable(&m, &n, lam);
        return report
            .witness
            .map(|w| w.matrices().map(|g| g.into_dmatrix()));
    }
    let (p_yes, p_no) = smear_block(&bp, lam);
    let (q_yes, q_no) = smear_block(&bq, lam);
    let same = (&bp - &bq).iter().all(|z| z.norm() < 1e-12);
    if same {
        let zero = DMatrix::<C64>::zeros(block.dim, block.dim);
        return Some([p_yes, zero.clone(), zero, p_no]);
    }
    let sym = |a: &DMatrix<C64>, b: &DMatrix<C64>| (a * b + b * a) * C64::from(0.5);
    Some([sym(&p_yes, &q_yes), sym(&p_yes, &q_no), sym(&p_no, &q_yes), sym(&p_no, &q_no)])
}

/// Blockwise construction with per-block diagnostics.
pub fn pvm_joint_blockwise(p1: &Projector, p2: &Projector, lam: UnsharpParam) -> Result<BlockwiseReport> {
    let d = p1.dim();
    p2.matrix().ensure_dim(d)?;
    let decomposition = two_projector_blocks(p1, p2)?;
    let u = decomposition.unitary.as_dmatrix();

    let mut total = [0, 1, 2, 3].map(|_| DMatrix::<C64>::zeros(d, d));
    let mut block_residuals = Vec::with_capacity(decomposition.blocks.len());
    for block in &decomposition.blocks {
        let Some(local) = block_joint(block, lam) else {
            return Ok(BlockwiseReport {
                report: FeasibilityReport::infeasible(METHOD),
                decomposition,
                block_residuals: Vec::new(),
            });
        };
        let (bp, bq) = block.model();
        let to_obs = |m: &DMatrix<C64>| {
            let (y, n) = smear_block(m, lam);
            DichotomicObservable::from_trusted(
                ComplexMatrix::from_dmatrix(y).expect("square"),
                ComplexMatrix::from_dmatrix(n).expect("square"),
            )
        };
        let local_m = local.clone().map(|g| ComplexMatrix::from_dmatrix(g).expect("square"));
        block_residuals.push(check_joint(&local_m, &to_obs(&bp), &to_obs(&bq))?);

        let ub = DMatrix::from_fn(d, block.dim, |i, k| u[(i, block.basis_columns[k])]);
        let ubd = ub.adjoint();
        for (acc, g) in total.iter_mut().zip(local.iter()) {
            *acc += &ub * g * &ubd;
        }
    }

    let g = total.map(|m| ComplexMatrix::from_dmatrix(m).expect("square").hermitian_part());
    let witness = JointObservable::new(g).map_err(|e| match e {
        Error::NotComplementary { residual } => Error::SelfCheck {
            check: "assembled joint observable is normalized",
            residual,
        },
        other => other,
    })?;
    let first = smear(&p1.to_observable(), lam);
    let second = smear(&p2.to_observable(), lam);
    let report = FeasibilityReport::with_witness(METHOD, witness, &first, &second)?;
    Ok(BlockwiseReport {
        report,
        decomposition,
        block_residuals,
    })
}

/// Joint observable for the smeared sharp observables `{P1, I - P1}` and
/// `{P2, I - P2}`, assembled from the two-projector block decomposition.
/// Feasible iff every block is.
pub fn pvm_joint_observable(p1: &Projector, p2: &Projector, lam: UnsharpParam) -> Result<FeasibilityReport> {
    pvm_joint_blockwise(p1, p2, lam).map(|b| b.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::Verdict;
    use crate::operators::pauli_combination;
    use std::f64::consts::FRAC_1_SQRT_2;

    /// `|0><0|` and `|+><+|` on the first two levels of `C^d`.
    fn embedded_pair(d: usize) -> (Projector, Projector) {
        let mut p = vec![0.0; d];
        p[0] = 1.0;
        let p1 = Projector::new(ComplexMatrix::diag(&p)).unwrap();
        let plus = pauli_combination(0.5, [0.5, 0.0, 0.0]);
        let p2 = ComplexMatrix::from_fn(d, |i, j| if i < 2 && j < 2 { plus.get(i, j) } else { C64::new(0.0, 0.0) });
        (p1, Projector::new(p2).unwrap())
    }

    #[test]
    fn commuting_projectors_sharp() {
        let p1 = Projector::new(ComplexMatrix::diag(&[1.0, 1.0, 0.0, 0.0])).unwrap();
        let p2 = Projector::new(ComplexMatrix::diag(&[1.0, 0.0, 1.0, 0.0])).unwrap();
        let r = pvm_joint_observable(&p1, &p2, UnsharpParam::SHARP).unwrap();
        assert_eq!(r.feasible, Verdict::Feasible);
        assert!(r.residuals.unwrap().passes(1e-12));
        let w = r.witness.unwrap();
        assert!(w.effect(1, 1).matrix().max_abs_diff(&ComplexMatrix::diag(&[1.0, 0.0, 0.0, 0.0])) < 1e-12);
    }

    #[test]
    fn embedded_pair_threshold() {
        for d in 2..=8 {
            let (p1, p2) = embedded_pair(d);
            let ok = pvm_joint_observable(&p1, &p2, UnsharpParam::TSIRELSON).unwrap();
            assert_eq!(ok.feasible, Verdict::Feasible, "d = {d}");
            assert!(ok.residuals.unwrap().passes(1e-9));
            let bad = pvm_joint_observable(&p1, &p2, UnsharpParam::new(FRAC_1_SQRT_2 + 1e-3).unwrap()).unwrap();
            assert_eq!(bad.feasible, Verdict::Infeasible, "d = {d}");
        }
    }

    #[test]
    fn identical_projectors_use_diagonal_witness() {
        let (p1, _) = embedded_pair(3);
        let lam = UnsharpParam::new(0.8).unwrap();
        let r = pvm_joint_observable(&p1, &p1, lam).unwrap();
        let w = r.witness.unwrap();
        assert!(w.effect(1, -1).matrix().max_abs() < 1e-15);
        assert!(w.effect(-1, 1).matrix().max_abs() < 1e-15);
        let s = smear(&p1.to_observable(), lam);
        assert!(w.effect(1, 1).matrix().max_abs_diff(s.yes().matrix()) < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let (p1, _) = embedded_pair(3);
        let (p2, _) = embedded_pair(4);
        assert!(matches!(
            pvm_joint_observable(&p1, &p2, UnsharpParam::SHARP),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
