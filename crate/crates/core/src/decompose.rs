//! Structural decompositions: simultaneous block diagonalization of two
//! projectors into invariant subspaces of dimension one or two, and the
//! Neumark dilation of a two-outcome POVM together with its compression.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{eigh, ComplexMatrix, DichotomicObservable, Effect, Projector, C64};

/// Eigenvalues of the compressed overlap operator within this distance of 0
/// or 1 are treated as exact intersections.
pub const CLUSTER_TOL: f64 = 1e-10;

/// Tag describing the tensor layout used by [`neumark_dilate`] and [`compress`].
pub const ANCILLA_CONVENTION: &str = "system(x)ancilla;ancilla-last;reference=|0>";

/// One invariant subspace of the decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub dim: usize,
    /// Columns of the decomposing unitary spanning this block.
    pub basis_columns: Vec<usize>,
    pub rank_p: usize,
    pub rank_q: usize,
    /// `|<chi_p|chi_q>|` for a two-dimensional rank-(1,1) block; for a
    /// one-dimensional block, `1` when both projectors agree on it and `0`
    /// otherwise.
    pub overlap: Option<f64>,
}

impl Block {
    fn one(column: usize, rank_p: usize, rank_q: usize) -> Self {
        Self {
            dim: 1,
            basis_columns: vec![column],
            rank_p,
            rank_q,
            overlap: Some(if rank_p == rank_q { 1.0 } else { 0.0 }),
        }
    }

    /// Whether the two projectors fail to commute on this block.
    pub fn is_nontrivial(&self) -> bool {
        self.dim == 2 && self.rank_p == 1 && self.rank_q == 1 && self.overlap.is_some_and(|o| o > 0.0 && o < 1.0)
    }

    /// Restrictions of the two projectors in the block basis.
    ///
    /// A two-dimensional rank-(1,1) block is in the canonical form
    /// `P = |e1><e1|`, `Q = |y><y|` with `y = (overlap, sqrt(1 - overlap^2))`.
    pub fn model(&self) -> (DMatrix<C64>, DMatrix<C64>) {
        let r = |x: f64| C64::new(x, 0.0);
        match (self.dim, self.rank_p, self.rank_q) {
            (1, rp, rq) => (DMatrix::from_element(1, 1, r(rp as f64)), DMatrix::from_element(1, 1, r(rq as f64))),
            (2, 1, 1) => {
                let c = self.overlap.unwrap_or(1.0);
                let s = (1.0 - c * c).max(0.0).sqrt();
                let p = DMatrix::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), r(0.0)]);
                let q = DMatrix::from_row_slice(2, 2, &[r(c * c), r(c * s), r(c * s), r(s * s)]);
                (p, q)
            }
            (2, rp, rq) => {
                let f = |k: usize| DMatrix::<C64>::identity(2, 2).map(|z| z * (k as f64 / 2.0));
                (f(rp), f(rq))
            }
            _ => unreachable!("blocks have dimension one or two"),
        }
    }
}

/// Adapted orthonormal basis (columns of `unitary`) and the blocks it induces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockDecomposition {
    pub unitary: ComplexMatrix,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionResiduals {
    /// `max |U†U - I|`.
    pub unitarity: f64,
    /// Largest entry of `U† P U` or `U† Q U` outside the declared blocks.
    pub off_block: f64,
    /// `max |U B U† - P|` over both projectors, with `B` the block model.
    pub reconstruction: f64,
}

impl BlockDecomposition {
    pub fn dim(&self) -> usize {
        self.unitary.dim()
    }

    /// Checks the decomposition against the projectors it came from.
    pub fn residuals(&self, p: &Projector, q: &Projector) -> DecompositionResiduals {
        let u = self.unitary.as_dmatrix();
        let ud = u.adjoint();
        let d = self.dim();
        let unitarity = (&ud * u - DMatrix::<C64>::identity(d, d)).iter().fold(0.0f64, |m, z| m.max(z.norm()));

        let mut owner = vec![usize::MAX; d];
        for (b, block) in self.blocks.iter().enumerate() {
            for &c in &block.basis_columns {
                owner[c] = b;
            }
        }

        let mut off_block = 0.0f64;
        let mut reconstruction = 0.0f64;
        let mut model_p = DMatrix::<C64>::zeros(d, d);
        let mut model_q = DMatrix::<C64>::zeros(d, d);
        for block in &self.blocks {
            let (bp, bq) = block.model();
            for (a, &ca) in block.basis_columns.iter().enumerate() {
                for (b, &cb) in block.basis_columns.iter().enumerate() {
                    model_p[(ca, cb)] = bp[(a, b)];
                    model_q[(ca, cb)] = bq[(a, b)];
                }
            }
        }
        for (proj, model) in [(p, &model_p), (q, &model_q)] {
            let conj = &ud * proj.matrix().as_dmatrix() * u;
            for i in 0..d {
                for j in 0..d {
                    if owner[i] != owner[j] {
                        off_block = off_block.max(conj[(i, j)].norm());
                    }
                }
            }
            let back = u * model * &ud;
            reconstruction = reconstruction.max(
                (back - proj.matrix().as_dmatrix())
                    .iter()
                    .fold(0.0f64, |m, z| m.max(z.norm())),
            );
        }
        DecompositionResiduals {
            unitarity,
            off_block,
            reconstruction,
        }
    }
}

fn column(m: &DMatrix<C64>, k: usize) -> Vec<C64> {
    m.column(k).iter().copied().collect()
}

fn normalize(v: &mut [C64]) -> f64 {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= n;
    }
    n
}

/// Orthonormal basis of the eigenspace of a projector-like Hermitian matrix
/// with eigenvalues near 1.
fn range_basis(m: &ComplexMatrix) -> DMatrix<C64> {
    let (vals, vecs) = eigh(m);
    let cols: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 0.5).collect();
    vecs.columns(&cols)
}

/// Simultaneous block diagonalization of two projectors.
///
/// The overlap operator `V_P† Q V_P` on the range of `P` is diagonalized.
/// An eigenvector `x` with eigenvalue `c` in `(0, 1)` spans a two-dimensional
/// block together with the normalized `(I - P) Q x`, and has overlap
/// `sqrt(c)`. Eigenvalues `1` and `0` give the intersections of `ran P` with
/// `ran Q` and `ker Q`. What remains of `ker P` is invariant under `Q` and
/// splits into its intersections with `ran Q` and `ker Q`.
///
/// Blocks are ordered: non-trivial blocks by descending overlap, then
/// `ran P ∩ ran Q`, `ran P ∩ ker Q`, `ker P ∩ ran Q`, `ker P ∩ ker Q`.
pub fn two_projector_blocks(p: &Projector, q: &Projector) -> Result<BlockDecomposition> {
    let d = p.dim();
    q.matrix().ensure_dim(d)?;
    let qm = q.matrix().as_dmatrix();
    let pm = p.matrix().as_dmatrix();
    let id = DMatrix::<C64>::identity(d, d);

    let vp = range_basis(p.matrix());
    let overlap_op = ComplexMatrix::from_dmatrix(vp.adjoint() * qm * &vp);

    let mut generic: Vec<(f64, Vec<C64>, Vec<C64>)> = Vec::new();
    let mut aligned: Vec<Vec<C64>> = Vec::new();
    let mut p_only: Vec<Vec<C64>> = Vec::new();
    if let Ok(op) = overlap_op {
        let (cs, ws) = eigh(&op);
        for (k, &c) in cs.iter().enumerate() {
            let x = &vp * ws.as_dmatrix().column(k);
            let mut xv: Vec<C64> = x.iter().copied().collect();
            if c >= 1.0 - CLUSTER_TOL {
                normalize(&mut xv);
                aligned.push(xv);
            } else if c <= CLUSTER_TOL {
                normalize(&mut xv);
                p_only.push(xv);
            } else {
                normalize(&mut xv);
                let xd = DMatrix::from_column_slice(d, 1, &xv);
                let e2 = (&id - pm) * qm * &xd;
                let mut e2v = column(&e2, 0);
                normalize(&mut e2v);
                generic.push((c.clamp(0.0, 1.0).sqrt(), xv, e2v));
            }
        }
    }
    generic.sort_by(|a, b| b.0.total_cmp(&a.0));

    // Remaining part of ker P, orthogonal to the partner vectors.
    let mut rest = ComplexMatrix::from_dmatrix(&id - pm)?;
    for (_, _, e2) in &generic {
        rest = &rest - &ComplexMatrix::outer(e2);
    }
    let vr = range_basis(&rest);
    let mut q_only: Vec<Vec<C64>> = Vec::new();
    let mut null: Vec<Vec<C64>> = Vec::new();
    if vr.ncols() > 0 {
        let restricted = ComplexMatrix::from_dmatrix(vr.adjoint() * qm * &vr)?;
        let (vals, ws) = eigh(&restricted);
        for (k, &v) in vals.iter().enumerate() {
            let mut z: Vec<C64> = (&vr * ws.as_dmatrix().column(k)).iter().copied().collect();
            normalize(&mut z);
            if v > 0.5 {
                q_only.push(z);
            } else {
                null.push(z);
            }
        }
    }

    let mut columns: Vec<Vec<C64>> = Vec::with_capacity(d);
    let mut blocks = Vec::new();
    for (overlap, x, e2) in generic {
        let k = columns.len();
        columns.push(x);
        columns.push(e2);
        blocks.push(Block {
            dim: 2,
            basis_columns: vec![k, k + 1],
            rank_p: 1,
            rank_q: 1,
            overlap: Some(overlap),
        });
    }
    for (vecs, rp, rq) in [(aligned, 1, 1), (p_only, 1, 0), (q_only, 0, 1), (null, 0, 0)] {
        for v in vecs {
            blocks.push(Block::one(columns.len(), rp, rq));
            columns.push(v);
        }
    }
    if columns.len() != d {
        return Err(Error::NotProjector {
            residual: (columns.len() as f64 - d as f64).abs(),
        });
    }
    let unitary = DMatrix::from_fn(d, d, |i, k| columns[k][i]);
    Ok(BlockDecomposition {
        unitary: ComplexMatrix::from_dmatrix(unitary)?,
        blocks,
    })
}

/// Projective realization of a two-outcome POVM on `C^d (x) C^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dilation {
    pub projector: Projector,
    pub convention: &'static str,
}

/// Neumark dilation of `{A, I - A}`.
///
/// With `A = sum_i a_i |e_i><e_i|`, the projector is `sum_i |v_i><v_i|` where
/// `|v_i> = sqrt(a_i)|e_i>|0> + sqrt(1 - a_i)|e_i>|1>`; the ancilla is the
/// last tensor factor so system index `s` and ancilla `a` map to `2 s + a`.
pub fn neumark_dilate(obs: &DichotomicObservable) -> Dilation {
    let a = obs.yes().matrix();
    let d = a.dim();
    let (vals, vecs) = eigh(a);
    let mut columns = Vec::with_capacity(d);
    for (i, &ai) in vals.iter().enumerate() {
        let ai = ai.clamp(0.0, 1.0);
        let (w0, w1) = (ai.sqrt(), (1.0 - ai).sqrt());
        let mut v = vec![C64::new(0.0, 0.0); 2 * d];
        for s in 0..d {
            let e = vecs.get(s, i);
            v[2 * s] = e * w0;
            v[2 * s + 1] = e * w1;
        }
        columns.push(v);
    }
    Dilation {
        projector: Projector::from_orthonormal(2 * d, &columns),
        convention: ANCILLA_CONVENTION,
    }
}

/// Sub-block `<a|G|a>` for ancilla basis state `a` in `{0, 1}`.
pub fn compress_sector(g: &ComplexMatrix, ancilla: usize) -> Result<ComplexMatrix> {
    let n = g.dim();
    if n % 2 != 0 {
        return Err(Error::OddDimension(n));
    }
    if ancilla > 1 {
        return Err(Error::InvalidArgument(format!("ancilla index {ancilla} is not 0 or 1")));
    }
    let d = n / 2;
    Ok(ComplexMatrix::from_fn(d, |i, j| g.get(2 * i + ancilla, 2 * j + ancilla)))
}

/// Compression `<0|G|0>` of an effect on the dilated space.
pub fn compress(g: &Effect) -> Result<Effect> {
    Effect::new(compress_sector(g.matrix(), 0)?)
}
