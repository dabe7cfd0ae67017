//! Seeded random operators for sweeps and tests.
//!
//! Every sample index gets its own ChaCha stream, so parallel sweeps give the
//! same draws regardless of scheduling.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::joint::BlochVector;
use crate::operators::{ComplexMatrix, DensityMatrix, DichotomicObservable, Effect, Projector, C64};

/// Generator for sample `index` of the sweep seeded by `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(gaussian(rng), gaussian(rng))
}

/// Uniform direction on the sphere.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    loop {
        let v = [gaussian(rng), gaussian(rng), gaussian(rng)];
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-12 {
            return BlochVector::normalized(v).expect("non-zero");
        }
    }
}

/// Haar-random `d x k` isometry from the QR factor of a complex Gaussian.
fn isometry<R: Rng + ?Sized>(rng: &mut R, d: usize, k: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(d, k, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // Fix the phases of R's diagonal so the distribution is Haar.
    let mut q = q;
    for j in 0..k {
        let z = r[(j, j)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random unitary.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_dmatrix(isometry(rng, d, d)).expect("square")
}

/// Uniformly oriented rank-`rank` projector on `C^d`.
pub fn projector<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> Projector {
    let v = isometry(rng, d, rank);
    let cols: Vec<Vec<C64>> = (0..rank).map(|j| v.column(j).iter().copied().collect()).collect();
    Projector::from_orthonormal(d, &cols)
}

/// Random effect `U diag(a) U^dagger` with `a` uniform in `[0, 1]`.
pub fn effect<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Effect {
    let u = unitary(rng, d);
    let a: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let m = (&(&u * &ComplexMatrix::diag(&a)) * &u.adjoint()).hermitian_part();
    Effect::from_trusted(m)
}

pub fn observable<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DichotomicObservable {
    DichotomicObservable::from_yes(effect(rng, d))
}

/// Haar-random pure state on `C^d`.
pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityMatrix {
    let v: Vec<C64> = isometry(rng, d, 1).iter().copied().collect();
    DensityMatrix::from_ket(&v).expect("unit vector")
}

/// Uniform rotation matrix, from a random unit quaternion.
pub fn rotation<R: Rng + ?Sized>(rng: &mut R) -> [[f64; 3]; 3] {
    let q: [f64; 4] = loop {
        let q = [gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng)];
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            break q.map(|x| x / n);
        }
    };
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn rotate(r: &[[f64; 3]; 3], v: &BlochVector) -> BlochVector {
    let c = v.components();
    let out = [0, 1, 2].map(|i| r[i][0] * c[0] + r[i][1] * c[1] + r[i][2] * c[2]);
    BlochVector::normalized(out).expect("rotation preserves length")
}
