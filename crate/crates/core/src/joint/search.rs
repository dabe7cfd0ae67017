use std::f64::consts::FRAC_1_SQRT_2;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::oracle::{feasibility_oracle, OracleSettings};
use super::povm::povm_joint_observable;
use super::pvm::pvm_joint_observable;
use super::qubit::{qubit_joint_observable, BlochVector};
use super::Verdict;
use crate::error::{Error, Result};
use crate::operators::{DichotomicObservable, Projector};
use crate::unsharp::{smear, UnsharpParam};

/// Bisection steps allowed before giving up.
pub const MAX_BISECTION_STEPS: usize = 200;
const MIN_TOL: f64 = 1e-6;

/// What to search over.
#[derive(Debug, Clone)]
pub enum PairSource {
    /// Rank-one qubit projectors along two Bloch directions.
    Bloch(BlochVector, BlochVector),
    Projectors(Projector, Projector),
    /// General two-outcome POVMs. Below `1/sqrt(2)` the dilation construction
    /// decides; above it only an oracle `yes` counts as feasible.
    Povm(DichotomicObservable, DichotomicObservable),
    /// Minimum threshold over Fibonacci-sphere pairs of qubit directions.
    WorstCase { mesh: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    pub tol: f64,
    pub oracle: OracleSettings,
    /// Best mesh pairs refined in worst-case mode.
    pub refine_pairs: usize,
    pub refine_rounds: usize,
}

impl SearchSettings {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            oracle: OracleSettings::default(),
            refine_pairs: 8,
            refine_rounds: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttainingPair {
    pub m: BlochVector,
    pub n: BlochVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaOptReport {
    /// Largest unsharpness found feasible; within `tol` below the threshold.
    pub lambda_opt: f64,
    pub tol: f64,
    /// Attaining qubit directions (Bloch and worst-case modes).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<AttainingPair>,
    /// Angle between the attaining directions, radians.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    pub bisection_steps: usize,
    pub pairs_evaluated: usize,
    /// Oracle verdict for the smeared pair at `lambda_opt`.
    pub oracle_verdict: Verdict,
    pub oracle_iterations: usize,
}

/// Largest `lambda` in `(0, 1]` for which `feasible` holds, assuming
/// monotonicity. Returns the last feasible point and the step count.
fn bisect(tol: f64, mut feasible: impl FnMut(UnsharpParam) -> Result<bool>) -> Result<(f64, usize)> {
    if feasible(UnsharpParam::SHARP)? {
        return Ok((1.0, 1));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut steps = 1;
    while hi - lo > tol {
        if steps >= MAX_BISECTION_STEPS {
            return Err(Error::NonConvergence { iterations: steps });
        }
        let mid = 0.5 * (lo + hi);
        if feasible(UnsharpParam::new(mid)?)? {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    Ok((lo, steps))
}

fn qubit_threshold(m: &BlochVector, n: &BlochVector, tol: f64) -> Result<(f64, usize)> {
    bisect(tol, |lam| Ok(qubit_joint_observable(m, n, lam).feasible.is_feasible()))
}

/// `n` points spread evenly on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<BlochVector> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            BlochVector::normalized([r * phi.cos(), r * phi.sin(), z]).expect("unit")
        })
        .collect()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Orthonormal frame `(e1, e2)` perpendicular to `m`, with `n` in the
/// `(m, e1)` half-plane when possible.
fn frame(m: &BlochVector, n: &BlochVector) -> ([f64; 3], [f64; 3]) {
    let (mv, nv) = (m.components(), n.components());
    let c = m.dot(n);
    let perp = [0, 1, 2].map(|i| nv[i] - c * mv[i]);
    let e1 = match BlochVector::normalized(perp) {
        Ok(e) if perp.iter().map(|x| x * x).sum::<f64>() > 1e-20 => e.components(),
        _ => {
            // n parallel to m: any perpendicular axis.
            let axis = if mv[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            BlochVector::normalized(cross(mv, axis)).expect("non-zero").components()
        }
    };
    (e1, cross(mv, e1))
}

struct Candidate {
    threshold: f64,
    m: BlochVector,
    n: BlochVector,
}

/// Anisotropic refinement: fine steps in the polar angle between the pair,
/// coarse steps in the azimuth about `m`.
fn refine(start: Candidate, tol: f64, rounds: usize, evaluated: &mut usize) -> Result<Candidate> {
    let mut best = start;
    let (mut d_theta, mut d_phi) = (0.05f64, 0.5f64);
    for _ in 0..rounds {
        let m = best.m;
        let (e1, e2) = frame(&m, &best.n);
        let theta0 = m.dot(&best.n).clamp(-1.0, 1.0).acos();
        let mut grid = Vec::new();
        for a in -5..=5 {
            for b in -1..=1 {
                let theta = theta0 + d_theta * f64::from(a) / 5.0;
                let phi = d_phi * f64::from(b);
                let mv = m.components();
                let v = [0, 1, 2].map(|i| theta.cos() * mv[i] + theta.sin() * (phi.cos() * e1[i] + phi.sin() * e2[i]));
                grid.push(BlochVector::normalized(v)?);
            }
        }
        let scored: Vec<(f64, BlochVector)> = grid
            .par_iter()
            .map(|n| qubit_threshold(&m, n, tol).map(|(t, _)| (t, *n)))
            .collect::<Result<_>>()?;
        *evaluated += scored.len();
        for (t, n) in scored {
            if t < best.threshold {
                best = Candidate { threshold: t, m, n };
            }
        }
        d_theta /= 4.0;
        d_phi /= 2.0;
    }
    Ok(best)
}

fn smeared_pair(
    a: &DichotomicObservable,
    b: &DichotomicObservable,
    lam: UnsharpParam,
) -> (DichotomicObservable, DichotomicObservable) {
    (smear(a, lam), smear(b, lam))
}

/// Locates the largest unsharpness at which the pair (or, in worst-case mode,
/// every qubit pair on the mesh) is jointly measurable.
///
/// The threshold is bisected with the constructive decision; the feasibility
/// oracle is then run at the returned point and must not contradict it.
pub fn lambda_opt_search(source: &PairSource, settings: &SearchSettings) -> Result<LambdaOptReport> {
    let tol = settings.tol;
    if !(tol >= MIN_TOL) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} below {MIN_TOL}")));
    }
    let (lambda_opt, steps, pair, pairs_evaluated, observables) = match source {
        PairSource::Bloch(m, n) => {
            let (l, s) = qubit_threshold(m, n, tol)?;
            (l, s, Some([*m, *n]), 1, (m.observable(), n.observable()))
        }
        PairSource::Projectors(p, q) => {
            q.matrix().ensure_dim(p.dim())?;
            let (l, s) = bisect(tol, |lam| Ok(pvm_joint_observable(p, q, lam)?.feasible.is_feasible()))?;
            (l, s, None, 1, (p.to_observable(), q.to_observable()))
        }
        PairSource::Povm(a, b) => {
            b.yes().matrix().ensure_dim(a.dim())?;
            let (l, s) = bisect(tol, |lam| {
                if lam.value() <= FRAC_1_SQRT_2 {
                    Ok(povm_joint_observable(a, b, lam)?.feasible.is_feasible())
                } else {
                    let (sa, sb) = smeared_pair(a, b, lam);
                    let r = feasibility_oracle(&sa, &sb, settings.oracle.max_iter, settings.oracle.tol)?;
                    Ok(r.feasible.is_feasible())
                }
            })?;
            (l, s, None, 1, (a.clone(), b.clone()))
        }
        PairSource::WorstCase { mesh, seed } => {
            if *mesh < 2 {
                return Err(Error::InvalidArgument("mesh needs at least two points".into()));
            }
            let points = fibonacci_sphere(*mesh);
            let mut partner: Vec<usize> = (0..*mesh).collect();
            partner.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            let mut scored: Vec<(f64, usize, usize)> = (0..*mesh)
                .into_par_iter()
                .map(|i| qubit_threshold(&points[i], &points[partner[i]], tol).map(|(t, s)| (t, i, s)))
                .collect::<Result<_>>()?;
            let total_steps: usize = scored.iter().map(|s| s.2).sum();
            scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut evaluated = *mesh;
            let mut best: Option<Candidate> = None;
            for &(t, i, _) in scored.iter().take(settings.refine_pairs.max(1)) {
                let start = Candidate {
                    threshold: t,
                    m: points[i],
                    n: points[partner[i]],
                };
                let refined = refine(start, tol, settings.refine_rounds, &mut evaluated)?;
                if best.as_ref().is_none_or(|b| refined.threshold < b.threshold) {
                    best = Some(refined);
                }
            }
            let best = best.expect("at least one pair");
            (
                best.threshold,
                total_steps,
                Some([best.m, best.n]),
                evaluated,
                (best.m.observable(), best.n.observable()),
            )
        }
    };

    let lam = UnsharpParam::new(lambda_opt)?;
    let (sa, sb) = smeared_pair(&observables.0, &observables.1, lam);
    let check = feasibility_oracle(&sa, &sb, settings.oracle.max_iter, settings.oracle.tol)?;
    if check.feasible == Verdict::Infeasible {
        return Err(Error::SelfCheck {
            check: "oracle agrees with the constructive threshold",
            residual: check.certificate.unwrap_or(f64::NAN),
        });
    }
    let angle = pair.map(|[m, n]| m.dot(&n).clamp(-1.0, 1.0).acos());
    let pair = pair.map(|[m, n]| AttainingPair { m, n });
    Ok(LambdaOptReport {
        lambda_opt,
        tol,
        pair,
        angle,
        bisection_steps: steps,
        pairs_evaluated,
        oracle_verdict: check.feasible,
        oracle_iterations: check.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bloch(v: [f64; 3]) -> BlochVector {
        BlochVector::new(v).unwrap()
    }

    #[test]
    fn orthogonal_pair_threshold() {
        let s = SearchSettings::new(1e-6);
        let r = lambda_opt_search(&PairSource::Bloch(bloch([0.0, 0.0, 1.0]), bloch([1.0, 0.0, 0.0])), &s).unwrap();
        assert!((r.lambda_opt - FRAC_1_SQRT_2).abs() <= 1e-6, "{}", r.lambda_opt);
        assert!(r.lambda_opt <= FRAC_1_SQRT_2 + 1e-12);
        assert_ne!(r.oracle_verdict, Verdict::Infeasible);
    }

    #[test]
    fn identical_pair_is_sharp() {
        let s = SearchSettings::new(1e-4);
        let r = lambda_opt_search(&PairSource::Bloch(bloch([0.0, 0.0, 1.0]), bloch([0.0, 0.0, 1.0])), &s).unwrap();
        assert_eq!(r.lambda_opt, 1.0);
        assert_eq!(r.oracle_verdict, Verdict::Feasible);
    }

    #[test]
    fn tolerance_floor() {
        let s = SearchSettings::new(1e-7);
        let src = PairSource::Bloch(bloch([0.0, 0.0, 1.0]), bloch([1.0, 0.0, 0.0]));
        assert!(matches!(lambda_opt_search(&src, &s), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn fibonacci_points_are_unit_and_distinct() {
        let pts = fibonacci_sphere(50);
        assert_eq!(pts.len(), 50);
        for w in pts.windows(2) {
            assert!(w[0].dot(&w[1]) < 1.0 - 1e-6);
        }
    }

    #[test]
    fn frame_is_orthonormal() {
        let m = bloch([0.0, 0.0, 1.0]);
        for n in [bloch([1.0, 0.0, 0.0]), m, bloch([0.0, 0.0, -1.0]), BlochVector::normalized([1.0, 2.0, 3.0]).unwrap()] {
            let (e1, e2) = frame(&m, &n);
            let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            assert!(dot(e1, e2).abs() < 1e-12 && dot(e1, m.components()).abs() < 1e-12);
            assert!((dot(e1, e1) - 1.0).abs() < 1e-12 && (dot(e2, e2) - 1.0).abs() < 1e-12);
        }
    }
}
