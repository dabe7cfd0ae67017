//! Reproducible end-to-end checks, shared by the `acceptance` subcommand and
//! the acceptance test target.

use std::f64::consts::FRAC_1_SQRT_2;
use std::time::Instant;

use num_rational::Rational64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bell::{box_chsh, rational_abs, chsh, optimal_settings, smeared_chsh, NoSignalingBox, Settings, TSIRELSON_BOUND};
use crate::decompose::{compress_sector, neumark_dilate, two_projector_blocks};
use crate::error::Result;
use crate::joint::{
    feasibility_oracle, lambda_opt_search, povm_joint_observable, pvm_joint_observable, qubit_criterion,
    qubit_joint_observable, OracleSettings, PairSource, SearchSettings, Verdict,
};
use crate::operators::{ComplexMatrix, DensityMatrix, Projector};
use crate::sampling;
use crate::unsharp::{smear, smeared_mean, UnsharpParam};

/// Seed used by every randomized criterion.
pub const SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {}. {}: {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

type Outcome = Result<(bool, String)>;

pub const CRITERIA: [(u8, &str); 9] = [
    (1, "worst-case lambda_opt"),
    (2, "Tsirelson bound"),
    (3, "smeared CHSH saturation"),
    (4, "joint POVM validity"),
    (5, "oracle agreement"),
    (6, "two-projector round trip"),
    (7, "dilation pipeline"),
    (8, "box layer"),
    (9, "mean-value scaling"),
];

pub fn run(id: u8) -> Option<CriterionResult> {
    let name = CRITERIA.iter().find(|c| c.0 == id)?.1;
    let start = Instant::now();
    let outcome = match id {
        1 => lambda_opt_worst_case(),
        2 => tsirelson(),
        3 => saturation(),
        4 => joint_validity(),
        5 => oracle_agreement(),
        6 => round_trip(),
        7 => dilation_pipeline(),
        8 => box_layer(),
        9 => scaling(),
        _ => return None,
    };
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    Some(CriterionResult {
        id,
        name,
        passed,
        detail,
        seconds,
    })
}

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA.iter().filter_map(|c| run(c.0)).collect()
}

fn timed<T>(limit: f64, f: impl FnOnce() -> Result<T>) -> Result<(T, f64, bool)> {
    let start = Instant::now();
    let v = f()?;
    let s = start.elapsed().as_secs_f64();
    Ok((v, s, s < limit))
}

fn lambda_opt_worst_case() -> Outcome {
    let (r, secs, fast) = timed(60.0, || {
        lambda_opt_search(&PairSource::WorstCase { mesh: 1000, seed: SEED }, &SearchSettings::new(1e-4))
    })?;
    let err = (r.lambda_opt - FRAC_1_SQRT_2).abs();
    let ok = err <= 1e-3 && fast;
    Ok((
        ok,
        format!(
            "lambda_opt = {:.6} (|err| = {err:.2e}), pair angle {:.4} rad, {secs:.1}s",
            r.lambda_opt,
            r.angle.unwrap_or(f64::NAN)
        ),
    ))
}

fn random_settings<R: Rng>(rng: &mut R) -> Settings {
    let mut o = || sampling::unit_vector(rng).observable();
    Settings {
        a1: o(),
        a2: o(),
        b1: o(),
        b2: o(),
    }
}

fn tsirelson() -> Outcome {
    let singlet = chsh(&DensityMatrix::singlet(), &optimal_settings())?.value;
    let (max, secs, fast) = timed(120.0, || {
        (0..10_000u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = sampling::stream(SEED ^ 2, i);
                let rho = sampling::pure_state(&mut rng, 4);
                chsh(&rho, &random_settings(&mut rng)).map(|r| r.value)
            })
            .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
    })?;
    let ok = (singlet - TSIRELSON_BOUND).abs() <= 1e-6 && max <= TSIRELSON_BOUND + 1e-6 && fast;
    Ok((ok, format!("singlet {singlet:.9}, random max {max:.9} over 10^4, {secs:.1}s")))
}

fn saturation() -> Outcome {
    let rho = DensityMatrix::singlet();
    let s = optimal_settings();
    let at = smeared_chsh(&rho, &s, UnsharpParam::TSIRELSON)?.value;
    let mut worst = 0.0f64;
    for k in 1..=200 {
        let lam = UnsharpParam::new(FRAC_1_SQRT_2 * f64::from(k) / 200.0)?;
        worst = worst.max(smeared_chsh(&rho, &s, lam)?.value);
    }
    let random = (0..2000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(SEED ^ 3, i);
            let rho = sampling::pure_state(&mut rng, 4);
            let lam = UnsharpParam::new(FRAC_1_SQRT_2 * (1.0 - rng.random::<f64>()))?;
            smeared_chsh(&rho, &random_settings(&mut rng), lam).map(|r| r.value)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    worst = worst.max(random);
    let ok = (at - 2.0).abs() <= 1e-9 && worst <= 2.0 + 1e-9;
    Ok((ok, format!("at 1/sqrt(2): {at:.12}, max over lambda <= 1/sqrt(2): {worst:.12}")))
}

fn joint_validity() -> Outcome {
    let lam = UnsharpParam::new(0.70)?;
    let worst = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(SEED ^ 4, i);
            let p = sampling::unit_vector(&mut rng).projector();
            let q = sampling::unit_vector(&mut rng).projector();
            let r = pvm_joint_observable(&p, &q, lam)?;
            Ok(match r.residuals {
                Some(res) if r.feasible == Verdict::Feasible => (res.max_affine(), res.min_eigenvalue),
                _ => (f64::INFINITY, f64::NEG_INFINITY),
            })
        })
        .try_reduce(|| (0.0, f64::INFINITY), |a, b| Ok((a.0.max(b.0), a.1.min(b.1))))?;
    let ok = worst.0 <= 1e-9 && worst.1 >= -1e-9;
    Ok((ok, format!("max residual {:.2e}, min eigenvalue {:.2e}", worst.0, worst.1)))
}

fn oracle_agreement() -> Outcome {
    let grid: Vec<f64> = (6..=19).map(|k| f64::from(k) * 0.05).collect();
    let settings = OracleSettings::default();
    let samples: Vec<Option<bool>> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(SEED ^ 5, i);
            let m = sampling::unit_vector(&mut rng);
            let n = sampling::unit_vector(&mut rng);
            let lam = UnsharpParam::new(grid[rng.random_range(0..grid.len())])?;
            if (qubit_criterion(&m, &n, lam) - 2.0).abs() < 0.02 {
                return Ok(None);
            }
            let closed = qubit_joint_observable(&m, &n, lam).feasible;
            let oracle = feasibility_oracle(
                &smear(&m.observable(), lam),
                &smear(&n.observable(), lam),
                settings.max_iter,
                settings.tol,
            )?
            .feasible;
            Ok(Some(closed == oracle))
        })
        .collect::<Result<_>>()?;
    let counted: Vec<bool> = samples.iter().flatten().copied().collect();
    let agree = counted.iter().filter(|a| **a).count();
    let rate = agree as f64 / counted.len().max(1) as f64;
    Ok((
        rate >= 0.99,
        format!("{agree}/{} agree ({:.2}%), {} in the boundary band", counted.len(), 100.0 * rate, 1000 - counted.len()),
    ))
}

fn round_trip() -> Outcome {
    let results: Vec<(f64, f64, usize)> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(SEED ^ 6, i);
            let d = rng.random_range(3..=16);
            let (rp, rq) = (rng.random_range(0..=d), rng.random_range(0..=d));
            let p = sampling::projector(&mut rng, d, rp);
            let q = sampling::projector(&mut rng, d, rq);
            let dec = two_projector_blocks(&p, &q)?;
            let r = dec.residuals(&p, &q);
            let max_dim = dec.blocks.iter().map(|b| b.dim).max().unwrap_or(0);
            Ok((r.off_block, r.reconstruction.max(r.unitarity), max_dim))
        })
        .collect::<Result<_>>()?;
    let off = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let rec = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let dim = results.iter().map(|r| r.2).max().unwrap_or(0);
    let ok = off <= 1e-9 && rec <= 1e-9 && dim <= 2;
    Ok((ok, format!("off-block {off:.2e}, reconstruction {rec:.2e}, largest block {dim}")))
}

fn dilation_pipeline() -> Outcome {
    let mut identity = 0.0f64;
    for d in [2usize, 4, 8] {
        for i in 0..100u64 {
            let mut rng = sampling::stream(SEED ^ 7, (d as u64) << 32 | i);
            let obs = sampling::observable(&mut rng, d);
            let dil = neumark_dilate(&obs);
            let back = compress_sector(dil.projector.matrix(), 0)?;
            identity = identity.max(back.max_abs_diff(obs.yes().matrix()));
        }
    }
    let worst = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(SEED ^ 8, i);
            let d = rng.random_range(2..=4);
            let a = sampling::observable(&mut rng, d);
            let b = sampling::observable(&mut rng, d);
            let r = povm_joint_observable(&a, &b, UnsharpParam::TSIRELSON)?;
            Ok(match r.residuals {
                Some(res) if r.feasible == Verdict::Feasible && res.passes(1e-9) => res.max_affine().max(-res.min_eigenvalue),
                _ => f64::INFINITY,
            })
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    let ok = identity <= 1e-12 && worst <= 1e-9;
    Ok((ok, format!("compress(dilate) error {identity:.2e}, worst joint residual {worst:.2e}")))
}

/// Random commuting projector pair, diagonal in a common random basis.
fn commuting_pair<R: Rng>(rng: &mut R, d: usize) -> Result<(Projector, Projector)> {
    let u = sampling::unitary(rng, d);
    let mut diag = |_: ()| -> Result<Projector> {
        let bits: Vec<f64> = (0..d).map(|_| f64::from(u8::from(rng.random::<bool>()))).collect();
        let m = (&(&u * &ComplexMatrix::diag(&bits)) * &u.adjoint()).hermitian_part();
        Projector::new(m)
    };
    Ok((diag(())?, diag(())?))
}

fn box_layer() -> Outcome {
    let pr = NoSignalingBox::pr_box().exact_chsh();
    let pr_ok = pr == Some(Rational64::from_integer(4)) && box_chsh(&NoSignalingBox::pr_box()).value == 4.0;
    let det: Vec<Rational64> = NoSignalingBox::all_deterministic()
        .iter()
        .filter_map(|b| b.exact_chsh())
        .collect();
    let det_ok = det.len() == 16 && det.iter().all(|s| rational_abs(*s) <= Rational64::from_integer(2));
    let mut commuting_ok = true;
    for i in 0..50u64 {
        let mut rng = sampling::stream(SEED ^ 9, i);
        let d = rng.random_range(2..=6);
        let (p, q) = commuting_pair(&mut rng, d)?;
        let r = pvm_joint_observable(&p, &q, UnsharpParam::SHARP)?;
        let oracle = feasibility_oracle(&p.to_observable(), &q.to_observable(), 1000, 1e-9)?;
        commuting_ok &= r.feasible == Verdict::Feasible
            && r.residuals.is_some_and(|res| res.passes(1e-9))
            && oracle.feasible == Verdict::Feasible;
    }
    let max_det = det.iter().map(|s| rational_abs(*s)).max().unwrap_or_default();
    Ok((
        pr_ok && det_ok && commuting_ok,
        format!(
            "PR box {}, deterministic max |S| = {max_det}, commuting pairs feasible at lambda = 1: {commuting_ok}",
            pr.map_or("inexact".into(), |s| s.to_string())
        ),
    ))
}

fn scaling() -> Outcome {
    let worst = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream(SEED ^ 10, i);
            let d = rng.random_range(2..=6);
            let obs = sampling::observable(&mut rng, d);
            let rho = sampling::pure_state(&mut rng, d);
            let lam = UnsharpParam::new(1.0 - rng.random::<f64>())?;
            smeared_mean(&obs, lam, &rho).map(|m| m.residual)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok((worst <= 1e-12, format!("max |<A^l> - l<A>| = {worst:.2e} over 10^4 triples")))
}
