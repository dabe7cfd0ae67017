use std::f64::consts::FRAC_1_SQRT_2;

use proptest::prelude::*;
use uj_core::bell::{box_chsh, chsh, smeared_chsh, NoSignalingBox, Settings, TSIRELSON_BOUND};
use uj_core::decompose::{compress, compress_sector, neumark_dilate, two_projector_blocks};
use uj_core::joint::{
    fibonacci_sphere, lambda_opt_search, povm_joint_observable, pvm_joint_blockwise, qubit_joint_observable,
    JointObservable, PairSource, SearchSettings, Verdict,
};
use uj_core::operators::{eigenvalues, tensor, ComplexMatrix, Effect};
use uj_core::sampling::{self, stream};
use uj_core::unsharp::{smear, smeared_mean, UnsharpParam};

fn lambda() -> impl Strategy<Value = f64> {
    (1e-3f64..=1.0).prop_map(|x| x.min(1.0))
}

fn settings(seed: u64) -> Settings {
    let mut rng = stream(seed, 1);
    let mut o = || sampling::unit_vector(&mut rng).observable();
    Settings {
        a1: o(),
        a2: o(),
        b1: o(),
        b2: o(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smearing_composes(seed: u64, l1 in lambda(), l2 in lambda(), d in 1usize..6) {
        let obs = sampling::observable(&mut stream(seed, 0), d);
        let (a, b) = (UnsharpParam::new(l1).unwrap(), UnsharpParam::new(l2).unwrap());
        let twice = smear(&smear(&obs, a), b);
        let once = smear(&obs, UnsharpParam::new(l1 * l2).unwrap());
        prop_assert!(twice.yes().matrix().max_abs_diff(once.yes().matrix()) < 1e-12);
        prop_assert!(twice.no().matrix().max_abs_diff(once.no().matrix()) < 1e-12);
    }

    #[test]
    fn smearing_keeps_complement(seed: u64, l in lambda(), d in 1usize..6) {
        let s = smear(&sampling::observable(&mut stream(seed, 0), d), UnsharpParam::new(l).unwrap());
        let sum = s.yes().matrix() + s.no().matrix();
        prop_assert!(sum.max_abs_diff(&ComplexMatrix::identity(d)) < 1e-12);
        prop_assert!((s.yes().matrix().trace().re + s.no().matrix().trace().re - d as f64).abs() < 1e-8);
    }

    #[test]
    fn effects_have_unit_interval_spectrum(seed: u64, l in lambda(), d in 1usize..8) {
        let s = smear(&sampling::observable(&mut stream(seed, 0), d), UnsharpParam::new(l).unwrap());
        for e in [s.yes(), s.no()] {
            let ev = eigenvalues(e.matrix());
            prop_assert!(ev[0] >= -1e-9 && ev[d - 1] <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn tensor_is_associative(seed: u64) {
        let mut rng = stream(seed, 0);
        let [a, b, c] = [0, 1, 2].map(|_| sampling::unitary(&mut rng, 2));
        let left = tensor(&tensor(&a, &b), &c);
        let right = tensor(&a, &tensor(&b, &c));
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn dilation_round_trip(seed: u64, d in prop::sample::select(vec![2usize, 3, 4, 8])) {
        let obs = sampling::observable(&mut stream(seed, 0), d);
        let dil = neumark_dilate(&obs);
        let back = compress_sector(dil.projector.matrix(), 0).unwrap();
        prop_assert!(back.max_abs_diff(obs.yes().matrix()) < 1e-12);
    }

    #[test]
    fn compression_maps_effects_to_effects(seed: u64, d in 1usize..5) {
        let big = sampling::effect(&mut stream(seed, 0), 2 * d);
        let small = compress(&big).unwrap();
        let ev = eigenvalues(small.matrix());
        prop_assert!(ev[0] >= -1e-12 && ev[d - 1] <= 1.0 + 1e-12);
        // Unital: the identity compresses to the identity.
        let id = compress(&Effect::new(ComplexMatrix::identity(2 * d)).unwrap()).unwrap();
        prop_assert!(id.matrix().max_abs_diff(&ComplexMatrix::identity(d)) < 1e-15);
    }

    #[test]
    fn block_ranks_add_up(seed: u64, d in 1usize..10) {
        let mut rng = stream(seed, 0);
        let rp = seed as usize % (d + 1);
        let rq = (seed >> 8) as usize % (d + 1);
        let p = sampling::projector(&mut rng, d, rp);
        let q = sampling::projector(&mut rng, d, rq);
        let dec = two_projector_blocks(&p, &q).unwrap();
        prop_assert_eq!(dec.blocks.iter().map(|b| b.rank_p).sum::<usize>(), rp);
        prop_assert_eq!(dec.blocks.iter().map(|b| b.rank_q).sum::<usize>(), rq);
        prop_assert_eq!(dec.blocks.iter().map(|b| b.dim).sum::<usize>(), d);
        let r = dec.residuals(&p, &q);
        prop_assert!(r.off_block < 1e-9 && r.reconstruction < 1e-9 && r.unitarity < 1e-9);
    }

    #[test]
    fn blockwise_residual_is_max_over_blocks(seed: u64, d in 2usize..9, l in 0.05f64..=FRAC_1_SQRT_2) {
        let mut rng = stream(seed, 0);
        let p = sampling::projector(&mut rng, d, 1 + seed as usize % d);
        let q = sampling::projector(&mut rng, d, 1 + (seed >> 8) as usize % d);
        let b = pvm_joint_blockwise(&p, &q, UnsharpParam::new(l).unwrap()).unwrap();
        let total = b.report.residuals.unwrap();
        let first = b.block_residuals.iter().map(|r| r.first_marginal).fold(0.0, f64::max);
        let second = b.block_residuals.iter().map(|r| r.second_marginal).fold(0.0, f64::max);
        // Conjugation by the decomposition unitary adds rounding of its own.
        prop_assert!((total.first_marginal - first).abs() < 1e-12);
        prop_assert!((total.second_marginal - second).abs() < 1e-12);
    }

    #[test]
    fn feasibility_is_monotone(seed: u64) {
        let mut rng = stream(seed, 0);
        let m = sampling::unit_vector(&mut rng);
        let n = sampling::unit_vector(&mut rng);
        let mut seen_feasible = false;
        for k in (1..=40).rev() {
            let lam = UnsharpParam::new(f64::from(k) / 40.0).unwrap();
            let f = qubit_joint_observable(&m, &n, lam).feasible.is_feasible();
            prop_assert!(!(seen_feasible && !f), "flipped back to infeasible at {}", lam.value());
            seen_feasible |= f;
        }
    }

    #[test]
    fn verdict_is_rotation_invariant(seed: u64, l in lambda()) {
        let mut rng = stream(seed, 0);
        let m = sampling::unit_vector(&mut rng);
        let n = sampling::unit_vector(&mut rng);
        let lam = UnsharpParam::new(l).unwrap();
        let base = qubit_joint_observable(&m, &n, lam);
        let min_eigs = |w: &JointObservable| w.effects().clone().map(|e| eigenvalues(e.matrix())[0]);
        for _ in 0..10 {
            let r = sampling::rotation(&mut rng);
            let rot = qubit_joint_observable(&sampling::rotate(&r, &m), &sampling::rotate(&r, &n), lam);
            prop_assert_eq!(rot.feasible, base.feasible);
            if let (Some(a), Some(b)) = (&base.witness, &rot.witness) {
                for (x, y) in min_eigs(a).iter().zip(min_eigs(b).iter()) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn povm_path_succeeds_at_threshold(seed: u64, d in 1usize..5) {
        let mut rng = stream(seed, 0);
        let a = sampling::observable(&mut rng, d);
        let b = sampling::observable(&mut rng, d);
        let r = povm_joint_observable(&a, &b, UnsharpParam::TSIRELSON).unwrap();
        prop_assert_eq!(r.feasible, Verdict::Feasible);
        prop_assert!(r.residuals.unwrap().passes(1e-9));
    }

    #[test]
    fn smeared_chsh_scales(seed: u64, l in lambda()) {
        let rho = sampling::pure_state(&mut stream(seed, 0), 4);
        let s = settings(seed);
        let sharp = chsh(&rho, &s).unwrap();
        let smeared = smeared_chsh(&rho, &s, UnsharpParam::new(l).unwrap()).unwrap();
        prop_assert!((smeared.value - l * sharp.value).abs() < 1e-12);
        prop_assert!(sharp.value <= TSIRELSON_BOUND + 1e-6);
    }

    #[test]
    fn quantum_boxes_are_no_signaling(seed: u64) {
        let rho = sampling::pure_state(&mut stream(seed, 0), 4);
        let b = NoSignalingBox::quantum(&rho, &settings(seed)).unwrap();
        prop_assert!(b.signaling_residual() <= 1e-12);
        prop_assert!(box_chsh(&b).value <= 4.0 + 1e-12);
    }

    #[test]
    fn mixtures_with_pr_box_stay_below_four(w in 0.0f64..=1.0) {
        let (pr, noise) = (NoSignalingBox::pr_box(), NoSignalingBox::white_noise());
        let mut p = [0.0; 16];
        for (i, v) in p.iter_mut().enumerate() {
            let (x, y, a, b) = (i >> 3, (i >> 2) & 1, (i >> 1) & 1, i & 1);
            *v = w * pr.probability(x, y, a, b) + (1.0 - w) * noise.probability(x, y, a, b);
        }
        let r = box_chsh(&NoSignalingBox::new(p).unwrap());
        prop_assert!(r.value <= 4.0 + 1e-12);
        prop_assert!((r.value - 4.0 * w).abs() < 1e-12);
    }
}

#[test]
fn mean_value_scaling_over_many_triples() {
    let mut worst = 0.0f64;
    for i in 0..10_000u64 {
        let mut rng = stream(99, i);
        let d = 1 + (i as usize % 5);
        let obs = sampling::observable(&mut rng, d);
        let rho = sampling::pure_state(&mut rng, d);
        let lam = UnsharpParam::new(((i % 997) as f64 + 1.0) / 997.0).unwrap();
        worst = worst.max(smeared_mean(&obs, lam, &rho).unwrap().residual);
    }
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn worst_case_search_never_undershoots() {
    for seed in [1u64, 2, 3] {
        let r = lambda_opt_search(&PairSource::WorstCase { mesh: 300, seed }, &SearchSettings::new(1e-4)).unwrap();
        assert!(r.lambda_opt >= FRAC_1_SQRT_2 - 1e-3, "{}", r.lambda_opt);
        assert!(r.lambda_opt <= FRAC_1_SQRT_2 + 1e-3);
        let angle = r.angle.unwrap();
        assert!((angle - std::f64::consts::FRAC_PI_2).abs() < 0.05, "attained at {angle}");
    }
    assert_eq!(fibonacci_sphere(1000).len(), 1000);
}
