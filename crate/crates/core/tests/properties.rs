use mems_teleport::linalg::{kron, partial_trace, partial_transpose, ComplexMatrix};
use mems_teleport::measures::{concurrence, negativity, EntanglementReport};
use mems_teleport::states::{
    bloch_decompose, haar_unitary, random_density, ChannelFamily, ChannelSpec, TargetForm,
    TargetSpec,
};
use mems_teleport::teleport::{effective_channel_output, teleport_rigid, Protocol};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn channel(family: u8, t: f64) -> ChannelSpec {
    match family % 3 {
        0 => ChannelSpec::mems1(2.0 / 3.0 + t / 3.0),
        1 => ChannelSpec::mems2(2.0 * t / 3.0),
        _ => ChannelSpec::werner(t),
    }
    .unwrap()
}

fn local_unitary(seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let a = haar_unitary(&mut rng, 2);
    let b = haar_unitary(&mut rng, 2);
    kron(&a, &b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_trace_recovers_factors(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_density(s1, 1).unwrap();
        let b = random_density(s2, 2).unwrap();
        let ab = kron(a.matrix(), b.matrix());
        prop_assert!(partial_trace(&ab, 3, &[0]).unwrap().max_abs_diff(a.matrix()) < 1e-14);
        prop_assert!(partial_trace(&ab, 3, &[1, 2]).unwrap().max_abs_diff(b.matrix()) < 1e-14);
    }

    #[test]
    fn partial_transpose_is_an_involution(seed in any::<u64>(), q in 0usize..3) {
        let rho = random_density(seed, 3).unwrap();
        let once = partial_transpose(rho.matrix(), 3, q).unwrap();
        let twice = partial_transpose(&once, 3, q).unwrap();
        prop_assert_eq!(twice.max_abs_diff(rho.matrix()), 0.0);
    }

    #[test]
    fn concurrence_is_local_unitary_invariant(seed in any::<u64>(), u_seed in any::<u64>()) {
        let rho = random_density(seed, 2).unwrap();
        let rotated = mems_teleport::DensityOperator::normalized(rho.matrix().conjugate_by(&local_unitary(u_seed))).unwrap();
        let (c1, s1) = concurrence(&rho).unwrap();
        let (c2, s2) = concurrence(&rotated).unwrap();
        prop_assert!((c1 - c2).abs() < 1e-10);
        prop_assert!((s1 - s2).abs() < 1e-10);
    }

    #[test]
    fn bloch_decomposition_round_trips(seed in any::<u64>()) {
        let rho = random_density(seed, 2).unwrap();
        let parts = bloch_decompose(&rho).unwrap();
        prop_assert!(parts.reassemble().max_abs_diff(rho.matrix()) < 1e-14);
    }

    #[test]
    fn outcomes_sum_to_one(seed in any::<u64>(), f1 in 0u8..3, t1 in 0.0f64..=1.0, f2 in 0u8..3, t2 in 0.0f64..=1.0) {
        let target = TargetSpec::explicit(random_density(seed, 2).unwrap()).unwrap();
        let p = Protocol::new(&target, &channel(f1, t1), &channel(f2, t2)).unwrap().probabilities().unwrap();
        let total: f64 = p.iter().flatten().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().flatten().all(|&x| x >= -1e-15));
    }

    #[test]
    fn operator_path_matches_tensor_path(
        phi in any::<bool>(), c in 0.0f64..=1.0,
        f1 in 0u8..3, t1 in 0.0f64..=1.0, f2 in 0u8..3, t2 in 0.0f64..=1.0,
    ) {
        let form = if phi { TargetForm::Phi } else { TargetForm::Psi };
        let target = TargetSpec::new(form, c).unwrap();
        let (ch1, ch2) = (channel(f1, t1), channel(f2, t2));
        let eff = effective_channel_output(&target, &ch1, &ch2).unwrap();
        let full = teleport_rigid(&target, &ch1, &ch2).unwrap();
        prop_assert!(eff.matrix().max_abs_diff(full.output_state.matrix()) < 1e-12);
    }

    #[test]
    fn teleportation_never_amplifies(seed in any::<u64>(), f1 in 0u8..3, t1 in 0.0f64..=1.0, f2 in 0u8..3, t2 in 0.0f64..=1.0) {
        let rho = random_density(seed, 2).unwrap();
        let (c_in, _) = concurrence(&rho).unwrap();
        let out = teleport_rigid(&TargetSpec::explicit(rho).unwrap(), &channel(f1, t1), &channel(f2, t2)).unwrap();
        prop_assert!(out.c_out <= c_in + 1e-10);
    }

    #[test]
    fn output_concurrence_grows_with_channel_quality(
        phi in any::<bool>(), c in 0.0f64..=1.0, mixed in any::<bool>(), t in 0.0f64..1.0, dt in 0.0f64..0.2,
    ) {
        let form = if phi { TargetForm::Phi } else { TargetForm::Psi };
        let target = TargetSpec::new(form, c).unwrap();
        let family = if mixed { ChannelFamily::Mems2 } else { ChannelFamily::Mems1 };
        let (lo, hi) = family.range();
        let r_a = lo + (hi - lo) * t;
        let r_b = (r_a + dt).min(hi);
        let at = |r| {
            let ch = ChannelSpec::new(family, r).unwrap();
            teleport_rigid(&target, &ch, &ch).unwrap().c_out
        };
        prop_assert!(at(r_b) >= at(r_a) - 1e-10);
    }
}

#[test]
fn ppt_agrees_with_concurrence_on_random_states() {
    let mut entangled = 0;
    for seed in 0..1000u64 {
        let rho = random_density(seed, 2).unwrap();
        let report = EntanglementReport::of(&rho).unwrap();
        let n = negativity(&rho).unwrap();
        // the two tests may disagree only where both sit at the numerical floor
        let c_pos = report.concurrence > 1e-9;
        let ppt_violated = n > 1e-9;
        assert_eq!(
            c_pos, ppt_violated,
            "seed {seed}: C={} N={n}",
            report.concurrence
        );
        entangled += c_pos as usize;
    }
    assert!(
        entangled > 50 && entangled < 950,
        "{entangled} entangled of 1000"
    );
}
