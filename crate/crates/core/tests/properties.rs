use proptest::prelude::*;
use star_ope::abstraction::Abstraction;
use star_ope::env::{sample_trajectories, Dataset, RandomMdpParams, TabularMdp, TabularPolicy};
use star_ope::estimators::{is_estimate, model_based_estimate, pdis_estimate, star_estimate, wis_estimate, wpdis_estimate, Clip, StarConfig};

fn all_estimates(data: &Dataset, pi_e: &TabularPolicy, phi: &Abstraction, clip: Clip, ns: usize) -> Vec<f64> {
    let star = star_estimate(
        data,
        &StarConfig {
            abstraction: phi,
            clip,
            pi_e,
        },
    )
    .unwrap();
    vec![
        star,
        is_estimate(data, pi_e).unwrap(),
        pdis_estimate(data, pi_e).unwrap(),
        wis_estimate(data, pi_e).unwrap(),
        wpdis_estimate(data, pi_e).unwrap(),
        model_based_estimate(data, pi_e, ns).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rewards_scale_every_estimate(
        seed in 0u64..1000,
        ns in 2usize..6,
        exponent in -4i32..5,
        negate in any::<bool>(),
        clip in prop_oneof![Just(Clip::Unclipped), (1usize..4).prop_map(Clip::Window)],
    ) {
        let params = RandomMdpParams { num_states: ns, num_actions: 2, horizon: 8, max_branching: 2 };
        let mdp = TabularMdp::random(params, seed);
        let pi_b = TabularPolicy::random(ns, 2, seed + 1);
        let pi_e = TabularPolicy::random(ns, 2, seed + 2);
        let data = sample_trajectories(&mdp, &pi_b, 60, seed).unwrap();
        let phi = Abstraction::lookup((0..ns).map(|s| s % 2).collect(), 2).unwrap();
        // Powers of two scale every floating-point operation exactly.
        let kappa = if negate { -1.0 } else { 1.0 } * 2f64.powi(exponent);
        let base = all_estimates(&data, &pi_e, &phi, clip, ns);
        let scaled = all_estimates(&data.scale_rewards(kappa), &pi_e, &phi, clip, ns);
        for (b, s) in base.iter().zip(&scaled) {
            prop_assert_eq!(kappa * b, *s);
        }
        let general = all_estimates(&data.scale_rewards(0.3), &pi_e, &phi, clip, ns);
        for (b, s) in base.iter().zip(&general) {
            prop_assert!((0.3 * b - s).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }
}
