use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use risac::envs::*;
use risac::nn::{softmax, Activation, LayerSpec, MlpNetwork};
use risac::oracles::{direct_fisher_inverse, finite_difference_gradient, is_positive_definite, max_abs_diff};
use risac::policy::CategoricalDistribution;
use risac::ris::*;
use risac::train::{td_residual, FisherInverse};

fn prob() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

fn positive_prob() -> impl Strategy<Value = f64> {
    1e-6..=1.0f64
}

fn p(v: f64) -> PolicyProb {
    PolicyProb::new(v).unwrap()
}

proptest! {
    #[test]
    fn exp_weight_bounded_by_inverse_beta(pi in prob(), b in prob(), beta in 1e-6..=1.0f64) {
        let w = exp_smoothed_weight(p(pi), p(b), beta);
        prop_assert!(w > 0.0);
        prop_assert!(w <= 1.0 / beta + 1e-12);
    }

    #[test]
    fn exp_weight_is_one_at_full_smoothing(pi in prob(), b in prob()) {
        prop_assert_eq!(exp_smoothed_weight(p(pi), p(b), 1.0), 1.0);
    }

    #[test]
    fn exp_weight_at_zero_beta(pi in prob(), b in prob()) {
        let w = exp_smoothed_weight(p(pi), p(b), 0.0);
        prop_assert!((w - (pi - b).exp()).abs() < 1e-12);
    }

    #[test]
    fn log_reduced_weight_recovers_classic_ratio(pi in prob(), b in positive_prob()) {
        let w = log_reduced_weight(p(pi), p(b), 0.0).unwrap();
        prop_assert_eq!(w, is_ratio(p(pi), p(b)).unwrap());
    }

    #[test]
    fn retrace_and_truncation_bounds(
        pi in prob(), b in positive_prob(), beta in prob(), lambda in prob(), cap in 0.1..10.0f64
    ) {
        let r = relative_retrace(p(pi), p(b), beta, lambda).unwrap();
        prop_assert!((0.0..=lambda).contains(&r));
        let t = truncated_ris(p(pi), p(b), beta, cap).unwrap();
        prop_assert!((0.0..=cap).contains(&t));
    }

    #[test]
    fn equal_probabilities_give_unit_weight(q in positive_prob(), beta in prob()) {
        prop_assert_eq!(exp_smoothed_weight(p(q), p(q), beta), 1.0);
        let spec = RisSpec::new(RisVariant::TruncatedRis, beta).unwrap().with_cap(1.0).unwrap();
        prop_assert!((ris_weight(&spec, p(q), p(q)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_is_a_distribution(logits in prop::collection::vec(-30.0..30.0f64, 1..8), shift in -50.0..50.0f64) {
        let probs = softmax(&logits);
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(probs.iter().all(|&q| q >= 0.0));
        let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
        prop_assert!(max_abs_diff(&probs, &softmax(&shifted)) < 1e-12);
    }

    #[test]
    fn score_has_zero_mean(logits in prop::collection::vec(-5.0..5.0f64, 2..6)) {
        let d = CategoricalDistribution::from_logits(&logits);
        let mut mean = vec![0.0; logits.len()];
        for a in 0..logits.len() {
            let g = d.grad_log_prob_wrt_logits(a).unwrap();
            for (m, gi) in mean.iter_mut().zip(g) {
                *m += d.probs()[a] * gi;
            }
        }
        prop_assert!(mean.iter().all(|m| m.abs() < 1e-12));
    }

    #[test]
    fn sampled_action_in_range(logits in prop::collection::vec(-5.0..5.0f64, 1..6), u in 0.0..1.0f64) {
        let d = CategoricalDistribution::from_logits(&logits);
        let a = d.action_at(u);
        prop_assert!(a < logits.len());
        prop_assert!(d.prob(a).unwrap() > 0.0);
    }

    #[test]
    fn terminal_residual_ignores_bootstrap(r in -10.0..10.0f64, v in -10.0..10.0f64, vn in -1e6..1e6f64, g in 0.01..=1.0f64) {
        prop_assert_eq!(td_residual(r, v, vn, true, g).value, r - v);
    }

    #[test]
    fn fisher_chain_stays_symmetric_positive_definite(seed in any::<u64>(), alpha in 0.001..0.5f64, steps in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 4;
        let mut f = FisherInverse::identity(dim);
        let mut psis = Vec::new();
        for _ in 0..steps {
            let psi: Vec<f64> = (0..dim).map(|_| rand::Rng::gen_range(&mut rng, -2.0..2.0)).collect();
            f.update(&psi, alpha).unwrap();
            psis.push(psi);
            prop_assert!(f.max_asymmetry() < 1e-9);
            prop_assert!(is_positive_definite(f.matrix(), dim));
        }
        let direct = direct_fisher_inverse(&psis, alpha, dim).unwrap();
        let scale = direct.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(max_abs_diff(f.matrix(), &direct) / scale < 1e-9);
    }

    #[test]
    fn backward_matches_finite_differences(seed in any::<u64>()) {
        let specs = [
            LayerSpec::new(3, 5, Activation::Crelu),
            LayerSpec::new(10, 2, Activation::Softmax),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = MlpNetwork::new(&specs, &mut rng).unwrap();
        let x: Vec<f64> = (0..3).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
        let w = [0.7, -1.3];
        let loss = |n: &MlpNetwork| n.predict(&x).unwrap().iter().zip(&w).map(|(o, c)| o * c).sum::<f64>();
        let trace = net.forward(&x).unwrap();
        let analytic = net.backward(&trace, &w).unwrap().to_flat();
        let mut probe = net.clone();
        let numeric = finite_difference_gradient(|theta| {
            probe.set_flat(theta).unwrap();
            loss(&probe)
        }, &net.to_flat(), 1e-5).unwrap();
        for (a, n) in analytic.iter().zip(&numeric) {
            // Kinks of the rectifier are measure-zero; tolerate them via the absolute term.
            prop_assert!((a - n).abs() <= 1e-5 * a.abs().max(n.abs()) + 1e-8, "{a} vs {n}");
        }
    }

    #[test]
    fn mountain_car_stays_in_bounds(x in -1.2..0.5f64, v in -0.07..0.07f64, actions in prop::collection::vec(0usize..3, 1..50)) {
        let cfg = MountainCarConfig::default();
        let mut s = MountainCarState { position: x, velocity: v };
        for a in actions {
            let r = mountain_car_step(s, a, &cfg).unwrap();
            s = r.next_state;
            prop_assert!((MC_MIN_POSITION..=MC_MAX_POSITION).contains(&s.position));
            prop_assert!(s.velocity.abs() <= cfg.velocity_limit);
            prop_assert_eq!(r.reward, if r.done { -20.0 } else { -1.0 });
            if r.done { break; }
        }
    }

    #[test]
    fn cart_pole_done_iff_out_of_bounds(s0 in prop::array::uniform4(-0.05..0.05f64), actions in prop::collection::vec(0usize..2, 1..100)) {
        let mut s = CartPoleState { cart_position: s0[0], cart_velocity: s0[1], pole_angle: s0[2], pole_angular_velocity: s0[3] };
        for a in actions {
            let r = cart_pole_step(s, a, Integrator::Euler).unwrap();
            s = r.next_state;
            prop_assert_eq!(r.done, s.is_failure());
            if r.done { break; }
        }
    }

    #[test]
    fn trailing_average_within_range(values in prop::collection::vec(-100.0..100.0f64, 1..300)) {
        let avg = trailing_average(&values, 100).unwrap();
        let tail = &values[values.len().saturating_sub(100)..];
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(avg >= lo - 1e-9 && avg <= hi + 1e-9);
    }
}
