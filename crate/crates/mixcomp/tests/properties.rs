//! Randomized invariants of the estimator, the likelihoods, and the alert
//! rule.

mod common;

use mixcomp::detect::{detect_changes, evaluate, AlertConfig, AlertMode};
use mixcomp::em::{complete_log_likelihood, observed_log_likelihood};
use mixcomp::mixture::{
    latent_entropy, mc, responsibilities, GaussianComponent, MixtureModel, WeightedDataset,
};
use mixcomp::rng::substream;
use proptest::prelude::*;
use rand::Rng;

/// Random SPD covariance, random mean, seeded deterministically.
fn random_component(rng: &mut rand_chacha::ChaCha8Rng, dim: usize) -> GaussianComponent<f64> {
    let mean: Vec<f64> = (0..dim).map(|_| rng.random_range(-4.0..4.0)).collect();
    let mut a = vec![0.0; dim * dim];
    for v in &mut a {
        *v = rng.random_range(-1.0..1.0);
    }
    let mut cov = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = 0.0;
            for l in 0..dim {
                acc += a[i * dim + l] * a[j * dim + l];
            }
            cov[i * dim + j] = acc;
        }
        cov[i * dim + i] += 0.5;
    }
    GaussianComponent::new(mean, cov).unwrap()
}

fn random_weights(rng: &mut rand_chacha::ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

fn random_instance(
    seed: u64,
    k: usize,
    dim: usize,
    n: usize,
) -> (MixtureModel<f64>, WeightedDataset<f64>) {
    let mut rng = substream(seed, &[41]);
    let components: Vec<_> = (0..k).map(|_| random_component(&mut rng, dim)).collect();
    let model = MixtureModel::new(random_weights(&mut rng, k), components).unwrap();
    let rows: Vec<Vec<f64>> =
        (0..n).map(|_| (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
    (model, WeightedDataset::from_rows(rows).unwrap())
}

proptest! {
    #[test]
    fn mc_is_invariant_under_split_and_zero_append(
        seed in any::<u64>(),
        lambda in 0.001f64..0.999,
        k in 1usize..=4,
        dim in 1usize..=2,
        n in 1usize..=20,
    ) {
        let (model, data) = random_instance(seed, k, dim, n);
        let before = mc(&model, &data).unwrap();

        // Split the heaviest component into two copies and append a
        // zero-weight duplicate of the first.
        let split = model
            .weights()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let mut weights = Vec::new();
        let mut components = Vec::new();
        for (j, (&w, c)) in model.weights().iter().zip(model.components()).enumerate() {
            if j == split {
                weights.push(lambda * w);
                components.push(c.clone());
                weights.push((1.0 - lambda) * w);
                components.push(c.clone());
            } else {
                weights.push(w);
                components.push(c.clone());
            }
        }
        weights.push(0.0);
        components.push(model.component(0).clone());
        let rewritten = MixtureModel::new(weights, components).unwrap();
        let after = mc(&rewritten, &data).unwrap();
        prop_assert!((before - after).abs() <= 1e-12, "{before} vs {after}");
    }

    #[test]
    fn mc_is_never_negative(
        seed in any::<u64>(),
        k in 1usize..=5,
        dim in 1usize..=2,
        n in 1usize..=25,
    ) {
        let (model, data) = random_instance(seed, k, dim, n);
        let value = mc(&model, &data).unwrap();
        prop_assert!(value >= -1e-12, "mc = {value}");
    }

    #[test]
    fn constant_weights_match_unweighted_mc(
        seed in any::<u64>(),
        k in 1usize..=4,
        dim in 1usize..=2,
        n in 2usize..=20,
        scale_pow in -3i32..=3,
        scale_odd in 0.1f64..10.0,
    ) {
        let (model, data) = random_instance(seed, k, dim, n);
        let rows: Vec<Vec<f64>> = (0..n).map(|i| data.row(i).to_vec()).collect();
        let unweighted = mc(&model, &data).unwrap();

        // Powers of two scale exactly.
        let c = (2.0f64).powi(scale_pow);
        let weighted = WeightedDataset::from_rows_weighted(rows.clone(), vec![c; n]).unwrap();
        prop_assert_eq!(mc(&model, &weighted).unwrap(), unweighted);

        // Arbitrary constants agree to rounding.
        let weighted =
            WeightedDataset::from_rows_weighted(rows, vec![scale_odd; n]).unwrap();
        let value = mc(&model, &weighted).unwrap();
        prop_assert!((value - unweighted).abs() <= 1e-12 * (1.0 + unweighted.abs()));
    }

    #[test]
    fn responsibilities_form_a_distribution(
        seed in any::<u64>(),
        k in 1usize..=5,
        dim in 1usize..=2,
    ) {
        let (model, _) = random_instance(seed, k, dim, 1);
        let mut rng = substream(seed, &[43]);
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-6.0..6.0)).collect();
        let r = responsibilities(&model, &x).unwrap();
        let sum: f64 = r.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        prop_assert!(r.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
    }

    #[test]
    fn complete_likelihood_never_exceeds_observed(
        seed in any::<u64>(),
        k in 1usize..=4,
        dim in 1usize..=2,
        n in 1usize..=15,
    ) {
        let (model, data) = random_instance(seed, k, dim, n);
        let mut rng = substream(seed, &[44]);
        let assignments: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let observed = observed_log_likelihood(&model, &data).unwrap();
        let complete = complete_log_likelihood(&model, &data, &assignments).unwrap();
        prop_assert!(complete <= observed + 1e-9, "{complete} > {observed}");
    }

    #[test]
    fn entropy_is_bounded_by_log_k(seed in any::<u64>(), k in 1usize..=6) {
        let mut rng = substream(seed, &[45]);
        let weights = random_weights(&mut rng, k);
        let h = latent_entropy(&weights).unwrap();
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (k as f64).ln() + 1e-12);
    }

    #[test]
    fn alert_decision_depends_only_on_window_multisets(
        seed in any::<u64>(),
        window in 1usize..=5,
        threshold in 0.005f64..0.5,
    ) {
        // A sequence of exactly two windows makes the scan visit a single
        // timestep, so shuffling each half must not change the outcome.
        let mut rng = substream(seed, &[46]);
        let len = 2 * window;
        let mut sequence: Vec<f64> =
            (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let config = AlertConfig {
            window,
            mc_threshold: threshold,
            min_gap: 5,
            start_t: len,
            mode: AlertMode::McSequence,
        };
        let baseline = detect_changes(&sequence, &config).unwrap();
        for _ in 0..4 {
            // Fisher-Yates inside each half.
            for half in 0..2 {
                let offset = half * window;
                for i in (1..window).rev() {
                    let j = rng.random_range(0..=i);
                    sequence.swap(offset + i, offset + j);
                }
            }
            let shuffled = detect_changes(&sequence, &config).unwrap();
            prop_assert_eq!(&shuffled, &baseline);
        }
    }

    #[test]
    fn alerts_respect_the_minimum_gap(
        seed in any::<u64>(),
        window in 1usize..=4,
        min_gap in 1usize..=8,
        len in 20usize..=80,
    ) {
        let mut rng = substream(seed, &[47]);
        // Noisy step mixture to provoke plenty of raw trigger points.
        let sequence: Vec<f64> = (0..len)
            .map(|i| if (i / 7) % 2 == 0 { 0.0 } else { 1.0 } + rng.random_range(-0.2..0.2))
            .collect();
        let config = AlertConfig {
            window,
            mc_threshold: 0.05,
            min_gap,
            start_t: 2 * window,
            mode: AlertMode::McSequence,
        };
        let alerts = detect_changes(&sequence, &config).unwrap();
        for pair in alerts.windows(2) {
            prop_assert!(pair[1] - pair[0] >= min_gap, "{:?}", alerts);
        }
    }

    #[test]
    fn far_matches_independent_set_arithmetic(
        seed in any::<u64>(),
        alert_count in 0usize..=12,
    ) {
        let mut rng = substream(seed, &[48]);
        let mut alerts: Vec<usize> = (0..alert_count)
            .map(|_| rng.random_range(10..=150))
            .collect();
        alerts.sort_unstable();
        alerts.dedup();
        let result = evaluate(&alerts, (51, 100), (10, 150), 5).unwrap();

        let accept: Vec<usize> = (51..=109).collect();
        let numerator = alerts.iter().filter(|t| !accept.contains(t)).count();
        let denominator = (10..=150).filter(|t| !accept.contains(t)).count();
        prop_assert!((result.far - numerator as f64 / denominator as f64).abs() < 1e-15);

        let t_star = alerts.iter().find(|&&t| (51..=100).contains(&t));
        let expected_delay = t_star.map(|&t| (t - 51).min(50)).unwrap_or(50);
        prop_assert_eq!(result.delay, expected_delay);
        prop_assert!(result.delay <= 50);
    }
}
