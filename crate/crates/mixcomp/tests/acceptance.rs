//! Acceptance suite: every release-gating behavior of the library, each
//! printing one PASS/FAIL line (run with `-- --nocapture` to see them all).

mod common;

use std::time::Instant;

use mixcomp::data::{gen_imbalance_gaussian, gen_move_gaussian, StreamSpec};
use mixcomp::decomp::{decompose, Hierarchy};
use mixcomp::detect::{detect_changes, evaluate, AlertConfig, AlertMode};
use mixcomp::em::{refine_weights, FitConfig, FreeParamCount};
use mixcomp::mixture::{mc, GaussianComponent, MixtureModel, WeightedDataset};
use mixcomp::rng::substream;
use mixcomp::sdms::{change_code_length, track_mc, SdmsConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn report(name: &str, started: Instant, failures: &[String]) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("{status} {name} ({:.2}s)", started.elapsed().as_secs_f64());
    for failure in failures {
        println!("  - {failure}");
    }
    assert!(failures.is_empty(), "{name}: {} failure(s): {failures:#?}", failures.len());
}

fn random_spd(rng: &mut ChaCha8Rng, dim: usize, ridge: f64) -> Vec<f64> {
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
        cov[i * dim + i] += ridge;
    }
    cov
}

fn random_weights(rng: &mut ChaCha8Rng, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(floor..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

// ---------------------------------------------------------------------------
// 1. Estimator identities, bounds, and representation invariance
// ---------------------------------------------------------------------------

#[test]
fn a1_mc_identities_bounds_and_invariance() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = substream(101, &[1]);

    for case in 0..200u64 {
        let k = 1 + (case % 5) as usize;
        let dim = 1 + (case % 3) as usize;

        // Identical components: MC vanishes for any weights and data.
        {
            let n = 1 + rng.random_range(0..50);
            let component =
                GaussianComponent::new(
                    (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect(),
                    random_spd(&mut rng, dim, 0.4),
                )
                .unwrap();
            let model = MixtureModel::new(
                random_weights(&mut rng, k, 0.01),
                vec![component; k],
            )
            .unwrap();
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.random_range(-6.0..6.0)).collect())
                .collect();
            let data = WeightedDataset::from_rows(rows).unwrap();
            let value = mc(&model, &data).unwrap();
            if value.abs() > 1e-12 {
                failures.push(format!("case {case}: identical components mc = {value:e}"));
            }
        }

        // Fully separated, balanced: MC equals log K.
        {
            let per = 1 + rng.random_range(0..(50 / k));
            let mut components = Vec::new();
            let mut rows = Vec::new();
            for j in 0..k {
                let mut mean = vec![0.0; dim];
                mean[0] = 150.0 * j as f64;
                for _ in 0..per {
                    rows.push(
                        mean.iter()
                            .map(|&m| m + rng.sample::<f64, _>(StandardNormal))
                            .collect::<Vec<f64>>(),
                    );
                }
                components.push(GaussianComponent::isotropic(mean, 1.0).unwrap());
            }
            let model =
                MixtureModel::new(vec![1.0 / k as f64; k], components).unwrap();
            let data = WeightedDataset::from_rows(rows).unwrap();
            let value = mc(&model, &data).unwrap();
            if (value - (k as f64).ln()).abs() > 1e-6 {
                failures.push(format!(
                    "case {case}: separated balanced mc = {value}, expected ln {k}"
                ));
            }
        }

        // Likelihood-maximizing weights put MC inside [0, log K].
        {
            let n = k.max(3) + rng.random_range(0..40);
            let components: Vec<_> = (0..k)
                .map(|_| {
                    GaussianComponent::new(
                        (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect(),
                        random_spd(&mut rng, dim, 0.4),
                    )
                    .unwrap()
                })
                .collect();
            let seed_model =
                MixtureModel::new(vec![1.0 / k as f64; k], components).unwrap();
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.random_range(-4.0..4.0)).collect())
                .collect();
            let data = WeightedDataset::from_rows(rows).unwrap();
            let optimized = refine_weights(&seed_model, &data, 5000, 1e-13).unwrap();
            let value = mc(&optimized, &data).unwrap();
            if value < -1e-9 || value > (k as f64).ln() + 1e-9 {
                failures.push(format!(
                    "case {case}: optimized-weight mc = {value} outside [0, ln {k}]"
                ));
            }
        }

        // Splitting a component and appending a zero-weight one changes
        // nothing.
        {
            let n = 1 + rng.random_range(0..30);
            let components: Vec<_> = (0..k)
                .map(|_| {
                    GaussianComponent::new(
                        (0..dim).map(|_| rng.random_range(-4.0..4.0)).collect(),
                        random_spd(&mut rng, dim, 0.4),
                    )
                    .unwrap()
                })
                .collect();
            let weights = random_weights(&mut rng, k, 0.05);
            let model = MixtureModel::new(weights.clone(), components.clone()).unwrap();
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect())
                .collect();
            let data = WeightedDataset::from_rows(rows).unwrap();
            let before = mc(&model, &data).unwrap();

            let lambda: f64 = rng.random_range(0.05..0.95);
            let split = rng.random_range(0..k);
            let mut new_weights = Vec::new();
            let mut new_components = Vec::new();
            for j in 0..k {
                if j == split {
                    new_weights.push(lambda * weights[j]);
                    new_components.push(components[j].clone());
                    new_weights.push((1.0 - lambda) * weights[j]);
                    new_components.push(components[j].clone());
                } else {
                    new_weights.push(weights[j]);
                    new_components.push(components[j].clone());
                }
            }
            new_weights.push(0.0);
            new_components.push(components[0].clone());
            let rewritten = MixtureModel::new(new_weights, new_components).unwrap();
            let after = mc(&rewritten, &data).unwrap();
            if (before - after).abs() > 1e-12 {
                failures.push(format!(
                    "case {case}: split/append moved mc by {:e}",
                    before - after
                ));
            }
        }
    }

    if started.elapsed().as_secs_f64() >= 10.0 {
        failures.push(format!("runtime {:.2}s exceeds 10s", started.elapsed().as_secs_f64()));
    }
    report("mc identities, bounds, and invariance (200 randomized cases)", started, &failures);
}

// ---------------------------------------------------------------------------
// 2. Decomposition additivity
// ---------------------------------------------------------------------------

#[test]
fn a2_decomposition_additivity() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = substream(202, &[1]);

    for case in 0..200u64 {
        let k = 1 + (case % 5) as usize;
        let dim = 1 + (case % 2) as usize;
        let l = 1 + rng.random_range(0..4usize);
        let n = 5 + rng.random_range(0..36);

        let components: Vec<_> = (0..k)
            .map(|_| {
                GaussianComponent::new(
                    (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect(),
                    random_spd(&mut rng, dim, 0.4),
                )
                .unwrap()
            })
            .collect();
        let model =
            MixtureModel::new(random_weights(&mut rng, k, 0.02), components).unwrap();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-6.0..6.0)).collect())
            .collect();
        let data = if case % 3 == 0 {
            let weights = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
            WeightedDataset::from_rows_weighted(rows, weights).unwrap()
        } else {
            WeightedDataset::from_rows(rows).unwrap()
        };

        // Random row-stochastic assignment; sometimes hard rows, sometimes
        // an entirely unused group (zero upper weight).
        let dead_group = if l > 1 && case % 5 == 0 { Some(rng.random_range(0..l)) } else { None };
        let hierarchy = Hierarchy::new(
            (0..k)
                .map(|_| {
                    let mut row = vec![0.0; l];
                    if case % 4 == 0 {
                        let mut g = rng.random_range(0..l);
                        while Some(g) == dead_group {
                            g = rng.random_range(0..l);
                        }
                        row[g] = 1.0;
                    } else {
                        let mut sum = 0.0;
                        for (g, value) in row.iter_mut().enumerate() {
                            if Some(g) != dead_group {
                                *value = rng.random_range(0.01..1.0);
                                sum += *value;
                            }
                        }
                        for value in &mut row {
                            *value /= sum;
                        }
                    }
                    row
                })
                .collect(),
        )
        .unwrap();

        let result = match decompose(&model, &data, &hierarchy) {
            Ok(result) => result,
            Err(err) => {
                failures.push(format!("case {case}: decompose failed: {err}"));
                continue;
            }
        };
        let reconstructed: f64 =
            result.mc_interaction + result.contributions.iter().sum::<f64>();
        if (result.mc_total - reconstructed).abs() > 1e-9 {
            failures.push(format!(
                "case {case}: additivity off by {:e}",
                result.mc_total - reconstructed
            ));
        }
        for g in 0..l {
            if result.contributions[g] != result.weights[g] * result.mc_components[g] {
                failures.push(format!("case {case}: contribution {g} is not W x mc"));
            }
        }
    }

    // A two-pair layout reproduces the identity pattern of the published
    // table: a between-pair term plus per-pair mass-weighted terms.
    {
        let model = MixtureModel::new(
            vec![0.3, 0.2, 0.3, 0.2],
            vec![
                GaussianComponent::isotropic(vec![0.0, 0.0], 1.0).unwrap(),
                GaussianComponent::isotropic(vec![2.0, 0.0], 1.0).unwrap(),
                GaussianComponent::isotropic(vec![10.0, 1.0], 1.0).unwrap(),
                GaussianComponent::isotropic(vec![12.0, 1.0], 1.0).unwrap(),
            ],
        )
        .unwrap();
        let mut rng = substream(202, &[2]);
        let mut rows = Vec::new();
        for mean in [[0.0, 0.0], [2.0, 0.0], [10.0, 1.0], [12.0, 1.0]] {
            for _ in 0..120 {
                rows.push(vec![
                    mean[0] + rng.sample::<f64, _>(StandardNormal),
                    mean[1] + rng.sample::<f64, _>(StandardNormal),
                ]);
            }
        }
        let data = WeightedDataset::from_rows(rows).unwrap();
        let hierarchy = Hierarchy::new(vec![
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let result = decompose(&model, &data, &hierarchy).unwrap();
        let reconstructed: f64 =
            result.mc_interaction + result.contributions.iter().sum::<f64>();
        if (result.mc_total - reconstructed).abs() > 1e-9 {
            failures.push("two-pair layout: additivity identity broken".into());
        }
        for g in 0..2 {
            if result.contributions[g] != result.weights[g] * result.mc_components[g] {
                failures.push(format!("two-pair layout: contribution {g} is not W x mc"));
            }
            if !(result.mc_components[g] > 0.0 && result.weights[g] > 0.0) {
                failures.push(format!("two-pair layout: group {g} degenerate"));
            }
        }
        if !(result.mc_interaction > 0.0 && result.mc_total > result.mc_interaction) {
            failures.push("two-pair layout: interaction term implausible".into());
        }
    }

    if started.elapsed().as_secs_f64() >= 10.0 {
        failures.push(format!("runtime {:.2}s exceeds 10s", started.elapsed().as_secs_f64()));
    }
    report("decomposition additivity (200 randomized triples)", started, &failures);
}

// ---------------------------------------------------------------------------
// 3. True-parameter drift curves
// ---------------------------------------------------------------------------

#[test]
fn a3_true_parameter_drift_curves() {
    let started = Instant::now();
    let mut failures = Vec::new();

    let iso2 = |mean: [f64; 2]| {
        GaussianComponent::with_regularization(
            mean.to_vec(),
            vec![1.0, 0.0, 0.0, 1.0],
            0.0,
        )
        .unwrap()
    };

    // One seed's worth of shared standard-normal draws for all sweep points.
    let mut rng = substream(303, &[2]);
    let draws: Vec<[f64; 2]> = (0..600)
        .map(|_| [rng.sample(StandardNormal), rng.sample(StandardNormal)])
        .collect();

    // Overlap sweep: the second component walks away from the first.
    let mut previous = f64::NEG_INFINITY;
    let mut first = f64::NAN;
    let mut last = f64::NAN;
    for step in 0..=10 {
        let alpha = 0.6 * step as f64;
        let rows: Vec<Vec<f64>> = draws
            .iter()
            .enumerate()
            .map(|(i, z)| if i < 300 { vec![z[0], z[1]] } else { vec![z[0] + alpha, z[1]] })
            .collect();
        let model =
            MixtureModel::new(vec![0.5, 0.5], vec![iso2([0.0, 0.0]), iso2([alpha, 0.0])])
                .unwrap();
        let value =
            mc(&model, &WeightedDataset::from_rows(rows).unwrap()).unwrap().exp();
        if value < previous {
            failures.push(format!("overlap sweep decreases at alpha = {alpha}"));
        }
        previous = value;
        if step == 0 {
            first = value;
        }
        last = value;
    }
    if (first - 1.0).abs() > 0.01 {
        failures.push(format!("overlap sweep starts at {first}, expected 1.00 (+-0.01)"));
    }
    if last < 1.95 {
        failures.push(format!("overlap sweep ends at {last}, expected >= 1.95"));
    }
    if (last - 2.0).abs() > 0.05 {
        failures.push(format!("overlap sweep endpoint {last} not within 0.05 of 2.0"));
    }

    // Imbalance sweep: probability mass drains from the far component.
    let mut previous = f64::INFINITY;
    let mut first = f64::NAN;
    let mut last = f64::NAN;
    for step in 0..=10 {
        let alpha = 30 * step;
        let rows: Vec<Vec<f64>> = draws
            .iter()
            .enumerate()
            .map(|(i, z)| {
                if i < 300 + alpha {
                    vec![z[0], z[1]]
                } else {
                    vec![z[0] + 6.0, z[1]]
                }
            })
            .collect();
        let w1 = (300 + alpha) as f64 / 600.0;
        let model = MixtureModel::new(
            vec![w1, 1.0 - w1],
            vec![iso2([0.0, 0.0]), iso2([6.0, 0.0])],
        )
        .unwrap();
        let value =
            mc(&model, &WeightedDataset::from_rows(rows).unwrap()).unwrap().exp();
        if value > previous {
            failures.push(format!("imbalance sweep increases at alpha = {alpha}"));
        }
        previous = value;
        if step == 0 {
            first = value;
        }
        last = value;
    }
    if first < 1.95 {
        failures.push(format!("imbalance sweep starts at {first}, expected about 2.0"));
    }
    if (last - 1.0).abs() > 0.01 {
        failures.push(format!("imbalance sweep ends at {last}, expected 1.00 (+-0.01)"));
    }

    if started.elapsed().as_secs_f64() >= 5.0 {
        failures.push(format!("runtime {:.2}s exceeds 5s", started.elapsed().as_secs_f64()));
    }
    report("true-parameter drift curves (overlap up, imbalance down)", started, &failures);
}

// ---------------------------------------------------------------------------
// 4. Log-space implementation vs direct-summation oracle
// ---------------------------------------------------------------------------

#[test]
fn a4_log_space_matches_direct_oracle() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = substream(404, &[1]);

    for case in 0..50u64 {
        let k = 2 + (case % 3) as usize;
        let dim = 1 + (case % 3) as usize;
        let n = 10 + rng.random_range(0..21);

        let mut raw = common::RawMixture {
            weights: random_weights(&mut rng, k, 0.15),
            means: Vec::new(),
            covs: Vec::new(),
        };
        for j in 0..k {
            let mut mean: Vec<f64> =
                (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            mean[0] += 2.5 * j as f64;
            raw.means.push(mean);
            raw.covs.push(random_spd(&mut rng, dim, 1.0));
        }
        let components: Vec<_> = raw
            .means
            .iter()
            .zip(&raw.covs)
            .map(|(mean, cov)| {
                GaussianComponent::with_regularization(mean.clone(), cov.clone(), 0.0)
                    .unwrap()
            })
            .collect();
        let model = MixtureModel::new(raw.weights.clone(), components).unwrap();

        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let j = rng.random_range(0..k);
                raw.means[j]
                    .iter()
                    .map(|&m| m + 1.5 * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let data = WeightedDataset::from_rows(rows.clone()).unwrap();

        let implementation = mc(&model, &data).unwrap();
        let oracle = common::naive_mc(&raw, &rows, None);
        let relative = (implementation - oracle).abs() / oracle.abs().max(1e-3);
        if relative > 1e-10 {
            failures.push(format!(
                "case {case}: relative error {relative:e} ({implementation} vs {oracle})"
            ));
        }
    }

    report("log-space mc vs direct-summation oracle (50 instances)", started, &failures);
}

// ---------------------------------------------------------------------------
// 5. Sampled MC vs quadrature of the mutual information
// ---------------------------------------------------------------------------

#[test]
fn a5_sampled_mc_matches_quadrature() {
    let started = Instant::now();
    let mut failures = Vec::new();

    let weights = [0.5, 0.5];
    let means = [0.0, 3.0];
    let variances = [1.0, 1.0];
    let oracle = common::quadrature_mutual_information_1d(
        &weights, &means, &variances, -9.0, 12.0, 42_000,
    );

    let model = MixtureModel::new(
        weights.to_vec(),
        means
            .iter()
            .map(|&m| {
                GaussianComponent::with_regularization(vec![m], vec![1.0], 0.0).unwrap()
            })
            .collect(),
    )
    .unwrap();
    let mut rng = substream(505, &[1]);
    let rows: Vec<Vec<f64>> = (0..100_000)
        .map(|_| {
            let j = if rng.random::<f64>() < weights[0] { 0 } else { 1 };
            vec![means[j] + rng.sample::<f64, _>(StandardNormal)]
        })
        .collect();
    let data = WeightedDataset::from_rows(rows).unwrap();
    let sampled = mc(&model, &data).unwrap();

    if (sampled - oracle).abs() > 0.01 {
        failures.push(format!(
            "sampled mc {sampled} vs quadrature {oracle} (|diff| = {})",
            (sampled - oracle).abs()
        ));
    }
    report(
        &format!("sampled mc vs quadrature ({sampled:.4} vs {oracle:.4}, 1e5 draws)"),
        started,
        &failures,
    );
}

// ---------------------------------------------------------------------------
// 6. Stream change detection: MC alerts beat size alerts
// ---------------------------------------------------------------------------

struct ExperimentScores {
    delay_mc: f64,
    far_mc: f64,
    delay_k: f64,
    far_k: f64,
}

fn run_detection(seed: u64, imbalance: bool, reversed: bool) -> ExperimentScores {
    let spec = StreamSpec { rng_seed: seed, reversed, ..Default::default() };
    let stream = if imbalance {
        gen_imbalance_gaussian::<f64>(&spec).unwrap()
    } else {
        gen_move_gaussian::<f64>(&spec).unwrap()
    };
    let config = SdmsConfig {
        param_count: FreeParamCount::Standard,
        fit: FitConfig { rng_seed: seed, ..FitConfig::default() },
        ..SdmsConfig::default()
    };
    let track = track_mc(&stream, &config).unwrap();
    let mc_alerts =
        detect_changes(&track.mc_sequence(), &AlertConfig::new(AlertMode::McSequence)).unwrap();
    let k_alerts =
        detect_changes(&track.k_sequence(), &AlertConfig::new(AlertMode::KSequence)).unwrap();
    let mc_eval = evaluate(&mc_alerts, (51, 100), (10, 150), 5).unwrap();
    let k_eval = evaluate(&k_alerts, (51, 100), (10, 150), 5).unwrap();
    ExperimentScores {
        delay_mc: mc_eval.delay as f64,
        far_mc: mc_eval.far,
        delay_k: k_eval.delay as f64,
        far_k: k_eval.far,
    }
}

#[test]
fn a6_stream_detection_mc_beats_size_tracking() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let seeds: Vec<u64> = (0..10).collect();

    let mut summaries = Vec::new();
    for &(name, imbalance, reversed, required_lead) in
        &[("imbalance forward", true, false, 20.0), ("move reverse", false, true, 5.0)]
    {
        let mut mean_delay_mc = 0.0;
        let mut mean_far_mc = 0.0;
        let mut mean_delay_k = 0.0;
        let mut mean_far_k = 0.0;
        for &seed in &seeds {
            let scores = run_detection(seed, imbalance, reversed);
            println!(
                "  {name} seed {seed}: delay mc={} k={} far mc={:.4} k={:.4}",
                scores.delay_mc, scores.delay_k, scores.far_mc, scores.far_k
            );
            mean_delay_mc += scores.delay_mc;
            mean_far_mc += scores.far_mc;
            mean_delay_k += scores.delay_k;
            mean_far_k += scores.far_k;
        }
        let n = seeds.len() as f64;
        mean_delay_mc /= n;
        mean_far_mc /= n;
        mean_delay_k /= n;
        mean_far_k /= n;
        summaries.push(format!(
            "{name}: delay mc={mean_delay_mc:.1} vs k={mean_delay_k:.1}, \
             far mc={mean_far_mc:.4} vs k={mean_far_k:.4}"
        ));
        if mean_delay_mc > mean_delay_k - required_lead {
            failures.push(format!(
                "{name}: mean delay mc {mean_delay_mc:.1} not <= mean delay k \
                 {mean_delay_k:.1} - {required_lead}"
            ));
        }
        if mean_far_mc > 0.05 {
            failures.push(format!("{name}: mean far mc {mean_far_mc:.4} exceeds 0.05"));
        }
    }

    if started.elapsed().as_secs_f64() >= 1800.0 {
        failures.push(format!(
            "runtime {:.0}s exceeds the 30-minute budget",
            started.elapsed().as_secs_f64()
        ));
    }
    report(
        &format!("stream change detection over 10 seeds [{}]", summaries.join("; ")),
        started,
        &failures,
    );
}

// ---------------------------------------------------------------------------
// 7. Sequential selection structural laws
// ---------------------------------------------------------------------------

#[test]
fn a7_sequential_selection_structural_laws() {
    let started = Instant::now();
    let mut failures = Vec::new();

    let config = SdmsConfig::<f64> {
        param_count: FreeParamCount::Standard,
        fit: FitConfig { rng_seed: 7, restarts: 5, ..FitConfig::default() },
        ..SdmsConfig::default()
    };

    // Spot change code lengths under the defaults (k_max = 10, beta 0.01).
    let spot = [
        (change_code_length(3, None, &config).unwrap(), 10.0f64.ln(), "uniform start"),
        (change_code_length(5, Some(5), &config).unwrap(), -(0.99f64.ln()), "stay interior"),
        (change_code_length(4, Some(5), &config).unwrap(), -(0.005f64.ln()), "change"),
        (change_code_length(10, Some(10), &config).unwrap(), -(0.995f64.ln()), "stay boundary"),
    ];
    for (value, expected, what) in spot {
        if (value - expected).abs() > 1e-12 {
            failures.push(format!("change code length ({what}): {value} vs {expected}"));
        }
    }

    let spec = StreamSpec { t_count: 100, n_per_t: 150, rng_seed: 7, ..Default::default() };
    let stream = gen_imbalance_gaussian::<f64>(&spec).unwrap();
    let track = track_mc(&stream, &config).unwrap();

    let mut k_prev: Option<usize> = None;
    for step in &track.steps {
        if let Some(previous) = k_prev {
            let jump = step.selected_k as i64 - previous as i64;
            if jump.abs() > 1 {
                failures.push(format!("t = {}: size jumped by {jump}", step.t));
            }
        }
        let change = change_code_length(step.selected_k, k_prev, &config).unwrap();
        let score = step.fitted.criterion_score.expect("selection stores its score");
        if step.total_cost != score + change {
            failures.push(format!(
                "t = {}: cost {} != score {score} + change {change}",
                step.t, step.total_cost
            ));
        }
        if step.mc < -1e-9 || step.mc > (step.selected_k as f64).ln() + 1e-9 {
            failures.push(format!(
                "t = {}: mc {} outside [0, ln {}]",
                step.t, step.mc, step.selected_k
            ));
        }
        k_prev = Some(step.selected_k);
    }

    report("sequential selection structural laws (100 tracked steps)", started, &failures);
}

// ---------------------------------------------------------------------------
// 8. Detection arithmetic fixtures
// ---------------------------------------------------------------------------

#[test]
fn a8_detection_arithmetic_fixtures() {
    let started = Instant::now();
    let mut failures = Vec::new();

    // Hand-simulated step sequence: the only alert is t = 53.
    let mut sequence = vec![1.0f64; 50];
    sequence.extend(vec![2.0f64; 100]);
    let alerts =
        detect_changes(&sequence, &AlertConfig::new(AlertMode::McSequence)).unwrap();
    if alerts != vec![53] {
        failures.push(format!("step sequence alerts {alerts:?}, expected [53]"));
    }

    // Integer mode: single flip at t = 63 for a change at t = 61.
    let mut ks = vec![2.0f64; 60];
    ks.extend(vec![3.0f64; 90]);
    let alerts = detect_changes(&ks, &AlertConfig::new(AlertMode::KSequence)).unwrap();
    if alerts != vec![63] {
        failures.push(format!("size sequence alerts {alerts:?}, expected [63]"));
    }

    // Evaluation fixtures.
    let r = evaluate(&[51], (51, 100), (10, 150), 5).unwrap();
    if r.delay != 0 || r.far != 0.0 {
        failures.push(format!("alerts {{51}}: delay {} far {}", r.delay, r.far));
    }
    let r = evaluate(&[], (51, 100), (10, 150), 5).unwrap();
    if r.delay != 50 || r.far != 0.0 {
        failures.push(format!("no alerts: delay {} far {}", r.delay, r.far));
    }
    let r = evaluate(&[30, 60], (51, 100), (10, 150), 5).unwrap();
    if r.delay != 9 {
        failures.push(format!("alerts {{30, 60}}: delay {}", r.delay));
    }
    if (r.far - 1.0 / 82.0).abs() > 1e-15 {
        failures.push(format!("alerts {{30, 60}}: far {} != 1/82", r.far));
    }

    report("detection arithmetic fixtures", started, &failures);
}
