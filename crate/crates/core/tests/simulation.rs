use ris_smdp::simulator::{simulate, visit_distribution, SimConfig};
use ris_smdp::{Model, Policy, Preset, ScenarioConfig};

fn within_sigmas(model: &Model, policy: &Policy, sim: &SimConfig, sigmas: f64) -> Vec<usize> {
    let eval = model.evaluate(policy).unwrap();
    let report = simulate(&model.cfg, &model.space, &model.kernel, policy, sim).unwrap();
    let visits = visit_distribution(&report).unwrap();
    (0..model.space.len())
        .filter(|&s| {
            let diff = (visits.frequency[s] - eval.steady.pi[s]).abs();
            diff > sigmas * visits.std_error[s] && diff > 0.0
        })
        .collect()
}

#[test]
fn toy_instance_visits_match_stationary_law() {
    let cfg = ScenarioConfig::with_blocks(&[1], 1)
        .with_lambda_s(3.0)
        .with_mu_m(0.4);
    let model = Model::build(&cfg).unwrap();
    assert_eq!(model.space.len(), 10);
    let solution = model.solve().unwrap();
    let bad = within_sigmas(
        &model,
        &solution.policy,
        &SimConfig::new(1_000_000, 11, 10),
        3.0,
    );
    assert!(bad.is_empty(), "states outside 3σ: {bad:?}");
}

#[test]
fn visit_frequencies_sum_to_one() {
    let model = Model::build(&Preset::Scenario1.config().with_lambda_s(5.0)).unwrap();
    let solution = model.solve().unwrap();
    let report = simulate(
        &model.cfg,
        &model.space,
        &model.kernel,
        &solution.policy,
        &SimConfig::new(100_000, 2, 3),
    )
    .unwrap();
    let visits = visit_distribution(&report).unwrap();
    assert!((visits.frequency.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn littles_law_on_failure_free_single_block_system() {
    let cfg = ScenarioConfig::with_blocks(&[3], 1)
        .with_lambda_s(4.0)
        .with_mu_m(0.0);
    let model = Model::build(&cfg).unwrap();
    let policy = Policy::first_fit(&model.kernel);
    let report = simulate(
        &model.cfg,
        &model.space,
        &model.kernel,
        &policy,
        &SimConfig::new(400_000, 5, 10),
    )
    .unwrap();
    let effective = cfg.rates.lambda_s * report.acceptance.mean;
    let expected = effective / cfg.rates.mu_s;
    let est = report.mean_services;
    // the acceptance estimate carries its own error, so widen by its CI
    let slack = est.half_width + cfg.rates.lambda_s * report.acceptance.half_width / cfg.rates.mu_s;
    assert!(
        (est.mean - expected).abs() <= slack,
        "{} vs {expected} ± {slack}",
        est.mean
    );
    assert_eq!(report.counts.failures, 0);
    assert_eq!(report.counts.transfers, 0);
}

#[test]
fn replications_respect_capacity_and_flow_balance() {
    for (blocks, k) in [(vec![2, 3], 2), (vec![5], 1), (vec![1, 2], 1)] {
        let cfg = ScenarioConfig::with_blocks(&blocks, k)
            .with_lambda_s(7.0)
            .with_mu_m(0.5);
        let model = Model::build(&cfg).unwrap();
        let solution = model.solve().unwrap();
        let report = simulate(
            &model.cfg,
            &model.space,
            &model.kernel,
            &solution.policy,
            &SimConfig::new(50_000, 9, 4),
        )
        .unwrap();
        let c = report.counts;
        assert_eq!(c.accepts + c.rejects, c.arrivals);
        for rep in &report.replications {
            assert!(rep.counts.departures <= rep.counts.accepts + rep.services_at_warmup as u64);
            assert_eq!(
                rep.final_services as u64 + rep.counts.departures,
                rep.services_at_warmup as u64 + rep.counts.accepts
            );
            for (i, &n) in blocks.iter().enumerate() {
                assert!(rep.peak_occupied_blocks[i] <= n);
                assert!(rep.min_availability[i] <= n);
            }
        }
    }
}

#[test]
fn cross_check_against_analytic_metrics() {
    let model = Model::build(&Preset::Scenario1.config().with_lambda_s(8.0)).unwrap();
    let solution = model.solve().unwrap();
    let eval = model.evaluate(&solution.policy).unwrap();
    let report = simulate(
        &model.cfg,
        &model.space,
        &model.kernel,
        &solution.policy,
        &SimConfig::new(300_000, 21, 10),
    )
    .unwrap();
    // 1.6 × the 95% half-width is about 3.6 standard errors at 9 degrees of freedom
    let m = eval.metrics;
    assert!((report.blocking.mean - m.blocking_prob).abs() <= 1.6 * report.blocking.half_width);
    assert!(
        (report.avg_reward_transition.mean - m.avg_reward_per_transition).abs()
            <= 1.6 * report.avg_reward_transition.half_width
    );
    assert!(
        (report.avg_reward_time.mean - m.avg_reward_per_time).abs()
            <= 1.6 * report.avg_reward_time.half_width
    );
}
