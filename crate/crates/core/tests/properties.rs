use proptest::prelude::*;
use ris_smdp::dynamics::successors;
use ris_smdp::rewards::uniformize_row;
use ris_smdp::solver::{greedy_policy, iteration_bound};
use ris_smdp::state_space::{count_states, enumerate_states, feasible_actions};
use ris_smdp::{Kernel, Model, Preset, ScenarioConfig};

fn small_config() -> impl Strategy<Value = ScenarioConfig> {
    (
        prop::collection::vec(1u32..=3, 1..=2),
        1u32..=2,
        0.1f64..10.0,
        0.5f64..10.0,
        0.0f64..2.0,
        0.0f64..1.0,
    )
        .prop_map(|(blocks, k, lambda_s, mu_s, lambda_m, mu_m)| {
            let k = k.min(*blocks.iter().min().unwrap());
            let mut cfg = ScenarioConfig::with_blocks(&blocks, k)
                .with_lambda_s(lambda_s)
                .with_lambda_m(lambda_m)
                .with_mu_m(mu_m);
            cfg.rates.mu_s = mu_s;
            cfg
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rows_are_stochastic(cfg in small_config()) {
        let space = enumerate_states(&cfg).unwrap();
        prop_assert_eq!(space.len() as u128, count_states(&cfg));
        let kernel = Kernel::build(&space, &cfg).unwrap();
        let rho = kernel.max_gamma();
        for s in 0..space.len() {
            let rows = kernel.rows_of(s);
            prop_assert_eq!(rows.len(), feasible_actions(&space.state(s), &cfg).len());
            for row in rows {
                let kr = kernel.row(&space, s, row);
                prop_assert!((kr.probability_sum() - 1.0).abs() < 1e-12);
                let direct = successors(s, &kr.action, &space, &cfg).unwrap();
                prop_assert_eq!(&direct.successors, &kr.successors);
                prop_assert_eq!(direct.gamma, kr.gamma);
                let bar = uniformize_row(&kr, rho).unwrap();
                let total: f64 = bar.iter().map(|x| x.1).sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
                prop_assert!(bar.iter().all(|x| x.1 >= 0.0));
            }
        }
    }

    #[test]
    fn residuals_contract_within_the_geometric_bound(cfg in small_config()) {
        let model = Model::build(&cfg).unwrap();
        let solution = model.solve().unwrap();
        let history = &solution.policy.meta.residual_history;
        for w in history.windows(2).skip(1) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-15);
        }
        let bound = iteration_bound(cfg.vi_tolerance, model.uniformized.discount, history[0]);
        prop_assert!(history.len() as f64 <= bound);
    }
}

#[test]
fn policy_is_stable_under_re_extraction() {
    for preset in [Preset::Scenario1, Preset::Scenario2] {
        for lambda_s in [1.0, 5.0, 10.0] {
            let model = Model::build(&preset.config().with_lambda_s(lambda_s)).unwrap();
            let solution = model.solve().unwrap();
            let again = greedy_policy(
                &model.space,
                &model.kernel,
                &model.uniformized,
                &solution.values,
            );
            assert_eq!(
                (0..model.space.len())
                    .map(|s| again.row(s))
                    .collect::<Vec<_>>(),
                (0..model.space.len())
                    .map(|s| solution.policy.row(s))
                    .collect::<Vec<_>>()
            );
        }
    }
}

#[test]
fn blocking_grows_with_load_and_failure_rate() {
    for preset in [Preset::Scenario1, Preset::Scenario2] {
        let mut last = -1.0;
        for lambda_s in 1..=10 {
            let cfg = preset.config().with_lambda_s(lambda_s as f64);
            let a = ris_smdp::analyze(&cfg).unwrap();
            let b = a.evaluation.metrics.blocking_prob;
            assert!(b >= last - 1e-12, "{preset} λs={lambda_s}: {b} < {last}");
            last = b;
        }
        let mut last = -1.0;
        for mu_m in [0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5] {
            let cfg = preset.config().with_mu_m(mu_m);
            let a = ris_smdp::analyze(&cfg).unwrap();
            let b = a.evaluation.metrics.blocking_prob;
            assert!(b >= last - 1e-12, "{preset} μm={mu_m}: {b} < {last}");
            last = b;
        }
    }
}
