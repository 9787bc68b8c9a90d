use proptest::prelude::*;

use dgest::algorithms::{run_trajectory, AlgorithmKind, AlgorithmSpec, Scenario, TauInit};
use dgest::analysis::{bound_inputs_from, error_bound};
use dgest::graphs::{column_sums, DirectedGraph, GraphSequence, WeightMatrix};
use dgest::models::{AgentProfile, Population};

fn arb_graph(max_n: usize) -> impl Strategy<Value = DirectedGraph> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..(n * n + 1))
            .prop_map(move |edges| DirectedGraph::new(n, edges).unwrap())
    })
}

fn arb_population(n: usize) -> impl Strategy<Value = Population> {
    prop::collection::vec((-10.0..10.0f64, 0.05..20.0f64, -10.0..10.0f64), n).prop_map(|rows| {
        let profiles = rows
            .into_iter()
            .map(|(t, p, i)| AgentProfile::new(t, p, i).unwrap())
            .collect();
        Population::new(profiles).unwrap()
    })
}

/// Strongly connected graph: a directed ring plus random extra edges.
fn arb_connected(max_n: usize) -> impl Strategy<Value = DirectedGraph> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..(2 * n)).prop_map(move |extra| {
            let ring = (0..n).map(|i| (i, (i + 1) % n));
            DirectedGraph::new(n, ring.chain(extra)).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn push_sum_matrix_is_column_stochastic(g in arb_graph(12)) {
        let a = WeightMatrix::from_graph(&g);
        for s in column_sums(a.entries()).iter() {
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
        for i in 0..g.n() {
            prop_assert!(a.get(i, i) > 0.0);
            for j in 0..g.n() {
                if i != j && !g.has_edge(j, i) {
                    prop_assert_eq!(a.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn regular_graphs_give_doubly_stochastic_weights(n in 2usize..12, hop in 1usize..5) {
        let g = DirectedGraph::new(n, (0..n).map(|i| (i, (i + hop) % n))).unwrap();
        prop_assume!(g.is_regular());
        prop_assert!(WeightMatrix::from_graph(&g).is_doubly_stochastic());
    }

    #[test]
    fn noiseless_runs_respect_the_bound(
        (g, pop) in arb_connected(7).prop_flat_map(|g| {
            let n = g.n();
            (Just(g), arb_population(n))
        })
    ) {
        let scenario = Scenario {
            graphs: GraphSequence::fixed(g),
            population: pop,
            horizon: 400,
            noise_enabled: false,
        };
        let b = bound_inputs_from(&scenario.population, &scenario.graphs.constants());
        let star = scenario.population.optimal_theta();
        let spec = AlgorithmSpec::new(AlgorithmKind::Proposed);
        let record = run_trajectory(&scenario, &spec, 0, 0).unwrap();
        for k in 1..record.steps() {
            let bound = error_bound(k, &b).unwrap();
            for &theta in record.theta_row(k) {
                prop_assert!((theta - star).abs() <= bound);
            }
        }
    }

    #[test]
    fn total_precision_grows_linearly(
        (g, pop) in arb_graph(8).prop_flat_map(|g| {
            let n = g.n();
            (Just(g), arb_population(n))
        }),
        seed in any::<u64>(),
    ) {
        let scenario = Scenario {
            graphs: GraphSequence::fixed(g),
            population: pop,
            horizon: 200,
            noise_enabled: true,
        };
        let spec = AlgorithmSpec::new(AlgorithmKind::Proposed).with_tau_init(TauInit::Zero);
        let record = run_trajectory(&scenario, &spec, seed, 0).unwrap();
        let per_step = scenario.population.total_precision();
        for k in 0..record.steps() {
            let total: f64 = record.tau_row(k).iter().sum();
            let expected = k as f64 * per_step;
            prop_assert!((total - expected).abs() <= 1e-9 * expected.max(1.0));
        }
    }

    #[test]
    fn same_seed_same_trajectory(seed in any::<u64>(), trial in 0u32..1000) {
        let scenario = Scenario {
            graphs: GraphSequence::fixed(DirectedGraph::undirected(5, (0..4).map(|i| (i, i + 1))).unwrap()),
            population: Population::hetero_variance(5, 1.0, 0.0).unwrap(),
            horizon: 30,
            noise_enabled: true,
        };
        for kind in [AlgorithmKind::Proposed, AlgorithmKind::Biau, AlgorithmKind::Lwr] {
            let spec = AlgorithmSpec::new(kind);
            let a = run_trajectory(&scenario, &spec, seed, trial).unwrap();
            let b = run_trajectory(&scenario, &spec, seed, trial).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
