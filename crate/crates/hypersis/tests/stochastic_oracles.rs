//! Cross-checks the exact configuration chain against a per-node product
//! oracle built straight from the edge list, and the Monte Carlo sampler
//! against the exact marginals.

use hypersis::dynamics::SisParams;
use hypersis::hypergraph::{DirectedHypergraph, Hyperedge};
use hypersis::stochastic::{monte_carlo, AgentModel, ExactChain};
use hypersis::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn small_instance(rng: &mut ChaCha12Rng, n: usize) -> (DirectedHypergraph, SisParams) {
    let mut edges = Vec::new();
    for i in 0..n {
        edges.push(Hyperedge {
            tail: i,
            heads: vec![(i + 1) % n],
            weight: rng.gen_range(0.3..1.0),
        });
    }
    for _ in 0..n {
        let tail = rng.gen_range(0..n);
        let a = (tail + 1 + rng.gen_range(0..n - 1)) % n;
        let mut b = (tail + 1 + rng.gen_range(0..n - 1)) % n;
        if b == a {
            b = (a + 1) % n;
            if b == tail {
                b = (b + 1) % n;
            }
        }
        edges.push(Hyperedge {
            tail,
            heads: vec![a, b],
            weight: rng.gen_range(0.3..1.0),
        });
    }
    let hg = DirectedHypergraph::new(n, edges).unwrap();
    let delta: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..0.8)).collect();
    let mu2: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..0.6)).collect();
    let mu3: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..0.6)).collect();
    let p = SisParams::from_hypergraph(&hg, delta, &mu2, &mu3, 0.1).unwrap();
    (hg, p)
}

/// Per-node infection probability after one step from configuration `s`,
/// computed from the raw rate tensors with indicator arithmetic.
fn next_probs_oracle(p: &SisParams, s: usize) -> Vec<f64> {
    let n = p.n();
    let bit = |i: usize| (s >> i) & 1 == 1;
    (0..n)
        .map(|i| {
            if bit(i) {
                1.0 - p.h() * p.delta()[i]
            } else {
                let mut pressure = 0.0;
                for (tuple, w) in p.pair().entries() {
                    if tuple[0] == i && bit(tuple[1]) {
                        pressure += w;
                    }
                }
                for (tuple, w) in p.triple().entries() {
                    if tuple[0] == i && bit(tuple[1]) && bit(tuple[2]) {
                        pressure += w;
                    }
                }
                (p.h() * pressure).min(1.0)
            }
        })
        .collect()
}

#[test]
fn transition_rows_match_product_oracle_and_sum_to_one() {
    let mut rng = ChaCha12Rng::seed_from_u64(21);
    for _ in 0..10 {
        let n = rng.gen_range(3..=6);
        let (_, p) = small_instance(&mut rng, n);
        let chain = ExactChain::new(AgentModel::from_sis(&p).unwrap()).unwrap();
        for s in 0..chain.num_states() {
            let row = chain.transition_row(s);
            let total: f64 = row.iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "row {s} sums to {total}");

            let q = next_probs_oracle(&p, s);
            for (t, &prob) in row.iter().enumerate() {
                let mut want = 1.0;
                for (i, &qi) in q.iter().enumerate() {
                    want *= if (t >> i) & 1 == 1 { qi } else { 1.0 - qi };
                }
                assert!(
                    (prob - want).abs() < 1e-12,
                    "P({s} -> {t}) = {prob}, oracle {want}"
                );
            }
        }
    }
}

#[test]
fn initial_distribution_is_the_bernoulli_product() {
    let mut rng = ChaCha12Rng::seed_from_u64(22);
    let (_, p) = small_instance(&mut rng, 5);
    let chain = ExactChain::new(AgentModel::from_sis(&p).unwrap()).unwrap();
    let probs = [0.1, 0.9, 0.4, 0.0, 1.0];
    let dist = chain.initial_distribution(&probs).unwrap();
    assert_eq!(dist.len(), 32);
    for (s, &mass) in dist.iter().enumerate() {
        let mut want = 1.0;
        for (i, &pi) in probs.iter().enumerate() {
            want *= if (s >> i) & 1 == 1 { pi } else { 1.0 - pi };
        }
        assert!((mass - want).abs() < 1e-15);
    }
    let marginals = chain.marginals(&dist);
    for (got, want) in marginals.iter().zip(&probs) {
        assert!((got - want).abs() < 1e-15);
    }
}

#[test]
fn evolve_preserves_probability_mass() {
    let mut rng = ChaCha12Rng::seed_from_u64(23);
    let (_, p) = small_instance(&mut rng, 6);
    let chain = ExactChain::new(AgentModel::from_sis(&p).unwrap()).unwrap();
    let dist = chain.initial_distribution(&vec![0.3; 6]).unwrap();
    let later = chain.evolve(&dist, 25).unwrap();
    let total: f64 = later.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(later.iter().all(|&m| m >= 0.0));
}

#[test]
fn monte_carlo_tracks_exact_marginals_within_three_standard_errors() {
    let mut rng = ChaCha12Rng::seed_from_u64(24);
    let (_, p) = small_instance(&mut rng, 5);
    let model = AgentModel::from_sis(&p).unwrap();
    let chain = ExactChain::new(model.clone()).unwrap();

    let init = vec![0.4; 5];
    let steps = 15;
    let replicas = 40_000;
    let exact = chain.marginal_series(&init, steps).unwrap();
    let mc = monte_carlo(&model, &init, steps, replicas, 123).unwrap();

    for t in 0..=steps {
        for i in 0..5 {
            let truth = exact[t][i];
            let est = mc.node_marginals[t][i];
            let se = (truth * (1.0 - truth) / replicas as f64).sqrt();
            assert!(
                (est - truth).abs() <= 3.0 * se + 1e-12,
                "t={t} node {i}: exact {truth}, sampled {est}, se {se}"
            );
        }
    }
}

#[test]
fn monte_carlo_is_deterministic_for_a_seed() {
    let mut rng = ChaCha12Rng::seed_from_u64(25);
    let (_, p) = small_instance(&mut rng, 6);
    let model = AgentModel::from_sis(&p).unwrap();
    let a = monte_carlo(&model, &vec![0.5; 6], 10, 3000, 9).unwrap();
    let b = monte_carlo(&model, &vec![0.5; 6], 10, 3000, 9).unwrap();
    assert_eq!(a.avg_fraction, b.avg_fraction);
    assert_eq!(a.node_marginals, b.node_marginals);

    let c = monte_carlo(&model, &vec![0.5; 6], 10, 3000, 10).unwrap();
    assert_ne!(a.node_marginals, c.node_marginals, "seed must matter");
}

#[test]
fn agent_model_rejects_steps_that_break_probabilities() {
    let hg = DirectedHypergraph::cycle_with_triples(4, &[]).unwrap();
    let p = SisParams::from_hypergraph(&hg, vec![0.9; 4], &[0.5; 4], &[0.0; 4], 2.0).unwrap();
    let err = AgentModel::from_sis(&p).unwrap_err();
    assert!(matches!(err, Error::Assumption(_)), "{err:?}");
}
