//! Cross-checks the tensor-based dynamics against plain per-edge loops,
//! the error-coordinate expansion against direct stepping, and the
//! analytic Jacobian against finite differences.

use std::collections::BTreeMap;

use hypersis::dynamics::{
    error_dynamics_general, error_dynamics_tensors, find_equilibrium, fixed_point_map, step,
    step_bivirus, step_general, step_unchecked, BiVirusParams, GeneralParams, SisParams,
};
use hypersis::hypergraph::{DirectedHypergraph, Hyperedge};
use hypersis::tensor::SparseTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn random_hypergraph(rng: &mut ChaCha12Rng, n: usize, max_order: usize) -> DirectedHypergraph {
    let mut edges = Vec::new();
    // A cycle keeps the pairwise layer strongly connected.
    for i in 0..n {
        edges.push(Hyperedge {
            tail: i,
            heads: vec![(i + 1) % n],
            weight: rng.gen_range(0.2..1.5),
        });
    }
    for _ in 0..2 * n {
        let tail = rng.gen_range(0..n);
        let order = rng.gen_range(2..=max_order);
        let mut heads: Vec<usize> = (0..n).filter(|&v| v != tail).collect();
        for k in 0..heads.len() {
            let swap = rng.gen_range(k..heads.len());
            heads.swap(k, swap);
        }
        heads.truncate(order - 1);
        edges.push(Hyperedge {
            tail,
            heads,
            weight: rng.gen_range(0.2..1.5),
        });
    }
    DirectedHypergraph::new(n, edges).expect("valid hypergraph")
}

fn random_rates(rng: &mut ChaCha12Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

fn random_state(rng: &mut ChaCha12Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()
}

fn factorial(k: usize) -> f64 {
    (1..=k).product::<usize>() as f64
}

/// One update computed node by node from the edge list: every ordering of
/// an edge's heads contributes the full edge weight, matching the
/// adjacency-tensor construction.
fn edge_loop_step(
    hg: &DirectedHypergraph,
    delta: &[f64],
    mu: &BTreeMap<usize, Vec<f64>>,
    h: f64,
    x: &[f64],
) -> Vec<f64> {
    let n = hg.n();
    let mut drive = vec![0.0; n];
    for e in hg.edges() {
        let Some(rates) = mu.get(&e.order()) else {
            continue;
        };
        let product: f64 = e.heads.iter().map(|&j| x[j]).product();
        drive[e.tail] += rates[e.tail] * e.weight * factorial(e.heads.len()) * product;
    }
    (0..n)
        .map(|i| x[i] + h * (-delta[i] * x[i] + (1.0 - x[i]) * drive[i]))
        .collect()
}

#[test]
fn third_order_step_matches_edge_loop() {
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    for _ in 0..50 {
        let n = rng.gen_range(3..=7);
        let hg = random_hypergraph(&mut rng, n, 3);
        let delta = random_rates(&mut rng, n, 0.1, 0.9);
        let mu2 = random_rates(&mut rng, n, 0.05, 0.5);
        let mu3 = random_rates(&mut rng, n, 0.05, 0.5);
        let p = SisParams::from_hypergraph(&hg, delta.clone(), &mu2, &mu3, 0.01).unwrap();

        let mut mu = BTreeMap::new();
        mu.insert(2, mu2);
        mu.insert(3, mu3);
        let x = random_state(&mut rng, n);
        let got = step(&p, &x).unwrap();
        let want = edge_loop_step(&hg, &delta, &mu, 0.01, &x);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14, "step {a} vs edge loop {b}");
        }
    }
}

#[test]
fn general_step_matches_edge_loop_through_fourth_order() {
    let mut rng = ChaCha12Rng::seed_from_u64(8);
    for _ in 0..50 {
        let n = rng.gen_range(4..=7);
        let hg = random_hypergraph(&mut rng, n, 4);
        let delta = random_rates(&mut rng, n, 0.1, 0.9);
        let mu2 = random_rates(&mut rng, n, 0.05, 0.4);
        let mut mu_higher = BTreeMap::new();
        mu_higher.insert(3, random_rates(&mut rng, n, 0.05, 0.4));
        mu_higher.insert(4, random_rates(&mut rng, n, 0.05, 0.4));
        let p =
            GeneralParams::from_hypergraph(&hg, delta.clone(), &mu2, &mu_higher, 0.01).unwrap();

        let mut mu = mu_higher.clone();
        mu.insert(2, mu2);
        // BTreeMap keys are edge orders (tail plus heads), same as e.order().
        let mu: BTreeMap<usize, Vec<f64>> = mu.into_iter().collect();
        let x = random_state(&mut rng, n);
        let got = step_general(&p, &x).unwrap();
        let want = edge_loop_step(&hg, &delta, &mu, 0.01, &x);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14, "general step {a} vs edge loop {b}");
        }
    }
}

#[test]
fn bivirus_step_matches_shared_mass_loop() {
    let mut rng = ChaCha12Rng::seed_from_u64(9);
    for _ in 0..50 {
        let n = rng.gen_range(3..=6);
        let hg = random_hypergraph(&mut rng, n, 3);
        let make = |rng: &mut ChaCha12Rng| {
            let delta = random_rates(rng, n, 0.1, 0.9);
            let mu2 = random_rates(rng, n, 0.05, 0.4);
            let mu3 = random_rates(rng, n, 0.05, 0.4);
            let p = SisParams::from_hypergraph(&hg, delta.clone(), &mu2, &mu3, 0.01).unwrap();
            let mut mu = BTreeMap::new();
            mu.insert(2, mu2);
            mu.insert(3, mu3);
            (p, delta, mu)
        };
        let (p1, d1, mu1) = make(&mut rng);
        let (p2, d2, mu2) = make(&mut rng);
        let p = BiVirusParams::new(p1, p2).unwrap();

        let x1 = random_state(&mut rng, n);
        let x2: Vec<f64> = x1
            .iter()
            .map(|&v| rng.gen_range(0.0..(1.0 - v)))
            .collect();
        let (got1, got2) = step_bivirus(&p, &x1, &x2).unwrap();

        // Shared susceptible mass: each virus sees 1 - x1 - x2.
        let shared: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
        let loop_virus = |delta: &[f64], mu: &BTreeMap<usize, Vec<f64>>, x: &[f64]| {
            let mut drive = vec![0.0; n];
            for e in hg.edges() {
                let Some(rates) = mu.get(&e.order()) else {
                    continue;
                };
                let product: f64 = e.heads.iter().map(|&j| x[j]).product();
                drive[e.tail] += rates[e.tail] * e.weight * factorial(e.heads.len()) * product;
            }
            (0..n)
                .map(|i| x[i] + 0.01 * (-delta[i] * x[i] + (1.0 - shared[i]) * drive[i]))
                .collect::<Vec<f64>>()
        };
        let want1 = loop_virus(&d1, &mu1, &x1);
        let want2 = loop_virus(&d2, &mu2, &x2);
        for (a, b) in got1.iter().zip(&want1) {
            assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in got2.iter().zip(&want2) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}

/// An endemic instance on a small cycle with consecutive triples.
fn endemic_instance(n: usize) -> SisParams {
    let triples: Vec<(usize, usize, usize)> =
        (0..n).map(|i| (i, (i + 1) % n, (i + 2) % n)).collect();
    let hg = DirectedHypergraph::cycle_with_triples(n, &triples).unwrap();
    SisParams::from_hypergraph(
        &hg,
        vec![0.4; n],
        &vec![0.5; n],
        &vec![0.8; n],
        0.05,
    )
    .unwrap()
}

#[test]
fn error_expansion_reproduces_direct_stepping() {
    let p = endemic_instance(6);
    let eq = find_equilibrium(&p, &vec![1.0; 6], 1e-13, 1_000_000).unwrap();
    let tensors = error_dynamics_tensors(&p, &eq.x, 1e-10).unwrap();
    assert_eq!(tensors[0].order(), 2);
    assert_eq!(tensors[1].order(), 3);
    assert_eq!(tensors[2].order(), 4);

    let mut rng = ChaCha12Rng::seed_from_u64(10);
    for _ in 0..100 {
        // Signed displacements, kept small enough that x stays in the box.
        let e: Vec<f64> = eq
            .x
            .iter()
            .map(|&v| rng.gen_range(-0.3 * v..0.3 * (1.0 - v)))
            .collect();
        let x: Vec<f64> = eq.x.iter().zip(&e).map(|(a, b)| a + b).collect();
        let direct: Vec<f64> = step_unchecked(&p, &x)
            .iter()
            .zip(&eq.x)
            .map(|(a, b)| a - b)
            .collect();
        let mut expanded = vec![0.0; 6];
        for t in &tensors {
            for (acc, v) in expanded.iter_mut().zip(t.apply(&e).unwrap()) {
                *acc += v;
            }
        }
        for (a, b) in direct.iter().zip(&expanded) {
            assert!((a - b).abs() < 1e-12, "direct {a} vs expanded {b}");
        }
    }
}

#[test]
fn general_error_expansion_agrees_with_third_order_route() {
    let p = endemic_instance(5);
    let eq = find_equilibrium(&p, &vec![1.0; 5], 1e-13, 1_000_000).unwrap();
    let third = error_dynamics_tensors(&p, &eq.x, 1e-10).unwrap();
    let general = error_dynamics_general(&p.to_general(), &eq.x, 1e-10).unwrap();
    assert_eq!(general.len(), 3);
    for (a, b) in third.iter().zip(&general) {
        let diff = a.sub(b).unwrap().max_abs();
        assert!(diff < 1e-12, "route disagreement {diff}");
    }
}

#[test]
fn jacobian_matches_central_differences() {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n = rng.gen_range(3..=6);
        let hg = random_hypergraph(&mut rng, n, 3);
        let delta = random_rates(&mut rng, n, 0.1, 0.9);
        let mu2 = random_rates(&mut rng, n, 0.05, 0.5);
        let mu3 = random_rates(&mut rng, n, 0.05, 0.5);
        let p = SisParams::from_hypergraph(&hg, delta, &mu2, &mu3, 0.02).unwrap();
        let x = random_state(&mut rng, n);

        let analytic = hypersis::analysis::jacobian(&p, &x).unwrap().matrix;
        let eps = 1e-6;
        for j in 0..n {
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi[j] += eps;
            lo[j] -= eps;
            let fhi = step_unchecked(&p, &hi);
            let flo = step_unchecked(&p, &lo);
            for i in 0..n {
                let numeric = (fhi[i] - flo[i]) / (2.0 * eps);
                assert!(
                    (analytic[(i, j)] - numeric).abs() < 1e-6,
                    "J[{i},{j}] analytic {} vs numeric {numeric}",
                    analytic[(i, j)]
                );
            }
        }
    }
}

#[test]
fn general_jacobian_matches_central_differences() {
    let mut rng = ChaCha12Rng::seed_from_u64(12);
    for _ in 0..10 {
        let n = rng.gen_range(4..=6);
        let hg = random_hypergraph(&mut rng, n, 4);
        let delta = random_rates(&mut rng, n, 0.1, 0.9);
        let mu2 = random_rates(&mut rng, n, 0.05, 0.4);
        let mut mu_higher = BTreeMap::new();
        mu_higher.insert(3, random_rates(&mut rng, n, 0.05, 0.4));
        mu_higher.insert(4, random_rates(&mut rng, n, 0.05, 0.4));
        let p = GeneralParams::from_hypergraph(&hg, delta, &mu2, &mu_higher, 0.02).unwrap();
        let x = random_state(&mut rng, n);

        let analytic = hypersis::analysis::jacobian_general(&p, &x).unwrap().matrix;
        let eps = 1e-6;
        for j in 0..n {
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi[j] += eps;
            lo[j] -= eps;
            let fhi = hypersis::dynamics::step_general_unchecked(&p, &hi);
            let flo = hypersis::dynamics::step_general_unchecked(&p, &lo);
            for i in 0..n {
                let numeric = (fhi[i] - flo[i]) / (2.0 * eps);
                assert!(
                    (analytic[(i, j)] - numeric).abs() < 1e-6,
                    "general J[{i},{j}]"
                );
            }
        }
    }
}

#[test]
fn equilibrium_is_a_fixed_point_of_both_maps() {
    let p = endemic_instance(7);
    let eq = find_equilibrium(&p, &vec![1.0; 7], 1e-13, 1_000_000).unwrap();
    assert!(eq.residual < 1e-13);

    let stepped = step(&p, &eq.x).unwrap();
    for (a, b) in stepped.iter().zip(&eq.x) {
        assert!((a - b).abs() < 1e-12);
    }
    let mapped = fixed_point_map(&p, &eq.x).unwrap();
    for (a, b) in mapped.iter().zip(&eq.x) {
        assert!((a - b).abs() < 1e-10);
    }

    // The same equilibrium is strictly positive for this endemic instance.
    assert!(eq.x.iter().all(|&v| v > 0.0));
}

#[test]
fn direct_tensor_params_accept_asymmetric_input() {
    // Building parameters from a raw asymmetric tensor symmetrizes the
    // trailing modes without changing the dynamics.
    let raw = SparseTensor::new(
        3,
        3,
        vec![
            (vec![0, 1, 2], 0.8),
            (vec![1, 0, 2], 0.5),
            (vec![1, 2, 0], 0.1),
            (vec![2, 0, 1], 0.4),
        ],
    )
    .unwrap();
    let pair = SparseTensor::new(2, 3, vec![(vec![0, 1], 0.3), (vec![1, 2], 0.3), (vec![2, 0], 0.3)])
        .unwrap();
    let p = SisParams::new(vec![0.5; 3], pair.clone(), raw.clone(), 0.05).unwrap();
    assert!(p.triple().is_almost_symmetric(1e-12));

    let x = vec![0.3, 0.7, 0.2];
    let got = step(&p, &x).unwrap();
    let q = SisParams::new(vec![0.5; 3], pair, raw.almost_symmetrize(), 0.05).unwrap();
    let want = step(&q, &x).unwrap();
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-14);
    }
}
