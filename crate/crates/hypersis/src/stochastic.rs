//! Stochastic ground truth: the exact 2^n-state Markov chain and Monte
//! Carlo sampling of the agent-level process, plus the comparison against
//! the mean-field trajectory.
//!
//! Agent rule per step, synchronous from the step-start configuration: an
//! infected node recovers with probability `h * delta_i`; a susceptible
//! node gets infected with probability `h` times the sum of edge rates
//! whose source nodes are all infected.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{self, GeneralParams, SisParams};
use crate::error::{Error, Result};

/// Largest node count the exact chain accepts (2^n states).
pub const EXACT_CHAIN_MAX_NODES: usize = 14;

/// One infection group: `heads[e]` gets pressure `weights[e]` when every
/// node in its source tuple is infected.
#[derive(Debug, Clone)]
struct EdgeGroup {
    sources_per_edge: usize,
    heads: Vec<u32>,
    sources: Vec<u32>,
    weights: Vec<f64>,
}

/// Agent-level stochastic model with per-step probabilities derived from
/// the mean-field rates.
#[derive(Debug, Clone)]
pub struct AgentModel {
    n: usize,
    h: f64,
    delta: Vec<f64>,
    groups: Vec<EdgeGroup>,
}

impl AgentModel {
    fn build(n: usize, h: f64, delta: Vec<f64>, groups: Vec<EdgeGroup>) -> Result<Self> {
        let model = AgentModel {
            n,
            h,
            delta,
            groups,
        };
        for (i, &d) in model.delta.iter().enumerate() {
            if !(0.0..=f64::INFINITY).contains(&d) || h * d > 1.0 {
                return Err(Error::Assumption(format!(
                    "recovery probability h*delta at node {i} must lie in [0,1]"
                )));
            }
        }
        let mut max_pressure = vec![0.0; n];
        for g in &model.groups {
            for (e, &head) in g.heads.iter().enumerate() {
                if g.weights[e] < 0.0 {
                    return Err(Error::Assumption("edge rates must be nonnegative".into()));
                }
                max_pressure[head as usize] += g.weights[e];
            }
        }
        for (i, &p) in max_pressure.iter().enumerate() {
            if h * p > 1.0 + 1e-12 {
                return Err(Error::Assumption(format!(
                    "infection probability h*(rate row sum) at node {i} exceeds 1"
                )));
            }
        }
        Ok(model)
    }

    /// Builds the model from single-virus mean-field parameters.
    pub fn from_sis(p: &SisParams) -> Result<Self> {
        Self::from_general(&p.to_general())
    }

    /// Builds the model from general-order mean-field parameters.
    ///
    /// Tensor entries that differ only by a permutation of their source
    /// indices trigger on the same configurations, so they are merged into
    /// one edge with the summed rate.
    pub fn from_general(p: &GeneralParams) -> Result<Self> {
        let mut groups = Vec::new();
        for (k, t) in p.layers() {
            let mut merged: BTreeMap<(u32, Vec<u32>), f64> = BTreeMap::new();
            for (idx, w) in t.entries() {
                let mut sources: Vec<u32> = idx[1..].iter().map(|&v| v as u32).collect();
                sources.sort_unstable();
                *merged.entry((idx[0] as u32, sources)).or_insert(0.0) += w;
            }
            let mut g = EdgeGroup {
                sources_per_edge: k - 1,
                heads: Vec::with_capacity(merged.len()),
                sources: Vec::with_capacity(merged.len() * (k - 1)),
                weights: Vec::with_capacity(merged.len()),
            };
            for ((head, sources), w) in merged {
                g.heads.push(head);
                g.sources.extend(sources);
                g.weights.push(w);
            }
            if !g.heads.is_empty() {
                groups.push(g);
            }
        }
        Self::build(p.n(), p.h(), p.delta().to_vec(), groups)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Sums the rates of edges whose sources are all set in `mask` into
    /// `out` (cleared first), indexed by head node.
    fn pressure(&self, mask: &[u64], out: &mut [f64]) {
        out.fill(0.0);
        for g in &self.groups {
            let spe = g.sources_per_edge;
            for (e, &head) in g.heads.iter().enumerate() {
                let all_set = g.sources[e * spe..(e + 1) * spe]
                    .iter()
                    .all(|&s| mask[(s / 64) as usize] >> (s % 64) & 1 == 1);
                if all_set {
                    out[head as usize] += g.weights[e];
                }
            }
        }
    }

    /// Probability that each node is infected after one step from the
    /// configuration `mask`.
    fn next_infected_probs(&self, mask: &[u64], pressure_buf: &mut [f64], out: &mut [f64]) {
        self.pressure(mask, pressure_buf);
        for i in 0..self.n {
            let infected = mask[i / 64] >> (i % 64) & 1 == 1;
            out[i] = if infected {
                1.0 - self.h * self.delta[i]
            } else {
                (self.h * pressure_buf[i]).min(1.0)
            };
        }
    }
}

/// Exact 2^n-state Markov chain over infection configurations. A
/// configuration is the bitmask with bit `i` set when node `i` is
/// infected.
#[derive(Debug, Clone)]
pub struct ExactChain {
    model: AgentModel,
}

impl ExactChain {
    /// Wraps a model with at most [`EXACT_CHAIN_MAX_NODES`] nodes.
    pub fn new(model: AgentModel) -> Result<Self> {
        if model.n > EXACT_CHAIN_MAX_NODES {
            return Err(Error::Input(format!(
                "exact chain supports at most {EXACT_CHAIN_MAX_NODES} nodes, got {}",
                model.n
            )));
        }
        Ok(ExactChain { model })
    }

    pub fn model(&self) -> &AgentModel {
        &self.model
    }

    pub fn num_states(&self) -> usize {
        1 << self.model.n
    }

    /// Transition probabilities out of configuration `s`, built by
    /// extending one node at a time; each row sums to one up to rounding.
    pub fn transition_row(&self, s: usize) -> Vec<f64> {
        let n = self.model.n;
        let mask = [s as u64];
        let mut pressure = vec![0.0; n];
        let mut q = vec![0.0; n];
        self.model.next_infected_probs(&mask, &mut pressure, &mut q);
        let mut row = vec![1.0];
        for (i, &qi) in q.iter().enumerate() {
            let mut next = vec![0.0; row.len() * 2];
            for (t, &p) in row.iter().enumerate() {
                next[t] = p * (1.0 - qi);
                next[t | 1 << i] = p * qi;
            }
            row = next;
        }
        row
    }

    /// Product distribution where node `i` starts infected with
    /// probability `init_probs[i]`.
    pub fn initial_distribution(&self, init_probs: &[f64]) -> Result<Vec<f64>> {
        if init_probs.len() != self.model.n {
            return Err(Error::Dimension {
                expected: self.model.n,
                found: init_probs.len(),
            });
        }
        if init_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Input("initial probabilities must lie in [0,1]".into()));
        }
        let mut dist = vec![1.0];
        for (i, &pi) in init_probs.iter().enumerate() {
            let mut next = vec![0.0; dist.len() * 2];
            for (t, &p) in dist.iter().enumerate() {
                next[t] = p * (1.0 - pi);
                next[t | 1 << i] = p * pi;
            }
            dist = next;
        }
        Ok(dist)
    }

    /// Pushes a distribution over configurations forward by `steps`.
    pub fn evolve(&self, dist: &[f64], steps: usize) -> Result<Vec<f64>> {
        if dist.len() != self.num_states() {
            return Err(Error::Dimension {
                expected: self.num_states(),
                found: dist.len(),
            });
        }
        let mut cur = dist.to_vec();
        for _ in 0..steps {
            let mut next = vec![0.0; cur.len()];
            for (s, &p) in cur.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (t, &w) in self.transition_row(s).iter().enumerate() {
                    next[t] += p * w;
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Per-node infection probabilities under a distribution.
    pub fn marginals(&self, dist: &[f64]) -> Vec<f64> {
        let n = self.model.n;
        let mut out = vec![0.0; n];
        for (s, &p) in dist.iter().enumerate() {
            let mut bits = s;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                out[i] += p;
                bits &= bits - 1;
            }
        }
        out
    }

    /// Per-node marginals at every step from the product initial
    /// distribution, index 0 being the initial marginals.
    pub fn marginal_series(&self, init_probs: &[f64], steps: usize) -> Result<Vec<Vec<f64>>> {
        let mut dist = self.initial_distribution(init_probs)?;
        let mut out = Vec::with_capacity(steps + 1);
        out.push(self.marginals(&dist));
        for _ in 0..steps {
            dist = self.evolve(&dist, 1)?;
            out.push(self.marginals(&dist));
        }
        Ok(out)
    }
}

/// Monte Carlo estimate across replicas.
#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloSummary {
    pub replicas: usize,
    /// Average infected fraction at each step (index 0 = initial draw).
    pub avg_fraction: Vec<f64>,
    /// Per-step, per-node infection frequency.
    pub node_marginals: Vec<Vec<f64>>,
}

struct ReplicaCounts {
    totals: Vec<u64>,
    per_node: Vec<u64>,
}

impl ReplicaCounts {
    fn zero(n: usize, steps: usize) -> Self {
        ReplicaCounts {
            totals: vec![0; steps + 1],
            per_node: vec![0; (steps + 1) * n],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.totals.iter_mut().zip(other.totals) {
            *a += b;
        }
        for (a, b) in self.per_node.iter_mut().zip(other.per_node) {
            *a += b;
        }
        self
    }
}

fn record(counts: &mut ReplicaCounts, mask: &[u64], n: usize, t: usize) {
    let mut total = 0u64;
    for (w, &word) in mask.iter().enumerate() {
        let mut bits = word;
        while bits != 0 {
            let i = w * 64 + bits.trailing_zeros() as usize;
            counts.per_node[t * n + i] += 1;
            total += 1;
            bits &= bits - 1;
        }
    }
    counts.totals[t] += total;
}

/// Simulates `replicas` independent runs of the agent model for `steps`
/// steps, each node initially infected with probability `init_probs[i]`.
///
/// Replica `r` draws from stream `r` of `seed`; counts are accumulated in
/// integers, so the result is reproducible regardless of thread count.
pub fn monte_carlo(
    model: &AgentModel,
    init_probs: &[f64],
    steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<MonteCarloSummary> {
    let n = model.n;
    if init_probs.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: init_probs.len(),
        });
    }
    if init_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Input("initial probabilities must lie in [0,1]".into()));
    }
    if replicas == 0 {
        return Err(Error::Input("need at least one replica".into()));
    }
    let words = n.div_ceil(64);
    let counts = (0..replicas)
        .into_par_iter()
        .fold(
            || ReplicaCounts::zero(n, steps),
            |mut acc, r| {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                let mut mask = vec![0u64; words];
                for (i, &p) in init_probs.iter().enumerate() {
                    if rng.gen::<f64>() < p {
                        mask[i / 64] |= 1 << (i % 64);
                    }
                }
                record(&mut acc, &mask, n, 0);
                let mut pressure = vec![0.0; n];
                let mut next = vec![0u64; words];
                for t in 1..=steps {
                    model.pressure(&mask, &mut pressure);
                    next.fill(0);
                    for i in 0..n {
                        let infected = mask[i / 64] >> (i % 64) & 1 == 1;
                        let u: f64 = rng.gen();
                        let stays = if infected {
                            u >= model.h * model.delta[i]
                        } else {
                            u < model.h * pressure[i]
                        };
                        if stays {
                            next[i / 64] |= 1 << (i % 64);
                        }
                    }
                    std::mem::swap(&mut mask, &mut next);
                    record(&mut acc, &mask, n, t);
                }
                acc
            },
        )
        .reduce(|| ReplicaCounts::zero(n, steps), ReplicaCounts::merge);
    let denom = replicas as f64;
    let avg_fraction = counts
        .totals
        .iter()
        .map(|&c| c as f64 / (denom * n as f64))
        .collect();
    let node_marginals = (0..=steps)
        .map(|t| {
            (0..n)
                .map(|i| counts.per_node[t * n + i] as f64 / denom)
                .collect()
        })
        .collect();
    Ok(MonteCarloSummary {
        replicas,
        avg_fraction,
        node_marginals,
    })
}

/// One step of the mean-field versus Monte Carlo comparison.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleRow {
    pub t: usize,
    pub meanfield_avg: f64,
    pub mc_avg: f64,
    pub abs_error: f64,
}

/// Runs the mean-field recursion from `init_probs` and the agent model
/// from Bernoulli draws of the same probabilities, and compares average
/// infection levels step by step. Returns the largest absolute gap and
/// the full series.
pub fn compare_meanfield(
    p: &SisParams,
    init_probs: &[f64],
    steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<(f64, Vec<EnsembleRow>)> {
    let model = AgentModel::from_sis(p)?;
    let traj = dynamics::simulate(p, init_probs, steps, false)?;
    let mc = monte_carlo(&model, init_probs, steps, replicas, seed)?;
    let mut rows = Vec::with_capacity(steps + 1);
    let mut max_error = 0.0f64;
    for (t, state) in traj.states().iter().enumerate() {
        let mf = state.iter().sum::<f64>() / p.n() as f64;
        let mc_avg = mc.avg_fraction[t];
        let err = (mf - mc_avg).abs();
        max_error = max_error.max(err);
        rows.push(EnsembleRow {
            t,
            meanfield_avg: mf,
            mc_avg,
            abs_error: err,
        });
    }
    Ok((max_error, rows))
}
