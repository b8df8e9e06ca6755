//! Mean-field contagion dynamics: parameters, steppers, equilibria, and
//! the exact polynomial expansion of the step map around an equilibrium.
//!
//! The single-virus state update is
//!
//! ```text
//! x_i(t+1) = x_i(t) + h * ( -delta_i x_i(t)
//!            + (1 - x_i(t)) * sum_j  B[i,j] x_j(t)
//!            + (1 - x_i(t)) * sum_jk H[i,j,k] x_j(t) x_k(t) )
//! ```
//!
//! with optional higher-order layers continuing the pattern, and the
//! bi-virus variant replaces `1 - x_i` by the shared susceptible mass
//! `1 - x1_i - x2_i`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypergraph::DirectedHypergraph;
use crate::tensor::SparseTensor;

/// Default convergence tolerance for [`find_equilibrium`].
pub const EQ_TOL: f64 = 1e-12;

/// Default iteration cap for [`find_equilibrium`].
pub const EQ_MAX_ITERS: usize = 1_000_000;

/// Single-virus rates: curing vector `delta`, pairwise infection matrix
/// `B[i,j]`, and third-order infection tensor `H[i,j,k]`.
///
/// `H` is almost-symmetrized on construction (averaged over head
/// orderings), which never changes the dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct SisParams {
    delta: Vec<f64>,
    pair: SparseTensor,
    triple: SparseTensor,
    h: f64,
}

impl SisParams {
    pub fn new(delta: Vec<f64>, pair: SparseTensor, triple: SparseTensor, h: f64) -> Result<Self> {
        let n = delta.len();
        if n == 0 {
            return Err(Error::Input("need at least one node".into()));
        }
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::Input("curing rates must be finite".into()));
        }
        if pair.order() != 2 || pair.dim() != n {
            return Err(Error::Input(format!(
                "pairwise tensor must have order 2 and dimension {n}"
            )));
        }
        if triple.order() != 3 || triple.dim() != n {
            return Err(Error::Input(format!(
                "third-order tensor must have order 3 and dimension {n}"
            )));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Input(format!("step size must be positive, got {h}")));
        }
        Ok(Self {
            delta,
            pair,
            triple: triple.almost_symmetrize(),
            h,
        })
    }

    /// Rates from a hypergraph: `B[i,j] = mu_pair[i] * A[i,j]` and
    /// `H[i,j,k] = mu_triple[i] * A[i,j,k]`. The hypergraph must not
    /// contain edges above order 3.
    pub fn from_hypergraph(
        hg: &DirectedHypergraph,
        delta: Vec<f64>,
        mu_pair: &[f64],
        mu_triple: &[f64],
        h: f64,
    ) -> Result<Self> {
        let n = hg.n();
        if mu_pair.len() != n || mu_triple.len() != n || delta.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: mu_pair.len().min(mu_triple.len()).min(delta.len()),
            });
        }
        if hg.max_edge_order() > 3 {
            return Err(Error::Input(
                "hypergraph has edges above order 3; use GeneralParams".into(),
            ));
        }
        let mut tensors = hg.adjacency_tensors(3.min(n.max(2)))?;
        let pair = tensors.remove(&2).expect("order 2 always present");
        let triple = tensors
            .remove(&3)
            .unwrap_or_else(|| SparseTensor::empty(3, n));
        Self::new(delta, pair.scale_rows(mu_pair)?, triple.scale_rows(mu_triple)?, h)
    }

    pub fn n(&self) -> usize {
        self.delta.len()
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn pair(&self) -> &SparseTensor {
        &self.pair
    }

    pub fn triple(&self) -> &SparseTensor {
        &self.triple
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Total infection weight leaving each node:
    /// `sum_j B[i,j] + sum_jk H[i,j,k]`.
    pub fn infection_row_sums(&self) -> Vec<f64> {
        let mut rows = self.pair.row_sums();
        for (r, t) in rows.iter_mut().zip(self.triple.row_sums()) {
            *r += t;
        }
        rows
    }

    /// Same rates viewed as a general-order model with layers {2, 3}.
    pub fn to_general(&self) -> GeneralParams {
        let mut higher = BTreeMap::new();
        if !self.triple.is_zero() {
            higher.insert(3, self.triple.clone());
        }
        GeneralParams::new(self.delta.clone(), self.pair.clone(), higher, self.h)
            .expect("valid by construction")
    }
}

/// Rates with infection layers of every order: the pairwise matrix plus a
/// tensor per order `k >= 3`. Layers are almost-symmetrized on
/// construction; all-zero layers are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralParams {
    delta: Vec<f64>,
    pair: SparseTensor,
    higher: BTreeMap<usize, SparseTensor>,
    h: f64,
}

impl GeneralParams {
    pub fn new(
        delta: Vec<f64>,
        pair: SparseTensor,
        higher: BTreeMap<usize, SparseTensor>,
        h: f64,
    ) -> Result<Self> {
        let n = delta.len();
        if n == 0 {
            return Err(Error::Input("need at least one node".into()));
        }
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::Input("curing rates must be finite".into()));
        }
        if pair.order() != 2 || pair.dim() != n {
            return Err(Error::Input(format!(
                "pairwise tensor must have order 2 and dimension {n}"
            )));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Input(format!("step size must be positive, got {h}")));
        }
        let mut layers = BTreeMap::new();
        for (k, t) in higher {
            if k < 3 {
                return Err(Error::Input(format!("higher-order layer has order {k} < 3")));
            }
            if t.order() != k || t.dim() != n {
                return Err(Error::Input(format!(
                    "layer {k} tensor must have order {k} and dimension {n}"
                )));
            }
            if !t.is_zero() {
                layers.insert(k, t.almost_symmetrize());
            }
        }
        Ok(Self {
            delta,
            pair,
            higher: layers,
            h,
        })
    }

    /// Rates from a hypergraph: layer `k` is the order-`k` adjacency tensor
    /// with row `i` scaled by `mu_higher[&k][i]`; orders without a rate
    /// vector contribute nothing.
    pub fn from_hypergraph(
        hg: &DirectedHypergraph,
        delta: Vec<f64>,
        mu_pair: &[f64],
        mu_higher: &BTreeMap<usize, Vec<f64>>,
        h: f64,
    ) -> Result<Self> {
        let n = hg.n();
        if mu_pair.len() != n || delta.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: mu_pair.len().min(delta.len()),
            });
        }
        let max_order = hg.max_edge_order().max(2);
        let mut tensors = hg.adjacency_tensors(max_order)?;
        let pair = tensors.remove(&2).expect("order 2 always present");
        let mut higher = BTreeMap::new();
        for (&k, mu) in mu_higher {
            if mu.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: mu.len(),
                });
            }
            if let Some(t) = tensors.remove(&k) {
                higher.insert(k, t.scale_rows(mu)?);
            }
        }
        Self::new(delta, pair.scale_rows(mu_pair)?, higher, h)
    }

    pub fn n(&self) -> usize {
        self.delta.len()
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn pair(&self) -> &SparseTensor {
        &self.pair
    }

    pub fn higher(&self) -> &BTreeMap<usize, SparseTensor> {
        &self.higher
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Largest interaction order present (at least 2).
    pub fn max_order(&self) -> usize {
        self.higher.keys().next_back().copied().unwrap_or(2)
    }

    /// All infection layers in ascending order, starting with `(2, pair)`.
    pub fn layers(&self) -> impl Iterator<Item = (usize, &SparseTensor)> {
        std::iter::once((2, &self.pair)).chain(self.higher.iter().map(|(&k, t)| (k, t)))
    }

    /// Total infection weight leaving each node, all layers combined.
    pub fn infection_row_sums(&self) -> Vec<f64> {
        let mut rows = vec![0.0; self.n()];
        for (_, t) in self.layers() {
            for (r, s) in rows.iter_mut().zip(t.row_sums()) {
                *r += s;
            }
        }
        rows
    }
}

/// Two viruses competing for the same susceptible mass. Both share the
/// node set and the step size; each brings its own rates.
#[derive(Debug, Clone, PartialEq)]
pub struct BiVirusParams {
    viruses: [SisParams; 2],
}

impl BiVirusParams {
    pub fn new(virus1: SisParams, virus2: SisParams) -> Result<Self> {
        if virus1.n() != virus2.n() {
            return Err(Error::Dimension {
                expected: virus1.n(),
                found: virus2.n(),
            });
        }
        if virus1.h() != virus2.h() {
            return Err(Error::Input(format!(
                "viruses disagree on the step size: {} vs {}",
                virus1.h(),
                virus2.h()
            )));
        }
        Ok(Self {
            viruses: [virus1, virus2],
        })
    }

    pub fn virus(&self, l: usize) -> &SisParams {
        &self.viruses[l]
    }

    pub fn n(&self) -> usize {
        self.viruses[0].n()
    }

    pub fn h(&self) -> f64 {
        self.viruses[0].h()
    }
}

/// A simulated orbit: `states()[t]` is the state after `t` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    h: f64,
    states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn from_states(h: f64, states: Vec<Vec<f64>>) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Input(format!("step size must be positive, got {h}")));
        }
        let Some(first) = states.first() else {
            return Err(Error::Input("trajectory needs at least one state".into()));
        };
        let n = first.len();
        if n == 0 || states.iter().any(|s| s.len() != n) {
            return Err(Error::Input("trajectory states must share a nonzero length".into()));
        }
        Ok(Self { h, states })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.states[0].len()
    }

    /// Number of steps taken (states minus one).
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("nonempty by construction")
    }

    /// Average infection across nodes at each step.
    pub fn mean_infection(&self) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| s.iter().sum::<f64>() / s.len() as f64)
            .collect()
    }
}

/// A bi-virus orbit; each entry holds the two per-virus states.
#[derive(Debug, Clone, PartialEq)]
pub struct BiTrajectory {
    h: f64,
    states: Vec<(Vec<f64>, Vec<f64>)>,
}

impl BiTrajectory {
    pub fn from_states(h: f64, states: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Input(format!("step size must be positive, got {h}")));
        }
        let Some((a, b)) = states.first() else {
            return Err(Error::Input("trajectory needs at least one state".into()));
        };
        let n = a.len();
        if n == 0 || b.len() != n || states.iter().any(|(a, b)| a.len() != n || b.len() != n) {
            return Err(Error::Input("trajectory states must share a nonzero length".into()));
        }
        Ok(Self { h, states })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.states[0].0.len()
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn states(&self) -> &[(Vec<f64>, Vec<f64>)] {
        &self.states
    }

    pub fn last(&self) -> &(Vec<f64>, Vec<f64>) {
        self.states.last().expect("nonempty by construction")
    }
}

/// One named pass/fail condition with a margin. Positive margins mean the
/// condition holds with room to spare; purely boolean conditions report
/// +1 or -1.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub name: String,
    pub holds: bool,
    pub margin: f64,
}

impl ConditionReport {
    pub(crate) fn from_margin(name: &str, margin: f64, strict: bool) -> Self {
        Self {
            name: name.to_string(),
            holds: if strict { margin > 0.0 } else { margin >= 0.0 },
            margin,
        }
    }

    pub(crate) fn from_bool(name: &str, holds: bool) -> Self {
        Self {
            name: name.to_string(),
            holds,
            margin: if holds { 1.0 } else { -1.0 },
        }
    }
}

/// Itemized outcome of the model assumption checks.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub items: Vec<ConditionReport>,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.items.iter().all(|c| c.holds)
    }

    pub fn first_violation(&self) -> Option<&ConditionReport> {
        self.items.iter().find(|c| !c.holds)
    }

    /// Error naming the first violated condition, if any.
    pub fn into_error(&self) -> Option<Error> {
        self.first_violation().map(|c| {
            Error::Assumption(format!("{} fails (margin {:.3e})", c.name, c.margin))
        })
    }
}

/// Which step-size restriction to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepBound {
    /// `h * delta_i <= 1` and `h * (infection row sum)_i <= 1` per node;
    /// keeps the box `[0,1]^n` forward invariant.
    Invariance,
    /// `h * (delta_i + (infection row sum)_i) < 1` per node; the stricter
    /// bound required by the endemic stability and attraction results.
    Contraction,
}

fn box_margin(x: &[f64]) -> f64 {
    x.iter()
        .map(|&v| v.min(1.0 - v))
        .fold(f64::INFINITY, f64::min)
}

fn min_entry(t: &SparseTensor) -> f64 {
    t.entries().map(|(_, w)| w).fold(0.0f64, f64::min)
}

fn rate_items(prefix: &str, delta: &[f64], pair: &SparseTensor, min_rate: f64) -> Vec<ConditionReport> {
    let delta_min = delta.iter().copied().fold(f64::INFINITY, f64::min);
    vec![
        ConditionReport::from_margin(&format!("{prefix}curing_rates_positive"), delta_min, true),
        ConditionReport::from_bool(
            &format!("{prefix}pairwise_irreducible"),
            pair.is_irreducible(),
        ),
        ConditionReport::from_margin(&format!("{prefix}rates_nonnegative"), min_rate, false),
    ]
}

fn step_bound_items(
    prefix: &str,
    bound: StepBound,
    h: f64,
    delta: &[f64],
    infection_rows: &[f64],
) -> Vec<ConditionReport> {
    match bound {
        StepBound::Invariance => {
            let curing = delta
                .iter()
                .map(|d| 1.0 - h * d)
                .fold(f64::INFINITY, f64::min);
            let infection = infection_rows
                .iter()
                .map(|r| 1.0 - h * r)
                .fold(f64::INFINITY, f64::min);
            vec![
                ConditionReport::from_margin(&format!("{prefix}step_bound_curing"), curing, false),
                ConditionReport::from_margin(
                    &format!("{prefix}step_bound_infection"),
                    infection,
                    false,
                ),
            ]
        }
        StepBound::Contraction => {
            let combined = delta
                .iter()
                .zip(infection_rows)
                .map(|(d, r)| 1.0 - h * (d + r))
                .fold(f64::INFINITY, f64::min);
            vec![ConditionReport::from_margin(
                &format!("{prefix}step_bound_combined"),
                combined,
                true,
            )]
        }
    }
}

/// Checks the single-virus model assumptions: initial state in the box
/// (when given), positive curing rates, irreducible pairwise layer,
/// nonnegative rates, and the selected step-size bound.
pub fn check_assumptions(
    p: &SisParams,
    bound: StepBound,
    x0: Option<&[f64]>,
) -> AssumptionReport {
    let mut items = Vec::new();
    if let Some(x) = x0 {
        items.push(ConditionReport::from_margin(
            "initial_state_in_box",
            box_margin(x),
            false,
        ));
    }
    let min_rate = min_entry(p.pair()).min(min_entry(p.triple()));
    items.extend(rate_items("", p.delta(), p.pair(), min_rate));
    items.extend(step_bound_items(
        "",
        bound,
        p.h(),
        p.delta(),
        &p.infection_row_sums(),
    ));
    AssumptionReport { items }
}

/// General-order variant of [`check_assumptions`]: every layer must be
/// nonnegative and the step bounds sum infection weight over all layers.
pub fn check_assumptions_general(
    p: &GeneralParams,
    bound: StepBound,
    x0: Option<&[f64]>,
) -> AssumptionReport {
    let mut items = Vec::new();
    if let Some(x) = x0 {
        items.push(ConditionReport::from_margin(
            "initial_state_in_box",
            box_margin(x),
            false,
        ));
    }
    let min_rate = p.layers().map(|(_, t)| min_entry(t)).fold(0.0f64, f64::min);
    items.extend(rate_items("", p.delta(), p.pair(), min_rate));
    items.extend(step_bound_items(
        "",
        bound,
        p.h(),
        p.delta(),
        &p.infection_row_sums(),
    ));
    AssumptionReport { items }
}

/// Bi-virus assumptions: the two initial states and their slack must lie
/// in `[0,1]` nodewise (when given), each virus satisfies the rate
/// conditions, and the step bounds hold with infection weight summed over
/// both viruses.
pub fn check_assumptions_bivirus(
    p: &BiVirusParams,
    bound: StepBound,
    x0: Option<(&[f64], &[f64])>,
) -> AssumptionReport {
    let mut items = Vec::new();
    if let Some((x1, x2)) = x0 {
        let margin = x1
            .iter()
            .zip(x2)
            .map(|(&a, &b)| a.min(b).min(1.0 - a - b))
            .fold(f64::INFINITY, f64::min);
        items.push(ConditionReport::from_margin(
            "initial_states_in_simplex",
            margin,
            false,
        ));
    }
    for l in 0..2 {
        let v = p.virus(l);
        let min_rate = min_entry(v.pair()).min(min_entry(v.triple()));
        items.extend(rate_items(
            &format!("virus{}_", l + 1),
            v.delta(),
            v.pair(),
            min_rate,
        ));
    }
    let total_rows: Vec<f64> = p
        .virus(0)
        .infection_row_sums()
        .iter()
        .zip(p.virus(1).infection_row_sums())
        .map(|(a, b)| a + b)
        .collect();
    match bound {
        StepBound::Invariance => {
            let curing = (0..2)
                .flat_map(|l| p.virus(l).delta().iter())
                .map(|d| 1.0 - p.h() * d)
                .fold(f64::INFINITY, f64::min);
            let infection = total_rows
                .iter()
                .map(|r| 1.0 - p.h() * r)
                .fold(f64::INFINITY, f64::min);
            items.push(ConditionReport::from_margin(
                "step_bound_curing",
                curing,
                false,
            ));
            items.push(ConditionReport::from_margin(
                "step_bound_infection_total",
                infection,
                false,
            ));
        }
        StepBound::Contraction => {
            let combined = (0..2)
                .flat_map(|l| p.virus(l).delta().iter().zip(&total_rows))
                .map(|(d, r)| 1.0 - p.h() * (d + r))
                .fold(f64::INFINITY, f64::min);
            items.push(ConditionReport::from_margin(
                "step_bound_combined",
                combined,
                true,
            ));
        }
    }
    AssumptionReport { items }
}

fn step_into(p: &SisParams, x: &[f64], out: &mut Vec<f64>) {
    let bx = p.pair().apply(x).expect("dimension checked");
    let hx = p.triple().apply(x).expect("dimension checked");
    out.clear();
    out.extend(x.iter().enumerate().map(|(i, &xi)| {
        xi + p.h() * (-p.delta()[i] * xi + (1.0 - xi) * (bx[i] + hx[i]))
    }));
}

/// One step of the single-virus dynamics. Rejects states outside the box
/// and parameters violating the invariance bound; [`step_unchecked`] skips
/// both checks. Neither variant clamps.
pub fn step(p: &SisParams, x: &[f64]) -> Result<Vec<f64>> {
    require_len(p.n(), x.len())?;
    let report = check_assumptions(p, StepBound::Invariance, Some(x));
    if let Some(err) = report.into_error() {
        return Err(err);
    }
    Ok(step_unchecked(p, x))
}

/// [`step`] without validation, for stepping outside the assumptions.
pub fn step_unchecked(p: &SisParams, x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    step_into(p, x, &mut out);
    out
}

fn step_general_into(p: &GeneralParams, x: &[f64], out: &mut Vec<f64>) {
    let mut infection = vec![0.0; x.len()];
    for (_, t) in p.layers() {
        for (acc, v) in infection.iter_mut().zip(t.apply(x).expect("dimension checked")) {
            *acc += v;
        }
    }
    out.clear();
    out.extend(x.iter().enumerate().map(|(i, &xi)| {
        xi + p.h() * (-p.delta()[i] * xi + (1.0 - xi) * infection[i])
    }));
}

/// One step of the general-order dynamics, validated like [`step`].
pub fn step_general(p: &GeneralParams, x: &[f64]) -> Result<Vec<f64>> {
    require_len(p.n(), x.len())?;
    let report = check_assumptions_general(p, StepBound::Invariance, Some(x));
    if let Some(err) = report.into_error() {
        return Err(err);
    }
    Ok(step_general_unchecked(p, x))
}

/// [`step_general`] without validation.
pub fn step_general_unchecked(p: &GeneralParams, x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    step_general_into(p, x, &mut out);
    out
}

fn step_bivirus_into(
    p: &BiVirusParams,
    x1: &[f64],
    x2: &[f64],
    out1: &mut Vec<f64>,
    out2: &mut Vec<f64>,
) {
    let h = p.h();
    for (l, (x, out)) in [(x1, out1), (x2, out2)].into_iter().enumerate() {
        let v = p.virus(l);
        let bx = v.pair().apply(x).expect("dimension checked");
        let hx = v.triple().apply(x).expect("dimension checked");
        out.clear();
        out.extend(x.iter().enumerate().map(|(i, &xi)| {
            let susceptible = 1.0 - x1[i] - x2[i];
            xi + h * (-v.delta()[i] * xi + susceptible * (bx[i] + hx[i]))
        }));
    }
}

/// One step of the bi-virus dynamics. Rejects states outside the simplex
/// and parameters violating the invariance bound.
pub fn step_bivirus(p: &BiVirusParams, x1: &[f64], x2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    require_len(p.n(), x1.len())?;
    require_len(p.n(), x2.len())?;
    let report = check_assumptions_bivirus(p, StepBound::Invariance, Some((x1, x2)));
    if let Some(err) = report.into_error() {
        return Err(err);
    }
    Ok(step_bivirus_unchecked(p, x1, x2))
}

/// [`step_bivirus`] without validation.
pub fn step_bivirus_unchecked(p: &BiVirusParams, x1: &[f64], x2: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut out1 = Vec::with_capacity(x1.len());
    let mut out2 = Vec::with_capacity(x2.len());
    step_bivirus_into(p, x1, x2, &mut out1, &mut out2);
    (out1, out2)
}

/// Simulates `steps` steps from `x0`. Unless `force` is set, the
/// assumptions (including the invariance step bound) are validated once up
/// front and violations abort; with `force` the orbit is computed as-is,
/// never clamped.
pub fn simulate(p: &SisParams, x0: &[f64], steps: usize, force: bool) -> Result<Trajectory> {
    require_len(p.n(), x0.len())?;
    if !force {
        if let Some(err) = check_assumptions(p, StepBound::Invariance, Some(x0)).into_error() {
            return Err(err);
        }
    }
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.to_vec());
    let mut cur = x0.to_vec();
    let mut next = Vec::with_capacity(x0.len());
    for _ in 0..steps {
        step_into(p, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        states.push(cur.clone());
    }
    Trajectory::from_states(p.h(), states)
}

/// General-order counterpart of [`simulate`].
pub fn simulate_general(
    p: &GeneralParams,
    x0: &[f64],
    steps: usize,
    force: bool,
) -> Result<Trajectory> {
    require_len(p.n(), x0.len())?;
    if !force {
        if let Some(err) =
            check_assumptions_general(p, StepBound::Invariance, Some(x0)).into_error()
        {
            return Err(err);
        }
    }
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.to_vec());
    let mut cur = x0.to_vec();
    let mut next = Vec::with_capacity(x0.len());
    for _ in 0..steps {
        step_general_into(p, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        states.push(cur.clone());
    }
    Trajectory::from_states(p.h(), states)
}

/// Bi-virus counterpart of [`simulate`].
pub fn simulate_bivirus(
    p: &BiVirusParams,
    x1: &[f64],
    x2: &[f64],
    steps: usize,
    force: bool,
) -> Result<BiTrajectory> {
    require_len(p.n(), x1.len())?;
    require_len(p.n(), x2.len())?;
    if !force {
        if let Some(err) =
            check_assumptions_bivirus(p, StepBound::Invariance, Some((x1, x2))).into_error()
        {
            return Err(err);
        }
    }
    let mut states = Vec::with_capacity(steps + 1);
    states.push((x1.to_vec(), x2.to_vec()));
    let (mut c1, mut c2) = (x1.to_vec(), x2.to_vec());
    let (mut n1, mut n2) = (Vec::new(), Vec::new());
    for _ in 0..steps {
        step_bivirus_into(p, &c1, &c2, &mut n1, &mut n2);
        std::mem::swap(&mut c1, &mut n1);
        std::mem::swap(&mut c2, &mut n2);
        states.push((c1.clone(), c2.clone()));
    }
    BiTrajectory::from_states(p.h(), states)
}

fn require_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

fn positive_delta(delta: &[f64]) -> Result<()> {
    if delta.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Precondition(
            "curing rates must be strictly positive for the fixed-point map".into(),
        ));
    }
    Ok(())
}

/// The monotone map whose fixed points are the equilibria:
/// `T_i(x) = g_i / (1 + g_i)` with `g = D^{-1}(B x + H x^2)`.
pub fn fixed_point_map(p: &SisParams, x: &[f64]) -> Result<Vec<f64>> {
    require_len(p.n(), x.len())?;
    positive_delta(p.delta())?;
    let bx = p.pair().apply(x)?;
    let hx = p.triple().apply(x)?;
    Ok((0..p.n())
        .map(|i| {
            let g = (bx[i] + hx[i]) / p.delta()[i];
            g / (1.0 + g)
        })
        .collect())
}

/// General-order counterpart of [`fixed_point_map`], with
/// `g = D^{-1} sum_k F_k x^{k-1}`.
pub fn fixed_point_map_general(p: &GeneralParams, x: &[f64]) -> Result<Vec<f64>> {
    require_len(p.n(), x.len())?;
    positive_delta(p.delta())?;
    let mut g = vec![0.0; p.n()];
    for (_, t) in p.layers() {
        for (acc, v) in g.iter_mut().zip(t.apply(x)?) {
            *acc += v;
        }
    }
    Ok(g
        .iter()
        .zip(p.delta())
        .map(|(gi, di)| {
            let g = gi / di;
            g / (1.0 + g)
        })
        .collect())
}

/// An equilibrium certified by its step residual
/// `max_i |step(x)_i - x_i|`.
#[derive(Debug, Clone, Serialize)]
pub struct Equilibrium {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Starting point that sits below the large endemic equilibrium when one
/// exists: one half on every node with third-order mass, zero elsewhere.
pub fn endemic_seed(p: &SisParams) -> Vec<f64> {
    p.triple()
        .rows_nonzero()
        .into_iter()
        .map(|nz| if nz { 0.5 } else { 0.0 })
        .collect()
}

/// General-order endemic seed: `(n-2)/(n-1)` on every node carrying any
/// higher-order mass, zero elsewhere.
pub fn endemic_seed_general(p: &GeneralParams) -> Vec<f64> {
    let n = p.n();
    let level = if n >= 2 {
        (n as f64 - 2.0) / (n as f64 - 1.0)
    } else {
        0.0
    };
    let mut any = vec![false; n];
    for (k, t) in p.layers() {
        if k < 3 {
            continue;
        }
        for (row, nz) in any.iter_mut().zip(t.rows_nonzero()) {
            *row |= nz;
        }
    }
    any.into_iter()
        .map(|nz| if nz { level } else { 0.0 })
        .collect()
}

fn find_equilibrium_impl(
    map: impl Fn(&[f64]) -> Vec<f64>,
    step: impl Fn(&[f64]) -> Vec<f64>,
    init: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<Equilibrium> {
    let residual_of = |x: &[f64]| -> f64 {
        step(x)
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let mut x = init.to_vec();
    let mut iterations = 0;
    let mut stalled = false;
    while iterations < max_iters {
        let next = map(&x);
        iterations += 1;
        let change = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = next;
        if change <= tol {
            let residual = residual_of(&x);
            if residual <= 10.0 * tol {
                return Ok(Equilibrium {
                    x,
                    residual,
                    iterations,
                });
            }
            if change < 1e-15 {
                stalled = true;
                break;
            }
        }
    }
    // The monotone map can stall short of the step tolerance; polish by
    // iterating the dynamics directly, which shares the same fixed points.
    if stalled || iterations < max_iters {
        while iterations < max_iters {
            let next = step(&x);
            iterations += 1;
            let residual = next
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            x = next;
            if residual <= 10.0 * tol {
                let residual = residual_of(&x);
                return Ok(Equilibrium {
                    x,
                    residual,
                    iterations,
                });
            }
        }
    }
    let residual = residual_of(&x);
    Err(Error::non_convergence(
        "equilibrium search",
        iterations,
        residual,
        x,
    ))
}

/// Finds an equilibrium by iterating [`fixed_point_map`] from `init`
/// (iterate from the all-ones vector to reach the largest equilibrium).
/// The returned point satisfies `residual <= 10 * tol`; on failure the
/// error carries the best iterate.
pub fn find_equilibrium(
    p: &SisParams,
    init: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<Equilibrium> {
    require_len(p.n(), init.len())?;
    positive_delta(p.delta())?;
    if box_margin(init) < 0.0 {
        return Err(Error::Input("initial point must lie in [0,1]^n".into()));
    }
    find_equilibrium_impl(
        |x| fixed_point_map(p, x).expect("validated"),
        |x| step_unchecked(p, x),
        init,
        tol,
        max_iters,
    )
}

/// General-order counterpart of [`find_equilibrium`].
pub fn find_equilibrium_general(
    p: &GeneralParams,
    init: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<Equilibrium> {
    require_len(p.n(), init.len())?;
    positive_delta(p.delta())?;
    if box_margin(init) < 0.0 {
        return Err(Error::Input("initial point must lie in [0,1]^n".into()));
    }
    find_equilibrium_impl(
        |x| fixed_point_map_general(p, x).expect("validated"),
        |x| step_general_unchecked(p, x),
        init,
        tol,
        max_iters,
    )
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut v = 1u64;
    for i in 0..k.min(n - k) {
        v = v * (n - i) as u64 / (i + 1) as u64;
    }
    v as f64
}

/// Verifies that `xbar` is an equilibrium within `eq_tol`.
fn require_equilibrium(residual: f64, eq_tol: f64) -> Result<()> {
    if residual > eq_tol {
        return Err(Error::Precondition(format!(
            "expansion point is not an equilibrium: step residual {residual:.3e} > {eq_tol:.3e}"
        )));
    }
    Ok(())
}

/// Exact polynomial expansion of the step map around an equilibrium.
///
/// Writing `y = x - xbar`, one step satisfies
///
/// ```text
/// y(t+1) = K1 y + K2 y^2 + K3 y^3
/// ```
///
/// with no remainder, where the returned tensors are
///
/// ```text
/// K1 = I - h D + h (I - diag(xbar)) (B + 2 H xbar) - h diag(B xbar + H xbar^2)
/// K2 = h (I - diag(xbar)) H - h (lift(B) + 2 lift(H) xbar)
/// K3 = -h lift(H)
/// ```
///
/// `eq_tol` bounds the accepted step residual at `xbar`.
pub fn error_dynamics_tensors(
    p: &SisParams,
    xbar: &[f64],
    eq_tol: f64,
) -> Result<[SparseTensor; 3]> {
    require_len(p.n(), xbar.len())?;
    let stepped = step_unchecked(p, xbar);
    let residual = stepped
        .iter()
        .zip(xbar)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    require_equilibrium(residual, eq_tol)?;

    let h = p.h();
    let one_minus: Vec<f64> = xbar.iter().map(|&v| 1.0 - v).collect();
    let bx = p.pair().apply(xbar)?;
    let hx2 = p.triple().apply(xbar)?;
    let drive: Vec<f64> = bx.iter().zip(&hx2).map(|(a, b)| a + b).collect();

    let k1 = SparseTensor::identity(p.n())
        .add(&SparseTensor::from_diagonal(p.delta()).scale(-h))?
        .add(
            &p.pair()
                .add(&p.triple().contract(xbar, 1)?.scale(2.0))?
                .scale_rows(&one_minus)?
                .scale(h),
        )?
        .add(&SparseTensor::from_diagonal(&drive).scale(-h))?;

    let k2 = p
        .triple()
        .scale_rows(&one_minus)?
        .sub(&p.pair().lift().add(&p.triple().lift().contract(xbar, 1)?.scale(2.0))?)?
        .scale(h);

    let k3 = p.triple().lift().scale(-h);
    Ok([k1, k2, k3])
}

/// General-order expansion: returns `G_1 .. G_K` (orders `2 .. K+1`) with
///
/// ```text
/// y(t+1) = G_1 y + G_2 y^2 + ... + G_K y^K
/// ```
///
/// exactly, where `K` is the largest layer order and, writing `F_2 = B`,
///
/// ```text
/// G_i = [i = 1] (I - h D)
///     + h (I - diag(xbar)) sum_{k >= max(2, i+1)} C(k-1, i) F_k xbar^{k-1-i}
///     - h sum_{k >= max(2, i)} C(k-1, i-1) lift(F_k) xbar^{k-i}
/// ```
pub fn error_dynamics_general(
    p: &GeneralParams,
    xbar: &[f64],
    eq_tol: f64,
) -> Result<Vec<SparseTensor>> {
    require_len(p.n(), xbar.len())?;
    let stepped = step_general_unchecked(p, xbar);
    let residual = stepped
        .iter()
        .zip(xbar)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    require_equilibrium(residual, eq_tol)?;

    let h = p.h();
    let big_k = p.max_order();
    let one_minus: Vec<f64> = xbar.iter().map(|&v| 1.0 - v).collect();
    let mut out = Vec::with_capacity(big_k - 1);
    for i in 1..=big_k {
        let mut g = SparseTensor::empty(i + 1, p.n());
        if i == 1 {
            g = g
                .add(&SparseTensor::identity(p.n()))?
                .add(&SparseTensor::from_diagonal(p.delta()).scale(-h))?;
        }
        for (k, t) in p.layers() {
            if k >= i + 1 {
                let c = binom(k - 1, i);
                g = g.add(
                    &t.contract(xbar, k - 1 - i)?
                        .scale_rows(&one_minus)?
                        .scale(h * c),
                )?;
            }
            if k >= i.max(2) {
                let c = binom(k - 1, i - 1);
                g = g.add(&t.lift().contract(xbar, k - i)?.scale(-h * c))?;
            }
        }
        out.push(g);
    }
    Ok(out)
}
