//! Regime classification and domains of attraction.
//!
//! The checkers certify one of three behaviors: the healthy state attracts
//! everything (subcritical), the healthy state and a large endemic state
//! coexist as local attractors (group drive strong enough), or the healthy
//! state is unstable and a positive equilibrium takes over (supercritical
//! with weak group drive). Each certificate is a spectral or scalar
//! inequality reported with its margin; explicit attraction radii come
//! from the polynomial expansion of the step map.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{
    self, check_assumptions, check_assumptions_general, ConditionReport, GeneralParams, SisParams,
    StepBound,
};
use crate::error::{Error, Result};
use crate::spectral::perron;
use crate::tensor::SparseTensor;

/// Decision-table outcome. The bistable and endemic labels are
/// "candidates": the certificates guarantee the advertised equilibrium
/// structure, and the endemic smallness condition is a heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    HealthyGlobal,
    BistableCandidate,
    EndemicCandidate,
    Indeterminate,
}

/// Everything the regime decision table looked at.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    /// Spectral radius of `I - h D + h B`; below one means the healthy
    /// state is locally stable against pairwise spread.
    pub rho_reproduction: f64,
    /// Spectral radius of `D^{-1} B`; sits on the same side of one as
    /// `rho_reproduction`.
    pub rho_scaled: f64,
    /// Spectral radius of `D^{-1} B + D^{-1} (higher drive at saturation)`;
    /// below one certifies global convergence to the healthy state.
    pub rho_saturated: f64,
    /// Indicator of nodes carrying any higher-order infection mass.
    pub z: Vec<u8>,
    /// Group-drive strength at saturation, `None` without higher layers.
    pub theta: Option<f64>,
    /// Threshold `theta` must reach for the bistability certificate.
    pub theta_threshold: f64,
    /// Largest higher-order rate entry, compared against `smallness_tol`.
    pub max_higher_entry: f64,
    /// Cutoff used by the endemic smallness heuristic.
    pub smallness_tol: f64,
    pub conditions: Vec<ConditionReport>,
    pub classification: Regime,
}

/// Region of initial states that converge to `center`, measured in the
/// sup norm on `x - center` and intersected with the state box.
#[derive(Debug, Clone, Serialize)]
pub struct DomainOfAttraction {
    pub kind: DoaKind,
    /// Attraction radius; `None` means unbounded.
    pub radius: Option<f64>,
    /// Per-node radii when the bound is per-node (infinite entries
    /// serialize as null).
    pub per_node: Option<Vec<f64>>,
    pub center: Vec<f64>,
    /// True when the certificate covers the whole state box.
    pub global: bool,
    pub conditions: Vec<ConditionReport>,
}

/// Which bound produced the radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DoaKind {
    /// Healthy-state radius from curing margin over group drive.
    Alpha1,
    /// Endemic radius from the quadratic bound on the expansion row sums.
    Alpha2,
    /// Positive root of the per-node polynomial row-sum equation.
    PPlus,
}

/// Stability verdict for a linearization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityVerdict {
    Stable,
    Unstable,
    Indeterminate,
}

/// Jacobian of the step map at a point, with a certified verdict.
#[derive(Debug, Clone)]
pub struct JacobianAnalysis {
    pub matrix: Array2<f64>,
    /// Spectral bound backing the verdict: the radius itself when the
    /// matrix is nonnegative, otherwise `rho(|J|)` for `Stable` and the
    /// rightmost eigenvalue for `Unstable`.
    pub rho: f64,
    pub verdict: StabilityVerdict,
}

fn require_positive_delta(delta: &[f64]) -> Result<()> {
    if delta.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Precondition(
            "curing rates must be strictly positive".into(),
        ));
    }
    Ok(())
}

fn require_nonnegative_rates(layers: &[&SparseTensor]) -> Result<()> {
    for t in layers {
        if t.entries().any(|(_, w)| w < 0.0) {
            return Err(Error::Precondition("infection rates must be nonnegative".into()));
        }
    }
    Ok(())
}

/// Dense `I - h D + h B`; rejects parameters that would make it negative.
fn reproduction_matrix(delta: &[f64], pair: &SparseTensor, h: f64) -> Result<Array2<f64>> {
    if delta.iter().any(|&d| h * d > 1.0) {
        return Err(Error::Precondition(
            "h * delta_i must not exceed 1 for the reproduction radius".into(),
        ));
    }
    let mut m = pair.to_matrix()? * h;
    for (i, &d) in delta.iter().enumerate() {
        m[(i, i)] += 1.0 - h * d;
    }
    Ok(m)
}

/// Spectral radius of `I - h D + h B`. Sits on the same side of one as
/// the radius of `D^{-1} B` ([`reproduction_ratio`]).
pub fn reproduction_number(p: &SisParams) -> Result<f64> {
    require_nonnegative_rates(&[p.pair()])?;
    Ok(perron(&reproduction_matrix(p.delta(), p.pair(), p.h())?)?.radius)
}

/// Spectral radius of `D^{-1} B`.
pub fn reproduction_ratio(p: &SisParams) -> Result<f64> {
    require_positive_delta(p.delta())?;
    require_nonnegative_rates(&[p.pair()])?;
    let inv: Vec<f64> = p.delta().iter().map(|d| 1.0 / d).collect();
    Ok(perron(&p.pair().scale_rows(&inv)?.to_matrix()?)?.radius)
}

/// Saturation indicator and the matrix `D^{-1} B + D^{-1} (drive)`, where
/// `drive` is the higher-order infection pressure with every carrier node
/// pinned at 1.
fn saturated_parts(
    delta: &[f64],
    pair: &SparseTensor,
    higher: &[&SparseTensor],
) -> Result<(Array2<f64>, Vec<u8>)> {
    let n = delta.len();
    let mut z = vec![0u8; n];
    for t in higher {
        for (row, nz) in z.iter_mut().zip(t.rows_nonzero()) {
            *row |= nz as u8;
        }
    }
    let zf: Vec<f64> = z.iter().map(|&v| v as f64).collect();
    let mut m = pair.to_matrix()?;
    for t in higher {
        m = m + t.contract(&zf, t.order() - 2)?.to_matrix()?;
    }
    for (i, &d) in delta.iter().enumerate() {
        for j in 0..n {
            m[(i, j)] /= d;
        }
    }
    Ok((m, z))
}

/// Certificate that the healthy state attracts the whole box:
/// `rho(D^{-1} B + D^{-1} H z) < 1` with `z` flagging rows of `H` that
/// carry mass.
pub fn check_healthy_global(p: &SisParams) -> Result<HealthyGlobalCheck> {
    require_positive_delta(p.delta())?;
    require_nonnegative_rates(&[p.pair(), p.triple()])?;
    let (m, z) = saturated_parts(p.delta(), p.pair(), &[p.triple()])?;
    let rho = perron(&m)?.radius;
    Ok(HealthyGlobalCheck {
        rho,
        z,
        condition: ConditionReport::from_margin("healthy_global_spectral", 1.0 - rho, true),
    })
}

/// General-order variant of [`check_healthy_global`], saturating every
/// higher layer.
pub fn check_healthy_global_general(p: &GeneralParams) -> Result<HealthyGlobalCheck> {
    require_positive_delta(p.delta())?;
    let layers: Vec<&SparseTensor> = p.layers().map(|(_, t)| t).collect();
    require_nonnegative_rates(&layers)?;
    let higher: Vec<&SparseTensor> = p.higher().values().collect();
    let (m, z) = saturated_parts(p.delta(), p.pair(), &higher)?;
    let rho = perron(&m)?.radius;
    Ok(HealthyGlobalCheck {
        rho,
        z,
        condition: ConditionReport::from_margin("healthy_global_spectral", 1.0 - rho, true),
    })
}

/// Result of the global healthy-state certificate.
#[derive(Debug, Clone, Serialize)]
pub struct HealthyGlobalCheck {
    pub rho: f64,
    pub z: Vec<u8>,
    pub condition: ConditionReport,
}

/// Result of the bistability certificate: healthy state locally stable
/// while saturated group drive exceeds the threshold, which forces a large
/// endemic equilibrium into existence.
#[derive(Debug, Clone, Serialize)]
pub struct BistabilityCheck {
    pub rho: f64,
    /// `min_i (2 D^{-1} B z + D^{-1} H z^2)_i` over carrier nodes `i`
    /// (scaled drive at saturation); `None` without carriers.
    pub theta: Option<f64>,
    pub threshold: f64,
    pub conditions: Vec<ConditionReport>,
}

impl BistabilityCheck {
    pub fn holds(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }
}

/// Bistability certificate: `rho(I - h D + h B) < 1` and saturated group
/// drive `theta >= 4` on every carrier node. When it holds, the healthy
/// state is locally stable and an endemic equilibrium with `x_i >= 1/2`
/// on every carrier node exists.
pub fn check_bistability(p: &SisParams) -> Result<BistabilityCheck> {
    require_positive_delta(p.delta())?;
    require_nonnegative_rates(&[p.pair(), p.triple()])?;
    let rho = reproduction_number(p)?;
    let z: Vec<f64> = p
        .triple()
        .rows_nonzero()
        .into_iter()
        .map(|b| b as u8 as f64)
        .collect();
    let bz = p.pair().apply(&z)?;
    let hz2 = p.triple().apply(&z)?;
    let theta = z
        .iter()
        .enumerate()
        .filter(|&(_, &zi)| zi > 0.0)
        .map(|(i, _)| (2.0 * bz[i] + hz2[i]) / p.delta()[i])
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
    let conditions = vec![
        ConditionReport::from_margin("healthy_locally_stable_spectral", 1.0 - rho, true),
        ConditionReport::from_margin("group_drive_theta", theta.unwrap_or(0.0) - 4.0, false),
    ];
    Ok(BistabilityCheck {
        rho,
        theta,
        threshold: 4.0,
        conditions,
    })
}

/// General-order bistability certificate: `rho(I - h D + h B) < 1` and
/// `min_i (D^{-1}(B z + sum_k ((n-2)/(n-1))^{k-2} F_k z^{k-1}))_i >= n - 1`
/// over all nodes, which forces an endemic equilibrium at or above
/// `(n-2)/(n-1)` everywhere.
pub fn check_bistability_general(p: &GeneralParams) -> Result<BistabilityCheck> {
    require_positive_delta(p.delta())?;
    let layers: Vec<&SparseTensor> = p.layers().map(|(_, t)| t).collect();
    require_nonnegative_rates(&layers)?;
    let rho = perron(&reproduction_matrix(p.delta(), p.pair(), p.h())?)?.radius;
    let n = p.n();
    let mut z = vec![0.0; n];
    for t in p.higher().values() {
        for (row, nz) in z.iter_mut().zip(t.rows_nonzero()) {
            if nz {
                *row = 1.0;
            }
        }
    }
    let level = if n >= 2 {
        (n as f64 - 2.0) / (n as f64 - 1.0)
    } else {
        0.0
    };
    let mut drive = p.pair().apply(&z)?;
    for (&k, t) in p.higher() {
        let weight = level.powi(k as i32 - 2);
        for (d, v) in drive.iter_mut().zip(t.apply(&z)?) {
            *d += weight * v;
        }
    }
    let theta = if p.higher().is_empty() {
        None
    } else {
        Some(
            drive
                .iter()
                .zip(p.delta())
                .map(|(d, del)| d / del)
                .fold(f64::INFINITY, f64::min),
        )
    };
    let threshold = n as f64 - 1.0;
    let conditions = vec![
        ConditionReport::from_margin("healthy_locally_stable_spectral", 1.0 - rho, true),
        ConditionReport::from_margin(
            "group_drive_theta",
            theta.unwrap_or(0.0) - threshold,
            false,
        ),
    ];
    Ok(BistabilityCheck {
        rho,
        theta,
        threshold,
        conditions,
    })
}

/// Result of the endemic certificate.
#[derive(Debug, Clone, Serialize)]
pub struct EndemicCheck {
    pub rho: f64,
    pub max_higher_entry: f64,
    pub smallness_tol: f64,
    pub conditions: Vec<ConditionReport>,
}

impl EndemicCheck {
    pub fn holds(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }
}

/// Endemic certificate: `rho(I - h D + h B) > 1` while every higher-order
/// rate entry stays below `smallness_tol` (default `0.01 * min_i delta_i`).
/// The smallness cutoff is a heuristic for staying in the perturbative
/// regime where the unique positive equilibrium of the pairwise model
/// persists.
pub fn check_endemic(p: &SisParams, smallness_tol: Option<f64>) -> Result<EndemicCheck> {
    require_positive_delta(p.delta())?;
    require_nonnegative_rates(&[p.pair(), p.triple()])?;
    let rho = reproduction_number(p)?;
    let tol = smallness_tol
        .unwrap_or_else(|| 0.01 * p.delta().iter().copied().fold(f64::INFINITY, f64::min));
    let max_entry = p.triple().max_abs();
    let conditions = vec![
        ConditionReport::from_margin("healthy_unstable_spectral", rho - 1.0, true),
        ConditionReport::from_margin("higher_rates_small_heuristic", tol - max_entry, false),
    ];
    Ok(EndemicCheck {
        rho,
        max_higher_entry: max_entry,
        smallness_tol: tol,
        conditions,
    })
}

/// General-order endemic certificate; smallness applies to every layer
/// above the pairwise one.
pub fn check_endemic_general(p: &GeneralParams, smallness_tol: Option<f64>) -> Result<EndemicCheck> {
    require_positive_delta(p.delta())?;
    let layers: Vec<&SparseTensor> = p.layers().map(|(_, t)| t).collect();
    require_nonnegative_rates(&layers)?;
    let rho = perron(&reproduction_matrix(p.delta(), p.pair(), p.h())?)?.radius;
    let tol = smallness_tol
        .unwrap_or_else(|| 0.01 * p.delta().iter().copied().fold(f64::INFINITY, f64::min));
    let max_entry = p
        .higher()
        .values()
        .map(SparseTensor::max_abs)
        .fold(0.0, f64::max);
    let conditions = vec![
        ConditionReport::from_margin("healthy_unstable_spectral", rho - 1.0, true),
        ConditionReport::from_margin("higher_rates_small_heuristic", tol - max_entry, false),
    ];
    Ok(EndemicCheck {
        rho,
        max_higher_entry: max_entry,
        smallness_tol: tol,
        conditions,
    })
}

fn assemble_report(
    rho_reproduction: f64,
    rho_scaled: f64,
    healthy: HealthyGlobalCheck,
    bistable: BistabilityCheck,
    endemic: EndemicCheck,
) -> RegimeReport {
    let classification = if healthy.condition.holds {
        Regime::HealthyGlobal
    } else if bistable.holds() {
        Regime::BistableCandidate
    } else if endemic.holds() {
        Regime::EndemicCandidate
    } else {
        Regime::Indeterminate
    };
    let mut conditions = vec![healthy.condition];
    conditions.extend(bistable.conditions);
    conditions.extend(endemic.conditions);
    RegimeReport {
        rho_reproduction,
        rho_scaled,
        rho_saturated: healthy.rho,
        z: healthy.z,
        theta: bistable.theta,
        theta_threshold: bistable.threshold,
        max_higher_entry: endemic.max_higher_entry,
        smallness_tol: endemic.smallness_tol,
        conditions,
        classification,
    }
}

/// Runs all single-virus certificates and applies the decision table:
/// global healthy, else bistable, else endemic, else indeterminate.
pub fn classify(p: &SisParams, smallness_tol: Option<f64>) -> Result<RegimeReport> {
    let rho_reproduction = reproduction_number(p)?;
    let rho_scaled = reproduction_ratio(p)?;
    Ok(assemble_report(
        rho_reproduction,
        rho_scaled,
        check_healthy_global(p)?,
        check_bistability(p)?,
        check_endemic(p, smallness_tol)?,
    ))
}

/// General-order counterpart of [`classify`].
pub fn classify_general(p: &GeneralParams, smallness_tol: Option<f64>) -> Result<RegimeReport> {
    let rho_reproduction = perron(&reproduction_matrix(p.delta(), p.pair(), p.h())?)?.radius;
    require_positive_delta(p.delta())?;
    let inv: Vec<f64> = p.delta().iter().map(|d| 1.0 / d).collect();
    let rho_scaled = perron(&p.pair().scale_rows(&inv)?.to_matrix()?)?.radius;
    Ok(assemble_report(
        rho_reproduction,
        rho_scaled,
        check_healthy_global_general(p)?,
        check_bistability_general(p)?,
        check_endemic_general(p, smallness_tol)?,
    ))
}

/// Positive roots of the per-node equations
/// `sum_t rows[t][i] * y^t = 1`, solved by bracketed bisection.
///
/// Coefficients must be nonnegative with `rows[0][i] < 1` (so each
/// polynomial starts below 1 and increases). Nodes whose higher
/// coefficients all vanish report an infinite root.
pub fn p_plus_roots(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let Some(first) = rows.first() else {
        return Err(Error::Input("need at least the linear coefficients".into()));
    };
    let n = first.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Input("coefficient rows must share a length".into()));
    }
    if rows.iter().any(|r| r.iter().any(|&c| !(c >= 0.0))) {
        return Err(Error::Input("coefficients must be nonnegative".into()));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let c0 = rows[0][i];
        if c0 >= 1.0 {
            return Err(Error::Precondition(format!(
                "linear coefficient {c0} at node {i} is not below 1"
            )));
        }
        let phi = |y: f64| -> f64 {
            let mut acc = 0.0;
            let mut pow = 1.0;
            for r in rows {
                acc += r[i] * pow;
                pow *= y;
            }
            acc
        };
        if rows[1..].iter().all(|r| r[i] == 0.0) {
            out.push(f64::INFINITY);
            continue;
        }
        let mut hi = 1.0;
        while phi(hi) < 1.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    Ok(out)
}

/// Healthy-state attraction radius
/// `alpha1 = min_i (delta_i - sum_j B[i,j]) / (sum_jk H[i,j,k])`:
/// trajectories starting with `max_i x_i(0) < alpha1` decay to zero.
///
/// Requires `H` irreducible and curing to dominate the pairwise drive on
/// every node. When curing dominates the whole infection row the bound
/// exceeds one and the certificate is global.
pub fn healthy_domain(p: &SisParams) -> Result<DomainOfAttraction> {
    require_positive_delta(p.delta())?;
    require_nonnegative_rates(&[p.pair(), p.triple()])?;
    let irreducible = p.triple().is_irreducible();
    let pair_rows = p.pair().row_sums();
    let triple_rows = p.triple().row_sums();
    let pair_margin = p
        .delta()
        .iter()
        .zip(&pair_rows)
        .map(|(d, b)| d - b)
        .fold(f64::INFINITY, f64::min);
    let total_margin = p
        .delta()
        .iter()
        .zip(&pair_rows)
        .zip(&triple_rows)
        .map(|((d, b), t)| d - b - t)
        .fold(f64::INFINITY, f64::min);
    let conditions = vec![
        ConditionReport::from_bool("higher_layer_irreducible", irreducible),
        ConditionReport::from_margin("curing_dominates_pairwise", pair_margin, true),
        ConditionReport::from_margin("curing_dominates_all_infection", total_margin, true),
    ];
    if !irreducible {
        return Err(Error::Precondition(
            "higher-order layer must be irreducible for the healthy radius".into(),
        ));
    }
    if !(pair_margin > 0.0) {
        return Err(Error::Precondition(
            "curing must dominate the pairwise row sums on every node".into(),
        ));
    }
    let per_node: Vec<f64> = p
        .delta()
        .iter()
        .zip(&pair_rows)
        .zip(&triple_rows)
        .map(|((d, b), t)| if *t > 0.0 { (d - b) / t } else { f64::INFINITY })
        .collect();
    let radius = per_node.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DomainOfAttraction {
        kind: DoaKind::Alpha1,
        radius: if radius.is_finite() { Some(radius) } else { None },
        per_node: Some(per_node),
        center: vec![0.0; p.n()],
        global: total_margin > 0.0,
        conditions,
    })
}

/// Endemic attraction radius from the expansion row sums: with
/// `k1 + k2 y + k3 y^2 < 1` for `y` below the positive root `alpha2`,
/// perturbations with `max_i |x_i(0) - xbar_i| < alpha2` contract back to
/// the equilibrium.
///
/// Requires the contraction step bound, an irreducible `H`, and curing to
/// dominate the linearized infection pressure at `xbar` on every node.
pub fn endemic_domain(p: &SisParams, xbar: &[f64], eq_tol: f64) -> Result<DomainOfAttraction> {
    require_positive_delta(p.delta())?;
    require_nonnegative_rates(&[p.pair(), p.triple()])?;
    let mut conditions = Vec::new();
    let bound = check_assumptions(p, StepBound::Contraction, None);
    conditions.extend(bound.items.iter().cloned());
    let irreducible = p.triple().is_irreducible();
    conditions.push(ConditionReport::from_bool(
        "higher_layer_irreducible",
        irreducible,
    ));
    let damping = damping_margin(p, xbar)?;
    conditions.push(ConditionReport::from_margin(
        "curing_dominates_linearized_drive",
        damping,
        true,
    ));
    if let Some(err) = bound.into_error() {
        return Err(err);
    }
    if !irreducible {
        return Err(Error::Precondition(
            "higher-order layer must be irreducible for the endemic radius".into(),
        ));
    }
    if !(damping > 0.0) {
        return Err(Error::Precondition(
            "curing must dominate the linearized infection drive at the equilibrium".into(),
        ));
    }
    let [k1, k2, k3] = dynamics::error_dynamics_tensors(p, xbar, eq_tol)?;
    let rows = [k1.abs_row_sums(), k2.abs_row_sums(), k3.abs_row_sums()];
    let per_node = quadratic_roots(&rows)?;
    let radius = per_node.iter().copied().fold(f64::INFINITY, f64::min);
    let global = (0..p.n()).all(|i| rows[0][i] + rows[1][i] + rows[2][i] < 1.0);
    Ok(DomainOfAttraction {
        kind: DoaKind::Alpha2,
        radius: if radius.is_finite() { Some(radius) } else { None },
        per_node: Some(per_node),
        center: xbar.to_vec(),
        global,
        conditions,
    })
}

/// `min_i` of `delta_i - (1 - xbar_i) sum_j (B[i,j] + 2 (H xbar)[i,j])
/// + (B xbar)_i + (H xbar^2)_i`: positive when curing beats the
/// linearized infection pressure at `xbar`.
fn damping_margin(p: &SisParams, xbar: &[f64]) -> Result<f64> {
    let hx = p.triple().contract(xbar, 1)?;
    let pressure: Vec<f64> = p
        .pair()
        .row_sums()
        .iter()
        .zip(hx.row_sums())
        .map(|(b, h)| b + 2.0 * h)
        .collect();
    let bx = p.pair().apply(xbar)?;
    let hx2 = p.triple().apply(xbar)?;
    Ok((0..p.n())
        .map(|i| {
            p.delta()[i] - (1.0 - xbar[i]) * pressure[i] + bx[i] + hx2[i]
        })
        .fold(f64::INFINITY, f64::min))
}

/// Closed-form positive roots of `k1 + k2 y + k3 y^2 = 1` per node, with
/// the linear and unbounded degenerate cases handled explicitly.
fn quadratic_roots(rows: &[Vec<f64>; 3]) -> Result<Vec<f64>> {
    let n = rows[0].len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (c1, c2, c3) = (rows[0][i], rows[1][i], rows[2][i]);
        if c1 >= 1.0 {
            return Err(Error::Precondition(format!(
                "expansion row sum {c1} at node {i} is not below 1"
            )));
        }
        let root = if c3 > 0.0 {
            (-c2 + (c2 * c2 - 4.0 * c3 * (c1 - 1.0)).sqrt()) / (2.0 * c3)
        } else if c2 > 0.0 {
            (1.0 - c1) / c2
        } else {
            f64::INFINITY
        };
        out.push(root);
    }
    Ok(out)
}

/// Healthy-state radius for the general model: per-node positive roots of
/// the row-sum polynomial of `I - h D + h B` and `h F_k`, `k >= 3`. At
/// third order this reproduces [`healthy_domain`] exactly.
pub fn healthy_domain_general(p: &GeneralParams) -> Result<DomainOfAttraction> {
    require_positive_delta(p.delta())?;
    let layers: Vec<&SparseTensor> = p.layers().map(|(_, t)| t).collect();
    require_nonnegative_rates(&layers)?;
    let mut conditions = Vec::new();
    let mut all_irreducible = true;
    for (&k, t) in p.higher() {
        let irr = t.is_irreducible();
        all_irreducible &= irr;
        conditions.push(ConditionReport::from_bool(
            &format!("order{k}_layer_irreducible"),
            irr,
        ));
    }
    let linear = reproduction_matrix(p.delta(), p.pair(), p.h())?;
    let c1 = SparseTensor::from_matrix(&linear).abs_row_sums();
    let margin = c1.iter().map(|c| 1.0 - c).fold(f64::INFINITY, f64::min);
    conditions.push(ConditionReport::from_margin(
        "curing_dominates_pairwise",
        margin,
        true,
    ));
    if !all_irreducible {
        return Err(Error::Precondition(
            "every higher-order layer must be irreducible for the healthy radius".into(),
        ));
    }
    if !(margin > 0.0) {
        return Err(Error::Precondition(
            "curing must dominate the pairwise row sums on every node".into(),
        ));
    }
    let big_k = p.max_order();
    let mut rows = vec![vec![0.0; p.n()]; big_k - 1];
    rows[0] = c1;
    for (&k, t) in p.higher() {
        rows[k - 2] = t.abs_row_sums().iter().map(|s| p.h() * s).collect();
    }
    let per_node = p_plus_roots(&rows)?;
    let radius = per_node.iter().copied().fold(f64::INFINITY, f64::min);
    let global = (0..p.n()).all(|i| rows.iter().map(|r| r[i]).sum::<f64>() < 1.0);
    Ok(DomainOfAttraction {
        kind: DoaKind::PPlus,
        radius: if radius.is_finite() { Some(radius) } else { None },
        per_node: Some(per_node),
        center: vec![0.0; p.n()],
        global,
        conditions,
    })
}

/// Endemic radius for the general model: per-node positive roots of the
/// row-sum polynomial of the expansion tensors at `xbar`.
pub fn endemic_domain_general(
    p: &GeneralParams,
    xbar: &[f64],
    eq_tol: f64,
) -> Result<DomainOfAttraction> {
    require_positive_delta(p.delta())?;
    let layers: Vec<&SparseTensor> = p.layers().map(|(_, t)| t).collect();
    require_nonnegative_rates(&layers)?;
    let mut conditions = Vec::new();
    let bound = check_assumptions_general(p, StepBound::Contraction, None);
    conditions.extend(bound.items.iter().cloned());
    let mut all_irreducible = true;
    for (&k, t) in p.higher() {
        let irr = t.is_irreducible();
        all_irreducible &= irr;
        conditions.push(ConditionReport::from_bool(
            &format!("order{k}_layer_irreducible"),
            irr,
        ));
    }
    let damping = damping_margin_general(p, xbar)?;
    conditions.push(ConditionReport::from_margin(
        "curing_dominates_linearized_drive",
        damping,
        true,
    ));
    if let Some(err) = bound.into_error() {
        return Err(err);
    }
    if !all_irreducible {
        return Err(Error::Precondition(
            "every higher-order layer must be irreducible for the endemic radius".into(),
        ));
    }
    if !(damping > 0.0) {
        return Err(Error::Precondition(
            "curing must dominate the linearized infection drive at the equilibrium".into(),
        ));
    }
    let gs = dynamics::error_dynamics_general(p, xbar, eq_tol)?;
    let rows: Vec<Vec<f64>> = gs.iter().map(SparseTensor::abs_row_sums).collect();
    let per_node = p_plus_roots(&rows)?;
    let radius = per_node.iter().copied().fold(f64::INFINITY, f64::min);
    let global = (0..p.n()).all(|i| rows.iter().map(|r| r[i]).sum::<f64>() < 1.0);
    Ok(DomainOfAttraction {
        kind: DoaKind::PPlus,
        radius: if radius.is_finite() { Some(radius) } else { None },
        per_node: Some(per_node),
        center: xbar.to_vec(),
        global,
        conditions,
    })
}

/// General-order damping margin at `xbar`: curing minus the linearized
/// infection pressure, mirroring [`damping_margin`] with every layer's
/// derivative row sums.
fn damping_margin_general(p: &GeneralParams, xbar: &[f64]) -> Result<f64> {
    let n = p.n();
    let mut pressure = vec![0.0; n];
    let mut drive = vec![0.0; n];
    for (k, t) in p.layers() {
        let deriv = t.contract(xbar, k - 2)?;
        for (acc, s) in pressure.iter_mut().zip(deriv.row_sums()) {
            *acc += (k - 1) as f64 * s;
        }
        for (acc, v) in drive.iter_mut().zip(t.apply(xbar)?) {
            *acc += v;
        }
    }
    Ok((0..n)
        .map(|i| p.delta()[i] - (1.0 - xbar[i]) * pressure[i] + drive[i])
        .fold(f64::INFINITY, f64::min))
}

/// Jacobian of the single-virus step map at `x` in the box, with verdict.
///
/// The matrix is Metzler there, so the verdict is certified two-sided:
/// stable when `rho(|J|) < 1`, unstable when the rightmost eigenvalue
/// (the Perron root of a diagonal shift) exceeds 1.
pub fn jacobian(p: &SisParams, x: &[f64]) -> Result<JacobianAnalysis> {
    if x.len() != p.n() {
        return Err(Error::Dimension {
            expected: p.n(),
            found: x.len(),
        });
    }
    if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::Input("evaluation point must lie in [0,1]^n".into()));
    }
    require_nonnegative_rates(&[p.pair(), p.triple()])?;
    let n = p.n();
    let h = p.h();
    let hx = p.triple().contract(x, 1)?;
    let bx = p.pair().apply(x)?;
    let hx2 = p.triple().apply(x)?;
    let mut j = Array2::zeros((n, n));
    for (t, w) in p.pair().entries() {
        j[(t[0], t[1])] += h * (1.0 - x[t[0]]) * w;
    }
    for (t, w) in hx.entries() {
        j[(t[0], t[1])] += h * (1.0 - x[t[0]]) * 2.0 * w;
    }
    for i in 0..n {
        j[(i, i)] += 1.0 - h * p.delta()[i] - h * (bx[i] + hx2[i]);
    }
    let (rho, verdict) = metzler_verdict(&j)?;
    Ok(JacobianAnalysis {
        matrix: j,
        rho,
        verdict,
    })
}

/// General-order counterpart of [`jacobian`].
pub fn jacobian_general(p: &GeneralParams, x: &[f64]) -> Result<JacobianAnalysis> {
    if x.len() != p.n() {
        return Err(Error::Dimension {
            expected: p.n(),
            found: x.len(),
        });
    }
    if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::Input("evaluation point must lie in [0,1]^n".into()));
    }
    let layers: Vec<&SparseTensor> = p.layers().map(|(_, t)| t).collect();
    require_nonnegative_rates(&layers)?;
    let n = p.n();
    let h = p.h();
    let mut j = Array2::zeros((n, n));
    let mut drive = vec![0.0; n];
    for (k, t) in p.layers() {
        let deriv = t.contract(x, k - 2)?;
        for (tu, w) in deriv.entries() {
            j[(tu[0], tu[1])] += h * (1.0 - x[tu[0]]) * (k - 1) as f64 * w;
        }
        for (acc, v) in drive.iter_mut().zip(t.apply(x)?) {
            *acc += v;
        }
    }
    for i in 0..n {
        j[(i, i)] += 1.0 - h * p.delta()[i] - h * drive[i];
    }
    let (rho, verdict) = metzler_verdict(&j)?;
    Ok(JacobianAnalysis {
        matrix: j,
        rho,
        verdict,
    })
}

/// Two-sided stability verdict for a Metzler matrix under the sup norm.
fn metzler_verdict(j: &Array2<f64>) -> Result<(f64, StabilityVerdict)> {
    let n = j.nrows();
    let nonneg = j.iter().all(|&v| v >= 0.0);
    if nonneg {
        let rho = perron(j)?.radius;
        let verdict = if rho < 1.0 {
            StabilityVerdict::Stable
        } else if rho > 1.0 {
            StabilityVerdict::Unstable
        } else {
            StabilityVerdict::Indeterminate
        };
        return Ok((rho, verdict));
    }
    for i in 0..n {
        for k in 0..n {
            if i != k && j[(i, k)] < 0.0 {
                return Err(Error::Precondition(
                    "stability verdict needs nonnegative off-diagonal entries".into(),
                ));
            }
        }
    }
    let abs = j.mapv(f64::abs);
    let rho_abs = perron(&abs)?.radius;
    if rho_abs < 1.0 {
        return Ok((rho_abs, StabilityVerdict::Stable));
    }
    let shift = -j.diag().iter().copied().fold(f64::INFINITY, f64::min);
    let mut shifted = j.clone();
    for i in 0..n {
        shifted[(i, i)] += shift;
    }
    let rightmost = perron(&shifted)?.radius - shift;
    if rightmost > 1.0 {
        return Ok((rightmost, StabilityVerdict::Unstable));
    }
    Ok((rho_abs, StabilityVerdict::Indeterminate))
}

/// Outcome of sampling a claimed attraction region.
#[derive(Debug, Clone, Serialize)]
pub struct AttractionSample {
    pub checked: usize,
    pub violations: usize,
}

fn sample_point(rng: &mut ChaCha12Rng, center: &[f64], radius: f64) -> Vec<f64> {
    center
        .iter()
        .map(|&c| {
            let lo = (c - radius).max(0.0);
            let hi = (c + radius).min(1.0);
            rng.gen_range(lo..hi.max(lo + f64::MIN_POSITIVE))
        })
        .collect()
}

fn converges(
    step: impl Fn(&[f64]) -> Vec<f64>,
    x0: Vec<f64>,
    center: &[f64],
    max_steps: usize,
    conv_tol: f64,
) -> bool {
    let mut x = x0;
    for _ in 0..=max_steps {
        let dist = x
            .iter()
            .zip(center)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if dist <= conv_tol {
            return true;
        }
        x = step(&x);
    }
    false
}

/// Draws `samples` points strictly inside the region (sup-ball around the
/// center, intersected with the box, radius shrunk by a hair) and counts
/// how many fail to come within `conv_tol` of the center in `max_steps`
/// steps. Replica `r` uses RNG stream `r` of `seed`, so results are
/// independent of thread scheduling.
pub fn validate_domain(
    p: &SisParams,
    region: &DomainOfAttraction,
    samples: usize,
    seed: u64,
    max_steps: usize,
    conv_tol: f64,
) -> Result<AttractionSample> {
    if region.center.len() != p.n() {
        return Err(Error::Dimension {
            expected: p.n(),
            found: region.center.len(),
        });
    }
    let radius = region.radius.unwrap_or(f64::INFINITY).min(1.0) * (1.0 - 1e-9);
    let violations = (0..samples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let x0 = sample_point(&mut rng, &region.center, radius);
            let ok = converges(
                |x| dynamics::step_unchecked(p, x),
                x0,
                &region.center,
                max_steps,
                conv_tol,
            );
            usize::from(!ok)
        })
        .sum();
    Ok(AttractionSample {
        checked: samples,
        violations,
    })
}

/// General-order counterpart of [`validate_domain`].
pub fn validate_domain_general(
    p: &GeneralParams,
    region: &DomainOfAttraction,
    samples: usize,
    seed: u64,
    max_steps: usize,
    conv_tol: f64,
) -> Result<AttractionSample> {
    if region.center.len() != p.n() {
        return Err(Error::Dimension {
            expected: p.n(),
            found: region.center.len(),
        });
    }
    let radius = region.radius.unwrap_or(f64::INFINITY).min(1.0) * (1.0 - 1e-9);
    let violations = (0..samples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let x0 = sample_point(&mut rng, &region.center, radius);
            let ok = converges(
                |x| dynamics::step_general_unchecked(p, x),
                x0,
                &region.center,
                max_steps,
                conv_tol,
            );
            usize::from(!ok)
        })
        .sum();
    Ok(AttractionSample {
        checked: samples,
        violations,
    })
}
