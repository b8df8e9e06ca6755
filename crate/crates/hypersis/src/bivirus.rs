//! Checkers for two competing viruses: joint extinction, per-virus
//! survival thresholds, multistability of the healthy state together with
//! both winner-takes-all equilibria, and mutual-invasion conditions for a
//! coexisting equilibrium.

use ndarray::Array2;
use serde::Serialize;

use crate::analysis::{
    check_bistability, check_healthy_global, healthy_domain, jacobian, DomainOfAttraction,
    StabilityVerdict,
};
use crate::dynamics::{find_equilibrium, BiVirusParams, ConditionReport, EQ_MAX_ITERS, EQ_TOL};
use crate::error::{Error, Result};
use crate::spectral::perron;

/// Winner-takes-all equilibrium: one virus settles at `x`, the other is
/// extinct.
#[derive(Debug, Clone, Serialize)]
pub struct DominantEquilibrium {
    /// Index (0 or 1) of the surviving virus.
    pub virus: usize,
    pub x: Vec<f64>,
    pub residual: f64,
    pub strictly_positive: bool,
    /// Spectral bound and verdict of the surviving virus's own
    /// linearization at `x`.
    pub self_rho: f64,
    pub self_verdict: StabilityVerdict,
    /// Spectral radius of the extinct virus's linearization at this
    /// equilibrium; above one the rival can invade.
    pub invader_rho: f64,
}

/// Mutual-invasion analysis for a coexisting equilibrium.
#[derive(Debug, Clone, Serialize)]
pub struct CoexistenceCheck {
    /// `invasion_rhos[l]` is the spectral radius of virus `l`'s
    /// linearization at the rival's dominant equilibrium.
    pub invasion_rhos: [f64; 2],
    /// Both invasion radii exceed one.
    pub mutual_invasion: bool,
    /// Coexistence via unstable dominants: both viruses supercritical and
    /// mutually invading, which destabilizes both winner-takes-all states.
    pub unstable_dominants_route: bool,
    /// Coexistence with dominants that are stable within their own virus:
    /// both self-linearizations stable and mutual invasion holds.
    pub stable_dominants_route: bool,
    /// Some route predicts a coexisting equilibrium.
    pub predicted: bool,
}

/// Everything the two-virus checkers looked at.
#[derive(Debug, Clone, Serialize)]
pub struct BiVirusReport {
    /// Per-virus spectral radius of `I - h D_l + h B_l`.
    pub rho_reproduction: [f64; 2],
    /// Per-virus saturated radius `rho(D_l^{-1} B_l + D_l^{-1} H_l z_l)`.
    pub rho_saturated: [f64; 2],
    /// Per-virus group-drive strength at saturation.
    pub theta: [Option<f64>; 2],
    /// Both saturated radii below one: the joint healthy state attracts
    /// everything.
    pub healthy_global: bool,
    /// Both viruses subcritical with strong group drive: the healthy state
    /// and both dominant equilibria are locally stable at once.
    pub multistability: bool,
    /// Both reproduction radii above one: the healthy state is unstable
    /// and each virus has a positive equilibrium on its own.
    pub both_supercritical: bool,
    /// Winner-takes-all equilibria, solved whenever some certificate says
    /// they exist.
    pub dominant: Option<[DominantEquilibrium; 2]>,
    pub coexistence: Option<CoexistenceCheck>,
    /// As-stated route to globally stable dominants: saturated radii below
    /// one with small higher-order rates. Those requirements force the
    /// reproduction radii below one, so the flag is mutually exclusive
    /// with `both_supercritical` and is reported for completeness.
    pub winner_takes_all_as_stated: bool,
    pub conditions: Vec<ConditionReport>,
}

/// Linearization of the extinct virus `invader` at a state where the
/// rival sits at `resident_x`: `I + h(-D_l + (I - diag(resident_x)) B_l)`.
pub fn invasion_matrix(
    p: &BiVirusParams,
    invader: usize,
    resident_x: &[f64],
) -> Result<Array2<f64>> {
    let v = p.virus(invader);
    if resident_x.len() != v.n() {
        return Err(Error::Dimension {
            expected: v.n(),
            found: resident_x.len(),
        });
    }
    let n = v.n();
    let h = v.h();
    let mut m = Array2::zeros((n, n));
    for (t, w) in v.pair().entries() {
        m[(t[0], t[1])] += h * (1.0 - resident_x[t[0]]) * w;
    }
    for i in 0..n {
        m[(i, i)] += 1.0 - h * v.delta()[i];
    }
    Ok(m)
}

/// Rightmost eigenvalue of a Metzler matrix via a diagonal shift; equals
/// the spectral radius when the matrix is nonnegative.
fn rightmost_eigenvalue(m: &Array2<f64>) -> Result<f64> {
    let shift = (-m.diag().iter().copied().fold(f64::INFINITY, f64::min)).max(0.0);
    if shift == 0.0 {
        return Ok(perron(m)?.radius);
    }
    let mut shifted = m.clone();
    for i in 0..m.nrows() {
        shifted[(i, i)] += shift;
    }
    Ok(perron(&shifted)?.radius - shift)
}

/// Spectral radius of [`invasion_matrix`].
pub fn invasion_radius(p: &BiVirusParams, invader: usize, resident_x: &[f64]) -> Result<f64> {
    rightmost_eigenvalue(&invasion_matrix(p, invader, resident_x)?)
}

/// Solves each virus's own endemic equilibrium (the nonzero component of
/// its winner-takes-all state) starting from the all-ones state.
pub fn dominant_equilibria(p: &BiVirusParams) -> Result<[crate::dynamics::Equilibrium; 2]> {
    let ones = vec![1.0; p.n()];
    Ok([
        find_equilibrium(p.virus(0), &ones, EQ_TOL, EQ_MAX_ITERS)?,
        find_equilibrium(p.virus(1), &ones, EQ_TOL, EQ_MAX_ITERS)?,
    ])
}

/// Per-virus healthy-state attraction radii; the joint domain is the
/// product of the two regions.
pub fn healthy_domains(p: &BiVirusParams) -> Result<[DomainOfAttraction; 2]> {
    Ok([healthy_domain(p.virus(0))?, healthy_domain(p.virus(1))?])
}

/// Runs all two-virus certificates. Dominant equilibria and invasion
/// radii are solved whenever multistability or joint supercriticality
/// makes them meaningful.
pub fn analyze(p: &BiVirusParams, smallness_tol: Option<f64>) -> Result<BiVirusReport> {
    let mut conditions = Vec::new();
    let mut rho_reproduction = [0.0; 2];
    let mut rho_saturated = [0.0; 2];
    let mut theta = [None; 2];
    let mut healthy_global = true;
    let mut multistability = true;
    let mut both_supercritical = true;
    let mut as_stated = true;
    for l in 0..2 {
        let v = p.virus(l);
        let tag = l + 1;
        let hg = check_healthy_global(v)?;
        rho_saturated[l] = hg.rho;
        healthy_global &= hg.condition.holds;
        conditions.push(ConditionReport::from_margin(
            &format!("virus{tag}_healthy_global_spectral"),
            hg.condition.margin,
            true,
        ));
        let bi = check_bistability(v)?;
        rho_reproduction[l] = bi.rho;
        theta[l] = bi.theta;
        multistability &= bi.holds();
        for c in &bi.conditions {
            conditions.push(ConditionReport::from_margin(
                &format!("virus{tag}_{}", c.name),
                c.margin,
                c.name.contains("spectral"),
            ));
        }
        conditions.push(ConditionReport::from_margin(
            &format!("virus{tag}_healthy_unstable_spectral"),
            bi.rho - 1.0,
            true,
        ));
        both_supercritical &= bi.rho > 1.0;
        let tol = smallness_tol
            .unwrap_or_else(|| 0.01 * v.delta().iter().copied().fold(f64::INFINITY, f64::min));
        let small = tol - v.triple().max_abs();
        conditions.push(ConditionReport::from_margin(
            &format!("virus{tag}_higher_rates_small_heuristic"),
            small,
            false,
        ));
        as_stated &= hg.condition.holds && small >= 0.0;
    }
    let winner_takes_all_as_stated = both_supercritical && as_stated;

    let mut dominant = None;
    let mut coexistence = None;
    if multistability || both_supercritical {
        let eqs = dominant_equilibria(p)?;
        let mut doms = Vec::with_capacity(2);
        let mut invasion_rhos = [0.0; 2];
        for l in 0..2 {
            let other = 1 - l;
            let jac = jacobian(p.virus(l), &eqs[l].x)?;
            let inv = invasion_radius(p, other, &eqs[l].x)?;
            invasion_rhos[other] = inv;
            conditions.push(ConditionReport::from_margin(
                &format!("virus{}_invades_rival_dominant", other + 1),
                inv - 1.0,
                true,
            ));
            doms.push(DominantEquilibrium {
                virus: l,
                strictly_positive: eqs[l].x.iter().all(|&v| v > 0.0),
                x: eqs[l].x.clone(),
                residual: eqs[l].residual,
                self_rho: jac.rho,
                self_verdict: jac.verdict,
                invader_rho: inv,
            });
        }
        let mutual = invasion_rhos.iter().all(|&r| r > 1.0);
        let self_stable = doms
            .iter()
            .all(|d| d.self_verdict == StabilityVerdict::Stable);
        coexistence = Some(CoexistenceCheck {
            invasion_rhos,
            mutual_invasion: mutual,
            unstable_dominants_route: both_supercritical && mutual,
            stable_dominants_route: self_stable && mutual,
            predicted: (both_supercritical || self_stable) && mutual,
        });
        let arr: [DominantEquilibrium; 2] = doms.try_into().expect("two dominants");
        dominant = Some(arr);
    }

    Ok(BiVirusReport {
        rho_reproduction,
        rho_saturated,
        theta,
        healthy_global,
        multistability,
        both_supercritical,
        dominant,
        coexistence,
        winner_takes_all_as_stated,
        conditions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SisParams;
    use crate::hypergraph::DirectedHypergraph;

    /// Directed cycle with one outgoing triple per node, uniform rates.
    fn cycle_virus(n: usize, mu_pair: f64, mu_triple: f64, delta: f64, h: f64) -> SisParams {
        let triples: Vec<(usize, usize, usize)> =
            (0..n).map(|i| (i, (i + 1) % n, (i + 2) % n)).collect();
        let hg = DirectedHypergraph::cycle_with_triples(n, &triples).unwrap();
        SisParams::from_hypergraph(&hg, vec![delta; n], &vec![mu_pair; n], &vec![mu_triple; n], h)
            .unwrap()
    }

    fn multistable_pair() -> BiVirusParams {
        let v1 = cycle_virus(15, 0.2, 2.0, 0.5, 0.01);
        let v2 = cycle_virus(15, 0.1, 2.5, 0.5, 0.01);
        BiVirusParams::new(v1, v2).unwrap()
    }

    #[test]
    fn subcritical_strong_drive_is_multistable() {
        let report = analyze(&multistable_pair(), None).unwrap();
        assert!((report.rho_reproduction[0] - 0.9970).abs() < 1e-4);
        assert!((report.rho_reproduction[1] - 0.9960).abs() < 1e-4);
        assert!(report.multistability);
        assert!(!report.healthy_global);
        assert!(!report.both_supercritical);
        // theta = 2 mu / delta + 2 mu3 / delta on a cycle with one triple
        // per node.
        assert!((report.theta[0].unwrap() - 8.8).abs() < 1e-9);
        assert!((report.theta[1].unwrap() - 10.4).abs() < 1e-9);
        let doms = report.dominant.unwrap();
        for d in &doms {
            assert!(d.strictly_positive);
            assert_eq!(d.self_verdict, StabilityVerdict::Stable);
        }
        // Symmetric equilibrium levels solve 4c^2 - 3.8c + 0.3 = 0 and
        // 5c^2 - 4.9c + 0.4 = 0.
        assert!((doms[0].x[0] - 0.863104).abs() < 1e-5);
        assert!((doms[1].x[0] - 0.890125).abs() < 1e-5);
    }

    #[test]
    fn supercritical_pair_predicts_coexistence() {
        let v1 = cycle_virus(15, 2.0, 2.0, 0.5, 0.01);
        let v2 = cycle_virus(15, 3.0, 2.5, 0.5, 0.01);
        let p = BiVirusParams::new(v1, v2).unwrap();
        let report = analyze(&p, None).unwrap();
        assert!((report.rho_reproduction[0] - 1.0150).abs() < 1e-4);
        assert!((report.rho_reproduction[1] - 1.0250).abs() < 1e-4);
        assert!(report.both_supercritical);
        assert!(!report.winner_takes_all_as_stated);
        // Each dominant equilibrium sits high enough to suppress the
        // rival, so neither virus can invade and no coexistence is
        // predicted: trajectories go winner-takes-all.
        let co = report.coexistence.unwrap();
        assert!(co.invasion_rhos.iter().all(|&r| r < 1.0), "{:?}", co.invasion_rhos);
        assert!(!co.mutual_invasion);
        assert!(!co.predicted);
        let doms = report.dominant.unwrap();
        for d in &doms {
            assert!(d.strictly_positive);
            assert_eq!(d.self_verdict, StabilityVerdict::Stable);
        }
    }

    #[test]
    fn invasion_radius_matches_reproduction_number_at_zero_resident() {
        let p = multistable_pair();
        let zero = vec![0.0; p.n()];
        let inv = invasion_radius(&p, 0, &zero).unwrap();
        let rho = crate::analysis::reproduction_number(p.virus(0)).unwrap();
        assert!((inv - rho).abs() < 1e-10);
    }

    #[test]
    fn healthy_domains_are_per_virus() {
        // Dense positive triples keep the higher layer irreducible, which
        // the radius requires.
        let n = 3;
        let dense = |w: f64| {
            let entries: Vec<(Vec<usize>, f64)> = (0..n)
                .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| (vec![i, j, k], w))))
                .collect();
            crate::tensor::SparseTensor::new(3, n, entries).unwrap()
        };
        let cycle = |w: f64| {
            crate::tensor::SparseTensor::new(
                2,
                n,
                (0..n).map(|i| (vec![i, (i + 1) % n], w)).collect::<Vec<_>>(),
            )
            .unwrap()
        };
        let v1 = SisParams::new(vec![1.0; n], cycle(0.2), dense(0.1), 0.01).unwrap();
        let v2 = SisParams::new(vec![1.0; n], cycle(0.1), dense(0.2), 0.01).unwrap();
        let p = BiVirusParams::new(v1, v2).unwrap();
        let domains = healthy_domains(&p).unwrap();
        // alpha1 = (delta - pair row sum) / (triple row sum).
        assert!((domains[0].radius.unwrap() - 0.8 / 0.9).abs() < 1e-12);
        assert!((domains[1].radius.unwrap() - 0.9 / 1.8).abs() < 1e-12);
    }
}
