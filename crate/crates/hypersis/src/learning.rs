//! Rate estimation from observed trajectories.
//!
//! Each node's curing rate and per-order infection rates enter its update
//! linearly once the network is known, so every node yields an independent
//! nonnegative least-squares problem: regressors built from the adjacency
//! structure and the observed states, targets from the state differences.

use ndarray::Array2;
use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::hypergraph::DirectedHypergraph;

/// Default stationarity tolerance for the active-set solver.
pub const KKT_TOL: f64 = 1e-10;

/// Per-node regression data: `phi[node] * theta = eta[node]` with
/// `theta = (delta, mu_2, ..., mu_K)` nonnegative.
#[derive(Debug, Clone)]
pub struct LearnProblem {
    /// One `m x c` regressor matrix per node.
    pub phi: Vec<Array2<f64>>,
    /// One target vector of `m` state differences per node.
    pub eta: Vec<Vec<f64>>,
    pub max_order: usize,
}

/// Builds the regression for every node from a trajectory on a known
/// hypergraph. Row `t` of node `i`'s system is
/// `[-h x_i(t), h (1 - x_i(t)) (A_2 x(t))_i, h (1 - x_i(t)) (A_3 x(t)^2)_i, ...]`
/// with target `x_i(t+1) - x_i(t)`.
pub fn build_problem(
    hg: &DirectedHypergraph,
    traj: &Trajectory,
    max_order: usize,
) -> Result<LearnProblem> {
    let n = hg.n();
    if traj.n() != n {
        return Err(Error::Dimension {
            expected: n,
            found: traj.n(),
        });
    }
    let m = traj.steps();
    if m == 0 {
        return Err(Error::Input("trajectory needs at least one transition".into()));
    }
    let adjacency = hg.adjacency_tensors(max_order)?;
    let c = max_order;
    let h = traj.h();
    let states = traj.states();
    let mut phi = vec![Array2::zeros((m, c)); n];
    let mut eta = vec![vec![0.0; m]; n];
    for t in 0..m {
        let x = &states[t];
        let next = &states[t + 1];
        let mut drives = Vec::with_capacity(c - 1);
        for k in 2..=max_order {
            drives.push(adjacency[&k].apply(x)?);
        }
        for i in 0..n {
            phi[i][(t, 0)] = -h * x[i];
            for (col, drive) in drives.iter().enumerate() {
                phi[i][(t, col + 1)] = h * (1.0 - x[i]) * drive[i];
            }
            eta[i][t] = next[i] - x[i];
        }
    }
    Ok(LearnProblem {
        phi,
        eta,
        max_order,
    })
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations,
/// ascending.
fn symmetric_eigenvalues(m: &Array2<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    for _ in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)].abs() <= 1e-18 * scale {
                    continue;
                }
                let theta = 0.5 * (a[(q, q)] - a[(p, p)]) / a[(p, q)];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Identifiability check for one node's regression.
#[derive(Debug, Clone, Serialize)]
pub struct RankCheck {
    pub smallest_singular_value: f64,
    pub largest_singular_value: f64,
    /// Smallest singular value above `1e-8` times the largest.
    pub ok: bool,
}

/// Conditioning of `phi` through the eigenvalues of its normal matrix.
pub fn rank_check(phi: &Array2<f64>) -> RankCheck {
    let normal = phi.t().dot(phi);
    let eig = symmetric_eigenvalues(&normal);
    let smallest = eig.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    let largest = eig.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    RankCheck {
        smallest_singular_value: smallest,
        largest_singular_value: largest,
        ok: smallest > 1e-8 * largest && largest > 0.0,
    }
}

fn solve_small(mut a: Array2<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[(i, col)].abs().partial_cmp(&a[(j, col)].abs()).unwrap()
        })?;
        if a[(pivot, col)].abs() <= 1e-14 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                let tmp = a[(col, k)];
                a[(col, k)] = a[(pivot, k)];
                a[(pivot, k)] = tmp;
            }
            b.swap(col, pivot);
        }
        for row in (col + 1)..n {
            let f = a[(row, col)] / a[(col, col)];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[(row, k)] -= f * a[(col, k)];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[(row, k)] * x[k];
        }
        x[row] = acc / a[(row, row)];
    }
    Some(x)
}

/// Nonnegative least squares on the normal equations
/// `min ||phi theta - eta||` with `theta >= 0`, by the active-set method:
/// repeatedly admit the most positive gradient coordinate, re-solve the
/// unconstrained subproblem on the passive set, and step back to the
/// feasible boundary when a passive coordinate would go negative.
pub fn nnls_normal(normal: &Array2<f64>, rhs: &[f64], kkt_tol: f64) -> Result<Vec<f64>> {
    let c = rhs.len();
    if normal.nrows() != c || normal.ncols() != c {
        return Err(Error::Dimension {
            expected: c,
            found: normal.nrows(),
        });
    }
    let mut theta = vec![0.0; c];
    let mut passive = vec![false; c];
    let gradient = |theta: &[f64]| -> Vec<f64> {
        (0..c)
            .map(|j| rhs[j] - (0..c).map(|k| normal[(j, k)] * theta[k]).sum::<f64>())
            .collect()
    };
    let mut outer = 0;
    loop {
        outer += 1;
        if outer > 30 * (c + 1) {
            let w = gradient(&theta);
            let residual = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            return Err(Error::non_convergence(
                "active-set nonnegative least squares",
                outer,
                residual,
                theta,
            ));
        }
        let w = gradient(&theta);
        let candidate = (0..c)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
        match candidate {
            Some(j) if w[j] > kkt_tol => passive[j] = true,
            _ => return Ok(theta),
        }
        loop {
            let idx: Vec<usize> = (0..c).filter(|&j| passive[j]).collect();
            let k = idx.len();
            let mut sub = Array2::zeros((k, k));
            let mut sub_rhs = vec![0.0; k];
            for (r, &jr) in idx.iter().enumerate() {
                sub_rhs[r] = rhs[jr];
                for (s, &js) in idx.iter().enumerate() {
                    sub[(r, s)] = normal[(jr, js)];
                }
            }
            let Some(trial) = solve_small(sub, sub_rhs) else {
                return Err(Error::non_convergence(
                    "singular passive-set system in nonnegative least squares",
                    outer,
                    f64::INFINITY,
                    theta,
                ));
            };
            if trial.iter().all(|&v| v > 0.0) {
                theta.fill(0.0);
                for (r, &jr) in idx.iter().enumerate() {
                    theta[jr] = trial[r];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (r, &jr) in idx.iter().enumerate() {
                if trial[r] <= 0.0 {
                    let denom = theta[jr] - trial[r];
                    if denom > 0.0 {
                        alpha = alpha.min(theta[jr] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            for (r, &jr) in idx.iter().enumerate() {
                theta[jr] = (theta[jr] + alpha * (trial[r] - theta[jr])).max(0.0);
            }
            for &jr in &idx {
                if theta[jr] <= 1e-14 {
                    theta[jr] = 0.0;
                    passive[jr] = false;
                }
            }
        }
    }
}

/// Nonnegative least squares on raw regressors; forms the normal
/// equations and calls [`nnls_normal`].
pub fn nnls(phi: &Array2<f64>, eta: &[f64], kkt_tol: f64) -> Result<Vec<f64>> {
    if phi.nrows() != eta.len() {
        return Err(Error::Dimension {
            expected: phi.nrows(),
            found: eta.len(),
        });
    }
    let normal = phi.t().dot(phi);
    let rhs: Vec<f64> = (0..phi.ncols())
        .map(|j| (0..eta.len()).map(|t| phi[(t, j)] * eta[t]).sum())
        .collect();
    nnls_normal(&normal, &rhs, kkt_tol)
}

/// Learned rates for one node.
#[derive(Debug, Clone, Serialize)]
pub struct LearnedNode {
    pub node: usize,
    /// `(delta, mu_2, ..., mu_K)`.
    pub theta: Vec<f64>,
    /// `||phi theta - eta||_2` at the solution.
    pub residual: f64,
    pub rank: RankCheck,
    /// The learned curing rate is zero; reported as-is, not perturbed.
    pub zero_delta: bool,
}

/// Learned rates for the whole network.
#[derive(Debug, Clone, Serialize)]
pub struct LearnedParams {
    pub nodes: Vec<LearnedNode>,
    pub max_order: usize,
    /// Set when learning involves layers above third order, where the
    /// regression is provided on a best-effort basis.
    pub experimental: bool,
}

impl LearnedParams {
    /// Curing rates in node order.
    pub fn delta(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.theta[0]).collect()
    }

    /// Per-node rate for one interaction order (2 = pairwise).
    pub fn mu(&self, order: usize) -> Option<Vec<f64>> {
        if !(2..=self.max_order).contains(&order) {
            return None;
        }
        Some(self.nodes.iter().map(|n| n.theta[order - 1]).collect())
    }
}

/// Estimates every node's rates from a trajectory on a known hypergraph.
pub fn learn_all(
    hg: &DirectedHypergraph,
    traj: &Trajectory,
    max_order: usize,
    kkt_tol: f64,
) -> Result<LearnedParams> {
    let problem = build_problem(hg, traj, max_order)?;
    let mut nodes = Vec::with_capacity(problem.phi.len());
    for (i, (phi, eta)) in problem.phi.iter().zip(&problem.eta).enumerate() {
        let rank = rank_check(phi);
        let theta = nnls(phi, eta, kkt_tol)?;
        let mut residual = 0.0;
        for t in 0..eta.len() {
            let fit: f64 = (0..phi.ncols()).map(|j| phi[(t, j)] * theta[j]).sum();
            residual += (fit - eta[t]).powi(2);
        }
        nodes.push(LearnedNode {
            node: i,
            zero_delta: theta[0] == 0.0,
            theta,
            residual: residual.sqrt(),
            rank,
        });
    }
    Ok(LearnedParams {
        nodes,
        max_order,
        experimental: max_order > 3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, SisParams};
    use crate::hypergraph::Hyperedge;

    #[test]
    fn jacobi_matches_closed_form() {
        let m = ndarray::arr2(&[[2.0, 1.0], [1.0, 2.0]]);
        let eig = symmetric_eigenvalues(&m);
        assert!((eig[0] - 1.0).abs() < 1e-12);
        assert!((eig[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn nnls_matches_unconstrained_solution_when_positive() {
        let phi = ndarray::arr2(&[[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]]);
        let eta = vec![1.0, 2.0, 2.0];
        let theta = nnls(&phi, &eta, KKT_TOL).unwrap();
        // Normal equations: [[2,1],[1,5]] theta = [3, 6].
        let expect = solve_small(ndarray::arr2(&[[2.0, 1.0], [1.0, 5.0]]), vec![3.0, 6.0]).unwrap();
        assert!((theta[0] - expect[0]).abs() < 1e-12);
        assert!((theta[1] - expect[1]).abs() < 1e-12);
    }

    #[test]
    fn nnls_clamps_negative_coordinates() {
        // Unconstrained optimum has a negative second coordinate.
        let phi = ndarray::arr2(&[[1.0, 1.0], [1.0, 1.0 + 1e-6]]);
        let eta = vec![1.0, 0.0];
        let theta = nnls(&phi, &eta, KKT_TOL).unwrap();
        assert_eq!(theta[1], 0.0);
        assert!((theta[0] - 0.5).abs() < 1e-6);
        // KKT: gradient nonpositive on the active coordinate.
        let normal = phi.t().dot(&phi);
        let rhs = [1.0, 1.0];
        let grad1 = rhs[1] - normal[(1, 0)] * theta[0] - normal[(1, 1)] * theta[1];
        assert!(grad1 <= KKT_TOL);
    }

    #[test]
    fn recovers_rates_from_a_clean_trajectory() {
        let edges = vec![
            Hyperedge {
                tail: 0,
                heads: vec![1],
                weight: 0.7,
            },
            Hyperedge {
                tail: 1,
                heads: vec![2],
                weight: 0.5,
            },
            Hyperedge {
                tail: 2,
                heads: vec![0],
                weight: 0.9,
            },
            Hyperedge {
                tail: 0,
                heads: vec![1, 2],
                weight: 0.8,
            },
            Hyperedge {
                tail: 1,
                heads: vec![0, 2],
                weight: 0.6,
            },
            Hyperedge {
                tail: 2,
                heads: vec![0, 1],
                weight: 0.4,
            },
        ];
        let hg = DirectedHypergraph::new(3, edges).unwrap();
        let delta = vec![0.3, 0.25, 0.4];
        let mu2 = vec![0.6, 0.7, 0.5];
        let mu3 = vec![0.45, 0.55, 0.65];
        let p = SisParams::from_hypergraph(&hg, delta.clone(), &mu2, &mu3, 0.01).unwrap();
        let traj = simulate(&p, &[0.9, 0.4, 0.7], 600, false).unwrap();
        let learned = learn_all(&hg, &traj, 3, KKT_TOL).unwrap();
        assert!(!learned.experimental);
        for i in 0..3 {
            assert!(learned.nodes[i].rank.ok);
            assert!(!learned.nodes[i].zero_delta);
            assert!((learned.nodes[i].theta[0] - delta[i]).abs() < 1e-8);
            assert!((learned.nodes[i].theta[1] - mu2[i]).abs() < 1e-8);
            assert!((learned.nodes[i].theta[2] - mu3[i]).abs() < 1e-8);
            assert!(learned.nodes[i].residual < 1e-10);
        }
        assert_eq!(learned.delta().len(), 3);
        assert_eq!(learned.mu(3).unwrap().len(), 3);
        assert!(learned.mu(4).is_none());
    }

    #[test]
    fn flags_unidentifiable_and_zero_delta_nodes() {
        let edges = vec![
            Hyperedge {
                tail: 0,
                heads: vec![1],
                weight: 1.0,
            },
            Hyperedge {
                tail: 1,
                heads: vec![2],
                weight: 1.0,
            },
            Hyperedge {
                tail: 2,
                heads: vec![0],
                weight: 1.0,
            },
        ];
        let hg = DirectedHypergraph::new(3, edges).unwrap();
        let p = SisParams::from_hypergraph(
            &hg,
            vec![0.0, 0.3, 0.25],
            &[0.5, 0.4, 0.45],
            &[0.0, 0.0, 0.0],
            0.05,
        )
        .unwrap();
        // Zero curing violates the standing assumptions, so force the run.
        let traj = simulate(&p, &[0.5, 0.5, 0.5], 300, true).unwrap();
        let learned = learn_all(&hg, &traj, 3, KKT_TOL).unwrap();
        // No triples anywhere: the third column is identically zero.
        assert!(!learned.nodes[0].rank.ok);
        assert_eq!(learned.nodes[0].theta[2], 0.0);
        // Node 0 genuinely has no curing.
        assert!(learned.nodes[0].zero_delta);
        assert!((learned.nodes[0].theta[0] - 0.0).abs() < 1e-9);
        assert!(!learned.nodes[1].zero_delta);
        assert!((learned.nodes[1].theta[0] - 0.3).abs() < 1e-7);
    }
}
