//! Spectral radius of nonnegative matrices by power iteration.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Convergence tolerance used by [`perron`].
pub const DEFAULT_TOL: f64 = 1e-10;

/// Iteration cap used by [`perron`].
pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// Certified Perron pair of a nonnegative matrix.
#[derive(Debug, Clone)]
pub struct PerronResult {
    /// Spectral radius estimate.
    pub radius: f64,
    /// Eigenvector scaled so its largest entry is 1; strictly positive
    /// when the matrix is irreducible.
    pub vector: Vec<f64>,
    /// `max_i |(M v)_i - radius * v_i|` for the returned pair.
    pub residual: f64,
    /// Power iterations performed.
    pub iterations: usize,
}

/// Spectral radius and Perron vector with default tolerance and cap.
pub fn perron(m: &Array2<f64>) -> Result<PerronResult> {
    perron_with(m, DEFAULT_TOL, DEFAULT_MAX_ITERS)
}

/// Power iteration on `M + cI` from the all-ones vector, normalizing by the
/// largest entry. The shift leaves the Perron vector unchanged and adds `c`
/// to the radius, so `c` is subtracted from the reported estimate; a tiny
/// `c` keeps strictly cyclic matrices from stalling the iteration. If the
/// first pass fails to converge, a second pass restarts with a large shift
/// (`c` = largest entry), which makes any irreducible matrix primitive.
///
/// Converged means successive radius estimates differ by less than `tol`
/// and the residual is at most `tol`. Failure to converge within
/// `max_iters` total iterations reports the best pair seen.
pub fn perron_with(m: &Array2<f64>, tol: f64, max_iters: usize) -> Result<PerronResult> {
    let n = m.nrows();
    if n == 0 {
        return Err(Error::Input("matrix must be nonempty".into()));
    }
    if m.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            found: m.ncols(),
        });
    }
    let mut max_entry = 0.0f64;
    for &w in m.iter() {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::Input(format!(
                "matrix entries must be finite and nonnegative, found {w}"
            )));
        }
        max_entry = max_entry.max(w);
    }
    if max_entry == 0.0 {
        return Ok(PerronResult {
            radius: 0.0,
            vector: vec![1.0; n],
            residual: 0.0,
            iterations: 0,
        });
    }

    let shifts = [1e-12 * max_entry, max_entry];
    let budgets = [max_iters / 2, max_iters - max_iters / 2];
    let mut v = Array1::from_elem(n, 1.0);
    let mut iterations = 0;
    let mut best: Option<PerronResult> = None;
    for (&shift, &budget) in shifts.iter().zip(&budgets) {
        let mut prev_radius = f64::INFINITY;
        for _ in 0..budget {
            iterations += 1;
            let w = m.dot(&v);
            let ws = &w + &(shift * &v);
            let scale = ws.iter().fold(0.0f64, |a, &b| a.max(b));
            let radius = scale - shift;
            let residual = w
                .iter()
                .zip(v.iter())
                .fold(0.0f64, |a, (&wi, &vi)| a.max((wi - radius * vi).abs()));
            if best.as_ref().is_none_or(|b| residual < b.residual) {
                best = Some(PerronResult {
                    radius,
                    vector: v.to_vec(),
                    residual,
                    iterations,
                });
            }
            if (radius - prev_radius).abs() < tol && residual <= tol {
                return Ok(PerronResult {
                    radius,
                    vector: v.to_vec(),
                    residual,
                    iterations,
                });
            }
            prev_radius = radius;
            v = ws / scale;
        }
    }

    let best = best.expect("at least one iteration ran");
    Err(Error::non_convergence(
        format!("power iteration (radius estimate {:.6})", best.radius),
        iterations,
        best.residual,
        best.vector,
    ))
}

/// Collatz-Wielandt bounds: for nonnegative `M` and strictly positive `v`,
/// `min_i (Mv)_i / v_i <= rho(M) <= max_i (Mv)_i / v_i`.
pub fn collatz_wielandt_bounds(m: &Array2<f64>, v: &[f64]) -> Result<(f64, f64)> {
    let n = m.nrows();
    if m.ncols() != n || v.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: v.len(),
        });
    }
    if v.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Input("test vector must be strictly positive".into()));
    }
    let w = m.dot(&Array1::from_vec(v.to_vec()));
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (wi, vi) in w.iter().zip(v) {
        let q = wi / vi;
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn rho_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
        // Largest root of the characteristic polynomial, valid when bc >= 0.
        ((a + d) + ((a - d).powi(2) + 4.0 * b * c).sqrt()) / 2.0
    }

    #[test]
    fn matches_closed_form_on_2x2() {
        let cases = [
            (0.3, 0.7, 0.2, 0.9),
            (1.0, 0.0, 0.0, 2.0),
            (0.0, 1.0, 1.0, 0.0),
            (0.5, 2.0, 0.1, 0.5),
        ];
        for (a, b, c, d) in cases {
            let m = array![[a, b], [c, d]];
            let r = perron(&m).unwrap();
            assert!(
                (r.radius - rho_2x2(a, b, c, d)).abs() < 1e-8,
                "radius {} vs {}",
                r.radius,
                rho_2x2(a, b, c, d)
            );
            assert!(r.residual <= DEFAULT_TOL);
        }
    }

    #[test]
    fn weighted_cycle_needs_the_restart_shift() {
        // Asymmetric 2-cycle: strictly periodic, radius sqrt(2*0.5) = 1.
        let m = array![[0.0, 2.0], [0.5, 0.0]];
        let r = perron(&m).unwrap();
        assert!((r.radius - 1.0).abs() < 1e-9);
        assert!(r.iterations < DEFAULT_MAX_ITERS);
        // Perron vector of the cycle is (2, 1) up to scale.
        assert!((r.vector[0] / r.vector[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn zero_and_identity() {
        let z = Array2::<f64>::zeros((3, 3));
        let r = perron(&z).unwrap();
        assert_eq!(r.radius, 0.0);
        assert_eq!(r.vector, vec![1.0; 3]);
        let id = Array2::<f64>::eye(4);
        let r = perron(&id).unwrap();
        assert!((r.radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_entries() {
        let m = array![[1.0, -0.1], [0.0, 1.0]];
        assert!(perron(&m).is_err());
    }

    #[test]
    fn irreducible_gives_strictly_positive_vector() {
        let m = array![[0.0, 1.0, 0.0], [0.0, 0.0, 2.0], [0.5, 0.0, 0.0]];
        let r = perron(&m).unwrap();
        assert!(r.vector.iter().all(|&x| x > 0.0));
        assert!((r.radius - 1.0f64).abs() < 1e-9);
    }

    #[test]
    fn collatz_wielandt_brackets_radius() {
        let m = array![[0.2, 0.8], [0.6, 0.1]];
        let rho = perron(&m).unwrap().radius;
        let (lo, hi) = collatz_wielandt_bounds(&m, &[1.0, 1.3]).unwrap();
        assert!(lo <= rho + 1e-12 && rho <= hi + 1e-12);
    }
}
