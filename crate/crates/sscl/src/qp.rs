//! Box-constrained concave quadratic maximization:
//! `max_delta -1/2 delta'Q delta + 1'delta  s.t.  0 <= delta_i <= upper`.
//!
//! Q is positive semidefinite by construction (a Gram matrix of label-signed
//! reconstructions), so the objective is concave and cyclic exact coordinate
//! ascent with clipping converges to the global maximum. There is no
//! equality constraint (the classifier has no bias term), which is what
//! makes the per-coordinate update exact.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// KKT tolerance for convergence.
pub const KKT_TOL: f64 = 1e-6;

/// Sweep cap.
const MAX_SWEEPS: usize = 10_000;

/// Diagonal entries at or below this are treated as exactly zero (for PSD Q
/// a zero diagonal forces the whole row to zero, so the objective is linear
/// in that coordinate).
const DIAG_FLOOR: f64 = 1e-12;

/// A validated box QP instance.
#[derive(Debug, Clone)]
pub struct BoxQP {
    q: DMatrix<f64>,
    upper: f64,
}

impl BoxQP {
    /// Validates symmetry (within 1e-9, then symmetrizes exactly) and
    /// positive semidefiniteness. PSD is asserted by a Cholesky
    /// factorization of `Q + shift*I` with `shift = 1e-8 * max(1, max_ii Q)`,
    /// i.e. the minimum eigenvalue must be >= -shift; on failure the
    /// measured minimum eigenvalue is reported.
    pub fn new(q: DMatrix<f64>, upper: f64) -> Result<Self> {
        let n = q.nrows();
        if n == 0 || q.ncols() != n {
            return Err(Error::Dimension(format!(
                "Q must be square and non-empty, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if !(upper > 0.0) || !upper.is_finite() {
            return Err(Error::Config(format!("upper bound must be > 0, got {upper}")));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Q".into()));
        }
        let max_asym = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| (q[(i, j)] - q[(j, i)]).abs())
            .fold(0.0f64, f64::max);
        if max_asym > 1e-9 {
            return Err(Error::NotSymmetric { max_abs: max_asym });
        }
        let q = (&q + q.transpose()) * 0.5;

        let max_diag = (0..n).map(|i| q[(i, i)]).fold(0.0f64, f64::max);
        let shift = 1e-8 * max_diag.max(1.0);
        let mut shifted = q.clone();
        for i in 0..n {
            shifted[(i, i)] += shift;
        }
        if Cholesky::new(shifted).is_none() {
            let min_eig = q
                .clone()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            return Err(Error::NotPositiveDefinite { min_eig });
        }
        Ok(BoxQP { q, upper })
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// -1/2 delta'Q delta + sum(delta)
    pub fn objective(&self, delta: &DVector<f64>) -> f64 {
        -0.5 * delta.dot(&(&self.q * delta)) + delta.sum()
    }

    /// Max KKT violation at `delta`. With gradient g = 1 - (Q delta):
    /// interior coordinates need |g| <= tol, coordinates at 0 need g <= tol,
    /// coordinates at the upper bound need g >= -tol.
    pub fn kkt_residual(&self, delta: &DVector<f64>) -> f64 {
        let q_delta = &self.q * delta;
        let mut worst = 0.0f64;
        for i in 0..self.n() {
            let g = 1.0 - q_delta[i];
            let viol = if delta[i] <= 0.0 {
                g.max(0.0)
            } else if delta[i] >= self.upper {
                (-g).max(0.0)
            } else {
                g.abs()
            };
            worst = worst.max(viol);
        }
        worst
    }
}

/// The dual variables after a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    /// Box-constrained multipliers; 0 <= delta_i <= upper holds exactly.
    pub delta: DVector<f64>,
    /// Max KKT violation at return.
    pub kkt_residual: f64,
    /// Full sweeps performed.
    pub sweeps: usize,
    /// Whether the KKT tolerance was reached before the sweep cap.
    pub converged: bool,
}

impl DualState {
    pub fn zeros(n: usize) -> Self {
        DualState {
            delta: DVector::zeros(n),
            kkt_residual: f64::INFINITY,
            sweeps: 0,
            converged: false,
        }
    }
}

fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

/// Cyclic exact coordinate ascent with clipping, warm-started from `delta0`
/// (clipped into the box). Every sweep is objective-non-decreasing.
/// Coordinates with a (numerically) zero diagonal have a linear objective:
/// they are set to the bound favored by the gradient.
pub fn solve_box_qp(p: &BoxQP, delta0: &DVector<f64>) -> Result<DualState> {
    let n = p.n();
    if delta0.len() != n {
        return Err(Error::Dimension(format!(
            "warm start has length {}, Q is {}x{}",
            delta0.len(),
            n,
            n
        )));
    }
    let upper = p.upper;
    let mut delta = DVector::from_fn(n, |i, _| {
        let v = delta0[i];
        if v.is_finite() {
            clip(v, 0.0, upper)
        } else {
            0.0
        }
    });

    // q_vec holds Q*delta; updated incrementally within a sweep and
    // recomputed afresh at sweep end so rounding never accumulates.
    let mut q_vec = &p.q * &delta;
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        for i in 0..n {
            let g = 1.0 - q_vec[i];
            let qii = p.q[(i, i)];
            let new = if qii <= DIAG_FLOOR {
                if g > 0.0 {
                    upper
                } else {
                    0.0
                }
            } else {
                clip(delta[i] + g / qii, 0.0, upper)
            };
            let step = new - delta[i];
            if step != 0.0 {
                q_vec.axpy(step, &p.q.column(i).into_owned(), 1.0);
                delta[i] = new;
            }
        }
        q_vec = &p.q * &delta;
        if q_vec.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coordinate ascent state".into()));
        }
        let residual = {
            let mut worst = 0.0f64;
            for i in 0..n {
                let g = 1.0 - q_vec[i];
                let viol = if delta[i] <= 0.0 {
                    g.max(0.0)
                } else if delta[i] >= upper {
                    (-g).max(0.0)
                } else {
                    g.abs()
                };
                worst = worst.max(viol);
            }
            worst
        };
        if residual <= KKT_TOL {
            return Ok(DualState {
                delta,
                kkt_residual: residual,
                sweeps,
                converged: true,
            });
        }
        if sweeps >= MAX_SWEEPS {
            log::warn!(
                "box QP stopped at sweep cap {MAX_SWEEPS} with KKT residual {residual:.3e}"
            );
            return Ok(DualState {
                delta,
                kkt_residual: residual,
                sweeps,
                converged: false,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn scalar_interior_maximum() {
        let p = BoxQP::new(dmatrix![2.0], 1.0).unwrap();
        let sol = solve_box_qp(&p, &dvector![0.0]).unwrap();
        assert!((sol.delta[0] - 0.5).abs() < 1e-12);
        assert!(sol.converged);
    }

    #[test]
    fn scalar_clipped_at_upper_bound() {
        let p = BoxQP::new(dmatrix![2.0], 0.3).unwrap();
        let sol = solve_box_qp(&p, &dvector![0.0]).unwrap();
        assert_eq!(sol.delta[0], 0.3);
    }

    #[test]
    fn zero_diagonal_takes_the_gradient_bound() {
        // Q = 0: objective is sum(delta), maximized at the upper bound.
        let p = BoxQP::new(DMatrix::zeros(2, 2), 0.7).unwrap();
        let sol = solve_box_qp(&p, &dvector![0.0, 0.0]).unwrap();
        assert_eq!(sol.delta, dvector![0.7, 0.7]);
        assert!(sol.converged);
    }

    #[test]
    fn warm_start_outside_box_is_clipped() {
        let p = BoxQP::new(dmatrix![2.0, 0.0; 0.0, 2.0], 1.0).unwrap();
        let sol = solve_box_qp(&p, &dvector![5.0, -3.0]).unwrap();
        assert!((sol.delta[0] - 0.5).abs() < 1e-9);
        assert!((sol.delta[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn asymmetric_q_is_rejected() {
        let err = BoxQP::new(dmatrix![1.0, 0.5; 0.0, 1.0], 1.0).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
    }

    #[test]
    fn indefinite_q_is_rejected_with_eigenvalue() {
        let err = BoxQP::new(dmatrix![1.0, 0.0; 0.0, -2.0], 1.0).unwrap_err();
        match err {
            Error::NotPositiveDefinite { min_eig } => assert!((min_eig + 2.0).abs() < 1e-8),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn solution_stays_exactly_inside_box() {
        let q = dmatrix![4.0, 1.0, 0.5; 1.0, 3.0, 0.2; 0.5, 0.2, 0.1];
        let p = BoxQP::new(q, 0.4).unwrap();
        let sol = solve_box_qp(&p, &dvector![0.0, 0.0, 0.0]).unwrap();
        for &d in sol.delta.iter() {
            assert!((0.0..=0.4).contains(&d));
        }
        assert!(sol.kkt_residual <= KKT_TOL);
    }
}
