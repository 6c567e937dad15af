//! L1-regularized quadratic minimization via feature-sign search.
//!
//! Solves `min_v 1/2 v'Hv + c'v + gamma*||v||_1` for symmetric positive
//! definite H. The algorithm maintains a guessed sign pattern for the active
//! coordinates, solves the induced smooth quadratic exactly, and walks the
//! segment toward that solution, stopping at the first objective-minimizing
//! zero crossing. Coordinates enter the active set one at a time, chosen by
//! largest subgradient violation (ties to the lowest index), so the whole
//! procedure is deterministic for fixed inputs and warm start.
//!
//! Optimality on return: for v_j != 0, (Hv + c)_j = -gamma*sign(v_j); for
//! v_j = 0, |(Hv + c)_j| <= gamma, both within an absolute tolerance well
//! below 1e-6.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative ridge added by the problem assemblers (`code_point`, the
/// trainer's per-point subproblems): lambda = 1e-8 * trace(H)/k. Keeps H
/// positive definite when the context Gram matrix is rank-deficient
/// (k > d or collinear neighbors).
pub const RIDGE_REL: f64 = 1e-8;

/// Absolute subgradient tolerance used for activation and the stopping test.
const OPT_TOL: f64 = 1e-8;

/// Iteration cap (each restricted solve counts as one iteration).
const MAX_ITERS: usize = 1000;

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// One L1-regularized quadratic problem. Construction validates symmetry
/// (within 1e-9, then symmetrizes exactly) and positive definiteness.
#[derive(Debug, Clone)]
pub struct L1QuadProblem {
    h: DMatrix<f64>,
    c: DVector<f64>,
    gamma: f64,
    min_eig: f64,
}

fn pd_tolerance(h: &DMatrix<f64>) -> f64 {
    1e-12 * (h.trace().max(0.0) / h.nrows() as f64)
}

fn check_shape(h: &DMatrix<f64>, c: &DVector<f64>, gamma: f64) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::Dimension(format!(
            "H must be square, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if c.len() != h.nrows() {
        return Err(Error::Dimension(format!(
            "c has length {}, H is {}x{}",
            c.len(),
            h.nrows(),
            h.nrows()
        )));
    }
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(Error::Config(format!("gamma must be >= 0, got {gamma}")));
    }
    if h.iter().any(|v| !v.is_finite()) || c.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("quadratic problem".into()));
    }
    let max_asym = (0..h.nrows())
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (h[(i, j)] - h[(j, i)]).abs())
        .fold(0.0f64, f64::max);
    if max_asym > 1e-9 {
        return Err(Error::NotSymmetric { max_abs: max_asym });
    }
    Ok(())
}

impl L1QuadProblem {
    /// Validate and build; measures the minimum eigenvalue of H.
    pub fn new(h: DMatrix<f64>, c: DVector<f64>, gamma: f64) -> Result<Self> {
        check_shape(&h, &c, gamma)?;
        let h = (&h + h.transpose()) * 0.5;
        let min_eig = h
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Self::from_parts(h, c, gamma, min_eig)
    }

    /// Build with a caller-supplied lower bound on the minimum eigenvalue,
    /// skipping the eigendecomposition. The trainer uses this: its
    /// subproblems are `s*G + lambda*I` with the minimum eigenvalue of G
    /// measured once per point, so the bound is exact.
    pub fn with_min_eig_bound(
        h: DMatrix<f64>,
        c: DVector<f64>,
        gamma: f64,
        min_eig: f64,
    ) -> Result<Self> {
        check_shape(&h, &c, gamma)?;
        let h = (&h + h.transpose()) * 0.5;
        Self::from_parts(h, c, gamma, min_eig)
    }

    fn from_parts(h: DMatrix<f64>, c: DVector<f64>, gamma: f64, min_eig: f64) -> Result<Self> {
        if min_eig <= pd_tolerance(&h) {
            return Err(Error::NotPositiveDefinite { min_eig });
        }
        Ok(L1QuadProblem {
            h,
            c,
            gamma,
            min_eig,
        })
    }

    /// Replace the linear term, keeping the validated H. Used when coding
    /// many points against one dictionary.
    pub fn set_linear(&mut self, c: DVector<f64>) -> Result<()> {
        if c.len() != self.k() {
            return Err(Error::Dimension(format!(
                "c has length {}, problem has k={}",
                c.len(),
                self.k()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear term".into()));
        }
        self.c = c;
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.h.nrows()
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn min_eig(&self) -> f64 {
        self.min_eig
    }

    /// f(v) = 1/2 v'Hv + c'v + gamma*||v||_1
    pub fn objective(&self, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&gather_hv(&self.h, v))
            + self.c.dot(v)
            + self.gamma * v.iter().map(|x| x.abs()).sum::<f64>()
    }
}

/// H*v accumulated over the nonzero entries of v only; the codes are sparse
/// and H can be large (the whole-dictionary classifier codes against n×n
/// Gram matrices), so this is the hot path.
fn gather_hv(h: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(h.nrows());
    for j in 0..v.len() {
        if v[j] != 0.0 {
            out.axpy(v[j], &h.column(j), 1.0);
        }
    }
    out
}

/// Maximum violation of the subgradient optimality conditions at v.
pub fn optimality_residual(p: &L1QuadProblem, v: &DVector<f64>) -> f64 {
    let g = gather_hv(&p.h, v) + &p.c;
    let mut worst = 0.0f64;
    for j in 0..p.k() {
        let r = if v[j] != 0.0 {
            (g[j] + p.gamma * sign(v[j])).abs()
        } else {
            (g[j].abs() - p.gamma).max(0.0)
        };
        worst = worst.max(r);
    }
    worst
}

fn solve_restricted(p: &L1QuadProblem, active: &[usize], theta: &[f64]) -> Result<DVector<f64>> {
    let a = active.len();
    let haa = DMatrix::from_fn(a, a, |r, c| p.h[(active[r], active[c])]);
    let rhs = DVector::from_fn(a, |r, _| -(p.c[active[r]] + p.gamma * theta[active[r]]));
    if let Some(chol) = Cholesky::new(haa.clone()) {
        return Ok(chol.solve(&rhs));
    }
    haa.lu()
        .solve(&rhs)
        .ok_or(Error::NotPositiveDefinite { min_eig: p.min_eig })
}

/// Feature-sign search from a warm start (pass zeros when none is known).
pub fn feature_sign_search(p: &L1QuadProblem, v0: &DVector<f64>) -> Result<DVector<f64>> {
    feature_sign_search_traced(p, v0).map(|(v, _)| v)
}

/// Same as [`feature_sign_search`], also returning the objective value after
/// every iteration (the trace is non-increasing).
pub fn feature_sign_search_traced(
    p: &L1QuadProblem,
    v0: &DVector<f64>,
) -> Result<(DVector<f64>, Vec<f64>)> {
    let k = p.k();
    if v0.len() != k {
        return Err(Error::Dimension(format!(
            "warm start has length {}, problem has k={}",
            v0.len(),
            k
        )));
    }
    if v0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("warm start".into()));
    }

    // With no L1 term the problem is a plain PD quadratic.
    if p.gamma == 0.0 {
        let chol = Cholesky::new(p.h.clone())
            .ok_or(Error::NotPositiveDefinite { min_eig: p.min_eig })?;
        let v = chol.solve(&(-&p.c));
        let obj = p.objective(&v);
        return Ok((v, vec![obj]));
    }

    let mut v = v0.clone();
    let mut theta: Vec<f64> = v.iter().map(|&x| sign(x)).collect();
    let mut trace = vec![p.objective(&v)];
    let mut iters = 0usize;
    let cap_error = |v: &DVector<f64>| Error::IterationCap {
        iterations: MAX_ITERS,
        residual: optimality_residual(p, v),
        best: v.iter().copied().collect(),
    };

    loop {
        // Optimize over the current active set until the restricted smooth
        // problem is solved with signs matching theta.
        loop {
            let active: Vec<usize> = (0..k).filter(|&j| theta[j] != 0.0).collect();
            if active.is_empty() {
                break;
            }
            iters += 1;
            if iters > MAX_ITERS {
                return Err(cap_error(&v));
            }
            let u = solve_restricted(p, &active, &theta)?;
            let unchanged = active
                .iter()
                .enumerate()
                .all(|(s, &j)| (u[s] - v[j]).abs() <= 1e-14 * (1.0 + v[j].abs()));
            if unchanged {
                break;
            }
            let consistent = active
                .iter()
                .enumerate()
                .all(|(s, &j)| u[s] != 0.0 && sign(u[s]) == theta[j]);
            if consistent {
                for (s, &j) in active.iter().enumerate() {
                    v[j] = u[s];
                }
                trace.push(p.objective(&v));
                break;
            }

            // Signs flipped: discrete line search from v toward u over the
            // zero crossings, keeping the candidate with the lowest true
            // objective. Crossing coordinates are set to exact zero. The
            // smooth part is quadratic along the segment, so each candidate
            // is scored in closed form from one pair of H products.
            let mut candidates: Vec<(f64, Option<usize>)> = Vec::with_capacity(active.len() + 1);
            for (s, &j) in active.iter().enumerate() {
                if v[j] != 0.0 {
                    let denom = v[j] - u[s];
                    if denom != 0.0 {
                        let t = v[j] / denom;
                        if t > 0.0 && t < 1.0 {
                            candidates.push((t, Some(j)));
                        }
                    }
                }
            }
            candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite steps"));
            candidates.push((1.0, None));

            let hv = gather_hv(&p.h, &v);
            let mut step = DVector::zeros(k);
            for (s, &j) in active.iter().enumerate() {
                step[j] = u[s] - v[j];
            }
            let h_step = gather_hv(&p.h, &step);
            let smooth0 = 0.5 * v.dot(&hv) + p.c.dot(&v);
            let slope: f64 = active.iter().map(|&j| (hv[j] + p.c[j]) * step[j]).sum();
            let curv: f64 = active.iter().map(|&j| step[j] * h_step[j]).sum();

            let mut best: Option<(f64, f64, Option<usize>)> = None;
            for &(t, zero_j) in &candidates {
                let smooth = smooth0 + t * slope + 0.5 * t * t * curv;
                let l1: f64 = active
                    .iter()
                    .map(|&j| {
                        if zero_j == Some(j) {
                            0.0
                        } else {
                            (v[j] + t * step[j]).abs()
                        }
                    })
                    .sum();
                let f = smooth + p.gamma * l1;
                if best.as_ref().is_none_or(|&(bf, _, _)| f < bf) {
                    best = Some((f, t, zero_j));
                }
            }
            let (_, t, zero_j) = best.expect("at least the full step is a candidate");
            for (s, &j) in active.iter().enumerate() {
                v[j] += t * step[j];
                if t == 1.0 && u[s] == 0.0 {
                    v[j] = 0.0;
                }
            }
            if let Some(j) = zero_j {
                v[j] = 0.0;
            }
            for j in 0..k {
                theta[j] = sign(v[j]);
            }
            trace.push(p.objective(&v));
        }

        // Active set is optimal; look for the most violated zero coordinate.
        let g = gather_hv(&p.h, &v) + &p.c;
        let mut pick: Option<usize> = None;
        let mut worst = OPT_TOL;
        for j in 0..k {
            if theta[j] == 0.0 {
                let viol = g[j].abs() - p.gamma;
                if viol > worst {
                    worst = viol;
                    pick = Some(j);
                }
            }
        }
        match pick {
            None => {
                debug_assert!(optimality_residual(p, &v) <= 1e-6);
                return Ok((v, trace));
            }
            Some(j) => {
                iters += 1;
                if iters > MAX_ITERS {
                    return Err(cap_error(&v));
                }
                theta[j] = -sign(g[j]);
            }
        }
    }
}

/// Sparse code for one point against its d×k context matrix:
/// `min_v beta*||x - X v||^2 + gamma*||v||_1`, i.e. H = 2*beta*X'X (plus
/// ridge) and c = -2*beta*X'x.
pub fn code_point(
    x: &DVector<f64>,
    xmat: &DMatrix<f64>,
    beta: f64,
    gamma: f64,
) -> Result<DVector<f64>> {
    let p = coding_problem(x, xmat, beta, gamma)?;
    feature_sign_search(&p, &DVector::zeros(p.k()))
}

/// The validated quadratic problem behind [`code_point`]; exposed so callers
/// coding many points against one dictionary can reuse it via
/// [`L1QuadProblem::set_linear`].
pub fn coding_problem(
    x: &DVector<f64>,
    xmat: &DMatrix<f64>,
    beta: f64,
    gamma: f64,
) -> Result<L1QuadProblem> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(Error::Config(format!("beta must be > 0, got {beta}")));
    }
    if x.len() != xmat.nrows() {
        return Err(Error::Dimension(format!(
            "point has {} features, context matrix is {}x{}",
            x.len(),
            xmat.nrows(),
            xmat.ncols()
        )));
    }
    let k = xmat.ncols();
    let mut h = xmat.tr_mul(xmat) * (2.0 * beta);
    let lambda = RIDGE_REL * h.trace() / k as f64;
    for j in 0..k {
        h[(j, j)] += lambda;
    }
    let c = xmat.tr_mul(x) * (-2.0 * beta);
    L1QuadProblem::new(h, c, gamma)
}

/// Column-per-point coefficient matrix V (k×n).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCodes {
    pub matrix: DMatrix<f64>,
}

impl SparseCodes {
    pub fn zeros(k: usize, n: usize) -> Self {
        SparseCodes {
            matrix: DMatrix::zeros(k, n),
        }
    }

    pub fn k(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn col(&self, i: usize) -> DVector<f64> {
        self.matrix.column(i).into_owned()
    }

    pub fn set_col(&mut self, i: usize, v: &DVector<f64>) {
        self.matrix.set_column(i, v);
    }

    /// Fraction of exactly-zero coefficients over the whole matrix.
    pub fn zero_fraction(&self) -> f64 {
        if self.matrix.is_empty() {
            return 0.0;
        }
        let zeros = self.matrix.iter().filter(|&&x| x == 0.0).count();
        zeros as f64 / self.matrix.len() as f64
    }

    pub fn column_l1(&self, i: usize) -> f64 {
        self.matrix.column(i).iter().map(|x| x.abs()).sum()
    }

    pub fn total_l1(&self) -> f64 {
        self.matrix.iter().map(|x| x.abs()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn one_dimensional_soft_threshold() {
        let p = L1QuadProblem::new(dmatrix![1.0], dvector![-2.0], 0.5).unwrap();
        let v = feature_sign_search(&p, &dvector![0.0]).unwrap();
        assert!((v[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn zero_solution_when_linear_term_below_gamma() {
        let p = L1QuadProblem::new(
            DMatrix::identity(2, 2),
            dvector![0.3, -0.2],
            0.5,
        )
        .unwrap();
        let v = feature_sign_search(&p, &dvector![0.0, 0.0]).unwrap();
        assert_eq!(v, dvector![0.0, 0.0]);
    }

    #[test]
    fn non_pd_matrix_is_rejected_with_measured_eigenvalue() {
        let err = L1QuadProblem::new(dmatrix![1.0, 0.0; 0.0, -1.0], dvector![0.0, 0.0], 0.1)
            .unwrap_err();
        match err {
            Error::NotPositiveDefinite { min_eig } => assert!((min_eig + 1.0).abs() < 1e-9),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        let err = L1QuadProblem::new(dmatrix![1.0, 0.5; 0.0, 1.0], dvector![0.0, 0.0], 0.1)
            .unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
    }

    #[test]
    fn code_point_orthonormal_columns() {
        // X = [e1 e2], x = e1: minimize (1-v1)^2 + v2^2 + 0.2(|v1|+|v2|).
        let xmat = dmatrix![1.0, 0.0; 0.0, 1.0];
        let v = code_point(&dvector![1.0, 0.0], &xmat, 1.0, 0.2).unwrap();
        assert!((v[0] - 0.9).abs() < 1e-6, "v = {v}");
        assert_eq!(v[1], 0.0);
    }

    #[test]
    fn code_point_unregularized_recovers_exact_solve() {
        let xmat = dmatrix![2.0, 1.0; 1.0, 3.0];
        let x = dvector![1.0, -2.0];
        let v = code_point(&x, &xmat, 1.0, 0.0).unwrap();
        let expect = xmat.clone().lu().solve(&x).unwrap();
        assert!((&v - &expect).amax() < 1e-6);
    }

    #[test]
    fn warm_start_reaches_the_same_optimum() {
        let h = dmatrix![2.0, 0.3, 0.1; 0.3, 1.5, -0.2; 0.1, -0.2, 1.0];
        let p = L1QuadProblem::new(h, dvector![-1.0, 0.4, -0.3], 0.15).unwrap();
        let cold = feature_sign_search(&p, &dvector![0.0, 0.0, 0.0]).unwrap();
        let warm = feature_sign_search(&p, &dvector![1.0, -1.0, 0.5]).unwrap();
        assert!((&cold - &warm).amax() < 1e-8);
        assert!(optimality_residual(&p, &cold) <= 1e-6);
        assert!(optimality_residual(&p, &warm) <= 1e-6);
    }

    #[test]
    fn trace_is_non_increasing() {
        let h = dmatrix![3.0, 1.0; 1.0, 2.0];
        let p = L1QuadProblem::new(h, dvector![-4.0, 2.5], 0.3).unwrap();
        let (_, trace) = feature_sign_search_traced(&p, &dvector![0.0, 0.0]).unwrap();
        for pair in trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
    }

    #[test]
    fn sparse_codes_zero_fraction() {
        let mut codes = SparseCodes::zeros(2, 3);
        assert_eq!(codes.zero_fraction(), 1.0);
        codes.set_col(1, &dvector![1.0, 0.0]);
        assert!((codes.zero_fraction() - 5.0 / 6.0).abs() < 1e-15);
    }
}
