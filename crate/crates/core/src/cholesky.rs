//! Modified Cholesky factors `Ω = L D⁻¹ Lᵀ` and the Gaussian conditional
//! quantities derived from them.
//!
//! `L` has a unit diagonal and `L[i][j] ≠ 0` only for edges `i → j`; for a
//! parent-ordered graph it is lower triangular. Row `i` of the structural
//! equations reads `X_j = −Σ_{i ∈ pa(j)} L[i][j] X_i + ε_j`, `Var(ε_j) = D[j]`.

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct CholeskyFactors<T> {
    pub l: Matrix<T>,
    pub d: Vec<T>,
}

/// Regression of node `j` on its parents, sign-matched to `L`:
/// `E[X_j | x_pa] = −coefficients · x_pa`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalParams<T> {
    pub coefficients: Vec<T>,
    pub residual_variance: T,
}

impl<T: Scalar> CholeskyFactors<T> {
    /// Identity coefficients and unit variances.
    pub fn identity(q: usize) -> Self {
        Self {
            l: Matrix::identity(q),
            d: vec![T::one(); q],
        }
    }

    pub fn q(&self) -> usize {
        self.d.len()
    }

    /// Ω = L D⁻¹ Lᵀ.
    pub fn precision(&self) -> Matrix<T> {
        let q = self.q();
        let mut omega = Matrix::zeros(q, q);
        for i in 0..q {
            for j in 0..=i {
                let mut s = T::zero();
                for k in 0..q {
                    let a = self.l[(i, k)];
                    if a != T::zero() {
                        s = s + a * self.l[(j, k)] / self.d[k];
                    }
                }
                omega[(i, j)] = s;
                omega[(j, i)] = s;
            }
        }
        omega
    }

    /// Σ = Ω⁻¹.
    pub fn covariance(&self) -> Result<Matrix<T>> {
        self.precision().inverse_spd()
    }

    /// Checks the unit diagonal, positivity of `D` and that off-diagonal
    /// nonzeros sit on edges of `dag`.
    pub fn check_against(&self, dag: &Dag) -> Result<()> {
        let q = self.q();
        if dag.q() != q || self.l.rows() != q || self.l.cols() != q {
            return Err(Error::Validation("factor and graph dimensions differ".into()));
        }
        for j in 0..q {
            if self.l[(j, j)] != T::one() {
                return Err(Error::Validation(format!("L[{j}][{j}] is not 1")));
            }
            if !(self.d[j] > T::zero()) {
                return Err(Error::Validation(format!("D[{j}] is not positive")));
            }
            for i in 0..q {
                if i != j && self.l[(i, j)] != T::zero() && !dag.has_edge(i, j) {
                    return Err(Error::Validation(format!(
                        "L[{i}][{j}] is nonzero without edge {}->{}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> CholeskyFactors<U> {
        CholeskyFactors {
            l: self.l.cast(),
            d: self.d.iter().map(|&x| U::of(x.f64())).collect(),
        }
    }
}

/// Unique factorization `Ω = L D⁻¹ Lᵀ` with unit lower-triangular `L` and
/// positive `D`.
pub fn modified_cholesky<T: Scalar>(omega: &Matrix<T>) -> Result<CholeskyFactors<T>> {
    if !omega.is_square() {
        return Err(Error::Domain("precision matrix must be square".into()));
    }
    if !omega.is_symmetric(T::structural_tol()) {
        return Err(Error::Domain("precision matrix is not symmetric".into()));
    }
    let q = omega.rows();
    let mut l = Matrix::identity(q);
    // pivots[j] = 1 / D[j]
    let mut pivots = vec![T::zero(); q];
    for j in 0..q {
        let mut p = omega[(j, j)];
        for k in 0..j {
            p = p - l[(j, k)] * l[(j, k)] * pivots[k];
        }
        if !(p > T::zero()) || !p.is_finite() {
            return Err(Error::Decomposition {
                pivot: j,
                value: p.f64(),
            });
        }
        pivots[j] = p;
        for i in (j + 1)..q {
            let mut s = omega[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)] * pivots[k];
            }
            l[(i, j)] = s / p;
        }
    }
    Ok(CholeskyFactors {
        l,
        d: pivots.into_iter().map(|p| T::one() / p).collect(),
    })
}

/// Coefficients and residual variance of node `j` regressed on `parents`
/// under covariance `sigma`.
pub fn conditional_params<T: Scalar>(
    sigma: &Matrix<T>,
    j: usize,
    parents: &[usize],
) -> Result<ConditionalParams<T>> {
    let q = sigma.rows();
    if j >= q {
        return Err(Error::Index { index: j, q });
    }
    if let Some(&bad) = parents.iter().find(|&&p| p >= q) {
        return Err(Error::Index { index: bad, q });
    }
    if parents.contains(&j) {
        return Err(Error::Domain(format!("node {} listed as its own parent", j + 1)));
    }
    if parents.is_empty() {
        return Ok(ConditionalParams {
            coefficients: Vec::new(),
            residual_variance: sigma[(j, j)],
        });
    }
    let s_pp = sigma.select(parents, parents);
    let s_pj: Vec<T> = parents.iter().map(|&p| sigma[(p, j)]).collect();
    let chol = s_pp
        .cholesky()
        .map_err(|e| Error::Numeric(format!("parent covariance block is singular: {e}")))?;
    let beta = chol.solve(&s_pj);
    let explained: T = beta.iter().zip(&s_pj).map(|(&b, &s)| b * s).sum();
    let residual_variance = sigma[(j, j)] - explained;
    if !(residual_variance > T::zero()) {
        return Err(Error::Numeric(format!(
            "non-positive residual variance for node {}",
            j + 1
        )));
    }
    Ok(ConditionalParams {
        coefficients: beta.into_iter().map(|b| -b).collect(),
        residual_variance,
    })
}

/// ρ_ij = −ω_ij / √(ω_ii ω_jj), unit diagonal.
pub fn partial_correlations<T: Scalar>(omega: &Matrix<T>) -> Result<Matrix<T>> {
    if !omega.is_square() {
        return Err(Error::Domain("precision matrix must be square".into()));
    }
    let q = omega.rows();
    let diag = omega.diagonal();
    if let Some(i) = diag.iter().position(|&w| !(w > T::zero())) {
        return Err(Error::Numeric(format!(
            "non-positive precision diagonal at node {}",
            i + 1
        )));
    }
    let mut rho = Matrix::identity(q);
    for i in 0..q {
        for j in 0..i {
            let w = T::of(0.5) * (omega[(i, j)] + omega[(j, i)]);
            let r = -w / (diag[i] * diag[j]).sqrt();
            rho[(i, j)] = r;
            rho[(j, i)] = r;
        }
    }
    Ok(rho)
}

/// Starting graph from observed covariates only.
///
/// The inverse empirical covariance of `X₋₁` (columns centered, ML
/// denominator `n`) is factored; since the response is a sink, these factors
/// coincide with the trailing block of the full model's `L`. Coefficients
/// with magnitude above `zero_tol` become edges among nodes `2..q`; the
/// response starts isolated.
pub fn initial_dag_estimate<T: Scalar>(x_minus1: &Matrix<T>, zero_tol: T) -> Result<Dag> {
    let n = x_minus1.rows();
    let p = x_minus1.cols();
    let q = p + 1;
    if n <= p {
        return Err(Error::Ingestion(format!(
            "need more rows than covariates to estimate the initial graph (n = {n}, covariates = {p}); \
             reduce the covariate set or regularize the covariance"
        )));
    }
    let cov = empirical_covariance(x_minus1);
    let omega = cov.inverse_spd().map_err(|_| {
        Error::Ingestion(
            "empirical covariance of the covariates is singular; \
             drop collinear columns or regularize before fitting"
                .into(),
        )
    })?;
    let factors = modified_cholesky(&omega)?;
    let mut adj = vec![false; q * q];
    for i in 0..p {
        for j in 0..i {
            if factors.l[(i, j)].abs() > zero_tol {
                adj[(i + 1) * q + (j + 1)] = true;
            }
        }
    }
    Dag::from_adjacency(q, adj)
}

/// Column-centered covariance with denominator `n`.
pub fn empirical_covariance<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    let n = x.rows();
    let p = x.cols();
    let nf = T::of_usize(n);
    let means: Vec<T> = (0..p)
        .map(|j| (0..n).map(|i| x[(i, j)]).sum::<T>() / nf)
        .collect();
    let centered = Matrix::from_fn(n, p, |i, j| x[(i, j)] - means[j]);
    centered.gram().map(|v| v / nf)
}
