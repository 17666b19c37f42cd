//! Post-intervention distribution of the latent response and the implied
//! probability `E[Y | do(X_s = x̃)]`.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::RESPONSE;
use crate::linalg::Matrix;
use crate::mcmc::ChainTrace;
use crate::scalar::Scalar;

/// Regression of the response on `fa(s) = {s} ∪ pa(s)` and the variance of
/// the response after intervening on `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct BartlettParams<T> {
    /// Σ_{1|fa(s)}
    pub delta1_sq: T,
    pub gamma_s: T,
    /// Coefficients on pa(s), in the order given.
    pub gamma: Vec<T>,
    /// (Σ_{pa,pa})⁻¹ + γγ′/δ₁²
    pub t_mat: Matrix<T>,
    pub sigma_do_sq: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectEstimate<T> {
    pub node: usize,
    pub level: T,
    pub values: Vec<T>,
    pub mean: T,
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> EffectEstimate<T> {
    /// Mean and central 95% band of per-iteration values.
    pub fn from_values(node: usize, level: T, values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("no effect values to summarize".into()));
        }
        let mean = values.iter().copied().sum::<T>() / T::of_usize(values.len());
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("effect values are finite"));
        Ok(Self {
            node,
            level,
            mean,
            lower: quantile_sorted(&sorted, 0.025),
            upper: quantile_sorted(&sorted, 0.975),
            values,
        })
    }
}

/// Linear-interpolation quantile (R type 7) of sorted data.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], p: f64) -> T {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty data");
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let w = T::of(h - lo as f64);
    sorted[lo] + w * (sorted[hi] - sorted[lo])
}

fn check_target(q: usize, s: usize, pa_s: &[usize]) -> Result<()> {
    if s >= q {
        return Err(Error::Index { index: s, q });
    }
    if s == RESPONSE {
        return Err(Error::Validation(
            "cannot intervene on the latent response".into(),
        ));
    }
    if let Some(&p) = pa_s.iter().find(|&&p| p >= q) {
        return Err(Error::Index { index: p, q });
    }
    if pa_s.contains(&RESPONSE) || pa_s.contains(&s) {
        return Err(Error::Validation(format!(
            "parent set of node {} must exclude the response and the node itself",
            s + 1
        )));
    }
    Ok(())
}

pub fn bartlett_params<T: Scalar>(sigma: &Matrix<T>, s: usize, pa_s: &[usize]) -> Result<BartlettParams<T>> {
    let q = sigma.rows();
    check_target(q, s, pa_s)?;
    let mut fa = Vec::with_capacity(pa_s.len() + 1);
    fa.push(s);
    fa.extend_from_slice(pa_s);
    let s_ff = sigma.select(&fa, &fa);
    let s_f1: Vec<T> = fa.iter().map(|&i| sigma[(i, RESPONSE)]).collect();
    let chol = s_ff
        .cholesky()
        .map_err(|e| Error::Numeric(format!("family covariance of node {} is singular: {e}", s + 1)))?;
    let coef = chol.solve(&s_f1);
    let explained: T = coef.iter().zip(&s_f1).map(|(&c, &v)| c * v).sum();
    let delta1_sq = sigma[(RESPONSE, RESPONSE)] - explained;
    if !(delta1_sq > T::zero()) {
        return Err(Error::Numeric(format!(
            "non-positive conditional variance of the response given the family of node {}",
            s + 1
        )));
    }
    let gamma_s = coef[0];
    let gamma = coef[1..].to_vec();
    let p = pa_s.len();
    if p == 0 {
        return Ok(BartlettParams {
            delta1_sq,
            gamma_s,
            gamma,
            t_mat: Matrix::zeros(0, 0),
            sigma_do_sq: delta1_sq,
        });
    }
    let s_pp = sigma.select(pa_s, pa_s);
    let mut t_mat = s_pp
        .inverse_spd()
        .map_err(|e| Error::Numeric(format!("parent covariance of node {} is singular: {e}", s + 1)))?;
    for i in 0..p {
        for j in 0..p {
            t_mat[(i, j)] = t_mat[(i, j)] + gamma[i] * gamma[j] / delta1_sq;
        }
    }
    let t_inv_gamma = t_mat
        .cholesky()
        .map_err(|e| Error::Numeric(format!("intervention matrix is singular: {e}")))?
        .solve(&gamma);
    let form: T = gamma.iter().zip(&t_inv_gamma).map(|(&a, &b)| a * b).sum();
    let denom = T::one() - form / delta1_sq;
    if !(denom > T::zero()) {
        return Err(Error::Numeric("intervention variance correction is not positive".into()));
    }
    let sigma_do_sq = delta1_sq / denom;
    debug_assert!(sigma_do_sq >= delta1_sq * (T::one() - T::structural_tol()));
    Ok(BartlettParams {
        delta1_sq,
        gamma_s,
        gamma,
        t_mat,
        sigma_do_sq,
    })
}

/// P(Y = 1 | do(X_s = x̃)) = 1 − Φ((θ − γ_s x̃)/σ_do).
pub fn do_expectation<T: Scalar>(sigma: &Matrix<T>, theta: T, s: usize, pa_s: &[usize], x_tilde: T) -> Result<T> {
    let b = bartlett_params(sigma, s, pa_s)?;
    Ok(((b.gamma_s * x_tilde - theta) / b.sigma_do_sq.sqrt()).norm_cdf())
}

/// BMA estimate for group `k` from the trace's per-iteration factors,
/// graphs and cut-offs.
pub fn bma_effects<T: Scalar>(trace: &ChainTrace<T>, k: usize, s: usize, x_tilde: T) -> Result<EffectEstimate<T>> {
    if trace.records.is_empty() {
        return Err(Error::Validation("empty trace".into()));
    }
    if k >= trace.groups() {
        return Err(Error::Validation(format!("group {} not in trace", k + 1)));
    }
    check_target(trace.q, s, &[])?;
    let values = trace
        .records
        .par_iter()
        .map(|rec| {
            let g = &rec.groups[k];
            let sigma = trace.factors(rec, k).covariance()?;
            do_expectation(&sigma, rec.theta, s, &g.dag.parents_of(s), x_tilde)
        })
        .collect::<Result<Vec<T>>>()?;
    EffectEstimate::from_values(s, x_tilde, values)
}

/// Writes `group,node,x_tilde,mean,q2.5,q97.5` rows with 1-based labels.
pub fn write_effects_csv<T: Scalar, W: Write>(writer: W, rows: &[(usize, EffectEstimate<T>)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["group", "node", "x_tilde", "mean", "q2.5", "q97.5"])?;
    for (k, e) in rows {
        w.write_record([
            (k + 1).to_string(),
            (e.node + 1).to_string(),
            e.level.to_string(),
            e.mean.to_string(),
            e.lower.to_string(),
            e.upper.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
