use crate::causal::{bma_effects, do_expectation, quantile_sorted};
use crate::cholesky::partial_correlations;
use crate::error::{Error, Result};
use crate::graph::{Dag, RESPONSE};
use crate::linalg::Matrix;
use crate::mcmc::ChainTrace;
use crate::scalar::Scalar;

use super::scenario::Truth;

/// ROC points from (0, 0) to (1, 1) and the trapezoid area under them.
#[derive(Clone, Debug, PartialEq)]
pub struct Roc {
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Threshold sweep over the distinct scores; tied scores move together.
pub fn roc_auc<T: Scalar>(truth: &[bool], scores: &[T]) -> Result<Roc> {
    if truth.len() != scores.len() {
        return Err(Error::Metric(format!(
            "{} labels but {} scores",
            truth.len(),
            scores.len()
        )));
    }
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric("ROC needs both present and absent edges".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores are comparable")
    });
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut idx = 0;
    while idx < order.len() {
        let s = scores[order[idx]];
        while idx < order.len() && scores[order[idx]] == s {
            if truth[order[idx]] {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let auc = trapezoid(&points);
    Ok(Roc { points, auc })
}

fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1))
        .sum()
}

/// TPR of a piecewise-linear ROC curve at false-positive rate `f`; on a
/// vertical segment the highest TPR is used.
fn tpr_at(points: &[(f64, f64)], f: f64) -> f64 {
    let mut best = 0.0f64;
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x1 == x0 {
            if x0 <= f {
                best = best.max(y1);
            }
        } else if x0 <= f && f <= x1 {
            best = best.max(y0 + (y1 - y0) * (f - x0) / (x1 - x0));
        } else if x1 < f {
            best = best.max(y1);
        }
    }
    best
}

/// Vertical average of several ROC curves on a fixed FPR grid.
pub fn average_roc(curves: &[Roc], grid: usize) -> Result<Roc> {
    if curves.is_empty() || grid < 1 {
        return Err(Error::Metric("no ROC curves to average".into()));
    }
    let mut points = Vec::with_capacity(grid + 2);
    points.push((0.0, 0.0));
    for g in 0..=grid {
        let f = g as f64 / grid as f64;
        let t = curves.iter().map(|c| tpr_at(&c.points, f)).sum::<f64>() / curves.len() as f64;
        points.push((f, t));
    }
    let auc = trapezoid(&points);
    Ok(Roc { points, auc })
}

/// Lower-triangle (i > j) slots of a graph, row-major.
pub fn lower_triangle_labels(dag: &Dag) -> Vec<bool> {
    let q = dag.q();
    (1..q)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| dag.has_edge(i, j))
        .collect()
}

pub fn lower_triangle_scores<T: Scalar>(probs: &Matrix<T>) -> Vec<T> {
    let q = probs.rows();
    (1..q)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| probs[(i, j)])
        .collect()
}

/// ROC of both groups' lower-triangle edge probabilities pooled together.
pub fn pooled_roc<T: Scalar>(truth: &Truth<T>, trace: &ChainTrace<T>) -> Result<Roc> {
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    for (k, dag) in truth.dags.iter().enumerate() {
        labels.extend(lower_triangle_labels(dag));
        scores.extend(lower_triangle_scores(&trace.edge_probabilities(k)?));
    }
    roc_auc(&labels, &scores)
}

/// Mean of ρ − ρ̂ and of |ρ − ρ̂| over kept iterations and pairs i < j,
/// with ρ from `truth_precision` and ρ̂ from each iteration's factors.
pub fn partial_corr_errors<T: Scalar>(trace: &ChainTrace<T>, k: usize, truth_precision: &Matrix<T>) -> Result<(T, T)> {
    if trace.records.is_empty() {
        return Err(Error::Validation("empty trace".into()));
    }
    let rho = partial_correlations(truth_precision)?;
    let q = trace.q;
    let pairs = T::of_usize(q * (q - 1) / 2);
    let mut signed = T::zero();
    let mut abs = T::zero();
    for rec in &trace.records {
        let est = partial_correlations(&trace.factors(rec, k).precision())?;
        let (mut s, mut a) = (T::zero(), T::zero());
        for i in 0..q {
            for j in (i + 1)..q {
                let d = rho[(i, j)] - est[(i, j)];
                s = s + d;
                a = a + d.abs();
            }
        }
        signed = signed + s / pairs;
        abs = abs + a / pairs;
    }
    let n = T::of_usize(trace.records.len());
    Ok((signed / n, abs / n))
}

/// Truth effect minus BMA estimate for group `k`.
pub fn effect_size_error<T: Scalar>(truth: &Truth<T>, trace: &ChainTrace<T>, k: usize, s: usize, x_tilde: T) -> Result<T> {
    let truth_effect = truth_effect(truth, k, s, x_tilde)?;
    let est = bma_effects(trace, k, s, x_tilde)?;
    Ok(truth_effect - est.mean)
}

pub fn truth_effect<T: Scalar>(truth: &Truth<T>, k: usize, s: usize, x_tilde: T) -> Result<T> {
    let sigma = truth.sigma(k)?;
    do_expectation(&sigma, truth.theta, s, &truth.dags[k].parents(s)?, x_tilde)
}

/// Posterior summary of the cut-off against its true value.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaSummary {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub error: f64,
    pub covered: bool,
}

pub fn theta_summary<T: Scalar>(trace: &ChainTrace<T>, truth_theta: T) -> Result<ThetaSummary> {
    if trace.records.is_empty() {
        return Err(Error::Validation("empty trace".into()));
    }
    let mut th: Vec<f64> = trace.thetas().into_iter().map(Scalar::f64).collect();
    let mean = th.iter().sum::<f64>() / th.len() as f64;
    th.sort_by(|a, b| a.partial_cmp(b).expect("theta is finite"));
    let lower = quantile_sorted(&th, 0.025);
    let upper = quantile_sorted(&th, 0.975);
    let t = truth_theta.f64();
    Ok(ThetaSummary {
        mean,
        lower,
        upper,
        error: mean - t,
        covered: lower <= t && t <= upper,
    })
}

/// Per-replication metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub roc: Roc,
    pub auc: f64,
    /// Averaged over both groups.
    pub partial_err_mean: f64,
    pub partial_err_abs: f64,
    /// (group, node, truth − estimate) for every true edge into the response.
    pub effect_err: Vec<(usize, usize, f64)>,
    pub theta: ThetaSummary,
    pub theta_err: f64,
    pub wall_time: f64,
}

pub fn evaluate<T: Scalar>(truth: &Truth<T>, trace: &ChainTrace<T>, x_tilde: T) -> Result<EvalReport> {
    if trace.q != truth.q() {
        return Err(Error::Validation(format!(
            "trace has {} nodes but the truth has {}",
            trace.q,
            truth.q()
        )));
    }
    let roc = pooled_roc(truth, trace)?;
    let groups = truth.dags.len();
    let (mut pm, mut pa) = (0.0, 0.0);
    for k in 0..groups {
        let (m, a) = partial_corr_errors(trace, k, &truth.precision(k))?;
        pm += m.f64() / groups as f64;
        pa += a.f64() / groups as f64;
    }
    let mut effect_err = Vec::new();
    for (k, dag) in truth.dags.iter().enumerate() {
        for s in dag.parents(RESPONSE)? {
            effect_err.push((k, s, effect_size_error(truth, trace, k, s, x_tilde)?.f64()));
        }
    }
    let theta = theta_summary(trace, truth.theta)?;
    Ok(EvalReport {
        auc: roc.auc,
        roc,
        partial_err_mean: pm,
        partial_err_abs: pa,
        effect_err,
        theta_err: theta.error,
        theta,
        wall_time: 0.0,
    })
}
