//! The two-group Gibbs/Metropolis sampler.
//!
//! Each iteration runs, in order: a structure move per group, the shared
//! variance update, the coefficient and latent updates per group, the
//! cut-off update, and (after burn-in) the per-group intervention effects.

mod trace;
mod truncnorm;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub use trace::{threshold_dag, ChainTrace, GroupRecord, MoveStats, TraceRecord};
pub use truncnorm::sample_truncated_normal;

use crate::causal::do_expectation;
use crate::cholesky::{initial_dag_estimate, CholeskyFactors};
use crate::error::{Error, Result};
use crate::graph::{prior_ratio, Dag, Operator, RESPONSE};
use crate::linalg::Matrix;
use crate::model::{log_marginal_from_gram, node_shape, node_stats_from_gram, sample_inverse_gamma, Gram, GroupData, Hyperparams};
use crate::scalar::Scalar;

/// Sampler state shared across groups: per-group graphs and coefficients,
/// the common variances and the cut-off. Latent values live in the
/// [`GroupData`] the chain owns.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState<T> {
    pub dags: Vec<Dag>,
    /// Per-group factors; every `d` equals `shared_d`.
    pub chol: Vec<CholeskyFactors<T>>,
    pub shared_d: Vec<T>,
    pub theta: T,
}

impl<T: Scalar> ChainState<T> {
    pub fn check(&self) -> Result<()> {
        if self.shared_d[RESPONSE] != T::one() {
            return Err(Error::Validation("response variance drifted from 1".into()));
        }
        for (k, (dag, f)) in self.dags.iter().zip(&self.chol).enumerate() {
            f.check_against(dag)
                .map_err(|e| Error::Validation(format!("group {}: {e}", k + 1)))?;
            if f.d != self.shared_d {
                return Err(Error::Validation(format!("group {} variances diverged", k + 1)));
            }
        }
        Ok(())
    }
}

/// A proposed graph with the move that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Proposal<T> {
    pub dag: Dag,
    pub op: Operator,
    /// ln|O(D)| − ln|O(D′)|.
    pub log_q_ratio: T,
}

/// Uniform draw from the valid operators of `dag`.
pub fn propose_dag<T: Scalar, R: Rng + ?Sized>(dag: &Dag, rng: &mut R) -> Result<Proposal<T>> {
    let ops = dag.valid_operators();
    if ops.is_empty() {
        return Err(Error::Proposal);
    }
    let op = ops[rng.random_range(0..ops.len())];
    let next = dag.apply(&op)?;
    let back = next.valid_operator_count();
    let log_q_ratio = T::of_usize(ops.len()).ln() - T::of_usize(back).ln();
    Ok(Proposal { dag: next, op, log_q_ratio })
}

/// Σ over `nodes` of ln m under `proposed` minus ln m under `current`.
pub fn log_marginal_delta<T: Scalar>(
    gram: &Matrix<T>,
    n: usize,
    current: &Dag,
    proposed: &Dag,
    nodes: &[usize],
    g: T,
    a: T,
) -> Result<T> {
    let mut delta = T::zero();
    for &j in nodes {
        delta = delta + log_marginal_from_gram(gram, n, proposed, j, g, a)?
            - log_marginal_from_gram(gram, n, current, j, g, a)?;
    }
    Ok(delta)
}

/// Log acceptance ratio of a structure move in one group.
pub fn log_dag_acceptance<T: Scalar>(
    gram: &Matrix<T>,
    n: usize,
    current: &Dag,
    proposal: &Proposal<T>,
    g: T,
    hyper: &Hyperparams<T>,
) -> Result<T> {
    let nodes = proposal.op.affected_nodes();
    let delta = log_marginal_delta(gram, n, current, &proposal.dag, &nodes, g, hyper.a)?;
    let q_term = if hyper.exact_proposal_ratio {
        proposal.log_q_ratio
    } else {
        T::zero()
    };
    Ok(delta + prior_ratio(&proposal.op, hyper.xi).ln() + q_term)
}

pub fn accept_dag<T: Scalar, R: Rng + ?Sized>(
    gram: &Matrix<T>,
    n: usize,
    current: &Dag,
    proposal: &Proposal<T>,
    g: T,
    hyper: &Hyperparams<T>,
    rng: &mut R,
) -> Result<bool> {
    let log_alpha = log_dag_acceptance(gram, n, current, proposal, g, hyper)?;
    Ok(accept(log_alpha, rng))
}

fn accept<T: Scalar, R: Rng + ?Sized>(log_alpha: T, rng: &mut R) -> bool {
    if log_alpha >= T::zero() {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_alpha.f64()
}

/// Shape and rate of the full conditional of σ²_j pooled over groups.
pub fn shared_sigma_params<T: Scalar>(
    dags: &[Dag],
    grams: &[&Matrix<T>],
    ns: &[usize],
    j: usize,
    hyper: &Hyperparams<T>,
) -> Result<(T, T)> {
    let half = T::of(0.5);
    let mut shape = T::zero();
    let mut rate = T::zero();
    for (k, dag) in dags.iter().enumerate() {
        let pa = dag.parents(j)?;
        let stats = node_stats_from_gram(grams[k], &pa, j, hyper.g[k]);
        let aj = node_shape(hyper.a, pa.len(), dag.q());
        if !(aj > T::zero()) {
            return Err(Error::Hyperparameter(format!(
                "shape a_j = {aj} is not positive for node {}",
                j + 1
            )));
        }
        let beta = stats.beta();
        if !(beta > T::zero()) {
            return Err(Error::Numeric(format!(
                "non-positive rate for node {} in group {}",
                j + 1,
                k + 1
            )));
        }
        shape = shape + half * (aj + T::of_usize(ns[k]));
        rate = rate + half * beta;
    }
    Ok((shape, rate))
}

/// Draws the variances shared by both groups; the response keeps 1.
pub fn update_shared_sigma<T: Scalar, R: Rng + ?Sized>(
    dags: &[Dag],
    grams: &[&Matrix<T>],
    ns: &[usize],
    hyper: &Hyperparams<T>,
    rng: &mut R,
) -> Result<Vec<T>> {
    let q = dags[0].q();
    let mut d = vec![T::one(); q];
    for (j, dj) in d.iter_mut().enumerate().skip(1) {
        let (shape, rate) = shared_sigma_params(dags, grams, ns, j, hyper)?;
        *dj = sample_inverse_gamma(shape, rate, rng)?;
    }
    Ok(d)
}

/// Draws every node's parent coefficients given the shared variances.
pub fn update_l<T: Scalar, R: Rng + ?Sized>(
    dag: &Dag,
    gram: &Matrix<T>,
    shared_d: &[T],
    g: T,
    rng: &mut R,
) -> Result<CholeskyFactors<T>> {
    let q = dag.q();
    let mut f = CholeskyFactors {
        l: Matrix::identity(q),
        d: shared_d.to_vec(),
    };
    for j in 0..q {
        let pa = dag.parents(j)?;
        if pa.is_empty() {
            continue;
        }
        let stats = node_stats_from_gram(gram, &pa, j, g);
        let sigma_sq = if j == RESPONSE { T::one() } else { shared_d[j] };
        for (&p, v) in pa.iter().zip(stats.sample_coefficients(sigma_sq, rng)) {
            f.l[(p, j)] = v;
        }
    }
    Ok(f)
}

/// Conditional means of the latent response: μ_i = −Σ_p x_ip L_p1.
pub fn response_means<T: Scalar>(data: &GroupData<T>, dag: &Dag, chol: &CholeskyFactors<T>) -> Vec<T> {
    let pa = dag.parents_of(RESPONSE);
    let x = data.x();
    (0..data.n())
        .map(|i| {
            pa.iter()
                .fold(T::zero(), |acc, &p| acc - x[(i, p)] * chol.l[(p, RESPONSE)])
        })
        .collect()
}

/// Redraws the latent column from its truncated normal full conditional.
pub fn update_latent<T: Scalar, R: Rng + ?Sized>(
    data: &mut GroupData<T>,
    dag: &Dag,
    chol: &CholeskyFactors<T>,
    theta: T,
    rng: &mut R,
) -> Result<()> {
    let mu = response_means(data, dag, chol);
    let latent = data
        .y()
        .iter()
        .zip(&mu)
        .map(|(&y, &m)| {
            if y {
                sample_truncated_normal(m, theta, T::infinity(), rng)
            } else {
                sample_truncated_normal(m, T::neg_infinity(), theta, rng)
            }
        })
        .collect::<Result<Vec<T>>>()?;
    data.set_latent(&latent);
    Ok(())
}

/// ln Ψ: ln Φ(θ − μ) for y = 0, ln(1 − Φ(θ − μ)) for y = 1.
fn ln_psi<T: Scalar>(y: bool, theta: T, mu: T) -> T {
    if y {
        (theta - mu).ln_norm_sf()
    } else {
        (theta - mu).ln_norm_cdf()
    }
}

fn ln_normal_kernel<T: Scalar>(x: T, mean: T, var: T) -> T {
    let half = T::of(0.5);
    -half * (T::ln_2pi() + var.ln()) - half * (x - mean) * (x - mean) / var
}

/// ln r_θ for moving from `theta` to `proposed`. `means[k]` holds the
/// response means of group `k`.
pub fn log_theta_ratio<T: Scalar>(
    data: &[GroupData<T>],
    means: &[Vec<T>],
    theta: T,
    proposed: T,
    sigma0_sq: T,
) -> T {
    let mut lr = T::zero();
    for (d, mu) in data.iter().zip(means) {
        for (&y, &m) in d.y().iter().zip(mu) {
            lr = lr + ln_psi(y, proposed, m) - ln_psi(y, theta, m);
        }
    }
    lr + ln_normal_kernel(theta, proposed, sigma0_sq) - ln_normal_kernel(proposed, theta, sigma0_sq)
}

/// Random-walk Metropolis–Hastings step for the cut-off.
pub fn update_theta<T: Scalar, R: Rng + ?Sized>(
    data: &[GroupData<T>],
    means: &[Vec<T>],
    theta: T,
    sigma0_sq: T,
    rng: &mut R,
) -> Result<(T, bool)> {
    if !(sigma0_sq > T::zero()) {
        return Err(Error::Hyperparameter("theta proposal variance must be positive".into()));
    }
    let z: f64 = StandardNormal.sample(rng);
    let proposed = theta + sigma0_sq.sqrt() * T::of(z);
    let lr = log_theta_ratio(data, means, theta, proposed, sigma0_sq);
    if lr.is_nan() {
        return Err(Error::Numeric("theta acceptance ratio is NaN".into()));
    }
    if accept(lr, rng) {
        Ok((proposed, true))
    } else {
        Ok((theta, false))
    }
}

/// Runs the sampler. `groups` must hold exactly two groups on the same
/// node set.
pub fn run_chain<T: Scalar, R: Rng + ?Sized>(
    groups: &[GroupData<T>],
    hyper: &Hyperparams<T>,
    rng: &mut R,
) -> Result<ChainTrace<T>> {
    if groups.len() != 2 {
        return Err(Error::Validation(format!(
            "exactly two groups are supported, got {}",
            groups.len()
        )));
    }
    let q = groups[0].q();
    if groups.iter().any(|g| g.q() != q) {
        return Err(Error::Validation("groups have different numbers of nodes".into()));
    }
    hyper.validate(q, groups.len())?;
    let targets = hyper.effect_targets(q);
    let mut data: Vec<GroupData<T>> = groups.to_vec();
    let ns: Vec<usize> = data.iter().map(GroupData::n).collect();

    let dags = data
        .iter()
        .map(|d| initial_dag_estimate(&d.x_obs(), hyper.zero_tol))
        .collect::<Result<Vec<Dag>>>()?;
    let mut state = ChainState {
        dags,
        chol: vec![CholeskyFactors::identity(q); 2],
        shared_d: vec![T::one(); q],
        theta: T::zero(),
    };
    for (d, f) in data.iter_mut().zip(&state.chol) {
        update_latent(d, &Dag::empty(q), f, state.theta, rng)?;
    }
    let mut grams: Vec<Gram<T>> = data.iter().map(Gram::new).collect();

    let mut trace = ChainTrace {
        q,
        targets: targets.clone(),
        x_tilde: hyper.x_tilde,
        records: Vec::with_capacity(hyper.kept()),
        dag_moves: vec![MoveStats::default(); 2],
        theta_moves: MoveStats::default(),
    };

    for it in 0..hyper.iterations {
        let wrap = |e: Error| Error::Chain {
            iteration: it,
            source: Box::new(e),
        };

        for k in 0..2 {
            let proposal = propose_dag(&state.dags[k], rng).map_err(wrap)?;
            let ok = accept_dag(grams[k].matrix(), ns[k], &state.dags[k], &proposal, hyper.g[k], hyper, rng)
                .map_err(wrap)?;
            trace.dag_moves[k].record(ok);
            if ok {
                state.dags[k] = proposal.dag;
            }
        }

        let gram_refs: Vec<&Matrix<T>> = grams.iter().map(Gram::matrix).collect();
        state.shared_d = update_shared_sigma(&state.dags, &gram_refs, &ns, hyper, rng).map_err(wrap)?;

        for k in 0..2 {
            state.chol[k] = update_l(&state.dags[k], grams[k].matrix(), &state.shared_d, hyper.g[k], rng)
                .map_err(wrap)?;
            update_latent(&mut data[k], &state.dags[k], &state.chol[k], state.theta, rng).map_err(wrap)?;
            grams[k].refresh_latent(&data[k]);
            debug_assert!(data[k].is_consistent(state.theta));
        }

        let means: Vec<Vec<T>> = (0..2)
            .map(|k| response_means(&data[k], &state.dags[k], &state.chol[k]))
            .collect();
        let (theta, ok) = update_theta(&data, &means, state.theta, hyper.sigma0_sq, rng).map_err(wrap)?;
        state.theta = theta;
        trace.theta_moves.record(ok);

        if cfg!(debug_assertions) {
            state.check().map_err(wrap)?;
        }

        if it >= hyper.burn_in {
            let mut records = Vec::with_capacity(2);
            for k in 0..2 {
                let sigma = state.chol[k].covariance().map_err(wrap)?;
                let effects = targets
                    .iter()
                    .map(|&s| do_expectation(&sigma, state.theta, s, &state.dags[k].parents_of(s), hyper.x_tilde))
                    .collect::<Result<Vec<T>>>()
                    .map_err(wrap)?;
                let l = state.dags[k].edges().map(|(i, j)| state.chol[k].l[(i, j)]).collect();
                records.push(GroupRecord {
                    dag: state.dags[k].clone(),
                    l,
                    effects,
                });
            }
            trace.records.push(TraceRecord {
                iteration: it,
                theta: state.theta,
                d: state.shared_d.clone(),
                groups: records,
            });
        }
    }
    Ok(trace)
}

/// Posterior edge inclusion frequencies for group `k`.
pub fn edge_probabilities<T: Scalar>(trace: &ChainTrace<T>, k: usize) -> Result<Matrix<T>> {
    trace.edge_probabilities(k)
}
