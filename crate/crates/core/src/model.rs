//! Hyperparameters, group data, node sufficient statistics and the
//! closed-form node marginal likelihoods.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::{Dag, RESPONSE};
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Hyperparams<T> {
    /// Base shape; node `j` uses `a_j = a + |pa(j)| − q + 1`.
    pub a: T,
    /// Per-group prior precision scale `g_k`.
    pub g: Vec<T>,
    pub xi: T,
    /// Variance of the random-walk proposal for θ.
    pub sigma0_sq: T,
    pub iterations: usize,
    pub burn_in: usize,
    pub edge_threshold: T,
    /// Coefficient magnitude below which the initial estimate drops an edge.
    pub zero_tol: T,
    /// Use `ln|O(D)| − ln|O(D')|` in DAG acceptance; `false` drops the term.
    pub exact_proposal_ratio: bool,
    pub x_tilde: T,
    /// Intervention targets (0-based); `None` means every covariate.
    pub targets: Option<Vec<usize>>,
}

impl<T: Scalar> Hyperparams<T> {
    /// `a = q`, `g_k = 1/n_k`, `σ₀² = 0.5`, 5000 iterations with 1000 burn-in.
    pub fn defaults(q: usize, n: &[usize]) -> Self {
        Self {
            a: T::of_usize(q),
            g: n.iter().map(|&nk| T::one() / T::of_usize(nk.max(1))).collect(),
            xi: T::of(0.1),
            sigma0_sq: T::of(0.5),
            iterations: 5000,
            burn_in: 1000,
            edge_threshold: T::of(0.5),
            zero_tol: T::of(0.1),
            exact_proposal_ratio: true,
            x_tilde: T::one(),
            targets: None,
        }
    }

    pub fn validate(&self, q: usize, groups: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Hyperparameter(m));
        if q < 2 {
            return bad(format!("need at least 2 nodes, got {q}"));
        }
        if !(self.a > T::of_usize(q - 1)) {
            return bad(format!("a = {} must exceed q - 1 = {}", self.a, q - 1));
        }
        if self.g.len() != groups {
            return bad(format!("{} values of g for {groups} groups", self.g.len()));
        }
        if let Some(g) = self.g.iter().find(|g| !(**g > T::zero()) || !g.is_finite()) {
            return bad(format!("g = {g} must be positive"));
        }
        if !(self.xi > T::zero() && self.xi < T::one()) {
            return bad(format!("xi = {} must lie in (0, 1)", self.xi));
        }
        if !(self.sigma0_sq > T::zero()) {
            return bad(format!("sigma0_sq = {} must be positive", self.sigma0_sq));
        }
        if self.burn_in >= self.iterations {
            return bad(format!(
                "burn-in {} must be below the iteration count {}",
                self.burn_in, self.iterations
            ));
        }
        if !(self.edge_threshold >= T::zero() && self.edge_threshold <= T::one()) {
            return bad(format!("edge threshold {} outside [0, 1]", self.edge_threshold));
        }
        if !(self.zero_tol >= T::zero()) {
            return bad(format!("zero tolerance {} is negative", self.zero_tol));
        }
        if !self.x_tilde.is_finite() {
            return bad("x_tilde must be finite".into());
        }
        if let Some(t) = &self.targets {
            if let Some(&s) = t.iter().find(|&&s| s == RESPONSE || s >= q) {
                return bad(format!("intervention target {} is not a covariate", s + 1));
            }
        }
        Ok(())
    }

    pub fn effect_targets(&self, q: usize) -> Vec<usize> {
        self.targets.clone().unwrap_or_else(|| (1..q).collect())
    }

    pub fn kept(&self) -> usize {
        self.iterations - self.burn_in
    }
}

/// One group's observations. Column 0 of `x` holds the current imputation of
/// the latent response; columns `1..q` are the covariates.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupData<T> {
    y: Vec<bool>,
    x: Matrix<T>,
}

impl<T: Scalar> GroupData<T> {
    /// Latent column starts at zero.
    pub fn new(y: Vec<bool>, x_obs: &Matrix<T>) -> Result<Self> {
        if y.len() != x_obs.rows() {
            return Err(Error::Ingestion(format!(
                "{} responses but {} covariate rows",
                y.len(),
                x_obs.rows()
            )));
        }
        if x_obs.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Ingestion("covariates contain non-finite values".into()));
        }
        let q = x_obs.cols() + 1;
        let x = Matrix::from_fn(y.len(), q, |i, j| if j == 0 { T::zero() } else { x_obs[(i, j - 1)] });
        Ok(Self { y, x })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn q(&self) -> usize {
        self.x.cols()
    }

    pub fn y(&self) -> &[bool] {
        &self.y
    }

    /// n×q with the latent column first.
    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }

    pub fn x_obs(&self) -> Matrix<T> {
        Matrix::from_fn(self.n(), self.q() - 1, |i, j| self.x[(i, j + 1)])
    }

    pub fn latent(&self) -> Vec<T> {
        self.x.column(0)
    }

    pub fn set_latent(&mut self, values: &[T]) {
        assert_eq!(values.len(), self.n(), "latent vector has wrong length");
        for (i, &v) in values.iter().enumerate() {
            self.x[(i, 0)] = v;
        }
    }

    /// `y_i = 1` exactly when the latent value exceeds θ.
    pub fn is_consistent(&self, theta: T) -> bool {
        self.y
            .iter()
            .enumerate()
            .all(|(i, &y)| (self.x[(i, 0)] > theta) == y)
    }

    pub fn mean_y(&self) -> T {
        T::of_usize(self.y.iter().filter(|&&y| y).count()) / T::of_usize(self.n().max(1))
    }
}

/// Subtracts each column's mean in place.
pub fn center_columns<T: Scalar>(x: &mut Matrix<T>) {
    let n = x.rows();
    if n == 0 {
        return;
    }
    for j in 0..x.cols() {
        let mean = (0..n).map(|i| x[(i, j)]).sum::<T>() / T::of_usize(n);
        for i in 0..n {
            x[(i, j)] = x[(i, j)] - mean;
        }
    }
}

/// X′X for a group, with row/column 0 refreshed after each latent update.
#[derive(Clone, Debug, PartialEq)]
pub struct Gram<T> {
    m: Matrix<T>,
}

impl<T: Scalar> Gram<T> {
    pub fn new(data: &GroupData<T>) -> Self {
        Self { m: data.x().gram() }
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.m
    }

    pub fn refresh_latent(&mut self, data: &GroupData<T>) {
        let x = data.x();
        let q = x.cols();
        let mut col = vec![T::zero(); q];
        for i in 0..x.rows() {
            let row = x.row(i);
            let z = row[0];
            for (c, &v) in col.iter_mut().zip(row) {
                *c = *c + z * v;
            }
        }
        for (j, &c) in col.iter().enumerate().take(q) {
            self.m[(0, j)] = c;
            self.m[(j, 0)] = c;
        }
    }
}

/// Conjugate update quantities for node `j` given its parents.
#[derive(Clone, Debug)]
pub struct NodeStats<T> {
    pub t: Matrix<T>,
    pub t_bar: Matrix<T>,
    pub l_hat: Vec<T>,
    g: T,
    xj_xj: T,
    /// l̂′ T̄ l̂ = l̂′ X′_pa X_j
    quad: T,
    chol: Cholesky<T>,
}

impl<T: Scalar> NodeStats<T> {
    pub fn parent_count(&self) -> usize {
        self.l_hat.len()
    }

    pub fn log_det_t(&self) -> T {
        T::of_usize(self.parent_count()) * self.g.ln()
    }

    pub fn log_det_t_bar(&self) -> T {
        self.chol.log_det()
    }

    /// X′_j X_j − l̂′ T̄ l̂, the residual sum of squares after shrinkage.
    pub fn residual_ss(&self) -> T {
        self.xj_xj - self.quad
    }

    /// g + X′_j X_j − l̂′ T̄ l̂.
    pub fn beta(&self) -> T {
        self.g + self.residual_ss()
    }

    /// Draws coefficients from N(−l̂, σ² T̄⁻¹).
    pub fn sample_coefficients<R: Rng + ?Sized>(&self, sigma_sq: T, rng: &mut R) -> Vec<T> {
        let z: Vec<T> = (0..self.parent_count())
            .map(|_| T::of(StandardNormal.sample(rng)))
            .collect();
        let w = self.chol.solve_upper(&z);
        let s = sigma_sq.sqrt();
        self.l_hat.iter().zip(w).map(|(&m, w)| -m + s * w).collect()
    }
}

/// Statistics from a precomputed Gram matrix X′X (q×q).
pub fn node_stats_from_gram<T: Scalar>(gram: &Matrix<T>, parents: &[usize], j: usize, g: T) -> NodeStats<T> {
    let p = parents.len();
    let t = Matrix::from_diagonal(&vec![g; p]);
    let mut t_bar = gram.select(parents, parents);
    for i in 0..p {
        t_bar[(i, i)] = t_bar[(i, i)] + g;
    }
    let rhs: Vec<T> = parents.iter().map(|&i| gram[(i, j)]).collect();
    let chol = t_bar
        .cholesky()
        .expect("g I plus a Gram matrix is positive definite for g > 0");
    let l_hat = chol.solve(&rhs);
    let quad = l_hat.iter().zip(&rhs).map(|(&a, &b)| a * b).sum();
    NodeStats {
        t,
        t_bar,
        l_hat,
        g,
        xj_xj: gram[(j, j)],
        quad,
        chol,
    }
}

/// Statistics for node `j` under `dag` from the full n×q data matrix.
pub fn node_stats<T: Scalar>(x: &Matrix<T>, dag: &Dag, j: usize, g: T) -> Result<NodeStats<T>> {
    check_dims(x, dag)?;
    let pa = dag.parents(j)?;
    let mut cols = pa.clone();
    cols.push(j);
    let sub = x.select(&(0..x.rows()).collect::<Vec<_>>(), &cols).gram();
    let p = pa.len();
    let local: Vec<usize> = (0..p).collect();
    Ok(node_stats_from_gram(&sub, &local, p, g))
}

/// `a_j = a + |pa(j)| − q + 1`.
pub fn node_shape<T: Scalar>(a: T, parent_count: usize, q: usize) -> T {
    a + T::of_usize(parent_count) + T::one() - T::of_usize(q)
}

/// ln m(X_j | X_pa(j)) from node statistics. Node 0 has unit variance;
/// other nodes integrate σ²_j against its inverse-gamma prior.
pub fn log_marginal_from_stats<T: Scalar>(stats: &NodeStats<T>, j: usize, n: usize, a: T, q: usize) -> Result<T> {
    let half = T::of(0.5);
    let nf = T::of_usize(n);
    let base = -half * nf * T::ln_2pi() + half * (stats.log_det_t() - stats.log_det_t_bar());
    if j == RESPONSE {
        return Ok(base - half * stats.residual_ss());
    }
    let aj = node_shape(a, stats.parent_count(), q);
    if !(aj > T::zero()) {
        return Err(Error::Hyperparameter(format!(
            "shape a_j = {aj} is not positive for node {}",
            j + 1
        )));
    }
    let beta = stats.beta();
    if !(beta > T::zero()) {
        return Err(Error::Numeric(format!("non-positive rate for node {}", j + 1)));
    }
    let post = half * (aj + nf);
    Ok(base + post.ln_gamma() - (half * aj).ln_gamma() + half * aj * (half * stats.g).ln()
        - post * (half * beta).ln())
}

/// ln m(X_j | X_pa(j)) from a cached Gram matrix.
pub fn log_marginal_from_gram<T: Scalar>(
    gram: &Matrix<T>,
    n: usize,
    dag: &Dag,
    j: usize,
    g: T,
    a: T,
) -> Result<T> {
    let pa = dag.parents(j)?;
    let stats = node_stats_from_gram(gram, &pa, j, g);
    log_marginal_from_stats(&stats, j, n, a, dag.q())
}

/// ln m(X_j | X_pa(j)) from the full n×q data matrix.
pub fn log_marginal_node<T: Scalar>(x: &Matrix<T>, dag: &Dag, j: usize, g: T, a: T) -> Result<T> {
    let stats = node_stats(x, dag, j, g)?;
    log_marginal_from_stats(&stats, j, x.rows(), a, dag.q())
}

fn check_dims<T: Scalar>(x: &Matrix<T>, dag: &Dag) -> Result<()> {
    if x.cols() != dag.q() {
        return Err(Error::Validation(format!(
            "data has {} columns for a graph on {} nodes",
            x.cols(),
            dag.q()
        )));
    }
    Ok(())
}

/// Draws from the inverse-gamma distribution with the given shape and rate.
pub fn sample_inverse_gamma<T: Scalar, R: Rng + ?Sized>(shape: T, rate: T, rng: &mut R) -> Result<T> {
    if !(shape > T::zero()) || !shape.is_finite() {
        return Err(Error::Hyperparameter(format!("inverse-gamma shape {shape} is not positive")));
    }
    if !(rate > T::zero()) || !rate.is_finite() {
        return Err(Error::Numeric(format!("inverse-gamma rate {rate} is not positive")));
    }
    let gamma = Gamma::new(shape.f64(), 1.0 / rate.f64())
        .map_err(|e| Error::Numeric(format!("gamma distribution: {e}")))?;
    Ok(T::of(1.0 / gamma.sample(rng)))
}

/// Draw of σ²_j from its prior shared across groups:
/// IG(Σ_k a_j⁽ᵏ⁾/2, Σ_k g_k/2). The response variance is fixed at 1.
pub fn sample_sigma_prior<T: Scalar, R: Rng + ?Sized>(
    dags: &[&Dag],
    j: usize,
    hyper: &Hyperparams<T>,
    rng: &mut R,
) -> Result<T> {
    if j == RESPONSE {
        return Ok(T::one());
    }
    if dags.len() != hyper.g.len() {
        return Err(Error::Validation(format!(
            "{} graphs for {} groups",
            dags.len(),
            hyper.g.len()
        )));
    }
    let half = T::of(0.5);
    let mut shape = T::zero();
    let mut rate = T::zero();
    for (dag, &g) in dags.iter().zip(&hyper.g) {
        let aj = node_shape(hyper.a, dag.parents(j)?.len(), dag.q());
        if !(aj > T::zero()) {
            return Err(Error::Hyperparameter(format!(
                "shape a_j = {aj} is not positive for node {}",
                j + 1
            )));
        }
        shape = shape + half * aj;
        rate = rate + half * g;
    }
    sample_inverse_gamma(shape, rate, rng)
}

/// Independent N(0, σ²_j / g) draws for the parent coefficients of `j`.
pub fn sample_l_prior<T: Scalar, R: Rng + ?Sized>(
    dag: &Dag,
    j: usize,
    sigma_sq: T,
    g: T,
    rng: &mut R,
) -> Result<Vec<T>> {
    let sd = (sigma_sq / g).sqrt().f64();
    Ok((0..dag.parents(j)?.len())
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::of(sd * z)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Matrix64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const LN_2PI: f64 = 1.837_877_066_409_345_5;

    fn column_data(cols: &[&[f64]]) -> Matrix64 {
        let n = cols[0].len();
        Matrix::from_fn(n, cols.len(), |i, j| cols[j][i])
    }

    /// Composite Simpson rule on [lo, hi] with `m` (even) panels.
    fn simpson(lo: f64, hi: f64, m: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (hi - lo) / m as f64;
        let mut s = f(lo) + f(hi);
        for k in 1..m {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + k as f64 * h);
        }
        s * h / 3.0
    }

    fn ln_normal_pdf(x: f64, var: f64) -> f64 {
        -0.5 * (LN_2PI + var.ln()) - 0.5 * x * x / var
    }

    fn ln_inv_gamma_pdf(s: f64, shape: f64, rate: f64) -> f64 {
        shape * rate.ln() - statrs::function::gamma::ln_gamma(shape) - (shape + 1.0) * s.ln() - rate / s
    }

    /// ∫ f(X_j | σ², b) f(b | σ²) f(σ²) with σ² = e^u, evaluated by brute force.
    /// `xp` is the (optional) single parent column.
    fn quadrature_marginal(xj: &[f64], xp: Option<&[f64]>, g: f64, aj: Option<f64>) -> f64 {
        let lik = |s2: f64, b: f64| -> f64 {
            xj.iter()
                .enumerate()
                .map(|(i, &v)| {
                    let m = xp.map_or(0.0, |p| -b * p[i]);
                    ln_normal_pdf(v - m, s2)
                })
                .sum::<f64>()
        };
        let inner = |s2: f64| -> f64 {
            match xp {
                None => lik(s2, 0.0).exp(),
                Some(p) => {
                    // centre the grid on the ridge estimate with a width that covers both
                    // prior and likelihood scales
                    let pp: f64 = p.iter().map(|v| v * v).sum();
                    let pj: f64 = p.iter().zip(xj).map(|(a, b)| a * b).sum();
                    let c = -pj / (pp + g);
                    let w = 14.0 * (s2 / (pp + g)).sqrt();
                    simpson(c - w, c + w, 4000, |b| (lik(s2, b) + ln_normal_pdf(b, s2 / g)).exp())
                }
            }
        };
        match aj {
            None => inner(1.0),
            Some(aj) => simpson(-40.0, 40.0, 8000, |u| {
                let s2 = u.exp();
                inner(s2) * (ln_inv_gamma_pdf(s2, aj / 2.0, g / 2.0) + u).exp()
            }),
        }
    }

    #[test]
    fn node_stats_examples() {
        let dag = Dag::from_edges(3, &[(2, 1)]).unwrap();
        let x = column_data(&[&[0.0, 0.0], &[1.0, 2.0], &[0.0, 0.0]]);
        let empty = node_stats(&x, &dag, 2, 1.0).unwrap();
        assert_eq!(empty.parent_count(), 0);
        assert_eq!(empty.t_bar.rows(), 0);

        // X_pa′X_pa = 4, X_pa′X_j = 2
        let x = column_data(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 0.0]]);
        let s = node_stats(&x, &dag, 1, 1.0).unwrap();
        assert_eq!(s.t, Matrix::from_rows(&[vec![1.0]]));
        assert_eq!(s.t_bar, Matrix::from_rows(&[vec![5.0]]));
        assert!((s.l_hat[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn l_hat_solves_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dag = Dag::from_edges(5, &[(4, 1), (3, 1), (2, 1), (4, 0)]).unwrap();
        let x: Matrix64 = Matrix::from_fn(30, 5, |_, _| rng.random_range(-2.0..2.0));
        let s = node_stats(&x, &dag, 1, 0.3).unwrap();
        let pa = dag.parents(1).unwrap();
        let xp = x.select(&(0..30).collect::<Vec<_>>(), &pa);
        let rhs = xp.transpose().mul_vec(&x.column(1));
        let lhs = s.t_bar.mul_vec(&s.l_hat);
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn response_marginal_at_origin() {
        let dag = Dag::empty(2);
        let x = Matrix64::zeros(2, 2);
        let v = log_marginal_node(&x, &dag, 0, 1.0, 2.0).unwrap();
        assert!((v + LN_2PI).abs() < 1e-14);
    }

    #[test]
    fn parent_free_marginal_matches_quadrature() {
        // n = 2, X_j = 0, g = 1, a_j = 1 (a = q)
        let dag = Dag::empty(3);
        let x = Matrix64::zeros(2, 3);
        let v = log_marginal_node(&x, &dag, 2, 1.0, 3.0).unwrap();
        let quad = quadrature_marginal(&[0.0, 0.0], None, 1.0, Some(1.0));
        assert!(((v - quad.ln()).exp() - 1.0).abs() < 1e-6, "{v} vs {}", quad.ln());
    }

    #[test]
    fn one_parent_marginal_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..6 {
            let n = 1 + trial % 3;
            let g = [1.0, 0.5, 2.0][trial % 3];
            let q = 4;
            let a = 4.5;
            let xj: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
            let xp: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
            let x = Matrix::from_fn(n, q, |i, c| match c {
                1 => xj[i],
                3 => xp[i],
                _ => 0.0,
            });
            let dag = Dag::from_edges(q, &[(3, 1)]).unwrap();
            let aj = node_shape(a, 1, q);
            let v = log_marginal_node(&x, &dag, 1, g, a).unwrap();
            let quad = quadrature_marginal(&xj, Some(&xp), g, Some(aj));
            let rel = ((v - quad.ln()).exp() - 1.0).abs();
            assert!(rel <= 1e-5, "trial {trial}: rel err {rel}");

            // response node: unit variance, no σ² integral
            let x0 = Matrix::from_fn(n, q, |i, c| match c {
                0 => xj[i],
                3 => xp[i],
                _ => 0.0,
            });
            let dag0 = Dag::from_edges(q, &[(3, 0)]).unwrap();
            let v0 = log_marginal_node(&x0, &dag0, 0, g, a).unwrap();
            let quad0 = quadrature_marginal(&xj, Some(&xp), g, None);
            let rel0 = ((v0 - quad0.ln()).exp() - 1.0).abs();
            assert!(rel0 <= 1e-5, "trial {trial}: response rel err {rel0}");
        }
    }

    #[test]
    fn nonpositive_shape_is_rejected() {
        let dag = Dag::empty(4);
        let x = Matrix64::zeros(3, 4);
        assert!(matches!(
            log_marginal_node(&x, &dag, 2, 1.0, 3.0),
            Err(Error::Hyperparameter(_))
        ));
    }

    #[test]
    fn marginal_is_row_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dag = Dag::from_edges(4, &[(3, 1), (2, 1), (3, 0)]).unwrap();
        let x: Matrix64 = Matrix::from_fn(25, 4, |_, _| rng.random_range(-2.0..2.0));
        let rev = Matrix::from_fn(25, 4, |i, j| x[(24 - i, j)]);
        for j in 0..4 {
            let a = log_marginal_node(&x, &dag, j, 0.04, 4.0).unwrap();
            let b = log_marginal_node(&rev, &dag, j, 0.04, 4.0).unwrap();
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn large_g_approaches_parent_free_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x: Matrix64 = Matrix::from_fn(40, 3, |_, _| rng.random_range(-2.0..2.0));
        let with = Dag::from_edges(3, &[(2, 1)]).unwrap();
        let without = Dag::empty(3);
        let mut prev_shrink = f64::INFINITY;
        for &g in &[1e2, 1e4, 1e6, 1e8] {
            let s = node_stats(&x, &with, 1, g).unwrap();
            assert!(s.l_hat[0].abs() < prev_shrink);
            prev_shrink = s.l_hat[0].abs();
        }
        assert!(prev_shrink < 1e-6);
        // bases chosen so both nodes get a_j = 2
        let g = 1e10;
        let a1 = log_marginal_node(&x, &with, 1, g, 3.0).unwrap();
        let a0 = log_marginal_node(&x, &without, 1, g, 4.0).unwrap();
        assert!((a1 - a0).abs() < 1e-6 * a0.abs().max(1.0), "{a1} vs {a0}");
    }

    #[test]
    fn gram_refresh_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x_obs: Matrix64 = Matrix::from_fn(12, 3, |_, _| rng.random_range(-1.0..1.0));
        let y: Vec<bool> = (0..12).map(|i| i % 2 == 0).collect();
        let mut data = GroupData::new(y, &x_obs).unwrap();
        let mut gram = Gram::new(&data);
        let latent: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        data.set_latent(&latent);
        gram.refresh_latent(&data);
        assert!(gram.matrix().max_abs_diff(&data.x().gram()) < 1e-13);
    }

    #[test]
    fn group_data_rejects_mismatched_rows() {
        let x = Matrix64::zeros(3, 2);
        assert!(matches!(GroupData::new(vec![true; 2], &x), Err(Error::Ingestion(_))));
    }

    #[test]
    fn sigma_prior_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = Dag::empty(4);
        let h = Hyperparams::<f64>::defaults(4, &[10, 10]);
        assert_eq!(sample_sigma_prior(&[&d, &d], 0, &h, &mut rng).unwrap(), 1.0);

        // a = 8, q = 4, no parents: a_j = 5 per group → shape 5, rate (g1+g2)/2 = 1.5
        let mut h = h;
        h.a = 8.0;
        h.g = vec![1.0, 2.0];
        let draws = 100_000;
        let xs: Vec<f64> = (0..draws)
            .map(|_| sample_sigma_prior(&[&d, &d], 2, &h, &mut rng).unwrap())
            .collect();
        let (shape, rate) = (5.0, 1.5);
        let mean = xs.iter().sum::<f64>() / draws as f64;
        let var = rate * rate / ((shape - 1.0) * (shape - 1.0) * (shape - 2.0));
        let se = (var / draws as f64).sqrt();
        assert!((mean - rate / (shape - 1.0)).abs() < 3.0 * se, "{mean}");

        let mut r1 = ChaCha8Rng::seed_from_u64(77);
        let mut r2 = ChaCha8Rng::seed_from_u64(77);
        assert_eq!(
            sample_sigma_prior(&[&d, &d], 1, &h, &mut r1).unwrap(),
            sample_sigma_prior(&[&d, &d], 1, &h, &mut r2).unwrap()
        );
    }

    #[test]
    fn identical_groups_double_the_shape() {
        let dag = Dag::from_edges(5, &[(4, 2), (3, 2)]).unwrap();
        let a = 5.0;
        let single = node_shape(a, dag.parents(2).unwrap().len(), 5) / 2.0;
        let doubled: f64 = [&dag, &dag]
            .iter()
            .map(|d| node_shape(a, d.parents(2).unwrap().len(), 5) / 2.0)
            .sum();
        assert_eq!(doubled, 2.0 * single);
    }

    #[test]
    fn inverse_gamma_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (shape, rate) = (6.0, 3.0);
        let draws = 100_000;
        let xs: Vec<f64> = (0..draws)
            .map(|_| sample_inverse_gamma(shape, rate, &mut rng).unwrap())
            .collect();
        let mean = xs.iter().sum::<f64>() / draws as f64;
        let truth = rate / (shape - 1.0);
        let sd = truth / (shape - 2.0).sqrt();
        assert!((mean - truth).abs() < 3.0 * sd / (draws as f64).sqrt());
        assert!(matches!(
            sample_inverse_gamma(0.0, 1.0, &mut rng),
            Err(Error::Hyperparameter(_))
        ));
    }

    #[test]
    fn l_prior_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = Dag::from_edges(3, &[(2, 1)]).unwrap();
        assert!(sample_l_prior(&d, 2, 1.0, 1.0, &mut rng).unwrap().is_empty());
        let draws = 100_000;
        let (s2, g) = (2.0, 0.5);
        let xs: Vec<f64> = (0..draws)
            .map(|_| sample_l_prior(&d, 1, s2, g, &mut rng).unwrap()[0])
            .collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / draws as f64;
        let truth = s2 / g;
        // Var of the sample second moment of N(0, v) is 2v²/N
        assert!((var - truth).abs() < 3.0 * truth * (2.0 / draws as f64).sqrt());
    }

    #[test]
    fn coefficient_draws_have_posterior_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let dag = Dag::from_edges(3, &[(2, 0), (1, 0)]).unwrap();
        let x: Matrix64 = Matrix::from_fn(6, 3, |_, _| rng.random_range(-1.0..1.0));
        let s = node_stats(&x, &dag, 0, 1.0).unwrap();
        let sigma_sq = 1.7;
        let draws = 100_000;
        let mut sum = [0.0; 2];
        let mut cross = [[0.0; 2]; 2];
        for _ in 0..draws {
            let b = s.sample_coefficients(sigma_sq, &mut rng);
            for u in 0..2 {
                sum[u] += b[u];
                for v in 0..2 {
                    cross[u][v] += b[u] * b[v];
                }
            }
        }
        let cov = s.t_bar.inverse_spd().unwrap().map(|v| v * sigma_sq);
        let nf = draws as f64;
        for u in 0..2 {
            let mean = sum[u] / nf;
            assert!((mean + s.l_hat[u]).abs() < 3.0 * (cov[(u, u)] / nf).sqrt());
            for v in 0..2 {
                let emp = cross[u][v] / nf - (sum[u] / nf) * (sum[v] / nf);
                let se = ((cov[(u, u)] * cov[(v, v)] + cov[(u, v)] * cov[(u, v)]) / nf).sqrt();
                assert!((emp - cov[(u, v)]).abs() < 3.0 * se, "{u}{v}: {emp} vs {}", cov[(u, v)]);
            }
        }
    }

    #[test]
    fn hyperparameter_validation() {
        let mut h = Hyperparams::<f64>::defaults(5, &[100, 50]);
        assert!(h.validate(5, 2).is_ok());
        assert_eq!(h.g, vec![0.01, 0.02]);
        h.a = 4.0;
        assert!(h.validate(5, 2).is_err());
        h.a = 5.0;
        h.burn_in = h.iterations;
        assert!(h.validate(5, 2).is_err());
        h.burn_in = 0;
        h.targets = Some(vec![0]);
        assert!(h.validate(5, 2).is_err());
        h.targets = None;
        assert!(h.validate(5, 3).is_err());
    }
}
