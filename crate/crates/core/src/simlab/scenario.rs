use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cholesky::CholeskyFactors;
use crate::error::{Error, Result};
use crate::graph::{random_dag, Dag, RESPONSE};
use crate::linalg::Matrix;
use crate::model::GroupData;
use crate::scalar::Scalar;

/// Generator settings. Ranges are closed-open uniform intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub q: usize,
    pub n: [usize; 2],
    pub xi: f64,
    /// Coefficient magnitudes; signs are drawn separately.
    pub coef_range: (f64, f64),
    /// Variances of the covariate nodes.
    pub d_range: (f64, f64),
    pub theta_range: (f64, f64),
}

impl ScenarioConfig {
    pub fn new(q: usize, n1: usize, n2: usize, xi: f64) -> Self {
        Self {
            q,
            n: [n1, n2],
            xi,
            coef_range: (0.3, 1.0),
            d_range: (0.5, 1.5),
            theta_range: (-0.7, 0.7),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.q < 2 {
            return Err(Error::Validation(format!("need at least 2 nodes, got {}", self.q)));
        }
        if self.n.contains(&0) {
            return Err(Error::Validation("each group needs at least one row".into()));
        }
        for (name, (lo, hi)) in [
            ("coefficient", self.coef_range),
            ("variance", self.d_range),
            ("cut-off", self.theta_range),
        ] {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Validation(format!("{name} range [{lo}, {hi}) is not ordered")));
            }
        }
        if !(self.d_range.0 > 0.0) {
            return Err(Error::Validation("variances must be positive".into()));
        }
        Ok(())
    }
}

/// Ground truth shared by both groups' generators: variances and cut-off are
/// common, graphs and coefficients are per group.
#[derive(Clone, Debug, PartialEq)]
pub struct Truth<T> {
    pub dags: Vec<Dag>,
    pub factors: Vec<CholeskyFactors<T>>,
    pub theta: T,
}

impl<T: Scalar> Truth<T> {
    pub fn q(&self) -> usize {
        self.dags[0].q()
    }

    pub fn sigma(&self, k: usize) -> Result<Matrix<T>> {
        self.factors[k].covariance()
    }

    pub fn precision(&self, k: usize) -> Matrix<T> {
        self.factors[k].precision()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T> {
    pub config: ScenarioConfig,
    pub truth: Truth<T>,
    /// Latent columns hold the generated response values.
    pub data: Vec<GroupData<T>>,
}

fn uniform<R: Rng + ?Sized>((lo, hi): (f64, f64), rng: &mut R) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

pub fn generate_scenario<T: Scalar, R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<Scenario<T>> {
    config.validate()?;
    let q = config.q;
    let dags = (0..2)
        .map(|_| random_dag(q, config.xi, rng))
        .collect::<Result<Vec<Dag>>>()?;
    let mut d = vec![1.0; q];
    for dj in d.iter_mut().skip(1) {
        *dj = uniform(config.d_range, rng);
    }
    let theta = uniform(config.theta_range, rng);
    let factors64: Vec<CholeskyFactors<f64>> = dags
        .iter()
        .map(|dag| {
            let mut f = CholeskyFactors {
                l: Matrix::identity(q),
                d: d.clone(),
            };
            for (i, j) in dag.edges() {
                let mag = uniform(config.coef_range, rng);
                f.l[(i, j)] = if rng.random::<bool>() { mag } else { -mag };
            }
            f
        })
        .collect();
    let mut data = Vec::with_capacity(2);
    for (k, f) in factors64.iter().enumerate() {
        let x = simulate_sem(f, config.n[k], rng);
        let y: Vec<bool> = (0..config.n[k]).map(|i| x[(i, RESPONSE)] >= theta).collect();
        let x_obs = Matrix::from_fn(x.rows(), q - 1, |i, j| T::of(x[(i, j + 1)]));
        let mut g = GroupData::new(y, &x_obs)?;
        g.set_latent(&x.column(RESPONSE).into_iter().map(T::of).collect::<Vec<T>>());
        data.push(g);
    }
    Ok(Scenario {
        config: config.clone(),
        truth: Truth {
            dags,
            factors: factors64.iter().map(CholeskyFactors::cast).collect(),
            theta: T::of(theta),
        },
        data,
    })
}

/// Draws `n` rows from `L′X = ε`, solving from the last node down.
/// Requires every edge to point from a higher to a lower index.
pub fn simulate_sem<R: Rng + ?Sized>(f: &CholeskyFactors<f64>, n: usize, rng: &mut R) -> Matrix<f64> {
    let q = f.q();
    let sd: Vec<f64> = f.d.iter().map(|v| v.sqrt()).collect();
    let mut x = Matrix::zeros(n, q);
    for r in 0..n {
        for j in (0..q).rev() {
            let e: f64 = StandardNormal.sample(rng);
            let mut v = sd[j] * e;
            for i in (j + 1)..q {
                let c = f.l[(i, j)];
                if c != 0.0 {
                    v -= c * x[(r, i)];
                }
            }
            x[(r, j)] = v;
        }
    }
    x
}
