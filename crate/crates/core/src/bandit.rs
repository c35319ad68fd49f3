//! Linear bandit instance and environment dynamics.
//!
//! An instance is the tuple (actions, prior mean, prior covariance, noise
//! variance): K action feature vectors in R^d, a Gaussian prior over the
//! coefficient vector, and i.i.d. Gaussian observation noise.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Validated linear bandit instance with a cached prior Cholesky factor.
#[derive(Debug, Clone)]
pub struct LinearBanditInstance {
    actions: DMatrix<f64>,
    prior_mean: DVector<f64>,
    prior_cov: DMatrix<f64>,
    noise_var: f64,
    prior_chol: DMatrix<f64>,
}

/// One realized episode: drawn coefficient vector, executed steps, and the
/// realized optimal action (with its tie set).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub theta: DVector<f64>,
    pub steps: Vec<(usize, f64)>,
    pub opt_action_index: usize,
    pub opt_ties: Vec<usize>,
}

impl Trajectory {
    /// Draws the environment coefficient and resolves the optimal action.
    pub fn new(instance: &LinearBanditInstance, rng: &mut impl Rng) -> Self {
        let theta = instance.sample_coefficient(rng);
        let opt_ties = instance.argmax_set(&theta);
        let opt_action_index = if opt_ties.len() == 1 {
            opt_ties[0]
        } else {
            opt_ties[rng.random_range(0..opt_ties.len())]
        };
        Trajectory {
            theta,
            steps: Vec::new(),
            opt_action_index,
            opt_ties,
        }
    }

    pub fn record(&mut self, action: usize, reward: f64) {
        self.steps.push((action, reward));
    }
}

impl LinearBanditInstance {
    /// Validates and constructs an instance; the prior factorization is cached.
    ///
    /// `actions` is K-by-d with rows as action feature vectors.
    pub fn new(
        actions: DMatrix<f64>,
        prior_mean: DVector<f64>,
        prior_cov: DMatrix<f64>,
        noise_var: f64,
    ) -> Result<Self> {
        let k = actions.nrows();
        let d = actions.ncols();
        if k == 0 || d == 0 {
            return Err(Error::EmptyActionSet);
        }
        if actions.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("actions"));
        }
        if prior_mean.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "prior_mean has length {}, expected {}",
                prior_mean.len(),
                d
            )));
        }
        if prior_mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("prior_mean"));
        }
        if prior_cov.nrows() != d || prior_cov.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "prior_cov is {}x{}, expected {}x{}",
                prior_cov.nrows(),
                prior_cov.ncols(),
                d,
                d
            )));
        }
        if prior_cov.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("prior_cov"));
        }
        if !noise_var.is_finite() {
            return Err(Error::NonFinite("noise_var"));
        }
        if noise_var <= 0.0 {
            return Err(Error::NonpositiveNoise(noise_var));
        }

        let scale = prior_cov.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut asym = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                asym = asym.max((prior_cov[(i, j)] - prior_cov[(j, i)]).abs());
            }
        }
        if asym > 1e-12 * scale.max(1e-300) {
            return Err(Error::PriorNotSymmetric(asym));
        }

        // Duplicate rows are rejected bit-exactly.
        for i in 0..k {
            for j in (i + 1)..k {
                let same = (0..d).all(|c| actions[(i, c)].to_bits() == actions[(j, c)].to_bits());
                if same {
                    return Err(Error::DuplicateAction(i, j));
                }
            }
        }

        let sym = (prior_cov.clone() + prior_cov.transpose()) * 0.5;
        let chol = nalgebra::Cholesky::new(sym).ok_or(Error::PriorNotPositiveDefinite)?;
        let l = chol.l();
        let max_diag = (0..d).fold(0.0f64, |m, i| m.max(prior_cov[(i, i)]));
        let min_pivot = (0..d).fold(f64::INFINITY, |m, i| m.min(l[(i, i)] * l[(i, i)]));
        if !(min_pivot > 1e-10 * max_diag) {
            return Err(Error::PriorNotPositiveDefinite);
        }

        Ok(LinearBanditInstance {
            actions,
            prior_mean,
            prior_cov,
            noise_var,
            prior_chol: l,
        })
    }

    pub fn num_actions(&self) -> usize {
        self.actions.nrows()
    }

    pub fn dim(&self) -> usize {
        self.actions.ncols()
    }

    pub fn actions(&self) -> &DMatrix<f64> {
        &self.actions
    }

    /// Feature vector of action `index` as a column vector.
    pub fn action(&self, index: usize) -> DVector<f64> {
        self.actions.row(index).transpose()
    }

    pub fn prior_mean(&self) -> &DVector<f64> {
        &self.prior_mean
    }

    pub fn prior_cov(&self) -> &DMatrix<f64> {
        &self.prior_cov
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Lower-triangular factor of the prior covariance.
    pub fn prior_chol(&self) -> &DMatrix<f64> {
        &self.prior_chol
    }

    /// Draws a coefficient vector from the prior N(mu_0, Sigma_0).
    pub fn sample_coefficient(&self, rng: &mut impl Rng) -> DVector<f64> {
        let z = standard_normal_vector(self.dim(), rng);
        &self.prior_mean + &self.prior_chol * z
    }

    /// Mean rewards a' theta for every action.
    pub fn mean_rewards(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.actions * theta
    }

    /// Indices attaining the exact float maximum of a' theta.
    pub fn argmax_set(&self, theta: &DVector<f64>) -> Vec<usize> {
        let scores = self.mean_rewards(theta);
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        scores
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == best)
            .map(|(i, _)| i)
            .collect()
    }

    /// A maximizer of a' theta, uniform among exact ties.
    pub fn best_action(&self, theta: &DVector<f64>, rng: &mut impl Rng) -> usize {
        let ties = self.argmax_set(theta);
        if ties.len() == 1 {
            ties[0]
        } else {
            ties[rng.random_range(0..ties.len())]
        }
    }

    /// Observed reward a' theta + w, w ~ N(0, sigma^2). Only the executed
    /// coordinate of the noise vector is ever sampled.
    pub fn draw_reward(&self, theta: &DVector<f64>, action_index: usize, rng: &mut impl Rng) -> Result<f64> {
        if action_index >= self.num_actions() {
            return Err(Error::ActionOutOfRange {
                index: action_index,
                count: self.num_actions(),
            });
        }
        let mean = self.action(action_index).dot(theta);
        let w: f64 = rng.sample(StandardNormal);
        Ok(mean + self.noise_var.sqrt() * w)
    }

    /// Per-step mean-reward gap (a_opt - a_chosen)' theta.
    ///
    /// A gap below -1e-9 signals that `opt_index` was not a maximizer; tiny
    /// negative round-off is clamped to zero.
    pub fn regret_gap(&self, theta: &DVector<f64>, opt_index: usize, chosen_index: usize) -> Result<f64> {
        if opt_index >= self.num_actions() {
            return Err(Error::ActionOutOfRange {
                index: opt_index,
                count: self.num_actions(),
            });
        }
        if chosen_index >= self.num_actions() {
            return Err(Error::ActionOutOfRange {
                index: chosen_index,
                count: self.num_actions(),
            });
        }
        let gap = (self.action(opt_index) - self.action(chosen_index)).dot(theta);
        if gap < -1e-9 {
            return Err(Error::NegativeGap(gap));
        }
        Ok(gap.max(0.0))
    }

    /// max_a a' Sigma_0 a, used by the bound constants.
    pub fn max_prior_quadratic(&self) -> f64 {
        (0..self.num_actions())
            .map(|i| {
                let a = self.action(i);
                a.dot(&(&self.prior_cov * &a))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// max_a (a' mu_0)^2.
    pub fn max_prior_mean_sq(&self) -> f64 {
        (0..self.num_actions())
            .map(|i| {
                let v = self.action(i).dot(&self.prior_mean);
                v * v
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Vector of i.i.d. standard normal draws.
pub fn standard_normal_vector(d: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}
