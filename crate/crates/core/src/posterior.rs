//! Exact conjugate Gaussian posterior maintenance.
//!
//! The fast path is the rank-1 update; the direct-inversion transcription is
//! kept as a test oracle.

use nalgebra::{DMatrix, DVector};
use once_cell::sync::OnceCell;
use rand::Rng;

use crate::bandit::{standard_normal_vector, LinearBanditInstance};
use crate::error::{Error, Result};

/// Gaussian posterior (mu_t, Sigma_t) with a lazily cached Cholesky factor.
#[derive(Debug, Clone)]
pub struct GaussianBelief {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: OnceCell<DMatrix<f64>>,
    t: usize,
}

impl GaussianBelief {
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Lower-triangular factor of the covariance, computed on first use.
    pub fn chol(&self) -> Result<&DMatrix<f64>> {
        self.chol.get_or_try_init(|| {
            nalgebra::Cholesky::new(self.cov.clone())
                .map(|c| c.l())
                .ok_or(Error::FactorizationFailed)
        })
    }

    /// Belief at t = 0: the prior.
    pub fn prior(instance: &LinearBanditInstance) -> Self {
        let chol = OnceCell::new();
        let _ = chol.set(instance.prior_chol().clone());
        GaussianBelief {
            mean: instance.prior_mean().clone(),
            cov: instance.prior_cov().clone(),
            chol,
            t: 0,
        }
    }

    /// Conjugate update via the rank-1 identity:
    /// Sigma' = Sigma - (Sigma a a' Sigma)/(sigma^2 + a'Sigma a),
    /// mu' = mu + Sigma a (r - a'mu)/(sigma^2 + a'Sigma a).
    pub fn update(&self, action: &DVector<f64>, reward: f64, noise_var: f64) -> Result<GaussianBelief> {
        let sa = &self.cov * action;
        let denom = noise_var + action.dot(&sa);
        if !(denom > 0.0) {
            return Err(Error::DegenerateUpdate(denom));
        }
        let cov = &self.cov - (&sa * sa.transpose()) / denom;
        let cov = (&cov + cov.transpose()) * 0.5;
        let mean = &self.mean + &sa * ((reward - action.dot(&self.mean)) / denom);
        Ok(GaussianBelief {
            mean,
            cov,
            chol: OnceCell::new(),
            t: self.t + 1,
        })
    }

    /// Literal transcription of the conjugate update with explicit inversion.
    /// Oracle only; O(d^3) per step.
    pub fn update_direct(&self, action: &DVector<f64>, reward: f64, noise_var: f64) -> Result<GaussianBelief> {
        let prec = self.cov.clone().try_inverse().ok_or(Error::NotInvertible)?;
        let prec_next = &prec + (action * action.transpose()) / noise_var;
        let cov = prec_next.try_inverse().ok_or(Error::NotInvertible)?;
        let cov = (&cov + cov.transpose()) * 0.5;
        let mean = &cov * (&prec * &self.mean + action * (reward / noise_var));
        Ok(GaussianBelief {
            mean,
            cov,
            chol: OnceCell::new(),
            t: self.t + 1,
        })
    }

    /// Draws `n` samples mu + L z from N(mu_t, Sigma_t).
    pub fn sample(&self, rng: &mut impl Rng, n: usize) -> Result<Vec<DVector<f64>>> {
        let l = self.chol()?;
        let d = self.mean.len();
        Ok((0..n)
            .map(|_| &self.mean + l * standard_normal_vector(d, rng))
            .collect())
    }
}
