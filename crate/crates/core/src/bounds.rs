//! Bound constants and bound formulas, mismatch estimation between the
//! ensemble's action distribution and the optimal-action posterior, and the
//! per-step regret decomposition.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::agents::Ensemble;
use crate::bandit::LinearBanditInstance;
use crate::error::{Error, Result};
use crate::infometrics::{entropy_of_slice, hellinger, kl_divergence, DiscreteDistribution};
use crate::posterior::GaussianBelief;

/// Parameters of the Sanov-type tail (K, M, t, epsilon).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SanovParams {
    pub k: usize,
    pub m: usize,
    pub t: usize,
    pub epsilon: f64,
}

/// Evaluated bound constants and bound values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub iota: f64,
    pub kappa: f64,
    pub eta_hat: f64,
    pub eta_se: f64,
    pub entropy_opt_hat: f64,
    pub entropy_se: f64,
    pub theorem1_value: f64,
    pub lemma5_per_step: Vec<f64>,
    pub sanov_params: SanovParams,
}

/// Per-step divergence measurement between the ensemble's induced action
/// distribution and a Monte Carlo estimate of the optimal-action posterior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MismatchSample {
    pub t: usize,
    pub hat_p: DiscreteDistribution,
    pub p_hat: DiscreteDistribution,
    pub kl: f64,
    pub hellinger: f64,
    pub n_posterior_samples: usize,
}

/// iota = sqrt(2 (max_a a'Sigma_0 a + sigma^2)).
pub fn compute_iota(instance: &LinearBanditInstance) -> f64 {
    (2.0 * (instance.max_prior_quadratic() + instance.noise_var())).sqrt()
}

/// kappa = 2 sqrt((4 ln K + 5) max_a a'Sigma_0 a + max_a (a'mu_0)^2 + sigma^2).
pub fn compute_kappa(instance: &LinearBanditInstance) -> f64 {
    let k = instance.num_actions() as f64;
    2.0 * ((4.0 * k.ln() + 5.0) * instance.max_prior_quadratic()
        + instance.max_prior_mean_sq()
        + instance.noise_var())
    .sqrt()
}

/// eta = 2 sqrt(E[max_a (a'theta)^2] + sigma^2), Monte Carlo over prior draws,
/// with a delta-method standard error.
pub fn estimate_eta(
    instance: &LinearBanditInstance,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<(f64, f64)> {
    if n_samples < 1000 {
        return Err(Error::InvalidArgument("estimate_eta needs n_samples >= 1000".into()));
    }
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..n_samples {
        let theta = instance.sample_coefficient(rng);
        let rewards = instance.mean_rewards(&theta);
        let max_sq = rewards.iter().map(|r| r * r).fold(f64::NEG_INFINITY, f64::max);
        sum += max_sq;
        sumsq += max_sq * max_sq;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0);
    let se_mean = (var / n).sqrt();
    let eta = 2.0 * (mean + instance.noise_var()).sqrt();
    let se_eta = se_mean / (mean + instance.noise_var()).sqrt();
    Ok((eta, se_eta))
}

/// Plug-in entropy of the optimal action under the prior, with Miller-Madow
/// bias correction and a multinomial-bootstrap standard error.
pub fn estimate_opt_entropy(
    instance: &LinearBanditInstance,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<(f64, f64)> {
    if n_samples < 1000 {
        return Err(Error::InvalidArgument("estimate_opt_entropy needs n_samples >= 1000".into()));
    }
    let k = instance.num_actions();
    let mut counts = vec![0usize; k];
    for _ in 0..n_samples {
        let theta = instance.sample_coefficient(rng);
        counts[instance.best_action(&theta, rng)] += 1;
    }
    let n = n_samples as f64;
    let estimate_from = |counts: &[usize]| {
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
        let observed = counts.iter().filter(|&&c| c > 0).count();
        entropy_of_slice(&probs) + (observed.saturating_sub(1)) as f64 / (2.0 * n)
    };
    let point = estimate_from(&counts);

    // Multinomial bootstrap via a binomial chain over the fitted cell probabilities.
    let b = 100;
    let mut boot = Vec::with_capacity(b);
    for _ in 0..b {
        let mut remaining = n_samples as u64;
        let mut mass_left = 1.0f64;
        let mut resampled = vec![0usize; k];
        for (i, &c) in counts.iter().enumerate() {
            if remaining == 0 || mass_left <= 0.0 {
                break;
            }
            let p = (c as f64 / n / mass_left).clamp(0.0, 1.0);
            let draw = if i + 1 == k {
                remaining
            } else {
                Binomial::new(remaining, p)
                    .map_err(|e| Error::InvalidArgument(format!("binomial: {e}")))?
                    .sample(rng)
            };
            resampled[i] = draw as usize;
            remaining -= draw;
            mass_left -= c as f64 / n;
        }
        boot.push(estimate_from(&resampled));
    }
    let bm = boot.iter().sum::<f64>() / b as f64;
    let bv = boot.iter().map(|x| (x - bm) * (x - bm)).sum::<f64>() / (b as f64 - 1.0);
    Ok((point, bv.sqrt()))
}

/// Ensemble-sampling regret bound:
/// iota sqrt(d T H(A*)) + kappa T sqrt(K ln(6 T M) / M).
pub fn theorem1_bound(instance: &LinearBanditInstance, t_horizon: usize, m: usize, entropy_opt: f64) -> f64 {
    if t_horizon == 0 {
        return 0.0;
    }
    let d = instance.dim() as f64;
    let k = instance.num_actions() as f64;
    let t = t_horizon as f64;
    let iota = compute_iota(instance);
    let kappa = compute_kappa(instance);
    iota * (d * t * entropy_opt).sqrt() + kappa * t * (k * (6.0 * t * m as f64).ln() / m as f64).sqrt()
}

/// General algorithm-agnostic bound: the first term plus eta times the sum of
/// the supplied per-step values sqrt(E[d_H^2(p_bar_t || p_t)]).
pub fn theorem2_bound(
    instance: &LinearBanditInstance,
    t_horizon: usize,
    entropy_opt: f64,
    per_step_sqrt_mean_sq_hellinger: &[f64],
    eta: f64,
) -> Result<f64> {
    if per_step_sqrt_mean_sq_hellinger.len() != t_horizon {
        return Err(Error::DimensionMismatch(format!(
            "{} per-step mismatch values for horizon {}",
            per_step_sqrt_mean_sq_hellinger.len(),
            t_horizon
        )));
    }
    let d = instance.dim() as f64;
    let iota = compute_iota(instance);
    let first = if t_horizon == 0 {
        0.0
    } else {
        iota * (d * t_horizon as f64 * entropy_opt).sqrt()
    };
    Ok(first + eta * per_step_sqrt_mean_sq_hellinger.iter().sum::<f64>())
}

/// Per-step KL bound under ensemble sampling: K ln(6 (t+1) M) / M.
pub fn lemma5_bound(k: usize, t: usize, m: usize) -> f64 {
    k as f64 * (6.0 * (t as f64 + 1.0) * m as f64).ln() / m as f64
}

/// Sanov/union-bound tail: (t+1)^K (M+1)^K exp(-M epsilon).
pub fn sanov_tail(k: usize, m: usize, t: usize, epsilon: f64) -> f64 {
    ((t as f64 + 1.0).powi(k as i32)) * ((m as f64 + 1.0).powi(k as i32)) * (-(m as f64) * epsilon).exp()
}

/// Sub-Gaussian max-of-squares bound: (4 ln K + 5) max sigma^2 + max mu^2.
pub fn subgaussian_maxsq_bound(k: usize, max_var_proxy: f64, max_sq_mean: f64) -> f64 {
    (4.0 * (k as f64).ln() + 5.0) * max_var_proxy + max_sq_mean
}

/// The ensemble's induced action distribution:
/// h(a) = (1/M) sum_m |argmax set of model m|^{-1} 1{a in argmax set}.
pub fn ensemble_action_dist(ensemble: &Ensemble, instance: &LinearBanditInstance) -> DiscreteDistribution {
    let k = instance.num_actions();
    let m = ensemble.model_count();
    let mut mass = vec![0.0f64; k];
    for row in 0..m {
        let ties = instance.argmax_set(&ensemble.model(row));
        let w = 1.0 / (m as f64 * ties.len() as f64);
        for a in ties {
            mass[a] += w;
        }
    }
    DiscreteDistribution::new(mass).expect("normalized by construction")
}

/// Monte Carlo estimate of the optimal-action posterior p_t, optionally smoothed.
pub fn estimate_opt_action_posterior(
    belief: &GaussianBelief,
    instance: &LinearBanditInstance,
    n_samples: usize,
    rng: &mut impl Rng,
    smoothing_alpha: f64,
) -> Result<DiscreteDistribution> {
    if n_samples < 1000 {
        return Err(Error::InvalidArgument(
            "estimate_opt_action_posterior needs n_samples >= 1000".into(),
        ));
    }
    if smoothing_alpha < 0.0 {
        return Err(Error::InvalidArgument("smoothing_alpha must be >= 0".into()));
    }
    let mut counts = vec![0usize; instance.num_actions()];
    for theta in belief.sample(rng, n_samples)? {
        counts[instance.best_action(&theta, rng)] += 1;
    }
    DiscreteDistribution::from_counts(&counts, smoothing_alpha)
}

/// Measures d_KL(h_t || p_hat_t) and d_H(h_t || p_hat_t) for one ensemble state.
pub fn measure_mismatch(
    ensemble: &Ensemble,
    belief: &GaussianBelief,
    instance: &LinearBanditInstance,
    n_samples: usize,
    rng: &mut impl Rng,
    smoothing_alpha: f64,
) -> Result<MismatchSample> {
    let hat_p = ensemble_action_dist(ensemble, instance);
    let p_hat = estimate_opt_action_posterior(belief, instance, n_samples, rng, smoothing_alpha)?;
    let kl = kl_divergence(&hat_p, &p_hat)?;
    let hell = hellinger(&hat_p, &p_hat)?;
    Ok(MismatchSample {
        t: ensemble.t(),
        hat_p,
        p_hat,
        kl,
        hellinger: hell,
        n_posterior_samples: n_samples,
    })
}

/// Conditional and marginal per-action reward means from one shared batch of
/// posterior draws, plus the empirical optimal-action distribution of that batch.
#[derive(Debug, Clone)]
pub struct ConditionalRewardMeans {
    /// E_t[R_{t+1,a} | A_* = a] per action; `None` when the batch has no draw
    /// whose maximizer is a.
    pub cond_means: Vec<Option<f64>>,
    /// a' mu_t per action (exact).
    pub marginal_means: Vec<f64>,
    /// Empirical optimal-action frequencies of the shared batch (unsmoothed).
    pub p_hat: DiscreteDistribution,
}

pub fn conditional_reward_means(
    belief: &GaussianBelief,
    instance: &LinearBanditInstance,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<ConditionalRewardMeans> {
    if n_samples < 10_000 {
        return Err(Error::InvalidArgument(
            "conditional_reward_means needs n_samples >= 10^4".into(),
        ));
    }
    let k = instance.num_actions();
    let mut counts = vec![0usize; k];
    let mut sums = vec![0.0f64; k];
    for theta in belief.sample(rng, n_samples)? {
        let a = instance.best_action(&theta, rng);
        counts[a] += 1;
        sums[a] += instance.action(a).dot(&theta);
    }
    let cond_means = counts
        .iter()
        .zip(&sums)
        .map(|(&c, &s)| if c > 0 { Some(s / c as f64) } else { None })
        .collect();
    let marginal_means: Vec<f64> = (0..k).map(|a| instance.action(a).dot(belief.mean())).collect();
    Ok(ConditionalRewardMeans {
        cond_means,
        marginal_means,
        p_hat: DiscreteDistribution::from_counts(&counts, 0.0)?,
    })
}

/// Per-step regret decomposition into the main term G and the approximation
/// error term D, with `q` in the role of the algorithm's action distribution:
///
/// G = sum_a sqrt(q(a) p(a)) (cond_a - marg_a)
/// D = sum_a (sqrt p(a) - sqrt q(a)) (sqrt p(a) cond_a + sqrt q(a) marg_a)
///
/// The identity G + D = sum_a p(a) cond_a - sum_a q(a) marg_a is checked to
/// 1e-10 before returning.
pub fn decompose_regret(
    q: &DiscreteDistribution,
    p: &DiscreteDistribution,
    cond_means: &[Option<f64>],
    marginal_means: &[f64],
) -> Result<(f64, f64)> {
    let k = p.len();
    if q.len() != k || cond_means.len() != k || marginal_means.len() != k {
        return Err(Error::DimensionMismatch("decompose_regret input lengths".into()));
    }
    let mut g = 0.0;
    let mut d = 0.0;
    let mut p_weighted = 0.0;
    let mut q_weighted = 0.0;
    for a in 0..k {
        let pa = p.p(a);
        let qa = q.p(a);
        let marg = marginal_means[a];
        let cond = match cond_means[a] {
            Some(c) => c,
            None if pa > 0.0 => return Err(Error::UndefinedConditionalMean(a)),
            None => 0.0, // both sqrt(p) factors vanish
        };
        g += (qa * pa).sqrt() * (cond - marg);
        d += (pa.sqrt() - qa.sqrt()) * (pa.sqrt() * cond + qa.sqrt() * marg);
        p_weighted += pa * cond;
        q_weighted += qa * marg;
    }
    let residual = ((g + d) - (p_weighted - q_weighted)).abs();
    if residual > 1e-10 {
        return Err(Error::DecompositionIdentity(residual));
    }
    Ok((g, d))
}
