//! Agents: exact Thompson sampling, ensemble sampling, and a uniform baseline.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bandit::LinearBanditInstance;
use crate::error::{Error, Result};
use crate::posterior::GaussianBelief;

/// The M perturbed model vectors maintained by ensemble sampling.
#[derive(Debug, Clone)]
pub struct Ensemble {
    models: DMatrix<f64>, // M x d, row m is model m
    t: usize,
}

impl Ensemble {
    /// Builds an ensemble from explicit model rows (M x d).
    pub fn from_models(models: DMatrix<f64>, t: usize) -> Result<Self> {
        if models.nrows() == 0 {
            return Err(Error::InvalidArgument("ensemble size M must be >= 1".into()));
        }
        if models.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteEnsemble);
        }
        Ok(Ensemble { models, t })
    }

    pub fn model_count(&self) -> usize {
        self.models.nrows()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn models(&self) -> &DMatrix<f64> {
        &self.models
    }

    pub fn model(&self, m: usize) -> DVector<f64> {
        self.models.row(m).transpose()
    }
}

/// Thompson sampling: one posterior draw, then act greedily.
pub fn ts_select(belief: &GaussianBelief, instance: &LinearBanditInstance, rng: &mut impl Rng) -> Result<usize> {
    let theta = belief.sample(rng, 1)?.pop().expect("n=1");
    Ok(instance.best_action(&theta, rng))
}

/// M independent prior draws.
pub fn es_init(instance: &LinearBanditInstance, m: usize, rng: &mut impl Rng) -> Result<Ensemble> {
    if m == 0 {
        return Err(Error::InvalidArgument("ensemble size M must be >= 1".into()));
    }
    let d = instance.dim();
    let mut models = DMatrix::zeros(m, d);
    for row in 0..m {
        let theta = instance.sample_coefficient(rng);
        models.row_mut(row).copy_from(&theta.transpose());
    }
    Ok(Ensemble { models, t: 0 })
}

/// Uniform model pick, then greedy action for that model (uniform tie break).
pub fn es_select(
    ensemble: &Ensemble,
    instance: &LinearBanditInstance,
    rng: &mut impl Rng,
) -> (usize, usize) {
    let m = rng.random_range(0..ensemble.model_count());
    let action = instance.best_action(&ensemble.model(m), rng);
    (m, action)
}

/// Perturbed ensemble update with fresh W ~ N(0, sigma^2) per model, in the
/// rank-1 form theta' = theta + Sigma_t a (r + W - a'theta)/(sigma^2 + a'Sigma_t a).
pub fn es_update(
    ensemble: &Ensemble,
    sigma_prev: &DMatrix<f64>,
    action: &DVector<f64>,
    reward: f64,
    noise_var: f64,
    rng: &mut impl Rng,
) -> Result<Ensemble> {
    let sd = noise_var.sqrt();
    let perturbations: Vec<f64> = (0..ensemble.model_count())
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    es_update_with_perturbations(ensemble, sigma_prev, action, reward, noise_var, &perturbations)
}

/// Rank-1 update with caller-supplied perturbations (one per model).
pub fn es_update_with_perturbations(
    ensemble: &Ensemble,
    sigma_prev: &DMatrix<f64>,
    action: &DVector<f64>,
    reward: f64,
    noise_var: f64,
    perturbations: &[f64],
) -> Result<Ensemble> {
    if perturbations.len() != ensemble.model_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} perturbations for {} models",
            perturbations.len(),
            ensemble.model_count()
        )));
    }
    let sa = sigma_prev * action;
    let denom = noise_var + action.dot(&sa);
    if !(denom > 0.0) {
        return Err(Error::DegenerateUpdate(denom));
    }
    let mut models = ensemble.models.clone();
    for m in 0..ensemble.model_count() {
        let theta = ensemble.model(m);
        let innovation = (reward + perturbations[m] - action.dot(&theta)) / denom;
        let updated = theta + &sa * innovation;
        if updated.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteEnsemble);
        }
        models.row_mut(m).copy_from(&updated.transpose());
    }
    Ok(Ensemble {
        models,
        t: ensemble.t + 1,
    })
}

/// Literal transcription of the perturbed update with explicit inversion:
/// theta' = Sigma_{t+1} (Sigma_t^{-1} theta + (r + W)/sigma^2 a). Oracle only.
pub fn es_update_direct(
    ensemble: &Ensemble,
    sigma_prev: &DMatrix<f64>,
    sigma_next: &DMatrix<f64>,
    action: &DVector<f64>,
    reward: f64,
    noise_var: f64,
    perturbations: &[f64],
) -> Result<Ensemble> {
    if perturbations.len() != ensemble.model_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} perturbations for {} models",
            perturbations.len(),
            ensemble.model_count()
        )));
    }
    let prec_prev = sigma_prev.clone().try_inverse().ok_or(Error::NotInvertible)?;
    let mut models = ensemble.models.clone();
    for m in 0..ensemble.model_count() {
        let theta = ensemble.model(m);
        let rhs = &prec_prev * theta + action * ((reward + perturbations[m]) / noise_var);
        let updated = sigma_next * rhs;
        if updated.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteEnsemble);
        }
        models.row_mut(m).copy_from(&updated.transpose());
    }
    Ok(Ensemble {
        models,
        t: ensemble.t + 1,
    })
}

/// Uniform-random baseline.
pub fn uniform_select(instance: &LinearBanditInstance, rng: &mut impl Rng) -> usize {
    rng.random_range(0..instance.num_actions())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::standard_normal_vector;
    use crate::rng::{derive_stream, Role};

    fn symmetric_instance() -> LinearBanditInstance {
        LinearBanditInstance::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]),
            DVector::zeros(2),
            DMatrix::identity(2, 2),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn ts_symmetric_at_prior() {
        let inst = symmetric_instance();
        let belief = GaussianBelief::prior(&inst);
        let mut rng = derive_stream(31, 0, Role::AgentSelection);
        let n = 100_000;
        let count0 = (0..n)
            .filter(|_| ts_select(&belief, &inst, &mut rng).unwrap() == 0)
            .count();
        let freq = count0 as f64 / n as f64;
        let se = (0.25f64 / n as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * se, "freq={freq}");
    }

    #[test]
    fn ts_collapsed_posterior_always_picks_identified_action() {
        let inst = LinearBanditInstance::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]),
            DVector::zeros(2),
            DMatrix::identity(2, 2),
            1e-10,
        )
        .unwrap();
        let mut belief = GaussianBelief::prior(&inst);
        let a = inst.action(0);
        for _ in 0..20 {
            belief = belief.update(&a, 5.0, inst.noise_var()).unwrap();
        }
        let mut rng = derive_stream(32, 0, Role::AgentSelection);
        for _ in 0..1000 {
            assert_eq!(ts_select(&belief, &inst, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn es_init_m1_and_moments() {
        let inst = symmetric_instance();
        let mut rng = derive_stream(33, 0, Role::Perturbation);
        let e = es_init(&inst, 1, &mut rng).unwrap();
        assert_eq!(e.model_count(), 1);
        assert_eq!(e.t(), 0);

        // Row mean over many ensembles recovers the prior mean.
        let n_ens = 10_000;
        let m = 10;
        let mut sum = DVector::zeros(2);
        for _ in 0..n_ens {
            let e = es_init(&inst, m, &mut rng).unwrap();
            for row in 0..m {
                sum += e.model(row);
            }
        }
        let total = (n_ens * m) as f64;
        let mean = sum / total;
        let se = (1.0 / total).sqrt();
        assert!(mean[0].abs() < 4.0 * se);
        assert!(mean[1].abs() < 4.0 * se);
    }

    #[test]
    fn es_init_deterministic() {
        let inst = symmetric_instance();
        let mut a = derive_stream(34, 1, Role::Perturbation);
        let mut b = derive_stream(34, 1, Role::Perturbation);
        assert_eq!(
            es_init(&inst, 4, &mut a).unwrap().models(),
            es_init(&inst, 4, &mut b).unwrap().models()
        );
    }

    #[test]
    fn es_select_uniform_over_models() {
        let inst = symmetric_instance();
        let mut rng = derive_stream(35, 0, Role::AgentSelection);
        let e = es_init(&inst, 4, &mut rng).unwrap();
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[es_select(&e, &inst, &mut rng).0] += 1;
        }
        let se = (0.25 * 0.75 / n as f64).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 3.0 * se);
        }
        // M = 1: always model 0.
        let e1 = es_init(&inst, 1, &mut rng).unwrap();
        for _ in 0..100 {
            assert_eq!(es_select(&e1, &inst, &mut rng).0, 0);
        }
    }

    #[test]
    fn es_update_scalar_hand_case() {
        // d=1, Sigma_0=1, sigma^2=1, a=1, r=2, theta=0, W=0 -> theta'=1.
        let inst = LinearBanditInstance::new(
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DVector::zeros(1),
            DMatrix::identity(1, 1),
            1.0,
        )
        .unwrap();
        let e = Ensemble {
            models: DMatrix::zeros(1, 1),
            t: 0,
        };
        let a = DVector::from_vec(vec![1.0]);
        let next =
            es_update_with_perturbations(&e, inst.prior_cov(), &a, 2.0, 1.0, &[0.0]).unwrap();
        assert!((next.model(0)[0] - 1.0).abs() < 1e-12);
        assert_eq!(next.t(), 1);
    }

    #[test]
    fn es_update_zero_action_is_noop() {
        let inst = symmetric_instance();
        let mut rng = derive_stream(36, 0, Role::Perturbation);
        let e = es_init(&inst, 3, &mut rng).unwrap();
        let a = DVector::zeros(2);
        let next = es_update(&e, inst.prior_cov(), &a, 1.0, 1.0, &mut rng).unwrap();
        assert_eq!(next.models(), e.models());
    }

    #[test]
    fn rank1_matches_direct_transcription_over_1000_steps() {
        let d = 3;
        let mut rng = derive_stream(37, 0, Role::Perturbation);
        let mut actions = DMatrix::zeros(d, d);
        for i in 0..d {
            actions[(i, i)] = 1.0;
        }
        let inst =
            LinearBanditInstance::new(actions, DVector::zeros(d), DMatrix::identity(d, d), 0.7)
                .unwrap();
        let mut belief = GaussianBelief::prior(&inst);
        let mut fast = es_init(&inst, 3, &mut rng).unwrap();
        let mut direct = fast.clone();
        let mut max_dev = 0.0f64;
        for _ in 0..1000 {
            let a = standard_normal_vector(d, &mut rng);
            let r: f64 = rng.sample(StandardNormal);
            let w: Vec<f64> = (0..3)
                .map(|_| inst.noise_var().sqrt() * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let next_belief = belief.update(&a, r, inst.noise_var()).unwrap();
            fast =
                es_update_with_perturbations(&fast, belief.cov(), &a, r, inst.noise_var(), &w)
                    .unwrap();
            direct = es_update_direct(
                &direct,
                belief.cov(),
                next_belief.cov(),
                &a,
                r,
                inst.noise_var(),
                &w,
            )
            .unwrap();
            belief = next_belief;
            for (x, y) in fast.models().iter().zip(direct.models().iter()) {
                max_dev = max_dev.max((x - y).abs());
            }
        }
        assert!(max_dev <= 1e-8, "max deviation {max_dev}");
    }

    #[test]
    fn zero_perturbations_track_posterior_mean() {
        // With theta_0 = mu_0 and all perturbations zero, the model trajectory
        // equals the exact posterior mean trajectory.
        let d = 2;
        let inst = symmetric_instance();
        let mut rng = derive_stream(38, 0, Role::Perturbation);
        let mut belief = GaussianBelief::prior(&inst);
        let mut e = Ensemble {
            models: DMatrix::zeros(2, d),
            t: 0,
        };
        for _ in 0..100 {
            let a = standard_normal_vector(d, &mut rng);
            let r: f64 = rng.sample(StandardNormal);
            e = es_update_with_perturbations(&e, belief.cov(), &a, r, 1.0, &[0.0, 0.0]).unwrap();
            belief = belief.update(&a, r, 1.0).unwrap();
            for m in 0..2 {
                for i in 0..d {
                    assert!((e.model(m)[i] - belief.mean()[i]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn marginal_law_of_updated_model_is_prior() {
        // Without conditioning on rewards, theta_tilde_{t,m} is marginally a
        // prior draw: run full episodes and moment-check the t=3 model.
        let inst = symmetric_instance();
        let mut env = derive_stream(39, 0, Role::Environment);
        let mut pert = derive_stream(39, 0, Role::Perturbation);
        let mut noise = derive_stream(39, 0, Role::RewardNoise);
        let n = 200_000usize;
        let mut sum = DVector::zeros(2);
        let mut sumsq = DMatrix::zeros(2, 2);
        for _ in 0..n {
            let theta = inst.sample_coefficient(&mut env);
            let mut belief = GaussianBelief::prior(&inst);
            let mut e = es_init(&inst, 1, &mut pert).unwrap();
            for step in 0..3 {
                let idx = step % 2;
                let a = inst.action(idx);
                let r = inst.draw_reward(&theta, idx, &mut noise).unwrap();
                e = es_update(&e, belief.cov(), &a, r, 1.0, &mut pert).unwrap();
                belief = belief.update(&a, r, 1.0).unwrap();
            }
            let x = e.model(0);
            sum += &x;
            sumsq += &x * x.transpose();
        }
        let mean = sum / n as f64;
        let cov = sumsq / n as f64 - &mean * mean.transpose();
        let se = (1.0 / n as f64).sqrt();
        assert!(mean[0].abs() < 5.0 * se);
        assert!(mean[1].abs() < 5.0 * se);
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((cov[(i, j)] - target).abs() < 0.02, "cov[{i}{j}]={}", cov[(i, j)]);
            }
        }
    }

    #[test]
    fn uniform_select_cases() {
        let inst = symmetric_instance();
        let mut rng = derive_stream(40, 0, Role::AgentSelection);
        let n = 100_000;
        let count0 = (0..n).filter(|_| uniform_select(&inst, &mut rng) == 0).count();
        let freq = count0 as f64 / n as f64;
        let se = (0.25f64 / n as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * se);

        let single = LinearBanditInstance::new(
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DVector::zeros(1),
            DMatrix::identity(1, 1),
            1.0,
        )
        .unwrap();
        for _ in 0..10 {
            assert_eq!(uniform_select(&single, &mut rng), 0);
        }

        let mut a = derive_stream(41, 0, Role::AgentSelection);
        let mut b = derive_stream(41, 0, Role::AgentSelection);
        assert_eq!(uniform_select(&inst, &mut a), uniform_select(&inst, &mut b));
    }
}
