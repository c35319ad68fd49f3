//! Seeded replication loop and parallel experiment aggregation.

use rayon::prelude::*;

use super::config::{AgentKind, ExperimentConfig};
use super::{HarnessError, HarnessResult};
use crate::agents::{es_init, es_select, es_update, ts_select, uniform_select};
use crate::bandit::{LinearBanditInstance, Trajectory};
use crate::bounds::{
    compute_iota, compute_kappa, estimate_eta, estimate_opt_entropy, lemma5_bound, measure_mismatch,
    theorem1_bound, BoundReport, MismatchSample, SanovParams,
};
use crate::posterior::GaussianBelief;
use crate::rng::{derive_stream, Role};

/// Per-replication record: one regret gap per step plus any mismatch samples.
#[derive(Debug, Clone)]
pub struct ReplicationTrace {
    pub gaps: Vec<f64>,
    pub mismatch: Vec<MismatchSample>,
}

/// Aggregated mismatch row at one measured step.
#[derive(Debug, Clone)]
pub struct MismatchRow {
    pub t: usize,
    pub mean_kl: f64,
    pub mean_hellinger: f64,
    pub mean_sq_hellinger: f64,
    pub lemma5: f64,
}

/// Aggregated regret/mismatch summary across replications.
#[derive(Debug, Clone)]
pub struct RegretTrace {
    pub mean_cum: Vec<f64>,
    pub se_cum: Vec<f64>,
    pub rep_final_cum: Vec<f64>,
    pub mismatch: Vec<MismatchRow>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub trace: RegretTrace,
    pub report: BoundReport,
}

/// Runs one full episode with streams derived from (base_seed, replication, role).
pub fn run_replication(
    config: &ExperimentConfig,
    instance: &LinearBanditInstance,
    replication: usize,
) -> HarnessResult<ReplicationTrace> {
    let fail = |source| HarnessError::Replication { replication, source };
    let rep = replication as u64;
    let mut env = derive_stream(config.base_seed, rep, Role::Environment);
    let mut noise = derive_stream(config.base_seed, rep, Role::RewardNoise);
    let mut select = derive_stream(config.base_seed, rep, Role::AgentSelection);
    let mut perturb = derive_stream(config.base_seed, rep, Role::Perturbation);
    let mut post = derive_stream(config.base_seed, rep, Role::PosteriorSampling);

    let mut trajectory = Trajectory::new(instance, &mut env);
    let mut belief = GaussianBelief::prior(instance);
    let mut ensemble = match config.agent {
        AgentKind::Es => Some(es_init(instance, config.ensemble_size, &mut perturb).map_err(fail)?),
        _ => None,
    };

    let mut gaps = Vec::with_capacity(config.horizon);
    let mut mismatch = Vec::new();
    for t in 0..config.horizon {
        if let Some(e) = &ensemble {
            if config.mismatch_every > 0 && t % config.mismatch_every == 0 {
                mismatch.push(
                    measure_mismatch(e, &belief, instance, config.n_post, &mut post, config.smoothing_alpha)
                        .map_err(fail)?,
                );
            }
        }
        let action = match config.agent {
            AgentKind::Ts => ts_select(&belief, instance, &mut select).map_err(fail)?,
            AgentKind::Es => es_select(ensemble.as_ref().expect("es agent"), instance, &mut select).1,
            AgentKind::Uniform => uniform_select(instance, &mut select),
        };
        let reward = instance.draw_reward(&trajectory.theta, action, &mut noise).map_err(fail)?;
        let gap = instance
            .regret_gap(&trajectory.theta, trajectory.opt_action_index, action)
            .map_err(fail)?;
        trajectory.record(action, reward);
        gaps.push(gap);

        let feature = instance.action(action);
        let next_belief = belief.update(&feature, reward, instance.noise_var()).map_err(fail)?;
        if let Some(e) = ensemble.take() {
            ensemble = Some(
                es_update(&e, belief.cov(), &feature, reward, instance.noise_var(), &mut perturb)
                    .map_err(fail)?,
            );
        }
        belief = next_belief;
    }
    Ok(ReplicationTrace { gaps, mismatch })
}

/// Runs all replications in parallel (merged in replication order), aggregates
/// the regret trace, and evaluates the bound constants.
pub fn run_experiment(config: &ExperimentConfig) -> HarnessResult<ExperimentResult> {
    config.validate()?;
    let instance = config.build_instance()?;
    let n = config.replications;
    let traces: Vec<ReplicationTrace> = (0..n)
        .into_par_iter()
        .map(|rep| run_replication(config, &instance, rep))
        .collect::<HarnessResult<Vec<_>>>()?;

    let trace = aggregate(&traces, config, &instance);
    let report = evaluate_bounds(config, &instance)?;
    Ok(ExperimentResult { trace, report })
}

fn aggregate(traces: &[ReplicationTrace], config: &ExperimentConfig, instance: &LinearBanditInstance) -> RegretTrace {
    let t_horizon = config.horizon;
    let n = traces.len();
    let mut mean_cum = vec![0.0; t_horizon];
    let mut m2 = vec![0.0; t_horizon];
    let mut rep_final_cum = Vec::with_capacity(n);
    // Deterministic ordered reduction over replication index.
    for (count, trace) in traces.iter().enumerate() {
        let mut cum = 0.0;
        for (t, gap) in trace.gaps.iter().enumerate() {
            cum += gap;
            let delta = cum - mean_cum[t];
            mean_cum[t] += delta / (count + 1) as f64;
            m2[t] += delta * (cum - mean_cum[t]);
        }
        rep_final_cum.push(cum);
    }
    let se_cum: Vec<f64> = m2
        .iter()
        .map(|&s| {
            if n > 1 {
                (s / (n as f64 - 1.0) / n as f64).sqrt()
            } else {
                0.0
            }
        })
        .collect();

    let mut mismatch = Vec::new();
    if config.mismatch_every > 0 && config.agent == AgentKind::Es {
        let per_rep = traces.first().map(|t| t.mismatch.len()).unwrap_or(0);
        for i in 0..per_rep {
            let t = traces[0].mismatch[i].t;
            let mut kl_sum = 0.0;
            let mut hell_sum = 0.0;
            let mut hell_sq_sum = 0.0;
            for trace in traces {
                let s = &trace.mismatch[i];
                kl_sum += s.kl;
                hell_sum += s.hellinger;
                hell_sq_sum += s.hellinger * s.hellinger;
            }
            mismatch.push(MismatchRow {
                t,
                mean_kl: kl_sum / n as f64,
                mean_hellinger: hell_sum / n as f64,
                mean_sq_hellinger: hell_sq_sum / n as f64,
                lemma5: lemma5_bound(instance.num_actions(), t, config.ensemble_size),
            });
        }
    }

    RegretTrace {
        mean_cum,
        se_cum,
        rep_final_cum,
        mismatch,
    }
}

/// Evaluates the bound constants for a config's instance without running
/// replications.
pub fn evaluate_bounds(config: &ExperimentConfig, instance: &LinearBanditInstance) -> HarnessResult<BoundReport> {
    let mut rng = derive_stream(config.base_seed, 0, Role::BoundEval);
    let n_eval = config.n_post.max(100_000);
    let (eta_hat, eta_se) = estimate_eta(instance, n_eval, &mut rng)?;
    let (entropy_opt_hat, entropy_se) = estimate_opt_entropy(instance, n_eval, &mut rng)?;
    let m = config.ensemble_size.max(1);
    Ok(BoundReport {
        iota: compute_iota(instance),
        kappa: compute_kappa(instance),
        eta_hat,
        eta_se,
        entropy_opt_hat,
        entropy_se,
        theorem1_value: theorem1_bound(instance, config.horizon, m, entropy_opt_hat),
        lemma5_per_step: (0..config.horizon)
            .map(|t| lemma5_bound(instance.num_actions(), t, m))
            .collect(),
        sanov_params: SanovParams {
            k: instance.num_actions(),
            m,
            t: 0,
            epsilon: 0.5,
        },
    })
}
