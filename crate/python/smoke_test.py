#!/usr/bin/env python3
"""Smoke test for the esbandit_py extension module.

Builds nothing itself: run `cargo build -p esbandit-py` first. The script
locates the compiled cdylib under target/, exposes it under the importable
module name, and exercises every binding.
"""

import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def import_extension():
    suffix = {"linux": ".so", "darwin": ".dylib", "win32": ".dll"}[sys.platform]
    prefix = "" if sys.platform == "win32" else "lib"
    candidates = [
        REPO_ROOT / "target" / profile / f"{prefix}esbandit_py{suffix}"
        for profile in ("release", "debug")
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("extension not built; run: cargo build -p esbandit-py")
    stage = Path(tempfile.mkdtemp(prefix="esbandit_py_"))
    shutil.copy2(built, stage / "esbandit_py.so")
    sys.path.insert(0, str(stage))
    import esbandit_py

    return esbandit_py


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    eb = import_extension()

    # Instance construction and bound constants on the symmetric two-action
    # instance: iota = 2, entropy of the optimum = ln 2.
    inst = eb.Instance([[1.0, 0.0], [-1.0, 0.0]])
    assert inst.num_actions == 2 and inst.dim == 2
    approx(inst.iota(), 2.0)
    assert inst.kappa() > inst.iota()
    theta = inst.sample_theta(seed=1)
    assert len(theta) == 2
    rewards = inst.mean_rewards(theta)
    approx(rewards[0], -rewards[1])
    assert inst.best_action(theta, seed=2) == (0 if theta[0] > 0 else 1)

    h, h_se = inst.estimate_opt_entropy(100_000, seed=3)
    assert abs(h - math.log(2)) < 4 * h_se + 1e-3
    eta, eta_se = inst.estimate_eta(100_000, seed=4)
    assert eta <= inst.kappa() + 3 * eta_se
    assert inst.theorem1_bound(100, 10, h) > 0

    # Posterior update against the scalar hand case.
    belief = eb.Belief.prior(inst)
    updated = belief.update([1.0, 0.0], 1.0, 1.0)
    approx(updated.mean()[0], 0.5)
    approx(updated.cov()[0][0], 0.5)
    assert updated.t == 1 and belief.t == 0
    draws = updated.sample(5000, seed=5)
    mean0 = sum(d[0] for d in draws) / len(draws)
    assert abs(mean0 - 0.5) < 0.05

    # Agents: TS selection and the ensemble life cycle.
    a = eb.ts_select(belief, inst, seed=6)
    assert a in (0, 1)
    ens = eb.Ensemble.init(inst, m=10, seed=7)
    assert ens.m == 10 and ens.t == 0 and len(ens.models()) == 10
    model_idx, action = ens.select(inst, seed=8)
    assert 0 <= model_idx < 10 and action in (0, 1)
    ens2 = ens.update(belief.cov(), [1.0, 0.0], 0.7, 1.0, seed=9)
    assert ens2.t == 1
    dist = ens2.action_dist(inst)
    approx(sum(dist), 1.0, tol=1e-12)

    # Information metrics.
    approx(eb.kl_divergence([1.0, 0.0], [0.5, 0.5]), math.log(2), tol=1e-12)
    assert eb.kl_divergence([0.5, 0.5], [1.0, 0.0]) == float("inf")
    approx(eb.hellinger([1.0, 0.0], [0.0, 1.0]), math.sqrt(2), tol=1e-12)
    approx(eb.entropy([0.25] * 4), math.log(4), tol=1e-12)
    approx(eb.mutual_information([[0.5, 0.0], [0.0, 0.5]]), math.log(2), tol=1e-12)

    # Bound formulas.
    approx(eb.lemma5_bound(2, 0, 10), 2 * math.log(60) / 10, tol=1e-12)
    approx(eb.sanov_tail(2, 10, 0, 1.0), 121 * math.exp(-10), tol=1e-12)
    approx(eb.subgaussian_maxsq_bound(1, 1.0, 0.0), 5.0, tol=1e-12)

    # Experiment runner: determinism and CSV/JSON structure.
    config = json.dumps(
        {
            "actions": [[1.0, 0.0], [-1.0, 0.0]],
            "agent": "es",
            "ensemble_size": 5,
            "horizon": 20,
            "replications": 50,
            "base_seed": 11,
        }
    )
    r1 = eb.run_experiment_from_config(config)
    r2 = eb.run_experiment_from_config(config)
    assert r1["csv"] == r2["csv"] and r1["json"] == r2["json"]
    assert len(r1["mean_cum_regret"]) == 20
    assert r1["csv"].splitlines()[0].startswith("step,")
    report = json.loads(r1["json"])["report"]
    for key in ("iota", "kappa", "eta_hat", "entropy_opt_hat", "theorem1_value"):
        assert key in report

    # Verification suite passthrough.
    reports = eb.run_verify("fact1")
    assert reports[0]["suite"] == "fact1" and reports[0]["pass"]
    try:
        eb.run_verify("no-such-suite")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown suite should raise ValueError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
