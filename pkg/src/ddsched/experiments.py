"""End-to-end runs on the two-sensor Gaussian mixture with pinned seeds.

Each runner returns a dict with the fitted quantities and a list of ``Check``
rows comparing them with the reference values.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import broadcast, learning, unicast
from .model import CcpOptions
from .sampler import MonteCarloMixture, analytic_moments, reference_mixture, sample_mixture

# reference values for the mixture example
UNICAST_XHAT = (0.0045, 1.5900)
UNICAST_J = 0.8065
BLIND_J = 1.75
UNICAST_GAIN = 0.54
BROADCAST_THETA = (0.4238, 0.2151, -0.2390, 0.0624)
BROADCAST_J = 0.5276
BROADCAST_GAIN = 0.3458
TRAIN_J_BAND = (0.50, 0.56)

# pinned seeds
BACKEND_SEED = 1
RESTART_SEED = 2
TRAIN_SEED = 3
TEST_SEED = 4
EXPERIMENT_SEED = 5
POPULATION_SEED = 6


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    target: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: value={self.value:.6g} target={self.target:.6g} tol={self.tolerance:g}"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "target": self.target,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def close(name: str, value: float, target: float, tol: float) -> Check:
    value = float(value)
    return Check(name, value, float(target), tol, bool(abs(value - target) <= tol))


def close_vec(name: str, value, target, tol: float) -> Check:
    """Passes when every coordinate is within ``tol``; reports the worst deviation."""
    dev = float(np.max(np.abs(np.asarray(value, dtype=float) - np.asarray(target, dtype=float))))
    return Check(name, dev, 0.0, tol, bool(dev <= tol))


def mixture_backend(samples: int = 10**6, seed: int = BACKEND_SEED) -> MonteCarloMixture:
    return MonteCarloMixture(reference_mixture(), samples, seed)


def run_unicast(backend, restarts: int = 200, seed: int = RESTART_SEED, opts: CcpOptions | None = None) -> dict:
    t0 = time.perf_counter()
    policy, value, traces = unicast.unicast_multistart(backend, restarts, seed=seed, opts=opts)
    elapsed = time.perf_counter() - t0
    idx, _, blind = unicast.blind_baseline(analytic_moments(reference_mixture()))
    gain = 1.0 - value / blind
    checks = [
        close("unicast objective", value, UNICAST_J, 0.02),
        close_vec("unicast xhat max deviation", policy.xhat, UNICAST_XHAT, 0.05),
        close("blind objective (analytic)", blind, BLIND_J, 0.0),
        close("unicast gain over blind", gain, UNICAST_GAIN, 0.02),
    ]
    return {
        "policy": policy,
        "objective": value,
        "traces": traces,
        "blind_index": idx,
        "blind_objective": blind,
        "gain_over_blind": gain,
        "seconds": elapsed,
        "checks": checks,
    }


def run_broadcast(backend, unicast_objective: float, restarts: int = 200, seed: int = RESTART_SEED,
                  opts: CcpOptions | None = None) -> dict:
    t0 = time.perf_counter()
    policy, value, traces = broadcast.broadcast_multistart(backend, restarts, seed=seed, opts=opts)
    elapsed = time.perf_counter() - t0
    gain = 1.0 - value / unicast_objective
    checks = [
        close("broadcast objective", value, BROADCAST_J, 0.02),
        close_vec("broadcast theta max deviation", policy.theta, BROADCAST_THETA, 0.05),
        close("broadcast gain over unicast", gain, BROADCAST_GAIN, 0.02),
    ]
    return {
        "policy": policy,
        "objective": value,
        "traces": traces,
        "gain_over_unicast": gain,
        "step_size": traces[0].metadata["step_size"],
        "seconds": elapsed,
        "checks": checks,
    }


def run_data_driven(
    train_size: int = 10_000,
    test_size: int = 100_000,
    experiments: int = 1000,
    population_size: int = 10**6,
    restarts: int = 200,
    success_gap: float = 0.02,
    epsilons=(0.001, 0.002, 0.005, 0.01, 0.05),
    opts: CcpOptions | None = None,
) -> dict:
    spec = reference_mixture()
    t0 = time.perf_counter()
    config = learning.LearningConfig(
        mode="broadcast", restarts=restarts, ccp_options=opts or CcpOptions(),
        success_gap=success_gap, seed=RESTART_SEED,
    )
    train_data = sample_mixture(spec, train_size, TRAIN_SEED)
    policy, j_train = learning.train(train_data, config)
    j_test = learning.validate(policy, sample_mixture(spec, test_size, TEST_SEED))
    gap = abs(j_test - j_train) / j_train
    ok = learning.decide(j_train, j_test, success_gap)
    report = learning.repeated_validation(
        policy, j_train, spec, test_size, experiments, epsilons, EXPERIMENT_SEED, success_gap
    )
    population = learning.validate(policy, sample_mixture(spec, population_size, POPULATION_SEED))
    rel = abs(report.mean_j_test - population) / population
    elapsed = time.perf_counter() - t0
    lo, hi = TRAIN_J_BAND
    checks = [
        Check("training risk in band", j_train, 0.5 * (lo + hi), 0.5 * (hi - lo), bool(lo <= j_train <= hi)),
        Check("train/test relative gap", gap, 0.0, success_gap, bool(gap < success_gap)),
        Check("decide() at threshold", float(ok), 1.0, 0.0, ok),
        Check("mean test risk vs population estimate (relative)", rel, 0.0, 0.01, bool(rel < 0.01)),
    ]
    return {
        "policy": policy,
        "j_train": j_train,
        "j_test": j_test,
        "relative_gap": gap,
        "success": ok,
        "report": report,
        "population_estimate": population,
        "seconds": elapsed,
        "checks": checks,
    }
