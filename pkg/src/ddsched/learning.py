"""Train on one dataset, judge the result on independent test data."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import broadcast, unicast
from .model import (
    BroadcastPolicy,
    CcpOptions,
    GaussianMixtureSpec,
    RiskReport,
    SampleMatrix,
    UnicastPolicy,
)
from .sampler import Empirical, derive_seed, sample_mixture

log = logging.getLogger(__name__)

ZERO_RISK_FLOOR = 1e-9


@dataclass(frozen=True)
class LearningConfig:
    mode: Literal["unicast", "broadcast"] = "broadcast"
    restarts: int = 100
    ccp_options: CcpOptions = field(default_factory=CcpOptions)
    success_gap: float = 0.01
    seed: int = 0
    init_box: tuple | None = None

    def __post_init__(self):
        if self.mode not in ("unicast", "broadcast"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not (0.0 < self.success_gap < 1.0):
            raise ValueError("success_gap must lie in (0, 1)")


def train(train_data: SampleMatrix, config: LearningConfig, with_traces: bool = False):
    """Multistart CCP on the empirical risk of ``train_data``.

    Returns (policy, j_train), plus the CCP traces when ``with_traces``.
    """
    backend = Empirical(train_data)
    if config.mode == "broadcast":
        solver = broadcast.broadcast_multistart
    else:
        # the unicast update needs only the mean, but a constant column still
        # means there is nothing to schedule; reject it like broadcast does
        backend.moments()
        solver = unicast.unicast_multistart
    policy, j_train, traces = solver(
        backend, config.restarts, config.init_box, config.seed, config.ccp_options
    )
    if with_traces:
        return policy, float(j_train), traces
    return policy, float(j_train)


def validate(policy, test_data: SampleMatrix) -> float:
    backend = Empirical(test_data)
    if isinstance(policy, BroadcastPolicy):
        return broadcast.broadcast_objective(policy, backend)
    if isinstance(policy, UnicastPolicy):
        return unicast.unicast_objective(policy, backend)
    raise TypeError(f"not a policy: {type(policy).__name__}")


def decide(j_train: float, j_test: float, success_gap: float) -> bool:
    """True when the relative train/test gap is within ``success_gap``.

    A zero training risk makes the relative gap meaningless; then success means
    the test risk is also (numerically) zero.
    """
    if j_train <= 0.0:
        log.warning("zero training risk: deciding on |j_test| <= %g instead", ZERO_RISK_FLOOR)
        return bool(j_test <= ZERO_RISK_FLOOR)
    return bool(abs(j_test - j_train) / j_train <= success_gap)


def exceedance(values, reference: float, epsilons) -> list[tuple[float, float]]:
    """Fraction of ``values`` farther than each epsilon from ``reference``."""
    dist = np.abs(np.asarray(values, dtype=float) - reference)
    return [(float(e), float(np.mean(dist > e))) for e in sorted(epsilons)]


def experiment_seed(seed: int, experiment: int) -> int:
    return derive_seed(seed, experiment)


def repeated_validation(
    policy,
    j_train: float,
    spec: GaussianMixtureSpec,
    test_size: int,
    experiments: int,
    epsilons,
    seed: int,
    success_gap: float = 0.01,
) -> RiskReport:
    """Evaluate ``policy`` on ``experiments`` fresh test sets drawn from ``spec``.

    Test set e uses the sampler seed ``derive_seed(seed, e)``.
    """
    if experiments < 1 or test_size < 1:
        raise ValueError("experiments and test_size must be positive")
    values = [
        validate(policy, sample_mixture(spec, test_size, experiment_seed(seed, e)))
        for e in range(experiments)
    ]
    mean = float(np.mean(values))
    return RiskReport(
        j_train=float(j_train),
        j_test_values=tuple(float(v) for v in values),
        mean_j_test=mean,
        exceedance=tuple(exceedance(values, j_train, epsilons)),
        success=decide(j_train, mean, success_gap),
    )
