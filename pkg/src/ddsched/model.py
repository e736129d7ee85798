"""Shared domain types for scheduling/estimation design."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SYM_TOL = 1e-12
DERIVED_TOL = 1e-9


class DesignError(Exception):
    """Base class for all errors raised by this package."""


class NonFiniteError(DesignError):
    pass


class TooFewSensorsError(DesignError):
    pass


class EmptyDataError(DesignError):
    pass


class DegenerateVarianceError(DesignError):
    pass


class DimensionMismatchError(DesignError):
    pass


class InvalidMixtureError(DesignError):
    pass


class CholeskyFailure(InvalidMixtureError):
    pass


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SampleMatrix:
    """N x n table of sensor observations, rows are samples."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(self.data))

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_sensors(self) -> int:
        return self.data.shape[1]


def validate_sample_matrix(raw) -> SampleMatrix:
    try:
        data = np.array(raw, dtype=float)
    except ValueError as exc:
        raise DimensionMismatchError(f"table is not rectangular: {exc}") from None
    if data.ndim != 2:
        if data.size == 0:
            raise EmptyDataError("no samples")
        raise DimensionMismatchError(f"expected a 2-d table, got shape {data.shape}")
    if data.shape[0] == 0:
        raise EmptyDataError("no samples")
    if data.shape[1] < 2:
        raise TooFewSensorsError(f"need at least 2 sensors, got {data.shape[1]}")
    if not np.all(np.isfinite(data)):
        raise NonFiniteError("table contains NaN or Inf")
    return SampleMatrix(data)


@dataclass(frozen=True)
class MixtureComponent:
    weight: float
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "mean", _frozen(self.mean))
        object.__setattr__(self, "covariance", _frozen(self.covariance))


@dataclass(frozen=True)
class GaussianMixtureSpec:
    components: tuple[MixtureComponent, ...]

    def __post_init__(self):
        comps = tuple(
            c if isinstance(c, MixtureComponent) else MixtureComponent(*c)
            for c in self.components
        )
        object.__setattr__(self, "components", comps)
        if not comps:
            raise InvalidMixtureError("mixture has no components")
        n = comps[0].mean.shape[0]
        for c in comps:
            if not (0.0 < c.weight <= 1.0):
                raise InvalidMixtureError(f"weight {c.weight} outside (0, 1]")
            if c.mean.shape != (n,) or c.covariance.shape != (n, n):
                raise InvalidMixtureError("component dimensions disagree")
            if not (np.all(np.isfinite(c.mean)) and np.all(np.isfinite(c.covariance))):
                raise InvalidMixtureError("non-finite mixture parameters")
            if np.max(np.abs(c.covariance - c.covariance.T)) > SYM_TOL:
                raise InvalidMixtureError("covariance is not symmetric")
            try:
                np.linalg.cholesky(c.covariance)
            except np.linalg.LinAlgError:
                raise CholeskyFailure("covariance is not positive definite") from None
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > SYM_TOL:
            raise InvalidMixtureError(f"weights sum to {total!r}, not 1")

    @property
    def n(self) -> int:
        return self.components[0].mean.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    @classmethod
    def from_lists(cls, weights, means, covariances) -> "GaussianMixtureSpec":
        return cls(tuple(MixtureComponent(w, m, c) for w, m, c in zip(weights, means, covariances)))


@dataclass(frozen=True)
class MomentSet:
    """First and second moments, ``second[i, j] = E[X_i X_j]``."""

    mean: np.ndarray
    second: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen(self.mean))
        object.__setattr__(self, "second", _frozen(self.second))
        n = self.mean.shape[0]
        if self.second.shape != (n, n):
            raise DimensionMismatchError("moment shapes disagree")
        scale = max(1.0, float(np.max(np.abs(self.second))))
        if np.max(np.abs(self.second - self.second.T)) > DERIVED_TOL * scale:
            raise DesignError("second-moment matrix is not symmetric")

    @property
    def n(self) -> int:
        return self.mean.shape[0]

    @property
    def covariance(self) -> np.ndarray:
        return self.second - np.outer(self.mean, self.mean)

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.second) - self.mean**2

    def require_nondegenerate(self) -> "MomentSet":
        var = self.variances
        if np.any(var <= 0):
            bad = [int(i) + 1 for i in np.flatnonzero(var <= 0)]
            raise DegenerateVarianceError(f"zero variance for sensor(s) {bad}")
        return self


@dataclass(frozen=True)
class UnicastPolicy:
    """Erasure-case estimates: estimator i outputs ``xhat[i]`` when it hears nothing."""

    xhat: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xhat", _frozen(self.xhat))
        if self.xhat.ndim != 1 or not np.all(np.isfinite(self.xhat)):
            raise DesignError("xhat must be a finite vector")

    @property
    def n(self) -> int:
        return self.xhat.shape[0]

    @property
    def vector(self) -> np.ndarray:
        return self.xhat


def broadcast_dim(n: int) -> int:
    return 2 * n * (n - 1)


def pair_slot(i: int, side: int, n: int) -> int:
    """Position of the (w, b) pair for receiver ``i`` using side information from
    sensor ``side`` (both 0-based). ``theta[2 * slot]`` is w, ``theta[2 * slot + 1]`` is b."""
    if i == side:
        raise ValueError("receiver and side-information sensor must differ")
    return side * (n - 1) + (i if i < side else i - 1)


def broadcast_layout(n: int) -> list[tuple[int, int]]:
    """(receiver, side) pairs, 0-based, in theta order."""
    return [(i, side) for side in range(n) for i in range(n) if i != side]


def _n_from_dim(d: int) -> int:
    n = 2
    while broadcast_dim(n) < d:
        n += 1
    if broadcast_dim(n) != d:
        raise DimensionMismatchError(f"theta length {d} is not 2n(n-1) for any n")
    return n


@dataclass(frozen=True)
class BroadcastPolicy:
    """Affine estimators ``xhat_i = w[i, j] * x_j + b[i, j]`` when sensor j transmits.

    ``theta`` stacks one block per side-information sensor j; inside a block the
    (w_ij, b_ij) pairs follow increasing receiver index i. For n = 2 this is
    (w21, b21, w12, b12).
    """

    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _frozen(self.theta))
        if self.theta.ndim != 1 or not np.all(np.isfinite(self.theta)):
            raise DesignError("theta must be a finite vector")
        _n_from_dim(self.theta.shape[0])

    @property
    def n(self) -> int:
        return _n_from_dim(self.theta.shape[0])

    @property
    def vector(self) -> np.ndarray:
        return self.theta

    @classmethod
    def from_maps(cls, weights: dict, biases: dict, n: int) -> "BroadcastPolicy":
        """Build from {(i, j): value} maps with 1-based sensor labels."""
        theta = np.zeros(broadcast_dim(n))
        for i, j in broadcast_layout(n):
            s = pair_slot(i, j, n)
            theta[2 * s] = weights[(i + 1, j + 1)]
            theta[2 * s + 1] = biases[(i + 1, j + 1)]
        return cls(theta)

    def to_maps(self) -> tuple[dict, dict]:
        n = self.n
        weights, biases = {}, {}
        for i, j in broadcast_layout(n):
            s = pair_slot(i, j, n)
            weights[(i + 1, j + 1)] = float(self.theta[2 * s])
            biases[(i + 1, j + 1)] = float(self.theta[2 * s + 1])
        return weights, biases

    def weight_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense n x n arrays W, B with ``W[i, j] = w_ij`` (diagonal zero)."""
        n = self.n
        W = np.zeros((n, n))
        B = np.zeros((n, n))
        for i, j in broadcast_layout(n):
            s = pair_slot(i, j, n)
            W[i, j] = self.theta[2 * s]
            B[i, j] = self.theta[2 * s + 1]
        return W, B


@dataclass(frozen=True)
class CcpOptions:
    max_iterations: int = 500
    step_tolerance: float = 1e-8
    objective_tolerance: float = 1e-10

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (self.step_tolerance > 0 and self.objective_tolerance > 0):
            raise ValueError("tolerances must be positive")


@dataclass
class CcpTrace:
    iterates: list[np.ndarray] = field(default_factory=list)
    objective_values: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    final_step_norm: float = float("nan")
    stop_reason: str = ""
    metadata: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def summary(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "final_step_norm": self.final_step_norm,
            "initial_objective": self.objective_values[0],
            "final_objective": self.objective_values[-1],
            **self.metadata,
        }


@dataclass(frozen=True)
class RiskReport:
    j_train: float
    j_test_values: tuple[float, ...]
    mean_j_test: float
    exceedance: tuple[tuple[float, float], ...]
    success: bool

    def to_dict(self) -> dict:
        return {
            "j_train": self.j_train,
            "mean_j_test": self.mean_j_test,
            "experiments": len(self.j_test_values),
            "exceedance": [{"epsilon": e, "frequency": f} for e, f in self.exceedance],
            "success": self.success,
        }


def as_vector(x: Sequence[float], n: int, what: str = "vector") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DimensionMismatchError(f"{what} has shape {x.shape}, expected ({n},)")
    return x
