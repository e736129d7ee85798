"""Synthetic data from Gaussian mixtures, moments, and expectation backends.

Random streams use numpy's Philox4x32-10 counter-based generator keyed through
``SeedSequence``. A child stream for (seed, index...) is keyed by
``SeedSequence([seed, *index])``, so restarts and test experiments each get an
independent stream that does not depend on execution order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .model import (
    CholeskyFailure,
    DegenerateVarianceError,
    DimensionMismatchError,
    GaussianMixtureSpec,
    MomentSet,
    SampleMatrix,
)

MIN_MC_SAMPLES = 1000


def make_rng(seed: int, *index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, index)])))


def derive_seed(seed: int, *index: int) -> int:
    """64-bit seed for child stream ``index`` of ``seed``."""
    state = np.random.SeedSequence([int(seed), *map(int, index)]).generate_state(1, np.uint64)
    return int(state[0])


def reference_mixture() -> GaussianMixtureSpec:
    """3/4 N(0, I) + 1/4 N((4, 2), [[1, .4], [.4, 1]])."""
    return GaussianMixtureSpec.from_lists(
        [0.75, 0.25],
        [[0.0, 0.0], [4.0, 2.0]],
        [np.eye(2), [[1.0, 0.4], [0.4, 1.0]]],
    )


def sample_mixture(spec: GaussianMixtureSpec, count: int, seed: int) -> SampleMatrix:
    """Draw ``count`` rows.

    One uniform per row picks the component by inverse CDF on the cumulative
    weights, then a block of standard normals z gives ``mean + L z`` with L the
    lower Cholesky factor. Uniforms are drawn before normals.
    """
    if count < 1:
        raise ValueError("count must be positive")
    rng = make_rng(seed)
    u = rng.random(count)
    z = rng.standard_normal((count, spec.n))
    cum = np.cumsum(spec.weights)
    comp = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
    out = np.empty_like(z)
    for k, c in enumerate(spec.components):
        try:
            L = np.linalg.cholesky(c.covariance)
        except np.linalg.LinAlgError:
            raise CholeskyFailure("covariance is not positive definite") from None
        rows = comp == k
        out[rows] = c.mean + z[rows] @ L.T
    return SampleMatrix(out)


def analytic_moments(spec: GaussianMixtureSpec) -> MomentSet:
    mean = sum(c.weight * c.mean for c in spec.components)
    second = sum(c.weight * (c.covariance + np.outer(c.mean, c.mean)) for c in spec.components)
    return MomentSet(mean, second)


def _weighted_moments(X: np.ndarray, w: np.ndarray | None) -> MomentSet:
    if w is None:
        mean = X.mean(axis=0)
        second = X.T @ X / X.shape[0]
    else:
        mean = w @ X
        second = (X * w[:, None]).T @ X
    second = 0.5 * (second + second.T)
    return MomentSet(mean, second)


def empirical_moments(data: SampleMatrix) -> MomentSet:
    m = _weighted_moments(data.data, None)
    # constant columns give exactly zero spread; test that directly to avoid roundoff
    const = np.all(data.data == data.data[0], axis=0)
    if np.any(const) or np.any(m.variances <= 0):
        bad = sorted(set(np.flatnonzero(const)) | set(np.flatnonzero(m.variances <= 0)))
        raise DegenerateVarianceError(f"zero empirical variance for sensor(s) {[int(i) + 1 for i in bad]}")
    return m


class Backend:
    """A finite weighted point set standing in for the expectation operator."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def moments(self) -> MomentSet:
        """Moments of the point set, raising DegenerateVarianceError if any sensor is constant."""
        raise NotImplementedError

    def check_dim(self, n: int) -> None:
        if n != self.n:
            raise DimensionMismatchError(f"policy has n={n}, backend has n={self.n}")


@dataclass(frozen=True, eq=False)
class Empirical(Backend):
    data: SampleMatrix

    @property
    def points(self) -> np.ndarray:
        return self.data.data

    @cached_property
    def weights(self) -> np.ndarray:
        return np.full(self.data.n_samples, 1.0 / self.data.n_samples)

    def mean(self) -> np.ndarray:
        return self.data.data.mean(axis=0)

    def moments(self) -> MomentSet:
        return empirical_moments(self.data)


@dataclass(frozen=True, eq=False)
class MonteCarloMixture(Backend):
    """Fixed sample of ``sample_count`` mixture draws; evaluated like Empirical."""

    spec: GaussianMixtureSpec
    sample_count: int
    seed: int

    def __post_init__(self):
        if self.sample_count < MIN_MC_SAMPLES:
            raise ValueError(f"sample_count must be >= {MIN_MC_SAMPLES}")

    @cached_property
    def empirical(self) -> Empirical:
        return Empirical(sample_mixture(self.spec, self.sample_count, self.seed))

    @property
    def points(self) -> np.ndarray:
        return self.empirical.points

    @property
    def weights(self) -> np.ndarray:
        return self.empirical.weights

    def mean(self) -> np.ndarray:
        return self.empirical.mean()

    def moments(self) -> MomentSet:
        return self.empirical.moments()


@dataclass(frozen=True, eq=False)
class QuadratureMixture(Backend):
    """Deterministic midpoint-rule quadrature of a Gaussian mixture.

    Each component gets a tensor grid of ``nodes`` midpoints per axis on
    ``[-half_width, half_width]`` in whitened coordinates, mapped through its
    Cholesky factor; node weights are the normal density times the cell volume,
    renormalized per component. Only practical for small n.
    """

    spec: GaussianMixtureSpec
    nodes: int = 801
    half_width: float = 8.0

    def __post_init__(self):
        if self.nodes ** self.spec.n > 50_000_000:
            raise ValueError("quadrature grid too large; use MonteCarloMixture")

    @cached_property
    def _grid(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.spec.n
        h = 2 * self.half_width / self.nodes
        axis = -self.half_width + h * (np.arange(self.nodes) + 0.5)
        Z = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
        dens = np.exp(-0.5 * np.sum(Z * Z, axis=1))
        keep = dens > 1e-18 * dens.max()
        Z, dens = Z[keep], dens[keep]
        dens /= dens.sum()
        pts, wts = [], []
        for c in self.spec.components:
            L = np.linalg.cholesky(c.covariance)
            pts.append(c.mean + Z @ L.T)
            wts.append(c.weight * dens)
        return np.ascontiguousarray(np.concatenate(pts)), np.concatenate(wts)

    @property
    def points(self) -> np.ndarray:
        return self._grid[0]

    @property
    def weights(self) -> np.ndarray:
        return self._grid[1]

    def moments(self) -> MomentSet:
        # moments of the grid itself, so CCP steps and subgradients share one measure
        return _weighted_moments(self.points, self.weights).require_nondegenerate()


def as_backend(source) -> Backend:
    if isinstance(source, Backend):
        return source
    if isinstance(source, SampleMatrix):
        return Empirical(source)
    raise TypeError(f"cannot use {type(source).__name__} as an expectation backend")
