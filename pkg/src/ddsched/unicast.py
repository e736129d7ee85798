"""Unicast network: only the scheduled estimator hears the packet.

With erasure-case estimates xhat, the best scheduler sends the sensor whose
measurement is farthest from its estimate and the cost per sample is
``min_j sum_{i != j} (x_i - xhat_i)^2 = F - G`` with
``F = sum_i (x_i - xhat_i)^2`` and ``G = max_j (x_j - xhat_j)^2``.
Sensor indices returned to callers are 1-based.
"""
from __future__ import annotations

import numpy as np

from . import _kernels
from .ccp import multistart, run_ccp, uniform_starts
from .model import CcpOptions, CcpTrace, MomentSet, UnicastPolicy, as_vector
from .sampler import Backend, as_backend


def _policy(policy) -> UnicastPolicy:
    return policy if isinstance(policy, UnicastPolicy) else UnicastPolicy(policy)


def _reduce(policy: UnicastPolicy, backend: Backend):
    backend.check_dim(policy.n)
    return _kernels.unicast_reduce(backend.points, backend.weights, policy.xhat)


def unicast_objective(policy, backend) -> float:
    policy, backend = _policy(policy), as_backend(backend)
    return float(_reduce(policy, backend)[0])


def unicast_doc_parts(policy, backend) -> tuple[float, float]:
    policy, backend = _policy(policy), as_backend(backend)
    _, F, G, _ = _reduce(policy, backend)
    return float(F), float(G)


def unicast_schedule(policy, x) -> int:
    """Sensor with the largest deviation from its estimate; lowest index on ties."""
    policy = _policy(policy)
    x = as_vector(x, policy.n, "x")
    return int(np.argmax(np.abs(x - policy.xhat))) + 1


def unicast_sample_subgradient(policy, x) -> np.ndarray:
    """Subgradient of ``max_j (x_j - xhat_j)^2`` by linear search.

    The running maximum is replaced on ``>=``, so ties go to the highest index.
    """
    policy = _policy(policy)
    x = as_vector(x, policy.n, "x")
    g_best, j_best = -np.inf, 0
    for j in range(policy.n):
        gj = (x[j] - policy.xhat[j]) ** 2
        if gj >= g_best:
            g_best, j_best = gj, j
    g = np.zeros(policy.n)
    g[j_best] = -2.0 * (x[j_best] - policy.xhat[j_best])
    return g


def unicast_subgradient(policy, backend) -> np.ndarray:
    policy, backend = _policy(policy), as_backend(backend)
    return _reduce(policy, backend)[3]


def unicast_ccp_step(policy, moments: MomentSet, g) -> UnicastPolicy:
    """Minimizer of F minus the linearization of G: ``g / 2 + E[X]``."""
    policy = _policy(policy)
    g = as_vector(g, policy.n, "g")
    return UnicastPolicy(0.5 * g + moments.mean)


def unicast_ccp(init, backend, opts: CcpOptions | None = None) -> tuple[UnicastPolicy, CcpTrace]:
    init, backend = _policy(init), as_backend(backend)
    opts = opts or CcpOptions()
    backend.check_dim(init.n)
    # the update only needs E[X]; no variance condition here
    mean = backend.mean()
    X, w = backend.points, backend.weights

    def evaluate(v):
        J, _, _, g = _kernels.unicast_reduce(X, w, v)
        return J, g

    trace = run_ccp(init.xhat, evaluate, lambda v, g: 0.5 * g + mean, opts)
    return UnicastPolicy(trace.final), trace


def default_box(moments: MomentSet) -> tuple[np.ndarray, np.ndarray]:
    sd = np.sqrt(np.maximum(moments.variances, 0.0))
    sd = np.where(sd > 0, sd, 1.0)
    return moments.mean - 3 * sd, moments.mean + 3 * sd


def unicast_multistart(backend, restarts: int, init_box=None, seed: int = 0, opts: CcpOptions | None = None):
    """Best of ``restarts`` CCP runs from uniform starts in ``init_box``.

    Returns (best policy, best objective, all traces).
    """
    backend = as_backend(backend)
    if init_box is None:
        X, w = backend.points, backend.weights
        mean = w @ X
        init_box = default_box(MomentSet(mean, (X * w[:, None]).T @ X))
    starts = uniform_starts(*init_box, restarts=restarts, seed=seed)
    best, value, traces = multistart(starts, lambda s: unicast_ccp(s, backend, opts)[1])
    return UnicastPolicy(best), value, traces


def blind_baseline(moments: MomentSet) -> tuple[int, np.ndarray, float]:
    """Always send the highest-variance sensor; others report their means.

    Returns (1-based sensor index, estimates, objective).
    """
    var = moments.variances
    k = int(np.argmax(var))
    return k + 1, moments.mean.copy(), float(np.sum(var) - var[k])


def schedule_frequencies(policy, backend) -> np.ndarray:
    """Weighted fraction of samples routed to each sensor by ``unicast_schedule``."""
    policy, backend = _policy(policy), as_backend(backend)
    backend.check_dim(policy.n)
    idx = np.argmax(np.abs(backend.points - policy.xhat), axis=1)
    return np.bincount(idx, weights=backend.weights, minlength=policy.n)
