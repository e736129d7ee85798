"""Broadcast network: every estimator hears the transmitted measurement.

Estimator i uses the affine rule ``w_ij x_j + b_ij`` when sensor j transmits.
With residuals ``r_il = x_i - w_il x_l - b_il``, the cost of sending sensor l is
``C_l = sum_{i != l} r_il^2``; the scheduler picks the smallest, and

    min_j C_j = sum_l C_l - max_j sum_{l != j} C_l.

The update solves the block-diagonal system ``A theta = g + b`` where every
(w_il, b_il) pair sees the same 2x2 block ``2 [[E X_l^2, E X_l], [E X_l, 1]]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .ccp import multistart, run_ccp, uniform_starts
from .model import (
    BroadcastPolicy,
    CcpOptions,
    CcpTrace,
    DimensionMismatchError,
    MomentSet,
    as_vector,
    broadcast_dim,
    broadcast_layout,
    pair_slot,
)
from .sampler import Backend, as_backend


def _policy(policy) -> BroadcastPolicy:
    return policy if isinstance(policy, BroadcastPolicy) else BroadcastPolicy(policy)


def residuals(policy: BroadcastPolicy, x: np.ndarray) -> np.ndarray:
    """n x n matrix R with ``R[i, l] = x_i - w_il x_l - b_il`` (zero diagonal)."""
    W, B = policy.weight_matrix()
    R = x[:, None] - W * x[None, :] - B
    np.fill_diagonal(R, 0.0)
    return R


def _reduce(policy: BroadcastPolicy, backend: Backend):
    backend.check_dim(policy.n)
    return _kernels.broadcast_reduce(backend.points, backend.weights, policy.theta)


def broadcast_objective(policy, backend) -> float:
    policy, backend = _policy(policy), as_backend(backend)
    return float(_reduce(policy, backend)[0])


def broadcast_doc_parts(policy, backend) -> tuple[float, float]:
    policy, backend = _policy(policy), as_backend(backend)
    _, F, G, _ = _reduce(policy, backend)
    return float(F), float(G)


def broadcast_schedule(policy, x) -> int:
    """1-based sensor whose transmission leaves the least error; lowest index on ties."""
    policy = _policy(policy)
    x = as_vector(x, policy.n, "x")
    cost = np.sum(residuals(policy, x) ** 2, axis=0)
    return int(np.argmin(cost)) + 1


def broadcast_sample_subgradient(policy, x) -> np.ndarray:
    policy = _policy(policy)
    n = policy.n
    x = as_vector(x, n, "x")
    R = residuals(policy, x)
    cost = np.sum(R**2, axis=0)
    g_best, j_best = -np.inf, 0
    for j in range(n):
        gj = sum(cost[l] for l in range(n) if l != j)
        if gj >= g_best:
            g_best, j_best = gj, j
    g = np.zeros(broadcast_dim(n))
    for i, l in broadcast_layout(n):
        if l == j_best:
            continue
        s = pair_slot(i, l, n)
        g[2 * s] = -2.0 * x[l] * R[i, l]
        g[2 * s + 1] = -2.0 * R[i, l]
    return g


def broadcast_subgradient(policy, backend) -> np.ndarray:
    policy, backend = _policy(policy), as_backend(backend)
    return _reduce(policy, backend)[3]


@dataclass(frozen=True)
class CcpLinearSystem:
    """``a_blocks[l]`` already includes the factor 2."""

    a_blocks: np.ndarray  # (n, 2, 2)
    b: np.ndarray  # (2n(n-1),)

    @property
    def n(self) -> int:
        return self.a_blocks.shape[0]

    def dense(self) -> np.ndarray:
        n = self.n
        A = np.zeros((broadcast_dim(n), broadcast_dim(n)))
        for i, l in broadcast_layout(n):
            s = 2 * pair_slot(i, l, n)
            A[s : s + 2, s : s + 2] = self.a_blocks[l]
        return A

    def solve(self, rhs) -> np.ndarray:
        """Blockwise solve of ``A theta = rhs`` using the closed-form 2x2 inverse."""
        n = self.n
        rhs = as_vector(rhs, broadcast_dim(n), "rhs")
        a, c, d = self.a_blocks[:, 0, 0], self.a_blocks[:, 0, 1], self.a_blocks[:, 1, 1]
        det = a * d - c * c
        out = np.empty_like(rhs)
        for i, l in broadcast_layout(n):
            s = 2 * pair_slot(i, l, n)
            u, v = rhs[s], rhs[s + 1]
            out[s] = (d[l] * u - c[l] * v) / det[l]
            out[s + 1] = (a[l] * v - c[l] * u) / det[l]
        return out


def build_ccp_system(moments: MomentSet) -> CcpLinearSystem:
    moments.require_nondegenerate()
    n = moments.n
    m, M = moments.mean, moments.second
    blocks = np.empty((n, 2, 2))
    for l in range(n):
        blocks[l] = 2.0 * np.array([[M[l, l], m[l]], [m[l], 1.0]])
    b = np.empty(broadcast_dim(n))
    for i, l in broadcast_layout(n):
        s = pair_slot(i, l, n)
        b[2 * s] = 2.0 * M[i, l]
        b[2 * s + 1] = 2.0 * m[i]
    return CcpLinearSystem(blocks, b)


def broadcast_ccp_step(system: CcpLinearSystem, g) -> BroadcastPolicy:
    g = as_vector(g, system.b.shape[0], "g")
    return BroadcastPolicy(system.solve(g + system.b))


def ccp_step_size(system: CcpLinearSystem) -> float:
    """Spectral radius of A^{-1}, i.e. one over the smallest block eigenvalue."""
    a, c, d = system.a_blocks[:, 0, 0], system.a_blocks[:, 0, 1], system.a_blocks[:, 1, 1]
    tr, det = a + d, a * d - c * c
    disc = np.sqrt(np.maximum(tr * tr - 4 * det, 0.0))
    # smaller root as det / larger root, which avoids cancellation
    lam_min = det / (0.5 * (tr + disc))
    return float(1.0 / np.min(lam_min))


def broadcast_ccp(init, backend, opts: CcpOptions | None = None, system: CcpLinearSystem | None = None):
    init, backend = _policy(init), as_backend(backend)
    opts = opts or CcpOptions()
    backend.check_dim(init.n)
    if system is None:
        system = build_ccp_system(backend.moments())
    if system.n != init.n:
        raise DimensionMismatchError("system and policy disagree on n")
    X, w = backend.points, backend.weights

    def evaluate(v):
        J, _, _, g = _kernels.broadcast_reduce(X, w, v)
        return J, g

    trace = run_ccp(init.theta, evaluate, lambda v, g: system.solve(g + system.b), opts)
    trace.metadata["step_size"] = ccp_step_size(system)
    return BroadcastPolicy(trace.final), trace


def default_box(moments: MomentSet) -> tuple[np.ndarray, np.ndarray]:
    """Weights in [-2, 2]; biases within two standard deviations of the receiver's mean."""
    n = moments.n
    sd = np.sqrt(np.maximum(moments.variances, 0.0))
    low, high = np.empty(broadcast_dim(n)), np.empty(broadcast_dim(n))
    for i, l in broadcast_layout(n):
        s = pair_slot(i, l, n)
        low[2 * s], high[2 * s] = -2.0, 2.0
        low[2 * s + 1] = moments.mean[i] - 2 * sd[i]
        high[2 * s + 1] = moments.mean[i] + 2 * sd[i]
    return low, high


def broadcast_multistart(backend, restarts: int, init_box=None, seed: int = 0, opts: CcpOptions | None = None):
    backend = as_backend(backend)
    moments = backend.moments()
    system = build_ccp_system(moments)
    if init_box is None:
        init_box = default_box(moments)
    starts = uniform_starts(*init_box, restarts=restarts, seed=seed)
    best, value, traces = multistart(starts, lambda s: broadcast_ccp(s, backend, opts, system)[1])
    return BroadcastPolicy(best), value, traces


def schedule_frequencies(policy, backend) -> np.ndarray:
    policy, backend = _policy(policy), as_backend(backend)
    backend.check_dim(policy.n)
    X = backend.points
    W, B = policy.weight_matrix()
    cost = np.zeros((X.shape[0], policy.n))
    for i, l in broadcast_layout(policy.n):
        r = X[:, i] - W[i, l] * X[:, l] - B[i, l]
        cost[:, l] += r * r
    return np.bincount(np.argmin(cost, axis=1), weights=backend.weights, minlength=policy.n)
