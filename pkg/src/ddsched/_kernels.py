"""Fused per-sample reductions (objective, DoC parts, subgradient).

Samples are split into fixed-size chunks; each chunk is summed sequentially and
the chunk partials are combined with ``math.fsum``. Worker threads take
contiguous runs of chunks; chunk boundaries never depend on the thread count,
so results are bit-identical for any number of workers. n = 2 has straight-line
kernels; any n goes through the generic ones.
"""
from __future__ import annotations

import math
import os

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit

CHUNK = 8192
THREADS_ENV = "DDSCHED_THREADS"

_threads = 1


def set_threads(k: int | None = None) -> int:
    """Set worker count; ``None`` reads $DDSCHED_THREADS, else machine parallelism."""
    global _threads
    if k is None:
        env = os.environ.get(THREADS_ENV)
        k = int(env) if env else (os.cpu_count() or 1)
    if k < 1:
        raise ValueError("thread count must be >= 1")
    _threads = int(k)
    return _threads


def get_threads() -> int:
    return _threads


set_threads()


@njit(nogil=True, cache=True)
def _unicast_generic(X, w, xhat, chunk, c0, c1, out):
    N, n = X.shape
    sq = np.empty(n)
    g = np.empty(n)
    for c in range(c0, c1):
        lo = c * chunk
        hi = min(N, lo + chunk)
        J = 0.0
        F = 0.0
        G = 0.0
        g[:] = 0.0
        for k in range(lo, hi):
            total = 0.0
            gbest = -np.inf
            jstar = 0
            for j in range(n):
                d = X[k, j] - xhat[j]
                sq[j] = d * d
                total += sq[j]
                if sq[j] >= gbest:
                    gbest = sq[j]
                    jstar = j
            best = np.inf
            for j in range(n):
                s = 0.0
                for i in range(n):
                    if i != j:
                        s += sq[i]
                if s < best:
                    best = s
            wk = w[k]
            J += wk * best
            F += wk * total
            G += wk * gbest
            g[jstar] -= 2.0 * wk * (X[k, jstar] - xhat[jstar])
        out[c, 0] = J
        out[c, 1] = F
        out[c, 2] = G
        out[c, 3:] = g


@njit(nogil=True, cache=True)
def _unicast_two(X, w, xhat, chunk, c0, c1, out):
    # branch-free select; f is exactly 0.0 or 1.0 so the blends are exact
    N = X.shape[0]
    for c in range(c0, c1):
        lo = c * chunk
        hi = min(N, lo + chunk)
        J = 0.0
        F = 0.0
        G = 0.0
        g0 = 0.0
        g1 = 0.0
        for k in range(lo, hi):
            d0 = X[k, 0] - xhat[0]
            d1 = X[k, 1] - xhat[1]
            s0 = d0 * d0
            s1 = d1 * d1
            wk = w[k]
            f = 1.0 if s1 >= s0 else 0.0
            e = 1.0 - f
            F += wk * (s0 + s1)
            J += wk * (f * s0 + e * s1)
            G += wk * (f * s1 + e * s0)
            g0 -= 2.0 * wk * e * d0
            g1 -= 2.0 * wk * f * d1
        out[c, 0] = J
        out[c, 1] = F
        out[c, 2] = G
        out[c, 3] = g0
        out[c, 4] = g1


@njit(nogil=True, cache=True)
def _broadcast_generic(X, w, theta, chunk, c0, c1, out):
    N, n = X.shape
    d = 2 * n * (n - 1)
    cost = np.empty(n)
    res = np.empty(d // 2)
    g = np.empty(d)
    for c in range(c0, c1):
        lo = c * chunk
        hi = min(N, lo + chunk)
        J = 0.0
        F = 0.0
        G = 0.0
        g[:] = 0.0
        for k in range(lo, hi):
            # res[p]: residual of pair p; cost[l]: error left when sensor l transmits
            total = 0.0
            best = np.inf
            for l in range(n):
                xl = X[k, l]
                s = 0.0
                p = l * (n - 1)
                for i in range(n):
                    if i == l:
                        continue
                    r = X[k, i] - theta[2 * p] * xl - theta[2 * p + 1]
                    res[p] = r
                    s += r * r
                    p += 1
                cost[l] = s
                total += s
                if s < best:
                    best = s
            gbest = -np.inf
            jstar = 0
            for j in range(n):
                gj = 0.0
                for l in range(n):
                    if l != j:
                        gj += cost[l]
                if gj >= gbest:
                    gbest = gj
                    jstar = j
            wk = w[k]
            J += wk * best
            F += wk * total
            G += wk * gbest
            for l in range(n):
                if l == jstar:
                    continue
                xl = X[k, l]
                for p in range(l * (n - 1), (l + 1) * (n - 1)):
                    t = -2.0 * wk * res[p]
                    g[2 * p] += t * xl
                    g[2 * p + 1] += t
        out[c, 0] = J
        out[c, 1] = F
        out[c, 2] = G
        out[c, 3:] = g


@njit(nogil=True, cache=True)
def _broadcast_two(X, w, theta, chunk, c0, c1, out):
    # theta = (w21, b21, w12, b12)
    N = X.shape[0]
    for c in range(c0, c1):
        lo = c * chunk
        hi = min(N, lo + chunk)
        J = 0.0
        F = 0.0
        G = 0.0
        g0 = 0.0
        g1 = 0.0
        g2 = 0.0
        g3 = 0.0
        for k in range(lo, hi):
            x1 = X[k, 0]
            x2 = X[k, 1]
            r21 = x2 - theta[0] * x1 - theta[1]
            r12 = x1 - theta[2] * x2 - theta[3]
            a = r21 * r21  # left behind when sensor 1 transmits
            b = r12 * r12
            wk = w[k]
            # f = 1: sensor 2 wins the >= search over G_j, so block 1 is active
            f = 1.0 if a >= b else 0.0
            e = 1.0 - f
            F += wk * (a + b)
            J += wk * (f * b + e * a)
            G += wk * (f * a + e * b)
            t = -2.0 * wk * f * r21
            g0 += t * x1
            g1 += t
            t = -2.0 * wk * e * r12
            g2 += t * x2
            g3 += t
        out[c, 0] = J
        out[c, 1] = F
        out[c, 2] = G
        out[c, 3] = g0
        out[c, 4] = g1
        out[c, 5] = g2
        out[c, 6] = g3


_pool: ThreadPoolExecutor | None = None
_pool_size = 0


def _run(kernel, X, w, v, width):
    N = X.shape[0]
    nchunks = (N + CHUNK - 1) // CHUNK
    out = np.zeros((nchunks, width))
    workers = min(_threads, nchunks)
    if workers <= 1:
        kernel(X, w, v, CHUNK, 0, nchunks, out)
    else:
        global _pool, _pool_size
        if _pool is None or _pool_size != workers:
            _pool = ThreadPoolExecutor(workers)
            _pool_size = workers
        bounds = np.linspace(0, nchunks, workers + 1).astype(int)
        futs = [_pool.submit(kernel, X, w, v, CHUNK, a, b, out) for a, b in zip(bounds[:-1], bounds[1:])]
        for f in futs:
            f.result()
    # partials are summed in chunk order whatever the worker count
    return np.array([math.fsum(out[:, t]) for t in range(width)])


def _prep(X, w, v):
    return (np.ascontiguousarray(X, dtype=float), np.ascontiguousarray(w, dtype=float),
            np.ascontiguousarray(v, dtype=float))


def unicast_reduce(X, w, xhat, generic: bool = False):
    """Return (J, F, G, g) as weighted sums over samples."""
    X, w, xhat = _prep(X, w, xhat)
    kernel = _unicast_two if X.shape[1] == 2 and not generic else _unicast_generic
    r = _run(kernel, X, w, xhat, 3 + X.shape[1])
    return r[0], r[1], r[2], r[3:]


def broadcast_reduce(X, w, theta, generic: bool = False):
    X, w, theta = _prep(X, w, theta)
    kernel = _broadcast_two if X.shape[1] == 2 and not generic else _broadcast_generic
    r = _run(kernel, X, w, theta, 3 + theta.shape[0])
    return r[0], r[1], r[2], r[3:]
