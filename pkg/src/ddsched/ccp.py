"""Generic convex-concave iteration loop and random-restart driver."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .model import CcpOptions, CcpTrace
from .sampler import make_rng

# evaluate(v) -> (objective, subgradient of the concave part's negation at v)
Evaluate = Callable[[np.ndarray], tuple[float, np.ndarray]]
Step = Callable[[np.ndarray, np.ndarray], np.ndarray]


def run_ccp(init: np.ndarray, evaluate: Evaluate, step: Step, opts: CcpOptions) -> CcpTrace:
    """Iterate ``v <- step(v, g(v))`` until the step or objective change is small.

    The trace records the objective at every iterate, including the start, and
    the final objective is evaluated at the returned point.
    """
    v = np.array(init, dtype=float)
    J, g = evaluate(v)
    trace = CcpTrace(iterates=[v.copy()], objective_values=[float(J)])
    for k in range(1, opts.max_iterations + 1):
        v_new = step(v, g)
        J_new, g_new = evaluate(v_new)
        step_norm = float(np.linalg.norm(v_new - v))
        trace.iterates.append(v_new.copy())
        trace.objective_values.append(float(J_new))
        trace.iterations = k
        trace.final_step_norm = step_norm
        if step_norm <= opts.step_tolerance:
            trace.converged, trace.stop_reason = True, "step"
        elif abs(J - J_new) <= opts.objective_tolerance:
            trace.converged, trace.stop_reason = True, "objective"
        v, J, g = v_new, J_new, g_new
        if trace.converged:
            break
    else:
        trace.stop_reason = "max_iterations"
    return trace


def uniform_starts(low, high, restarts: int, seed: int) -> list[np.ndarray]:
    """Restart r draws from its own stream keyed by (seed, r)."""
    low = np.asarray(low, dtype=float)
    high = np.asarray(high, dtype=float)
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if low.shape != high.shape or np.any(low >= high):
        raise ValueError("init box needs low < high entrywise")
    return [make_rng(seed, r).uniform(low, high) for r in range(restarts)]


def multistart(starts, solve: Callable[[np.ndarray], CcpTrace]):
    """Run ``solve`` from every start; best = lowest final objective, first on ties."""
    traces = [solve(s) for s in starts]
    finals = [t.objective_values[-1] for t in traces]
    best = int(np.argmin(finals))
    return traces[best].final, finals[best], traces
