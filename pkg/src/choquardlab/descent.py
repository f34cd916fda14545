"""Projected Sobolev-gradient descent shared by all constrained solvers.

A problem supplies a projection ``w -> (u, energy, state)`` onto its
constraint set and the H^1 gradient of the action at a projected point.
Iterates follow nonlinear conjugate gradients (Polak-Ribiere+) in the
H^1 metric, are reprojected after every step and only accepted when the
action does not increase beyond rounding.  Near convergence the action
cannot resolve the remaining decrease, so candidates whose action is flat
to rounding are ranked by residual instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .grid import GridSpec, h1_symbol

log = logging.getLogger(__name__)

ProjectFn = Callable[[np.ndarray], "tuple[np.ndarray, float, Any]"]
ResidualFn = Callable[[np.ndarray, Any], np.ndarray]


class ProjectionFailed(ArithmeticError):
    """Raised by a projection when the trial point leaves its domain."""


@dataclass
class DescentOutcome:
    values: np.ndarray
    energy: float
    residual_h1: float
    iterations: int
    converged: bool
    state: Any = None
    energies: list = field(default_factory=list)
    stop_reason: str = ""


class H1Metric:
    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.symbol = h1_symbol(grid)
        self.scale = grid.cell_volume / grid.size

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        ah = np.fft.fftn(a)
        bh = ah if b is a else np.fft.fftn(b)
        return float(self.scale * np.sum(self.symbol * (ah * np.conj(bh)).real))

    def solve(self, f: np.ndarray) -> np.ndarray:
        """``(-Laplacian + 1)^{-1} f``."""
        return np.fft.ifftn(np.fft.fftn(f) / self.symbol).real


def descend(
    grid: GridSpec,
    start: np.ndarray,
    project: ProjectFn,
    residual: ResidualFn,
    *,
    tol: float,
    max_iterations: int,
    initial_step: float = 1.0,
    stall_tolerance: float = 1e-15,
    stall_patience: int = 200,
    metric: H1Metric | None = None,
) -> DescentOutcome:
    """Minimize over the constraint set until the H^1 residual drops below ``tol``.

    Each iteration evaluates a trial step and a secant step whose length
    comes from the change of the gradient along the search direction
    (immune to rounding in the action, unlike an energy-based fit).  The
    better admissible candidate is kept; if neither is admissible the step
    is halved.
    """
    metric = metric or H1Metric(grid)
    u, E, st = project(np.asarray(start, dtype=float))
    r = residual(u, st)
    rr = metric.inner(r, r)
    d = -r
    step = initial_step
    energies = [E]
    stalled = 0
    best_rr = rr
    restarted = False
    it = 0
    reason = "max_iterations"

    def evaluate(tau):
        try:
            v, Ev, sv = project(u + tau * d)
        except ProjectionFailed:
            return None
        rv = residual(v, sv)
        return v, Ev, sv, rv, metric.inner(rv, rv), tau

    while it < max_iterations:
        if np.sqrt(max(rr, 0.0)) <= tol:
            reason = "converged"
            break
        slope = metric.inner(r, d)
        if not slope < 0:
            d, slope = -r, -rr
        noise = 8e-16 * abs(E) + 1e-300
        best = None
        tau = step
        for _ in range(60):
            cands = []
            first = evaluate(tau)
            if first is not None:
                cands.append(first)
                curv = metric.inner(d, first[3] - r) / tau
                if curv > 0:
                    secant = evaluate(min(-slope / curv, 4.0 * tau))
                    if secant is not None:
                        cands.append(secant)
            ok = [c for c in cands if c[1] <= E + noise]
            if ok:
                resolved = [c for c in ok if c[1] < E - 16 * noise]
                if resolved:
                    best = min(resolved, key=lambda c: c[1])
                else:
                    # action flat to rounding: rank by residual instead
                    shrinking = [c for c in ok if c[4] < rr]
                    best = min(shrinking, key=lambda c: c[4]) if shrinking else None
            if best is not None:
                break
            tau *= 0.5
        it += 1
        if best is None:
            if not restarted:
                # retry once along the plain gradient before giving up
                d, restarted = -r, True
                continue
            reason = "stalled"
            break
        restarted = False
        v, Ev, sv, rv, rvv, tau = best
        drop = E - Ev
        beta = max(0.0, metric.inner(rv, rv - r) / rr) if rr > 0 else 0.0
        d = -rv + beta * d
        progress = drop > stall_tolerance * abs(E) or rvv < 0.98 * best_rr
        best_rr = min(best_rr, rvv)
        u, E, st, r, rr = v, Ev, sv, rv, rvv
        energies.append(E)
        stalled = 0 if progress else stalled + 1
        if stalled >= stall_patience and np.sqrt(rr) > tol:
            reason = "stalled"
            break
        step = min(tau * 1.5, 1e3)
    rn = float(np.sqrt(max(rr, 0.0)))
    converged = rn <= tol
    if converged:
        reason = "converged"
    log.debug("descent stopped after %d iterations (%s), residual %.3e", it, reason, rn)
    return DescentOutcome(u, E, rn, it, converged, st, energies, reason)
