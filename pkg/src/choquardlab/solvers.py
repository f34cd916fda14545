"""Groundstate and least-energy nodal solvers, two-bump fits and symmetry defects."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .descent import H1Metric, ProjectionFailed, descend
from .functionals import (
    ChoquardParams,
    NehariError,
    NodalPieces,
    maximize_nodal,
    nehari_defect,
    nehari_nodal_defects,
    signed_power,
)
from .grid import Field, boundary_mass, h1_norm, reflect_axis1, translate


class SolverError(RuntimeError):
    pass


class CollapseError(SolverError):
    """An iterate (or one of its sign parts) vanished."""


class MaxIterationsError(SolverError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 20000
    initial_step: float = 1.0
    residual_tolerance: float = 1e-8
    energy_stall_tolerance: float = 1e-15
    seed: int = 0

    def __post_init__(self):
        if self.residual_tolerance <= 0 or self.energy_stall_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1 or self.initial_step <= 0:
            raise ValueError("max_iterations and initial_step must be positive")


@dataclass(frozen=True)
class SolveResult:
    field: Field
    energy: float
    residual_h1: float
    iterations: int
    nehari_defects: tuple
    boundary_mass: float
    converged: bool = True
    stop_reason: str = "converged"
    energies: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class BumpFit:
    xi_plus: np.ndarray
    xi_minus: np.ndarray
    fit_error_h1: float
    separation: float


# --- projections ----------------------------------------------------------------


def _groundstate_problem(params: ChoquardParams, grid, metric: H1Metric):
    p = params.p
    dv = grid.cell_volume
    factor = 0.5 - 1 / (2 * p)

    def project(w):
        f = np.abs(w) ** p
        conv = params.convolve(f, grid)
        a = metric.inner(w, w)
        D = dv * np.sum(conv * f)
        if not (a > 0 and D > 0):
            raise ProjectionFailed("iterate vanished")
        t = (a / D) ** (1 / (2 * p - 2))
        return t * w, factor * t * t * a, t**p * conv

    def residual(u, conv):
        return u - metric.solve(conv * signed_power(u, p - 1))

    return project, residual


def _nodal_problem(params: ChoquardParams, grid, metric: H1Metric):
    p = params.p
    dv = grid.cell_volume

    def project(w):
        wp, wm = np.maximum(w, 0.0), np.minimum(w, 0.0)
        if not (np.any(wp > 0) and np.any(wm < 0)):
            raise ProjectionFailed("a sign part vanished")
        fp, fm = wp**p, (-wm) ** p
        cp, cm = params.convolve(fp, grid), params.convolve(fm, grid)
        pc = NodalPieces(
            a_plus=metric.inner(wp, wp),
            a_minus=metric.inner(wm, wm),
            cross_h1=metric.inner(wp, wm),
            b_pp=dv * np.sum(cp * fp),
            b_pm=0.5 * dv * (np.sum(cp * fm) + np.sum(cm * fp)),
            b_mm=dv * np.sum(cm * fm),
            p=p,
        )
        try:
            sc = maximize_nodal(pc)
        except NehariError as exc:
            raise ProjectionFailed(str(exc)) from exc
        u = sc.t * wp + sc.s * wm
        return u, sc.energy, (sc.t**p * cp + sc.s**p * cm, sc)

    def residual(u, state):
        return u - metric.solve(state[0] * signed_power(u, p - 1))

    return project, residual


# --- solvers ----------------------------------------------------------------------


def _finish(u: Field, out, defects, config: SolverConfig) -> SolveResult:
    if out.stop_reason == "max_iterations" and not out.converged:
        raise MaxIterationsError(
            f"no convergence after {out.iterations} iterations (residual {out.residual_h1:.3e})"
        )
    return SolveResult(
        field=u,
        energy=float(out.energy),
        residual_h1=float(out.residual_h1),
        iterations=out.iterations,
        nehari_defects=tuple(float(d) for d in defects),
        boundary_mass=boundary_mass(u),
        converged=out.converged,
        stop_reason=out.stop_reason,
        energies=tuple(out.energies),
    )


def solve_groundstate(params: ChoquardParams, init: Field, config: SolverConfig = SolverConfig()) -> SolveResult:
    """Minimize the action on the Nehari manifold starting from ``init``.

    Stalling before the residual tolerance is reported through
    ``converged=False``; exhausting the iteration budget raises.
    """
    grid = init.grid
    if grid.dimension != params.dimension:
        raise ValueError("grid dimension does not match params")
    if not np.any(init.values != 0):
        raise CollapseError("initial field is zero")
    metric = H1Metric(grid)
    project, residual = _groundstate_problem(params, grid, metric)
    try:
        out = descend(
            grid, init.values, project, residual,
            tol=config.residual_tolerance, max_iterations=config.max_iterations,
            initial_step=config.initial_step, stall_tolerance=config.energy_stall_tolerance, metric=metric,
        )
    except ProjectionFailed as exc:
        raise CollapseError(str(exc)) from exc
    v = out.values
    if v.max() < -v.min():
        v = -v
    u = Field(grid, v)
    return _finish(u, out, (nehari_defect(u, params),), config)


def solve_nodal(params: ChoquardParams, init: Field, config: SolverConfig = SolverConfig()) -> SolveResult:
    """Minimize the action on the Nehari nodal set starting from ``init``.

    The result is oriented so that the positive bump has the smaller
    axis-1 centre of mass.
    """
    grid = init.grid
    if grid.dimension != params.dimension:
        raise ValueError("grid dimension does not match params")
    has_plus, has_minus = bool(np.any(init.values > 0)), bool(np.any(init.values < 0))
    if not (has_plus and has_minus):
        which = "positive" if not has_plus else "negative"
        raise CollapseError(f"the {which} part of the initial field vanishes")
    metric = H1Metric(grid)
    project, residual = _nodal_problem(params, grid, metric)
    try:
        out = descend(
            grid, init.values, project, residual,
            tol=config.residual_tolerance, max_iterations=config.max_iterations,
            initial_step=config.initial_step, stall_tolerance=config.energy_stall_tolerance, metric=metric,
        )
    except ProjectionFailed as exc:
        raise CollapseError(f"initial projection failed: {exc}") from exc
    v = out.values
    x1 = grid.coordinates()[0]
    plus, minus = np.maximum(v, 0) ** 2, np.minimum(v, 0) ** 2
    if np.sum(x1 * plus) / np.sum(plus) > np.sum(x1 * minus) / np.sum(minus):
        v = -v
    u = Field(grid, v)
    return _finish(u, out, nehari_nodal_defects(u, params), config)


def two_bump_init(W: Field, separation: float = 8.0, offset=None) -> Field:
    """``W(. + d/2) - W(. - d/2)`` along axis 1, optionally shifted by ``offset``."""
    grid = W.grid
    e1 = np.zeros(grid.dimension)
    e1[0] = 0.5 * separation
    u = translate(W, -e1) - translate(W, e1)
    if offset is not None:
        u = translate(u, offset)
    return u


def random_offsets(seed: int, count: int, dimension: int, scale: float) -> list:
    """Seeded translation offsets for restart initializations."""
    rng = np.random.default_rng(seed)
    return [rng.uniform(-scale, scale, size=dimension) for _ in range(count)]


# --- two-bump fit ------------------------------------------------------------------


def _peak_location(corr: np.ndarray, grid) -> np.ndarray:
    """Sub-cell location of the maximum of a periodic cross-correlation."""
    idx = np.unravel_index(int(np.argmax(corr)), corr.shape)
    h = grid.spacing
    n = grid.points_per_axis
    loc = np.empty(grid.dimension)
    for ax in range(grid.dimension):
        i = idx[ax]
        lo = list(idx)
        hi = list(idx)
        lo[ax] = (i - 1) % n
        hi[ax] = (i + 1) % n
        fm, f0, fp = corr[tuple(lo)], corr[idx], corr[tuple(hi)]
        denom = fm - 2 * f0 + fp
        frac = 0.5 * (fm - fp) / denom if denom < 0 else 0.0
        k = i if i < n // 2 else i - n
        loc[ax] = (k + frac) * h
    return loc


def _correlate(u: np.ndarray, W: Field) -> np.ndarray:
    """``c(s) = sum_x u(x) W(x - s)`` over periodic shifts ``s``."""
    return np.fft.ifftn(np.fft.fftn(u) * np.conj(np.fft.fftn(W.values))).real


def fit_two_bumps(u: Field, W: Field, tol: float = 1e-10, max_sweeps: int = 200) -> BumpFit:
    """Fit ``W(. - xi+) - W(. - xi-)`` to ``u`` in the H^1 norm.

    ``W`` must be centred at the origin of the grid.  Start values come
    from the peaks of the spectral cross-correlations of ``u+`` and
    ``-u-`` with ``W``; coordinate descent with spectral translations
    refines them.
    """
    grid = u.grid
    if W.grid != grid:
        raise ValueError("u and W must share a grid")
    up = np.maximum(u.values, 0.0)
    um = -np.minimum(u.values, 0.0)
    if up.max() <= 0 or um.max() <= 0:
        raise ValueError("fewer than two bumps detected: u does not change sign")
    xi_p = _peak_location(_correlate(up, W), grid)
    xi_m = _peak_location(_correlate(um, W), grid)
    ref = h1_norm(u)
    if ref == 0:
        raise ValueError("cannot fit a zero field")
    Wh = np.fft.fftn(W.values)
    xi = grid.frequencies()
    metric = H1Metric(grid)
    uh = np.fft.fftn(u.values)

    def phase(shift):
        ph = np.ones(grid.shape, dtype=complex)
        for ax in range(grid.dimension):
            shp = [1] * grid.dimension
            shp[ax] = grid.points_per_axis
            ph = ph * np.exp(-2j * np.pi * xi * shift[ax]).reshape(shp)
        return ph

    def error(a, b):
        diff = uh - Wh * (phase(a) - phase(b))
        return float(np.sqrt(max(metric.scale * np.sum(metric.symbol * np.abs(diff) ** 2), 0.0)))

    current = error(xi_p, xi_m)
    h = grid.spacing
    for _ in range(max_sweeps):
        before = current
        for which in (0, 1):
            for ax in range(grid.dimension):
                base = (xi_p if which == 0 else xi_m).copy()

                def f(x, base=base, ax=ax, which=which):
                    base[ax] = x
                    return error(base, xi_m) if which == 0 else error(xi_p, base)

                c = base[ax]
                res = minimize_scalar(f, bounds=(c - 2 * h, c + 2 * h), method="bounded",
                                      options={"xatol": 1e-12})
                if res.fun < current:
                    target = xi_p if which == 0 else xi_m
                    target[ax] = res.x
                    current = float(res.fun)
        if before - current < tol * ref:
            break
    return BumpFit(xi_p, xi_m, current / ref, float(np.linalg.norm(xi_p - xi_m)))


# --- symmetry defect -------------------------------------------------------------------


@dataclass(frozen=True)
class SymmetryDefect:
    value: float
    scan_minimum: float
    midpoint: float
    best_midpoint: float


def _odd_defect(u: Field, m: float, ref: float) -> float:
    return h1_norm(u + reflect_axis1(u, 2 * m)) / ref


def symmetry_defect(u: Field, W: Field | None = None, fit: BumpFit | None = None, scan_points: int = 9) -> SymmetryDefect:
    """Relative H^1 distance of ``u`` from oddness about its bump midplane.

    The midplane ``x_1 = m`` comes from a two-bump fit (against ``W`` or
    a supplied ``fit``); ``scan_minimum`` also minimizes over
    ``m +- 2h`` to absorb fit error.
    """
    if fit is None:
        if W is None:
            raise ValueError("need a reference profile or a bump fit")
        fit = fit_two_bumps(u, W)
    ref = h1_norm(u)
    m = 0.5 * float(fit.xi_plus[0] + fit.xi_minus[0])
    value = _odd_defect(u, m, ref)
    h = u.grid.spacing
    res = minimize_scalar(lambda c: _odd_defect(u, c, ref), bounds=(m - 2 * h, m + 2 * h),
                          method="bounded", options={"xatol": 1e-10})
    grid_vals = [(_odd_defect(u, c, ref), c) for c in np.linspace(m - 2 * h, m + 2 * h, scan_points)]
    best, best_m = min(grid_vals + [(value, m), (float(res.fun), float(res.x))])
    return SymmetryDefect(float(value), float(best), m, float(best_m))


def reflection_defect(u: Field, center: Sequence[float] | float = 0.0) -> float:
    """Relative H^1 distance of ``u`` from evenness about ``x_1 = center``."""
    c = float(np.atleast_1d(center)[0])
    return h1_norm(u - reflect_axis1(u, 2 * c)) / h1_norm(u)
