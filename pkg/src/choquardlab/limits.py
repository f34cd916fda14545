"""Limit problems: the NLS groundstate, its rescaled nonlocal variant and their levels.

For ``alpha -> 0`` the Choquard problem degenerates to ``-u'' + u = |u|^(q-2) u``
with ``q = 2p``; for ``alpha -> N`` (unnormalized kernel) it degenerates to
``-u'' + u = mu (int |u|^p) |u|^(p-2) u``, whose solutions are rescaled NLS
solutions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.sparse.linalg import LinearOperator, cg, eigsh
from scipy.special import gammaln, kv

from .descent import H1Metric, ProjectionFailed, descend
from .grid import Field, GridSpec, h1_inner, integrate
from .functionals import action_nls, residual_nls, signed_power


class ShootingError(RuntimeError):
    pass


class SpectrumError(RuntimeError):
    pass


def _check_subcritical(N: int, q: float) -> None:
    if N not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {N}")
    upper = np.inf if N <= 2 else 2 * N / (N - 2)
    if not 2 < q < upper:
        raise ValueError(f"q = {q} is not in the subcritical range (2, {upper}) for N = {N}")


@dataclass(frozen=True)
class RadialProfile:
    radii: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    decay_rate: float
    center_value: float
    tail_radius: float

    @cached_property
    def _spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.radii, self.values, self.slopes, extrapolate=False)

    def __call__(self, r) -> np.ndarray:
        """Hermite-cubic interpolation in ``|r|``; zero beyond the sampled range."""
        out = self._spline(np.abs(r))
        return np.nan_to_num(out, nan=0.0)


def closed_form_1d(q: float, x: np.ndarray) -> np.ndarray:
    k = q - 2
    return (q / 2) ** (1 / k) / np.cosh(k * x / 2) ** (2 / k)


def _tail(N: int, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decaying radial solution of ``-u'' - (N-1)u'/r + u = 0`` and its derivative."""
    nu = 0.5 * (N - 2)
    if N == 1:
        return np.exp(-r), -np.exp(-r)
    return r ** (-nu) * kv(nu, r), -(r ** (-nu)) * kv(nu + 1, r)


def shoot_radial_profile(N: int, q: float, r_max: float = 40.0, samples: int = 8001) -> RadialProfile:
    """Positive radial groundstate of ``-Laplacian u + u = u^(q-1)`` by shooting on ``u(0)``.

    Bisection separates initial values whose trajectory crosses zero (too
    large) from those that turn back up (too small).  Once the two
    bracketing trajectories separate, the profile is continued by the
    exact solution of the linearized tail equation.
    """
    _check_subcritical(N, q)
    r0 = 1e-6

    def rhs(r, y):
        u, du = y
        return [du, -(N - 1) / r * du + u - signed_power(np.array(u), q - 1)]

    def crossed(r, y):
        return y[0]

    def turned(r, y):
        return y[1]

    crossed.terminal = turned.terminal = True
    crossed.direction = -1
    turned.direction = 1

    def run(u0, dense=False):
        c2 = (u0 - u0 ** (q - 1)) / N  # u''(0)
        y0 = [u0 + 0.5 * c2 * r0 * r0, c2 * r0]
        return solve_ivp(
            rhs, (r0, r_max), y0, method="RK45", rtol=1e-12, atol=1e-15,
            events=(crossed, turned), dense_output=dense,
        )

    def outcome(sol):
        if sol.t_events[0].size:
            return +1
        if sol.t_events[1].size:
            return -1
        return 0

    lo = 1.0 + 1e-9
    hi = None
    u0 = lo
    for _ in range(200):
        u0 *= 1.05
        if outcome(run(u0)) > 0:
            hi = u0
            break
        lo = u0
    if hi is None:
        raise ShootingError(f"no shooting bracket found for N={N}, q={q}")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if outcome(run(mid)) > 0:
            hi = mid
        else:
            lo = mid
    low, high = run(lo, dense=True), run(hi, dense=True)
    stop = min(low.t[-1], high.t[-1])
    r = np.linspace(0.0, r_max, samples)
    inside = r <= stop
    yl = low.sol(np.maximum(r[inside], r0))
    yh = high.sol(np.maximum(r[inside], r0))
    ul, uh = yl[0], yh[0]
    # cut where the bracketing trajectories visibly disagree
    split = np.abs(ul - uh) > 1e-6 * np.abs(ul) + 1e-300
    split |= ul < 1e-9
    cut = int(np.argmax(split)) if np.any(split) else int(np.count_nonzero(inside))
    cut = max(cut - 1, 2)
    values = np.empty_like(r)
    slopes = np.empty_like(r)
    values[:cut] = 0.5 * (ul[:cut] + uh[:cut])
    slopes[:cut] = 0.5 * (yl[1][:cut] + yh[1][:cut])
    slopes[0] = 0.0
    rc = r[cut - 1]
    tail, dtail = _tail(N, r[cut:])
    scale = values[cut - 1] / _tail(N, np.array([rc]))[0][0]
    values[cut:] = scale * tail
    slopes[cut:] = scale * dtail
    # fitted decay of r^{(N-1)/2} u over the last decade before the cut
    window = (r > 0.6 * rc) & (r <= rc)
    slope = np.polyfit(r[window], np.log(values[window] * r[window] ** (0.5 * (N - 1))), 1)[0]
    return RadialProfile(r, values, slopes, float(-slope), float(values[0]), float(rc))


def _polish_nls(u: Field, q: float, tol: float, max_iterations: int = 2000) -> Field:
    grid = u.grid
    metric = H1Metric(grid)
    dv = grid.cell_volume
    factor = 0.5 - 1.0 / q

    def project(w):
        a = metric.inner(w, w)
        b = dv * np.sum(np.abs(w) ** q)
        if not (a > 0 and b > 0):
            raise ProjectionFailed("vanishing iterate")
        t = (a / b) ** (1 / (q - 2))
        return t * w, factor * t * t * a, None

    def residual(v, _):
        return v - metric.solve(signed_power(v, q - 1))

    out = descend(grid, u.values, project, residual, tol=tol, max_iterations=max_iterations, metric=metric)
    return Field(grid, out.values)


def nls_groundstate(N: int, q: float, grid: GridSpec, tol: float = 1e-9) -> Field:
    """Positive NLS groundstate centred at the origin of ``grid``."""
    _check_subcritical(N, q)
    if grid.dimension != N:
        raise ValueError("grid dimension does not match N")
    if N == 1:
        return Field(grid, closed_form_1d(q, grid.axis()))
    profile = shoot_radial_profile(N, q)
    u = Field(grid, profile(grid.radius()))
    return _polish_nls(u, q, tol)


def gamma_level_closed_form(q: float) -> float:
    """``gamma_q`` for ``N = 1`` from exact sech integrals."""
    k = q - 2
    a = 4 / k  # int U^2 = A^2 int sech^a(kx/2)
    amp2 = (q / 2) ** (2 / k)

    def sech_int(e):
        # int sech^e(b x) dx with b = k/2
        return np.exp(0.5 * np.log(np.pi) + gammaln(e / 2) - gammaln((e + 1) / 2)) / (k / 2)

    l2 = amp2 * sech_int(a)
    # U'^2 = amp2 (2/k)^2 (k/2)^2 sech^a tanh^2 = amp2 (sech^a - sech^(a+2))
    grad2 = amp2 * (sech_int(a) - sech_int(a + 2))
    return float((0.5 - 1 / q) * (l2 + grad2))


def gamma_level(N: int, q: float, grid: GridSpec | None = None) -> float:
    """Groundstate level ``gamma_q = Phi_q(U)``.

    In one dimension the exact value is returned unless ``grid`` is given,
    in which case the level of the sampled groundstate is computed.
    """
    _check_subcritical(N, q)
    if grid is None:
        if N == 1:
            return gamma_level_closed_form(q)
        grid = GridSpec(N, 20.0, 128 if N == 2 else 64)
    U = nls_groundstate(N, q, grid)
    return float((0.5 - 1 / q) * h1_inner(U, U))


def kappa_level(N: int, p: float, mu: float, gamma: float | None = None) -> float:
    """``kappa_{p,mu}`` from ``gamma_p``; for ``p = 2`` it is ``1 / (4 mu)``."""
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if mu <= 0:
        raise ValueError("mu must be positive")
    lead = (0.5 - 1 / (2 * p)) / mu ** (1 / (p - 1))
    if p == 2:
        return float(lead)
    g = gamma_level(N, p) if gamma is None else gamma
    return float(lead * (g / (0.5 - 1 / p)) ** ((p - 2) / (p - 1)))


def scale_to_psi(u: Field, p: float, mu: float) -> Field:
    """Map an NLS solution with exponent ``p`` to a solution of the ``Psi_{p,mu}`` problem."""
    m = integrate(u.abs_pow(p))
    return u * (1.0 / (mu * m) ** (1 / (2 * p - 2)))


def limit_groundstate_V(N: int, p: float, mu: float, grid: GridSpec) -> Field:
    if p <= 2:
        raise ValueError("the rescaled limit groundstate needs p > 2")
    return scale_to_psi(nls_groundstate(N, p, grid), p, mu)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, flattened fields


def nondegeneracy_spectrum(U: Field, q: float, k: int = 3, *, return_vectors: bool = False, tol: float = 1e-10):
    """Lowest ``k`` eigenvalues of ``-Laplacian + 1 - (q-1) U^(q-2)``.

    Shift-invert Lanczos (ARPACK); the shifted solves use conjugate
    gradients preconditioned by ``(-Laplacian + c)^{-1}``.
    """
    grid = U.grid
    n = grid.size
    symbol = 1.0 + 4.0 * np.pi**2 * grid.frequency_norm2()
    V = (q - 1) * np.abs(U.values) ** (q - 2)
    vmax = float(V.max())
    sigma = -vmax - 1.0
    shape = grid.shape

    def apply(x, shift=0.0):
        x = x.reshape(shape)
        lap = np.fft.ifftn(symbol * np.fft.fftn(x)).real
        return (lap - V * x - shift * x).reshape(-1)

    A = LinearOperator((n, n), matvec=apply, dtype=float)
    shifted = LinearOperator((n, n), matvec=lambda x: apply(x, sigma), dtype=float)
    pre_symbol = symbol + 0.5 * vmax + 1.0
    M = LinearOperator(
        (n, n),
        matvec=lambda x: np.fft.ifftn(np.fft.fftn(x.reshape(shape)) / pre_symbol).real.reshape(-1),
        dtype=float,
    )
    failures = []

    def solve(b):
        x, info = cg(shifted, b, rtol=1e-13, atol=0.0, maxiter=2000, M=M)
        if info != 0:
            failures.append(info)
        return x

    OPinv = LinearOperator((n, n), matvec=solve, dtype=float)
    rng = np.random.default_rng(0)
    v0 = rng.standard_normal(n)
    try:
        vals, vecs = eigsh(A, k=k, sigma=sigma, which="LM", OPinv=OPinv, tol=tol, v0=v0, maxiter=5000)
    except Exception as exc:  # ARPACK reports non-convergence through several exception types
        raise SpectrumError(f"eigenvalue iteration failed: {exc}") from exc
    if failures:
        raise SpectrumError("inner conjugate-gradient solves did not converge")
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    if return_vectors:
        return Spectrum(vals, vecs)
    return vals


def kernel_alignment(U: Field, vector: np.ndarray, axis: int = 0) -> float:
    """|cosine| between ``vector`` and the derivative of ``U`` along ``axis``."""
    from .grid import gradient

    g = gradient(U, axis).flat
    return float(abs(np.dot(g, vector)) / (np.linalg.norm(g) * np.linalg.norm(vector)))
