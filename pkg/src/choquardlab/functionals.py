"""Action functionals, their Sobolev gradients and Nehari-type projections.

Three functionals share the quadratic part ``1/2 ||u||_{H^1}^2``:

* the Choquard action ``J(u) = 1/2 ||u||^2 - 1/(2p) int (I_alpha * |u|^p) |u|^p``,
* the local NLS action ``Phi_q(u) = 1/2 ||u||^2 - 1/q int |u|^q``,
* the nonlocal-coefficient action ``Psi_{p,mu}(u) = 1/2 ||u||^2 - mu/(2p) (int |u|^p)^2``.

Residuals are H^1 gradients: ``u - (-Laplacian + 1)^{-1} N(u)`` where ``N`` is
the nonlinearity, so that ``h1_inner(residual, v)`` is the directional
derivative of the action.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, apply_h1_inverse, h1_inner, integrate, negative_part, positive_part
from .riesz import RieszKernelSpec, convolve_values, default_rule


class NehariError(ArithmeticError):
    """A Nehari-type projection is undefined or failed to converge."""


@dataclass(frozen=True)
class ChoquardParams:
    dimension: int
    p: float
    alpha: float
    normalized: bool = True
    rule: str | None = None

    def __post_init__(self):
        N, p, a = self.dimension, self.p, self.alpha
        if N not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {N}")
        if not 0.0 < a < N:
            raise ValueError(f"alpha must lie in (0, {N}), got {a}")
        if p < 2:
            raise ValueError(f"p must be >= 2, got {p}")
        if not (N - 2) / (N + a) < 1.0 / p < N / (N + a):
            raise ValueError(
                f"(N, p, alpha) = ({N}, {p}, {a}) is outside the existence range "
                "(N-2)/(N+alpha) < 1/p < N/(N+alpha)"
            )

    @property
    def kernel(self) -> RieszKernelSpec:
        return RieszKernelSpec(self.dimension, self.alpha, self.normalized)

    @property
    def singular_rule(self) -> str:
        return default_rule(self.dimension) if self.rule is None else self.rule

    def convolve(self, values: np.ndarray, grid) -> np.ndarray:
        return convolve_values(values, grid, self.kernel, self.singular_rule)


def signed_power(values: np.ndarray, exponent: float) -> np.ndarray:
    """``|v|^(exponent-1) v`` i.e. ``|v|^(q-2) v`` for ``exponent = q-1``; zero stays zero."""
    if exponent == 1:
        return values.copy()
    return np.sign(values) * np.abs(values) ** exponent


# --- Choquard ----------------------------------------------------------------


def action_choquard(u: Field, params: ChoquardParams) -> float:
    f = np.abs(u.values) ** params.p
    conv = params.convolve(f, u.grid)
    D = u.grid.cell_volume * np.sum(conv * f)
    return 0.5 * h1_inner(u, u) - D / (2 * params.p)


def choquard_nonlinearity(u: Field, params: ChoquardParams) -> Field:
    """``(I_alpha * |u|^p) |u|^(p-2) u``."""
    f = np.abs(u.values) ** params.p
    conv = params.convolve(f, u.grid)
    return Field(u.grid, conv * signed_power(u.values, params.p - 1))


def residual_choquard(u: Field, params: ChoquardParams) -> Field:
    return u - apply_h1_inverse(choquard_nonlinearity(u, params))


# --- local NLS -----------------------------------------------------------------


def action_nls(u: Field, q: float) -> float:
    return 0.5 * h1_inner(u, u) - integrate(u.abs_pow(q)) / q


def residual_nls(u: Field, q: float) -> Field:
    return u - apply_h1_inverse(Field(u.grid, signed_power(u.values, q - 1)))


# --- nonlocal-coefficient NLS ------------------------------------------------------


def action_nlsN(u: Field, p: float, mu: float) -> float:
    m = integrate(u.abs_pow(p))
    return 0.5 * h1_inner(u, u) - mu * m * m / (2 * p)


def residual_nlsN(u: Field, p: float, mu: float) -> Field:
    m = integrate(u.abs_pow(p))
    return u - apply_h1_inverse(Field(u.grid, mu * m * signed_power(u.values, p - 1)))


# --- Nehari projections ------------------------------------------------------------


def _power_scale(a: float, b: float, exponent: float) -> float:
    """Positive root ``t`` of ``t^exponent = a / b``."""
    if not (a > 0 and b > 0):
        raise NehariError("Nehari scale undefined for a vanishing field")
    return float((a / b) ** (1.0 / exponent))


def nehari_scale(u: Field, params: ChoquardParams) -> float:
    """Scalar ``t`` putting ``t u`` on the Nehari manifold of ``J``."""
    a = h1_inner(u, u)
    f = np.abs(u.values) ** params.p
    D = u.grid.cell_volume * np.sum(params.convolve(f, u.grid) * f)
    t = _power_scale(a, D, 2 * params.p - 2)
    defect = t * t * a - t ** (2 * params.p) * D
    if abs(defect) > 1e-9 * t * t * a:
        raise NehariError(f"Nehari projection left a defect of {defect:g}")
    return t


def nehari_scale_nls(u: Field, q: float) -> float:
    a = h1_inner(u, u)
    b = integrate(u.abs_pow(q))
    return _power_scale(a, b, q - 2)


def nehari_scale_psi(u: Field, p: float, mu: float) -> float:
    """``t`` with ``t^(2p-2) = ||u||^2 / (mu (int |u|^p)^2)``."""
    a = h1_inner(u, u)
    m = integrate(u.abs_pow(p))
    t = _power_scale(a, mu * m * m, 2 * p - 2)
    defect = t * t * a - mu * t ** (2 * p) * m * m
    if abs(defect) > 1e-9 * t * t * a:
        raise NehariError(f"Nehari projection left a defect of {defect:g}")
    return t


@dataclass(frozen=True)
class NodalScales:
    t: float
    s: float
    defect_plus: float
    defect_minus: float
    energy: float = float("nan")
    iterations: int = 0


@dataclass(frozen=True)
class NodalPieces:
    """Quadratic and Riesz pairings of the sign parts of a field.

    ``cross_h1`` is the discrete H^1 pairing of ``u+`` with ``u-``; it
    vanishes for the continuous problem but not under spectral
    differentiation, so it is carried along to keep the expansion exact.
    """

    a_plus: float
    a_minus: float
    cross_h1: float
    b_pp: float
    b_pm: float
    b_mm: float
    p: float


def nodal_pieces(u: Field, params: ChoquardParams) -> tuple[NodalPieces, np.ndarray, np.ndarray]:
    """Pairings of the sign parts plus the two convolutions ``I * |u+-|^p``."""
    up, um = positive_part(u), negative_part(u)
    fp = np.abs(up.values) ** params.p
    fm = np.abs(um.values) ** params.p
    cp = params.convolve(fp, u.grid)
    cm = params.convolve(fm, u.grid)
    dv = u.grid.cell_volume
    b_pm = 0.5 * dv * (np.sum(cp * fm) + np.sum(cm * fp))
    pieces = NodalPieces(
        a_plus=h1_inner(up, up),
        a_minus=h1_inner(um, um),
        cross_h1=h1_inner(up, um),
        b_pp=dv * np.sum(cp * fp),
        b_pm=b_pm,
        b_mm=dv * np.sum(cm * fm),
        p=params.p,
    )
    return pieces, cp, cm


def nodal_objective(pc: NodalPieces, tau: float, sigma: float) -> float:
    """``J(tau^(1/p) u+ + sigma^(1/p) u-)`` from the precomputed pairings."""
    p = pc.p
    t, s = tau ** (1 / p), sigma ** (1 / p)
    quad = 0.5 * (t * t * pc.a_plus + 2 * t * s * pc.cross_h1 + s * s * pc.a_minus)
    riesz = tau * tau * pc.b_pp + 2 * tau * sigma * pc.b_pm + sigma * sigma * pc.b_mm
    return quad - riesz / (2 * p)


def _nodal_defects(pc: NodalPieces, tau: float, sigma: float) -> tuple[float, float]:
    p = pc.p
    t, s = tau ** (1 / p), sigma ** (1 / p)
    dp = t * t * pc.a_plus + t * s * pc.cross_h1 - tau * (tau * pc.b_pp + sigma * pc.b_pm)
    dm = s * s * pc.a_minus + t * s * pc.cross_h1 - sigma * (sigma * pc.b_mm + tau * pc.b_pm)
    return dp, dm


def maximize_nodal(pc: NodalPieces, tol: float = 1e-12, max_iterations: int = 100) -> NodalScales:
    """Damped Newton ascent of the concave two-variable expansion."""
    if pc.a_plus <= 0 or pc.a_minus <= 0 or pc.b_pp <= 0 or pc.b_mm <= 0:
        raise NehariError("a sign part vanishes; the nodal projection is undefined")
    p = pc.p
    e = p / (2 * p - 2)
    # decoupled start (cross pairings treated as zero)
    tau, sigma = (pc.a_plus / pc.b_pp) ** e, (pc.a_minus / pc.b_mm) ** e
    F = nodal_objective(pc, tau, sigma)
    for it in range(max_iterations + 1):
        dp, dm = _nodal_defects(pc, tau, sigma)
        t, s = tau ** (1 / p), sigma ** (1 / p)
        if abs(dp) <= tol * t * t * pc.a_plus and abs(dm) <= tol * s * s * pc.a_minus:
            return NodalScales(float(t), float(s), float(dp), float(dm), float(F), it)
        if it == max_iterations:
            break
        # gradient: dF/dtau = defect_plus / (p tau)
        g = np.array([dp / (p * tau), dm / (p * sigma)])
        c = pc.cross_h1
        h_tt = (1 / p) * (2 / p - 1) * tau ** (2 / p - 2) * pc.a_plus - pc.b_pp / p
        h_ss = (1 / p) * (2 / p - 1) * sigma ** (2 / p - 2) * pc.a_minus - pc.b_mm / p
        h_tt += c * (1 / p) * (1 / p - 1) * tau ** (1 / p - 2) * sigma ** (1 / p)
        h_ss += c * (1 / p) * (1 / p - 1) * sigma ** (1 / p - 2) * tau ** (1 / p)
        h_ts = c / p**2 * (tau * sigma) ** (1 / p - 1) - pc.b_pm / p
        H = np.array([[h_tt, h_ts], [h_ts, h_ss]])
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = g
        if g @ step <= 0:
            # not an ascent direction; fall back to a scaled gradient step
            step = g * (max(tau, sigma) / max(np.linalg.norm(g), 1e-300))
        lam = 1.0
        for _ in range(61):
            nt, ns = tau + lam * step[0], sigma + lam * step[1]
            if nt > 0 and ns > 0:
                Fn = nodal_objective(pc, nt, ns)
                if Fn >= F - 1e-15 * abs(F):
                    break
            lam *= 0.5
        else:
            raise NehariError("nodal Newton iteration could not increase the objective")
        tau, sigma, F = nt, ns, Fn
    raise NehariError(f"nodal Newton iteration did not converge in {max_iterations} steps")


def nodal_scales(u: Field, params: ChoquardParams, tol: float = 1e-12) -> NodalScales:
    """Scales ``(t, s)`` such that ``t u+ + s u-`` lies on the Nehari nodal set."""
    pc, _, _ = nodal_pieces(u, params)
    return maximize_nodal(pc, tol)


def nehari_nodal_defects(u: Field, params: ChoquardParams) -> tuple[float, float]:
    """``(<J'(u), u+>, <J'(u), u->)``; a vanishing sign part gives 0."""
    pc, _, _ = nodal_pieces(u, params)
    dp = pc.a_plus + pc.cross_h1 - (pc.b_pp + pc.b_pm)
    dm = pc.a_minus + pc.cross_h1 - (pc.b_mm + pc.b_pm)
    return float(dp), float(dm)


def nehari_defect(u: Field, params: ChoquardParams) -> float:
    """``<J'(u), u> = ||u||^2 - D(u)``."""
    f = np.abs(u.values) ** params.p
    D = u.grid.cell_volume * np.sum(params.convolve(f, u.grid) * f)
    return float(h1_inner(u, u) - D)
