"""Numerical checks of the Riesz-potential estimates used in the limits alpha -> 0 and alpha -> N.

Each check returns a record carrying both sides of the inequality (or the
raw quantity and its comparison scale) so a failure can be audited.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .grid import Field, h1_inner, integrate, l2_inner, translate
from .riesz import (
    RieszKernelSpec,
    convolve_values,
    cross_riesz_energy,
    riesz_convolve,
    riesz_energy,
    shifted_cross_energy,
)


class _Record:
    def to_dict(self) -> dict:
        return asdict(self)


def _spectral_norm(f: Field, weight: np.ndarray) -> float:
    grid = f.grid
    fh = np.fft.fftn(f.values)
    return float(np.sqrt(grid.cell_volume / grid.size * np.sum(weight * np.abs(fh) ** 2)))


def fractional_laplacian_norm(f: Field, s: float) -> float:
    """``||(-Laplacian)^(s/2) f||_{L^2}`` via the symbol ``(2 pi |xi|)^s``."""
    return _spectral_norm(f, (4 * np.pi**2 * f.grid.frequency_norm2()) ** s)


# --- Fourier-side bound -------------------------------------------------------------


@dataclass(frozen=True)
class FourierBound(_Record):
    alpha: float
    beta: float
    s: float
    lhs: float
    rhs: float
    riesz_term: float
    fractional_term: float
    g_norm: float
    holds: bool


def check_fourier_bound(f: Field, g: Field, alpha: float, beta: float, s: float) -> FourierBound:
    """``|int (I_a * f) g - int f g| <= (a/b ||I_b * f|| + a/s ||(-Lap)^(s/2) f||) ||g||``."""
    N = f.grid.dimension
    if not 0 < alpha <= beta < N:
        raise ValueError(f"need 0 < alpha <= beta < N, got alpha={alpha}, beta={beta}")
    if not 0 < s < N:
        raise ValueError(f"s must lie in (0, {N}), got {s}")
    lhs = abs(cross_riesz_energy(f, g, RieszKernelSpec(N, alpha)) - l2_inner(f, g))
    Ibf = convolve_values(f.values, f.grid, RieszKernelSpec(N, beta))
    riesz_term = float(np.sqrt(f.grid.cell_volume * np.sum(Ibf**2)))
    frac_term = fractional_laplacian_norm(f, s)
    g_norm = float(np.sqrt(l2_inner(g, g)))
    rhs = (alpha / beta * riesz_term + alpha / s * frac_term) * g_norm
    return FourierBound(alpha, beta, s, lhs, rhs, riesz_term, frac_term, g_norm, bool(lhs <= rhs * (1 + 1e-6)))


# --- Riesz energy error as alpha -> 0 -----------------------------------------------------


@dataclass(frozen=True)
class RieszEnergyError(_Record):
    alpha: float
    p: float
    local_energy: float
    riesz_energy: float
    error: float
    h1_power: float
    bound_ratio: float


def check_riesz_energy_error(u: Field, p: float, alpha: float) -> RieszEnergyError:
    """Compare ``D(u)`` with ``int |u|^(2p)``; ``bound_ratio = error / (alpha ||u||^(2p))``."""
    N = u.grid.dimension
    if N > 2 and not 1 / p > 1 - 2 / N:
        raise ValueError(f"p = {p} is outside the range 1/p > 1 - 2/N")
    local = integrate(u.abs_pow(2 * p))
    D = riesz_energy(u, p, RieszKernelSpec(N, alpha))
    err = abs(local - D)
    scale = h1_inner(u, u) ** p
    ratio = err / (alpha * scale) if scale > 0 else 0.0
    return RieszEnergyError(alpha, p, local, D, err, scale, ratio)


# --- oscillating negative control -------------------------------------------------------


@dataclass(frozen=True)
class OscillationRecord(_Record):
    frequency: int
    alpha: float
    error: float
    l2_norm2: float
    relative_error: float
    reference_error: float
    prediction: float
    limit: float


def check_oscillation_degradation(
    psi: Field,
    frequencies: Sequence[int],
    alpha_rule: Callable[[int], float],
    eta: float = 0.25,
) -> list[OscillationRecord]:
    """Riesz energy error of ``f_n = cos(2 pi n eta x_1) psi`` at ``alpha_n = alpha_rule(n)``.

    ``reference_error`` is the unmodulated error at the same ``alpha``;
    ``prediction`` is ``((2 pi n eta)^(-alpha) - 1) ||f_n||^2``, the value
    when the spectrum of ``psi`` is narrow compared with ``n eta``, and
    ``limit`` is ``-||f_n||^2``, reached once ``n^(-alpha_n) -> 0``.
    """
    grid = psi.grid
    N = grid.dimension
    x1 = grid.coordinates()[0]
    out = []
    for n in frequencies:
        a = float(alpha_rule(n))
        spec = RieszKernelSpec(N, a)
        f = Field(grid, np.cos(2 * np.pi * n * eta * x1) * psi.values)
        m2 = l2_inner(f, f)
        err = cross_riesz_energy(f, f, spec) - m2
        ref = cross_riesz_energy(psi, psi, spec) - l2_inner(psi, psi)
        pred = ((2 * np.pi * n * abs(eta)) ** (-a) - 1) * m2 if n else float("nan")
        out.append(OscillationRecord(int(n), a, float(err), m2, float(err / m2), float(ref), float(pred), -m2))
    return out


def log_alpha_rule(n: int) -> float:
    """``alpha_n = 1 / (4 ln n)``, so ``n^(alpha_n)`` stays at ``e^(1/4)``."""
    if n < 2:
        raise ValueError("the logarithmic rule needs n >= 2")
    return 1.0 / (4.0 * np.log(n))


# --- upper bound as alpha -> N ---------------------------------------------------------


@dataclass(frozen=True)
class UpperBound(_Record):
    r: float
    alphas: list
    deficits: list
    scales: list
    ratios: list
    mass: float
    fitted_exponent: float
    ratio_spread: float


def upper_bound_scale(N: int, alpha: float, r: float) -> float:
    return (N - alpha) / (r * alpha - N) ** (1 - 1 / r)


def check_upper_bound_alphaN(f: Field, alpha_list: Sequence[float], r: float = 2.0) -> UpperBound:
    """``max (|x|^(alpha-N) * f) - int f`` against ``(N - alpha) / (r alpha - N)^(1 - 1/r)``.

    ``fitted_exponent`` is the least-squares slope of ``log deficit`` against
    ``log (N - alpha)`` (only over positive deficits).
    """
    if np.any(f.values < 0):
        raise ValueError("f must be nonnegative")
    N = f.grid.dimension
    if not r > 1:
        raise ValueError("r must exceed 1")
    for a in alpha_list:
        if not N / r < a < N:
            raise ValueError(f"alpha = {a} is outside (N/r, N)")
    mass = integrate(f)
    deficits, scales = [], []
    for a in alpha_list:
        conv = riesz_convolve(f, RieszKernelSpec(N, a, normalized=False))
        deficits.append(float(conv.values.max() - mass))
        scales.append(float(upper_bound_scale(N, a, r)))
    ratios = [d / s for d, s in zip(deficits, scales)]
    pos = [(N - a, d) for a, d in zip(alpha_list, deficits) if d > 0]
    if len(pos) >= 2:
        xs, ys = np.log([p[0] for p in pos]), np.log([p[1] for p in pos])
        k = float(np.polyfit(xs, ys, 1)[0])
    else:
        k = float("nan")
    pr = [q for q in ratios if q > 0]
    spread = max(pr) / min(pr) if pr else float("nan")
    return UpperBound(float(r), [float(a) for a in alpha_list], deficits, scales, ratios, mass, k, float(spread))


# --- translated bumps as alpha -> N ------------------------------------------------------------


@dataclass(frozen=True)
class TranslatedLimit(_Record):
    rho: float
    alphas: list
    separations: list
    values: list
    targets: list
    gaps: list


def separation_for_rho(N: int, alpha: float, rho: float) -> float:
    """``d`` with ``(1 + d)^(N - alpha) = 1 / rho``."""
    if not 0 < rho <= 1:
        raise ValueError("rho must lie in (0, 1]")
    return float(rho ** (-1.0 / (N - alpha)) - 1.0)


def check_translated_limit(
    f: Field,
    g: Field,
    alpha_list: Sequence[float],
    separation_rule: Callable[[float], float] | None = None,
    rho: float = 1.0,
    in_box: bool = False,
) -> TranslatedLimit:
    """``int (|x|^(alpha-N) * f)(y) g(y - d e_1) dy`` against ``rho (int f)(int g)``.

    By default ``g`` is moved by shifting the kernel, so separations far
    beyond the box are exact.  ``in_box=True`` translates ``g`` on the grid
    instead and refuses separations beyond half the box.
    """
    if np.any(f.values < 0) or np.any(g.values < 0):
        raise ValueError("f and g must be nonnegative")
    grid = f.grid
    N = grid.dimension
    rule = separation_rule or (lambda a: separation_for_rho(N, a, rho))
    target = rho * integrate(f) * integrate(g)
    seps, vals, gaps = [], [], []
    for a in alpha_list:
        d = float(rule(a))
        if not (np.isfinite(d) and d >= 0):
            raise ValueError(f"invalid separation {d} at alpha = {a}")
        spec = RieszKernelSpec(N, a, normalized=False)
        if in_box:
            if d > grid.half_length / 2:
                raise ValueError(f"separation {d:g} exceeds the box guard {grid.half_length / 2:g}")
            val = cross_riesz_energy(f, translate(g, d), spec)
        else:
            val = shifted_cross_energy(f, g, d, spec)
        seps.append(d)
        vals.append(float(val))
        gaps.append(float(abs(val - target) / abs(target)) if target else float(abs(val)))
    return TranslatedLimit(float(rho), [float(a) for a in alpha_list], seps, vals, [float(target)] * len(vals), gaps)
