"""Riesz potentials: normalization constants and fast linear convolution.

The kernel ``|x|^(alpha-N)`` is sampled at cell offsets on a box twice as
wide as the data box, so the FFT product computes an honest (non-circular)
discrete convolution over the truncated domain.  The origin cell needs a
special weight because the kernel is singular there.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import gammaln, roots_legendre, zeta

from .grid import Field, GridSpec, _as_shift, _check_same

SINGULAR_RULES = ("corrected", "cell_average")


@dataclass(frozen=True)
class RieszKernelSpec:
    dimension: int
    alpha: float
    normalized: bool = True

    def __post_init__(self):
        if not 0.0 < self.alpha < self.dimension:
            raise ValueError(f"alpha must lie in (0, {self.dimension}), got {self.alpha}")


def _check_order(N: int, alpha: float) -> None:
    if not 0.0 < alpha < N:
        raise ValueError(f"alpha must lie in (0, {N}), got {alpha}")


def log_riesz_constant(N: int, alpha: float) -> float:
    _check_order(N, alpha)
    return float(
        gammaln((N - alpha) / 2) - gammaln(alpha / 2) - 0.5 * N * np.log(np.pi) - alpha * np.log(2.0)
    )


def riesz_constant(N: int, alpha: float) -> float:
    """``A_alpha = Gamma((N-alpha)/2) / (Gamma(alpha/2) pi^(N/2) 2^alpha)``."""
    return float(np.exp(log_riesz_constant(N, alpha)))


def unnormalized_ratio(N: int, alpha: float) -> float:
    """Factor turning ``I_alpha`` into ``|x|^(alpha-N)``, i.e. ``1/A_alpha``."""
    return float(np.exp(-log_riesz_constant(N, alpha)))


def hls_constant_unnormalized(N: int, alpha: float) -> float:
    """Sharp HLS constant for the pairing with ``|x|^(alpha-N)``."""
    _check_order(N, alpha)
    return float(
        np.exp(
            0.5 * (N - alpha) * np.log(np.pi)
            + gammaln(alpha / 2)
            - gammaln((N + alpha) / 2)
            + (alpha / N) * (gammaln(N) - gammaln(N / 2))
        )
    )


def hls_constant(N: int, alpha: float) -> float:
    """Sharp HLS constant for the pairing with the normalized ``I_alpha``."""
    _check_order(N, alpha)
    return float(
        np.exp(
            gammaln((N - alpha) / 2)
            - alpha * np.log(2.0)
            - 0.5 * alpha * np.log(np.pi)
            - gammaln((N + alpha) / 2)
            + (alpha / N) * (gammaln(N) - gammaln(N / 2))
        )
    )


# --- origin cell -----------------------------------------------------------


@lru_cache(maxsize=None)
def _unit_corner_integral(N: int, alpha: float, order: int = 17) -> float:
    """``int_[0,1]^N |x|^(alpha-N) dx`` by a pyramid split.

    On the pyramid where ``x_1`` is the largest coordinate put
    ``x = x_1 (1, y)``; the radial factor integrates to ``1/alpha`` and the
    remaining integrand over ``y in [0,1]^(N-1)`` is smooth.
    """
    if N == 1:
        return 1.0 / alpha
    nodes, weights = roots_legendre(order)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    grids = np.meshgrid(*([nodes] * (N - 1)), indexing="ij")
    w = np.ones_like(grids[0])
    for wg in np.meshgrid(*([weights] * (N - 1)), indexing="ij"):
        w = w * wg
    r2 = sum(g * g for g in grids)
    return float(N / alpha * np.sum(w * (1.0 + r2) ** ((alpha - N) / 2)))


def origin_weight(N: int, alpha: float, h: float, rule: str | None = None) -> float:
    """Kernel value assigned to the cell containing the origin.

    ``cell_average`` is the mean of ``|x|^(alpha-N)`` over the cell.
    ``corrected`` (1D only) uses ``-2 zeta(1-alpha) h^(alpha-1)``, which
    cancels the ``h^alpha`` term of the punctured lattice sum so the
    scheme is accurate to ``O(h^(alpha+2))`` for smooth data.
    """
    rule = default_rule(N) if rule is None else rule
    if rule == "corrected":
        if N != 1:
            raise ValueError("the corrected origin weight is only available in one dimension")
        return float(-2.0 * zeta(1.0 - alpha) * h ** (alpha - 1.0))
    if rule == "cell_average":
        half = 0.5 * h
        return float((2.0 / h) ** N * half**alpha * _unit_corner_integral(N, alpha))
    raise ValueError(f"unknown singular rule {rule!r}; expected one of {SINGULAR_RULES}")


def default_rule(N: int) -> str:
    return "corrected" if N == 1 else "cell_average"


# --- kernel sampling and spectra --------------------------------------------


def _padded_offsets(grid: GridSpec) -> tuple[np.ndarray, ...]:
    n = grid.points_per_axis
    k = np.arange(2 * n)
    k = np.where(k < n, k, k - 2 * n) * grid.spacing
    return tuple(np.meshgrid(*([k] * grid.dimension), indexing="ij"))


def sample_kernel(grid: GridSpec, alpha: float, rule: str | None = None, shift=None) -> np.ndarray:
    """Unnormalized kernel on the doubled box, FFT ordering.

    With ``shift`` the kernel is evaluated at ``offset + shift``, which
    pairs data on this box with data translated by ``shift``.
    """
    N = grid.dimension
    offsets = _padded_offsets(grid)
    if shift is not None:
        s = _as_shift(grid, shift)
        offsets = tuple(o + si for o, si in zip(offsets, s))
    rule = default_rule(N) if rule is None else rule
    r = np.sqrt(sum(o * o for o in offsets))
    h = grid.spacing
    # an off-lattice shift in 1D keeps its samples and gets Hurwitz corrections;
    # otherwise the sample nearest the singularity takes the origin weight
    hurwitz = N == 1 and rule == "corrected"
    singular = r < (1e-6 if hurwitz else 0.5 * (1 - 1e-9)) * h
    with np.errstate(divide="ignore"):
        K = np.where(singular, 0.0, r ** (alpha - N))
    if np.any(singular):
        K[singular] = origin_weight(N, alpha, h, rule)
    elif hurwitz:
        _correct_offset_lattice(K, offsets[0], alpha, h)
    return K


@lru_cache(maxsize=256)
def _offset_weights(alpha: float, theta: float) -> tuple[float, float]:
    """Corrections (per ``h^(alpha-1)``) for the samples at ``theta h`` and ``(theta-1) h``.

    They cancel the Hurwitz-zeta terms of the shifted lattice sum of
    ``|x|^(alpha-1)`` against constant and linear data, so the offset
    lattice keeps the ``O(h^(alpha+2))`` accuracy of the centred one.
    """
    s = 1.0 - alpha
    z0 = float(mpmath.zeta(s, theta) + mpmath.zeta(s, 1 - theta))
    z1 = float(mpmath.zeta(s - 1, theta) - mpmath.zeta(s - 1, 1 - theta))
    return -(z1 + (1 - theta) * z0), z1 - theta * z0


def _correct_offset_lattice(K: np.ndarray, offsets: np.ndarray, alpha: float, h: float) -> None:
    right = np.flatnonzero((offsets > 0) & (offsets < h))
    left = np.flatnonzero((offsets < 0) & (offsets > -h))
    if len(right) != 1 or len(left) != 1:
        return  # the singularity lies outside the sampled offsets
    theta = float(offsets[right[0]] / h)
    wa, wb = _offset_weights(float(alpha), round(theta, 15))
    scale = h ** (alpha - 1.0)
    K[right[0]] += wa * scale
    K[left[0]] += wb * scale


class _SpectrumCache:
    """Kernel spectra keyed by (grid, alpha, rule); insert-if-absent."""

    def __init__(self, maxsize: int = 64):
        self._data: dict = {}
        self._lock = threading.Lock()
        self.maxsize = maxsize

    def get(self, grid: GridSpec, alpha: float, rule: str) -> np.ndarray:
        key = (grid, float(alpha), rule)
        hit = self._data.get(key)
        if hit is not None:
            return hit
        spectrum = np.fft.rfftn(sample_kernel(grid, alpha, rule))
        spectrum.flags.writeable = False
        with self._lock:
            if len(self._data) >= self.maxsize:
                self._data.pop(next(iter(self._data)))
            return self._data.setdefault(key, spectrum)

    def clear(self) -> None:
        with self._lock:
            self._data.clear()


kernel_cache = _SpectrumCache()


def _convolve_array(values: np.ndarray, grid: GridSpec, kernel_hat: np.ndarray) -> np.ndarray:
    n = grid.points_per_axis
    padded_shape = (2 * n,) * grid.dimension
    axes = tuple(range(grid.dimension))
    fh = np.fft.rfftn(values, s=padded_shape, axes=axes)
    full = np.fft.irfftn(fh * kernel_hat, s=padded_shape, axes=axes)
    return grid.cell_volume * full[(slice(0, n),) * grid.dimension]


def convolve_values(values: np.ndarray, grid: GridSpec, spec: RieszKernelSpec, rule: str | None = None) -> np.ndarray:
    """Array-level version of :func:`riesz_convolve` used by the solvers."""
    rule = default_rule(grid.dimension) if rule is None else rule
    out = _convolve_array(values, grid, kernel_cache.get(grid, spec.alpha, rule))
    if spec.normalized:
        out = riesz_constant(spec.dimension, spec.alpha) * out
    return out


def riesz_convolve(f: Field, spec: RieszKernelSpec, rule: str | None = None) -> Field:
    """Linear convolution of ``f`` with ``I_alpha`` (or ``|x|^(alpha-N)``)."""
    if spec.dimension != f.grid.dimension:
        raise ValueError("kernel dimension does not match the grid")
    return Field(f.grid, convolve_values(f.values, f.grid, spec, rule))


def cross_riesz_energy(f: Field, g: Field, spec: RieszKernelSpec, rule: str | None = None) -> float:
    """``B(f, g) = int (I_alpha * f) g``."""
    _check_same(f.grid, g.grid)
    conv = convolve_values(f.values, f.grid, spec, rule)
    return float(f.grid.cell_volume * np.sum(conv * g.values))


def riesz_energy(u: Field, p: float, spec: RieszKernelSpec, rule: str | None = None) -> float:
    """``D(u) = int (I_alpha * |u|^p) |u|^p``."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    f = np.abs(u.values) ** p
    conv = convolve_values(f, u.grid, spec, rule)
    return float(u.grid.cell_volume * np.sum(conv * f))


def shifted_cross_energy(f: Field, g: Field, shift, spec: RieszKernelSpec, rule: str | None = None) -> float:
    """``int (I_alpha * f)(y) g(y - shift) dy`` without enlarging the box.

    ``g`` is treated as living on a copy of the grid translated by
    ``shift``; only kernel offsets change, so arbitrarily large separations
    are handled exactly.
    """
    _check_same(f.grid, g.grid)
    grid = f.grid
    kernel_hat = np.fft.rfftn(sample_kernel(grid, spec.alpha, rule, shift=shift))
    conv = _convolve_array(f.values, grid, kernel_hat)
    if spec.normalized:
        conv = riesz_constant(spec.dimension, spec.alpha) * conv
    return float(grid.cell_volume * np.sum(conv * g.values))


def direct_convolve(f: Field, spec: RieszKernelSpec, rule: str | None = None) -> Field:
    """O(n^2) reference sum with the same origin rule; for small grids."""
    grid = f.grid
    N = grid.dimension
    pts = np.stack([c.reshape(-1) for c in grid.coordinates()], axis=1)
    vals = f.values.reshape(-1)
    w0 = origin_weight(N, spec.alpha, grid.spacing, rule)
    out = np.empty(len(pts))
    for i, x in enumerate(pts):
        r = np.sqrt(np.sum((pts - x) ** 2, axis=1))
        with np.errstate(divide="ignore"):
            k = np.where(r < 0.5 * grid.spacing, w0, r ** (spec.alpha - N))
        out[i] = grid.cell_volume * np.dot(k, vals)
    if spec.normalized:
        out = riesz_constant(N, spec.alpha) * out
    return Field(grid, out.reshape(grid.shape))

