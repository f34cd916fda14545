"""Periodic box discretization, spectral transforms and field algebra.

A :class:`GridSpec` samples the cube ``[-L, L)^d`` with ``n`` points per
axis; a :class:`Field` is an immutable real array on that grid.  All
integrals use the rectangle rule, which is spectrally accurate for smooth
periodic integrands.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Callable, Sequence

import numpy as np


class GridMismatchError(ValueError):
    """Raised when two fields living on different grids are combined."""


@dataclass(frozen=True)
class GridSpec:
    dimension: int
    half_length: float
    points_per_axis: int

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if not (self.half_length > 0 and np.isfinite(self.half_length)):
            raise ValueError(f"half_length must be positive, got {self.half_length}")
        n = self.points_per_axis
        if n < 8 or n & (n - 1):
            raise ValueError(f"points_per_axis must be a power of two >= 8, got {n}")
        object.__setattr__(self, "half_length", float(self.half_length))

    @property
    def spacing(self) -> float:
        # n is a power of two, so this division is exact
        return 2.0 * self.half_length / self.points_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dimension

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    def axis(self) -> np.ndarray:
        """Node coordinates ``-L + j h`` along one axis."""
        return -self.half_length + self.spacing * np.arange(self.points_per_axis)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        x = self.axis()
        return tuple(np.meshgrid(*([x] * self.dimension), indexing="ij"))

    def radius(self, center: Sequence[float] | None = None) -> np.ndarray:
        coords = self.coordinates()
        if center is None:
            center = (0.0,) * self.dimension
        return np.sqrt(sum((c - c0) ** 2 for c, c0 in zip(coords, center)))

    def frequencies(self) -> np.ndarray:
        """Physical frequencies ``k / (2L)`` along one axis, FFT ordering."""
        return np.fft.fftfreq(self.points_per_axis, d=self.spacing)

    def frequency_norm2(self) -> np.ndarray:
        """``|xi|^2`` on the full spectral grid."""
        xi = self.frequencies()
        grids = np.meshgrid(*([xi] * self.dimension), indexing="ij")
        return sum(g * g for g in grids)

    def refined(self, factor: int = 2) -> "GridSpec":
        """Same spacing on a box ``factor`` times wider."""
        return GridSpec(self.dimension, self.half_length * factor, self.points_per_axis * factor)

    def sample(self, fn: Callable[..., np.ndarray]) -> "Field":
        return Field(self, fn(*self.coordinates()))

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.shape))


def _check_same(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise GridMismatchError(f"fields live on different grids: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples on a :class:`GridSpec`; the array is made read-only."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {v.size}")
        v = np.array(v.reshape(self.grid.shape), dtype=float, copy=True)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    # arithmetic keeps the grid and checks compatibility
    def _combine(self, other, op):
        if isinstance(other, Field):
            _check_same(self.grid, other.grid)
            return Field(self.grid, op(self.values, other.values))
        return Field(self.grid, op(self.values, other))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return Field(self.grid, other - self.values)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, np.true_divide)

    def __neg__(self):
        return Field(self.grid, -self.values)

    def abs_pow(self, p: float) -> "Field":
        return Field(self.grid, np.abs(self.values) ** p)

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def spectrum(self) -> "SpectralField":
        return forward(self)


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: GridSpec
    coefficients: np.ndarray = field(repr=False)


def forward(u: Field) -> SpectralField:
    return SpectralField(u.grid, np.fft.fftn(u.values))


def inverse(s: SpectralField) -> Field:
    return Field(s.grid, np.fft.ifftn(s.coefficients).real)


def integrate(f: Field) -> float:
    return float(f.grid.cell_volume * np.sum(f.values))


def l2_inner(u: Field, v: Field) -> float:
    _check_same(u.grid, v.grid)
    return float(u.grid.cell_volume * np.sum(u.values * v.values))


def h1_symbol(grid: GridSpec) -> np.ndarray:
    """Fourier symbol ``1 + 4 pi^2 |xi|^2`` of ``-Laplacian + 1``."""
    return 1.0 + 4.0 * np.pi**2 * grid.frequency_norm2()


def h1_inner(u: Field, v: Field) -> float:
    """``int grad u . grad v + u v`` evaluated spectrally."""
    _check_same(u.grid, v.grid)
    grid = u.grid
    uh = np.fft.fftn(u.values)
    vh = uh if v is u else np.fft.fftn(v.values)
    s = np.sum(h1_symbol(grid) * (uh * np.conj(vh)).real)
    return float(grid.cell_volume * s / grid.size)


def h1_norm(u: Field) -> float:
    return float(np.sqrt(max(h1_inner(u, u), 0.0)))


def dirichlet_energy(u: Field) -> float:
    """``int |grad u|^2``."""
    grid = u.grid
    uh = np.fft.fftn(u.values)
    s = np.sum(4.0 * np.pi**2 * grid.frequency_norm2() * np.abs(uh) ** 2)
    return float(grid.cell_volume * s / grid.size)


def apply_h1_inverse(f: Field) -> Field:
    """Solve ``(-Laplacian + 1) w = f`` spectrally."""
    return Field(f.grid, np.fft.ifftn(np.fft.fftn(f.values) / h1_symbol(f.grid)).real)


def gradient(u: Field, axis: int = 0) -> Field:
    grid = u.grid
    xi = grid.frequencies()
    shape = [1] * grid.dimension
    shape[axis] = grid.points_per_axis
    mult = 2j * np.pi * xi.reshape(shape)
    if grid.points_per_axis % 2 == 0:
        # derivative of the Nyquist mode of a real field is taken as zero
        mult = mult.copy()
        idx = [0] * grid.dimension
        idx[axis] = grid.points_per_axis // 2
        mult[tuple(idx)] = 0.0
    return Field(grid, np.fft.ifftn(np.fft.fftn(u.values) * mult).real)


def positive_part(u: Field) -> Field:
    return Field(u.grid, np.maximum(u.values, 0.0))


def negative_part(u: Field) -> Field:
    return Field(u.grid, np.minimum(u.values, 0.0))


def _as_shift(grid: GridSpec, shift) -> np.ndarray:
    s = np.atleast_1d(np.asarray(shift, dtype=float))
    if s.size == 1 and grid.dimension > 1:
        s = np.concatenate([s, np.zeros(grid.dimension - 1)])
    if s.shape != (grid.dimension,) or not np.all(np.isfinite(s)):
        raise ValueError(f"shift must be a finite vector of length {grid.dimension}")
    return s


def translate(u: Field, shift) -> Field:
    """Return ``x -> u(x - shift)`` on the periodic box.

    Whole-cell shifts are index rotations; anything else goes through the
    phase factor ``exp(-2 pi i xi . shift)``.
    """
    grid = u.grid
    s = _as_shift(grid, shift)
    cells = s / grid.spacing
    rounded = np.round(cells)
    if np.all(np.abs(cells - rounded) < 1e-12 * np.maximum(1.0, np.abs(cells))):
        return Field(grid, np.roll(u.values, tuple(int(c) for c in rounded), axis=tuple(range(grid.dimension))))
    xi = grid.frequencies()
    phase = np.ones(grid.shape, dtype=complex)
    for ax in range(grid.dimension):
        shape = [1] * grid.dimension
        shape[ax] = grid.points_per_axis
        phase = phase * np.exp(-2j * np.pi * xi * s[ax]).reshape(shape)
    return Field(grid, np.fft.ifftn(np.fft.fftn(u.values) * phase).real)


def reflect_axis1(u: Field, offset: float) -> Field:
    """Return ``u o R`` with ``R(x) = (offset - x_1, x_2, ...)``.

    Exact index permutation when ``offset`` is a whole number of cells,
    spectral interpolation otherwise.
    """
    grid = u.grid
    n = grid.points_per_axis
    # x -> -x maps node j to node (n - j) mod n
    flipped = np.roll(np.flip(u.values, axis=0), 1, axis=0)
    return translate(Field(grid, flipped), [offset] + [0.0] * (grid.dimension - 1))


def boundary_mass(u: Field) -> float:
    """Largest ``|u|`` on the outermost shell of cells."""
    v = np.abs(u.values)
    out = 0.0
    for ax in range(u.grid.dimension):
        out = max(out, float(np.max(np.take(v, [0, -1], axis=ax))))
    return out


# --- CHQF binary format --------------------------------------------------

CHQF_MAGIC = b"CHQF"
CHQF_VERSION = 1
_HEADER = struct.Struct("<4sIBQd")


def write_field(u: Field, target: str | Path | BinaryIO) -> None:
    header = _HEADER.pack(CHQF_MAGIC, CHQF_VERSION, u.grid.dimension, u.grid.points_per_axis, u.grid.half_length)
    payload = np.ascontiguousarray(u.values, dtype="<f8").tobytes(order="C")
    if hasattr(target, "write"):
        target.write(header + payload)
    else:
        Path(target).write_bytes(header + payload)


def read_field(source: str | Path | BinaryIO) -> Field:
    data = source.read() if hasattr(source, "read") else Path(source).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("truncated CHQF header")
    magic, version, dim, n, half_length = _HEADER.unpack_from(data)
    if magic != CHQF_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != CHQF_VERSION:
        raise ValueError(f"unsupported CHQF version {version}")
    grid = GridSpec(dim, half_length, n)
    expected = _HEADER.size + 8 * grid.size
    if len(data) != expected:
        raise ValueError(f"CHQF payload has {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    return Field(grid, values.reshape(grid.shape))
