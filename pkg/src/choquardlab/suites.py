"""Ready-made verification suites shared by the ``verify`` subcommand and the tests.

Every suite returns ``SuiteResult(name, passed, records, lines)``; ``lines``
is a human-readable table.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .checks import (
    check_fourier_bound,
    check_oscillation_degradation,
    check_riesz_energy_error,
    check_translated_limit,
    check_upper_bound_alphaN,
    log_alpha_rule,
)
from .grid import Field, GridSpec
from .limits import kernel_alignment, nls_groundstate, nondegeneracy_spectrum
from .riesz import hls_constant, hls_constant_unnormalized, riesz_constant, unnormalized_ratio

SUITES = (
    "fourier-bound",
    "riesz-error",
    "oscillation",
    "upper-bound",
    "translated-limit",
    "hls-constants",
    "nondegeneracy",
)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    records: list = field(default_factory=list)
    lines: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "records": self.records}


def _require_1d(dim: int, name: str) -> None:
    if dim != 1:
        raise ValueError(f"the {name} suite is set up for dimension 1")


# --- test fields -------------------------------------------------------------------


def fourier_pairs(grid: GridSpec) -> list:
    x = grid.axis()
    fs = {
        "gauss": np.exp(-(x**2)),
        "sech": 1 / np.cosh(x),
        "shifted": np.exp(-((x - 2) ** 2) / 2),
        "dipole": x * np.exp(-(x**2)),
        "wide": np.exp(-(x**2) / 9),
    }
    names = [("gauss", "gauss"), ("sech", "gauss"), ("shifted", "sech"), ("dipole", "dipole"), ("wide", "shifted")]
    return [(a, b, Field(grid, fs[a]), Field(grid, fs[b])) for a, b in names]


FOURIER_PARAMETERS = (
    (0.05, 0.25, 0.5),
    (0.1, 0.4, 0.25),
    (0.2, 0.3, 0.75),
    (0.025, 0.1, 0.5),
    (0.3, 0.45, 0.9),
    (0.01, 0.2, 0.1),
)


def energy_error_fields(grid: GridSpec) -> dict:
    x = grid.axis()
    return {
        "sech": 1 / np.cosh(x),
        "sech^2": 1 / np.cosh(x) ** 2,
        "gauss(0.5)": np.exp(-(x**2) / 0.25),
        "gauss(1)": np.exp(-(x**2)),
        "gauss(2)": np.exp(-(x**2) / 4),
        "pair d=6": np.exp(-((x - 3) ** 2)) + np.exp(-((x + 3) ** 2)),
        "odd pair d=12": 1 / np.cosh(x - 6) - 1 / np.cosh(x + 6),
        "pair d=20": np.exp(-((x - 10) ** 2)) + 0.5 * np.exp(-((x + 10) ** 2)),
        "modulated": np.cos(x) / np.cosh(x / 2),
        "skewed": np.exp(-(x**2)) * (1 + 0.5 * np.tanh(x)),
    }


ENERGY_ALPHAS = (0.2, 0.1, 0.05, 0.025)


# --- suites -------------------------------------------------------------------------


def suite_fourier_bound(dim: int = 1) -> SuiteResult:
    _require_1d(dim, "fourier-bound")
    grid = GridSpec(1, 40.0, 2048)
    res = SuiteResult("fourier-bound", True)
    res.lines.append(f"{'f':>8} {'g':>8} {'alpha':>6} {'beta':>6} {'s':>5} {'lhs':>12} {'rhs':>12} holds")
    for a, b, f, g in fourier_pairs(grid):
        for alpha, beta, s in FOURIER_PARAMETERS:
            rec = check_fourier_bound(f, g, alpha, beta, s)
            res.records.append({"f": a, "g": b, **rec.to_dict()})
            res.passed &= rec.holds
            res.lines.append(f"{a:>8} {b:>8} {alpha:6.3f} {beta:6.3f} {s:5.2f} {rec.lhs:12.5e} {rec.rhs:12.5e} {rec.holds}")
    return res


def suite_riesz_error(dim: int = 1, p: float = 2.0) -> SuiteResult:
    _require_1d(dim, "riesz-error")
    grid = GridSpec(1, 40.0, 2048)
    res = SuiteResult("riesz-error", True)
    res.lines.append(f"{'field':>14} " + " ".join(f"a={a:<9g}" for a in ENERGY_ALPHAS) + "  max/min")
    for name, values in energy_error_fields(grid).items():
        u = Field(grid, values)
        recs = [check_riesz_energy_error(u, p, a) for a in ENERGY_ALPHAS]
        ratios = [r.bound_ratio for r in recs]
        spread = max(ratios) / min(ratios)
        ok = bool(spread <= 4.0)
        res.passed &= ok
        res.records.append({"field": name, "checks": [r.to_dict() for r in recs], "spread": spread, "bounded": ok})
        res.lines.append(f"{name:>14} " + " ".join(f"{q:<11.4e}" for q in ratios) + f"  {spread:.3f}")
    return res


def suite_oscillation(dim: int = 1) -> SuiteResult:
    """Errors of modulated fields stay of order one while ``alpha_n -> 0``."""
    _require_1d(dim, "oscillation")
    grid = GridSpec(1, 8.0, 1024)
    psi = Field(grid, np.exp(-(grid.axis() ** 2)))
    recs = check_oscillation_degradation(psi, [8, 16, 32, 64], log_alpha_rule)
    res = SuiteResult("oscillation", True, [r.to_dict() for r in recs])
    res.lines.append(f"{'n':>4} {'alpha_n':>8} {'error':>12} {'rel.error':>10} {'prediction':>11} {'unmodulated':>12}")
    growth = [abs(r.error) / r.alpha for r in recs]
    for r in recs:
        res.lines.append(
            f"{r.frequency:>4} {r.alpha:8.4f} {r.error:12.5e} {r.relative_error:10.5f} "
            f"{r.prediction / r.l2_norm2:11.5f} {r.reference_error:12.5e}"
        )
        res.passed &= r.error < 0 and abs(r.error - r.prediction) <= 0.05 * abs(r.prediction)
    res.passed &= all(b > a for a, b in zip(growth, growth[1:]))
    return res


def suite_upper_bound(dim: int = 1, r: float = 2.0) -> SuiteResult:
    _require_1d(dim, "upper-bound")
    grid = GridSpec(1, 30.0, 2048)
    f = Field(grid, np.exp(-(grid.axis() ** 2) / 0.25))
    rec = check_upper_bound_alphaN(f, [0.8, 0.9, 0.95, 0.98], r)
    ok = bool(0.8 <= rec.fitted_exponent <= 1.2 and all(d > 0 for d in rec.deficits))
    res = SuiteResult("upper-bound", ok, [rec.to_dict()])
    res.lines.append(f"{'alpha':>6} {'deficit':>12} {'scale':>10} {'ratio':>8}")
    for a, d, s, q in zip(rec.alphas, rec.deficits, rec.scales, rec.ratios):
        res.lines.append(f"{a:6.3f} {d:12.5e} {s:10.5f} {q:8.4f}")
    res.lines.append(f"fitted exponent {rec.fitted_exponent:.4f}, ratio spread {rec.ratio_spread:.3f}")
    return res


def suite_translated_limit(dim: int = 1) -> SuiteResult:
    _require_1d(dim, "translated-limit")
    grid = GridSpec(1, 30.0, 2048)
    x = grid.axis()
    f = Field(grid, np.exp(-(x**2)))
    g = Field(grid, np.exp(-((x - 1) ** 2) / 2))
    res = SuiteResult("translated-limit", True)
    res.lines.append(f"{'rho':>4} {'alpha':>6} {'separation':>12} {'value':>12} {'gap':>10}")
    for rho in (1.0, 0.5):
        rec = check_translated_limit(f, g, [0.7, 0.85, 0.95, 0.98], rho=rho)
        ok = rec.gaps[-1] <= 0.02
        res.passed &= ok
        res.records.append(rec.to_dict())
        for a, d, v, gap in zip(rec.alphas, rec.separations, rec.values, rec.gaps):
            res.lines.append(f"{rho:4.2f} {a:6.3f} {d:12.5e} {v:12.6f} {gap:10.3e}")
    return res


def suite_hls_constants(dim: int = 1) -> SuiteResult:
    N = dim
    alphas = [1e-4, 0.01, 0.1, 0.25 * N, 0.5 * N, 0.75 * N, 0.9 * N, 0.99 * N, N - 1e-4]
    res = SuiteResult("hls-constants", True)
    res.lines.append(f"{'alpha':>10} {'A_alpha':>14} {'C':>14} {'C~':>14}")
    for a in alphas:
        C, Ct = hls_constant(N, a), hls_constant_unnormalized(N, a)
        res.records.append({"alpha": a, "riesz_constant": riesz_constant(N, a), "hls": C, "hls_unnormalized": Ct,
                            "ratio": unnormalized_ratio(N, a)})
        res.lines.append(f"{a:10.6g} {riesz_constant(N, a):14.8e} {C:14.10f} {Ct:14.8e}")
    res.passed = bool(abs(hls_constant(N, 1e-4) - 1) <= 1e-3 and abs(hls_constant_unnormalized(N, N - 1e-4) - 1) <= 1e-3)
    return res


def suite_nondegeneracy(dim: int = 1, q: float = 4.0) -> SuiteResult:
    _require_1d(dim, "nondegeneracy")
    grid = GridSpec(1, 30.0, 1024)
    U = nls_groundstate(1, q, grid)
    spec = nondegeneracy_spectrum(U, q, 3, return_vectors=True)
    cos = kernel_alignment(U, spec.eigenvectors[:, 1])
    vals = spec.eigenvalues
    ok = bool(abs(vals[0] + 3) <= 1e-4 and abs(vals[1]) <= 1e-4 and cos >= 0.9999) if q == 4 else bool(abs(vals[1]) <= 1e-4)
    res = SuiteResult("nondegeneracy", ok, [{"q": q, "eigenvalues": vals.tolist(), "kernel_cosine": cos}])
    res.lines.append("eigenvalues " + " ".join(f"{v:.8f}" for v in vals))
    res.lines.append(f"kernel vector vs U' cosine {cos:.10f}")
    return res


_RUNNERS = {
    "fourier-bound": suite_fourier_bound,
    "riesz-error": suite_riesz_error,
    "oscillation": suite_oscillation,
    "upper-bound": suite_upper_bound,
    "translated-limit": suite_translated_limit,
    "hls-constants": suite_hls_constants,
    "nondegeneracy": suite_nondegeneracy,
}


def run_suite(name: str, dim: int = 1) -> SuiteResult:
    try:
        runner = _RUNNERS[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
    return runner(dim)
