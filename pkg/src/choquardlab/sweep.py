"""alpha-sweeps toward 0 and toward N with box adaptation and limit extrapolation."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .checks import check_riesz_energy_error, upper_bound_scale
from .functionals import ChoquardParams, nehari_scale_nls, nehari_scale_psi
from .grid import Field, GridSpec, integrate, negative_part, positive_part, write_field
from .limits import gamma_level, kappa_level, limit_groundstate_V, nls_groundstate
from .report import REPORT_VERSION, write_csv, write_json
from .riesz import RieszKernelSpec, riesz_convolve
from .solvers import (
    SolverConfig,
    SolverError,
    fit_two_bumps,
    random_offsets,
    solve_groundstate,
    solve_nodal,
    symmetry_defect,
    two_bump_init,
)

log = logging.getLogger(__name__)

MODES = ("alpha0", "alphaN")


@dataclass(frozen=True)
class SweepConfig:
    mode: str
    alphas: tuple
    dimension: int = 1
    p: float = 2.0
    half_length: float = 30.0
    points: int = 1024
    solver: SolverConfig = field(default_factory=SolverConfig)
    out_dir: str | None = None
    restarts: int = 1
    separation: float = 8.0
    max_box_doublings: int = 2
    workers: int = 1
    formats: tuple = ("json",)

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        N, p = self.dimension, self.p
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.alphas:
            raise ValueError("alphas must not be empty")
        for a in self.alphas:
            if not 0 < a < N:
                raise ValueError(f"alpha = {a} is outside (0, {N})")
        steps = np.diff(self.alphas)
        if self.mode == "alpha0" and np.any(steps >= 0):
            raise ValueError("alpha0 sweeps need a strictly decreasing alpha list")
        if self.mode == "alphaN" and np.any(steps <= 0):
            raise ValueError("alphaN sweeps need a strictly increasing alpha list")
        if self.mode == "alpha0" and not (1 - 2 / N < 1 / p <= 0.5):
            raise ValueError(f"alpha0 sweeps need 1 - 2/N < 1/p <= 1/2, got p = {p}")
        if self.mode == "alphaN" and not (p > 2 and 0.5 - 1 / N < 1 / p < 0.5):
            raise ValueError(f"alphaN sweeps need p > 2 and 1/2 - 1/N < 1/p < 1/2, got p = {p}")
        for a in self.alphas:
            ChoquardParams(N, p, a)  # existence range
        if self.restarts < 0 or self.workers < 1 or self.max_box_doublings < 0:
            raise ValueError("restarts, workers and max_box_doublings must be nonnegative (workers >= 1)")
        GridSpec(N, self.half_length, self.points)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out_dir")
        d.pop("workers")
        return d


@dataclass
class ExperimentReport:
    mode: str
    config: dict
    targets: dict
    records: list
    extrapolation: dict
    summary: dict

    def to_dict(self) -> dict:
        return {
            "report_version": REPORT_VERSION,
            "mode": self.mode,
            "config": self.config,
            "targets": self.targets,
            "records": self.records,
            "extrapolation": self.extrapolation,
            "summary": self.summary,
        }


# --- references ---------------------------------------------------------------------------


def _references(cfg: SweepConfig, grid: GridSpec):
    """(groundstate init, nodal reference W, gst target, nod target)."""
    N, p = cfg.dimension, cfg.p
    if cfg.mode == "alpha0":
        U = nls_groundstate(N, 2 * p, grid)
        g = gamma_level(N, 2 * p)
        return U, U, g, 2 * g
    k1 = kappa_level(N, p, 1.0)
    k2 = kappa_level(N, p, 2.0)
    return limit_groundstate_V(N, p, 1.0, grid), limit_groundstate_V(N, p, 2.0, grid), k1, 2 * k2


def _solve_summary(res) -> dict:
    return {
        "energy": res.energy,
        "residual_h1": res.residual_h1,
        "iterations": res.iterations,
        "nehari_defects": list(res.nehari_defects),
        "boundary_mass": res.boundary_mass,
        "converged": res.converged,
        "stop_reason": res.stop_reason,
    }


def _box_ok(res, separation: float | None, grid: GridSpec) -> bool:
    peak = res.field.max_abs()
    if res.boundary_mass > 1e-8 * peak:
        return False
    return separation is None or separation <= grid.half_length / 2


def _solve_point(cfg: SweepConfig, alpha: float, grid: GridSpec):
    N, p = cfg.dimension, cfg.p
    params = ChoquardParams(N, p, alpha, normalized=(cfg.mode == "alpha0"))
    W_gst, W_nod, _, _ = _references(cfg, grid)
    gst = solve_groundstate(params, W_gst, cfg.solver)
    nod = solve_nodal(params, two_bump_init(W_nod, cfg.separation), cfg.solver)
    restarts = []
    for off in random_offsets(cfg.solver.seed, cfg.restarts, N, 1.0):
        try:
            alt = solve_nodal(params, two_bump_init(W_nod, cfg.separation, offset=off), cfg.solver)
        except SolverError as exc:
            restarts.append({"offset": off.tolist(), "error": f"{type(exc).__name__}: {exc}"})
            continue
        fit_alt = fit_two_bumps(alt.field, W_nod)
        sd_alt = symmetry_defect(alt.field, fit=fit_alt)
        restarts.append({
            "offset": off.tolist(),
            "energy": alt.energy,
            "residual_h1": alt.residual_h1,
            "separation": fit_alt.separation,
            "symmetry_defect": sd_alt.value,
            "symmetry_defect_scan_min": sd_alt.scan_minimum,
        })
        if alt.energy < nod.energy - 1e-10 * abs(nod.energy):
            log.info("alpha=%g: restart with offset %s found a lower nodal level", alpha, off)
            nod = alt
    fit = fit_two_bumps(nod.field, W_nod)
    return params, gst, nod, fit, restarts


def run_point(cfg: SweepConfig, alpha: float) -> tuple[dict, dict]:
    """Solve one alpha with box adaptation; returns (record, fields)."""
    grid = GridSpec(cfg.dimension, cfg.half_length, cfg.points)
    _, _, target_gst, target_nod = _references(cfg, grid)
    record = {"alpha": alpha, "target_gst": target_gst, "target_nod": target_nod, "error": None, "flags": []}
    doublings = 0
    try:
        while True:
            params, gst, nod, fit, restarts = _solve_point(cfg, alpha, grid)
            if _box_ok(gst, None, grid) and _box_ok(nod, fit.separation, grid):
                break
            if doublings >= cfg.max_box_doublings:
                record["flags"].append("box_saturated")
                break
            doublings += 1
            grid = grid.refined(2)
            log.info("alpha=%g: enlarging box to L=%g", alpha, grid.half_length)
    except (SolverError, ArithmeticError, ValueError) as exc:
        record["error"] = f"{type(exc).__name__}: {exc}"
        record["box"] = {"half_length": grid.half_length, "points": grid.points_per_axis, "doublings": doublings}
        return record, {}
    N, p = cfg.dimension, cfg.p
    sd = symmetry_defect(nod.field, fit=fit)
    up, um = positive_part(nod.field), negative_part(nod.field)
    if cfg.mode == "alphaN":
        t_scale, s_scale = nehari_scale_psi(up, p, 2.0), nehari_scale_psi(um, p, 2.0)
        fp = gst.field.abs_pow(p)
        spec = RieszKernelSpec(N, alpha, normalized=False)
        deficit = float(riesz_convolve(fp, spec).values.max() - integrate(fp))
        lemma = {"upper_bound": {"deficit": deficit, "scale": upper_bound_scale(N, alpha, 2.0)}}
    else:
        t_scale, s_scale = nehari_scale_nls(up, 2 * p), nehari_scale_nls(um, 2 * p)
        lemma = {"riesz_energy_error": check_riesz_energy_error(gst.field, p, alpha).to_dict()}
    if not nod.converged:
        record["flags"].append("nodal_not_converged")
    if not gst.converged:
        record["flags"].append("groundstate_not_converged")
    if fit.separation > grid.half_length / 2:
        record["flags"].append("separation_beyond_guard")
    record.update({
        "c_gst": gst.energy,
        "c_nod": nod.energy,
        "gap_gst": abs(gst.energy - target_gst),
        "gap_nod": abs(nod.energy - target_nod),
        "nodal_below_twice_gst": bool(nod.energy < 2 * gst.energy),
        "groundstate": _solve_summary(gst),
        "nodal": {
            **_solve_summary(nod),
            "xi_plus": fit.xi_plus.tolist(),
            "xi_minus": fit.xi_minus.tolist(),
            "separation": fit.separation,
            "separation_pow_Nmalpha": fit.separation ** (N - alpha),
            "fit_error": fit.fit_error_h1,
            "symmetry_defect": sd.value,
            "symmetry_defect_scan_min": sd.scan_minimum,
            "midpoint": sd.midpoint,
            "t_scale": t_scale,
            "s_scale": s_scale,
            "restarts": restarts,
        },
        "lemma_checks": lemma,
        "box": {"half_length": grid.half_length, "points": grid.points_per_axis, "doublings": doublings},
    })
    return record, {"groundstate": gst.field, "nodal": nod.field}


def power_law_limit(xs: Sequence[float], ys: Sequence[float]) -> dict | None:
    """Fit ``y = y_inf + C x^k`` through three points (``x`` = distance to the limit)."""
    if len(xs) < 3:
        return None
    x = np.asarray(xs[-3:], dtype=float)
    y = np.asarray(ys[-3:], dtype=float)
    if not np.all(np.isfinite(y)) or np.any(x <= 0):
        return None
    scale = max(np.max(np.abs(y - y[-1])), 1e-300)

    def resid(theta):
        y_inf, c, k = theta
        return (y_inf + c * x**k - y) / scale

    # start from the slope of consecutive differences
    d1, d2 = y[0] - y[1], y[1] - y[2]
    k0 = 1.0
    if d1 * d2 > 0 and x[0] != x[1] != x[2]:
        k0 = float(np.clip(np.log(d1 / d2) / np.log(x[0] / x[1]), 0.05, 5.0))
    c0 = (y[0] - y[2]) / (x[0] ** k0 - x[2] ** k0)
    sol = least_squares(resid, [y[2] - c0 * x[2] ** k0, c0, k0], bounds=([-np.inf, -np.inf, 0.01], [np.inf, np.inf, 10.0]))
    if not sol.success:
        return None
    y_inf, c, k = sol.x
    return {"limit": float(y_inf), "coefficient": float(c), "exponent": float(k), "residual": float(np.max(np.abs(sol.fun)) * scale)}


def _extrapolate(cfg: SweepConfig, records: list) -> dict:
    ok = [r for r in records if r.get("error") is None]
    N = cfg.dimension
    dist = [r["alpha"] if cfg.mode == "alpha0" else N - r["alpha"] for r in ok]
    out = {}
    for key, target in (("c_gst", "target_gst"), ("c_nod", "target_nod")):
        fit = power_law_limit(dist, [r[key] for r in ok])
        if fit is not None:
            fit["target"] = ok[-1][target]
            fit["gap"] = abs(fit["limit"] - fit["target"])
        out[key] = fit
    return out


def _is_decreasing(values, floor: float = 0.0) -> bool:
    v = [max(float(x), floor) for x in values]
    return all(b < a or (a == floor and b == floor) for a, b in zip(v, v[1:]))


def _summary(cfg: SweepConfig, records: list) -> dict:
    ok = [r for r in records if r.get("error") is None]
    nod = [r["nodal"] for r in ok]
    return {
        "points": len(records),
        "failed": len(records) - len(ok),
        "gap_gst_decreasing": _is_decreasing([r["gap_gst"] for r in ok]),
        "gap_nod_decreasing": _is_decreasing([r["gap_nod"] for r in ok]),
        "nodal_below_twice_gst_all": all(r["nodal_below_twice_gst"] for r in ok),
        "fit_error_decreasing": _is_decreasing([n["fit_error"] for n in nod]),
        "separation_increasing": all(b > a for a, b in zip([n["separation"] for n in nod], [n["separation"] for n in nod][1:])),
        "symmetry_defect_decreasing": _is_decreasing([n["symmetry_defect"] for n in nod], floor=1e-6),
        "final_symmetry_defect": nod[-1]["symmetry_defect"] if nod else None,
    }


def run_sweep(cfg: SweepConfig) -> ExperimentReport:
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(lambda a: run_point(cfg, a), cfg.alphas))
    else:
        results = [run_point(cfg, a) for a in cfg.alphas]
    records = [r for r, _ in results]
    grid = GridSpec(cfg.dimension, cfg.half_length, cfg.points)
    _, _, tg, tn = _references(cfg, grid)
    targets = {"gst": tg, "nod": tn}
    if cfg.mode == "alpha0":
        targets["gamma_q"] = tg
    else:
        targets["kappa_p1"] = tg
        targets["kappa_p2"] = kappa_level(cfg.dimension, cfg.p, 2.0)
    report = ExperimentReport(cfg.mode, cfg.to_dict(), targets, records, _extrapolate(cfg, records), _summary(cfg, records))
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for (rec, fields) in results:
            for name, f in fields.items():
                write_field(f, out / f"{name}_alpha{rec['alpha']:.6g}.chqf")
        if "json" in cfg.formats:
            write_json(report.to_dict(), out / "report.json")
        if "csv" in cfg.formats:
            write_csv(report.to_dict(), out / "report.csv")
    return report


def run_sweep_alpha0(cfg: SweepConfig) -> ExperimentReport:
    if cfg.mode != "alpha0":
        raise ValueError("run_sweep_alpha0 needs mode='alpha0'")
    return run_sweep(cfg)


def run_sweep_alphaN(cfg: SweepConfig) -> ExperimentReport:
    if cfg.mode != "alphaN":
        raise ValueError("run_sweep_alphaN needs mode='alphaN'")
    return run_sweep(cfg)
