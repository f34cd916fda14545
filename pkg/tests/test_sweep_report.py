import csv
import io
import json

import numpy as np
import pytest

from choquardlab.grid import read_field
from choquardlab.report import CSV_COLUMNS, REPORT_VERSION, dumps, to_csv
from choquardlab.solvers import SolverConfig
from choquardlab.sweep import SweepConfig, power_law_limit, run_sweep


def test_dumps_is_canonical():
    a = dumps({"b": 1.0, "a": [0.1, np.float64(2.5), np.int64(3), None, float("nan")], "c": True})
    b = dumps({"c": True, "a": [0.1, 2.5, 3, None, float("inf")], "b": 1.0})
    assert a == b
    obj = json.loads(a)
    assert list(obj) == ["a", "b", "c"]
    assert obj["a"] == [0.1, 2.5, 3, None, None]
    assert "0.10000000000000001" in a


def test_floats_round_trip_exactly():
    vals = [1 / 3, 1e-300, -2.0, 6.02214076e23, 0.0]
    back = json.loads(dumps(vals))
    assert back == vals and all(isinstance(v, float) for v in back)


def test_unserializable_rejected():
    with pytest.raises(TypeError):
        dumps({"x": object()})


def test_power_law_fit_recovers_synthetic_data():
    xs = [0.4, 0.2, 0.1, 0.05]
    ys = [1.5 - 2.0 * x**1.3 for x in xs]
    fit = power_law_limit(xs, ys)
    assert fit["limit"] == pytest.approx(1.5, abs=1e-8)
    assert fit["exponent"] == pytest.approx(1.3, abs=1e-6)
    assert power_law_limit(xs[:2], ys[:2]) is None


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(mode="alpha0", alphas=(0.1, 0.2)),  # not decreasing
        dict(mode="alphaN", alphas=(0.9, 0.8), p=3.0),  # not increasing
        dict(mode="alphaN", alphas=(0.8, 0.9), p=2.0),  # needs p > 2
        dict(mode="alpha0", alphas=(1.2,)),  # alpha >= N
        dict(mode="sideways", alphas=(0.1,)),
    ],
)
def test_sweep_config_validation(kwargs):
    with pytest.raises(ValueError):
        SweepConfig(**kwargs)


@pytest.fixture(scope="module")
def small_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    cfg = SweepConfig(
        mode="alpha0",
        alphas=(0.4, 0.2, 0.1),
        half_length=30.0,
        points=512,
        solver=SolverConfig(residual_tolerance=1e-8),
        out_dir=str(out),
        formats=("json", "csv"),
    )
    return out, cfg, run_sweep(cfg).to_dict()


def test_sweep_writes_outputs(small_sweep):
    out, _, report = small_sweep
    names = sorted(p.name for p in out.iterdir())
    assert "report.json" in names and "report.csv" in names
    for a in ("0.4", "0.2", "0.1"):
        assert f"groundstate_alpha{a}.chqf" in names and f"nodal_alpha{a}.chqf" in names
    u = read_field(out / "nodal_alpha0.1.chqf")
    assert u.grid.points_per_axis == 512
    assert (out / "report.json").read_text() == dumps(report)


def test_report_layout(small_sweep):
    _, cfg, report = small_sweep
    assert report["report_version"] == REPORT_VERSION
    assert report["mode"] == "alpha0"
    assert json.loads(dumps(report["config"])) == json.loads(dumps(cfg.to_dict()))
    assert [r["alpha"] for r in report["records"]] == [0.4, 0.2, 0.1]
    for r in report["records"]:
        assert r["error"] is None
        assert r["c_nod"] < 2 * r["c_gst"]
        assert r["nodal"]["converged"] and r["groundstate"]["converged"]
    assert report["summary"]["failed"] == 0


def test_csv_projection(small_sweep):
    _, _, report = small_sweep
    rows = list(csv.reader(io.StringIO(to_csv(report))))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 4
    assert float(rows[1][CSV_COLUMNS.index("c_gst")]) == report["records"][0]["c_gst"]


def test_parallel_sweep_matches_serial(small_sweep):
    _, cfg, report = small_sweep
    from dataclasses import replace

    par = run_sweep(replace(cfg, out_dir=None, workers=2)).to_dict()
    assert dumps(par) == dumps(report)
