import numpy as np
import pytest

from choquardlab.checks import (
    check_fourier_bound,
    check_oscillation_degradation,
    check_riesz_energy_error,
    check_translated_limit,
    check_upper_bound_alphaN,
    fractional_laplacian_norm,
    log_alpha_rule,
    separation_for_rho,
    upper_bound_scale,
)
from choquardlab.grid import Field, GridSpec, gradient, l2_inner

G = GridSpec(1, 40.0, 2048)
X = G.axis()
BUMP = Field(G, np.exp(-(X**2)))


def test_fractional_norm_at_s_one_is_gradient_norm():
    d = gradient(BUMP)
    assert fractional_laplacian_norm(BUMP, 1.0) == pytest.approx(np.sqrt(l2_inner(d, d)), rel=1e-12)
    assert fractional_laplacian_norm(BUMP, 0.0) == pytest.approx(np.sqrt(l2_inner(BUMP, BUMP)), rel=1e-12)


def test_fourier_bound_single_case():
    rec = check_fourier_bound(BUMP, BUMP, 0.05, 0.5, 0.5)
    assert rec.holds and 0 < rec.lhs < rec.rhs


def test_fourier_bound_lhs_linear_in_alpha():
    g = Field(G, 1 / np.cosh(X - 1))
    ratios = [check_fourier_bound(BUMP, g, a, 0.5, 0.5).lhs / a for a in (0.2, 0.1, 0.05, 0.025)]
    assert max(ratios) / min(ratios) <= 2.0


def test_fourier_bound_rejects_bad_orders():
    with pytest.raises(ValueError):
        check_fourier_bound(BUMP, BUMP, 0.5, 0.2, 0.5)
    with pytest.raises(ValueError):
        check_fourier_bound(BUMP, BUMP, 0.1, 0.2, 1.5)


def test_energy_error_ratio_sech():
    u = Field(G, 1 / np.cosh(X))
    r = [check_riesz_energy_error(u, 2.0, a).bound_ratio for a in (0.2, 0.1, 0.05)]
    assert max(r) / min(r) < 2.0


def test_energy_error_ratio_separated_bumps():
    u = Field(G, np.exp(-((X - 10) ** 2)) + np.exp(-((X + 10) ** 2)))
    r = [check_riesz_energy_error(u, 2.0, a).bound_ratio for a in (0.2, 0.1, 0.05)]
    assert max(r) / min(r) < 2.0


def test_log_rule():
    assert log_alpha_rule(np.e) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        log_alpha_rule(1)


def test_oscillation_negative_and_large():
    g = GridSpec(1, 8.0, 1024)
    psi = Field(g, np.exp(-(g.axis() ** 2) / 0.25))
    (rec,) = check_oscillation_degradation(psi, [32], log_alpha_rule)
    assert rec.error < 0
    assert abs(rec.error) >= 10 * abs(rec.reference_error)
    assert rec.limit < rec.error


def test_oscillation_error_tracks_prediction_for_wide_profile():
    g = GridSpec(1, 8.0, 1024)
    psi = Field(g, np.exp(-(g.axis() ** 2)))
    recs = check_oscillation_degradation(psi, [8, 16, 32, 64], log_alpha_rule)
    for r in recs:
        assert r.error < 0
        assert r.error == pytest.approx(r.prediction, rel=0.05)


def test_upper_bound_scale_and_ratio():
    assert upper_bound_scale(1, 0.9, 2.0) == pytest.approx(0.1 / 0.8**0.5)
    f = Field(G, np.exp(-(X**2) / 0.25))
    rec = check_upper_bound_alphaN(f, [0.8, 0.9, 0.95, 0.98])
    assert all(d > 0 for d in rec.deficits)
    assert 0.8 <= rec.fitted_exponent <= 1.2
    with pytest.raises(ValueError):
        check_upper_bound_alphaN(f, [0.4])
    with pytest.raises(ValueError):
        check_upper_bound_alphaN(f * -1.0, [0.9])


def test_separation_rule():
    assert separation_for_rho(1, 0.5, 1.0) == 0.0
    d = separation_for_rho(1, 0.98, 0.5)
    assert (1 + d) ** 0.02 == pytest.approx(2.0, rel=1e-12)


def test_translated_limit_gaps():
    f = Field(G, np.exp(-(X**2)))
    g = Field(G, np.exp(-((X - 1) ** 2) / 2))
    one = check_translated_limit(f, g, [0.7, 0.85, 0.95, 0.98], rho=1.0)
    assert all(b < a for a, b in zip(one.gaps, one.gaps[1:]))
    half = check_translated_limit(f, g, [0.98], rho=0.5)
    assert half.gaps[-1] <= 0.02


def test_translated_limit_box_guard():
    f = Field(G, np.exp(-(X**2)))
    with pytest.raises(ValueError, match="guard"):
        check_translated_limit(f, f, [0.85], rho=0.5, in_box=True)
    rec = check_translated_limit(f, f, [0.7], separation_rule=lambda a: 5.0, in_box=True)
    ref = check_translated_limit(f, f, [0.7], separation_rule=lambda a: 5.0)
    assert rec.values[0] == pytest.approx(ref.values[0], rel=1e-6)
