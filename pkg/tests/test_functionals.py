import numpy as np
import pytest
from scipy.optimize import golden

from choquardlab.functionals import (
    ChoquardParams,
    NehariError,
    action_choquard,
    action_nls,
    action_nlsN,
    maximize_nodal,
    nehari_defect,
    nehari_nodal_defects,
    nehari_scale,
    nehari_scale_nls,
    nehari_scale_psi,
    nodal_objective,
    nodal_pieces,
    nodal_scales,
    residual_choquard,
    residual_nls,
    residual_nlsN,
)
from choquardlab.grid import Field, GridSpec, h1_inner, integrate, negative_part, positive_part
from choquardlab.limits import closed_form_1d, scale_to_psi
from choquardlab.riesz import origin_weight, riesz_constant

from .conftest import smooth_random_field

GRID = GridSpec(1, 20.0, 256)


def test_params_validation():
    with pytest.raises(ValueError):
        ChoquardParams(1, 2.0, 1.0)
    with pytest.raises(ValueError):
        ChoquardParams(1, 1.5, 0.5)
    with pytest.raises(ValueError):
        ChoquardParams(3, 5.0, 1.0)  # p beyond (N + alpha) / (N - 2)
    ChoquardParams(3, 3.9, 1.0)


def _fd_check(action, residual, u, v, eps=1e-5):
    fd = (action(u + v * eps) - action(u - v * eps)) / (2 * eps)
    an = h1_inner(residual(u), v)
    return abs(fd - an) / max(abs(an), 1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_residuals_are_h1_gradients(seed):
    rng = np.random.default_rng(seed)
    u = smooth_random_field(GRID, rng)
    v = smooth_random_field(GRID, rng)
    prm = ChoquardParams(1, 2.5, rng.uniform(0.1, 0.9))
    assert _fd_check(lambda w: action_choquard(w, prm), lambda w: residual_choquard(w, prm), u, v) <= 1e-5
    assert _fd_check(lambda w: action_nls(w, 4.5), lambda w: residual_nls(w, 4.5), u, v) <= 1e-5
    assert _fd_check(lambda w: action_nlsN(w, 3.0, 1.7), lambda w: residual_nlsN(w, 3.0, 1.7), u, v) <= 1e-5


def test_two_dim_gradient(rng):
    g = GridSpec(2, 8.0, 32)
    u, v = smooth_random_field(g, rng), smooth_random_field(g, rng)
    prm = ChoquardParams(2, 2.0, 1.2)
    assert _fd_check(lambda w: action_choquard(w, prm), lambda w: residual_choquard(w, prm), u, v) <= 1e-5


def test_closed_form_nls_groundstate_has_small_residual():
    g = GridSpec(1, 30.0, 1024)
    U = Field(g, closed_form_1d(4.0, g.axis()))
    r = residual_nls(U, 4.0)
    assert np.sqrt(h1_inner(r, r)) <= 1e-8


def test_scaling_map_to_nonlocal_coefficient_problem():
    g = GridSpec(1, 30.0, 1024)
    p, mu = 3.0, 2.0
    u = Field(g, closed_form_1d(p, g.axis()))
    v = scale_to_psi(u, p, mu)
    r = residual_nlsN(v, p, mu)
    assert np.sqrt(h1_inner(r, r)) <= 1e-7
    lhs = action_nlsN(v, p, mu)
    rhs = (0.5 - 1 / (2 * p)) / mu ** (1 / (p - 1)) * (action_nls(u, p) / (0.5 - 1 / p)) ** ((p - 2) / (p - 1))
    assert lhs == pytest.approx(rhs, rel=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_nehari_scale_maximizes_fibre(seed):
    rng = np.random.default_rng(100 + seed)
    u = smooth_random_field(GRID, rng)
    prm = ChoquardParams(1, 2.0 + seed * 0.3, 0.5)
    t = nehari_scale(u, prm)
    # golden-section search of t -> J(t u) as independent oracle
    t_gs = golden(lambda s: -action_choquard(u * s, prm), brack=(0.1 * t, t, 3 * t), tol=1e-12)
    assert t == pytest.approx(t_gs, rel=1e-8)
    w = u * t
    assert abs(nehari_defect(w, prm)) <= 1e-9 * h1_inner(w, w)
    # on the manifold, J = (1/2 - 1/2p) ||w||^2
    assert action_choquard(w, prm) == pytest.approx((0.5 - 0.5 / prm.p) * h1_inner(w, w), rel=1e-10)


def test_nehari_scale_is_homogeneous_of_degree_minus_one(rng):
    u = smooth_random_field(GRID, rng)
    prm = ChoquardParams(1, 2.5, 0.3)
    assert nehari_scale(u * 3.0, prm) == pytest.approx(nehari_scale(u, prm) / 3.0, rel=1e-12)


def test_local_nehari_scales_against_golden(rng):
    u = smooth_random_field(GRID, rng)
    t = nehari_scale_nls(u, 4.0)
    assert t == pytest.approx(golden(lambda s: -action_nls(u * s, 4.0), brack=(0.1 * t, t, 3 * t), tol=1e-12), rel=1e-8)
    t = nehari_scale_psi(u, 3.0, 2.0)
    assert t == pytest.approx(golden(lambda s: -action_nlsN(u * s, 3.0, 2.0), brack=(0.1 * t, t, 3 * t), tol=1e-12), rel=1e-8)


def test_vanishing_field_rejected():
    with pytest.raises(NehariError):
        nehari_scale(GRID.zeros(), ChoquardParams(1, 2.0, 0.5))
    x = GRID.axis()
    with pytest.raises(NehariError):
        nodal_scales(Field(GRID, np.exp(-(x**2))), ChoquardParams(1, 2.0, 0.5))


def _two_bump(g, d=6.0, a=1.0, b=0.7):
    x = g.axis()
    return Field(g, a * np.exp(-((x + d / 2) ** 2)) - b * np.exp(-((x - d / 2) ** 2) / 1.5))


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_nodal_scales_against_grid_search(p):
    u = _two_bump(GRID)
    prm = ChoquardParams(1, p, 0.6)
    sc = nodal_scales(u, prm)
    up, um = positive_part(u), negative_part(u)

    def J(t, s):
        return action_choquard(up * t + um * s, prm)

    # dense grid, then two zooms
    ct, cs, width = sc.t, sc.s, 0.5 * max(sc.t, sc.s)
    for _ in range(3):
        ts = np.linspace(ct - width, ct + width, 41)
        ss = np.linspace(cs - width, cs + width, 41)
        vals = np.array([[J(t, s) for s in ss] for t in ts])
        i, j = np.unravel_index(np.argmax(vals), vals.shape)
        ct, cs, step = ts[i], ss[j], ts[1] - ts[0]
        width = 2 * step
    assert abs(ct - sc.t) <= step and abs(cs - sc.s) <= step
    assert sc.energy == pytest.approx(J(sc.t, sc.s), rel=1e-12)
    dp, dm = nehari_nodal_defects(up * sc.t + um * sc.s, prm)
    assert abs(dp) <= 1e-10 and abs(dm) <= 1e-10


def test_nodal_objective_is_exact_expansion(rng):
    u = _two_bump(GRID, d=3.0)
    prm = ChoquardParams(1, 2.5, 0.4)
    pc, _, _ = nodal_pieces(u, prm)
    up, um = positive_part(u), negative_part(u)
    for t, s in [(0.7, 1.3), (1.0, 1.0), (2.0, 0.4)]:
        F = nodal_objective(pc, t**prm.p, s**prm.p)
        assert F == pytest.approx(action_choquard(up * t + um * s, prm), rel=1e-12)


def test_nodal_decoupled_closed_form():
    # with no cross pairings the optimum is tau = (a / B)^(p / (2p - 2))
    from choquardlab.functionals import NodalPieces

    p = 3.0
    pc = NodalPieces(2.0, 5.0, 0.0, 0.5, 0.0, 1.5, p)
    sc = maximize_nodal(pc)
    e = 1 / (2 * p - 2)
    assert sc.t == pytest.approx((2.0 / 0.5) ** e, rel=1e-12)
    assert sc.s == pytest.approx((5.0 / 1.5) ** e, rel=1e-12)


def test_pieces_on_eight_cell_grid_by_hand():
    g = GridSpec(1, 4.0, 8)  # h = 1
    v = np.zeros(8)
    v[2], v[3], v[5] = 1.0, 2.0, -1.5
    u = Field(g, v)
    p, alpha = 2.0, 0.5
    prm = ChoquardParams(1, p, alpha)
    pc, _, _ = nodal_pieces(u, prm)

    # explicit DFT: ||w||^2 = (h / n) sum_k (1 + 4 pi^2 xi_k^2) |w^_k|^2
    k = np.arange(8)
    xi = np.where(k < 4, k, k - 8) / 8.0
    E = np.exp(-2j * np.pi * np.outer(k, k) / 8)

    def h1(a, b):
        return float(np.real(np.sum((1 + 4 * np.pi**2 * xi**2) * (E @ a) * np.conj(E @ b))) / 8)

    vp, vm = np.maximum(v, 0), np.minimum(v, 0)
    assert pc.a_plus == pytest.approx(h1(vp, vp), rel=1e-13)
    assert pc.a_minus == pytest.approx(h1(vm, vm), rel=1e-13)
    assert pc.cross_h1 == pytest.approx(h1(vp, vm), abs=1e-13)

    A, w0 = riesz_constant(1, alpha), origin_weight(1, alpha, 1.0)

    def K(i, j):
        return w0 if i == j else abs(i - j) ** (alpha - 1)

    fp, fm = np.abs(vp) ** p, np.abs(vm) ** p
    B = lambda f, h: A * sum(f[i] * h[j] * K(i, j) for i in range(8) for j in range(8))
    assert pc.b_pp == pytest.approx(B(fp, fp), rel=1e-12)
    assert pc.b_pm == pytest.approx(B(fp, fm), rel=1e-12)
    assert pc.b_mm == pytest.approx(B(fm, fm), rel=1e-12)
    # spot values: b_pm = A * 2.25 * (1 * 3^(a-1) + 4 * 2^(a-1))
    assert pc.b_pm == pytest.approx(A * 2.25 * (3 ** (alpha - 1) + 4 * 2 ** (alpha - 1)), rel=1e-12)


def test_nls_action_of_closed_form():
    g = GridSpec(1, 30.0, 1024)
    U = Field(g, closed_form_1d(4.0, g.axis()))
    assert action_nls(U, 4.0) == pytest.approx(4 / 3, rel=1e-10)
    assert integrate(U * U) == pytest.approx(4.0, rel=1e-10)
