import numpy as np
import pytest
from scipy.special import gamma as G

from choquardlab.grid import Field, GridSpec, integrate, translate
from choquardlab.riesz import (
    RieszKernelSpec,
    cross_riesz_energy,
    direct_convolve,
    hls_constant,
    hls_constant_unnormalized,
    origin_weight,
    riesz_constant,
    riesz_convolve,
    riesz_energy,
    shifted_cross_energy,
    unnormalized_ratio,
)


def test_riesz_constant_three_dim_alpha_two():
    assert riesz_constant(3, 2.0) == pytest.approx(1 / (4 * np.pi), rel=1e-14)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_riesz_constant_matches_gamma_formula(N):
    for a in (0.1, 0.5 * N, 0.9 * N):
        ref = G((N - a) / 2) / (G(a / 2) * np.pi ** (N / 2) * 2**a)
        assert riesz_constant(N, a) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_riesz_constant_vanishes_linearly_at_zero(N):
    # Gamma(a/2) ~ 2/a, so A_a / a -> Gamma(N/2) / (2 pi^(N/2))
    lim = G(N / 2) / (2 * np.pi ** (N / 2))
    for a in (1e-3, 1e-5):
        assert riesz_constant(N, a) / a == pytest.approx(lim, rel=5 * a * N + 1e-6)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_unnormalized_ratio_near_N(N):
    lim = G(N / 2) * np.pi ** (N / 2) * 2 ** (N - 1)
    a = N - 1e-6
    assert unnormalized_ratio(N, a) / (N - a) == pytest.approx(lim, rel=1e-5)


def test_hls_limits():
    assert abs(hls_constant(1, 1e-4) - 1) <= 1e-3
    assert abs(hls_constant_unnormalized(1, 1 - 1e-4) - 1) <= 1e-3


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("frac", [0.05, 0.4, 0.8])
def test_hls_constants_related_by_normalization(N, frac):
    a = frac * N
    assert hls_constant(N, a) * unnormalized_ratio(N, a) == pytest.approx(hls_constant_unnormalized(N, a), rel=1e-12)


def test_invalid_orders_rejected():
    with pytest.raises(ValueError):
        RieszKernelSpec(1, 1.0)
    with pytest.raises(ValueError):
        riesz_constant(2, 0.0)
    with pytest.raises(ValueError):
        origin_weight(2, 0.5, 0.1, rule="corrected")


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("normalized", [True, False])
def test_fft_convolution_matches_direct_sum(alpha, normalized):
    g = GridSpec(1, 12.0, 512)
    x = g.axis()
    f = Field(g, np.exp(-((x - 1.5) ** 2)) + 0.5 / np.cosh(2 * x + 3))
    spec = RieszKernelSpec(1, alpha, normalized)
    fast = riesz_convolve(f, spec).values
    slow = direct_convolve(f, spec).values
    assert np.max(np.abs(fast - slow)) <= 1e-10 * np.max(np.abs(slow))


def test_two_dim_convolution_matches_direct_sum():
    g = GridSpec(2, 4.0, 16)
    X, Y = g.coordinates()
    f = Field(g, np.exp(-(X**2 + 2 * Y**2)))
    spec = RieszKernelSpec(2, 0.7)
    fast = riesz_convolve(f, spec).values
    slow = direct_convolve(f, spec).values
    assert np.max(np.abs(fast - slow)) <= 1e-12 * np.max(np.abs(slow))


def _oracle_energy(u: Field, p: float, alpha: float) -> float:
    g = u.grid
    x = g.axis()
    f = np.abs(u.values) ** p
    d = np.abs(np.subtract.outer(x, x))
    with np.errstate(divide="ignore"):
        K = np.where(d == 0, origin_weight(1, alpha, g.spacing), d ** (alpha - 1))
    return float(riesz_constant(1, alpha) * g.spacing**2 * f @ K @ f)


def test_riesz_energy_matches_quadrature_oracle():
    g = GridSpec(1, 15.0, 512)
    u = Field(g, 1 / np.cosh(g.axis()))
    D = riesz_energy(u, 2.0, RieszKernelSpec(1, 0.5))
    assert D == pytest.approx(_oracle_energy(u, 2.0, 0.5), rel=1e-8)


@pytest.mark.parametrize("alpha", [0.05, 0.5, 0.9])
def test_gaussian_pairing_against_continuum_value(alpha):
    # int int e^{-x^2} e^{-y^2} |x-y|^(a-1) = sqrt(pi/2) 2^(a/2) Gamma(a/2)
    g = GridSpec(1, 20.0, 2048)
    f = Field(g, np.exp(-(g.axis() ** 2)))
    exact = np.sqrt(np.pi / 2) * 2 ** (alpha / 2) * G(alpha / 2)
    val = cross_riesz_energy(f, f, RieszKernelSpec(1, alpha, normalized=False))
    assert val == pytest.approx(exact, rel=1e-6)


def test_normalized_pairing_tends_to_l2_as_alpha_vanishes():
    g = GridSpec(1, 20.0, 1024)
    f = Field(g, np.exp(-(g.axis() ** 2)))
    l2 = integrate(f * f)
    gaps = [abs(cross_riesz_energy(f, f, RieszKernelSpec(1, a)) - l2) for a in (0.1, 0.01, 0.001)]
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-3 * l2


def test_far_field_of_separated_bumps():
    g = GridSpec(1, 40.0, 2048)
    x = g.axis()
    f = Field(g, np.exp(-((x + 10) ** 2)))
    h = Field(g, np.exp(-((x - 10) ** 2)))
    alpha = 0.5
    B = cross_riesz_energy(f, h, RieszKernelSpec(1, alpha))
    far = riesz_constant(1, alpha) * integrate(f) * integrate(h) / 20 ** (1 - alpha)
    assert abs(B - far) / far <= 0.05


@pytest.mark.parametrize("alpha", [0.3, 0.6, 0.98])
def test_shifted_pairing_agrees_with_in_box_translation(alpha):
    g = GridSpec(1, 30.0, 1024)
    x = g.axis()
    f = Field(g, np.exp(-(x**2)))
    h = Field(g, np.exp(-((x - 1) ** 2) / 2))
    spec = RieszKernelSpec(1, alpha, normalized=False)
    # whole-cell, off-lattice and half-cell shifts
    for d in (0.0, 16 * g.spacing, 3.0, 7.3, 2.5 * g.spacing, 0.1 * g.spacing):
        a = shifted_cross_energy(f, h, d, spec)
        b = cross_riesz_energy(f, translate(h, d), spec)
        assert a == pytest.approx(b, rel=1e-4)


def test_shifted_pairing_converges_off_lattice():
    # continuum value of int int e^{-x^2} e^{-(y-d)^2} |x-y|^(a-1) by adaptive quadrature
    from scipy.integrate import quad

    alpha, d = 0.3, 3.0
    F = lambda z: np.sqrt(np.pi / 2) * np.exp(-((z - d) ** 2) / 2) * abs(z) ** (alpha - 1)
    exact = quad(F, -40, 0, limit=400, epsabs=0, epsrel=1e-13)[0] + quad(F, 0, 40, limit=400, epsabs=0, epsrel=1e-13)[0]
    errs = []
    for n in (512, 1024, 2048):
        g = GridSpec(1, 30.0, n)
        f = Field(g, np.exp(-(g.axis() ** 2)))
        errs.append(abs(shifted_cross_energy(f, f, d, RieszKernelSpec(1, alpha, normalized=False)) / exact - 1))
    assert errs[-1] < 2e-5 and errs[0] < 1e-3


def test_convolution_is_translation_covariant():
    g = GridSpec(1, 20.0, 512)
    f = Field(g, np.exp(-(g.axis() ** 2)))
    spec = RieszKernelSpec(1, 0.3)
    shift = 8 * g.spacing
    a = riesz_convolve(translate(f, shift), spec).values
    b = translate(riesz_convolve(f, spec), shift).values
    # only the cells wrapped by the periodic roll differ
    assert np.max(np.abs(a[16:-16] - b[16:-16])) <= 1e-12
