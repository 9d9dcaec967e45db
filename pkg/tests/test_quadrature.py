from __future__ import annotations

import math

import mpmath as mp
import pytest
from scipy.special import gamma as Gamma

from ossfield.quadrature import (
    ASYMPTOTIC_CUT,
    bessel_power_tail,
    fourier_power_tail,
    gauss_legendre,
    one_minus_cos_moment,
    panel_nodes,
)

mp.mp.dps = 30


def test_gauss_legendre_exact_on_polynomials():
    x, w = gauss_legendre(8)
    for k in range(16):
        assert abs(float(w @ x**k) - 1.0 / (k + 1)) <= 1e-15


def test_panel_nodes_cover_interval():
    u, w = panel_nodes([0.0, 0.5, 2.0], 16)
    assert abs(w.sum() - 2.0) <= 1e-14
    assert abs(float(w @ u**3) - 4.0) <= 1e-13


@pytest.mark.parametrize("z,mu", [(60.0, 1.5), (80.0, 2.5), (200.0, 3.0)])
def test_fourier_power_tail_matches_mpmath(z, mu):
    ref = mp.quadosc(lambda u: mp.exp(1j * u) * u ** (-mu), [z, mp.inf], omega=1)
    got = fourier_power_tail(z, mu)
    assert abs(got - complex(ref)) <= 1e-13 * abs(complex(ref))


@pytest.mark.parametrize("z,beta", [(0.3, 1.5), (5.0, 1.0), (30.0, 2.0), (59.0, 1.5), (75.0, 1.2)])
def test_bessel_power_tail_matches_mpmath(z, beta):
    ref = float(mp.quadosc(lambda u: mp.besselj(0, u) * u ** (-beta), [z, mp.inf], omega=1))
    got = bessel_power_tail(z, beta)
    assert abs(got - ref) <= 1e-12 * max(abs(ref), z ** (-beta - 0.5))


@pytest.mark.parametrize("alpha", [0.2, 0.5, 1.0, 1.5, 1.9])
def test_one_minus_cos_moment_closed_form(alpha):
    if alpha == 1.0:
        ref = math.pi / 2
    else:
        ref = Gamma(1 - alpha) * math.cos(math.pi * alpha / 2) / alpha
    assert abs(one_minus_cos_moment(alpha) - ref) <= 1e-12 * ref


def test_one_minus_cos_moment_domain():
    with pytest.raises(ValueError):
        one_minus_cos_moment(2.0)


def test_asymptotic_cut_constant():
    assert ASYMPTOTIC_CUT == 60.0
