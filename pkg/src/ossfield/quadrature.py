"""One-dimensional building blocks for the slowly decaying oscillatory integrals
behind the isotropic fractional covariance.

* ``fourier_power_tail(z, mu)``  = int_z^inf e^{iu} u^{-mu} du        (z large)
* ``bessel_power_tail(z, beta)`` = int_z^inf J0(u) u^{-beta} du       (any z > 0)
* ``one_minus_cos_moment(alpha)`` = int_0^inf (1 - cos u) u^{-1-alpha} du
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import j0

ASYMPTOTIC_CUT = 60.0


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def panel_nodes(edges, n: int = 16):
    """Composite Gauss-Legendre nodes/weights over consecutive panels."""
    x, w = gauss_legendre(n)
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1, None], edges[1:, None]
    return (a + (b - a) * x).ravel(), ((b - a) * w).ravel()


def graded_edges(lo: float, mid: float, hi: float, width: float) -> np.ndarray:
    """Geometric panels (ratio 2) from ``lo`` to ``mid``, then uniform panels of
    at most ``width`` up to ``hi``."""
    edges = [lo]
    while 2.0 * edges[-1] < mid:
        edges.append(2.0 * edges[-1])
    if mid > edges[-1]:
        edges.append(mid)
    n_uniform = max(int(math.ceil((hi - edges[-1]) / width)), 0)
    if n_uniform:
        edges.extend(np.linspace(edges[-1], hi, n_uniform + 1)[1:])
    return np.asarray(edges)


def fourier_power_tail(z: float, mu: float) -> complex:
    """``int_z^inf e^{iu} u^{-mu} du`` via its integration-by-parts series
    ``i e^{iz} z^{-mu} sum_j (mu)_j (-i/z)^j``, truncated at the smallest term."""
    total = 0j
    term = 1.0 + 0j
    prev = math.inf
    for j in range(200):
        size = abs(term)
        if size > prev:
            break
        total += term
        if size <= 1e-17 * abs(total):
            break
        prev = size
        term = term * (mu + j) * (-1j / z)
    return 1j * complex(math.cos(z), math.sin(z)) * z ** (-mu) * total


@lru_cache(maxsize=None)
def _hankel_coefficients(n: int = 40):
    a = [1.0]
    for k in range(1, n):
        a.append(a[-1] * (-((2 * k - 1) ** 2)) / (8.0 * k))
    return tuple(a)


def _bessel_tail_asymptotic(z: float, beta: float) -> float:
    # J0(u) = Re[ sqrt(2/(pi u)) e^{i(u - pi/4)} sum_k a_k i^k u^{-k} ]
    total = 0j
    prev = math.inf
    for k, ak in enumerate(_hankel_coefficients()):
        term = ak * (1j**k) * fourier_power_tail(z, beta + 0.5 + k)
        size = abs(term)
        if size > prev:
            break
        total += term
        if size <= 1e-17 * abs(total):
            break
        prev = size
    phase = complex(math.cos(-math.pi / 4), math.sin(-math.pi / 4))
    return (math.sqrt(2.0 / math.pi) * phase * total).real


def bessel_power_tail(z: float, beta: float) -> float:
    """``int_z^inf J0(u) u^{-beta} du`` for ``z > 0`` and ``beta > 1/2``."""
    if z <= 0:
        raise ValueError("lower limit must be positive")
    if z >= ASYMPTOTIC_CUT:
        return _bessel_tail_asymptotic(z, beta)
    edges = graded_edges(z, max(1.0, z), ASYMPTOTIC_CUT, 1.0)
    u, w = panel_nodes(edges)
    return float(w @ (j0(u) * u ** (-beta))) + _bessel_tail_asymptotic(ASYMPTOTIC_CUT, beta)


def one_minus_cos_moment(alpha: float) -> float:
    """``int_0^inf (1 - cos u) u^{-1-alpha} du`` for ``0 < alpha < 2``.

    Series for the first panel [0, eps], graded panels to 1, unit panels to the
    asymptotic cut, and the analytic power tail minus the oscillatory tail.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0, 2)")
    eps = 1.0e-4
    head = eps ** (2 - alpha) / (2 * (2 - alpha)) - eps ** (4 - alpha) / (24 * (4 - alpha))
    edges = graded_edges(eps, 1.0, ASYMPTOTIC_CUT, 1.0)
    u, w = panel_nodes(edges)
    # 1 - cos u = 2 sin^2(u/2) avoids cancellation near 0
    body = float(w @ (2.0 * np.sin(0.5 * u) ** 2 * u ** (-1.0 - alpha)))
    Z = ASYMPTOTIC_CUT
    tail = Z ** (-alpha) / alpha - fourier_power_tail(Z, 1.0 + alpha).real
    return head + body + tail
