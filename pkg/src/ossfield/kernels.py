"""Hot inner loops, each available as a numba kernel and a numpy fallback.

The public names (``ofbf_polar_sum``, ``node_norms``, ``philox4x64``)
dispatch on :data:`ossfield._accel.USE_NUMBA`. The ``*_numpy`` and ``*_numba``
variants stay importable so tests and the benchmark can compare both paths.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, njit

NORM_KINDS = {"euclidean": 0, "max": 1, "one": 2}

# ---------------------------------------------------------------------------
# 2-D spectral integral over a polar (rho, phi) tensor grid
# ---------------------------------------------------------------------------
# The angles are equispaced over a full period of the integrand (a half circle
# suffices, since the bracket is even under phi -> phi + pi); the angular
# weight is 2 pi / len(cphi). The bracket 1 + cos(a - b) - cos a - cos b is
# evaluated as 4 sin(a/2) sin(b/2) cos((a - b)/2), which has no cancellation
# as rho -> 0.


def ofbf_polar_sum_numpy(rho, w_rho, cphi, sphi, s, t, gamma):
    p = 0.5 * (cphi * s[0] + sphi * s[1])
    q = 0.5 * (cphi * t[0] + sphi * t[1])
    bracket = 4.0 * np.sin(np.outer(rho, p)) * np.sin(np.outer(rho, q)) * np.cos(np.outer(rho, p - q))
    radial = w_rho * rho ** (1.0 - gamma)
    return (2.0 * math.pi / cphi.shape[0]) * float(radial @ bracket.sum(axis=1))


# fastmath lets LLVM reorder the angular sums; results differ from the numpy
# path only at rounding level
@njit(fastmath=True)
def ofbf_polar_sum_numba(rho, w_rho, cphi, sphi, s, t, gamma):
    n_phi = cphi.shape[0]
    p = np.empty(n_phi)
    q = np.empty(n_phi)
    d = np.empty(n_phi)
    for j in range(n_phi):
        p[j] = 0.5 * (cphi[j] * s[0] + sphi[j] * s[1])
        q[j] = 0.5 * (cphi[j] * t[0] + sphi[j] * t[1])
        d[j] = p[j] - q[j]
    total = 0.0
    for i in range(rho.shape[0]):
        r = rho[i]
        acc = 0.0
        for j in range(n_phi):
            acc += 4.0 * math.sin(r * p[j]) * math.sin(r * q[j]) * math.cos(r * d[j])
        total += w_rho[i] * r ** (1.0 - gamma) * acc
    return (2.0 * math.pi / n_phi) * total


# ---------------------------------------------------------------------------
# ||P_k x|| for a stack of propagators P_k (nodes of the anisotropic norm integral)
# ---------------------------------------------------------------------------


def node_norms_numpy(props, x, kind):
    y = props @ x
    if kind == 0:
        return np.sqrt(np.einsum("ki,ki->k", y, y))
    if kind == 1:
        return np.abs(y).max(axis=1)
    return np.abs(y).sum(axis=1)


@njit
def node_norms_numba(props, x, kind):
    n_nodes, m, _ = props.shape
    out = np.empty(n_nodes)
    for k in range(n_nodes):
        acc = 0.0
        for i in range(m):
            yi = 0.0
            for j in range(m):
                yi += props[k, i, j] * x[j]
            if kind == 0:
                acc += yi * yi
            elif kind == 1:
                acc = max(acc, abs(yi))
            else:
                acc += abs(yi)
        out[k] = math.sqrt(acc) if kind == 0 else acc
    return out


# ---------------------------------------------------------------------------
# Philox4x64-10 counter-based generator
# ---------------------------------------------------------------------------

PHILOX_M0 = np.uint64(0xD2E7470EE14C6C93)
PHILOX_M1 = np.uint64(0xCA5A826395121157)
PHILOX_W0 = np.uint64(0x9E3779B97F4A7C15)
PHILOX_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)


def _mulhilo_numpy(a, b):
    a_lo, a_hi = a & _MASK32, a >> _SHIFT32
    b_lo, b_hi = b & _MASK32, b >> _SHIFT32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    cross = (ll >> _SHIFT32) + (lh & _MASK32) + (hl & _MASK32)
    hi = hh + (lh >> _SHIFT32) + (hl >> _SHIFT32) + (cross >> _SHIFT32)
    return hi, a * b


def philox4x64_numpy(counters, key):
    x0, x1, x2, x3 = (counters[:, i].copy() for i in range(4))
    k0, k1 = np.uint64(key[0]), np.uint64(key[1])
    with np.errstate(over="ignore"):
        for _ in range(10):
            hi0, lo0 = _mulhilo_numpy(PHILOX_M0, x0)
            hi1, lo1 = _mulhilo_numpy(PHILOX_M1, x2)
            x0, x1, x2, x3 = hi1 ^ x1 ^ k0, lo1, hi0 ^ x3 ^ k1, lo0
            k0 = k0 + PHILOX_W0
            k1 = k1 + PHILOX_W1
    return np.stack([x0, x1, x2, x3], axis=1)


@njit
def _mulhilo_numba(a, b):
    mask = np.uint64(0xFFFFFFFF)
    sh = np.uint64(32)
    a_lo = a & mask
    a_hi = a >> sh
    b_lo = b & mask
    b_hi = b >> sh
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    cross = (ll >> sh) + (lh & mask) + (hl & mask)
    hi = hh + (lh >> sh) + (hl >> sh) + (cross >> sh)
    return hi, a * b


@njit
def philox4x64_numba(counters, key):
    n = counters.shape[0]
    out = np.empty((n, 4), dtype=np.uint64)
    m0 = np.uint64(0xD2E7470EE14C6C93)
    m1 = np.uint64(0xCA5A826395121157)
    w0 = np.uint64(0x9E3779B97F4A7C15)
    w1 = np.uint64(0xBB67AE8584CAA73B)
    for r in range(n):
        x0 = counters[r, 0]
        x1 = counters[r, 1]
        x2 = counters[r, 2]
        x3 = counters[r, 3]
        k0 = key[0]
        k1 = key[1]
        for _ in range(10):
            hi0, lo0 = _mulhilo_numba(m0, x0)
            hi1, lo1 = _mulhilo_numba(m1, x2)
            x0, x1, x2, x3 = hi1 ^ x1 ^ k0, lo1, hi0 ^ x3 ^ k1, lo0
            k0 = k0 + w0
            k1 = k1 + w1
        out[r, 0] = x0
        out[r, 1] = x1
        out[r, 2] = x2
        out[r, 3] = x3
    return out


if USE_NUMBA:
    ofbf_polar_sum = ofbf_polar_sum_numba
    node_norms = node_norms_numba
    philox4x64 = philox4x64_numba
else:
    ofbf_polar_sum = ofbf_polar_sum_numpy
    node_norms = node_norms_numpy
    philox4x64 = philox4x64_numpy
