"""A semistable, not operator self-similar, Levy law.

With Levy measure ``phi = sum_k c0^{-k} delta_{b^k}`` the characteristic exponent
``psi(theta) = sum_k (exp(i theta b^k) - 1) c0^{-k}`` satisfies
``psi(b theta) = c0 psi(theta)`` exactly, but the matching identity for a
general scale ``c`` fails off the lattice ``{c0^k}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class SemistableSpec:
    b: float = 4.0
    c0: float = 2.0
    K: int = 50

    def __post_init__(self):
        if not (self.b > 1 and self.c0 > 1):
            raise ValidationError("b and c0 must both exceed 1")
        if not (isinstance(self.K, (int, np.integer)) and self.K >= 1):
            raise ValidationError("truncation K must be a positive integer")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha = log(c0)/log(b) must lie in (0, 1), got {self.alpha}")

    @property
    def alpha(self) -> float:
        return math.log(self.c0) / math.log(self.b)


def _terms(theta: float, spec: SemistableSpec) -> tuple[list[float], list[float]]:
    re, im = [], []
    for k in range(-spec.K, spec.K + 1):
        x = theta * spec.b**k
        w = spec.c0 ** (-k)
        # cos x - 1 = -2 sin^2(x/2) keeps full relative accuracy for small x
        re.append(-2.0 * math.sin(0.5 * x) ** 2 * w)
        im.append(math.sin(x) * w)
    return re, im


def psi(theta: float, spec: SemistableSpec = SemistableSpec()) -> complex:
    """Truncated exponent ``sum_{|k| <= K} (exp(i theta b^k) - 1) c0^{-k}``."""
    re, im = _terms(float(theta), spec)
    return complex(math.fsum(re), math.fsum(im))


def truncation_bound(theta: float, spec: SemistableSpec = SemistableSpec()) -> float:
    """Bound on ``|psi - psi_K|`` at ``theta``: large-k terms are at most 2 in modulus,
    small-k terms at most ``|theta| b^k``."""
    a = 1.0 - spec.alpha
    return 2.0 * spec.c0 ** (-spec.K) / (1.0 - 1.0 / spec.c0) + abs(theta) * spec.b ** (-spec.K * a) / (
        1.0 - spec.b ** (-a)
    )


@dataclass
class LatticeReport:
    max_residual: float
    max_bound: float
    worst_theta: float
    passed: bool
    tol: float
    thetas: np.ndarray
    residuals: np.ndarray
    bounds: np.ndarray

    def to_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "max_bound": self.max_bound,
            "worst_theta": self.worst_theta,
            "passed": self.passed,
            "tol": self.tol,
            "n_theta": int(self.thetas.size),
        }


def lattice_scaling_check(
    spec: SemistableSpec,
    theta_grid,
    tol: float = 0.0,
    scale: float | None = None,
) -> LatticeReport:
    """``|psi_K(b theta) - scale * psi_K(theta)|`` against the combined truncation bound.

    ``scale`` defaults to ``c0``; a different value tests a corrupted identity.
    Pointwise pass criterion: residual <= bound(b theta) + scale * bound(theta) + tol.
    """
    if tol < 0:
        raise ValidationError("tol must be non-negative")
    scale = spec.c0 if scale is None else float(scale)
    thetas = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    res = np.empty(thetas.size)
    bnd = np.empty(thetas.size)
    for i, th in enumerate(thetas):
        r1, i1 = _terms(spec.b * th, spec)
        r0, i0 = _terms(th, spec)
        re = math.fsum(r1 + [-scale * v for v in r0])
        im = math.fsum(i1 + [-scale * v for v in i0])
        res[i] = math.hypot(re, im)
        bnd[i] = truncation_bound(spec.b * th, spec) + scale * truncation_bound(th, spec)
    j = int(np.argmax(res))
    return LatticeReport(
        float(res.max()),
        float(bnd.max()),
        float(thetas[j]),
        bool(np.all(res <= bnd + tol)),
        float(tol),
        thetas,
        res,
        bnd,
    )


def on_lattice(c: float, c0: float, tol: float = 1e-9) -> bool:
    k = math.log(c) / math.log(c0)
    return abs(k - round(k)) <= tol


@dataclass
class WitnessReport:
    max_deviation: float
    truncation_bound: float
    worst_theta: float
    ratio: float
    certified: bool

    def to_dict(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "truncation_bound": self.truncation_bound,
            "worst_theta": self.worst_theta,
            "ratio": self.ratio,
            "certified": self.certified,
        }


def oss_failure_witness(
    spec: SemistableSpec, c: float, theta_grid, allow_lattice: bool = False, factor: float = 10.0
) -> WitnessReport:
    """``max_theta |c psi(theta) - psi(c^{1/alpha} theta)|`` with its truncation bound.

    ``certified`` means the deviation exceeds ``factor`` times the bound, so the
    untruncated exponent also violates the scaling identity at scale ``c``.
    Lattice values of c are rejected unless ``allow_lattice`` is set.
    """
    c = float(c)
    if not c > 0:
        raise DomainError("c must be positive")
    if not allow_lattice and on_lattice(c, spec.c0):
        raise DomainError(f"c = {c} lies on the lattice c0^k; pick off-lattice c")
    thetas = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    lam = c ** (1.0 / spec.alpha)
    dev = np.array([abs(c * psi(th, spec) - psi(lam * th, spec)) for th in thetas])
    bnd = np.array([c * truncation_bound(th, spec) + truncation_bound(lam * th, spec) for th in thetas])
    j = int(np.argmax(dev))
    max_dev = float(dev[j])
    max_bnd = float(bnd.max())
    ratio = max_dev / max_bnd if max_bnd > 0 else math.inf
    return WitnessReport(max_dev, max_bnd, float(thetas[j]), ratio, bool(max_dev > factor * max_bnd))
