"""Covariance models of zero-mean Gaussian fields and covariance-level checks of
operator self-similarity and of domain/range symmetries.

The isotropic fractional field on R^2 with spectral density ``||x||^{-gamma} I``
has covariance ``g(s, t) I`` with

    g(s, t) = int_{R^2} [1 + cos<s-t, x> - cos<s, x> - cos<t, x>] ||x||^{-gamma} dx.

:func:`ofbf_cov` integrates this directly in polar coordinates; the closed form
:func:`fbf_closed_form` is the independent check.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import beta as beta_fn

from . import kernels
from .errors import DomainError, ModelError, ValidationError
from .matlin import as_matrix, mat_power, spectrum
from .quadrature import bessel_power_tail, graded_edges, one_minus_cos_moment, panel_nodes

# ---------------------------------------------------------------------------
# quadrature for g(s, t)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadConfig:
    """Settings for the 2-D polar quadrature.

    The disc ``rho <= cutoff / max(|s|, |t|, |s-t|)`` is integrated numerically:
    ``n_phi``-point periodic trapezoid in the angle, Gauss-Legendre panels in the
    radius (geometric near 0, uniform of phase width ``panel_phase`` beyond).
    Outside the disc the angular integral is exact (a Bessel J0) and the radial
    tail is evaluated by :func:`ossfield.quadrature.bessel_power_tail`.
    """

    n_phi: int = 256
    gl_points: int = 16
    cutoff: float = 60.0
    inner_eps: float = 1.0e-4
    panel_phase: float = 2.0

    def __post_init__(self):
        if self.n_phi < 8 or self.gl_points < 2:
            raise ValidationError("n_phi >= 8 and gl_points >= 2 required")
        if not (self.cutoff > 0 and 0 < self.inner_eps < 1 and self.panel_phase > 0):
            raise ValidationError("cutoff, inner_eps, panel_phase must be positive (inner_eps < 1)")
        if self.n_phi < 1.25 * self.cutoff + 64:
            raise ValidationError("n_phi too small for the cutoff: need n_phi >= 1.25*cutoff + 64")


DEFAULT_QUAD = QuadConfig()


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 2.0 < gamma < 4.0:
        raise DomainError(f"gamma must lie in (2, 4) for the integral to converge, got {gamma}")
    return gamma


def _point2(p, name) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape != (2,) or not np.all(np.isfinite(p)):
        raise ValidationError(f"{name} must be a finite point in R^2")
    return p


def _unit_radial_nodes(quad: QuadConfig):
    """Radial nodes for frequency scale 1; rescaled by 1/vmax per evaluation."""
    edges = graded_edges(quad.inner_eps, 1.0, quad.cutoff, quad.panel_phase)
    return panel_nodes(edges, quad.gl_points)


_NODE_CACHE: dict[QuadConfig, tuple] = {}
_NODE_LOCK = threading.Lock()


def _nodes(quad: QuadConfig):
    with _NODE_LOCK:
        if quad not in _NODE_CACHE:
            rho, w = _unit_radial_nodes(quad)
            # the integrand is even under phi -> phi + pi, so for even n_phi the
            # half-circle rule with weight 2 pi / (n_phi / 2) is the same trapezoid sum
            n = quad.n_phi // 2 if quad.n_phi % 2 == 0 else quad.n_phi
            phi = 2.0 * math.pi * np.arange(n) / quad.n_phi
            _NODE_CACHE[quad] = (rho, w, np.cos(phi), np.sin(phi))
        return _NODE_CACHE[quad]


def ofbf_scalar(s, t, gamma: float, quad: QuadConfig = DEFAULT_QUAD) -> float:
    """The scalar ``g(s, t)`` by 2-D quadrature."""
    gamma = _check_gamma(gamma)
    s = _point2(s, "s")
    t = _point2(t, "t")
    ns, nt, nd = (float(np.hypot(*v)) for v in (s, t, s - t))
    vmax = max(ns, nt, nd)
    if ns == 0.0 or nt == 0.0:
        # the integrand vanishes identically when either point is the origin
        return 0.0

    rho_u, w_u, cphi, sphi = _nodes(quad)
    rho = rho_u / vmax
    w = w_u / vmax
    inner = kernels.ofbf_polar_sum(rho, w, cphi, sphi, s, t, gamma)

    # [0, eps]: bracket = rho^2 <s,e><t,e> + rho^4 (d^4 - p^4 - q^4)/24 + O(rho^6)
    eps = quad.inner_eps / vmax
    head = math.pi * float(s @ t) * eps ** (4 - gamma) / (4 - gamma) + (
        math.pi / 32.0
    ) * (nd**4 - ns**4 - nt**4) * eps ** (6 - gamma) / (6 - gamma)

    # rho > R: the angular integral of cos(rho <v, e_phi>) is 2 pi J0(rho |v|)
    R = quad.cutoff / vmax
    flat = R ** (2 - gamma) / (gamma - 2)

    def tail(a):
        if a == 0.0:
            return flat
        return a ** (gamma - 2) * bessel_power_tail(a * R, gamma - 1)

    outer = 2.0 * math.pi * (flat + tail(nd) - tail(ns) - tail(nt))
    return inner + head + outer


def ofbf_cov(s, t, gamma: float, quad: QuadConfig = DEFAULT_QUAD) -> np.ndarray:
    """``Gamma(s, t) = g(s, t) I`` for the isotropic fractional field on R^2."""
    return ofbf_scalar(s, t, gamma, quad) * np.eye(2)


_CGAMMA: dict[float, float] = {}
_CGAMMA_LOCK = threading.Lock()


def c_gamma(gamma: float) -> float:
    """``int_{R^2} (1 - cos x_1) ||x||^{-gamma} dx``, computed once per gamma.

    Radial factor by quadrature; angular factor ``int |cos phi|^a dphi`` is a
    Beta function.
    """
    gamma = _check_gamma(gamma)
    with _CGAMMA_LOCK:
        if gamma not in _CGAMMA:
            alpha = gamma - 2.0
            angular = 2.0 * beta_fn(0.5, 0.5 * (alpha + 1.0))
            _CGAMMA[gamma] = angular * one_minus_cos_moment(alpha)
        return _CGAMMA[gamma]


def fbf_closed_form(s, t, gamma: float, c_gamma_value: float | None = None) -> np.ndarray:
    """``c (|s|^{2h} + |t|^{2h} - |s-t|^{2h}) I`` with ``h = (gamma - 2)/2``."""
    gamma = _check_gamma(gamma)
    c = c_gamma(gamma) if c_gamma_value is None else float(c_gamma_value)
    if not c > 0:
        raise ValidationError("c_gamma must be positive")
    s = np.asarray(s, dtype=float).reshape(-1)
    t = np.asarray(t, dtype=float).reshape(-1)
    two_h = gamma - 2.0
    val = c * (
        np.linalg.norm(s) ** two_h + np.linalg.norm(t) ** two_h - np.linalg.norm(s - t) ** two_h
    )
    return val * np.eye(2)


def hurst(gamma: float) -> float:
    return (_check_gamma(gamma) - 2.0) / 2.0


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------


def _key(p) -> tuple:
    return tuple(np.round(np.asarray(p, dtype=float).reshape(-1), 15).tolist())


@dataclass(eq=False)
class CovarianceModel:
    """``(s, t) -> Gamma(s, t)``; evaluations are memoised per point pair."""

    domain_dim: int
    range_dim: int
    kind: str
    params: dict
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(repr=False)
    _memo: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @classmethod
    def ofbf(cls, gamma: float, quad: QuadConfig = DEFAULT_QUAD) -> "CovarianceModel":
        gamma = _check_gamma(gamma)
        return cls(2, 2, "ofbf_isotropic", {"gamma": gamma}, lambda s, t: ofbf_cov(s, t, gamma, quad))

    @classmethod
    def closed_form_fbf(cls, gamma: float) -> "CovarianceModel":
        gamma = _check_gamma(gamma)
        c = c_gamma(gamma)
        return cls(
            2, 2, "closed_form_fbf", {"gamma": gamma}, lambda s, t: fbf_closed_form(s, t, gamma, c)
        )

    @classmethod
    def from_table(cls, points, blocks, atol: float = 1e-9) -> "CovarianceModel":
        """Lookup-only model. ``blocks[i][j]`` is Gamma(points[i], points[j]).

        No interpolation: asking for a pair off the table is an error.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        B = np.asarray(blocks, dtype=float)
        p, m = pts.shape
        if B.ndim != 4 or B.shape[:2] != (p, p) or B.shape[2] != B.shape[3]:
            raise ValidationError("blocks must have shape (p, p, n, n)")
        n = B.shape[2]

        def lookup(s, t):
            def index(x):
                dist = np.abs(pts - x).max(axis=1)
                i = int(np.argmin(dist))
                if dist[i] > atol * max(1.0, float(np.abs(x).max())):
                    raise ModelError(f"point {x.tolist()} is not in the covariance table")
                return i

            return B[index(s), index(t)].copy()

        return cls(m, n, "user_table", {"points": pts.tolist()}, lookup)

    def eval(self, s, t) -> np.ndarray:
        key = (_key(s), _key(t))
        with self._lock:
            hit = self._memo.get(key)
        if hit is not None:
            return hit.copy()
        val = np.asarray(self.evaluator(np.asarray(s, float), np.asarray(t, float)), dtype=float)
        if val.shape != (self.range_dim, self.range_dim):
            raise ModelError(f"covariance returned shape {val.shape}")
        with self._lock:
            self._memo[key] = val
            self._memo[(key[1], key[0])] = val.T.copy()
        return val.copy()

    def describe(self) -> dict:
        return {"kind": self.kind, "domain_dim": self.domain_dim, "range_dim": self.range_dim, **self.params}


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OssCheckReport:
    max_abs_deviation: float
    max_rel_deviation: float
    worst_pair: tuple
    passed: bool
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "max_abs_deviation": self.max_abs_deviation,
            "max_rel_deviation": self.max_rel_deviation,
            "worst_pair": [list(map(float, p)) for p in self.worst_pair],
            "passed": self.passed,
            "tolerance": self.tolerance,
        }


def _grid(grid, m: int) -> np.ndarray:
    G = np.atleast_2d(np.asarray(grid, dtype=float))
    if G.shape[1] != m:
        raise ValidationError(f"grid points must have dimension {m}, got {G.shape[1]}")
    if not np.all(np.isfinite(G)):
        raise ValidationError("grid has non-finite coordinates")
    return G


def _compare(pairs, lhs_fn, rhs_fn, tol) -> OssCheckReport:
    """Relative deviation is normalised by the largest ``||lhs||_F`` over the grid."""
    worst, worst_pair, scale = 0.0, None, 0.0
    for s, t in pairs:
        lhs = lhs_fn(s, t)
        rhs = rhs_fn(s, t)
        dev = float(np.linalg.norm(lhs - rhs))
        scale = max(scale, float(np.linalg.norm(lhs)), 0.0)
        if worst_pair is None or dev > worst:
            worst, worst_pair = dev, (tuple(s), tuple(t))
    if scale == 0.0:
        rel = 0.0 if worst == 0.0 else math.inf
    else:
        rel = worst / scale
    return OssCheckReport(worst, rel, worst_pair, rel <= tol, float(tol))


def _pairs(G):
    return [(G[i], G[j]) for i in range(len(G)) for j in range(i, len(G))]


def cov_oss_check(model: CovarianceModel, E, H, c: float, grid, tol: float = 1e-6) -> OssCheckReport:
    """Compare ``Gamma(c^E s, c^E t)`` with ``c^H Gamma(s, t) (c^H)^T`` over grid pairs."""
    E = as_matrix(E, "E")
    H = as_matrix(H, "H")
    if E.shape[0] != model.domain_dim or H.shape[0] != model.range_dim:
        raise ValidationError("E / H dimensions do not match the model")
    for name, M in (("E", E), ("H", H)):
        if not spectrum(M).all_positive:
            raise DomainError(f"{name} must have eigenvalues with positive real parts")
    if not c > 0:
        raise DomainError("c must be positive")
    G = _grid(grid, model.domain_dim)
    cE = mat_power(E, c)
    cH = mat_power(H, c)
    return _compare(
        _pairs(G),
        lambda s, t: model.eval(cE @ s, cE @ t),
        lambda s, t: cH @ model.eval(s, t) @ cH.T,
        tol,
    )


def _invertible(A, name):
    A = as_matrix(A, name)
    if np.linalg.cond(A) > 1e12:
        raise DomainError(f"{name} is singular")
    return A


def dom_symmetry_check(model: CovarianceModel, A, grid, tol: float = 1e-6) -> OssCheckReport:
    """Deviation of ``Gamma(As, At)`` from ``Gamma(s, t)``."""
    A = _invertible(A, "A")
    if A.shape[0] != model.domain_dim:
        raise ValidationError("A does not act on the model's domain")
    G = _grid(grid, model.domain_dim)
    return _compare(_pairs(G), lambda s, t: model.eval(s, t), lambda s, t: model.eval(A @ s, A @ t), tol)


def ran_symmetry_check(model: CovarianceModel, B, grid, tol: float = 1e-6) -> OssCheckReport:
    """Deviation of ``B Gamma(s, t) B^T`` from ``Gamma(s, t)``."""
    B = _invertible(B, "B")
    if B.shape[0] != model.range_dim:
        raise ValidationError("B does not act on the model's range")
    G = _grid(grid, model.domain_dim)
    return _compare(_pairs(G), lambda s, t: model.eval(s, t), lambda s, t: B @ model.eval(s, t) @ B.T, tol)


def square_grid(k: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    """``k x k`` tensor grid on ``[lo, hi]^2`` as a (k*k, 2) point list."""
    x = np.linspace(lo, hi, k)
    return np.array([(a, b) for a in x for b in x])
