"""Anisotropic polar coordinates ``x = tau**E l`` for a positive-stable exponent E.

The norm ``||x||_0 = int_0^1 ||t^E x||_* dt/t`` becomes, after ``t = exp(-u)``,
``int_0^inf ||exp(-uE) x||_* du``. The integrand decays like ``exp(-lambda u)``
with lambda the smallest real part of the spectrum of E, so the range is cut
at a point U where the tail is provably below ~1e-14 relative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from . import kernels
from .errors import DomainError, NumericError, ValidationError
from .matlin import as_matrix, mat_power, spectrum

_TAIL_REL = 1.0e-14
_MAX_LEVEL = 40
_BRACKET_LIMIT = 1100


@dataclass(frozen=True)
class PolarCoords:
    radial: float
    directional: np.ndarray


@dataclass(frozen=True, eq=False)
class PolarConfig:
    """Exponent E plus quadrature settings. Quadrature tables are built lazily and cached."""

    exponent: np.ndarray
    base_norm: str = "euclidean"
    quad_points: int = 16
    root_tol: float = 1.0e-11
    _spec: object = field(init=False, repr=False)

    def __post_init__(self):
        E = as_matrix(self.exponent, "E")
        object.__setattr__(self, "exponent", E)
        if self.base_norm not in kernels.NORM_KINDS:
            raise ValidationError(f"base_norm must be one of {sorted(kernels.NORM_KINDS)}")
        if self.quad_points < 4:
            raise ValidationError("quad_points must be >= 4")
        if not self.root_tol > 0:
            raise ValidationError("root_tol must be positive")
        spec = spectrum(E)
        if not spec.all_positive:
            raise DomainError(
                f"E must have eigenvalues with positive real parts (min real part {spec.min_real_part:.3e})"
            )
        object.__setattr__(self, "_spec", spec)

    @property
    def dim(self) -> int:
        return self.exponent.shape[0]

    @property
    def norm_kind(self) -> int:
        return kernels.NORM_KINDS[self.base_norm]

    def base(self, y) -> float:
        y = np.asarray(y, dtype=float)
        if self.base_norm == "euclidean":
            return float(np.linalg.norm(y))
        if self.base_norm == "max":
            return float(np.abs(y).max())
        return float(np.abs(y).sum())

    @cached_property
    def _tables(self):
        E = self.exponent
        m = self.dim
        lam = 0.9 * self._spec.min_real_part
        enorm = float(np.linalg.norm(E, 2))
        # growth constant C with ||exp(-uE)|| <= C exp(-lam u)
        probe = np.linspace(0.0, 60.0 / lam, 400)
        C = max(
            float(np.linalg.norm(scipy.linalg.expm(-u * E), 2)) * math.exp(lam * u) for u in probe
        )
        C = 1.5 * max(C, 1.0)
        U = math.log(C * C * m * enorm / (lam * _TAIL_REL)) / lam
        h = min(0.5 / enorm, U / 8.0)
        n_panels = int(math.ceil(U / h))

        xf, wf = np.polynomial.legendre.leggauss(self.quad_points)
        xc, wc = np.polynomial.legendre.leggauss(self.quad_points // 2)
        xf, wf = 0.5 * (xf + 1.0), 0.5 * wf
        xc, wc = 0.5 * (xc + 1.0), 0.5 * wc

        step = scipy.linalg.expm(-h * E)
        starts = np.empty((n_panels, m, m))
        cur = np.eye(m)
        for k in range(n_panels):
            starts[k] = cur
            cur = step @ cur
        node_f = np.stack([scipy.linalg.expm(-h * z * E) for z in xf])
        node_c = np.stack([scipy.linalg.expm(-h * z * E) for z in xc])
        props_f = np.einsum("jab,kbc->kjac", node_f, starts).reshape(-1, m, m)
        props_c = np.einsum("jab,kbc->kjac", node_c, starts).reshape(-1, m, m)
        return {
            "U": U,
            "h": h,
            "n_panels": n_panels,
            "starts": starts,
            "props_f": np.ascontiguousarray(props_f),
            "props_c": np.ascontiguousarray(props_c),
            "w_f": h * wf,
            "w_c": h * wc,
            "x_f": xf,
            "x_c": xc,
        }

    @cached_property
    def _levels(self):
        return {}

    def _level_rules(self, level: int):
        """Node propagators on a panel of width h / 2**level, plus the half-step matrix."""
        cache = self._levels
        if level not in cache:
            tb = self._tables
            E = self.exponent
            w = tb["h"] / 2.0**level
            node_f = np.stack([scipy.linalg.expm(-w * z * E) for z in tb["x_f"]])
            node_c = np.stack([scipy.linalg.expm(-w * z * E) for z in tb["x_c"]])
            half = scipy.linalg.expm(-0.5 * w * E)
            cache[level] = (node_f, w * tb["w_f"] / tb["h"], node_c, w * tb["w_c"] / tb["h"], half)
        return cache[level]

    def _adaptive_panel(self, y, level, tol):
        node_f, wf, node_c, wc, half = self._level_rules(level)
        kind = self.norm_kind
        fine = float(wf @ kernels.node_norms(node_f, y, kind))
        coarse = float(wc @ kernels.node_norms(node_c, y, kind))
        if abs(fine - coarse) <= tol or level >= _MAX_LEVEL:
            return fine
        return self._adaptive_panel(y, level + 1, 0.5 * tol) + self._adaptive_panel(
            half @ y, level + 1, 0.5 * tol
        )

    def norm(self, x) -> float:
        x = np.ascontiguousarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValidationError(f"x must have shape ({self.dim},), got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValidationError("x has non-finite entries")
        if not np.any(x):
            return 0.0
        # ||.||_0 is positively homogeneous; rescaling avoids under/overflow in the kernels
        amp = float(np.abs(x).max())
        return amp * self._unit_norm(x / amp)

    def _unit_norm(self, x: np.ndarray) -> float:
        tb = self._tables
        k = self.quad_points
        kind = self.norm_kind
        fine = tb["w_f"] @ kernels.node_norms(tb["props_f"], x, kind).reshape(-1, k).T
        coarse = tb["w_c"] @ kernels.node_norms(tb["props_c"], x, kind).reshape(-1, k // 2).T
        total = float(fine.sum())
        panel_tol = 1.0e-14 * total / tb["n_panels"]
        bad = np.nonzero(np.abs(fine - coarse) > panel_tol)[0]
        if bad.size:
            for i in bad:
                fine[i] = self._adaptive_panel(tb["starts"][i] @ x, 0, panel_tol)
            total = float(fine.sum())
        return total


def e_norm(x, cfg: PolarConfig) -> float:
    """``||x||_0``; zero exactly when x is zero."""
    return cfg.norm(x)


def _radial_gap(log_r: float, x: np.ndarray, cfg: PolarConfig) -> float:
    y = scipy.linalg.expm(-log_r * cfg.exponent) @ x
    return cfg.norm(y) - 1.0


def polar_decompose(x, cfg: PolarConfig) -> PolarCoords:
    """Radial part ``tau`` and direction ``l`` (with ``||l||_0 = 1``) of a nonzero x.

    ``log tau`` is the root of the decreasing map ``s -> ||exp(-sE) x||_0 - 1``:
    bracketed by doubling, bisected for 80 steps, then polished by secant.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (cfg.dim,):
        raise ValidationError(f"x must have shape ({cfg.dim},), got {x.shape}")
    if not np.any(x):
        raise DomainError("polar coordinates are undefined at x = 0")

    k = 1
    lo, hi = -math.log(2.0), math.log(2.0)
    f_lo, f_hi = _radial_gap(lo, x, cfg), _radial_gap(hi, x, cfg)
    while not (f_lo >= 0.0 >= f_hi):
        k *= 2
        if k > _BRACKET_LIMIT:
            raise NumericError("could not bracket the radial part")
        lo, hi = -k * math.log(2.0), k * math.log(2.0)
        f_lo, f_hi = _radial_gap(lo, x, cfg), _radial_gap(hi, x, cfg)

    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        f_mid = _radial_gap(mid, x, cfg)
        if f_mid == 0.0:
            lo = hi = mid
            f_lo = f_hi = 0.0
            break
        if f_mid > 0.0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid

    root = 0.5 * (lo + hi)
    if f_lo != f_hi:
        sec = lo - f_lo * (hi - lo) / (f_hi - f_lo)
        if lo <= sec <= hi:
            root = sec
    if hi - lo > max(cfg.root_tol, 1e-15 * abs(root)) * 1e3:
        raise NumericError(f"radial root not resolved: bracket width {hi - lo:.3e}")
    tau = math.exp(root)
    direction = scipy.linalg.expm(-root * cfg.exponent) @ x
    return PolarCoords(radial=tau, directional=direction)


def polar_compose(r: float, theta, cfg: PolarConfig) -> np.ndarray:
    """``r**E theta`` for theta on the unit sphere of ``||.||_0``."""
    r = float(r)
    if not r > 0:
        raise DomainError(f"radial part must be positive, got {r}")
    theta = np.asarray(theta, dtype=float)
    gap = abs(cfg.norm(theta) - 1.0)
    if gap > cfg.root_tol:
        raise ValidationError(f"theta is not on the unit sphere (| ||theta||_0 - 1 | = {gap:.3e})")
    return mat_power(cfg.exponent, r) @ theta
