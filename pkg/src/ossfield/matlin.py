"""Dense real matrix analysis for small exponent matrices.

Matrices are plain ``(n, n)`` float arrays. Everything here is aimed at
dimensions up to roughly 8: clarity and robustness win over speed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConditioningError, DomainError, NumericError, ValidationError

EPS = np.finfo(float).eps


def as_matrix(M, name: str = "M") -> np.ndarray:
    """Validate ``M`` as a finite real square matrix and return a float copy."""
    A = np.array(M, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} has non-finite entries")
    return A


def _scale(M: np.ndarray) -> float:
    return max(float(np.linalg.norm(M, 2)), 1.0e-300)


def expm(M) -> np.ndarray:
    """Matrix exponential (scaling and squaring with Pade approximants)."""
    return scipy.linalg.expm(as_matrix(M))


def mat_power(M, c: float) -> np.ndarray:
    """``c**M = exp(M log c)`` for ``c > 0``."""
    A = as_matrix(M)
    c = float(c)
    if not math.isfinite(c) or c <= 0.0:
        raise DomainError(f"matrix power needs c > 0, got {c}")
    if c == 1.0:
        return np.eye(A.shape[0])
    return scipy.linalg.expm(A * math.log(c))


def commutator(A, B) -> np.ndarray:
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape != B.shape:
        raise ValidationError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return A @ B - B @ A


def skew_basis(n: int) -> list[np.ndarray]:
    """Basis ``B_ij = e_j e_i^T - e_i e_j^T`` (i < j) of the n x n skew-symmetric matrices.

    For n = 2 this is the single rotation generator ``[[0, -1], [1, 0]]``.
    """
    n = int(n)
    if n < 1:
        raise ValidationError("n must be >= 1")
    basis = []
    for i in range(n):
        for j in range(i + 1, n):
            B = np.zeros((n, n))
            B[j, i] = 1.0
            B[i, j] = -1.0
            basis.append(B)
    return basis


ROTATION_GENERATOR = skew_basis(2)[0]


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumSummary:
    eigen_values: np.ndarray
    eigen_real_parts: np.ndarray
    min_real_part: float
    all_positive: bool


def spectrum(M) -> SpectrumSummary:
    A = as_matrix(M)
    try:
        w = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"eigenvalue solver failed on {A.shape} matrix with norm {np.linalg.norm(A):.3e}: {exc}"
        ) from exc
    order = np.lexsort((w.imag, w.real))
    w = w[order]
    re = np.sort(w.real)
    lo = float(re[0])
    return SpectrumSummary(eigen_values=w, eigen_real_parts=re, min_real_part=lo, all_positive=lo > 0.0)


# ---------------------------------------------------------------------------
# eigenvalue clustering
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenCluster:
    center: complex
    multiplicity: int
    members: np.ndarray


def cluster_eigenvalues(M, tol: float | None = None) -> list[EigenCluster]:
    """Group numerically coincident eigenvalues.

    Two eigenvalues are merged when they are closer than ``tol`` or closer
    than ~1e3 times their perturbation radius ``eps * ||M|| * cond``, where
    ``cond`` is the individual eigenvalue condition number. The second test
    catches the ``eps**(1/k)`` splitting of a k x k Jordan block. The
    perturbation radius is capped at ``1e-3 * ||M||``.
    """
    A = as_matrix(M)
    n = A.shape[0]
    nrm = _scale(A)
    if tol is None:
        tol = 1.0e-7 * nrm
    w, vl, vr = scipy.linalg.eig(A, left=True, right=True)
    denom = np.linalg.norm(vl, axis=0) * np.linalg.norm(vr, axis=0)
    overlap = np.abs(np.einsum("ij,ij->j", vl.conj(), vr)) / denom
    with np.errstate(divide="ignore"):
        cond = np.where(overlap > 0.0, 1.0 / overlap, np.inf)
    radius = np.minimum(1.0e3 * EPS * nrm * cond, 1.0e-3 * nrm)

    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(w[i] - w[j]) <= max(tol, radius[i] + radius[j]):
                parent[find(i)] = find(j)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    clusters = []
    for idx in groups.values():
        members = w[idx]
        center = complex(members.mean())
        if abs(center.imag) <= max(tol, float(radius[idx].max())):
            center = complex(center.real, 0.0)
        clusters.append(EigenCluster(center, len(idx), members))
    # Enforce exact conjugate symmetry of complex cluster centres.
    fixed = []
    for cl in clusters:
        if cl.center.imag < 0.0:
            mates = [o for o in clusters if o.center.imag > 0 and abs(o.center - cl.center.conjugate()) <= 10 * tol + 1e-9 * nrm]
            if mates:
                cl = EigenCluster(mates[0].center.conjugate(), cl.multiplicity, cl.members)
        fixed.append(cl)
    fixed.sort(key=lambda c: (c.center.real, c.center.imag))
    return fixed


# ---------------------------------------------------------------------------
# Jordan-Chevalley splitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SNDecomposition:
    semisimple: np.ndarray
    nilpotent: np.ndarray


def _hermite_newton(nodes: list[complex], targets: dict[complex, complex]) -> np.ndarray:
    """Newton coefficients of the polynomial that is locally constant
    (value ``targets[z]``, all derivatives 0) at each repeated node ``z``."""
    n = len(nodes)
    table = np.zeros((n, n), dtype=complex)
    for i, z in enumerate(nodes):
        table[i, 0] = targets[z]
    for j in range(1, n):
        for i in range(n - j):
            dz = nodes[i + j] - nodes[i]
            if dz == 0:
                table[i, j] = 0.0
            else:
                table[i, j] = (table[i + 1, j - 1] - table[i, j - 1]) / dz
    return table[0]


def sn_decompose(M, tol: float | None = None) -> SNDecomposition:
    """Jordan-Chevalley splitting ``M = S + N`` with S semisimple, N nilpotent, SN = NS.

    ``S = p(M)`` where p is the Hermite interpolant that equals the cluster
    centre, with vanishing derivatives up to the cluster multiplicity, on every
    eigenvalue cluster.
    """
    A = as_matrix(M)
    n = A.shape[0]
    nrm = _scale(A)
    clusters = cluster_eigenvalues(A, tol)
    if all(cl.multiplicity == 1 for cl in clusters):
        return SNDecomposition(A.copy(), np.zeros_like(A))

    # Interleave clusters in Leja-like order: largest modulus first keeps the
    # Newton products from over/underflowing at these sizes.
    nodes: list[complex] = []
    targets: dict[complex, complex] = {}
    for cl in sorted(clusters, key=lambda c: -abs(c.center)):
        nodes.extend([cl.center] * cl.multiplicity)
        targets[cl.center] = cl.center
    coef = _hermite_newton(nodes, targets)

    I = np.eye(n)
    S = np.zeros((n, n), dtype=complex)
    basis = np.eye(n, dtype=complex)
    for k in range(n):
        S += coef[k] * basis
        basis = basis @ (A - nodes[k] * I)
    if np.max(np.abs(S.imag)) > 1.0e-6 * nrm:
        raise ConditioningError("eigenvalue clusters are not conjugate-symmetric; cannot split")
    S = S.real
    N = A - S

    comm = np.linalg.norm(S @ N - N @ S)
    nil = np.linalg.norm(np.linalg.matrix_power(N, n)) if n > 1 else float(np.linalg.norm(N))
    if comm > 1.0e-6 * nrm * nrm or nil > 1.0e-6 * nrm ** n:
        gaps = [abs(a.center - b.center) for i, a in enumerate(clusters) for b in clusters[i + 1 :]]
        raise ConditioningError(
            f"Jordan-Chevalley splitting is ill-conditioned (commutator {comm:.2e}, "
            f"||N^n|| {nil:.2e}, smallest cluster gap {min(gaps, default=float('nan')):.2e})"
        )
    return SNDecomposition(S, N)


# ---------------------------------------------------------------------------
# zero / positive real-part splitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralSplit:
    conjugacy: np.ndarray
    block_zero: np.ndarray
    block_positive: np.ndarray
    dims: tuple[int, int]

    def reconstruct(self) -> np.ndarray:
        d1, d2 = self.dims
        B = np.zeros((d1 + d2, d1 + d2))
        B[:d1, :d1] = self.block_zero
        B[d1:, d1:] = self.block_positive
        return self.conjugacy @ B @ np.linalg.inv(self.conjugacy)


def spectral_split(M, zero_band: float = 1.0e-7) -> SpectralSplit:
    """Split R^n into the invariant subspaces of eigenvalues with ``|Re| < zero_band``
    and with ``Re >= zero_band``.

    An ordered real Schur form puts the zero class first; a Sylvester solve then
    removes the coupling block, so ``M = P diag(H1, H2) P^{-1}``.
    """
    A = as_matrix(M)
    n = A.shape[0]
    if not zero_band > 0:
        raise ValidationError("zero_band must be positive")
    w = np.linalg.eigvals(A)
    re = w.real
    if np.any(re <= -zero_band):
        raise DomainError(
            f"inadmissible exponent: eigenvalue real part {re.min():.3e} <= -{zero_band:.1e}"
        )
    edge = (np.abs(re) >= 0.5 * zero_band) & (np.abs(re) <= 2.0 * zero_band)
    if np.any(edge):
        raise ConditioningError(
            f"eigenvalue real part {re[edge][0]:.3e} is too close to the band edge {zero_band:.1e}"
        )

    T, Z, sdim = scipy.linalg.schur(A, output="real", sort=lambda x, y: abs(x) < zero_band)
    d1 = int(sdim)
    d2 = n - d1
    if d1 in (0, n):
        P = Z
        T11, T22 = (T, np.zeros((0, 0))) if d1 == n else (np.zeros((0, 0)), T)
    else:
        T11, T12, T22 = T[:d1, :d1], T[:d1, d1:], T[d1:, d1:]
        X = scipy.linalg.solve_sylvester(T11, -T22, -T12)
        W = np.eye(n)
        W[:d1, d1:] = X
        P = Z @ W
    return SpectralSplit(conjugacy=P, block_zero=T11, block_positive=T22, dims=(d1, d2))
