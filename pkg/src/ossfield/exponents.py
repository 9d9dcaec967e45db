"""Exponent-set algebra: symmetry groups and their tangent spaces, exponent
families ``base + span(T(G))``, Haar-averaged commuting exponents,
admissibility of range exponents, invariant Gaussian laws and the split of an
exponent into its zero and positive real-part blocks.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import ndtri
from scipy.stats import qmc

from .errors import DomainError, ValidationError
from .matlin import (
    SpectralSplit,
    as_matrix,
    cluster_eigenvalues,
    commutator,
    expm,
    skew_basis,
    sn_decompose,
    spectral_split,
    spectrum,
)

GROUP_KINDS = ("orthogonal", "special_orthogonal", "finite", "trivial")
_FINITE_LIMIT = 5000


# ---------------------------------------------------------------------------
# groups
# ---------------------------------------------------------------------------


def _close_group(gens: list[np.ndarray], atol: float) -> list[np.ndarray]:
    n = gens[0].shape[0]
    elements = [np.eye(n)]

    def known(M):
        return any(np.abs(M - X).max() <= atol for X in elements)

    frontier = [np.eye(n)]
    while frontier:
        new = []
        for X in frontier:
            for g in gens:
                Y = g @ X
                if not known(Y):
                    elements.append(Y)
                    new.append(Y)
                    if len(elements) > _FINITE_LIMIT:
                        raise ValidationError("generators do not close into a small finite group")
        frontier = new
    return elements


@dataclass(frozen=True, eq=False)
class GroupSpec:
    """A compact matrix group: O(n), SO(n), a finite group, or {I}.

    For ``finite`` the listed matrices must be closed under inversion; the full
    group they generate is enumerated on construction.
    """

    kind: str
    n: int
    elements: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in GROUP_KINDS:
            raise ValidationError(f"unknown group kind {self.kind!r}")
        if self.n < 1:
            raise ValidationError("group dimension must be >= 1")

    @classmethod
    def orthogonal(cls, n: int) -> "GroupSpec":
        return cls("orthogonal", int(n))

    @classmethod
    def special_orthogonal(cls, n: int) -> "GroupSpec":
        return cls("special_orthogonal", int(n))

    @classmethod
    def trivial(cls, n: int) -> "GroupSpec":
        return cls("trivial", int(n))

    @classmethod
    def finite(cls, mats, atol: float = 1e-9) -> "GroupSpec":
        gens = [as_matrix(M, "group element") for M in mats]
        if not gens:
            raise ValidationError("finite group needs at least one element")
        n = gens[0].shape[0]
        if any(g.shape != (n, n) for g in gens):
            raise ValidationError("group elements must share one dimension")
        for g in gens:
            try:
                ginv = np.linalg.inv(g)
            except np.linalg.LinAlgError as exc:
                raise ValidationError("group element is singular") from exc
            if not any(np.abs(ginv - h).max() <= atol for h in gens + [np.eye(n)]):
                raise ValidationError("finite element list is not closed under inversion")
        return cls("finite", n, tuple(_close_group(gens, atol)))

    @classmethod
    def parse(cls, text: str) -> "GroupSpec":
        """``O2``, ``SO3``, ``trivial2`` (case-insensitive)."""
        m = re.fullmatch(r"\s*(SO|O|TRIVIAL)\s*\(?(\d+)\)?\s*", text.upper())
        if not m:
            raise ValidationError(f"cannot parse group {text!r}; expected O<n>, SO<n> or trivial<n>")
        kind = {"O": "orthogonal", "SO": "special_orthogonal", "TRIVIAL": "trivial"}[m.group(1)]
        return cls(kind, int(m.group(2)))

    @property
    def label(self) -> str:
        prefix = {"orthogonal": "O", "special_orthogonal": "SO", "trivial": "trivial", "finite": "finite"}
        return f"{prefix[self.kind]}({self.n})"

    @property
    def is_continuous(self) -> bool:
        return self.kind in ("orthogonal", "special_orthogonal")

    def samples(self, k: int = 64) -> list[np.ndarray]:
        """Deterministic group elements for commutation checks.

        O(2)/SO(2): ``k`` rotations at uniform angles (half of them composed with
        a reflection for O(2)). Higher dimensions: quasi-random Haar samples.
        """
        if self.kind == "trivial":
            return [np.eye(self.n)]
        if self.kind == "finite":
            return list(self.elements)
        if self.n == 1:
            return [np.eye(1), -np.eye(1)] if self.kind == "orthogonal" else [np.eye(1)]
        if self.n == 2:
            if self.kind == "special_orthogonal":
                return [rotation2(2 * math.pi * j / k) for j in range(k)]
            half = k // 2
            rots = [rotation2(2 * math.pi * j / half) for j in range(half)]
            return rots + [R @ REFLECTION2 for R in rots[: k - half]]
        return list(_qmc_orthogonal(self.n, k, self.kind == "special_orthogonal", seed=7))


REFLECTION2 = np.diag([1.0, -1.0])


def rotation2(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _qmc_orthogonal(n: int, k: int, special: bool, seed: int = 0) -> np.ndarray:
    """Haar-distributed orthogonal matrices from scrambled Sobol normals + QR."""
    sob = qmc.Sobol(d=n * n, scramble=True, seed=seed)
    m = int(math.ceil(math.log2(max(k, 2))))
    u = sob.random_base2(m)[:k]
    Z = ndtri(np.clip(u, 1e-16, 1 - 1e-16)).reshape(k, n, n)
    Q, R = np.linalg.qr(Z)
    Q = Q * np.sign(np.einsum("kii->ki", R))[:, None, :]
    if special:
        flip = np.linalg.det(Q) < 0
        Q[flip, :, 0] *= -1.0
    return Q


def tangent_basis(g: GroupSpec) -> list[np.ndarray]:
    """Basis of the tangent space at the identity: so(n) for O(n) and SO(n), nothing otherwise."""
    if g.is_continuous:
        return skew_basis(g.n)
    return []


# ---------------------------------------------------------------------------
# Haar averaging
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HaarResult:
    matrix: np.ndarray
    error_estimate: float
    exact: bool


def haar_average(H, g: GroupSpec, n_samples: int = 100_000, n_theta: int = 512) -> HaarResult:
    """``int_G A H A^{-1} dA`` for normalised Haar measure on G.

    Exact for trivial and finite groups and (to rounding) for O(2)/SO(2), where a
    periodic trapezoid integrates the degree-2 trigonometric integrand exactly.
    Dimensions >= 3 use quasi-random sampling; the error estimate is the spread
    of 16 batch means over sqrt(16).
    """
    H = as_matrix(H, "H")
    if H.shape[0] != g.n:
        raise ValidationError(f"H is {H.shape[0]}x{H.shape[0]} but the group acts on R^{g.n}")
    if g.kind == "trivial":
        return HaarResult(H.copy(), 0.0, True)
    if g.kind == "finite":
        acc = sum(A @ H @ np.linalg.inv(A) for A in g.elements)
        return HaarResult(acc / len(g.elements), 0.0, True)
    if g.n == 1:
        return HaarResult(H.copy(), 0.0, True)
    if g.n == 2:
        theta = 2 * math.pi * np.arange(n_theta) / n_theta
        c, s = np.cos(theta), np.sin(theta)
        R = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
        rot = np.einsum("kij,jl,kml->im", R, H, R) / n_theta
        if g.kind == "special_orthogonal":
            return HaarResult(rot, 0.0, True)
        refl = REFLECTION2 @ rot @ REFLECTION2
        return HaarResult(0.5 * (rot + refl), 0.0, True)

    Q = _qmc_orthogonal(g.n, n_samples, g.kind == "special_orthogonal", seed=11)
    conj = np.einsum("kij,jl,kml->kim", Q, H, Q)
    batches = np.array_split(conj, 16)
    means = np.stack([b.mean(axis=0) for b in batches])
    H0 = conj.mean(axis=0)
    err = float(np.linalg.norm(means.std(axis=0, ddof=1)) / 4.0)
    return HaarResult(H0, err, False)


def haar_commuting_exponent(H, g: GroupSpec, n_samples: int = 100_000) -> np.ndarray:
    """Exponent commuting with every element of G, obtained by averaging the conjugates of H."""
    return haar_average(H, g, n_samples).matrix


# ---------------------------------------------------------------------------
# exponent families
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExponentFamily:
    """``{base + sum_i c_i T_i}`` for a tangent basis ``T_i``."""

    base: np.ndarray
    tangent_basis: tuple
    side: str = "range"
    group: GroupSpec | None = None

    def __post_init__(self):
        if self.side not in ("range", "domain"):
            raise ValidationError("side must be 'range' or 'domain'")
        base = as_matrix(self.base, "base")
        object.__setattr__(self, "base", base)
        basis = tuple(as_matrix(T, "tangent vector") for T in self.tangent_basis)
        if any(T.shape != base.shape for T in basis):
            raise ValidationError("tangent vectors must match the base dimension")
        object.__setattr__(self, "tangent_basis", basis)

    @property
    def dim(self) -> int:
        return len(self.tangent_basis)

    def member(self, coeffs=()) -> np.ndarray:
        coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if coeffs.size == 0:
            coeffs = np.zeros(self.dim)
        if coeffs.shape != (self.dim,):
            raise ValidationError(f"expected {self.dim} coefficients, got {coeffs.shape}")
        M = self.base.copy()
        for c, T in zip(coeffs, self.tangent_basis):
            M += c * T
        return M

    def random_members(self, k: int, seed: int = 0, scale: float = 2.0) -> list[np.ndarray]:
        rng = np.random.default_rng(seed)
        return [self.member(rng.uniform(-scale, scale, self.dim)) for _ in range(k)]

    def conjugate(self, Q) -> "ExponentFamily":
        """The family expressed in the basis Q: ``Q M Q^{-1}`` for every member."""
        Q = as_matrix(Q, "Q")
        Qi = np.linalg.inv(Q)
        return ExponentFamily(
            Q @ self.base @ Qi,
            tuple(Q @ T @ Qi for T in self.tangent_basis),
            self.side,
            None,
        )

    def group_elements(self, k: int = 16) -> list[np.ndarray]:
        if self.group is not None:
            return self.group.samples(k)
        n = self.base.shape[0]
        out = [np.eye(n)]
        for T in self.tangent_basis:
            out.extend(expm(t * T) for t in (0.3, 1.1, 2.5))
        return out


def exponent_family(base, g: GroupSpec, side: str = "range") -> ExponentFamily:
    base = as_matrix(base, "base")
    if base.shape[0] != g.n:
        raise ValidationError("base and group dimensions differ")
    spec = spectrum(base)
    if not spec.all_positive:
        raise DomainError(
            f"inadmissible base exponent: min real part {spec.min_real_part:.3e} is not positive"
        )
    return ExponentFamily(base, tuple(tangent_basis(g)), side, g)


@dataclass
class FamilyReport:
    passed: bool
    n_members: int
    max_spectrum_deviation: float
    max_nilpotent_deviation: float
    max_nilpotent_commutator: float
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_members": self.n_members,
            "max_spectrum_deviation": self.max_spectrum_deviation,
            "max_nilpotent_deviation": self.max_nilpotent_deviation,
            "max_nilpotent_commutator": self.max_nilpotent_commutator,
            "failures": self.failures,
        }


def family_invariants_check(
    fam: ExponentFamily, samples: int = 50, tol: float = 1e-8, seed: int = 0, reference=None
) -> FamilyReport:
    """Every sampled member must share the reference's sorted real spectrum and
    nilpotent part, and that nilpotent part must commute with the group.

    ``reference`` defaults to ``fam.base``.
    """
    ref = fam.base if reference is None else as_matrix(reference, "reference")
    ref_re = spectrum(ref).eigen_real_parts
    ref_nil = sn_decompose(ref).nilpotent
    scale = max(1.0, float(np.linalg.norm(ref)))
    members = [fam.member()] + fam.random_members(max(samples - 1, 0), seed=seed) if fam.dim else [fam.member()]
    members = members[: max(samples, 1)]
    group = fam.group_elements()

    spec_dev = nil_dev = comm_dev = 0.0
    failures = []
    for i, M in enumerate(members):
        re_parts = spectrum(M).eigen_real_parts
        d_spec = float(np.abs(re_parts - ref_re).max())
        N = sn_decompose(M).nilpotent
        d_nil = float(np.abs(N - ref_nil).max())
        d_comm = max(float(np.abs(commutator(N, A)).max()) for A in group)
        spec_dev, nil_dev, comm_dev = max(spec_dev, d_spec), max(nil_dev, d_nil), max(comm_dev, d_comm)
        if d_spec > tol * scale:
            failures.append({"member": i, "reason": "real spectrum differs", "deviation": d_spec})
        if d_nil > tol * scale:
            failures.append({"member": i, "reason": "nilpotent part differs", "deviation": d_nil})
        if d_comm > tol * scale:
            failures.append({"member": i, "reason": "nilpotent part does not commute", "deviation": d_comm})
    return FamilyReport(not failures, len(members), spec_dev, nil_dev, comm_dev, failures)


def _span_basis(mats, tol: float) -> np.ndarray:
    if not mats:
        return np.zeros((0, 0))
    V = np.stack([np.asarray(M, float).ravel() for M in mats], axis=1)
    U, s, _ = np.linalg.svd(V, full_matrices=False)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    return U[:, :rank]


def set_difference_check(fam1: ExponentFamily, fam2: ExponentFamily, tol: float = 1e-9) -> bool:
    """True iff the two families have the same tangent span (so ``fam - base`` agree as sets)."""
    if fam1.base.shape != fam2.base.shape:
        raise ValidationError("families act on different dimensions")
    if fam1.side != fam2.side:
        raise ValidationError("families are on different sides")
    U1 = _span_basis(list(fam1.tangent_basis), tol)
    U2 = _span_basis(list(fam2.tangent_basis), tol)
    if U1.shape[1] != U2.shape[1]:
        return False
    if U1.shape[1] == 0:
        return True
    r12 = np.linalg.norm(U2 - U1 @ (U1.T @ U2))
    r21 = np.linalg.norm(U1 - U2 @ (U2.T @ U1))
    return bool(max(r12, r21) <= tol * 10 * math.sqrt(U1.shape[1]))


# ---------------------------------------------------------------------------
# admissibility, sign checks, invariant laws, field decomposition
# ---------------------------------------------------------------------------


@dataclass
class Admissibility:
    admissible: bool
    reasons: list

    def to_dict(self) -> dict:
        return {"admissible": self.admissible, "reasons": list(self.reasons)}


def _rank(M: np.ndarray, rtol: float) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > rtol * max(1.0, s[0] if s.size else 0.0)))


def admissibility_check(H, tol: float = 1e-7) -> Admissibility:
    """Nonnegative real parts, and every eigenvalue on the imaginary axis is
    semisimple (a simple root of the minimal polynomial)."""
    H = as_matrix(H, "H")
    n = H.shape[0]
    reasons = []
    clusters = cluster_eigenvalues(H)
    lo = min(cl.center.real for cl in clusters)
    if lo < -tol:
        reasons.append(f"eigenvalue with negative real part {lo:.3e}")
    rank_tol = max(1e-8, tol)
    for cl in clusters:
        if abs(cl.center.real) <= tol:
            r = _rank(H - cl.center * np.eye(n), rank_tol)
            if r != n - cl.multiplicity:
                reasons.append(
                    f"eigenvalue {cl.center:.6g} on the imaginary axis is not semisimple "
                    f"(multiplicity {cl.multiplicity}, eigenspace dimension {n - r})"
                )
    return Admissibility(not reasons, reasons)


def opposite_sign_check(E, H, tol: float = 1e-10) -> bool:
    """False iff some eigenvalue real part of E and some of H have strictly opposite signs."""
    e = spectrum(E).eigen_real_parts
    h = spectrum(H).eigen_real_parts
    e_pos, e_neg = bool(np.any(e > tol)), bool(np.any(e < -tol))
    h_pos, h_neg = bool(np.any(h > tol)), bool(np.any(h < -tol))
    return not ((e_pos and h_neg) or (e_neg and h_pos))


def _null_space(M: np.ndarray, dim: int) -> np.ndarray:
    _, _, Vh = np.linalg.svd(M)
    return Vh[-dim:].conj().T if dim else np.zeros((M.shape[1], 0))


def invariant_gaussian(H1, tol: float = 1e-7) -> np.ndarray:
    """Covariance Sigma with ``r^{H1} Sigma (r^{H1})^T = Sigma`` for every r > 0.

    H1 must be semisimple with purely imaginary spectrum. With the real Jordan
    form ``H1 = P diag(0, .., theta_j J, ..) P^{-1}``, ``Sigma = P P^T``.
    """
    H1 = as_matrix(H1, "H1")
    n = H1.shape[0]
    clusters = cluster_eigenvalues(H1)
    bad = [cl.center for cl in clusters if abs(cl.center.real) > tol]
    if bad:
        raise DomainError(f"H1 has eigenvalues off the imaginary axis: {bad[0]:.3e}")
    adm = admissibility_check(H1, tol)
    if not adm.admissible:
        raise DomainError("H1 is not semisimple: " + "; ".join(adm.reasons))

    cols = []
    for cl in clusters:
        theta = cl.center.imag
        if abs(theta) <= tol:
            cols.append(_null_space(H1, cl.multiplicity).real)
        elif theta > 0:
            V = _null_space(H1 - 1j * theta * np.eye(n), cl.multiplicity) * math.sqrt(2.0)
            for v in V.T:
                cols.append(np.stack([v.imag, v.real], axis=1))
    P = np.concatenate(cols, axis=1)
    if P.shape != (n, n) or np.linalg.cond(P) > 1e12:
        raise DomainError("could not assemble a real Jordan basis for H1")
    return P @ P.T


def decompose_field_exponent(H, tol: float = 1e-7) -> SpectralSplit:
    """``H = P diag(H1, H2) P^{-1}`` with H1 semisimple on the imaginary axis and H2 positive-stable."""
    H = as_matrix(H, "H")
    adm = admissibility_check(H, tol)
    if not adm.admissible:
        raise DomainError("inadmissible exponent: " + "; ".join(adm.reasons))
    split = spectral_split(H, zero_band=tol)
    d1, d2 = split.dims
    if d1:
        N = sn_decompose(split.block_zero).nilpotent
        if np.abs(N).max() > 1e-8 * max(1.0, float(np.linalg.norm(split.block_zero))):
            raise DomainError("zero real-part block is not semisimple")
    if d2 and not spectrum(split.block_positive).all_positive:
        raise DomainError("positive block is not positive-stable")
    return split
