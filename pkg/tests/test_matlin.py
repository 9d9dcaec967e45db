from __future__ import annotations

import math

import numpy as np
import pytest

from ossfield.errors import ConditioningError, DomainError, ValidationError
from ossfield.matlin import (
    cluster_eigenvalues,
    commutator,
    expm,
    mat_power,
    skew_basis,
    sn_decompose,
    spectral_split,
    spectrum,
)

from conftest import J, random_jordan_conjugate


def taylor_expm(M, terms=30):
    out = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, terms):
        term = term @ M / k
        out = out + term
    return out


# ---------------------------------------------------------------- powers, expm


def test_mat_power_identity_exponent():
    np.testing.assert_allclose(mat_power(np.eye(2), 3.0), 3.0 * np.eye(2), rtol=1e-14)


def test_mat_power_diagonal():
    np.testing.assert_allclose(mat_power(np.diag([1.0, 2.0]), 2.0), np.diag([2.0, 4.0]), rtol=1e-14)


def test_mat_power_rotation_quarter_turn():
    R = mat_power(J, math.exp(math.pi / 2))
    np.testing.assert_allclose(R, taylor_expm(math.pi / 2 * J), atol=1e-12)
    np.testing.assert_allclose(R, J, atol=1e-12)


def test_mat_power_at_one_is_identity(rng):
    M = rng.uniform(-1, 1, (3, 3))
    assert np.array_equal(mat_power(M, 1.0), np.eye(3))


@pytest.mark.parametrize("c", [0.0, -1.0, float("nan")])
def test_mat_power_rejects_nonpositive(c):
    with pytest.raises(DomainError):
        mat_power(np.eye(2), c)


def test_non_finite_entries_rejected():
    with pytest.raises(ValidationError):
        mat_power(np.array([[1.0, np.inf], [0, 1]]), 2.0)


def test_expm_examples():
    np.testing.assert_array_equal(expm(np.zeros((3, 3))), np.eye(3))
    np.testing.assert_allclose(expm(np.diag([1.0, 0.0])), np.diag([math.e, 1.0]), rtol=1e-15)
    np.testing.assert_allclose(expm(math.pi * J), taylor_expm(math.pi * J, 60), atol=1e-12)
    np.testing.assert_allclose(expm(math.pi * J), -np.eye(2), atol=1e-12)


def test_semigroup_and_inverse_laws(rng):
    for _ in range(100):
        n = int(rng.integers(1, 5))
        M = rng.uniform(-1, 1, (n, n))
        a, b = rng.uniform(0.1, 10, 2)
        lhs = mat_power(M, a * b)
        rhs = mat_power(M, a) @ mat_power(M, b)
        scale = max(1.0, np.linalg.norm(lhs), np.linalg.norm(rhs))
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * scale
        assert np.abs(mat_power(M, a) @ mat_power(M, 1 / a) - np.eye(n)).max() <= 1e-10


# ---------------------------------------------------------------- spectrum


def test_spectrum_rotation_family():
    s = spectrum(0.5 * np.eye(2) + 0.3 * J)
    np.testing.assert_allclose(s.eigen_real_parts, [0.5, 0.5], atol=1e-15)
    assert s.all_positive


def test_spectrum_diagonal_and_nilpotent():
    np.testing.assert_allclose(spectrum(np.diag([3.0, 1.0, 2.0])).eigen_real_parts, [1, 2, 3])
    s = spectrum([[0.0, 1.0], [0.0, 0.0]])
    np.testing.assert_array_equal(s.eigen_real_parts, [0.0, 0.0])
    assert not s.all_positive
    assert s.min_real_part == s.eigen_real_parts.min()


# ---------------------------------------------------------------- Jordan-Chevalley


def test_sn_diagonalizable():
    d = sn_decompose(np.diag([1.0, 2.0]))
    np.testing.assert_allclose(d.semisimple, np.diag([1.0, 2.0]), atol=1e-14)
    np.testing.assert_allclose(d.nilpotent, 0.0, atol=1e-14)


def test_sn_jordan_block():
    d = sn_decompose([[2.0, 1.0], [0.0, 2.0]])
    np.testing.assert_allclose(d.semisimple, 2 * np.eye(2), atol=1e-12)
    np.testing.assert_allclose(d.nilpotent, [[0, 1], [0, 0]], atol=1e-12)


def test_sn_conjugated_jordan_block(rng):
    Q = rng.normal(size=(2, 2)) + 2 * np.eye(2)
    Qi = np.linalg.inv(Q)
    d = sn_decompose(Q @ np.array([[2.0, 1.0], [0.0, 2.0]]) @ Qi)
    np.testing.assert_allclose(d.semisimple, 2 * np.eye(2), atol=1e-8)
    np.testing.assert_allclose(d.nilpotent, Q @ np.array([[0, 1.0], [0, 0]]) @ Qi, atol=1e-8)


@pytest.mark.parametrize(
    "blocks",
    [
        [(2.0, 2)],
        [(1.5, 3)],
        [(1.0, 2), (3.0, 1), (-0.5, 1)],
        [(0.0, 2), (2.0, 2)],
    ],
)
def test_sn_invariants_random_conjugations(rng, blocks):
    for _ in range(20):
        M, S, N = random_jordan_conjugate(rng, blocks)
        d = sn_decompose(M)
        n = M.shape[0]
        assert np.abs(d.semisimple + d.nilpotent - M).max() <= 1e-8
        assert np.abs(commutator(d.semisimple, d.nilpotent)).max() <= 1e-8
        assert np.abs(np.linalg.matrix_power(d.nilpotent, n)).max() <= 1e-8
        assert np.abs(d.nilpotent - N).max() <= 1e-8


def test_sn_complex_jordan_pair():
    # real Jordan block for eigenvalues 1 +- 2i with multiplicity 2
    C = np.array([[1.0, -2.0], [2.0, 1.0]])
    M = np.block([[C, np.eye(2)], [np.zeros((2, 2)), C]])
    d = sn_decompose(M)
    np.testing.assert_allclose(d.nilpotent, np.block([[np.zeros((2, 2)), np.eye(2)], [np.zeros((2, 4))]]), atol=1e-8)


def test_cluster_multiplicities():
    cl = cluster_eigenvalues(np.diag([1.0, 1.0, 3.0]))
    assert sorted(c.multiplicity for c in cl) == [1, 2]


# ---------------------------------------------------------------- spectral split


def test_split_diag():
    sp = spectral_split(np.diag([0.0, 1.0]))
    assert sp.dims == (1, 1)
    np.testing.assert_allclose(sp.block_zero, [[0.0]], atol=1e-14)
    np.testing.assert_allclose(sp.block_positive, [[1.0]], atol=1e-14)


def test_split_rotation_plus_positive():
    from scipy.linalg import block_diag

    sp = spectral_split(block_diag(J, [[1.0]]))
    assert sp.dims == (2, 1)
    np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(sp.block_zero)), [-1j, 1j], atol=1e-12)
    np.testing.assert_allclose(sp.block_positive, [[1.0]], atol=1e-12)


def test_split_random_conjugations(rng):
    from scipy.linalg import block_diag

    for _ in range(30):
        Q = rng.normal(size=(3, 3)) + 2 * np.eye(3)
        M = Q @ block_diag(J, [[1.0]]) @ np.linalg.inv(Q)
        sp = spectral_split(M)
        assert sp.dims == (2, 1)
        assert np.abs(sp.reconstruct() - M).max() <= 1e-8 * np.abs(M).max()
        np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(sp.block_zero)), [-1j, 1j], atol=1e-8)
        np.testing.assert_allclose(np.linalg.eigvals(sp.block_positive), [1.0], atol=1e-8)


def test_split_rejects_negative():
    with pytest.raises(DomainError):
        spectral_split(np.diag([-1.0, 1.0]))


def test_split_ambiguous_band_edge():
    with pytest.raises(ConditioningError):
        spectral_split(np.diag([1.0e-7, 1.0]))


# ---------------------------------------------------------------- skew basis, commutator


def test_skew_basis_examples():
    assert len(skew_basis(1)) == 0
    (B,) = skew_basis(2)
    np.testing.assert_array_equal(B, J)
    assert len(skew_basis(3)) == 3
    assert len(skew_basis(5)) == 10


def test_skew_basis_properties():
    for n in (2, 3, 4):
        for B in skew_basis(n):
            assert np.array_equal(B + B.T, np.zeros((n, n)))
            assert np.count_nonzero(B) == 2
            for t in np.linspace(0, 2 * np.pi, 9):
                R = expm(t * B)
                assert np.abs(R @ R.T - np.eye(n)).max() <= 1e-12


def test_commutator_examples(rng):
    A = rng.normal(size=(2, 2))
    np.testing.assert_array_equal(commutator(np.eye(2), A), 0.0)
    np.testing.assert_array_equal(commutator(J, J), 0.0)
    np.testing.assert_array_equal(commutator(np.diag([1.0, 2.0]), J), [[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ValidationError):
        commutator(np.eye(2), np.eye(3))
