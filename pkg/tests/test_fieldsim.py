from __future__ import annotations

import math

import numpy as np
import pytest

from ossfield.covariance import CovarianceModel, c_gamma
from ossfield.errors import ModelError, NumericError, ValidationError
from ossfield.fieldsim import (
    Grid,
    assemble_cov_matrix,
    band_multiplier,
    empirical_cov,
    empirical_oss_test,
    factorize,
    philox_uniforms,
    sample_field,
    standard_normals,
)

from conftest import I2, J

GRID4 = [[0.5, 0.0], [0.0, 0.5], [0.5, 0.5], [-0.3, 0.4]]


def test_grid_validation():
    with pytest.raises(ValidationError):
        Grid([[0.0, 1.0], [0.0, 1.0]])
    with pytest.raises(ValidationError):
        Grid([[np.nan, 1.0]])
    assert len(Grid(GRID4)) == 4


def test_assemble_single_point():
    C = assemble_cov_matrix(CovarianceModel.ofbf(3.0), [[0.3, 0.4]])
    np.testing.assert_allclose(C, 2 * c_gamma(3.0) * 0.5 * I2, rtol=1e-12)


def test_assemble_origin_blocks_zero():
    C = assemble_cov_matrix(CovarianceModel.ofbf(3.0), [[0.0, 0.0], [1.0, 0.0]])
    np.testing.assert_array_equal(C[:2, :], 0.0)
    np.testing.assert_array_equal(C[:, :2], 0.0)


def test_assemble_blocks_transpose():
    C = assemble_cov_matrix(CovarianceModel.ofbf(2.7), [[0.2, 0.1], [-0.4, 0.6]])
    np.testing.assert_array_equal(C[:2, 2:], C[2:, :2].T)


def test_assemble_rejects_indefinite():
    pts = [[0.0, 1.0], [1.0, 0.0]]
    blocks = np.zeros((2, 2, 1, 1))
    blocks[0, 0] = blocks[1, 1] = 1.0
    blocks[0, 1] = blocks[1, 0] = 2.0
    with pytest.raises(ModelError):
        assemble_cov_matrix(CovarianceModel.from_table(pts, blocks), pts)


def test_uniforms_open_interval_and_determinism():
    u = philox_uniforms(7, 1000, 6)
    assert u.min() > 0.0 and u.max() < 1.0
    np.testing.assert_array_equal(u, philox_uniforms(7, 1000, 6))
    assert not np.array_equal(u, philox_uniforms(8, 1000, 6))
    assert not np.array_equal(u, philox_uniforms(7, 1000, 6, stream=1))


def test_seed_isolation():
    batch = standard_normals(11, 50, 7)
    for i in (0, 13, 49):
        np.testing.assert_array_equal(batch[i], standard_normals(11, 1, 7, start=i)[0])


def test_sample_identity_mean():
    s = sample_field(np.eye(3), 100_000, seed=1)
    assert np.abs(s.values.mean(axis=0)).max() <= 4 * math.sqrt(1 / 1e5)


def test_sample_variances_within_bound():
    s = sample_field(np.diag([4.0, 1.0]), 100_000, seed=2)
    v = np.diag(empirical_cov(s))
    assert np.all(np.abs(v - [4.0, 1.0]) <= 3 * math.sqrt(2 / 1e5) * np.array([4.0, 1.0]))


def test_sample_seed_determinism():
    a = sample_field(np.diag([2.0, 1.0]), 500, seed=3).values
    b = sample_field(np.diag([2.0, 1.0]), 500, seed=3).values
    np.testing.assert_array_equal(a, b)


def test_factorize_residual_and_semidefinite():
    v = np.array([[1.0], [2.0], [-1.0]])
    C = v @ v.T  # rank one
    f = factorize(C)
    assert f.rank == 1
    assert np.linalg.norm(f.L @ f.L.T - C) <= 1e-8 * np.linalg.norm(C)


def test_factorize_slightly_indefinite():
    # pivoting stops at the tiny negative pivot, leaving a residual far inside budget
    C = np.diag([1.0, 1.0, -1e-11])
    f = factorize(C)
    assert f.rank == 2
    assert np.linalg.norm(f.L @ f.L.T - C) <= 1e-8 * np.linalg.norm(C)


def test_factorize_failure():
    with pytest.raises(NumericError):
        factorize(np.diag([1.0, -0.5]))
    with pytest.raises(ValidationError):
        factorize(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_empirical_cov_linear_transform():
    A = np.array([[1.0, 0.5, 0.0], [0.0, 2.0, -1.0]])
    X = standard_normals(5, 200_000, 3)
    C = empirical_cov(X @ A.T)
    np.testing.assert_allclose(C, A @ A.T, atol=4 * math.sqrt(2 / 2e5) * 5)


def test_empirical_cov_needs_two_samples():
    with pytest.raises(ValidationError):
        empirical_cov(np.ones((1, 3)))


def test_empirical_cov_convergence_rate():
    Ns = np.array([1_000, 10_000, 100_000])
    errs = []
    for N in Ns:
        # average over seeds to stabilise the slope estimate
        e = [np.abs(empirical_cov(standard_normals(seed, int(N), 4)) - np.eye(4)).max() for seed in range(8)]
        errs.append(np.mean(e))
    slope = np.polyfit(np.log(Ns), np.log(errs), 1)[0]
    assert abs(slope + 0.5) <= 0.1


def test_band_multiplier():
    assert band_multiplier(None, 10) == 4.0
    k = band_multiplier(0.01, 36)
    assert 3.0 < k < 4.0
    with pytest.raises(ValidationError):
        band_multiplier(1.5, 3)


@pytest.mark.parametrize(
    "H,expect",
    [(0.5 * I2, True), (0.5 * I2 + 0.3 * J, True), (0.8 * I2, False)],
)
def test_empirical_oss(H, expect):
    rep = empirical_oss_test(CovarianceModel.ofbf(3.0), I2, H, 2.0, GRID4, N=100_000, seed=4)
    assert rep.passed is expect
    if not expect:
        assert rep.max_abs_deviation > 5 * rep.band
        assert abs(rep.max_rel_deviation - (2**0.6 - 1)) <= 0.05
