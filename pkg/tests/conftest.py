from __future__ import annotations

import numpy as np
import pytest

J = np.array([[0.0, -1.0], [1.0, 0.0]])
I2 = np.eye(2)


def random_jordan_conjugate(rng, blocks):
    """``Q * blockdiag(Jordan blocks) * Q^{-1}`` with the nilpotent part returned too."""
    from scipy.linalg import block_diag

    S_parts, N_parts = [], []
    for lam, size in blocks:
        S_parts.append(lam * np.eye(size))
        N_parts.append(np.eye(size, k=1))
    S, N = block_diag(*S_parts), block_diag(*N_parts)
    n = S.shape[0]
    Q = rng.normal(size=(n, n)) + 2 * np.eye(n)
    Qi = np.linalg.inv(Q)
    return Q @ (S + N) @ Qi, Q @ S @ Qi, Q @ N @ Qi


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
