import itertools

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_vector(n, rng):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def dense_op(n, ops):
    """Kronecker product over n qubits; ops maps qubit -> 2x2 (identity elsewhere).

    Qubit 0 is the least-significant bit, so it is the last kron factor.
    """
    out = np.ones((1, 1), dtype=complex)
    for q in range(n):
        out = np.kron(ops.get(q, np.eye(2)), out)
    return out


def cz_product_diagonal(n, targets=None):
    """Diagonal of prod_{j<k} CZ_jk built pair by pair from bit tests."""
    qs = range(n) if targets is None else targets
    diag = np.ones(1 << n, dtype=complex)
    for idx in range(1 << n):
        for j, k in itertools.combinations(qs, 2):
            if (idx >> j) & 1 and (idx >> k) & 1:
                diag[idx] *= -1
    return diag
