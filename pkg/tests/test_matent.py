import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apent import matent
from apent.errors import NotPSDError, SingularMatrixError


def random_pd(rng, n, complex_=True):
    A = rng.standard_normal((n, n)) + (1j * rng.standard_normal((n, n)) if complex_ else 0)
    return A @ A.conj().T + 0.1 * np.eye(n)


def test_logdet_example():
    assert matent.logdet([[1, 0.5], [0.5, 1]]) == pytest.approx(math.log(0.75), abs=1e-15)


def test_logdet_singular_and_not_psd():
    assert matent.logdet([[1, 1], [1, 1]]) == -math.inf
    with pytest.raises(NotPSDError):
        matent.logdet([[1, 2], [2, 1]])
    assert matent.logdet(np.zeros((0, 0))) == 0.0


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        matent.logdet([[1, 0.3], [0.1, 1]])


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2 ** 32 - 1))
def test_schur_determinant_formula(n, seed):
    rng = np.random.default_rng(seed)
    Q = random_pd(rng, n)
    k = n // 2
    a, b = list(range(k)), list(range(k, n))
    S = matent.schur_complement(Q, b, a)
    assert matent.logdet(Q) == pytest.approx(matent.logdet(Q[:k, :k]) + matent.logdet(S), abs=1e-9)


def test_mutual_information_of_correlated_pair():
    rho = 0.6
    Q = np.array([[1, rho], [rho, 1]])
    assert matent.mutual_info(Q, [0], [1]) == pytest.approx(-0.5 * math.log(1 - rho ** 2))


def test_schur_complement_requires_nonsingular_condition():
    Q = np.array([[1, 1, 0], [1, 1, 0], [0, 0, 1.0]])
    with pytest.raises(SingularMatrixError):
        matent.schur_complement(Q, [2], [0, 1])


def test_sqrt_and_inverse_sqrt():
    rng = np.random.default_rng(3)
    Q = random_pd(rng, 5)
    R = matent.sqrt_psd(Q)
    assert np.allclose(R @ R, Q)
    assert np.allclose(matent.inv_sqrt_psd(Q) @ R, np.eye(5))


def test_two_block_contraction():
    Q11, Q22 = np.diag([4.0, 1.0]), np.array([[9.0]])
    R = np.array([[3.0], [0.5]])
    C = matent.two_block_contraction(Q11, R, Q22)
    assert np.allclose(C, [[0.5], [0.5 / 3]])


@pytest.mark.parametrize("k,l,m", [(1, 0, 1), (1, 1, 1), (2, 3, 1), (3, 2, 2), (1, 4, 3)])
def test_three_block_roundtrip(k, l, m):
    rng = np.random.default_rng(k * 100 + l * 10 + m)
    Q = random_pd(rng, k + l + m)
    D = np.diag(1 / np.sqrt(np.diag(Q).real))
    Q = D @ Q @ D
    P, C = matent.three_block_extract(Q, k, l, m)
    assert C.shape == (k, m)
    assert matent.is_strict_contraction(C)
    assert np.allclose(matent.three_block_complete(P, C), Q, atol=1e-12)


def test_central_completion_maximizes_determinant():
    rng = np.random.default_rng(11)
    Q = random_pd(rng, 5)
    P, C = matent.three_block_extract(Q, 2, 2, 1)
    central = matent.three_block_complete(P, np.zeros_like(C))
    assert matent.logdet(central) >= matent.logdet(Q)
    # the determinant deficit is exactly log det(I - C*C)
    gap = matent.logdet(Q) - matent.logdet(central)
    assert gap == pytest.approx(matent.logdet(np.eye(1) - C.conj().T @ C), abs=1e-10)


def test_conditional_mutual_information_from_contraction():
    rng = np.random.default_rng(5)
    Q = random_pd(rng, 6)
    P, C = matent.three_block_extract(Q, 2, 2, 2)
    cmi = matent.mutual_info(Q, [0, 1], [4, 5], [2, 3])
    assert cmi == pytest.approx(-0.5 * matent.logdet(np.eye(2) - C.conj().T @ C), abs=1e-10)


def test_completion_rejects_non_contraction():
    P = matent.PartialThreeBlock.from_blocks(1.0, np.zeros((1, 0)), np.zeros((0, 0)), np.zeros((0, 1)), 1.0)
    with pytest.raises(ValueError):
        matent.three_block_complete(P, [[1.5]])
    full = matent.three_block_complete(P, [[1.0]])
    assert matent.logdet(full) == -math.inf
