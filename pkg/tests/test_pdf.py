import math

import numpy as np
import pytest

import oracle
from apent.errors import NotPositiveDefiniteError, SpecError
from apent.freegroup import Word, ball, identity
from apent.groupalg import GroupAlgebraElement
from apent.pdf import (
    DiagonalJoin, Explicit, Haagerup, Induced, Mollified, Regular, block_matrix, normalize, restrict,
    spec_from_json, spec_to_json,
)

a, A, b = Word((1,), 2), Word((-1,), 2), Word((2,), 2)

SPECS = [
    Regular(2),
    Regular(1, k=2),
    Haagerup((0.5,)),
    Haagerup((0.3, 0.5)),
    Haagerup((0.3 + 0.4j, -0.2)),
    Mollified(Haagerup((0.9, 0.9)), 0.5),
    DiagonalJoin((Haagerup((0.3, 0.5)), Haagerup((0.2, 0.4)))),
    Induced(GroupAlgebraElement({identity(2): 1.0, a: 0.5, Word((2, 1), 2): 0.25j}, 2)),
]


def test_haagerup_values():
    phi = Haagerup((0.3 + 0.4j, 0.5))
    assert phi(a)[0, 0] == 0.3 + 0.4j
    assert phi(A)[0, 0] == 0.3 - 0.4j
    assert phi(Word((1, 2, 1), 2))[0, 0] == pytest.approx((0.3 + 0.4j) ** 2 * 0.5)


def test_haagerup_parameter_range():
    with pytest.raises(SpecError):
        Haagerup((1.1,))
    Haagerup((1.0,))  # boundary allowed


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__)
def test_restrictions_are_psd_unital_toeplitz(spec):
    P = restrict(spec, ball(spec.rank, 2))
    assert P.is_unital()
    assert P.toeplitz_residual() < 1e-12
    assert np.linalg.eigvalsh(P.Q)[0] > -1e-10


def test_block_matrix_matches_oracle():
    phi = Haagerup((0.3 + 0.1j, 0.5))
    words = ball(2, 2)
    Q = block_matrix(phi, words)
    ref = oracle.gram(oracle.haagerup((0.3 + 0.1j, 0.5)), [w.letters for w in words])
    assert np.max(np.abs(Q - ref)) < 1e-15


def test_mollified_and_diagonal():
    base = Haagerup((0.8,))
    m = Mollified(base, 0.25)
    assert m(identity(1))[0, 0] == 1
    assert m(Word((1, 1), 1))[0, 0] == pytest.approx(0.25 * 0.64)
    with pytest.raises(SpecError):
        Mollified(base, 0.0)
    d = DiagonalJoin((Haagerup((0.3,)), Regular(1, k=2)))
    assert d.k == 3
    v = d(Word((1,), 1))
    assert np.allclose(v, np.diag([0.3, 0, 0]))


def test_explicit_fills_inverse_and_identity():
    phi = Explicit(1, 1, 1, {Word((1,), 1): [[0.5j]]})
    assert phi(Word((-1,), 1))[0, 0] == -0.5j
    assert phi(identity(1))[0, 0] == 1
    with pytest.raises(SpecError):
        phi(Word((1, 1), 1))


def test_non_positive_table_rejected():
    phi = Explicit(1, 1, 2, {Word((1,), 1): [[0.9]], Word((1, 1), 1): [[-0.9]]})
    with pytest.raises(NotPositiveDefiniteError):
        restrict(phi, (identity(1), Word((1,), 1), Word((1, 1), 1)))


def test_normalize():
    phi = Explicit(1, 1, 1, {identity(1): [[4.0]], Word((1,), 1): [[2.0]]})
    ld, unital = normalize(phi)
    assert ld == pytest.approx(math.log(4))
    assert unital(Word((1,), 1))[0, 0] == pytest.approx(0.5)
    ld, none = normalize(Explicit(1, 1, 0, {identity(1): [[0.0]]}))
    assert ld == -math.inf and none is None


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__)
def test_json_roundtrip(spec):
    again = spec_from_json(spec_to_json(spec))
    words = ball(spec.rank, 2)
    assert np.allclose(block_matrix(again, words), block_matrix(spec, words))


def test_explicit_json_roundtrip():
    phi = Explicit(2, 1, 1, {a: [[0.2]], b: [[0.1j]]})
    again = spec_from_json(spec_to_json(phi))
    # a table of radius 1 only reaches pairwise differences of length 1
    words = (identity(2), a)
    assert np.allclose(block_matrix(again, words), block_matrix(phi, words))
    assert again(b)[0, 0] == 0.1j


@pytest.mark.parametrize("data", [
    {"kind": "nope"},
    {"kind": "haagerup"},
    {"kind": "haagerup", "params": [0.5], "rank": 2},
    {"kind": "regular", "rank": "x"},
    [1, 2],
])
def test_malformed_specs(data):
    with pytest.raises(SpecError):
        spec_from_json(data)
