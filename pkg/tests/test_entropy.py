import json
import math

import numpy as np
import pytest

import oracle
from apent import entropy as ent
from apent.freegroup import Word, ball, identity
from apent.groupalg import GroupAlgebraElement
from apent.pdf import DiagonalJoin, Haagerup, Induced, Mollified, Regular, restrict

MOLL = Mollified(Haagerup((0.9, 0.7j)), 0.5)
# frozen from the numpy oracle in tests/oracle.py (brute-force balls and slogdet)
MOLL_FORMULA1 = [-0.5477794102945502, -0.6977886366532351, -0.7256487020564162]
MOLL_SEWARD_PARTIAL = [-0.4523655891299019, -0.6746147198655279, -0.7217508303397375]
INDUCED = Induced(GroupAlgebraElement(
    {identity(2): 1.0, Word((1,), 2): 0.5, Word((2, 1), 2): 0.25j}, 2))
INDUCED_FORMULA1 = [-0.22750969642310018, -0.2636059597521152, -0.27032338060068994]


def test_h_F_rate_examples():
    P = restrict(Haagerup((0.5,)), ball(1, 1))
    assert ent.h_F_rate(P) == pytest.approx(math.log(0.75), abs=1e-14)
    assert ent.h_F_rate(restrict(Regular(2), ball(2, 2))) == 0.0
    assert ent.h_F_rate(restrict(Haagerup((1.0,)), ball(1, 1))) == -math.inf
    assert ent.h_F_rate(restrict(MOLL, ball(2, 0))) == 0.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_h_F_rate_equals_formula1_term(n):
    rep = ent.formula1_sequence(MOLL, 3)
    assert ent.h_F_rate(restrict(MOLL, ball(2, n))) == rep.values[n - 1]


def test_formula1_frozen_values():
    rep = ent.formula1_sequence(MOLL, 3)
    assert rep.levels == [1, 2, 3]
    assert np.allclose(rep.values, MOLL_FORMULA1, atol=1e-10, rtol=0)
    assert np.allclose(ent.formula1_sequence(INDUCED, 3).values, INDUCED_FORMULA1, atol=1e-10, rtol=0)


@pytest.mark.parametrize("spec", [MOLL, INDUCED, Haagerup((0.3 + 0.2j, -0.6))], ids=["moll", "induced", "haag"])
def test_sequences_non_increasing(spec):
    for rep in (ent.formula1_sequence(spec, 3), ent.formula2_sequence(spec, 2)):
        assert all(b <= a + 1e-10 for a, b in zip(rep.values, rep.values[1:]))
    vs = ent.verblunsky_series(spec, 3)
    assert all(t <= 1e-12 for t in vs.terms)


def test_verblunsky_partial_sums_match_formula1_at_balls():
    vs = ent.verblunsky_series(MOLL, 3)
    assert np.allclose(vs.values, MOLL_FORMULA1, atol=1e-10, rtol=0)


def test_verblunsky_enumeration_orders_agree():
    a = ent.verblunsky_series(MOLL, 3)
    b = ent.verblunsky_series(MOLL, 3, letter_order=(2, -1, -2, 1))
    assert np.allclose(a.values, b.values, atol=1e-10, rtol=0)


def test_seward_identity_frozen():
    rep = ent.seward_terms(MOLL, 2)
    assert np.allclose(rep.values, MOLL_SEWARD_PARTIAL, atol=1e-9, rtol=0)
    assert rep.diagnostics["max_word_term"] <= 1e-12


def test_seward_cmi_rearrangement():
    a, b = ent.seward_terms(MOLL, 2), ent.seward_cmi_terms(MOLL, 2)
    assert np.allclose(a.terms, b.terms, atol=1e-9, rtol=0)
    assert b.diagnostics["min_cmi"] >= -1e-10


def test_seward_level_zero_haagerup():
    r = ent.seward_cmi_terms(Haagerup((0.3, 0.5)), 0)
    assert r.terms[0] == pytest.approx(ent.seward_terms(Haagerup((0.3, 0.5)), 0).terms[0], abs=1e-9)


@pytest.mark.parametrize("rho", [0.2, 0.5, 0.8])
def test_z_case_every_method(rho):
    target = math.log(1 - rho * rho)
    for m in ent.METHODS:
        rep = ent.estimate_hann(Haagerup((rho,)), m)
        assert rep.stabilized and rep.estimate == pytest.approx(target, abs=1e-9)


def test_z_case_terms():
    rep = ent.seward_terms(Haagerup((0.5,)), 3)
    assert rep.terms[0] == pytest.approx(math.log(0.75), abs=1e-12)
    assert max(abs(t) for t in rep.terms[1:]) < 1e-12
    vs = ent.verblunsky_series(Haagerup((0.5,)), 3)
    assert vs.diagnostics["steps"][0]["term"] == pytest.approx(math.log(0.75))
    assert max(abs(s["term"]) for s in vs.diagnostics["steps"][1:]) < 1e-12


def test_regular_stabilizes_at_level_one():
    rep = ent.estimate_hann(Regular(2), "formula1")
    assert rep.estimate == 0 and rep.stabilized_at == 1


def test_singular_branch():
    rep = ent.estimate_hann(Haagerup((1.0, 0.3)), "formula1")
    assert rep.estimate == -math.inf and rep.first_singular_level == 1
    for m in ent.METHODS:
        assert ent.estimate_hann(Haagerup((1.0,)), m).estimate == -math.inf
    assert json.loads(rep.to_json())["estimate"] == "-inf"


def test_unstabilized_is_reported():
    rep = ent.estimate_hann(MOLL, "formula1", max_level=2)
    assert not rep.stabilized
    assert rep.to_dict()["estimate"] == "not stabilized"


def test_interlacing():
    E, Ep = ent.ball_entropy_sequences(MOLL, 2)
    for n in range(3):
        assert 2 * Ep[n + 1] <= 2 * E[n] + 1e-10
        assert 2 * E[n] <= 2 * Ep[n] + 1e-10


def test_additivity_diagnostic():
    spec = DiagonalJoin((Haagerup((0.5,)), Haagerup((0.3,))))
    rep = ent.estimate_hann(spec, "verblunsky")
    assert rep.estimate == pytest.approx(math.log(0.75) + math.log(0.91), abs=1e-8)
    assert rep.diagnostics["additivity"]["difference"] < 1e-8


def test_mollified_profile():
    assert ent.mollified_profile(Regular(2), [1.0, 0.5, 0.1]) == [(1.0, 0.0), (0.5, 0.0), (0.1, 0.0)]
    prof = ent.mollified_profile(Haagerup((0.9, 0.9)), [0.5, 0.25, 0.1], max_level=3)
    vals = [h for _, h in prof]
    assert all(v < 0 for v in vals)
    with pytest.raises(ValueError):
        ent.mollified_profile(Regular(1), [0.0])


def test_induced_partial_sums_sign_and_monotone():
    rep = ent.verblunsky_series(INDUCED, 3)
    assert all(v <= 0 for v in rep.values)
    assert all(b <= a + 1e-12 for a, b in zip(rep.values, rep.values[1:]))


def test_csv_and_json():
    rep = ent.formula1_sequence(Haagerup((0.5,)), 2)
    lines = rep.to_csv().strip().split("\n")
    assert lines[0] == "method,level,term,partial_sum" and len(lines) == 3
    d = json.loads(rep.to_json())
    assert d["method"] == "formula1" and "convention" in d


def test_unknown_method():
    with pytest.raises(ValueError):
        ent.estimate_hann(Regular(1), "bogus")
