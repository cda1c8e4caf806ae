"""Acceptance criteria; each test prints a single PASS/FAIL summary line."""
import math
import time

import numpy as np
import pytest

import oracle
from apent import entropy as ent
from apent import matent
from apent import randrep as rr
from apent.freegroup import (
    Word, ball, crescent, crescent_description, crescent_owner, length_lex_enumeration, letter,
    multiply, shift_overlap, sort_words, sphere, translate,
)
from apent.groupalg import GroupAlgebraElement
from apent.pdf import DiagonalJoin, Haagerup, Induced, Mollified, Regular, restrict
from apent.verblunsky import coefficient_shape, reconstruct, sequence_from_partial

FOUR = ("formula1", "formula2", "verblunsky", "seward")


def test_c1_z_case_exact(record):
    t0 = time.perf_counter()
    worst, late = 0.0, 0
    for rho in [i / 10 for i in range(1, 10)]:
        target = math.log(1 - rho * rho)
        for m in FOUR:
            rep = ent.estimate_hann(Haagerup((rho,)), m, max_level=3)
            worst = max(worst, abs(rep.estimate - target))
            late += not (rep.stabilized and rep.stabilized_at <= 3)
    # oracle: Toeplitz determinants (1-ρ²)^{m-1} up to m = 9
    toeplitz = max(abs(oracle.logdet(oracle.gram(oracle.haagerup((rho,)), oracle.ball_words(1, 4)))
                       - 8 * math.log(1 - rho * rho)) for rho in (0.1, 0.5, 0.9))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and late == 0 and elapsed < 1.0 and toeplitz < 1e-9
    record("C1 Z-case entropy = log(1-rho^2)", ok,
           f"max err {worst:.2e}, unstabilized {late}, {elapsed:.2f}s")
    assert ok


def test_c2_cross_method_rank_two(record):
    t0 = time.perf_counter()
    spec = Haagerup((0.3, 0.5))
    reps = {m: ent.estimate_hann(spec, m, max_level=3) for m in FOUR}
    ests = [r.estimate for r in reps.values()]
    spread = max(ests) - min(ests)
    tail = max(abs(s["term"]) for s in reps["verblunsky"].diagnostics["steps"] if len(s["word"]) >= 2)
    elapsed = time.perf_counter() - t0
    target = math.log(0.91) + math.log(0.75)
    ok = spread < 1e-8 and tail < 1e-12 and elapsed < 10 and abs(ests[0] - target) < 1e-8
    record("C2 r=2 cross-method agreement", ok,
           f"spread {spread:.2e}, |g|>=2 terms <= {tail:.1e}, {elapsed:.2f}s")
    assert ok


def test_c3_verblunsky_bijection(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    enum = length_lex_enumeration(2, 21)
    worst = 0.0
    for trial in range(100):
        k = 1 + trial % 2
        cs = []
        for n in range(enum.steps):
            shape = coefficient_shape(enum.order[: n + 1], enum.order[n + 1], k)
            C = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            cs.append(C * rng.uniform(0, 0.9) / np.linalg.norm(C, 2))
        back = sequence_from_partial(reconstruct(cs, enum, k), enum)
        worst = max(worst, max(float(np.max(np.abs(a - b))) for a, b in zip(cs, back)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 30
    record("C3 Verblunsky bijection", ok, f"max error {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_c4_entropy_calculus_fuzz(record):
    rng = np.random.default_rng(7)
    worst = {"chain": 0.0, "symmetry": 0.0, "monotone": 0.0, "ssa": 0.0, "schur": 0.0}
    for _ in range(500):
        n = int(rng.integers(3, 9))
        A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        Q = A @ A.conj().T + 0.05 * np.eye(n)
        idx = rng.permutation(n)
        i, j = sorted(rng.choice(np.arange(1, n), 2, replace=False))
        a, b, c = list(idx[:i]), list(idx[i:j]), list(idx[j:])
        H = lambda s: matent.entropy(Q, s)  # noqa: E731
        worst["chain"] = max(worst["chain"], abs(H(a + b) - H(a) - matent.cond_entropy(Q, b, a)))
        worst["symmetry"] = max(worst["symmetry"],
                                abs(matent.mutual_info(Q, a, b, c) - matent.mutual_info(Q, b, a, c)))
        worst["monotone"] = max(worst["monotone"],
                                matent.cond_entropy(Q, a, b + c) - matent.cond_entropy(Q, a, c))
        worst["ssa"] = max(worst["ssa"], -matent.mutual_info(Q, a, b, c))
        S = matent.schur_complement(Q, b + c, a)
        worst["schur"] = max(worst["schur"], abs(matent.logdet(Q[np.ix_(a + b + c, a + b + c)])
                                                 - matent.logdet(Q[np.ix_(a, a)]) - matent.logdet(S)))
    ok = all(v < 1e-9 for v in worst.values())
    record("C4 entropy-calculus fuzz (500 matrices)", ok,
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert ok


def test_c5_combinatorics(record):
    problems = []
    for r in (1, 2, 3):
        for n in (0, 1, 2, 3):
            B = ball(r, n)
            if n and len(B) - sum(len(shift_overlap(B, s)) for s in range(1, r + 1)) != 1:
                problems.append(f"count r={r} n={n}")
            if n < 3:
                Bn1 = ball(r, n + 1)
                for s in range(1, r + 1):
                    if set(shift_overlap(Bn1, s)) != set(B) | set(translate(s, B)):
                        problems.append(f"cup-cap r={r} n={n} s={s}")
    owner = {}
    for m in range(1, 6):
        for g in sphere(2, m):
            cres = crescent(g)
            desc = crescent_description(g)
            if sort_words([w for ws in desc.values() for w in ws], 2) != cres:
                problems.append(f"description {g}")
            for t in cres:
                if len(t) <= 5:
                    if t in owner:
                        problems.append(f"overlap at {t}")
                    owner[t] = g
                    if crescent_owner(t) != g:
                        problems.append(f"owner {t}")
    if set(owner) != set(ball(2, 5).elements[1:]):
        problems.append("crescents do not cover B_5")
    for r in (1, 2, 3):
        enum = length_lex_enumeration(r, radius=3)
        for i in range(enum.steps):
            F, g, s = enum.prefix(i), enum.order[i + 1], enum.direction(i)
            Fp = F.enlarge(g)
            for t in [x for k in range(1, r + 1) for x in (k, -k)]:
                before, after = set(shift_overlap(F, t)), set(shift_overlap(Fp, t))
                expect = before | {g} if t == s else \
                    before | {multiply(letter(-s, r), g)} if t == -s else before
                if after != expect:
                    problems.append(f"shift rule r={r} step={i} t={t}")
    ok = not problems
    record("C5 combinatorics", ok, "; ".join(problems[:5]) or f"{len(owner)} words owned exactly once")
    assert ok


def test_c6_distributions(record):
    t0 = time.perf_counter()
    reps = [
        rr.test_wishart_k1(16, 20000, seed=7),
        rr.test_sigma_radial(8, 20000, seed=7),
        rr.test_dil_dist(24, samples=4000, seed=7),
        rr.test_killip_nenciu(32, 5000, seed=7),
    ]
    elapsed = time.perf_counter() - t0
    ok = all(r.passed for r in reps) and elapsed < 300
    detail = (f"wishart KS {reps[0].statistics['ks']:.4f}, sigma KS {reps[1].statistics['ks']:.4f}, "
              f"dildist KS {reps[2].statistics['ks_norm']:.4f}/{reps[2].statistics['ks_re_entry']:.4f} "
              f"singular {reps[2].statistics['singular']}, KN max|corr| {reps[3].statistics['max_abs']:.4f}, "
              f"{elapsed:.1f}s")
    record("C6 distributional checks", ok, detail)
    assert ok


def test_c7_ldp_rate(record):
    rep = rr.ldp_rate_check((50, 100, 200), 0.5)
    rows = rep.statistics["rows"]
    exact = all(abs(r["rate"] - (r["n"] - 1) / r["n"] * math.log(0.75)) < 1e-9 for r in rows)
    ok = rep.passed and exact
    record("C7 LDP rate", ok, ", ".join(f"n={r['n']} err {r['rate_error']:.4f} <= {r['bound']:.4f}"
                                          for r in rows))
    assert ok


CORPUS = {
    "regular r=1": Regular(1),
    "regular r=2 k=2": Regular(2, k=2),
    "haagerup Z 0.7": Haagerup((0.7,)),
    "haagerup (0.3,0.5)": Haagerup((0.3, 0.5)),
    "haagerup complex": Haagerup((0.3 + 0.4j, -0.6)),
    "mollified": Mollified(Haagerup((0.9, 0.7j)), 0.5),
    "induced": Induced(GroupAlgebraElement({Word((), 2): 1.0, Word((1,), 2): 0.5,
                                            Word((2, 1), 2): 0.25j}, 2)),
    "diag k=2": DiagonalJoin((Haagerup((0.3, 0.5)), Haagerup((0.6, -0.2)))),
}


def test_c8_interlacing_and_seward(record):
    worst_inter, worst_sew = 0.0, 0.0
    for name, spec in CORPUS.items():
        E, Ep = ent.ball_entropy_sequences(spec, 3)
        for n in range(4):
            worst_inter = max(worst_inter, 2 * Ep[n + 1] - 2 * E[n], 2 * E[n] - 2 * Ep[n])
        sew = ent.seward_terms(spec, 3)
        r = spec.rank
        for n, v in zip(sew.levels, sew.values):
            # independent evaluation of H(B_{n+1}) - (2r-1) H(B_n) by full log-determinants
            H1 = 0.5 * matent.logdet(restrict(spec, ball(r, n + 1)).Q)
            H0 = 0.5 * matent.logdet(restrict(spec, ball(r, n)).Q)
            worst_sew = max(worst_sew, abs(v - (H1 - (2 * r - 1) * H0)))
    ok = worst_inter <= 1e-10 and worst_sew < 1e-9
    record("C8 interlacing and Seward identity", ok,
           f"max interlacing violation {worst_inter:.1e}, Seward error {worst_sew:.1e}, {len(CORPUS)} specs")
    assert ok


@pytest.mark.parametrize("method", FOUR)
def test_c9_additivity(record, method):
    pairs = [((0.5,), (0.3,)), ((0.3, 0.5), (0.2, 0.4)), ((0.3 + 0.4j, 0.1), (0.6, -0.5j))]
    worst = 0.0
    for p, q in pairs:
        joint = ent.estimate_hann(DiagonalJoin((Haagerup(p), Haagerup(q))), method, max_level=3)
        assert joint.diagnostics["additivity"]
        parts = ent.estimate_hann(Haagerup(p), method, max_level=3).estimate + \
            ent.estimate_hann(Haagerup(q), method, max_level=3).estimate
        worst = max(worst, abs(joint.estimate - parts))
    ok = worst < 1e-8
    record(f"C9 additivity ({method}, k=2)", ok, f"max error {worst:.1e}")
    assert ok
