"""Annealed AP entropy of positive definite functions on free groups.

Four independent routes to the same limit ``h_ann(φ)``:

``formula1``
    ``log det φ_(B_n) - Σ_{s∈S} log det φ_(B_n ∩ sB_n)`` for ``n = 1, 2, ...``
``formula2``
    ``Σ_{s∈S} log det φ_(B_n ∪ sB_n) - (2r-1) log det φ_(B_n)`` for ``n = 0, 1, ...``
``verblunsky``
    partial sums of ``log det(I_k - C_n* C_n)`` along a length-lex enumeration,
    grouped by the length of the added word
``seward``
    partial sums of the Seward expansion over a length-lex order, level ``n``
    collecting the words of length ``n + 1``

The first two are non-increasing sequences whose limit is the entropy; the last
two are series with non-positive terms.  ``formula1`` and ``formula2`` use the
matrix log-determinant; the Seward expansion is written with the tuple entropy
``H_φ(F) = ½ log det φ_(F)``, so its partial sum through level ``n`` equals
``E_n + E'_n = H_φ(B_{n+1}) - (2r-1) H_φ(B_n)`` where ``2E_n`` and ``2E'_n`` are
the ``formula1`` and ``formula2`` terms at ``n+1`` and ``n``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg

from . import matent
from .errors import SingularPrefixError
from .freegroup import ball, ball_size, check_letter_order, length_lex_enumeration, parent, \
    predecessors, shift_overlap, sphere, translate
from .pdf import DiagonalJoin, PDFSpec, PartialPDF, restrict
from .verblunsky import extract_coefficient

METHODS = ("formula1", "formula2", "verblunsky", "seward", "seward_cmi")
# largest ball restricted by default is B_4
DEFAULT_MAX_LEVEL = {"formula1": 4, "formula2": 3, "verblunsky": 4, "seward": 3, "seward_cmi": 3}
DEFAULT_TOL = 1e-10

NEG_INF = -math.inf

_CONVENTIONS = {
    "formula1": "matrix log-det; value at level n is 2*E_{n-1}",
    "formula2": "matrix log-det; value at level n is 2*E'_n",
    "verblunsky": "matrix log-det; term = sum of log det(I_k - C*C) over enlargements adding words of length n",
    "seward": "tuple entropy H = (1/2) log det; partial sum through level n is E_n + E'_n",
    "seward_cmi": "tuple entropy H = (1/2) log det; level n = -sum over |g| = n+1 of I(e; C(g) | Q(parent g))",
}


def _fmt(x):
    if x is None:
        return None
    if isinstance(x, float) and math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return x


@dataclass
class EntropyReport:
    """Per-level terms and running values of one entropy method."""

    method: str
    levels: list[int] = field(default_factory=list)
    terms: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    stabilized: bool = False
    stabilized_at: int | None = None
    last_increment: float | None = None
    first_singular_level: int | None = None
    convention: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def estimate(self) -> float:
        return self.values[-1] if self.values else NEG_INF

    @property
    def levels_computed(self) -> int:
        return len(self.levels)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["terms"] = [_fmt(x) for x in self.terms]
        d["values"] = [_fmt(x) for x in self.values]
        d["last_increment"] = _fmt(self.last_increment)
        d["estimate"] = _fmt(self.estimate) if self.stabilized else "not stabilized"
        d["last_value"] = _fmt(self.estimate)
        d["levels_computed"] = self.levels_computed
        d["diagnostics"] = json.loads(json.dumps(self.diagnostics, default=_fmt), parse_constant=str)
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "level", "term", "partial_sum"])
        for L, t, v in zip(self.levels, self.terms, self.values):
            w.writerow([self.method, L, repr(float(t)), repr(float(v))])
        return buf.getvalue()


def _half_logdet(M) -> float:
    return 0.5 * matent.logdet(M)


def h_F_rate(P: PartialPDF) -> float:
    """``log det Q - Σ_{s∈S} log det Q_(F∩sF)``, or ``-inf`` if ``Q`` is singular."""
    F = P.elements
    total = matent.logdet(P.Q)
    if total == NEG_INF:
        return NEG_INF
    for s in range(1, P.rank + 1):
        total -= matent.logdet(P.submatrix(shift_overlap(F, s)))
    return total


def _ball_pdf(spec: PDFSpec, n: int, order) -> PartialPDF:
    return restrict(spec, ball(spec.rank, n, order))


# -- level iterators: yield (level, term, value) and stop after a -inf value --

def _iter_formula1(spec, order) -> Iterator[tuple[int, float, float]]:
    n = 1
    while True:
        P = _ball_pdf(spec, n, order)
        v = h_F_rate(P)
        yield n, v, v
        if v == NEG_INF:
            return
        n += 1


def _iter_formula2(spec, order) -> Iterator[tuple[int, float, float]]:
    r = spec.rank
    n = 0
    while True:
        P = _ball_pdf(spec, n + 1, order)
        Bn = P.elements[: ball_size(r, n)]
        base = matent.logdet(P.submatrix(Bn))
        v = NEG_INF
        if base != NEG_INF:
            v = -(2 * r - 1) * base
            for s in range(1, r + 1):
                # B_n ∪ sB_n = B_{n+1} ∩ sB_{n+1}
                ld = matent.logdet(P.submatrix(shift_overlap(P.elements, s)))
                if ld == NEG_INF:
                    v = NEG_INF
                    break
                v += ld
        yield n, v, v
        if v == NEG_INF:
            return
        n += 1


def _iter_verblunsky(spec, order, diag: dict) -> Iterator[tuple[int, float, float]]:
    r = spec.rank
    total = 0.0
    steps: list[dict] = []
    diag["steps"] = steps
    L = 1
    while True:
        enum = length_lex_enumeration(r, radius=L, letter_order=order)
        P = restrict(spec, enum.order)
        term = 0.0
        first, last = ball_size(r, L - 1) - 1, ball_size(r, L) - 1
        for n in range(first, last):
            prefix = enum.order[: n + 2]
            if not matent.is_nonsingular(P.submatrix(prefix[:-1])):
                diag["singular_step"] = n
                term = NEG_INF
                break
            C = extract_coefficient(P.sub(prefix), prefix[-1])
            t = matent.logdet(np.eye(spec.k) - C.conj().T @ C)
            steps.append({"step": n, "word": enum.order[n + 1].to_json(),
                          "norm": matent.operator_norm(C), "term": t})
            if t == NEG_INF:
                diag["singular_step"] = n + 1
                term = NEG_INF
                break
            term += t
        total = total + term if term != NEG_INF else NEG_INF
        yield L, term, total
        if total == NEG_INF:
            return
        L += 1


def _prefix_cond_entropies(Q: np.ndarray, k: int) -> np.ndarray | None:
    """``H(g_i | g_0..g_{i-1})`` for each block of a nonsingular matrix, via Cholesky."""
    if not matent.is_nonsingular(Q):
        return None
    L = scipy.linalg.cholesky(Q, lower=True)
    d = np.log(np.real(np.diag(L)))
    return d.reshape(-1, k).sum(axis=1)


def _iter_seward(spec, order, diag: dict) -> Iterator[tuple[int, float, float]]:
    r, k = spec.rank, spec.k
    diag["max_word_term"] = NEG_INF
    e_entropy = _half_logdet(np.asarray(spec(ball(r, 0).elements[0])))
    total = 0.0
    n = 0
    while True:
        P = _ball_pdf(spec, n + 1, order)
        h = _prefix_cond_entropies(P.Q, k)
        if h is None:
            yield n, NEG_INF, NEG_INF
            return
        index = {w: i for i, w in enumerate(P.elements)}
        if n == 0:
            term = 2 * e_entropy - sum(e_entropy - h[index[w]] for w in sphere(r, 1, order))
        else:
            parts = [h[index[w]] - h[index[parent(w)]] for w in sphere(r, n + 1, order)]
            diag["max_word_term"] = max(diag["max_word_term"], float(max(parts)))
            term = float(sum(parts))
        total += term
        yield n, term, total
        n += 1


def _iter_seward_cmi(spec, order, diag: dict) -> Iterator[tuple[int, float, float]]:
    r = spec.rank
    diag["min_cmi"] = math.inf
    total = 0.0
    n = 0
    while True:
        P = _ball_pdf(spec, n + 1, order)
        if not P.is_nonsingular():
            yield n, NEG_INF, NEG_INF
            return
        term = 0.0
        if n == 0:
            term += 2 * _half_logdet(P.submatrix(P.elements[:1]))
        for w in sphere(r, n + 1, order):
            # I(e; C(w) | Q(parent w)) translated on the left by w
            cond = translate(w.first, predecessors(parent(w), order))
            cond_set = set(cond)
            cres = tuple(x for x in predecessors(w, order) if x not in cond_set)
            cmi = matent.mutual_info(P.Q, P.positions([w]), P.positions(cres), P.positions(cond))
            diag["min_cmi"] = min(diag["min_cmi"], cmi)
            term -= cmi
        total += term
        yield n, term, total
        n += 1


def _run(method: str, spec: PDFSpec, max_level: int | None, tol: float | None,
         letter_order: Sequence[int] | None) -> EntropyReport:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    order = check_letter_order(spec.rank, letter_order)
    if max_level is None:
        max_level = DEFAULT_MAX_LEVEL[method]
    report = EntropyReport(method, convention=_CONVENTIONS[method])
    report.diagnostics["letter_order"] = list(order)
    if method == "formula1":
        it = _iter_formula1(spec, order)
    elif method == "formula2":
        it = _iter_formula2(spec, order)
    elif method == "verblunsky":
        it = _iter_verblunsky(spec, order, report.diagnostics)
    elif method == "seward":
        it = _iter_seward(spec, order, report.diagnostics)
    else:
        it = _iter_seward_cmi(spec, order, report.diagnostics)
    small = 0
    for level, term, value in it:
        if level > max_level:
            break
        prev = report.values[-1] if report.values else None
        report.levels.append(level)
        report.terms.append(float(term))
        report.values.append(float(value))
        if value == NEG_INF:
            report.first_singular_level = level
            report.stabilized, report.stabilized_at = True, level
            report.last_increment = NEG_INF
            break
        if prev is not None:
            inc = value - prev
            report.last_increment = inc
            small = small + 1 if abs(inc) < (tol if tol is not None else DEFAULT_TOL) else 0
            if small >= 2:
                report.stabilized = True
                report.stabilized_at = report.levels[-3]
                if tol is not None:
                    break
    return report


def formula1_sequence(spec: PDFSpec, N: int, letter_order=None) -> EntropyReport:
    """Ball formula for ``n = 1..N`` (no early stop)."""
    return _run("formula1", spec, N, None, letter_order)


def formula2_sequence(spec: PDFSpec, N: int, letter_order=None) -> EntropyReport:
    """Union formula for ``n = 0..N`` (no early stop)."""
    return _run("formula2", spec, N, None, letter_order)


def verblunsky_series(spec: PDFSpec, N: int, letter_order=None) -> EntropyReport:
    """Verblunsky series through words of length ``N`` along the length-lex enumeration."""
    return _run("verblunsky", spec, N, None, letter_order)


def seward_terms(spec: PDFSpec, N: int, letter_order=None) -> EntropyReport:
    """Seward expansion levels ``0..N``."""
    return _run("seward", spec, N, None, letter_order)


def seward_cmi_terms(spec: PDFSpec, N: int, letter_order=None) -> EntropyReport:
    """Seward expansion rearranged into conditional mutual informations, levels ``0..N``."""
    return _run("seward_cmi", spec, N, None, letter_order)


def estimate_hann(spec: PDFSpec, method: str = "formula1", max_level: int | None = None,
                  tol: float = DEFAULT_TOL, letter_order=None) -> EntropyReport:
    """Run ``method`` until two consecutive increments fall below ``tol`` or ``max_level``.

    Diagonal joins additionally get an additivity cross-check against the sum of
    the estimates of their parts, recorded under ``diagnostics["additivity"]``.
    """
    report = _run(method, spec, max_level, tol, letter_order)
    if isinstance(spec, DiagonalJoin):
        parts = [_run(method, p, max_level, tol, letter_order).estimate for p in spec.parts]
        total = NEG_INF if any(x == NEG_INF for x in parts) else float(sum(parts))
        if total == NEG_INF or report.estimate == NEG_INF:
            diff = 0.0 if total == report.estimate else math.inf
        else:
            diff = abs(total - report.estimate)
        report.diagnostics["additivity"] = {"parts": parts, "sum": total, "difference": diff}
    return report


def mollified_profile(spec: PDFSpec, t_grid: Sequence[float], method: str = "formula1",
                      max_level: int | None = None, tol: float = DEFAULT_TOL,
                      letter_order=None) -> list[tuple[float, float]]:
    """``h_ann(tφ + (1-t)χ_reg ⊗ I_k)`` for each ``t``; values are reported, not interpreted."""
    from .pdf import Mollified

    out = []
    for t in t_grid:
        if not 0 < t <= 1:
            raise ValueError(f"t={t} must lie in (0, 1]")
        out.append((float(t), estimate_hann(Mollified(spec, t), method, max_level, tol,
                                            letter_order).estimate))
    return out


def ball_entropy_sequences(spec: PDFSpec, N: int, letter_order=None) -> tuple[list[float], list[float]]:
    """``E_n`` for ``n = 0..N`` and ``E'_n`` for ``n = 0..N+1`` (tuple convention)."""
    order = check_letter_order(spec.rank, letter_order)
    r = spec.rank
    P = _ball_pdf(spec, N + 2, order)

    def H(words):
        return _half_logdet(P.submatrix(words))

    def B(n):
        return P.elements[: ball_size(r, n)]

    E = []
    for n in range(N + 1):
        top = H(B(n + 1))
        E.append(NEG_INF if top == NEG_INF else
                 top - sum(H(shift_overlap(B(n + 1), s)) for s in range(1, r + 1)))
    Ep = []
    for n in range(N + 2):
        base = H(B(n))
        Ep.append(NEG_INF if base == NEG_INF else
                  sum(H(shift_overlap(B(n + 1), s)) for s in range(1, r + 1)) - (2 * r - 1) * base)
    return E, Ep


__all__ = [
    "EntropyReport", "METHODS", "h_F_rate", "formula1_sequence", "formula2_sequence",
    "verblunsky_series", "seward_terms", "seward_cmi_terms", "estimate_hann",
    "mollified_profile", "ball_entropy_sequences", "SingularPrefixError",
]
