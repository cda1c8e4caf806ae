"""Verblunsky coefficients of positive definite functions along grounded enlargements.

For an enlargement ``F ∪ g`` of ``F`` in direction ``s``, order the blocks as
``F∖sF``, then ``F∩sF``, then ``g``.  Translation symmetry fixes the entries of
row ``g`` against ``F∩sF``; the remaining corner is a three-block completion
parametrized by a contraction ``C`` of shape ``(k|F∖sF|, k)``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import matent
from .errors import ShapeError, SingularMatrixError, SingularPrefixError, SpecError
from .freegroup import Enumeration, GroundedSet, Word, enlargement_direction, letter, multiply, \
    shift_overlap
from .pdf import PDFSpec, PartialPDF, complex_from_json, matrix_from_json, matrix_to_json, restrict

CONSISTENCY_TOL = 1e-10


def _split(F: Sequence[Word], g: Word):
    Fset = GroundedSet(F, check=False)
    s = enlargement_direction(Fset, g)
    inter = shift_overlap(F, s)
    inter_set = set(inter)
    outer = tuple(h for h in F if h not in inter_set)
    return s, outer, inter


def coefficient_shape(F: Sequence[Word], g: Word, k: int) -> tuple[int, int]:
    _, outer, _ = _split(tuple(F), g)
    return k * len(outer), k


def extract_coefficient(Qp: PartialPDF, g: Word | None = None) -> np.ndarray:
    """Verblunsky coefficient of ``Qp`` (over ``F ∪ g``) relative to ``Qp_(F)``."""
    elems = Qp.elements
    if g is None:
        g = elems[-1]
    F = tuple(h for h in elems if h != g)
    if len(F) != len(elems) - 1:
        raise ValueError(f"{g} is not an element of the partial function")
    s, outer, inter = _split(F, g)
    k = Qp.k
    sinv = letter(-s, Qp.rank)
    g_back = multiply(sinv, g)
    worst = 0.0
    for h in inter:
        d = np.max(np.abs(Qp.block(h, g) - Qp.block(multiply(sinv, h), g_back)))
        worst = max(worst, float(d))
    scale = 1 + float(np.max(np.abs(Qp.Q)))
    if worst > CONSISTENCY_TOL * scale:
        raise SpecError(f"translation symmetry violated by {worst:.3e} in row {g}")
    if not matent.is_nonsingular(Qp.submatrix(F)):
        raise SingularMatrixError("restriction to F is singular")
    M = Qp.submatrix(outer + inter + (g,))
    _, C = matent.three_block_extract(M, k * len(outer), k * len(inter), k)
    return C


def extend_with_coefficient(P: PartialPDF, g: Word, C) -> PartialPDF:
    """Extend ``P`` over ``F`` to ``F ∪ g`` using the contraction ``C``."""
    F = P.elements
    s, outer, inter = _split(F, g)
    k = P.k
    C = np.asarray(C, dtype=complex)
    if C.ndim != 2 or C.shape != (k * len(outer), k):
        raise ShapeError(f"coefficient for {g} must have shape {(k * len(outer), k)}, got {C.shape}")
    if not P.is_nonsingular():
        raise SingularMatrixError("cannot extend a singular partial function")
    sinv = letter(-s, P.rank)
    g_back = multiply(sinv, g)
    Q23 = np.vstack([P.block(multiply(sinv, h), g_back) for h in inter]) if inter \
        else np.zeros((0, k), dtype=complex)
    part = matent.PartialThreeBlock(
        P.submatrix(outer), P.Q[np.ix_(P.positions(outer), P.positions(inter))],
        P.submatrix(inter), Q23, np.eye(k, dtype=complex))
    full = matent.three_block_complete(part, C)
    # full is laid out as outer, inter, g; move back to F's order followed by g
    layout = outer + inter + (g,)
    where = {w: i for i, w in enumerate(layout)}
    perm: list[int] = []
    for w in F + (g,):
        i = where[w]
        perm.extend(range(i * k, (i + 1) * k))
    Q = full[np.ix_(perm, perm)]
    return PartialPDF(F + (g,), k, (Q + Q.conj().T) / 2)


def coefficient_sequence(spec: PDFSpec, enum: Enumeration, steps: int | None = None) -> list[np.ndarray]:
    """``C_0, ..., C_{steps-1}`` of ``spec`` along the enumeration."""
    if steps is None:
        steps = enum.steps
    if steps > enum.steps:
        raise ValueError(f"enumeration has only {enum.steps} steps")
    full = restrict(spec, enum.order[: steps + 1])
    return sequence_from_partial(full, enum, steps)


def sequence_from_partial(P: PartialPDF, enum: Enumeration, steps: int | None = None) -> list[np.ndarray]:
    """Coefficients of a partial function laid out along ``enum``."""
    if steps is None:
        steps = len(P.elements) - 1
    if P.elements[: steps + 1] != enum.order[: steps + 1]:
        raise ValueError("partial function is not laid out along the enumeration")
    out = []
    for n in range(steps):
        prefix = enum.order[: n + 2]
        if not matent.is_nonsingular(P.submatrix(prefix[:-1])):
            raise SingularPrefixError(n)
        out.append(extract_coefficient(P.sub(prefix), prefix[-1]))
    return out


def reconstruct(coeffs: Sequence, enum: Enumeration, k: int | None = None) -> PartialPDF:
    """The unique partial function over ``F_N`` with the given coefficients."""
    coeffs = [np.atleast_2d(np.asarray(C, dtype=complex)) for C in coeffs]
    if len(coeffs) > enum.steps:
        raise ShapeError(f"{len(coeffs)} coefficients but enumeration has {enum.steps} steps")
    if k is None:
        if not coeffs:
            raise ValueError("k is required for an empty coefficient sequence")
        k = coeffs[0].shape[1]
    P = PartialPDF(enum.order[:1], k, np.eye(k, dtype=complex))
    for n, C in enumerate(coeffs):
        if not P.is_nonsingular():
            raise SingularPrefixError(n)
        P = extend_with_coefficient(P, enum.order[n + 1], C)
    return P


def coefficients_to_json(coeffs: Sequence[np.ndarray], enum: Enumeration, k: int) -> dict:
    items = []
    for n, C in enumerate(coeffs):
        C = np.atleast_2d(C)
        items.append({"step": n, "word": enum.order[n + 1].to_json(), "direction": enum.direction(n),
                      "rows": int(C.shape[0]), "cols": int(C.shape[1]), "matrix": matrix_to_json(C)})
    return {"rank": enum.rank, "k": k, "letter_order": list(enum.letter_order), "coefficients": items}


def coefficients_from_json(data) -> tuple[list[np.ndarray], int, int, tuple[int, ...]]:
    """Returns ``(coefficients, rank, k, letter_order)``; shapes are validated."""
    try:
        rank, k = int(data["rank"]), int(data["k"])
        order = tuple(int(x) for x in data.get("letter_order") or ())
        out = []
        for item in data["coefficients"]:
            C = matrix_from_json(item["matrix"]) if item["matrix"] else np.zeros((0, k), complex)
            rows, cols = int(item["rows"]), int(item["cols"])
            if C.shape != (rows, cols):
                raise ShapeError(f"step {item.get('step')}: matrix shape {C.shape} != declared {(rows, cols)}")
            out.append(C)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ShapeError):
            raise
        raise SpecError(f"malformed coefficient file: {exc}") from exc
    return out, rank, k, order or None


__all__ = [
    "coefficient_shape", "extract_coefficient", "extend_with_coefficient", "coefficient_sequence",
    "sequence_from_partial", "reconstruct", "coefficients_to_json", "coefficients_from_json",
    "complex_from_json",
]
