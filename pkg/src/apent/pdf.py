"""Matrix-valued positive definite functions on a free group.

A spec describes ``φ: Γ → M_k``.  Restricting it to a finite set ``F`` gives the
block matrix ``φ_(F) = [φ(g⁻¹h)]_{g,h ∈ F}`` with ``k × k`` blocks, laid out in
the order of ``F``.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import matent
from .errors import NotPositiveDefiniteError, SpecError
from .freegroup import GroundedSet, Word, identity, inverse, multiply
from .groupalg import GroupAlgebraElement, matrix_coefficient

__all__ = [
    "PDFSpec", "Regular", "Haagerup", "Mollified", "Induced", "DiagonalJoin", "Explicit",
    "PartialPDF", "evaluate", "restrict", "block_matrix", "is_nonsingular", "normalize",
    "spec_from_json", "spec_to_json", "complex_from_json", "complex_to_json",
    "matrix_from_json", "matrix_to_json",
]

PSD_CHECK_TOL = 1e-9
TOEPLITZ_TOL = 1e-12


def complex_to_json(z: complex) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def complex_from_json(d) -> complex:
    if isinstance(d, (int, float)):
        return complex(d)
    try:
        return complex(float(d.get("re", 0.0)), float(d.get("im", 0.0)))
    except (AttributeError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed complex number {d!r}") from exc


def matrix_to_json(M) -> list[list[dict]]:
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return [[complex_to_json(z) for z in row] for row in M]


def matrix_from_json(rows) -> np.ndarray:
    try:
        out = np.array([[complex_from_json(z) for z in row] for row in rows], dtype=complex)
    except TypeError as exc:
        raise SpecError("matrix must be a list of rows") from exc
    if out.ndim != 2:
        raise SpecError("matrix rows have unequal lengths")
    return out


class PDFSpec(ABC):
    """Generator description of a positive definite function ``φ: Γ → M_k``."""

    rank: int
    k: int

    def __call__(self, g: Word) -> np.ndarray:
        return evaluate(self, g)

    @abstractmethod
    def _value(self, g: Word) -> np.ndarray:
        ...

    @abstractmethod
    def to_json(self) -> dict:
        ...

    def _cached(self, g: Word) -> np.ndarray:
        cache = self.__dict__.setdefault("_memo", {})
        v = cache.get(g)
        if v is None:
            v = self._value(g)
            v.setflags(write=False)
            cache[g] = v
        return v


@dataclass(frozen=True, eq=False)
class Regular(PDFSpec):
    """``φ(g) = δ_{g,e} I_k``."""

    rank: int
    k: int = 1

    def __post_init__(self):
        if self.rank < 1 or self.k < 1:
            raise SpecError("rank and k must be positive")

    def _value(self, g):
        return np.eye(self.k, dtype=complex) if g.is_identity else np.zeros((self.k, self.k), complex)

    def to_json(self):
        return {"kind": "regular", "rank": self.rank, "k": self.k}


@dataclass(frozen=True, eq=False)
class Haagerup(PDFSpec):
    """Multiplicative along reduced words: ``φ(s_i) = a_i``, ``φ(s_i⁻¹) = conj(a_i)``."""

    params: tuple[complex, ...]
    k: int = field(default=1, init=False)

    def __post_init__(self):
        params = tuple(complex(a) for a in self.params)
        if not params:
            raise SpecError("Haagerup function needs one parameter per generator")
        for a in params:
            if abs(a) > 1 + 1e-12:
                raise SpecError(f"Haagerup parameter {a} lies outside the closed unit disk")
        object.__setattr__(self, "params", params)

    @property
    def rank(self) -> int:
        return len(self.params)

    def _value(self, g):
        v = 1 + 0j
        for x in g.letters:
            a = self.params[abs(x) - 1]
            v *= a if x > 0 else a.conjugate()
        return np.array([[v]])

    def to_json(self):
        return {"kind": "haagerup", "rank": self.rank, "k": 1,
                "params": [complex_to_json(a) for a in self.params]}


@dataclass(frozen=True, eq=False)
class Mollified(PDFSpec):
    """``φ_t = tφ + (1-t)χ_reg ⊗ I_k``: identity at ``e``, ``tφ`` elsewhere."""

    base: PDFSpec
    t: float

    def __post_init__(self):
        if not 0 < self.t <= 1:
            raise SpecError(f"mollification parameter t={self.t} must lie in (0, 1]")

    @property
    def rank(self):
        return self.base.rank

    @property
    def k(self):
        return self.base.k

    def _value(self, g):
        if g.is_identity:
            return np.eye(self.k, dtype=complex)
        return self.t * evaluate(self.base, g)

    def to_json(self):
        return {"kind": "mollified", "t": self.t, "base": self.base.to_json()}


@dataclass(frozen=True, eq=False)
class Induced(PDFSpec):
    """``φ(g) = (a*∗δ_g∗a)(e) / (a*∗a)(e)`` for a nonzero group algebra element ``a``."""

    element: GroupAlgebraElement
    k: int = field(default=1, init=False)

    def __post_init__(self):
        if self.element.is_zero():
            raise SpecError("the zero element does not induce a unital function")
        norm2 = sum(abs(c) ** 2 for c in self.element.coeffs.values())
        object.__setattr__(self, "_norm2", norm2)

    @property
    def rank(self):
        return self.element.rank

    def _value(self, g):
        return np.array([[matrix_coefficient(self.element, g) / self._norm2]])

    def to_json(self):
        return {"kind": "induced", "rank": self.rank, "element": self.element.to_json()}


@dataclass(frozen=True, eq=False)
class DiagonalJoin(PDFSpec):
    """``φ = diag(φ_1, ..., φ_m)``."""

    parts: tuple[PDFSpec, ...]

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise SpecError("diagonal join needs at least one part")
        if len({p.rank for p in parts}) != 1:
            raise SpecError("all parts of a diagonal join must have the same rank")
        object.__setattr__(self, "parts", parts)

    @property
    def rank(self):
        return self.parts[0].rank

    @property
    def k(self):
        return sum(p.k for p in self.parts)

    @property
    def offsets(self) -> list[int]:
        out = [0]
        for p in self.parts:
            out.append(out[-1] + p.k)
        return out

    def _value(self, g):
        out = np.zeros((self.k, self.k), dtype=complex)
        o = self.offsets
        for i, p in enumerate(self.parts):
            out[o[i]:o[i + 1], o[i]:o[i + 1]] = evaluate(p, g)
        return out

    def to_json(self):
        return {"kind": "diag", "parts": [p.to_json() for p in self.parts]}


@dataclass(frozen=True, eq=False)
class Explicit(PDFSpec):
    """A finite table of values on ``B_radius``.

    Missing entries are filled by Hermitian symmetry ``φ(g⁻¹) = φ(g)*``; a
    missing ``φ(e)`` defaults to ``I_k``.  Positive definiteness is the caller's
    claim and is checked whenever the table is restricted to a set.
    """

    rank: int
    k: int
    radius: int
    values: Mapping[Word, np.ndarray]

    def __post_init__(self):
        table: dict[Word, np.ndarray] = {}
        for g, M in dict(self.values).items():
            M = np.atleast_2d(np.asarray(M, dtype=complex))
            if M.shape != (self.k, self.k):
                raise SpecError(f"value at {g} has shape {M.shape}, expected {(self.k, self.k)}")
            if g.rank != self.rank:
                raise SpecError("word rank does not match spec rank")
            if len(g) > self.radius:
                raise SpecError(f"word {g} lies outside the ball of radius {self.radius}")
            table[g] = M
        for g, M in list(table.items()):
            gi = inverse(g)
            if gi in table:
                if np.max(np.abs(table[gi] - M.conj().T), initial=0.0) > 1e-10 * (1 + np.max(np.abs(M))):
                    raise SpecError(f"values at {g} and its inverse violate Hermitian symmetry")
            else:
                table[gi] = M.conj().T
        e = identity(self.rank)
        if e not in table:
            table[e] = np.eye(self.k, dtype=complex)
        object.__setattr__(self, "values", table)

    def _value(self, g):
        if len(g) > self.radius:
            raise SpecError(f"explicit table has radius {self.radius}; cannot evaluate at {g}")
        v = self.values.get(g)
        if v is None:
            raise SpecError(f"explicit table has no value at {g}")
        return v.copy()

    def to_json(self):
        from .freegroup import sort_words

        words = sort_words(self.values, self.rank)
        return {"kind": "explicit", "rank": self.rank, "k": self.k, "radius": self.radius,
                "values": [{"word": w.to_json(), "matrix": matrix_to_json(self.values[w])}
                           for w in words]}


def evaluate(spec: PDFSpec, g: Word) -> np.ndarray:
    """``φ(g)`` as a ``k × k`` complex matrix."""
    if g.rank != spec.rank:
        raise SpecError(f"word of rank {g.rank} for a spec of rank {spec.rank}")
    return spec._cached(g)


@dataclass(frozen=True, eq=False)
class PartialPDF:
    """A block matrix ``Q`` indexed by ``elements`` with ``k × k`` blocks."""

    elements: tuple[Word, ...]
    k: int
    Q: np.ndarray

    def __post_init__(self):
        elements = tuple(self.elements)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(elements)})
        n = self.k * len(elements)
        if self.Q.shape != (n, n):
            raise ValueError(f"matrix shape {self.Q.shape} does not match {len(elements)} blocks of size {self.k}")

    @property
    def rank(self) -> int:
        return self.elements[0].rank

    def positions(self, words: Iterable[Word]) -> list[int]:
        """Row/column indices of the blocks for ``words``."""
        k = self.k
        out: list[int] = []
        for w in words:
            i = self._index[w]
            out.extend(range(i * k, (i + 1) * k))
        return out

    def block(self, g: Word, h: Word) -> np.ndarray:
        i, j = self._index[g] * self.k, self._index[h] * self.k
        return self.Q[i:i + self.k, j:j + self.k]

    def submatrix(self, words: Iterable[Word]) -> np.ndarray:
        idx = self.positions(words)
        return self.Q[np.ix_(idx, idx)]

    def sub(self, words: Sequence[Word]) -> "PartialPDF":
        words = tuple(words)
        return PartialPDF(words, self.k, self.submatrix(words))

    def toeplitz_residual(self) -> float:
        """Largest deviation from ``Q(g1,h1) = Q(g2,h2)`` whenever ``g1⁻¹h1 = g2⁻¹h2``."""
        seen: dict[Word, np.ndarray] = {}
        worst = 0.0
        for g in self.elements:
            gi = inverse(g)
            for h in self.elements:
                d = multiply(gi, h)
                B = self.block(g, h)
                if d in seen:
                    worst = max(worst, float(np.max(np.abs(seen[d] - B))))
                else:
                    seen[d] = B
        return worst

    def is_unital(self, tol: float = 1e-12) -> bool:
        I = np.eye(self.k)
        return all(np.max(np.abs(self.block(g, g) - I)) <= tol for g in self.elements)

    def is_nonsingular(self) -> bool:
        return matent.is_nonsingular(self.Q)

    def to_json(self) -> dict:
        return {"elements": [w.to_json() for w in self.elements], "k": self.k,
                "matrix": matrix_to_json(self.Q)}


def block_matrix(spec: PDFSpec, words: Sequence[Word]) -> np.ndarray:
    """``[φ(g⁻¹h)]_{g,h}`` for an arbitrary finite list of words."""
    words = tuple(words)
    k, rank = spec.k, spec.rank
    for w in words:
        if w.rank != rank:
            raise SpecError(f"word of rank {w.rank} for a spec of rank {rank}")
    n = len(words)
    if rank > 63:
        Q = np.empty((k * n, k * n), dtype=complex)
        for i, g in enumerate(words):
            gi = inverse(g)
            for j, h in enumerate(words):
                Q[i * k:(i + 1) * k, j * k:(j + 1) * k] = evaluate(spec, multiply(gi, h))
        return Q
    # letters as bytes (x + 64) so products reduce and hash cheaply; x and -x sum to 128
    enc = [bytes(x + 64 for x in w.letters) for w in words]
    inv = [bytes(64 - x for x in reversed(w.letters)) for w in words]
    values: dict[bytes, np.ndarray] = {}
    blocks = np.empty((n, n, k, k), dtype=complex)
    for i, x in enumerate(inv):
        lx = len(x)
        for j, y in enumerate(enc):
            m, top = 0, min(lx, len(y))
            while m < top and x[lx - 1 - m] + y[m] == 128:
                m += 1
            key = x[: lx - m] + y[m:]
            v = values.get(key)
            if v is None:
                v = values[key] = spec._cached(Word._trusted(tuple(c - 64 for c in key), rank))
            blocks[i, j] = v
    return blocks.transpose(0, 2, 1, 3).reshape(n * k, n * k)


def restrict(spec: PDFSpec, F: GroundedSet | Sequence[Word], check: bool = True) -> PartialPDF:
    """``φ_(F)``, verified PSD (min eigenvalue ≥ ``-1e-9·‖Q‖``) when ``check`` is set."""
    words = tuple(F)
    Q = block_matrix(spec, words)
    if check and Q.size:
        Qh = (Q + Q.conj().T) / 2
        if np.max(np.abs(Q - Q.conj().T)) > 1e-10 * (1 + np.max(np.abs(Q))):
            raise NotPositiveDefiniteError("restricted matrix is not Hermitian")
        eigs = np.linalg.eigvalsh(Qh)
        if eigs[0] < -PSD_CHECK_TOL * max(1.0, abs(eigs[-1])):
            raise NotPositiveDefiniteError(
                f"restriction has eigenvalue {eigs[0]:.3e}; spec is not positive definite")
        Q = Qh
    return PartialPDF(words, spec.k, Q)


def is_nonsingular(P: PartialPDF) -> bool:
    return P.is_nonsingular()


def normalize(spec: PDFSpec) -> tuple[float, PDFSpec | None]:
    """Split off ``log det φ(e)`` and conjugate to the unital ``φ(e)^{-1/2} φ φ(e)^{-1/2}``.

    Returns ``(-inf, None)`` when ``φ(e)`` is singular.  Unital input is
    returned unchanged with ``0``.
    """
    e = identity(spec.rank)
    phi_e = evaluate(spec, e)
    ld = matent.logdet(phi_e)
    if ld == -np.inf:
        return -np.inf, None
    if np.max(np.abs(phi_e - np.eye(spec.k))) <= 1e-14:
        return 0.0, spec
    if not isinstance(spec, Explicit):
        raise SpecError("only explicit tables can be non-unital")
    T = matent.inv_sqrt_psd(phi_e)
    values = {g: T @ M @ T for g, M in spec.values.items()}
    values[e] = np.eye(spec.k, dtype=complex)
    return ld, Explicit(spec.rank, spec.k, spec.radius, values)


def spec_to_json(spec: PDFSpec) -> dict:
    return spec.to_json()


def spec_from_json(data: Mapping) -> PDFSpec:
    """Parse the JSON description of a positive definite function."""
    if not isinstance(data, Mapping):
        raise SpecError("spec must be a JSON object")
    kind = data.get("kind")
    try:
        if kind == "regular":
            return Regular(int(data["rank"]), int(data.get("k", 1)))
        if kind == "haagerup":
            params = tuple(complex_from_json(p) for p in data["params"])
            if "rank" in data and int(data["rank"]) != len(params):
                raise SpecError("rank does not match the number of Haagerup parameters")
            if int(data.get("k", 1)) != 1:
                raise SpecError("Haagerup functions are scalar (k = 1)")
            return Haagerup(params)
        if kind == "mollified":
            return Mollified(spec_from_json(data["base"]), float(data["t"]))
        if kind == "induced":
            rank = int(data["rank"]) if "rank" in data else _infer_rank(data["element"])
            return Induced(GroupAlgebraElement.from_json(data["element"], rank))
        if kind == "diag":
            return DiagonalJoin(tuple(spec_from_json(p) for p in data["parts"]))
        if kind == "explicit":
            rank, k = int(data["rank"]), int(data["k"])
            values = {Word(tuple(v["word"]), rank): matrix_from_json(v["matrix"]) for v in data["values"]}
            return Explicit(rank, k, int(data["radius"]), values)
    except KeyError as exc:
        raise SpecError(f"spec of kind {kind!r} is missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"malformed spec: {exc}") from exc
    raise SpecError(f"unknown spec kind {kind!r}")


def _infer_rank(element) -> int:
    m = max((abs(x) for d in element for x in d["word"]), default=1)
    return max(1, m)
