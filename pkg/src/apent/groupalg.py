"""Finitely supported elements of the complex group algebra of a free group."""
from __future__ import annotations

from typing import Iterable, Mapping

from .errors import RankMismatchError, SpecError
from .freegroup import Word, identity, inverse, multiply, sort_words

PRUNE_TOL = 1e-15


class GroupAlgebraElement:
    """``a = Σ a_g δ_g`` with finite support; zero coefficients are dropped."""

    __slots__ = ("coeffs", "rank")

    def __init__(self, coeffs: Mapping[Word, complex] | Iterable[tuple[Word, complex]], rank: int):
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        out: dict[Word, complex] = {}
        for w, c in items:
            if w.rank != rank:
                raise RankMismatchError(f"word of rank {w.rank} in element of rank {rank}")
            out[w] = out.get(w, 0) + complex(c)
        self.coeffs = {w: c for w, c in out.items() if abs(c) > PRUNE_TOL}
        self.rank = rank

    @classmethod
    def delta(cls, g: Word, c: complex = 1.0) -> "GroupAlgebraElement":
        return cls({g: c}, g.rank)

    def __getitem__(self, g: Word) -> complex:
        return self.coeffs.get(g, 0j)

    @property
    def support(self) -> tuple[Word, ...]:
        return sort_words(self.coeffs, self.rank)

    def is_zero(self) -> bool:
        return not self.coeffs

    def _check(self, other: "GroupAlgebraElement") -> None:
        if self.rank != other.rank:
            raise RankMismatchError(f"rank {self.rank} vs rank {other.rank}")

    def __add__(self, other: "GroupAlgebraElement") -> "GroupAlgebraElement":
        self._check(other)
        return GroupAlgebraElement(list(self.coeffs.items()) + list(other.coeffs.items()), self.rank)

    def __sub__(self, other: "GroupAlgebraElement") -> "GroupAlgebraElement":
        return self + other.scale(-1)

    def scale(self, c: complex) -> "GroupAlgebraElement":
        return GroupAlgebraElement({w: c * v for w, v in self.coeffs.items()}, self.rank)

    def __mul__(self, other: "GroupAlgebraElement") -> "GroupAlgebraElement":
        return convolve(self, other)

    def __eq__(self, other) -> bool:
        return isinstance(other, GroupAlgebraElement) and self.rank == other.rank and \
            self.coeffs == other.coeffs

    def close_to(self, other: "GroupAlgebraElement", tol: float = 1e-12) -> bool:
        keys = set(self.coeffs) | set(other.coeffs)
        return all(abs(self[w] - other[w]) <= tol for w in keys)

    def to_json(self) -> list[dict]:
        return [{"word": w.to_json(), "re": self[w].real, "im": self[w].imag} for w in self.support]

    @classmethod
    def from_json(cls, data, rank: int) -> "GroupAlgebraElement":
        try:
            return cls([(Word(tuple(d["word"]), rank), complex(d.get("re", 0.0), d.get("im", 0.0)))
                        for d in data], rank)
        except (KeyError, TypeError) as exc:
            raise SpecError(f"malformed group algebra element: {exc}") from exc

    def __repr__(self) -> str:
        terms = " + ".join(f"({self[w]:.4g})δ[{w}]" for w in self.support) or "0"
        return f"GroupAlgebraElement({terms})"


def convolve(a: GroupAlgebraElement, b: GroupAlgebraElement) -> GroupAlgebraElement:
    """``(a∗b)_g = Σ_{hk=g} a_h b_k``."""
    a._check(b)
    out: dict[Word, complex] = {}
    for h, x in a.coeffs.items():
        for k, y in b.coeffs.items():
            g = multiply(h, k)
            out[g] = out.get(g, 0) + x * y
    return GroupAlgebraElement(out, a.rank)


def involution(a: GroupAlgebraElement) -> GroupAlgebraElement:
    """``a*_g = conj(a_{g⁻¹})``."""
    return GroupAlgebraElement({inverse(g): c.conjugate() for g, c in a.coeffs.items()}, a.rank)


def regular_trace(a: GroupAlgebraElement) -> complex:
    """The regular character evaluated on ``a``: its coefficient at ``e``."""
    return a[identity(a.rank)]


def matrix_coefficient(a: GroupAlgebraElement, g: Word) -> complex:
    """``(a* ∗ δ_g ∗ a)(e) = Σ_k conj(a_{gk}) a_k``."""
    return sum((a[multiply(g, k)].conjugate() * c for k, c in a.coeffs.items()), 0j)


def induced_pdf(a: GroupAlgebraElement):
    """The unital positive definite function ``g ↦ (a*∗δ_g∗a)(e) / (a*∗a)(e)``."""
    from .pdf import Induced

    return Induced(a)
