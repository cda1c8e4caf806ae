"""Reduced words in a free group and the combinatorics of its left Cayley graph.

Letters are signed generator indices: ``i`` stands for the generator ``s_i`` and
``-i`` for its inverse, ``1 <= i <= rank``.  A word is stored left to right, so
the letter at position 0 is the one applied last when the word acts on the
left.  Adjacency in the left Cayley graph adds or removes the *leftmost* letter.

Sets of words are returned as tuples in a deterministic order so that block
matrices indexed by them have reproducible layouts.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

from .errors import InvalidLetterError, NotAnEnlargementError, RankMismatchError

__all__ = [
    "Word",
    "GroundedSet",
    "Enumeration",
    "reduce",
    "identity",
    "letter",
    "multiply",
    "inverse",
    "parent",
    "default_letter_order",
    "check_letter_order",
    "length_lex_key",
    "sort_words",
    "all_letters",
    "sphere",
    "ball",
    "ball_size",
    "translate",
    "is_grounded",
    "enlargement_direction",
    "shift_overlap",
    "length_lex_enumeration",
    "predecessors",
    "q_set",
    "crescent",
    "crescent_description",
    "crescent_owner",
]


def _check_letters(letters: Iterable[int], rank: int) -> tuple[int, ...]:
    out = []
    for x in letters:
        x = int(x)
        if x == 0 or abs(x) > rank:
            raise InvalidLetterError(f"letter {x} is not in ±{{1..{rank}}}")
        out.append(x)
    return tuple(out)


def _free_reduce(letters: Sequence[int]) -> tuple[int, ...]:
    stack: list[int] = []
    for x in letters:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


@dataclass(frozen=True, eq=False)
class Word:
    """An element of the free group of rank ``rank``, always in reduced form."""

    letters: tuple[int, ...]
    rank: int

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be positive")
        letters = _free_reduce(_check_letters(self.letters, self.rank))
        object.__setattr__(self, "letters", letters)

    @classmethod
    def _trusted(cls, letters: tuple[int, ...], rank: int) -> "Word":
        # bypasses validation; callers guarantee reduced, in-range letters
        w = object.__new__(cls)
        object.__setattr__(w, "letters", letters)
        object.__setattr__(w, "rank", rank)
        return w

    def __len__(self) -> int:
        return len(self.letters)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Word):
            return NotImplemented
        return self.letters == other.letters and self.rank == other.rank

    def __hash__(self) -> int:
        # hash(-1) == hash(-2) in CPython, so map letters to distinct positives first
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.rank,) + tuple(2 * x if x > 0 else 1 - 2 * x for x in self.letters))
            object.__setattr__(self, "_hash", h)
        return h

    def __mul__(self, other: "Word") -> "Word":
        return multiply(self, other)

    def inverse(self) -> "Word":
        return inverse(self)

    @property
    def is_identity(self) -> bool:
        return not self.letters

    @property
    def first(self) -> int:
        """Leftmost letter."""
        if not self.letters:
            raise ValueError("the identity has no letters")
        return self.letters[0]

    def to_json(self) -> list[int]:
        return list(self.letters)

    @classmethod
    def from_json(cls, data: Sequence[int], rank: int) -> "Word":
        return cls(tuple(data), rank)

    def __repr__(self) -> str:
        return f"Word({list(self.letters)}, rank={self.rank})"

    def __str__(self) -> str:
        if not self.letters:
            return "e"
        names = "abcdefghijklmnopqrstuvwxyz"
        parts = []
        for x in self.letters:
            name = names[abs(x) - 1] if abs(x) <= len(names) else f"s{abs(x)}"
            parts.append(name if x > 0 else name + "⁻¹")
        return "".join(parts)


def reduce(letters: Sequence[int], rank: int) -> Word:
    return Word(tuple(letters), rank)


def identity(rank: int) -> Word:
    return Word._trusted((), rank)


def letter(x: int, rank: int) -> Word:
    return Word((x,), rank)


def _same_rank(a: Word, b: Word) -> None:
    if a.rank != b.rank:
        raise RankMismatchError(f"rank {a.rank} vs rank {b.rank}")


def multiply(a: Word, b: Word) -> Word:
    _same_rank(a, b)
    x, y = a.letters, b.letters
    i = 0
    n = min(len(x), len(y))
    while i < n and x[-1 - i] == -y[i]:
        i += 1
    return Word._trusted(x[: len(x) - i] + y[i:], a.rank)


def inverse(a: Word) -> Word:
    return Word._trusted(tuple(-x for x in reversed(a.letters)), a.rank)


def parent(g: Word) -> Word:
    """Drop the leftmost letter: the neighbour of ``g`` one step closer to ``e``."""
    if g.is_identity:
        raise ValueError("the identity has no parent")
    return Word._trusted(g.letters[1:], g.rank)


def all_letters(rank: int) -> tuple[int, ...]:
    return default_letter_order(rank)


def default_letter_order(rank: int) -> tuple[int, ...]:
    """``s_1 < s_1⁻¹ < s_2 < s_2⁻¹ < ...``"""
    out: list[int] = []
    for i in range(1, rank + 1):
        out += [i, -i]
    return tuple(out)


def check_letter_order(rank: int, order: Sequence[int] | None) -> tuple[int, ...]:
    if order is None:
        return default_letter_order(rank)
    order = tuple(int(x) for x in order)
    if sorted(order) != sorted(default_letter_order(rank)):
        raise InvalidLetterError(
            f"letter order {list(order)} is not a permutation of ±{{1..{rank}}}"
        )
    return order


def length_lex_key(order: Sequence[int]):
    pos = {x: i for i, x in enumerate(order)}

    def key(w: Word):
        return (len(w.letters), tuple(pos[x] for x in w.letters))

    return key


def sort_words(words: Iterable[Word], rank: int, order: Sequence[int] | None = None) -> tuple[Word, ...]:
    return tuple(sorted(words, key=length_lex_key(check_letter_order(rank, order))))


def sphere(rank: int, n: int, order: Sequence[int] | None = None) -> tuple[Word, ...]:
    """All reduced words of length exactly ``n`` in length-lex order."""
    order = check_letter_order(rank, order)
    words: list[tuple[int, ...]] = [()]
    for _ in range(n):
        words = [(x,) + w for w in words for x in order if not (w and w[0] == -x)]
    return sort_words((Word._trusted(w, rank) for w in words), rank, order)


def ball_size(rank: int, n: int) -> int:
    if rank == 1:
        return 2 * n + 1
    return 1 + 2 * rank * ((2 * rank - 1) ** n - 1) // (2 * rank - 2)


def is_grounded(elements: Iterable[Word]) -> bool:
    elems = set(elements)
    if not elems:
        return False
    rank = next(iter(elems)).rank
    if identity(rank) not in elems:
        return False
    # a subset of a tree containing e is connected iff it is closed under parent
    return all(w.is_identity or parent(w) in elems for w in elems)


class GroundedSet:
    """A finite connected subset of the left Cayley graph containing ``e``.

    Element order is preserved as given; it fixes the block layout of any matrix
    indexed by the set.
    """

    __slots__ = ("elements", "rank", "_index")

    def __init__(self, elements: Iterable[Word], rank: int | None = None, check: bool = True):
        elements = tuple(elements)
        if rank is None:
            if not elements:
                raise ValueError("cannot infer rank of an empty set")
            rank = elements[0].rank
        self.elements = elements
        self.rank = rank
        self._index = {w: i for i, w in enumerate(elements)}
        if check:
            if any(w.rank != rank for w in elements):
                raise RankMismatchError("mixed ranks in grounded set")
            if len(self._index) != len(elements):
                raise ValueError("duplicate elements in grounded set")
            if not is_grounded(elements):
                raise ValueError("set is not grounded (must contain e and be connected)")

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Word]:
        return iter(self.elements)

    def __contains__(self, w) -> bool:
        return w in self._index

    def index(self, w: Word) -> int:
        return self._index[w]

    def __eq__(self, other) -> bool:
        return isinstance(other, GroundedSet) and self.elements == other.elements

    def __hash__(self) -> int:
        return hash(self.elements)

    def enlarge(self, g: Word) -> "GroundedSet":
        enlargement_direction(self, g)
        return GroundedSet(self.elements + (g,), self.rank, check=False)

    def to_json(self) -> list[list[int]]:
        return [w.to_json() for w in self.elements]

    def __repr__(self) -> str:
        return f"GroundedSet([{', '.join(str(w) for w in self.elements)}])"


def ball(rank: int, n: int, order: Sequence[int] | None = None) -> GroundedSet:
    """The closed ball ``B_n`` in length-lex order."""
    if n < 0:
        raise ValueError("radius must be non-negative")
    order = check_letter_order(rank, order)
    elems: list[Word] = []
    for j in range(n + 1):
        elems.extend(sphere(rank, j, order))
    return GroundedSet(elems, rank, check=False)


def translate(s: Word | int, words: Iterable[Word]) -> tuple[Word, ...]:
    """Left translate ``sF``."""
    words = tuple(words)
    if not words:
        return ()
    if isinstance(s, int):
        s = letter(s, words[0].rank)
    return tuple(multiply(s, w) for w in words)


def enlargement_direction(F: GroundedSet, g: Word) -> int:
    """The unique letter ``s`` with ``g ∈ sF`` when ``F ∪ g`` is an enlargement."""
    if g in F:
        raise NotAnEnlargementError(f"{g} already lies in the set")
    hits = [s for s in all_letters(F.rank) if multiply(letter(-s, F.rank), g) in F]
    if len(hits) != 1:
        raise NotAnEnlargementError(f"{g} is not an exterior boundary point of the set")
    return hits[0]


def shift_overlap(F: GroundedSet | Sequence[Word], s: int) -> tuple[Word, ...]:
    """``F ∩ sF``, listed in the order of ``F``."""
    elems = tuple(F)
    if not elems:
        return ()
    shifted = set(translate(s, elems))
    return tuple(w for w in elems if w in shifted)


class Enumeration:
    """A grounded enumeration ``e = g_0, g_1, ...`` (finite prefix).

    ``kind`` is ``"length-lex"`` when the order is the length-lexicographic order
    for ``letter_order``; otherwise ``"grounded"``.
    """

    def __init__(self, order: Sequence[Word], letter_order: Sequence[int] | None = None,
                 kind: str | None = None):
        order = tuple(order)
        if not order or not order[0].is_identity:
            raise ValueError("an enumeration starts at the identity")
        rank = order[0].rank
        self.rank = rank
        self.letter_order = check_letter_order(rank, letter_order)
        self.order = order
        self._directions: list[int] = []
        prefix = GroundedSet(order[:1], rank)
        for g in order[1:]:
            self._directions.append(enlargement_direction(prefix, g))
            prefix = GroundedSet(prefix.elements + (g,), rank, check=False)
        lenlex = list(order) == sorted(order, key=length_lex_key(self.letter_order)) and \
            list(order) == list(ball_prefix(rank, len(order), self.letter_order))
        if kind is None:
            kind = "length-lex" if lenlex else "grounded"
        elif kind == "length-lex" and not lenlex:
            raise ValueError("order is not length-lexicographic for this letter order")
        elif kind not in ("length-lex", "grounded"):
            raise ValueError(f"unknown enumeration kind {kind!r}")
        self.kind = kind

    def __len__(self) -> int:
        return len(self.order)

    def prefix(self, i: int) -> GroundedSet:
        """``F_i = {g_0, ..., g_i}``."""
        return GroundedSet(self.order[: i + 1], self.rank, check=False)

    def direction(self, n: int) -> int:
        """``s_n``: the direction of the enlargement ``F_n -> F_{n+1}``."""
        return self._directions[n]

    @property
    def steps(self) -> int:
        return len(self.order) - 1

    @property
    def is_length_first(self) -> bool:
        return all(len(a) <= len(b) for a, b in zip(self.order, self.order[1:]))

    def to_json(self) -> dict:
        return {"kind": self.kind, "letter_order": list(self.letter_order),
                "order": [w.to_json() for w in self.order]}


def ball_prefix(rank: int, size: int, order: Sequence[int]) -> tuple[Word, ...]:
    out: list[Word] = []
    j = 0
    while len(out) < size:
        out.extend(sphere(rank, j, order))
        j += 1
    return tuple(out[:size])


def length_lex_enumeration(rank: int, size: int | None = None, *, radius: int | None = None,
                           letter_order: Sequence[int] | None = None) -> Enumeration:
    """The first ``size`` elements (or all of ``B_radius``) in length-lex order."""
    order = check_letter_order(rank, letter_order)
    if (size is None) == (radius is None):
        raise ValueError("give exactly one of size and radius")
    if radius is not None:
        size = ball_size(rank, radius)
    if size < 1:
        raise ValueError("size must be positive")
    return Enumeration(ball_prefix(rank, size, order), order, kind="length-lex")


def predecessors(g: Word, letter_order: Sequence[int] | None = None) -> tuple[Word, ...]:
    """``P(g)``: every word strictly before ``g`` in length-lex order."""
    order = check_letter_order(g.rank, letter_order)
    key = length_lex_key(order)
    kg = key(g)
    out: list[Word] = []
    for j in range(len(g) + 1):
        out.extend(w for w in sphere(g.rank, j, order) if key(w) < kg)
    return tuple(out)


def q_set(g: Word, letter_order: Sequence[int] | None = None) -> tuple[Word, ...]:
    """``Q(g) = g⁻¹P(g)``, sorted length-lex."""
    order = check_letter_order(g.rank, letter_order)
    return sort_words(translate(inverse(g), predecessors(g, order)), g.rank, order)


def crescent(g: Word, letter_order: Sequence[int] | None = None) -> tuple[Word, ...]:
    """``C(g) = Q(g) \\ Q(parent(g))``, sorted length-lex."""
    if g.is_identity:
        raise ValueError("the crescent of e is undefined")
    order = check_letter_order(g.rank, letter_order)
    inner = set(q_set(parent(g), order))
    return tuple(w for w in q_set(g, order) if w not in inner)


def _with_prefix(prefix: tuple[int, ...], length: int, rank: int, order) -> list[Word]:
    out = []
    for w in sphere(rank, length - len(prefix), order):
        if w.letters and prefix and w.letters[0] == -prefix[-1]:
            continue
        out.append(Word._trusted(prefix + w.letters, rank))
    return out


def crescent_description(g: Word, letter_order: Sequence[int] | None = None) -> dict[int, tuple[Word, ...]]:
    """Closed-form description of ``C(g)`` sphere by sphere.

    For ``g = s_n ⋯ s_1`` every element of the crescent has ``g⁻¹ = s_1⁻¹ ⋯ s_n⁻¹``
    as a prefix, and lies in ``S_{2n-2} ∪ S_{2n-1} ∪ S_{2n}``:

    * ``S_{2n-2}`` part: all such words if ``n > 1`` and ``s_{n-1} < s_n⁻¹``, else empty;
    * ``S_{2n-1}`` part: all such words;
    * ``S_{2n}`` part: those whose letter ``t_n`` (n-th from the right) precedes ``s_n``.

    Returns a dict mapping each sphere radius to the listed words.
    """
    if g.is_identity:
        raise ValueError("the crescent of e is undefined")
    order = check_letter_order(g.rank, letter_order)
    pos = {x: i for i, x in enumerate(order)}
    n = len(g)
    s_n = g.letters[0]
    prefix = inverse(g).letters
    out: dict[int, tuple[Word, ...]] = {}
    if n > 1 and pos[g.letters[1]] < pos[-s_n]:
        out[2 * n - 2] = sort_words(_with_prefix(prefix, 2 * n - 2, g.rank, order), g.rank, order)
    else:
        out[2 * n - 2] = ()
    out[2 * n - 1] = sort_words(_with_prefix(prefix, 2 * n - 1, g.rank, order), g.rank, order)
    # t_n sits at position n from the left in a word of length 2n
    out[2 * n] = sort_words(
        (w for w in _with_prefix(prefix, 2 * n, g.rank, order) if pos[w.letters[n]] < pos[s_n]),
        g.rank, order,
    )
    return out


def crescent_owner(t: Word, letter_order: Sequence[int] | None = None) -> Word:
    """The unique ``g ≠ e`` whose crescent contains ``t ≠ e``."""
    if t.is_identity:
        raise ValueError("e lies in no crescent")
    order = check_letter_order(t.rank, letter_order)
    pos = {x: i for i, x in enumerate(order)}
    m = len(t)
    L = t.letters  # L[0] = t_m, ..., L[m-1] = t_1
    if m % 2 == 1:
        p = (m + 1) // 2
        head = L[:p]  # t_{2p-1} ... t_p
    else:
        p = m // 2
        t_p, t_p1 = L[m - p], L[m - p - 1]
        if pos[t_p] < pos[-t_p1]:
            head = L[:p]  # t_{2p} ... t_{p+1}
        else:
            head = L[: p + 1]  # t_{2p} ... t_p
    return inverse(Word._trusted(tuple(head), t.rank))
