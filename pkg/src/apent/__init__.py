"""Annealed AP entropy of positive definite functions on free groups."""
from .errors import *  # noqa: F401,F403
from .freegroup import Word, GroundedSet, Enumeration, ball, ball_size, length_lex_enumeration  # noqa: F401
from .pdf import Regular, Haagerup, Mollified, Induced, DiagonalJoin, Explicit, restrict  # noqa: F401
from .entropy import estimate_hann, EntropyReport  # noqa: F401

__version__ = "0.1.0"
