"""Log-determinant entropy calculus and block PSD completion.

Conventions
-----------
``logdet`` is the matrix quantity ``log det Q``.  The tuple-level quantities
(``cond_entropy``, ``mutual_info``) use half the matrix log-determinant, the
entropy of the underlying tuple of vectors whose Gram matrix is ``Q``.

Index sets are lists of row/column positions.  Singularity is decided by a
scale-relative test: a PSD matrix is nonsingular iff its smallest eigenvalue
exceeds ``SINGULAR_TOL * max(1, largest eigenvalue)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import NotPSDError, SingularMatrixError

SINGULAR_TOL = 1e-10
PSD_TOL = 1e-10
HERMITIAN_TOL = 1e-12
CONTRACTION_TOL = 1e-10


def hermitian(Q, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return the symmetrized complex matrix, checking it was Hermitian to ``tol``."""
    Q = np.asarray(Q, dtype=complex)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {Q.shape}")
    if Q.size:
        scale = 1.0 + np.max(np.abs(Q))
        if np.max(np.abs(Q - Q.conj().T)) > tol * scale:
            raise ValueError("matrix is not Hermitian")
    return (Q + Q.conj().T) / 2


def _eigvalsh(Q) -> np.ndarray:
    return np.linalg.eigvalsh(hermitian(Q))


def _singular_threshold(eigs: np.ndarray) -> float:
    return SINGULAR_TOL * max(1.0, float(eigs[-1]) if eigs.size else 1.0)


def is_psd(Q, tol: float = PSD_TOL) -> bool:
    eigs = _eigvalsh(Q)
    return eigs.size == 0 or eigs[0] >= -tol * max(1.0, abs(eigs[-1]))


def is_nonsingular(Q) -> bool:
    eigs = _eigvalsh(Q)
    return eigs.size == 0 or eigs[0] > _singular_threshold(eigs)


def logdet(Q) -> float:
    """``log det Q`` for PSD ``Q``; ``-inf`` when ``Q`` is singular.

    >>> round(logdet([[1, 0.5], [0.5, 1]]), 7)
    -0.2876821
    """
    eigs = _eigvalsh(Q)
    if eigs.size == 0:
        return 0.0
    if eigs[0] < -PSD_TOL * max(1.0, abs(eigs[-1])):
        raise NotPSDError(f"matrix has eigenvalue {eigs[0]:.3e} < 0")
    if eigs[0] <= _singular_threshold(eigs):
        return -np.inf
    return float(np.sum(np.log(eigs)))


def _sub(Q: np.ndarray, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
    return Q[np.ix_(list(rows), list(cols))]


def _check_disjoint(*sets: Sequence[int]) -> None:
    seen: set[int] = set()
    for s in sets:
        s = set(s)
        if seen & s:
            raise ValueError("index sets must be disjoint")
        seen |= s


def schur_complement(Q, alpha: Sequence[int], beta: Sequence[int]) -> np.ndarray:
    """``Q_αα - Q_αβ Q_ββ⁻¹ Q_βα``; requires ``Q_ββ`` nonsingular."""
    Q = hermitian(Q)
    alpha, beta = list(alpha), list(beta)
    _check_disjoint(alpha, beta)
    Qaa = _sub(Q, alpha, alpha)
    if not beta:
        return Qaa
    Qbb = _sub(Q, beta, beta)
    if not is_nonsingular(Qbb):
        raise SingularMatrixError("conditioning block is singular")
    Qab = _sub(Q, alpha, beta)
    c = scipy.linalg.cho_factor(Qbb, lower=True)
    S = Qaa - Qab @ scipy.linalg.cho_solve(c, Qab.conj().T)
    return (S + S.conj().T) / 2


def entropy(Q, alpha: Sequence[int] | None = None) -> float:
    """Tuple entropy ``H_Q(α) = ½ log det Q_αα`` (all indices when ``alpha`` is None)."""
    Q = hermitian(Q)
    if alpha is not None:
        Q = _sub(Q, alpha, alpha)
    return 0.5 * logdet(Q)


def cond_entropy(Q, alpha: Sequence[int], beta: Sequence[int] = ()) -> float:
    """``H_Q(α | β) = ½ log det`` of the Schur complement of ``Q_ββ``."""
    return 0.5 * logdet(schur_complement(Q, alpha, beta))


def mutual_info(Q, alpha: Sequence[int], beta: Sequence[int], gamma: Sequence[int] = ()) -> float:
    """``I_Q(α; β | γ) = H_Q(α | γ) - H_Q(α | β ∪ γ)``."""
    _check_disjoint(alpha, beta, gamma)
    h1 = cond_entropy(Q, alpha, gamma)
    h2 = cond_entropy(Q, alpha, list(beta) + list(gamma))
    if h1 == -np.inf and h2 == -np.inf:
        raise SingularMatrixError("mutual information undefined: both conditional entropies are -inf")
    return h1 - h2


def _eigh_psd(Q):
    w, U = np.linalg.eigh(hermitian(Q))
    if w.size and w[0] < -PSD_TOL * max(1.0, abs(w[-1])):
        raise NotPSDError(f"matrix has eigenvalue {w[0]:.3e} < 0")
    return np.clip(w, 0.0, None), U


def sqrt_psd(Q) -> np.ndarray:
    """PSD square root; tiny negative eigenvalues are clamped to zero."""
    w, U = _eigh_psd(Q)
    R = (U * np.sqrt(w)) @ U.conj().T
    return (R + R.conj().T) / 2


def inv_sqrt_psd(Q) -> np.ndarray:
    w, U = _eigh_psd(Q)
    if w.size and w[0] <= _singular_threshold(w):
        raise SingularMatrixError("inverse square root of a singular matrix")
    R = (U / np.sqrt(w)) @ U.conj().T
    return (R + R.conj().T) / 2


def operator_norm(C) -> float:
    C = np.asarray(C, dtype=complex)
    if C.size == 0:
        return 0.0
    return float(np.linalg.norm(C, 2))


def is_contraction(C, tol: float = CONTRACTION_TOL) -> bool:
    return operator_norm(C) <= 1 + tol


def is_strict_contraction(C, tol: float = CONTRACTION_TOL) -> bool:
    return operator_norm(C) < 1 - tol


def two_block_contraction(Q11, R, Q22) -> np.ndarray:
    """``C = Q11^{-1/2} R Q22^{-1/2}`` for the block matrix ``[[Q11, R], [R*, Q22]]``."""
    R = np.asarray(R, dtype=complex)
    return inv_sqrt_psd(Q11) @ R @ inv_sqrt_psd(Q22)


@dataclass(frozen=True)
class PartialThreeBlock:
    """A 3x3 block Hermitian matrix with its (1,3) corner unknown."""

    Q11: np.ndarray
    Q12: np.ndarray
    Q22: np.ndarray
    Q23: np.ndarray
    Q33: np.ndarray

    @classmethod
    def from_blocks(cls, Q11, Q12, Q22, Q23, Q33) -> "PartialThreeBlock":
        Q11, Q22, Q33 = (hermitian(np.atleast_2d(np.asarray(x, dtype=complex))) for x in (Q11, Q22, Q33))
        k, l, m = Q11.shape[0], Q22.shape[0], Q33.shape[0]
        Q12 = np.asarray(Q12, dtype=complex).reshape(k, l)
        Q23 = np.asarray(Q23, dtype=complex).reshape(l, m)
        return cls(Q11, Q12, Q22, Q23, Q33)

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.Q11.shape[0], self.Q22.shape[0], self.Q33.shape[0]

    def upper(self) -> np.ndarray:
        return np.block([[self.Q11, self.Q12], [self.Q12.conj().T, self.Q22]])

    def lower(self) -> np.ndarray:
        return np.block([[self.Q22, self.Q23], [self.Q23.conj().T, self.Q33]])

    def is_partially_nonsingular(self) -> bool:
        return is_nonsingular(self.upper()) and is_nonsingular(self.lower())

    def schurs(self) -> tuple[np.ndarray, np.ndarray]:
        """``S11 = Q11 - Q12 Q22⁻¹ Q12*`` and ``S33 = Q33 - Q23* Q22⁻¹ Q23``."""
        k, l, m = self.sizes
        if l == 0:
            return self.Q11, self.Q33
        if not is_nonsingular(self.Q22):
            raise SingularMatrixError("middle block is singular")
        c = scipy.linalg.cho_factor(self.Q22, lower=True)
        S11 = self.Q11 - self.Q12 @ scipy.linalg.cho_solve(c, self.Q12.conj().T)
        S33 = self.Q33 - self.Q23.conj().T @ scipy.linalg.cho_solve(c, self.Q23)
        return (S11 + S11.conj().T) / 2, (S33 + S33.conj().T) / 2

    def central_corner(self) -> np.ndarray:
        """``Q12 Q22⁻¹ Q23``: the corner of the central completion."""
        k, l, m = self.sizes
        if l == 0:
            return np.zeros((k, m), dtype=complex)
        return self.Q12 @ scipy.linalg.cho_solve(scipy.linalg.cho_factor(self.Q22, lower=True), self.Q23)

    def assemble(self, R) -> np.ndarray:
        R = np.asarray(R, dtype=complex)
        return np.block([
            [self.Q11, self.Q12, R],
            [self.Q12.conj().T, self.Q22, self.Q23],
            [R.conj().T, self.Q23.conj().T, self.Q33],
        ])


def _require_partially_nonsingular(P: PartialThreeBlock) -> None:
    if not P.is_partially_nonsingular():
        raise SingularMatrixError("partial matrix is partially singular")


def three_block_complete(P: PartialThreeBlock, C) -> np.ndarray:
    """Fill the unknown corner with ``R = Q12 Q22⁻¹ Q23 + S11^{1/2} C S33^{1/2}``.

    ``C`` has shape ``(k, m)`` and operator norm at most one.  Returns the full
    ``(k+l+m)``-square matrix.
    """
    _require_partially_nonsingular(P)
    k, l, m = P.sizes
    C = np.asarray(C, dtype=complex).reshape(k, m)
    if not is_contraction(C):
        raise ValueError(f"C has norm {operator_norm(C):.6g} > 1")
    S11, S33 = P.schurs()
    R = P.central_corner() + sqrt_psd(S11) @ C @ sqrt_psd(S33)
    return P.assemble(R)


def three_block_extract(Q, k: int, l: int, m: int) -> tuple[PartialThreeBlock, np.ndarray]:
    """Split a full PSD matrix into its partial part and parametrizing contraction."""
    Q = hermitian(Q)
    if Q.shape[0] != k + l + m:
        raise ValueError(f"matrix size {Q.shape[0]} != {k}+{l}+{m}")
    a, b = slice(0, k), slice(k, k + l)
    c = slice(k + l, k + l + m)
    P = PartialThreeBlock(Q[a, a], Q[a, b], Q[b, b], Q[b, c], Q[c, c])
    _require_partially_nonsingular(P)
    S11, S33 = P.schurs()
    C = inv_sqrt_psd(S11) @ (Q[a, c] - P.central_corner()) @ inv_sqrt_psd(S33)
    return P, C
