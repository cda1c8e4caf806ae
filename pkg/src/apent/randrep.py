"""Haar-random unitary representations of free groups and Monte-Carlo checks.

All sampling is driven by a single integer seed.  Work is split into fixed-size
chunks; chunk ``i`` draws from its own Philox stream keyed by ``(seed, i)`` so the
result does not depend on how many threads process the chunks
(``APENT_THREADS`` caps the pool size).
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, stats

from . import matent
from .errors import SingularMatrixError
from .freegroup import GroundedSet, Word, ball, enlargement_direction, length_lex_enumeration, \
    letter, parent, shift_overlap
from .pdf import PartialPDF
from .verblunsky import extract_coefficient, sequence_from_partial

CHUNK = 250
UNITARY_TOL = 1e-10
# reference thresholds; other sample sizes scale as 1/sqrt(samples)
KS_ONE_SAMPLE = (0.015, 20000)
KS_TWO_SAMPLE = (0.04, 4000)
CORRELATION = (0.05, 5000)


def _scaled(ref: tuple[float, int], samples: int) -> float:
    thr, base = ref
    return thr * math.sqrt(base / samples)


def new_seed() -> int:
    """A fresh seed from OS entropy (recorded by callers for reproducibility)."""
    return int(np.random.SeedSequence().entropy % (2 ** 63))


def stream_rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("APENT_THREADS", "")))
    except ValueError:
        return min(4, os.cpu_count() or 1)


def _chunked(fn: Callable[[int, np.random.Generator], list], samples: int, seed: int,
             stream_offset: int = 0) -> list:
    """Run ``fn(count, rng)`` over chunks and concatenate in stream order."""
    counts = [min(CHUNK, samples - i) for i in range(0, samples, CHUNK)]
    jobs = [(c, stream_rng(seed, stream_offset + i)) for i, c in enumerate(counts)]
    nthreads = min(_threads(), len(jobs)) if jobs else 1
    if nthreads <= 1:
        parts = [fn(c, g) for c, g in jobs]
    else:
        with ThreadPoolExecutor(nthreads) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    return [x for part in parts for x in part]


# -- sampling primitives --

def ginibre(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """``n × m`` iid standard complex Gaussians, ``E|z|² = 1``."""
    return (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / math.sqrt(2)


def haar_frame(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random orthonormal ``k``-frame in ``C^n`` (phase-corrected QR)."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    Qm, R = np.linalg.qr(ginibre(n, k, rng))
    d = np.diag(R)
    return Qm * (d / np.abs(d))


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of ``U(n)``."""
    if n < 1:
        raise ValueError("n must be positive")
    return haar_frame(n, n, rng)


@dataclass(frozen=True)
class RandomRepresentation:
    """``π(s_i) = generators[i-1]``; ``π(s⁻¹) = π(s)*``."""

    n: int
    generators: tuple[np.ndarray, ...]

    def __post_init__(self):
        for U in self.generators:
            if U.shape != (self.n, self.n):
                raise ValueError("generator shape mismatch")
            if np.max(np.abs(U.conj().T @ U - np.eye(self.n))) >= UNITARY_TOL:
                raise ValueError("generator is not unitary")

    @property
    def rank(self) -> int:
        return len(self.generators)

    def letter_matrix(self, x: int) -> np.ndarray:
        U = self.generators[abs(x) - 1]
        return U if x > 0 else U.conj().T

    def __call__(self, g: Word) -> np.ndarray:
        M = np.eye(self.n, dtype=complex)
        for x in g.letters:
            M = M @ self.letter_matrix(x)
        return M

    def apply(self, g: Word, V) -> np.ndarray:
        """``π(g) V`` without forming ``π(g)``."""
        V = np.asarray(V, dtype=complex)
        for x in reversed(g.letters):
            V = self.letter_matrix(x) @ V
        return V

    def character(self, g: Word) -> complex:
        return complex(np.trace(self(g))) / self.n


def random_representation(n: int, r: int, rng: np.random.Generator) -> RandomRepresentation:
    return RandomRepresentation(n, tuple(haar_unitary(n, rng) for _ in range(r)))


def orbit_gram(rep: RandomRepresentation, F: Sequence[Word], k: int = 1) -> PartialPDF:
    """Gram matrix ``[(π(g)V)*(π(h)V)]`` of the orbit of the first ``k`` basis vectors."""
    F = tuple(F)
    if rep.n < k * len(F):
        raise ValueError(f"dimension {rep.n} < k|F| = {k * len(F)}")
    V = np.eye(rep.n, k, dtype=complex)
    cache: dict[Word, np.ndarray] = {}

    def orbit(g: Word) -> np.ndarray:
        if g not in cache:
            cache[g] = V if g.is_identity else rep.letter_matrix(g.first) @ orbit(parent(g))
        return cache[g]

    W = np.hstack([orbit(g) for g in F])
    Q = W.conj().T @ W
    return PartialPDF(F, k, (Q + Q.conj().T) / 2)


def random_verblunsky(rep: RandomRepresentation, enum, m: int, k: int = 1) -> list[np.ndarray]:
    """Verblunsky coefficients ``C_0..C_{m-1}`` of the orbit Gram along ``enum``."""
    if rep.n < k * (m + 1):
        raise ValueError(f"dimension {rep.n} < k(m+1) = {k * (m + 1)}")
    P = orbit_gram(rep, enum.order[: m + 1], k)
    return sequence_from_partial(P, enum, m)


def sample_sigma(n: int, l: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """First ``l`` rows of a Haar ``k``-frame in ``C^n``: an ``l × k`` draw from ``σ_{n,l,k}``."""
    if not 1 <= l <= n:
        raise ValueError(f"need 1 <= l <= n, got l={l}, n={n}")
    return haar_frame(n, k, rng)[:l, :]


def sigma_density_k1(n: int, l: int, y) -> float:
    """Density of ``σ_{n,l,1}`` on the unit ball of ``C^l`` (Lebesgue measure on ``R^{2l}``)."""
    if not n > l >= 1:
        raise ValueError(f"need n > l >= 1, got n={n}, l={l}")
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    if y.shape != (l,):
        raise ValueError(f"y must have length {l}")
    t = float(np.sum(np.abs(y) ** 2))
    if t > 1:
        return 0.0
    const = math.exp(math.lgamma(n) - math.lgamma(n - l) - l * math.log(math.pi))
    return const * (1 - t) ** (n - l - 1)


def sigma_radial_cdf(n: int, rho):
    """``P(|y| ≤ ρ) = 1 - (1-ρ²)^{n-1}`` for ``y ~ σ_{n,1,1}``."""
    rho = np.clip(np.asarray(rho, dtype=float), 0.0, 1.0)
    return 1 - (1 - rho ** 2) ** (n - 1)


@dataclass
class SampleReport:
    test: str
    n: int | list
    samples: int
    seed: int | None
    statistics: dict = field(default_factory=dict)
    threshold: dict | float | None = None
    passed: bool = False
    raw: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {"test": self.test, "n": self.n, "samples": self.samples, "seed": self.seed,
                "statistics": self.statistics, "threshold": self.threshold, "pass": bool(self.passed)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def dump_csv(self) -> str:
        """Raw sample values, one column per recorded quantity."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = sorted(self.raw)
        w.writerow(["index"] + names)
        for i in range(max((len(self.raw[c]) for c in names), default=0)):
            w.writerow([i] + [repr(float(self.raw[c][i])) if i < len(self.raw[c]) else "" for c in names])
        return buf.getvalue()


def _ks(x, cdf) -> float:
    return float(stats.kstest(np.asarray(x), cdf).statistic)


def _corr(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    if np.std(x) == 0 or np.std(y) == 0:
        return 0.0
    return float(np.corrcoef(x, y)[0, 1])


# -- statistical tests --

def test_haar_phase(samples: int = 10000, seed: int = 0) -> SampleReport:
    """``n = 1``: the phase of a Haar unitary is uniform on ``[0, 2π)``."""
    ang = _chunked(lambda c, g: [float(np.angle(haar_unitary(1, g)[0, 0])) % (2 * math.pi)
                                 for _ in range(c)], samples, seed)
    thr = _scaled(KS_ONE_SAMPLE, samples)
    ks = _ks(ang, stats.uniform(0, 2 * math.pi).cdf)
    return SampleReport("haar", 1, samples, seed, {"ks": ks}, thr, ks < thr, {"phase": ang})


def test_wishart_k1(n: int = 16, samples: int = 20000, seed: int = 0) -> SampleReport:
    """``‖v‖²`` for a standard complex Gaussian vector in ``C^n`` against Gamma(n, 1)."""
    if n < 1:
        raise ValueError("n must be positive")
    q = _chunked(lambda c, g: list(np.sum(np.abs(ginibre(c, n, g)) ** 2, axis=1)), samples, seed)
    thr = _scaled(KS_ONE_SAMPLE, samples)
    ks = _ks(q, stats.gamma(n).cdf)
    mean = float(np.mean(q))
    ok = ks < thr and abs(mean - n) < 0.5 * math.sqrt(n / 16)
    return SampleReport("wishart", n, samples, seed, {"ks": ks, "mean": mean}, thr, ok, {"q": q})


def test_sigma_radial(n: int = 8, samples: int = 20000, seed: int = 0) -> SampleReport:
    """``|y|`` for ``y ~ σ_{n,1,1}`` against ``1 - (1-ρ²)^{n-1}``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rho = _chunked(lambda c, g: [float(abs(sample_sigma(n, 1, 1, g)[0, 0])) for _ in range(c)],
                   samples, seed)
    thr = _scaled(KS_ONE_SAMPLE, samples)
    ks = _ks(rho, lambda x: sigma_radial_cdf(n, x))
    strict = bool(np.max(rho) < 1)
    return SampleReport("sigma", n, samples, seed, {"ks": ks, "max_norm": float(np.max(rho))},
                        thr, ks < thr and strict, {"rho": rho})


def ldp_rate_check(n_values: Sequence[int] = (50, 100, 200), c: float = 0.5) -> SampleReport:
    """Tail ``P(|y| ≥ c)`` under ``σ_{n,1,1}`` by quadrature and in closed form."""
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    target = math.log(1 - c * c)
    rows = []
    ok = True
    for n in n_values:
        # radial density 2πρ · (n-1)/π · (1-ρ²)^{n-2}
        P, _ = integrate.quad(lambda p: 2 * (n - 1) * p * (1 - p * p) ** (n - 2), c, 1,
                              epsabs=0, epsrel=1e-12, limit=200)
        closed = (n - 1) * target
        rate = math.log(P) / n
        bound = 5 * math.log(n) / n
        exact_err = abs(math.log(P) - closed) / n
        good = abs(rate - target) <= bound and exact_err < 1e-9
        ok &= good
        rows.append({"n": n, "log_tail_quad": math.log(P), "log_tail_closed": closed, "rate": rate,
                     "rate_error": abs(rate - target), "bound": bound, "closed_form_error": exact_err,
                     "pass": good})
    return SampleReport("ldp", list(n_values), 0, None, {"c": c, "target": target, "rows": rows},
                        {"rate": "5 log(n)/n", "closed_form": 1e-9}, ok)


def dil_dist_reference(F: Sequence[Word], g: Word, k: int = 1) -> tuple[int, int]:
    """``(|F∩tF|, |F∖tF|)`` for the enlargement ``F → F ∪ g`` in direction ``t``."""
    F = tuple(F)
    t = enlargement_direction(GroundedSet(F, check=False), g)
    inter = len(shift_overlap(F, t))
    return inter, len(F) - inter


def test_dil_dist(n: int = 24, F: Sequence[Word] | None = None, g: Word | None = None,
                  samples: int = 4000, seed: int = 0, k: int = 1, rank: int = 2) -> SampleReport:
    """Law of the Verblunsky coefficient of a random orbit Gram for ``F → F ∪ g``.

    Defaults to ``F = B_1`` and ``g = aa`` in rank 2.
    """
    if F is None:
        F = ball(rank, 1).elements
    F = tuple(F)
    if g is None:
        g = Word((1, 1), F[0].rank)
    rank = F[0].rank
    if n < k * (len(F) + 1):
        raise ValueError(f"dimension {n} < k(|F|+1)")
    inter, outer = dil_dist_reference(F, g, k)
    layout = F + (g,)

    def draw(c, rng):
        out = []
        for _ in range(c):
            P = orbit_gram(random_representation(n, rank, rng), layout, k)
            QF = P.submatrix(F)
            if not (matent.is_nonsingular(QF) and P.is_nonsingular()):
                out.append(None)
                continue
            C = extract_coefficient(P, g)
            out.append((matent.operator_norm(C), float(C[0, 0].real), matent.logdet(QF)))
        return out

    got = _chunked(draw, samples, seed)
    singular = sum(x is None for x in got)
    got = [x for x in got if x is not None]
    n_ref, l_ref = n - k * inter, k * outer
    ref = _chunked(lambda c, rng: [sample_sigma(n_ref, l_ref, k, rng) for _ in range(c)],
                   samples, seed, stream_offset=1 << 20)
    norms = [x[0] for x in got]
    re00 = [x[1] for x in got]
    ref_norms = [matent.operator_norm(C) for C in ref]
    ref_re00 = [float(C[0, 0].real) for C in ref]
    ks_norm = float(stats.ks_2samp(norms, ref_norms).statistic)
    ks_re = float(stats.ks_2samp(re00, ref_re00).statistic)
    corr = _corr(norms, [x[2] for x in got])
    thr_ks = _scaled(KS_TWO_SAMPLE, samples)
    thr_corr = _scaled(CORRELATION, samples)
    ok = ks_norm < thr_ks and ks_re < thr_ks and singular == 0 and abs(corr) < thr_corr
    st = {"ks_norm": ks_norm, "ks_re_entry": ks_re, "singular": singular,
          "corr_norm_logdet": corr, "reference": [n_ref, l_ref, k],
          "F": [w.to_json() for w in F], "g": g.to_json()}
    return SampleReport("dildist", n, samples, seed, st,
                        {"ks": thr_ks, "singular": 0, "correlation": thr_corr}, ok,
                        {"norm": norms, "re_entry": re00, "ref_norm": ref_norms, "ref_re_entry": ref_re00})


def test_killip_nenciu(n: int = 32, samples: int = 5000, seed: int = 0, m: int = 4,
                       rank: int = 2) -> SampleReport:
    """Pairwise correlations of ``|C_0|², ..., |C_{m-1}|²`` along a length-lex enumeration."""
    enum = length_lex_enumeration(rank, m + 1)

    def draw(c, rng):
        out = []
        for _ in range(c):
            try:
                cs = random_verblunsky(random_representation(n, rank, rng), enum, m)
            except SingularMatrixError:
                out.append(None)
                continue
            out.append([float(np.sum(np.abs(C) ** 2)) for C in cs])
        return out

    got = _chunked(draw, samples, seed)
    rejected = sum(x is None for x in got)
    A = np.array([x for x in got if x is not None])
    corrs = {f"{i},{j}": _corr(A[:, i], A[:, j]) for i in range(m) for j in range(i + 1, m)}
    thr = _scaled(CORRELATION, samples)
    worst = max((abs(v) for v in corrs.values()), default=0.0)
    return SampleReport("kn", n, samples, seed, {"correlations": corrs, "max_abs": worst,
                                                 "rejected": rejected},
                        thr, worst < thr and rejected == 0,
                        {f"C{i}_sq": list(A[:, i]) for i in range(m)})


def trace_convergence(r: int = 2, g_list: Sequence[Word] | None = None,
                      n_list: Sequence[int] = (8, 16, 32, 64), samples: int = 200,
                      seed: int = 0, cap: float = 0.3) -> SampleReport:
    """Mean of ``|tr π(g)| / n`` shrinks as ``n`` grows, for ``g ≠ e``."""
    if g_list is None:
        g_list = [letter(1, r), Word((1, 2), r), Word((1, 1, -2), r)] if r > 1 else [letter(1, r)]
    for g in g_list:
        if g.is_identity:
            raise ValueError("the identity is excluded")
    means: dict[str, dict[int, float]] = {str(g): {} for g in g_list}
    for i, n in enumerate(n_list):
        vals = _chunked(lambda c, rng: [[abs(random_representation(n, r, rng).character(g)) for g in g_list]
                                        for _ in range(c)], samples, seed, stream_offset=i << 16)
        A = np.array(vals)
        for j, g in enumerate(g_list):
            means[str(g)][n] = float(A[:, j].mean())
    lo, hi = min(n_list), max(n_list)
    ok = all(m[hi] < m[lo] and m[hi] < cap for m in means.values())
    st = {"means": {g: {str(n): v for n, v in m.items()} for g, m in means.items()}}
    return SampleReport("trace", list(n_list), samples, seed, st, cap, ok)


SUITES = ("haar", "wishart", "sigma", "dildist", "kn", "trace", "ldp")


def run_suite(name: str, n: int | None = None, samples: int | None = None, seed: int = 0) -> SampleReport:
    """Run a named suite with its default size unless overridden."""
    if name == "haar":
        return test_haar_phase(samples or 10000, seed)
    if name == "wishart":
        return test_wishart_k1(n or 16, samples or 20000, seed)
    if name == "sigma":
        return test_sigma_radial(n or 8, samples or 20000, seed)
    if name == "dildist":
        return test_dil_dist(n or 24, samples=samples or 4000, seed=seed)
    if name == "kn":
        return test_killip_nenciu(n or 32, samples or 5000, seed)
    if name == "trace":
        ns = (8, 16, 32, n) if n and n > 32 else (8, 16, 32, 64)
        return trace_convergence(n_list=ns, samples=samples or 200, seed=seed)
    if name == "ldp":
        return ldp_rate_check((n,) if n else (50, 100, 200))
    raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")


# keep pytest from collecting the statistical checks when they are imported by name
for _f in (test_haar_phase, test_wishart_k1, test_sigma_radial, test_dil_dist, test_killip_nenciu):
    _f.__test__ = False
