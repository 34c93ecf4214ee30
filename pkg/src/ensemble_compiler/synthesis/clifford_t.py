"""Clifford+T approximations of single-qubit Z rotations.

Every single-qubit Clifford+T operator has a unique normal form

    (T | e) (HT | SHT)^k C

with ``C`` one of the 24 Cliffords (modulo phase) and T-count ``[T] + k``.
We search these forms exhaustively by T-count with a meet-in-the-middle
split: a word of T-count ``t`` is ``A B`` with ``A = (T|e)(HT|SHT)^*`` of
T-count ``a`` and ``B = (HT|SHT)^b C``, ``a + b = t``.
Tables of ``A`` and ``B`` are built lazily per T-count; each ``B`` table is
indexed by a KD-tree over unit quaternions, where the phase-insensitive
operator distance between two SU(2) elements ``p, q`` is
``min(|p - q|, |p + q|)``.  A word ``A B`` lies within ``eps`` of ``R`` iff
``B`` lies within ``eps`` of ``A^dagger R``.

Each ``t`` has exactly one split, chosen as ``b = min(floor(t/2), max_level)``
and ``a = t - b``, so the search is exhaustive for T-counts up to
``max_level + max_a_level`` (its *reach*).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..circuit import Circuit, GateKind, fixed, rz_matrix
from ..errors import InputError
from ..linalg import operator_norm, phase_align

log = logging.getLogger(__name__)

DEFAULT_T_CAP = 40
# B tables (the KD-tree side) up to this T-count; A tables (query side) deeper
DEFAULT_MAX_LEVEL = 16
DEFAULT_MAX_A_LEVEL = 20
QUERY_CHUNK = 1 << 17
# levels above the first hit that are still collected, and a cap on words
EXTRA_LEVELS = 2
MAX_WORDS = 64

_SQ2 = 1 / math.sqrt(2)
_H = np.array([[1, 1], [1, -1]], dtype=complex) * _SQ2
_S = np.diag([1, 1j])
_T = np.diag([1, np.exp(1j * math.pi / 4)])
_GATE = {"H": _H, "S": _S, "T": _T}


def _su2(M: np.ndarray) -> np.ndarray:
    return M / np.sqrt(np.linalg.det(M))


def _quat(M: np.ndarray) -> np.ndarray:
    """Quaternion ``(a, b, c, d)`` of ``M = aI - i(bX + cY + dZ)``; ``M`` may be batched."""
    M = np.asarray(M)
    return np.stack([M[..., 0, 0].real, -M[..., 1, 0].imag, M[..., 1, 0].real, -M[..., 0, 0].imag], axis=-1)


def _mat(q: np.ndarray) -> np.ndarray:
    a, b, c, d = np.moveaxis(np.asarray(q), -1, 0)
    out = np.empty(np.shape(a) + (2, 2), dtype=complex)
    out[..., 0, 0] = a - 1j * d
    out[..., 0, 1] = -c - 1j * b
    out[..., 1, 0] = c - 1j * b
    out[..., 1, 1] = a + 1j * d
    return out


def _left_mult_matrix(g: np.ndarray) -> np.ndarray:
    """Real 4x4 ``L`` with ``quat(g M(q)) = L q``."""
    basis = _mat(np.eye(4))
    return np.stack([_quat(g @ basis[j]) for j in range(4)], axis=1)


def _canonical_sign(q: np.ndarray) -> np.ndarray:
    q = np.array(q, dtype=float)
    idx = np.argmax(np.abs(q) > 1e-9)
    return -q if q[idx] < 0 else q


def word_matrix(word: str) -> np.ndarray:
    """Matrix of a word written in matrix-product order (leftmost acts last)."""
    M = np.eye(2, dtype=complex)
    for ch in word:
        M = M @ _GATE[ch]
    return M


def _cliffords() -> list[str]:
    """The 24 single-qubit Cliffords modulo phase, as shortest H/S words."""
    seen: dict[tuple, str] = {}
    frontier = [""]
    seen[tuple(np.round(_canonical_sign(_quat(_su2(word_matrix("")))), 9))] = ""
    while frontier:
        nxt = []
        for w in frontier:
            for g in "HS":
                w2 = w + g
                key = tuple(np.round(_canonical_sign(_quat(_su2(word_matrix(w2)))), 9))
                if key not in seen:
                    seen[key] = w2
                    nxt.append(w2)
        frontier = nxt
    words = sorted(seen.values(), key=lambda w: (len(w), w))
    assert len(words) == 24
    return words


class _Tables:
    """Lazily grown A and B tables (quaternions) plus KD-trees on B."""

    def __init__(self):
        self.cliffords = _cliffords()
        self.syllables = ["HT", "SHT"]
        self.L_syl = [_left_mult_matrix(_su2(word_matrix(s))) for s in self.syllables]
        self.L_T = _left_mult_matrix(_su2(_T))
        cq = np.array([_quat(_su2(word_matrix(w))) for w in self.cliffords])
        self.B = [cq]
        self.S = [np.array([[1.0, 0.0, 0.0, 0.0]])]
        self.trees: dict[int, cKDTree] = {}

    @staticmethod
    def _grow(prev: np.ndarray, Ls) -> np.ndarray:
        return np.concatenate([prev @ L.T for L in Ls])

    def b_level(self, m: int) -> np.ndarray:
        while len(self.B) <= m:
            self.B.append(self._grow(self.B[-1], self.L_syl))
        return self.B[m]

    def s_level(self, k: int) -> np.ndarray:
        while len(self.S) <= k:
            self.S.append(self._grow(self.S[-1], self.L_syl))
        return self.S[k]

    def a_level(self, t: int) -> np.ndarray:
        if t == 0:
            return self.s_level(0)
        return np.concatenate([self.s_level(t - 1) @ self.L_T.T, self.s_level(t)])

    def tree(self, m: int) -> cKDTree:
        if m not in self.trees:
            self.trees[m] = cKDTree(self.b_level(m))
        return self.trees[m]

    # --- decoding indices back to words (matrix-product order) -----------

    def _syllable_word(self, k: int, idx: int) -> str:
        parts = []
        for level in range(k, 0, -1):
            size = 1 << (level - 1)
            parts.append(self.syllables[idx // size])
            idx %= size
        return "".join(parts)

    def a_word(self, t: int, idx: int) -> str:
        if t == 0:
            return ""
        n_t = 1 << (t - 1)
        if idx < n_t:
            return "T" + self._syllable_word(t - 1, idx)
        return self._syllable_word(t, idx - n_t)

    def b_word(self, m: int, idx: int) -> str:
        size = 24
        return self._syllable_word(m, idx // size) + self.cliffords[idx % size]


_TABLES: _Tables | None = None


def _tables() -> _Tables:
    global _TABLES
    if _TABLES is None:
        _TABLES = _Tables()
    return _TABLES


@dataclass(frozen=True)
class CliffordTWord:
    word: str  # matrix-product order
    t_count: int
    error: float
    circuit: Circuit  # one-qubit circuit with the aligning global phase


def word_circuit(word: str, qubit: int = 0, width: int = 1, phase: float = 0.0) -> Circuit:
    kinds = {"H": GateKind.H, "S": GateKind.S, "T": GateKind.T}
    gates = [fixed(kinds[ch], qubit) for ch in reversed(word)]
    return Circuit(width, gates, phase)


def make_word(word: str, theta: float) -> CliffordTWord:
    W = word_matrix(word)
    target = rz_matrix(theta)
    aligned, phi = phase_align(W, target)
    err = operator_norm(aligned - target)
    return CliffordTWord(word, word.count("T"), err, word_circuit(word, phase=phi))


def reach(max_level: int = DEFAULT_MAX_LEVEL, max_a_level: int = DEFAULT_MAX_A_LEVEL) -> int:
    """Largest T-count searched exhaustively with the given table depths."""
    return max_level + max_a_level


def _split(t: int, max_level: int) -> tuple[int, int]:
    tb = min(t // 2, max_level)
    return t - tb, tb


def _level_hits(tables: _Tables, t: int, R: np.ndarray, eps: float, limit: int, max_level: int) -> list[str]:
    ta, tb = _split(t, max_level)
    A = tables.a_level(ta)
    tree = tables.tree(tb)
    radius = eps * (1 + 1e-9) + 1e-12
    words = []
    for start in range(0, len(A), QUERY_CHUNK):
        # query points quat(A^dagger R) for both signs of the B representative
        Ad = _mat(A[start : start + QUERY_CHUNK]).conj().transpose(0, 2, 1)
        Y = _quat(Ad @ R)
        for sign in (1.0, -1.0):
            dist, _ = tree.query(sign * Y, k=1, distance_upper_bound=radius)
            for i in np.flatnonzero(np.isfinite(dist)):
                for j in sorted(tree.query_ball_point(sign * Y[i], radius)):
                    words.append(tables.a_word(ta, start + int(i)) + tables.b_word(tb, int(j)))
                    if len(words) >= limit:
                        return words
    return words


def rz_to_clifford_t(theta: float, eps_rz: float, t_cap: int = DEFAULT_T_CAP,
                     max_level: int = DEFAULT_MAX_LEVEL, max_a_level: int = DEFAULT_MAX_A_LEVEL,
                     extra_levels: int = EXTRA_LEVELS,
                     max_words: int = MAX_WORDS) -> list[CliffordTWord]:
    """Distinct Clifford+T words within ``eps_rz`` of ``RZ(theta)``, sorted by T-count.

    Errors are the phase-aligned operator distance, recomputed from each
    word's matrix.  Words are collected from the lowest T-count with a hit up
    to ``extra_levels`` counts above it, at most ``max_words`` in total.
    Returns an empty list when nothing is found up to ``min(t_cap, reach)``.
    """
    if not eps_rz > 0:
        raise InputError("eps_rz must be positive")
    tables = _tables()
    R = _su2(rz_matrix(theta))
    t_max = min(t_cap, reach(max_level, max_a_level))
    found: list[CliffordTWord] = []
    first = None
    for t in range(t_max + 1):
        if first is not None and t > first + extra_levels:
            break
        hits = _level_hits(tables, t, R, eps_rz, max_words - len(found), max_level)
        for w in hits:
            cand = make_word(w, theta)
            if cand.error <= eps_rz:
                found.append(cand)
        if found and first is None:
            first = t
        if len(found) >= max_words:
            break
    if not found:
        log.info("no Clifford+T word within %.3g of RZ(%.6f) up to T-count %d", eps_rz, theta, t_max)
    found.sort(key=lambda w: (w.t_count, w.error, w.word))
    return found


def min_t_count(theta: float, eps_rz: float, t_cap: int = DEFAULT_T_CAP,
                max_level: int = DEFAULT_MAX_LEVEL,
                max_a_level: int = DEFAULT_MAX_A_LEVEL) -> tuple[int, bool]:
    """Smallest T-count of a word within ``eps_rz`` of ``RZ(theta)``.

    Returns ``(count, True)`` when found.  Otherwise returns
    ``(bound, False)`` where ``bound`` is one more than the largest T-count
    searched: a certified lower bound on the optimum.
    """
    words = rz_to_clifford_t(theta, eps_rz, t_cap, max_level, max_a_level, extra_levels=0, max_words=1)
    if words:
        return words[0].t_count, True
    return min(t_cap, reach(max_level, max_a_level)) + 1, False
