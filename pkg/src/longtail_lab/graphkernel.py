"""Exact optimal-kernel engine.

A pair of sentences induces a graph on the vocabulary (one edge per position
where the sentences differ). The kernel value depends only on the histogram
of connected-component sizes of that graph, so evaluation is: union-find on
at most L edges, then a memo lookup of the exact rational level-set value.
Batch evaluation of whole test-by-train matrices is JIT-compiled.

Also provides the fixed feature maps (word one-hot, concept one-hot), the
monotone log rescaling, and the deterministic tie-breaking perturbation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numba import njit

from .combinatorics import (
    ComponentSignature,
    big_multinomial,
    count_equipartitions,
    enumerate_admissible,
    enumerate_signatures,
)
from .datamodel import ModelParams, Sentence


# ---------------------------------------------------------------------------
# Pair graphs and component signatures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairGraph:
    """Edge set induced by a sentence pair, plus the count of silent
    positions (positions where the two sentences agree)."""

    edges: frozenset[tuple[int, int]]
    silent_count: int


def zeta(x: Sentence, y: Sentence) -> PairGraph:
    """Graph of a sentence pair: one edge {x_l, y_l} per differing position,
    deduplicated; agreeing positions are silent."""
    if len(x) != len(y):
        raise ValueError(f"sentence lengths differ: {len(x)} vs {len(y)}")
    edges = set()
    silent = 0
    for a, b in zip(x, y):
        a, b = int(a), int(b)
        if a == b:
            silent += 1
        else:
            edges.add((a, b) if a < b else (b, a))
    return PairGraph(edges=frozenset(edges), silent_count=silent)


def _component_sizes(edges: frozenset[tuple[int, int]]) -> list[int]:
    """Sizes of the connected components spanned by the edges (touched
    vertices only; untouched vertices are the caller's singletons)."""
    parent: dict[int, int] = {}

    def find(v: int) -> int:
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    for a, b in edges:
        parent.setdefault(a, a)
        parent.setdefault(b, b)
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
    sizes: dict[int, int] = {}
    for v in parent:
        r = find(v)
        sizes[r] = sizes.get(r, 0) + 1
    return list(sizes.values())


def component_signature(g: PairGraph, n_w: int, L: int) -> ComponentSignature:
    """Component-size histogram of the graph, padded to length L+1; the
    n_w vertices not touched by any edge count as size-1 components."""
    for a, b in g.edges:
        if not (1 <= a <= n_w and 1 <= b <= n_w):
            raise ValueError(f"edge ({a},{b}) has endpoints outside 1..{n_w}")
    sizes = _component_sizes(g.edges)
    counts = [0] * (L + 1)
    touched = 0
    for s in sizes:
        if s > L + 1:
            raise ValueError(f"component of size {s} exceeds L+1={L + 1}")
        counts[s - 1] += 1
        touched += s
    counts[0] = n_w - touched
    if counts[0] < 0:
        raise ValueError("graph touches more vertices than the vocabulary holds")
    return ComponentSignature(tuple(counts))


# ---------------------------------------------------------------------------
# Cut-free counts and the level-set value f
# ---------------------------------------------------------------------------


def _assignment_count(sig: ComponentSignature, n_c: int, s_c: int) -> int:
    """Sum over admissible matrices of the product of per-size multinomials:
    the number of equipartitions keeping every component inside one concept."""
    total = 0
    for A in enumerate_admissible(sig, n_c, s_c):
        term = 1
        for count, row in zip(sig.counts, A.entries):
            term *= big_multinomial(count, row)
        total += term
    return total


def count_cut_free(g: PairGraph, n_w: int, n_c: int) -> int:
    """Number of equipartitions of the vocabulary that sever no edge of ``g``."""
    if n_w % n_c != 0:
        raise ValueError(f"n_c={n_c} does not divide n_w={n_w}")
    sizes = _component_sizes(g.edges)
    max_size = max(sizes, default=1)
    counts = [0] * max_size
    touched = 0
    for s in sizes:
        counts[s - 1] += 1
        touched += s
    counts[0] = n_w - touched
    if counts[0] < 0:
        raise ValueError("graph touches more vertices than the vocabulary holds")
    return _assignment_count(ComponentSignature(tuple(counts)), n_c, n_w // n_c)


@lru_cache(maxsize=None)
def _f_exact(L: int, n_w: int, n_c: int, tail: tuple[int, ...]) -> Fraction:
    """Exact level-set value for the signature whose non-singleton counts are
    ``tail`` (k_2, k_3, ...; the singleton count is implied by the vertex total)."""
    used = sum(i * c for i, c in enumerate(tail, start=2))
    counts = (n_w - used,) + tail
    s_c = n_w // n_c
    count = _assignment_count(ComponentSignature(counts), n_c, s_c)
    return Fraction(
        n_c**L * math.factorial(s_c) ** n_c * count, math.factorial(n_w)
    )


def _tail_of(counts: tuple[int, ...]) -> tuple[int, ...]:
    tail = counts[1:]
    while tail and tail[-1] == 0:
        tail = tail[:-1]
    return tail


def f_of_signature(k: ComponentSignature, params: ModelParams) -> Fraction:
    """Kernel value (scaled by |data space|) on the level set of signature k.

    Equals the cut-free equipartition count of any graph with this signature,
    normalized by n_c^L (s_c!)^{n_c} / n_w!. Memoized per (L, n_w, n_c, k).
    """
    if k.ghat != params.n_w:
        raise ValueError(
            f"signature accounts for {k.ghat} vertices, expected n_w={params.n_w}"
        )
    return _f_exact(params.L, params.n_w, params.n_c, _tail_of(k.counts))


def kstar(x: Sentence, y: Sentence, params: ModelParams) -> Fraction:
    """Exact optimal-kernel value: the fraction of equipartitions under which
    x and y share a concept sequence, scaled by n_c^L / n_w^L. Symmetric."""
    sig = component_signature(zeta(x, y), params.n_w, params.L)
    return f_of_signature(sig, params) / params.n_w**params.L


# ---------------------------------------------------------------------------
# Deterministic pairwise perturbation
# ---------------------------------------------------------------------------

_M64 = (1 << 64) - 1
_PHI64 = 0x9E3779B97F4A7C15
_SEED_SALT = 0x5851F42D4C957F2D


def _mix64(h: int) -> int:
    """SplitMix64 finalizer on a 64-bit word."""
    h &= _M64
    h ^= h >> 30
    h = (h * 0xBF58476D1CE4E5B9) & _M64
    h ^= h >> 27
    h = (h * 0x94D049BB133111EB) & _M64
    h ^= h >> 31
    return h


def pair_epsilon(x: Sentence, y: Sentence, seed: int) -> float:
    """Deterministic pseudorandom value in [0, 1) of the unordered pair
    {x, y} and the seed. Symmetric by construction."""
    a, b = (tuple(int(v) for v in x), tuple(int(v) for v in y))
    if b < a:
        a, b = b, a
    h = _mix64((seed & _M64) ^ _SEED_SALT)
    for w in a:
        h = _mix64(h ^ ((w * _PHI64) & _M64))
    for w in b:
        h = _mix64(h ^ ((w * _PHI64) & _M64))
    return (h >> 11) * 2.0**-53


def perturbed_kstar(x: Sentence, y: Sentence, params: ModelParams, seed: int) -> float:
    """Kernel value plus a sub-grid tie-breaking offset:
    float(K*) + eps / (2 s_c^L |Phi|) with eps = pair_epsilon(x, y, seed).

    Exact kernel values lie on the grid of multiples of 1 / (s_c^L |Phi|), so
    the offset never reorders strictly different kernel values. Note the grid
    step shrinks like 1/|Phi|; once it falls below float64 resolution of the
    kernel values the offset is invisible in the returned float, and batch
    classification should use ``perturbed_rank_matrix`` instead (same
    ordering, full tie-breaking resolution).
    """
    sig = component_signature(zeta(x, y), params.n_w, params.L)
    f = _f_exact(params.L, params.n_w, params.n_c, _tail_of(sig.counts))
    kf = float(f / params.n_w**params.L)
    # eps has exactly 53 bits, so this recovers the hash integer losslessly
    eps_num = int(pair_epsilon(x, y, seed) * 2.0**53)
    denom = (1 << 53) * 2 * params.s_c**params.L * count_equipartitions(params.n_w, params.n_c)
    return kf + eps_num / denom


# ---------------------------------------------------------------------------
# Fixed feature maps and rescaling
# ---------------------------------------------------------------------------


def rescale_log(v: float, alpha: float, params: ModelParams) -> float:
    """Strictly increasing rescaling log(1 + (n_w^L / alpha) v) of kernel
    values; nearest-neighbor decisions are unchanged by it."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if v < 0:
        raise ValueError(f"kernel value must be non-negative, got {v}")
    return math.log1p(float(params.n_w) ** params.L / alpha * v)


def onehot_features(x: Sentence, params: ModelParams, normalized: bool = False) -> np.ndarray:
    """Concatenated one-hot encodings of the words, optionally centered by
    p = 1/n_w and scaled by 1/sqrt(p(1-p)) so entries are O(1)."""
    L, n_w = params.L, params.n_w
    feats = np.zeros(L * n_w, dtype=np.float64)
    idx = np.arange(L) * n_w + (np.asarray(x, dtype=np.int64) - 1)
    feats[idx] = 1.0
    if normalized:
        p = 1.0 / n_w
        feats = (feats - p) / math.sqrt(p * (1.0 - p))
    return feats


def concept_features(x: Sentence, phi, params: ModelParams) -> np.ndarray:
    """Concatenated one-hot encodings of the concepts of the words; two
    sentences map to the same vector iff they share a concept sequence."""
    L, n_c = params.L, params.n_c
    concepts = phi.concepts_of(np.asarray(x, dtype=np.int64))
    feats = np.zeros(L * n_c, dtype=np.float64)
    feats[np.arange(L) * n_c + (concepts - 1)] = 1.0
    return feats


# ---------------------------------------------------------------------------
# Batch evaluation (JIT-compiled)
# ---------------------------------------------------------------------------

_U64_C1 = np.uint64(0xBF58476D1CE4E5B9)
_U64_C2 = np.uint64(0x94D049BB133111EB)
_U64_PHI = np.uint64(_PHI64)
_U64_SALT = np.uint64(_SEED_SALT)
_SH30 = np.uint64(30)
_SH27 = np.uint64(27)
_SH31 = np.uint64(31)
_SH11 = np.uint64(11)
_EPS_UNIT = 2.0**-53


@njit(cache=True)
def _mix64_nb(h):
    h ^= h >> _SH30
    h *= _U64_C1
    h ^= h >> _SH27
    h *= _U64_C2
    h ^= h >> _SH31
    return h


@njit(cache=True)
def _pair_eps_nb(x, y, L, h0):
    a, b = x, y
    for l in range(L):
        if x[l] < y[l]:
            break
        if x[l] > y[l]:
            a, b = y, x
            break
    h = h0
    for l in range(L):
        h = _mix64_nb(h ^ (np.uint64(a[l]) * _U64_PHI))
    for l in range(L):
        h = _mix64_nb(h ^ (np.uint64(b[l]) * _U64_PHI))
    return (h >> _SH11) * _EPS_UNIT


@njit(cache=True)
def _pair_key_nb(x, y, L, pows, verts, parent, comp):
    """Signature key of the pair graph: sum over non-singleton components of
    base^(size-2), computed by union-find over the touched vertices."""
    n = 0
    for l in range(L):
        a = x[l]
        b = y[l]
        if a == b:
            continue
        ia = -1
        ib = -1
        for t in range(n):
            v = verts[t]
            if v == a:
                ia = t
            elif v == b:
                ib = t
        if ia < 0:
            verts[n] = a
            parent[n] = n
            ia = n
            n += 1
        if ib < 0:
            verts[n] = b
            parent[n] = n
            ib = n
            n += 1
        ra = ia
        while parent[ra] != ra:
            ra = parent[ra]
        rb = ib
        while parent[rb] != rb:
            rb = parent[rb]
        if ra != rb:
            parent[rb] = ra
    for t in range(n):
        comp[t] = 0
    for t in range(n):
        r = t
        while parent[r] != r:
            r = parent[r]
        comp[r] += 1
    key = np.int64(0)
    for t in range(n):
        if parent[t] == t:
            key += pows[comp[t] - 2]
    return key


@njit(cache=True)
def _value_matrix_nb(A, B, L, pows, keys_sorted, values, out):
    verts = np.empty(2 * L, np.int64)
    parent = np.empty(2 * L, np.int64)
    comp = np.empty(2 * L, np.int64)
    for i in range(A.shape[0]):
        for j in range(B.shape[0]):
            key = _pair_key_nb(A[i], B[j], L, pows, verts, parent, comp)
            idx = np.searchsorted(keys_sorted, key)
            out[i, j] = values[idx]


@njit(cache=True)
def _perturbed_matrix_nb(A, B, L, pows, keys_sorted, ranks, h0, out):
    verts = np.empty(2 * L, np.int64)
    parent = np.empty(2 * L, np.int64)
    comp = np.empty(2 * L, np.int64)
    for i in range(A.shape[0]):
        for j in range(B.shape[0]):
            key = _pair_key_nb(A[i], B[j], L, pows, verts, parent, comp)
            idx = np.searchsorted(keys_sorted, key)
            out[i, j] = ranks[idx] + _pair_eps_nb(A[i], B[j], L, h0)


@njit(cache=True)
def _epsilon_matrix_nb(A, B, L, h0, out):
    for i in range(A.shape[0]):
        for j in range(B.shape[0]):
            out[i, j] = _pair_eps_nb(A[i], B[j], L, h0)


class KernelTable:
    """Precomputed level-set values for one (L, n_w, n_c) triple.

    Holds, per signature: an integer key (radix encoding of the non-singleton
    counts), the exact rational value, its float image, and its dense rank
    among the distinct exact values. ``float_faithful`` records whether the
    float images preserve all strict orderings of the exact values.
    """

    def __init__(self, L: int, n_w: int, n_c: int):
        self.L, self.n_w, self.n_c = L, n_w, n_c
        base = L + 2
        sigs = enumerate_signatures(L, n_w, 0)
        keys: list[int] = []
        exact: list[Fraction] = []
        for sig in sigs:
            tail = _tail_of(sig.counts)
            keys.append(sum(c * base ** (i - 2) for i, c in enumerate(sig.counts, 1) if i >= 2))
            exact.append(_f_exact(L, n_w, n_c, tail))
        if keys and max(keys) >= 1 << 62:
            raise ValueError(
                f"signature keys overflow int64 for L={L}, n_w={n_w}; batch path unavailable"
            )
        order = sorted(range(len(keys)), key=keys.__getitem__)
        scale = Fraction(1, n_w**L)
        self.keys_sorted = np.array([keys[i] for i in order], dtype=np.int64)
        self.exact_sorted = [exact[i] for i in order]
        self.values = np.array([float(f * scale) for f in self.exact_sorted], dtype=np.float64)
        distinct = sorted(set(self.exact_sorted))
        rank_of = {f: r for r, f in enumerate(distinct)}
        self.ranks = np.array([rank_of[f] for f in self.exact_sorted], dtype=np.float64)
        distinct_floats = [float(f * scale) for f in distinct]
        self.float_faithful = all(
            a < b for a, b in zip(distinct_floats, distinct_floats[1:])
        )
        self._pows = np.array([base**i for i in range(L)], dtype=np.int64)


@lru_cache(maxsize=None)
def kernel_table(L: int, n_w: int, n_c: int) -> KernelTable:
    return KernelTable(L, n_w, n_c)


def _as_batch(X: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(X, dtype=np.int64))


def kstar_value_matrix(X: np.ndarray, Y: np.ndarray, params: ModelParams) -> np.ndarray:
    """Float kernel values for every (row of X, row of Y) pair."""
    table = kernel_table(params.L, params.n_w, params.n_c)
    A, B = _as_batch(X), _as_batch(Y)
    out = np.empty((A.shape[0], B.shape[0]), dtype=np.float64)
    _value_matrix_nb(A, B, params.L, table._pows, table.keys_sorted, table.values, out)
    return out


def kstar_rank_matrix(X: np.ndarray, Y: np.ndarray, params: ModelParams) -> np.ndarray:
    """Dense rank (among distinct exact kernel values) for every pair; exact
    ordering information even where float values would collide."""
    table = kernel_table(params.L, params.n_w, params.n_c)
    A, B = _as_batch(X), _as_batch(Y)
    out = np.empty((A.shape[0], B.shape[0]), dtype=np.float64)
    _value_matrix_nb(A, B, params.L, table._pows, table.keys_sorted, table.ranks, out)
    return out


def _seed_h0(seed: int) -> np.uint64:
    return np.uint64((seed & _M64) ^ _SEED_SALT)


def perturbed_rank_matrix(
    X: np.ndarray, Y: np.ndarray, params: ModelParams, seed: int
) -> np.ndarray:
    """Kernel rank plus the pairwise epsilon in [0,1): ordered exactly like
    the perturbed kernel (strict kernel orderings kept, ties broken by eps)."""
    table = kernel_table(params.L, params.n_w, params.n_c)
    A, B = _as_batch(X), _as_batch(Y)
    out = np.empty((A.shape[0], B.shape[0]), dtype=np.float64)
    h0 = _mix64(int(_seed_h0(seed)))
    _perturbed_matrix_nb(
        A, B, params.L, table._pows, table.keys_sorted, table.ranks, np.uint64(h0), out
    )
    return out


def epsilon_matrix(X: np.ndarray, Y: np.ndarray, L: int, seed: int) -> np.ndarray:
    """Pairwise epsilon values in [0,1); add to an integer-valued similarity
    to break its ties deterministically."""
    A, B = _as_batch(X), _as_batch(Y)
    out = np.empty((A.shape[0], B.shape[0]), dtype=np.float64)
    h0 = _mix64(int(_seed_h0(seed)))
    _epsilon_matrix_nb(A, B, L, np.uint64(h0), out)
    return out


def match_count_matrix(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Positionwise agreement counts: the inner product of raw one-hot
    features, equal to L minus the Hamming distance."""
    A, B = _as_batch(X), _as_batch(Y)
    out = np.zeros((A.shape[0], B.shape[0]), dtype=np.int64)
    for l in range(A.shape[1]):
        out += A[:, l : l + 1] == B[None, :, l]
    return out
