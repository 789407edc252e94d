"""Brute-force verification harness for tiny instances.

Enumerates the whole data space and every equipartition, so kernel values,
averaged permuted moments, and structure counts can be computed directly and
compared against the production formulas.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product

import numpy as np

from .bounds import forest_count, g_of_signature, zeta_preimage_count
from .combinatorics import ComponentSignature, count_equipartitions
from .datamodel import Equipartition, ModelParams, make_rng
from .graphkernel import PairGraph, component_signature, perturbed_kstar, zeta
from .moment import permuted_moment_exact


@dataclass(frozen=True, eq=False)
class TinyUniverse:
    """Fully enumerated data space and equipartition set for small parameters."""

    params: ModelParams
    sentences: np.ndarray  # (n_w^L, L), lexicographic order
    phis: tuple[Equipartition, ...]

    @property
    def size(self) -> int:
        return self.sentences.shape[0]


def build_universe(
    params: ModelParams, max_sentences: int = 4096, max_phis: int = 10_000
) -> TinyUniverse:
    """Enumerate all sentences (lexicographically) and all equipartitions.

    Refuses universes beyond the caps: full pairwise work must stay cheap.
    """
    n_x = params.n_w**params.L
    n_phi = count_equipartitions(params.n_w, params.n_c)
    if n_x > max_sentences:
        raise ValueError(f"universe too large: {n_x} sentences > cap {max_sentences}")
    if n_phi > max_phis:
        raise ValueError(f"universe too large: {n_phi} equipartitions > cap {max_phis}")
    sentences = np.array(
        list(product(range(1, params.n_w + 1), repeat=params.L)), dtype=np.int64
    )
    phis = []
    seen = set()
    for perm in permutations(range(1, params.n_w + 1)):
        blocks = tuple(
            tuple(sorted(perm[c * params.s_c : (c + 1) * params.s_c]))
            for c in range(params.n_c)
        )
        if blocks in seen:
            continue
        seen.add(blocks)
        words_of = np.array(blocks, dtype=np.int64)
        concept_of = np.zeros(params.n_w + 1, dtype=np.int64)
        for c in range(params.n_c):
            concept_of[words_of[c]] = c + 1
        phis.append(Equipartition(concept_of_word=concept_of, words_of_concept=words_of))
    assert len(phis) == n_phi
    return TinyUniverse(params=params, sentences=sentences, phis=tuple(phis))


def kstar_direct(x: np.ndarray, y: np.ndarray, universe: TinyUniverse) -> Fraction:
    """Kernel value by direct counting: loop over every equipartition and
    test concept-sequence agreement."""
    p = universe.params
    agree = 0
    for phi in universe.phis:
        if np.array_equal(phi.concepts_of(x), phi.concepts_of(y)):
            agree += 1
    return Fraction(agree, len(universe.phis) * p.s_c**p.L)


def kstar_row_direct(i: int, universe: TinyUniverse) -> list[Fraction]:
    """Full kernel row for sentence ``i``, by direct counting (vectorized
    over the data space per equipartition)."""
    p = universe.params
    X = universe.sentences
    agree = np.zeros(universe.size, dtype=np.int64)
    for phi in universe.phis:
        codes = _sequence_codes(phi.concepts_of(X), p.n_c)
        agree += codes == codes[i]
    denom = len(universe.phis) * p.s_c**p.L
    return [Fraction(int(a), denom) for a in agree]


def _sequence_codes(concepts: np.ndarray, n_c: int) -> np.ndarray:
    """Encode concept-sequence rows as single integers for fast equality."""
    codes = np.zeros(concepts.shape[0], dtype=np.int64)
    for l in range(concepts.shape[1]):
        codes = codes * n_c + (concepts[:, l] - 1)
    return codes


def exact_avg_moment(universe: TinyUniverse, t: int) -> Fraction:
    """Average over all sentences of the exact t-th permuted moment of the
    sentence's kernel row."""
    total = Fraction(0)
    for i in range(universe.size):
        total += permuted_moment_exact(kstar_row_direct(i, universe), t)
    return total / universe.size


@dataclass(frozen=True)
class BeautifulReport:
    """Monte Carlo check that the best-kernel success rate over the
    simplified process equals the averaged permuted moment."""

    t: int
    trials: int
    estimate: float
    exact: Fraction
    z_score: float

    @property
    def passed(self) -> bool:
        return abs(self.z_score) <= 4.0


def _perturbed_matrix(universe: TinyUniverse, seed: int) -> np.ndarray:
    X = universe.sentences
    n = universe.size
    out = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i, n):
            v = perturbed_kstar(X[i], X[j], universe.params, seed)
            out[i, j] = v
            out[j, i] = v
    return out


def verify_beautiful(
    universe: TinyUniverse,
    t: int,
    mc_trials: int,
    seed: int,
    kernel_matrix: np.ndarray | None = None,
) -> BeautifulReport:
    """Estimate P[K(x_test, x_1) > K(x_test, x_r) for all r >= 2] under the
    simplified sampling process with the perturbed kernel, and compare to
    the exact averaged moment (they agree in expectation; Monte Carlo noise
    is the only gap).

    A different symmetric ``kernel_matrix`` may be supplied; the estimate is
    then at most the exact value (the equality is a supremum over symmetric
    kernels).
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    p = universe.params
    K = _perturbed_matrix(universe, seed) if kernel_matrix is None else kernel_matrix
    exact = exact_avg_moment(universe, t)

    rng = make_rng(seed, 100)
    n_phi = len(universe.phis)
    # index sentences inside each (phi, concept sequence) preimage once
    preimages = np.empty((n_phi, p.n_c**p.L, p.s_c**p.L), dtype=np.int64)
    for pi, phi in enumerate(universe.phis):
        codes = _sequence_codes(phi.concepts_of(universe.sentences), p.n_c)
        order = np.argsort(codes, kind="stable")
        preimages[pi] = order.reshape(p.n_c**p.L, p.s_c**p.L)

    successes = 0
    batch = 20_000
    done = 0
    while done < mc_trials:
        b = min(batch, mc_trials - done)
        phi_idx = rng.integers(0, n_phi, size=b)
        seqs = rng.integers(0, p.n_c**p.L, size=(b, t + 1))
        slots = rng.integers(0, p.s_c**p.L, size=(b, t + 1))
        points = preimages[phi_idx[:, None], seqs, slots]
        test_slots = rng.integers(0, p.s_c**p.L, size=b)
        tests = preimages[phi_idx, seqs[:, 0], test_slots]
        scores = K[tests[:, None], points]
        wins = scores[:, 0] > scores[:, 1:].max(axis=1)
        successes += int(wins.sum())
        done += b

    estimate = successes / mc_trials
    exact_f = float(exact)
    sigma = max(np.sqrt(exact_f * (1.0 - exact_f) / mc_trials), 1e-12)
    z = (estimate - exact_f) / sigma
    return BeautifulReport(t=t, trials=mc_trials, estimate=estimate, exact=exact, z_score=z)


@dataclass(frozen=True)
class StructureReport:
    """Outcome of the exhaustive pair-graph structure checks."""

    pairs: int
    graphs: int
    preimage_counts_ok: bool
    forest_counts_ok: bool
    level_set_mass_ok: bool

    @property
    def passed(self) -> bool:
        return self.preimage_counts_ok and self.forest_counts_ok and self.level_set_mass_ok


def verify_structure_counts(universe: TinyUniverse) -> StructureReport:
    """Enumerate all sentence pairs; group them by graph and by signature;
    check the per-graph preimage formula, the per-signature forest-count
    formula, and that the predicted level-set mass lower-bounds the true one.
    """
    p = universe.params
    X = universe.sentences
    n = universe.size
    pair_count_by_graph: dict[frozenset, int] = {}
    for i in range(n):
        for j in range(n):
            g = zeta(X[i], X[j])
            pair_count_by_graph[g.edges] = pair_count_by_graph.get(g.edges, 0) + 1

    preimage_ok = True
    for edges, observed in pair_count_by_graph.items():
        expected = zeta_preimage_count(len(edges), p.L, p.n_w)
        if observed != expected:
            preimage_ok = False

    # group realized graphs by signature; count forests and pair mass
    forests_by_sig: dict[tuple, int] = {}
    pairs_by_sig: dict[tuple, int] = {}
    for edges, observed in pair_count_by_graph.items():
        sig = component_signature(PairGraph(edges=edges, silent_count=0), p.n_w, p.L)
        key = sig.counts
        pairs_by_sig[key] = pairs_by_sig.get(key, 0) + observed
        if len(edges) == sig.gamma:  # acyclic iff edge count hits the minimum
            forests_by_sig[key] = forests_by_sig.get(key, 0) + 1

    forest_ok = True
    mass_ok = True
    for key, n_pairs in pairs_by_sig.items():
        sig = ComponentSignature(key)
        if forests_by_sig.get(key, 0) != forest_count(sig, p.n_w):
            forest_ok = False
        mass = Fraction(n_pairs, n * n)
        if mass < g_of_signature(sig, p.L, p.n_w):
            mass_ok = False

    return StructureReport(
        pairs=n * n,
        graphs=len(pair_count_by_graph),
        preimage_counts_ok=preimage_ok,
        forest_counts_ok=forest_ok,
        level_set_mass_ok=mass_ok,
    )


def write_goldens(universe: TinyUniverse, ts: list[int], fp) -> None:
    """Pin exact oracle values as text: one ``name = numerator/denominator``
    per line, with the generating parameters recorded alongside."""
    p = universe.params
    fp.write(f"# params L={p.L} n_w={p.n_w} n_c={p.n_c}\n")
    for t in ts:
        value = exact_avg_moment(universe, t)
        fp.write(f"exact_avg_moment_t{t} = {value.numerator}/{value.denominator}\n")


def read_goldens(fp) -> dict[str, Fraction]:
    """Parse a goldens file back into exact rationals."""
    out: dict[str, Fraction] = {}
    for line in fp:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, _, value = line.partition("=")
        num, _, den = value.strip().partition("/")
        out[name.strip()] = Fraction(int(num), int(den or "1"))
    return out
