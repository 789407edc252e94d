"""Exact combinatorial primitives: multinomials, Stirling numbers, and the
signature / assignment-matrix enumerations behind the kernel level sets.

Everything here is integer or rational arithmetic on Python bigints; no
operation produces a float. Rational results use ``fractions.Fraction``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, prod
from typing import Iterator, Sequence


def big_multinomial(n: int, parts: Sequence[int]) -> int:
    """Number of ways to place ``n`` distinct objects into bins of the given sizes.

    ``n! / (parts[0]! * parts[1]! * ...)``. The two-part case is a binomial
    coefficient; a single part equal to ``n`` gives 1.
    """
    if n < 0 or any(p < 0 for p in parts):
        raise ValueError("multinomial arguments must be non-negative")
    if sum(parts) != n:
        raise ValueError(f"parts {list(parts)} do not sum to n={n}")
    return factorial(n) // prod(factorial(p) for p in parts)


@lru_cache(maxsize=None)
def _stirling2_rec(n: int, k: int) -> int:
    if k == 1 or k == n:
        return 1
    return _stirling2_rec(n - 1, k - 1) + k * _stirling2_rec(n - 1, k)


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind: partitions of n objects into k
    non-empty blocks.

    Computed by the Pascal-style recurrence {n,k} = {n-1,k-1} + k*{n-1,k},
    memoized. Requires 1 <= k <= n.
    """
    if not (1 <= k <= n):
        raise ValueError(f"stirling2 requires 1 <= k <= n, got n={n}, k={k}")
    return _stirling2_rec(n, k)


def stirling2_or_zero(n: int, k: int) -> int:
    """``stirling2`` extended by the conventions {0,0} = 1, {n,0} = 0 for
    n >= 1, and {n,k} = 0 for k > n.

    These are the boundary values the graph preimage count needs at m = 0
    (only the all-silent term survives).
    """
    if n < 0 or k < 0:
        raise ValueError("stirling2 arguments must be non-negative")
    if n == 0 and k == 0:
        return 1
    if k == 0 or k > n:
        return 0
    return stirling2(n, k)


def count_equipartitions(n_w: int, n_c: int) -> int:
    """Number of ways to split ``n_w`` labelled words into ``n_c`` labelled
    concepts of equal size: n_w! / (s_c!)^{n_c} with s_c = n_w / n_c.
    """
    if n_w <= 0 or n_c <= 0:
        raise ValueError("vocabulary and concept counts must be positive")
    if n_w % n_c != 0:
        raise ValueError(f"concept count {n_c} does not divide vocabulary size {n_w}")
    s_c = n_w // n_c
    return factorial(n_w) // (factorial(s_c) ** n_c)


@dataclass(frozen=True)
class ComponentSignature:
    """Histogram of connected-component sizes of a vocabulary graph.

    ``counts[i-1]`` is the number of components with exactly ``i`` vertices.
    ``gamma`` is the minimum edge count of a graph with this histogram (sum of
    size-1 over components); ``ghat`` is the total vertex count.
    """

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.counts or any(c < 0 for c in self.counts):
            raise ValueError("signature counts must be a non-empty sequence of non-negative ints")

    @property
    def gamma(self) -> int:
        return sum((i - 1) * c for i, c in enumerate(self.counts, start=1))

    @property
    def ghat(self) -> int:
        return sum(i * c for i, c in enumerate(self.counts, start=1))

    def padded(self, length: int) -> "ComponentSignature":
        """Same histogram, zero-padded or trimmed (of trailing zeros) to ``length``."""
        counts = self.counts
        if len(counts) > length:
            if any(counts[length:]):
                raise ValueError("cannot trim non-zero component counts")
            counts = counts[:length]
        return ComponentSignature(counts + (0,) * (length - len(counts)))


def enumerate_signatures(L: int, n_w: int, ell: int) -> list[ComponentSignature]:
    """All component-size histograms k of length L+1 with total vertex count
    ``n_w`` and ``ell <= gamma(k) <= L``.

    Returned in ascending lexicographic order of (k_{L+1}, ..., k_1) so runs
    are reproducible. An empty result is a legal output.
    """
    if not (0 <= ell <= L):
        raise ValueError(f"ell must lie in [0, {L}], got {ell}")
    out: list[ComponentSignature] = []
    counts = [0] * (L + 1)

    def fill(size: int, words_left: int, gamma_used: int) -> None:
        if size == 1:
            if gamma_used >= ell:
                counts[0] = words_left
                out.append(ComponentSignature(tuple(counts)))
            return
        limit = min(words_left // size, (L - gamma_used) // (size - 1))
        for c in range(limit + 1):
            counts[size - 1] = c
            fill(size - 1, words_left - size * c, gamma_used + (size - 1) * c)
        counts[size - 1] = 0

    fill(L + 1, n_w, 0)
    return out


@dataclass(frozen=True)
class AdmissibleMatrix:
    """Assignment of component counts to concepts.

    ``entries[i-1][j-1]`` is the number of size-``i`` components assigned to
    concept ``j``. Rows sum to the signature counts; columns absorb exactly
    ``s_c`` vertices each (weighted by component size).
    """

    entries: tuple[tuple[int, ...], ...]

    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.entries)

    def weighted_column_sums(self) -> tuple[int, ...]:
        n_c = len(self.entries[0])
        return tuple(
            sum(i * self.entries[i - 1][j] for i in range(1, len(self.entries) + 1))
            for j in range(n_c)
        )


def _capped_compositions(total: int, caps: list[int]) -> Iterator[tuple[int, ...]]:
    """Ways to write ``total`` as an ordered sum over len(caps) cells with
    cell j at most caps[j]."""
    n = len(caps)
    cell = [0] * n

    def rec(j: int, left: int) -> Iterator[tuple[int, ...]]:
        if j == n - 1:
            if left <= caps[j]:
                cell[j] = left
                yield tuple(cell)
            return
        for v in range(min(left, caps[j]) + 1):
            cell[j] = v
            yield from rec(j + 1, left - v)

    if total >= 0:
        yield from rec(0, total)


def enumerate_admissible(
    k: ComponentSignature, n_c: int, s_c: int
) -> Iterator[AdmissibleMatrix]:
    """Stream the matrices that assign the components counted by ``k`` to
    ``n_c`` concepts of capacity ``s_c`` vertices each.

    Backtracks over the rows for sizes >= 2 (those counts are small); the
    singleton row is then forced by the remaining capacities. Infeasible
    signatures yield an empty stream.
    """
    counts = k.counts
    n_sizes = len(counts)
    rem = [s_c] * n_c
    rows: list[tuple[int, ...]] = [()] * n_sizes

    def rec(size: int) -> Iterator[AdmissibleMatrix]:
        if size == 1:
            forced = tuple(rem)
            if sum(forced) == counts[0]:
                rows[0] = forced
                yield AdmissibleMatrix(tuple(rows))
            return
        caps = [rem[j] // size for j in range(n_c)]
        for row in _capped_compositions(counts[size - 1], caps):
            for j in range(n_c):
                rem[j] -= size * row[j]
            rows[size - 1] = row
            yield from rec(size - 1)
            for j in range(n_c):
                rem[j] += size * row[j]

    yield from rec(n_sizes)
