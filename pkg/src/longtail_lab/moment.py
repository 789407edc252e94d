"""Permuted moment of a non-negative weight vector and its elementary bounds.

The t-th permuted moment pairs the sorted weights with the grid (i/N)^t,
i = 0..N-1; sorting ascending realizes the maximum over all pairings. It acts
like a negative entropy: large for peaked probability vectors, small for
spread ones.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np


def permuted_moment(u: Sequence[float] | np.ndarray, t: int) -> float:
    """Max over permutations sigma of sum_i (i/N)^t u_{sigma(i)}, computed by
    sorting the entries ascending."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    v = np.asarray(u, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("input must be a non-empty 1-D vector")
    if np.any(v < 0):
        raise ValueError("entries must be non-negative")
    n = v.size
    weights = (np.arange(n) / n) ** t if t > 0 else np.ones(n)
    return float(np.sort(v) @ weights)


def permuted_moment_exact(u: Sequence[Fraction | int], t: int) -> Fraction:
    """Exact-rational permuted moment; used for oracle equality checks on
    tiny instances."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    v = sorted(Fraction(x) for x in u)
    if not v:
        raise ValueError("input must be non-empty")
    if v[0] < 0:
        raise ValueError("entries must be non-negative")
    n = len(v)
    if t == 0:
        return sum(v, Fraction(0))
    return sum((Fraction(i, n) ** t * p for i, p in enumerate(v)), Fraction(0))


def lambda_moment_bound(
    p: Sequence[float] | np.ndarray, t: int, lam: float
) -> float:
    """Clipping bound for probability vectors:
    H_t(p) <= (1 - sum_i min(p_i, lam)) + lam N / (t + 1)."""
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    v = np.asarray(p, dtype=np.float64)
    if np.any(v < 0) or not np.isclose(v.sum(), 1.0, atol=1e-9):
        raise ValueError("input must be a probability vector")
    n = v.size
    return float(1.0 - np.minimum(v, lam).sum() + lam * n / (t + 1))
