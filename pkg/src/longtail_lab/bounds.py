"""Exact evaluation of the generalization lower bound.

The averaged permuted moment of the optimal kernel is bounded by
(1 - sum_{k in S_ell} f(k) g(k)) + max_{k in S_ell} f(k) / (t+1), where f is
the level-set kernel value and g lower-bounds the probability mass of the
level set via its forest subfamily. The success-rate bound follows with
t = 2R - 1, scaled by the number of unfamiliar training representatives.

All arithmetic is rational; floats appear only in report rendering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .combinatorics import (
    ComponentSignature,
    enumerate_signatures,
    stirling2_or_zero,
)
from .datamodel import ModelParams
from .graphkernel import f_of_signature


def forest_count(k: ComponentSignature, n_w: int) -> int:
    """Number of forests on n_w labelled vertices whose tree sizes realize
    the histogram k: the multinomial split of the vertices times i^(i-2)
    labelled trees per size-i part (Cayley)."""
    if k.ghat != n_w:
        raise ValueError(f"signature accounts for {k.ghat} vertices, expected {n_w}")
    total = Fraction(math.factorial(n_w))
    for i, c in enumerate(k.counts, start=1):
        total /= math.factorial(c)
        if i >= 2 and c:
            total *= Fraction(i ** ((i - 2) * c), math.factorial(i) ** c)
    assert total.denominator == 1, "forest count must be integral"
    return total.numerator


def zeta_preimage_count(m: int, L: int, n_w: int) -> int:
    """Number of sentence pairs mapping to a fixed m-edge graph:
    m! * sum_{a=m}^{L} C(L,a) {a,m} 2^a n_w^(L-a).

    At m = 0 only the all-silent term survives ({0,0} = 1), giving n_w^L
    diagonal pairs.
    """
    if m < 0 or m > L:
        raise ValueError(f"edge count m={m} outside 0..{L}")
    total = 0
    for a in range(m, L + 1):
        total += math.comb(L, a) * stirling2_or_zero(a, m) * 2**a * n_w ** (L - a)
    return math.factorial(m) * total


def g_of_signature(k: ComponentSignature, L: int, n_w: int) -> Fraction:
    """Lower bound on the fraction of sentence pairs whose graph has
    signature k: (forests with this histogram) x (preimages per m-edge
    graph) / n_w^(2L), with m = gamma(k)."""
    m = k.gamma
    if m > L:
        raise ValueError(f"gamma(k)={m} exceeds L={L}")
    return Fraction(
        forest_count(k, n_w) * zeta_preimage_count(m, L, n_w), n_w ** (2 * L)
    )


def moment_bound(params: ModelParams, t: int, ell: int) -> Fraction:
    """Exact upper bound on the averaged t-th permuted moment of the optimal
    kernel: (1 - sum_{k in S_ell} f g) + max_{k in S_ell} f / (t+1)."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    sigs = enumerate_signatures(params.L, params.n_w, ell)
    if not sigs:
        raise ValueError(
            f"empty signature set for ell={ell} (L={params.L}, n_w={params.n_w})"
        )
    total_fg = Fraction(0)
    max_f = Fraction(0)
    for k in sigs:
        f = f_of_signature(k, params)
        total_fg += f * g_of_signature(k, params.L, params.n_w)
        if f > max_f:
            max_f = f
    return (1 - total_fg) + Fraction(1, t + 1) * max_f


def _clamp01(x: Fraction) -> float:
    return float(min(max(x, Fraction(0)), Fraction(1)))


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound: the signature family cutoff, the exact moment
    bound, and the derived success/error bounds."""

    params: ModelParams
    ell: int
    n_star: int
    moment_bound: Fraction
    success_upper: Fraction
    error_lower: Fraction
    signature_count: int

    @property
    def success_upper_float(self) -> float:
        """success_upper clamped to [0, 1] and rendered as a float."""
        return _clamp01(self.success_upper)

    @property
    def error_lower_float(self) -> float:
        """error_lower clamped to [0, 1] and rendered as a float."""
        return _clamp01(self.error_lower)


def error_lower_bound(
    params: ModelParams, ell: int, n_star: int | None = None
) -> BoundReport:
    """Lower bound on the expected error of any fixed feature map with a
    nearest-neighbor rule: 1 - [n_star * moment_bound(t=2R-1) + 1/R].

    With n_star = 1 this equals sum f g - (1/R)(1 + max f / 2) exactly.
    """
    if n_star is None:
        n_star = params.n_star
    if not (1 <= n_star <= params.n_spl):
        raise ValueError(f"n_star={n_star} outside 1..{params.n_spl}")
    mb = moment_bound(params, 2 * params.R - 1, ell)
    success_upper = n_star * mb + Fraction(1, params.R)
    return BoundReport(
        params=params,
        ell=ell,
        n_star=n_star,
        moment_bound=mb,
        success_upper=success_upper,
        error_lower=1 - success_upper,
        signature_count=len(enumerate_signatures(params.L, params.n_w, ell)),
    )


def best_ell(params: ModelParams, n_star: int | None = None) -> BoundReport:
    """Sweep ell = 0..L over non-empty signature families and return the
    report with the largest error lower bound (ties -> smaller ell)."""
    best: BoundReport | None = None
    for ell in range(params.L + 1):
        if not enumerate_signatures(params.L, params.n_w, ell):
            continue
        report = error_lower_bound(params, ell, n_star)
        if best is None or report.error_lower > best.error_lower:
            best = report
    if best is None:
        raise ValueError("no ell yields a non-empty signature family")
    return best
