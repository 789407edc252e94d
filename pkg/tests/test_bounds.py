from fractions import Fraction

import pytest

from longtail_lab.bounds import (
    best_ell,
    error_lower_bound,
    forest_count,
    g_of_signature,
    moment_bound,
    zeta_preimage_count,
)
from longtail_lab.combinatorics import ComponentSignature, enumerate_signatures
from longtail_lab.datamodel import ModelParams
from longtail_lab.graphkernel import f_of_signature

TINY = ModelParams(L=2, n_w=4, n_c=2, R=10, n_spl=2)
HEADLINE = ModelParams(L=9, n_w=150, n_c=5, R=1000, n_spl=6, n_star=1)


class TestForestAndPreimageCounts:
    def test_one_edge_forests_on_four_vertices(self):
        k = ComponentSignature((2, 1, 0))
        assert forest_count(k, 4) == 6  # C(4,2) choices of the edge

    def test_all_singletons_single_forest(self):
        assert forest_count(ComponentSignature((4, 0, 0)), 4) == 1

    def test_cayley_three_vertex_trees(self):
        # one tree on 3 labelled vertices plus a singleton: C(4,3) * 3^1
        assert forest_count(ComponentSignature((1, 0, 1)), 4) == 12

    def test_one_edge_preimages(self):
        # 1! * (C(2,1){1,1} 2 * 4 + C(2,2){2,1} 4 * 1) = 16 + 4
        assert zeta_preimage_count(1, 2, 4) == 20

    def test_empty_graph_preimages_are_diagonal(self):
        assert zeta_preimage_count(0, 2, 4) == 16
        assert zeta_preimage_count(0, 9, 150) == 150**9

    def test_preimage_range_check(self):
        with pytest.raises(ValueError):
            zeta_preimage_count(3, 2, 4)


class TestGOfSignature:
    def test_one_pair_signature(self):
        assert g_of_signature(ComponentSignature((2, 1, 0)), 2, 4) == Fraction(15, 32)

    def test_all_singletons(self):
        # only the all-silent term survives: n_w^L / n_w^{2L}
        assert g_of_signature(ComponentSignature((4, 0, 0)), 2, 4) == Fraction(1, 16)
        sig = ComponentSignature((150,) + (0,) * 9)
        assert g_of_signature(sig, 9, 150) == Fraction(1, 150**9)

    def test_bounded_by_one(self):
        for k in enumerate_signatures(3, 6, 0):
            g = g_of_signature(k, 3, 6)
            assert 0 < g <= 1

    def test_brute_force_pair_mass(self):
        # pairs of 2-word sentences over 4 words whose graph is one edge
        from itertools import product

        from longtail_lab.graphkernel import component_signature, zeta
        import numpy as np

        total = 0
        for x in product(range(1, 5), repeat=2):
            for y in product(range(1, 5), repeat=2):
                sig = component_signature(zeta(np.array(x), np.array(y)), 4, 2)
                if sig.counts == (2, 1, 0):
                    total += 1
        # 6 one-edge forests x 20 preimages each
        assert total == 120
        assert g_of_signature(ComponentSignature((2, 1, 0)), 2, 4) == Fraction(total, 256)


class TestMomentBound:
    def test_empty_family_error(self):
        with pytest.raises(ValueError, match="empty signature"):
            moment_bound(ModelParams(L=9, n_w=4, n_c=2, R=10, n_spl=2), 3, 9)

    def test_soundness_on_small_instance(self):
        from longtail_lab.oracle import build_universe, exact_avg_moment

        p = ModelParams(L=3, n_w=6, n_c=2, R=10, n_spl=2)
        u = build_universe(p)
        exact = exact_avg_moment(u, 3)
        for ell in range(4):
            assert exact <= moment_bound(p, 3, ell)

    def test_fg_sum_monotone_in_ell(self):
        p = HEADLINE
        sums = []
        for ell in range(p.L + 1):
            sums.append(
                sum(
                    f_of_signature(k, p) * g_of_signature(k, p.L, p.n_w)
                    for k in enumerate_signatures(p.L, p.n_w, ell)
                )
            )
        assert all(a >= b for a, b in zip(sums, sums[1:]))


class TestErrorLowerBound:
    def test_headline_value(self):
        report = error_lower_bound(HEADLINE, ell=7)
        assert report.error_lower >= Fraction(984, 1000)
        assert 0 < report.moment_bound <= Fraction(15, 1000)

    def test_matches_direct_formula_at_one_unfamiliar(self):
        # sum f g - (1/R)(1 + max f / 2), evaluated independently
        p = HEADLINE
        ell = 7
        sigs = enumerate_signatures(p.L, p.n_w, ell)
        total_fg = sum(f_of_signature(k, p) * g_of_signature(k, p.L, p.n_w) for k in sigs)
        max_f = max(f_of_signature(k, p) for k in sigs)
        direct = total_fg - Fraction(1, p.R) * (1 + max_f / 2)
        assert error_lower_bound(p, ell=ell, n_star=1).error_lower == direct

    def test_linear_in_n_star(self):
        p = HEADLINE
        reports = [error_lower_bound(p, ell=7, n_star=s) for s in range(1, 6)]
        c = reports[0].moment_bound
        for s, rep in enumerate(reports, start=1):
            assert rep.success_upper - Fraction(1, p.R) == s * c

    def test_n_star_validation(self):
        with pytest.raises(ValueError):
            error_lower_bound(HEADLINE, ell=7, n_star=7)

    def test_float_rendering_clamped(self):
        # a vacuous bound clamps to [0, 1] in the float rendering
        p = ModelParams(L=2, n_w=4, n_c=2, R=2, n_spl=2)
        rep = error_lower_bound(p, ell=0)
        assert rep.error_lower < 0
        assert rep.error_lower_float == 0.0


class TestBestEll:
    def test_headline_sweep(self):
        report = best_ell(HEADLINE)
        assert report.ell == 7
        assert report.error_lower >= Fraction(984, 1000)

    def test_small_vocabulary_sweep(self):
        p = ModelParams(L=9, n_w=50, n_c=5, R=1000, n_spl=6)
        report = best_ell(p)
        fixed = error_lower_bound(p, ell=6)
        assert report.error_lower >= fixed.error_lower
        assert 0 < fixed.moment_bound <= Fraction(73, 1000)

    def test_beats_every_fixed_ell(self):
        p = ModelParams(L=4, n_w=12, n_c=3, R=50, n_spl=2)
        sweep = best_ell(p)
        for ell in range(p.L + 1):
            if enumerate_signatures(p.L, p.n_w, ell):
                assert sweep.error_lower >= error_lower_bound(p, ell).error_lower
