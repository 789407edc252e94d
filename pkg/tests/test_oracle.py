from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from longtail_lab.bounds import moment_bound
from longtail_lab.datamodel import ModelParams, make_rng
from longtail_lab.graphkernel import kstar
from longtail_lab.moment import permuted_moment_exact
from longtail_lab.oracle import (
    build_universe,
    exact_avg_moment,
    kstar_direct,
    kstar_row_direct,
    read_goldens,
    verify_beautiful,
    verify_structure_counts,
    write_goldens,
)

TINY = ModelParams(L=2, n_w=4, n_c=2, R=10, n_spl=2)
GOLDENS = Path(__file__).parent / "goldens" / "tiny_universe.txt"


@pytest.fixture(scope="module")
def universe():
    return build_universe(TINY)


class TestUniverse:
    def test_counts(self, universe):
        assert universe.size == 16
        assert len(universe.phis) == 6

    def test_sentences_lexicographic(self, universe):
        flat = [tuple(s) for s in universe.sentences]
        assert flat == sorted(flat)

    def test_size_caps(self):
        with pytest.raises(ValueError, match="too large"):
            build_universe(ModelParams(L=9, n_w=150, n_c=5, R=10, n_spl=2))
        with pytest.raises(ValueError, match="too large"):
            build_universe(TINY, max_sentences=8)


class TestKernelEquality:
    def test_direct_equals_level_set_on_all_pairs(self, universe):
        for i in range(universe.size):
            row = kstar_row_direct(i, universe)
            for j in range(universe.size):
                assert row[j] == kstar(
                    universe.sentences[i], universe.sentences[j], TINY
                )

    def test_rows_sum_to_one_exactly(self, universe):
        for i in range(universe.size):
            assert sum(kstar_row_direct(i, universe), Fraction(0)) == 1

    def test_self_value(self, universe):
        x = universe.sentences[5]
        assert kstar_direct(x, x, universe) == Fraction(1, TINY.s_c**TINY.L)

    def test_row_matches_pointwise_direct(self, universe):
        row = kstar_row_direct(3, universe)
        for j in (0, 7, 15):
            assert row[j] == kstar_direct(
                universe.sentences[3], universe.sentences[j], universe
            )


class TestExactAvgMoment:
    def test_t_zero_is_one(self, universe):
        assert exact_avg_moment(universe, 0) == 1

    def test_matches_goldens(self, universe):
        with open(GOLDENS, encoding="utf-8") as fp:
            goldens = read_goldens(fp)
        for t in (0, 1, 3, 7, 1999):
            assert exact_avg_moment(universe, t) == goldens[f"exact_avg_moment_t{t}"]

    def test_write_read_round_trip(self, universe, tmp_path):
        path = tmp_path / "goldens.txt"
        with open(path, "w", encoding="utf-8") as fp:
            write_goldens(universe, ts=[1, 3], fp=fp)
        with open(path, encoding="utf-8") as fp:
            parsed = read_goldens(fp)
        assert parsed["exact_avg_moment_t1"] == exact_avg_moment(universe, 1)

    def test_below_moment_bound_for_every_ell(self, universe):
        for t in (1, 3, 7):
            exact = exact_avg_moment(universe, t)
            for ell in (0, 1, 2):
                assert exact <= moment_bound(TINY, t, ell)

    def test_consistent_with_row_moments(self, universe):
        t = 3
        total = sum(
            permuted_moment_exact(kstar_row_direct(i, universe), t)
            for i in range(universe.size)
        )
        assert exact_avg_moment(universe, t) == total / universe.size


class TestVerifyBeautiful:
    def test_matches_exact_moment(self, universe):
        report = verify_beautiful(universe, t=3, mc_trials=60_000, seed=21)
        assert report.passed, report

    def test_smallest_t(self, universe):
        report = verify_beautiful(universe, t=1, mc_trials=60_000, seed=22)
        assert report.passed, report

    def test_arbitrary_kernel_is_dominated(self, universe):
        # any symmetric kernel's success rate stays below the exact optimum
        rng = make_rng(23, 0)
        raw = rng.uniform(0, 1, size=(universe.size, universe.size))
        arbitrary = (raw + raw.T) / 2
        report = verify_beautiful(
            universe, t=3, mc_trials=60_000, seed=23, kernel_matrix=arbitrary
        )
        sigma = float(np.sqrt(float(report.exact) * (1 - float(report.exact)) / report.trials))
        assert report.estimate <= float(report.exact) + 4 * sigma

    def test_rejects_t_zero(self, universe):
        with pytest.raises(ValueError):
            verify_beautiful(universe, t=0, mc_trials=10, seed=1)


class TestStructureCounts:
    def test_tiny_instance(self, universe):
        report = verify_structure_counts(universe)
        assert report.passed
        assert report.pairs == 256
        assert report.graphs == 22  # empty + 6 one-edge + 15 two-edge

    def test_medium_instance(self):
        p = ModelParams(L=3, n_w=6, n_c=2, R=10, n_spl=2)
        report = verify_structure_counts(build_universe(p))
        assert report.passed
        assert report.pairs == 216**2
        assert report.graphs == 1 + 15 + 105 + 455
