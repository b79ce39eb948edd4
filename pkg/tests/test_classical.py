"""Unit tests for the classical random-walk reference model."""

from fractions import Fraction

import numpy as np
import pytest

import oracles
from quenchwalk import ValidationError, classical


# ---------------------------------------------------------------------------
# free walker


def test_free_distribution_first_steps():
    assert classical.free_distribution(1).probs == pytest.approx({-1: 0.5, 1: 0.5})
    assert classical.free_distribution(2).probs == pytest.approx({-2: 0.25, 0: 0.5, 2: 0.25})


def test_free_distribution_is_normalized():
    assert classical.free_distribution(1000).total() == pytest.approx(1.0, abs=1e-12)


def test_free_distribution_matches_exact_fractions():
    for t in (3, 7, 16):
        exact = {x: float(p) for x, p in oracles.exact_free_distribution(t).items()}
        assert classical.free_distribution(t).probs == pytest.approx(exact, abs=1e-14)


def test_free_distribution_rejects_negative_time():
    with pytest.raises(ValidationError):
        classical.free_distribution(-1)


# ---------------------------------------------------------------------------
# first passage


def test_first_passage_small_values():
    assert classical.first_passage_closed_form(1, 1) == pytest.approx(0.5)
    assert classical.first_passage_closed_form(1, 3) == pytest.approx(0.125)
    assert classical.first_passage_closed_form(2, 1) == 0.0
    # wrong parity is impossible
    assert classical.first_passage_closed_form(1, 2) == 0.0


def test_first_passage_dp_matches_closed_form():
    for site in (1, 2, 5, 10):
        series = classical.first_passage(site, 2000)
        ts = np.arange(2001)
        closed = classical.first_passage_closed_form(site, ts)
        assert np.max(np.abs(series.values - closed)) <= 1e-12


def test_first_passage_dp_matches_exact_rational_dp():
    for site in (1, 3):
        series = classical.first_passage(site, 60)
        exact = oracles.exact_first_passage_dp(site, 60)
        diffs = [abs(series.values[t] - float(exact[t])) for t in range(61)]
        assert max(diffs) <= 1e-15


def test_closed_form_equals_reflection_oracle():
    for site in (1, 2, 4):
        for t in range(0, 30):
            got = classical.first_passage_closed_form(site, t)
            assert got == pytest.approx(float(oracles.exact_first_passage(site, t)), abs=1e-15)


def test_path_enumeration_equivalence():
    # brute force over all 2^t walks of length <= 12
    for site in (1, 2, 3):
        fp, surv = oracles.enumerate_paths(site, 12)
        series = classical.first_passage(site, 12)
        for t in range(13):
            assert series.values[t] == pytest.approx(float(fp[t]), abs=1e-15)
        got_surv = classical.survival_series(site, 12)
        for t in range(13):
            assert got_surv[t] == pytest.approx(float(surv[t]), abs=1e-15)


def test_survival_is_one_minus_cumulative_first_passage():
    series = classical.first_passage(4, 500)
    surv = classical.survival_series(4, 500)
    np.testing.assert_allclose(surv, 1.0 - series.cumulative(), atol=1e-15)


def test_site_validation():
    with pytest.raises(ValidationError):
        classical.first_passage(0, 10)
    with pytest.raises(ValidationError):
        classical.quenched_ratio(-3, 10)


# ---------------------------------------------------------------------------
# quenched ratios


def test_quenched_ratio_simplest_case():
    # one active step at the adjacent site removes exactly half the walkers
    assert classical.quenched_ratio(1, 1) == pytest.approx(0.5, abs=1e-15)


def test_quenched_ratio_is_one_before_contact():
    for site, removal in ((5, 4), (10, 9), (3, 1)):
        assert classical.quenched_ratio(site, removal) == 1.0


def test_quenched_ratio_below_one_after_contact():
    for site, removal in ((1, 1), (5, 5), (5, 50), (10, 1000)):
        assert classical.quenched_ratio(site, removal) < 1.0


def test_quenched_ratio_decreases_with_removal_time():
    vals = [classical.quenched_ratio(5, tr) for tr in (10, 30, 100, 300, 1000)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_quenched_exact_with_no_detector_is_free():
    for dist in classical.quenched_exact(5, 0, 20):
        free = classical.free_distribution(dist.t)
        assert dist.probs == pytest.approx(free.probs, abs=1e-14)
        assert dist.absorbed == 0.0


def test_quenched_exact_bookkeeping():
    site, removal, t_max = 3, 12, 40
    dists = classical.quenched_exact(site, removal, t_max)
    fp = classical.first_passage(site, t_max)
    for dist in dists:
        # all probability is either on the lattice or absorbed
        assert dist.total() + dist.absorbed == pytest.approx(1.0, abs=1e-12)
        if dist.t <= removal:
            assert dist.probs.get(site, 0.0) == 0.0
    # absorbed mass at the removal step is the cumulative first passage
    at_removal = dists[removal]
    assert at_removal.absorbed == pytest.approx(float(fp.cumulative()[removal]), abs=1e-12)
    assert 1.0 - at_removal.absorbed == pytest.approx(
        classical.quenched_ratio(site, removal), abs=1e-12
    )


def test_factorized_quenched_scales_the_free_profile():
    site, removal, t = 4, 30, 200
    dist = classical.factorized_quenched(site, removal, t)
    ratio = classical.quenched_ratio(site, removal)
    free = classical.free_distribution(t)
    for x, p in dist.probs.items():
        assert p == pytest.approx(ratio * free.probs[x], abs=1e-15)
    assert dist.absorbed == pytest.approx(1.0 - ratio, abs=1e-12)


def test_correlation_ratio_is_squared_persistence():
    for site, removal in ((1, 1), (5, 40), (10, 500)):
        ratio = classical.quenched_ratio(site, removal)
        assert classical.correlation_ratio(site, removal) == pytest.approx(ratio**2, abs=1e-15)
    assert classical.correlation_ratio(1, 1) == pytest.approx(0.25, abs=1e-15)
    assert classical.correlation_ratio(5, 4) == 1.0
