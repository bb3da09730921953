import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsebf.admm import AdmmConfig
from sparsebf.beamformer import output_sinr, reduced_mvdr
from sparsebf.numerics import ValidationError
from sparsebf.selection import (
    Geometry,
    SelectionReport,
    count_active,
    enumerate_all,
    fixed_geometry,
    geometry_report,
    select_support,
    tune_lambda,
)
from sparsebf.signal_model import Scenario, data_covariance_true, generate_snapshots, sample_covariance


def test_count_active():
    assert count_active([1.0, 0.2, 0.05, 0.0]) == 2
    assert count_active(np.zeros(4)) == 0
    assert count_active([1.0, 0.1]) == 1  # strict inequality
    with pytest.raises(ValidationError):
        count_active([1.0], alpha=1.5)


def test_select_support_ties_prefer_lower_index():
    assert select_support([1.0, 3.0, 1.0, 1.0], 2) == (0, 1)
    assert select_support([0.1, 0.9j, -0.5, 0.2], 2) == (1, 2)
    with pytest.raises(ValidationError):
        select_support([1.0], 2)


def test_report_sorts_and_rejects_duplicates():
    rep = SelectionReport((3, 1), 0.0, 0, None, 0.0)
    assert rep.support == (1, 3)
    with pytest.raises(ValidationError):
        SelectionReport((1, 1), 0.0, 0, None, 0.0)


@pytest.mark.parametrize("kind,expected", [
    (Geometry.COMPACT, (0, 1, 2, 3)),
    (Geometry.SPARSE_ULA, (0, 2, 4, 6)),
    (Geometry.NESTED, (0, 1, 2, 5)),
    (Geometry.COPRIME, (0, 2, 3, 4)),
])
def test_geometry_golden_sets(kind, expected):
    assert fixed_geometry(kind, 12, 4) == expected


def test_geometry_unrealizable_and_random():
    with pytest.raises(ValidationError):
        fixed_geometry(Geometry.SPARSE_ULA, 12, 8)
    with pytest.raises(ValidationError):
        fixed_geometry(Geometry.RANDOM, 12, 4)
    a = fixed_geometry(Geometry.RANDOM, 12, 4, seed=5)
    assert a == fixed_geometry(Geometry.RANDOM, 12, 4, seed=5)
    assert len(set(a)) == 4 and max(a) < 12


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12))
def test_coprime_and_nested_sizes(L):
    for kind in (Geometry.NESTED, Geometry.COPRIME):
        try:
            sup = fixed_geometry(kind, 200, L)
        except ValidationError:
            continue
        assert len(sup) == L and len(set(sup)) == L


def test_enumeration_count_and_extremes(sixth_example):
    R = data_covariance_true(sixth_example)
    best, worst = enumerate_all(sixth_example, R, 4)
    assert best.search_iters == math.comb(12, 4) == 495
    # oracle: loop over every support with the single-weight path
    vals = {sup: output_sinr(reduced_mvdr(sup, sixth_example, R), sixth_example)
            for sup in itertools.combinations(range(12), 4)}
    assert best.sinr_db == pytest.approx(max(vals.values()), abs=1e-9)
    assert worst.sinr_db == pytest.approx(min(vals.values()), abs=1e-9)
    assert vals[best.support] == pytest.approx(best.sinr_db, abs=1e-9)


def test_enumeration_cap(first_example):
    with pytest.raises(ValidationError):
        enumerate_all(first_example, data_covariance_true(first_example), 6, cap=100)


def test_enumeration_tie_goes_to_first():
    # white noise only: every pair with the same spread ties; lexicographic first wins
    s = Scenario.from_db(4, 0.0, 0.0)
    best, worst = enumerate_all(s, data_covariance_true(s), 2)
    assert best.support == (0, 1)


def test_tune_lambda_hits_target(first_example, quiet_rho):
    R = sample_covariance(generate_snapshots(first_example, 100, 0))
    cfg = AdmmConfig(lam=1.0, rho=2e4)
    for L in (1, 4, 8, 11):
        rep = tune_lambda(L, None, cfg, R, first_example.steering(), scenario=first_example)
        assert len(rep.support) == L
        assert rep.active_count == L and not rep.fallback
        assert rep.lambda_used > 0 and np.isfinite(rep.sinr_db)


def test_tune_lambda_full_array_shortcut(first_example):
    R = data_covariance_true(first_example)
    rep = tune_lambda(12, None, AdmmConfig(lam=1.0), R, first_example.steering())
    assert rep.support == tuple(range(12)) and rep.search_iters == 1 and np.isnan(rep.sinr_db)


def test_tune_lambda_fallback_reports(first_example, quiet_rho):
    R = data_covariance_true(first_example)
    rep = tune_lambda(5, (1e-3, 1e-2), AdmmConfig(lam=1.0, rho=1e3), R, first_example.steering(),
                      max_search_iters=3)
    assert len(rep.support) == 5
    if rep.active_count != 5:
        assert rep.fallback and rep.search_iters == 3


def test_tune_lambda_validation(first_example):
    R = data_covariance_true(first_example)
    with pytest.raises(ValidationError):
        tune_lambda(0, None, AdmmConfig(lam=1.0), R, first_example.steering())
    with pytest.raises(ValidationError):
        tune_lambda(3, (2.0, 1.0), AdmmConfig(lam=1.0), R, first_example.steering())


def test_geometry_report(sixth_example):
    R = data_covariance_true(sixth_example)
    rep = geometry_report(Geometry.NESTED, sixth_example, R, 4)
    assert rep.support == (0, 1, 2, 5) and rep.method == "Nested"
