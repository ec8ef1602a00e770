import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from donsker_forms.montecarlo import SeedSpec, estimate
from donsker_forms.structures import (
    CoordinateDraws,
    ou_gauss,
    sample_increments,
    weighted_uniform,
)
from donsker_forms.walk import (
    WalkPath,
    build_path,
    coordinate_partials,
    gamma_pair,
    gamma_pair_chain_rule,
    grid_index,
    path_statistics,
)

unit = st.floats(0.0, 1.0, allow_nan=False)


def _path(u, gammas=None):
    u = np.asarray(u, dtype=float)
    return WalkPath.from_increments(u, np.ones_like(u) if gammas is None else gammas)


@st.composite
def walks(draw, max_n=60):
    n = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    es = draw(st.sampled_from([ou_gauss(), weighted_uniform()]))
    return build_path(sample_increments(es, n, np.random.default_rng(seed)), es)[0]


def test_build_path_example():
    path = _path([1, -1])
    assert np.allclose(path.partial_sums_scaled, [0, 1 / math.sqrt(2), 0], atol=1e-15)


def test_zero_draws_give_zero_paths():
    draws = CoordinateDraws(np.zeros(4), np.zeros(4))
    path, sharp = build_path(draws, ou_gauss())
    assert not path.values.any() and not sharp.values.any()
    with pytest.raises(ValueError):
        build_path(CoordinateDraws(np.empty(0), np.empty(0)), ou_gauss())


def test_sharp_path_vanishes_without_copy_noise():
    draws = sample_increments(weighted_uniform(), 7, np.random.default_rng(1))
    draws = CoordinateDraws(draws.u, np.zeros(7))
    _, sharp = build_path(draws, weighted_uniform())
    assert not sharp.values.any()


def test_eval_examples():
    path = _path([1, -1])
    assert path.eval(0.25) == pytest.approx(0.5 / math.sqrt(2), abs=1e-15)
    assert path.eval(0.0) == 0.0
    rng_path = _path(np.random.default_rng(0).normal(size=13))
    for k in range(14):
        assert rng_path.eval(k / 13) == rng_path.values[k]
    with pytest.raises(ValueError):
        path.eval(1.5)


def test_grid_index_endpoint():
    k, frac = grid_index(5, 1.0)
    assert (int(k), float(frac)) == (5, 0.0)


@given(walks())
def test_path_invariants(path):
    assert path.values[0] == 0
    assert np.allclose(np.diff(path.values), path.increments / math.sqrt(path.n), atol=1e-12)
    assert np.all(path.gammas >= 0)


def test_gamma_pair_examples():
    assert gamma_pair(_path([0.3, -2.0]), 1, 1) == 1
    assert gamma_pair(_path([1, 2, 3]), 0.5, 0.9) == pytest.approx(0.5, abs=1e-15)
    assert gamma_pair(_path([1, 2, 3, 4]), 0.625, 0.625) == pytest.approx(0.5625, abs=1e-15)


@given(walks(), unit, unit)
def test_gamma_pair_symmetric_and_chain_rule(path, s, t):
    a = gamma_pair(path, s, t)
    assert a == gamma_pair(path, t, s)
    assert a == pytest.approx(gamma_pair_chain_rule(path, s, t), rel=1e-12, abs=1e-300)


@given(walks(), unit, unit)
def test_sharp_closed_form_matches_gamma_pair(path, s, t):
    a, b = coordinate_partials(path.n, s), coordinate_partials(path.n, t)
    # copy mean of X^#(s) X^#(t) with U^# = sqrt(gamma) G_hat
    closed = float(np.sum((a * np.sqrt(path.gammas)) * (b * np.sqrt(path.gammas))))
    assert closed == pytest.approx(gamma_pair(path, s, t), rel=1e-12, abs=1e-300)


@given(st.integers(1, 40), st.lists(unit, min_size=2, max_size=10))
def test_diagonal_nondecreasing_for_constant_gamma(n, times):
    path = _path(np.random.default_rng(n).normal(size=n))
    times = sorted(times)
    diag = [gamma_pair(path, t, t) for t in times]
    assert all(d >= 0 for d in diag)
    assert all(b >= a - 1e-15 for a, b in zip(diag, diag[1:]))


def test_gamma_pair_lln_limit():
    es = weighted_uniform()
    s, t = 0.3, 0.7

    def sampler(rng):
        path, _ = build_path(sample_increments(es, 10_000, rng), es)
        return gamma_pair(path, s, t)

    rep = estimate(sampler, 400, SeedSpec(5, 1))
    assert rep.within(min(s, t) * es.c, 3.0)
    # the spread itself shrinks like n^(-1/2)
    assert rep.stderr < 0.01


def test_path_statistics_examples():
    st_ = path_statistics(_path([1, -1]))
    assert st_.max == pytest.approx(1 / math.sqrt(2)) and st_.argmax_t == 0.5
    zero = path_statistics(_path([0.0, 0.0, 0.0]))
    assert zero.max == 0 and zero.argmax_t == 0
    neg = path_statistics(_path([-1, -1]))
    assert neg.max == 0 and neg.argmax_t == 0
    assert neg.sup_norm == pytest.approx(2 / math.sqrt(2)) and neg.argmax_abs_t == 1


@settings(max_examples=50)
@given(walks())
def test_extrema_attained_at_nodes(path):
    fine = path.eval(np.linspace(0, 1, 4 * path.n + 1))
    st_ = path_statistics(path)
    assert fine.max() <= st_.max + 1e-12
    assert np.abs(fine).max() <= st_.sup_norm + 1e-12
