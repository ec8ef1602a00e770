import math

import numpy as np
import pytest

from donsker_forms.errors import ConfigurationError, ValidationError
from donsker_forms.montecarlo import SeedSpec
from donsker_forms.structures import (
    SQRT3,
    CoordinateDraws,
    custom_structure,
    gamma_coordinate,
    get_structure,
    ou_gauss,
    sample_increments,
    sharp_coordinate,
    weighted_uniform,
)


def test_sample_increments_reproducible():
    a = sample_increments(ou_gauss(), 3, SeedSpec(42).generator(0))
    b = sample_increments(ou_gauss(), 3, SeedSpec(42).generator(0))
    assert len(a) == 3
    assert np.array_equal(a.u, b.u) and np.array_equal(a.g_hat, b.g_hat)


def test_stream_never_repeats():
    rng = SeedSpec(42).generator(0)
    a = sample_increments(ou_gauss(), 5, rng)
    b = sample_increments(ou_gauss(), 5, rng)
    assert not np.array_equal(a.u, b.u)


@pytest.mark.parametrize("make", [ou_gauss, weighted_uniform])
def test_large_sample_moments(make):
    es = make()
    n = 10**6
    d = sample_increments(es, n, np.random.default_rng(7))
    assert abs(d.u.mean()) < 4 * math.sqrt(es.sigma2 / n)
    assert abs(d.u.var() - es.sigma2) < 4 * es.sigma2 * math.sqrt(2 / n)
    g = gamma_coordinate(es, d.u)
    assert abs(g.mean() - es.c) <= 4 * math.sqrt(g.var() / n) + 1e-15
    assert abs(d.g_hat.var() - 1) < 4 * math.sqrt(2 / n)
    # copy draws uncorrelated with the coordinates
    assert abs(np.corrcoef(d.u, d.g_hat)[0, 1]) < 4 / math.sqrt(n)


def test_weighted_uniform_support():
    d = sample_increments(weighted_uniform(), 10**6, np.random.default_rng(3))
    assert d.u.min() >= -SQRT3 and d.u.max() <= SQRT3


def test_gamma_coordinate_examples():
    assert gamma_coordinate(ou_gauss(), 0.7) == 1
    assert gamma_coordinate(weighted_uniform(0.5), 0.5) == pytest.approx(1.375, abs=1e-15)
    assert gamma_coordinate(weighted_uniform(), SQRT3) == pytest.approx(0.0, abs=1e-15)


def test_negative_user_gamma_rejected():
    es = custom_structure("bad", lambda r, k: r.standard_normal(k), lambda u: u, 1.0, 1.0)
    with pytest.raises(ValidationError):
        gamma_coordinate(es, np.array([-0.5, 0.2]))


def test_sharp_coordinate_examples():
    one = lambda u: CoordinateDraws(np.array([u]), np.array([1.0]))
    assert sharp_coordinate(ou_gauss(), one(0.3))[0] == 1.0
    assert sharp_coordinate(weighted_uniform(), one(0.5))[0] == pytest.approx(1.17260394, abs=1e-8)
    zero = CoordinateDraws(np.array([0.1, -1.2]), np.zeros(2))
    assert np.all(sharp_coordinate(weighted_uniform(), zero) == 0)


def test_sharp_identity_linear_combination():
    # copy mean of (sum a_k U_k^#)^2 = sum a_k^2 gamma(u_k) = chain-rule Gamma
    rng = np.random.default_rng(11)
    es = weighted_uniform()
    d = sample_increments(es, 50, rng)
    a = rng.normal(size=50)
    sharp_unit = sharp_coordinate(es, CoordinateDraws(d.u, np.ones(50)))
    closed = float(np.sum((a * sharp_unit) ** 2))
    chain = float(np.sum(a * a * gamma_coordinate(es, d.u)))
    assert closed == pytest.approx(chain, rel=1e-12)


def test_bad_stream_and_unknown_structure():
    with pytest.raises(ConfigurationError):
        sample_increments(ou_gauss(), 3, "not a stream")
    with pytest.raises(ConfigurationError):
        get_structure("nope")
    with pytest.raises(ValueError):
        sample_increments(ou_gauss(), 0, np.random.default_rng())


def test_custom_structure_from_import_path():
    es = custom_structure("c", "tests.user_structures:laplace_sampler",
                          "tests.user_structures:unit_gamma", 2.0, 1.0)
    d = sample_increments(es, 10, np.random.default_rng(0))
    assert d.u.shape == (10,)
