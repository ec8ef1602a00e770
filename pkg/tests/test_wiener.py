import math

import numpy as np
import pytest
from scipy import stats

from donsker_forms.functionals import CylindricalFunctional, coordinate, max_functional, supnorm_functional
from donsker_forms.montecarlo import SeedSpec, estimate, estimate_many
from donsker_forms.walk import GridPath
from donsker_forms.wiener import (
    BrownianGrid,
    argmax_times,
    gamma0_cylindrical,
    gamma0_first_chaos,
    gamma0_integral_form,
    gamma0_lemma2,
    prop2_integrand,
    prop2_limit,
    sample_brownian,
    sharp_brownian,
)

E_COS2_N = (1 + math.exp(-2)) / 2


def test_sample_brownian_basics():
    b = sample_brownian(1.0, 1.0, 1, SeedSpec(4).generator(0))
    assert b.values[0] == 0 and len(b.values) == 2
    again = sample_brownian(1.0, 1.0, 1, SeedSpec(4).generator(0))
    assert np.array_equal(b.values, again.values)
    with pytest.raises(ValueError):
        sample_brownian(1.0, 1.0, 0, np.random.default_rng())


def test_endpoint_variance_and_increments():
    sigma = 1.7
    rep = estimate(lambda rng: sample_brownian(sigma, 1.0, 8, rng).values[-1] ** 2, 100_000, SeedSpec(1))
    assert rep.within(sigma**2, 4.0)
    b = sample_brownian(sigma, 1.0, 50_000, np.random.default_rng(2))
    inc = np.diff(b.values) / (sigma / math.sqrt(50_000))
    assert stats.kstest(inc, "norm").pvalue > 1e-3


def test_first_chaos():
    assert gamma0_first_chaos([0, 1], [1.0]) == 1.0
    assert gamma0_first_chaos([0, 0.5, 1], [1.0, 0.0]) == 0.5
    steps = np.linspace(0, 1, 1001)
    assert gamma0_first_chaos(steps, steps[:-1]) == pytest.approx(1 / 3, abs=1e-3)
    assert gamma0_first_chaos([0, 1], [2.0], c=0.5) == 2.0


def test_gamma0_cylindrical_examples():
    b = sample_brownian(1.0, 1.3, 64, np.random.default_rng(0))
    endpoint = CylindricalFunctional((1.0,), lambda x: x[0], np.ones_like)
    assert gamma0_cylindrical(endpoint, b) == pytest.approx(1.3)
    s, t = 0.25, 0.75
    pair = CylindricalFunctional((s, t), lambda x: x.sum(), np.ones_like)
    assert gamma0_cylindrical(pair, b) == pytest.approx(1.3 * (3 * s + t))
    assert gamma0_lemma2(pair.functional(), b) == pytest.approx(1.3 * (3 * s + t))


def test_gamma0_cylindrical_sin_mean():
    sin1 = CylindricalFunctional((1.0,), lambda x: math.sin(x[0]), np.cos)
    rep = estimate(lambda rng: gamma0_cylindrical(sin1, sample_brownian(1.0, 1.0, 16, rng)),
                   20_000, SeedSpec(3))
    assert rep.within(E_COS2_N, 3.0)


def test_lemma2_agrees_with_cylindrical_and_integral_form():
    rng = np.random.default_rng(5)
    for _ in range(100):
        b = sample_brownian(0.8, 1.4, 100, rng)
        times = tuple(np.sort(rng.choice(101, 4, replace=False)) / 100)
        cyl = CylindricalFunctional(times, lambda x: float(np.sum(x**3)), lambda x: 3 * x**2)
        a = gamma0_cylindrical(cyl, b)
        assert gamma0_lemma2(cyl.functional(), b) == pytest.approx(a, rel=1e-12, abs=1e-300)
        mu = cyl.functional().derivative(b)
        assert gamma0_integral_form(mu, b.c) == pytest.approx(a, rel=1e-12, abs=1e-300)


def test_argmax_times():
    mono = BrownianGrid(np.arange(11.0))
    assert argmax_times(mono) == (1.0, 1.0)
    b = BrownianGrid(np.array([0.0, 1.0, -3.0, 0.5]))
    assert argmax_times(b) == (1 / 3, 2 / 3)


def test_gamma0_of_max_and_supnorm_are_argmax_times():
    b = sample_brownian(1.0, 1.0, 500, np.random.default_rng(1))
    sig, tau = argmax_times(b)
    assert gamma0_lemma2(max_functional(), b) == sig
    assert gamma0_lemma2(supnorm_functional(), b) == tau
    assert gamma0_lemma2(coordinate(1.0), b) == 1.0


def test_sigma_mean_and_symmetry():
    sig = np.array([argmax_times(sample_brownian(1.0, 1.0, 256, SeedSpec(11).generator(i)))[0]
                    for i in range(100_000)])
    se = sig.std() / math.sqrt(len(sig))
    assert abs(sig.mean() - 0.5) < 3 * se
    assert abs((sig <= 0.5).mean() - 0.5) < 3 * 0.5 / math.sqrt(len(sig)) + 1 / 256
    assert stats.ks_2samp(sig, 1 - sig).pvalue > 1e-3


def test_tau_grid_resolution_stability():
    def tau(m):
        return estimate(lambda rng: argmax_times(sample_brownian(1.0, 1.0, m, rng))[1], 1500, SeedSpec(21, m))

    a, b = tau(10_000), tau(20_000)
    assert abs(a.mean - b.mean) < 3 * math.hypot(a.stderr, b.stderr)


def test_sharp_brownian_copy_variance():
    sigma, c = 2.0, 0.7
    b = sample_brownian(sigma, c, 10, np.random.default_rng(0))
    t = 0.6

    def sampler(rng):
        b_hat = sample_brownian(sigma, c, 10, rng)
        return sharp_brownian(b, b_hat).eval(t) ** 2

    rep = estimate(sampler, 40_000, SeedSpec(6))
    assert rep.within(c * t, 4.0)
    # closed form: (sqrt(c)/sigma)^2 * sigma^2 t
    assert (math.sqrt(c) / sigma) ** 2 * sigma**2 * t == pytest.approx(c * t)


def test_prop2_limit_single_argument_maps():
    seed = SeedSpec(31)
    a_chain = prop2_limit(lambda z: np.array([1.0, 0.0]), 4000, seed, m=500)
    a_disp = prop2_limit(lambda z: np.array([1.0, 0.0]), 4000, seed, m=500, form="displayed")
    b_chain = prop2_limit(lambda z: np.array([0.0, 1.0]), 4000, seed, m=500)
    # chain rule: Gamma_0[max] = Sigma; as displayed, the first slot pairs with Tau
    assert a_chain.within(0.5, 3.0)
    assert a_disp.mean == b_chain.mean
    assert a_disp.mean > 0.65


def test_prop2_integrand_sign_term():
    b = BrownianGrid(np.array([0.0, 0.5, -1.0, 0.2]))
    grad = lambda z: np.array([1.0, 1.0])
    sig, tau = 1 / 3, 2 / 3
    assert prop2_integrand(grad, b) == pytest.approx(sig + tau - 2 * min(sig, tau))
    assert prop2_integrand(grad, b, "displayed") == pytest.approx(sig + tau + 2 * min(sig, tau))
    with pytest.raises(ValueError):
        prop2_integrand(grad, b, "other")
