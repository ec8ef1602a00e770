"""Exact invariants checked in a few seconds, reported by name."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from .config import ExperimentConfig
from .functionals import (
    CylindricalFunctional,
    DiscreteMeasure,
    PathFunctional,
    gamma_of_functional,
    sharp_copy_expectation,
)
from .montecarlo import ExactSum, SeedSpec, eq4_bound, estimate_many
from .oracle import FixtureError, load_fixtures
from .structures import ou_gauss, sample_increments, weighted_uniform
from .walk import build_path, gamma_pair, gamma_pair_chain_rule
from .wiener import gamma0_cylindrical, gamma0_integral_form, gamma0_lemma2, sample_brownian


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


def _random_paths(rng, count, sizes=(10, 100, 1000)):
    for i in range(count):
        es = (ou_gauss(), weighted_uniform())[i % 2]
        n = int(rng.choice(sizes))
        draws = sample_increments(es, n, rng)
        yield build_path(draws, es)


def random_atomic_functional(rng, max_atoms=6) -> PathFunctional:
    """A functional whose derivative is a fixed random atomic measure."""
    p = int(rng.integers(1, max_atoms + 1))
    mu = DiscreteMeasure(rng.uniform(0, 1, p), rng.normal(size=p))
    return PathFunctional(mu.pair, lambda path: mu, mu.total_mass, "random_atomic")


def check_eq2(rng) -> str:
    worst = 0.0
    for path, _ in _random_paths(rng, 200):
        s, t = rng.uniform(0, 1, 2)
        a, b = gamma_pair(path, s, t), gamma_pair_chain_rule(path, s, t)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    assert worst <= 1e-12, f"relative gap {worst:.3g}"
    return f"max rel gap {worst:.2g}"


def check_sharp_identity(rng) -> str:
    worst = 0.0
    for path, _ in _random_paths(rng, 200):
        F = random_atomic_functional(rng)
        a, b = gamma_of_functional(F, path), sharp_copy_expectation(F, path)
        worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-300))
    assert worst <= 1e-12, f"relative gap {worst:.3g}"
    return f"max rel gap {worst:.2g}"


def check_gamma0_agreement(rng) -> str:
    worst = 0.0
    for _ in range(50):
        b = sample_brownian(1.0, float(rng.uniform(0.5, 2)), 256, rng)
        times = np.sort(rng.choice(257, size=3, replace=False)) / 256
        cyl = CylindricalFunctional(tuple(times), lambda x: float(np.sum(np.sin(x))), np.cos)
        a = gamma0_cylindrical(cyl, b)
        c = gamma0_lemma2(cyl.functional(), b)
        d = gamma0_integral_form(cyl.functional().derivative(b), b.c)
        worst = max(worst, abs(a - c), abs(a - d))
    assert worst <= 1e-12, f"gap {worst:.3g}"
    return f"max gap {worst:.2g}"


def check_determinism(rng) -> str:
    seed = SeedSpec(int(rng.integers(2**63)), 3)
    es = weighted_uniform()

    def sampler(r):
        path, _ = build_path(sample_increments(es, 50, r), es)
        return path.values[-1], float(np.max(path.values)) ** 2

    a = estimate_many(sampler, 1500, seed, workers=1)
    b = estimate_many(sampler, 1500, seed, workers=2)
    assert a == b, f"{a} != {b}"
    return "workers 1 and 2 agree bit for bit"


def check_exact_merge(rng) -> str:
    x = rng.standard_normal(4000) * 10.0 ** rng.integers(-8, 8, 4000)
    whole = ExactSum(x).value
    left, right = ExactSum(x[:1234]), ExactSum(x[1234:])
    assert left.merge(right).value == whole == math.fsum(x)
    return "split sums reproduce the single pass"


def check_eq4(rng) -> str:
    # closed form: P(|N|>=a) = erfc(a/sqrt2), E[N^2; |N|>=a] = 2(a phi(a) + P(N>=a))
    alpha = 8.0
    a = math.sqrt(alpha) / 2
    tail = math.erfc(a / math.sqrt(2))
    phi = math.exp(-a * a / 2) / math.sqrt(2 * math.pi)
    second = 2 * (a * phi + tail / 2)
    exact = 2 * alpha * tail + 2 * (4 * second - alpha * tail)
    got = eq4_bound(alpha)
    assert abs(got - exact) <= 1e-12, f"{got} vs {exact}"
    return f"eq4_bound(8) = {got:.6f}"


def check_fixtures(path=None) -> str:
    data = load_fixtures(path)
    return f"m={data['m']} samples={data['samples']}"


CHECKS: List[tuple] = [
    ("walk.gamma_pair_vs_chain_rule", check_eq2),
    ("functionals.sharp_identity", check_sharp_identity),
    ("wiener_limit.gamma0_agreement", check_gamma0_agreement),
    ("montecarlo.determinism", check_determinism),
    ("montecarlo.exact_merge", check_exact_merge),
    ("montecarlo.eq4_quadrature", check_eq4),
]


def run_selftest(cfg: ExperimentConfig) -> List[CheckResult]:
    rng = np.random.default_rng(cfg.seed)
    results = []
    for name, check in CHECKS:
        results.append(_run(name, lambda: check(rng)))
    results.append(_run("oracle.fixtures", lambda: check_fixtures(cfg.fixtures)))
    return results


def _run(name: str, fn: Callable[[], str]) -> CheckResult:
    try:
        return CheckResult(name, True, fn())
    except (AssertionError, ArithmeticError, FixtureError, ValueError, OSError, KeyError) as exc:
        return CheckResult(name, False, f"{type(exc).__name__}: {exc}")


def format_report(results: List[CheckResult]) -> str:
    lines = [f"{'PASS' if r.ok else 'FAIL'} {r.name}: {r.detail}" for r in results]
    failed = sum(not r.ok for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
