"""Reproducible experiments, one per limit statement.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns a list
of :class:`Row` objects with the fixed CSV schema
``experiment,n,quantity,estimate,stderr,limit,limit_stderr,seed,samples``.
The prelimit and limit sides use distinct, named random streams, so any row
can be regenerated bit for bit from ``(seed, n, samples)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
import zlib
from dataclasses import asdict, dataclass, fields
from typing import Callable, List

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigurationError
from .functionals import (
    CylindricalFunctional,
    DiscreteMeasure,
    PathFunctional,
    compose,
    coordinate,
    derivative_coefficients,
    gamma_of_functional,
    max_functional,
    sharp_copy_expectation,
    sharp_of_functional,
    supnorm_functional,
)
from .montecarlo import SeedSpec, eq4_bound, estimate_many, lemma3_diagnostic
from .oracle import load_fixtures
from .structures import ErrorStructure1D, gamma_coordinate, sample_increments
from .walk import build_path, path_statistics
from .wiener import (
    gamma0_cylindrical,
    gamma0_lemma2,
    prop2_integrand,
    sample_brownian,
)

# per-sample tolerance between the chain-rule and sharp closed-form Gamma
SHARP_RTOL = 1e-12


@dataclass(frozen=True)
class Row:
    experiment: str
    n: int
    quantity: str
    estimate: float
    stderr: float
    limit: float
    limit_stderr: float
    seed: int
    samples: int


COLUMNS = [f.name for f in fields(Row)]


def stream_id(tag: str, n: int = 0) -> int:
    return zlib.crc32(f"{tag}:{n}".encode())


# ----------------------------------------------------------- named functionals


def _sum_f(x):
    return float(np.sum(x))


def parse_cylindrical(name: str) -> CylindricalFunctional:
    """``sin1``, ``cos1``, ``coordinate(t)`` or ``sum(s,t)``."""
    name = name.strip()
    if name.startswith("cylindrical(") and name.endswith(")"):
        name = name[len("cylindrical("):-1]
    if name == "sin1":
        return CylindricalFunctional((1.0,), lambda x: math.sin(x[0]), np.cos, "sin1")
    if name == "cos1":
        return CylindricalFunctional((1.0,), lambda x: math.cos(x[0]), lambda x: -np.sin(x), "cos1")
    m = re.fullmatch(r"coordinate\(([^)]+)\)", name)
    if m:
        return CylindricalFunctional((float(m.group(1)),), _sum_f, np.ones_like, name)
    m = re.fullmatch(r"sum\(([^,]+),([^)]+)\)", name)
    if m:
        times = (float(m.group(1)), float(m.group(2)))
        return CylindricalFunctional(times, _sum_f, np.ones_like, name)
    raise ConfigurationError(f"unknown cylindrical functional {name!r}")


PROP2_MAPS = {
    "a": (lambda z: z[0], lambda z: np.array([1.0, 0.0])),
    "b": (lambda z: z[1], lambda z: np.array([0.0, 1.0])),
    "a+b": (lambda z: z[0] + z[1], lambda z: np.array([1.0, 1.0])),
    "sin(a)+cos(b)": (
        lambda z: math.sin(z[0]) + math.cos(z[1]),
        lambda z: np.array([math.cos(z[0]), -math.sin(z[1])]),
    ),
}


def prop2_functional(key: str) -> PathFunctional:
    try:
        f, grad = PROP2_MAPS[key]
    except KeyError:
        raise ConfigurationError(f"unknown prop2 map {key!r}; choose from {sorted(PROP2_MAPS)}") from None
    return compose(f, grad, [max_functional(), supnorm_functional()], name=f"prop2({key})")


def parse_functional(name: str) -> PathFunctional:
    """Path functional by config name: ``max``, ``supnorm``, ``prop2(F)`` or a cylindrical name."""
    name = name.strip()
    if name == "max":
        return max_functional()
    if name == "supnorm":
        return supnorm_functional()
    m = re.fullmatch(r"prop2\((.+)\)", name)
    if m:
        return prop2_functional(m.group(1))
    m = re.fullmatch(r"coordinate\(([^)]+)\)", name)
    if m:
        return coordinate(float(m.group(1)))
    return parse_cylindrical(name).functional()


# ------------------------------------------------------------------- helpers


def _walk(es, n, rng):
    draws = sample_increments(es, n, rng)
    path, sharp = build_path(draws, es)
    return draws, path, sharp


def _estimate(cfg, sampler, tag, n=0, samples=None):
    return estimate_many(sampler, samples or cfg.samples, SeedSpec(cfg.seed, stream_id(tag, n)), cfg.workers)


def _row(cfg, experiment, n, quantity, rep, limit, limit_stderr=0.0, samples=None):
    return Row(
        experiment, int(n), quantity, rep.mean, rep.stderr, float(limit),
        float(limit_stderr), int(cfg.seed), int(samples or cfg.samples),
    )


def _fixture_constant(cfg, name):
    entry = load_fixtures(cfg.fixtures)["constants"][name]
    return entry["value"], entry["stderr"]


# --------------------------------------------------------------- experiments


def run_prop1(cfg: ExperimentConfig) -> List[Row]:
    """Finite-dimensional marginals: E Gamma[f(X_n(t_1), ...)] against its OU limit.

    Also reports the decorrelation gap |E[exp(i sum X_n(t_j)) gamma(U_1)] - E[exp(i sum B(t_j))] c|.
    """
    es = cfg.error_structure()
    cyl = parse_cylindrical(cfg.functional)
    F = cyl.functional()
    times = np.array(cyl.times)
    kernel = np.minimum(times[:, None], times[None, :]).sum()
    target = math.exp(-0.5 * es.sigma2 * kernel) * es.c

    def limit_sampler(rng):
        return gamma0_cylindrical(cyl, sample_brownian(es.sigma, es.c, cfg.m, rng))

    limit = _estimate(cfg, limit_sampler, "prop1-limit")[0]
    rows = []
    for n in cfg.n_list:
        def sampler(rng, n=n):
            _, path, _ = _walk(es, n, rng)
            phase = float(np.sum(path.eval(times)))
            g1 = path.gammas[0]
            return gamma_of_functional(F, path), math.cos(phase) * g1, math.sin(phase) * g1

        gam, re_, im_ = _estimate(cfg, sampler, "prop1", n)
        rows.append(_row(cfg, "prop1", n, f"gamma[{cyl.name}]", gam, limit.mean, limit.stderr))
        gap = abs(complex(re_.mean - target, im_.mean))
        rows.append(Row("prop1", n, "charfn_gap", gap, math.hypot(re_.stderr, im_.stderr),
                        0.0, 0.0, cfg.seed, cfg.samples))
    return rows


def _check_sharp(chain, closed, n):
    if abs(chain - closed) > SHARP_RTOL * max(abs(chain), abs(closed)):
        raise ArithmeticError(
            f"sharp identity violated at n={n}: chain rule {chain!r} vs sharp {closed!r}"
        )


def run_thm1(cfg: ExperimentConfig) -> List[Row]:
    """E Gamma[F(X_n)] by the chain rule and through the sharp operator, vs E Gamma_0[F(B)]."""
    es = cfg.error_structure()
    F = parse_functional(cfg.functional)

    def limit_sampler(rng):
        return gamma0_lemma2(F, sample_brownian(es.sigma, es.c, cfg.m, rng))

    limit = _estimate(cfg, limit_sampler, "thm1-limit")[0]
    rows = []
    for n in cfg.n_list:
        def sampler(rng, n=n):
            _, path, sharp = _walk(es, n, rng)
            chain = gamma_of_functional(F, path)
            closed = sharp_copy_expectation(F, path)
            _check_sharp(chain, closed, n)
            return chain, closed, sharp_of_functional(F, path, sharp) ** 2

        reps = _estimate(cfg, sampler, "thm1", n)
        for q, rep in zip(("gamma_chain_rule", "gamma_sharp_closed_form", "sharp_squared"), reps):
            rows.append(_row(cfg, "thm1", n, f"{q}[{F.name}]", rep, limit.mean, limit.stderr))
    return rows


def run_application(cfg: ExperimentConfig) -> List[Row]:
    """Gamma of the running maximum and of the sup norm against c E[Sigma] and c E[Tau]."""
    es = cfg.error_structure()
    fmax, fsup = max_functional(), supnorm_functional()
    e_tau, se_tau = _fixture_constant(cfg, "E_tau")
    rows = []
    for n in cfg.n_list:
        def sampler(rng, n=n):
            _, path, _ = _walk(es, n, rng)
            return gamma_of_functional(fmax, path), gamma_of_functional(fsup, path)

        gmax, gsup = _estimate(cfg, sampler, "application", n)
        # E[Sigma] = 1/2 exactly by time reversal
        rows.append(_row(cfg, "application", n, "gamma[max]", gmax, 0.5 * es.c))
        rows.append(_row(cfg, "application", n, "gamma[supnorm]", gsup, es.c * e_tau, es.c * se_tau))
    return rows


def run_thm2(cfg: ExperimentConfig) -> List[Row]:
    """Quadratic-growth functionals of X_n and the tail diagnostic for Z_n^2."""
    es = cfg.error_structure()
    s2 = es.sigma2
    e_sup2, se_sup2 = _fixture_constant(cfg, "E_supnorm_sq")
    alphas = tuple(cfg.alphas)
    for a in alphas:
        if a < 8 * s2:
            raise ConfigurationError(f"alpha={a} below 8 sigma^2 = {8 * s2}")
    bounds = [eq4_bound(a, es.sigma) for a in alphas]
    rows = []
    for n in cfg.n_list:
        def sampler(rng, n=n):
            _, path, _ = _walk(es, n, rng)
            st = path_statistics(path)
            z2 = st.sup_norm**2
            return [z2, st.max**2, st.endpoint**2] + [z2 if z2 >= a else 0.0 for a in alphas]

        reps = _estimate(cfg, sampler, "thm2", n)
        rows.append(_row(cfg, "thm2", n, "supnorm_sq", reps[0], s2 * e_sup2, s2 * se_sup2))
        rows.append(_row(cfg, "thm2", n, "max_sq", reps[1], s2))
        rows.append(_row(cfg, "thm2", n, "endpoint_sq", reps[2], s2))
        for a, b, rep in zip(alphas, bounds, reps[3:]):
            rows.append(_row(cfg, "thm2", n, f"tail_mean[alpha={a:g}]", rep, b))
    return rows


def run_prop2(cfg: ExperimentConfig) -> List[Row]:
    """Gamma and L^2 norm of F(max X_n, ||X_n||) against their Brownian limits.

    The ``gamma`` row is compared with the chain-rule limit (cross term
    weighted by sign(B_Tau)); ``gamma_displayed`` compares the same prelimit
    with the limit written without that sign.
    """
    es = cfg.error_structure()
    f, grad = PROP2_MAPS.get(cfg.prop2_f, (None, None))
    G = prop2_functional(cfg.prop2_f)

    def limit_sampler(rng):
        b = sample_brownian(es.sigma, es.c, cfg.m, rng)
        value = f(np.array([np.max(b.values), np.max(np.abs(b.values))]))
        return (prop2_integrand(grad, b, "chain_rule"),
                prop2_integrand(grad, b, "displayed"), value * value)

    lim_chain, lim_disp, lim_l2 = _estimate(cfg, limit_sampler, "prop2-limit")
    rows = []
    for n in cfg.n_list:
        def sampler(rng, n=n):
            _, path, _ = _walk(es, n, rng)
            return gamma_of_functional(G, path), G(path) ** 2

        gam, l2 = _estimate(cfg, sampler, "prop2", n)
        key = cfg.prop2_f
        rows.append(_row(cfg, "prop2", n, f"gamma[{key}]", gam, lim_chain.mean, lim_chain.stderr))
        rows.append(_row(cfg, "prop2", n, f"gamma_displayed[{key}]", gam, lim_disp.mean, lim_disp.stderr))
        rows.append(_row(cfg, "prop2", n, f"l2[{key}]", l2, lim_l2.mean, lim_l2.stderr))
    return rows


def _tilt(u2):
    return 1.0 + 0.5 * math.tanh(u2)


def run_prop3(cfg: ExperimentConfig) -> List[Row]:
    """E[Y phi(X_n)] against E[Y] E[phi(B)] with phi(x) = cos(x(1))."""
    es = cfg.error_structure()
    e_cos_b = math.exp(-0.5 * es.sigma2)

    def mean_sampler(rng):
        return math.cos(es.sample(rng, 1)[0])

    e_cos_u = _estimate(cfg, mean_sampler, "prop3-limit")[0]
    rows = []
    for n in cfg.n_list:
        def sampler(rng, n=n):
            draws, path, _ = _walk(es, n, rng)
            phi = math.cos(path.values[-1])
            u1 = draws.u[0]
            return u1 * phi, math.cos(u1) * phi

        y_u1, y_cos = _estimate(cfg, sampler, "prop3", n)
        # E[U_1] = 0 for every structure (centred increments)
        rows.append(_row(cfg, "prop3", n, "E[U1*cos(X(1))]", y_u1, 0.0))
        rows.append(_row(cfg, "prop3", n, "E[cos(U1)*cos(X(1))]", y_cos,
                         e_cos_u.mean * e_cos_b, e_cos_u.stderr * e_cos_b))
    return rows


def thm3_gamma(es: ErrorStructure1D, draws, path) -> float:
    """Gamma[sin(U_1) cos(X_n(1))] by the coordinate chain rule."""
    u1 = draws.u[0]
    x1 = path.values[-1]
    y = math.sin(u1)
    coef = y * derivative_coefficients(path.n, DiscreteMeasure(np.ones(1), np.array([-math.sin(x1)])))
    coef[0] += math.cos(u1) * math.cos(x1)
    return float(np.sum(coef * coef * path.gammas))


def thm3_closed_form_rhs(sigma2: float = 1.0, c: float = 1.0) -> float:
    """Limit for Z = 1, Y = sin(U_1), psi = cos(x(1)) when mu = N(0, sigma2) and gamma = c.

    E[cos^2 U] c E[cos^2 B_1] + E[sin^2 U] c E[sin^2 B_1].
    """
    e2 = math.exp(-2 * sigma2)
    cos2, sin2 = (1 + e2) / 2, (1 - e2) / 2
    return c * cos2 * cos2 + sin2 * c * sin2


def run_thm3(cfg: ExperimentConfig) -> List[Row]:
    """E[Z Gamma[Y psi(X_n)]] for Y = sin(U_1), psi = cos(x(1)), Z in {1, 1 + tanh(U_2)/2}.

    The limit is E[Z Gamma[Y]] E[psi(B)^2] + E[Z Y^2] E[Gamma_0[psi(B)]]; the
    Brownian factors are Gaussian closed forms and the Y factors are
    estimated per sample from the same draws.
    """
    es = cfg.error_structure()
    e2 = math.exp(-2 * es.sigma2)
    psi_sq = (1 + e2) / 2
    g0_psi = es.c * (1 - e2) / 2
    rows = []
    for n in cfg.n_list:
        if n < 2:
            raise ConfigurationError("thm3 needs n >= 2 (Z uses U_2)")

        def sampler(rng, n=n):
            draws, path, _ = _walk(es, n, rng)
            u1 = draws.u[0]
            z = _tilt(draws.u[1])
            lhs = thm3_gamma(es, draws, path)
            gy = math.cos(u1) ** 2 * float(gamma_coordinate(es, u1))
            y2 = math.sin(u1) ** 2
            rhs = gy * psi_sq + y2 * g0_psi
            return lhs, rhs, z * lhs, z * rhs

        lhs, rhs, zlhs, zrhs = _estimate(cfg, sampler, "thm3", n)
        rows.append(_row(cfg, "thm3", n, "Z=1", lhs, rhs.mean, rhs.stderr))
        rows.append(_row(cfg, "thm3", n, "Z=tilt", zlhs, zrhs.mean, zrhs.stderr))
    return rows


def run_prop3_thm3(cfg: ExperimentConfig) -> List[Row]:
    return run_prop3(cfg) + run_thm3(cfg)


def run_diagnostics(cfg: ExperimentConfig) -> List[Row]:
    """E[max_k gamma(U_k) / n] for each n, which must decrease to 0."""
    es = cfg.error_structure()
    reps = lemma3_diagnostic(es, sorted(cfg.n_list), cfg.samples,
                             SeedSpec(cfg.seed, stream_id("lemma3")), cfg.workers)
    return [_row(cfg, "diagnostics", n, "lemma3_max_gamma_over_n", r, 0.0)
            for n, r in zip(sorted(cfg.n_list), reps)]


RUNNERS: dict[str, Callable[[ExperimentConfig], List[Row]]] = {
    "prop1": run_prop1,
    "thm1": run_thm1,
    "thm2": run_thm2,
    "application": run_application,
    "prop2": run_prop2,
    "prop3": run_prop3,
    "thm3": run_thm3,
    "diagnostics": run_diagnostics,
}


def run(cfg: ExperimentConfig) -> List[Row]:
    if cfg.experiment == "selftest":
        raise ConfigurationError("selftest produces a report, not rows; use run_selftest")
    return RUNNERS[cfg.experiment](cfg)


# -------------------------------------------------------------------- output


def _fmt(x):
    return repr(float(x)) if isinstance(x, float) else str(x)


def rows_to_csv(rows: List[Row]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def rows_to_json(rows: List[Row]) -> str:
    return json.dumps([asdict(r) for r in rows], indent=2) + "\n"


def render(rows: List[Row], fmt: str = "csv") -> str:
    return rows_to_json(rows) if fmt == "json" else rows_to_csv(rows)
