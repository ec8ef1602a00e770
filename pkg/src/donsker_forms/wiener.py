"""Limit side: Brownian grids and the Ornstein-Uhlenbeck carre du champ."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .functionals import CylindricalFunctional, DiscreteMeasure, PathFunctional
from .montecarlo import EstimateReport, SeedSpec, estimate_many
from .walk import GridPath


@dataclass(frozen=True)
class BrownianGrid(GridPath):
    """B(k/m), k = 0..m, for a Brownian motion of variance sigma^2 t."""

    sigma: float = 1.0
    c: float = 1.0

    @property
    def m(self) -> int:
        return self.n


def sample_brownian(sigma: float, c: float, m: int, rng: np.random.Generator) -> BrownianGrid:
    if m < 1:
        raise ValueError("m must be >= 1")
    values = np.empty(m + 1)
    values[0] = 0.0
    np.cumsum(rng.standard_normal(m), out=values[1:])
    values[1:] *= sigma / math.sqrt(m)
    return BrownianGrid(values, float(sigma), float(c))


def sharp_brownian(b: BrownianGrid, b_hat: BrownianGrid) -> GridPath:
    """B^# = (sqrt(c) / sigma) * B_hat, whose copy variance at t is c t."""
    return GridPath(math.sqrt(b.c) / b.sigma * b_hat.values)


def gamma0_first_chaos(breaks, heights, c: float = 1.0) -> float:
    """c * int_0^1 h^2 dt for the step function equal to heights[i] on [breaks[i], breaks[i+1])."""
    breaks = np.asarray(breaks, dtype=float)
    heights = np.asarray(heights, dtype=float)
    if len(breaks) != len(heights) + 1:
        raise ValueError("need len(breaks) == len(heights) + 1")
    if np.any(np.diff(breaks) < 0):
        raise ValueError("breaks must be nondecreasing")
    return float(c * np.sum(heights**2 * np.diff(breaks)))


def _min_kernel(mu: DiscreteMeasure, c: float) -> float:
    s = mu.times
    return float(c * (mu.weights @ np.minimum(s[:, None], s[None, :]) @ mu.weights))


def gamma0_cylindrical(F: CylindricalFunctional, b: BrownianGrid) -> float:
    """sum_ij f'_i f'_j c (t_i ^ t_j) with f' taken at the grid values nearest t_i."""
    times = np.array(F.times)
    idx = np.rint(times * b.m).astype(int)
    grad = np.asarray(F.grad_f(b.values[idx]), dtype=float)
    return _min_kernel(DiscreteMeasure(times, grad), b.c)


def gamma0_lemma2(F: PathFunctional, b: BrownianGrid) -> float:
    """c * sum_ij w_i w_j (s_i ^ s_j) over the atoms of F'(B)."""
    mu = F.derivative(b)
    if not len(mu):
        return 0.0
    return _min_kernel(mu, b.c)


def gamma0_integral_form(mu: DiscreteMeasure, c: float = 1.0) -> float:
    """c * int_0^1 <mu, 1_[u,1]>^2 du, integrated exactly piece by piece."""
    if not len(mu):
        return 0.0
    # <mu, 1_[u,1]> is the mass of atoms at times >= u: constant on (s_(i-1), s_i]
    tail = np.cumsum(mu.weights[::-1])[::-1]
    lengths = np.diff(np.concatenate([[0.0], mu.times]))
    return float(c * np.sum(tail**2 * lengths))


def argmax_times(b: GridPath):
    """(Sigma, Tau): first grid argmax of B and of |B|, as times."""
    v = b.values
    return int(np.argmax(v)) / b.n, int(np.argmax(np.abs(v))) / b.n


def prop2_integrand(grad, b: BrownianGrid, form: str = "chain_rule") -> float:
    """Integrand of the limit of E Gamma[F(max X_n, ||X_n||)].

    ``form="chain_rule"`` keeps the factor sign(B_Tau) carried by N^# in the
    cross term (this is what the walk's chain rule converges to);
    ``form="displayed"`` drops it.
    """
    v = b.values
    ks, kt = int(np.argmax(v)), int(np.argmax(np.abs(v)))
    sigma_t, tau_t = ks / b.n, kt / b.n
    M, N = float(v[ks]), float(abs(v[kt]))
    g1, g2 = np.asarray(grad(np.array([M, N])), dtype=float)
    sign = -1.0 if v[kt] < 0 else 1.0
    if form == "chain_rule":
        cross = sign * min(sigma_t, tau_t)
        return b.c * (g1 * g1 * sigma_t + 2 * g1 * g2 * cross + g2 * g2 * tau_t)
    if form == "displayed":
        return b.c * (g1 * g1 * tau_t + 2 * g1 * g2 * min(sigma_t, tau_t) + g2 * g2 * sigma_t)
    raise ValueError(f"unknown form {form!r}")


def prop2_limit(
    grad: Callable,
    samples: int,
    seed: SeedSpec,
    m: int = 2000,
    sigma: float = 1.0,
    c: float = 1.0,
    form: str = "chain_rule",
    workers=None,
) -> EstimateReport:
    """Monte Carlo of the Gamma_0 limit for F(M, N), M = max B, N = sup |B|.

    Only the gradient of F enters the limit.
    """

    def sampler(rng):
        return prop2_integrand(grad, sample_brownian(sigma, c, m, rng), form)

    return estimate_many(sampler, samples, seed, workers)[0]
