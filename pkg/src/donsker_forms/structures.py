"""One-dimensional error structures and their i.i.d. product.

A structure bundles the law ``mu`` of a single increment, the function
``gamma`` giving the carre du champ of the identity coordinate, the variance
``sigma2`` and the mean ``c`` of ``gamma`` under ``mu``.  Closability of the
resulting form is a user obligation and is never checked.
"""

from __future__ import annotations

import importlib
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, ValidationError

SQRT3 = np.sqrt(3.0)

Sampler = Callable[[np.random.Generator, int], np.ndarray]
GammaFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ErrorStructure1D:
    name: str
    sample: Sampler
    gamma: GammaFn
    sigma2: float
    c: float
    gamma_bound: Optional[float] = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.sigma2 > 0 or not self.c > 0:
            raise ConfigurationError(
                f"structure {self.name!r}: sigma2 and c must be positive"
            )

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))


@dataclass(frozen=True)
class CoordinateDraws:
    """Draws ``U_k`` from ``mu`` and independent ``N(0, 1)`` copy draws.

    Arrays are aligned: ``u[k]`` and ``g_hat[k]`` belong to coordinate
    ``k + 1``.
    """

    u: np.ndarray
    g_hat: np.ndarray

    def __len__(self):
        return len(self.u)


# built-in samplers / gammas live at module level so they pickle


def _normal_sampler(rng, size):
    return rng.standard_normal(size)


def _unit_gamma(u):
    return np.ones_like(np.asarray(u, dtype=float))


def _uniform_sampler(rng, size):
    return rng.uniform(-SQRT3, SQRT3, size)


def _weighted_gamma(u, kappa):
    u = np.asarray(u, dtype=float)
    return np.maximum(kappa * (3.0 - u * u), 0.0)


def ou_gauss() -> ErrorStructure1D:
    """mu = N(0, 1) with gamma = 1."""
    return ErrorStructure1D(
        "ou_gauss", _normal_sampler, _unit_gamma, 1.0, 1.0, gamma_bound=1.0
    )


def weighted_uniform(kappa: float = 0.5) -> ErrorStructure1D:
    """mu uniform on [-sqrt 3, sqrt 3] with gamma(x) = kappa (3 - x^2)."""
    if kappa <= 0:
        raise ConfigurationError("kappa must be positive")
    return ErrorStructure1D(
        "weighted_uniform",
        _uniform_sampler,
        partial(_weighted_gamma, kappa=kappa),
        1.0,
        2.0 * kappa,
        gamma_bound=3.0 * kappa,
        params={"kappa": kappa},
    )


def load_callable(path: str):
    """Resolve ``"package.module:attribute"`` to the named object."""
    module_name, _, attr = path.partition(":")
    if not module_name or not attr:
        raise ConfigurationError(f"expected 'module:attribute', got {path!r}")
    try:
        return getattr(importlib.import_module(module_name), attr)
    except (ImportError, AttributeError) as exc:
        raise ConfigurationError(f"cannot load {path!r}: {exc}") from exc


def custom_structure(name, sample, gamma, sigma2, c, gamma_bound=None):
    """A user structure. ``sample(rng, size)`` and ``gamma(u)`` must be vectorised."""
    if isinstance(sample, str):
        sample = load_callable(sample)
    if isinstance(gamma, str):
        gamma = load_callable(gamma)
    return ErrorStructure1D(
        name, sample, gamma, float(sigma2), float(c), gamma_bound=gamma_bound
    )


BUILTIN = {"ou_gauss": ou_gauss, "weighted_uniform": weighted_uniform}


def get_structure(name: str, **params) -> ErrorStructure1D:
    try:
        factory = BUILTIN[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown structure {name!r}; choose from {sorted(BUILTIN)}"
        ) from None
    return factory(**params)


def sample_increments(
    es: ErrorStructure1D, n: int, rng: np.random.Generator
) -> CoordinateDraws:
    """Draw ``n`` coordinates of the product structure and their copy draws.

    All ``u`` values are drawn before the copy draws, so a given stream state
    always produces the same pairs.
    """
    if not isinstance(rng, np.random.Generator):
        raise ConfigurationError(f"expected numpy Generator, got {type(rng)!r}")
    if n < 1:
        raise ValueError("n must be >= 1")
    u = np.asarray(es.sample(rng, n), dtype=float)
    if u.shape != (n,):
        raise ValidationError(f"sampler of {es.name!r} returned shape {u.shape}")
    g_hat = rng.standard_normal(n)
    return CoordinateDraws(u, g_hat)


def gamma_coordinate(es: ErrorStructure1D, u):
    """gamma[j](u); raises if the structure's gamma goes negative."""
    g = es.gamma(u)
    if np.any(np.asarray(g) < 0):
        raise ValidationError(f"gamma of {es.name!r} returned a negative value")
    return g


def sharp_coordinate(es: ErrorStructure1D, draws: CoordinateDraws):
    """U^# = sqrt(gamma(u)) * g_hat, so the copy mean of (U^#)^2 is gamma(u)."""
    return np.sqrt(gamma_coordinate(es, draws.u)) * draws.g_hat
