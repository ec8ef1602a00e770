"""Path functionals with atomic Frechet derivatives.

The derivative of every functional handled here is a finite combination of
Dirac masses, represented by :class:`DiscreteMeasure`.  Functionals act on any
:class:`~donsker_forms.walk.GridPath`, so the same objects are evaluated on
random-walk interpolations and on Brownian grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .walk import GridPath, SharpWalkPath, WalkPath, gamma_pair, grid_index


@dataclass(frozen=True)
class DiscreteMeasure:
    times: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if times.shape != weights.shape:
            raise ValueError("times and weights must have the same length")
        order = np.argsort(times, kind="stable")
        object.__setattr__(self, "times", times[order])
        object.__setattr__(self, "weights", weights[order])

    @classmethod
    def from_atoms(cls, atoms):
        atoms = list(atoms)
        if not atoms:
            return cls(np.empty(0), np.empty(0))
        t, w = zip(*atoms)
        return cls(np.array(t), np.array(w))

    @property
    def atoms(self):
        return list(zip(self.times.tolist(), self.weights.tolist()))

    @property
    def total_mass(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    def __len__(self):
        return len(self.times)

    def __add__(self, other):
        return DiscreteMeasure(
            np.concatenate([self.times, other.times]),
            np.concatenate([self.weights, other.weights]),
        )

    def scaled(self, factor: float):
        return DiscreteMeasure(self.times, self.weights * factor)

    def pair(self, path: GridPath) -> float:
        """<mu, x> for a path x."""
        if not len(self):
            return 0.0
        return float(self.weights @ np.atleast_1d(path.eval(self.times)))


@dataclass(frozen=True)
class PathFunctional:
    value: Callable[[GridPath], float]
    derivative: Callable[[GridPath], DiscreteMeasure]
    lipschitz: Optional[float] = None
    name: str = ""

    def __call__(self, path):
        return self.value(path)


@dataclass(frozen=True)
class CylindricalFunctional:
    """F(x) = f(x(t_1), ..., x(t_p)) with the gradient of f supplied."""

    times: tuple
    f: Callable
    grad_f: Callable
    name: str = ""

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if not times:
            raise ValueError("need at least one time")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"times must be strictly increasing, got {times}")
        if times[0] < 0 or times[-1] > 1:
            raise ValueError("times must lie in [0, 1]")
        object.__setattr__(self, "times", times)

    def check_gradient(self, points, step=1e-5, tol=1e-6):
        """Largest central-difference mismatch of ``grad_f`` over ``points``.

        Raises ``ValueError`` if it exceeds ``tol``.
        """
        worst = 0.0
        for x in np.atleast_2d(np.asarray(points, dtype=float)):
            g = np.asarray(self.grad_f(x), dtype=float)
            for i in range(len(x)):
                e = np.zeros_like(x)
                e[i] = step
                fd = (self.f(x + e) - self.f(x - e)) / (2 * step)
                worst = max(worst, abs(fd - g[i]))
        if worst > tol:
            raise ValueError(f"gradient mismatch {worst:.3g} exceeds {tol:g}")
        return worst

    def functional(self) -> PathFunctional:
        times = np.array(self.times)

        def value(path):
            return float(self.f(np.atleast_1d(path.eval(times))))

        def derivative(path):
            x = np.atleast_1d(path.eval(times))
            return DiscreteMeasure(times, np.asarray(self.grad_f(x), dtype=float))

        return PathFunctional(value, derivative, name=self.name or "cylindrical")


def make_cylindrical(times, f, grad_f, name="") -> PathFunctional:
    return CylindricalFunctional(tuple(np.atleast_1d(times)), f, grad_f, name).functional()


def coordinate(t: float) -> PathFunctional:
    """x -> x(t)."""
    cyl = CylindricalFunctional((t,), lambda x: x[0], np.ones_like, f"coordinate({t:g})")
    return replace(cyl.functional(), lipschitz=1.0)


def sin_endpoint() -> PathFunctional:
    """x -> sin(x(1)), the ``cylindrical(sin1)`` test functional."""
    return CylindricalFunctional(
        (1.0,), lambda x: math.sin(x[0]), lambda x: np.cos(x), "sin1"
    ).functional()


def cos_endpoint() -> PathFunctional:
    return CylindricalFunctional(
        (1.0,), lambda x: math.cos(x[0]), lambda x: -np.sin(x), "cos1"
    ).functional()


def _max_value(path):
    return float(np.max(path.values))


def _max_derivative(path):
    k = int(np.argmax(path.values))
    return DiscreteMeasure(np.array([k / path.n]), np.ones(1))


def _supnorm_value(path):
    return float(np.max(np.abs(path.values)))


def _supnorm_derivative(path):
    k = int(np.argmax(np.abs(path.values)))
    sign = -1.0 if path.values[k] < 0 else 1.0  # sign(0) = +1
    return DiscreteMeasure(np.array([k / path.n]), np.array([sign]))


def max_functional() -> PathFunctional:
    return PathFunctional(_max_value, _max_derivative, 1.0, "max")


def supnorm_functional() -> PathFunctional:
    return PathFunctional(_supnorm_value, _supnorm_derivative, 1.0, "supnorm")


def compose(outer, outer_grad, inner: Sequence[PathFunctional], name="") -> PathFunctional:
    """x -> outer(F_1(x), ..., F_p(x)); derivative by the chain rule."""
    inner = tuple(inner)

    def value(path):
        return float(outer(np.array([F(path) for F in inner])))

    def derivative(path):
        args = np.array([F(path) for F in inner])
        grads = np.atleast_1d(np.asarray(outer_grad(args), dtype=float))
        mu = DiscreteMeasure(np.empty(0), np.empty(0))
        for g, F in zip(grads, inner):
            mu = mu + F.derivative(path).scaled(g)
        return mu

    return PathFunctional(value, derivative, name=name or "composite")


def gamma_of_functional(F: PathFunctional, path: WalkPath) -> float:
    """Gamma[F(X_n)] as the double integral of Gamma[X_n(s), X_n(t)] against F'."""
    mu = F.derivative(path)
    if not len(mu):
        return 0.0
    s = mu.times
    g = gamma_pair(path, s[:, None], s[None, :])
    value = float(mu.weights @ np.atleast_2d(g) @ mu.weights)
    return _clamp(value, mu.total_mass**2 * float(np.max(path.gammas, initial=0.0)))


def _clamp(value, scale):
    if value < 0:
        if value < -1e-12 * max(scale, 1e-300):
            raise ArithmeticError(f"negative carre du champ {value!r}")
        return 0.0
    return value


def sharp_of_functional(F: PathFunctional, path: GridPath, sharp: GridPath) -> float:
    """(F(X_n))^# = <F'(X_n), X_n^#>."""
    return F.derivative(path).pair(sharp)


def derivative_coefficients(n: int, mu: DiscreteMeasure) -> np.ndarray:
    """Coefficients c_k = sum_i w_i dX_n(s_i)/dU_k, so that <mu, X_n> = sum c_k U_k."""
    k, frac = grid_index(n, mu.times)
    w = mu.weights
    d = np.zeros(n + 1)
    np.add.at(d, k, w)
    # coordinate j (0-based) is fully counted by atoms with k > j
    coef = np.cumsum(d[::-1])[::-1][1:].copy()
    inside = k < n
    np.add.at(coef, k[inside], w[inside] * frac[inside])
    return coef / np.sqrt(n)


def sharp_copy_expectation(F: PathFunctional, path: WalkPath) -> float:
    """Closed-form copy mean of (F(X_n)^#)^2 for normal copy draws."""
    coef = derivative_coefficients(path.n, F.derivative(path))
    return float(np.sum(coef * coef * path.gammas))


def _tent(n, node):
    v = np.zeros(n + 1)
    v[node] = 1.0
    return v


def finite_difference_derivative_check(F: PathFunctional, path: GridPath, h: float) -> float:
    """Worst relative remainder of F along tent directions at the derivative atoms.

    For every atom, the unit tents at the two surrounding grid nodes are used
    as directions ``v`` and ``|(F(x + h v) - F(x)) / h - <F'(x), v>|`` is
    reported (``||v|| = 1``).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    mu = F.derivative(path)
    base = F(path)
    n = path.n
    k, frac = grid_index(n, mu.times)
    nodes = sorted({int(x) for x in k} | {int(min(x + 1, n)) for x, f in zip(k, frac) if f > 0})
    worst = 0.0
    for node in nodes:
        v = _tent(n, node)
        moved = GridPath(path.values + h * v)
        linear = mu.pair(GridPath(v))
        worst = max(worst, abs((F(moved) - base) / h - linear))
    return worst
