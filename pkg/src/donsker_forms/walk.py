"""Piecewise-linear (Donsker) interpolation of an erroneous random walk."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .structures import (
    CoordinateDraws,
    ErrorStructure1D,
    gamma_coordinate,
    sharp_coordinate,
)

# n*t within this many ulps-ish of an integer is treated as a grid node
_SNAP = 1e-9


def grid_index(n: int, t):
    """Return ``([nt], nt - [nt])`` with t = 1 mapped to ``(n, 0)``.

    Values of ``nt`` that sit within rounding distance of an integer are
    snapped, so ``t = k / n`` always lands exactly on node ``k``.
    """
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | (t > 1)) or np.any(np.isnan(t)):
        raise ValueError("times must lie in [0, 1]")
    x = n * t
    k = np.floor(x)
    near = np.rint(x)
    snap = np.abs(x - near) <= _SNAP * np.maximum(1.0, x)
    k = np.where(snap, near, k)
    frac = np.where(snap, 0.0, x - k)
    k = k.astype(np.int64)
    frac = np.where(k >= n, 0.0, frac)
    k = np.minimum(k, n)
    return k, frac


@dataclass(frozen=True)
class GridPath:
    """A continuous path, linear between the nodes ``k / n``."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return len(self.values) - 1

    def eval(self, t):
        k, frac = grid_index(self.n, t)
        nxt = self.values[np.minimum(k + 1, self.n)]
        out = self.values[k] + frac * (nxt - self.values[k])
        return out if out.ndim else float(out)

    __call__ = eval


@dataclass(frozen=True)
class WalkPath(GridPath):
    """X_n together with the increments and their gammas.

    ``values`` is the scaled partial sum sequence ``k -> S_k / sqrt(n)``.
    """

    increments: np.ndarray = None
    gammas: np.ndarray = None
    cum_gammas: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cg = np.empty(len(self.gammas) + 1)
        cg[0] = 0.0
        np.cumsum(self.gammas, out=cg[1:])
        object.__setattr__(self, "cum_gammas", cg)

    @property
    def partial_sums_scaled(self):
        return self.values

    @classmethod
    def from_increments(cls, increments, gammas):
        increments = np.asarray(increments, dtype=float)
        return cls(_scaled_sums(increments), increments, np.asarray(gammas, float))


@dataclass(frozen=True)
class SharpWalkPath(GridPath):
    """X_n^#: the same interpolation applied to the sharp increments."""

    increments: np.ndarray = None


def _scaled_sums(increments):
    n = len(increments)
    out = np.empty(n + 1)
    out[0] = 0.0
    np.cumsum(increments, out=out[1:])
    out[1:] /= np.sqrt(n)
    return out


def build_path(draws: CoordinateDraws, es: ErrorStructure1D):
    if len(draws) == 0:
        raise ValueError("cannot build a path from zero draws")
    gammas = np.asarray(gamma_coordinate(es, draws.u), dtype=float)
    path = WalkPath(_scaled_sums(draws.u), draws.u, gammas)
    sharp_inc = sharp_coordinate(es, draws)
    return path, SharpWalkPath(_scaled_sums(sharp_inc), sharp_inc)


def eval_path(path: GridPath, t):
    return path.eval(t)


def gamma_pair(path: WalkPath, s, t):
    """Gamma[X_n(s), X_n(t)] from the explicit partial-sum formula.

    Vectorised over broadcastable ``s`` and ``t``.
    """
    n = path.n
    ks, fs = grid_index(n, s)
    kt, ft = grid_index(n, t)
    lo = np.minimum(ks, kt)
    nxt = path.gammas[np.minimum(lo, n - 1)]
    weight = np.where(ks < kt, fs, np.where(ks > kt, ft, fs * ft))
    out = (path.cum_gammas[lo] + weight * nxt) / n
    return out if out.ndim else float(out)


def coordinate_partials(n: int, t: float) -> np.ndarray:
    """dX_n(t)/dU_k for k = 1..n as a dense vector."""
    k, frac = grid_index(n, t)
    k = int(k)
    a = np.zeros(n)
    a[:k] = 1.0
    if k < n:
        a[k] = float(frac)
    return a / np.sqrt(n)


def gamma_pair_chain_rule(path: WalkPath, s: float, t: float) -> float:
    """Same quantity as :func:`gamma_pair` but summed coordinate by coordinate."""
    a = coordinate_partials(path.n, s)
    b = coordinate_partials(path.n, t)
    return float(np.sum(a * b * path.gammas))


class PathStatistics(NamedTuple):
    max: float
    sup_norm: float
    argmax_t: float
    argmax_abs_t: float
    endpoint: float


def path_statistics(path: GridPath) -> PathStatistics:
    """Extremes of the path; the interpolation attains them at nodes.

    Ties go to the smallest index.
    """
    v = path.values
    k = int(np.argmax(v))
    ka = int(np.argmax(np.abs(v)))
    return PathStatistics(
        float(v[k]), float(abs(v[ka])), k / path.n, ka / path.n, float(v[-1])
    )
