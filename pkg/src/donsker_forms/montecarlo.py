"""Deterministic Monte Carlo estimation and integrability diagnostics.

Every sample ``i`` of an estimate draws from its own counter-based stream
(Philox keyed by ``(master_seed, stream_id)``, counter block ``i``), and sums
are accumulated with error-free transformations.  The reported numbers are
therefore independent of how samples are split across workers.
"""

from __future__ import annotations

import math
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Sequence

import numpy as np

from .errors import NonFiniteSampleError
from .structures import ErrorStructure1D, gamma_coordinate

CHUNK = 512


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in 64 bits")
        if int(self.stream_id) < 0:
            raise ValueError("stream_id must be non-negative")

    def key(self) -> np.ndarray:
        ss = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_id),))
        return ss.generate_state(2, np.uint64)

    def generator(self, index: int, key=None) -> np.random.Generator:
        """Stream for sample ``index``: counter block ``index`` under this key."""
        key = self.key() if key is None else key
        counter = np.array([0, 0, index & (2**64 - 1), index >> 64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(counter=counter, key=key))

    def child(self, stream_id: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, stream_id)


@dataclass(frozen=True)
class EstimateReport:
    mean: float
    stderr: float
    count: int
    seed: int
    ci95: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "ci95", (self.mean - 1.96 * self.stderr, self.mean + 1.96 * self.stderr)
        )

    def within(self, target: float, k: float = 3.0, target_stderr: float = 0.0) -> bool:
        """|mean - target| <= k * combined standard error."""
        return abs(self.mean - target) <= k * math.hypot(self.stderr, target_stderr)


def _grow(partials: list, x: float) -> None:
    # Shewchuk: keep non-overlapping partials whose exact sum is the total
    i = 0
    for y in partials:
        if abs(x) < abs(y):
            x, y = y, x
        hi = x + y
        lo = y - (hi - x)
        if lo:
            partials[i] = lo
            i += 1
        x = hi
    partials[i:] = [x]


class ExactSum:
    """Running sum held exactly as a list of non-overlapping floats."""

    __slots__ = ("partials",)

    def __init__(self, values=()):
        self.partials = []
        for v in values:
            _grow(self.partials, float(v))

    def add(self, x: float) -> None:
        _grow(self.partials, float(x))

    def merge(self, other: "ExactSum") -> "ExactSum":
        for p in other.partials:
            _grow(self.partials, p)
        return self

    @property
    def value(self) -> float:
        return math.fsum(self.partials)


class MomentAccumulator:
    """Exact first and second moment sums for ``width`` quantities."""

    def __init__(self, width: int):
        self.width = width
        self.count = 0
        self.s1 = [ExactSum() for _ in range(width)]
        self.s2 = [ExactSum() for _ in range(width)]

    def add_rows(self, rows: np.ndarray) -> None:
        rows = np.asarray(rows, dtype=float).reshape(-1, self.width)
        for j in range(self.width):
            col = rows[:, j].tolist()
            s1, s2 = self.s1[j], self.s2[j]
            for x in col:
                _grow(s1.partials, x)
                _grow(s2.partials, x * x)
        self.count += rows.shape[0]

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.width != self.width:
            raise ValueError("width mismatch")
        for a, b in zip(self.s1 + self.s2, other.s1 + other.s2):
            a.merge(b)
        self.count += other.count
        return self

    def reports(self, seed: int) -> List[EstimateReport]:
        n = self.count
        out = []
        for s1, s2 in zip(self.s1, self.s2):
            total = s1.value
            mean = total / n
            var = (s2.value - total * mean) / (n - 1) if n > 1 else 0.0
            out.append(EstimateReport(mean, math.sqrt(max(var, 0.0) / n), n, seed))
        return out


def _evaluate_chunk(sampler, seed: SeedSpec, start: int, stop: int) -> MomentAccumulator:
    key = seed.key()
    rows = []
    for i in range(start, stop):
        x = np.atleast_1d(np.asarray(sampler(seed.generator(i, key)), dtype=float))
        bad = ~np.isfinite(x)
        if bad.any():
            raise NonFiniteSampleError(i, seed.stream_id, x[bad][0])
        rows.append(x)
    acc = MomentAccumulator(len(rows[0]))
    acc.add_rows(np.vstack(rows))
    return acc


# set just before forking so workers inherit the (possibly unpicklable) sampler
_JOB = None


def _worker_chunk(start, stop):
    sampler, seed = _JOB
    return _evaluate_chunk(sampler, seed, start, stop)


def default_workers() -> int:
    return int(os.environ.get("DONSKER_FORMS_WORKERS", "1"))


def estimate_many(
    sampler: Callable[[np.random.Generator], Sequence[float]],
    count: int,
    seed: SeedSpec,
    workers: int | None = None,
    chunk: int = CHUNK,
) -> List[EstimateReport]:
    """Mean and standard error of every component of a vector-valued sampler."""
    global _JOB
    if count < 2:
        raise ValueError("count must be >= 2")
    workers = default_workers() if workers is None else int(workers)
    bounds = [(a, min(a + chunk, count)) for a in range(0, count, chunk)]
    if workers <= 1 or len(bounds) == 1:
        parts = [_evaluate_chunk(sampler, seed, a, b) for a, b in bounds]
    else:
        _JOB = (sampler, seed)
        try:
            ctx = multiprocessing.get_context("fork")
            with ProcessPoolExecutor(workers, mp_context=ctx) as pool:
                parts = list(pool.map(_worker_chunk, *zip(*bounds)))
        finally:
            _JOB = None
    acc = parts[0]
    for p in parts[1:]:
        acc.merge(p)
    return acc.reports(seed.master_seed)


def estimate(sampler, count, seed, workers=None) -> EstimateReport:
    """Scalar version of :func:`estimate_many`."""
    reports = estimate_many(sampler, count, seed, workers)
    if len(reports) != 1:
        raise ValueError("sampler returned more than one value; use estimate_many")
    return reports[0]


# ---------------------------------------------------------------- diagnostics

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(200)
_TAIL_END = 12.0


def _gauss_legendre(f, a, b):
    if b <= a:
        return 0.0
    x = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
    return float(0.5 * (b - a) * np.dot(_GL_WEIGHTS, f(x)))


def _phi(x):
    return np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)


def normal_two_sided_tail(a: float) -> float:
    """P(|N| >= a) by quadrature on [a, 12]."""
    a = max(a, 0.0)
    # split at a + 1 to keep the peak near a well resolved
    return 2.0 * (_gauss_legendre(_phi, a, min(a + 1, _TAIL_END))
                  + _gauss_legendre(_phi, min(a + 1, _TAIL_END), _TAIL_END))


def eq4_bound(alpha: float, sigma: float = 1.0) -> float:
    """Limiting bound on E[Z_n^2; Z_n^2 >= alpha] from the maximal inequality.

    ``2 alpha P(|N| >= sqrt(alpha) / (2 sigma)) + 2 E(4 sigma^2 N^2 - alpha)^+``.
    """
    if alpha < 8 * sigma**2:
        raise ValueError("bound requires alpha >= 8 sigma^2")
    a = math.sqrt(alpha) / (2 * sigma)

    def excess(x):
        return (4 * sigma**2 * x * x - alpha) * _phi(x)

    mid = min(a + 1, _TAIL_END)
    positive_part = 2.0 * (_gauss_legendre(excess, a, mid) + _gauss_legendre(excess, mid, _TAIL_END))
    return 2 * alpha * normal_two_sided_tail(a) + 2 * positive_part


@dataclass(frozen=True)
class UIDiagnostic:
    alpha: float
    tail_mean: float
    tail_stderr: float
    eq4_bound: float

    @property
    def ok(self) -> bool:
        return self.tail_mean <= self.eq4_bound + 3 * self.tail_stderr


def ui_diagnostic(zsq_samples, alpha: float, sigma: float = 1.0) -> UIDiagnostic:
    bound = eq4_bound(alpha, sigma)
    z = np.asarray(zsq_samples, dtype=float)
    tail = np.where(z >= alpha, z, 0.0)
    se = float(tail.std(ddof=1) / math.sqrt(len(tail))) if len(tail) > 1 else 0.0
    return UIDiagnostic(alpha, math.fsum(tail) / len(tail), se, bound)


def _lemma3_sampler(es: ErrorStructure1D, n: int):
    def sampler(rng):
        return float(np.max(gamma_coordinate(es, es.sample(rng, n)))) / n

    return sampler


def lemma3_diagnostic(
    es: ErrorStructure1D, n_values, samples: int, seed: SeedSpec, workers=None
) -> List[EstimateReport]:
    """Estimates of E[max_{k<=n} gamma(U_k) / n] for each n."""
    n_values = list(n_values)
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be increasing")
    return [
        estimate(_lemma3_sampler(es, n), samples, seed.child(seed.stream_id + j), workers)
        for j, n in enumerate(n_values)
    ]
