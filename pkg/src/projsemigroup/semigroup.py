"""Poisson-clock semigroups of random coordinate projections.

Coordinate ``k`` of a fixed orthonormal basis is switched off on a time window
``(s, t]`` as soon as its Poisson clock rings inside the window. The random
projection ``G(s, t)`` keeps exactly the coordinates whose clocks stay silent,
so the whole semigroup is encoded by the clock jump times. Windows are
half-open: a jump exactly at ``s`` does not kill on ``(s, t]``, a jump exactly
at ``t`` does. This makes ``G(r, s) G(s, t) = G(r, t)`` hold exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import intensity as _intensity
from .intensity import IntensityModel

__all__ = [
    "PoissonClock",
    "ClockFieldSample",
    "ProjectionRealization",
    "DimensionCount",
    "kill_times_from_uniforms",
    "sample_first_kill_times",
    "sample_clock_field",
    "realize",
    "compose",
    "apply",
    "dim_alpha",
    "identity",
]


@dataclass(frozen=True)
class PoissonClock:
    k: int
    jumps: np.ndarray

    def __post_init__(self):
        j = np.asarray(self.jumps, dtype=float)
        if j.ndim != 1 or (j.size > 1 and not np.all(np.diff(j) > 0)):
            raise ValueError(f"jump times of clock {self.k} must be strictly increasing")
        object.__setattr__(self, "jumps", j)

    def rings_in(self, s: float, t: float) -> bool:
        """True iff the clock jumps in ``(s, t]``."""
        i = np.searchsorted(self.jumps, s, side="right")
        return bool(i < self.jumps.size and self.jumps[i] <= t)


@dataclass(frozen=True, eq=False)
class ClockFieldSample:
    """One realization of clocks ``1..truncation`` on ``[0, horizon]``.

    ``eps`` bounds the expected number of coordinates beyond the truncation
    that survive any window of length at least ``min_window``.
    """

    horizon: float
    truncation: int
    eps: float
    min_window: float
    clocks: tuple[PoissonClock, ...]
    master_seed: int | None = None
    path: int | None = None

    def __post_init__(self):
        if len(self.clocks) != self.truncation:
            raise ValueError("a clock field must hold exactly one clock per index 1..N")
        for i, clock in enumerate(self.clocks, start=1):
            if clock.k != i:
                raise ValueError("clocks must be indexed 1..N in order")
            if clock.jumps.size and not (clock.jumps[0] >= 0 and clock.jumps[-1] <= self.horizon):
                raise ValueError(f"clock {i} has jumps outside [0, horizon]")


@dataclass(frozen=True)
class ProjectionRealization:
    s: float
    t: float
    survivors: frozenset[int]
    truncation: int
    tail_eps: float
    source: ClockFieldSample | None = field(default=None, compare=False, repr=False)

    @property
    def killed(self) -> frozenset[int]:
        return frozenset(range(1, self.truncation + 1)) - self.survivors

    def mask(self) -> np.ndarray:
        """Boolean survival indicator over indices ``1..truncation``."""
        m = np.zeros(self.truncation, dtype=bool)
        if self.survivors:
            m[np.fromiter(self.survivors, dtype=np.int64) - 1] = True
        return m

    def matrix(self) -> np.ndarray:
        """Diagonal 0/1 integer matrix of the projection on the truncated basis."""
        return np.diag(self.mask().astype(np.int64))


class DimensionCount(int):
    """Number of surviving coordinates; ``tail_eps`` bounds the uncounted ones."""

    tail_eps: float

    def __new__(cls, value: int, tail_eps: float):
        obj = super().__new__(cls, value)
        obj.tail_eps = tail_eps
        return obj


def kill_times_from_uniforms(u: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Inverse-CDF exponential kill times ``-ln(u) / lam``."""
    return -np.log(u) / lam


def sample_first_kill_times(model: IntensityModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """First jump times of clocks ``1..n``.

    One uniform per clock is consumed in index order. Sufficient for every
    window anchored at 0: coordinate ``k`` survives ``(0, t]`` iff
    ``tau[k-1] > t``.
    """
    if n < 1:
        raise ValueError("need at least one clock")
    # 1 - U lies in (0, 1] so the logarithm is finite
    u = 1.0 - rng.random(n)
    return kill_times_from_uniforms(u, _intensity.rates(model, n))


def _sample_jumps(lam: np.ndarray, horizon: float, rng: np.random.Generator) -> list[np.ndarray]:
    mean = lam * horizon
    budget = np.ceil(mean + 6.0 * np.sqrt(mean) + 8.0).astype(np.int64)
    gaps = rng.standard_exponential(int(budget.sum()))
    bounds = np.concatenate(([0], np.cumsum(budget)))
    out = []
    pending = []
    for i, l in enumerate(lam):
        times = np.cumsum(gaps[bounds[i]:bounds[i + 1]]) / l
        out.append(times)
        if times[-1] <= horizon:
            pending.append(i)
    # rare overflow of the budget: keep drawing in ascending clock order
    while pending:
        still = []
        for i in pending:
            extra = out[i][-1] + np.cumsum(rng.standard_exponential(int(budget[i]))) / lam[i]
            out[i] = np.concatenate((out[i], extra))
            if extra[-1] <= horizon:
                still.append(i)
        pending = still
    return [times[times <= horizon] for times in out]


def sample_clock_field(
    model: IntensityModel,
    horizon: float,
    n: int,
    rng: np.random.Generator,
    min_window: float | None = None,
    master_seed: int | None = None,
    path: int | None = None,
) -> ClockFieldSample:
    """Full jump lists of clocks ``1..n`` on ``[0, horizon]``.

    Jumps are cumulative sums of exponential gaps. Gaps for all clocks are
    drawn in a single block laid out in ascending clock order, with a
    per-clock budget sized well above the Poisson mean; the rare clock that
    exhausts its budget draws more afterwards, again in ascending order.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if n < 1:
        raise ValueError("need at least one clock")
    min_window = horizon if min_window is None else min_window
    lam = _intensity.rates(model, n)
    jumps = _sample_jumps(lam, horizon, rng)
    clocks = tuple(PoissonClock(k, j) for k, j in enumerate(jumps, start=1))
    eps = _intensity.tail_bound(model, n, min_window)
    return ClockFieldSample(horizon, n, eps, min_window, clocks, master_seed, path)


def _window_tail(field: ClockFieldSample, model: IntensityModel | None, h: float) -> float:
    if h <= 0:
        return math.inf
    if model is not None:
        return _intensity.tail_bound(model, field.truncation, h)
    return field.eps if h >= field.min_window else math.inf


def realize(
    field: ClockFieldSample, s: float, t: float, model: IntensityModel | None = None
) -> ProjectionRealization:
    """The projection ``G(s, t)``: indices whose clock has no jump in ``(s, t]``.

    With ``model`` given, the tail bound is recomputed for the actual window
    length; otherwise the field's certificate is used when it applies.
    """
    if not (0 <= s <= t <= field.horizon):
        raise ValueError(f"window ({s}, {t}] is not inside [0, {field.horizon}]")
    if s == t:
        survivors = frozenset(range(1, field.truncation + 1))
    else:
        survivors = frozenset(c.k for c in field.clocks if not c.rings_in(s, t))
    return ProjectionRealization(
        s, t, survivors, field.truncation, _window_tail(field, model, t - s), source=field
    )


def identity(n: int, at: float = 0.0) -> ProjectionRealization:
    return ProjectionRealization(at, at, frozenset(range(1, n + 1)), n, math.inf)


def compose(first: ProjectionRealization, second: ProjectionRealization) -> ProjectionRealization:
    """``G(r, s) G(s, t) = G(r, t)`` for abutting windows of the same field."""
    if first.t != second.s:
        raise ValueError(f"windows do not abut: ({first.s}, {first.t}] then ({second.s}, {second.t}]")
    if first.truncation != second.truncation:
        raise ValueError("realizations have different truncations")
    if first.source is not None and second.source is not None and first.source is not second.source:
        raise ValueError("realizations come from different clock fields")
    source = first.source if first.source is not None else second.source
    if first.s == first.t:
        tail = second.tail_eps
    elif second.s == second.t:
        tail = first.tail_eps
    else:
        # surviving both windows is rarer than surviving either
        tail = min(first.tail_eps, second.tail_eps)
    return ProjectionRealization(
        first.s, second.t, first.survivors & second.survivors, first.truncation, tail, source=source
    )


def apply(r: ProjectionRealization, u) -> np.ndarray:
    """Coefficients of ``G u``: killed coordinates set to zero."""
    u = np.asarray(u)
    if u.shape[-1:] != (r.truncation,):
        raise ValueError(f"expected {r.truncation} coefficients, got shape {u.shape}")
    return np.where(r.mask(), u, np.zeros((), dtype=u.dtype))


def dim_alpha(r: ProjectionRealization) -> DimensionCount:
    return DimensionCount(len(r.survivors), r.tail_eps)
