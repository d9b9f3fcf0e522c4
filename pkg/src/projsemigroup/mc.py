"""Monte-Carlo engine with per-path counter-based streams.

Every path ``i`` owns a Philox stream keyed on ``(path, master_seed)``. Paths
are cut into fixed-size chunks that may run on any number of worker
processes; per-path values are reassembled in path order and reduced with
``math.fsum``, so results do not depend on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from . import intensity as _intensity
from .intensity import IntensityModel
from .semigroup import sample_clock_field, sample_first_kill_times, realize
from .widths import CompactSpec

__all__ = [
    "ExperimentSpec",
    "MCEstimate",
    "ChiSquareReport",
    "derive_path_stream",
    "estimate",
    "simulate_paths",
    "run_experiment",
    "compare_to_law",
]

_MASK64 = (1 << 64) - 1
CHUNK = 4096
QUANTITIES = ("width_diag", "width_ellipsoid", "alpha", "survival_indicator")


def derive_path_stream(master_seed: int, path: int) -> np.random.Generator:
    """Philox4x64 generator keyed on ``(path, master_seed)``, counter at zero."""
    if not (0 <= master_seed <= _MASK64 and 0 <= path <= _MASK64):
        raise ValueError("seed and path index must be unsigned 64-bit integers")
    key = np.array([path, master_seed], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class ExperimentSpec:
    quantity: str
    t_grid: tuple[float, ...]
    paths: int
    master_seed: int = 0
    intensity: IntensityModel = field(default_factory=_intensity.linear)
    compact: CompactSpec | None = None
    trunc_eps: float = 1e-9
    # survival_indicator(k, s, h) parameters; ``t_grid`` then lists window lengths
    k: int = 1
    s: float = 0.0

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise ValueError(f"unknown quantity {self.quantity!r}")
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))
        if not self.t_grid:
            raise ValueError("t_grid must be nonempty")
        if any(t <= 0 for t in self.t_grid) or any(
            b <= a for a, b in zip(self.t_grid, self.t_grid[1:])
        ):
            raise ValueError("t_grid must be strictly increasing positive times")
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if self.quantity in ("width_diag", "width_ellipsoid") and self.compact is None:
            kind = "diagonal" if self.quantity == "width_diag" else "ellipsoid"
            object.__setattr__(self, "compact", CompactSpec(kind))

    def truncation(self) -> int:
        if self.quantity == "survival_indicator":
            return self.k
        try:
            return _intensity.truncation_index(self.intensity, self.t_grid[0], self.trunc_eps)
        except ValueError as exc:
            raise ValueError(f"truncation infeasible: {exc}") from exc


@dataclass(frozen=True)
class MCEstimate:
    t: float
    mean: float
    variance: float
    stderr: float
    ci95: tuple[float, float]
    n_paths: int
    censored_fraction: float = 0.0


def estimate(values, t: float = math.nan, censored: np.ndarray | None = None) -> MCEstimate:
    """Sample mean, unbiased variance and a normal 95% interval."""
    x = np.asarray(values, dtype=float).ravel()
    n = x.size
    if n == 0:
        raise ValueError("no samples")
    mean = math.fsum(x) / n
    var = math.fsum((x - mean) ** 2) / (n - 1) if n > 1 else 0.0
    se = math.sqrt(var / n)
    cf = 0.0 if censored is None else float(np.count_nonzero(censored)) / n
    return MCEstimate(t, mean, var, se, (mean - 1.96 * se, mean + 1.96 * se), n, cf)


def _path_values(spec: ExperimentSpec, n: int, a_sq, a_tail, inv_b_sq, path: int):
    rng = derive_path_stream(spec.master_seed, path)
    if spec.quantity == "survival_indicator":
        horizon = spec.s + spec.t_grid[-1]
        fld = sample_clock_field(spec.intensity, horizon, spec.k, rng)
        vals = [float(spec.k in realize(fld, spec.s, spec.s + h).survivors) for h in spec.t_grid]
        return vals, [False] * len(vals)
    tau = sample_first_kill_times(spec.intensity, n, rng)
    vals, cens = [], []
    for t in spec.t_grid:
        killed = tau <= t
        if spec.quantity == "alpha":
            vals.append(float(n - np.count_nonzero(killed)))
            cens.append(False)
        elif spec.quantity == "width_diag":
            # coordinates past the truncation are killed except on an event of
            # expected size <= trunc_eps, so their mass a_k^2 is counted in full
            vals.append(math.fsum(a_sq[killed]) + a_tail)
            cens.append(False)
        else:
            idx = np.flatnonzero(killed)
            if idx.size:
                vals.append(float(inv_b_sq[idx[0]]))
                cens.append(False)
            else:
                vals.append(0.0)
                cens.append(True)
    return vals, cens


def _run_chunk(args):
    spec, n, start, stop = args
    a_sq = inv_b_sq = None
    a_tail = 0.0
    if spec.quantity == "width_diag":
        a_sq = spec.compact.coefficients(n) ** 2
        a_tail = spec.compact.tail_sq(n)
    elif spec.quantity == "width_ellipsoid":
        inv_b_sq = 1.0 / spec.compact.coefficients(n) ** 2
    vals = np.empty((stop - start, len(spec.t_grid)))
    cens = np.zeros((stop - start, len(spec.t_grid)), dtype=bool)
    for i, path in enumerate(range(start, stop)):
        vals[i], cens[i] = _path_values(spec, n, a_sq, a_tail, inv_b_sq, path)
    return vals, cens


def simulate_paths(spec: ExperimentSpec, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Per-path values, shape ``(paths, len(t_grid))``, and censoring flags."""
    n = spec.truncation()
    jobs = [(spec, n, a, min(a + CHUNK, spec.paths)) for a in range(0, spec.paths, CHUNK)]
    if workers <= 1 or len(jobs) == 1:
        parts = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> list[MCEstimate]:
    vals, cens = simulate_paths(spec, workers)
    return [estimate(vals[:, j], t, cens[:, j]) for j, t in enumerate(spec.t_grid)]


@dataclass(frozen=True)
class ChiSquareReport:
    statistic: float
    p_value: float
    dof: int
    passed: bool
    bins: int


def _merge_bins(expected: np.ndarray, min_count: float) -> list[slice]:
    groups, start, acc = [], 0, 0.0
    for i, e in enumerate(expected):
        acc += e
        if acc >= min_count:
            groups.append(slice(start, i + 1))
            start, acc = i + 1, 0.0
    if start < expected.size:
        if groups:
            groups[-1] = slice(groups[-1].start, expected.size)
        else:
            groups.append(slice(0, expected.size))
    return groups


def compare_to_law(
    samples,
    support: Sequence[float],
    probabilities: Sequence[float],
    alpha: float = 0.01,
    min_expected: float = 5.0,
) -> ChiSquareReport:
    """Chi-square goodness of fit of integer-valued samples to a discrete law.

    Adjacent support points are merged left to right until every bin expects
    at least ``min_expected`` counts. Any sample off the support is an event of
    probability zero under the law, so the fit is rejected outright.
    """
    support = np.asarray(support, dtype=float)
    probs = np.asarray(probabilities, dtype=float)
    if support.shape != probs.shape or support.size < 2:
        raise ValueError("a law needs at least two support points")
    if np.any(probs < 0) or abs(math.fsum(probs) - 1.0) > 1e-9:
        raise ValueError("law probabilities must be nonnegative and sum to 1")
    order = np.argsort(support)
    support, probs = support[order], probs[order]
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    pos = np.searchsorted(support, x)
    on_support = (pos < support.size) & (support[np.minimum(pos, support.size - 1)] == x)
    counts = np.bincount(pos[on_support], minlength=support.size).astype(float)
    groups = _merge_bins(probs * n, min_expected)
    if len(groups) < 2:
        raise ValueError("law is degenerate after merging bins")
    obs = np.array([counts[g].sum() for g in groups])
    exp = np.array([probs[g].sum() * n for g in groups])
    dof = len(groups) - 1
    if not np.all(on_support):
        return ChiSquareReport(math.inf, 0.0, dof, False, len(groups))
    stat = float(np.sum((obs - exp) ** 2 / exp))
    p = float(stats.chi2.sf(stat, dof))
    return ChiSquareReport(stat, p, dof, p > alpha, len(groups))
