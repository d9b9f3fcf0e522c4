"""Random operators on L2[0, 1] represented on refined step-function grids.

Two examples of random linear maps:

* point evaluation ``f -> f(theta)`` with ``theta`` uniform on [0, 1], which is
  continuous in mean square but not realizable by bounded functionals;
* conditional expectation onto the sigma-field generated by the intervals
  between the jumps of a Poisson process on [0, 1], a random finite-rank
  orthogonal projection.

The projection acts exactly on step functions over a grid that contains every
cut point, so it is a true orthogonal projection for the cell-length weighted
inner product ``<f, g> = sum_i w_i f_i g_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PoissonPartition",
    "GridProjectionMatrix",
    "PointEvalReport",
    "sample_partition",
    "condexp_matrix",
    "hs_sum_basis",
    "point_eval_demo",
    "rademacher",
]


@dataclass(frozen=True)
class PoissonPartition:
    cuts: tuple[float, ...]
    rate: float

    def __post_init__(self):
        c = self.cuts
        if any(not 0 < x < 1 for x in c) or any(b <= a for a, b in zip(c, c[1:])):
            raise ValueError("cut points must be strictly increasing inside (0, 1)")

    @property
    def n_intervals(self) -> int:
        return len(self.cuts) + 1


@dataclass(frozen=True, eq=False)
class GridProjectionMatrix:
    grid: np.ndarray  # breakpoints 0 = g_0 < ... < g_n = 1
    weights: np.ndarray  # cell lengths
    matrix: np.ndarray
    labels: np.ndarray | None = None  # partition interval of each cell

    @property
    def n_cells(self) -> int:
        return self.weights.size

    def apply(self, values) -> np.ndarray:
        return self.matrix @ np.asarray(values, dtype=float)

    def symmetry_defect(self) -> float:
        wm = self.weights[:, None] * self.matrix
        return float(np.max(np.abs(wm - wm.T)))

    def idempotence_defect(self) -> float:
        return float(np.max(np.abs(self.matrix @ self.matrix - self.matrix)))

    def trace(self) -> float:
        return float(np.trace(self.matrix))

    def spectrum(self) -> np.ndarray:
        """Eigenvalues via the similar matrix ``W^{1/2} M W^{-1/2}`` (symmetric when M is)."""
        r = np.sqrt(self.weights)
        sym = r[:, None] * self.matrix / r[None, :]
        return np.linalg.eigvalsh(0.5 * (sym + sym.T))


def sample_partition(rate: float, rng: np.random.Generator) -> PoissonPartition:
    """Jump times of a rate-``rate`` Poisson process on (0, 1)."""
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    if rate == 0:
        return PoissonPartition((), 0.0)
    times = []
    clock = rng.exponential(1.0 / rate)
    while clock < 1.0:
        times.append(clock)
        clock += rng.exponential(1.0 / rate)
    return PoissonPartition(tuple(t for t in times if t > 0), float(rate))


def condexp_matrix(partition: PoissonPartition, m: int) -> GridProjectionMatrix:
    """Conditional expectation onto partition intervals, on the uniform ``m``-grid refined by the cuts.

    ``M[i, j] = w_j / |I|`` when cells ``i`` and ``j`` lie in the same
    partition interval ``I`` and zero otherwise.
    """
    if m < 1:
        raise ValueError("grid size must be >= 1")
    grid = np.union1d(np.linspace(0.0, 1.0, m + 1), np.asarray(partition.cuts, dtype=float))
    w = np.diff(grid)
    mids = 0.5 * (grid[:-1] + grid[1:])
    labels = np.searchsorted(np.asarray(partition.cuts, dtype=float), mids)
    lengths = np.bincount(labels, weights=w, minlength=partition.n_intervals)
    same = labels[:, None] == labels[None, :]
    mat = np.where(same, w[None, :] / lengths[labels][:, None], 0.0)
    return GridProjectionMatrix(grid, w, mat, labels)


def hs_sum_basis(op: GridProjectionMatrix, k: int) -> np.ndarray:
    """Partial sums ``sum_{n<=j} ||A e_n||^2`` for ``j = 1..k``.

    The basis is the normalized cell indicators ``e_n = 1_{cell n} / sqrt(w_n)``,
    orthonormal in the weighted inner product.
    """
    if not 1 <= k <= op.n_cells:
        raise ValueError(f"k must lie in 1..{op.n_cells}")
    w = op.weights
    # ||A e_n||^2 = (1/w_n) sum_i w_i M[i, n]^2
    norms = (w[:, None] * op.matrix[:, :k] ** 2).sum(axis=0) / w[:k]
    return np.cumsum(norms)


def rademacher(k: int, s):
    """The k-th Rademacher function ``sign(sin(2^k pi s))`` read off the binary digits of ``s``."""
    s = np.asarray(s, dtype=float)
    digit = np.floor(s * 2.0**k) % 2
    return 1.0 - 2.0 * digit


@dataclass(frozen=True)
class PointEvalReport:
    family: str
    trials: int
    second_moment_estimate: float
    second_moment_stderr: float
    l2_norm: float
    nonvanishing_fraction: float | None = None
    mean_value: float | None = None


_FAMILIES = {
    "constant": (lambda s: np.ones_like(s), 1.0),
    "linear": (lambda s: 2.0 * s, 4.0 / 3.0),
}


def point_eval_demo(
    family: str, n: int, rng: np.random.Generator, trials: int = 1000
) -> PointEvalReport:
    """Evaluate test functions at a uniform random point.

    ``constant`` and ``linear`` (``f(s) = 2s``) use ``n`` independent trials and
    report the Monte-Carlo mean of ``f(theta)^2`` against ``int f^2``.

    ``rademacher`` uses ``trials`` uniform points ``theta``, generated digit by
    digit so that ``r_1(theta)..r_n(theta)`` are exact for any ``n``: the k-th
    Rademacher function is ``1 - 2 d_k`` for the k-th binary digit ``d_k``.
    Each ``|r_k(theta)| = 1``, so the i.i.d. sequence never tends to zero.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if family == "rademacher":
        digits = rng.integers(0, 2, size=(trials, n))
        values = 1.0 - 2.0 * digits
        sq = values**2
        return PointEvalReport(
            family,
            trials,
            float(sq.mean()),
            float(sq.std(ddof=1) / math.sqrt(sq.size)),
            1.0,
            float(np.mean(np.abs(values) >= 0.5)),
            float(values.mean()),
        )
    if family not in _FAMILIES:
        raise ValueError(f"unknown test family {family!r}")
    f, norm = _FAMILIES[family]
    theta = rng.random(n)
    sq = f(theta) ** 2
    se = float(sq.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return PointEvalReport(family, n, float(sq.mean()), se, norm)
