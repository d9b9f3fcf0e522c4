"""Widths of compact sets relative to the random subspaces ``G(0, t) H``.

Two compact families are supported, both diagonal in the clock basis:

* diagonal box   ``{x : x_k^2 <= a_k^2}``, default ``a_k = 1/k``;
  squared width = sum of ``a_k^2`` over killed ``k``.
* ellipsoid      ``{x : sum b_k^2 x_k^2 <= 1}``, default ``b_k = k``;
  squared width = ``1 / b_m^2`` with ``m`` the smallest killed index.

All reference functions use ``|ln t|`` so that every reported quantity is
nonnegative for ``0 < t < 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import mpmath
import numpy as np
from scipy import special

from . import intensity as _intensity
from .intensity import IntensityModel

__all__ = [
    "CompactSpec",
    "WidthSample",
    "parse_rule",
    "width_sq_diagonal",
    "width_sq_ellipsoid",
    "exact_mean_width_sq_diagonal",
    "exact_var_width_sq_diagonal",
    "exact_mean_width_sq_ellipsoid",
    "mean_width_sq",
    "survival_law_inv_width",
    "inv_width_law",
    "log_void_probability",
    "void_probability",
    "expected_dimension",
    "alpha_pmf_exact",
    "dimension_tail_bound",
    "asymptote",
    "ASYMPTOTE_KINDS",
    "kolmogorov_width_ellipsoid",
    "coordinate_width_bound_diagonal",
    "criterion_scale_inverse",
]

ZETA2 = math.pi**2 / 6
ZETA3 = 1.2020569031595942


@dataclass(frozen=True)
class CompactSpec:
    """Box (``diagonal``) or ellipsoid compact set in the clock basis.

    ``rule`` is ``(name, value)``: ``("inv", p)`` gives ``a_k = k**-p`` for
    boxes (``p > 1/2``); ``("lin", c)`` gives ``b_k = c*k`` for ellipsoids.
    """

    kind: str
    rule: tuple[str, float] | None = None

    def __post_init__(self):
        if self.kind not in ("diagonal", "ellipsoid"):
            raise ValueError(f"unknown compact kind {self.kind!r}")
        default = ("inv", 1.0) if self.kind == "diagonal" else ("lin", 1.0)
        rule = default if self.rule is None else (self.rule[0], float(self.rule[1]))
        object.__setattr__(self, "rule", rule)
        name, v = rule
        if self.kind == "diagonal" and not (name == "inv" and v > 0.5):
            raise ValueError("box coefficients need rule inv:p with p > 1/2 (square summable)")
        if self.kind == "ellipsoid" and not (name == "lin" and v > 0):
            raise ValueError("ellipsoid weights need rule lin:c with c > 0 (increasing to infinity)")

    @property
    def is_default(self) -> bool:
        return self.rule == (("inv", 1.0) if self.kind == "diagonal" else ("lin", 1.0))

    def coefficients(self, n: int) -> np.ndarray:
        """``a_1..a_n`` for boxes, ``b_1..b_n`` for ellipsoids."""
        k = np.arange(1, n + 1, dtype=float)
        v = self.rule[1]
        return k**-v if self.kind == "diagonal" else v * k

    def coefficient(self, k: int) -> float:
        v = self.rule[1]
        return float(k) ** -v if self.kind == "diagonal" else v * k

    def tail_sq(self, n: int) -> float:
        """``sum_{k>n} a_k^2`` for boxes; ``1/b_{n+1}^2`` for ellipsoids."""
        if self.kind == "diagonal":
            return float(special.zeta(2 * self.rule[1], n + 1))
        return 1.0 / self.coefficient(n + 1) ** 2


def parse_rule(text: str) -> tuple[str, float]:
    name, _, value = text.partition(":")
    if name not in ("inv", "lin"):
        raise ValueError(f"unknown coefficient rule {text!r}")
    return name, float(value or 1.0)


@dataclass(frozen=True)
class WidthSample:
    t: float
    value_sq: float
    tail_bound: float
    censored: bool = False


def width_sq_diagonal(
    killed: Iterable[int], n: int, compact: CompactSpec | None = None, t: float = math.nan
) -> WidthSample:
    compact = compact or CompactSpec("diagonal")
    idx = np.fromiter(killed, dtype=np.int64)
    if idx.size and (idx.min() < 1 or idx.max() > n):
        raise ValueError("killed indices must lie in 1..N")
    a = compact.coefficients(n)
    value = math.fsum(a[idx - 1] ** 2) if idx.size else 0.0
    return WidthSample(t, value, compact.tail_sq(n))


def width_sq_ellipsoid(
    killed: Iterable[int], n: int, compact: CompactSpec | None = None, t: float = math.nan
) -> WidthSample:
    """Squared width ``1/b_m^2``, ``m`` the smallest killed index.

    With nothing killed inside the truncation the sample is censored: the
    value is recorded as 0 and the true width is at most ``1/b_{N+1}``.
    """
    compact = compact or CompactSpec("ellipsoid")
    killed = list(killed)
    if killed and (min(killed) < 1 or max(killed) > n):
        raise ValueError("killed indices must lie in 1..N")
    if not killed:
        return WidthSample(t, 0.0, compact.tail_sq(n), censored=True)
    return WidthSample(t, 1.0 / compact.coefficient(min(killed)) ** 2, 0.0)


def _check(t: float, tol: float):
    if not tol > 0:
        raise ValueError("tol must be positive")
    if t < 0 or math.isnan(t):
        raise ValueError("t must be nonnegative")


def _smallest(pred, start: int = 1) -> int:
    """Smallest integer m >= start with pred(m) true, for monotone pred."""
    lo, hi = start, start
    while not pred(hi):
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        lo, hi = (lo, mid) if pred(mid) else (mid, hi)
    return hi if not pred(lo) else lo


def _chunked_fsum(term, stop: int, start: int = 1, chunk: int = 1 << 20) -> float:
    parts = []
    for a in range(start, stop + 1, chunk):
        n = np.arange(a, min(a + chunk, stop + 1), dtype=float)
        parts.append(math.fsum(term(n)))
    return math.fsum(parts)


_SERIES_LIMIT = 2_000_000


def exact_mean_width_sq_diagonal(t: float, tol: float = 1e-12) -> float:
    """``E width^2 = sum_n (1 - e^{-nt}) / n^2`` for ``a_n = 1/n``, ``rate_n = n``.

    The series is split at ``M``: the head is summed directly, the tail as
    ``trigamma(M+1)`` minus an exponential remainder bounded by
    ``e^{-(M+1)t} / ((M+1)^2 (1 - e^{-t}))``. When ``M`` would be too large the
    closed form ``zeta(2) - Li2(e^{-t})`` is evaluated in extended precision.
    """
    _check(t, tol)
    if t == 0:
        return 0.0
    if math.isinf(t):
        return ZETA2
    q = -math.expm1(-t)

    def err(m):
        return math.exp(-(m + 1) * t) / ((m + 1) ** 2 * q) <= tol

    m = _smallest(err)
    if m <= _SERIES_LIMIT:
        head = _chunked_fsum(lambda n: -np.expm1(-n * t) / n**2, m)
        return head + float(special.polygamma(1, m + 1))
    with mpmath.workdps(40):
        return float(mpmath.zeta(2) - mpmath.polylog(2, mpmath.exp(-mpmath.mpf(t))))


def exact_var_width_sq_diagonal(t: float, tol: float = 1e-12) -> float:
    """``Var width^2 = sum_i (1 - e^{-it}) e^{-it} / i^4`` (box defaults)."""
    _check(t, tol)
    if t == 0 or math.isinf(t):
        return 0.0
    q = -math.expm1(-t)

    def err(m):
        return min(
            t / (2.0 * m * m),
            1.0 / (12.0 * m**3),
            math.exp(-(m + 1) * t) / ((m + 1) ** 4 * q),
        ) <= tol

    m = _smallest(err)
    return _chunked_fsum(lambda i: -np.expm1(-i * t) * np.exp(-i * t) / i**4, m)


def exact_mean_width_sq_ellipsoid(t: float, tol: float = 1e-12) -> float:
    """``E width^2 = (1 - e^{-t}) + sum_{n>=2} e^{-n(n-1)t/2} (1 - e^{-nt}) / n^2``."""
    _check(t, tol)
    if t == 0:
        return 0.0
    if math.isinf(t):
        return 1.0

    # tail past M is at most e^{-M(M+1)t/2} * sum_{n>M} 1/n^2 <= e^{-M(M+1)t/2} / M
    m = _smallest(lambda m: math.exp(-m * (m + 1) * t / 2) / m <= tol, start=2)
    head = _chunked_fsum(
        lambda n: np.exp(-n * (n - 1) * t / 2) * -np.expm1(-n * t) / n**2, m, start=2
    )
    return -math.expm1(-t) + head


def mean_width_sq(
    compact: CompactSpec,
    t: float,
    model: IntensityModel | None = None,
    tol: float = 1e-10,
    max_terms: int = 50_000_000,
) -> float:
    """Direct-series mean squared width for any rule/intensity combination.

    Box: ``sum a_n^2 (1 - e^{-rate_n t})`` with tail ``sum_{n>M} a_n^2`` added
    and the exponential remainder bounded by ``a_{M+1}^2 * tail_bound``.
    Ellipsoid: ``sum (1/b_n^2) P(first killed = n)`` with
    ``P(first killed = n) = exp(-t sum_{j<n} rate_j) (1 - e^{-rate_n t})``.
    """
    _check(t, tol)
    model = model or _intensity.linear()
    if t == 0:
        return 0.0
    if compact.kind == "diagonal":
        m = _smallest(
            lambda m: compact.coefficient(m + 1) ** 2 * _intensity.tail_bound(model, m, t) <= tol
        )
        if m > max_terms:
            raise ValueError("series needs too many terms at this t")
        lam = _intensity.rates(model, m)
        a = compact.coefficients(m)
        return math.fsum(a**2 * -np.expm1(-lam * t)) + compact.tail_sq(m)
    total, log_void, n = [], 0.0, 0
    while True:
        n += 1
        lam = _intensity.rate(model, n)
        total.append(math.exp(-t * log_void) * -math.expm1(-lam * t) / compact.coefficient(n) ** 2)
        log_void += lam
        if math.exp(-t * log_void) / compact.coefficient(n + 1) ** 2 <= tol:
            return math.fsum(total)
        if n > max_terms:
            raise ValueError("series needs too many terms at this t")


def survival_law_inv_width(t: float, n: int) -> float:
    """``P(1/width >= n) = exp(-n(n-1)t/2)`` for ellipsoid defaults and ``rate_k = k``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if n <= 1:
        return 1.0
    return math.exp(-n * (n - 1) * t / 2)


def inv_width_law(t: float, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Point masses of ``1/width`` on ``1..n_max``; the last point carries ``P(>= n_max)``."""
    n = np.arange(1, n_max + 2)
    surv = np.array([survival_law_inv_width(t, int(k)) for k in n])
    probs = surv[:-1] - surv[1:]
    probs[-1] = surv[-2]
    return n[:-1].astype(float), probs


def log_void_probability(t: float, model: IntensityModel | None = None, tol: float = 1e-13) -> float:
    """``ln P(dim = 0) = sum_j ln(1 - e^{-rate_j t})``.

    For ``rate_j = j`` this is the log of the Euler product ``c(t)``. The
    remainder past ``M`` is bounded by ``tail_bound / (1 - e^{-rate_{M+1} t})``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    model = model or _intensity.linear()

    def err(m):
        x = math.exp(-_intensity.rate(model, m + 1) * t)
        return _intensity.tail_bound(model, m, t) / (1.0 - x) <= tol

    m = _smallest(err)
    return math.fsum(np.log(-np.expm1(-_intensity.rates(model, m) * t)))


def void_probability(t: float, model: IntensityModel | None = None) -> float:
    return math.exp(log_void_probability(t, model))


def expected_dimension(t: float, model: IntensityModel | None = None, tol: float = 1e-13) -> float:
    """``E dim G(0,t) H = sum_k e^{-rate_k t}``."""
    if not t > 0:
        raise ValueError("t must be positive")
    model = model or _intensity.linear()
    if model.family == "linear":
        return math.exp(-model.c * t) / -math.expm1(-model.c * t)
    m = _intensity.truncation_index(model, t, tol)
    return math.fsum(np.exp(-_intensity.rates(model, m) * t)) if m else 0.0


def alpha_pmf_exact(t: float, n: int, model: IntensityModel | None = None) -> np.ndarray:
    """Law of the number of survivors among clocks ``1..n`` on ``(0, t]``.

    Poisson-binomial over survival probabilities ``p_j = e^{-rate_j t}``,
    built by multiplying out ``prod_j (1 - p_j + p_j x)``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    model = model or _intensity.linear()
    p = np.exp(-_intensity.rates(model, n) * t)
    pmf = np.zeros(n + 1)
    pmf[0] = 1.0
    for j, pj in enumerate(p, start=1):
        pmf[1 : j + 1] = pmf[1 : j + 1] * (1 - pj) + pmf[0:j] * pj
        pmf[0] *= 1 - pj
    return pmf


def dimension_tail_bound(t: float, n: int) -> float:
    """``P(dim >= n) <= e^{-nt} (1 + (1 - e^{-1}) / t)``, clipped to [0, 1]."""
    if n <= 0:
        return 1.0
    if not 0 < t < 1:
        raise ValueError("bound holds for t in (0, 1)")
    return min(1.0, math.exp(-n * t) * (1.0 + (1.0 - math.exp(-1.0)) / t))


ASYMPTOTE_KINDS = ("diag_mean", "ell_mean", "phi", "alpha_scale", "c_scale")


def asymptote(kind: str, t: float) -> float:
    """Small-``t`` reference scales.

    ``diag_mean``   t |ln t|
    ``ell_mean``    t |ln t| / 2
    ``phi``         sqrt((2/t) ln ln(1/t)), needs t < 1/e
    ``alpha_scale`` 2 |ln t| / t
    ``c_scale``     -pi^2 / (6t), the exact leading term of ln P(dim = 0)
    """
    if kind not in ASYMPTOTE_KINDS:
        raise ValueError(f"unknown asymptote {kind!r}")
    upper = math.exp(-1.0) if kind == "phi" else 1.0
    if not 0 < t < upper:
        raise ValueError(f"{kind} is defined for 0 < t < {upper:.6g}")
    L = -math.log(t)
    if kind == "diag_mean":
        return t * L
    if kind == "ell_mean":
        return 0.5 * t * L
    if kind == "phi":
        return math.sqrt(2.0 / t * math.log(L))
    if kind == "alpha_scale":
        return 2.0 * L / t
    return -ZETA2 / t


def kolmogorov_width_ellipsoid(n: int, compact: CompactSpec | None = None) -> float:
    """``d_n = 1/b_{n+1}`` (optimal subspace: the first ``n`` coordinates)."""
    compact = compact or CompactSpec("ellipsoid")
    if compact.kind != "ellipsoid":
        raise ValueError("exact Kolmogorov widths are provided for ellipsoids only")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if math.isinf(n):
        return 0.0
    return 1.0 / compact.coefficient(n + 1)


def coordinate_width_bound_diagonal(n: int, compact: CompactSpec | None = None) -> float:
    """Upper bound ``sqrt(sum_{k>n} a_k^2)`` on the n-width of a box (first ``n`` coordinates)."""
    compact = compact or CompactSpec("diagonal")
    if compact.kind != "diagonal":
        raise ValueError("coordinate bound is for box compacts")
    return math.sqrt(compact.tail_sq(n))


def criterion_scale_inverse(n: float) -> float:
    """``1 / (n^2 ln^2 n)``: a summable-enough threshold sequence.

    If the kill-time threshold for index ``n`` decays like this, then
    ``sum n * threshold(n)`` converges and width(t) * a(t) -> 0 a.s.
    """
    if n <= 1:
        raise ValueError("defined for n > 1")
    return 1.0 / (n * n * math.log(n) ** 2)
