"""Clock intensity sequences and truncation of the surviving index set.

Coordinate ``k`` of the semigroup is killed by a Poisson clock of intensity
``rate(k)``. A model is usable for simulation only when the intensities grow
fast enough that, for every window length ``t > 0``, the expected number of
coordinates surviving the window is finite::

    sum_k exp(-t * rate(k)) < inf    for all t > 0

Families
--------
linear    rate(k) = c * k
power     rate(k) = c * k**p           (p > 0)
constant  rate(k) = c                  (never summable; diagnostic only)
log       rate(k) = c * ln k           (never summable for all t; needs k >= 2)
table     explicit values for k = 1..L, then a tail family for k > L

Tail rules are evaluated at the absolute index ``k``, not at ``k - L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import special

__all__ = [
    "IntensityModel",
    "Condition2Diagnostic",
    "linear",
    "power",
    "constant",
    "logarithmic",
    "table",
    "rate",
    "rates",
    "tail_bound",
    "check_condition2",
    "truncation_index",
    "parse_intensity",
]

_ANALYTIC = ("linear", "power", "constant", "log")


@dataclass(frozen=True)
class IntensityModel:
    family: str
    c: float = 1.0
    p: float = 1.0
    values: tuple[float, ...] = ()
    tail: IntensityModel | None = None
    description: str = ""

    def __post_init__(self):
        if self.family not in _ANALYTIC + ("table",):
            raise ValueError(f"unknown intensity family {self.family!r}")
        if self.family == "table":
            if self.tail is None:
                raise ValueError("a table intensity model needs a tail extension rule")
            if self.tail.family == "table":
                raise ValueError("table tail must be an analytic family")
            if not self.values:
                raise ValueError("table intensity model needs at least one value")
            if any(not (v > 0 and math.isfinite(v)) for v in self.values):
                raise ValueError("table intensities must be positive and finite")
            return
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"intensity scale must be positive, got {self.c}")
        if self.family == "power" and not self.p > 0:
            raise ValueError(f"power exponent must be positive, got {self.p}")

    def rate(self, k: int) -> float:
        return rate(self, k)

    def __str__(self) -> str:
        if self.description:
            return self.description
        if self.family == "power":
            return f"power:{self.p:g}:{self.c:g}"
        if self.family == "table":
            return f"table[{len(self.values)}]:{self.tail}"
        return f"{self.family}:{self.c:g}"


def linear(c: float = 1.0) -> IntensityModel:
    return IntensityModel("linear", c=float(c))


def power(p: float, c: float = 1.0) -> IntensityModel:
    return IntensityModel("power", c=float(c), p=float(p))


def constant(c: float = 1.0) -> IntensityModel:
    return IntensityModel("constant", c=float(c))


def logarithmic(c: float = 1.0) -> IntensityModel:
    return IntensityModel("log", c=float(c))


def table(values, tail: IntensityModel | None, description: str = "") -> IntensityModel:
    return IntensityModel(
        "table", values=tuple(float(v) for v in values), tail=tail, description=description
    )


def _analytic_rates(model: IntensityModel, k: np.ndarray) -> np.ndarray:
    k = k.astype(float)
    if model.family == "linear":
        return model.c * k
    if model.family == "power":
        return model.c * k**model.p
    if model.family == "constant":
        return np.full_like(k, model.c)
    return model.c * np.log(k)


def rates(model: IntensityModel, n: int) -> np.ndarray:
    """Vector ``[rate(1), ..., rate(n)]``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    k = np.arange(1, n + 1)
    if model.family != "table":
        out = _analytic_rates(model, k)
    else:
        L = len(model.values)
        out = np.empty(n)
        head = min(n, L)
        out[:head] = model.values[:head]
        if n > L:
            out[L:] = _analytic_rates(model.tail, k[L:])
    if n and not np.all(out > 0):
        raise ValueError(f"intensity model {model} has a nonpositive rate among k <= {n}")
    return out


def rate(model: IntensityModel, k: int) -> float:
    if k < 1:
        raise ValueError(f"clock index must be >= 1, got {k}")
    if model.family == "table":
        if k <= len(model.values):
            return model.values[k - 1]
        model = model.tail
    value = float(_analytic_rates(model, np.array([k]))[0])
    if not value > 0:
        raise ValueError(f"intensity model {model} has nonpositive rate at k = {k}")
    return value


def _analytic_tail(model: IntensityModel, n: int, t: float) -> float:
    """Upper bound on sum_{k>n} exp(-t*rate(k)) for an analytic family."""
    c = model.c
    if model.family == "linear":
        # exact geometric tail
        return math.exp(-c * (n + 1) * t) / -math.expm1(-c * t)
    if model.family == "power":
        # decreasing summand: first term plus integral from n+1
        p = model.p
        x0 = c * t * (n + 1) ** p
        first = math.exp(-x0)
        integral = (
            special.gammaincc(1.0 / p, x0) * special.gamma(1.0 / p) / (p * (c * t) ** (1.0 / p))
        )
        return first + float(integral)
    if model.family == "constant":
        return math.inf
    s = c * t
    if s <= 1:
        return math.inf
    # sum_{k>n} k^{-s}
    return float(special.zeta(s, n + 1))


def tail_bound(model: IntensityModel, n: int, t: float) -> float:
    """Upper bound on the expected number of coordinates ``k > n`` surviving a window of length ``t``.

    Exact for the linear family. Also bounds the probability that any such
    coordinate survives.
    """
    if t < 0:
        raise ValueError("window length must be nonnegative")
    if t == 0:
        return math.inf
    if model.family != "table":
        return _analytic_tail(model, n, t)
    L = len(model.values)
    head = 0.0
    if n < L:
        head = math.fsum(np.exp(-t * np.asarray(model.values[n:])))
    return head + _analytic_tail(model.tail, max(n, L), t)


class Condition2Diagnostic(NamedTuple):
    passes: bool
    reason: str


def check_condition2(model: IntensityModel) -> Condition2Diagnostic:
    """Decide analytically whether sum_k exp(-rho*rate(k)) < inf for every rho > 0."""
    fam = model.tail.family if model.family == "table" else model.family
    where = "tail " if model.family == "table" else ""
    if fam == "linear":
        return Condition2Diagnostic(True, f"{where}linear growth: geometric series converges for every rho")
    if fam == "power":
        return Condition2Diagnostic(
            True, f"{where}power growth k^{model.tail.p if model.family == 'table' else model.p:g}: "
            "dominated by a convergent stretched-exponential series"
        )
    if fam == "constant":
        return Condition2Diagnostic(False, f"{where}constant rates: terms exp(-rho*c) do not vanish")
    return Condition2Diagnostic(
        False, f"{where}logarithmic rates: terms k^(-rho*c) form a divergent p-series for rho <= 1/c"
    )


def truncation_index(model: IntensityModel, t: float, eps: float) -> int:
    """Smallest ``N`` with ``tail_bound(model, N, t) <= eps``."""
    if not t > 0:
        raise ValueError("truncation is undefined for t <= 0: every coordinate survives")
    if not eps > 0:
        raise ValueError("eps must be positive")
    diag = check_condition2(model)
    if not diag.passes:
        raise ValueError(f"intensity model {model} fails the summability condition: {diag.reason}")

    if model.family == "linear":
        # exp(-c(N+1)t) / (1 - exp(-ct)) <= eps
        c = model.c
        need = (math.log(1.0 / eps) - math.log(-math.expm1(-c * t))) / (c * t) - 1.0
        n = max(0, math.ceil(need - 1e-12))
        # guard rounding at the boundary
        while n > 0 and tail_bound(model, n - 1, t) <= eps:
            n -= 1
        while tail_bound(model, n, t) > eps:
            n += 1
        return n

    if tail_bound(model, 0, t) <= eps:
        return 0
    lo, hi = 0, 1
    while tail_bound(model, hi, t) > eps:
        lo, hi = hi, hi * 2
        if hi > 1 << 40:
            raise ValueError("truncation index exceeds 2^40; window too short for this model")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_bound(model, mid, t) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


def _parse_analytic(parts: list[str], spec: str) -> IntensityModel:
    fam = parts[0]
    try:
        nums = [float(x) for x in parts[1:]]
    except ValueError:
        raise ValueError(f"bad intensity spec {spec!r}") from None
    if fam == "linear" and len(nums) <= 1:
        return linear(*nums)
    if fam == "power" and len(nums) in (1, 2):
        return power(*nums)
    if fam == "constant" and len(nums) <= 1:
        return constant(*nums)
    if fam in ("log", "logarithmic") and len(nums) <= 1:
        return logarithmic(*nums)
    raise ValueError(f"bad intensity spec {spec!r}")


def parse_intensity(spec: str) -> IntensityModel:
    """Parse ``linear:C``, ``power:P:C`` or ``table:PATH:<tail spec>``.

    A table file holds one positive decimal per line in index order; blank
    lines and ``#`` comments are skipped.
    """
    parts = spec.split(":")
    if parts[0] != "table":
        return _parse_analytic(parts, spec)
    if len(parts) < 3:
        raise ValueError(f"table intensity needs a path and a tail rule: {spec!r}")
    path, tail = Path(parts[1]), _parse_analytic(parts[2:], spec)
    values = []
    for line in path.read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            values.append(float(line))
    return table(values, tail, description=spec)
