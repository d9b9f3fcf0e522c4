"""Verification suites: exact-oracle identities, distribution tests and trend checks.

Each check returns a :class:`CheckResult`. Oracles used here are computed by
routes independent of the evaluators they check: brute-force summation,
adaptive quadrature, the modular transformation of the Euler product, and
Monte-Carlo estimates with their standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np

from . import intensity as _intensity
from . import mc, randomop, semigroup, widths
from .widths import ZETA2, ZETA3

__all__ = ["CheckResult", "SUITES", "run_suite", "substream_seed"]


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "name": self.name,
            "status": "pass" if self.passed else "fail",
            "details": self.details,
        }


def substream_seed(master_seed: int, tag: int) -> int:
    """Independent 64-bit seed for a named sub-experiment."""
    return int(np.random.SeedSequence([master_seed, tag]).generate_state(1, np.uint64)[0])


def _within(mean: float, se: float, target: float, k: float = 3.0) -> bool:
    return abs(mean - target) <= k * se


def _brute_diag_mean(t: float, terms: int = 2_000_000) -> float:
    n = np.arange(1, terms + 1, dtype=float)
    return math.fsum(-np.expm1(-n * t) / n**2) + 1.0 / terms  # tail <= sum_{n>terms} 1/n^2 ~ 1/terms


def _quad_diag_mean(t: float) -> float:
    with mpmath.workdps(30):
        return float(mpmath.quad(lambda s: -mpmath.log(-mpmath.expm1(-s)), [0, t]))


def _eta_log_c(t: float) -> float:
    """ln prod_j (1 - e^{-jt}) via the modular transformation of the eta function."""
    s = 0.0
    for n in range(1, 50):
        term = math.log1p(-math.exp(-4 * math.pi**2 * n / t))
        s += term
        if abs(term) < 1e-300:
            break
    return 0.5 * math.log(2 * math.pi / t) - ZETA2 / t + t / 24 + s


# -- semigroup ---------------------------------------------------------------


def check_semigroup_laws(paths: int, seed: int, workers: int = 1) -> CheckResult:
    fields = min(paths, 10_000)
    model = _intensity.linear()
    horizon, min_window = 1.0, 0.25
    n = _intensity.truncation_index(model, min_window, 1e-2)
    base = substream_seed(seed, 1)
    compose_fail = identity_fail = matrix_fail = fixed_fail = 0
    for i in range(fields):
        rng = mc.derive_path_stream(base, i)
        fld = semigroup.sample_clock_field(model, horizon, n, rng, min_window=min_window,
                                           master_seed=base, path=i)
        r, s, t = np.sort(rng.random(3)) * horizon
        g_rs, g_st, g_rt = (semigroup.realize(fld, *w) for w in ((r, s), (s, t), (r, t)))
        if semigroup.compose(g_rs, g_st).survivors != g_rt.survivors:
            compose_fail += 1
        fixed = semigroup.compose(semigroup.realize(fld, 0, 0.25), semigroup.realize(fld, 0.25, 0.5))
        if fixed.survivors != semigroup.realize(fld, 0, 0.5).survivors:
            fixed_fail += 1
        if semigroup.realize(fld, s, s).survivors != frozenset(range(1, n + 1)):
            identity_fail += 1
        for g in (g_rs, g_st, g_rt):
            d = g.matrix()
            if not (np.array_equal(d @ d, d) and np.array_equal(d.T, d)):
                matrix_fail += 1
    total = compose_fail + identity_fail + matrix_fail + fixed_fail
    return CheckResult(1, "semigroup laws", total == 0, {
        "fields": fields, "truncation": n,
        "compose_failures": compose_fail, "fixed_window_failures": fixed_fail,
        "identity_failures": identity_fail, "matrix_failures": matrix_fail,
    })


def check_marginals(paths: int, seed: int, workers: int = 1) -> CheckResult:
    model = _intensity.linear()
    ks, hs, anchors = (1, 5), (0.1, 1.0), (0.0, 0.37)
    horizon = max(anchors) + 2 * max(hs)
    base = substream_seed(seed, 2)
    first = np.zeros((paths, len(ks), len(anchors), len(hs)))
    second = np.zeros_like(first)
    for i in range(paths):
        fld = semigroup.sample_clock_field(model, horizon, max(ks), mc.derive_path_stream(base, i))
        for a, k in enumerate(ks):
            clock = fld.clocks[k - 1]
            for b, s in enumerate(anchors):
                for c, h in enumerate(hs):
                    first[i, a, b, c] = not clock.rings_in(s, s + h)
                    second[i, a, b, c] = not clock.rings_in(s + h, s + 2 * h)
    rows, ok = [], True
    for a, k in enumerate(ks):
        for b, s in enumerate(anchors):
            for c, h in enumerate(hs):
                est = mc.estimate(first[:, a, b, c])
                target = math.exp(-_intensity.rate(model, k) * h)
                x, y = first[:, a, b, c], second[:, a, b, c]
                if x.std() > 0 and y.std() > 0:
                    corr = float(np.corrcoef(x, y)[0, 1])
                else:
                    corr = 0.0
                corr_se = 1.0 / math.sqrt(paths)
                good = _within(est.mean, est.stderr, target) and abs(corr) <= 3 * corr_se
                ok &= good
                rows.append({"k": k, "s": s, "h": h, "freq": est.mean, "stderr": est.stderr,
                             "exact": target, "corr_disjoint": corr, "corr_stderr": corr_se,
                             "pass": good})
    return CheckResult(2, "marginal, stationarity and independence laws", ok,
                       {"paths": paths, "cells": rows})


# -- widths ------------------------------------------------------------------


def check_diag_mean(paths: int, seed: int, workers: int = 1) -> CheckResult:
    t = 0.1
    exact = widths.exact_mean_width_sq_diagonal(t)
    brute = _brute_diag_mean(t)
    spec = mc.ExperimentSpec("width_diag", (t,), paths, substream_seed(seed, 3))
    est = mc.run_experiment(spec, workers)[0]
    mc_ok = _within(est.mean, est.stderr, exact)
    quad = {}
    quad_ok = True
    for tq in (1e-4, 1e-2, 1.0):
        series, integral = widths.exact_mean_width_sq_diagonal(tq), _quad_diag_mean(tq)
        quad[str(tq)] = {"series": series, "quadrature": integral, "diff": abs(series - integral)}
        quad_ok &= abs(series - integral) <= 1e-6
    brute_ok = abs(exact - brute) <= 1e-6
    return CheckResult(3, "box mean width: MC, series and quadrature", mc_ok and quad_ok and brute_ok, {
        "t": t, "exact": exact, "brute_sum": brute, "mc_mean": est.mean, "mc_stderr": est.stderr,
        "paths": paths, "quadrature": quad,
    })


_SMALL_T = (1e-3, 1e-4, 1e-5, 1e-6, 1e-7)


def _strictly_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def check_diag_asymptotics(paths: int, seed: int, workers: int = 1) -> CheckResult:
    mean_ratio = [widths.exact_mean_width_sq_diagonal(t) / widths.asymptote("diag_mean", t)
                  for t in _SMALL_T]
    var_ratio = [widths.exact_var_width_sq_diagonal(t) / widths.asymptote("diag_mean", t)
                 for t in _SMALL_T]
    at_1e5 = mean_ratio[2]
    ok = _strictly_decreasing(mean_ratio) and 1.05 <= at_1e5 <= 1.12 and _strictly_decreasing(var_ratio)
    return CheckResult(4, "box mean width ~ t|ln t|", ok, {
        "t": list(_SMALL_T), "mean_ratio": mean_ratio, "var_ratio": var_ratio,
        "first_order_prediction_1e-5": 1 + 1 / abs(math.log(1e-5)),
    })


def check_diag_variance(paths: int, seed: int, workers: int = 1) -> CheckResult:
    t = 0.1
    var = widths.exact_var_width_sq_diagonal(t)
    i = np.arange(1, 1_000_001, dtype=float)
    brute = math.fsum(-np.expm1(-i * t) * np.exp(-i * t) / i**4)
    bound = ZETA3 * t
    ok = abs(var - brute) <= 1e-9 and abs(var - 0.0995) <= 5e-5 and var <= bound
    return CheckResult(5, "box width variance and zeta(3) t bound", ok,
                       {"t": t, "variance": var, "brute_sum": brute, "bound": bound})


def check_ellipsoid_law(paths: int, seed: int, workers: int = 1) -> CheckResult:
    t = 0.1
    spec = mc.ExperimentSpec("width_ellipsoid", (t,), paths, substream_seed(seed, 6))
    vals, cens = mc.simulate_paths(spec, workers)
    vals = vals[:, 0]
    est = mc.estimate(vals, t, cens[:, 0])
    exact = widths.exact_mean_width_sq_ellipsoid(t)
    n = np.arange(2, 51, dtype=float)
    brute = -math.expm1(-t) + math.fsum(np.exp(-n * (n - 1) * t / 2) * -np.expm1(-n * t) / n**2)
    n_max = 30
    inv = np.rint(1.0 / np.sqrt(vals[~cens[:, 0]]))
    support, probs = widths.inv_width_law(t, n_max)
    report = mc.compare_to_law(np.minimum(inv, n_max), support, probs)
    ok = (report.passed and not cens.any() and _within(est.mean, est.stderr, exact)
          and abs(exact - brute) <= 1e-9)
    return CheckResult(6, "ellipsoid inverse-width law", ok, {
        "t": t, "paths": paths, "chi2": report.statistic, "p_value": report.p_value,
        "dof": report.dof, "mc_mean": est.mean, "mc_stderr": est.stderr, "exact": exact,
        "brute_sum": brute, "censored_fraction": est.censored_fraction,
    })


def check_ellipsoid_asymptotics(paths: int, seed: int, workers: int = 1) -> CheckResult:
    ratio = [widths.exact_mean_width_sq_ellipsoid(t) / widths.asymptote("ell_mean", t)
             for t in _SMALL_T]
    dev = [abs(r - 1) for r in ratio]
    ok = 0.9 <= ratio[2] <= 1.35 and _strictly_decreasing(dev)
    return CheckResult(7, "ellipsoid mean width ~ t|ln t|/2", ok,
                       {"t": list(_SMALL_T), "ratio": ratio})


def check_width_dimension_link(paths: int, seed: int, workers: int = 1) -> CheckResult:
    grid = (0.1, 0.5)
    s = substream_seed(seed, 11)
    ws, cens = mc.simulate_paths(mc.ExperimentSpec("width_ellipsoid", grid, paths, s), workers)
    al, _ = mc.simulate_paths(mc.ExperimentSpec("alpha", grid, paths, s), workers)
    # width = 1/m >= d_alpha = 1/(alpha+1)  <=>  m <= alpha + 1, compared on integers
    m = np.rint(1.0 / np.sqrt(np.where(cens, 1.0, ws)))
    d_alpha = np.vectorize(widths.kolmogorov_width_ellipsoid)(al.astype(int))
    bad = (m > al + 1) | cens
    violations = int(np.count_nonzero(bad))
    return CheckResult(11, "width dominates Kolmogorov width of its dimension", violations == 0,
                       {"t": list(grid), "paths": paths, "violations": violations,
                        "min_gap": float(np.min(1.0 / m - d_alpha))})


# -- dimension ---------------------------------------------------------------


def check_dimension(paths: int, seed: int, workers: int = 1) -> CheckResult:
    grid = (0.1, 0.5, 1.0)
    spec = mc.ExperimentSpec("alpha", grid, paths, substream_seed(seed, 8))
    n = spec.truncation()
    vals, _ = mc.simulate_paths(spec, workers)
    rows, ok = [], True
    for j, t in enumerate(grid):
        est = mc.estimate(vals[:, j], t)
        target = math.fsum(np.exp(-np.arange(1, n + 1) * t))
        good = _within(est.mean, est.stderr, target)
        ok &= good
        rows.append({"t": t, "mc_mean": est.mean, "mc_stderr": est.stderr, "exact": target,
                     "pass": good})
    pmf = widths.alpha_pmf_exact(0.5, n)
    report = mc.compare_to_law(vals[:, 1], np.arange(n + 1), pmf / math.fsum(pmf))
    zero = mc.estimate(vals[:, 1] == 0, 0.5)
    c_half = widths.void_probability(0.5)
    j = np.arange(1, 201, dtype=float)
    product = math.exp(math.fsum(np.log1p(-np.exp(-0.5 * j))))
    zero_ok = _within(zero.mean, zero.stderr, c_half) and abs(c_half - product) <= 1e-12 \
        and abs(c_half - 0.1348) <= 1e-4
    ok = ok and report.passed and zero_ok
    return CheckResult(8, "dimension process mean, law and void probability", ok, {
        "truncation": n, "paths": paths, "means": rows,
        "pmf_chi2": report.statistic, "pmf_p_value": report.p_value, "pmf_dof": report.dof,
        "p_zero_mc": zero.mean, "p_zero_stderr": zero.stderr, "p_zero_exact": c_half,
        "p_zero_product_oracle": product,
    })


def check_tail_bound(paths: int, seed: int, workers: int = 1) -> CheckResult:
    violations, worst = 0, -math.inf
    for t in (0.1, 0.3):
        eps = 1e-12
        n_trunc = _intensity.truncation_index(_intensity.linear(), t, eps)
        pmf = widths.alpha_pmf_exact(t, n_trunc)
        ge = np.cumsum(pmf[::-1])[::-1]  # ge[n] = P(alpha >= n)
        for n in range(1, 31):
            exact = float(ge[n]) + eps if n <= n_trunc else eps
            bound = widths.dimension_tail_bound(t, n)
            worst = max(worst, exact - bound)
            violations += exact > bound
    return CheckResult(9, "dimension tail bound dominates exact law", violations == 0,
                       {"violations": violations, "max_excess": worst})


def check_void_scale(paths: int, seed: int, workers: int = 1) -> CheckResult:
    expected = {0.5: -1.002, 0.1: -1.438, 0.01: -1.613}
    rows, ok = [], True
    gaps = []
    for t, target in expected.items():
        lc = widths.log_void_probability(t)
        eta = _eta_log_c(t)
        one_sided = -t * math.exp(-t) / -math.expm1(-t)
        good = (abs(t * lc - target) <= 5e-3 and abs(lc - eta) <= 1e-9 * max(1.0, abs(eta))
                and t * lc <= one_sided)
        ok &= good
        gaps.append(abs(t * lc + ZETA2))
        rows.append({"t": t, "t_log_c": t * lc, "eta_oracle": t * eta, "expected": target,
                     "one_sided_bound": one_sided, "pass": good})
    return CheckResult(10, "void probability scale", ok, {
        "rows": rows, "limit": -ZETA2, "distance_to_limit": gaps,
        "approaches_limit": _strictly_decreasing(gaps),
        "note": "t ln c(t) tends to -pi^2/6, below the one-sided bound -1",
    })


# -- random operators --------------------------------------------------------


def check_random_operators(paths: int, seed: int, workers: int = 1) -> CheckResult:
    base = substream_seed(seed, 12)
    worst = {"symmetry": 0.0, "idempotence": 0.0, "trace": 0.0, "spectrum": 0.0, "hs": 0.0}
    for i in range(100):
        part = randomop.sample_partition(5.0, mc.derive_path_stream(base, i))
        op = randomop.condexp_matrix(part, 256)
        rank = part.n_intervals
        ev = op.spectrum()
        worst["symmetry"] = max(worst["symmetry"], op.symmetry_defect())
        worst["idempotence"] = max(worst["idempotence"], op.idempotence_defect())
        worst["trace"] = max(worst["trace"], abs(op.trace() - rank))
        worst["spectrum"] = max(worst["spectrum"], float(np.max(np.minimum(abs(ev), abs(ev - 1)))))
        worst["hs"] = max(worst["hs"], abs(randomop.hs_sum_basis(op, op.n_cells)[-1] - rank))
    ops_ok = (worst["symmetry"] <= 1e-12 and worst["idempotence"] < 1e-12 and worst["trace"] <= 1e-12
              and worst["spectrum"] <= 1e-9 and worst["hs"] <= 1e-10)
    demos = {}
    demo_ok = True
    for j, fam in enumerate(("constant", "linear", "rademacher")):
        rng = mc.derive_path_stream(substream_seed(seed, 13), j)
        rep = randomop.point_eval_demo(fam, 1000 if fam == "rademacher" else min(paths, 100_000), rng)
        good = _within(rep.second_moment_estimate, rep.second_moment_stderr, rep.l2_norm)
        if fam == "rademacher":
            good = good and rep.nonvanishing_fraction == 1.0
        demo_ok &= good
        demos[fam] = {"second_moment": rep.second_moment_estimate,
                      "stderr": rep.second_moment_stderr, "l2_norm": rep.l2_norm,
                      "nonvanishing_fraction": rep.nonvanishing_fraction, "pass": good}
    return CheckResult(12, "random operators on L2[0,1]", ops_ok and demo_ok,
                       {"partitions": 100, "worst_defects": worst, "point_eval": demos})


# -- reproducibility ---------------------------------------------------------


def check_reproducibility(paths: int, seed: int, workers: int = 1) -> CheckResult:
    n = min(paths, 3 * mc.CHUNK)
    spec = mc.ExperimentSpec("width_diag", (0.1, 0.5), n, substream_seed(seed, 14))
    a, _ = mc.simulate_paths(spec, 1)
    b, _ = mc.simulate_paths(spec, 1)
    c, _ = mc.simulate_paths(spec, max(2, workers))
    same = a.tobytes() == b.tobytes() == c.tobytes()
    return CheckResult(13, "reproducible across runs and worker counts", same, {"paths": n})


Check = Callable[[int, int, int], CheckResult]

SUITES: dict[str, list[Check]] = {
    "semigroup": [check_semigroup_laws, check_marginals],
    "widths": [check_diag_mean, check_diag_asymptotics, check_diag_variance, check_ellipsoid_law,
               check_ellipsoid_asymptotics, check_width_dimension_link],
    "dimension": [check_dimension, check_tail_bound, check_void_scale],
    "randomop": [check_random_operators],
}
SUITES["all"] = [c for name in ("semigroup", "widths", "dimension", "randomop") for c in SUITES[name]]
SUITES["all"].append(check_reproducibility)


def run_suite(name: str, paths: int, seed: int, workers: int = 1) -> list[CheckResult]:
    if name not in SUITES:
        raise KeyError(name)
    results = [check(paths, seed, workers) for check in SUITES[name]]
    return sorted(results, key=lambda r: r.criterion)
