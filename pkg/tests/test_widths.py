import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from projsemigroup import intensity as itn
from projsemigroup import widths as W


def brute_diag_mean(t, terms=2_000_000):
    k = np.arange(1, terms + 1, dtype=float)
    return math.fsum(-np.expm1(-k * t) / k**2)


def brute_diag_var(t, terms=200_000):
    k = np.arange(1, terms + 1, dtype=float)
    q = np.exp(-k * t)
    return math.fsum(q * (1 - q) / k**4)


def brute_ell_mean(t, n_max=2000):
    surv = np.array([math.exp(-n * (n - 1) * t / 2) for n in range(1, n_max + 2)])
    n = np.arange(1, n_max + 1, dtype=float)
    return math.fsum((surv[:-1] - surv[1:]) / n**2)


def test_width_examples():
    assert W.width_sq_diagonal({1, 3}, 10).value_sq == pytest.approx(1 + 1 / 9)
    assert W.width_sq_ellipsoid({4, 7}, 10).value_sq == pytest.approx(1 / 16)
    empty = W.width_sq_diagonal(set(), 10)
    assert empty.value_sq == 0.0 and not empty.censored


def test_ellipsoid_censoring():
    s = W.width_sq_ellipsoid(set(), 10)
    assert s.censored and s.tail_bound == pytest.approx(1 / 121)


def test_width_index_range_checked():
    with pytest.raises(ValueError):
        W.width_sq_diagonal({0}, 10)
    with pytest.raises(ValueError):
        W.width_sq_ellipsoid({11}, 10)


def test_diagonal_tail_is_zeta_remainder():
    tail = W.width_sq_diagonal({1}, 50).tail_bound
    k = np.arange(51, 5_000_000, dtype=float)
    # remainder past the cutoff lies between 1/(K+1) and 1/K
    assert tail == pytest.approx(math.fsum(1 / k**2) + 1 / 5_000_000, abs=1e-12)


@pytest.mark.parametrize("t", [1e-4, 1e-2, 0.1, 1.0])
def test_diag_mean_matches_brute_sum(t):
    tail = 1 / 2_000_000  # terms past the brute cutoff contribute at most this
    assert abs(W.exact_mean_width_sq_diagonal(t) - brute_diag_mean(t)) <= tail + 1e-9


def test_diag_mean_value_at_t_01():
    # the brute-force value; a rounded "0.3332" sometimes quoted does not match
    assert W.exact_mean_width_sq_diagonal(0.1) == pytest.approx(0.3327446211, abs=1e-9)


def test_diag_mean_dilog_route_small_t():
    # small t takes the closed-form route; compare with the series route just above the switch
    import mpmath

    for t in (1e-7, 1e-8):
        ref = float(mpmath.zeta(2) - mpmath.polylog(2, mpmath.exp(-t)))
        assert W.exact_mean_width_sq_diagonal(t) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("t", [0.01, 0.1, 1.0])
def test_diag_variance_matches_brute_sum(t):
    assert W.exact_var_width_sq_diagonal(t) == pytest.approx(brute_diag_var(t), abs=1e-12)


def test_diag_variance_value_and_bound():
    v = W.exact_var_width_sq_diagonal(0.1)
    assert v == pytest.approx(0.0994637560, abs=1e-9)
    assert abs(v - 0.0995) <= 5e-5
    for t in (1e-3, 1e-2, 0.1, 0.5):
        assert W.exact_var_width_sq_diagonal(t) <= W.ZETA3 * t


@pytest.mark.parametrize("t", [0.001, 0.1, 1.0])
def test_ellipsoid_mean_matches_survival_sum(t):
    assert W.exact_mean_width_sq_ellipsoid(t) == pytest.approx(brute_ell_mean(t), abs=1e-12)
    assert W.exact_mean_width_sq_ellipsoid(0.1) == pytest.approx(0.1794793347, abs=1e-9)


def test_survival_law_and_inv_width_law():
    assert W.survival_law_inv_width(0.1, 1) == 1.0
    assert W.survival_law_inv_width(0.1, 3) == pytest.approx(math.exp(-0.3))
    support, probs = W.inv_width_law(0.1, 30)
    assert support[0] == 1 and support[-1] == 30
    assert math.fsum(probs) == pytest.approx(1.0, abs=1e-15)
    assert probs[-1] == pytest.approx(W.survival_law_inv_width(0.1, 30))


def test_generic_mean_agrees_with_specialised():
    for t in (0.05, 0.5):
        assert W.mean_width_sq(W.CompactSpec("diagonal"), t) == pytest.approx(
            W.exact_mean_width_sq_diagonal(t), abs=1e-9)
        assert W.mean_width_sq(W.CompactSpec("ellipsoid"), t) == pytest.approx(
            W.exact_mean_width_sq_ellipsoid(t), abs=1e-9)


def test_generic_mean_power_intensity_against_brute():
    model = itn.power(2.0, 1.0)
    t = 0.05
    k = np.arange(1, 200_000, dtype=float)
    ref = math.fsum(-np.expm1(-k**2 * t) / k**2) + 1 / 200_000  # remainder ~ 1/K
    assert W.mean_width_sq(W.CompactSpec("diagonal"), t, model) == pytest.approx(ref, abs=1e-8)


@pytest.mark.parametrize("t", [1e-3, 1e-2, 0.1])
def test_diag_mean_bracketed_by_log_scale(t):
    m = W.exact_mean_width_sq_diagonal(t)
    # zeta(2) - Li2(e^-t) = t(1 - ln t) + t^2/4 + O(t^3)
    assert t * (1 - math.log(t)) <= m <= t * (1 - math.log(t)) + t**2 / 4


def test_asymptotic_ratios_decrease_towards_one():
    ts = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7]
    diag = [W.exact_mean_width_sq_diagonal(t) / W.asymptote("diag_mean", t) for t in ts]
    ell = [W.exact_mean_width_sq_ellipsoid(t) / W.asymptote("ell_mean", t) for t in ts]
    np.testing.assert_allclose(diag, [1.1448, 1.1086, 1.0869, 1.0724, 1.0620], atol=1e-4)
    np.testing.assert_allclose(ell, [1.1839, 1.1379, 1.1103, 1.0920, 1.0788], atol=1e-4)
    for r in (diag, ell):
        assert all(b < a for a, b in zip(r, r[1:])) and r[-1] > 1


def test_asymptote_domains():
    assert W.asymptote("phi", 1e-4) == pytest.approx(210.7286, abs=1e-3)
    with pytest.raises(ValueError):
        W.asymptote("phi", 0.5)
    with pytest.raises(ValueError):
        W.asymptote("diag_mean", 1.0)
    with pytest.raises(ValueError):
        W.asymptote("nope", 0.1)


def eta_log_c(t):
    s = 0.5 * math.log(2 * math.pi / t) - math.pi**2 / (6 * t) + t / 24
    n = 1
    while True:
        term = math.log1p(-math.exp(-4 * math.pi**2 * n / t))
        s += term
        if abs(term) < 1e-18:
            return s
        n += 1


@pytest.mark.parametrize("t, expected", [(0.5, -1.00176), (0.1, -1.43749), (0.01, -1.61271)])
def test_void_probability_against_modular_transform(t, expected):
    lc = W.log_void_probability(t)
    assert lc == pytest.approx(eta_log_c(t), abs=1e-9)
    assert t * lc == pytest.approx(expected, abs=1e-5)
    assert t * lc > -W.ZETA2


def test_void_probability_value():
    assert W.void_probability(0.5) == pytest.approx(0.134859379, abs=1e-9)


def test_void_scale_converges():
    gaps = [abs(t * W.log_void_probability(t) + W.ZETA2) for t in (0.1, 0.01, 0.001, 1e-4)]
    assert all(b < a for a, b in zip(gaps, gaps[1:])) and gaps[-1] < 5e-3


def test_expected_dimension():
    assert W.expected_dimension(1.0) == pytest.approx(1 / (math.e - 1))
    m = itn.power(1.0, 1.0)  # same rates through the generic branch
    assert W.expected_dimension(0.3, m) == pytest.approx(W.expected_dimension(0.3), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(t=st.floats(0.05, 3.0), n=st.integers(1, 60))
def test_pmf_normalized_with_matching_mean(t, n):
    pmf = W.alpha_pmf_exact(t, n)
    assert math.fsum(pmf) == pytest.approx(1.0, abs=1e-12)
    assert np.all(pmf >= -1e-15)
    mean = math.fsum(np.arange(n + 1) * pmf)
    lam = itn.rates(itn.linear(), n)
    assert mean == pytest.approx(math.fsum(np.exp(-lam * t)), abs=1e-10)


def test_pmf_matches_enumeration_small_n():
    t, n = 0.4, 6
    p = np.exp(-t * np.arange(1, n + 1))
    ref = np.zeros(n + 1)
    for bits in itertools.product((0, 1), repeat=n):
        b = np.array(bits)
        ref[b.sum()] += np.prod(np.where(b, p, 1 - p))
    np.testing.assert_allclose(W.alpha_pmf_exact(t, n), ref, atol=1e-15)


def test_dimension_tail_bound_holds():
    for t in (0.05, 0.2, 0.5, 0.9):
        n_tr = itn.truncation_index(itn.linear(), t, 1e-14)
        tail = np.cumsum(W.alpha_pmf_exact(t, n_tr)[::-1])[::-1]
        for n in range(0, min(n_tr, 80)):
            assert tail[n] <= W.dimension_tail_bound(t, n) + 1e-14
    with pytest.raises(ValueError):
        W.dimension_tail_bound(1.5, 3)


def ellipsoid_deviation(basis, b):
    """``||(I - P_L) D^{-1}||`` for an orthonormal column basis of L."""
    dinv = np.diag(1.0 / b)
    proj = basis @ basis.T if basis.size else np.zeros((b.size, b.size))
    return np.linalg.norm((np.eye(b.size) - proj) @ dinv, 2)


@pytest.mark.parametrize("n", [0, 1, 2, 3, 5])
def test_kolmogorov_width_brute_force(n):
    dim = 8
    b = np.arange(1, dim + 1, dtype=float)
    eye = np.eye(dim)
    best = min(ellipsoid_deviation(eye[:, list(c)], b) for c in itertools.combinations(range(dim), n))
    assert best == pytest.approx(W.kolmogorov_width_ellipsoid(n), abs=1e-12)
    rng = np.random.default_rng(n)
    for _ in range(200):
        q, _ = np.linalg.qr(rng.standard_normal((dim, n))) if n else (np.zeros((dim, 0)), None)
        assert ellipsoid_deviation(q, b) >= W.kolmogorov_width_ellipsoid(n) - 1e-12


def test_coordinate_bound_diagonal():
    assert W.coordinate_width_bound_diagonal(0) == pytest.approx(math.pi / math.sqrt(6))
    assert W.coordinate_width_bound_diagonal(10) ** 2 == pytest.approx(W.ZETA2 - sum(1 / k**2 for k in range(1, 11)))


def test_compact_spec_validation():
    with pytest.raises(ValueError):
        W.CompactSpec("diagonal", ("inv", 0.5))
    with pytest.raises(ValueError):
        W.CompactSpec("ellipsoid", ("lin", 0.0))
    with pytest.raises(ValueError):
        W.CompactSpec("cube")
    assert W.CompactSpec("diagonal", W.parse_rule("inv:2")).coefficient(3) == pytest.approx(1 / 9)
