import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from projsemigroup import intensity as itn
from projsemigroup import semigroup as sg
from projsemigroup.mc import derive_path_stream, estimate


class FixedUniforms:
    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def random(self, n):
        return self.values[:n]


def field_from_jumps(jumps, horizon=1.0):
    clocks = tuple(sg.PoissonClock(k, np.array(j, dtype=float)) for k, j in enumerate(jumps, 1))
    return sg.ClockFieldSample(horizon, len(clocks), 1.0, horizon, clocks)


def test_kill_time_inverse_cdf():
    # U = 0.5 enters as 1 - 0.5
    tau = sg.sample_first_kill_times(itn.linear(1), 1, FixedUniforms([0.5]))
    assert tau[0] == pytest.approx(math.log(2), abs=1e-12)
    np.testing.assert_allclose(sg.kill_times_from_uniforms(np.array([0.5, 0.25]), np.array([1.0, 2.0])),
                               [math.log(2), math.log(4) / 2])


def test_kill_times_deterministic():
    a = sg.sample_first_kill_times(itn.linear(), 50, derive_path_stream(9, 3))
    b = sg.sample_first_kill_times(itn.linear(), 50, derive_path_stream(9, 3))
    assert a.tobytes() == b.tobytes()


def test_first_kill_time_mean():
    tau1 = np.array([sg.sample_first_kill_times(itn.linear(), 1, derive_path_stream(1, i))[0]
                     for i in range(100_000)])
    est = estimate(tau1)
    assert abs(est.mean - 1.0) <= 3 * est.stderr


def test_fast_clock_always_rings():
    model = itn.linear(1000.0)
    for i in range(10_000):
        fld = sg.sample_clock_field(model, 1.0, 1, derive_path_stream(2, i))
        assert fld.clocks[0].jumps.size > 0


def test_jump_count_mean_is_rate_times_horizon():
    model = itn.linear(1.0)
    counts = np.array([sg.sample_clock_field(model, 1.0, 3, derive_path_stream(3, i)).clocks[2].jumps.size
                       for i in range(100_000)])
    est = estimate(counts)
    assert abs(est.mean - 3.0) <= 3 * est.stderr


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), horizon=st.floats(0.1, 5.0), n=st.integers(1, 30))
def test_jumps_sorted_within_horizon(seed, horizon, n):
    fld = sg.sample_clock_field(itn.linear(), horizon, n, derive_path_stream(seed, 0))
    assert len(fld.clocks) == n
    for clock in fld.clocks:
        j = clock.jumps
        assert np.all(np.diff(j) > 0)
        assert j.size == 0 or (j[0] >= 0 and j[-1] <= horizon)


def test_realize_examples():
    fld = field_from_jumps([[0.3, 0.9]])
    assert sg.realize(fld, 0, 0.25).survivors == {1}
    assert sg.realize(fld, 0.25, 0.5).survivors == set()
    assert sg.realize(fld, 0.4, 0.4).survivors == {1}


def test_realize_half_open_window():
    fld = field_from_jumps([[0.3], [0.6]])
    r = sg.realize(fld, 0.3, 0.6)
    assert 1 in r.survivors  # jump at s does not kill
    assert 2 not in r.survivors  # jump at t does


def test_realize_outside_horizon():
    fld = field_from_jumps([[0.3]])
    with pytest.raises(ValueError):
        sg.realize(fld, 0.5, 1.5)
    with pytest.raises(ValueError):
        sg.realize(fld, 0.6, 0.5)


def test_identity_window_gives_all_indices():
    fld = sg.sample_clock_field(itn.linear(), 1.0, 12, derive_path_stream(0, 0))
    r = sg.realize(fld, 0.3, 0.3)
    assert r.survivors == set(range(1, 13))
    assert sg.dim_alpha(sg.realize(fld, 0, 0)) == 12


def hand(survivors, s, t, n=8):
    return sg.ProjectionRealization(s, t, frozenset(survivors), n, 1.0)


def test_compose_examples():
    assert sg.compose(hand({1, 2, 5}, 0, 1), hand({2, 5, 7}, 1, 2)).survivors == {2, 5}
    r2 = hand({2, 5, 7}, 1, 2)
    out = sg.compose(sg.identity(8, at=1), r2)
    assert out.survivors == r2.survivors and (out.s, out.t) == (1, 2)
    with pytest.raises(ValueError):
        sg.compose(hand({1}, 0, 1), hand({1}, 1.5, 2))


def test_compose_rejects_different_fields():
    f1 = sg.sample_clock_field(itn.linear(), 1.0, 5, derive_path_stream(0, 1))
    f2 = sg.sample_clock_field(itn.linear(), 1.0, 5, derive_path_stream(0, 2))
    with pytest.raises(ValueError):
        sg.compose(sg.realize(f1, 0, 0.5), sg.realize(f2, 0.5, 1))


def test_compose_matches_direct_realization_fixed_windows():
    mismatches = 0
    for i in range(10_000):
        fld = sg.sample_clock_field(itn.linear(), 0.5, 10, derive_path_stream(4, i))
        a = sg.compose(sg.realize(fld, 0, 0.25), sg.realize(fld, 0.25, 0.5))
        mismatches += a.survivors != sg.realize(fld, 0, 0.5).survivors
    assert mismatches == 0


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**63), points=st.lists(st.floats(0, 2.0), min_size=3, max_size=3))
def test_semigroup_law_and_projection_matrices(seed, points):
    r, s, t = sorted(points)
    fld = sg.sample_clock_field(itn.linear(), 2.0, 15, derive_path_stream(seed, 0))
    rs, st_, rt = sg.realize(fld, r, s), sg.realize(fld, s, t), sg.realize(fld, r, t)
    assert sg.compose(rs, st_).survivors == rt.survivors
    for g in (rs, st_, rt):
        d = g.matrix()
        assert np.array_equal(d @ d, d) and np.array_equal(d.T, d)
        assert set(np.linalg.eigvalsh(d).round(12)) <= {0.0, 1.0}
    d1, d2 = rs.matrix(), st_.matrix()
    assert np.array_equal(d1 @ d2, d2 @ d1)


def test_apply_examples():
    r = hand({1, 3}, 0, 1, n=5)
    np.testing.assert_array_equal(sg.apply(r, [1, 1, 1, 0, 0]), [1, 0, 1, 0, 0])
    np.testing.assert_array_equal(sg.apply(hand(set(), 0, 1, n=3), [4.0, 5.0, 6.0]), [0, 0, 0])
    with pytest.raises(ValueError):
        sg.apply(r, [1, 2, 3])


@given(u=st.lists(st.floats(-1e6, 1e6), min_size=6, max_size=6),
       survivors=st.sets(st.integers(1, 6)))
def test_apply_contracts(u, survivors):
    out = sg.apply(hand(survivors, 0, 1, n=6), np.array(u))
    assert np.linalg.norm(out) <= np.linalg.norm(u) * (1 + 1e-12)


def test_dim_alpha_examples():
    d = sg.dim_alpha(hand({2, 5, 9}, 0, 1, n=10))
    assert d == 3 and d.tail_eps == 1.0


def test_dim_alpha_mc_mean_at_t1():
    n = itn.truncation_index(itn.linear(), 1.0, 1e-9)
    alphas = [int(np.count_nonzero(sg.sample_first_kill_times(itn.linear(), n, derive_path_stream(5, i)) > 1.0))
              for i in range(100_000)]
    est = estimate(alphas)
    assert abs(est.mean - 1 / (math.e - 1)) <= 3 * est.stderr


def test_realization_tail_uses_window_length():
    fld = sg.sample_clock_field(itn.linear(), 1.0, 20, derive_path_stream(0, 0), min_window=0.5)
    assert fld.eps == pytest.approx(itn.tail_bound(itn.linear(), 20, 0.5))
    r = sg.realize(fld, 0.1, 0.9, model=itn.linear())
    assert r.tail_eps == pytest.approx(itn.tail_bound(itn.linear(), 20, 0.8))
    assert math.isinf(sg.realize(fld, 0.1, 0.2).tail_eps)  # shorter than the certified window


def test_strong_continuity_exact_and_mc():
    u = np.array([1.0, -2.0, 0.5, 3.0])
    lam = itn.rates(itn.linear(), 4)

    def expected_defect(t):
        return float(np.sum(u**2 * -np.expm1(-lam * t)))

    ts = [1.0, 0.1, 0.01, 0.001, 1e-4]
    vals = [expected_defect(t) for t in ts]
    assert all(b < a for a, b in zip(vals, vals[1:])) and vals[-1] < 1e-2
    t = 0.1
    samples = []
    for i in range(20_000):
        tau = sg.sample_first_kill_times(itn.linear(), 4, derive_path_stream(6, i))
        r = sg.ProjectionRealization(0, t, frozenset(np.flatnonzero(tau > t) + 1), 4, 0.0)
        samples.append(float(np.sum((sg.apply(r, u) - u) ** 2)))
    est = estimate(samples)
    assert abs(est.mean - expected_defect(t)) <= 3 * est.stderr
