"""Airtime fairness index, its group-size bound, delay statistics, windowed FI."""

import numpy as np
import pytest

from relaysched import (
    AirtimeLedger,
    DelaySamples,
    delay_statistics,
    doppler_unit_slots,
    fi_lower_bound,
    jain_index,
    windowed_fi_series,
)


# ----------------------------------------------------------------- jain_index ---


def test_jain_index_three_quarters_exactly():
    assert jain_index([1 / 3, 1 / 3, 1 / 3, 0]) == 0.75


def test_jain_index_equal_shares():
    for m in (1, 2, 5, 17):
        assert jain_index(np.full(m, 0.37)) == pytest.approx(1.0, abs=1e-15)


def test_jain_index_single_spike():
    for m in (2, 4, 10):
        x = np.zeros(m)
        x[m // 2] = 3.0
        assert jain_index(x) == pytest.approx(1.0 / m, abs=1e-15)


def test_jain_index_scale_invariance():
    rng = np.random.default_rng(1)
    for _ in range(100):
        x = rng.uniform(0.0, 5.0, rng.integers(1, 12))
        if x.sum() == 0:
            continue
        for c in (0.01, 3.0, 1e6):
            assert jain_index(c * x) == pytest.approx(jain_index(x), rel=1e-12)


def test_jain_index_range_and_extremes():
    rng = np.random.default_rng(2)
    for _ in range(200):
        x = rng.uniform(0.0, 1.0, rng.integers(2, 10))
        if x.sum() == 0:
            continue
        fi = jain_index(x)
        assert 0.0 < fi <= 1.0
        if fi == 1.0:
            assert np.allclose(x, x[0])


def test_jain_index_rejects_bad_input():
    with pytest.raises(ValueError):
        jain_index([])
    with pytest.raises(ValueError):
        jain_index([0.0, 0.0])
    with pytest.raises(ValueError):
        jain_index([1.0, -0.5])
    with pytest.raises(ValueError):
        jain_index([[1.0, 2.0]])


# ------------------------------------------------------------- fi_lower_bound ---


def test_fi_lower_bound_values():
    assert fi_lower_bound(1) == 1.0
    assert fi_lower_bound(8, num_users=8) == 1.0 / 8
    assert fi_lower_bound(4) == 0.25
    with pytest.raises(ValueError):
        fi_lower_bound(0)
    with pytest.raises(ValueError):
        fi_lower_bound(9, num_users=8)


def test_worst_case_allocation_attains_bound_exactly():
    # one member of each group hogs its group's airtime: M/k active users
    # with share k/M each.  For power-of-two shapes the arithmetic is exact.
    for M, k in ((8, 1), (8, 2), (8, 4), (8, 8), (4, 2), (16, 4)):
        shares = np.zeros(M)
        shares[: M // k] = k / M
        assert jain_index(shares) == fi_lower_bound(k, M)
    # non-dyadic shapes agree to rounding
    for M, k in ((6, 3), (12, 3), (10, 5)):
        shares = np.zeros(M)
        shares[: M // k] = k / M
        assert jain_index(shares) == pytest.approx(fi_lower_bound(k, M), rel=1e-14)


# ---------------------------------------------------------------- AirtimeLedger ---


def test_ledger_checks_count_consistency():
    AirtimeLedger(per_user_slots=[2, 3, 5], total_slots=10)
    with pytest.raises(ValueError):
        AirtimeLedger(per_user_slots=[2, 3, 5], total_slots=11)
    with pytest.raises(ValueError):
        AirtimeLedger(per_user_slots=[-1, 1], total_slots=0)


def test_ledger_from_schedule():
    seq = [0, 1, 1, 2, 0, 0]
    ledger = AirtimeLedger.from_schedule(seq, num_users=4)
    assert ledger.per_user_slots.tolist() == [3, 2, 1, 0]
    assert ledger.total_slots == 6
    assert ledger.jain() == jain_index([3, 2, 1, 0])


# ------------------------------------------------------------ delay_statistics ---


def test_round_robin_delay_is_constant():
    # k = 1: every user transmits exactly every M slots, zero variance
    M, delta = 8, 0.002
    seq = np.tile(np.arange(M), 2000)
    stats = delay_statistics(DelaySamples.from_schedule(seq, M), delta)
    assert stats.pooled.mean == pytest.approx(M * delta, rel=1e-12)
    assert stats.pooled.var == 0.0
    for u in stats.per_user:
        assert u.var == 0.0
        assert u.mean == pytest.approx(M * delta, rel=1e-12)


def geometric_gap_schedule(rng, M, k, n_slots):
    """Synthetic schedule with i.i.d. within-group winners: the homogeneous model."""
    groups = np.arange(M).reshape(M // k, k)
    winners = rng.integers(0, k, size=n_slots)
    slot_groups = np.arange(n_slots) % (M // k)
    return groups[slot_groups, winners]


def test_geometric_gap_moments():
    # homogeneous winners: gap = (M/k) x Geometric(1/k) slots, so
    # E[T] = M delta, E[T^2] = (2 - 1/k) M^2 delta^2, Var = (1 - 1/k) M^2 delta^2
    rng = np.random.default_rng(55)
    M, delta = 8, 0.002
    for k in (2, 4, 8):
        seq = geometric_gap_schedule(rng, M, k, 400_000)
        stats = delay_statistics(DelaySamples.from_schedule(seq, M), delta)
        assert stats.pooled.mean == pytest.approx(M * delta, rel=0.01)
        second_moment = stats.pooled.var + stats.pooled.mean**2
        assert second_moment == pytest.approx((2 - 1 / k) * (M * delta) ** 2, rel=0.03)
        assert stats.pooled.var == pytest.approx((1 - 1 / k) * (M * delta) ** 2, rel=0.03)


def test_geometric_second_moment_series_oracle():
    # direct summation of E[T^2] = sum_g ((M/k) g delta)^2 (1/k)(1 - 1/k)^{g-1}
    M, delta = 8, 0.002
    for k in (2, 4, 8):
        p = 1.0 / k
        total = 0.0
        for g in range(1, 4000):
            t = (M / k) * g * delta
            total += t * t * p * (1 - p) ** (g - 1)
        assert total == pytest.approx((2 - 1 / k) * (M * delta) ** 2, rel=1e-9)


def test_delay_variance_grows_with_group_size():
    rng = np.random.default_rng(56)
    M, delta = 8, 0.002
    variances = []
    for k in (1, 2, 4, 8):
        if k == 1:
            seq = np.tile(np.arange(M), 20_000)
        else:
            seq = geometric_gap_schedule(rng, M, k, 200_000)
        stats = delay_statistics(DelaySamples.from_schedule(seq, M), delta)
        variances.append(stats.pooled.var)
    assert variances[0] == 0.0
    assert all(a < b for a, b in zip(variances, variances[1:]))


def test_delay_statistics_flags_sparse_users():
    samples = DelaySamples.from_schedule([0, 1, 0, 1, 0, 2], 4)
    stats = delay_statistics(samples, 0.002)
    # user 2 transmitted once (no gaps), user 3 never: both lack variance support
    assert 2 in stats.insufficient_users and 3 in stats.insufficient_users
    assert stats.per_user[2] is None and stats.per_user[3] is None
    assert stats.per_user[0].count == 2
    with pytest.raises(ValueError):
        delay_statistics(DelaySamples.from_schedule([0, 1], 2), 0.002)
    with pytest.raises(ValueError):
        delay_statistics(samples, 0.0)


# ---------------------------------------------------------- windowed_fi_series ---


def test_windowed_fi_round_robin_is_one():
    seq = np.tile(np.arange(4), 50)
    positions, fi = windowed_fi_series(seq, 4, 4)
    assert positions[0] == 3 and positions[-1] == 199
    assert np.allclose(fi, 1.0)


def test_windowed_fi_single_user_is_reciprocal():
    seq = np.zeros(100, dtype=int)
    _, fi = windowed_fi_series(seq, 5, 10)
    assert np.allclose(fi, 0.2)


def test_windowed_fi_matches_naive_loop():
    rng = np.random.default_rng(3)
    seq = rng.integers(0, 5, 400)
    for L in (5, 7, 32):
        positions, fi = windowed_fi_series(seq, 5, L)
        for idx in range(0, positions.size, 17):
            t = positions[idx]
            counts = np.bincount(seq[t - L + 1 : t + 1], minlength=5).astype(float)
            assert fi[idx] == pytest.approx(jain_index(counts), rel=1e-12)


def test_windowed_fi_short_window_warns():
    with pytest.warns(UserWarning, match="shorter than the user count"):
        windowed_fi_series(np.zeros(50, dtype=int), 8, 4)


def test_windowed_fi_edge_cases():
    positions, fi = windowed_fi_series(np.array([0, 1]), 2, 5)
    assert positions.size == 0 and fi.size == 0
    with pytest.raises(ValueError):
        windowed_fi_series(np.array([0, 7]), 2, 2)
    with pytest.raises(ValueError):
        windowed_fi_series(np.array([0, 1]), 2, 0)


def test_doppler_unit_slots():
    # 2 ms slots at 15 Hz Doppler: one unit is 500/15 ~ 33 slots
    assert doppler_unit_slots(15.0, 0.002) == pytest.approx(33.3333, abs=1e-3)
    with pytest.raises(ValueError):
        doppler_unit_slots(0.0, 0.002)
