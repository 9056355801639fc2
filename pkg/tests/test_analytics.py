"""Closed-form outage evaluators, diversity-order fits, and gap measurement."""

import inspect
import math

import numpy as np
import pytest

from relaysched import (
    FadingProcess,
    OutageCurve,
    estimate_diversity_order,
    make_grouping,
    measure_gap_db,
    outage_exact,
    outage_high_snr,
    outage_lower_bound,
    outage_relaxed_tdma,
    outage_tdma,
    outage_tdma_high_snr,
    outage_two_user_highsnr,
    power_gap_db,
)
from relaysched.kernels import evaluate_schedule_block

from conftest import MEASURED_RB, MEASURED_UR, measured_config, symmetric_config

TAU = 3.0


def curve(fn_values, eta):
    return OutageCurve(snr=np.asarray(eta, float), probability=np.asarray(fn_values, float))


def db(snr_db):
    return 10.0 ** (np.asarray(snr_db, float) / 10.0)


# -------------------------------------------------------------- outage_exact ---


def test_exact_single_link_hand_value():
    # one user, one relay, unit mean gains, alpha = 1/2, tau = 3, eta = 30:
    # first hop fails w.p. 1 - e^{-0.2}, second succeeds w.p. e^{-0.2},
    # so the slot survives w.p. e^{-0.4}
    got = outage_exact([[1.0]], [1.0], 0.5, TAU, 30.0)
    assert got == pytest.approx(-math.expm1(-0.4), abs=1e-15)
    assert got == pytest.approx(0.32967995396436073, abs=1e-15)


def test_exact_single_link_monte_carlo():
    cfg = symmetric_config(1, 1, total_power=30.0)
    n = 1_000_000
    gain_ur, gain_rb = FadingProcess(cfg, seed=2).draw_block(n)
    members, sizes = make_grouping("fixed_order", 1, cfg).member_arrays()
    _, _, _, outage = evaluate_schedule_block(
        gain_ur, gain_rb, cfg.p_user, cfg.p_relay, cfg.decode_threshold, members, sizes, 0
    )
    p = -math.expm1(-0.4)
    assert abs(outage.mean() - p) < 4.0 * math.sqrt(p * (1 - p) / n)


def test_exact_limits():
    assert outage_exact(MEASURED_UR, MEASURED_RB, 0.5, TAU, 1e12) < 1e-40
    assert outage_exact(MEASURED_UR, MEASURED_RB, 0.5, TAU, 1e-9) > 1.0 - 1e-12
    with pytest.raises(ValueError):
        outage_exact(MEASURED_UR, MEASURED_RB, 0.5, TAU, 0.0)
    with pytest.raises(ValueError):
        outage_exact(MEASURED_UR, MEASURED_RB, 1.5, TAU, 10.0)


def test_exact_vectorized_over_eta():
    eta = db(np.arange(0, 31, 3))
    vec = outage_exact(MEASURED_UR, MEASURED_RB, 0.5, TAU, eta)
    assert vec.shape == eta.shape
    for e, v in zip(eta, vec):
        assert outage_exact(MEASURED_UR, MEASURED_RB, 0.5, TAU, float(e)) == v


# -------------------------------------------------------- outage_lower_bound ---


def test_bound_approached_by_many_user_exact():
    # with many users the first hops effectively never all fail
    sigma, eta = 1.0, 50.0
    bound = outage_lower_bound([sigma] * 2, 0.5, TAU, eta)
    assert bound >= 1e-2  # regime where the comparison is meaningful
    exact = outage_exact(np.full((64, 2), sigma), [sigma] * 2, 0.5, TAU, eta)
    assert abs(exact - bound) / bound < 1e-3
    # and the exact value approaches the bound monotonically from above
    prev = None
    for M in (1, 2, 4, 16, 64):
        e = outage_exact(np.full((M, 2), sigma), [sigma] * 2, 0.5, TAU, eta)
        assert e >= bound
        if prev is not None:
            assert e <= prev
        prev = e


def test_bound_takes_no_user_side_gains():
    # independence from the user side is structural: the evaluator does not
    # even accept a user-gain argument
    params = inspect.signature(outage_lower_bound).parameters
    assert "mean_gain_ur" not in params
    assert list(params) == ["mean_gain_rb", "alpha", "snr_threshold", "eta"]


def test_bound_tends_to_one_as_alpha_exhausts_relay_power():
    assert outage_lower_bound([1.0, 1.0], 1.0 - 1e-9, TAU, 100.0) > 1.0 - 1e-6


# -------------------------------------------------------------- outage_tdma ---


def test_tdma_single_user_is_that_users_product():
    ur = np.array([[0.7, 1.2, 0.4]])
    rb = np.array([1.1, 0.6, 0.9])
    eta = 12.0
    x = (TAU / eta) * (1.0 / (0.5 * ur[0]) + 1.0 / (0.5 * rb))
    by_hand = np.prod(1.0 - np.exp(-x))
    assert outage_tdma(ur, rb, 0.5, TAU, eta) == pytest.approx(by_hand, rel=1e-12)


def test_tdma_symmetric_closed_form():
    # Omega_ur = Omega_rb = sigma collapses the average to a single product
    sigma, alpha, N = 0.8, 0.3, 4
    for eta in db([0, 10, 20, 30]):
        got = outage_tdma(np.full((6, N), sigma), np.full(N, sigma), alpha, TAU, float(eta))
        want = (-math.expm1(-(1.0 / (alpha * (1 - alpha))) * TAU / (eta * sigma))) ** N
        assert got == pytest.approx(want, rel=1e-12)


def test_tdma_is_mean_of_per_user_outages():
    vals = [
        outage_tdma(MEASURED_UR[u : u + 1], MEASURED_RB, 0.5, TAU, 15.0)
        for u in range(8)
    ]
    assert outage_tdma(MEASURED_UR, MEASURED_RB, 0.5, TAU, 15.0) == pytest.approx(
        np.mean(vals), rel=1e-12
    )


# ------------------------------------------------------- outage_relaxed_tdma ---


def test_relaxed_degenerates_to_tdma_and_exact():
    cfg = measured_config()
    k1 = make_grouping("fixed_order", 1, cfg)
    kM = make_grouping("fixed_order", 8, cfg)
    eta = db(np.arange(0, 25, 5))
    tdma = outage_tdma(MEASURED_UR, MEASURED_RB, 0.5, TAU, eta)
    exact = outage_exact(MEASURED_UR, MEASURED_RB, 0.5, TAU, eta)
    assert np.allclose(outage_relaxed_tdma(k1, MEASURED_UR, MEASURED_RB, 0.5, TAU, eta), tdma, rtol=1e-12)
    assert np.allclose(outage_relaxed_tdma(kM, MEASURED_UR, MEASURED_RB, 0.5, TAU, eta), exact, rtol=1e-12)


def test_relaxed_is_group_mean_of_exact():
    groups = ((0, 3), (1, 2), (4, 7), (5, 6))
    eta = 20.0
    per_group = [
        outage_exact(MEASURED_UR[list(g)], MEASURED_RB, 0.5, TAU, eta) for g in groups
    ]
    got = outage_relaxed_tdma(groups, MEASURED_UR, MEASURED_RB, 0.5, TAU, eta)
    assert got == pytest.approx(np.mean(per_group), rel=1e-12)


# ----------------------------------------------------------- outage_high_snr ---


def test_high_snr_relative_error_vanishes():
    # symmetric two-relay single-user case: once the exact outage is below
    # 1e-2 the expansion tracks it within 5%, and the ratio converges to 1
    ur = np.full((1, 2), 1.0)
    rb = np.full(2, 1.0)
    eta = 10.0
    reached = False
    while eta < 1e8:
        exact = outage_exact(ur, rb, 0.5, TAU, eta)
        approx = outage_high_snr(ur, rb, 0.5, TAU, eta)
        if exact < 1e-2:
            reached = True
            assert abs(approx - exact) / exact < 0.05
        eta *= 2.0
    assert reached
    # multi-user variant converges too, just from deeper in the tail
    ur3 = np.full((3, 2), 1.0)
    assert outage_high_snr(ur3, rb, 0.5, TAU, 1e7) / outage_exact(ur3, rb, 0.5, TAU, 1e7) == pytest.approx(1.0, abs=1e-4)


def test_high_snr_multiuser_limit_drops_user_terms():
    # with M > 1 the user-side terms vanish faster, leaving prod tau/((1-a) W_rB eta)
    rb = np.array([1.2, 0.7, 0.9])
    eta = 1e8
    limit = np.prod(TAU / (0.5 * rb * eta))
    got = outage_high_snr(np.full((4, 3), 0.8), rb, 0.5, TAU, eta)
    assert got == pytest.approx(limit, rel=1e-6)
    assert got == pytest.approx(
        outage_two_user_highsnr(rb, 0.5, TAU, eta), rel=1e-6
    )


def test_high_snr_single_user_keeps_first_hop_term():
    # M = 1 keeps the 1/(alpha W_ur) contribution at the same eta order
    ur = np.array([[0.5, 2.0]])
    rb = np.array([1.0, 1.0])
    eta = 1e9
    want = np.prod(TAU / (0.5 * rb * eta) + TAU / (0.5 * ur[0] * eta))
    assert outage_high_snr(ur, rb, 0.5, TAU, eta) == pytest.approx(want, rel=1e-6)


def test_tdma_high_snr_tracks_tdma():
    got = outage_tdma_high_snr(MEASURED_UR, MEASURED_RB, 0.5, TAU, 1e7)
    exact = outage_tdma(MEASURED_UR, MEASURED_RB, 0.5, TAU, 1e7)
    assert got == pytest.approx(exact, rel=1e-4)
    # pure power law: doubling eta divides the value by exactly 2^N
    ratio = outage_tdma_high_snr(MEASURED_UR, MEASURED_RB, 0.5, TAU, 1e6) / got
    assert ratio == pytest.approx(10.0 ** 5, rel=1e-12)


# ------------------------------------------------- outage_two_user_highsnr ---


def test_two_user_high_snr_single_factor_value():
    assert outage_two_user_highsnr([1.0], 0.5, TAU, 600.0) == pytest.approx(0.01, abs=1e-18)


def test_two_user_high_snr_is_bound_expansion():
    rb = np.array([0.9, 1.4])
    for eta in (1e3, 1e5, 1e7):
        ratio = outage_lower_bound(rb, 0.5, TAU, eta) / outage_two_user_highsnr(rb, 0.5, TAU, eta)
        assert abs(ratio - 1.0) < 10.0 / eta


def test_two_user_relaxed_monte_carlo_near_high_snr_value():
    # pair of users, one relay, 30 dB: simulated outage within 10% of the
    # leading-order value
    cfg = symmetric_config(2, 1, total_power=1000.0)
    n = 4_000_000
    gain_ur, gain_rb = FadingProcess(cfg, seed=6).draw_block(n)
    members, sizes = make_grouping("fixed_order", 2, cfg).member_arrays()
    _, _, _, outage = evaluate_schedule_block(
        gain_ur, gain_rb, cfg.p_user, cfg.p_relay, cfg.decode_threshold, members, sizes, 0
    )
    want = outage_two_user_highsnr([1.0], 0.5, TAU, 1000.0)
    assert abs(outage.mean() - want) / want < 0.10


# ---------------------------------------------------- estimate_diversity_order ---


def test_diversity_fit_exact_power_law():
    eta = db([10, 20, 30, 40, 50])
    prob = 1e-1 * eta**-3.0
    assert estimate_diversity_order(curve(prob, eta), fit_range=(1e-20, 1.0)) == pytest.approx(
        3.0, abs=1e-9
    )


def test_diversity_fit_greedy_measured_topology():
    eta = db(np.arange(0, 60, 1.0))
    prob = outage_exact(MEASURED_UR, MEASURED_RB, 0.5, TAU, eta)
    order = estimate_diversity_order(curve(prob, eta))
    assert 4.7 <= order <= 5.3
    # regression pin: the finite-window fit sits measurably below the true
    # asymptotic slope of 5 (the curve approaches it only at deeper outage)
    assert order == pytest.approx(4.7237, abs=2e-3)


def test_diversity_fit_tdma_symmetric():
    eta = db(np.arange(0, 60, 1.0))
    prob = outage_tdma(np.ones((8, 5)), np.ones(5), 0.5, TAU, eta)
    order = estimate_diversity_order(curve(prob, eta))
    assert 4.7 <= order <= 5.3


def test_diversity_fit_tdma_measured_topology_pin():
    eta = db(np.arange(0, 60, 1.0))
    prob = outage_tdma(MEASURED_UR, MEASURED_RB, 0.5, TAU, eta)
    assert estimate_diversity_order(curve(prob, eta)) == pytest.approx(4.6828, abs=2e-3)


def test_diversity_fit_high_snr_expansions_hit_relay_count():
    # the large-SNR expansions carry the true slope at any finite depth
    eta = db(np.arange(35, 90, 1.0))
    greedy = outage_high_snr(MEASURED_UR, MEASURED_RB, 0.5, TAU, eta)
    tdma = outage_tdma_high_snr(MEASURED_UR, MEASURED_RB, 0.5, TAU, eta)
    assert estimate_diversity_order(curve(greedy, eta), fit_range=(1e-250, 1e-2)) == pytest.approx(5.0, abs=1e-3)
    assert estimate_diversity_order(curve(tdma, eta), fit_range=(1e-250, 1e-2)) == pytest.approx(5.0, abs=1e-6)


def test_diversity_fit_needs_three_points():
    eta = db([10, 20, 30])
    prob = np.array([0.5, 0.3, 0.2])  # all above the window
    with pytest.raises(ValueError, match="at least 3"):
        estimate_diversity_order(curve(prob, eta))
    with pytest.raises(ValueError):
        estimate_diversity_order(curve(prob, eta), fit_range=(1e-2, 1e-4))


# ------------------------------------------------------------ gap measurement ---


def symmetric_tdma_curve(alpha, sigma, N, snr_db):
    eta = db(snr_db)
    prob = (1.0 - np.exp(-(1.0 / (alpha * (1 - alpha))) * TAU / (eta * sigma))) ** N
    return curve(prob, eta)


def symmetric_bound_curve(alpha, sigma, N, snr_db):
    eta = db(snr_db)
    prob = (1.0 - np.exp(-(1.0 / (1 - alpha)) * TAU / (eta * sigma))) ** N
    return curve(prob, eta)


def test_measured_gap_matches_power_split_penalty():
    snr = np.arange(0.0, 45.0, 0.5)
    for alpha in (0.5, 0.8):
        gap = measure_gap_db(
            symmetric_tdma_curve(alpha, 1.0, 5, snr),
            symmetric_bound_curve(alpha, 1.0, 5, snr),
            1e-4,
        )
        assert abs(gap - power_gap_db(alpha)) < 0.1
        # the two curves differ by an exact eta rescaling, so the residual is
        # pure interpolation error, far below the tolerance
        assert abs(gap - power_gap_db(alpha)) < 1e-3


def test_measured_gap_identical_curves_is_zero():
    c = symmetric_bound_curve(0.5, 1.0, 3, np.arange(0, 40, 1.0))
    assert measure_gap_db(c, c, 1e-3) == 0.0


def test_measured_gap_constructed_double_shift():
    eta = db(np.arange(20, 41, 1.0))
    base = curve(1e2 * eta**-2.0, eta)
    shifted = curve(1e2 * (eta / 2.0) ** -2.0, eta)
    gap = measure_gap_db(shifted, base, 1e-3)
    assert gap == pytest.approx(10.0 * math.log10(2.0), abs=1e-9)


def test_measured_gap_requires_crossing():
    c1 = symmetric_bound_curve(0.5, 1.0, 3, np.arange(0, 40, 1.0))
    with pytest.raises(ValueError):
        measure_gap_db(c1, c1, 1e-12)


def test_power_gap_values():
    assert power_gap_db(0.5) == pytest.approx(3.0103, abs=1e-4)
    assert power_gap_db(0.8) == pytest.approx(0.9691, abs=1e-4)
    assert power_gap_db(1.0 - 1e-12) == pytest.approx(0.0, abs=1e-11)
    with pytest.raises(ValueError):
        power_gap_db(1.0)


# ----------------------------------------------------------------- OutageCurve ---


def test_outage_curve_validation():
    with pytest.raises(ValueError):
        OutageCurve(snr=[1.0, 2.0], probability=[0.5, 1.5])
    with pytest.raises(ValueError):
        OutageCurve(snr=[2.0, 1.0], probability=[0.5, 0.4])
    with pytest.raises(ValueError):
        OutageCurve(snr=[1.0, 2.0], probability=[0.5])
    c = OutageCurve(snr=[1.0, 10.0], probability=[0.9, 0.1])
    assert np.allclose(c.snr_db, [0.0, 10.0])


# ------------------------------------------------------- ordering & monotonicity ---


def test_consistency_ladder_on_random_grid():
    # bound <= greedy exact <= round-robin, across a random parameter grid
    rng = np.random.default_rng(321)
    for _ in range(100):
        M = int(rng.integers(1, 9))
        N = int(rng.integers(1, 7))
        ur = rng.uniform(0.1, 3.0, (M, N))
        rb = rng.uniform(0.1, 3.0, N)
        alpha = float(rng.uniform(0.05, 0.95))
        tau = float(rng.uniform(0.3, 6.0))
        eta = float(10.0 ** rng.uniform(-0.5, 4.0))
        bound = outage_lower_bound(rb, alpha, tau, eta)
        exact = outage_exact(ur, rb, alpha, tau, eta)
        tdma = outage_tdma(ur, rb, alpha, tau, eta)
        assert bound <= exact * (1 + 1e-12)
        assert exact <= tdma * (1 + 1e-12)
        assert 0.0 <= bound and tdma <= 1.0


def test_monotone_in_users():
    eta = 20.0
    rng = np.random.default_rng(9)
    gains = rng.uniform(0.3, 2.0, (10, 4))
    rb = rng.uniform(0.3, 2.0, 4)
    vals = [outage_exact(gains[:M], rb, 0.5, TAU, eta) for M in range(1, 11)]
    assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


def test_monotone_in_relays():
    eta = 20.0
    rng = np.random.default_rng(10)
    gains = rng.uniform(0.3, 2.0, (4, 8))
    rb = rng.uniform(0.3, 2.0, 8)
    for fn in (
        lambda n: outage_exact(gains[:, :n], rb[:n], 0.5, TAU, eta),
        lambda n: outage_tdma(gains[:, :n], rb[:n], 0.5, TAU, eta),
    ):
        vals = [fn(n) for n in range(1, 9)]
        assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


def test_monotone_in_snr():
    eta = db(np.arange(-5, 60, 1.0))
    for prob in (
        outage_exact(MEASURED_UR, MEASURED_RB, 0.5, TAU, eta),
        outage_tdma(MEASURED_UR, MEASURED_RB, 0.5, TAU, eta),
        outage_lower_bound(MEASURED_RB, 0.5, TAU, eta),
    ):
        assert np.all(np.diff(prob) < 0)
        assert np.all((prob >= 0) & (prob <= 1))
