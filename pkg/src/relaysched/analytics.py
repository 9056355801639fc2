"""Closed-form outage probabilities and curve utilities.

All formulas are exact or asymptotic expressions for the two-hop
decode-and-forward uplink with exponential channel gains:

- outage_exact: greedy scheduling over all M users (also the system optimum),
  prod_r {1 - [1 - prod_u (1 - e^{-tau/(alpha eta W_ur)})] e^{-tau/((1-alpha) eta W_rB)}}.
- outage_lower_bound: every user's first hop assumed perfect, so only the
  relay->base hops matter; independent of the user-side gains.
- outage_tdma: fixed round-robin, the per-user outage averaged over users.
- outage_relaxed_tdma: group-restricted greedy, averaged over a partition.
- outage_high_snr / outage_two_user_highsnr: leading-order expansions whose
  per-relay factor decays like 1/eta, exposing the diversity order N.

eta is the transmit SNR P0/N0 (linear); every function is vectorized over it
and returns a scalar for scalar input.  1 - e^{-x} is evaluated as
-expm1(-x) throughout so deep-outage tails keep full precision.
"""

from dataclasses import dataclass

import numpy as np


def _check_params(alpha, snr_threshold):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if snr_threshold <= 0:
        raise ValueError(f"snr_threshold must be > 0, got {snr_threshold}")


def _over_eta(eta, fn):
    arr = np.asarray(eta, dtype=np.float64)
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError("eta values must be finite and > 0")
    out = fn(np.atleast_1d(arr))
    return float(out[0]) if arr.ndim == 0 else out


def outage_exact(mean_gain_ur, mean_gain_rb, alpha, snr_threshold, eta):
    """Exact outage probability of greedy (best-user) scheduling."""
    _check_params(alpha, snr_threshold)
    ur = np.asarray(mean_gain_ur, dtype=np.float64)
    rb = np.asarray(mean_gain_rb, dtype=np.float64)

    def fn(e):
        x = snr_threshold / (alpha * e[:, None, None] * ur[None, :, :])
        all_first_hops_fail = np.prod(-np.expm1(-x), axis=1)  # per relay
        second_hop_ok = np.exp(-snr_threshold / ((1.0 - alpha) * e[:, None] * rb[None, :]))
        per_relay = 1.0 - (1.0 - all_first_hops_fail) * second_hop_ok
        return np.prod(per_relay, axis=1)

    return _over_eta(eta, fn)


def outage_lower_bound(mean_gain_rb, alpha, snr_threshold, eta):
    """Outage floor with ideal first hops: only relay->base links can fail.

    Takes no user-side gains at all — the bound is independent of them.
    """
    _check_params(alpha, snr_threshold)
    rb = np.asarray(mean_gain_rb, dtype=np.float64)

    def fn(e):
        x = snr_threshold / ((1.0 - alpha) * e[:, None] * rb[None, :])
        return np.prod(-np.expm1(-x), axis=1)

    return _over_eta(eta, fn)


def outage_tdma(mean_gain_ur, mean_gain_rb, alpha, snr_threshold, eta):
    """Outage probability of fixed TDMA: per-user outage averaged over users."""
    _check_params(alpha, snr_threshold)
    ur = np.asarray(mean_gain_ur, dtype=np.float64)
    rb = np.asarray(mean_gain_rb, dtype=np.float64)

    def fn(e):
        x = (snr_threshold / e[:, None, None]) * (
            1.0 / (alpha * ur[None, :, :]) + 1.0 / ((1.0 - alpha) * rb[None, None, :])
        )
        per_user = np.prod(-np.expm1(-x), axis=2)
        return per_user.mean(axis=1)

    return _over_eta(eta, fn)


def outage_relaxed_tdma(pattern, mean_gain_ur, mean_gain_rb, alpha, snr_threshold, eta):
    """Outage of k-user relaxed TDMA under a grouping pattern.

    Each group owns an equal share of slots and behaves as a greedy system
    restricted to its members, so the system outage is the arithmetic mean of
    outage_exact over the groups' gain rows.  Degenerates to outage_tdma for
    singleton groups and to outage_exact for one all-user group.
    `pattern` may be a GroupingPattern or any iterable of index groups.
    """
    groups = getattr(pattern, "groups", pattern)
    ur = np.asarray(mean_gain_ur, dtype=np.float64)
    vals = [
        outage_exact(ur[list(g)], mean_gain_rb, alpha, snr_threshold, eta) for g in groups
    ]
    return sum(vals) / len(vals)


def outage_high_snr(mean_gain_ur, mean_gain_rb, alpha, snr_threshold, eta):
    """Leading-order expansion of outage_exact for large eta.

    Per relay: b/eta + A/eta^M - A b / eta^(M+1) with b = tau/((1-alpha) W_rB)
    and A = prod_u tau/(alpha W_ur).  Valid as an approximation only when eta
    is large; for M > 1 the user-side terms vanish faster and the product
    tends to prod_r b_r / eta, giving diversity order N.
    """
    _check_params(alpha, snr_threshold)
    ur = np.asarray(mean_gain_ur, dtype=np.float64)
    rb = np.asarray(mean_gain_rb, dtype=np.float64)
    M = ur.shape[0]
    a_coef = np.prod(snr_threshold / (alpha * ur), axis=0)  # per relay
    b_coef = snr_threshold / ((1.0 - alpha) * rb)

    def fn(e):
        e1 = e[:, None]
        per_relay = (
            b_coef[None, :] / e1
            + a_coef[None, :] * e1 ** (-M)
            - a_coef[None, :] * b_coef[None, :] * e1 ** (-(M + 1))
        )
        return np.prod(per_relay, axis=1)

    return _over_eta(eta, fn)


def outage_tdma_high_snr(mean_gain_ur, mean_gain_rb, alpha, snr_threshold, eta):
    """Leading-order expansion of outage_tdma for large eta.

    (1/M) sum_u prod_r [tau/(alpha W_ur) + tau/((1-alpha) W_rB)] / eta^N: an
    exact power law in eta with exponent N, so the round-robin scheduler keeps
    the full relay-count diversity order despite its SNR penalty.
    """
    _check_params(alpha, snr_threshold)
    ur = np.asarray(mean_gain_ur, dtype=np.float64)
    rb = np.asarray(mean_gain_rb, dtype=np.float64)
    num_relays = rb.shape[0]
    per_user = np.prod(
        snr_threshold / (alpha * ur) + snr_threshold / ((1.0 - alpha) * rb)[None, :],
        axis=1,
    )
    coef = per_user.mean()

    def fn(e):
        return coef * e ** (-num_relays)

    return _over_eta(eta, fn)


def outage_two_user_highsnr(mean_gain_rb, alpha, snr_threshold, eta):
    """High-SNR outage of two-user relaxed TDMA: prod_r tau/((1-alpha) W_rB eta).

    Coincides with the large-eta limit of outage_lower_bound, which is how
    relaxing TDMA to pairs already buys the full N-th-order diversity.
    """
    _check_params(alpha, snr_threshold)
    rb = np.asarray(mean_gain_rb, dtype=np.float64)
    coef = snr_threshold / ((1.0 - alpha) * rb)

    def fn(e):
        return np.prod(coef[None, :] / e[:, None], axis=1)

    return _over_eta(eta, fn)


@dataclass(frozen=True)
class OutageCurve:
    """An outage-vs-SNR curve: linear eta grid (ascending) and probabilities."""

    snr: np.ndarray
    probability: np.ndarray
    label: str = ""

    def __post_init__(self):
        snr = np.asarray(self.snr, dtype=np.float64)
        prob = np.asarray(self.probability, dtype=np.float64)
        if snr.ndim != 1 or snr.shape != prob.shape:
            raise ValueError("snr and probability must be 1-d arrays of equal length")
        if snr.size < 1 or np.any(snr <= 0) or np.any(np.diff(snr) <= 0):
            raise ValueError("snr grid must be positive and strictly increasing")
        if np.any(prob < 0) or np.any(prob > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        snr = snr.copy()
        prob = prob.copy()
        snr.setflags(write=False)
        prob.setflags(write=False)
        object.__setattr__(self, "snr", snr)
        object.__setattr__(self, "probability", prob)

    @property
    def snr_db(self):
        return 10.0 * np.log10(self.snr)


def estimate_diversity_order(curve, fit_range=(1e-10, 1e-2)):
    """Diversity order from the log-log slope of an outage curve.

    Fits log10(P) against log10(eta) by least squares over the points whose
    outage lies inside fit_range (default [1e-10, 1e-2], the regime where
    the slope has converged but float64 still resolves the tail) and returns
    the negated slope.  Requires at least 3 qualifying points.
    """
    lo, hi = fit_range
    if not 0 < lo < hi <= 1:
        raise ValueError(f"fit_range must satisfy 0 < lo < hi <= 1, got {fit_range}")
    p = curve.probability
    mask = (p >= lo) & (p <= hi)
    if np.count_nonzero(mask) < 3:
        raise ValueError(
            f"need at least 3 curve points with outage in [{lo:g}, {hi:g}] to fit a "
            f"slope; got {np.count_nonzero(mask)}"
        )
    slope = np.polyfit(np.log10(curve.snr[mask]), np.log10(p[mask]), 1)[0]
    return -float(slope)


def _eta_log10_at(curve, target):
    p = curve.probability
    if np.any(np.diff(p) >= 0):
        raise ValueError("curve must be strictly decreasing in outage to locate a crossing")
    if not p.min() <= target <= p.max():
        raise ValueError(
            f"target outage {target:g} lies outside the curve's range "
            f"[{p.min():g}, {p.max():g}]"
        )
    # log-log interpolation; reverse so the x grid is increasing
    return np.interp(np.log10(target), np.log10(p[::-1]), np.log10(curve.snr[::-1]))


def measure_gap_db(curve_a, curve_b, target_outage):
    """Horizontal SNR gap (dB) between two curves at a target outage level.

    Positive when curve_a needs more SNR than curve_b to reach the target.
    Crossings are located by log-log interpolation, so both curves must be
    strictly decreasing and bracket the target.
    """
    if not 0 < target_outage < 1:
        raise ValueError(f"target_outage must lie in (0, 1), got {target_outage}")
    return 10.0 * float(_eta_log10_at(curve_a, target_outage) - _eta_log10_at(curve_b, target_outage))


def power_gap_db(alpha):
    """Asymptotic SNR penalty of fixed TDMA over the outage floor: 10 log10(1/alpha).

    The TDMA curve is the floor evaluated at alpha * eta, so at high SNR the
    two run parallel, separated by exactly this many dB (3.01 dB at
    alpha = 0.5).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return 10.0 * float(np.log10(1.0 / alpha))
