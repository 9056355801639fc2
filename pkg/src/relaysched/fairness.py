"""Airtime fairness and access-delay metrics.

Fairness is Jain's index FI(x) = (sum x)^2 / (M * sum x^2) over per-user
airtime shares: 1 when everyone gets equal airtime, 1/M when one user
monopolizes.  k-user grouped scheduling keeps FI >= 1/k no matter how biased
the within-group competition is, since groups themselves rotate evenly.

Access delay is the gap between a user's consecutive transmissions.  Under
round-robin groups with an in-group win probability of 1/k the gap is
(M/k) * Geometric(1/k) slots, so E[T] = M * delta regardless of k while
Var[T] = (1 - 1/k) * (M * delta)^2 grows with k — the fairness cost of
opportunism in time rather than airtime.
"""

import warnings
from dataclasses import dataclass

import numpy as np


def jain_index(shares):
    """Jain's fairness index of a non-negative allocation vector."""
    x = np.asarray(shares, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("shares must be a non-empty 1-d vector")
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ValueError("shares must be finite and non-negative")
    total = x.sum()
    if total == 0:
        raise ValueError("shares must not be all zero")
    return float(total * total / (x.size * np.sum(x * x)))


def fi_lower_bound(k, num_users=None):
    """Worst-case Jain index of k-user grouped scheduling: 1/k.

    Attained when one member of each group takes its group's entire airtime.
    k = 1 (fixed TDMA) guarantees perfect fairness; k = M (greedy) guarantees
    nothing beyond 1/M.
    """
    if k < 1:
        raise ValueError(f"group size k must be >= 1, got {k}")
    if num_users is not None and k > num_users:
        raise ValueError(f"group size k must not exceed the user count {num_users}, got {k}")
    return 1.0 / k


@dataclass(frozen=True)
class AirtimeLedger:
    """Cumulative per-user slot counts for one run."""

    per_user_slots: np.ndarray
    total_slots: int

    def __post_init__(self):
        counts = np.asarray(self.per_user_slots, dtype=np.int64)
        if counts.ndim != 1 or counts.size == 0 or np.any(counts < 0):
            raise ValueError("per_user_slots must be a non-empty vector of counts >= 0")
        if int(counts.sum()) != self.total_slots:
            raise ValueError(
                f"per-user slot counts sum to {int(counts.sum())}, "
                f"but total_slots is {self.total_slots}"
            )
        counts = counts.copy()
        counts.setflags(write=False)
        object.__setattr__(self, "per_user_slots", counts)

    @classmethod
    def from_schedule(cls, user_sequence, num_users):
        seq = np.asarray(user_sequence)
        return cls(
            per_user_slots=np.bincount(seq, minlength=num_users),
            total_slots=int(seq.size),
        )

    def jain(self):
        return jain_index(self.per_user_slots.astype(np.float64))


@dataclass(frozen=True)
class DelaySamples:
    """Per-user access gaps in slots (differences of consecutive scheduled slots)."""

    gaps: tuple  # one int64 array per user

    @classmethod
    def from_schedule(cls, user_sequence, num_users):
        seq = np.asarray(user_sequence)
        return cls(
            gaps=tuple(np.diff(np.flatnonzero(seq == u)) for u in range(num_users))
        )

    @property
    def num_users(self):
        return len(self.gaps)


@dataclass(frozen=True)
class UserDelayStats:
    mean: float  # seconds
    var: float  # seconds^2, sample variance
    count: int


@dataclass(frozen=True)
class DelayStatistics:
    per_user: tuple  # UserDelayStats or None per user
    pooled: UserDelayStats
    insufficient_users: tuple  # user indices with fewer than 2 gap samples


def delay_statistics(samples, slot_duration):
    """Mean and variance of access delay, per user and pooled, in seconds.

    Users with fewer than 2 gap samples cannot support a variance estimate;
    they are flagged in insufficient_users and carry None in per_user (their
    gaps still enter the pooled statistics).
    """
    if slot_duration <= 0:
        raise ValueError(f"slot_duration must be > 0, got {slot_duration}")
    def _stats(gap_array):
        # moments on the integer slot gaps, scaled afterwards: constant gaps
        # (e.g. strict round robin) then give a variance of exactly zero
        g = np.asarray(gap_array, dtype=np.float64)
        return UserDelayStats(
            mean=float(g.mean() * slot_duration),
            var=float(g.var(ddof=1) * slot_duration**2),
            count=g.size,
        )

    per_user = []
    insufficient = []
    for u, gaps in enumerate(samples.gaps):
        if len(gaps) < 2:
            insufficient.append(u)
            per_user.append(None)
            continue
        per_user.append(_stats(gaps))
    all_gaps = [np.asarray(g, dtype=np.float64) for g in samples.gaps if len(g) > 0]
    pooled_g = np.concatenate(all_gaps) if all_gaps else np.empty(0)
    if pooled_g.size < 2:
        raise ValueError(
            "need at least 2 access gaps overall to form pooled delay statistics"
        )
    pooled = _stats(pooled_g)
    return DelayStatistics(
        per_user=tuple(per_user), pooled=pooled, insufficient_users=tuple(insufficient)
    )


def doppler_unit_slots(doppler_hz, slot_duration):
    """Slots per normalized Doppler unit: (1/slot_duration) / doppler_hz.

    At the default 500 Hz slot rate and 15 Hz Doppler one unit is ~33 slots,
    the natural x-axis for windowed-fairness curves under correlated fading.
    """
    if doppler_hz <= 0 or slot_duration <= 0:
        raise ValueError("doppler_hz and slot_duration must be > 0")
    return 1.0 / (doppler_hz * slot_duration)


def windowed_fi_series(user_sequence, num_users, window_length):
    """Sliding-window Jain index over a schedule.

    Returns (positions, fi): for every window [t - L + 1, t] with
    t >= L - 1 (step 1), positions holds t and fi the Jain index of the
    airtime counts inside the window.  Every slot schedules somebody, so the
    window total is always L and the index is well defined.
    """
    window_length = int(window_length)
    if window_length < 1:
        raise ValueError(f"window_length must be >= 1, got {window_length}")
    if window_length < num_users:
        warnings.warn(
            f"window_length {window_length} is shorter than the user count "
            f"{num_users}; the windowed index cannot reach 1",
            stacklevel=2,
        )
    seq = np.asarray(user_sequence)
    n = seq.size
    if np.any(seq < 0) or np.any(seq >= num_users):
        raise ValueError("user_sequence entries must lie in [0, num_users)")
    if n < window_length:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    cum = np.zeros((n + 1, num_users), dtype=np.int32)
    cum[np.arange(1, n + 1), seq] = 1
    np.cumsum(cum, axis=0, out=cum)
    counts = (cum[window_length:] - cum[:-window_length]).astype(np.float64)
    sum_sq = np.einsum("ij,ij->i", counts, counts)
    fi = (float(window_length) ** 2) / (num_users * sum_sq)
    positions = np.arange(window_length - 1, n, dtype=np.int64)
    return positions, fi
