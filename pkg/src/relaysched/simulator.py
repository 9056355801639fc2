"""Monte Carlo engine: seeded, sharded, mergeable slot simulation.

A *point* is one (SNR, policy) pair.  Its slots are split into shards whose
random streams are spawned from (base_seed, SNR value, policy identity,
repeat, shard index) — values, not sweep positions — so every point, and
every shard within it, is reproducible in isolation and independent of
sweep composition or execution order.  Shard results land in a
MetricsAccumulator whose merge is associative and commutative (counts add;
recorded segments are keyed by disjoint shard ids; float sums are kept per
shard and reduced in sorted key order), which makes the sharded parallel run
bit-identical to the single-threaded one.

Points stop after at least trials_per_point slots, escalating in doubling
waves until min_outage_events outage events are seen or max_trials slots are
spent (the accumulator is then flagged `capped`).  Correlated (gauss_markov)
fading runs sequentially — one stream per repeat — because shard splits
would sever the fading state between consecutive slots.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.random import SeedSequence

from . import kernels
from .analytics import outage_exact, outage_relaxed_tdma, outage_tdma
from .fairness import (
    AirtimeLedger,
    DelaySamples,
    delay_statistics,
    doppler_unit_slots,
    jain_index,
    windowed_fi_series,
)
from .model import FadingProcess, doppler_to_rho
from .protocol import ProtocolParams, default_protocol_params
from .scheduling import GROUPING_STRATEGIES, make_grouping

Z95 = 1.959963984540054  # two-sided 95% standard-normal quantile

POLICY_KINDS = ("tdma", "greedy", "relaxed")
_KIND_IDS = {kind: i for i, kind in enumerate(POLICY_KINDS)}
_GROUPING_IDS = {name: i for i, name in enumerate(GROUPING_STRATEGIES)}

WORKERS_ENV_VAR = "RELAYSCHED_WORKERS"


def wilson_interval(successes, trials, z=Z95):
    """Wilson score confidence interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError(f"trials must be > 0, got {trials}")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes must lie in [0, {trials}], got {successes}")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    half = (
        z
        * np.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))
        / denom
    )
    # at p = 0 (resp. 1) the endpoint equals 0 (resp. 1) algebraically:
    # half reduces to z^2/(2 trials)/denom = center (resp. 1 - center)
    lo = 0.0 if successes == 0 else max(0.0, float(center - half))
    hi = 1.0 if successes == trials else min(1.0, float(center + half))
    return lo, hi


@dataclass(frozen=True)
class PolicyEntry:
    """One scheduling policy of a sweep.

    group_size, grouping, grouping_seed, and pattern_repeats apply to
    kind="relaxed" only; pattern_repeats > 1 averages over that many
    independently seeded grouping patterns (meaningful for the "random"
    strategy) by splitting the point's slot budget evenly among them.
    """

    label: str
    kind: str = "tdma"
    group_size: int = 2
    grouping: str = "random"
    grouping_seed: int = 0
    pattern_repeats: int = 1

    def __post_init__(self):
        if not self.label:
            raise ValueError("policy label must be non-empty")
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"policy kind must be one of {POLICY_KINDS}, got {self.kind!r}")
        if self.grouping not in GROUPING_STRATEGIES:
            raise ValueError(
                f"grouping must be one of {GROUPING_STRATEGIES}, got {self.grouping!r}"
            )
        if self.group_size < 1:
            raise ValueError(f"group_size must be >= 1, got {self.group_size}")
        if self.pattern_repeats < 1:
            raise ValueError(f"pattern_repeats must be >= 1, got {self.pattern_repeats}")

    @classmethod
    def tdma(cls, label="tdma"):
        return cls(label=label, kind="tdma", group_size=1)

    @classmethod
    def greedy(cls, label="greedy"):
        return cls(label=label, kind="greedy")

    @classmethod
    def relaxed(cls, label, group_size, grouping="random", grouping_seed=0, pattern_repeats=1):
        return cls(
            label=label,
            kind="relaxed",
            group_size=group_size,
            grouping=grouping,
            grouping_seed=grouping_seed,
            pattern_repeats=pattern_repeats,
        )

    def resolved_group_size(self, config):
        if self.kind == "tdma":
            return 1
        if self.kind == "greedy":
            return config.num_users
        return self.group_size

    def build_pattern(self, config, repeat=0):
        if self.kind == "tdma":
            return make_grouping("fixed_order", 1, config)
        if self.kind == "greedy":
            return make_grouping("fixed_order", config.num_users, config)
        return make_grouping(
            self.grouping, self.group_size, config, seed=self.grouping_seed + repeat
        )


@dataclass(frozen=True)
class ExperimentPlan:
    """Fully resolved description of an experiment run."""

    config: "NetworkConfig"
    snr_db: tuple
    policies: tuple
    trials_per_point: int = 100_000
    max_trials: int = 10_000_000
    min_outage_events: int = 100
    base_seed: int = 1
    fading: str = "iid"
    doppler_hz: float = 15.0
    rho: float = None
    shard_slots: int = 32_768
    fairness_snr_db: float = 15.0
    fairness_slots: int = 200_000
    fairness_windows: tuple = (0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0)
    protocol_slots: int = 100_000
    vulnerable_window: float = 0.0
    backoff_scale: float = None
    backoff_eps: float = None
    use_protocol_path: bool = False

    def __post_init__(self):
        snr = tuple(float(s) for s in np.atleast_1d(self.snr_db))
        if len(snr) == 0:
            raise ValueError("snr_db sweep must be non-empty")
        if any(b <= a for a, b in zip(snr, snr[1:])):
            raise ValueError("snr_db sweep must be strictly increasing")
        object.__setattr__(self, "snr_db", snr)
        policies = tuple(self.policies)
        if not policies:
            raise ValueError("at least one policy is required")
        labels = [p.label for p in policies]
        if len(set(labels)) != len(labels):
            raise ValueError(f"policy labels must be unique, got {labels}")
        object.__setattr__(self, "policies", policies)
        if self.trials_per_point < 1000:
            raise ValueError(
                f"trials_per_point must be >= 1000, got {self.trials_per_point}"
            )
        if self.max_trials < self.trials_per_point:
            raise ValueError("max_trials must be >= trials_per_point")
        if self.min_outage_events < 1:
            raise ValueError("min_outage_events must be >= 1")
        if not 0 <= int(self.base_seed) < 2**64:
            raise ValueError("base_seed must fit an unsigned 64-bit integer")
        if self.fading not in ("iid", "gauss_markov"):
            raise ValueError(f"fading must be 'iid' or 'gauss_markov', got {self.fading!r}")
        if self.shard_slots < 1:
            raise ValueError("shard_slots must be >= 1")
        windows = tuple(float(w) for w in self.fairness_windows)
        if any(w <= 0 for w in windows) or any(
            b <= a for a, b in zip(windows, windows[1:])
        ):
            raise ValueError("fairness_windows must be positive and strictly increasing")
        object.__setattr__(self, "fairness_windows", windows)
        if self.fairness_slots < 1000:
            raise ValueError("fairness_slots must be >= 1000")
        if self.protocol_slots < 1:
            raise ValueError("protocol_slots must be >= 1")
        if self.vulnerable_window < 0:
            raise ValueError("vulnerable_window must be >= 0")

    def protocol_params(self, config=None):
        cfg = config if config is not None else self.config
        base = default_protocol_params(cfg, vulnerable_window=self.vulnerable_window)
        return ProtocolParams(
            backoff_scale=self.backoff_scale if self.backoff_scale is not None else base.backoff_scale,
            backoff_eps=self.backoff_eps if self.backoff_eps is not None else base.backoff_eps,
            vulnerable_window=self.vulnerable_window,
        )

    def rho_value(self):
        if self.rho is not None:
            return self.rho
        return doppler_to_rho(self.doppler_hz, self.config.slot_duration)


class MetricsAccumulator:
    """Mergeable per-point statistics.

    Segment keys (repeat, shard index) identify disjoint slot ranges; merging
    accumulators with overlapping keys is rejected.  Float quantities are
    kept per segment and reduced in sorted key order at read time, so results
    never depend on merge order.
    """

    def __init__(self, num_users, record_schedule=False):
        self.num_users = num_users
        self.record_schedule = record_schedule
        self.slot_count = 0
        self.outage_count = 0
        self.per_user_slots = np.zeros(num_users, dtype=np.int64)
        self.seen_segments = set()
        self.segments = {}
        self.rts_total = 0
        self.collision_count = 0
        self.backoff_sums = {}
        self.has_protocol_stats = False
        self.capped = False

    def observe(self, segment_key, users, outage, rts=None, collision=None, backoff=None):
        """Fold in one shard's per-slot results."""
        if segment_key in self.seen_segments:
            raise ValueError(f"segment {segment_key} observed twice")
        self.seen_segments.add(segment_key)
        users = np.asarray(users)
        self.slot_count += int(users.size)
        self.outage_count += int(np.count_nonzero(outage))
        self.per_user_slots += np.bincount(users, minlength=self.num_users)
        if self.record_schedule:
            self.segments[segment_key] = users.astype(np.int32)
        if rts is not None:
            self.has_protocol_stats = True
            self.rts_total += int(np.sum(rts))
            self.collision_count += int(np.count_nonzero(collision))
            self.backoff_sums[segment_key] = float(np.sum(backoff))

    @staticmethod
    def merge(a, b):
        """Combine two disjoint accumulators into a new one."""
        if a.num_users != b.num_users:
            raise ValueError("cannot merge accumulators for different user counts")
        if a.record_schedule != b.record_schedule:
            raise ValueError("cannot merge accumulators with different recording modes")
        overlap = a.seen_segments & b.seen_segments
        if overlap:
            raise ValueError(f"cannot merge accumulators sharing segments {sorted(overlap)}")
        out = MetricsAccumulator(a.num_users, a.record_schedule)
        out.slot_count = a.slot_count + b.slot_count
        out.outage_count = a.outage_count + b.outage_count
        out.per_user_slots = a.per_user_slots + b.per_user_slots
        out.seen_segments = a.seen_segments | b.seen_segments
        out.segments = {**a.segments, **b.segments}
        out.rts_total = a.rts_total + b.rts_total
        out.collision_count = a.collision_count + b.collision_count
        out.backoff_sums = {**a.backoff_sums, **b.backoff_sums}
        out.has_protocol_stats = a.has_protocol_stats or b.has_protocol_stats
        out.capped = a.capped or b.capped
        return out

    @property
    def outage_probability(self):
        if self.slot_count == 0:
            raise ValueError("no slots observed")
        return self.outage_count / self.slot_count

    def wilson_ci(self, z=Z95):
        return wilson_interval(self.outage_count, self.slot_count, z)

    def ledger(self):
        return AirtimeLedger(per_user_slots=self.per_user_slots, total_slots=self.slot_count)

    def fi_longrun(self):
        return jain_index(self.per_user_slots.astype(np.float64))

    def stream_sequences(self):
        """Per-repeat schedules as {repeat: user array}, segments in order."""
        if not self.record_schedule:
            raise ValueError("schedule was not recorded; pass record_schedule=True")
        streams = {}
        for key in sorted(self.segments):
            streams.setdefault(key[0], []).append(self.segments[key])
        return {rep: np.concatenate(parts) for rep, parts in streams.items()}

    def user_sequence(self):
        """All recorded slots concatenated in (repeat, shard) order."""
        streams = self.stream_sequences()
        return np.concatenate([streams[rep] for rep in sorted(streams)])

    def delay_samples(self):
        """Per-user access gaps, computed within each repeat's contiguous stream."""
        streams = self.stream_sequences()
        per_user = [[] for _ in range(self.num_users)]
        for rep in sorted(streams):
            seq = streams[rep]
            for u in range(self.num_users):
                per_user[u].append(np.diff(np.flatnonzero(seq == u)))
        return DelaySamples(
            gaps=tuple(
                np.concatenate(g) if g else np.empty(0, dtype=np.int64) for g in per_user
            )
        )

    def rts_per_slot(self):
        if not self.has_protocol_stats:
            raise ValueError("no protocol statistics accumulated")
        return self.rts_total / self.slot_count

    def collision_rate(self):
        if not self.has_protocol_stats:
            raise ValueError("no protocol statistics accumulated")
        return self.collision_count / self.slot_count

    def mean_backoff(self):
        if not self.has_protocol_stats:
            raise ValueError("no protocol statistics accumulated")
        total = sum(self.backoff_sums[k] for k in sorted(self.backoff_sums))
        return total / self.slot_count


def _u32(x):
    return int(x) & 0xFFFFFFFF


def _point_key(snr_db, entry, config):
    """Stream key for one (SNR, policy) point, built from values not positions."""
    return (
        _u32(round(float(snr_db) * 1000.0)),
        _KIND_IDS[entry.kind],
        int(entry.resolved_group_size(config)),
        _GROUPING_IDS[entry.grouping],
        _u32(entry.grouping_seed),
    )


def _split_evenly(total, parts):
    base, rem = divmod(total, parts)
    return [base + (1 if i < rem else 0) for i in range(parts)]


def _resolve_workers(max_workers):
    if max_workers is not None:
        workers = int(max_workers)
    else:
        workers = int(os.environ.get(WORKERS_ENV_VAR, "1") or "1")
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    return workers


def _eval_block(gain_ur, gain_rb, config, member_arrays, slot0, params):
    """Evaluate one gain block; returns (users, outage, rts, collision, backoff)."""
    members, sizes = member_arrays
    if params is None:
        users, _, _, outage = kernels.evaluate_schedule_block(
            gain_ur,
            gain_rb,
            config.p_user,
            config.p_relay,
            config.decode_threshold,
            members,
            sizes,
            slot0,
        )
        return users, outage, None, None, None
    _, winner_user, y, elapsed, rts, collision = kernels.evaluate_protocol_block(
        gain_ur,
        gain_rb,
        config.p_user,
        config.p_relay,
        members,
        sizes,
        slot0,
        params.backoff_scale,
        params.backoff_eps,
        params.vulnerable_window,
    )
    outage = collision | (y < config.decode_threshold)
    return winner_user, outage, rts, collision, elapsed


def run_point(plan, snr_db, entry, record_schedule=False, max_workers=None):
    """Simulate one (SNR, policy) point; returns its MetricsAccumulator."""
    eta = 10.0 ** (float(snr_db) / 10.0)
    cfg = replace(plan.config, total_power=eta * plan.config.noise_power)
    repeats = entry.pattern_repeats
    member_arrays = [entry.build_pattern(cfg, rep).member_arrays() for rep in range(repeats)]
    params = plan.protocol_params(cfg) if plan.use_protocol_path else None
    key = _point_key(snr_db, entry, cfg)
    acc = MetricsAccumulator(cfg.num_users, record_schedule)

    if plan.fading == "gauss_markov":
        rho = plan.rho_value()
        procs = [
            FadingProcess(
                cfg,
                SeedSequence(entropy=plan.base_seed, spawn_key=key + (rep, 0)),
                mode="gauss_markov",
                rho=rho,
            )
            for rep in range(repeats)
        ]
        produced = [0] * repeats
        blocks = [0] * repeats
        total_target = plan.trials_per_point
        while True:
            alloc = _split_evenly(total_target, repeats)
            for rep in range(repeats):
                while produced[rep] < alloc[rep]:
                    n = min(plan.shard_slots, alloc[rep] - produced[rep])
                    gain_ur, gain_rb = procs[rep].draw_block(n)
                    acc.observe(
                        (rep, blocks[rep]),
                        *_eval_block(gain_ur, gain_rb, cfg, member_arrays[rep], produced[rep], params),
                    )
                    produced[rep] += n
                    blocks[rep] += 1
            if acc.outage_count >= plan.min_outage_events or total_target >= plan.max_trials:
                break
            total_target = min(total_target * 2, plan.max_trials)
        acc.capped = acc.outage_count < plan.min_outage_events
        return acc

    workers = _resolve_workers(max_workers)
    produced = [0] * repeats
    shard_counts = [0] * repeats
    total_target = plan.trials_per_point

    def work(task):
        rep, shard_idx, start, length = task
        proc = FadingProcess(
            cfg,
            SeedSequence(entropy=plan.base_seed, spawn_key=key + (rep, shard_idx)),
            mode="iid",
        )
        gain_ur, gain_rb = proc.draw_block(length)
        return _eval_block(gain_ur, gain_rb, cfg, member_arrays[rep], start, params)

    while True:
        tasks = []
        alloc = _split_evenly(total_target, repeats)
        for rep in range(repeats):
            while produced[rep] < alloc[rep]:
                n = min(plan.shard_slots, alloc[rep] - produced[rep])
                tasks.append((rep, shard_counts[rep], produced[rep], n))
                produced[rep] += n
                shard_counts[rep] += 1
        if workers > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(work, tasks))
        else:
            results = [work(t) for t in tasks]
        for task, res in zip(tasks, results):
            acc.observe((task[0], task[1]), *res)
        if acc.outage_count >= plan.min_outage_events or total_target >= plan.max_trials:
            break
        total_target = min(total_target * 2, plan.max_trials)
    acc.capped = acc.outage_count < plan.min_outage_events
    return acc


@dataclass(frozen=True)
class PointRow:
    """One sweep-table row (delay fields are NaN unless the schedule was recorded)."""

    snr_db: float
    policy: str
    outage: float
    ci_low: float
    ci_high: float
    fi_longrun: float
    delay_mean: float
    delay_var: float
    trials: int
    outage_events: int
    capped: bool


def summarize_point(acc, snr_db, label, slot_duration):
    lo, hi = acc.wilson_ci()
    delay_mean = delay_var = float("nan")
    if acc.record_schedule:
        try:
            pooled = delay_statistics(acc.delay_samples(), slot_duration).pooled
            delay_mean, delay_var = pooled.mean, pooled.var
        except ValueError:
            pass  # too few transmissions per user to form gaps
    return PointRow(
        snr_db=float(snr_db),
        policy=label,
        outage=acc.outage_probability,
        ci_low=lo,
        ci_high=hi,
        fi_longrun=acc.fi_longrun(),
        delay_mean=delay_mean,
        delay_var=delay_var,
        trials=acc.slot_count,
        outage_events=acc.outage_count,
        capped=acc.capped,
    )


def run_sweep(plan, record_schedule=True, max_workers=None):
    """Simulate every (SNR, policy) point; returns a list of PointRow."""
    rows = []
    for snr_db in plan.snr_db:
        for entry in plan.policies:
            acc = run_point(
                plan, snr_db, entry, record_schedule=record_schedule, max_workers=max_workers
            )
            rows.append(summarize_point(acc, snr_db, entry.label, plan.config.slot_duration))
    return rows


def analytic_outage(config, entry, eta):
    """Closed-form outage matching a policy entry (patterns averaged for relaxed)."""
    args = (config.mean_gain_ur, config.mean_gain_rb, config.alpha, config.snr_threshold)
    if entry.kind == "tdma":
        return outage_tdma(*args, eta)
    if entry.kind == "greedy":
        return outage_exact(*args, eta)
    vals = [
        outage_relaxed_tdma(entry.build_pattern(config, rep), *args, eta)
        for rep in range(entry.pattern_repeats)
    ]
    return sum(vals) / len(vals)


@dataclass(frozen=True)
class FairnessCurve:
    """Windowed-fairness summary for one policy under correlated fading."""

    policy: str
    window_units: tuple
    window_slots: tuple
    mean_fi: np.ndarray
    overall_fi: float
    delay: object  # DelayStatistics, or None when gaps were too sparse


def run_fairness_experiment(plan, max_workers=None):
    """Windowed Jain-index curves for every policy at plan.fairness_snr_db.

    Requires correlated (gauss_markov) fading: with fresh draws every slot
    the windowed index is flat in the window length and says nothing about
    short-term fairness.  Windows are given in normalized Doppler units of
    (1/slot_duration)/doppler_hz slots each.
    """
    if plan.fading != "gauss_markov":
        raise ValueError(
            "fairness experiments require fading='gauss_markov'; "
            "iid draws carry no slot-to-slot memory for windows to expose"
        )
    unit = doppler_unit_slots(plan.doppler_hz, plan.config.slot_duration)
    window_slots = [max(1, int(round(u * unit))) for u in plan.fairness_windows]
    if max(window_slots) > plan.fairness_slots:
        raise ValueError(
            f"largest window ({max(window_slots)} slots) exceeds fairness_slots "
            f"({plan.fairness_slots})"
        )
    sub_plan = replace(plan, trials_per_point=plan.fairness_slots, max_trials=plan.fairness_slots)
    curves = []
    for entry in plan.policies:
        acc = run_point(
            sub_plan,
            plan.fairness_snr_db,
            entry,
            record_schedule=True,
            max_workers=max_workers,
        )
        streams = acc.stream_sequences()
        mean_fi = np.empty(len(window_slots))
        for i, length in enumerate(window_slots):
            parts = [
                windowed_fi_series(seq, plan.config.num_users, length)[1]
                for seq in streams.values()
                if seq.size >= length
            ]
            values = np.concatenate(parts) if parts else np.empty(0)
            mean_fi[i] = values.mean() if values.size else float("nan")
        try:
            delay = delay_statistics(acc.delay_samples(), plan.config.slot_duration)
        except ValueError:
            delay = None
        curves.append(
            FairnessCurve(
                policy=entry.label,
                window_units=tuple(plan.fairness_windows),
                window_slots=tuple(window_slots),
                mean_fi=mean_fi,
                overall_fi=acc.fi_longrun(),
                delay=delay,
            )
        )
    return curves
