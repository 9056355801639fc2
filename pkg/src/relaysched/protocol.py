"""Distributed relay-contention realization of the scheduling rule.

Each relay can time-share observe only its own links: the gains from the k
users of the slot's group and its own link to the base station.  It locally
picks the group member with the best bottleneck metric Y_r and arms a
countdown timer backoff_scale / (Y_r + backoff_eps) — a strictly decreasing
map, so the relay holding the globally best metric fires first and its RTS
suppresses everyone else.  The winning (user, relay) pair therefore equals
the centralized group-restricted greedy decision, slot for slot, whenever
timers are distinguishable.

Timers closer than vulnerable_window cannot hear each other in time: all of
them transmit an RTS and the slot is lost to a collision (counted as an
outage, no retransmission).  The default window of 0 models ideal timing and
makes the distributed/centralized equivalence exact.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

# Backoff scale: ~1 ms of countdown per unit of decode threshold, so typical
# metrics resolve on a sub-slot time scale.  The epsilon only bounds the
# timer at metric 0 and is far below any metric that matters.
BACKOFF_SCALE_PER_THRESHOLD = 1e-3
BACKOFF_EPS_PER_THRESHOLD = 1e-9


@dataclass(frozen=True)
class ProtocolParams:
    backoff_scale: float
    backoff_eps: float
    vulnerable_window: float = 0.0

    def __post_init__(self):
        if self.backoff_scale <= 0:
            raise ValueError(f"backoff_scale must be > 0, got {self.backoff_scale}")
        if self.backoff_eps <= 0:
            raise ValueError(f"backoff_eps must be > 0, got {self.backoff_eps}")
        if self.vulnerable_window < 0:
            raise ValueError(
                f"vulnerable_window must be >= 0, got {self.vulnerable_window}"
            )


def default_protocol_params(config, vulnerable_window=0.0):
    thr = config.decode_threshold
    return ProtocolParams(
        backoff_scale=BACKOFF_SCALE_PER_THRESHOLD * thr,
        backoff_eps=BACKOFF_EPS_PER_THRESHOLD * thr,
        vulnerable_window=vulnerable_window,
    )


@dataclass
class RelayNodeState:
    """One relay's view of one contention slot."""

    relay_index: int
    chosen_user: int
    metric_y: float
    backoff_deadline: float
    status: str = "counting"  # counting | transmitting | suppressed
    local_gain_ur: np.ndarray = None  # this relay's gains from the group, group order
    local_gain_rb: float = 0.0


@dataclass(frozen=True)
class ProtocolTrace:
    """Per-slot contention outcome."""

    slot_index: int
    winner_relay: int
    winner_user: int
    metric_y: float
    elapsed_backoff: float
    rts_count: int
    collision: bool


def relay_local_select(relay_index, group, realization, config):
    """The user this relay would serve: best bottleneck among the group.

    Returns (user, metric_y).  Every member whose first hop clears this
    relay's second-hop cap ties at the cap exactly, so ties are routine;
    they break toward the larger first-hop gain (then the lowest user index,
    groups being sorted), matching the centralized schedulers so the
    distributed winner reproduces the centralized one slot for slot.
    """
    members = np.asarray(group)
    hop = realization.gain_ur[members, relay_index]
    bottleneck = np.minimum(
        config.p_user * hop, config.p_relay * realization.gain_rb[relay_index]
    )
    top = bottleneck.max()
    j = int(np.argmax(np.where(bottleneck == top, hop, -np.inf)))
    return int(members[j]), float(top)


def backoff_map(metric_y, backoff_scale, backoff_eps):
    """Map a contention metric to a countdown, backoff_scale / (Y + eps).

    Strictly decreasing in Y, so timer order is metric order; the epsilon
    keeps the countdown finite (and maximal) at Y = 0.
    """
    if backoff_scale <= 0 or backoff_eps <= 0:
        raise ValueError("backoff_scale and backoff_eps must be > 0")
    y = np.asarray(metric_y, dtype=np.float64)
    if np.any(y < 0):
        raise ValueError("contention metrics must be >= 0")
    out = backoff_scale / (y + backoff_eps)
    return float(out) if out.ndim == 0 else out


def make_relay_states(group, realization, config, params):
    """Initial per-relay contention states for one slot."""
    members = list(group)
    states = []
    for r in range(config.num_relays):
        user, y = relay_local_select(r, members, realization, config)
        states.append(
            RelayNodeState(
                relay_index=r,
                chosen_user=user,
                metric_y=y,
                backoff_deadline=backoff_map(y, params.backoff_scale, params.backoff_eps),
                local_gain_ur=realization.gain_ur[members, r].copy(),
                local_gain_rb=float(realization.gain_rb[r]),
            )
        )
    return states


def run_contention(slot_index, states, params):
    """Resolve one slot's countdown among relay states.

    The earliest deadline wins (ties toward the lowest relay index) and its
    RTS suppresses relays that would have fired later; relays within
    vulnerable_window of the winner fire anyway, so rts_count > 1 marks a
    collision and a wasted slot.  States are updated in place to
    transmitting/suppressed.
    """
    if not states:
        raise ValueError("contention needs at least one relay state")
    deadlines = np.array([s.backoff_deadline for s in states])
    win = int(np.argmin(deadlines))
    dmin = float(deadlines[win])
    firing = deadlines <= dmin + params.vulnerable_window
    rts_count = int(np.count_nonzero(firing))
    for s, fired in zip(states, firing):
        s.status = "suppressed" if not fired else "transmitting"
    # collided relays all transmitted an RTS; the slot is still wasted
    return ProtocolTrace(
        slot_index=slot_index,
        winner_relay=states[win].relay_index,
        winner_user=states[win].chosen_user,
        metric_y=states[win].metric_y,
        elapsed_backoff=dmin,
        rts_count=rts_count,
        collision=rts_count >= 2,
    )


@dataclass(frozen=True)
class ProtocolRun:
    """Batch contention results over consecutive slots (arrays of length n)."""

    slot0: int
    winner_relay: np.ndarray
    winner_user: np.ndarray
    metric_y: np.ndarray
    elapsed_backoff: np.ndarray
    rts_count: np.ndarray
    collision: np.ndarray
    outage: np.ndarray  # collision or metric below the decode threshold

    @property
    def num_slots(self):
        return self.winner_relay.size


def simulate_protocol(process, pattern, params, num_slots, slot0=0, block_slots=32768):
    """Run distributed contention over num_slots consecutive slots.

    Draws gains from `process` (whose config supplies the power split and
    decode threshold) and evaluates contention through the active kernel
    backend.  Returns a ProtocolRun.
    """
    config = process.config
    members, sizes = pattern.member_arrays()
    chunks = []
    done = 0
    while done < num_slots:
        n = min(block_slots, num_slots - done)
        gain_ur, gain_rb = process.draw_block(n)
        chunks.append(
            kernels.evaluate_protocol_block(
                gain_ur,
                gain_rb,
                config.p_user,
                config.p_relay,
                members,
                sizes,
                slot0 + done,
                params.backoff_scale,
                params.backoff_eps,
                params.vulnerable_window,
            )
        )
        done += n
    relay, user, y, elapsed, rts, coll = (
        np.concatenate([c[i] for c in chunks]) for i in range(6)
    )
    return ProtocolRun(
        slot0=slot0,
        winner_relay=relay,
        winner_user=user,
        metric_y=y,
        elapsed_backoff=elapsed,
        rts_count=rts,
        collision=coll,
        outage=coll | (y < config.decode_threshold),
    )


@dataclass(frozen=True)
class OverheadReport:
    slots: int
    rts_per_slot: float
    collision_rate: float
    mean_backoff: float  # seconds spent counting down per slot


def overhead_report(run_or_traces):
    """Aggregate signalling overhead from a ProtocolRun or ProtocolTrace list."""
    if isinstance(run_or_traces, ProtocolRun):
        rts = run_or_traces.rts_count
        coll = run_or_traces.collision
        elapsed = run_or_traces.elapsed_backoff
    else:
        traces = list(run_or_traces)
        rts = np.array([t.rts_count for t in traces])
        coll = np.array([t.collision for t in traces])
        elapsed = np.array([t.elapsed_backoff for t in traces])
    if rts.size == 0:
        raise ValueError("overhead report needs at least one slot")
    return OverheadReport(
        slots=int(rts.size),
        rts_per_slot=float(rts.mean()),
        collision_rate=float(np.count_nonzero(coll) / coll.size),
        mean_backoff=float(elapsed.mean()),
    )
