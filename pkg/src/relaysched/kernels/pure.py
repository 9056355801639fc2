"""Pure-numpy evaluation kernels (fallback backend).

Both kernels consume a pre-drawn block of channel gains and a group
partition and emit per-slot decisions.  Groups own slots round-robin: slot t
(global index slot0 + t) belongs to group (slot0 + t) mod G.  `members` is a
(G, k_max) int64 array padded with -1, `sizes` gives each group's true
length, and member lists are sorted ascending.

Winner selection ranks users by the pair (bottleneck metric, first-hop
gain), compared lexicographically.  The second key matters: bottlenecks
saturate at a relay's second-hop cap, which is shared by every user the
relay decodes, so exact metric ties across users are routine; breaking them
by first-occurrence index would systematically favor low-numbered users,
while the first-hop gain is continuous and symmetric across them.  Exact
double ties (degenerate hand-built inputs) fall back to the lowest index.

The compiled backend mirrors these semantics operation-for-operation; the
two must agree bitwise on identical inputs, which the test suite asserts.
"""

import numpy as np


def _normalize(gain_ur, gain_rb, members, sizes):
    gain_ur = np.ascontiguousarray(gain_ur, dtype=np.float64)
    gain_rb = np.ascontiguousarray(gain_rb, dtype=np.float64)
    members = np.ascontiguousarray(members, dtype=np.int64)
    sizes = np.ascontiguousarray(sizes, dtype=np.int64)
    return gain_ur, gain_rb, members, sizes


def evaluate_schedule_block(
    gain_ur, gain_rb, p_user, p_relay, decode_threshold, members, sizes, slot0
):
    """Evaluate scheduling over a block of slots.

    For each slot: among the owning group's members, schedule the user with
    the best min(p_user * gain_ur, p_relay * gain_rb) over relays — metric
    ties broken by the larger first-hop gain at the member's selected relay —
    record that user's best relay and metric W, and flag an outage when W
    falls strictly below decode_threshold.

    Returns (scheduled_user, selected_relay, metric_w, outage) arrays of
    length n.
    """
    gain_ur, gain_rb, members, sizes = _normalize(gain_ur, gain_rb, members, sizes)
    n = gain_ur.shape[0]
    link = np.minimum(p_user * gain_ur, p_relay * gain_rb[:, None, :])
    best_w = link.max(axis=2)
    best_r = link.argmax(axis=2)
    first_hop = np.take_along_axis(gain_ur, best_r[:, :, None], axis=2)[:, :, 0]

    num_groups = sizes.shape[0]
    user = np.empty(n, dtype=np.int64)
    relay = np.empty(n, dtype=np.int64)
    metric = np.empty(n, dtype=np.float64)
    group_of = (slot0 + np.arange(n, dtype=np.int64)) % num_groups
    for g in range(num_groups):
        rows = np.flatnonzero(group_of == g)
        if rows.size == 0:
            continue
        mem = members[g, : sizes[g]]
        sub = best_w[rows[:, None], mem[None, :]]
        top = sub.max(axis=1)
        hop = first_hop[rows[:, None], mem[None, :]]
        j = np.argmax(np.where(sub == top[:, None], hop, -np.inf), axis=1)
        metric[rows] = top
        chosen = mem[j]
        user[rows] = chosen
        relay[rows] = best_r[rows, chosen]
    outage = metric < decode_threshold
    return user, relay, metric, outage


def evaluate_protocol_block(
    gain_ur,
    gain_rb,
    p_user,
    p_relay,
    members,
    sizes,
    slot0,
    backoff_scale,
    backoff_eps,
    vulnerable_window,
):
    """Evaluate distributed relay contention over a block of slots.

    Each relay locally picks the best group member by the bottleneck metric
    (ties to the larger first-hop gain at this relay) and arms a timer
    backoff_scale / (Y + backoff_eps); the relay whose timer expires first
    wins the slot.  Timers landing within vulnerable_window of the minimum
    all transmit an RTS, so rts >= 2 marks a collision.

    Returns (winner_relay, winner_user, metric_y, elapsed_backoff, rts,
    collision) arrays of length n.
    """
    gain_ur, gain_rb, members, sizes = _normalize(gain_ur, gain_rb, members, sizes)
    n = gain_ur.shape[0]
    link = np.minimum(p_user * gain_ur, p_relay * gain_rb[:, None, :])

    num_groups = sizes.shape[0]
    winner_relay = np.empty(n, dtype=np.int64)
    winner_user = np.empty(n, dtype=np.int64)
    metric = np.empty(n, dtype=np.float64)
    elapsed = np.empty(n, dtype=np.float64)
    rts = np.empty(n, dtype=np.int64)
    group_of = (slot0 + np.arange(n, dtype=np.int64)) % num_groups
    for g in range(num_groups):
        rows = np.flatnonzero(group_of == g)
        if rows.size == 0:
            continue
        mem = members[g, : sizes[g]]
        sub = link[rows[:, None], mem[None, :], :]  # (rows, k, N)
        y = sub.max(axis=1)  # best local metric per relay
        hop = gain_ur[rows[:, None], mem[None, :], :]
        j = np.argmax(np.where(sub == y[:, None, :], hop, -np.inf), axis=1)
        local_user = mem[j]
        deadlines = backoff_scale / (y + backoff_eps)
        win = np.argmin(deadlines, axis=1)
        pick = np.arange(rows.size)
        dmin = deadlines[pick, win]
        winner_relay[rows] = win
        winner_user[rows] = local_user[pick, win]
        metric[rows] = y[pick, win]
        elapsed[rows] = dmin
        rts[rows] = np.sum(deadlines <= dmin[:, None] + vulnerable_window, axis=1)
    collision = rts >= 2
    return winner_relay, winner_user, metric, elapsed, rts, collision
