"""Uplink scheduling policies and user grouping.

Three policies share one decision metric (the end-to-end bottleneck power of
a user through its best relay):

- fixed TDMA: slot t belongs to user t mod M, no competition;
- greedy: every slot goes to the instantaneously best user;
- k-user relaxed TDMA: users are partitioned into groups of k, slot t is
  contested greedily within group t mod (M/k).

k = 1 degenerates to fixed TDMA and k = M to greedy, which the tests pin
down slot-for-slot.  These per-slot functions are the readable reference
path; bulk simulation goes through relaysched.kernels with identical
semantics.
"""

from dataclasses import dataclass

import numpy as np

from .selection import is_outage, select_relay_min_max

GROUPING_STRATEGIES = ("fixed_order", "random", "similar_gain", "dissimilar_gain")


@dataclass(frozen=True)
class SlotOutcome:
    """Result of scheduling one slot."""

    slot_index: int
    scheduled_user: int
    selected_relay: int
    metric_w: float
    outage: bool


@dataclass(frozen=True)
class GroupingPattern:
    """A partition of the user set into scheduling groups.

    groups are tuples of user indices, each sorted ascending; slot t is owned
    by groups[t mod num_groups].  group_size records the requested k (the
    last group of a non-divisible fixed_order/random partition may be
    smaller).
    """

    group_size: int
    groups: tuple
    strategy: str = "fixed_order"

    def __post_init__(self):
        flat = [u for g in self.groups for u in g]
        if not self.groups or any(len(g) == 0 for g in self.groups):
            raise ValueError("groups must be non-empty")
        if sorted(flat) != list(range(len(flat))):
            raise ValueError("groups must partition the user indices exactly once each")
        if any(tuple(sorted(g)) != tuple(g) for g in self.groups):
            raise ValueError("each group must be sorted ascending")
        if max(len(g) for g in self.groups) > self.group_size:
            raise ValueError("no group may exceed the requested group size")

    @property
    def num_users(self):
        return sum(len(g) for g in self.groups)

    @property
    def num_groups(self):
        return len(self.groups)

    def group_of_slot(self, slot_index):
        return self.groups[slot_index % self.num_groups]

    def member_arrays(self):
        """(members, sizes) int64 arrays for the kernels; members padded with -1."""
        k_max = max(len(g) for g in self.groups)
        members = np.full((self.num_groups, k_max), -1, dtype=np.int64)
        sizes = np.empty(self.num_groups, dtype=np.int64)
        for i, g in enumerate(self.groups):
            members[i, : len(g)] = g
            sizes[i] = len(g)
        return members, sizes


def make_grouping(strategy, k, config, seed=None):
    """Partition config.num_users users into groups of k.

    Strategies:
    - "fixed_order": consecutive index blocks [0..k), [k..2k), ...
    - "random": a seeded permutation chopped into blocks
    - "similar_gain": users sorted by mean first-hop gain (row mean of
      mean_gain_ur), adjacent users grouped together
    - "dissimilar_gain": same sort, dealt serpentine so each group mixes
      strong and weak users (for k = 2: best with worst)

    fixed_order and random tolerate M % k != 0 (last group smaller); the
    gain-driven strategies require divisibility since their pairing logic is
    positional.
    """
    M = config.num_users
    if not 1 <= k <= M:
        raise ValueError(f"group size k must lie in [1, {M}], got {k}")
    if strategy not in GROUPING_STRATEGIES:
        raise ValueError(f"unknown grouping strategy {strategy!r}; choose from {GROUPING_STRATEGIES}")
    if strategy in ("similar_gain", "dissimilar_gain") and M % k != 0:
        raise ValueError(
            f"strategy {strategy!r} requires the group size to divide the user count "
            f"({M} % {k} != 0)"
        )

    if strategy == "fixed_order":
        order = np.arange(M)
    elif strategy == "random":
        order = np.random.default_rng(seed).permutation(M)
    else:
        # mean first-hop gain as the similarity scalar; stable sort keeps ties
        # deterministic
        row_mean = config.mean_gain_ur.mean(axis=1)
        order = np.argsort(row_mean, kind="stable")

    if strategy == "dissimilar_gain":
        num_groups = M // k
        buckets = [[] for _ in range(num_groups)]
        for i, u in enumerate(order):
            row, col = divmod(i, num_groups)
            g = col if row % 2 == 0 else num_groups - 1 - col
            buckets[g].append(int(u))
        groups = buckets
    else:
        groups = [order[i : i + k].tolist() for i in range(0, M, k)]

    return GroupingPattern(
        group_size=k,
        groups=tuple(tuple(sorted(g)) for g in groups),
        strategy=strategy,
    )


def _bottleneck_matrix(realization, config):
    return np.minimum(
        config.p_user * realization.gain_ur,
        config.p_relay * realization.gain_rb[None, :],
    )


def _pick_contender(bottleneck, gain_ur):
    """Winner row of a (users, relays) bottleneck block, with fair ties.

    The bottleneck of every user whose first hop clears a relay's shared
    second-hop cap saturates at that same cap, so exact metric ties across
    users are routine events, not numerical accidents.  Deciding them by row
    order would hand statistically identical users systematically different
    airtime; instead the tied users are ranked by their first-hop gain at
    their selected relay, which is continuous and symmetric across users.
    Row order only decides exact double ties (degenerate hand-built inputs).

    Returns (row, relay, metric).
    """
    per_user = bottleneck.max(axis=1)
    best_relay = bottleneck.argmax(axis=1)
    hop = gain_ur[np.arange(gain_ur.shape[0]), best_relay]
    w = per_user.max()
    j = int(np.argmax(np.where(per_user == w, hop, -np.inf)))
    return j, int(best_relay[j]), float(w)


def schedule_fixed_tdma(slot_index, realization, config):
    """Round-robin: slot t is user t mod M's turn, competition-free."""
    user = slot_index % config.num_users
    sel = select_relay_min_max(user, realization, config)
    return SlotOutcome(
        slot_index=slot_index,
        scheduled_user=int(user),
        selected_relay=sel.relay_index,
        metric_w=sel.metric,
        outage=is_outage(sel, config),
    )


def schedule_greedy(realization, config, slot_index=0):
    """Schedule the user with the best end-to-end metric this slot.

    Metric ties (common: saturated second-hop caps are shared between users)
    break toward the larger first-hop gain, then the lowest user index; see
    _pick_contender.
    """
    bottleneck = _bottleneck_matrix(realization, config)
    user, relay, w = _pick_contender(bottleneck, realization.gain_ur)
    return SlotOutcome(
        slot_index=slot_index,
        scheduled_user=user,
        selected_relay=relay,
        metric_w=w,
        outage=w < config.decode_threshold,
    )


def schedule_relaxed_tdma(slot_index, pattern, realization, config):
    """Greedy competition restricted to the group owning this slot."""
    if pattern.num_users != config.num_users:
        raise ValueError("grouping pattern does not match the network's user count")
    group = np.asarray(pattern.group_of_slot(slot_index))
    bottleneck = _bottleneck_matrix(realization, config)[group]
    j, relay, w = _pick_contender(bottleneck, realization.gain_ur[group])
    return SlotOutcome(
        slot_index=slot_index,
        scheduled_user=int(group[j]),
        selected_relay=relay,
        metric_w=w,
        outage=w < config.decode_threshold,
    )
