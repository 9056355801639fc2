"""Relay selection rules for a single scheduled user.

The end-to-end decision metric of user u through relay r is the bottleneck
received power min(p_user * gain_ur, p_relay * gain_rb): the two-hop link
decodes iff that bottleneck clears the threshold tau * N0.  Two selectors are
provided; they disagree on the chosen relay in general but provably mark the
same slots as outages, which the tests exercise.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of relay selection for one user in one slot.

    decoding_set holds the relays whose first hop decoded the user
    (p_user * gain_ur >= tau * N0).
    """

    relay_index: int
    metric: float
    decoding_set: frozenset


def decoding_set(user, realization, config):
    """Relays that successfully decode `user` on the first hop."""
    ok = config.p_user * realization.gain_ur[user] >= config.decode_threshold
    return frozenset(np.flatnonzero(ok).tolist())


def select_relay_min_max(user, realization, config):
    """Pick the relay maximizing the bottleneck of the two hop powers.

    Returns a SelectionResult whose metric is the end-to-end decision
    parameter W = max_r min(p_user * gain_ur, p_relay * gain_rb); ties break
    toward the lowest relay index.  A relay is always returned: whether the
    slot is an outage is a separate question (see is_outage).
    """
    bottleneck = np.minimum(
        config.p_user * realization.gain_ur[user],
        config.p_relay * realization.gain_rb,
    )
    r = int(np.argmax(bottleneck))
    return SelectionResult(
        relay_index=r,
        metric=float(bottleneck[r]),
        decoding_set=decoding_set(user, realization, config),
    )


def select_relay_decoding_set(user, realization, config):
    """Pick the strongest second hop among relays that decoded the first.

    Returns None when no relay decoded the user (empty decoding set); the
    slot is then necessarily an outage.  Otherwise the metric is the received
    power p_relay * gain_rb at the chosen relay, ties toward the lowest
    index.  Chooses a different relay than select_relay_min_max in general,
    but flags exactly the same outage events.
    """
    dset = decoding_set(user, realization, config)
    if not dset:
        return None
    candidates = sorted(dset)
    rb = realization.gain_rb[candidates]
    r = candidates[int(np.argmax(rb))]
    return SelectionResult(
        relay_index=int(r),
        metric=float(config.p_relay * realization.gain_rb[r]),
        decoding_set=dset,
    )


def is_outage(selection, config):
    """True when the slot fails end-to-end.

    Works for either selector: a missing selection (empty decoding set)
    is an outage, otherwise the selection metric is compared strictly
    against tau * N0 — meeting the threshold exactly counts as success.
    """
    if selection is None:
        return True
    return selection.metric < config.decode_threshold
