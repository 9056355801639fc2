# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled evaluation kernels.

Same contracts as relaysched.kernels.pure, evaluated in single tight passes
over the gain block.  Users are ranked by (bottleneck metric, first-hop
gain) compared lexicographically — saturated bottlenecks tie exactly across
users, and the first-hop key keeps those ties fair.  Comparison structure
(strict > keeping the first extremum) reproduces numpy's first-occurrence
argmax on exact double ties so results match the pure backend bitwise.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def evaluate_schedule_block(
    gain_ur, gain_rb, double p_user, double p_relay, double decode_threshold,
    members, sizes, long long slot0
):
    gain_ur = np.ascontiguousarray(gain_ur, dtype=np.float64)
    gain_rb = np.ascontiguousarray(gain_rb, dtype=np.float64)
    members = np.ascontiguousarray(members, dtype=np.int64)
    sizes = np.ascontiguousarray(sizes, dtype=np.int64)

    cdef double[:, :, ::1] gur = gain_ur
    cdef double[:, ::1] grb = gain_rb
    cdef cnp.int64_t[:, ::1] mem = members
    cdef cnp.int64_t[::1] siz = sizes

    cdef Py_ssize_t n = gur.shape[0]
    cdef Py_ssize_t num_relays = gur.shape[2]
    cdef Py_ssize_t num_groups = siz.shape[0]

    user_arr = np.empty(n, dtype=np.int64)
    relay_arr = np.empty(n, dtype=np.int64)
    metric_arr = np.empty(n, dtype=np.float64)
    outage_arr = np.empty(n, dtype=np.uint8)
    cdef cnp.int64_t[::1] user = user_arr
    cdef cnp.int64_t[::1] relay = relay_arr
    cdef double[::1] metric = metric_arr
    cdef cnp.uint8_t[::1] outage = outage_arr

    cdef Py_ssize_t t, g, j, r
    cdef cnp.int64_t u, best_u, best_r, cand_r
    cdef double best_w, best_g, cand_w, cand_g, m, m2

    with nogil:
        for t in range(n):
            g = <Py_ssize_t>((slot0 + t) % num_groups)
            best_w = -1.0
            best_g = -1.0
            best_u = -1
            best_r = -1
            for j in range(siz[g]):
                u = mem[g, j]
                cand_w = -1.0
                cand_r = -1
                for r in range(num_relays):
                    m = p_user * gur[t, u, r]
                    m2 = p_relay * grb[t, r]
                    if m2 < m:
                        m = m2
                    if m > cand_w:
                        cand_w = m
                        cand_r = r
                cand_g = gur[t, u, cand_r]
                if cand_w > best_w or (cand_w == best_w and cand_g > best_g):
                    best_w = cand_w
                    best_g = cand_g
                    best_u = u
                    best_r = cand_r
            user[t] = best_u
            relay[t] = best_r
            metric[t] = best_w
            outage[t] = 1 if best_w < decode_threshold else 0

    return user_arr, relay_arr, metric_arr, outage_arr.view(np.bool_)


def evaluate_protocol_block(
    gain_ur, gain_rb, double p_user, double p_relay,
    members, sizes, long long slot0,
    double backoff_scale, double backoff_eps, double vulnerable_window
):
    gain_ur = np.ascontiguousarray(gain_ur, dtype=np.float64)
    gain_rb = np.ascontiguousarray(gain_rb, dtype=np.float64)
    members = np.ascontiguousarray(members, dtype=np.int64)
    sizes = np.ascontiguousarray(sizes, dtype=np.int64)

    cdef double[:, :, ::1] gur = gain_ur
    cdef double[:, ::1] grb = gain_rb
    cdef cnp.int64_t[:, ::1] mem = members
    cdef cnp.int64_t[::1] siz = sizes

    cdef Py_ssize_t n = gur.shape[0]
    cdef Py_ssize_t num_relays = gur.shape[2]
    cdef Py_ssize_t num_groups = siz.shape[0]

    winner_relay_arr = np.empty(n, dtype=np.int64)
    winner_user_arr = np.empty(n, dtype=np.int64)
    metric_arr = np.empty(n, dtype=np.float64)
    elapsed_arr = np.empty(n, dtype=np.float64)
    rts_arr = np.empty(n, dtype=np.int64)
    collision_arr = np.empty(n, dtype=np.uint8)
    cdef cnp.int64_t[::1] winner_relay = winner_relay_arr
    cdef cnp.int64_t[::1] winner_user = winner_user_arr
    cdef double[::1] metric = metric_arr
    cdef double[::1] elapsed = elapsed_arr
    cdef cnp.int64_t[::1] rts = rts_arr
    cdef cnp.uint8_t[::1] collision = collision_arr

    # scratch: per-relay local metric, chosen user, deadline
    y_buf_arr = np.empty(num_relays, dtype=np.float64)
    dl_buf_arr = np.empty(num_relays, dtype=np.float64)
    cu_buf_arr = np.empty(num_relays, dtype=np.int64)
    cdef double[::1] y_buf = y_buf_arr
    cdef double[::1] dl_buf = dl_buf_arr
    cdef cnp.int64_t[::1] cu_buf = cu_buf_arr

    cdef Py_ssize_t t, g, j, r, win
    cdef cnp.int64_t u, local_u, count
    cdef double local_y, local_g, hop, m, m2, dmin, limit

    with nogil:
        for t in range(n):
            g = <Py_ssize_t>((slot0 + t) % num_groups)
            win = 0
            dmin = 0.0
            for r in range(num_relays):
                local_y = -1.0
                local_g = -1.0
                local_u = -1
                for j in range(siz[g]):
                    u = mem[g, j]
                    hop = gur[t, u, r]
                    m = p_user * hop
                    m2 = p_relay * grb[t, r]
                    if m2 < m:
                        m = m2
                    if m > local_y or (m == local_y and hop > local_g):
                        local_y = m
                        local_g = hop
                        local_u = u
                y_buf[r] = local_y
                cu_buf[r] = local_u
                dl_buf[r] = backoff_scale / (local_y + backoff_eps)
                if r == 0 or dl_buf[r] < dmin:
                    dmin = dl_buf[r]
                    win = r
            count = 0
            limit = dmin + vulnerable_window
            for r in range(num_relays):
                if dl_buf[r] <= limit:
                    count += 1
            winner_relay[t] = win
            winner_user[t] = cu_buf[win]
            metric[t] = y_buf[win]
            elapsed[t] = dmin
            rts[t] = count
            collision[t] = 1 if count >= 2 else 0

    return (
        winner_relay_arr,
        winner_user_arr,
        metric_arr,
        elapsed_arr,
        rts_arr,
        collision_arr.view(np.bool_),
    )
