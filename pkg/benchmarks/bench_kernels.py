#!/usr/bin/env python3
"""Throughput comparison of the compiled and pure-numpy evaluation kernels.

Times evaluate_schedule_block and evaluate_protocol_block on identical
pre-drawn gain blocks for every available backend, reports slots/second and
the compiled-over-pure speedup, and cross-checks that the backends agree
bitwise on the full outputs (they must: all randomness is drawn upstream).

Usage:
    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --users 16 --relays 8 --group-size 4
    python3 benchmarks/bench_kernels.py --slots 2000000 --block 32768
"""

import argparse
import time

import numpy as np

from relaysched import kernels
from relaysched.model import FadingProcess, NetworkConfig
from relaysched.protocol import default_protocol_params
from relaysched.scheduling import make_grouping


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--users", type=int, default=8, help="number of users (default 8)")
    p.add_argument("--relays", type=int, default=5, help="number of relays (default 5)")
    p.add_argument(
        "--group-size", type=int, default=4, help="users per scheduling group (default 4)"
    )
    p.add_argument(
        "--slots", type=int, default=1_000_000, help="total slots to evaluate (default 1e6)"
    )
    p.add_argument(
        "--block",
        type=int,
        default=32_768,
        help="slots per kernel call, matching the simulator shard size (default 32768)",
    )
    p.add_argument("--repeats", type=int, default=3, help="timing repetitions (default 3)")
    p.add_argument("--seed", type=int, default=0, help="gain-draw seed (default 0)")
    return p.parse_args()


def draw_blocks(config, seed, total_slots, block_slots):
    """Pre-draw all gain blocks so timing measures kernels, not the RNG."""
    proc = FadingProcess(config, seed=seed)
    blocks = []
    produced = 0
    while produced < total_slots:
        n = min(block_slots, total_slots - produced)
        blocks.append((produced, proc.draw_block(n)))
        produced += n
    return blocks


def run_schedule(backend, blocks, config, members, sizes):
    outs = []
    for slot0, (gain_ur, gain_rb) in blocks:
        outs.append(
            backend.evaluate_schedule_block(
                gain_ur,
                gain_rb,
                config.p_user,
                config.p_relay,
                config.decode_threshold,
                members,
                sizes,
                slot0,
            )
        )
    return outs


def run_protocol(backend, blocks, config, members, sizes, params):
    outs = []
    for slot0, (gain_ur, gain_rb) in blocks:
        outs.append(
            backend.evaluate_protocol_block(
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
        )
    return outs


def time_runs(fn, repeats):
    """Best-of-N wall time and the last run's outputs."""
    best = float("inf")
    outs = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        outs = fn()
        best = min(best, time.perf_counter() - t0)
    return best, outs


def assert_identical(name, a, b):
    for block_a, block_b in zip(a, b):
        for col_a, col_b in zip(block_a, block_b):
            if not np.array_equal(np.asarray(col_a), np.asarray(col_b)):
                raise AssertionError(f"{name}: backends disagree on identical inputs")


def main():
    args = parse_args()
    config = NetworkConfig.symmetric(
        args.users, args.relays, total_power=10.0 ** (15.0 / 10.0)
    )
    pattern = make_grouping("fixed_order", args.group_size, config)
    members, sizes = pattern.member_arrays()
    params = default_protocol_params(config)

    backends = kernels.available_backends()
    print(
        f"config: {args.users} users, {args.relays} relays, groups of "
        f"{args.group_size}; {args.slots} slots in blocks of {args.block}; "
        f"best of {args.repeats} runs"
    )
    print(f"available backends: {', '.join(backends)} (active: {kernels.BACKEND})")
    print()

    blocks = draw_blocks(config, args.seed, args.slots, args.block)

    results = {}
    for kernel_name, runner in (
        ("evaluate_schedule_block", lambda be: run_schedule(be, blocks, config, members, sizes)),
        (
            "evaluate_protocol_block",
            lambda be: run_protocol(be, blocks, config, members, sizes, params),
        ),
    ):
        per_backend = {}
        for name in backends:
            backend = kernels.get_backend(name)
            elapsed, outs = time_runs(lambda be=backend: runner(be), args.repeats)
            per_backend[name] = (elapsed, outs)
            rate = args.slots / elapsed
            print(f"{kernel_name:26s} {name:9s} {elapsed:8.3f} s   {rate:12,.0f} slots/s")
        if "compiled" in per_backend and "python" in per_backend:
            assert_identical(
                kernel_name, per_backend["compiled"][1], per_backend["python"][1]
            )
            speedup = per_backend["python"][0] / per_backend["compiled"][0]
            print(f"{kernel_name:26s} speedup   {speedup:8.2f}x  (outputs bitwise identical)")
        results[kernel_name] = per_backend
        print()

    return results


if __name__ == "__main__":
    main()
