#!/usr/bin/env python3
"""Benchmark the JIT kernels against the pure-numpy/python fallbacks.

Generates a seeded synthetic stream in memory, then times quote replay
and momentum accumulation through both backends.  The JIT path is run
once untimed first so compilation (cached across runs) is not billed to
the measurement.

    python3 benchmarks/bench_kernels.py --events 500000 --repeat 3
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lobmomentum.arrays import EventBatch
from lobmomentum.events import AreaConfig, Quotes
from lobmomentum.kernels import HAVE_NUMBA, accumulate_momentum, replay_quotes
from lobmomentum.pipeline import bucket_indices, build_refs
from lobmomentum.synth import BackgroundParams, gen_background


def make_batch(n_events: int, seed: int) -> EventBatch:
    # rate 50/s, so duration scales with the requested size
    params = BackgroundParams(
        seed=seed,
        duration_us=int(n_events / 50 * 1_000_000),
        event_rate=50.0,
        base_quotes=Quotes(174, 175),
    )
    events = []
    for e in gen_background(params):
        events.append(e)
        if len(events) >= n_events:
            break
    return EventBatch.from_events(events)


def run_once(batch: EventBatch, cfg: AreaConfig, use_numba: bool):
    bi, _, nb = bucket_indices(batch.ts, cfg.dt)
    t0 = time.perf_counter()
    end_bid, end_ask, cap_bucket, cap_bid, cap_ask, _ = replay_quotes(
        bi, batch.action, batch.side, batch.kind, batch.price, batch.size,
        batch.oid_index, batch.n_orders, nb, use_numba=use_numba)
    t1 = time.perf_counter()
    ref_bid, ref_ask, ref_valid, _ = build_refs(
        nb, end_bid, end_ask, int(cap_bucket), int(cap_bid), int(cap_ask), None)
    t2 = time.perf_counter()
    m, _ = accumulate_momentum(bi, batch.action, batch.side, batch.kind,
                               batch.price, batch.size, ref_bid, ref_ask,
                               ref_valid, cfg.alpha, use_numba=use_numba)
    t3 = time.perf_counter()
    return t1 - t0, t3 - t2, m


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=500_000)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cfg = AreaConfig()
    print(f"building {args.events} synthetic events (seed {args.seed})...")
    t0 = time.perf_counter()
    batch = make_batch(args.events, args.seed)
    print(f"  generated {len(batch)} events in {time.perf_counter() - t0:.2f}s")

    backends = [("numpy/python fallback", False)]
    if HAVE_NUMBA:
        run_once(batch, cfg, True)          # warm the JIT cache, untimed
        backends.append(("numba jit", True))
    else:
        print("numba not importable; timing the fallback only")

    results = {}
    checks = {}
    for name, use in backends:
        replay_best = mom_best = float("inf")
        for _ in range(args.repeat):
            tr, tm, m = run_once(batch, cfg, use)
            replay_best = min(replay_best, tr)
            mom_best = min(mom_best, tm)
        results[name] = (replay_best, mom_best)
        checks[name] = m

    if len(checks) == 2 and not np.array_equal(*checks.values()):
        raise AssertionError("backends disagree on momentum output")

    header = f"{'backend':<24} {'replay':>10} {'momentum':>10} {'total':>10}"
    print()
    print(header)
    print("-" * len(header))
    base = None
    for name, (tr, tm) in results.items():
        total = tr + tm
        line = f"{name:<24} {tr * 1e3:>8.1f}ms {tm * 1e3:>8.1f}ms {total * 1e3:>8.1f}ms"
        if base is None:
            base = total
        else:
            line += f"  ({base / total:.1f}x)"
        print(line)


if __name__ == "__main__":
    main()
