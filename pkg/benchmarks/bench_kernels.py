#!/usr/bin/env python3
"""Benchmark the compiled session kernel against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [n_frames]

Runs the unicast data phase over identical pre-drawn randomness with both
backends, checks the outputs agree, and reports throughput. Also times a
metric-only session sweep end to end through netsim with whichever backend
is active (set ARQSEC_PURE=1 to force the fallback there).
"""

import sys
import time

import numpy as np

from arqsec import netsim
from arqsec._kernels import BACKEND, reference

try:
    from arqsec._kernels import _fast
except ImportError:
    _fast = None


def bench_kernel(n_frames: int) -> None:
    rng = np.random.default_rng(1)
    width = 24
    vh_raw = rng.integers(0, (1 << width) - 1, n_frames, dtype=np.uint64)
    bob_drop = (rng.random(n_frames) < 0.01).astype(np.uint8)
    ack_drop = (rng.random(n_frames) < 0.01).astype(np.uint8)
    eve_drop = (rng.random(n_frames) < 0.005).astype(np.uint8)
    ones = np.ones(n_frames, dtype=np.uint8)
    args = (7, width, vh_raw, bob_drop, ack_drop, eve_drop, ones, True)

    t0 = time.perf_counter()
    ref_out = reference.unicast_data_phase(*args)
    t_ref = time.perf_counter() - t0
    print(f"pure python : {n_frames / t_ref / 1e6:8.2f} Mframes/s  ({t_ref:.3f} s)")

    if _fast is None:
        print("compiled    : not built")
        return
    t0 = time.perf_counter()
    fast_out = _fast.unicast_data_phase(*args)
    t_fast = time.perf_counter() - t0
    print(f"compiled    : {n_frames / t_fast / 1e6:8.2f} Mframes/s  ({t_fast:.3f} s)")
    print(f"speedup     : {t_ref / t_fast:8.1f}x")
    assert ref_out == fast_out, "backends disagree"
    print("outputs     : identical")


def bench_sessions() -> None:
    links = netsim.bernoulli_links(0.005, 0.009, 0.004, 0.004)
    cfg = netsim.SessionConfig(links=links, n_init=100, n_data=10_000)
    t0 = time.perf_counter()
    netsim.replay_experiment(cfg, 20, master_seed=42)
    dt = time.perf_counter() - t0
    print(f"20 x 10k-frame sessions via netsim [{BACKEND}]: {dt:.2f} s")


if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2_000_000
    print(f"active backend: {BACKEND}")
    bench_kernel(n)
    bench_sessions()
