#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the hot paths on a demo model of the requested size and prints a
table of per-call medians plus speedups. Both backends are imported
directly, so the SMOLT_NUMBA env flag is irrelevant here; numba JIT
compilation happens during an untimed warmup call.

    python3 benchmarks/bench_kernels.py --size medium --repeat 30
"""

import argparse
import statistics
import time

import numpy as np

from smolt import kernels_numpy
from smolt.decisions import Policy, make_projection_noise, project
from smolt.model import build_model
from smolt.simulate import make_demo

try:
    from smolt import kernels_numba
except ImportError:
    kernels_numba = None


def _time(fn, repeat):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return statistics.median(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", choices=["small", "medium"], default="medium")
    ap.add_argument("--repeat", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    dataset, _ = make_demo(args.size, seed=args.seed)
    model = build_model(dataset)
    lay = model.layout
    rng = np.random.default_rng(args.seed)
    x = model.initial_point(rng=rng, jitter=0.2)
    draws = np.stack([model.initial_point(rng=rng, jitter=0.2)
                      for _ in range(200)])
    state = model.projection_state(draws)
    nf = len(dataset.fishery_ids)
    policy = Policy("bench", multiplier=np.full(nf, 0.8))
    noise = make_projection_noise(state, horizon=10, seed=1)

    backends = [("numpy", kernels_numpy)]
    if kernels_numba is not None:
        backends.append(("numba", kernels_numba))

    cases = []
    for name, K in backends:
        unp = K.unpack_core(x, lay.dims, lay.offsets)
        (alpha, beta, q, L, m0, mad, sig_r, sig_n, sig_s, s74,
         r_seed, n_init, z_r, z_n, z_s) = unp
        Ff, Ftot = K.fishing_mortality_grid(q, model.pack.effort,
                                            model.pack.selectivity)
        ny = model.pack.effort.shape[1]
        na = L.shape[0]
        M = np.empty((ny, na + 1))
        M[:, 0] = m0
        M[:, 1:] = mad
        fec = np.ascontiguousarray(dataset.fecundity, dtype=float)
        traj_args = (alpha, beta, Ftot, M, L, s74, sig_r, sig_n, sig_s,
                     float(dataset.female_prop), fec, r_seed, n_init,
                     z_r, z_n, z_s, int(lay.dims[4]))
        cases.append((name, K, traj_args))

    rows = []

    def add(label, fns):
        timings = {}
        for (name, _, _), fn in zip(cases, fns):
            fn()  # warmup (JIT compile for numba)
            timings[name] = _time(fn, args.repeat)
        rows.append((label, timings))

    add("logpost_core",
        [lambda K=K: K.logpost_core(x, *model._args) for _, K, _ in cases])
    add("traj_core",
        [lambda K=K, a=a: K.traj_core(*a) for _, K, a in cases])

    import smolt.decisions as decisions_mod
    proj_fns = []
    for name, K, _ in cases:
        def fn(K=K):
            old = decisions_mod.K
            decisions_mod.K = K
            try:
                project(state, policy, horizon=10, noise=noise)
            finally:
                decisions_mod.K = old
        proj_fns.append(fn)
    add("project (200 draws, H=10)", proj_fns)

    names = [n for n, _, _ in cases]
    print(f"{'kernel':<28}" + "".join(f"{n:>14}" for n in names)
          + ("     speedup" if len(names) == 2 else ""))
    for label, timings in rows:
        cells = "".join(f"{timings[n] * 1e3:>12.3f}ms" for n in names)
        if len(names) == 2:
            cells += f"{timings['numpy'] / timings['numba']:>11.1f}x"
        print(f"{label:<28}{cells}")


if __name__ == "__main__":
    main()
