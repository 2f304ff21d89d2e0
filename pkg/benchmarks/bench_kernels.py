"""Time the compiled kernels against the numpy fallback on identical inputs.

Run with ``python benchmarks/bench_kernels.py``. Results are checked for
agreement before timing.
"""

import argparse
import timeit

import numpy as np

from lmgeo import kernels
from lmgeo.netsim import SimConfig, generate, snapshot


def haversine_inputs(n: int, m: int, seed: int):
    rng = np.random.default_rng(seed)
    return (rng.uniform(-80, 80, n), rng.uniform(-180, 180, n),
            rng.uniform(-80, 80, m), rng.uniform(-180, 180, m), 6371.0088)


def route_inputs(n_landmarks: int, seed: int):
    cfg = SimConfig(region_km=500, n_routers=400, n_probes=50, n_landmarks=n_landmarks, n_targets=1)
    topo = generate(cfg, seed)
    snap = snapshot(topo)
    target = topo.hosts_of("target")[0].ip
    landmarks = [h.ip for h in topo.hosts_of("landmark")]
    t_nodes, t_cum, t_len = snap.packed([target])
    l_nodes, l_cum, l_len = snap.packed(landmarks)
    n_nodes = int(max(t_nodes.max(), l_nodes.max())) + 1
    return t_nodes[0], t_cum[0], t_len[0], l_nodes, l_cum, l_len, n_nodes


def best_time(fn, args, repeat: int) -> float:
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    if kernels.compiled is None:
        raise SystemExit("compiled extension not available; build it with pip install -e .")

    cases = [
        ("haversine 1000x1000", "haversine_matrix", haversine_inputs(1000, 1000, args.seed)),
        ("haversine 3000x3000", "haversine_matrix", haversine_inputs(3000, 3000, args.seed)),
        ("route lengths 1000 landmarks x 50 probes", "route_lengths", route_inputs(1000, args.seed)),
        ("route lengths 3000 landmarks x 50 probes", "route_lengths", route_inputs(3000, args.seed)),
    ]
    print(f"{'kernel':44s} {'numpy ms':>10s} {'compiled ms':>12s} {'speedup':>8s}")
    for label, name, inputs in cases:
        slow = getattr(kernels.python, name)
        fast = getattr(kernels.compiled, name)
        np.testing.assert_allclose(fast(*inputs), slow(*inputs), rtol=1e-12, atol=1e-9, equal_nan=True)
        t_slow = best_time(slow, inputs, args.repeat)
        t_fast = best_time(fast, inputs, args.repeat)
        print(f"{label:44s} {t_slow * 1e3:10.2f} {t_fast * 1e3:12.2f} {t_slow / t_fast:7.1f}x")


if __name__ == "__main__":
    main()
