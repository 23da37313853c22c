"""numba vs numpy kernel timings for the 4x64 MLPs used by both agents.

    python3 benchmarks/bench_kernels.py            # kernel micro-benchmarks
    python3 benchmarks/bench_kernels.py --episodes 5   # plus end-to-end CDADRL training

The end-to-end part runs each backend in a fresh interpreter so MECSFC_DISABLE_NUMBA
takes effect at import time.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from mecsfc import _kernels
from mecsfc.neural import DenseNet, OptimizerState, backward_and_step


def bench_kernels(kernels, batch, repeat):
    rng = np.random.default_rng(0)
    net = DenseNet(24, 1, "sigmoid", hidden=64, depth=4, rng=rng, kernels=kernels)
    opt = OptimizerState.for_net(net)
    x = rng.normal(size=(batch, 24))
    g = rng.normal(size=(batch, 1))

    def fwd():
        net.forward(x, cache=False)

    def step():
        net.forward(x)
        backward_and_step(net, opt, g)

    step()  # compile / warm caches
    t_fwd = min(timeit.repeat(fwd, number=repeat, repeat=3)) / repeat
    t_step = min(timeit.repeat(step, number=repeat, repeat=3)) / repeat
    return t_fwd, t_step


_E2E = """
import sys, time
from mecsfc import _kernels
from mecsfc.config import ExperimentConfig
from mecsfc.orchestrator import Runner
r = Runner(ExperimentConfig().replace(**{"run.scheme": "cdadrl", "run.seed": 0}))
r.train(1)
t = time.perf_counter()
r.train(int(sys.argv[1]))
print(_kernels.BACKEND, (time.perf_counter() - t) / int(sys.argv[1]))
"""


def bench_episodes(episodes):
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, MECSFC_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", _E2E, str(episodes)], env=env, capture_output=True,
                             text=True, check=True)
        name, sec = res.stdout.split()
        out[name] = float(sec)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--episodes", type=int, default=0, help="also time N CDADRL training episodes per backend")
    args = ap.parse_args()

    backends = {"numpy": _kernels.NUMPY_KERNELS}
    if _kernels.NUMBA_KERNELS is not None:
        backends["numba"] = _kernels.NUMBA_KERNELS
    else:
        print("numba kernels unavailable, timing numpy only")

    print(f"{'backend':8s} {'batch':>5s} {'forward us':>11s} {'fwd+bwd+adam us':>16s}")
    for batch in (1, 32, 128):
        for name, k in backends.items():
            f, s = bench_kernels(k, batch, args.repeat)
            print(f"{name:8s} {batch:5d} {f * 1e6:11.1f} {s * 1e6:16.1f}")

    if args.episodes:
        for name, sec in bench_episodes(args.episodes).items():
            print(f"{name:8s} training episode: {sec:.3f} s")


if __name__ == "__main__":
    main()
