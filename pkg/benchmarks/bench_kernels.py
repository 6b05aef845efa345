"""Compare the compiled and pure-Python jet kernels, and time one training step.

Run: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

STEP_SNIPPET = """
import time
import numpy as np
from gluenn.autodiff import grad_params, kernels
from gluenn.config import default_config
from gluenn.loss import LossProblem
from gluenn.network import build_network
from gluenn.sampling import generate_samples
cfg = default_config("tunneling_real")
sets = {k: generate_samples(s) for k, s in cfg.samples.items()}
prob = LossProblem(cfg.make_experiment(), cfg.arch, sets, cfg.weights, lambda x: np.cos(2 * np.asarray(x)))
p = build_network(cfg.arch, 0).flat
grad_params(prob.record(p).total, p)
t = time.perf_counter()
for _ in range(REPEAT):
    grad_params(prob.record(p).total, p)
print(kernels.BACKEND, (time.perf_counter() - t) / REPEAT)
"""


def kernel_timings(repeat: int) -> None:
    from gluenn.autodiff import _kernels_py, kernels

    backends = {"python": _kernels_py}
    if kernels.BACKEND == "compiled":
        from gluenn.autodiff import _kernels

        backends["compiled"] = _kernels
    rng = np.random.default_rng(0)
    z = rng.normal(size=(3, 1127, 100))
    g = rng.normal(size=z.shape)
    print(f"tanh jet on {z.shape}, best of {repeat}")
    results = {}
    for name, mod in backends.items():
        out = mod.tanh_jet_forward(z)
        fwd = min(timeit.repeat(lambda: mod.tanh_jet_forward(z), number=10, repeat=repeat)) / 10
        bwd = min(timeit.repeat(lambda: mod.tanh_jet_backward(g, z, out[1], out[2]), number=10, repeat=repeat)) / 10
        results[name] = (out, mod.tanh_jet_backward(g, z, out[1], out[2]))
        print(f"  {name:9s} forward {fwd * 1e3:7.3f} ms   backward {bwd * 1e3:7.3f} ms")
    if len(results) == 2:
        (fa, ba), (fb, bb) = results["python"], results["compiled"]
        diff = max(float(np.max(np.abs(fa[0] - fb[0]))), float(np.max(np.abs(ba - bb))))
        print(f"  max abs difference between backends: {diff:.3g}")


def step_timings(repeat: int) -> None:
    print("full tunneling loss + gradient, per step")
    for flag in ("0", "1"):
        env = dict(os.environ, GLUENN_PURE_PYTHON=flag)
        code = STEP_SNIPPET.replace("REPEAT", str(repeat))
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, seconds = out.stdout.split()
        print(f"  {backend:9s} {float(seconds) * 1e3:7.1f} ms")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    kernel_timings(args.repeat)
    step_timings(args.repeat)


if __name__ == "__main__":
    main()
