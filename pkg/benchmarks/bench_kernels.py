"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from motion_vos import kernels
from motion_vos.flow import Frame, estimate_flow
from motion_vos.pipeline import RunConfig, run_pipeline


def texture(seed, size):
    rng = np.random.default_rng(seed)
    p = np.pad(rng.random((size, size)), 1, mode="wrap")
    out = sum(p[dy:dy + size, dx:dx + size] for dy in range(3) for dx in range(3)) / 9.0
    return (out - out.min()) / (out.max() - out.min())


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = {"python": kernels.get_backend("python")}
    if kernels.compiled_available():
        backends["cython"] = kernels.get_backend("cython")
    else:
        print("compiled kernels not built; only the numpy fallback is timed")

    img = texture(0, 96)
    a, b = Frame(img), Frame(np.roll(img, (2, -3), axis=(0, 1)))
    tpl = img[30:50, 30:50].copy()

    cases = {
        "flow 96x96": lambda k: estimate_flow(a, b, backend=k),
        "ncc 20x20, +-16": lambda k: k.ncc_search(img, tpl, 30, 30, -16, 16, -16, 16),
        "pipeline matcher/occlusion": lambda k: run_pipeline(RunConfig(segmenter="matcher", scenario="occlusion"), backend=k),
    }
    print(f"{'case':30s}" + "".join(f"{n:>12s}" for n in backends) + ("   speedup" if len(backends) > 1 else ""))
    for name, fn in cases.items():
        t = {n: best_of(lambda: fn(k), args.repeat) for n, k in backends.items()}
        row = f"{name:30s}" + "".join(f"{t[n] * 1000:10.1f}ms" for n in backends)
        if "cython" in t:
            row += f"   {t['python'] / t['cython']:6.1f}x"
        print(row)


if __name__ == "__main__":
    main()
