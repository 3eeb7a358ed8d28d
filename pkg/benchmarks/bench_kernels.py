"""Compare the numba and pure-numpy FFT backends on realistic workloads.

Run:  python3 benchmarks/bench_kernels.py
Exits nonzero if the two paths ever disagree beyond 1e-9, so this doubles
as a cross-backend consistency check.
"""

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from lipsync import kernels
from lipsync.audio import AudioClip
from lipsync.mfcc import MfccConfig, compute_mfcc

RATE = 16000


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    if not kernels.HAVE_NUMBA:
        print("numba is not importable; nothing to compare")
        return 1

    kernels.warm_up()
    rng = np.random.default_rng(0)
    worst = 0.0

    print(f"{'batch':>12} {'numba':>10} {'numpy':>10} {'speedup':>8} {'max dev':>10}")
    for batch in (1, 16, 64, 256):
        frames = rng.uniform(-1, 1, (batch, 1024))
        with kernels.use_backend("numba"):
            t_numba = best_of(lambda: kernels.fft_batch(frames))
            a = kernels.fft_batch(frames)
        with kernels.use_backend("numpy"):
            t_numpy = best_of(lambda: kernels.fft_batch(frames))
            b = kernels.fft_batch(frames)
        dev = float(np.abs(a - b).max())
        worst = max(worst, dev)
        print(f"{batch:>8}x1024 {t_numba * 1e3:>8.3f}ms {t_numpy * 1e3:>8.3f}ms "
              f"{t_numpy / t_numba:>7.2f}x {dev:>10.2e}")

    # whole pipeline on 10 s of noise, the shape the service actually runs
    clip = AudioClip.from_samples(rng.uniform(-0.5, 0.5, 10 * RATE), RATE)
    config = MfccConfig()
    results = {}
    for name in ("numba", "numpy"):
        with kernels.use_backend(name):
            t = best_of(lambda: compute_mfcc(clip, config), repeats=3)
            results[name] = t
            print(f"pipeline 10 s audio, {name:>5}: {t * 1e3:8.1f} ms "
                  f"({10.0 / t:6.0f}x real time)")
    print(f"pipeline speedup: {results['numpy'] / results['numba']:.2f}x, "
          f"worst FFT deviation: {worst:.2e}")

    if worst > 1e-9:
        print("FAIL: backends disagree beyond 1e-9", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
