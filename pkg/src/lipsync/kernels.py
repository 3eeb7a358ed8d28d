"""Radix-2 FFT kernels, the hot inner loop of the analysis pipeline.

Two interchangeable implementations: a numba-compiled loop and a
vectorized pure-numpy fallback. The numba path is used when numba
imports cleanly; set LIPSYNC_PURE_NUMPY=1 to force the numpy path.
Both consume the same precomputed bit-reversal and twiddle tables, so
they agree to within a few ulp (benchmarks/bench_kernels.py checks).
"""

import os
from contextlib import contextmanager
from functools import lru_cache

import numpy as np

_FORCE_NUMPY = os.environ.get("LIPSYNC_PURE_NUMPY", "") not in ("", "0")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # no-op decorator so the module still imports
        def wrap(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return wrap


_active = "numpy" if (_FORCE_NUMPY or not HAVE_NUMBA) else "numba"


def active_backend() -> str:
    """Name of the FFT backend in use: "numba" or "numpy"."""
    return _active


@contextmanager
def use_backend(name: str):
    """Temporarily switch backends (used by tests and the benchmark)."""
    global _active
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    prev = _active
    _active = name
    try:
        yield
    finally:
        _active = prev


@lru_cache(maxsize=8)
def _tables(n: int):
    """Bit-reversal permutation and per-stage twiddle factors for size n.

    Twiddles for the stage of size s (half h = s/2) occupy tw[h-1 : s-1],
    so one flat array of n-1 entries serves every stage.
    """
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    tw = np.empty(max(n - 1, 1), np.complex128)
    size = 2
    while size <= n:
        half = size >> 1
        k = np.arange(half)
        tw[half - 1:size - 1] = np.exp(-2j * np.pi * k / size)
        size <<= 1
    return rev, tw


def _fft_batch_numpy(data: np.ndarray, rev: np.ndarray, tw: np.ndarray) -> np.ndarray:
    n = data.shape[-1]
    x = data[:, rev]
    size = 2
    while size <= n:
        half = size >> 1
        w = tw[half - 1:size - 1]
        x = x.reshape(-1, n // size, size)
        upper = x[:, :, half:]
        lower = x[:, :, :half]
        t = upper * w
        upper[...] = lower - t
        lower += t
        x = x.reshape(-1, n)
        size <<= 1
    return x


@njit(cache=True)
def _fft_batch_numba(data, rev, tw):  # pragma: no cover - exercised via dispatch
    m, n = data.shape
    scratch = np.empty(n, np.complex128)
    for r in range(m):
        row = data[r]
        for i in range(n):
            scratch[i] = row[rev[i]]
        for i in range(n):
            row[i] = scratch[i]
        size = 2
        while size <= n:
            half = size >> 1
            base = half - 1
            for start in range(0, n, size):
                for k in range(half):
                    w = tw[base + k]
                    a = row[start + k]
                    b = row[start + k + half] * w
                    row[start + k] = a + b
                    row[start + k + half] = a - b
            size <<= 1
    return data


def _check_size(n: int) -> None:
    if n < 1 or n & (n - 1):
        raise ValueError(f"FFT size must be a power of two, got {n}")


def fft_batch(frames: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Complex DFT of each row of a (m, n) array; n must be a power of two.

    Accepts real or complex input and always returns a fresh complex128
    array, leaving the input untouched.
    """
    frames = np.asarray(frames)
    if frames.ndim != 2:
        raise ValueError("fft_batch expects a 2-D array of frames")
    n = frames.shape[1]
    _check_size(n)
    rev, tw = _tables(n)
    data = np.ascontiguousarray(frames, dtype=np.complex128)
    if data is frames:
        data = data.copy()
    which = backend or _active
    if which == "numba":
        return _fft_batch_numba(data, rev, tw)
    return _fft_batch_numpy(data, rev, tw)


def fft(x: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Complex DFT of a single 1-D signal of power-of-two length."""
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("fft expects a 1-D array")
    return fft_batch(x[None, :], backend=backend)[0]


def warm_up() -> None:
    """Trigger JIT compilation ahead of latency-sensitive use."""
    fft_batch(np.zeros((2, 8)))
