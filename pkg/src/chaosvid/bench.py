"""Timing harness for the two evaluation scenarios.

``full``  reads frames from a raw stream, builds the matrix, XORs and writes
          a container (sequence generation + read + XOR + write).
``xor``   only applies the prebuilt matrix to frames already in memory.
"""

from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy import stats

from .cipher import encrypt_stream
from .container import Frame, iter_frames
from .keystream import FrameDims, KeystreamMode, build_matrix

# 1080p RGB at 30 fps
REALTIME_1080P30 = 1920 * 1080 * 3 * 30


class Scenario(enum.Enum):
    FULL = "full"
    XOR = "xor"


@dataclass
class TimingReport:
    scenario: Scenario
    samples: List[float]
    mean: float
    ci95_half_width: float
    bytes_processed: int
    throughput: float
    video_seconds: float

    @property
    def realtime_margin(self) -> float:
        """Video seconds encrypted per wall-clock second; > 1 keeps up with capture."""
        return self.video_seconds / self.mean

    def items(self):
        yield "scenario", self.scenario.value
        yield "repeats", str(len(self.samples))
        yield "samples", " ".join(f"{s:.6f}" for s in self.samples)
        yield "mean_s", f"{self.mean:.6f}"
        yield "ci95_half_width_s", f"{self.ci95_half_width:.6f}"
        yield "bytes_processed", str(self.bytes_processed)
        yield "throughput_Bps", f"{self.throughput:.1f}"
        yield "video_seconds", f"{self.video_seconds:.4f}"
        yield "realtime_margin", f"{self.realtime_margin:.3f}"

    def to_kv(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.items())

    def to_text(self) -> str:
        return (
            f"{self.scenario.value}: {self.mean:.4f} s +/- {self.ci95_half_width:.4f} (95% CI, "
            f"n={len(self.samples)}), {self.throughput / 1e6:.1f} MB/s, "
            f"real-time margin {self.realtime_margin:.2f}x\n"
        )


def t_interval(samples: Sequence[float], confidence: float = 0.95):
    """Mean and Student-t half-width with ``len(samples) - 1`` degrees of freedom."""
    n = len(samples)
    if n < 2:
        raise ValueError("need at least 2 samples for a confidence interval")
    x = np.asarray(samples, dtype=np.float64)
    sd = float(x.std(ddof=1))
    q = float(stats.t.ppf(0.5 + confidence / 2, n - 1))
    return float(x.mean()), q * sd / math.sqrt(n)


def synthetic_frame(dims: FrameDims, index: int = 0) -> Frame:
    """Deterministic frame filled from a 32-bit linear-congruential hash of the byte index."""
    idx = np.arange(dims.frame_bytes, dtype=np.uint32)
    offset = np.uint32((12345 + index * 2654435761) & 0xFFFFFFFF)
    with np.errstate(over="ignore"):
        x = idx * np.uint32(1103515245) + offset
    return Frame(dims, (x >> np.uint32(24)).astype(np.uint8).reshape(dims.shape))


class _CyclingSource:
    """Raw frame stream that replays a few distinct frames ``count`` times."""

    def __init__(self, frames: Sequence[Frame], count: int):
        self._raw = [f.tobytes() for f in frames]
        self._size = len(self._raw[0])
        self._total = count * self._size
        self._pos = 0

    def read(self, n: int = -1) -> bytes:
        remaining = self._total - self._pos
        if n < 0 or n > remaining:
            n = remaining
        out = []
        while n:
            frame, off = divmod(self._pos, self._size)
            take = min(n, self._size - off)
            out.append(self._raw[frame % len(self._raw)][off:off + take])
            self._pos += take
            n -= take
        return b"".join(out)


class _NullSink:
    def __init__(self):
        self.count = 0

    def write(self, b) -> int:
        n = len(memoryview(b).cast("B"))
        self.count += n
        return n

    def seekable(self) -> bool:
        return False


def _run_full(dims, frames, count, fps, seed, mode, workers) -> float:
    src = _CyclingSource(frames, count)
    t0 = time.perf_counter()
    n = encrypt_stream(iter_frames(src, dims), dims, fps, seed, mode, _NullSink(), workers)
    elapsed = time.perf_counter() - t0
    if n != count:
        raise RuntimeError(f"benchmark wrote {n} frames, expected {count}")
    return elapsed


def _run_xor(dims, frames, count, mat, workers) -> float:
    pixels = [f.pixels for f in frames]
    k = len(pixels)
    if workers <= 1:
        out = np.empty(dims.shape, dtype=np.uint8)
        t0 = time.perf_counter()
        for i in range(count):
            np.bitwise_xor(pixels[i % k], mat.data, out=out)
        return time.perf_counter() - t0

    outs = [np.empty(dims.shape, dtype=np.uint8) for _ in range(workers)]

    def work(w):
        for i in range(w, count, workers):
            np.bitwise_xor(pixels[i % k], mat.data, out=outs[w])

    with ThreadPoolExecutor(max_workers=workers) as pool:
        t0 = time.perf_counter()
        list(pool.map(work, range(workers)))
        return time.perf_counter() - t0


def bench(
    scenario: Scenario,
    dims: FrameDims,
    frame_count: int,
    repeats: int,
    fps: float = 30.0,
    seed: int = 0x7598000000033E4A,
    mode: KeystreamMode = KeystreamMode.COMBINED,
    workers: int = 1,
    distinct_frames: int = 4,
) -> TimingReport:
    """Time ``repeats`` runs over ``frame_count`` synthetic frames.

    A few distinct frames are generated once and replayed so memory stays
    bounded at large resolutions. One warm-up run is discarded.
    """
    if repeats < 2:
        raise ValueError("repeats must be >= 2")
    if frame_count < 1:
        raise ValueError("frame_count must be >= 1")
    if fps <= 0:
        raise ValueError("fps must be positive")
    frames = [synthetic_frame(dims, i) for i in range(min(frame_count, distinct_frames))]
    if scenario is Scenario.FULL:
        def run():
            return _run_full(dims, frames, frame_count, fps, seed, mode, workers)
    else:
        mat = build_matrix(mode, dims, seed)

        def run():
            return _run_xor(dims, frames, frame_count, mat, workers)

    run()
    samples = [run() for _ in range(repeats)]
    mean, half = t_interval(samples)
    nbytes = frame_count * dims.frame_bytes
    return TimingReport(scenario, samples, mean, half, nbytes, nbytes / mean, frame_count / fps)
