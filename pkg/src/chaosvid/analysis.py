"""Statistical evaluation of ciphertext frames and keystreams.

Entropy, histograms, adjacent-pixel correlation, NPCR/UACI, the
differential and key-sensitivity protocols, and a bitstream export for
external randomness suites (NIST SP 800-22, DIEHARD).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import BinaryIO, Dict, List, Optional, Tuple

import numpy as np
from scipy import stats

from .cipher import xor_frame
from .container import Frame
from .keystream import KeystreamMode, build_matrix
from .maps import MASK64

DIRECTIONS = ("horizontal", "vertical", "diagonal")
NPCR_IDEAL = 99.6094
UACI_IDEAL = 33.4635
T_MAX = 255


class DegenerateVariance(ValueError):
    pass


def _channel(a) -> np.ndarray:
    a = np.asarray(a)
    if a.size == 0:
        raise ValueError("empty channel")
    if a.dtype != np.uint8:
        raise ValueError(f"expected uint8 channel, got {a.dtype}")
    return a


def histogram(channel) -> np.ndarray:
    return np.bincount(_channel(channel).ravel(), minlength=256)


def entropy(channel) -> float:
    """Shannon entropy of the byte histogram in bits per symbol."""
    counts = histogram(channel)
    total = int(counts.sum())
    return -math.fsum(c / total * math.log2(c / total) for c in counts.tolist() if c)


def chi_square(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    expected = counts.sum() / counts.size
    return float(((counts - expected) ** 2 / expected).sum())


def chi_square_limit(quantile: float = 0.999, df: int = 255) -> float:
    return float(stats.chi2.ppf(quantile, df))


def adjacent_pairs(channel, direction: str) -> Tuple[np.ndarray, np.ndarray]:
    """All (pixel, neighbour) pairs; diagonal means the down-right neighbour."""
    c = _channel(channel)
    if c.ndim != 2:
        raise ValueError(f"expected a 2-D channel, got shape {c.shape}")
    if direction == "horizontal":
        u, v = c[:, :-1], c[:, 1:]
    elif direction == "vertical":
        u, v = c[:-1, :], c[1:, :]
    elif direction == "diagonal":
        u, v = c[:-1, :-1], c[1:, 1:]
    else:
        raise ValueError(f"unknown direction {direction!r}; expected one of {DIRECTIONS}")
    if u.size < 2:
        raise ValueError(f"channel {c.shape} has fewer than 2 {direction} pairs")
    return u.ravel(), v.ravel()


def correlation(channel, direction: str) -> float:
    """Pearson correlation over every adjacent pair in ``direction``.

    Moment sums are accumulated as exact integers; only the final ratio is
    rounded.
    """
    u, v = adjacent_pairs(channel, direction)
    u = u.astype(np.int64)
    v = v.astype(np.int64)
    n = u.size
    su, sv = int(u.sum()), int(v.sum())
    suu, svv, suv = int((u * u).sum()), int((v * v).sum()), int((u * v).sum())
    du = n * suu - su * su
    dv = n * svv - sv * sv
    if du == 0 or dv == 0:
        raise DegenerateVariance(f"{direction} correlation undefined: constant marginal")
    return (n * suv - su * sv) / math.sqrt(du * dv)


def npcr_uaci(c1, c2) -> Tuple[float, float]:
    """NPCR and UACI in percent between two equally shaped byte matrices."""
    a = _channel(c1)
    b = _channel(c2)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = np.abs(a.astype(np.int16) - b.astype(np.int16))
    total = a.size
    changed = int(np.count_nonzero(diff))
    return 100.0 * changed / total, 100.0 * int(diff.sum(dtype=np.int64)) / (T_MAX * total)


@dataclass
class MetricsReport:
    label: str = ""
    entropy: Optional[List[float]] = None
    histogram: Optional[List[np.ndarray]] = None
    correlation: Optional[Dict[str, List[float]]] = None
    npcr: Optional[List[float]] = None
    uaci: Optional[List[float]] = None
    difference: Optional[np.ndarray] = field(default=None, repr=False)

    def items(self):
        """Stable ``(key, value)`` pairs; channel index is the last key part."""
        pre = f"{self.label}." if self.label else ""
        if self.entropy is not None:
            for ch, e in enumerate(self.entropy):
                yield f"{pre}entropy.c{ch}", f"{e:.6f}"
        if self.histogram is not None:
            for ch, h in enumerate(self.histogram):
                yield f"{pre}histogram.c{ch}", " ".join(str(int(x)) for x in h)
                yield f"{pre}chi2.c{ch}", f"{chi_square(h):.3f}"
        if self.correlation is not None:
            for d in DIRECTIONS:
                for ch, r in enumerate(self.correlation.get(d, [])):
                    yield f"{pre}correlation.{d}.c{ch}", f"{r:.6f}"
        if self.npcr is not None:
            for ch, x in enumerate(self.npcr):
                yield f"{pre}npcr.c{ch}", f"{x:.4f}"
        if self.uaci is not None:
            for ch, x in enumerate(self.uaci):
                yield f"{pre}uaci.c{ch}", f"{x:.4f}"

    def to_kv(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.items())

    def to_text(self) -> str:
        lines = [f"[{self.label or 'metrics'}]"]
        if self.entropy is not None:
            lines.append("entropy     " + "  ".join(f"{e:.4f}" for e in self.entropy))
        if self.histogram is not None:
            lines.append("chi2        " + "  ".join(f"{chi_square(h):.1f}" for h in self.histogram)
                         + f"  (0.999 limit {chi_square_limit():.1f})")
        if self.correlation is not None:
            for d in DIRECTIONS:
                lines.append(f"{d:<12}" + "  ".join(f"{r:+.4f}" for r in self.correlation[d]))
        if self.npcr is not None:
            lines.append("npcr %      " + "  ".join(f"{x:.4f}" for x in self.npcr))
        if self.uaci is not None:
            lines.append("uaci %      " + "  ".join(f"{x:.4f}" for x in self.uaci))
        return "\n".join(lines) + "\n"


def _channels(frame: Frame):
    return [frame.pixels[:, :, ch] for ch in range(frame.dims.channels)]


def analyze_frame(frame: Frame, label: str = "") -> MetricsReport:
    """Entropy, histogram and correlation for every channel of ``frame``."""
    chans = _channels(frame)
    corr: Dict[str, List[float]] = {}
    for d in DIRECTIONS:
        vals = []
        for c in chans:
            try:
                vals.append(correlation(c, d))
            except (DegenerateVariance, ValueError):
                vals.append(float("nan"))
        corr[d] = vals
    return MetricsReport(
        label=label,
        entropy=[entropy(c) for c in chans],
        histogram=[histogram(c) for c in chans],
        correlation=corr,
    )


def compare_frames(c1: Frame, c2: Frame, label: str = "") -> MetricsReport:
    """Per-channel NPCR/UACI plus the XOR difference image."""
    if c1.dims != c2.dims:
        raise ValueError(f"frame dims differ: {c1.dims} vs {c2.dims}")
    pairs = [npcr_uaci(a, b) for a, b in zip(_channels(c1), _channels(c2))]
    return MetricsReport(
        label=label,
        npcr=[p[0] for p in pairs],
        uaci=[p[1] for p in pairs],
        difference=np.bitwise_xor(c1.pixels, c2.pixels),
    )


def encrypt_frame(frame: Frame, seed: int, mode: KeystreamMode = KeystreamMode.COMBINED) -> Frame:
    return xor_frame(frame, build_matrix(mode, frame.dims, seed))


def key_sensitivity_test(
    frame: Frame, seed: int, bit_index: int, mode: KeystreamMode = KeystreamMode.COMBINED
) -> MetricsReport:
    """Compare ciphertexts of ``frame`` under ``seed`` and ``seed`` with one bit flipped."""
    if not 0 <= bit_index < 64:
        raise ValueError(f"bit_index must be in 0..63, got {bit_index}")
    c1 = encrypt_frame(frame, seed, mode)
    c2 = encrypt_frame(frame, (seed ^ (1 << bit_index)) & MASK64, mode)
    return compare_frames(c1, c2, label=f"key-sensitivity.bit{bit_index}")


@dataclass
class DifferentialResult:
    plaintext_flip: MetricsReport
    seed_flip: MetricsReport

    def to_kv(self) -> str:
        return self.plaintext_flip.to_kv() + self.seed_flip.to_kv()

    def to_text(self) -> str:
        return self.plaintext_flip.to_text() + self.seed_flip.to_text()


def differential_test(
    frame: Frame, seed: int, mode: KeystreamMode = KeystreamMode.COMBINED
) -> DifferentialResult:
    """Run both differential protocols.

    ``plaintext_flip`` flips the LSB of pixel (0, 0) channel 0 and encrypts
    both frames under the same seed; a static XOR pad confines the change
    to that one byte. ``seed_flip`` encrypts the same frame under seeds
    differing in bit 0, the comparison that reaches near-ideal NPCR/UACI.
    """
    altered = frame.pixels.copy()
    altered[0, 0, 0] ^= 1
    c1 = encrypt_frame(frame, seed, mode)
    c2 = encrypt_frame(Frame(frame.dims, altered), seed, mode)
    plain = compare_frames(c1, c2, label="differential.plaintext-flip")
    keyed = compare_frames(c1, encrypt_frame(frame, seed ^ 1, mode), label="differential.seed-flip")
    return DifferentialResult(plain, keyed)


def export_bitstream(source, sink: BinaryIO, bit_count: int) -> int:
    """Write the first ``ceil(bit_count / 8)`` bytes of ``source`` verbatim.

    Bits are numbered LSB-first within each byte, matching keystream byte
    extraction; a partial last byte is written whole.
    """
    if bit_count < 1:
        raise ValueError(f"bit_count must be positive, got {bit_count}")
    data = bytes(source)
    nbytes = -(-bit_count // 8)
    if nbytes > len(data):
        raise ValueError(f"need {nbytes} bytes for {bit_count} bits, source has {len(data)}")
    sink.write(memoryview(data)[:nbytes])
    return nbytes


def bits_lsb_first(data) -> np.ndarray:
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8), bitorder="little")


def monobit_and_runs_smoke(data) -> Tuple[float, float]:
    """Frequency (monobit) and runs p-values, normal approximation.

    A runs p-value of 0.0 is returned when the ones fraction already fails
    the runs test's frequency prerequisite.
    """
    bits = bits_lsb_first(data)
    n = bits.size
    if n < 100:
        raise ValueError(f"need at least 100 bits, got {n}")
    ones = int(bits.sum())
    s = 2 * ones - n
    p_mono = math.erfc(abs(s) / math.sqrt(2.0 * n))

    pi = ones / n
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return p_mono, 0.0
    runs = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    spread = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    p_runs = math.erfc(abs(runs - 2.0 * n * pi * (1.0 - pi)) / spread)
    return p_mono, p_runs
