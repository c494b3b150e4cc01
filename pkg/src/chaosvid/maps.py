"""Two 1D discrete-space chaotic maps over 64-bit words.

Both maps alternate the same two step functions, a data-dependent
rotation and a wrapping affine-multiplicative step, in opposite phase.
"""

from __future__ import annotations

import enum
from typing import Callable, List, Tuple

MASK64 = (1 << 64) - 1
MASK32 = (1 << 32) - 1


class MapVariant(enum.Enum):
    A = "a"  # affine step on even transitions, rotation on odd
    B = "b"  # rotation on even transitions, affine step on odd

    @classmethod
    def parse(cls, name: str) -> "MapVariant":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown map variant {name!r} (expected 'a' or 'b')") from None


def rotate_step(w: int) -> int:
    """Rotate ``w`` left by its own low six bits (rotation by 0 is identity)."""
    w &= MASK64
    s = w & 63
    if s == 0:
        return w
    return ((w << s) | (w >> (64 - s))) & MASK64


def affine_step(w: int) -> int:
    """Return ``(hi + 1) * (lo + 1) + 1`` wrapped to 64 bits.

    ``hi`` and ``lo`` are the quotient and remainder of ``w / 2**32`` with
    ``w`` read as a two's-complement int64 and C truncating division, so a
    state with the top bit set yields ``hi <= 0`` and ``lo <= 0``. This is
    the reading under which the published reference iterates reproduce.
    """
    w &= MASK64
    hi = w >> 32
    lo = w & MASK32
    if w >> 63:
        hi -= 1 << 32
        if lo:
            hi += 1
            lo -= 1 << 32
    return ((hi + 1) * (lo + 1) + 1) & MASK64


def step_for(variant: MapVariant, index: int) -> Callable[[int], int]:
    """Step function a map applies to go from element ``index`` to ``index + 1``."""
    even = index % 2 == 0
    if variant is MapVariant.A:
        return affine_step if even else rotate_step
    return rotate_step if even else affine_step


def iterate(variant: MapVariant, seed: int, count: int) -> List[int]:
    """Return ``count`` states of the map; element 0 is the seed itself."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if variant is MapVariant.A:
        even, odd = affine_step, rotate_step
    else:
        even, odd = rotate_step, affine_step
    out = [0] * count
    y = seed & MASK64
    last = count - 1
    for i in range(count):
        out[i] = y
        if i == last:
            break
        y = even(y) if i & 1 == 0 else odd(y)
    return out


def poincare_points(variant: MapVariant, seed: int, count: int) -> List[Tuple[int, int]]:
    """Consecutive state pairs ``(y_k, y_k+1)`` for a Poincare-section plot."""
    if count < 2:
        raise ValueError(f"count must be >= 2, got {count}")
    ys = iterate(variant, seed, count)
    return list(zip(ys[:-1], ys[1:]))


def format_word(w: int) -> str:
    return f"{w & MASK64:016x}"


def parse_word(text: str) -> int:
    """Parse a hex seed such as ``7598000000033e4a`` or ``0x7598...``."""
    text = text.strip().lower()
    if text.startswith("0x"):
        text = text[2:]
    if not text or len(text) > 16:
        raise ValueError(f"seed must be 1-16 hex digits, got {text!r}")
    return int(text, 16)


# Published reference iterates (seed first) used by the self-test.
REFERENCE_ITERATES = {
    MapVariant.A: (
        0x7598000000033E4A, 0x00017D65438B3E4C, 0x17D65438B3E4C000, 0x10C029A7B4C5143A,
        0xE84300A69ED31450, 0x0902C716F3B85529, 0x70AA5212058E2DE7, 0x0271E647F051B839,
        0x7204E3CC8FE0A370, 0x4014C8524794147E,
    ),
    MapVariant.B: (
        0x0844581288CE6A18, 0x1288CE6A18084458, 0x01BD6C9343BC2F34, 0xF3401BD6C9343BC2,
        0x02BAA010501FFD89, 0x754020A03FFB1205, 0x1D4DC628DEA715C7, 0xA6E3146F538AE38E,
        0x3C0832623BE29E20, 0x3BE29E203C083262,
    ),
}
