"""Byte-sliced keystream planes and the per-stream encryption matrix."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .maps import MASK64, MapVariant, iterate


class KeystreamMode(enum.Enum):
    COMBINED = "combined"
    ONLY_A = "oc-a"
    ONLY_B = "oc-b"
    TRIPLE_LENGTH = "3l"

    @classmethod
    def parse(cls, name: str) -> "KeystreamMode":
        try:
            return cls(name.lower())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown keystream mode {name!r} (expected one of {choices})") from None


@dataclass(frozen=True)
class FrameDims:
    height: int
    width: int
    channels: int = 3

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError(f"frame dims must be positive, got {self.height}x{self.width}")
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")

    @property
    def pixels(self) -> int:
        return self.height * self.width

    @property
    def frame_bytes(self) -> int:
        return self.height * self.width * self.channels

    @property
    def shape(self):
        return (self.height, self.width, self.channels)


@dataclass(frozen=True, eq=False)
class KeystreamPlane:
    data: np.ndarray  # uint8, length dims.pixels
    seed: int
    dims: FrameDims

    def __post_init__(self):
        if self.data.shape != (self.dims.pixels,):
            raise ValueError(f"plane holds {self.data.size} bytes, dims need {self.dims.pixels}")

    def __eq__(self, other):
        if not isinstance(other, KeystreamPlane):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class EncryptionMatrix:
    """Per-stream XOR pad shaped ``(height, width, channels)``; read-only."""

    dims: FrameDims
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape != self.dims.shape or self.data.dtype != np.uint8:
            raise ValueError(f"matrix must be uint8 {self.dims.shape}, got {self.data.dtype} {self.data.shape}")
        self.data.setflags(write=False)

    def __eq__(self, other):
        if not isinstance(other, EncryptionMatrix):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.data, other.data)

    def tobytes(self) -> bytes:
        return self.data.tobytes()


def words_to_bytes(words) -> np.ndarray:
    """Slice each word into 8 bytes, least-significant byte first."""
    return np.asarray(words, dtype="<u8").view(np.uint8)


def keystream_bytes(variant: MapVariant, seed: int, nbytes: int) -> np.ndarray:
    """First ``nbytes`` keystream bytes of one map started at ``seed``."""
    if nbytes < 1:
        raise ValueError(f"keystream length must be positive, got {nbytes}")
    words = iterate(variant, seed, -(-nbytes // 8))
    return words_to_bytes(words)[:nbytes].copy()


def combined_bytes(seed: int, nbytes: int, seed_b: Optional[int] = None) -> np.ndarray:
    """XOR of the two maps' keystreams; map B uses ``seed_b`` if given."""
    a = keystream_bytes(MapVariant.A, seed, nbytes)
    b = keystream_bytes(MapVariant.B, seed if seed_b is None else seed_b, nbytes)
    np.bitwise_xor(a, b, out=a)
    return a


def generate_plane(variant: MapVariant, dims: FrameDims, seed: int) -> KeystreamPlane:
    return KeystreamPlane(keystream_bytes(variant, seed, dims.pixels), seed & MASK64, dims)


def combine(a: KeystreamPlane, b: KeystreamPlane) -> KeystreamPlane:
    if a.dims != b.dims:
        raise ValueError(f"plane dims differ: {a.dims} vs {b.dims}")
    return KeystreamPlane(np.bitwise_xor(a.data, b.data), a.seed, a.dims)


def expand_to_channels(plane: KeystreamPlane, channels: int) -> EncryptionMatrix:
    """Replicate the plane into every channel: pixel (i, j) gets byte ``i*n + j``."""
    if channels not in (1, 3):
        raise ValueError(f"channels must be 1 or 3, got {channels}")
    d = plane.dims
    dims = FrameDims(d.height, d.width, channels)
    grid = plane.data.reshape(d.height, d.width, 1)
    return EncryptionMatrix(dims, np.repeat(grid, channels, axis=2))


def split_channels(data: np.ndarray, dims: FrameDims) -> EncryptionMatrix:
    """Lay ``3*m*n`` bytes out as three distinct channel planes, channel 0 first."""
    if dims.channels != 3:
        raise ValueError("triple-length layout needs 3 channels")
    if data.size != dims.frame_bytes:
        raise ValueError(f"need {dims.frame_bytes} bytes, got {data.size}")
    planes = data.reshape(3, dims.height, dims.width)
    return EncryptionMatrix(dims, np.ascontiguousarray(planes.transpose(1, 2, 0)))


def build_matrix(
    mode: KeystreamMode, dims: FrameDims, seed: int, seed_b: Optional[int] = None
) -> EncryptionMatrix:
    """Build the stream's encryption matrix.

    By default both maps share ``seed``. Passing ``seed_b`` keys map B
    independently (two 64-bit seeds); it is ignored by the single-map modes.
    """
    if mode is KeystreamMode.COMBINED:
        plane = KeystreamPlane(combined_bytes(seed, dims.pixels, seed_b), seed & MASK64, dims)
        return expand_to_channels(plane, dims.channels)
    if mode is KeystreamMode.ONLY_A:
        return expand_to_channels(generate_plane(MapVariant.A, dims, seed), dims.channels)
    if mode is KeystreamMode.ONLY_B:
        return expand_to_channels(generate_plane(MapVariant.B, dims, seed), dims.channels)
    if mode is KeystreamMode.TRIPLE_LENGTH:
        if dims.channels != 3:
            raise ValueError("3l mode requires 3 channels")
        return split_channels(combined_bytes(seed, 3 * dims.pixels, seed_b), dims)
    raise ValueError(f"unsupported mode {mode!r}")
