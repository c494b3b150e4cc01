"""Encrypted container format, raw frame streams, and binary PNM frames.

Container layout (all integers little-endian, no padding)::

    offset  size  field
         0     4  magic b"CVS1"
         4     1  version (1)
         5     4  height m      u32
         9     4  width n       u32
        13     8  fps           IEEE-754 f64
        21     8  timestamp t   u64, the keystream seed
        29     1  channels      u8, 1 or 3
        30     8  frame_count   u64, 0 when unknown
        38        raw frames, m*n*channels bytes each, row-major, interleaved
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, List, Optional, Tuple

import numpy as np

from .keystream import FrameDims

MAGIC = b"CVS1"
VERSION = 1
_HEADER = struct.Struct("<4sBIIdQBQ")
HEADER_SIZE = _HEADER.size
U32_MAX = (1 << 32) - 1
U64_MAX = (1 << 64) - 1


class ContainerError(ValueError):
    pass


class BadMagic(ContainerError):
    pass


class UnsupportedVersion(ContainerError):
    pass


class InvalidDims(ContainerError):
    def __init__(self, field_name: str, value):
        super().__init__(f"invalid header field {field_name}: {value!r}")
        self.field = field_name
        self.value = value


class TruncatedHeader(ContainerError):
    pass


class TruncatedFrame(ContainerError):
    def __init__(self, got: int, expected: int, frames_recovered: Optional[int] = None):
        msg = f"truncated frame: got {got} of {expected} bytes"
        if frames_recovered is not None:
            msg += f" after {frames_recovered} complete frames"
        super().__init__(msg)
        self.got = got
        self.expected = expected
        self.frames_recovered = frames_recovered


class PnmError(ValueError):
    pass


class UnsupportedFormat(PnmError):
    pass


class MalformedHeader(PnmError):
    pass


@dataclass(frozen=True)
class ContainerHeader:
    height: int
    width: int
    fps: float
    timestamp: int
    channels: int = 3
    frame_count: int = 0
    magic: bytes = field(default=MAGIC, compare=False)
    version: int = VERSION

    def validate(self) -> None:
        if self.magic != MAGIC:
            raise BadMagic(f"bad magic {self.magic!r}, expected {MAGIC!r}")
        if self.version != VERSION:
            raise UnsupportedVersion(f"unsupported container version {self.version}")
        for name in ("height", "width"):
            v = getattr(self, name)
            if not isinstance(v, int) or not 1 <= v <= U32_MAX:
                raise InvalidDims(name, v)
        if self.channels not in (1, 3):
            raise InvalidDims("channels", self.channels)
        if not (math.isfinite(self.fps) and self.fps > 0):
            raise InvalidDims("fps", self.fps)
        if not 0 <= self.timestamp <= U64_MAX:
            raise InvalidDims("timestamp", self.timestamp)
        if not 0 <= self.frame_count <= U64_MAX:
            raise InvalidDims("frame_count", self.frame_count)

    @property
    def dims(self) -> FrameDims:
        return FrameDims(self.height, self.width, self.channels)

    def pack(self) -> bytes:
        self.validate()
        return _HEADER.pack(
            self.magic, self.version, self.height, self.width, float(self.fps),
            self.timestamp, self.channels, self.frame_count,
        )

    @classmethod
    def unpack(cls, buf: bytes) -> "ContainerHeader":
        if len(buf) < HEADER_SIZE:
            raise TruncatedHeader(f"container header needs {HEADER_SIZE} bytes, got {len(buf)}")
        magic, version, m, n, fps, t, ch, fc = _HEADER.unpack_from(buf)
        if magic != MAGIC:
            raise BadMagic(f"bad magic {magic!r}, expected {MAGIC!r}")
        h = cls(m, n, fps, t, ch, fc, magic=magic, version=version)
        h.validate()
        return h


@dataclass(frozen=True, eq=False)
class Frame:
    dims: FrameDims
    pixels: np.ndarray  # uint8, shape (height, width, channels)

    def __post_init__(self):
        if self.pixels.shape != self.dims.shape or self.pixels.dtype != np.uint8:
            raise ValueError(
                f"frame pixels must be uint8 {self.dims.shape}, got {self.pixels.dtype} {self.pixels.shape}"
            )

    @classmethod
    def from_bytes(cls, dims: FrameDims, buf) -> "Frame":
        arr = np.frombuffer(bytes(buf), dtype=np.uint8)
        if arr.size != dims.frame_bytes:
            raise ValueError(f"frame needs {dims.frame_bytes} bytes, got {arr.size}")
        return cls(dims, arr.reshape(dims.shape).copy())

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Frame":
        arr = np.asarray(arr, dtype=np.uint8)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        h, w, c = arr.shape
        return cls(FrameDims(h, w, c), np.ascontiguousarray(arr))

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        d = self.dims
        return f"Frame({d.height}x{d.width}x{d.channels})"


def _read_exact(source: BinaryIO, size: int) -> bytes:
    """Read up to ``size`` bytes, retrying short reads; never reads past ``size``."""
    chunks = []
    remaining = size
    while remaining:
        chunk = source.read(remaining)
        if not chunk:
            break
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def write_header(sink: BinaryIO, h: ContainerHeader) -> int:
    sink.write(h.pack())
    return HEADER_SIZE


def read_header(source: BinaryIO) -> ContainerHeader:
    return ContainerHeader.unpack(_read_exact(source, HEADER_SIZE))


def read_frame(source: BinaryIO, dims: FrameDims) -> Optional[Frame]:
    """Read one frame; ``None`` on clean end of stream."""
    size = dims.frame_bytes
    buf = _read_exact(source, size)
    if not buf:
        return None
    if len(buf) != size:
        raise TruncatedFrame(len(buf), size)
    return Frame.from_bytes(dims, buf)


def write_frame(sink: BinaryIO, f: Frame) -> int:
    sink.write(f.pixels.tobytes())
    return f.dims.frame_bytes


def iter_frames(source: BinaryIO, dims: FrameDims):
    """Yield frames until end of stream; a partial tail raises TruncatedFrame."""
    count = 0
    while True:
        try:
            f = read_frame(source, dims)
        except TruncatedFrame as e:
            raise TruncatedFrame(e.got, e.expected, count) from None
        if f is None:
            return
        count += 1
        yield f


def write_container(sink: BinaryIO, h: ContainerHeader, frames: Iterable[Frame]) -> int:
    n = write_header(sink, h)
    for f in frames:
        if f.dims != h.dims:
            raise ValueError(f"frame dims {f.dims} do not match header {h.dims}")
        n += write_frame(sink, f)
    return n


def read_container(source: BinaryIO) -> Tuple[ContainerHeader, List[Frame]]:
    h = read_header(source)
    return h, list(iter_frames(source, h.dims))


# --- binary PNM (P5 / P6, maxval 255) ---

_PNM_WS = b" \t\n\r\v\f"


def _pnm_tokens(source: BinaryIO, count: int) -> List[bytes]:
    tokens: List[bytes] = []
    tok = b""
    while True:
        c = source.read(1)
        if not c:
            raise MalformedHeader("unexpected end of PNM header")
        if c == b"#" and not tok:
            while c not in (b"\n", b"\r", b""):
                c = source.read(1)
            continue
        if c in _PNM_WS:
            if tok:
                tokens.append(tok)
                tok = b""
                if len(tokens) == count:
                    # exactly one whitespace byte separates header and raster
                    return tokens
            continue
        tok += c
        if len(tok) > 20:
            raise MalformedHeader(f"PNM header token too long: {tok[:20]!r}...")


def ingest_pnm(source: BinaryIO) -> Frame:
    magic = source.read(2)
    if len(magic) < 2 or magic[:1] != b"P":
        raise MalformedHeader(f"not a PNM stream (magic {magic!r})")
    if magic not in (b"P5", b"P6"):
        raise UnsupportedFormat(f"unsupported PNM type {magic.decode('latin-1')}; only P5/P6")
    try:
        width, height, maxval = (int(t) for t in _pnm_tokens(source, 3))
    except ValueError as e:
        if isinstance(e, PnmError):
            raise
        raise MalformedHeader(f"non-numeric PNM header field: {e}") from None
    if width < 1 or height < 1:
        raise MalformedHeader(f"PNM dims must be positive, got {width}x{height}")
    if maxval != 255:
        raise UnsupportedFormat(f"PNM maxval {maxval} unsupported; only 255")
    dims = FrameDims(height, width, 1 if magic == b"P5" else 3)
    buf = _read_exact(source, dims.frame_bytes)
    if len(buf) != dims.frame_bytes:
        raise PnmError(f"PNM raster truncated: got {len(buf)} of {dims.frame_bytes} bytes")
    return Frame.from_bytes(dims, buf)


def emit_pnm(sink: BinaryIO, f: Frame) -> int:
    d = f.dims
    kind = "P5" if d.channels == 1 else "P6"
    head = f"{kind} {d.width} {d.height} 255\n".encode("ascii")
    sink.write(head)
    sink.write(f.pixels.tobytes())
    return len(head) + d.frame_bytes
