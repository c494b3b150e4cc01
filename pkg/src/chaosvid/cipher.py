"""XOR frame cipher: one encryption matrix per stream, applied to every frame."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import BinaryIO, Callable, Iterable, Iterator, List, Optional, Sequence

import numpy as np

from .container import (
    HEADER_SIZE,
    ContainerError,
    ContainerHeader,
    Frame,
    TruncatedFrame,
    iter_frames,
    read_header,
    write_frame,
    write_header,
)
from .keystream import EncryptionMatrix, FrameDims, KeystreamMode, build_matrix

# byte offset of frame_count inside the header, patched after streaming writes
_FRAME_COUNT_OFFSET = HEADER_SIZE - 8


class FrameMismatch(ValueError):
    def __init__(self, index: int, got: FrameDims, expected: FrameDims):
        super().__init__(f"frame {index} has dims {got}, stream expects {expected}")
        self.index = index


def xor_frame(f: Frame, mat: EncryptionMatrix, out: Optional[np.ndarray] = None) -> Frame:
    if f.dims != mat.dims:
        raise ValueError(f"frame dims {f.dims} do not match matrix {mat.dims}")
    return Frame(f.dims, np.bitwise_xor(f.pixels, mat.data, out=out))


def xor_frames(frames: Iterable[Frame], mat: EncryptionMatrix, workers: int = 1) -> Iterator[Frame]:
    """XOR many frames, optionally on a thread pool; output order matches input."""
    if workers <= 1:
        for f in frames:
            yield xor_frame(f, mat)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(lambda f: xor_frame(f, mat), frames)


@dataclass
class StreamSession:
    header: ContainerHeader
    matrix: EncryptionMatrix
    frames_processed: int = 0

    def __post_init__(self):
        if self.matrix.dims != self.header.dims:
            raise ValueError(f"matrix dims {self.matrix.dims} disagree with header {self.header.dims}")

    @classmethod
    def open(cls, header: ContainerHeader, mode: KeystreamMode = KeystreamMode.COMBINED) -> "StreamSession":
        return cls(header, build_matrix(mode, header.dims, header.timestamp))

    def apply(self, f: Frame) -> Frame:
        if f.dims != self.header.dims:
            raise FrameMismatch(self.frames_processed, f.dims, self.header.dims)
        out = xor_frame(f, self.matrix)
        self.frames_processed += 1
        return out


def encrypt_stream(
    frames: Iterable[Frame],
    dims: FrameDims,
    fps: float,
    seed: int,
    mode: KeystreamMode,
    sink: BinaryIO,
    workers: int = 1,
) -> int:
    """Write a container for ``frames`` to ``sink``; returns the frame count.

    ``frame_count`` in the header is exact when ``frames`` is sized or the
    sink is seekable, otherwise it is left at 0 (streaming).
    """
    declared = len(frames) if isinstance(frames, Sequence) else 0
    header = ContainerHeader(dims.height, dims.width, fps, seed, dims.channels, declared)
    session = StreamSession.open(header, mode)
    start = sink.tell() if _seekable(sink) else None
    write_header(sink, header)

    def checked():
        for i, f in enumerate(frames):
            if f.dims != dims:
                raise FrameMismatch(i, f.dims, dims)
            yield f

    count = 0
    for enc in xor_frames(checked(), session.matrix, workers):
        write_frame(sink, enc)
        count += 1
    session.frames_processed = count

    if count != declared and start is not None:
        end = sink.tell()
        sink.seek(start + _FRAME_COUNT_OFFSET)
        sink.write(count.to_bytes(8, "little"))
        sink.seek(end)
    return count


def decrypt_stream(
    container: BinaryIO,
    sink: Callable[[Frame], object],
    mode: KeystreamMode = KeystreamMode.COMBINED,
) -> int:
    """Decrypt every frame of ``container`` into ``sink``; returns the frame count.

    The keystream mode is not recorded in the container and must match the
    one used to encrypt.
    """
    header = read_header(container)
    session = StreamSession.open(header, mode)
    for f in iter_frames(container, header.dims):
        sink(session.apply(f))
    count = session.frames_processed
    if header.frame_count and count != header.frame_count:
        if count < header.frame_count:
            raise TruncatedFrame(0, header.dims.frame_bytes, count)
        raise ContainerError(f"container holds {count} frames, header declares {header.frame_count}")
    return count


def decrypt_frames(container: BinaryIO, mode: KeystreamMode = KeystreamMode.COMBINED) -> List[Frame]:
    frames: List[Frame] = []
    decrypt_stream(container, frames.append, mode)
    return frames


def _seekable(f) -> bool:
    try:
        return f.seekable()
    except AttributeError:
        return False
