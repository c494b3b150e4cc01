import hashlib
import io

import numpy as np
import pytest

from chaosvid.analysis import DIRECTIONS, correlation
from chaosvid.bench import synthetic_frame
from chaosvid.cipher import (
    FrameMismatch,
    StreamSession,
    decrypt_frames,
    decrypt_stream,
    encrypt_stream,
    xor_frame,
)
from chaosvid.container import HEADER_SIZE, ContainerHeader, Frame, TruncatedFrame, read_header
from chaosvid.keystream import EncryptionMatrix, FrameDims, KeystreamMode, build_matrix

from conftest import random_frame

COMBINED = KeystreamMode.COMBINED


def encrypt_bytes(frames, dims, seed, mode=COMBINED, fps=25.0):
    buf = io.BytesIO()
    encrypt_stream(frames, dims, fps, seed, mode, buf)
    return buf.getvalue()


def test_xor_frame_identities(rng):
    d = FrameDims(4, 6, 3)
    mat = build_matrix(COMBINED, d, 1234)
    zero = Frame(d, np.zeros(d.shape, np.uint8))
    assert xor_frame(zero, mat).tobytes() == mat.tobytes()
    f = random_frame(rng, 4, 6)
    assert xor_frame(xor_frame(f, mat), mat) == f
    same = Frame(d, mat.data.copy())
    assert not xor_frame(same, mat).pixels.any()


def test_xor_frame_dim_mismatch(rng):
    mat = build_matrix(COMBINED, FrameDims(4, 4, 3), 1)
    with pytest.raises(ValueError):
        xor_frame(random_frame(rng, 4, 4, 1), mat)


def test_involution_exhaustive_single_pixel():
    values = np.arange(256, dtype=np.uint8)
    frames = np.repeat(values[:, None], 256, axis=1)[:, :, None]
    pads = np.repeat(values[None, :], 256, axis=0)[:, :, None]
    d = FrameDims(256, 256, 1)
    mat = EncryptionMatrix(d, pads.copy())
    f = Frame(d, frames.copy())
    assert xor_frame(xor_frame(f, mat), mat) == f
    for v in range(256):
        one = Frame(FrameDims(1, 1, 1), np.array([[[v]]], np.uint8))
        m1 = build_matrix(COMBINED, one.dims, 0x5555 + v)
        assert xor_frame(xor_frame(one, m1), m1) == one


def test_zero_frames_is_header_only():
    d = FrameDims(2, 2, 3)
    data = encrypt_bytes([], d, 7)
    assert len(data) == HEADER_SIZE
    assert decrypt_frames(io.BytesIO(data)) == []


def test_zero_frame_payload_is_matrix():
    d = FrameDims(2, 2, 3)
    t = 0xABCDEF
    data = encrypt_bytes([Frame(d, np.zeros(d.shape, np.uint8))], d, t)
    assert data[HEADER_SIZE:] == build_matrix(COMBINED, d, t).tobytes()


def test_round_trip_random(rng):
    for _ in range(100):
        d = FrameDims(int(rng.integers(1, 24)), int(rng.integers(1, 24)), int(rng.choice([1, 3])))
        mode = COMBINED if d.channels == 1 else KeystreamMode(rng.choice([m.value for m in KeystreamMode]))
        frames = [random_frame(rng, d.height, d.width, d.channels) for _ in range(int(rng.integers(0, 4)))]
        data = encrypt_bytes(frames, d, int(rng.integers(0, 2**63)) * 2 + 1, mode)
        assert decrypt_frames(io.BytesIO(data), mode) == frames


def test_format_preservation_and_determinism(rng):
    d = FrameDims(7, 9, 3)
    frames = [random_frame(rng, 7, 9) for _ in range(3)]
    a = encrypt_bytes(frames, d, 99)
    assert len(a) - HEADER_SIZE == sum(f.dims.frame_bytes for f in frames)
    assert a == encrypt_bytes(frames, d, 99)


def test_keystream_reuse_is_observable(rng):
    d = FrameDims(8, 8, 3)
    p1, p2 = random_frame(rng, 8, 8), random_frame(rng, 8, 8)
    data = encrypt_bytes([p1, p2], d, 31337)
    n = d.frame_bytes
    c1 = np.frombuffer(data[HEADER_SIZE:HEADER_SIZE + n], np.uint8)
    c2 = np.frombuffer(data[HEADER_SIZE + n:], np.uint8)
    assert np.array_equal(c1 ^ c2, np.frombuffer(p1.tobytes(), np.uint8) ^ np.frombuffer(p2.tobytes(), np.uint8))


def test_mismatched_frame_aborts_with_index(rng):
    d = FrameDims(4, 4, 3)
    frames = [random_frame(rng, 4, 4), random_frame(rng, 4, 4), random_frame(rng, 4, 5)]
    with pytest.raises(FrameMismatch) as ei:
        encrypt_bytes(frames, d, 1)
    assert ei.value.index == 2


def test_truncated_container_reports_recovered(rng):
    d = FrameDims(3, 3, 3)
    frames = [random_frame(rng, 3, 3) for _ in range(4)]
    data = encrypt_bytes(frames, d, 5)
    got = []
    with pytest.raises(TruncatedFrame) as ei:
        decrypt_stream(io.BytesIO(data[:-5]), got.append)
    assert ei.value.frames_recovered == 3
    assert got == frames[:3]


def test_missing_whole_frames_detected_by_count(rng):
    d = FrameDims(3, 3, 3)
    frames = [random_frame(rng, 3, 3) for _ in range(4)]
    data = encrypt_bytes(frames, d, 5)
    with pytest.raises(TruncatedFrame) as ei:
        decrypt_stream(io.BytesIO(data[:HEADER_SIZE + 2 * d.frame_bytes]), lambda f: None)
    assert ei.value.frames_recovered == 2


def test_frame_count_patched_for_unsized_input(rng):
    d = FrameDims(2, 3, 1)
    frames = [random_frame(rng, 2, 3, 1) for _ in range(5)]
    buf = io.BytesIO()
    assert encrypt_stream(iter(frames), d, 10.0, 3, COMBINED, buf) == 5
    buf.seek(0)
    assert read_header(buf).frame_count == 5


class Unseekable:
    def __init__(self):
        self.buf = io.BytesIO()

    def write(self, b):
        return self.buf.write(b)

    def seekable(self):
        return False


def test_streaming_sink_leaves_count_unknown(rng):
    d = FrameDims(2, 3, 1)
    frames = [random_frame(rng, 2, 3, 1) for _ in range(2)]
    sink = Unseekable()
    encrypt_stream(iter(frames), d, 10.0, 3, COMBINED, sink)
    sink.buf.seek(0)
    assert read_header(sink.buf).frame_count == 0
    sink.buf.seek(0)
    assert decrypt_frames(sink.buf) == frames


def test_parallel_xor_preserves_order(rng):
    d = FrameDims(16, 16, 3)
    frames = [random_frame(rng, 16, 16) for _ in range(12)]
    serial = io.BytesIO()
    parallel = io.BytesIO()
    encrypt_stream(frames, d, 30.0, 8, COMBINED, serial, workers=1)
    encrypt_stream(frames, d, 30.0, 8, COMBINED, parallel, workers=4)
    assert serial.getvalue() == parallel.getvalue()


def test_session_rejects_mismatched_matrix():
    h = ContainerHeader(4, 4, 25.0, 1, 3)
    with pytest.raises(ValueError):
        StreamSession(h, build_matrix(COMBINED, FrameDims(4, 4, 1), 1))
    s = StreamSession.open(h)
    assert s.matrix == build_matrix(COMBINED, h.dims, 1)


def test_flipped_seed_bit_gives_unrelated_plaintext(astronaut):
    d = astronaut.dims
    data = bytearray(encrypt_bytes([astronaut], d, 0x0000018F2A3B4C5D))
    data[21] ^= 0x04  # bit 2 of the timestamp field
    (wrong,) = decrypt_frames(io.BytesIO(bytes(data)))
    for ch in range(3):
        a = astronaut.pixels[:, :, ch].ravel().astype(float)
        b = wrong.pixels[:, :, ch].ravel().astype(float)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.01
        for direction in DIRECTIONS:
            assert abs(correlation(wrong.pixels[:, :, ch], direction)) < 0.01


def test_360p_20fps_30s_stream():
    d = FrameDims(360, 640, 3)
    count = 600
    base = [synthetic_frame(d, i) for i in range(3)]

    class HashSink:
        def __init__(self):
            self.h = hashlib.sha256()
            self.n = 0

        def write(self, b):
            self.h.update(b)
            self.n += len(memoryview(b).cast("B"))

        def seekable(self):
            return False

    sink = HashSink()
    n = encrypt_stream((base[i % 3] for i in range(count)), d, 20.0, 1_700_000_000_000, COMBINED, sink)
    assert n == count
    assert sink.n == HEADER_SIZE + count * d.frame_bytes
