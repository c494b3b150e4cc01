"""Discrete-space chaotic keystream cipher for raw video frames."""

from .cipher import StreamSession, decrypt_stream, encrypt_stream, xor_frame
from .container import ContainerHeader, Frame, emit_pnm, ingest_pnm, read_header, write_header
from .keystream import (
    EncryptionMatrix,
    FrameDims,
    KeystreamMode,
    KeystreamPlane,
    build_matrix,
    combine,
    expand_to_channels,
    generate_plane,
)
from .maps import MapVariant, affine_step, iterate, poincare_points, rotate_step

__all__ = [
    "ContainerHeader", "EncryptionMatrix", "Frame", "FrameDims", "KeystreamMode",
    "KeystreamPlane", "MapVariant", "StreamSession", "affine_step", "build_matrix",
    "combine", "decrypt_stream", "emit_pnm", "encrypt_stream", "expand_to_channels",
    "generate_plane", "ingest_pnm", "iterate", "poincare_points", "read_header",
    "rotate_step", "write_header", "xor_frame",
]
