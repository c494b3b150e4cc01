"""``chaosvid`` command-line front end."""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import analysis, bench as benchmod
from .cipher import decrypt_stream, encrypt_stream
from .container import (
    MAGIC,
    ContainerError,
    Frame,
    PnmError,
    emit_pnm,
    ingest_pnm,
    iter_frames,
    read_header,
    write_frame,
)
from .keystream import FrameDims, KeystreamMode, combined_bytes, keystream_bytes, words_to_bytes
from .maps import MASK64, REFERENCE_ITERATES, MapVariant, format_word, iterate, parse_word

SEED_ENV = "CHAOSVID_SEED"
EXIT_OK, EXIT_DATA, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
PNM_SUFFIXES = (".pgm", ".ppm", ".pnm")


class UsageError(Exception):
    pass


def default_seed() -> int:
    """Seed from ``$CHAOSVID_SEED`` (hex) if set, else Unix time in milliseconds."""
    env = os.environ.get(SEED_ENV)
    if env:
        return parse_word(env)
    return time.time_ns() // 1_000_000 & MASK64


def _seed_arg(text: str) -> int:
    try:
        return parse_word(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _open_out(path: Optional[str]):
    if path in (None, "-"):
        return sys.stdout.buffer
    return open(path, "wb")


def _open_in(path: str):
    if path == "-":
        return sys.stdin.buffer
    return open(path, "rb")


# --- keystream ---

def cmd_keystream(args) -> int:
    seed = default_seed() if args.seed is None else args.seed
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    if args.map == "combined":
        b = seed if args.seed_b is None else args.seed_b
        words = [x ^ y for x, y in zip(iterate(MapVariant.A, seed, args.count),
                                       iterate(MapVariant.B, b, args.count))]
    else:
        words = iterate(MapVariant.parse(args.map), seed, args.count)
    out = _open_out(args.output)
    try:
        if args.format == "hex":
            out.write("".join(format_word(w) + "\n" for w in words).encode("ascii"))
        else:
            out.write(words_to_bytes(words).tobytes())
        out.flush()
    finally:
        if out is not sys.stdout.buffer:
            out.close()
    return EXIT_OK


# --- encrypt / decrypt ---

def _pnm_files(directory: str) -> List[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise UsageError(f"{directory} is not a directory")
    files = sorted(p for p in d.iterdir() if p.suffix.lower() in PNM_SUFFIXES)
    if not files:
        raise UsageError(f"no .pgm/.ppm files in {directory}")
    return files


def _read_pnm(path: Path) -> Frame:
    with open(path, "rb") as fh:
        return ingest_pnm(fh)


def cmd_encrypt(args) -> int:
    seed = default_seed() if args.seed is None else args.seed
    mode = KeystreamMode.parse(args.mode)
    if args.output is None:
        raise UsageError("--output is required")
    if args.input == "pnm-dir":
        files = _pnm_files(args.source)
        first = _read_pnm(files[0])
        dims = first.dims

        def frames():
            yield first
            for p in files[1:]:
                yield _read_pnm(p)

        src = None
        frame_iter = frames()
    else:
        if args.width is None or args.height is None:
            raise UsageError("raw input needs --width and --height")
        dims = FrameDims(args.height, args.width, args.channels)
        src = _open_in(args.source)
        frame_iter = iter_frames(src, dims)
    try:
        with open(args.output, "wb") as out:
            n = encrypt_stream(frame_iter, dims, args.fps, seed, mode, out, args.workers)
    finally:
        if src is not None and src is not sys.stdin.buffer:
            src.close()
    print(f"encrypted {n} frames {dims.height}x{dims.width}x{dims.channels} seed={format_word(seed)}",
          file=sys.stderr)
    return EXIT_OK


def cmd_decrypt(args) -> int:
    mode = KeystreamMode.parse(args.mode)
    if args.output is None:
        raise UsageError("--output is required")
    with _open_in(args.source) as src:
        if args.format == "pnm-dir":
            outdir = Path(args.output)
            outdir.mkdir(parents=True, exist_ok=True)
            counter = [0]

            def sink(f: Frame):
                ext = ".pgm" if f.dims.channels == 1 else ".ppm"
                with open(outdir / f"frame_{counter[0]:06d}{ext}", "wb") as fh:
                    emit_pnm(fh, f)
                counter[0] += 1

            n = decrypt_stream(src, sink, mode)
        else:
            out = _open_out(args.output)
            try:
                n = decrypt_stream(src, lambda f: write_frame(out, f), mode)
            finally:
                if out is not sys.stdout.buffer:
                    out.close()
    print(f"decrypted {n} frames", file=sys.stderr)
    return EXIT_OK


# --- analyze ---

def _load_frame(path: str, index: int) -> Frame:
    """A PNM image, or frame ``index`` of a container (ciphertext, not decrypted)."""
    with open(path, "rb") as fh:
        head = fh.read(4)
        fh.seek(0)
        if head == MAGIC:
            header = read_header(fh)
            for i, f in enumerate(iter_frames(fh, header.dims)):
                if i == index:
                    return f
            raise UsageError(f"{path} has no frame {index}")
        return ingest_pnm(fh)


def cmd_analyze(args) -> int:
    frame = _load_frame(args.file, args.frame)
    mode = KeystreamMode.parse(args.mode)
    seed = default_seed() if args.seed is None else args.seed
    report = args.report
    results = []
    if report in ("all", "entropy", "correlation", "histogram"):
        r = analysis.analyze_frame(frame, label="frame")
        if report == "entropy":
            r.histogram = r.correlation = None
        elif report == "correlation":
            r.entropy = r.histogram = None
        elif report == "histogram":
            r.entropy = r.correlation = None
        results.append(r)
    if report == "npcr-uaci":
        if args.other is None:
            raise UsageError("npcr-uaci needs --other")
        results.append(analysis.compare_frames(frame, _load_frame(args.other, args.frame), label="pair"))
    if report in ("key-sensitivity", "all"):
        results.append(analysis.key_sensitivity_test(frame, seed, args.bit, mode))
    if report in ("differential", "all"):
        d = analysis.differential_test(frame, seed, mode)
        results += [d.plaintext_flip, d.seed_flip]
    for r in results:
        if r.label.startswith(("key-sens", "differential")):
            r.difference = None
        sys.stdout.write(r.to_kv() if args.format == "kv" else r.to_text())
    return EXIT_OK


# --- export-bits ---

def cmd_export_bits(args) -> int:
    if args.bits < 1:
        raise UsageError("--bits must be >= 1")
    nbytes = -(-args.bits // 8)
    if args.input is not None:
        with _open_in(args.input) as fh:
            data = fh.read()
    else:
        seed = default_seed() if args.seed is None else args.seed
        mode = KeystreamMode.parse(args.mode)
        if mode is KeystreamMode.ONLY_A:
            data = keystream_bytes(MapVariant.A, seed, nbytes)
        elif mode is KeystreamMode.ONLY_B:
            data = keystream_bytes(MapVariant.B, seed, nbytes)
        else:
            data = combined_bytes(seed, nbytes)
    out = _open_out(args.output)
    try:
        analysis.export_bitstream(data, out, args.bits)
        out.flush()
    finally:
        if out is not sys.stdout.buffer:
            out.close()
    return EXIT_OK


# --- bench ---

def cmd_bench(args) -> int:
    dims = FrameDims(args.height, args.width, args.channels)
    rep = benchmod.bench(
        benchmod.Scenario(args.scenario), dims, args.frames, args.repeats,
        fps=args.fps, mode=KeystreamMode.parse(args.mode), workers=args.workers,
    )
    sys.stdout.write(rep.to_kv() if args.format == "kv" else rep.to_text())
    return EXIT_OK


# --- selftest ---

def _selftest_checks():
    from .container import ContainerHeader
    from .maps import affine_step, rotate_step
    import io

    for variant, ref in REFERENCE_ITERATES.items():
        yield f"reference iterates map {variant.value}", tuple(iterate(variant, ref[0], len(ref))) == ref
    yield "rotate by zero is identity", rotate_step(0x40) == 0x40
    yield "affine step wraps", affine_step(MASK64) == 1 and affine_step(0) == 2
    ks = keystream_bytes(MapVariant.A, 0x7598000000033E4A, 8)
    yield "little-endian byte slicing", ks.tobytes() == bytes.fromhex("4a3e030000009875")
    yield "prefix stability", np.array_equal(combined_bytes(99, 37), combined_bytes(99, 100)[:37])
    h = ContainerHeader(360, 640, 29.97, 0x0123456789ABCDEF, 3, 7)
    yield "header round trip", ContainerHeader.unpack(h.pack()) == h
    rng = np.random.default_rng(0)
    ok = True
    for mode in KeystreamMode:
        dims = FrameDims(int(rng.integers(1, 20)), int(rng.integers(1, 20)), 3)
        frames = [Frame(dims, rng.integers(0, 256, dims.shape, dtype=np.uint8)) for _ in range(3)]
        buf = io.BytesIO()
        encrypt_stream(frames, dims, 25.0, int(rng.integers(0, 2**63)), mode, buf)
        buf.seek(0)
        got: List[Frame] = []
        decrypt_stream(buf, got.append, mode)
        ok &= got == frames
    yield "encrypt/decrypt round trip", ok


def cmd_selftest(args) -> int:
    failed = 0
    for name, ok in _selftest_checks():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failed += not ok
    return EXIT_OK if not failed else EXIT_DATA


# --- parser ---

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chaosvid", description="Chaotic-map XOR video frame cipher.")
    sub = p.add_subparsers(dest="command", required=True)
    modes = [m.value for m in KeystreamMode]
    seed_help = f"64-bit hex seed (default: ${SEED_ENV} or current Unix time in ms)"

    k = sub.add_parser("keystream", help="dump chaotic words or keystream bytes")
    k.add_argument("--map", choices=["a", "b", "combined"], default="combined")
    k.add_argument("--seed", type=_seed_arg, help=seed_help)
    k.add_argument("--seed-b", type=_seed_arg, help="independent seed for map b (combined only)")
    k.add_argument("--count", type=int, default=10, help="number of 64-bit words")
    k.add_argument("--format", choices=["hex", "raw"], default="hex")
    k.add_argument("-o", "--output", help="output file (default stdout)")
    k.set_defaults(func=cmd_keystream)

    e = sub.add_parser("encrypt", help="encrypt raw frames or a PNM directory into a container")
    e.add_argument("source", help="raw frame file ('-' for stdin) or directory of PNM frames")
    e.add_argument("--input", choices=["raw", "pnm-dir"], default="raw")
    e.add_argument("-o", "--output", help="container file to write")
    e.add_argument("--width", type=int)
    e.add_argument("--height", type=int)
    e.add_argument("--channels", type=int, choices=[1, 3], default=3)
    e.add_argument("--fps", type=float, default=30.0)
    e.add_argument("--seed", type=_seed_arg, help=seed_help)
    e.add_argument("--mode", choices=modes, default="combined")
    e.add_argument("--workers", type=int, default=1, help="threads for per-frame XOR")
    e.set_defaults(func=cmd_encrypt)

    d = sub.add_parser("decrypt", help="decrypt a container to raw frames or a PNM directory")
    d.add_argument("source", help="container file ('-' for stdin)")
    d.add_argument("--format", choices=["raw", "pnm-dir"], default="raw")
    d.add_argument("-o", "--output", help="raw output file ('-' for stdout) or PNM directory")
    d.add_argument("--mode", choices=modes, default="combined")
    d.set_defaults(func=cmd_decrypt)

    a = sub.add_parser("analyze", help="statistical metrics for a PNM image or container frame")
    a.add_argument("file")
    a.add_argument("--report", default="all",
                   choices=["all", "entropy", "correlation", "histogram", "npcr-uaci",
                            "key-sensitivity", "differential"])
    a.add_argument("--other", help="second image for npcr-uaci")
    a.add_argument("--frame", type=int, default=0, help="frame index when FILE is a container")
    a.add_argument("--seed", type=_seed_arg, help=seed_help)
    a.add_argument("--bit", type=int, default=0, choices=range(64), metavar="0..63")
    a.add_argument("--mode", choices=modes, default="combined")
    a.add_argument("--format", choices=["text", "kv"], default="text")
    a.set_defaults(func=cmd_analyze)

    x = sub.add_parser("export-bits", help="write a raw bitstream for external randomness suites")
    x.add_argument("--bits", type=int, required=True)
    x.add_argument("--input", help="export bytes of this file instead of a fresh keystream")
    x.add_argument("--seed", type=_seed_arg, help=seed_help)
    x.add_argument("--mode", choices=modes, default="combined")
    x.add_argument("-o", "--output", help="output file (default stdout)")
    x.set_defaults(func=cmd_export_bits)

    b = sub.add_parser("bench", help="time the full pipeline or the XOR step alone")
    b.add_argument("--scenario", choices=["full", "xor"], default="xor")
    b.add_argument("--frames", type=int, default=600)
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--width", type=int, default=640)
    b.add_argument("--height", type=int, default=360)
    b.add_argument("--channels", type=int, choices=[1, 3], default=3)
    b.add_argument("--fps", type=float, default=20.0)
    b.add_argument("--mode", choices=modes, default="combined")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--format", choices=["text", "kv"], default="text")
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("selftest", help="check reference iterates and core invariants")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"chaosvid: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ContainerError, PnmError, ValueError) as e:
        print(f"chaosvid: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"chaosvid: I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
