import io
import subprocess
import sys

import numpy as np
import pytest

from chaosvid.cli import SEED_ENV, default_seed, main
from chaosvid.container import HEADER_SIZE, emit_pnm, read_header
from chaosvid.keystream import combined_bytes

from conftest import TABLE_A, TABLE_B, random_frame


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_keystream_hex_reference(capsys):
    code, out, _ = run(["keystream", "--map", "a", "--seed", "7598000000033e4a", "--count", "10",
                        "--format", "hex"], capsys)
    assert code == 0
    assert out.split() == TABLE_A.split()
    code, out, _ = run(["keystream", "--map", "b", "--seed", "0844581288ce6a18", "--count", "10"], capsys)
    assert out.split() == TABLE_B.split()


def test_keystream_raw_combined(tmp_path, capsys):
    path = tmp_path / "ks.bin"
    assert main(["keystream", "--seed", "abc", "--count", "5", "--format", "raw", "--output", str(path)]) == 0
    assert path.read_bytes() == combined_bytes(0xABC, 40).tobytes()


def test_default_seed_env(monkeypatch):
    monkeypatch.setenv(SEED_ENV, "0x1234")
    assert default_seed() == 0x1234
    monkeypatch.delenv(SEED_ENV)
    assert default_seed() > 1_600_000_000_000


def write_pnm_dir(path, frames):
    path.mkdir()
    for i, f in enumerate(frames):
        ext = ".pgm" if f.dims.channels == 1 else ".ppm"
        with open(path / f"in_{i:03d}{ext}", "wb") as fh:
            emit_pnm(fh, f)


@pytest.mark.parametrize("channels", [1, 3])
def test_pnm_dir_round_trip(tmp_path, rng, capsys, channels):
    frames = [random_frame(rng, 13, 21, channels) for _ in range(4)]
    src = tmp_path / "src"
    write_pnm_dir(src, frames)
    cont = tmp_path / "enc.cvs"
    out = tmp_path / "out"
    assert main(["encrypt", str(src), "--input", "pnm-dir", "--output", str(cont),
                 "--seed", "18f2a3b4c5d", "--fps", "29.97"]) == 0
    with open(cont, "rb") as fh:
        h = read_header(fh)
    assert (h.height, h.width, h.channels, h.frame_count, h.fps) == (13, 21, channels, 4, 29.97)
    assert main(["decrypt", str(cont), "--format", "pnm-dir", "--output", str(out)]) == 0
    originals = sorted(src.iterdir())
    decoded = sorted(out.iterdir())
    assert [p.read_bytes() for p in decoded] == [p.read_bytes() for p in originals]


def test_raw_round_trip_with_mode(tmp_path, rng):
    frames = [random_frame(rng, 5, 7) for _ in range(3)]
    raw = tmp_path / "in.raw"
    raw.write_bytes(b"".join(f.tobytes() for f in frames))
    cont = tmp_path / "c.cvs"
    back = tmp_path / "back.raw"
    assert main(["encrypt", str(raw), "--width", "7", "--height", "5", "--output", str(cont),
                 "--mode", "3l", "--seed", "99"]) == 0
    assert len(cont.read_bytes()) == HEADER_SIZE + raw.stat().st_size
    assert main(["decrypt", str(cont), "--output", str(back), "--mode", "3l"]) == 0
    assert back.read_bytes() == raw.read_bytes()


def test_selftest(capsys):
    code, out, _ = run(["selftest"], capsys)
    assert code == 0
    assert "FAIL" not in out and out.count("PASS") >= 8


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "chaosvid", "selftest"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr


def test_usage_errors_exit_2(tmp_path, capsys):
    with pytest.raises(SystemExit) as ei:
        main(["keystream", "--map", "z"])
    assert ei.value.code == 2
    assert main(["encrypt", str(tmp_path), "--output", str(tmp_path / "x")]) == 2
    assert main(["keystream", "--count", "0"]) == 2


def test_data_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.cvs"
    bad.write_bytes(b"XXXX" + bytes(40))
    assert main(["decrypt", str(bad), "--output", str(tmp_path / "o.raw")]) == 1
    assert "BadMagic" in capsys.readouterr().err
    raw = tmp_path / "short.raw"
    raw.write_bytes(bytes(10))
    assert main(["encrypt", str(raw), "--width", "2", "--height", "2", "--output",
                 str(tmp_path / "c.cvs")]) == 1


def test_io_error_exit_3(tmp_path):
    assert main(["decrypt", str(tmp_path / "missing.cvs"), "--output", str(tmp_path / "o")]) == 3


def test_analyze_kv(tmp_path, rng, capsys):
    img = tmp_path / "img.ppm"
    with open(img, "wb") as fh:
        emit_pnm(fh, random_frame(rng, 32, 32))
    code, out, _ = run(["analyze", str(img), "--format", "kv", "--seed", "5"], capsys)
    assert code == 0
    keys = {line.split(" = ")[0] for line in out.splitlines()}
    assert {"frame.entropy.c0", "frame.correlation.vertical.c1", "key-sensitivity.bit0.npcr.c2",
            "differential.plaintext-flip.npcr.c0", "differential.seed-flip.uaci.c2"} <= keys
    code, out, _ = run(["analyze", str(img), "--report", "npcr-uaci", "--other", str(img)], capsys)
    assert code == 0 and "0.0000" in out


def test_analyze_container_frame(tmp_path, rng, capsys):
    raw = tmp_path / "in.raw"
    raw.write_bytes(random_frame(rng, 16, 16).tobytes())
    cont = tmp_path / "c.cvs"
    main(["encrypt", str(raw), "--width", "16", "--height", "16", "--output", str(cont), "--seed", "1"])
    capsys.readouterr()
    code, out, _ = run(["analyze", str(cont), "--report", "entropy", "--format", "kv"], capsys)
    assert code == 0 and out.count("entropy") == 3


def test_export_bits(tmp_path):
    out = tmp_path / "bits.bin"
    assert main(["export-bits", "--bits", "1001", "--seed", "77", "--output", str(out)]) == 0
    assert out.read_bytes() == combined_bytes(0x77, 126).tobytes()
    src = tmp_path / "src.bin"
    src.write_bytes(bytes(range(20)))
    assert main(["export-bits", "--bits", "64", "--input", str(src), "--output", str(out)]) == 0
    assert out.read_bytes() == bytes(range(8))
    assert main(["export-bits", "--bits", "200", "--input", str(src), "--output", str(out)]) == 1


def test_bench_cli(capsys):
    code, out, _ = run(["bench", "--scenario", "xor", "--frames", "10", "--repeats", "2",
                        "--width", "32", "--height", "16", "--format", "kv"], capsys)
    assert code == 0
    kv = dict(line.split(" = ") for line in out.splitlines())
    assert kv["scenario"] == "xor" and int(kv["bytes_processed"]) == 10 * 32 * 16 * 3
