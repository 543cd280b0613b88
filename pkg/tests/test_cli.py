import subprocess
import sys

import pytest

from harmonia import __version__
from harmonia.cli import main
from harmonia.fileformat import parse_blocks, read_piece

from conftest import FIXTURES


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_check_clean_piece(capsys):
    code, out = run(capsys, "check", f"{FIXTURES}/diatonic_c_g.hfp")
    assert code == 0
    assert dict(parse_blocks(out))["summary"]["ok"] == "true"


def test_check_reports_parallels(tmp_path, capsys):
    f = tmp_path / "p.hfp"
    f.write_text("version 1\nevent 0 1 C3 G3 E4 C5\nevent 1 2 D3 A3 F4 D5\n")
    code, out = run(capsys, "check", str(f))
    assert code == 1
    change = dict(parse_blocks(out))["change"]
    assert "parallel-fifths" in change["violations"]


def test_analyze_success_and_failure(capsys):
    code, out = run(capsys, "analyze", f"{FIXTURES}/diatonic_c_g.hfp")
    assert code == 0
    blocks = parse_blocks(out)
    assert [b["kind"] for n, b in blocks if n == "segment"] == ["key", "modulation", "key"]
    assert blocks[-1][1]["modulations"] == "1"
    code, out = run(capsys, "analyze", f"{FIXTURES}/figure_one.hfp")
    assert code == 1
    failure = dict(parse_blocks(out))["failure"]
    assert failure["position"] == "3"
    assert "root-position I triad" in failure["reason"]


def test_modulation_verb(capsys):
    code, out = run(capsys, "modulation", f"{FIXTURES}/enharmonic_c_a.hfp", "--from", "C major",
                    "--to", "A minor", "--window", "3:10")
    assert code == 0
    mod = dict(parse_blocks(out))["modulation"]
    assert mod["enharmonic"] == "true" and mod["ok"] == "true"


def test_keys_verb(capsys):
    code, out = run(capsys, "keys", f"{FIXTURES}/diatonic_c_g.hfp", "--window", "0:3")
    assert code == 0
    keys = [b["key"] for n, b in parse_blocks(out) if n == "key"]
    assert "C major" in keys


def test_enumerate_keys(capsys):
    code, out = run(capsys, "enumerate-keys", "--tonic", "C")
    assert code == 0
    keys = [b for n, b in parse_blocks(out) if n == "key"]
    assert sorted(b["mode"] for b in keys) == ["harmonic-major", "major", "minor"]
    code, out = run(capsys, "enumerate-keys")
    assert dict(parse_blocks(out))["summary"]["keys"] == "36"


def test_harmonize_writes_piece(tmp_path, capsys):
    ex = tmp_path / "ex.txt"
    ex.write_text("key: C major\nchords: I IV V7 I\n")
    out_piece = tmp_path / "out.hfp"
    code, out = run(capsys, "harmonize", str(ex), "--best", "2", "--out", str(out_piece))
    assert code == 0
    sols = [b for n, b in parse_blocks(out) if n == "solution"]
    assert len(sols) == 2 and float(sols[0]["cost"]) <= float(sols[1]["cost"])
    assert len(read_piece(str(out_piece)).events) == 4
    assert run(capsys, "check", str(out_piece), "--key", "C major")[0] == 0


def test_harmonize_without_solution(tmp_path, capsys):
    ex = tmp_path / "ex.txt"
    ex.write_text("key: C major\nchords: I V IV\n")
    code, out = run(capsys, "harmonize", str(ex))
    assert code == 1
    assert "v-iv" in dict(parse_blocks(out))["no-solution"]["blocking"]


def test_figurate_verb(tmp_path, capsys):
    spec = tmp_path / "fig.txt"
    spec.write_text("key C major\nmeter 4 3/2\nfig 0 suspension alto\n")
    out_piece = tmp_path / "fig.hfp"
    code, out = run(capsys, "figurate", f"{FIXTURES}/missing_subdominant.hfp", "--spec", str(spec), "--out", str(out_piece))
    assert code == 0
    fig = dict(parse_blocks(out))["figuration"]
    assert fig["played_length"] == "5.5"
    assert len(read_piece(str(out_piece)).events) == 6


def test_bad_input_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.hfp"
    bad.write_text("version 1\nevent 0 1 C3 G3 C4 E4\nevent 0.5 2 G2 G3 B3 D4\n")
    code, out = run(capsys, "check", str(bad))
    assert code == 2
    assert dict(parse_blocks(out))["error"]["type"] == "ParseError"
    assert run(capsys, "check", str(tmp_path / "absent.hfp"))[0] == 2


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as info:
        main(["transpose"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_output_is_deterministic(tmp_path):
    ex = tmp_path / "ex.txt"
    ex.write_text("key: C major\nchords: I IV V7\nmodulate: G major\nchords: II6 V7 I\n")
    cmd = [sys.executable, "-m", "harmonia.cli", "harmonize", str(ex), "--best", "3"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == second and first
