import subprocess
import sys

import pytest

from flowdecomp.channel import random_battery, save_channel
from flowdecomp.cli import main

from helpers import DIAMOND


@pytest.fixture
def diamond_file(tmp_path):
    p = tmp_path / "diamond.flows"
    p.write_text(DIAMOND)
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate(capsys, diamond_file, tmp_path):
    code, out, _ = run(capsys, "validate", diamond_file)
    assert code == 0 and out.startswith("ok: 2 flows")
    bad = tmp_path / "bad.flows"
    bad.write_text("flow 1 -> 3 : {2} k=1 ; {1} k=inf\n")
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 1 and err.startswith("error:")
    code, _, err = run(capsys, "validate", str(tmp_path / "missing"))
    assert code == 1


def test_derive_and_region(capsys, diamond_file):
    code, out, _ = run(capsys, "derive", diamond_file, "-d", "5", "-L", "({3,4},{},{2},{1})")
    assert code == 0
    assert "g(2,5) = " in out and out.rstrip().endswith("complete: yes")
    code, out, _ = run(capsys, "region", diamond_file, "-d", "5")
    assert code == 0 and out.count("R{") == 3
    code, out, _ = run(capsys, "region", diamond_file, "-d", "5", "-L", "({3,4},{},{2},{1})")
    assert code == 0 and "R{1,2}" in out


def test_shift(capsys, diamond_file):
    code, out, _ = run(capsys, "shift", diamond_file, "-d", "5", "-L", "({3,4},{},{2},{1})", "-S", "{2}")
    assert code == 0 and out.strip() == "L d=5 : ({3},{4},{2},{1})"
    code, again, _ = run(capsys, "shift", diamond_file, "-d", "5", "-L", "({3},{},{},{1,4},{2})", "-S", "{2}")
    assert code == 0 and again.strip() == "L d=5 : ({3},{},{},{1,4},{2})"
    code, _, _ = run(capsys, "shift", diamond_file, "-d", "5", "-L", "({1,2,3,4})", "-S", "{1}")
    assert code == 1


def test_cover_with_channel_file(capsys, diamond_file, tmp_path):
    (ch, dist), = random_battery((1, 2, 3, 4), (5,), 1, seed=0)
    path = tmp_path / "ch.json"
    save_channel(path, ch, dist)
    code, out, _ = run(capsys, "cover", diamond_file, "-d", "5", "--channel", str(path), "--rates", "1=0,2=0")
    assert code == 0 and "terminal" in out
    code, _, err = run(capsys, "cover", diamond_file, "-d", "5", "--channel", str(path), "--rates", "1=9,2=9")
    assert code == 1 and "outer bound" in err


def test_verify_is_byte_identical(capsys, diamond_file):
    argv = ("verify", diamond_file, "-d", "5", "--samples", "20", "--seed", "7")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    lines = a.splitlines()
    assert lines[0] == "sample_index,R1,R2,covered,covering_scheme,steps"
    assert len(lines) == 22 and lines[-1] == "# coverage=1.000000 (20/20)"


def test_verify_edge_cases(capsys, diamond_file):
    code, out, _ = run(capsys, "verify", diamond_file, "-d", "5", "--samples", "0")
    assert code == 0 and "coverage=nan" in out
    code, out, _ = run(capsys, "verify", diamond_file, "-d", "5", "--samples", "5", "--alpha", "1.01")
    assert code == 0 and out.count(",exterior,") == 5
    code, _, _ = run(capsys, "verify", diamond_file, "-d", "5", "--samples", "-1")
    assert code == 2


def test_usage_errors(capsys, diamond_file):
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "fixtures", "--run", "nope")[0] == 2
    assert run(capsys, "verify", diamond_file, "-d", "5", "--seed", "-3")[0] == 2
    assert run(capsys, "cover", diamond_file, "-d", "5", "--rates", "x")[0] == 2


def test_fixtures_verb(capsys):
    code, out, _ = run(capsys, "fixtures")
    assert code == 0 and out.splitlines()[0].startswith("sfd-i\t")
    code, out, _ = run(capsys, "fixtures", "--run", "diamond-s1")
    assert code == 0 and out.rstrip().endswith("1/1 fixtures passed")


def test_all_fixtures_pass_from_the_command_line(capsys):
    code, out, _ = run(capsys, "fixtures", "--run", "all")
    assert code == 0, out.splitlines()[-1]


def test_module_entry_point(diamond_file):
    r = subprocess.run([sys.executable, "-m", "flowdecomp", "validate", diamond_file],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("ok:")
