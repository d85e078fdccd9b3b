import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from amrcheck.cli import main
from amrcheck.syntax import parse_fsm_dot, parse_local

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def files(tmp_path):
    for f in FIXTURES.iterdir():
        shutil.copy(f, tmp_path / f.name)
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_subtype_proven(files, capsys):
    code, out, _ = run(capsys, "subtype", "--sub", files / "kernel_opt.mpst", "--sup", files / "kernel_proj.mpst", "--visits", 2)
    assert code == 0
    assert out.startswith("Proven")


def test_subtype_json(files, capsys):
    code, out, _ = run(
        capsys, "subtype", "--sub", files / "forget.mpst", "--sup", files / "forget_sup.mpst", "--visits", 2, "--json"
    )
    data = json.loads(out)
    assert code == 1
    assert data["verdict"] != "Proven"
    assert set(data) == {"verdict", "reason", "nodes_explored", "elapsed_seconds"}


def test_subtype_trace_and_dot_inputs(files, capsys):
    (files / "proj.dot").write_text(
        'digraph { 0 -> 1 [label="s!ready"]; 1 -> 2 [label="s?copy"]; '
        '2 -> 3 [label="t?ready"]; 3 -> 0 [label="t!copy"]; }'
    )
    code, out, _ = run(
        capsys, "subtype", "--sub", files / "kernel_opt.mpst", "--sup", files / "proj.dot", "--visits", 2, "--json", "--trace"
    )
    data = json.loads(out)
    assert code == 0 and data["trace"]["rule"] == "oo"
    code, out, _ = run(capsys, "subtype", "--sub", files / "kernel_opt.mpst", "--sup", files / "proj.dot", "--trace")
    assert "asm (1, 1)" in out


def test_subtype_chain(files, capsys):
    sup = files / "kernel_proj.mpst"
    code, _, _ = run(capsys, "subtype", "--sub", files / "kernel_opt.mpst", "--sup", sup, "--visits", 2, "--chain", sup)
    assert code == 0


def test_coercions(files, capsys):
    (files / "nat.mpst").write_text("p!a(nat) . end")
    (files / "int.mpst").write_text("p!a(int) . end")
    args = ["--sub", files / "nat.mpst", "--sup", files / "int.mpst"]
    assert run(capsys, "sync-subtype", *args)[0] == 1
    assert run(capsys, "sync-subtype", *args, "--coerce", "nat:int")[0] == 0
    assert run(capsys, "subtype", *args, "--coerce", "nat:int")[0] == 0
    assert run(capsys, "subtype", *args, "--coerce", "natint")[0] == 2


def test_input_errors_exit_two(files, capsys):
    (files / "broken.mpst").write_text("rec x .\n  x")
    code, _, err = run(capsys, "subtype", "--sub", files / "broken.mpst", "--sup", files / "forget.mpst")
    assert code == 2 and "2:3" in err
    code, _, err = run(capsys, "subtype", "--sub", files / "missing.mpst", "--sup", files / "forget.mpst")
    assert code == 2
    code, _, _ = run(capsys, "subtype", "--sub", files / "forget.mpst", "--sup", files / "forget.mpst", "--visits", 0)
    assert code == 2
    with pytest.raises(SystemExit) as info:
        main(["subtype"])
    assert info.value.code == 2


def test_project_and_fsm(files, capsys):
    code, out, _ = run(capsys, "project", files / "double_buffering.scr", "--role", "k")
    assert code == 0
    assert parse_local(out) is not None
    out_file = files / "k.dot"
    code, _, _ = run(capsys, "project", files / "double_buffering.scr", "--role", "k", "--dot", "-o", out_file)
    assert parse_fsm_dot(out_file.read_text()).size == 4
    code, out, _ = run(capsys, "fsm", files / "kernel_opt.mpst")
    assert code == 0 and parse_fsm_dot(out).size == 5
    assert run(capsys, "project", files / "double_buffering.scr", "--role", "zz")[0] == 2


def test_project_unmergeable(files, capsys):
    (files / "bad.scr").write_text(
        "global protocol Bad(role a, role b, role c) { choice at a { x() from a to b; m() from a to c; } "
        "or { y() from a to b; n() from a to c; } }"
    )
    code, _, err = run(capsys, "project", files / "bad.scr", "--role", "c")
    assert code == 2 and "UnmergeableBranches" in err


def test_simulate(files, capsys):
    code, out, _ = run(capsys, "simulate", files / "reorder.scr", "--bound", 2)
    assert code == 0 and out.startswith("DeadlockFree")
    code, out, _ = run(capsys, "simulate", files / "reorder.scr", "--replace", f"p={files / 'p_bad.mpst'}", "--bound", 2, "--json")
    data = json.loads(out)
    assert code == 1 and data["verdict"] == "Deadlock" and data["trace"] == []
    assert run(capsys, "simulate", files / "reorder.scr", "--replace", "p")[0] == 2
    code, out, _ = run(capsys, "simulate", files / "double_buffering.scr", "--replace", f"k={files / 'kernel_opt.mpst'}")
    assert code == 0


def test_bench_ring_csv(files, capsys):
    out_file = files / "ring.csv"
    code, _, _ = run(capsys, "bench", "--family", "ring", "--param-range", "2..30", "--runs", 5, "-o", out_file)
    lines = out_file.read_text().splitlines()
    assert code == 0
    assert lines[0] == "family,parameter,verdict,mean_seconds,runs"
    assert len(lines) == 16
    assert all(line.split(",")[2] == "Proven" for line in lines[1:])


def test_module_entry_point(files):
    proc = subprocess.run(
        [sys.executable, "-m", "amrcheck", "subtype", "--sub", str(files / "kernel_opt.mpst"),
         "--sup", str(files / "kernel_proj.mpst"), "--visits", "2", "--json"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["verdict"] == "Proven"
