import json
import subprocess
import sys

import pytest

from behavtypes import fixtures as fx
from behavtypes.cli import main
from behavtypes.modelio import load

F = fx.fixture_dir()


def call(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_equal_self(capsys):
    code, out, _ = call(capsys, "equal", F / "fig3_caller.btype", F / "fig3_caller.btype")
    assert code == 0 and out.startswith("equal")


def test_equal_different(capsys):
    code, out, _ = call(capsys, "equal", F / "fig3_caller.btype", F / "fig3_callee.btype")
    assert code == 1 and "oldPrtcl" in out


def test_refine_on_new_protocol(capsys):
    args = ("refine", F / "fig3_caller.btype", F / "fig3_callee.btype")
    assert call(capsys, *args, "--labels", "newPrtcl")[0] == 0
    assert call(capsys, *args)[0] == 1


def test_synth_prints_rule(capsys):
    code, out, _ = call(capsys, "synth", F / "fig3.bsys")
    assert code == 0 and "A: oldPrtcl < newPrtcl" in out


def test_deadlock_prints_state_and_trace(capsys):
    code, out, _ = call(capsys, "deadlock", F / "booking_two_flights.bsys")
    assert code == 1
    assert "flight_AB=full" in out and "flight_BC=full" in out and "trace:" in out


def test_compat_json_parses_back(capsys):
    code, out, _ = call(capsys, "compat", "--json", F / "fig3.bsys")
    assert code == 1
    verdict = load(out).payload
    assert len(verdict.incompatibilities) == 1


def test_compat_threads(capsys):
    code, out, _ = call(capsys, "compat", "--threads", 2, F / "fig3.bsys", F / "booking_two_flights.bsys")
    assert code == 1 and out.count("== ") == 2


def test_validate_reports_bad_file(tmp_path, capsys):
    doc = json.loads((F / "fig3_caller.btype").read_text())
    doc["edges"][0]["to"] = "l9"
    path = tmp_path / "bad.btype"
    path.write_text(json.dumps(doc))
    code, out, _ = call(capsys, "validate", path)
    assert code == 1 and "edge destination l9 not in locations" in out


def test_normalize_writes_file(tmp_path, capsys):
    out_path = tmp_path / "n.btype"
    assert call(capsys, "normalize", F / "seat_reservation.btype", "-o", out_path)[0] == 0
    assert load(out_path.read_bytes()).payload.initial == "q0"


def test_minimize_complete(capsys):
    code, out, _ = call(capsys, "minimize", "--complete", F / "fig3_callee.btype")
    bt = load(out).payload
    assert code == 0 and bt.error_location is not None and len(bt.locations) == 3


def test_simulate_and_monitor(tmp_path, capsys):
    log = tmp_path / "run.jsonl"
    assert call(capsys, "simulate", F / "booking.osys", "--seed", 1, "--steps", 100,
                "--log", log)[0] == 0
    code, out, _ = call(capsys, "monitor", log, "core/mw1", F / "middleware_outgoing.btype")
    assert code == 0 and out.startswith("conformant")


def test_monitor_violation(tmp_path, capsys):
    log = tmp_path / "bad.jsonl"
    call(capsys, "simulate", F / "middleware_misordered.osys",
         "--script", F / "middleware_misordered.bscript", "--log", log)
    code, out, _ = call(capsys, "monitor", log, "core/mw", F / "middleware_outgoing.btype")
    assert code == 1 and "call pay" in out


def test_exhaustive(capsys):
    code, out, _ = call(capsys, "simulate", F / "interleaving.osys", "--exhaustive")
    assert code == 0 and "2 maximal trace(s)" in out


@pytest.mark.parametrize("argv", [
    ["equal", "missing.btype", "missing.btype"],
    ["deadlock", str(F / "fig3_caller.btype")],
    ["no-such-command"],
])
def test_usage_and_io_errors_exit_2(argv, capsys):
    assert call(capsys, *argv)[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "behavtypes", "demo", "booking"],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0 and "deadlock" in proc.stdout
