import json

import pytest

from spinfact.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from spinfact.vqe import synth_integrals, write_fcidump


def test_algebra_report(capsys):
    assert main(["algebra", "--family", "s4_singlet"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "dim=28 center=4 derived=24 ideals=3x8"


def test_unknown_family_is_usage_error(capsys):
    assert main(["algebra", "--family", "nope"]) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_missing_arguments_exit_2():
    assert main(["factorize"]) == EXIT_USAGE
    assert main(["bogus"]) == EXIT_USAGE


def test_factorize_then_schedule_is_deterministic(tmp_path, capsys):
    fz = tmp_path / "fz.json"
    assert main(["factorize", "--family", "s2_iiab", "--theta", "0.4", "--theta", "-1.3", "--out", str(fz)]) == EXIT_OK
    outs = []
    for k in range(2):
        path = tmp_path / f"sched{k}.json"
        assert main(["schedule", str(fz), "--check", "--out", str(path)]) == EXIT_OK
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    doc = json.loads(outs[0])
    assert len(doc["schedules"]) == 2 and all(s["check"]["passed"] for s in doc["schedules"])
    capsys.readouterr()


def test_schedule_unreadable_input(tmp_path):
    assert main(["schedule", str(tmp_path / "missing.json")]) == EXIT_USAGE


def test_vqe_synthetic_and_csv(tmp_path, capsys):
    csv = tmp_path / "traj.csv"
    assert main(["vqe", "--hamiltonian", "synthetic:{3,0}", "--pool", "sa", "--csv", str(csv)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "pool=SA converged=True" in out
    assert csv.read_text().startswith("iteration,energy,s2,max_grad")


def test_vqe_fcidump_and_config(tmp_path, capsys):
    dump = tmp_path / "h.fcidump"
    dump.write_text(write_fcidump(synth_integrals(3, 2)))
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"hamiltonian": str(dump), "pool": "SD"}))
    out = tmp_path / "run_out.json"
    assert main(["vqe", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["pool"] == "SD" and abs(doc["energy_error"]) < 1e-6
    capsys.readouterr()


def test_vqe_usage_errors(tmp_path, capsys):
    assert main(["vqe", "--hamiltonian", str(tmp_path / "none.fcidump")]) == EXIT_USAGE
    assert "FCIDUMP not found" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text('{"hamiltonian": "synthetic:{3,0}",\n "pool": }')
    assert main(["vqe", "--config", str(bad)]) == EXIT_USAGE
    assert "bad.json:2:" in capsys.readouterr().err
    extra = tmp_path / "extra.json"
    extra.write_text('{"hamiltonian": "synthetic:{3,0}", "shots": 10}')
    assert main(["vqe", "--config", str(extra)]) == EXIT_USAGE
    broken = tmp_path / "broken.fcidump"
    broken.write_text(" &FCI NORB=2,NELEC=2,\n &END\n 0.5 9 1 0 0\n")
    assert main(["vqe", "--hamiltonian", str(broken)]) == EXIT_USAGE
    assert "line 3" in capsys.readouterr().err


def test_verify_subset(capsys):
    assert main(["verify-all", "--only", "3"]) == EXIT_OK
    assert "1/1 criteria passed" in capsys.readouterr().out
