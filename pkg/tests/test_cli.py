import json
import subprocess
import sys

import pytest

from pcsp.cli import main
from pcsp.conditions import example_2_16, parse_condition, serialize_condition
from pcsp.core import cycle, serialize_structure


def run(capsys, *argv):
    code = main(list(argv) + ["--json"])
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_hom(capsys):
    code, rep = run(capsys, "hom", "C5", "K3")
    assert code == 0 and rep["result"]["status"] == "sat"
    assert rep["command"][:3] == ["pcsp", "hom", "C5"] and "exit_code" in rep and rep["backend"]
    code, rep = run(capsys, "hom", "C5", "K2")
    assert code == 0 and rep["result"]["status"] == "unsat"


def test_structure_files(tmp_path, capsys):
    f = tmp_path / "c7.txt"
    f.write_text(serialize_structure(cycle(7)))
    code, rep = run(capsys, "hom", str(f), "K3")
    assert code == 0 and rep["result"]["status"] == "sat"
    assert rep["inputs"]["instance"] == cycle(7).digest()


def test_robustness_from_file(tmp_path, capsys):
    f = tmp_path / "c.txt"
    f.write_text(serialize_condition(example_2_16()))
    code, rep = run(capsys, "cond-robust", str(f))
    assert code == 0 and rep["result"]["value"] == "3/4"
    code, rep = run(capsys, "cond-robust", "example_2_16")
    assert rep["result"]["value"] == "3/4"


def test_exit_codes(tmp_path, capsys):
    assert main(["hom", str(tmp_path / "missing.txt"), "K3"]) == 3
    bad = tmp_path / "bad.txt"
    bad.write_text("structure X 2\nrelation E 2\n0 7\nend\n")
    assert main(["hom", str(bad), "K3"]) == 2
    assert main(["hom", "K5", "K4", "--node-budget", "0"]) == 4
    assert main(["poly-enum", "K3", "K4", "-n", "3", "--size-cap", "10"]) == 5
    capsys.readouterr()


def test_condition_commands(capsys):
    code, rep = run(capsys, "cond-check", "olsak", "K3", "K5")
    assert code == 0 and rep["result"]["status"] == "unsat"
    code, rep = run(capsys, "cond-check", "olsak", "K3", "K6", "--witness", "o=olsak_k_2k:3")
    assert rep["result"]["status"] in ("sat",)
    code, rep = run(capsys, "cond-trivial", "siggers")
    assert code == 0 and rep["result"]["trivial"] is False
    code, rep = run(capsys, "cond-gen", "cyclic", "3")
    assert code == 0


def test_text_output_and_out_dir(tmp_path, capsys):
    assert main(["cond-gen", "olsak", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("condition olsak") and "# cond-gen:" in out
    assert (tmp_path / "cond-gen.out.txt").read_text().startswith("condition olsak")
    rep = json.loads((tmp_path / "cond-gen.report.json").read_text())
    assert rep["exit_code"] == 0


@pytest.mark.parametrize("argv", [
    ["gac", "C5", "K2"], ["klcons", "K4", "K3", "-k", "3", "-l", "4"], ["poly-enum", "T", "T", "-n", "2"],
    ["pcsp-solve", "T", "H2", "T", "--method", "aip"], ["power-structure", "K2"], ["width1", "Horn", "Horn"],
    ["free", "K2", "K2", "K2"], ["minion-hom", "K2", "K2", "K2", "K2"], ["clique", "K4", "3"],
    ["reduce", "inst2cond", "K3", "K3"], ["reduce", "cond2inst", "olsak", "K3"], ["mc2lc", "olsak"],
    ["experiment", "pol-t"],
])
def test_subcommands_run(argv, capsys):
    assert main(argv + ["--json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["exit_code"] == 0 and "result" in rep


def test_label_cover_round_trip(tmp_path, capsys):
    assert main(["mc2lc", "example_2_16", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    lc = tmp_path / "mc2lc.out.txt"
    assert lc.read_text().startswith("labelcover")
    assert main(["lc2mc", str(lc)]) == 0
    text = capsys.readouterr().out
    c = parse_condition(text[:text.index("# lc2mc")])
    assert c.identities == example_2_16().identities


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "pcsp.cli", "cond-robust", "olsak"], capture_output=True, text=True)
    assert r.returncode == 0 and "2/3" in r.stdout
