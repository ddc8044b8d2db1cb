import subprocess
import sys

import pytest

from rkcp.cli import main
from rkcp.properties import read_stability_csv
from rkcp.solver import read_paving_csv
from rkcp.tableau import read_tableau, verify_order


def run(*args):
    return main([str(a) for a in args])


def test_derive_gauss_legendre(tmp_path, capsys):
    out = tmp_path / "gl.tab"
    assert run("derive", "--stages", 2, "--order", 4, "--out", out, "--csv", tmp_path / "gl.csv") == 0
    t = read_tableau(out)
    assert t.order == 4 and verify_order(t, 4).passed
    pav = read_paving_csv((tmp_path / "gl.csv").read_text())
    assert len(pav.solutions) == 1
    assert "solutions 1" in capsys.readouterr().out


def test_derive_unsat_exit_code(tmp_path):
    assert run("derive", "-s", 2, "-p", 5, "--out", tmp_path / "x.tab") == 3
    assert not (tmp_path / "x.tab").exists()


def test_derive_two_sdirk_files(tmp_path):
    out = tmp_path / "sd.tab"
    assert run("derive", "-s", 2, "-p", 3, "--sdirk", "--c-order", "none", "--out", out) == 0
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files == ["sd-1.tab", "sd-2.tab"]
    for f in files:
        assert verify_order(read_tableau(tmp_path / f), 3).passed


def test_derive_with_shaving(tmp_path):
    out = tmp_path / "gl.tab"
    assert run("derive", "-s", 2, "-p", 4, "--shave", "--bisector", "smear", "--out", out) == 0
    assert verify_order(read_tableau(out), 4).passed


def test_derive_budget_exit_code(tmp_path):
    assert run("derive", "-s", 2, "-p", 4, "--max-nodes", 3, "--out", tmp_path / "b.tab") == 4


def test_inconsistent_flags_exit_2(tmp_path):
    with pytest.raises(SystemExit) as err:
        run("derive", "-s", 2, "-p", 3, "--explicit", "--sdirk", "--out", tmp_path / "x.tab")
    assert err.value.code == 2


def test_bad_domain_exit_2(tmp_path, capsys):
    assert run("derive", "-s", 2, "-p", 3, "--a-domain", 1, -1, "--out", tmp_path / "x.tab") == 2


def test_verify_orders(capsys):
    assert run("verify", "catalog:erk33", "--order", 3) == 0
    assert run("verify", "catalog:erk33", "--order", 4) == 1
    out = capsys.readouterr().out
    assert "order 4: fail" in out and "distance to order 4" in out


def test_verify_properties(capsys):
    assert run("verify", "catalog:gauss3", "--symplectic") == 0
    assert run("verify", "catalog:lobatto3a", "--algebraic-stability") == 1
    out = capsys.readouterr().out
    assert "symplectic: pass" in out and "notStable" in out


def test_verify_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.tab"
    bad.write_text("rk-tableau v1\nstages x\n")
    assert run("verify", bad) == 2
    assert "line 2" in capsys.readouterr().err


def test_verify_missing_file(tmp_path):
    assert run("verify", tmp_path / "none.tab") == 2


def test_pave_rk4(tmp_path):
    csv = tmp_path / "rk4.csv"
    assert run("pave", "catalog:rk4", "--out", csv) == 0
    pav = read_stability_csv(csv.read_text())
    assert pav.classify(-1.0, 0.0) == "inside" and pav.classify(-3.0, 0.0) == "outside"


def test_pave_implicit_rejected(tmp_path):
    assert run("pave", "catalog:gauss2", "--out", tmp_path / "g.csv") == 2


def test_pave_coarse_eps(tmp_path):
    csv = tmp_path / "c.csv"
    assert run("pave", "catalog:rk4", "--eps", 100, "--out", csv) == 0
    assert [c for _, _, c in read_stability_csv(csv.read_text()).boxes] == ["boundary"]


@pytest.mark.parametrize("p,rows", [(1, 1), (4, 8), (5, 17)])
def test_trees_listing(p, rows, capsys):
    assert run("trees", "--max-order", p) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == rows + 1


def test_trees_gamma_column(capsys):
    run("trees", "--max-order", 4)
    lines = capsys.readouterr().out.strip().splitlines()[1:]
    assert [int(l.split("\t")[2]) for l in lines] == [1, 2, 3, 6, 4, 8, 12, 24]


def test_trees_order_guard():
    assert run("trees", "--max-order", 9) == 2


def test_step_rk4(capsys):
    assert run("step", "--file", "catalog:rk4", "--h", 0.1, "--steps", 1, "--y0", 1, "--f", "y") == 0
    last = capsys.readouterr().out.strip().splitlines()[-1]
    assert "1.1051708333333333" in last


def test_step_two_dimensional(capsys):
    assert run("step", "--file", "catalog:heun", "--h", 0.01, "--steps", 3, "--y0", "1;0",
               "--f", "y1", "--f", "(- 0 y0)") == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 4


def test_optimize_relaxed_output(tmp_path, capsys):
    out = tmp_path / "r.tab"
    code = run("optimize", "-s", 2, "-p", 2, "--explicit", "--target-order", 3, "--max-nodes", 500, "--out", out)
    assert code == 0
    t = read_tableau(out)
    assert t.note == "relaxed"
    assert "cost bounds" in capsys.readouterr().out


def test_optimize_target_must_exceed_order(tmp_path):
    assert run("optimize", "-s", 2, "-p", 2, "--target-order", 2, "--out", tmp_path / "r.tab") == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rkcp", "trees", "--max-order", "2"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout.count("\n") == 3
