import csv
import os

import numpy as np
import pytest

from bbdg.cli import main


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_ops_writes_reports(tmp_path):
    out = str(tmp_path)
    assert main(["ops", "--n", "1..4", "--basis", "both", "--out", out]) == 0
    rows = read_csv(os.path.join(out, "ops_bernstein.csv"))
    by_op = {}
    for r in rows:
        by_op.setdefault(r["operator"], []).append(r)
    # one row per degree per operator family
    assert len(by_op["bernstein_L0"]) == 4
    l0n4 = [r for r in by_op["bernstein_L0"] if r["N"] == "4"][0]
    assert float(l0n4["cond"]) == pytest.approx(3.18182, rel=1e-5)
    # complexity rows carry a fitted slope (range bounds are asserted over
    # the asymptotic sweep in the acceptance suite)
    assert float(by_op["optimal_lift"][0]["slope"]) > 0
    assert read_csv(os.path.join(out, "ops_nodal.csv"))


def test_ops_empty_range_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["ops", "--n", "", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_ops_dumps(tmp_path):
    out = str(tmp_path)
    assert main(["ops", "--n", "2", "--dump-operators", "--dump-nodes", "--out", out]) == 0
    coo = os.path.join(out, "bernstein_D0_N2.txt")
    assert os.path.exists(coo)
    rows = [line.split() for line in open(coo)]
    assert all(len(r) == 3 for r in rows)
    nodes = read_csv(os.path.join(out, "nodes_warp_blend_N2.csv"))
    assert len(nodes) == 10


def test_check_passes_and_detects_fault(tmp_path):
    assert main(["check", "--n", "1..2", "--out", str(tmp_path)]) == 0
    code = main(["check", "--n", "2", "--suite", "derivative", "--inject-d0-fault",
                 "--out", str(tmp_path)])
    assert code == 1


def test_check_suite_filter(tmp_path, capsys):
    assert main(["check", "--n", "2", "--suite", "lift", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "suite lift: pass" in out
    assert "ordering" not in out


def test_solve_tmax_zero_gives_projection_error(tmp_path):
    out = str(tmp_path)
    assert main(["solve", "--n", "2", "--mesh", "2", "--tmax", "0", "--out", out]) == 0
    rows = read_csv(os.path.join(out, "solve_bernstein_N2.csv"))
    assert len(rows) == 1
    assert float(rows[0]["tau"]) == 0.0
    assert 0.0 < float(rows[0]["l2_error_p"]) < 0.1


def test_solve_bases_agree_and_rerun_identical(tmp_path):
    out = str(tmp_path)
    args = ["solve", "--n", "2", "--mesh", "2", "--tmax", "0.2", "--basis", "both",
            "--out", out, "--save-state"]
    assert main(args) == 0
    eb = [float(r["l2_error_p"]) for r in read_csv(os.path.join(out, "solve_bernstein_N2.csv"))]
    en = [float(r["l2_error_p"]) for r in read_csv(os.path.join(out, "solve_nodal_N2.csv"))]
    assert np.allclose(eb, en, rtol=1e-7)
    first = open(os.path.join(out, "solve_bernstein_N2.csv"), "rb").read()
    assert main(args) == 0
    assert open(os.path.join(out, "solve_bernstein_N2.csv"), "rb").read() == first
    from bbdg.solver import load_state

    st = load_state(os.path.join(out, "state_bernstein_N2.bin"))
    assert st.time == pytest.approx(0.2)


def test_solve_single_precision_smoke(tmp_path):
    out = str(tmp_path)
    assert main(["solve", "--n", "2", "--mesh", "2", "--tmax", "0.1",
                 "--precision", "single", "--out", out]) == 0


def test_solve_mesh_file(tmp_path):
    from bbdg.mesh import cube_mesh, save_mesh_ascii

    mfile = os.path.join(str(tmp_path), "m.txt")
    save_mesh_ascii(mfile, cube_mesh(2))
    assert main(["solve", "--n", "1", "--mesh-file", mfile, "--tmax", "0.05",
                 "--out", str(tmp_path)]) == 0


def test_convergence_rates(tmp_path):
    out = str(tmp_path)
    assert main(["convergence", "--n", "1", "--meshes", "2,4", "--tmax", "0.3",
                 "--out", out]) == 0
    with open(os.path.join(out, "convergence.csv")) as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[0]["observed_order"]) >= 1.5


def test_convergence_needs_two_meshes(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["convergence", "--n", "1", "--meshes", "2", "--out", str(tmp_path)])
    assert exc.value.code == 2
