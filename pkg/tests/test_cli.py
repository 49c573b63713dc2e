import json

from divdivfem.cli import main


def test_audit_poly_exit_zero(capsys):
    assert main(["audit", "poly", "--k", "3", "--dim", "2"]) == 0
    out = capsys.readouterr().out
    assert "0 failures" in out


def test_audit_element_reports_counts(capsys):
    assert main(["audit", "element", "--family", "hrotrot_s2", "--k", "3"]) == 0
    out = capsys.readouterr().out
    assert "45" in out


def test_audit_complex_single_tet(capsys):
    assert main(["audit", "complex", "--mesh", "single_tet", "--k", "3"]) == 0
    out = capsys.readouterr().out
    assert "164" in out and "116" in out


def test_json_reports_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["audit", "lemmas", "--k", "3", "--trials", "3",
                 "--json", str(a)]) == 0
    assert main(["audit", "lemmas", "--k", "3", "--trials", "3",
                 "--json", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    payload = json.loads(a.read_text())
    assert all("source" in c for c in payload["checks"])
    assert "wall_time" not in a.read_text()


def test_csv_report(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["audit", "poly", "--k", "3", "--dim", "3",
                 "--csv", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "name,expected,computed,source,pass"


def test_eb_run_zero_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("mesh = two_tets\nk = 3\nt_final = 0.1\ndt = 0.05\ninit = zero\n")
    csv_out = tmp_path / "series.csv"
    assert main(["eb", "run", "--config", str(cfg), "--csv", str(csv_out)]) == 0
    lines = csv_out.read_text().splitlines()
    assert lines[0] == "t,energy,err_sigma,err_E,err_B"
    assert len(lines) == 4  # header + 3 states
    assert all(row.split(",")[1] == "0.0" for row in lines[1:])


def test_io_error_exit_two(capsys):
    assert main(["eb", "run", "--config", "/does/not/exist.cfg"]) == 2
    assert main(["audit", "complex", "--mesh", "/does/not/exist.mesh",
                 "--k", "3"]) == 2


def test_bad_config_exit_two(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("mesh = two_tets\ndt = 0.3\nt_final = 1.0\n")
    assert main(["eb", "run", "--config", str(cfg)]) == 2


def test_infsup_command(capsys):
    assert main(["infsup", "--mesh", "single_tet", "--k", "3"]) == 0
    assert "inf-sup" in capsys.readouterr().out
