import csv
import io
import json

import pytest

from ccgldpc import jobs
from ccgldpc.cli import main


def rows_of(text):
    body = "\n".join(ln for ln in text.splitlines() if not ln.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_threshold_bp(capsys):
    code, out, _ = run(capsys, "threshold", "bp", "--ensemble", "3,6")
    assert code == 0
    assert out.startswith("# ")
    (row,) = rows_of(out)
    assert abs(float(row["threshold"]) - 0.4294) < 5e-4
    assert "runtime_s" in row


def test_threshold_json(capsys):
    code, out, _ = run(capsys, "threshold", "bp", "--ensemble", "4,6", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["rows"][0]["ensemble"] == "4,6"


def test_transfer_csv(capsys):
    code, out, _ = run(capsys, "transfer", "--code", "1/3", "--qs", "0.5", "--qp", "0.5")
    assert code == 0
    (row,) = rows_of(out)
    qs = qp = 0.5
    pf = qs * qp / (qs * qp + 1 - qp)
    pb = qs / (qs + (1 - qs) * (1 - qp))
    assert float(row["p_s"]) == pytest.approx(pf + (1 - pf) * qp * pb, abs=1e-9)


def test_transfer_oracle_columns(capsys):
    code, out, _ = run(capsys, "transfer", "--code", "5/7", "--qs", "0.3", "--qp", "0.6",
                       "--oracle", "--sections", "20000", "--seed", "4")
    (row,) = rows_of(out)
    assert code == 0 and row["mc_p_s"] and row["se_s"]


def test_dmin_curve_sorted(capsys, tmp_path):
    code, out, _ = run(capsys, "dmin", "--ensemble", "3,6", "--component", "conv:5/7",
                       "--n-list", "72,24,48", "--curve")
    assert code == 0
    pts = [(int(r["n"]), int(r["d_hat"])) for r in rows_of(out)]
    ns = [p[0] for p in pts]
    assert ns == sorted(ns) and len(set(ns)) == len(ns)
    path = tmp_path / "curve.csv"
    assert main(["dmin", "--ensemble", "3,6", "--component", "conv:5/7",
                 "--N-list", "4,8", "--curve", "--out", str(path)]) == 0
    assert "n,d_hat" in path.read_text()


def test_exit_curve_has_anchor(capsys):
    code, out, _ = run(capsys, "exit-curve", "--ensemble", "3,6")
    assert code == 0
    rows = rows_of(out)
    assert float(rows[-1]["eps"]) == 1.0 and float(rows[-1]["pe"]) == 1.0


def test_wenum(capsys):
    code, out, _ = run(capsys, "wenum", "--ensemble", "2,3", "--component", "conv:5/7",
                       "--N", "3")
    assert code == 0
    rows = rows_of(out)
    assert rows[0]["w"] == "0" and float(rows[0]["log_count"]) == 0.0


def test_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["dmin", "--ensemble", "4,8", "--component", "conv:1/3", "--N-list", "3,6"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def _write_cfg(tmp_path, raw):
    p = tmp_path / "job.json"
    p.write_text(json.dumps(raw))
    return str(p)


def test_run_config(tmp_path, capsys):
    out = tmp_path / "res.csv"
    raw = {"name": "small", "analyses": ["bp"],
           "specs": [{"ensemble": "3,6"}, {"ensemble": "2,3", "component": "conv:1/3"}],
           "output": str(out)}
    code, _, _ = run(capsys, "run", _write_cfg(tmp_path, raw), "--workers", "1")
    assert code == 0
    text = out.read_text()
    assert "config_sha256" in text or "sha256" in text
    assert len(rows_of(text)) == 2


@pytest.mark.parametrize("raw", [
    {"name": "x", "analyses": ["bp"], "specs": []},
    {"name": "x", "analyses": ["bp"], "specs": [{"ensemble": "3,6"}], "bogus": 1},
    {"name": "x", "analyses": ["map"], "specs": [{"ensemble": "3,6", "coupling": "1,20"}]},
    {"name": "x", "analyses": ["dmin"], "specs": [{"ensemble": "3,6"}]},
])
def test_bad_config_exit_code(tmp_path, capsys, raw):
    code, _, err = run(capsys, "run", _write_cfg(tmp_path, raw))
    assert code == 2 and "config error" in err


def test_bad_arguments_exit_code(capsys):
    assert run(capsys, "threshold", "bp")[0] == 2
    assert run(capsys, "threshold", "bp", "--ensemble", "3,x")[0] == 2
    assert run(capsys, "run", "/nonexistent/job.json")[0] == 2


def test_cell_error_exit_code(capsys):
    # (2,4) LDPC has no area-theorem crossing above its BP threshold
    code, out, err = run(capsys, "threshold", "map", "--ensemble", "2,4")
    assert code == 1 and "at or below BP" in err
    assert rows_of(out)[0]["error"]


def test_reproduce_only_filter(tmp_path, capsys):
    out = tmp_path / "t1.csv"
    code, _, _ = run(capsys, "reproduce", "table1", "--only", "3,6 ldpc", "--out", str(out),
                     "--workers", "1")
    assert code == 0
    rows = rows_of(out.read_text())
    assert {r["analysis"] for r in rows} == {"bp", "map"}
    assert all(r["ensemble"] == "3,6" for r in rows)
    assert (tmp_path / "t1_layout.csv").exists()


def test_presets_validate():
    for name in jobs.PRESETS:
        cfg = jobs.load_config(jobs.load_preset(name))
        assert cfg.specs
    notes = [s.note for s in jobs.load_config(jobs.load_preset("table1")).specs
             if s.ensemble in ("2,3", "2,4") and s.component == "ldpc"]
    assert notes and all("criterion=bit-erasure-DE" in n for n in notes)


def test_digest_ignores_output_fields():
    raw = {"name": "x", "analyses": ["bp"], "specs": [{"ensemble": "3,6"}]}
    a = jobs.load_config(raw)
    b = jobs.load_config(raw | {"output": "elsewhere.csv", "workers": 3})
    assert a.digest() == b.digest()
