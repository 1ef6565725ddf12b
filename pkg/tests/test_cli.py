import csv
import json
from pathlib import Path

import pytest

from tempered_spectra import __version__, fixtures as fx
from tempered_spectra.cli import main
from tempered_spectra.groups import to_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["analyze"])
    assert info.value.code == 2


def test_enumerate_cyclic_rows(tmp_path):
    out = tmp_path / "orbit.csv"
    code = main(["enumerate", "--config", str(CONFIGS / "cyclic.group.json"),
                 "--max-word-length", "5", "--csv", str(out)])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["word", "mu1", "mu2"] and len(rows) == 12
    assert rows[1][0] == ""


def test_enumerate_identity_only(capsys):
    assert main(["enumerate", "--config", str(CONFIGS / "schottky_4.group.json"),
                 "--max-word-length", "0"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines == ["word,mu1,mu2", ",0.0,0.0"]


def test_enumerate_uses_analysis_config(tmp_path, capsys):
    cfg = _write(tmp_path, "a.json", {"group": to_config(fx.cyclic(1.0)), "max_word_length": 3})
    assert main(["enumerate", "--config", cfg, "--mode", "multiset"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 8


def test_enumerate_needs_length(capsys):
    assert main(["enumerate", "--config", str(CONFIGS / "cyclic.group.json")]) == 2


def test_analyze_missing_file(tmp_path):
    assert main(["analyze", "--config", str(tmp_path / "nope.json")]) == 2


def test_analyze_bad_schema(tmp_path):
    cfg = _write(tmp_path, "bad.json", {"group": {"model": "sl2r", "generators": [
        {"label": "a", "m": [[1.0, 0.0], [0.0, 0.5]]}]}, "max_word_length": 3})
    assert main(["analyze", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_analyze_memory_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("TEMPERED_SPECTRA_MEM_CAP", "50")
    assert main(["analyze", "--config", str(CONFIGS / "schottky_4.analysis.json"),
                 "--out", str(tmp_path / "o")]) == 3


def test_analyze_writes_outputs(tmp_path):
    out = tmp_path / "o"
    code = main(["analyze", "--config", str(CONFIGS / "product.analysis.json"),
                 "--out", str(out), "--max-word-length", "4"])
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert {"report.json", "counts.csv", "strips_factor_1.csv", "strips_factor_2.csv",
            "psi_rays.csv", "convergence.csv", "green_curves.csv", "spectral_region.json",
            "timings.json"} <= names
    rep = json.loads((out / "report.json").read_text())
    assert rep["config"]["max_word_length"] == 4
    assert rep["tool"]["version"] == __version__


def test_specialfn_table(tmp_path):
    out = tmp_path / "sf.csv"
    assert main(["specialfn", "--lambda", "0.5,1j,0.2+0.3j", "--t", "0:2:5",
                 "--csv", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 15
    for r in rows:
        if float(r["t"]) == 0:
            assert float(r["phi_re"]) == 1 and float(r["phi_im"]) == 0
        if r["lambda_re"] == "0.5" and r["lambda_im"] == "0.0":
            assert float(r["c_re"]) == pytest.approx(1.0, abs=1e-10)
    dens = [r["density"] for r in rows if r["lambda_re"] == "0.0"]
    assert dens and all(float(d) > 0 for d in dens)


def test_specialfn_hyperbolic_and_pole(capsys):
    assert main(["specialfn", "--model", "hyperbolic", "--n", "3", "--lambda", "0,-1",
                 "--t", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 3


def test_specialfn_errors():
    assert main(["specialfn", "--lambda", "", "--t", "1"]) == 2
    assert main(["specialfn", "--lambda", "0.5", "--t", ""]) == 2
    assert main(["specialfn", "--model", "hyperbolic", "--lambda", "0.5", "--t", "1"]) == 2
    assert main(["specialfn", "--model", "hyperbolic", "--n", "1", "--lambda", "0.5",
                 "--t", "1"]) == 2
    # sinh overflows far out: a numeric failure, not a config error
    assert main(["specialfn", "--lambda", "0.3j", "--t", "1000"]) == 4
