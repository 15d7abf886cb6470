import csv
import json
import subprocess
import sys
import textwrap

import pytest

from rosenblatt_lab.cli import DEFAULTS, EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main, run
from rosenblatt_lab.config import ConfigError, load_config, parse_config


def _write(tmp_path, text, name="exp.yaml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text), encoding="utf-8")
    return p


def _table(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


VERIFY = """\
command: verify
seed: 3
verify:
  recipe: chi2_limit
  cells: 256
  H: [0.9, 0.99, 0.995]
"""

ZERO = """\
command: cumulants
cumulants:
  kernel: {type: zero}
  H: [0.6, 0.8]
"""


def test_verify_chi2_table(tmp_path):
    cfg = _write(tmp_path, VERIFY)
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rows = _table(out / "results.csv")
    assert rows[0] == ["H", "m", "k_m", "target", "deviation"]
    assert len(rows) == 1 + 3 * 3
    assert {r[1] for r in rows[1:]} == {"2", "3", "4"}


def test_zero_kernel_all_zero(tmp_path):
    cfg = _write(tmp_path, ZERO)
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rows = _table(out / "results.csv")
    assert rows[0] == ["H", "m", "k_m", "error"]
    assert all(r[2] == "0" and r[3] == "0" for r in rows[1:])


def test_bad_hurst_index(tmp_path, capsys):
    cfg = _write(tmp_path, """\
        command: simulate
        simulate:
          process: rosenblatt
          H: 0.4
          times: [0.5, 1.0]
        """)
    assert main(["--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "(1/2, 1)" in err
    assert "exp.yaml:4: simulate.H" in err


def test_unknown_field_rejected(tmp_path, capsys):
    cfg = _write(tmp_path, ZERO.replace("{type: zero}", "{type: zero, bogus: 1}"))
    assert main(["--config", str(cfg)]) == EXIT_CONFIG
    assert "cumulants.kernel.bogus" in capsys.readouterr().err


def test_malformed_document(tmp_path, capsys):
    cfg = _write(tmp_path, "command: [unclosed\n")
    assert main(["--config", str(cfg)]) == EXIT_CONFIG
    assert "malformed" in capsys.readouterr().err


def test_missing_section():
    with pytest.raises(ConfigError, match="needs a 'verify' section"):
        parse_config("command: verify\n")


def test_reproducible_tables(tmp_path):
    text = """\
    command: simulate
    seed: 17
    simulate:
      process: rou
      H: 0.7
      times: {start: 0.0, stop: 1.0, num: 5}
      xi: 0.5
      n: 3000
      cells: 64
    """
    cfg = _write(tmp_path, text)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--config", str(cfg), "--out", str(a)]) == EXIT_OK
    assert main(["--config", str(cfg), "--out", str(b), "--threads", "2"]) == EXIT_OK
    assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
    assert b"\r\n" not in (a / "results.csv").read_bytes()
    c = tmp_path / "c"
    assert main(["--config", str(cfg), "--out", str(c), "--seed", "18"]) == EXIT_OK
    assert (a / "results.csv").read_bytes() != (c / "results.csv").read_bytes()
    assert json.loads((c / "manifest.json").read_text())["seed"] == 18


def test_manifest_completeness(tmp_path):
    cfg = _write(tmp_path, VERIFY)
    out = tmp_path / "out"
    main(["--config", str(cfg), "--out", str(out)])
    m = json.loads((out / "manifest.json").read_text())
    for key in ("config", "version", "seed", "timestamp", "git_revision", "defaults"):
        assert key in m
    assert m["defaults"] == json.loads(json.dumps(DEFAULTS))
    section = m["config"]["verify"]
    for field in ("recipe", "kernel", "H", "orders", "cells", "tolerance", "k4_ratio"):
        assert field in section
    assert m["config"]["seed"] == 3


def test_json_config_and_twelve_digits(tmp_path):
    doc = {
        "command": "cumulants",
        "cumulants": {"kernel": {"type": "indicator"}, "H": [0.7], "orders": [2, 3], "cells": 256},
    }
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps(doc), encoding="utf-8")
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rows = _table(out / "results.csv")
    k2 = rows[1][2]
    assert abs(float(k2) - 1.0) < 1e-6
    digits = k2.lstrip("-").replace(".", "").split("e")[0].lstrip("0")
    assert len(digits) <= 12


def test_quadrature_backend_order_four(tmp_path):
    cfg = _write(tmp_path, """\
        command: cumulants
        cumulants:
          kernel: {type: indicator}
          H: [0.8]
          orders: [2, 4]
          backend: quadrature
        """)
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rows = _table(out / "results.csv")
    assert float(rows[2][2]) == pytest.approx(10.35036, rel=1e-5)


def test_power_count_scan(tmp_path):
    cfg = _write(tmp_path, """\
        command: power-count
        power_count:
          cyclic: 4
          alpha: {offset: -1.0, slope: 1.0}
          beta: {offset: -2.0}
          at: 0.3
          which: zero
          scan: {lower: 0.0, upper: 1.0, which: zero}
        """)
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out)]) == EXIT_OK
    m = json.loads((out / "manifest.json").read_text())
    assert abs(m["summary"]["scan"]["threshold"] - 0.25) < 1e-9
    rows = _table(out / "results.csv")
    assert rows[0] == ["subset", "rank", "closure", "padded", "d0", "d_inf"]


def test_failing_verify_exits_two(tmp_path):
    cfg = _write(tmp_path, VERIFY.replace("cells: 256", "cells: 256\n  tolerance: 0.000001"))
    assert main(["--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_FAIL


def test_sweep_and_plot(tmp_path):
    pytest.importorskip("matplotlib")
    cfg = load_config(_write(tmp_path, """\
        command: sweep
        sweep:
          kernel: {type: indicator}
          H: [0.6, 0.8]
          cells: 128
        """))
    outcome = run(cfg, tmp_path / "out", threads=2, plot=True)
    assert outcome.status == EXIT_OK
    assert outcome.plot is not None and outcome.plot.exists()
    header = _table(outcome.table)[0]
    assert header[:5] == ["H", "m", "k_m", "error", "chi2_target"]


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, ZERO)
    r = subprocess.run([sys.executable, "-m", "rosenblatt_lab", "--config", str(cfg), "--out", str(tmp_path / "o")],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "cumulants: pass" in r.stdout
