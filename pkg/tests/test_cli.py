import json
import os

import pytest

from jumpbhp import cli


def _write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_selftest_small(tmp_path):
    cfg = _write(tmp_path, "seed: 1\noptions: {n_paths: 3000, n_increments: 20000}\n")
    status = cli.main(["selftest", "--config", cfg, "--out", str(tmp_path / "o")])
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert status == 0 and rep["passed"]
    assert (tmp_path / "o" / "checks.csv").read_text().splitlines()[0].startswith("name,")


def test_fraclap_csv_columns(tmp_path):
    status = cli.main(["fraclap", "--out", str(tmp_path)])
    head = (tmp_path / "values.csv").read_text().splitlines()[0]
    assert head == "x,value,ratio_to_power,verdict"
    assert status == 0


def test_failed_verdict_gives_nonzero_status(tmp_path):
    # alpha/2 < p < alpha with a window too wide for the power law
    cfg = _write(tmp_path, "params: {d: 1, alpha: 0.6, lam: 1.0}\noptions: {mode: power, p: 0.45}\n")
    assert cli.main(["fraclap", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_config_errors(tmp_path):
    bad = _write(tmp_path, "bogus: 1\n")
    assert cli.main(["harnack", "--config", bad, "--out", str(tmp_path / "o")]) == 2
    bad = _write(tmp_path, "params: {d: 2, alpha: 3.0}\n", "b2.yaml")
    assert cli.main(["harnack", "--config", bad, "--out", str(tmp_path / "o")]) == 2


def test_every_subcommand_has_a_default_config():
    for kind in cli.SUBCOMMANDS:
        assert cli.load_config(kind, None) is not None


def test_identical_outputs_across_worker_counts(tmp_path):
    cfg = _write(tmp_path, "seed: 3\nn: 3000\nparams: {d: 2, alpha: 1.0, a: 1.0}\n"
                           "domain: {kind: lipschitz-cone, d: 2}\noptions: {depths: [0.2, 0.1]}\n")
    outs = []
    for w in (1, 2):
        d = tmp_path / f"w{w}"
        cli.main(["lowerbound", "--config", cfg, "--workers", str(w), "--out", str(d)])
        outs.append(((d / "report.json").read_bytes(), (d / "rows.csv").read_bytes()))
    assert outs[0] == outs[1]
