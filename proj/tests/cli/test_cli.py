"""End-to-end checks of the mesonet command-line tool.

The binary is taken from $MESONET_CLI (set by ctest) or the default build tree.
"""

import csv
import io
import json
import os
import pathlib
import subprocess
import time

import jsonschema
import numpy as np
import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]
CLI = os.environ.get("MESONET_CLI", str(ROOT / "build" / "tools" / "mesonet"))
SCHEMA = json.loads((ROOT / "docs" / "report.schema.json").read_text())
MANIFEST_SCHEMA = json.loads((ROOT / "docs" / "manifest.schema.json").read_text())
RECT = "rows=1..6,cols=19..26"


def run(*args, cwd, env=None, check_code=0):
    proc = subprocess.run([CLI, *map(str, args)], cwd=cwd, capture_output=True, text=True,
                          env={**os.environ, **(env or {})})
    if check_code is not None:
        assert proc.returncode == check_code, proc.stderr
    return proc


def write_stack(path, layers):
    n = layers[0].shape[0]
    with open(path, "w") as f:
        f.write(f"{n} {len(layers)}\n")
        for a in layers:
            for row in a:
                f.write(" ".join(repr(float(v)) for v in row) + "\n")


@pytest.fixture
def stacks(tmp_path):
    rng = np.random.default_rng(7)
    n, m = 26, 4
    x = rng.normal(size=(n, 2))
    theta1 = x @ x.T
    theta2 = theta1.copy()
    theta2[:6, 18:] += 1.5 * np.outer(x[:6, 0], x[18:, 1])
    write_stack(tmp_path / "a.txt", [theta1 + rng.normal(size=(n, n)) for _ in range(m)])
    write_stack(tmp_path / "b.txt", [theta2 + rng.normal(size=(n, n)) for _ in range(m)])
    return tmp_path


def report(tmp, *extra, hypothesis=RECT):
    run("test", "-1", "a.txt", "-2", "b.txt", "--hypothesis", hypothesis, "-o", "r.json", *extra,
        cwd=tmp)
    rep = json.loads((tmp / "r.json").read_text())
    jsonschema.validate(rep, SCHEMA)
    return rep


def test_report_validates_against_schema(stacks):
    for extra in (["--d", "2"], ["--proj", "learned-impute", "--d", "3", "--stat", "G"],
                  ["--proj", "block", "--stat", "EUD"], ["--proj", "random", "--d", "2", "--seed", "4"]):
        rep = report(stacks, *extra)
        assert 0.0 <= rep["p_value"] <= 1.0
    manifest = json.loads((stacks / "r.json.manifest.json").read_text())
    jsonschema.validate(manifest, MANIFEST_SCHEMA)
    assert manifest["command"] == "test"
    assert manifest["seed"] == 4


def test_identical_stacks_give_unit_p_value(stacks):
    run("test", "-1", "a.txt", "-2", "a.txt", "--hypothesis", RECT, "--proj", "block",
        "--stat", "GP", "-o", "r.json", cwd=stacks)
    rep = json.loads((stacks / "r.json").read_text())
    assert rep["p_value"] == 1.0
    assert rep["reject"] is False


def test_malformed_header_exits_3_with_line(stacks):
    (stacks / "bad.txt").write_text("# comment\n26\n")
    proc = run("test", "-1", "bad.txt", "-2", "b.txt", "--hypothesis", RECT, cwd=stacks,
               check_code=3)
    assert "line 2" in proc.stderr


def test_argument_errors_exit_2_and_name_the_field(stacks):
    proc = run("test", "-1", "a.txt", "-2", "b.txt", "--hypothesis", "rows=1..6", cwd=stacks,
               check_code=2)
    assert "--hypothesis" in proc.stderr
    proc = run("test", "-1", "a.txt", "-2", "b.txt", "--hypothesis", "rows=1..6,cols=19..40",
               cwd=stacks, check_code=2)
    assert "--hypothesis" in proc.stderr
    run("test", "-1", "a.txt", "-2", "b.txt", "--hypothesis", RECT, "--d", "0", cwd=stacks,
        check_code=2)
    run("test", "-1", "a.txt", "-2", "b.txt", "--hypothesis", RECT, "--proj", "file", cwd=stacks,
        check_code=2)


def test_numerical_failure_exits_4(stacks):
    # Identical samples leave nothing to learn a projection from.
    proc = run("test", "-1", "a.txt", "-2", "a.txt", "--hypothesis", RECT, "--d", "2",
               cwd=stacks, check_code=4)
    assert proc.stderr


def test_learn_proj_round_trip_gives_identical_statistic(stacks):
    run("learn-proj", "-1", "a.txt", "-2", "b.txt", "--hypothesis", RECT, "--d", "2",
        "--out-dir", "proj", cwd=stacks)
    for name in ("U.csv", "V.csv", "scree.csv"):
        assert (stacks / "proj" / name).exists()
    learned = report(stacks, "--d", "2")
    reloaded = report(stacks, "--proj", "file", "--u", "proj/U.csv", "--v", "proj/V.csv")
    assert reloaded["statistic"] == learned["statistic"]
    assert reloaded["p_value"] == learned["p_value"]
    assert reloaded["provenance"] == "file"


def test_learn_proj_warns_when_d_exceeds_rank(tmp_path):
    rng = np.random.default_rng(3)
    n = 20
    x = rng.normal(size=(n, 1))
    base = x @ x.T
    # Rank-one noiseless difference everywhere, so d = 3 exceeds the held-out rank.
    other = base + np.outer(rng.normal(size=n), rng.normal(size=n))
    write_stack(tmp_path / "a.txt", [base, base])
    write_stack(tmp_path / "b.txt", [other, other])
    run("learn-proj", "-1", "a.txt", "-2", "b.txt", "--hypothesis", "rows=1..5,cols=13..20",
        "--d", "3", "--out-dir", "p", cwd=tmp_path)
    manifest = json.loads((tmp_path / "p" / "manifest.json").read_text())
    jsonschema.validate(manifest, MANIFEST_SCHEMA)
    assert any("padded" in w for w in manifest["warnings"])


def test_pair_list_hypothesis(stacks):
    (stacks / "pairs.txt").write_text("".join(f"{i} {j}\n" for i in range(1, 7) for j in range(19, 27)))
    from_pairs = report(stacks, "--proj", "block", hypothesis="pairs.txt")
    from_rect = report(stacks, "--proj", "block")
    assert from_pairs["hypothesis_size"] == 48
    assert from_pairs["statistic"] == pytest.approx(from_rect["statistic"], rel=1e-12)


def test_simulate_requires_seed_and_is_reproducible(tmp_path):
    scen = ROOT / "scenarios" / "smoke.json"
    run("simulate", "--config", scen, cwd=tmp_path, check_code=2)
    start = time.monotonic()
    run("simulate", "--config", scen, "--seed", "9", "-o", "a.csv", cwd=tmp_path)
    assert time.monotonic() - start < 5.0
    run("simulate", "--config", scen, "--seed", "9", "-o", "b.csv", cwd=tmp_path,
        env={"MESONET_THREADS": "2"})
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    rows = list(csv.DictReader(io.StringIO((tmp_path / "a.csv").read_text())))
    assert [r["method"] for r in rows] == ["Proj-2", "Basic", "RandProj-2", "BlockProj"]
    (tmp_path / "broken.json").write_text('{"n": 10, "rows": "1..20"}')
    run("simulate", "--config", "broken.json", "--seed", "1", cwd=tmp_path, check_code=2)


def test_power_curve(tmp_path):
    proc = run("power", "--psi", "0:20:2", "--d", "2", "--m", "5", "--alpha", "0.05", cwd=tmp_path)
    rows = list(csv.DictReader(io.StringIO(proc.stdout)))
    power = [float(r["power"]) for r in rows]
    assert float(rows[0]["psi"]) == 0.0
    assert power[0] == pytest.approx(0.05, abs=1e-12)
    assert all(b > a for a, b in zip(power, power[1:]))


def test_replay_reproduces_outputs(stacks):
    run("test", "-1", "a.txt", "-2", "b.txt", "--hypothesis", RECT, "--d", "2", "-o", "r.json",
        cwd=stacks)
    proc = run("replay", "r.json.manifest.json", cwd=stacks)
    assert "identical" in proc.stdout.lower() or "match" in proc.stdout.lower()
    (stacks / "b.txt").write_text((stacks / "a.txt").read_text())
    assert run("replay", "r.json.manifest.json", cwd=stacks, check_code=None).returncode != 0
