import json
import os
import pathlib
import subprocess

import numpy as np
import pytest

import mesonet

ROOT = pathlib.Path(__file__).resolve().parents[2]
CLI = os.environ.get("MESONET_CLI", str(ROOT / "build" / "tools" / "mesonet"))
SCENARIO = (ROOT / "scenarios" / "gaussian_ip_alt.json").read_text()


def gaussian_pair(seed, n=20, m=3, shift=0.0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 2))
    theta = x @ x.T
    theta2 = theta.copy()
    theta2[:5, 12:] += shift
    a = [theta + rng.normal(size=(n, n)) for _ in range(m)]
    b = [theta2 + rng.normal(size=(n, n)) for _ in range(m)]
    return a, b


def test_version_and_errors():
    assert mesonet.__version__
    assert issubclass(mesonet.DegenerateSignalError, mesonet.NumericalError)
    with pytest.raises(mesonet.ArgumentError):
        mesonet.HypothesisSet.rectangle([], [1])


def test_basic_equals_gp_with_identity():
    a, b = gaussian_pair(1, shift=0.5)
    data = mesonet.TwoSampleData(a, b)
    s = mesonet.HypothesisSet.rectangle(range(5), range(12, 20))
    gp = mesonet.stat_GP(data, s, mesonet.ProjectionPair.general(np.eye(s.size)))
    basic = mesonet.basic_gaussian_f_test(data, s)
    assert gp["statistic"] == pytest.approx(basic["statistic"], rel=1e-10)
    assert 0.0 <= gp["p_value"] <= 1.0


def test_learned_projection_is_orthonormal_and_swap_invariant():
    a, b = gaussian_pair(2, shift=1.0)
    s = mesonet.HypothesisSet.rectangle(range(5), range(12, 20))
    p = mesonet.learn_projections_rect(mesonet.TwoSampleData(a, b), s, 2)
    q = mesonet.learn_projections_rect(mesonet.TwoSampleData(b, a), s, 2)
    assert np.allclose(p.left.T @ p.left, np.eye(2), atol=1e-10)
    assert mesonet.projector_distance(p.left, q.left) < 1e-10
    assert p.basis.shape == (40, 4)


def test_identical_samples_and_degenerate_learning():
    a, _ = gaussian_pair(3)
    data = mesonet.TwoSampleData(a, a)
    s = mesonet.HypothesisSet.rectangle(range(5), range(12, 20))
    rep = mesonet.stat_GP(data, s, mesonet.block_projection(s))
    assert rep["p_value"] == 1.0 and rep["reject"] is False
    with pytest.raises(mesonet.DegenerateSignalError):
        mesonet.learn_projections_rect(data, s, 2)


def test_special_functions_and_power():
    assert mesonet.noncentral_f_cdf(2.0, 3, 20, 0.0) == pytest.approx(mesonet.f_cdf(2.0, 3, 20), abs=1e-12)
    assert mesonet.power_oracle_GP(0.0, 4, 32) == pytest.approx(0.05, abs=1e-12)
    assert mesonet.power_oracle_GP(10.0, 4, 32) > mesonet.power_oracle_GP(5.0, 4, 32)


def test_convenience_wrapper_logit():
    rng = np.random.default_rng(4)
    n = 20
    p = np.full((n, n), 0.3)
    a = [(rng.random((n, n)) < p).astype(float) for _ in range(10)]
    b = [(rng.random((n, n)) < p).astype(float) for _ in range(10)]
    rep = mesonet.two_sample_test(a, b, range(5), range(12, 20), d=2, family="logit",
                                  learn="impute", correction="density")
    assert rep["method"] == "E"
    assert 0.0 <= rep["p_value"] <= 1.0


def test_run_experiment_deterministic():
    scen = json.loads((ROOT / "scenarios" / "smoke.json").read_text())
    text = json.dumps(scen)
    one = mesonet.run_experiment(text, seed=5, reps=3, threads=1)
    two = mesonet.run_experiment(text, seed=5, reps=3, threads=2)
    assert one == two
    assert one.splitlines()[0] == "method,m,d_or_p,regime,rate,se,failures"


@pytest.mark.skipif(not pathlib.Path(CLI).exists(), reason="CLI not built")
def test_simulated_replication_round_trip_through_cli(tmp_path):
    data, theta1, theta2, s = mesonet.generate(SCENARIO, 10, 11)
    for g in (1, 2):
        mesonet.write_stack(str(tmp_path / f"s{g}.txt"), [data.layer(g, k) for k in range(data.layers)])
    reread = mesonet.TwoSampleData(mesonet.read_stack(str(tmp_path / "s1.txt")),
                                   mesonet.read_stack(str(tmp_path / "s2.txt")))
    p = mesonet.learn_projections_rect(data, s, 6)
    library = mesonet.stat_GP(data, s, p)
    assert mesonet.stat_GP(reread, s, p)["statistic"] == library["statistic"]
    subprocess.run([CLI, "test", "-1", "s1.txt", "-2", "s2.txt", "--hypothesis",
                    "rows=1..20,cols=71..100", "--d", "6", "--stat", "GP", "-o", "r.json"],
                   cwd=tmp_path, check=True, capture_output=True)
    cli = json.loads((tmp_path / "r.json").read_text())
    assert cli["statistic"] == library["statistic"]
    assert cli["p_value"] == library["p_value"]
