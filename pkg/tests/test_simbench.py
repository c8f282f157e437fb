import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsdr.simbench import (
    CellResult,
    MethodSummary,
    SimConfig,
    gen_response,
    gen_scenario,
    results_to_csv,
    results_to_table,
    run_cell,
    spearman,
)


def test_scenario_a_moments():
    rng = np.random.default_rng(0)
    x = gen_scenario("A", 4000, 10, rng)
    assert x.shape == (4000, 10)
    assert np.max(np.abs(x.mean(axis=0))) < 4.0 / np.sqrt(4000)
    assert np.all(np.abs(x.var(axis=0) - 1.0) < 0.2)


def test_scenario_b_mixture_variance():
    rng = np.random.default_rng(1)
    x = gen_scenario("B", 4000, 10, rng)
    # mixture of N(-1, 1) and N(1, 1): variance 1 + 1 = 2
    assert np.all(np.abs(x.var(axis=0) - 2.0) < 0.3)
    assert np.max(np.abs(x.mean(axis=0))) < 0.15


def test_scenario_c_correlation():
    rng = np.random.default_rng(2)
    x = gen_scenario("C", 4000, 6, rng)
    corr = np.corrcoef(x.T)
    off = corr[np.triu_indices(6, k=1)]
    assert np.all(np.abs(off - 0.4) < 0.1)


def test_scenario_unknown():
    with pytest.raises(ValueError):
        gen_scenario("D", 10, 2, np.random.default_rng(0))


def test_response_models():
    rng = np.random.default_rng(3)
    x = gen_scenario("A", 500, 4, rng)
    # model III: truth bounded by the sine range
    _, truth3 = gen_response("III", x, np.random.default_rng(4))
    assert np.all(np.abs(truth3) <= 1.0)
    # model IV: truth is literally X1
    _, truth4 = gen_response("IV", x, np.random.default_rng(5))
    np.testing.assert_array_equal(truth4, x[:, 0])
    # model I at (1, 0, ...): r log r = 1 * log 1 = 0, and finite at the origin
    probe = np.zeros((2, 4))
    probe[0, 0] = 1.0
    _, truth1 = gen_response("I", probe, np.random.default_rng(6))
    assert truth1[0] == 0.0
    assert truth1[1] == 0.0
    # models II and VI share the same link
    _, t2 = gen_response("II", x, np.random.default_rng(7))
    _, t6 = gen_response("VI", x, np.random.default_rng(7))
    np.testing.assert_array_equal(t2, t6)
    with pytest.raises(ValueError):
        gen_response("VII", x, rng)
    with pytest.raises(ValueError):
        gen_response("I", x[:, :1], rng)


def test_response_noise_structure():
    rng = np.random.default_rng(8)
    x = gen_scenario("A", 50000, 2, rng)
    # mean model: y - truth is N(0, 0.25)
    y, truth = gen_response("II", x, np.random.default_rng(9))
    resid = y[:, 0] - truth
    assert abs(resid.var() - 0.25) < 0.01
    assert abs(resid.mean()) < 0.01
    # variance model: y / truth is the same noise
    y4, truth4 = gen_response("IV", x, np.random.default_rng(10))
    ratio = y4[:, 0] / truth4
    assert abs(ratio.var() - 0.25) < 0.01


def test_generators_reproducible():
    x1 = gen_scenario("B", 100, 5, np.random.default_rng(11))
    x2 = gen_scenario("B", 100, 5, np.random.default_rng(11))
    np.testing.assert_array_equal(x1, x2)
    y1, t1 = gen_response("V", x1, np.random.default_rng(12))
    y2, t2 = gen_response("V", x2, np.random.default_rng(12))
    np.testing.assert_array_equal(y1, y2)
    np.testing.assert_array_equal(t1, t2)


def test_spearman_trivial():
    v = np.array([3.0, 1.0, 4.0, 1.5])
    assert spearman(v, v) == pytest.approx(1.0)
    assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


def test_spearman_ties():
    assert spearman([1, 2, 2, 4], [10, 20, 20, 40]) == pytest.approx(1.0)
    # hand-computed: ranks of u are 1, 2.5, 2.5, 4; ranks of v are 4, 2.5, 2.5, 1
    assert spearman([1, 2, 2, 4], [40, 20, 20, 10]) == pytest.approx(-1.0)
    # partial ties against untied ranks, hand enumeration
    u = [1.0, 1.0, 2.0]
    v = [1.0, 2.0, 3.0]
    # ranks u = (1.5, 1.5, 3), v = (1, 2, 3); pearson of those is sqrt(3)/2
    assert spearman(u, v) == pytest.approx(np.sqrt(3.0) / 2.0)


def test_spearman_errors():
    with pytest.raises(ValueError):
        spearman([1.0], [2.0])
    with pytest.raises(ValueError):
        spearman([1, 2, 3], [1, 2])
    with pytest.raises(ValueError, match="constant"):
        spearman([1, 1, 1], [1, 2, 3])


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.integers(-1000, 1000), min_size=3, max_size=30).filter(
        lambda v: len(set(v)) > 1
    ),
    st.integers(0, 2**32 - 1),
)
def test_spearman_monotone_invariance(values, seed):
    rng = np.random.default_rng(seed)
    u = np.array(values, dtype=float)
    v = rng.standard_normal(len(values))
    base = spearman(u, v)
    assert spearman(np.exp(u / 100.0), v) == base
    assert spearman(u**3, v) == base
    assert spearman(2.5 * u + 7.0, v) == base


def test_spearman_range():
    rng = np.random.default_rng(13)
    for _ in range(20):
        u, v = rng.standard_normal(15), rng.standard_normal(15)
        assert -1.0 <= spearman(u, v) <= 1.0


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(model="VII", scenario="A")
    with pytest.raises(ValueError):
        SimConfig(model="I", scenario="Z")
    with pytest.raises(ValueError):
        SimConfig(model="I", scenario="A", methods=("magic",))
    with pytest.raises(ValueError):
        SimConfig(model="I", scenario="A", reps=0)


def _small_cfg(**kw):
    defaults = dict(
        model="II",
        scenario="A",
        methods=("gsir",),
        n_train=40,
        n_test=40,
        reps=3,
        p=3,
        seed=42,
    )
    defaults.update(kw)
    return SimConfig(**defaults)


def test_run_cell_deterministic_across_threads():
    r1 = run_cell(_small_cfg(), threads=1)
    r2 = run_cell(_small_cfg(), threads=3)
    s1, s2 = r1.summary("gsir"), r2.summary("gsir")
    assert s1.mean_truth == s2.mean_truth
    assert s1.sd_truth == s2.sd_truth
    assert s1.mean_resp == s2.mean_resp


def test_run_cell_variance_model_has_no_resp_column():
    r = run_cell(_small_cfg(model="IV", scenario="A"), threads=1)
    s = r.summary("gsir")
    assert s.mean_resp is None and s.sd_resp is None
    assert 0.0 <= s.mean_truth <= 1.0
    assert s.sd_truth >= 0.0
    assert r.valid


def test_run_cell_tune_once_mode():
    r = run_cell(_small_cfg(tune_once=True, reps=4), threads=1)
    assert r.failures == 0
    assert 0.0 <= r.summary("gsir").mean_truth <= 1.0


def test_cell_result_validity_threshold():
    cfg = _small_cfg(reps=100)
    s = MethodSummary("gsir", 0.5, 0.1, None, None, 1.0)
    assert CellResult(cfg, (s,), failures=5).valid
    assert not CellResult(cfg, (s,), failures=6).valid


def test_report_emission():
    results = [run_cell(_small_cfg(), threads=1), run_cell(_small_cfg(model="IV"), threads=1)]
    text = results_to_csv(results)
    lines = text.strip().splitlines()
    assert lines[0] == "model,scenario,method,mean_truth,sd_truth,mean_resp,sd_resp,reps,seed"
    assert len(lines) == 3
    assert lines[1].startswith("II,A,gsir,")
    # variance model leaves response columns empty
    fields = lines[2].split(",")
    assert fields[0] == "IV" and fields[5] == "" and fields[6] == ""
    table = results_to_table(results)
    assert table.splitlines()[0].split() == ["X", "Y|X", "GSIR"]
    assert len(table.strip().splitlines()) == 3
