import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dekernel.kernels import GAUSSIAN
from dekernel.simlab import (
    STUDY_METHODS,
    LambdaMode,
    MethodResult,
    Scenario,
    _fit_one,
    draw_dataset,
    emit_tables,
    mad_dump_rows,
    mad_score,
    method_from_label,
    run_study,
)


def test_scenario_means_and_validation():
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(Scenario(1).mean(x), np.exp(x))
    np.testing.assert_allclose(Scenario(2).mean(x), np.exp(x - 0.025 * x * x))
    np.testing.assert_allclose(Scenario(3).mean(x), np.exp(x - 0.1 * x * x))
    assert Scenario(2, n=10).column == "Scen. 2 (10)"
    with pytest.raises(ValueError):
        Scenario(4)
    with pytest.raises(ValueError):
        Scenario(1, design="normal")


def test_draw_dataset_determinism_and_noise():
    a = draw_dataset(Scenario(1), (3, 4))
    assert a == draw_dataset(Scenario(1), (3, 4))
    assert a != draw_dataset(Scenario(1), (3, 5))
    exact = draw_dataset(Scenario(2, noise_sd=0.0), 1)
    np.testing.assert_array_equal(exact.y, Scenario(2).mean(exact.x))
    big = draw_dataset(Scenario(1, n=100_000), 0)
    assert np.std(big.y - Scenario(1).mean(big.x)) == pytest.approx(0.1, rel=0.01)
    beta = draw_dataset(Scenario(1, n=20_000, design="beta"), 0)
    assert beta.x.mean() == pytest.approx(1 / 1.5, abs=0.01)


def test_mad_score():
    assert mad_score([1, 2, 3], [1, 2, 3]) == 0.0
    assert mad_score([1, 1, 1], [1, 2, 3]) == 1.0
    assert mad_score([0, 0, 0, 0], [1, 2, 3, 4]) == 2.5
    with pytest.raises(ValueError):
        mad_score([1, 2], [1])
    with pytest.raises(ValueError):
        mad_score([], [])


@given(seed=st.integers(0, 10_000), n=st.integers(1, 40))
def test_mad_score_sort_oracle(seed, n):
    r = np.random.default_rng(seed)
    a, b = r.normal(size=n), r.normal(size=n)
    d = sorted(abs(p - q) for p, q in zip(a, b))
    want = d[n // 2] if n % 2 else 0.5 * (d[n // 2 - 1] + d[n // 2])
    assert mad_score(a, b) == pytest.approx(want, abs=1e-15)


def test_method_result_statistics():
    r = MethodResult("NW", (1.0, 2.0, 4.0), (0.1, 0.1, 0.1), 0)
    assert r.mean_mad == pytest.approx(7 / 3)
    assert r.se_mad == pytest.approx(np.std([1, 2, 4], ddof=1) / math.sqrt(3))
    assert math.isnan(MethodResult("NW", (1.0,), (0.1,), 0).se_mad)
    assert math.isnan(MethodResult("NW", (), (), 2).mean_mad)


def test_lambda_mode_and_labels():
    assert str(LambdaMode.known(2)) == "known(2)"
    assert str(LambdaMode.estimate()) == "estimate"
    assert method_from_label("DE1-4", 1.0).k == 4
    with pytest.raises(ValueError):
        method_from_label("XYZ")


def test_noiseless_nls_exact():
    rep = run_study(Scenario(1, noise_sd=0.0), ("NLS",), replicates=1, seed=0)
    assert rep["NLS"].mean_mad <= 1e-6
    rep = run_study(Scenario(1, noise_sd=0.0), ("NLS",), replicates=1, seed=0, lambda_mode=LambdaMode.estimate())
    assert rep["NLS"].mean_mad <= 1e-6


def test_noiseless_de_beats_nw():
    labels = ("NW", "DE1-1", "DE1-2", "DE1-3", "DE1-4", "DE1-5")
    rep = run_study(Scenario(1, noise_sd=0.0), labels, replicates=3, seed=2)
    for label in labels[1:]:
        for a, b in zip(rep[label].mads, rep["NW"].mads):
            assert a <= b


def test_run_study_invariants():
    sc = Scenario(3, n=10, design="beta")
    a = run_study(sc, ("NW", "DE1-1", "LC"), replicates=6, seed=5)
    b = run_study(sc, ("LC", "DE1-1", "NW"), replicates=6, seed=5)
    for m in ("NW", "DE1-1", "LC"):
        assert a[m].mads == b[m].mads
        res = a[m]
        assert len(res.mads) + res.failures == 6
        assert len(res.replicate_ids) == len(res.mads)
        assert res.se_mad == np.std(res.mads, ddof=1) / math.sqrt(len(res.mads))
    c = run_study(sc, ("NW", "DE1-1", "LC"), replicates=6, seed=5, workers=2)
    assert all(a[m].mads == c[m].mads for m in a.methods)
    with pytest.raises(ValueError):
        run_study(sc, ("NW",), replicates=0)


def test_fit_one_nls_modes():
    data = draw_dataset(Scenario(1), 0)
    known, h = _fit_one(data, "NLS", 1.0, GAUSSIAN, LambdaMode.known(1.0))
    assert h is None
    c = known[0] / math.exp(data.x[0])
    np.testing.assert_allclose(known, c * np.exp(data.x))
    est, _ = _fit_one(data, "NLS", 1.0, GAUSSIAN, LambdaMode.estimate())
    assert not np.allclose(est, known)


def test_mad_dump_rows_use_replicate_ids():
    rep = run_study(Scenario(1, n=10), ("NW",), replicates=3, seed=1)
    rows = list(mad_dump_rows(rep))
    assert [r[4] for r in rows] == list(rep["NW"].replicate_ids)
    assert rows[0][:4] == (1, 10, "uniform", "NW")


def test_emit_tables_shape_and_order():
    with pytest.raises(ValueError):
        emit_tables([])
    reports = [run_study(Scenario(s, n=n), ("NLS", "NW"), replicates=2, seed=0) for n in (10, 25) for s in (3, 1, 2)]
    doc = emit_tables(reports)
    assert doc.columns == tuple(f"Scen. {s} ({n})" for n in (25, 10) for s in (1, 2, 3))
    assert doc.rows == ("NW", "NLS")
    assert doc.mean[0, 0] == pytest.approx(1000 * reports[4]["NW"].mean_mad)
    one = emit_tables(reports[:1])
    assert one.mean.shape == (2, 1)
    assert doc.to_csv().splitlines()[0] == "method," + ",".join(doc.columns)
    with pytest.raises(ValueError):
        emit_tables([reports[0], reports[0]])


def test_emit_tables_missing_cell_warns():
    a = run_study(Scenario(1), ("NW",), replicates=1, seed=0)
    b = run_study(Scenario(2), ("NW", "LL"), replicates=1, seed=0)
    with pytest.warns(UserWarning, match="LL / Scen. 1"):
        doc = emit_tables([a, b])
    assert "NA" in doc.to_text()
    assert len(STUDY_METHODS) == 10
