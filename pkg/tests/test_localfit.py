import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize

from dekernel.errors import DomainError, UndefinedAtPoint
from dekernel.kernels import EPANECHNIKOV, GAUSSIAN
from dekernel.localfit import (
    Dataset,
    Method,
    de1k_fit,
    de1k_predict,
    fit_curve,
    kernel_weight_matrix,
    local_poly_fit,
    local_poly_predict,
    predict,
    taylor_weights,
)


def _weights(x, x0, h):
    return np.exp(-0.5 * ((x - x0) / h) ** 2) / (h * math.sqrt(2 * math.pi))


def _s(u, k, lam):
    return sum((lam * u) ** p / math.factorial(p) for p in range(k + 1))


# ---------------------------------------------------------------- Dataset / Method


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset([1, 2], [1])
    with pytest.raises(ValueError):
        Dataset([], [])
    with pytest.raises(ValueError):
        Dataset([1, np.nan], [1, 2])
    d = Dataset([1, 2, 3], [4, 5, 6])
    assert d.n == 3
    with pytest.raises(ValueError):
        d.x[0] = 5.0
    assert d.subset([0, 2]) == Dataset([1, 3], [4, 6])


def test_method_labels_and_validation():
    assert Method("DE1", k=3, lam=1.0).label == "DE1-3"
    assert Method("SUBEXP", k=2, lam=1.0, alpha=0.5).label == "SUBEXP-2"
    assert Method("NW").label == "NW"
    assert not Method("NLS").needs_bandwidth
    with pytest.raises(ValueError):
        Method("DE1", k=6, lam=1.0)
    with pytest.raises(ValueError):
        Method("DE1", k=1)
    with pytest.raises(ValueError):
        Method("SUBEXP", k=3, lam=1.0, alpha=0.5)
    with pytest.raises(ValueError):
        Method("LOESS")
    assert Method("DE1", k=1, lam=1.0).with_params(lam=0.0).lam == 0.0


# ---------------------------------------------------------------- weights


def test_taylor_weights_at_zero_and_closed_form():
    for k in range(6):
        assert taylor_weights(0.0, k, 2.7) == 1.0
    u = np.linspace(-1, 1, 11)
    for k in range(1, 6):
        np.testing.assert_allclose(taylor_weights(u, k, -1.3), _s(u, k, -1.3), rtol=1e-14)


def test_kernel_weight_matrix_floor_and_loo():
    x = np.array([0.0, 0.1, 50.0])
    u, w = kernel_weight_matrix(x, x, 0.1, GAUSSIAN, leave_one_out=True)
    assert np.all(np.diag(w) == 0)
    assert w[0, 2] == 0.0  # far beyond the 1e-12 relative floor
    with pytest.raises(DomainError):
        kernel_weight_matrix(x, x, 0.0, GAUSSIAN)


# ---------------------------------------------------------------- local polynomials


@given(
    a=st.floats(-5, 5), b=st.floats(-5, 5), h=st.floats(0.05, 3.0), x0=st.floats(-0.5, 1.5),
    seed=st.integers(0, 2**16),
)
def test_local_linear_reproduces_lines(a, b, h, x0, seed):
    x = np.random.default_rng(seed).uniform(0, 1, 9)
    try:
        val = local_poly_fit(Dataset(x, a + b * x), 1, h, GAUSSIAN, x0)
    except UndefinedAtPoint:
        return
    assert val == pytest.approx(a + b * x0, abs=1e-10 * (1 + abs(a) + abs(b)))


def test_single_point_nw():
    assert local_poly_fit(Dataset([0.3], [1.7]), 0, 0.5, GAUSSIAN, 0.3) == 1.7


def test_local_quadratic_matches_direct_minimisation(rng):
    x = rng.uniform(0, 1, 8)
    y = np.sin(3 * x) + rng.normal(0, 0.1, 8)
    h, x0 = 0.3, 0.45
    w = _weights(x, x0, h)

    def obj(beta):
        r = y - (beta[0] + beta[1] * (x - x0) + beta[2] * (x - x0) ** 2)
        return float(np.sum(w * r * r))

    start = np.polyfit(x - x0, y, 2)[::-1]
    best = optimize.minimize(obj, start, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 20000})
    assert local_poly_fit(Dataset(x, y), 2, h, GAUSSIAN, x0) == pytest.approx(best.x[0], abs=1e-8)


@pytest.mark.parametrize("degree", [0, 1, 2, 3])
def test_local_poly_matches_weighted_polyfit(degree, rng):
    x = rng.uniform(0, 1, 12)
    y = np.exp(x) + rng.normal(0, 0.1, 12)
    h = 0.25
    x0s = np.linspace(0.05, 0.95, 7)
    vals, ok = local_poly_predict(Dataset(x, y), degree, h, GAUSSIAN, x0s)
    assert ok.all()
    for x0, v in zip(x0s, vals):
        coef = np.polyfit(x - x0, y, degree, w=np.sqrt(_weights(x, x0, h)))
        assert v == pytest.approx(coef[-1], abs=1e-9)


def test_local_poly_undefined_when_underdetermined():
    data = Dataset([0.0, 1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(UndefinedAtPoint) as exc:
        local_poly_fit(data, 3, 1.0, GAUSSIAN, 0.5)
    assert exc.value.x0 == 0.5
    # compact kernel: no neighbours at all
    with pytest.raises(UndefinedAtPoint):
        local_poly_fit(data, 0, 0.1, EPANECHNIKOV, 10.0)


def test_local_poly_undefined_on_tied_design():
    data = Dataset([0.5, 0.5, 0.5, 0.5], [1.0, 2.0, 3.0, 4.0])
    vals, ok = local_poly_predict(data, 1, 1.0, GAUSSIAN, [0.5, 0.7])
    assert not ok.any()
    assert np.isnan(vals).all()


# ---------------------------------------------------------------- DE1-k


def test_de1k_matches_golden_section(rng):
    x = rng.uniform(0, 1, 10)
    y = np.exp(x) + rng.normal(0, 0.1, 10)
    k, lam, h, x0 = 3, 1.0, 0.2, 0.5
    w = _weights(x, x0, h)
    s = _s(x - x0, k, lam)
    res = optimize.minimize_scalar(lambda g: float(np.sum(w * (y - g * s) ** 2)), bracket=(0.0, 3.0), tol=1e-14)
    assert de1k_fit(Dataset(x, y), k, lam, h, GAUSSIAN, x0) == pytest.approx(res.x, abs=1e-8)


@given(k=st.integers(1, 5), lam=st.floats(-2, 2), c=st.floats(-10, 10), seed=st.integers(0, 2**16))
def test_de1k_exact_on_taylor_family(k, lam, c, seed):
    x = np.random.default_rng(seed).uniform(0, 1, 7)
    x0 = 0.4
    y = c * _s(x - x0, k, lam)
    assert de1k_fit(Dataset(x, y), k, lam, 0.3, GAUSSIAN, x0) == pytest.approx(c, abs=1e-10 * (1 + abs(c)))


@given(k=st.integers(1, 5), h=st.floats(0.02, 2.0), seed=st.integers(0, 2**16))
def test_de1k_lambda_zero_is_nadaraya_watson(k, h, seed):
    r = np.random.default_rng(seed)
    data = Dataset(r.uniform(0, 1, 11), r.normal(0, 1, 11))
    x0s = np.linspace(-0.2, 1.2, 15)
    a, oka = de1k_predict(data, k, 0.0, h, GAUSSIAN, x0s)
    b, okb = local_poly_predict(data, 0, h, GAUSSIAN, x0s)
    np.testing.assert_array_equal(oka, okb)
    np.testing.assert_array_equal(a[oka], b[okb])


def test_de1k_bounds_for_forward_design():
    # lam >= 0 and all x_i >= x0: estimate between 0 and max y / min S_k
    x = np.array([0.5, 0.6, 0.8, 0.9])
    y = np.array([1.0, 2.0, 0.5, 1.5])
    for k in range(1, 6):
        g = de1k_fit(Dataset(x, y), k, 1.5, 0.3, GAUSSIAN, 0.5)
        assert 0 <= g <= y.max() / _s(x - 0.5, k, 1.5).min()


def test_de1k_undefined_and_bad_k():
    data = Dataset([0.0, 0.1], [1.0, 1.0])
    with pytest.raises(UndefinedAtPoint):
        de1k_fit(data, 1, 1.0, 0.1, EPANECHNIKOV, 5.0)
    with pytest.raises(ValueError):
        de1k_fit(data, 0, 1.0, 0.1, GAUSSIAN, 0.0)
    with pytest.raises(ValueError):
        de1k_fit(data, 6, 1.0, 0.1, GAUSSIAN, 0.0)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_de1k_bias_rate(k):
    x = np.linspace(0, 1, 2001)
    data = Dataset(x, np.exp(x))
    hs = np.array([0.02, 0.04, 0.08, 0.16])
    bias = np.array([abs(de1k_fit(data, k, 1.0, h, GAUSSIAN, 0.5) - math.exp(0.5)) for h in hs])
    slope = np.polyfit(np.log(hs), np.log(bias), 1)[0]
    expected = k + 1 if k % 2 else k + 2
    assert abs(slope - expected) <= 0.25


# ---------------------------------------------------------------- predict / fit_curve


def test_predict_dispatch(rng):
    x = rng.uniform(0, 1, 10)
    data = Dataset(x, np.exp(x))
    vals, ok = predict(Method("NLS"), data, None, GAUSSIAN, [0.0, 1.0])
    np.testing.assert_allclose(vals, [1.0, math.e], rtol=1e-8)
    with pytest.raises(ValueError):
        predict(Method("NLS"), data, None, GAUSSIAN, x, leave_one_out=True)


def test_fit_curve_constant_data():
    data = Dataset([0.0, 0.5, 1.0], [2.5, 2.5, 2.5])
    curve = fit_curve(data, Method("NW"), 0.3, grid=np.linspace(0, 1, 9))
    assert len(curve) == 9
    np.testing.assert_allclose(curve.values[curve.defined], 2.5, rtol=1e-15)
    assert curve.method == "NW" and curve.h == 0.3


def test_fit_curve_de1_zero_lambda_equals_nw(rng):
    data = Dataset(rng.uniform(0, 1, 10), rng.normal(0, 1, 10))
    a = fit_curve(data, Method("DE1", k=1, lam=0.0), 0.2)
    b = fit_curve(data, Method("NW"), 0.2)
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.grid, data.x)
    assert a.params == {"k": 1, "lam": 0.0}


def test_fit_curve_flags_and_all_undefined():
    data = Dataset([0.0, 0.1], [1.0, 2.0])
    curve = fit_curve(data, Method("NW"), 0.1, EPANECHNIKOV, grid=[0.05, 3.0])
    np.testing.assert_array_equal(curve.defined, [True, False])
    assert np.isnan(curve.values[1])
    with pytest.raises(UndefinedAtPoint):
        fit_curve(data, Method("NW"), 0.1, EPANECHNIKOV, grid=[3.0, 4.0])
    with pytest.raises(ValueError):
        fit_curve(data, Method("NW"), 0.1, grid=[])
