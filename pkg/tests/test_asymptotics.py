import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dekernel.asymptotics import (
    AsymptoticSpec,
    MisspecifiedTruth,
    beta_density,
    conditional_variance_ratio,
    de1k_bias,
    de1k_variance,
    misspecified_bias,
    table4_bias_variance,
    uniform_density,
    variance_ratio_study,
)
from dekernel.errors import DomainError
from dekernel.growth import GrowthLaw
from dekernel.kernels import GAUSSIAN, KernelMoments, ds_variance_constant, kernel_moments
from dekernel.localfit import Dataset, de1k_fit

M = kernel_moments(GAUSSIAN)
U = uniform_density()
EXP1 = GrowthLaw("EXP", 1.0)


def test_densities():
    f, fp, fpp = U.ratios(0.3)
    assert (f, fp, fpp) == (1.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        U.ratios(1.5)
    b = beta_density(2.0, 3.0)
    x, eps = 0.3, 1e-5
    assert b.pdf(x) == pytest.approx(12 * x * (1 - x) ** 2)
    assert b.dpdf(x) == pytest.approx((b.pdf(x + eps) - b.pdf(x - eps)) / (2 * eps), rel=1e-7)
    assert b.d2pdf(x) == pytest.approx((b.dpdf(x + eps) - b.dpdf(x - eps)) / (2 * eps), rel=1e-6)


def test_de1k_bias_examples():
    assert de1k_bias(1, 1.0, 1.0, 0.1, M, U, 0.5) == pytest.approx(0.005, rel=1e-9)
    assert de1k_bias(2, 1.0, 1.0, 0.1, M, U, 0.5) == pytest.approx(5e-5, rel=1e-9)
    assert de1k_bias(3, 1.0, 1.0, 0.1, M, U, 0.5) == pytest.approx(1.25e-5, rel=1e-9)
    with pytest.raises(DomainError):
        de1k_bias(1, 1.0, 1.0, 0.1, M, beta_density(2, 2), 0.0)
    with pytest.raises(ValueError):
        de1k_bias(6, 1.0, 1.0, 0.1, M, U, 0.5)


@given(k=st.integers(1, 5), g=st.floats(0.01, 100), c=st.floats(0.1, 10))
def test_de1k_bias_homogeneous_in_g(k, g, c):
    b1 = de1k_bias(k, 0.9, g, 0.1, M, beta_density(1, 0.5), 0.4)
    b2 = de1k_bias(k, 0.9, c * g, 0.1, M, beta_density(1, 0.5), 0.4)
    assert b2 == pytest.approx(c * b1, rel=1e-12)


def test_de1k_variance_examples():
    assert de1k_variance(0.0, 100, 0.1, M, U, 0.5) == 0.0
    assert de1k_variance(0.1, 100, 0.1, M, U, 0.5) == pytest.approx(0.01 * 0.28209479177 / 10, rel=1e-9)
    v1 = de1k_variance(0.3, 50, 0.2, M, U, 0.5)
    assert de1k_variance(0.3, 100, 0.2, M, U, 0.5) == pytest.approx(v1 / 2, rel=1e-15)
    assert de1k_variance(0.3, 50, 0.4, M, U, 0.5) == pytest.approx(v1 / 2, rel=1e-15)


def test_de1k_bias_matches_dense_design():
    x = np.linspace(0, 1, 4001)
    data = Dataset(x, np.exp(x))
    h = 0.05
    emp = de1k_fit(data, 1, 1.0, h, GAUSSIAN, 0.5) - math.exp(0.5)
    assert emp == pytest.approx(de1k_bias(1, 1.0, math.exp(0.5), h, M, U, 0.5), rel=0.15)


def _row(method, h=0.1, x=0.5, density=U):
    spec = AsymptoticSpec(method, EXP1, 0.1, 100, h)
    return table4_bias_variance(spec, math.exp(x), density, M, x)


def test_table4_rows():
    g = math.exp(0.5)
    nw = _row("NW")
    assert nw[0] == pytest.approx(0.5 * g * 0.01, rel=1e-9)
    assert _row("LL") == _row("DE1-1")
    assert _row("NW") == _row("LL")
    b = beta_density(1, 0.5)
    assert _row("LL", density=b) == _row("DE1-1", density=b)
    assert _row("NW", density=b) != _row("LL", density=b)
    for k in range(1, 6):
        bias, var = _row(f"DE1-{k}", density=b)
        assert bias == de1k_bias(k, 1.0, g, 0.1, M, b, 0.5)
        assert var == de1k_variance(0.1, 100, 0.1, M, b, 0.5)


def test_table4_lq_lc_ds():
    g, h = math.exp(0.5), 0.1
    c = (M.mu[2] * M.mu[6] - M.mu[4] ** 2) / (M.mu[2] ** 2 - M.mu[4]) / 24
    lq_b, lq_v = _row("LQ")
    assert lq_b == pytest.approx(c * g * h**4, rel=1e-12)
    assert c == pytest.approx((15 - 9) / (1 - 3) / 24, rel=1e-9)
    factor = (M.mu[4] ** 2 * M.v[0] - 2 * M.mu[2] * M.mu[4] * M.v[2] + M.mu[2] ** 2 * M.v[4]) / (M.mu[2] ** 2 - M.mu[4]) ** 2
    assert lq_v == pytest.approx(0.01 * factor / (100 * h), rel=1e-12)
    assert _row("LC") == _row("LQ")  # uniform design kills the f' term
    ds_b, ds_v = _row("DS")
    assert ds_b == pytest.approx((1 - 3) / 4 * g * h**4, rel=1e-9)
    assert ds_v == pytest.approx(0.01 * ds_variance_constant(GAUSSIAN) / (100 * h), rel=1e-12)


def test_table4_errors():
    fake = KernelMoments(mu=(1, 0, 1, 0, 1, 0, 1), v=(0.3,) * 7, rk=0.3)
    spec = AsymptoticSpec("LQ", EXP1, 0.1, 100, 0.1)
    with pytest.raises(DomainError):
        table4_bias_variance(spec, 1.0, U, fake, 0.5)
    with pytest.raises(ValueError):
        table4_bias_variance(AsymptoticSpec("LOESS", EXP1, 0.1, 100, 0.1), 1.0, U, M, 0.5)
    with pytest.raises(ValueError):
        table4_bias_variance(AsymptoticSpec("NW", GrowthLaw("SUBEXP", 1.0, 0.5), 0.1, 100, 0.1), 1.0, U, M, 0.5)
    with pytest.raises(DomainError):
        AsymptoticSpec("NW", EXP1, 0.1, 100, 0.0)


def test_misspecified_reduction_and_ordering():
    b = beta_density(1, 0.5)
    for density in (U, b):
        truth = MisspecifiedTruth(1.0, 0.0)
        for m in ("NW", "LL", "DE1-1"):
            spec = AsymptoticSpec(m, EXP1, 0.1, 100, 0.1)
            want = table4_bias_variance(spec, math.exp(0.4), density, M, 0.4)[0]
            assert misspecified_bias(m, truth, density, M, 0.1, 0.4) == pytest.approx(want, rel=1e-12)
    t = MisspecifiedTruth(1.0, 0.1)
    assert misspecified_bias("LL", t, U, M, 0.1, 0.5) == misspecified_bias("NW", t, U, M, 0.1, 0.5)
    assert abs(misspecified_bias("DE1-1", t, U, M, 0.1, 0.5)) < abs(misspecified_bias("NW", t, U, M, 0.1, 0.5))
    with pytest.raises(ValueError):
        misspecified_bias("LQ", t, U, M, 0.1, 0.5)
    with pytest.raises(DomainError):
        MisspecifiedTruth(0.0, 0.1)


def test_misspecified_curvature_modes():
    t = MisspecifiedTruth(1.0, 0.2)
    x, eps = 0.7, 1e-4
    numeric = (t.dg(x + eps) - t.dg(x - eps)) / (2 * eps)
    assert t.d2g(x, corrected=True) == pytest.approx(numeric, rel=1e-7)
    assert t.d2g(x) == pytest.approx(((1 - 2 * x * 0.2) ** 2 - 2 * x * 0.2) * t.g(x))


def test_variance_ratio_by_hand(rng):
    x = rng.uniform(0, 1, 10)
    h = 0.07
    r = conditional_variance_ratio(x, x, 1, 1.0, h)
    i = 3
    w = np.exp(-0.5 * ((x - x[i]) / h) ** 2)
    s = 1 + (x - x[i])
    de = np.sum(s**2 * w**2) / np.sum(s**2 * w) ** 2
    nw = np.sum(w**2) / np.sum(w) ** 2
    assert r[i] == pytest.approx(de / nw, rel=1e-12)


def test_variance_ratio_lambda_zero_is_one():
    res = variance_ratio_study(10, 0.0, seed=4)
    np.testing.assert_allclose(res.ratios, 1.0, rtol=0, atol=1e-15)
    ratios, mean, lo, hi = res
    assert mean == pytest.approx(1.0) and lo <= mean <= hi


def test_variance_ratio_errors():
    with pytest.raises(ValueError):
        variance_ratio_study(1, 1.0)
