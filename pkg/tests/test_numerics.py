import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpauth.numerics import (
    DbValue,
    RngStream,
    db_to_linear,
    dbm_to_watts,
    gauss_integral_power_cdf,
    sample_complex_normal,
    sample_laplace,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
    watts_to_dbm,
)

# 40-digit erf / bisection oracle (mpmath), evaluated once and frozen
PHI_3_090232 = 0.99899999896910490543
Q_0_999 = 3.0902323061678135415


def test_cdf_examples():
    assert std_normal_cdf(0.0) == 0.5
    assert abs(std_normal_cdf(40.0) - 1.0) <= 1e-15
    assert abs(std_normal_cdf(3.090232) - 0.999) <= 1e-6
    assert abs(std_normal_cdf(3.090232) - PHI_3_090232) <= 1e-12


def test_quantile_examples():
    assert std_normal_quantile(0.5) == 0.0
    assert abs(std_normal_quantile(0.999) - 3.090232) <= 1e-5
    assert abs(std_normal_quantile(0.999) - Q_0_999) <= 1e-12
    assert abs(std_normal_quantile(0.001) + 3.090232) <= 1e-5


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_quantile_domain(p):
    with pytest.raises(ValueError):
        std_normal_quantile(p)


def test_pdf_examples():
    assert abs(std_normal_pdf(0.0) - 0.3989422804) <= 1e-9
    assert std_normal_pdf(40.0) <= 1e-300
    assert std_normal_pdf(1.7) == std_normal_pdf(-1.7)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_cdf_quantile_inverse(p):
    assert abs(std_normal_cdf(std_normal_quantile(p)) - p) <= 1e-9


@given(st.floats(-30, 30), st.floats(-30, 30))
def test_cdf_monotone(a, b):
    lo, hi = sorted((a, b))
    assert std_normal_cdf(lo) <= std_normal_cdf(hi)


# --- order-statistic integral ---------------------------------------------


def _trapezoid_oracle(mu0, s0, mu1, s1, n):
    """Plain trapezoid on a fine grid in linear domain (independent of quad)."""
    from scipy.special import ndtr

    t = np.linspace(mu1 - 12 * s1, mu1 + 12 * s1, 400001)
    f = ndtr((t - mu0) / s0) ** (n - 1) * np.exp(-0.5 * ((t - mu1) / s1) ** 2) / (s1 * math.sqrt(2 * math.pi))
    return float(np.sum((f[1:] + f[:-1]) * 0.5 * np.diff(t)))


def test_power_cdf_trivial_cases():
    assert gauss_integral_power_cdf(0, 1, 0, 1, 1) == 1.0
    assert abs(gauss_integral_power_cdf(0, 1, 0, 1, 2) - 0.5) <= 1e-6


@pytest.mark.parametrize("k", [4, 16])
def test_power_cdf_chance_level(k):
    assert abs(gauss_integral_power_cdf(0, 1, 0, 1, k) - 1 / k) <= 1e-6


@pytest.mark.parametrize("k", [4, 16])
def test_power_cdf_chance_level_monte_carlo(k):
    # argmax over k iid normals: the first is the max with probability 1/k
    rng = np.random.default_rng(1234)
    x = rng.standard_normal((200_000, k))
    emp = np.mean(np.argmax(x, axis=1) == 0)
    assert abs(emp - gauss_integral_power_cdf(0, 1, 0, 1, k)) < 4 * math.sqrt(emp * (1 - emp) / 200_000)


@pytest.mark.parametrize(
    "args",
    [(0, 1, 2, 1.5, 256), (0, 32, 100, 45.25, 256), (0, 2.0, 3.0, 1.0, 1000), (1, 0.5, 0.0, 2.0, 7)],
)
def test_power_cdf_matches_trapezoid(args):
    assert abs(gauss_integral_power_cdf(*args) - _trapezoid_oracle(*args)) <= 1e-6


def test_power_cdf_huge_key_space_stable():
    # 43-sigma separation beats the maximum of 2^16 normals
    L = 2048
    p = gauss_integral_power_cdf(0, math.sqrt(L / 2), L, math.sqrt(L), 2**16)
    assert abs(p - 1.0) <= 1e-9
    assert 0.0 <= gauss_integral_power_cdf(0, 1, 0, 1, 2**20) <= 1e-5


def test_power_cdf_monotone_in_cardinality():
    for mu1 in (0.5, 2.0, 4.0):
        vals = [gauss_integral_power_cdf(0, 1, mu1, 1.3, k) for k in (2, 4, 16, 64, 256, 4096, 2**16)]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_power_cdf_separation_limit():
    assert gauss_integral_power_cdf(0, 1, 12, 1, 2) > 1 - 1e-6


def test_power_cdf_domain():
    with pytest.raises(ValueError):
        gauss_integral_power_cdf(0, 0, 0, 1, 4)
    with pytest.raises(ValueError):
        gauss_integral_power_cdf(0, 1, 0, -1, 4)


# --- samplers --------------------------------------------------------------


def test_complex_normal_moments():
    x = sample_complex_normal(RngStream(11, 3), 10**6)
    assert abs(x.real.mean()) < 0.005 and abs(x.imag.mean()) < 0.005
    assert abs(np.mean(np.abs(x) ** 2) - 1.0) < 0.01
    assert abs(x.real.var() - 0.5) < 0.005


def test_complex_normal_deterministic():
    a = sample_complex_normal(RngStream(5, 9), 100)
    b = sample_complex_normal(RngStream(5, 9), 100)
    assert np.array_equal(a, b)


def test_streams_independent():
    a = RngStream(1, 0).generator().standard_normal(10**5)
    b = RngStream(1, 1).generator().standard_normal(10**5)
    c = RngStream(1, 0).child(1).generator().standard_normal(10**5)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.02
    assert abs(np.corrcoef(a, c)[0, 1]) < 0.02


def test_streams_order_independent():
    s = [RngStream(3, i) for i in range(5)]
    forward = [sample_complex_normal(x, 8) for x in s]
    backward = [sample_complex_normal(x, 8) for x in reversed(s)][::-1]
    assert all(np.array_equal(a, b) for a, b in zip(forward, backward))


def test_stream_rejects_out_of_range():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(0, 2**64)


def test_laplace_moments():
    spread = math.radians(10.0)
    x = sample_laplace(RngStream(2, 0), 0.3, spread, 10**6)
    assert abs(x.std() / spread - 1.0) < 0.02
    assert abs(np.median(x) - 0.3) < math.radians(0.1)
    assert sample_laplace(RngStream(2, 1), 0.0, 0.1) == sample_laplace(RngStream(2, 1), 0.0, 0.1)


def test_laplace_rejects_bad_spread():
    with pytest.raises(ValueError):
        sample_laplace(RngStream(0), 0.0, 0.0)


# --- units -----------------------------------------------------------------


def test_dbm_conversions():
    assert dbm_to_watts(0.0).value == pytest.approx(1e-3, rel=1e-15)
    assert dbm_to_watts(DbValue(30.0, "dBm")).value == pytest.approx(1.0, rel=1e-15)
    assert abs(dbm_to_watts(-85.0).value - 3.1622776601683794e-12) <= 1e-15
    assert db_to_linear(DbValue(3.0, "dB")) == pytest.approx(1.9952623149688795)


def test_unit_tag_mismatch():
    with pytest.raises(ValueError):
        dbm_to_watts(DbValue(1.0, "dB"))
    with pytest.raises(ValueError):
        db_to_linear(DbValue(1.0, "dBm"))
    with pytest.raises(ValueError):
        DbValue(1.0, "furlong")


@given(st.floats(-200, 100))
def test_dbm_round_trip(x):
    back = watts_to_dbm(dbm_to_watts(x)).value
    assert abs(back - x) <= 1e-12 * max(1.0, abs(x))
