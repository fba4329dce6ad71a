import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fpauth.channel import (
    ConfigError,
    Geometry,
    SystemConfig,
    _user_vector,
    noise_variance,
    pathloss_db,
    sample_eve_channel,
    sample_geometry,
    sample_realization,
    sample_user_channel,
    steering_vector,
)
from fpauth.numerics import RngStream, watts_to_dbm

# direct evaluation of the UMi formula in 40-digit arithmetic
PL_100_28 = 103.34316062684438
PL_10_28 = 82.34316062684438


def _geom(cfg, d_H=50.0, theta=0.2):
    K = cfg.K
    return Geometry(d_H=np.full(K, d_H), d_V=cfg.d_V, theta_los=np.full(K, theta), d_e=70.0,
                    theta_los_e=0.1, zeta_los_e=-0.3)


# --- config ------------------------------------------------------------------


def test_defaults():
    cfg = SystemConfig()
    assert (cfg.N, cfg.M, cfg.K, cfg.L_p, cfg.L_t) == (16, 6, 6, 10, 2048)
    assert cfg.n_an == 10
    assert cfg.p_fa == 0.001 and cfg.f_c == 28.0 and cfg.delta == 10.0


@pytest.mark.parametrize(
    "changes",
    [dict(Z=11), dict(Z=0), dict(K=16), dict(p_fa=0.0), dict(p_fa=1.0), dict(L_t=0),
     dict(key_space_size=1), dict(beta=-1.0), dict(d_e_range=(0.0, 10.0)), dict(d_H_range=(5.0, 1.0))],
)
def test_config_rejects(changes):
    with pytest.raises(ConfigError):
        SystemConfig(**changes)


def test_config_error_is_value_error():
    assert issubclass(ConfigError, ValueError)


# --- pathloss ----------------------------------------------------------------


def test_pathloss_examples():
    assert pathloss_db(1, 1) == pytest.approx(32.4, abs=1e-12)
    assert abs(pathloss_db(100, 28) - 103.344) <= 1e-3
    assert abs(pathloss_db(10, 28) - 82.344) <= 1e-3
    assert abs(pathloss_db(100, 28) - PL_100_28) <= 1e-12
    assert abs(pathloss_db(10, 28) - PL_10_28) <= 1e-12


@pytest.mark.parametrize("args", [(0, 28), (-1, 28), (10, 0)])
def test_pathloss_domain(args):
    with pytest.raises(ValueError):
        pathloss_db(*args)


@given(st.floats(0.1, 1e4), st.floats(1.01, 10), st.floats(0.5, 100))
def test_pathloss_monotone(d, factor, fc):
    assert pathloss_db(d * factor, fc) > pathloss_db(d, fc)
    assert pathloss_db(d, fc * factor) > pathloss_db(d, fc)


# --- steering vectors -------------------------------------------------------


def test_steering_examples():
    assert np.allclose(steering_vector(0.0, 2, 0.5), np.array([1, 1]) / math.sqrt(2), atol=1e-15)
    assert np.allclose(steering_vector(math.pi / 2, 2, 0.5), np.array([1, -1]) / math.sqrt(2), atol=1e-15)
    a = steering_vector(math.pi / 6, 4, 0.5)
    b = steering_vector(-math.pi / 6, 4, 0.5)
    assert abs(np.vdot(a, a) - 1.0) <= 1e-12
    assert abs(np.vdot(a, b)) < 1.0


def test_steering_formula_oracle():
    # element n has phase -2*pi*(d/lambda)*n*sin(theta)
    th, n, d = 0.37, 7, 0.5
    expect = [complex(math.cos(-2 * math.pi * d * i * math.sin(th)), math.sin(-2 * math.pi * d * i * math.sin(th)))
              for i in range(n)]
    assert np.allclose(steering_vector(th, n, d) * math.sqrt(n), expect, atol=1e-13)


def test_steering_array_shape():
    A = steering_vector(np.array([0.1, 0.2, 0.3]), 16)
    assert A.shape == (16, 3)
    assert np.allclose(A[:, 1], steering_vector(0.2, 16))


@given(st.floats(-math.pi, math.pi), st.integers(1, 64))
def test_steering_unit_norm(theta, n):
    assert abs(np.linalg.norm(steering_vector(theta, n)) - 1.0) <= 1e-12


# --- noise --------------------------------------------------------------------


def test_noise_variance():
    assert abs(noise_variance(SystemConfig()) - 3.1623e-12) <= 1e-15
    assert watts_to_dbm(noise_variance(SystemConfig(B=1.0, noise_figure=0.0))).value == pytest.approx(-174.0)
    doubled = noise_variance(SystemConfig(B=2e8)) / noise_variance(SystemConfig())
    assert 10 * math.log10(doubled) == pytest.approx(3.0103, abs=1e-4)


# --- geometry -------------------------------------------------------------------


def test_geometry_distribution():
    cfg = SystemConfig(K=6)
    d_H = np.concatenate([sample_geometry(cfg, RngStream(4, i)).d_H for i in range(20000)])
    assert d_H.min() >= 10 and d_H.max() <= 100
    assert abs(d_H.mean() - 55.0) < 1.0


def test_geometry_properties():
    cfg = SystemConfig()
    g = sample_geometry(cfg, RngStream(9))
    assert np.all(g.d >= 100.0)
    assert np.allclose(np.abs(g.theta_los), np.arctan(g.d_H / cfg.d_V))
    assert 50 <= g.d_e <= 100
    assert abs(g.theta_los_e) < math.pi / 3 and abs(g.zeta_los_e) < math.pi / 3
    g2 = sample_geometry(cfg, RngStream(9))
    assert np.array_equal(g.d_H, g2.d_H) and g.d_e == g2.d_e


def test_geometry_sign_is_random():
    cfg = SystemConfig()
    signs = np.concatenate([np.sign(sample_geometry(cfg, RngStream(1, i)).theta_los) for i in range(500)])
    assert 0.45 < np.mean(signs > 0) < 0.55


# --- channels -------------------------------------------------------------------


def test_single_path_degenerate():
    cfg = SystemConfig(L_p=1, f_c=1.0)
    d_zero_loss = 10 ** (-32.4 / 21)  # pathloss exactly 0 dB at 1 GHz
    h = _user_vector(np.array([1.0 + 0j]), np.array([0.3]), d_zero_loss, cfg)
    assert np.allclose(h, math.sqrt(cfg.N) * steering_vector(0.3, cfg.N), atol=1e-12)
    assert abs(np.linalg.norm(h) - math.sqrt(cfg.N)) <= 1e-12


def test_user_channel_power():
    cfg = SystemConfig()
    geom = _geom(cfg)
    h = np.array([sample_user_channel(geom, 2, cfg, RngStream(7, i)) for i in range(10**4)])
    expect = cfg.N * 10 ** (-pathloss_db(geom.d[2], cfg.f_c) / 10)
    assert abs(np.mean(np.sum(np.abs(h) ** 2, axis=1)) / expect - 1.0) < 0.03


def test_user_channel_collapses_to_los():
    cfg = SystemConfig(delta=1e-6 * 180 / math.pi)
    geom = _geom(cfg, theta=0.4)
    h = sample_user_channel(geom, 0, cfg, RngStream(3))
    a = steering_vector(0.4, cfg.N)
    assert abs(np.vdot(h, a)) / np.linalg.norm(h) > 1 - 1e-3


def test_user_index_range():
    cfg = SystemConfig()
    with pytest.raises(IndexError):
        sample_user_channel(_geom(cfg), cfg.K, cfg, RngStream(0))


def test_eve_channel_power_and_rank():
    cfg = SystemConfig()
    geom = _geom(cfg)
    He = [sample_eve_channel(geom, cfg, RngStream(8, i)) for i in range(10**4)]
    expect = cfg.N * cfg.M * 10 ** (-pathloss_db(geom.d_e, cfg.f_c) / 10)
    assert abs(np.mean([np.sum(np.abs(x) ** 2) for x in He]) / expect - 1.0) < 0.03
    assert He[0].shape == (cfg.N, cfg.M)
    one = sample_eve_channel(geom, SystemConfig(L_p=1), RngStream(1))
    assert np.linalg.matrix_rank(one, tol=1e-6 * np.linalg.norm(one)) == 1
    three = sample_eve_channel(geom, SystemConfig(L_p=3), RngStream(1))
    assert np.linalg.matrix_rank(three, tol=1e-6 * np.linalg.norm(three)) <= 3


def test_eve_channel_deterministic():
    cfg = SystemConfig()
    geom = _geom(cfg)
    assert np.array_equal(sample_eve_channel(geom, cfg, RngStream(5)), sample_eve_channel(geom, cfg, RngStream(5)))


def test_realization_deterministic_and_shaped():
    cfg = SystemConfig()
    a = sample_realization(cfg, RngStream(12, 0, (3,)))
    b = sample_realization(cfg, RngStream(12, 0, (3,)))
    assert a.H.shape == (16, 6) and a.H_e.shape == (16, 6)
    assert np.array_equal(a.H, b.H) and np.array_equal(a.H_e, b.H_e)
    c = sample_realization(cfg, RngStream(12, 0, (4,)))
    assert not np.array_equal(a.H, c.H)


def test_realization_components_use_own_streams():
    # changing the number of Eve antennas must not disturb the user channels
    a = sample_realization(SystemConfig(M=6), RngStream(2))
    b = sample_realization(SystemConfig(M=3), RngStream(2))
    assert np.array_equal(a.H, b.H)


def test_angular_concentration():
    cfg = SystemConfig()
    reals = [sample_realization(cfg, RngStream(6, i)) for i in range(2000)]
    spread = math.radians(cfg.delta)
    off = np.concatenate([(r.theta - r.geometry.theta_los[:, None]).ravel() for r in reals])
    assert off.size >= 10**5
    assert np.mean(np.abs(off) <= 3 * spread) >= 0.94
