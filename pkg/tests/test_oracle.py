import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chainbreak.errors import DomainError, ParameterError
from chainbreak.model import ChainParams, certify, make_cosh_potential, make_quadratic_potential
from chainbreak.oracle import (
    ScalarProcessSpec,
    asymptotic_yz_covariance,
    asymptotic_z_variance,
    hoelder_constant,
    increment_msq,
    ou_covariance,
    ou_variance,
    yz_covariance,
    yz_distance_sq,
    z_variance,
)
from chainbreak.spectral import phi

COSH = certify(make_cosh_potential(), 2.0)


def test_ou_variance_examples():
    assert ou_variance(1.0, 1.0, 0.0) == 0.0
    assert ou_variance(1.0, 1.0, 1e3) == pytest.approx(0.5, rel=1e-15)
    assert ou_variance(1.0, 1.0, 1.0) == pytest.approx(0.432332, abs=5e-7)
    with pytest.raises(ParameterError):
        ou_variance(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        ou_variance(1.0, 1.0, -1.0)


def test_ou_covariance_examples():
    assert ou_covariance(1.0, 1.0, 1.0, 2.0) == pytest.approx((math.exp(-1) - math.exp(-3)) / 2, rel=1e-14)
    assert ou_covariance(1.0, 1.0, 1.0, 2.0) == pytest.approx(0.159046, abs=5e-7)
    assert ou_covariance(1.0, 1.0, 0.0, 3.0) == 0.0
    with pytest.raises(ParameterError):
        ou_covariance(-1.0, 1.0, 1.0, 2.0)


@given(st.floats(0.01, 10), st.floats(0.01, 3), st.floats(0, 20), st.floats(0, 20))
def test_ou_covariance_properties(u, sigma, t1, t2):
    assert ou_covariance(u, sigma, t1, t2) == pytest.approx(ou_covariance(u, sigma, t2, t1), rel=1e-15)
    assert abs(ou_covariance(u, sigma, t1, t1) - ou_variance(u, sigma, t1)) <= 1e-12


@pytest.mark.parametrize("t", np.linspace(0.0, 100.0, 20))
def test_quadratic_reduction(t):
    p = certify(make_quadratic_potential(1.7), 2.0)
    params = ChainParams(3, 0.01, 0.3, 2.0)
    ref = ou_variance(1.7, 0.3, t)
    assert z_variance(p, params, t) == pytest.approx(ref, rel=1e-8, abs=1e-300)
    assert yz_covariance(p, params, 1.7, t) == pytest.approx(ref, rel=1e-8, abs=1e-300)
    assert abs(yz_distance_sq(p, params, 1.7, t)) <= 1e-10


def test_zero_time():
    params = ChainParams(3, 0.01, 0.1, 2.0)
    assert z_variance(COSH, params, 0.0) == 0.0
    assert yz_covariance(COSH, params, 1.5, 0.0) == 0.0
    assert yz_distance_sq(COSH, params, 1.5, 0.0) == 0.0
    with pytest.raises(DomainError):
        z_variance(COSH, params, params.t_star + 1)


def _z_variance_mp(eps, d, sigma, t):
    # sigma^2 int_0^t exp(2 (Phi(s) - Phi(t))) ds for the cosh potential
    mp.mp.dps = 30
    k = mp.mpf(eps) / d
    Phi = lambda s: mp.sinh(k * s) / k
    f = lambda s: mp.exp(2 * (Phi(s) - Phi(t)))
    lo = max(0, t - 40)
    return float(mp.mpf(sigma) ** 2 * mp.quad(f, mp.linspace(lo, t, 9)))


@pytest.mark.parametrize("t", [5.0, 150.0, 290.0])
def test_z_variance_cosh_against_mpmath(t):
    params = ChainParams(3, 0.01, 0.1, 2.0)
    assert z_variance(COSH, params, t) == pytest.approx(_z_variance_mp(0.01, 3, 0.1, t), rel=1e-9)


@pytest.mark.parametrize("frac", [0.5, 0.9, 0.97, 1.0])
def test_asymptotics_cosh(frac):
    params = ChainParams(3, 1e-4, 1e-2, 2.0)
    u = math.cosh(1.0)
    t = frac * params.t_star
    assert z_variance(COSH, params, t) == pytest.approx(asymptotic_z_variance(COSH, params, t), rel=0.01)
    assert yz_covariance(COSH, params, u, t) == pytest.approx(asymptotic_yz_covariance(COSH, params, u, t),
                                                              rel=0.01)


def test_distance_envelope_at_t_star():
    eps, sigma = 1e-4, 1e-2
    params = ChainParams(2, eps, sigma, 2.0)
    val = yz_distance_sq(COSH, params, math.cosh(1.0), params.t_star)
    envelope = sigma ** 2 * 10 * (sigma ** 2 * math.log(sigma / eps) + eps * abs(math.log(eps)))
    assert 0 <= val <= envelope


@given(st.floats(0.0, 1.0), st.floats(0.3, 3.0))
def test_distance_nonnegative(frac, u):
    params = ChainParams(3, 0.01, 0.1, 2.0)
    assert yz_distance_sq(COSH, params, u, frac * params.t_star) >= -1e-12


def test_increment_examples():
    p = certify(make_quadratic_potential(1.0), 2.0)
    params = ChainParams(3, 0.01, 1.0, 2.0)
    assert increment_msq(COSH, ChainParams(3, 0.01, 0.1, 2.0), 7.0, 7.0) == pytest.approx(0.0, abs=1e-15)
    ref = ou_variance(1, 1, 5) + ou_variance(1, 1, 5.5) - 2 * ou_covariance(1, 1, 5, 5.5)
    assert increment_msq(p, params, 5.0, 5.5) == pytest.approx(ref, rel=1e-9)
    assert ref == pytest.approx(0.393466, abs=5e-7)
    with pytest.raises(DomainError):
        increment_msq(p, params, 5.0, 6.5)
    with pytest.raises(DomainError):
        increment_msq(p, params, 5.0, 4.0)


@given(st.floats(0.0, 0.99), st.floats(0.0, 1.0))
def test_hoelder_bound(frac, step):
    params = ChainParams(3, 0.01, 0.1, 2.0)
    t1 = frac * params.t_star
    t2 = min(params.t_star, t1 + step)
    C = hoelder_constant(COSH, params)
    assert increment_msq(COSH, params, t1, t2) <= C * params.sigma ** 2 * (t2 - t1) + 1e-15


def test_hoelder_constant_quadratic():
    assert hoelder_constant(certify(make_quadratic_potential(2.0), 2.0), ChainParams(3, 0.01, 0.1, 2.0)) == 2.0


def test_mode_scale():
    params = ChainParams(3, 0.01, 0.1, 2.0)
    p = make_quadratic_potential(1.0)
    assert z_variance(p, params, 4.0, rate_scale=-3.0) == pytest.approx(ou_variance(3.0, 0.1, 4.0), rel=1e-10)
    with pytest.raises(ParameterError):
        z_variance(p, params, 4.0, rate_scale=1.0)


def test_scalar_process_spec():
    params = ChainParams(3, 0.01, 0.1, 2.0)
    c = ScalarProcessSpec("constant", sigma=0.2, u=2.0)
    assert c.variance(1.0) == ou_variance(2.0, 0.2, 1.0)
    tv = ScalarProcessSpec("time-varying", sigma=0.2, potential=COSH, params=params)
    assert tv.variance(30.0) == pytest.approx(z_variance(COSH, params.replace(sigma=0.2), 30.0), rel=1e-14)
    with pytest.raises(ParameterError):
        ScalarProcessSpec("constant", sigma=0.2)
    with pytest.raises(ParameterError):
        ScalarProcessSpec("time-varying", sigma=0.2)
    with pytest.raises(ParameterError):
        ScalarProcessSpec("levy", sigma=0.2, u=1.0)
    with pytest.raises(ParameterError):
        ScalarProcessSpec("constant", sigma=0.2, u=1.0, rate_scale=1.0)


def test_phi_at_break_distance():
    params = ChainParams(3, 0.01, 0.1, 2.0)
    assert float(phi(COSH, params, params.t_star)) == pytest.approx(math.cosh(1.0), rel=1e-14)
