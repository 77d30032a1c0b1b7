import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chainbreak.errors import AssumptionViolation, ParameterError, RegimeError
from chainbreak.model import (
    BreakEvent,
    ChainParams,
    Potential,
    certify,
    gumbel_cdf,
    limit_law_params,
    make_cosh_potential,
    make_quadratic_potential,
    normalize_break_time,
    position_limit_probs,
    potential_from_name,
    t_star,
    validate_potential,
)

# ----------------------------------------------------------------- ChainParams


def test_chain_params_invariants():
    p = ChainParams(3, 0.01, 0.1, 2.0)
    assert p.t_star == pytest.approx(300.0)
    assert float(p.q(150.0)) == pytest.approx(1.5)
    with pytest.raises(ParameterError):
        ChainParams(1, 0.01, 0.1, 2.0)
    with pytest.raises(ParameterError):
        ChainParams(2.5, 0.01, 0.1, 2.0)
    with pytest.raises(ParameterError):
        ChainParams(3, 0.01, 0.1, 1.0)
    with pytest.raises(ParameterError):
        ChainParams(3, -0.01, 0.1, 2.0)
    with pytest.raises(ParameterError):
        ChainParams(3, 0.01, -0.1, 2.0)


# ------------------------------------------------------------------ potentials


def test_quadratic_examples():
    p1 = make_quadratic_potential(1.0)
    assert float(p1.u2(np.array(1.7))) == 1.0
    p4 = make_quadratic_potential(4.0)
    assert float(p4.u1(np.array(2.0))) == 8.0
    assert float(p4.u3(np.array(2.0))) == 0.0
    for bad in (0.0, -1.0, float("nan")):
        with pytest.raises(ParameterError):
            make_quadratic_potential(bad)


def test_cosh_examples():
    p = make_cosh_potential()
    assert float(p.u2(np.array(1.0))) == 1.0
    assert float(p.u2(np.array(2.0))) == pytest.approx(1.543081, abs=5e-7)
    assert float(p.u3(np.array(2.0))) == pytest.approx(1.175201, abs=5e-7)
    assert float(p.u1(np.array(1.0))) == 0.0


def test_potential_from_name():
    q = potential_from_name("quadratic:u=2.5")
    assert q.kind == "quadratic" and q.param == 2.5
    assert q.name == "quadratic:u=2.5"
    assert potential_from_name("cosh").name == "cosh"
    assert potential_from_name("quadratic").param == 1.0
    for bad in ("lennard-jones", "quadratic:k=1", "quadratic:u=abc", "quadratic:u=-1"):
        with pytest.raises(ParameterError):
            potential_from_name(bad)


def test_validate_quadratic():
    b = validate_potential(make_quadratic_potential(1.0), 2.0, [0.5])
    assert (b.kappa_min, b.kappa_max, b.K, b.margin_r) == (1.0, 1.0, 0.0, 0.5)


def test_validate_cosh():
    b = validate_potential(make_cosh_potential(), 2.0, [0.5])
    assert b.kappa_min == pytest.approx(1.0, abs=1e-12)
    assert b.kappa_max == pytest.approx(2.352410, abs=5e-7)
    assert b.K == pytest.approx(2.129279, abs=5e-7)
    assert b.margin_r == 0.5


def test_validate_concave_raises_with_point():
    concave = Potential(
        u1=lambda x: -np.asarray(x, float),
        u2=lambda x: -np.ones_like(np.asarray(x, float)),
        u3=lambda x: np.zeros_like(np.asarray(x, float)),
    )
    with pytest.raises(AssumptionViolation) as info:
        validate_potential(concave, 2.0)
    assert info.value.x == 1.0


def test_validate_picks_largest_admissible_margin():
    # U'' = 2.3 - x is positive up to 2.3 only
    p = Potential(
        u1=lambda x: 2.3 * np.asarray(x, float) - 0.5 * np.asarray(x, float) ** 2,
        u2=lambda x: 2.3 - np.asarray(x, float),
        u3=lambda x: -np.ones_like(np.asarray(x, float)),
    )
    b = validate_potential(p, 2.0)
    assert b.margin_r == 0.25
    assert b.kappa_min == pytest.approx(0.05, abs=1e-12)
    assert b.K == 1.0
    with pytest.raises(AssumptionViolation) as info:
        validate_potential(p, 2.0, [0.5, 0.4])
    assert info.value.x >= 2.3


def test_validate_argument_errors():
    q = make_quadratic_potential(1.0)
    with pytest.raises(ParameterError):
        validate_potential(q, 1.0)
    with pytest.raises(ParameterError):
        validate_potential(q, 2.0, [])
    with pytest.raises(ParameterError):
        validate_potential(q, 2.0, [0.5, -0.1])


@given(st.floats(0.05, 50.0), st.floats(1.05, 5.0))
def test_validate_quadratic_property(u, b):
    bounds = validate_potential(make_quadratic_potential(u), b)
    assert bounds.kappa_min == pytest.approx(u, rel=1e-12)
    assert bounds.kappa_max == pytest.approx(u, rel=1e-12)
    assert bounds.K == 0.0


def test_certify_attaches_bounds():
    p = certify(make_cosh_potential(), 2.0)
    assert p.bounds is not None and p.bounds.margin_r == 0.5


# ------------------------------------------------------------- limit law


def test_limit_law_d2():
    L = limit_law_params(2, 1.0)
    assert L.v == pytest.approx(0.5, abs=1e-12)
    assert L.gamma == pytest.approx(1.414214, abs=5e-7)
    assert L.a == pytest.approx((0.797885, 0.797885), abs=5e-7)
    assert L.a0 == pytest.approx(1.595769, abs=5e-7)
    assert L.b_gumbel == pytest.approx(1.414214, abs=5e-7)


def test_limit_law_d3():
    L = limit_law_params(3, 1.0)
    assert L.v == pytest.approx(0.577350, abs=5e-7)
    assert L.gamma == pytest.approx(2.449490, abs=5e-7)
    # frozen from a 30-digit evaluation of the closed forms
    assert L.a == pytest.approx((1.036482448, 2.072964897, 1.036482448), abs=1e-9)
    assert L.a0 == pytest.approx(4.145929794, abs=1e-9)
    assert L.b_gumbel == pytest.approx(0.816497, abs=5e-7)


def test_limit_law_scales_with_curvature():
    L = limit_law_params(4, 2.25)
    assert L.scale_total() == pytest.approx(1.5 * L.a0, rel=1e-15)
    assert L.scale_link(2) == pytest.approx(1.5 * L.a[1], rel=1e-15)


@given(st.integers(2, 200), st.floats(0.01, 100.0))
def test_limit_law_identities(d, u):
    L = limit_law_params(d, u)
    assert abs(L.b_gumbel * L.gamma - 2.0) <= 1e-12
    assert abs(L.a0 - math.fsum(L.a)) <= 1e-12 * L.a0
    assert abs(L.a0 - 2 * L.v * d * d / math.sqrt(2 * math.pi)) <= 1e-12 * L.a0
    assert L.v ** 2 == pytest.approx((d - 1) / (2 * d), rel=1e-14)


def test_limit_law_errors():
    with pytest.raises(ParameterError):
        limit_law_params(1)
    with pytest.raises(ParameterError):
        limit_law_params(3, 0.0)


# ------------------------------------------------------------------- Gumbel


def test_gumbel_examples():
    assert gumbel_cdf(0.0, 1.0, 1.0) == pytest.approx(0.367879, abs=5e-7)
    assert gumbel_cdf(math.log(2), 2.0, 1.0) == pytest.approx(0.367879, abs=5e-7)
    assert gumbel_cdf(1e6, 1.0, 1.0) == 1.0
    assert gumbel_cdf(-1e3, 1.0, 1.0) == 0.0
    assert gumbel_cdf(-np.inf, 1.0, 1.0) == 0.0
    for a, b in ((0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)):
        with pytest.raises(ParameterError):
            gumbel_cdf(0.0, a, b)


@given(st.floats(0.01, 20), st.floats(0.01, 5), st.lists(st.floats(-50, 50), min_size=2, max_size=40))
def test_gumbel_monotone(a, b, rs):
    r = np.sort(np.array(rs))
    F = gumbel_cdf(r, a, b)
    assert np.all(np.diff(F) >= 0)
    assert np.all((F >= 0) & (F <= 1))


@given(st.floats(0.1, 10), st.floats(0.1, 3), st.floats(-5, 5), st.floats(-3, 3))
def test_gumbel_shift_closure(a, b, r, kappa):
    lhs = gumbel_cdf(r, a * math.exp(b * kappa), b)
    rhs = gumbel_cdf(r - kappa, a, b)
    assert abs(lhs - rhs) <= 1e-12


# ------------------------------------------------------------------- t*


def test_t_star_examples():
    assert t_star(ChainParams(3, 0.01, 0.1, 2.0)) == pytest.approx(300.0, rel=1e-14)
    assert t_star(ChainParams(2, 1.0, 0.1, 3.0)) == 4.0
    eps = 0.25
    assert t_star(ChainParams(5, eps, 0.1, 1 + eps)) == 5.0
    assert t_star(ChainParams(3, 0.0, 0.1, 2.0)) == math.inf


# ---------------------------------------------------------- normalisation


def _normalize_mp(tau, d, b, eps, sigma, u):
    mp.mp.dps = 40
    eps, sigma, u = mp.mpf(eps), mp.mpf(sigma), mp.mpf(u)
    ts = d * (mp.mpf(b) - 1) / eps
    g = mp.sqrt(d * (d - 1))
    rl = mp.sqrt(mp.log(sigma / eps))
    return float(mp.sqrt(u) * eps / sigma * rl * (ts - g * sigma / (mp.sqrt(u) * eps) * rl - tau))


def test_normalize_centre_is_zero():
    p = ChainParams(3, 1e-3, 0.05, 2.0)
    gamma = math.sqrt(6)
    for u in (1.0, 2.0):
        centre = p.t_star - gamma * p.sigma / (math.sqrt(u) * p.eps) * math.sqrt(math.log(50))
        assert abs(normalize_break_time(centre, p, u)) < 1e-9


def test_normalize_example():
    p = ChainParams(2, 1e-3, 0.1, 2.0)
    # frozen from an independent 40-digit evaluation
    assert normalize_break_time(1650.0, p, 1.0) == pytest.approx(0.998186958, abs=1e-9)
    assert normalize_break_time(1650.0, p, 1.0) == pytest.approx(_normalize_mp(1650, 2, 2, 1e-3, 0.1, 1), abs=1e-12)


def test_normalize_at_t_star():
    p = ChainParams(2, 1e-3, 0.1, 2.0)
    expected = -math.sqrt(2) * math.log(100)
    assert normalize_break_time(p.t_star, p, 1.0) == pytest.approx(expected, abs=1e-10)
    assert expected == pytest.approx(-6.512694, abs=5e-7)


@given(st.integers(2, 10), st.floats(1e-5, 1e-2), st.floats(1.5, 1e3), st.floats(0.2, 5), st.floats(0, 1))
def test_normalize_matches_high_precision(d, eps, ratio, u, frac):
    p = ChainParams(d, eps, eps * ratio, 2.0)
    tau = frac * p.t_star
    assert normalize_break_time(tau, p, u) == pytest.approx(_normalize_mp(tau, d, 2.0, eps, eps * ratio, u),
                                                            rel=1e-9, abs=1e-9)


def test_normalize_vectorised_and_decreasing():
    p = ChainParams(3, 1e-3, 0.05, 2.0)
    z = normalize_break_time(np.array([2000.0, 2500.0, 3000.0]), p, 1.0)
    assert z.shape == (3,) and np.all(np.diff(z) < 0)


def test_normalize_regime_errors():
    with pytest.raises(RegimeError):
        normalize_break_time(1.0, ChainParams(3, 0.1, 0.1, 2.0), 1.0)
    with pytest.raises(RegimeError):
        normalize_break_time(1.0, ChainParams(3, 0.1, 0.05, 2.0), 1.0)
    with pytest.raises(RegimeError):
        normalize_break_time(1.0, ChainParams(3, 0.0, 0.05, 2.0), 1.0)


# ------------------------------------------------------------ positions


def test_position_probs_examples():
    assert position_limit_probs(3) == pytest.approx([0.25, 0.5, 0.25], abs=1e-15)
    assert position_limit_probs(2) == pytest.approx([0.5, 0.5], abs=1e-15)
    assert position_limit_probs(4) == pytest.approx([1 / 6, 1 / 3, 1 / 3, 1 / 6], abs=1e-15)
    with pytest.raises(ParameterError):
        position_limit_probs(1)


@given(st.integers(2, 500))
def test_position_probs_sum(d):
    assert abs(position_limit_probs(d).sum() - 1.0) <= 1e-12


def test_break_event_censored():
    ev = BreakEvent.censored_at(10.0)
    assert ev.censored and ev.tau == 10.0 and ev.link == 0
