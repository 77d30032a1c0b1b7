"""Closed-form and quadrature second moments of the scalar mode processes.

These are the reference values Monte Carlo output is checked against.  The
time-varying integrals use ``scipy.integrate.quad`` so that they stay
independent of the vectorised quadrature driving the simulators.

``rate_scale`` multiplies the drift: ``rate_scale = -1`` is the scalar
convention ``dZ = -phi(t) Z dt + sigma dB``; an eigen-mode ``j`` of the
chain uses ``rate_scale = lambda_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import DomainError, ParameterError
from .model import ChainParams, Potential, t_star, validate_potential
from .spectral import phi, phi_increment

_TRUNCATE = 40.0


def ou_variance(u: float, sigma: float, t: float) -> float:
    """``sigma^2 (1 - exp(-2 u t)) / (2 u)``."""
    if not u > 0:
        raise ParameterError(f"rate u must be positive, got {u!r}")
    if t < 0:
        raise DomainError("t must be >= 0")
    return sigma ** 2 * -math.expm1(-2.0 * u * t) / (2.0 * u)


def ou_covariance(u: float, sigma: float, t1: float, t2: float) -> float:
    if not u > 0:
        raise ParameterError(f"rate u must be positive, got {u!r}")
    if t1 < 0 or t2 < 0:
        raise DomainError("times must be >= 0")
    lo = min(t1, t2)
    # exp(-u|t1-t2|) - exp(-u(t1+t2)) = exp(-u|t1-t2|) (1 - exp(-2 u min))
    return sigma ** 2 / (2.0 * u) * math.exp(-u * abs(t1 - t2)) * -math.expm1(-2.0 * u * lo)


def _check(params, *ts):
    ts_max = t_star(params)
    for t in ts:
        if not (0 <= t <= ts_max):
            raise DomainError(f"time {t!r} outside [0, t*={ts_max!r}]")


def _kmin(p, params):
    return (p.bounds or validate_potential(p, params.b_break)).kappa_min


def _quad_decaying(f, lo, hi, rate):
    """Integrate a function decaying like ``exp(-rate (hi - s))`` over ``[lo, hi]``."""
    lo = max(lo, hi - _TRUNCATE / rate)
    if hi <= lo:
        return 0.0
    # split so that every piece spans a few decay lengths
    n = max(1, min(200, int(math.ceil((hi - lo) * rate / 4.0))))
    edges = np.linspace(lo, hi, n + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=200)
        total += val
    return total


def z_variance(p: Potential, params: ChainParams, t: float, rate_scale: float = -1.0) -> float:
    """``sigma^2 int_0^t exp(2 rate_scale (Phi(t) - Phi(s))) ds``."""
    _check(params, t)
    if not rate_scale < 0:
        raise ParameterError("rate_scale must be negative")
    lam = rate_scale
    f = lambda s: math.exp(2.0 * lam * float(phi_increment(p, params, s, t)))
    rate = 2.0 * abs(lam) * _kmin(p, params)
    return params.sigma ** 2 * _quad_decaying(f, 0.0, t, rate)


def yz_covariance(p: Potential, params: ChainParams, u: float, t: float,
                  rate_scale: float = -1.0) -> float:
    """``sigma^2 int_0^t exp(|lambda| (u (s - t) + Phi(s) - Phi(t))) ds``."""
    _check(params, t)
    if not u > 0:
        raise ParameterError(f"u must be positive, got {u!r}")
    lam = rate_scale
    f = lambda s: math.exp(lam * (u * (t - s) + float(phi_increment(p, params, s, t))))
    rate = abs(lam) * (u + _kmin(p, params))
    return params.sigma ** 2 * _quad_decaying(f, 0.0, t, rate)


def yz_distance_sq(p: Potential, params: ChainParams, u: float, t: float,
                   rate_scale: float = -1.0) -> float:
    """``E[(Y_t - Z_t)^2] = Var Y + Var Z - 2 Cov(Y, Z)``."""
    var_y = ou_variance(abs(rate_scale) * u, params.sigma, t)
    var_z = z_variance(p, params, t, rate_scale)
    cov = yz_covariance(p, params, u, t, rate_scale)
    return var_y + var_z - 2.0 * cov


def increment_msq(p: Potential, params: ChainParams, t1: float, t2: float,
                  rate_scale: float = -1.0) -> float:
    """Exact ``E[(Z_{t2} - Z_{t1})^2]`` for ``0 <= t1 <= t2 <= t*``, ``t2 - t1 <= 1``.

    Uses ``Cov(Z_{t1}, Z_{t2}) = exp(rate_scale (Phi(t2) - Phi(t1))) Var Z_{t1}``.
    """
    if t2 < t1:
        raise DomainError("need t1 <= t2")
    if t2 - t1 > 1:
        raise DomainError("increment bound only holds for t2 - t1 <= 1")
    _check(params, t1, t2)
    v1 = z_variance(p, params, t1, rate_scale)
    v2 = z_variance(p, params, t2, rate_scale)
    rho = math.exp(rate_scale * float(phi_increment(p, params, t1, t2)))
    return v2 + v1 - 2.0 * rho * v1


def hoelder_constant(p: Potential, params: ChainParams) -> float:
    """``kappa_max^2 / (2 kappa_min) + 1``, the constant of the increment bound."""
    b = p.bounds or validate_potential(p, params.b_break)
    return b.kappa_max ** 2 / (2.0 * b.kappa_min) + 1.0


def asymptotic_z_variance(p: Potential, params: ChainParams, t: float) -> float:
    """Leading-order ``sigma^2 / (2 phi(t))`` valid near ``t*``."""
    return params.sigma ** 2 / (2.0 * float(phi(p, params, t)))


def asymptotic_yz_covariance(p: Potential, params: ChainParams, u: float, t: float) -> float:
    return params.sigma ** 2 / (float(phi(p, params, t)) + u)


@dataclass(frozen=True)
class ScalarProcessSpec:
    """One scalar Gaussian mode: constant rate ``u`` or driven by a potential."""

    kind: str
    sigma: float
    rate_scale: float = -1.0
    u: Optional[float] = None
    potential: Optional[Potential] = None
    params: Optional[ChainParams] = None

    def __post_init__(self):
        if self.kind == "constant":
            if self.u is None or not self.u > 0:
                raise ParameterError("constant-rate process needs u > 0")
        elif self.kind == "time-varying":
            if self.potential is None or self.params is None:
                raise ParameterError("time-varying process needs a potential and chain params")
        else:
            raise ParameterError(f"unknown process kind {self.kind!r}")
        if not self.rate_scale < 0:
            raise ParameterError("rate_scale must be negative")

    def variance(self, t: float) -> float:
        if self.kind == "constant":
            return ou_variance(abs(self.rate_scale) * self.u, self.sigma, t)
        params = self.params.replace(sigma=self.sigma)
        return z_variance(self.potential, params, t, self.rate_scale)
