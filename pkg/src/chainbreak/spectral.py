"""Discrete Laplacian of the interior particles and the deterministic drift.

``phi(t) = U''(1 + eps t / d)`` is the time-varying stiffness of the
linearised chain and ``Phi`` its integral.  ``drift_g`` is the bounded
deterministic correction ``g_t`` that, added to the straight line
``i (1 + eps t / d)``, gives the noise-free linearised positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .model import ChainParams, Potential, t_star, validate_potential
from .quadrature import integrate

# exp(-40) ~ 4e-18: below 1e-16 of the peak of a decaying exponential
_TRUNCATE = 40.0


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigen-decomposition ``A = Q^T diag(lambdas) Q`` of the Laplacian.

    Rows of ``Q`` are the normalised eigenvectors; ``lambdas[j-1]`` is
    ``-2 (1 - cos(j pi / d))``.
    """

    dim: int
    lambdas: np.ndarray
    Q: np.ndarray

    @property
    def mu(self) -> float:
        """Spectral gap ``min |lambda_j|``."""
        return float(np.min(np.abs(self.lambdas)))

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.lambdas)


def _check_d(d):
    if isinstance(d, bool) or int(d) != d or d < 2:
        raise ParameterError(f"d must be an integer >= 2, got {d!r}")
    return int(d)


def build_laplacian(d: int) -> np.ndarray:
    """``(d-1) x (d-1)`` tridiagonal matrix with -2 on the diagonal and 1 beside it."""
    d = _check_d(d)
    m = d - 1
    A = -2.0 * np.eye(m)
    idx = np.arange(m - 1)
    A[idx, idx + 1] = 1.0
    A[idx + 1, idx] = 1.0
    return A


def eigendecompose(d: int) -> Spectrum:
    d = _check_d(d)
    j = np.arange(1, d)
    lambdas = -2.0 * (1.0 - np.cos(j * np.pi / d))
    Q = math.sqrt(2.0 / d) * np.sin(np.outer(j, j) * np.pi / d)
    lambdas.setflags(write=False)
    Q.setflags(write=False)
    return Spectrum(dim=d - 1, lambdas=lambdas, Q=Q)


def phi(p: Potential, params: ChainParams, t):
    """Stiffness ``U''(1 + eps t / d)``."""
    return np.asarray(p.u2(params.q(t)), dtype=float)


def _check_time(params, t):
    t = np.asarray(t, dtype=float)
    ts = t_star(params)
    if np.any(t < 0) or np.any(t > ts) or np.any(~np.isfinite(t)):
        raise DomainError(f"time must lie in [0, t*={ts!r}]")
    return t


def phi_increment(p: Potential, params: ChainParams, s, t, rtol=1e-12):
    """``Phi(t) - Phi(s)`` elementwise, without cancellation for close ``s, t``."""
    s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    d, eps = params.d, params.eps
    if p.kind == "quadratic":
        return p.param * (t - s)
    if eps == 0:
        return float(p.u2(np.array(1.0))) * (t - s)
    if p.kind == "cosh":
        k = eps / d
        return (2.0 / k) * np.cosh(0.5 * k * (s + t)) * np.sinh(0.5 * k * (t - s))
    shape = s.shape
    out = integrate(lambda x, idx: phi(p, params, x), s.ravel(), t.ravel(), rtol=rtol)
    return out.reshape(shape)


def phi_integral(p: Potential, params: ChainParams, t):
    """``Phi(t) = int_0^t U''(1 + eps s / d) ds`` for ``0 <= t <= t*``."""
    t = _check_time(params, t)
    out = phi_increment(p, params, np.zeros_like(t), t, rtol=1e-11)
    return float(out) if np.ndim(out) == 0 else out


def _kappas(p: Potential, b_break: float):
    bounds = p.bounds or validate_potential(p, b_break)
    return bounds.kappa_min, bounds.kappa_max


def mode_integrals(p, params, lambdas, t, power=1.0, rtol=1e-10):
    """``int_0^t exp(power * lambda_j (Phi(t) - Phi(s))) ds`` for every ``lambda_j``.

    The lower limit is truncated where the integrand has decayed below
    ``exp(-40)`` of its peak; the rest is split into panels of the decay
    length before adaptive refinement.
    """
    kmin, kmax = _kappas(p, params.b_break)
    lambdas = np.asarray(lambdas, dtype=float)
    los, his, groups = [], [], []
    for j, lam in enumerate(lambdas):
        rate = power * abs(lam)
        lo = max(0.0, t - _TRUNCATE / (rate * kmin))
        npan = int(min(4000, max(1, math.ceil((t - lo) * rate * kmax))))
        edges = np.linspace(lo, t, npan + 1)
        los.append(edges[:-1])
        his.append(edges[1:])
        groups.append(np.full(npan, j))
    lo = np.concatenate(los)
    hi = np.concatenate(his)
    grp = np.concatenate(groups)
    coef = power * lambdas[grp]

    def f(x, idx):
        return np.exp(coef[idx][:, None] * phi_increment(p, params, x, t))

    return integrate(f, lo, hi, rtol=rtol, groups=grp)


def drift_g(p: Potential, params: ChainParams, spectrum: Spectrum, t: float) -> np.ndarray:
    """Deterministic correction ``g_t`` (length ``d - 1``) at one time ``t``."""
    t = float(_check_time(params, t))
    d = params.d
    nu = np.arange(1, d) / d
    if t == 0:
        return np.zeros(d - 1)
    qnu = spectrum.Q @ nu
    modes = -qnu * mode_integrals(p, params, spectrum.lambdas, t, power=1.0, rtol=1e-10)
    return spectrum.Q.T @ modes


def g_bound(p: Potential, params: ChainParams, spectrum: Spectrum, t) -> float:
    """Upper bound ``(1 - exp(-mu kappa_min t)) |nu|_2 / (mu kappa_min)`` on ``|g_t|``.

    The decay rate keeps the ``kappa_min`` factor from the integral
    ``int_0^t exp(-mu kappa_min (t - s)) ds``; without it the bound fails
    at small ``t`` for stiff potentials.
    """
    kmin, _ = _kappas(p, params.b_break)
    nu = np.arange(1, params.d) / params.d
    mu = spectrum.mu
    return float(-np.expm1(-mu * kmin * np.asarray(t)) * np.linalg.norm(nu) / (mu * kmin))


def step_mode_integrals(p, params, lambdas, t0, t1, power=1.0, rtol=1e-10, block=20000):
    """``int_{t0[k]}^{t1[k]} exp(power * lambda_j (Phi(t1[k]) - Phi(s))) ds`` for every step and mode.

    Returns an array of shape ``(len(t0), len(lambdas))``.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    t0 = np.asarray(t0, dtype=float)
    t1 = np.asarray(t1, dtype=float)
    m = lambdas.size
    out = np.empty((t0.size, m))
    for start in range(0, t0.size, block):
        stop = min(t0.size, start + block)
        n = stop - start
        lo = np.repeat(t0[start:stop], m)
        hi = np.repeat(t1[start:stop], m)
        coef = np.tile(power * lambdas, n)

        def f(x, idx, hi=hi, coef=coef):
            return np.exp(coef[idx][:, None] * phi_increment(p, params, x, hi[idx][:, None]))

        out[start:stop] = integrate(f, lo, hi, rtol=rtol).reshape(n, m)
    return out
