"""Reduction of a general linear chain to the standard one (curvature 1, break at 2).

Rescaling time by ``u`` removes the curvature and rescaling gaps around 1
by ``b - 1`` moves the break distance to 2, so that::

    tau_{u,b}(eps, sigma)  =d=  (1/u) * tau_{1,2}(eps / (u (b - 1)), sigma / (sqrt(u) (b - 1)))
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError


@dataclass(frozen=True)
class StandardReduction:
    eps_std: float
    sigma_std: float
    time_factor: float


def _check(u, b_break, eps, sigma):
    if not u > 0:
        raise ParameterError(f"u must be positive, got {u!r}")
    if not b_break > 1:
        raise ParameterError(f"b_break must exceed 1, got {b_break!r}")
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps!r}")
    if not sigma >= 0:
        raise ParameterError(f"sigma must be >= 0, got {sigma!r}")


def reduce_to_standard(u: float, b_break: float, eps: float, sigma: float) -> StandardReduction:
    _check(u, b_break, eps, sigma)
    stretch = b_break - 1.0
    return StandardReduction(
        eps_std=eps / (u * stretch),
        sigma_std=sigma / (math.sqrt(u) * stretch),
        time_factor=1.0 / u,
    )


def expand_from_standard(u: float, b_break: float, eps_std: float, sigma_std: float):
    """Inverse of :func:`reduce_to_standard`; returns ``(eps, sigma)``."""
    _check(u, b_break, eps_std, sigma_std)
    stretch = b_break - 1.0
    return eps_std * u * stretch, sigma_std * math.sqrt(u) * stretch


def gumbel_shift(a: float, b: float, kappa: float):
    """Parameters of ``xi + kappa`` when ``xi ~ Gumbel(a, b)``: ``(a exp(b kappa), b)``."""
    if not a > 0 or not b > 0:
        raise ParameterError(f"Gumbel parameters must be positive, got a={a!r}, b={b!r}")
    return a * math.exp(b * kappa), b
