"""Chain parameters, pair potentials, limit-law constants and the Gumbel law.

The chain has ``d + 1`` particles; particle 0 is pinned at the origin and
particle ``d`` is pulled to the right with speed ``eps``.  Link ``i`` (1-based)
is the gap between particles ``i - 1`` and ``i``; the chain breaks when some
gap reaches ``b_break``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import AssumptionViolation, ParameterError, RegimeError

DEFAULT_R_CANDIDATES = (0.5, 0.25, 0.1, 0.05)
VALIDATION_SPACING = 1e-3

# kernel dispatch codes
KIND_QUADRATIC = 0
KIND_COSH = 1
KIND_CUSTOM = 2


@dataclass(frozen=True)
class ChainParams:
    """Physical configuration of one experiment.

    Parameters
    ----------
    d : int
        Number of links (the chain has ``d + 1`` particles), ``d >= 2``.
    eps : float
        Pulling speed, ``eps >= 0``.
    sigma : float
        Noise amplitude, ``sigma >= 0``.
    b_break : float
        Break distance, ``b_break > 1``.
    """

    d: int
    eps: float
    sigma: float
    b_break: float

    def __post_init__(self):
        if isinstance(self.d, bool) or int(self.d) != self.d or self.d < 2:
            raise ParameterError(f"d must be an integer >= 2, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        if not self.b_break > 1:
            raise ParameterError(f"b_break must exceed 1, got {self.b_break!r}")
        if not self.eps >= 0 or not math.isfinite(self.eps):
            raise ParameterError(f"eps must be finite and >= 0, got {self.eps!r}")
        if not self.sigma >= 0 or not math.isfinite(self.sigma):
            raise ParameterError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "b_break", float(self.b_break))

    @property
    def t_star(self) -> float:
        return t_star(self)

    def q(self, t):
        """Quasi-static gap ``1 + eps t / d``."""
        return 1.0 + self.eps * np.asarray(t, dtype=float) / self.d

    def replace(self, **changes) -> "ChainParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class PotentialBounds:
    kappa_min: float
    kappa_max: float
    K: float
    margin_r: float


@dataclass(frozen=True)
class Potential:
    """A pair potential given through its first three derivatives.

    The callables must accept and return numpy arrays.  ``kind`` and
    ``param`` identify the built-in potentials so that compiled kernels and
    closed-form integrals can be used; user-supplied potentials use
    ``kind == "custom"`` and always run on the numpy path.
    """

    u1: Callable = field(compare=False)
    u2: Callable = field(compare=False)
    u3: Callable = field(compare=False)
    kind: str = "custom"
    param: float = 0.0
    bounds: Optional[PotentialBounds] = None

    @property
    def name(self) -> str:
        if self.kind == "quadratic":
            return f"quadratic:u={self.param!r}"
        return self.kind

    @property
    def kind_code(self) -> int:
        return {"quadratic": KIND_QUADRATIC, "cosh": KIND_COSH}.get(self.kind, KIND_CUSTOM)

    def with_bounds(self, bounds: PotentialBounds) -> "Potential":
        return replace(self, bounds=bounds)


def make_quadratic_potential(u: float) -> Potential:
    """``U(x) = u x^2 / 2``."""
    if not u > 0 or not math.isfinite(u):
        raise ParameterError(f"curvature u must be positive, got {u!r}")
    u = float(u)
    return Potential(
        u1=lambda x: u * np.asarray(x, dtype=float),
        u2=lambda x: np.full_like(np.asarray(x, dtype=float), u),
        u3=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        kind="quadratic",
        param=u,
    )


def make_cosh_potential() -> Potential:
    """``U(x) = cosh(x - 1)``: smooth, convex everywhere, with ``U''(1) = 1``."""
    return Potential(
        u1=lambda x: np.sinh(np.asarray(x, dtype=float) - 1.0),
        u2=lambda x: np.cosh(np.asarray(x, dtype=float) - 1.0),
        u3=lambda x: np.sinh(np.asarray(x, dtype=float) - 1.0),
        kind="cosh",
    )


def potential_from_name(spec: str) -> Potential:
    """Parse ``"quadratic:u=<float>"`` or ``"cosh"``."""
    text = spec.strip()
    if text == "cosh":
        return make_cosh_potential()
    if text.startswith("quadratic"):
        rest = text[len("quadratic"):]
        if not rest:
            return make_quadratic_potential(1.0)
        if not rest.startswith(":u="):
            raise ParameterError(f"cannot parse potential {spec!r}")
        try:
            u = float(rest[3:])
        except ValueError:
            raise ParameterError(f"cannot parse potential {spec!r}") from None
        return make_quadratic_potential(u)
    raise ParameterError(f"unknown potential {spec!r}; expected 'quadratic:u=<f>' or 'cosh'")


def _grid(lo: float, hi: float) -> np.ndarray:
    n = int(math.ceil((hi - lo) / VALIDATION_SPACING)) + 1
    return np.linspace(lo, hi, max(n, 2))


def validate_potential(
    p: Potential, b_break: float, r_candidates: Sequence[float] = DEFAULT_R_CANDIDATES
) -> PotentialBounds:
    """Check strict convexity on ``[1, b_break + r]`` on a grid of spacing <= 1e-3.

    Returns the bounds for the largest candidate margin ``r`` for which the
    sampled minimum of ``U''`` is positive.
    """
    if not b_break > 1:
        raise ParameterError(f"b_break must exceed 1, got {b_break!r}")
    cands = [float(r) for r in r_candidates]
    if not cands or any(not r > 0 for r in cands):
        raise ParameterError("r_candidates must be a non-empty list of positive reals")

    worst = None
    for r in sorted(cands, reverse=True):
        x = _grid(1.0, b_break + r)
        u2 = np.asarray(p.u2(x), dtype=float)
        bad = ~(u2 > 0)
        if bad.any():
            worst = float(x[np.argmax(bad)])
            continue
        u3 = np.abs(np.asarray(p.u3(x), dtype=float))
        if not np.all(np.isfinite(u3)):
            worst = float(x[np.argmax(~np.isfinite(u3))])
            continue
        return PotentialBounds(
            kappa_min=float(u2.min()),
            kappa_max=float(u2.max()),
            K=float(u3.max()),
            margin_r=r,
        )
    raise AssumptionViolation(
        f"U'' is not strictly positive on [1, b_break + r] for any candidate r; "
        f"first offending grid point x={worst!r}",
        x=worst,
    )


def certify(p: Potential, b_break: float, r_candidates=DEFAULT_R_CANDIDATES) -> Potential:
    """Return ``p`` with validated bounds attached."""
    return p.with_bounds(validate_potential(p, b_break, r_candidates))


@dataclass(frozen=True)
class LimitLawParams:
    d: int
    v: float
    gamma: float
    A: tuple
    a: tuple
    a0: float
    b_gumbel: float
    u_curv: float

    def scale_total(self) -> float:
        """Gumbel ``a`` parameter for the chain break time."""
        return math.sqrt(self.u_curv) * self.a0

    def scale_link(self, i: int) -> float:
        """Gumbel ``a`` parameter for the 1-based link ``i``."""
        return math.sqrt(self.u_curv) * self.a[i - 1]


def limit_law_params(d: int, u_curv: float = 1.0) -> LimitLawParams:
    if int(d) != d or d < 2:
        raise ParameterError(f"d must be an integer >= 2, got {d!r}")
    if not u_curv > 0:
        raise ParameterError(f"u_curv must be positive, got {u_curv!r}")
    d = int(d)
    v = math.sqrt((d - 1) / (2 * d))
    gamma = math.sqrt(d * (d - 1))
    A = tuple(d / (d - 1) if i in (1, d) else 2 * d / (d - 1) for i in range(1, d + 1))
    root2pi = math.sqrt(2 * math.pi)
    a = tuple(v * d * Ai / root2pi for Ai in A)
    return LimitLawParams(
        d=d,
        v=v,
        gamma=gamma,
        A=A,
        a=a,
        a0=math.fsum(a),
        b_gumbel=math.sqrt(2) / (v * d),
        u_curv=float(u_curv),
    )


def gumbel_cdf(r, a: float, b: float):
    """``P(chi <= r) = exp(-a exp(-b r))``; vectorised over ``r``."""
    if not a > 0 or not b > 0:
        raise ParameterError(f"Gumbel parameters must be positive, got a={a!r}, b={b!r}")
    r = np.asarray(r, dtype=float)
    with np.errstate(over="ignore"):
        out = np.exp(-a * np.exp(-b * r))
    return float(out) if out.ndim == 0 else out


def t_star(params: ChainParams) -> float:
    """Latest possible break time ``d (b - 1) / eps``; ``inf`` when ``eps == 0``."""
    if params.eps == 0:
        return math.inf
    return params.d * (params.b_break - 1.0) / params.eps


def normalize_break_time(tau, params: ChainParams, u_curv: float):
    """Centre and scale break times so that they are asymptotically Gumbel."""
    eps, sigma = params.eps, params.sigma
    if not eps > 0:
        raise RegimeError("normalisation needs eps > 0")
    if not sigma > eps:
        raise RegimeError(f"normalisation needs sigma > eps (got sigma={sigma!r}, eps={eps!r})")
    if not u_curv > 0:
        raise ParameterError(f"u_curv must be positive, got {u_curv!r}")
    gamma = math.sqrt(params.d * (params.d - 1))
    root_log = math.sqrt(math.log(sigma / eps))
    su = math.sqrt(u_curv)
    centre = t_star(params) - gamma * sigma / (su * eps) * root_log
    scale = su * eps / sigma * root_log
    out = scale * (centre - np.asarray(tau, dtype=float))
    return float(out) if out.ndim == 0 else out


def position_limit_probs(d: int) -> np.ndarray:
    if int(d) != d or d < 2:
        raise ParameterError(f"d must be an integer >= 2, got {d!r}")
    p = np.full(int(d), 1.0 / (d - 1))
    p[0] = p[-1] = 1.0 / (2 * (d - 1))
    return p


@dataclass(frozen=True)
class BreakEvent:
    """Result of one path.

    ``link`` is 1-based.  ``link_taus`` holds the first hitting time of every
    link when per-link tracking was requested (``nan`` = not hit by the
    horizon).
    """

    tau: float
    link: int
    censored: bool
    link_taus: Optional[tuple] = None

    @classmethod
    def censored_at(cls, horizon: float, link_taus=None) -> "BreakEvent":
        return cls(tau=float(horizon), link=0, censored=True, link_taus=link_taus)
