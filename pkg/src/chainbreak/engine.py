"""Path simulation: nonlinear chain, its two linearisations, and the coupled pair.

Every path owns a counter-based random stream (see :func:`stats.seed_stream`)
from which it draws standard normals in particle coordinates, chunk by chunk,
only while it is still running.  The linear simulators rotate those draws
into eigen-coordinates, so a linear path and a nonlinear path with the same
stream are driven by the same Brownian increments.

Break detection is on grid samples with linear interpolation of the
crossing.  The grid is coarse on ``[0, t* - W]`` and fine on the terminal
window ``[t* - W, t*]`` where breaks actually happen, and it always ends
exactly at ``t*`` (or at the horizon if one is given).
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DomainEscapeError, ParameterError
from .model import KIND_CUSTOM, BreakEvent, ChainParams, Potential, t_star, validate_potential
from .spectral import eigendecompose, phi_increment, step_mode_integrals
from .stats import seed_stream

SYSTEMS = ("nonlinear", "linear-constant", "linear-timevarying", "coupled")

FINE_RATIO = 20
WINDOW_WIDTHS = 3.0
# upper bound on normals buffered per chunk across a batch
_BUFFER = 1 << 21
_MAX_CHUNK = 4096


@dataclass(frozen=True)
class SimGrid:
    """Two-level time grid: ``coarse_dt`` before the terminal window, ``fine_dt`` inside it.

    ``horizon`` defaults to ``t*``; it is mandatory when ``eps == 0``.
    """

    coarse_dt: float
    fine_dt: float
    window_W: float = 0.0
    horizon: Optional[float] = None

    def __post_init__(self):
        if not (self.coarse_dt > 0 and math.isfinite(self.coarse_dt)):
            raise ParameterError(f"coarse_dt must be positive, got {self.coarse_dt!r}")
        if not (self.fine_dt > 0 and self.fine_dt <= self.coarse_dt):
            raise ParameterError("need 0 < fine_dt <= coarse_dt")
        if not self.window_W >= 0:
            raise ParameterError(f"window_W must be >= 0, got {self.window_W!r}")
        if self.horizon is not None and not self.horizon > 0:
            raise ParameterError(f"horizon must be positive, got {self.horizon!r}")

    def scaled(self, factor: float) -> "SimGrid":
        """The same grid with every time multiplied by ``factor``."""
        h = None if self.horizon is None else self.horizon * factor
        return SimGrid(self.coarse_dt * factor, self.fine_dt * factor, self.window_W * factor, h)

    def times(self, params: ChainParams) -> np.ndarray:
        ts = t_star(params)
        end = ts if self.horizon is None else min(self.horizon, ts)
        if not math.isfinite(end):
            raise ParameterError("a finite horizon is required when eps == 0")
        if math.isfinite(ts) and self.window_W > ts:
            raise ParameterError(f"window_W={self.window_W!r} exceeds t*={ts!r}")
        split = ts - self.window_W if math.isfinite(ts) else end
        split = min(max(split, 0.0), end)
        parts = [_segment(0.0, split, self.coarse_dt), _segment(split, end, self.fine_dt)]
        t = np.concatenate([np.zeros(1)] + [p[1:] for p in parts if p.size > 1])
        t[-1] = end
        return t


def _segment(a, b, dt):
    if b <= a:
        return np.array([a])
    n = max(1, int(math.ceil((b - a) / dt - 1e-9)))
    return np.linspace(a, b, n + 1)


def default_window(params: ChainParams) -> float:
    """``3 gamma (sigma/eps) sqrt(ln(sigma/eps))`` clamped to ``[0, t*]``; 0 outside the noisy regime."""
    eps, sigma = params.eps, params.sigma
    if eps == 0 or not sigma > eps:
        return 0.0
    gamma = math.sqrt(params.d * (params.d - 1))
    w = WINDOW_WIDTHS * gamma * (sigma / eps) * math.sqrt(math.log(sigma / eps))
    return min(w, t_star(params))


def auto_grid(params: ChainParams, kappa_max: float, horizon: Optional[float] = None) -> SimGrid:
    """``coarse_dt = min(0.5, 0.1 / kappa_max)``, ``fine_dt = coarse_dt / 20``, default window."""
    if not kappa_max > 0:
        raise ParameterError("kappa_max must be positive")
    coarse = min(0.5, 0.1 / kappa_max)
    return SimGrid(coarse, coarse / FINE_RATIO, default_window(params), horizon)


def grid_for(system: str, params: ChainParams, potential: Optional[Potential] = None,
             u: Optional[float] = None, horizon: Optional[float] = None) -> SimGrid:
    if system == "linear-constant":
        if u is None:
            raise ParameterError("linear-constant grid needs u")
        return auto_grid(params, u, horizon)
    bounds = potential.bounds or validate_potential(potential, params.b_break)
    return auto_grid(params, bounds.kappa_max, horizon)


@dataclass
class PathState:
    """Positions of all ``d + 1`` particles at time ``t``, boundaries included."""

    t: float
    x: np.ndarray
    rng_cursor: Optional[dict] = None

    @classmethod
    def initial(cls, params: ChainParams, rng=None) -> "PathState":
        cur = None if rng is None else rng.bit_generator.state
        return cls(0.0, np.arange(params.d + 1, dtype=float), cur)

    def gaps(self) -> np.ndarray:
        return np.diff(self.x)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded grid path: ``positions[k]`` holds all particles at ``times[k]``."""

    times: np.ndarray
    positions: np.ndarray

    def gaps(self) -> np.ndarray:
        return np.diff(self.positions, axis=1)

    def state(self, k: int = -1, rng=None) -> PathState:
        cur = None if rng is None else rng.bit_generator.state
        return PathState(float(self.times[k]), self.positions[k].copy(), cur)


@dataclass(frozen=True)
class CoupledResult:
    S_star: float
    M_star: float
    break_Z: BreakEvent
    break_X: BreakEvent


# ---------------------------------------------------------------------------
# plans: everything about a run that does not depend on the noise


@dataclass(eq=False)
class _Plan:
    system: str
    params: ChainParams
    times: np.ndarray
    backend: object
    decay: Optional[np.ndarray] = None
    sd: Optional[np.ndarray] = None
    gap_mean: Optional[np.ndarray] = None
    cmat: Optional[np.ndarray] = None
    rot: Optional[np.ndarray] = None
    pos_mean: Optional[np.ndarray] = None
    kind: int = 0
    u: float = 0.0
    limit: float = math.inf
    du: object = None
    d2u: object = None

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


def _gap_matrix(d):
    """``(d, d-1)`` map from interior displacements to gap displacements."""
    D = np.zeros((d, d - 1))
    idx = np.arange(d - 1)
    D[idx, idx] = 1.0
    D[idx + 1, idx] = -1.0
    return D


def _linear_plan(system, params, times, decay, var, drift_int, backend):
    d, eps = params.d, params.eps
    spec = eigendecompose(d)
    kern = _kernels.get_backend(backend)
    qnu = spec.Q @ (np.arange(1, d) / d)
    h = kern.affine_recursion(np.ascontiguousarray(decay), -qnu[None, :] * drift_int, np.zeros(d - 1))
    g = h @ spec.Q
    pos = np.empty((times.size, d + 1))
    pos[:, 0] = 0.0
    pos[:, 1:-1] = np.arange(1, d)[None, :] * params.q(times)[:, None] + eps * g
    pos[:, -1] = d + eps * times
    return _Plan(
        system=system,
        params=params,
        times=times,
        backend=kern,
        decay=np.ascontiguousarray(decay),
        sd=np.sqrt(np.maximum(var, 0.0)),
        gap_mean=np.ascontiguousarray(np.diff(pos, axis=1)),
        cmat=np.ascontiguousarray(_gap_matrix(d) @ spec.Q.T),
        rot=np.ascontiguousarray(spec.Q),
        pos_mean=pos,
    )


def linear_constant_plan(params: ChainParams, u: float, grid: SimGrid, backend=None) -> _Plan:
    """Exact OU transitions with rate ``-lambda_j u`` on every grid step."""
    if not u > 0:
        raise ParameterError(f"u_curv must be positive, got {u!r}")
    times = grid.times(params)
    rate = eigendecompose(params.d).lambdas * u
    dt = np.diff(times)[:, None]
    decay = np.exp(rate * dt)
    var = params.sigma ** 2 * np.expm1(2.0 * rate * dt) / (2.0 * rate)
    drift_int = np.expm1(rate * dt) / rate
    return _linear_plan("linear-constant", params, times, decay, var, drift_int, backend)


def linear_timevarying_plan(params: ChainParams, p: Potential, grid: SimGrid, backend=None) -> _Plan:
    """Exact Gaussian transitions of the modes driven by ``phi(t) = U''(q_t)``."""
    if p.bounds is None:
        p = p.with_bounds(validate_potential(p, params.b_break))
    times = grid.times(params)
    lambdas = eigendecompose(params.d).lambdas
    t0, t1 = times[:-1], times[1:]
    dphi = np.asarray(phi_increment(p, params, t0, t1), dtype=float)
    decay = np.exp(lambdas[None, :] * dphi[:, None])
    var = params.sigma ** 2 * step_mode_integrals(p, params, lambdas, t0, t1, power=2.0)
    drift_int = step_mode_integrals(p, params, lambdas, t0, t1, power=1.0)
    return _linear_plan("linear-timevarying", params, times, decay, var, drift_int, backend)


def nonlinear_plan(params: ChainParams, p: Potential, grid: SimGrid, backend=None,
                   system="nonlinear") -> _Plan:
    bounds = p.bounds or validate_potential(p, params.b_break)
    kind = p.kind_code
    kern = _kernels.get_backend("numpy" if kind == KIND_CUSTOM else backend)
    return _Plan(
        system=system,
        params=params,
        times=grid.times(params),
        backend=kern,
        kind=kind,
        u=float(p.param),
        limit=params.b_break + bounds.margin_r,
        du=p.u1,
        d2u=p.u2,
    )


def make_plan(system: str, params: ChainParams, grid: SimGrid, potential: Optional[Potential] = None,
              u: Optional[float] = None, backend=None) -> _Plan:
    if system == "linear-constant":
        if u is None:
            if potential is None:
                raise ParameterError("linear-constant needs u or a potential")
            u = float(potential.u2(np.array(params.b_break)))
        return linear_constant_plan(params, u, grid, backend)
    if potential is None:
        raise ParameterError(f"system {system!r} needs a potential")
    if system == "linear-timevarying":
        return linear_timevarying_plan(params, potential, grid, backend)
    if system in ("nonlinear", "coupled"):
        return nonlinear_plan(params, potential, grid, backend, system=system)
    raise ParameterError(f"unknown system {system!r}; expected one of {SYSTEMS}")


# ---------------------------------------------------------------------------
# driver


def _chunk_len(n_paths, m):
    return int(max(16, min(_MAX_CHUNK, _BUFFER // max(1, n_paths * m))))


@dataclass(eq=False)
class _Raw:
    hit: np.ndarray
    escaped: np.ndarray
    esc: np.ndarray
    gaps: Optional[np.ndarray] = None
    rec: Optional[np.ndarray] = None
    hit_z: Optional[np.ndarray] = None
    sup: Optional[np.ndarray] = None


def _draw(rngs, done, n_paths, c, m):
    noise = np.zeros((n_paths, c, m))
    for p in np.flatnonzero(~done):
        noise[p] = rngs[p].standard_normal((c, m))
    return noise


def _drive(plan: _Plan, rngs, track_links=False, record=False) -> _Raw:
    params = plan.params
    d, m = params.d, params.d - 1
    kern = plan.backend
    times = plan.times
    n_steps = times.size - 1
    n = len(rngs)
    ts = t_star(params)
    b = params.b_break
    coupled = plan.system == "coupled"
    linear = plan.decay is not None

    hit = np.full((n, d), np.nan)
    prev_gap = np.ones((n, d))
    done = np.zeros(n, dtype=bool)
    escaped = np.zeros(n, dtype=bool)
    esc = np.full((n, 3), np.nan)
    x = np.tile(np.arange(1, d, dtype=float), (n, 1))
    y = np.zeros((n, m))
    if coupled:
        z = x.copy()
        hit_z = np.full((n, d), np.nan)
        prev_gz = np.ones((n, d))
        sup = np.zeros((n, 2))
    custom = plan.kind == KIND_CUSTOM
    C = _chunk_len(n, m)
    recs = []
    dummy = np.empty((1, 1, m))

    for k0 in range(0, n_steps, C):
        if done.all():
            break
        c = min(C, n_steps - k0)
        noise = _draw(rngs, done, n, c, m)
        rec = np.full((n, c, m), np.nan) if record else dummy
        if linear:
            noise = np.ascontiguousarray(noise @ plan.rot.T)
            kern.linear_modal_chunk(times, k0, plan.decay, plan.sd, plan.gap_mean, plan.cmat, noise, y,
                                    prev_gap, hit, done, b, ts, track_links, record, rec)
        elif coupled:
            extra = (plan.du, plan.d2u) if custom else ()
            kern.coupled_chunk(times, k0, noise, x, z, prev_gap, prev_gz, hit, hit_z, sup, done, escaped,
                               esc, d, params.eps, params.sigma, b, plan.limit, ts, plan.kind, plan.u,
                               *extra)
        else:
            extra = (plan.du,) if custom else ()
            kern.nonlinear_chunk(times, k0, noise, x, prev_gap, hit, done, escaped, esc, d, params.eps,
                                 params.sigma, b, plan.limit, ts, plan.kind, plan.u, track_links, record,
                                 rec, *extra)
        if record:
            recs.append(rec[0])

    raw = _Raw(hit=hit, escaped=escaped, esc=esc, gaps=prev_gap)
    if record:
        raw.rec = np.concatenate(recs, axis=0) if recs else np.empty((0, m))
    if coupled:
        raw.hit_z = hit_z
        raw.sup = sup
    return raw


def _events_arrays(hit, horizon, ts):
    """First break per row: ``(tau, link, censored)``; ties go to the smallest link."""
    crossed = ~np.isnan(hit).all(axis=1)
    filled = np.where(np.isnan(hit), np.inf, hit)
    link = np.where(crossed, np.argmin(filled, axis=1) + 1, 0)
    tau = np.where(crossed, filled.min(axis=1), horizon)
    if math.isfinite(ts):
        bad = crossed & (tau > ts)
        if bad.any():
            raise AssertionError(f"break after t*={ts!r}: {tau[bad][:5]!r}")
    return tau, link.astype(np.int64), ~crossed


def _event(tau, link, censored, link_taus=None) -> BreakEvent:
    lt = None if link_taus is None else tuple(float(v) for v in link_taus)
    return BreakEvent(tau=float(tau), link=int(link), censored=bool(censored), link_taus=lt)


def _trajectory(plan: _Plan, rec: np.ndarray) -> Trajectory:
    params = plan.params
    d = params.d
    steps = int(np.argmax(np.isnan(rec[:, 0]))) if np.isnan(rec[:, 0]).any() else rec.shape[0]
    times = plan.times[: steps + 1]
    pos = np.empty((steps + 1, d + 1))
    if plan.decay is not None:
        pos[:] = plan.pos_mean[: steps + 1]
        pos[1:, 1:-1] += rec[:steps] @ plan.rot
    else:
        pos[0, 1:-1] = np.arange(1, d)
        pos[1:, 1:-1] = rec[:steps]
    pos[:, 0] = 0.0
    pos[:, -1] = d + params.eps * times
    return Trajectory(times=times, positions=pos)


def _as_rng(stream):
    if isinstance(stream, np.random.Generator):
        return stream
    if isinstance(stream, (int, np.integer)):
        return seed_stream(int(stream), 0)
    raise ParameterError("seed_stream must be a numpy Generator or an integer seed")


def _single(plan, stream, track_links, return_path):
    raw = _drive(plan, [_as_rng(stream)], track_links=track_links, record=return_path)
    if raw.escaped[0]:
        t, link, gap = raw.esc[0]
        raise DomainEscapeError(float(t), int(link), float(gap), plan.limit)
    tau, link, cens = _events_arrays(raw.hit, plan.horizon, t_star(plan.params))
    ev = _event(tau[0], link[0], cens[0], raw.hit[0] if track_links else None)
    if return_path:
        return ev, _trajectory(plan, raw.rec)
    return ev


def simulate_nonlinear(params: ChainParams, p: Potential, grid: SimGrid, seed_stream, *,
                       track_links=False, return_path=False, backend=None):
    """Euler-Maruyama for the interior particles; first break per :func:`first_break`.

    Raises :class:`DomainEscapeError` if a gap leaves ``[.., b + margin_r]``
    before the chain breaks.
    """
    plan = nonlinear_plan(params, p, grid, backend)
    return _single(plan, seed_stream, track_links, return_path)


def simulate_linear_constant(params: ChainParams, u_curv: float, grid: SimGrid, seed_stream, *,
                             track_links=False, return_path=False, backend=None):
    """Constant-coefficient linear chain via exact OU mode transitions."""
    plan = linear_constant_plan(params, u_curv, grid, backend)
    return _single(plan, seed_stream, track_links, return_path)


def simulate_linear_timevarying(params: ChainParams, p: Potential, grid: SimGrid, seed_stream, *,
                                track_links=False, return_path=False, backend=None):
    """Linearised chain with stiffness ``U''(q_t)``, exact Gaussian mode transitions."""
    plan = linear_timevarying_plan(params, p, grid, backend)
    return _single(plan, seed_stream, track_links, return_path)


def simulate_coupled(params: ChainParams, p: Potential, grid: SimGrid, seed_stream, *,
                     backend=None) -> CoupledResult:
    """Nonlinear chain and its linearisation driven by identical increments, up to the horizon.

    Both are advanced by Euler steps on the same grid; ``S*`` and ``M*`` are
    suprema over grid points.
    """
    plan = nonlinear_plan(params, p, grid, backend, system="coupled")
    raw = _drive(plan, [_as_rng(seed_stream)])
    if raw.escaped[0]:
        t, link, gap = raw.esc[0]
        raise DomainEscapeError(float(t), int(link), float(gap), plan.limit)
    return _coupled_result(plan, raw, 0)


def _coupled_result(plan, raw, i):
    ts = t_star(plan.params)
    tx, lx, cx = _events_arrays(raw.hit[i:i + 1], plan.horizon, ts)
    tz, lz, cz = _events_arrays(raw.hit_z[i:i + 1], plan.horizon, ts)
    return CoupledResult(
        S_star=float(raw.sup[i, 0]),
        M_star=float(raw.sup[i, 1]),
        break_Z=_event(tz[0], lz[0], cz[0]),
        break_X=_event(tx[0], lx[0], cx[0]),
    )


def first_break(gap_prev, gap_next, t_prev: float, t_next: float, b_break: float,
                t_star: float = math.inf):
    """Earliest interpolated crossing of ``b_break`` between two samples.

    Returns ``(tau, link)`` with a 1-based link, or ``None``.  Ties go to the
    smallest link.  When the step reaches ``t_star`` without a detected
    crossing but the largest gap is at ``b_break``, the break is put at
    ``t_star``.
    """
    gp = np.asarray(gap_prev, dtype=float)
    gn = np.asarray(gap_next, dtype=float)
    if gp.shape != gn.shape or gp.ndim != 1:
        raise ParameterError("gap vectors must be 1-d and of equal length")
    if not t_prev < t_next:
        raise ParameterError("need t_prev < t_next")
    cross = (gp < b_break) & (gn >= b_break)
    if cross.any():
        with np.errstate(divide="ignore", invalid="ignore"):
            tc = t_prev + (b_break - gp) / (gn - gp) * (t_next - t_prev)
        tc = np.where(cross, np.minimum(tc, t_star), np.inf)
        j = int(np.argmin(tc))
        return float(tc[j]), j + 1
    # at t* the gaps sum to d * b, so the largest one is at b up to rounding
    if t_next >= t_star and gn.max() >= b_break * (1.0 - 1e-12):
        return float(t_star), int(np.argmax(gn)) + 1
    return None


# ---------------------------------------------------------------------------
# batches


@dataclass(eq=False)
class BatchResult:
    """Per-path outcome arrays for paths ``start .. start + n - 1``.

    Escaped paths are reported as censored with ``tau = nan`` and their
    ``(t, link, gap)`` in ``escape``.  ``final_gaps`` holds the last sampled
    gaps of each path (at the horizon for paths that ran to the end).
    """

    system: str
    params: ChainParams
    horizon: float
    start: int
    tau: np.ndarray
    link: np.ndarray
    censored: np.ndarray
    link_taus: Optional[np.ndarray]
    escaped: np.ndarray
    escape: np.ndarray
    final_gaps: Optional[np.ndarray] = None
    S_star: Optional[np.ndarray] = None
    M_star: Optional[np.ndarray] = None
    tau_Z: Optional[np.ndarray] = None
    link_Z: Optional[np.ndarray] = None

    @property
    def n_paths(self) -> int:
        return self.tau.size

    def events(self):
        lt = self.link_taus
        return [_event(self.tau[i], self.link[i], self.censored[i], None if lt is None else lt[i])
                for i in range(self.n_paths)]

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.tau, self.link, self.censored, self.escaped):
            h.update(np.ascontiguousarray(arr).tobytes())
        if self.link_taus is not None:
            h.update(np.ascontiguousarray(self.link_taus).tobytes())
        return h.hexdigest()


def _batch_job(plan, master_seed, lo, hi, track_links):
    rngs = [seed_stream(master_seed, i) for i in range(lo, hi)]
    return _drive(plan, rngs, track_links=track_links)


def run_paths(system: str, params: ChainParams, grid: SimGrid, n_paths: int, master_seed: int, *,
              potential: Optional[Potential] = None, u: Optional[float] = None, workers: int = 1,
              batch_size: int = 256, track_links: bool = False, start: int = 0, backend=None,
              plan: Optional[_Plan] = None) -> BatchResult:
    """Simulate paths ``start .. start + n_paths - 1``; results do not depend on ``workers``."""
    if n_paths < 1:
        raise ParameterError("n_paths must be >= 1")
    if batch_size < 1 or workers < 1:
        raise ParameterError("batch_size and workers must be >= 1")
    if plan is None:
        plan = make_plan(system, params, grid, potential, u, backend)
    coupled = plan.system == "coupled"
    bounds = [(lo, min(lo + batch_size, start + n_paths)) for lo in range(start, start + n_paths, batch_size)]
    job = lambda lh: _batch_job(plan, master_seed, lh[0], lh[1], track_links and not coupled)
    if workers == 1 or len(bounds) == 1:
        raws = [job(lh) for lh in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            raws = list(pool.map(job, bounds))

    hit = np.concatenate([r.hit for r in raws])
    escaped = np.concatenate([r.escaped for r in raws])
    esc = np.concatenate([r.esc for r in raws])
    ts = t_star(params)
    tau, link, cens = _events_arrays(hit, plan.horizon, ts)
    tau = np.where(escaped, np.nan, tau)
    link = np.where(escaped, 0, link)
    cens = cens | escaped
    out = BatchResult(
        system=plan.system,
        params=params,
        horizon=plan.horizon,
        start=start,
        tau=tau,
        link=link,
        censored=cens,
        link_taus=hit if (track_links and not coupled) else None,
        escaped=escaped,
        escape=esc,
        final_gaps=np.concatenate([r.gaps for r in raws]),
    )
    if coupled:
        sup = np.concatenate([r.sup for r in raws])
        hz = np.concatenate([r.hit_z for r in raws])
        tz, lz, _ = _events_arrays(hz, plan.horizon, ts)
        out.S_star = sup[:, 0]
        out.M_star = sup[:, 1]
        out.tau_Z = tz
        out.link_Z = lz
    return out


def sample_linear_modes(params: ChainParams, u: float, times, n_paths: int, master_seed: int) -> np.ndarray:
    """Exact samples of the OU modes of the constant-coefficient chain at ``times``.

    Returns an array of shape ``(n_paths, len(times), d - 1)``; path ``i``
    uses ``seed_stream(master_seed, i)`` rotated into eigen-coordinates.
    """
    if not u > 0:
        raise ParameterError(f"u must be positive, got {u!r}")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) <= 0) or times[0] <= 0:
        raise ParameterError("times must be positive and strictly increasing")
    spec = eigendecompose(params.d)
    m = spec.dim
    noise = np.stack([seed_stream(master_seed, i).standard_normal((times.size, m)) for i in range(n_paths)])
    noise = noise @ spec.Q.T
    rate = spec.lambdas * u
    dt = np.diff(np.concatenate([[0.0], times]))
    out = np.empty((n_paths, times.size, m))
    y = np.zeros((n_paths, m))
    for k, h in enumerate(dt):
        sd = params.sigma * np.sqrt(np.expm1(2.0 * rate * h) / (2.0 * rate))
        y = np.exp(rate * h) * y + sd * noise[:, k]
        out[:, k] = y
    return out


def with_horizon(grid: SimGrid, horizon: Optional[float]) -> SimGrid:
    return replace(grid, horizon=horizon)
