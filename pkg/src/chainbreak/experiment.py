"""Experiment configuration, Monte Carlo orchestration and report emission."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .engine import SYSTEMS, BatchResult, SimGrid, grid_for, run_paths
from .errors import ChainBreakError, ConfigError, DomainError, ParameterError
from .model import (
    ChainParams,
    certify,
    gumbel_cdf,
    limit_law_params,
    normalize_break_time,
    position_limit_probs,
    potential_from_name,
    t_star,
)
from .scaling import reduce_to_standard
from .stats import ecdf, ks_distance, ks_two_sample, position_chisq

CSV_HEADER = ("path_index", "tau", "link", "censored", "normalized_tau")
ESCAPE_ABORT_FRACTION = 0.01
SWEEP_AXES = ("eps", "sigma", "d", "b_break", "n_paths")
COMFORTABLE = 0.1
MARGINAL = 1.0
ECDF_POINTS = 41


class EscapeAbort(ChainBreakError):
    """More than 1% of nonlinear paths left the certified range of the potential."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class ExperimentConfig:
    chain: ChainParams
    potential: str = "quadratic:u=1"
    system: str = "linear-constant"
    grid: Optional[SimGrid] = None
    u: Optional[float] = None
    horizon: Optional[float] = None
    n_paths: int = 1000
    master_seed: int = 0
    csv: Optional[str] = None
    json: Optional[str] = None
    workers: int = 1
    batch_size: int = 256
    track_links: bool = True
    backend: Optional[str] = None

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ConfigError(f"unknown system {self.system!r}; expected one of {SYSTEMS}")
        if isinstance(self.n_paths, bool) or int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ConfigError(f"n_paths must be an integer >= 1, got {self.n_paths!r}")
        if self.workers < 1 or self.batch_size < 1:
            raise ConfigError("workers and batch_size must be >= 1")
        if self.u is not None and not self.u > 0:
            raise ConfigError(f"u must be positive, got {self.u!r}")
        try:
            potential_from_name(self.potential)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None
        if self.chain.eps == 0 and self.horizon is None and (self.grid is None or self.grid.horizon is None):
            raise ConfigError("eps == 0 needs an explicit horizon")

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def sim_u(self) -> float:
        """Curvature of the limit law; for ``linear-constant`` also the simulated stiffness."""
        if self.system == "linear-constant" and self.u is not None:
            return float(self.u)
        p = potential_from_name(self.potential)
        return float(p.u2(np.array(self.chain.b_break)))


_CHAIN_KEYS = ("d", "eps", "sigma", "b_break")
_GRID_KEYS = ("coarse_dt", "fine_dt", "window")
_SCALAR_KEYS = ("potential", "system", "u", "horizon", "n_paths", "master_seed", "csv", "json",
                "workers", "batch_size", "track_links", "backend")
CONFIG_KEYS = _CHAIN_KEYS + ("grid",) + _GRID_KEYS + _SCALAR_KEYS


def config_from_mapping(data: dict) -> ExperimentConfig:
    """Build a config from flat keys (as found in a TOML file)."""
    unknown = sorted(set(data) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = [k for k in _CHAIN_KEYS if k not in data]
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")
    try:
        chain = ChainParams(int(data["d"]), float(data["eps"]), float(data["sigma"]), float(data["b_break"]))
        grid = None
        g = data.get("grid", "auto")
        explicit = [k for k in _GRID_KEYS if k in data]
        if g != "auto":
            raise ConfigError("grid must be 'auto'; give coarse_dt/fine_dt/window for a manual grid")
        if explicit:
            if "coarse_dt" not in data:
                raise ConfigError("a manual grid needs coarse_dt")
            coarse = float(data["coarse_dt"])
            fine = float(data.get("fine_dt", coarse / 20))
            window = float(data.get("window", 0.0))
            grid = SimGrid(coarse, fine, window, data.get("horizon"))
        kw = {k: data[k] for k in _SCALAR_KEYS if k in data}
        for k in ("n_paths", "master_seed", "workers", "batch_size"):
            if k in kw:
                if isinstance(kw[k], bool) or int(kw[k]) != kw[k]:
                    raise ConfigError(f"{k} must be an integer")
                kw[k] = int(kw[k])
        for k in ("u", "horizon"):
            if k in kw and kw[k] is not None:
                kw[k] = float(kw[k])
        if "track_links" in kw:
            kw["track_links"] = bool(kw["track_links"])
        return ExperimentConfig(chain=chain, grid=grid, **kw)
    except ConfigError:
        raise
    except (ParameterError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def read_config_file(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Read a TOML config; entries of ``overrides`` that are not ``None`` win."""
    data = read_config_file(path)
    for k, v in (overrides or {}).items():
        if v is not None:
            data[k] = v
    return config_from_mapping(data)


def config_to_mapping(cfg: ExperimentConfig) -> dict:
    out = {"d": cfg.chain.d, "eps": cfg.chain.eps, "sigma": cfg.chain.sigma, "b_break": cfg.chain.b_break}
    if cfg.grid is None:
        out["grid"] = "auto"
    else:
        out.update(coarse_dt=cfg.grid.coarse_dt, fine_dt=cfg.grid.fine_dt, window=cfg.grid.window_W)
    for k in _SCALAR_KEYS:
        v = getattr(cfg, k)
        if v is not None:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# regime


@dataclass(frozen=True)
class RegimeReport:
    ratio: float
    vanish3: float
    vanish15: float
    vanish1: float
    classification: dict

    def to_dict(self) -> dict:
        return asdict(self)


def _grade(x):
    if x < COMFORTABLE:
        return "comfortably small"
    if x < MARGINAL:
        return "marginal"
    return "large"


def check_regime(params: ChainParams) -> RegimeReport:
    """Finite-size indicators of the intermediate pulling regime (advisory only)."""
    eps, sigma = params.eps, params.sigma
    if not 0 < eps < 1:
        raise DomainError(f"regime check needs 0 < eps < 1, got {eps!r}")
    if not sigma > 0:
        raise ParameterError(f"regime check needs sigma > 0, got {sigma!r}")
    L = abs(math.log(eps))
    ratio = sigma / eps
    v3, v15, v1 = sigma ** 2 * L ** 3, sigma ** 2 * L ** 1.5, sigma ** 2 * L
    noisy = ratio > 1
    cls = {
        "nonlinear": _grade(v3) if noisy else "outside",
        "linear-timevarying": _grade(v15) if noisy else "outside",
        "linear-constant": _grade(v1) if noisy else "outside",
    }
    return RegimeReport(ratio=ratio, vanish3=v3, vanish15=v15, vanish1=v1, classification=cls)


# ---------------------------------------------------------------------------
# reports


def _num(x):
    """JSON-safe float: nan -> None."""
    x = float(x)
    return None if math.isnan(x) else x


def _normalizable(params):
    return params.eps > 0 and params.sigma > params.eps


@dataclass(eq=False)
class ExperimentReport:
    config: ExperimentConfig
    batch: BatchResult
    normalized: np.ndarray
    summary: dict

    @property
    def n_paths(self) -> int:
        return self.batch.n_paths

    def rows(self):
        b = self.batch
        for i in range(b.n_paths):
            yield (b.start + i, b.tau[i], int(b.link[i]), int(b.censored[i]), self.normalized[i])

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for idx, tau, link, cens, z in self.rows():
            w.writerow([idx, _fmt(tau), link, cens, _fmt(z)])
        return buf.getvalue()

    def json_text(self) -> str:
        return json.dumps(self.summary, indent=2, sort_keys=True, allow_nan=False)

    def write(self, csv_path=None, json_path=None):
        csv_path = csv_path or self.config.csv
        json_path = json_path or self.config.json
        if csv_path:
            with open(csv_path, "w", newline="") as fh:
                fh.write(self.csv_text())
        if json_path:
            with open(json_path, "w") as fh:
                fh.write(self.json_text() + "\n")


def _fmt(x) -> str:
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def _summarize(cfg: ExperimentConfig, batch: BatchResult, u_curv: float):
    params = cfg.chain
    d = params.d
    ok = ~batch.censored
    law = limit_law_params(d, u_curv)
    normalized = np.full(batch.n_paths, np.nan)
    summary: dict[str, Any] = {
        "config": config_to_mapping(cfg),
        "t_star": _num(t_star(params)) if math.isfinite(t_star(params)) else None,
        "horizon": batch.horizon,
        "n_paths": batch.n_paths,
        "n_censored": int(np.sum(batch.censored & ~batch.escaped)),
        "n_escaped": int(batch.escaped.sum()),
        "escaped": [
            {"path_index": int(batch.start + i), "t": _num(batch.escape[i, 0]),
             "link": int(batch.escape[i, 1]), "gap": _num(batch.escape[i, 2])}
            for i in np.flatnonzero(batch.escaped)
        ],
        "digest": batch.digest(),
        "limit_law": {"u_curv": u_curv, "a0": law.scale_total(), "b": law.b_gumbel,
                      "a": [law.scale_link(i) for i in range(1, d + 1)]},
    }
    # with a horizon of t* no path can stay unbroken
    summary["censoring_flag"] = bool(
        params.eps > 0 and batch.horizon == t_star(params) and summary["n_censored"] > 0)

    counts = np.bincount(batch.link[ok], minlength=d + 1)[1:]
    n_ok = int(ok.sum())
    probs = position_limit_probs(d)
    summary["positions"] = {
        "counts": counts.tolist(),
        "frequencies": (counts / n_ok).tolist() if n_ok else None,
        "limit_probs": probs.tolist(),
        "chisq": position_chisq(counts, probs) if n_ok else None,
    }

    summary["ks_total"] = None
    summary["ks_links"] = None
    summary["ecdf"] = None
    if _normalizable(params) and n_ok:
        normalized[ok] = normalize_break_time(batch.tau[ok], params, u_curv)
        z = normalized[ok]
        a0, b = law.scale_total(), law.b_gumbel
        summary["ks_total"] = ks_distance(z, lambda r: gumbel_cdf(r, a0, b))
        lo, hi = -math.log(-math.log(0.01) / a0) / b, -math.log(-math.log(0.99) / a0) / b
        pts = np.linspace(lo, hi, ECDF_POINTS)
        summary["ecdf"] = {"points": pts.tolist(), "ecdf": ecdf(z, pts).tolist(),
                           "gumbel": gumbel_cdf(pts, a0, b).tolist()}
        if batch.link_taus is not None:
            lt = batch.link_taus[~batch.escaped]
            ks = []
            for i in range(d):
                col = lt[:, i]
                zi = np.full(col.size, -np.inf)
                hit = ~np.isnan(col)
                zi[hit] = normalize_break_time(col[hit], params, u_curv)
                ai = law.scale_link(i + 1)
                ks.append(ks_distance(zi, lambda r, ai=ai: gumbel_cdf(r, ai, b)))
            summary["ks_links"] = ks
            summary["links_unhit"] = np.isnan(lt).sum(axis=0).tolist()
    try:
        summary["regime"] = check_regime(params).to_dict()
    except (DomainError, ParameterError):
        summary["regime"] = None
    if batch.S_star is not None:
        s = batch.S_star
        summary["coupling"] = {
            "S_star_mean": float(np.mean(s)),
            "S_star_q95": float(np.quantile(s, 0.95)),
            "M_star_mean": float(np.mean(batch.M_star)),
            "p_S_star_ge_0.1": float(np.mean(s >= 0.1)),
        }
    return normalized, summary


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentReport:
    params = cfg.chain
    potential = certify(potential_from_name(cfg.potential), params.b_break)
    u_curv = cfg.sim_u()
    grid = cfg.grid or grid_for(cfg.system, params, potential, u=u_curv, horizon=cfg.horizon)
    if cfg.horizon is not None and grid.horizon is None:
        grid = replace(grid, horizon=cfg.horizon)
    batch = run_paths(cfg.system, params, grid, cfg.n_paths, cfg.master_seed, potential=potential,
                      u=u_curv, workers=cfg.workers, batch_size=cfg.batch_size,
                      track_links=cfg.track_links, backend=cfg.backend)
    normalized, summary = _summarize(cfg, batch, u_curv)
    report = ExperimentReport(cfg, batch, normalized, summary)
    if write:
        report.write()
    if batch.escaped.mean() > ESCAPE_ABORT_FRACTION:
        raise EscapeAbort(f"{int(batch.escaped.sum())} of {batch.n_paths} paths left the certified "
                          f"range of the potential", report)
    return report


def _suffixed(path, axis, value):
    if not path:
        return path
    stem, ext = os.path.splitext(path)
    return f"{stem}_{axis}={value}{ext}"


def sweep(base: ExperimentConfig, axis: str, values: Sequence, write: bool = True):
    """One experiment per value of ``axis``, all with the base master seed."""
    if axis not in SWEEP_AXES:
        raise ParameterError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    reports = []
    for v in values:
        if axis == "n_paths":
            cfg = base.replace(n_paths=int(v))
        else:
            v = int(v) if axis == "d" else float(v)
            cfg = base.replace(chain=base.chain.replace(**{axis: v}))
        cfg = cfg.replace(csv=_suffixed(base.csv, axis, v), json=_suffixed(base.json, axis, v))
        reports.append(run_experiment(cfg, write=write))
    return reports


# ---------------------------------------------------------------------------
# verification recipes


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.value:.6g} (threshold {self.threshold:g})"


@dataclass(eq=False)
class Verdict:
    checks: list
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def verify_law(cfg: ExperimentConfig, ks_total=0.15, ks_link=0.20, position_tol=0.05) -> Verdict:
    """Gumbel law of the break time, of each link, and the position law, on one run."""
    report = run_experiment(cfg.replace(track_links=True), write=True)
    s = report.summary
    checks = []
    if s["ks_total"] is None:
        raise ConfigError("break-time law needs sigma > eps > 0 and at least one break")
    checks.append(Check("ks_total", s["ks_total"], ks_total, s["ks_total"] <= ks_total))
    if ks_link is not None and s["ks_links"] is not None:
        for i, v in enumerate(s["ks_links"], 1):
            checks.append(Check(f"ks_link_{i}", v, ks_link, v <= ks_link))
    freq = np.asarray(s["positions"]["frequencies"])
    dev = float(np.max(np.abs(freq - position_limit_probs(cfg.chain.d))))
    checks.append(Check("position_max_dev", dev, position_tol, dev <= position_tol))
    ts = t_star(cfg.chain)
    b = report.batch
    viol = int(np.sum(~b.censored & (b.tau > ts)))
    checks.append(Check("tau_above_t_star", viol, 0, viol == 0))
    return Verdict(checks, {"summary": s})


def verify_scaling(u=4.0, b_break=3.0, eps=0.02, sigma=0.2, d=3, n_paths=5000, master_seed=0,
                   workers=1, threshold=0.04, backend=None) -> Verdict:
    """``tau_{u,b}(eps, sigma)`` against ``(1/u) tau_{1,2}(eps', sigma')`` with independent paths."""
    red = reduce_to_standard(u, b_break, eps, sigma)
    general = ChainParams(d, eps, sigma, b_break)
    standard = ChainParams(d, red.eps_std, red.sigma_std, 2.0)
    grid = grid_for("linear-constant", general, u=u)
    # the standard problem runs on the same grid in its own (stretched) time
    grid_std = grid.scaled(1.0 / red.time_factor)
    ra = run_paths("linear-constant", general, grid, n_paths, master_seed, u=u, workers=workers,
                   backend=backend)
    rb = run_paths("linear-constant", standard, grid_std, n_paths, master_seed, u=1.0, workers=workers,
                   start=n_paths, backend=backend)
    ta = ra.tau[~ra.censored]
    tb = red.time_factor * rb.tau[~rb.censored]
    ks = ks_two_sample(ta, tb)
    checks = [Check("ks_two_sample", ks, threshold, ks <= threshold)]
    viol = int(np.sum(ta > t_star(general)) + np.sum(rb.tau[~rb.censored] > t_star(standard)))
    checks.append(Check("tau_above_t_star", viol, 0, viol == 0))
    return Verdict(checks, {"eps_std": red.eps_std, "sigma_std": red.sigma_std,
                            "time_factor": red.time_factor, "n_general": int(ta.size),
                            "n_standard": int(tb.size)})
