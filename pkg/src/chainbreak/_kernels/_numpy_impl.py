"""Pure-numpy versions of the step kernels, vectorised across paths.

Same signatures and state conventions as the compiled kernels.  The
nonlinear kernels also accept ``kind == 2`` together with ``du`` / ``d2u``
callables for user-supplied potentials.
"""

import numpy as np


def _du(kind, u, g, du=None):
    if kind == 0:
        return u * g
    if kind == 1:
        return np.sinh(g - 1.0)
    return np.asarray(du(g), dtype=float)


def _d2u(kind, u, g, d2u=None):
    if kind == 0:
        return u
    if kind == 1:
        return np.cosh(g - 1.0)
    return float(d2u(np.array(g)))


def affine_recursion(a, b, h0):
    """``h[k+1] = a[k] * h[k] + b[k]`` row-wise; returns all ``n + 1`` rows."""
    n, m = a.shape
    h = np.empty((n + 1, m))
    h[0] = h0
    for k in range(n):
        h[k + 1] = a[k] * h[k] + b[k]
    return h


def _scan(prev, gap, t0, t1, b, hit, is_last, t_star, track_links):
    """Vectorised crossing scan on rows of ``hit``; returns the per-row done mask."""
    open_ = np.isnan(hit)
    cross = open_ & (prev < b) & (gap >= b)
    if cross.any():
        with np.errstate(divide="ignore", invalid="ignore"):
            tc = t0 + (b - prev) / (gap - prev) * (t1 - t0)
        hit[cross] = np.minimum(tc[cross], t_star)
    n_hit = np.sum(~np.isnan(hit), axis=1)
    if is_last:
        if t1 == t_star:
            none = n_hit == 0
            if none.any():
                rows = np.flatnonzero(none)
                hit[rows, np.argmax(gap[rows], axis=1)] = t_star
        return np.ones(hit.shape[0], dtype=bool)
    d = hit.shape[1]
    return n_hit == d if track_links else n_hit > 0


def _gaps(x, right):
    n = x.shape[0]
    full = np.empty((n, x.shape[1] + 2))
    full[:, 0] = 0.0
    full[:, 1:-1] = x
    full[:, -1] = right
    return np.diff(full, axis=1)


def linear_modal_chunk(times, k0, decay, sd, gap_mean, cmat, noise, y, prev_gap, hit, done,
                       b_break, t_star, track_links, record, rec):
    n_chunk = noise.shape[1]
    n_last = times.shape[0] - 1
    act = np.flatnonzero(~done)
    if act.size == 0:
        return
    ya = y[act]
    pg = prev_gap[act]
    ha = hit[act]
    live = np.ones(act.size, dtype=bool)
    for c in range(n_chunk):
        k = k0 + c
        ya[live] = decay[k] * ya[live] + sd[k] * noise[act[live], c]
        if record:
            rec[act[live], c] = ya[live]
        gap = gap_mean[k + 1] + ya[live] @ cmat.T
        hl = ha[live]
        fin = _scan(pg[live], gap, times[k], times[k + 1], b_break, hl, k + 1 == n_last,
                    t_star, track_links)
        ha[live] = hl
        pg[live] = gap
        idx = np.flatnonzero(live)
        live[idx[fin]] = False
        if not live.any():
            break
    y[act] = ya
    prev_gap[act] = pg
    hit[act] = ha
    done[act] = ~live


def nonlinear_chunk(times, k0, noise, x, prev_gap, hit, done, escaped, esc, d, eps, sigma,
                    b_break, limit, t_star, kind, u, track_links, record, rec, du=None):
    n_chunk = noise.shape[1]
    n_last = times.shape[0] - 1
    act = np.flatnonzero(~done)
    if act.size == 0:
        return
    xa = x[act]
    pg = prev_gap[act]
    ha = hit[act]
    live = np.ones(act.size, dtype=bool)
    for c in range(n_chunk):
        k = k0 + c
        t0, t1 = times[k], times[k + 1]
        dt = t1 - t0
        xl = xa[live]
        f = _du(kind, u, _gaps(xl, d + eps * t0), du)
        xl = xl + (f[:, 1:] - f[:, :-1]) * dt + sigma * np.sqrt(dt) * noise[act[live], c]
        xa[live] = xl
        if record:
            rec[act[live], c] = xl
        gap = _gaps(xl, d + eps * t1)
        idx = np.flatnonzero(live)
        # the certified range only matters until the chain has broken
        over = (gap > limit) & np.isnan(ha[idx]).all(axis=1)[:, None]
        bad = over.any(axis=1)
        if bad.any():
            rows = idx[bad]
            worst = np.argmax(np.where(over[bad], gap[bad], -np.inf), axis=1)
            escaped[act[rows]] = True
            esc[act[rows], 0] = t1
            esc[act[rows], 1] = worst + 1
            esc[act[rows], 2] = gap[bad][np.arange(rows.size), worst]
            live[rows] = False
        ok = ~bad
        hl = ha[idx[ok]]
        fin = _scan(pg[idx[ok]], gap[ok], t0, t1, b_break, hl, k + 1 == n_last, t_star,
                    track_links)
        ha[idx[ok]] = hl
        pg[idx[ok]] = gap[ok]
        live[idx[ok][fin]] = False
        if not live.any():
            break
    x[act] = xa
    prev_gap[act] = pg
    hit[act] = ha
    done[act] = ~live


def coupled_chunk(times, k0, noise, x, z, prev_gx, prev_gz, hit_x, hit_z, sup, done, escaped,
                  esc, d, eps, sigma, b_break, limit, t_star, kind, u, du=None, d2u=None):
    # a broken chain may run away before its partner breaks too
    with np.errstate(over="ignore", invalid="ignore"):
        _coupled(times, k0, noise, x, z, prev_gx, prev_gz, hit_x, hit_z, sup, done, escaped,
                 esc, d, eps, sigma, b_break, limit, t_star, kind, u, du, d2u)


def _coupled(times, k0, noise, x, z, prev_gx, prev_gz, hit_x, hit_z, sup, done, escaped,
             esc, d, eps, sigma, b_break, limit, t_star, kind, u, du, d2u):
    n_chunk = noise.shape[1]
    n_last = times.shape[0] - 1
    act = np.flatnonzero(~done)
    if act.size == 0:
        return
    xa, za = x[act], z[act]
    pgx, pgz = prev_gx[act], prev_gz[act]
    hxa, hza = hit_x[act], hit_z[act]
    sa = sup[act]
    live = np.ones(act.size, dtype=bool)
    for c in range(n_chunk):
        k = k0 + c
        t0, t1 = times[k], times[k + 1]
        dt = t1 - t0
        idx = np.flatnonzero(live)
        xl, zl = xa[idx], za[idx]
        pre = np.isnan(hxa[idx]).all(axis=1) & np.isnan(hza[idx]).all(axis=1)
        right0 = d + eps * t0
        stiff = _d2u(kind, u, 1.0 + eps * t0 / d, d2u)
        f = _du(kind, u, _gaps(xl, right0), du)
        zfull = np.concatenate([np.zeros((idx.size, 1)), zl, np.full((idx.size, 1), right0)], axis=1)
        lap = zfull[:, :-2] + zfull[:, 2:] - 2.0 * zl
        xi = sigma * np.sqrt(dt) * noise[act[idx], c]
        xl = xl + (f[:, 1:] - f[:, :-1]) * dt + xi
        zl = zl + stiff * lap * dt + xi
        xa[idx], za[idx] = xl, zl
        right1 = d + eps * t1
        gx = _gaps(xl, right1)
        gz = _gaps(zl, right1)
        q = 1.0 + eps * t1 / d
        s_now = np.sqrt(np.sum((zl - xl) ** 2, axis=1))
        m_now = np.sqrt(np.sum((gz - q) ** 2, axis=1))
        # suprema run up to the first break of either chain
        sa[idx, 0] = np.where(pre & (s_now > sa[idx, 0]), s_now, sa[idx, 0])
        sa[idx, 1] = np.where(pre & (m_now > sa[idx, 1]), m_now, sa[idx, 1])
        over = (gx > limit) & np.isnan(hxa[idx]).all(axis=1)[:, None]
        bad = over.any(axis=1)
        if bad.any():
            rows = idx[bad]
            worst = np.argmax(np.where(over[bad], gx[bad], -np.inf), axis=1)
            escaped[act[rows]] = True
            esc[act[rows], 0] = t1
            esc[act[rows], 1] = worst + 1
            esc[act[rows], 2] = gx[bad][np.arange(rows.size), worst]
            live[rows] = False
        ok = ~bad
        rows = idx[ok]
        is_last = k + 1 == n_last
        h = hxa[rows]
        _scan(pgx[rows], gx[ok], t0, t1, b_break, h, is_last, t_star, False)
        hxa[rows] = h
        h = hza[rows]
        _scan(pgz[rows], gz[ok], t0, t1, b_break, h, is_last, t_star, False)
        hza[rows] = h
        pgx[rows], pgz[rows] = gx[ok], gz[ok]
        both = ~np.isnan(hxa[rows]).all(axis=1) & ~np.isnan(hza[rows]).all(axis=1)
        live[rows[both]] = False
        if is_last:
            live[:] = False
        if not live.any():
            break
    x[act], z[act] = xa, za
    prev_gx[act], prev_gz[act] = pgx, pgz
    hit_x[act], hit_z[act] = hxa, hza
    sup[act] = sa
    done[act] = ~live
