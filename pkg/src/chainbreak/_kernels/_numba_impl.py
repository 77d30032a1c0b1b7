"""Compiled step kernels.

All kernels advance a batch of paths through steps ``k0 .. k0 + C - 1`` of a
fixed time grid, consuming pre-drawn standard normals, and update the
per-path state arrays in place.  Per-link first crossing times are
written into ``hit`` (``nan`` = not yet crossed).
"""

import math

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True)


@njit(**_JIT)
def _du(kind, u, g):
    if kind == 0:
        return u * g
    return math.sinh(g - 1.0)


@njit(**_JIT)
def _d2u(kind, u, g):
    if kind == 0:
        return u
    return math.cosh(g - 1.0)


@njit(**_JIT)
def _unbroken(hit_row):
    for i in range(hit_row.shape[0]):
        if not math.isnan(hit_row[i]):
            return False
    return True


@njit(**_JIT)
def affine_recursion(a, b, h0):
    """``h[k+1] = a[k] * h[k] + b[k]`` row-wise; returns all ``n + 1`` rows."""
    n, m = a.shape
    h = np.empty((n + 1, m))
    h[0] = h0
    for k in range(n):
        for j in range(m):
            h[k + 1, j] = a[k, j] * h[k, j] + b[k, j]
    return h


@njit(**_JIT)
def _scan(prev, gap, t0, t1, b, hit_row, is_last, t_star, track_links):
    """Record crossings of ``b`` between two samples; return True when the path is done."""
    d = gap.shape[0]
    n_hit = 0
    for i in range(d):
        if math.isnan(hit_row[i]):
            if prev[i] < b and gap[i] >= b:
                hit_row[i] = t0 + (b - prev[i]) / (gap[i] - prev[i]) * (t1 - t0)
                if hit_row[i] > t_star:
                    hit_row[i] = t_star
                n_hit += 1
        else:
            n_hit += 1
    if is_last and n_hit == 0 and t1 == t_star:
        # total length is d * b at t*, so some gap must have reached b
        j = 0
        for i in range(1, d):
            if gap[i] > gap[j]:
                j = i
        hit_row[j] = t_star
        n_hit = 1
    if is_last:
        return True
    if track_links:
        return n_hit == d
    return n_hit > 0


@njit(**_JIT)
def linear_modal_chunk(times, k0, decay, sd, gap_mean, cmat, noise, y, prev_gap, hit, done,
                       b_break, t_star, track_links, record, rec):
    n_paths, n_chunk, m = noise.shape
    d = cmat.shape[0]
    n_last = times.shape[0] - 1
    gap = np.empty(d)
    for p in range(n_paths):
        if done[p]:
            continue
        for c in range(n_chunk):
            k = k0 + c
            for j in range(m):
                y[p, j] = decay[k, j] * y[p, j] + sd[k, j] * noise[p, c, j]
                if record:
                    rec[p, c, j] = y[p, j]
            for i in range(d):
                s = gap_mean[k + 1, i]
                for j in range(m):
                    s += cmat[i, j] * y[p, j]
                gap[i] = s
            fin = _scan(prev_gap[p], gap, times[k], times[k + 1], b_break, hit[p],
                        k + 1 == n_last, t_star, track_links)
            for i in range(d):
                prev_gap[p, i] = gap[i]
            if fin:
                done[p] = True
                break


@njit(**_JIT)
def nonlinear_chunk(times, k0, noise, x, prev_gap, hit, done, escaped, esc, d, eps, sigma,
                    b_break, limit, t_star, kind, u, track_links, record, rec):
    """Euler-Maruyama for the interior particles ``x[:, 0..d-2]``.

    ``esc[p]`` receives ``(t, link, gap)`` when a gap exceeds ``limit``.
    """
    n_paths, n_chunk, m = noise.shape
    n_last = times.shape[0] - 1
    gap = np.empty(d)
    force = np.empty(d)
    for p in range(n_paths):
        if done[p]:
            continue
        for c in range(n_chunk):
            k = k0 + c
            t0 = times[k]
            t1 = times[k + 1]
            dt = t1 - t0
            sq = sigma * math.sqrt(dt)
            right = d + eps * t0
            # gaps and spring forces at the start of the step
            prev_x = 0.0
            for i in range(m):
                gap[i] = x[p, i] - prev_x
                prev_x = x[p, i]
            gap[d - 1] = right - prev_x
            for i in range(d):
                force[i] = _du(kind, u, gap[i])
            for i in range(m):
                x[p, i] += (force[i + 1] - force[i]) * dt + sq * noise[p, c, i]
                if record:
                    rec[p, c, i] = x[p, i]
            right = d + eps * t1
            prev_x = 0.0
            worst = -1
            for i in range(m):
                gap[i] = x[p, i] - prev_x
                prev_x = x[p, i]
            gap[d - 1] = right - prev_x
            # the certified range only matters until the chain has broken
            if _unbroken(hit[p]):
                for i in range(d):
                    if gap[i] > limit and (worst < 0 or gap[i] > gap[worst]):
                        worst = i
            if worst >= 0:
                escaped[p] = True
                esc[p, 0] = t1
                esc[p, 1] = worst + 1
                esc[p, 2] = gap[worst]
                done[p] = True
                break
            fin = _scan(prev_gap[p], gap, t0, t1, b_break, hit[p], k + 1 == n_last,
                        t_star, track_links)
            for i in range(d):
                prev_gap[p, i] = gap[i]
            if fin:
                done[p] = True
                break


@njit(**_JIT)
def coupled_chunk(times, k0, noise, x, z, prev_gx, prev_gz, hit_x, hit_z, sup, done, escaped,
                  esc, d, eps, sigma, b_break, limit, t_star, kind, u):
    """Advance the nonlinear chain ``x`` and its linearisation ``z`` with shared noise.

    ``sup[p]`` holds the running ``(S*, M*)`` up to the first break of either
    chain; a path stops once both have broken.
    """
    n_paths, n_chunk, m = noise.shape
    n_last = times.shape[0] - 1
    gx = np.empty(d)
    gz = np.empty(d)
    fx = np.empty(d)
    lap = np.empty(m)
    for p in range(n_paths):
        if done[p]:
            continue
        for c in range(n_chunk):
            k = k0 + c
            t0 = times[k]
            t1 = times[k + 1]
            dt = t1 - t0
            sq = sigma * math.sqrt(dt)
            right = d + eps * t0
            stiff = _d2u(kind, u, 1.0 + eps * t0 / d)
            prev_x = 0.0
            for i in range(m):
                gx[i] = x[p, i] - prev_x
                prev_x = x[p, i]
            gx[d - 1] = right - prev_x
            for i in range(d):
                fx[i] = _du(kind, u, gx[i])
            for i in range(m):
                left_z = z[p, i - 1] if i > 0 else 0.0
                right_z = z[p, i + 1] if i < m - 1 else right
                lap[i] = left_z + right_z - 2.0 * z[p, i]
            for i in range(m):
                xi = sq * noise[p, c, i]
                x[p, i] += (fx[i + 1] - fx[i]) * dt + xi
                z[p, i] += stiff * lap[i] * dt + xi
            right = d + eps * t1
            q = 1.0 + eps * t1 / d
            prev_x = 0.0
            prev_z = 0.0
            s2 = 0.0
            for i in range(m):
                gx[i] = x[p, i] - prev_x
                gz[i] = z[p, i] - prev_z
                prev_x = x[p, i]
                prev_z = z[p, i]
                s2 += (z[p, i] - x[p, i]) ** 2
            gx[d - 1] = right - prev_x
            gz[d - 1] = right - prev_z
            m2 = 0.0
            for i in range(d):
                m2 += (gz[i] - q) ** 2
            # suprema run up to the first break of either chain
            if _unbroken(hit_x[p]) and _unbroken(hit_z[p]):
                s_now = math.sqrt(s2)
                m_now = math.sqrt(m2)
                if s_now > sup[p, 0]:
                    sup[p, 0] = s_now
                if m_now > sup[p, 1]:
                    sup[p, 1] = m_now
            worst = -1
            if _unbroken(hit_x[p]):
                for i in range(d):
                    if gx[i] > limit and (worst < 0 or gx[i] > gx[worst]):
                        worst = i
            if worst >= 0:
                escaped[p] = True
                esc[p, 0] = t1
                esc[p, 1] = worst + 1
                esc[p, 2] = gx[worst]
                done[p] = True
                break
            is_last = k + 1 == n_last
            _scan(prev_gx[p], gx, t0, t1, b_break, hit_x[p], is_last, t_star, False)
            _scan(prev_gz[p], gz, t0, t1, b_break, hit_z[p], is_last, t_star, False)
            for i in range(d):
                prev_gx[p, i] = gx[i]
                prev_gz[p, i] = gz[i]
            if is_last or not (_unbroken(hit_x[p]) or _unbroken(hit_z[p])):
                done[p] = True
                break
