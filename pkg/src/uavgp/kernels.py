"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Two families live here:

* segmented log-sum-exp evaluation and barrier derivative assembly for the
  geometric-program solver, operating on a CSR matrix whose rows are the
  monomial exponent vectors and a ``seg`` offset array grouping rows into
  functions (row block ``seg[f]:seg[f+1]`` belongs to function ``f``);
* batched exact-model fitness for the genetic-algorithm baseline.

The public names dispatch on :data:`uavgp._accel.USE_NUMBA`; the ``*_numba``
and ``*_numpy`` variants stay importable so both can be tested and timed.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

G3DB_NUMERATOR = 8.83
WIDE_FUNCTION = 24


# ---------------------------------------------------------------------------
# segmented log-sum-exp
# ---------------------------------------------------------------------------

@njit
def lse_values_numba(indptr, indices, data, b, seg, w):
    n_fun = seg.shape[0] - 1
    out = np.empty(n_fun)
    for f in range(n_fun):
        t0 = seg[f]
        t1 = seg[f + 1]
        zmax = -np.inf
        z = np.empty(t1 - t0)
        for t in range(t0, t1):
            acc = b[t]
            for q in range(indptr[t], indptr[t + 1]):
                acc += data[q] * w[indices[q]]
            z[t - t0] = acc
            if acc > zmax:
                zmax = acc
        s = 0.0
        for i in range(t1 - t0):
            s += math.exp(z[i] - zmax)
        out[f] = zmax + math.log(s)
    return out


@njit
def lse_derivs_numba(indptr, indices, data, b, seg, w, cterm, couter):
    """Return ``grad = sum_f cterm[f] * df`` and
    ``H = sum_f cterm[f] * d2f + couter[f] * df df^T``."""
    n = w.shape[0]
    n_fun = seg.shape[0] - 1
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    g = np.zeros(n)
    mark = -np.ones(n, dtype=np.int64)
    touched = np.empty(n, dtype=np.int64)
    # functions touching many variables get their rank-one terms from one
    # BLAS product at the end instead of a scalar double loop
    width = _function_widths(indptr, indices, seg, n)
    wide_row = -np.ones(n_fun, dtype=np.int64)
    n_wide = 0
    for f in range(n_fun):
        if width[f] > WIDE_FUNCTION:
            wide_row[f] = n_wide
            n_wide += 1
    J = np.zeros((n_wide, n))
    Jw = np.zeros(n_wide)
    for f in range(n_fun):
        cf = cterm[f]
        co = couter[f]
        if cf == 0.0 and co == 0.0:
            continue
        t0 = seg[f]
        t1 = seg[f + 1]
        z = np.empty(t1 - t0)
        zmax = -np.inf
        for t in range(t0, t1):
            acc = b[t]
            for q in range(indptr[t], indptr[t + 1]):
                acc += data[q] * w[indices[q]]
            z[t - t0] = acc
            if acc > zmax:
                zmax = acc
        tot = 0.0
        for i in range(t1 - t0):
            z[i] = math.exp(z[i] - zmax)
            tot += z[i]
        ntouch = 0
        for t in range(t0, t1):
            st = z[t - t0] / tot
            coef = cf * st
            q0 = indptr[t]
            q1 = indptr[t + 1]
            for qa in range(q0, q1):
                ia = indices[qa]
                da = data[qa]
                g[ia] += st * da
                if mark[ia] != f:
                    mark[ia] = f
                    touched[ntouch] = ia
                    ntouch += 1
                if coef != 0.0:
                    # upper triangle only; mirrored once at the end
                    for qb in range(q0, q1):
                        ib = indices[qb]
                        if ib >= ia:
                            hess[ia, ib] += coef * da * data[qb]
        gg = co - cf
        r = wide_row[f]
        if r >= 0:
            Jw[r] = gg
            for a in range(ntouch):
                ia = touched[a]
                grad[ia] += cf * g[ia]
                J[r, ia] = g[ia]
        else:
            idx = np.sort(touched[:ntouch])
            for a in range(ntouch):
                ia = idx[a]
                grad[ia] += cf * g[ia]
                if gg != 0.0:
                    ga = gg * g[ia]
                    for bb in range(a, ntouch):
                        ib = idx[bb]
                        hess[ia, ib] += ga * g[ib]
        for a in range(ntouch):
            g[touched[a]] = 0.0
    for i in range(n):
        for j in range(i):
            hess[i, j] = hess[j, i]
    if n_wide > 0:
        M = (J * Jw.reshape(-1, 1)).T @ J
        for i in range(n):
            for j in range(i, n):
                v = 0.5 * (M[i, j] + M[j, i])
                hess[i, j] += v
                if j != i:
                    hess[j, i] += v
    return grad, hess


@njit
def _function_widths(indptr, indices, seg, n):
    """Number of distinct variables in each function."""
    n_fun = seg.shape[0] - 1
    width = np.zeros(n_fun, dtype=np.int64)
    mark = -np.ones(n, dtype=np.int64)
    for f in range(n_fun):
        for q in range(indptr[seg[f]], indptr[seg[f + 1]]):
            j = indices[q]
            if mark[j] != f:
                mark[j] = f
                width[f] += 1
    return width


def _dense_rows(indptr, indices, data, n):
    n_rows = indptr.shape[0] - 1
    A = np.zeros((n_rows, n))
    rows = np.repeat(np.arange(n_rows), np.diff(indptr))
    np.add.at(A, (rows, indices), data)
    return A


def _segment_softmax(z, seg):
    starts = seg[:-1]
    zmax = np.maximum.reduceat(z, starts)
    counts = np.diff(seg)
    e = np.exp(z - np.repeat(zmax, counts))
    tot = np.add.reduceat(e, starts)
    return zmax + np.log(tot), e / np.repeat(tot, counts)


def lse_values_numpy(indptr, indices, data, b, seg, w, dense=None):
    if dense is None:
        dense = _dense_rows(indptr, indices, data, w.shape[0])
    vals, _ = _segment_softmax(dense @ w + b, seg)
    return vals


def lse_derivs_numpy(indptr, indices, data, b, seg, w, cterm, couter, dense=None):
    if dense is None:
        dense = _dense_rows(indptr, indices, data, w.shape[0])
    _, s = _segment_softmax(dense @ w + b, seg)
    counts = np.diff(seg)
    G = np.add.reduceat(s[:, None] * dense, seg[:-1], axis=0)
    row_coef = np.repeat(cterm, counts) * s
    grad = G.T @ cterm
    hess = dense.T @ (row_coef[:, None] * dense) + G.T @ ((couter - cterm)[:, None] * G)
    return grad, hess


# ---------------------------------------------------------------------------
# GA population fitness on the exact average-SINR model
# ---------------------------------------------------------------------------

@njit
def population_fitness_numba(place, powers, xs, ys, c, psi, beta, eta1, eta2,
                             kappa, alpha, sigma2, gamma0):
    n_pop = place.shape[0]
    K = xs.shape[0]
    obj = np.empty(n_pop)
    viol = np.empty(n_pop)
    g = np.empty(K)
    for i in range(n_pop):
        xu = place[i, 0]
        yu = place[i, 1]
        h = place[i, 2]
        th = place[i, 3]
        gain = G3DB_NUMERATOR / (th * th)
        reach = h * math.tan(0.5 * th)
        v = 0.0
        interf = 0.0
        worst = 0.0
        for k in range(K):
            dx = xs[k] - xu
            dy = ys[k] - yu
            r = math.sqrt(dx * dx + dy * dy)
            d = math.sqrt(r * r + h * h)
            elev = math.degrees(math.atan2(h, r))
            plos = 1.0 / (1.0 + psi * math.exp(-beta * (elev - psi)))
            loss = (plos * eta1 + (1.0 - plos) * eta2) * (kappa * d) ** alpha
            g[k] = 1.0 / loss
            interf += c[k] * powers[i, k] * g[k]
            e = c[k] * powers[i, k]
            if e > worst:
                worst = e
            if r > reach:
                v += r / reach - 1.0
        for k in range(K):
            own = gain * powers[i, k] * g[k]
            den = gain * (interf - c[k] * powers[i, k] * g[k]) + sigma2
            ratio = own / (den * gamma0)
            if ratio < 1.0:
                v += 1.0 - ratio
        obj[i] = worst
        viol[i] = v
    return obj, viol


def population_fitness_numpy(place, powers, xs, ys, c, psi, beta, eta1, eta2,
                             kappa, alpha, sigma2, gamma0):
    xu, yu, h, th = (place[:, j:j + 1] for j in range(4))
    r = np.hypot(xs[None, :] - xu, ys[None, :] - yu)
    d = np.sqrt(r * r + h * h)
    elev = np.degrees(np.arctan2(h, r))
    plos = 1.0 / (1.0 + psi * np.exp(-beta * (elev - psi)))
    g = 1.0 / ((plos * eta1 + (1.0 - plos) * eta2) * (kappa * d) ** alpha)
    gain = G3DB_NUMERATOR / (th * th)
    reach = h * np.tan(0.5 * th)
    rx = c[None, :] * powers * g
    den = gain * (rx.sum(axis=1, keepdims=True) - rx) + sigma2
    ratio = gain * powers * g / (den * gamma0)
    viol = np.maximum(0.0, r / reach - 1.0).sum(axis=1)
    viol += np.maximum(0.0, 1.0 - ratio).sum(axis=1)
    obj = (c[None, :] * powers).max(axis=1)
    return obj, viol


if USE_NUMBA:
    lse_values = lse_values_numba
    lse_derivs = lse_derivs_numba
    population_fitness = population_fitness_numba
else:
    lse_values = lse_values_numpy
    lse_derivs = lse_derivs_numpy
    population_fitness = population_fitness_numpy
