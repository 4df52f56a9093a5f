"""Simplex inner loops: tableau exchange and the two ratio tests.

Every kernel exists twice, a numba version and a vectorised numpy version
with identical semantics. ``ARCTICSPILL_DISABLE_NUMBA=1`` selects the numpy
path (see :mod:`arcticspill._accel`).

Tableau convention: ``x_B + T @ x_N = h`` for the basic variables ``x_B`` and
the nonbasic ``x_N``; ``d`` holds reduced costs so that the objective reads
``z0 + d @ x_N``.
"""
import numpy as np

from .._accel import USE_NUMBA, njit

INF = np.inf


# -- numpy ------------------------------------------------------------------

def pivot_np(T, d, r, q):
    p = T[r, q]
    col = T[:, q].copy()
    row = T[r, :] / p
    nz = np.flatnonzero(col)
    T[nz, :] -= np.outer(col[nz], row)
    T[r, :] = row
    T[:, q] = -col / p
    T[r, q] = 1.0 / p
    dq = d[q]
    if dq != 0.0:
        d -= dq * row
    d[q] = -dq / p


def primal_ratio_np(col, xB, lbB, ubB, sigma, piv_tol):
    """Longest step for an entering column moving in direction ``sigma``.

    Returns ``(step, row, to_upper)``; ``row == -1`` when no basic variable
    blocks.
    """
    alpha = sigma * col
    dec = alpha > piv_tol
    inc = alpha < -piv_tol
    limits = np.full(col.shape[0], INF)
    with np.errstate(invalid="ignore", divide="ignore"):
        limits[dec] = (xB[dec] - lbB[dec]) / alpha[dec]
        limits[inc] = (ubB[inc] - xB[inc]) / (-alpha[inc])
    limits = np.where(np.isnan(limits), INF, limits)
    if limits.size == 0:
        return INF, -1, False
    limits = np.maximum(limits, 0.0)
    best = limits.min()
    if not np.isfinite(best):
        return INF, -1, False
    # among ties keep the largest pivot magnitude, then the lowest row
    ties = np.flatnonzero(limits <= best + 1e-12)
    r = int(ties[np.argmax(np.abs(alpha[ties]))])
    return float(best), r, bool(inc[r])


def dual_ratio_np(row, d, movable_up, movable_down, increase, piv_tol):
    """Entering column for the dual simplex.

    ``increase`` says whether the leaving basic variable has to go up. A
    nonbasic column qualifies when moving it in an allowed direction pushes the
    leaving variable the right way; among those the one with the smallest
    ``|d_j / row_j|`` keeps dual feasibility. Returns ``-1`` if none qualifies.
    """
    if increase:
        ok = (movable_up & (row < -piv_tol)) | (movable_down & (row > piv_tol))
    else:
        ok = (movable_up & (row > piv_tol)) | (movable_down & (row < -piv_tol))
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        return -1
    ratios = np.abs(d[idx]) / np.abs(row[idx])
    best = ratios.min()
    ties = idx[ratios <= best + 1e-12]
    return int(ties[np.argmax(np.abs(row[ties]))])


# -- numba ------------------------------------------------------------------

@njit(cache=True)
def pivot_nb(T, d, r, q):
    m, n = T.shape
    p = T[r, q]
    inv = 1.0 / p
    for j in range(n):
        T[r, j] *= inv
    rowr = T[r]
    for i in range(m):
        if i == r:
            continue
        f = T[i, q]
        if f != 0.0:
            rowi = T[i]
            for j in range(n):
                rowi[j] -= f * rowr[j]
            T[i, q] = -f * inv
    dq = d[q]
    if dq != 0.0:
        for j in range(n):
            d[j] -= dq * rowr[j]
    d[q] = -dq * inv
    T[r, q] = inv


@njit(cache=True)
def primal_ratio_nb(col, xB, lbB, ubB, sigma, piv_tol):
    m = col.shape[0]
    best = INF
    r = -1
    up = False
    best_mag = 0.0
    for i in range(m):
        a = sigma * col[i]
        if a > piv_tol:
            if lbB[i] == -INF:
                continue
            lim = (xB[i] - lbB[i]) / a
            to_up = False
        elif a < -piv_tol:
            if ubB[i] == INF:
                continue
            lim = (ubB[i] - xB[i]) / (-a)
            to_up = True
        else:
            continue
        if lim < 0.0:
            lim = 0.0
        mag = abs(a)
        if lim < best - 1e-12 or (lim <= best + 1e-12 and mag > best_mag):
            if lim < best:
                best = lim
            r = i
            up = to_up
            best_mag = mag
    return best, r, up


@njit(cache=True)
def dual_ratio_nb(row, d, movable_up, movable_down, increase, piv_tol):
    n = row.shape[0]
    q = -1
    best = INF
    best_mag = 0.0
    for j in range(n):
        a = row[j]
        if increase:
            ok = (movable_up[j] and a < -piv_tol) or (movable_down[j] and a > piv_tol)
        else:
            ok = (movable_up[j] and a > piv_tol) or (movable_down[j] and a < -piv_tol)
        if not ok:
            continue
        ratio = abs(d[j]) / abs(a)
        mag = abs(a)
        if ratio < best - 1e-12 or (ratio <= best + 1e-12 and mag > best_mag):
            if ratio < best:
                best = ratio
            q = j
            best_mag = mag
    return q


if USE_NUMBA:
    pivot, primal_ratio, dual_ratio = pivot_nb, primal_ratio_nb, dual_ratio_nb
else:
    pivot, primal_ratio, dual_ratio = pivot_np, primal_ratio_np, dual_ratio_np
