"""Hot loops of the htHK map.

Every kernel has a numba version and a pure-numpy version with identical
floating point semantics (same comparisons, left-to-right sums), so both
backends produce bit-identical trajectories.  Set ``HTHK_DISABLE_NUMBA=1``
to force the numpy path.
"""
import os

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

_FLAG = os.environ.get("HTHK_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")

BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy reference path

def neighbor_mask_numpy(y, r, tie_tol):
    return np.abs(y[:, None] - y[None, :]) <= r[:, None] + tie_tol


def averaging_step_numpy(y, mask):
    # x_i + mean_{j in N_i}(x_j - x_i); cumsum keeps the summation order
    # strictly left to right, matching the compiled loop.
    dev = np.where(mask, y[None, :] - y[:, None], 0.0)
    s = np.cumsum(dev, axis=1)[:, -1]
    return y + s / mask.sum(axis=1)


def run_chunk_numpy(y, r, tie_tol, frozen_mask, frozen, nsteps, conv_tol):
    n = y.shape[0]
    traj = np.empty((nsteps + 1, n))
    changed = np.zeros(nsteps, dtype=np.bool_)
    traj[0] = y
    cur = neighbor_mask_numpy(y, r, tie_tol)
    residual = np.inf
    k = 0
    converged = False
    while k < nsteps:
        upd = frozen_mask if frozen else cur
        nxt = averaging_step_numpy(traj[k], upd)
        if not np.all(np.isfinite(nxt)):
            return traj[: k + 1], changed[:k], k, residual, converged, False
        residual = np.max(np.abs(nxt - traj[k]))
        traj[k + 1] = nxt
        new_mask = neighbor_mask_numpy(nxt, r, tie_tol)
        changed[k] = not np.array_equal(new_mask, cur)
        cur = new_mask
        k += 1
        if residual <= conv_tol:
            converged = True
            break
    return traj[: k + 1], changed[:k], k, residual, converged, True


def frozen_power_numpy(theta, d, nsteps):
    """Iterate d <- theta @ d, rescaling by powers of two to dodge underflow.

    Returns the sign history (nsteps+1 rows) and the last two iterates; the
    ratio of the last two iterates is unaffected by the rescaling.
    """
    signs = np.empty((nsteps + 1, d.shape[0]), dtype=np.int8)
    signs[0] = np.sign(d)
    prev = d.copy()
    cur = d.copy()
    for t in range(nsteps):
        prev = cur
        cur = np.cumsum(theta * prev[None, :], axis=1)[:, -1] if prev.size else prev
        m = np.max(np.abs(cur)) if cur.size else 0.0
        if 0.0 < m < 2.0 ** -400:
            prev = prev * 2.0 ** 400
            cur = cur * 2.0 ** 400
        signs[t + 1] = np.sign(cur)
    return signs, prev, cur


# ---------------------------------------------------------------------------
# numba path

if HAVE_NUMBA:

    @njit(cache=True)
    def neighbor_mask_numba(y, r, tie_tol):
        n = y.shape[0]
        out = np.empty((n, n), dtype=np.bool_)
        for i in range(n):
            lim = r[i] + tie_tol
            for j in range(n):
                out[i, j] = abs(y[i] - y[j]) <= lim
        return out

    @njit(cache=True)
    def averaging_step_numba(y, mask):
        n = y.shape[0]
        out = np.empty(n)
        for i in range(n):
            s = 0.0
            c = 0
            for j in range(n):
                if mask[i, j]:
                    s += y[j] - y[i]
                    c += 1
            out[i] = y[i] + s / c
        return out

    @njit(cache=True)
    def _masks_equal(a, b):
        n = a.shape[0]
        for i in range(n):
            for j in range(n):
                if a[i, j] != b[i, j]:
                    return False
        return True

    @njit(cache=True)
    def run_chunk_numba(y, r, tie_tol, frozen_mask, frozen, nsteps, conv_tol):
        n = y.shape[0]
        traj = np.empty((nsteps + 1, n))
        changed = np.zeros(nsteps, dtype=np.bool_)
        traj[0] = y
        cur = neighbor_mask_numba(y, r, tie_tol)
        residual = np.inf
        k = 0
        converged = False
        while k < nsteps:
            if frozen:
                nxt = averaging_step_numba(traj[k], frozen_mask)
            else:
                nxt = averaging_step_numba(traj[k], cur)
            res = 0.0
            for i in range(n):
                if not np.isfinite(nxt[i]):
                    return traj[: k + 1], changed[:k], k, residual, converged, False
                d = abs(nxt[i] - traj[k, i])
                if d > res:
                    res = d
            residual = res
            traj[k + 1] = nxt
            new_mask = neighbor_mask_numba(nxt, r, tie_tol)
            changed[k] = not _masks_equal(new_mask, cur)
            cur = new_mask
            k += 1
            if residual <= conv_tol:
                converged = True
                break
        return traj[: k + 1], changed[:k], k, residual, converged, True

    @njit(cache=True)
    def frozen_power_numba(theta, d, nsteps):
        k = d.shape[0]
        signs = np.empty((nsteps + 1, k), dtype=np.int8)
        prev = d.copy()
        cur = d.copy()
        scale = 2.0 ** 400
        for i in range(k):
            signs[0, i] = 1 if d[i] > 0 else (-1 if d[i] < 0 else 0)
        for t in range(nsteps):
            prev = cur
            cur = np.zeros(k)
            for i in range(k):
                s = 0.0
                for j in range(k):
                    s += theta[i, j] * prev[j]
                cur[i] = s
            m = 0.0
            for v in cur:
                if abs(v) > m:
                    m = abs(v)
            if 0.0 < m < 1.0 / scale:
                prev = prev * scale
                cur = cur * scale
            for i in range(k):
                signs[t + 1, i] = 1 if cur[i] > 0 else (-1 if cur[i] < 0 else 0)
        return signs, prev, cur


if USE_NUMBA:
    neighbor_mask = neighbor_mask_numba
    averaging_step = averaging_step_numba
    _run_chunk = run_chunk_numba
    _frozen_power = frozen_power_numba
else:
    neighbor_mask = neighbor_mask_numpy
    averaging_step = averaging_step_numpy
    _run_chunk = run_chunk_numpy
    _frozen_power = frozen_power_numpy


def run_chunk(y, r, tie_tol, frozen_mask, frozen, nsteps, conv_tol):
    """Advance up to ``nsteps`` updates from ``y``.

    Returns ``(traj, changed, k, residual, converged, finite)`` where
    ``traj`` holds the k+1 visited states and ``changed[s]`` tells whether
    the free proximity digraph of state s+1 differs from that of state s.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    r = np.ascontiguousarray(r, dtype=np.float64)
    if frozen_mask is None:
        frozen_mask = np.ones((1, 1), dtype=np.bool_)
    return _run_chunk(y, r, float(tie_tol), np.ascontiguousarray(frozen_mask),
                      bool(frozen), int(nsteps), float(conv_tol))


def frozen_power(theta, d, nsteps):
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    d = np.ascontiguousarray(d, dtype=np.float64)
    return _frozen_power(theta, d, int(nsteps))
