"""Small dense linear-algebra helpers used by the fixed-topology analysis."""
from __future__ import annotations

import numpy as np

from .model import StructuralError


class SpectralConvergenceError(RuntimeError):
    pass


def stationary_distribution(M: np.ndarray) -> np.ndarray:
    """Stationary row vector of an irreducible row-stochastic block.

    Solves ``(M^T - I) pi = 0`` with the last equation replaced by
    ``sum(pi) = 1``.
    """
    M = np.asarray(M, dtype=np.float64)
    k = M.shape[0]
    lhs = M.T - np.eye(k)
    lhs[-1, :] = 1.0
    rhs = np.zeros(k)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise StructuralError("moderate-minded block is not irreducible") from exc
    return pi


def solve_resolvent(theta: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(I - theta) v = rhs`` (LU with partial pivoting, no explicit inverse)."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape[0] == 0:
        return np.zeros(0)
    lhs = np.eye(theta.shape[0]) - theta
    try:
        v = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise StructuralError("I - Theta is singular: open-minded block has spectral radius 1") from exc
    if not np.all(np.isfinite(v)):
        raise StructuralError("I - Theta solve produced non-finite values")
    return v


def spectral_radius(block: np.ndarray, tol: float = 1e-12, max_iter: int = 1_000_000) -> float:
    """Perron root of a nonnegative irreducible block by power iteration.

    Starts from the all-ones vector. For positive ``v`` the root lies
    between ``min(Bv / v)`` and ``max(Bv / v)``, and iteration stops once
    that bracket is narrower than ``tol``.
    """
    B = np.asarray(block, dtype=np.float64)
    k = B.shape[0]
    if k == 0:
        raise ValueError("empty block")
    if k == 1:
        return float(abs(B[0, 0]))
    v = np.ones(k)
    for _ in range(max_iter):
        w = B @ v
        if not np.any(w):
            return 0.0
        if np.all(v > 0):
            ratio = w / v
            lo, hi = float(ratio.min()), float(ratio.max())
            if hi - lo < tol:
                return 0.5 * (lo + hi)
        v = w / w.max()
    raise SpectralConvergenceError(f"power iteration did not settle in {max_iter} iterations")
