"""Equi-topology neighbourhoods of an opinion vector and the invariance test."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fixed_topology import fvct_fixed, is_equilibrium
from .model import OpinionState, build_digraph
from .simulator import trajectory_states
from .structure import analyze_structure, reachability

DISTANCE_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class NeighborhoodSpec:
    epsilon: np.ndarray
    delta: np.ndarray
    center: OpinionState

    def to_dict(self) -> dict:
        return {"center": self.center.opinions.tolist(),
                "epsilon": self.epsilon.tolist(), "delta": self.delta.tolist()}


def equi_topology_radii(z: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Half the smallest gap between any pairwise distance and either bound."""
    dist = np.abs(z[:, None] - z[None, :])
    gap = np.minimum(np.abs(dist - r[:, None]), np.abs(dist - r[None, :]))
    np.fill_diagonal(gap, np.inf)
    return 0.5 * gap.min(axis=1)


def neighborhood_spec(center: OpinionState) -> NeighborhoodSpec:
    if center.n < 2:
        raise ValueError("equi-topology radii need at least two agents")
    eps = equi_topology_radii(center.opinions, center.bounds)
    # reach[j, i]: j is a predecessor of i (self included through the self-loop)
    reach = reachability(build_digraph(center).mask)
    delta = np.array([eps[reach[:, i]].min() for i in range(center.n)])
    return NeighborhoodSpec(epsilon=eps, delta=delta, center=center)


def _inside(radii: np.ndarray, z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row-wise membership for one state (1-D) or a stack of states (2-D)."""
    dev = np.abs(np.atleast_2d(y) - z)
    ok = np.where(radii > 0, dev < radii, dev == 0)
    return ok.all(axis=-1)


def _check_dims(spec: NeighborhoodSpec, y) -> np.ndarray:
    if isinstance(y, OpinionState):
        if y.n != spec.center.n:
            raise ValueError(f"dimension mismatch: {y.n} vs {spec.center.n}")
        if not np.array_equal(y.bounds, spec.center.bounds):
            raise ValueError("state bounds differ from the neighbourhood centre")
        return y.opinions
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1] != spec.center.n:
        raise ValueError(f"dimension mismatch: {y.shape[-1]} vs {spec.center.n}")
    return y


def in_equi_topology(spec: NeighborhoodSpec, y) -> bool:
    y = _check_dims(spec, y)
    return bool(_inside(spec.epsilon, spec.center.opinions, y).all())


def in_invariant_equi_topology(spec: NeighborhoodSpec, y) -> bool:
    y = _check_dims(spec, y)
    return bool(_inside(spec.delta, spec.center.opinions, y).all())


@dataclass(frozen=True)
class Theorem1Check:
    applicable: bool
    conclusions_verified: bool
    first_violation: int | None = None
    violation: str | None = None
    reason: str | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_theorem1(z: OpinionState, y0: OpinionState, horizon: int) -> Theorem1Check:
    """Simulate ``y0`` and test the invariance claims against equilibrium ``z``."""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    if z.n != y0.n or not np.array_equal(z.bounds, y0.bounds) or z.tie_tol != y0.tie_tol:
        return Theorem1Check(False, False, reason="z and y0 describe different systems")
    if z.n < 2:
        return Theorem1Check(False, False, reason="need at least two agents")
    if not is_equilibrium(z):
        return Theorem1Check(False, False, reason="z is not an equilibrium")
    spec = neighborhood_spec(z)
    if not in_invariant_equi_topology(spec, y0):
        return Theorem1Check(False, False,
                             reason="y0 outside the invariant equi-topology neighbourhood")

    gz = build_digraph(z)
    st = analyze_structure(gz)
    traj = trajectory_states(y0, horizon)
    target = fvct_fixed(y0.opinions, build_digraph(y0)).fvct

    inside = _inside(spec.epsilon, z.opinions, traj)
    dist = np.abs(traj - target).max(axis=1)
    lim = (z.bounds + z.tie_tol)[None, :, None]
    same = (np.abs(traj[:, :, None] - traj[:, None, :]) <= lim) == gz.mask
    same = same.all(axis=(1, 2))
    for t in range(horizon + 1):
        if not inside[t]:
            return Theorem1Check(True, False, t, "left the equi-topology neighbourhood")
        if not same[t]:
            return Theorem1Check(True, False, t, "proximity digraph differs from G_r(z)")
        if t and dist[t] > dist[t - 1] + DISTANCE_SLACK:
            return Theorem1Check(True, False, t, "distance to fvct(y0) increased")
    if st.has_moderate():
        return Theorem1Check(True, False, 0, "moderate-minded component present")
    return Theorem1Check(True, True)
