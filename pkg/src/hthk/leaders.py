"""Leader SCCs and the asymptotics of open-minded agents under frozen topology."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .fixed_topology import fvct_fixed
from .linalg import spectral_radius
from .model import OpinionState, build_digraph, build_matrix
from .simulator import Mode, trajectory_states
from .structure import Mind, StructureReport, analyze_structure, canonical_decomposition

TIE_TOL = 1e-10
K_LIMIT_TOL = 1e-6
FVCT_TOL = 1e-9
SIGN_LOOKAHEAD = 10


@dataclass(frozen=True, eq=False)
class LeaderReport:
    """Leader SCC of every open-minded SCC (indices into ``structure.sccs``)."""

    structure: StructureReport = field(repr=False)
    open_sccs: list[int]
    rho: dict[int, float]
    successor_sets: dict[int, list[int]]
    leader: dict[int, int]
    ties: dict[int, list[int]]

    def to_dict(self) -> dict:
        sccs = self.structure.sccs
        return {"open_sccs": [{
            "scc": k + 1,
            "members": [int(v) + 1 for v in sccs[k]],
            "rho": self.rho[k],
            "successor_sccs": [m + 1 for m in self.successor_sets[k]],
            "leader": self.leader[k] + 1,
            "tied_leaders": [m + 1 for m in self.ties.get(k, [])],
        } for k in self.open_sccs]}


def leader_report(matrix: np.ndarray, structure: StructureReport) -> LeaderReport:
    A = np.asarray(matrix, dtype=np.float64)
    open_sccs = [k for k, c in enumerate(structure.class_of) if c is Mind.OPEN]
    rho = {k: spectral_radius(A[np.ix_(structure.sccs[k], structure.sccs[k])])
           for k in open_sccs}

    # open_order lists successors before predecessors
    succ_sets: dict[int, set[int]] = {}
    for k in structure.open_order:
        s = {k}
        for m in structure.condensation[k]:
            if structure.class_of[m] is Mind.OPEN:
                s |= succ_sets[m]
        succ_sets[k] = s

    leader, ties = {}, {}
    for k in open_sccs:
        cands = sorted(succ_sets[k])
        best = max(rho[m] for m in cands)
        top = [m for m in cands if rho[m] >= best - TIE_TOL]
        leader[k] = k if k in top else top[0]
        if len(top) > 1:
            ties[k] = top
    return LeaderReport(structure=structure, open_sccs=open_sccs, rho=rho,
                        successor_sets={k: sorted(v) for k, v in succ_sets.items()},
                        leader=leader, ties=ties)


@dataclass(frozen=True)
class KLimit:
    agent: int
    target_rho: float
    k_final: float
    achieved: bool


@dataclass(frozen=True)
class Theorem3Check:
    status: str
    fvct_constant: bool
    no_moderate: bool
    topology_constant: bool
    k_limits: tuple[KLimit, ...]
    direction_entrained: bool
    entrainment_times: dict = field(default_factory=dict)
    leader_sign_times: dict = field(default_factory=dict)

    @property
    def k_limits_achieved(self) -> bool:
        return all(k.achieved for k in self.k_limits)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "fvct_constant": self.fvct_constant,
            "no_moderate": self.no_moderate,
            "topology_constant": self.topology_constant,
            "k_limits": [{"agent": k.agent + 1, "target_rho": k.target_rho,
                          "k_final": k.k_final, "achieved": k.achieved} for k in self.k_limits],
            "direction_entrained": self.direction_entrained,
            "entrainment_times": {str(k + 1): v for k, v in self.entrainment_times.items()},
            "leader_sign_times": {str(k + 1): v for k, v in self.leader_sign_times.items()},
        }


def _sample_steps(horizon: int) -> list[int]:
    steps = {0, horizon}
    t = 1
    while t < horizon:
        steps.add(t)
        t *= 2
    return sorted(steps)


def _entrainment_time(follower: np.ndarray, leader: np.ndarray, latest: int) -> int | None:
    """Earliest t1 <= latest from which the follower's signs obey the leader's signs at t1."""
    T = follower.shape[0]
    nonpos = np.all(follower <= 0, axis=1)
    nonneg = np.all(follower >= 0, axis=1)
    # suffix: holds for every t >= index
    nonpos_tail = np.flip(np.logical_and.accumulate(np.flip(nonpos)))
    nonneg_tail = np.flip(np.logical_and.accumulate(np.flip(nonneg)))
    for t1 in range(min(latest, T - 1) + 1):
        neg = np.any(leader[t1] < 0)
        pos = np.any(leader[t1] > 0)
        if (not neg or nonpos_tail[t1]) and (not pos or nonneg_tail[t1]):
            return t1
    return None


def _leader_sign_time(leader: np.ndarray) -> int | None:
    T = leader.shape[0]
    for t in range(T - SIGN_LOOKAHEAD):
        if np.all(leader[t:t + SIGN_LOOKAHEAD + 1] == leader[t]):
            return t
    return None


def check_theorem3(state: OpinionState, horizon: int = 10_000) -> Theorem3Check:
    """Run the frozen-topology dynamics of ``state`` and test the leader claims.

    Convergence factors of open-minded agents are read off the deviation
    recurrence ``d(t+1) = Theta d(t)`` (with power-of-two rescaling), which
    equals ``x(t) - fvct`` once the final value is constant.
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    g = build_digraph(state)
    st = analyze_structure(g)
    A = build_matrix(g)
    blocks = canonical_decomposition(A, st)
    f0 = fvct_fixed(state.opinions, g, st).fvct
    scale = max(1.0, float(np.max(np.abs(f0))))

    traj_len = min(horizon, 4096)
    traj = trajectory_states(state, traj_len, Mode.FROZEN, g)
    lim = (state.bounds + state.tie_tol)[None, :, None]
    topo_ok = True
    for lo in range(0, traj.shape[0], 256):
        chunk = traj[lo:lo + 256]
        same = (np.abs(chunk[:, :, None] - chunk[:, None, :]) <= lim) == g.mask
        topo_ok &= bool(same.all())
    fv_ok = all(
        np.max(np.abs(fvct_fixed(traj[t], g, st).fvct - f0)) <= FVCT_TOL * scale
        for t in _sample_steps(traj_len))

    status = "ok" if horizon >= 4 * SIGN_LOOKAHEAD else "inconclusive"
    opn = blocks.open
    if len(opn) == 0:
        return Theorem3Check(status, fv_ok, not st.has_moderate(), topo_ok, (), True)

    rep = leader_report(A, st)
    pos = {int(v): t for t, v in enumerate(opn)}
    d1 = (traj[1] - f0)[opn]
    theta = blocks.Theta

    # Each open SCC together with its open successors evolves on its own, so
    # iterate that closure alone: rescaling then tracks the SCC's own decay
    # instead of the fastest-decaying or slowest-decaying part of the system.
    limits = []
    entrained = True
    times, sign_times = {}, {}
    for k in rep.open_sccs:
        closure = [pos[int(v)] for m in rep.successor_sets[k] for v in st.sccs[m]]
        local = {p: q for q, p in enumerate(closure)}
        signs, prev, cur = _kernels.frozen_power(theta[np.ix_(closure, closure)],
                                                 d1[closure], horizon - 1)
        target = rep.rho[rep.leader[k]]
        for v in st.sccs[k]:
            q = local[pos[int(v)]]
            if prev[q] == 0.0:
                continue
            k_final = float(cur[q] / prev[q])
            limits.append(KLimit(int(v), target, k_final, abs(k_final - target) <= K_LIMIT_TOL))

        m = rep.leader[k]
        if m == k or rep.rho[k] >= rep.rho[m] - TIE_TOL:
            continue
        fol = signs[:, [local[pos[int(v)]] for v in st.sccs[k]]]
        lead = signs[:, [local[pos[int(v)]] for v in st.sccs[m]]]
        # row s of the sign history is time s + 1
        st_lead = _leader_sign_time(lead)
        sign_times[k] = None if st_lead is None else st_lead + 1
        t1 = _entrainment_time(fol, lead, horizon // 2)
        times[k] = None if t1 is None else t1 + 1
        if t1 is None:
            entrained = False
    limits.sort(key=lambda kl: kl.agent)
    return Theorem3Check(status, fv_ok, not st.has_moderate(), topo_ok, tuple(limits),
                         entrained, times, sign_times)
