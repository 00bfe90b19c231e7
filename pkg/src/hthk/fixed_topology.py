"""Final value at constant topology and equilibrium tests."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import solve_resolvent, stationary_distribution
from .model import OpinionState, ProximityDigraph, build_digraph, build_matrix, step
from .structure import (Mind, StructureReport, analyze_structure,
                        canonical_decomposition)

EQUILIBRIUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FinalValueResult:
    """``fvct`` over all agents plus the pieces of the closed form.

    ``m_star`` is indexed by ``moderate`` (canonical order); ``open_solution``
    by ``open``.
    """

    fvct: np.ndarray
    m_star: np.ndarray
    moderate: np.ndarray
    open_solution: np.ndarray
    open: np.ndarray
    is_equilibrium_input: bool

    def to_dict(self) -> dict:
        return {
            "fvct": self.fvct.tolist(),
            "moderate_agents": [int(i) + 1 for i in self.moderate],
            "m_star": self.m_star.tolist(),
            "open_agents": [int(i) + 1 for i in self.open],
            "open_solution": self.open_solution.tolist(),
            "is_equilibrium_input": self.is_equilibrium_input,
        }


def fvct_fixed(y, digraph: ProximityDigraph, structure: StructureReport | None = None,
               eq_tol: float = EQUILIBRIUM_TOL) -> FinalValueResult:
    """``lim_t A^t y`` for the averaging matrix of a given digraph."""
    y = np.asarray(y, dtype=np.float64)
    if structure is None:
        structure = analyze_structure(digraph)
    A = build_matrix(digraph)
    blocks = canonical_decomposition(A, structure)
    out = np.empty_like(y)

    for k, cls in enumerate(structure.class_of):
        if cls is Mind.CLOSED:
            members = structure.sccs[k]
            out[members] = y[members].mean()

    mod = blocks.moderate
    m_star = np.zeros((len(mod), len(mod)))
    pos = {int(v): t for t, v in enumerate(mod)}
    for k, cls in enumerate(structure.class_of):
        if cls is Mind.MODERATE:
            members = structure.sccs[k]
            pi = stationary_distribution(A[np.ix_(members, members)])
            out[members] = pi @ y[members]
            idx = [pos[int(v)] for v in members]
            m_star[np.ix_(idx, idx)] = np.tile(pi, (len(members), 1))

    opn = blocks.open
    if len(opn):
        rhs = blocks.Theta_C @ out[blocks.closed] + blocks.Theta_M @ out[mod]
        v = solve_resolvent(blocks.Theta, rhs)
        out[opn] = v
    else:
        v = np.zeros(0)

    resid = np.max(np.abs(A @ y - y))
    return FinalValueResult(fvct=out, m_star=m_star, moderate=mod, open_solution=v,
                            open=opn, is_equilibrium_input=bool(resid <= eq_tol))


def fvct(state: OpinionState) -> FinalValueResult:
    return fvct_fixed(state.opinions, build_digraph(state))


def is_equilibrium(state: OpinionState, tol: float = EQUILIBRIUM_TOL) -> bool:
    """``||A(y) y - y||_inf <= tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return bool(np.max(np.abs(step(state).opinions - state.opinions)) <= tol)


@dataclass(frozen=True)
class Prop1Part2:
    same_topology: bool
    fvct_is_equilibrium: bool
    no_moderate: bool
    extremes_closed_minded: bool


def extremes_in_closed(values: np.ndarray, structure: StructureReport, tol: float = 1e-12) -> bool:
    """Within each WCC the max and min of ``values`` are attained by closed-minded agents."""
    cls = structure.node_class()
    closed = np.array([c is Mind.CLOSED for c in cls])
    for w in structure.wccs:
        vals = values[w]
        for target in (vals.max(), vals.min()):
            hit = w[np.abs(vals - target) <= tol]
            if not closed[hit].any():
                return False
    return True


def check_prop1_part2(state: OpinionState) -> Prop1Part2:
    g = build_digraph(state)
    st = analyze_structure(g)
    f = fvct_fixed(state.opinions, g, st).fvct
    fstate = state.with_opinions(f)
    gf = build_digraph(fstate)
    return Prop1Part2(
        same_topology=(g == gf),
        fvct_is_equilibrium=is_equilibrium(fstate),
        no_moderate=not st.has_moderate(),
        extremes_closed_minded=extremes_in_closed(f, analyze_structure(gf)),
    )
