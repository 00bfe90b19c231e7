"""Structural invariants of one state, as a list of violation messages."""
from __future__ import annotations

import numpy as np

from .fixed_topology import fvct_fixed
from .linalg import spectral_radius
from .model import OpinionState, build_digraph, build_matrix
from .structure import Mind, analyze_structure, canonical_decomposition

ROW_TOL = 1e-12
MSTAR_TOL = 1e-9


def structural_violations(state: OpinionState) -> list[str]:
    out = []
    g = build_digraph(state)
    A = build_matrix(g)
    if np.any(A < 0) or np.max(np.abs(A.sum(axis=1) - 1.0)) > ROW_TOL:
        out.append("A(y) is not row-stochastic")
    if not np.all(np.diag(g.mask)) or not np.all(np.diag(A) > 0):
        out.append("missing self-loop")
    deg = g.mask.sum(axis=1)
    if np.any(A[g.mask] != np.repeat(1.0 / deg, deg)):
        out.append("row entries differ from 1/|N_i|")

    st = analyze_structure(g)
    # acyclic iff every SCC index can be placed after all of its successors
    order, seen, stack = [], set(), []
    for root in range(len(st.sccs)):
        if root in seen:
            continue
        stack.append((root, iter(st.condensation[root])))
        seen.add(root)
        while stack:
            k, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                order.append(k)
                stack.pop()
            elif nxt not in seen:
                seen.add(nxt)
                stack.append((nxt, iter(st.condensation[nxt])))
    rank = {k: t for t, k in enumerate(order)}
    if any(rank[m] >= rank[k] for k, succ in enumerate(st.condensation) for m in succ):
        out.append("condensation has a cycle")

    sinks = set(k for k, s in enumerate(st.condensation) if not s)
    for w in st.wccs:
        if not any(int(st.scc_of[v]) in sinks for v in w):
            out.append(f"WCC starting at agent {int(w[0]) + 1} has no sink SCC")

    for k, c in enumerate(st.class_of):
        if c is Mind.OPEN:
            block = A[np.ix_(st.sccs[k], st.sccs[k])]
            if not spectral_radius(block) < 1.0:
                out.append(f"open SCC {k + 1} has spectral radius >= 1")

    if st.has_moderate():
        res = fvct_fixed(state.opinions, g, st)
        blocks = canonical_decomposition(A, st)
        ms = res.m_star
        for k, c in enumerate(st.class_of):
            if c is not Mind.MODERATE:
                continue
            pos = [int(np.flatnonzero(blocks.moderate == v)[0]) for v in st.sccs[k]]
            sub = ms[np.ix_(pos, pos)]
            if np.any(sub < -MSTAR_TOL) or np.max(np.abs(sub.sum(axis=1) - 1)) > MSTAR_TOL:
                out.append(f"M* block of SCC {k + 1} is not stochastic")
            if np.max(np.abs(sub - sub[0])) > MSTAR_TOL:
                out.append(f"M* block of SCC {k + 1} has unequal rows")
    return out
