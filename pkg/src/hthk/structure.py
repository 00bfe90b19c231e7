"""SCC/WCC decomposition, agent classes and the canonical block form of A(y)."""
from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass

import numpy as np

from .model import OpinionState, ProximityDigraph


class Mind(str, enum.Enum):
    CLOSED = "ClosedMinded"
    MODERATE = "ModerateMinded"
    OPEN = "OpenMinded"


def tarjan_scc(succ: list[np.ndarray]) -> list[list[int]]:
    """Strongly connected components, iterative Tarjan.

    Components come out in reverse topological order of the condensation
    (sinks first).
    """
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, pos = work[-1]
            nbrs = succ[v]
            if pos < len(nbrs):
                work[-1] = (v, pos + 1)
                w = int(nbrs[pos])
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def _undirected_components(n: int, edges) -> list[list[int]]:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values(), key=lambda g: g[0])


def reachability(mask: np.ndarray) -> np.ndarray:
    """Transitive closure of a digraph with self-loops: ``R[i, j]`` iff path i -> j."""
    reach = np.array(mask, dtype=bool)
    while True:
        nxt = (reach.astype(np.int64) @ reach.astype(np.int64)) > 0
        if np.array_equal(nxt, reach):
            return reach
        reach = nxt


@dataclass(frozen=True, eq=False)
class StructureReport:
    """Decomposition of a proximity digraph.

    SCCs and WCCs are sorted by their smallest member.  ``condensation`` maps
    each SCC index to the sorted indices of the SCCs it has edges into.
    """

    n: int
    sccs: list[np.ndarray]
    scc_of: np.ndarray
    wccs: list[np.ndarray]
    condensation: list[list[int]]
    class_of: list[Mind]
    open_wccs: list[np.ndarray]
    canonical_perm: np.ndarray
    open_order: list[int]

    def members(self, cls: Mind) -> np.ndarray:
        idx = [k for k, c in enumerate(self.class_of) if c is cls]
        if not idx:
            return np.zeros(0, dtype=np.int64)
        return np.sort(np.concatenate([self.sccs[k] for k in idx]))

    def node_class(self) -> list[Mind]:
        return [self.class_of[self.scc_of[i]] for i in range(self.n)]

    @property
    def is_sink(self) -> list[bool]:
        return [len(c) == 0 for c in self.condensation]

    def has_moderate(self) -> bool:
        return any(c is Mind.MODERATE for c in self.class_of)

    def to_dict(self) -> dict:
        """1-based serialisable view."""
        return {
            "n": self.n,
            "sccs": [[int(i) + 1 for i in s] for s in self.sccs],
            "class_of": [c.value for c in self.class_of],
            "wccs": [[int(i) + 1 for i in w] for w in self.wccs],
            "open_wccs": [[int(i) + 1 for i in w] for w in self.open_wccs],
            "condensation": [[k + 1 for k in c] for c in self.condensation],
            "canonical_perm": [int(i) + 1 for i in self.canonical_perm],
        }


def analyze_structure(digraph: ProximityDigraph) -> StructureReport:
    mask = digraph.mask
    n = digraph.n
    succ = digraph.out_neighbors
    comps = sorted((sorted(c) for c in tarjan_scc(succ)), key=lambda c: c[0])
    sccs = [np.array(c, dtype=np.int64) for c in comps]
    scc_of = np.empty(n, dtype=np.int64)
    for k, c in enumerate(sccs):
        scc_of[c] = k

    ii, jj = np.nonzero(mask)
    cond_sets: list[set[int]] = [set() for _ in sccs]
    for a, b in zip(scc_of[ii], scc_of[jj]):
        if a != b:
            cond_sets[a].add(int(b))
    condensation = [sorted(s) for s in cond_sets]

    class_of = []
    for k, c in enumerate(sccs):
        if condensation[k]:
            class_of.append(Mind.OPEN)
        elif mask[np.ix_(c, c)].all():
            class_of.append(Mind.CLOSED)
        else:
            class_of.append(Mind.MODERATE)

    wccs = [np.array(w, dtype=np.int64)
            for w in _undirected_components(n, zip(ii.tolist(), jj.tolist()))]

    is_open = np.array([class_of[scc_of[i]] is Mind.OPEN for i in range(n)])
    open_edges = [(a, b) for a, b in zip(ii.tolist(), jj.tolist()) if is_open[a] and is_open[b]]
    open_nodes = np.flatnonzero(is_open)
    local = {int(v): t for t, v in enumerate(open_nodes)}
    open_wccs = [open_nodes[np.array(g)] for g in _undirected_components(
        len(open_nodes), [(local[a], local[b]) for a, b in open_edges])]

    # Open SCCs sinks-first (successors before predecessors) so that the
    # open block is lower-triangular; ties go to the smallest member.
    open_ids = [k for k, c in enumerate(class_of) if c is Mind.OPEN]
    pending = {k: sum(1 for s in condensation[k] if class_of[s] is Mind.OPEN) for k in open_ids}
    preds: dict[int, list[int]] = {k: [] for k in open_ids}
    for k in open_ids:
        for s in condensation[k]:
            if class_of[s] is Mind.OPEN:
                preds[s].append(k)
    heap = [(int(sccs[k][0]), k) for k in open_ids if pending[k] == 0]
    heapq.heapify(heap)
    open_order = []
    while heap:
        _, k = heapq.heappop(heap)
        open_order.append(k)
        for p in preds[k]:
            pending[p] -= 1
            if pending[p] == 0:
                heapq.heappush(heap, (int(sccs[p][0]), p))

    perm = [int(v) for k, c in enumerate(sccs) if class_of[k] is Mind.CLOSED for v in c]
    perm += [int(v) for k, c in enumerate(sccs) if class_of[k] is Mind.MODERATE for v in c]
    perm += [int(v) for k in open_order for v in sccs[k]]

    return StructureReport(
        n=n, sccs=sccs, scc_of=scc_of, wccs=wccs, condensation=condensation,
        class_of=class_of, open_wccs=open_wccs,
        canonical_perm=np.array(perm, dtype=np.int64), open_order=open_order)


@dataclass(frozen=True, eq=False)
class CanonicalBlocks:
    """Blocks of ``P A P^T`` in closed / moderate / open order."""

    perm: np.ndarray
    closed: np.ndarray
    moderate: np.ndarray
    open: np.ndarray
    C: np.ndarray
    M: np.ndarray
    Theta: np.ndarray
    Theta_C: np.ndarray
    Theta_M: np.ndarray

    def assemble(self) -> np.ndarray:
        nc, nm, no = len(self.closed), len(self.moderate), len(self.open)
        n = nc + nm + no
        out = np.zeros((n, n))
        out[:nc, :nc] = self.C
        out[nc:nc + nm, nc:nc + nm] = self.M
        out[nc + nm:, :nc] = self.Theta_C
        out[nc + nm:, nc:nc + nm] = self.Theta_M
        out[nc + nm:, nc + nm:] = self.Theta
        return out


def canonical_decomposition(matrix: np.ndarray, structure: StructureReport) -> CanonicalBlocks:
    perm = structure.canonical_perm
    cls = structure.node_class()
    closed = np.array([v for v in perm if cls[v] is Mind.CLOSED], dtype=np.int64)
    moderate = np.array([v for v in perm if cls[v] is Mind.MODERATE], dtype=np.int64)
    opn = np.array([v for v in perm if cls[v] is Mind.OPEN], dtype=np.int64)
    a = np.asarray(matrix, dtype=np.float64)
    return CanonicalBlocks(
        perm=perm, closed=closed, moderate=moderate, open=opn,
        C=a[np.ix_(closed, closed)], M=a[np.ix_(moderate, moderate)],
        Theta=a[np.ix_(opn, opn)], Theta_C=a[np.ix_(opn, closed)],
        Theta_M=a[np.ix_(opn, moderate)])


def merge_intervals(intervals) -> list[tuple[float, float]]:
    out: list[list[float]] = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [(a, b) for a, b in out]


@dataclass(frozen=True)
class WCCRange:
    members: tuple[int, ...]
    opinion_range: tuple[float, float]
    sensing_range: list[tuple[float, float]]


def wcc_ranges(state: OpinionState, structure: StructureReport) -> list[WCCRange]:
    """Opinion range and sensing range (union of confidence intervals) per WCC."""
    y, r = state.opinions, state.bounds
    out = []
    for w in structure.wccs:
        out.append(WCCRange(
            members=tuple(int(v) for v in w),
            opinion_range=(float(y[w].min()), float(y[w].max())),
            sensing_range=merge_intervals(
                (float(y[v] - r[v]), float(y[v] + r[v])) for v in w)))
    return out


def intervals_intersect(a: list[tuple[float, float]], lo: float, hi: float) -> bool:
    return any(x <= hi and lo <= y for x, y in a)
