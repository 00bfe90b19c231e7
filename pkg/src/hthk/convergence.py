"""Per-step convergence factors and the monotone-convergence conditions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fixed_topology import fvct_fixed
from .model import OpinionState, ProximityDigraph, build_digraph, step_with
from .structure import Mind, StructureReport, analyze_structure, reachability

DEGENERATE_TOL = 1e-12
ORDER_TOL = 1e-12
EQUAL_K_TOL = 1e-9
BOUND_SLACK = 1e-12
HULL_SLACK = 1e-10


def _ratio(num: np.ndarray, den: np.ndarray, tol: float) -> np.ndarray:
    """``num / den`` where ``|den| > tol`` (nan elsewhere); tiny numerators snap to 0."""
    num = np.where(np.abs(num) <= tol, 0.0, num)
    out = np.full(den.shape, np.nan)
    ok = np.abs(den) > tol
    out[ok] = num[ok] / den[ok]
    return out


@dataclass(frozen=True, eq=False)
class ConvergenceFactors:
    """Convergence factors of one state.

    ``k`` is nan where the distance to the final value vanishes.  ``k_min`` /
    ``k_max`` range over the open-minded successors (transitive, self
    included) with defined ``k``; ``open_children`` holds the open-minded
    out-neighbours.
    """

    y: np.ndarray
    y_next: np.ndarray
    fvct: np.ndarray
    delta: np.ndarray
    k: np.ndarray
    k_min: np.ndarray
    k_max: np.ndarray
    is_open: np.ndarray
    open_children: list[frozenset]
    open_successors: list[frozenset]
    digraph: ProximityDigraph = field(repr=False)
    structure: StructureReport = field(repr=False)
    degenerate_tol: float = DEGENERATE_TOL

    def k_max_pair(self, i: int, j: int) -> float:
        return max(self.k_max[i], self.k_max[j])

    def k_min_pair(self, i: int, j: int) -> float:
        return min(self.k_min[i], self.k_min[j])

    def defined(self) -> np.ndarray:
        return ~np.isnan(self.k)

    def to_dict(self) -> dict:
        def clean(a):
            return [None if math.isnan(v) else float(v) for v in a]
        return {"delta": self.delta.tolist(), "k": clean(self.k),
                "k_min": clean(self.k_min), "k_max": clean(self.k_max),
                "open_agents": [int(i) + 1 for i in np.flatnonzero(self.is_open)]}


def factors_for(y: np.ndarray, digraph: ProximityDigraph, structure: StructureReport | None = None,
                degenerate_tol: float = DEGENERATE_TOL) -> ConvergenceFactors:
    """Convergence factors of ``y`` under a given digraph."""
    y = np.asarray(y, dtype=np.float64)
    if structure is None:
        structure = analyze_structure(digraph)
    f = fvct_fixed(y, digraph, structure).fvct
    y_next = step_with(y, digraph)
    delta = y - f
    k = _ratio(y_next - f, delta, degenerate_tol)

    cls = structure.node_class()
    is_open = np.array([c is Mind.OPEN for c in cls])
    mask = digraph.mask
    reach = reachability(mask)
    n = y.size
    children, succs = [], []
    k_min = np.full(n, np.nan)
    k_max = np.full(n, np.nan)
    for i in range(n):
        if not is_open[i]:
            children.append(frozenset())
            succs.append(frozenset())
            continue
        children.append(frozenset(np.flatnonzero(mask[i] & is_open).tolist()))
        s = np.flatnonzero(reach[i] & is_open)
        succs.append(frozenset(s.tolist()))
        ks = k[s]
        ks = ks[~np.isnan(ks)]
        if ks.size:
            k_min[i], k_max[i] = ks.min(), ks.max()
    return ConvergenceFactors(
        y=y, y_next=y_next, fvct=f, delta=delta, k=k, k_min=k_min, k_max=k_max,
        is_open=is_open, open_children=children, open_successors=succs,
        digraph=digraph, structure=structure, degenerate_tol=degenerate_tol)


def convergence_factors(state: OpinionState, degenerate_tol: float = DEGENERATE_TOL) -> ConvergenceFactors:
    return factors_for(state.opinions, build_digraph(state), degenerate_tol=degenerate_tol)


def _monotone_flags(x, x_next, f, tol) -> np.ndarray:
    below = x < f - tol
    above = x > f + tol
    at = ~(below | above)
    ok_below = (x_next >= x - tol) & (x_next <= f + tol)
    ok_above = (x_next <= x + tol) & (x_next >= f - tol)
    ok_at = np.abs(x_next - f) <= tol
    return np.where(below, ok_below, np.where(above, ok_above, ok_at & at))


def check_monotone_step(state: OpinionState, tol: float = DEGENERATE_TOL) -> bool:
    """Every agent moves monotonically toward its final value in one step."""
    fac = convergence_factors(state, tol)
    return bool(_monotone_flags(fac.y, fac.y_next, fac.fvct, tol).all())


@dataclass(frozen=True)
class Lemma1Check:
    applicable: bool
    hull_respected: bool
    violations: tuple = ()
    same_topology_next: bool = True


def check_lemma1(state: OpinionState, slack: float = HULL_SLACK) -> Lemma1Check:
    """Convex-hull bound on the next-step convergence factor.

    ``k_i(y+)`` is measured with the matrix and final value of ``y`` (the
    frozen topology the bound is derived under); ``same_topology_next``
    reports whether ``G_r(y+)`` actually equals ``G_r(y)``.
    """
    g = build_digraph(state)
    fac = factors_for(state.opinions, g)
    st = fac.structure
    tol = fac.degenerate_tol
    nxt = build_digraph(state.with_opinions(fac.y_next))
    if st.has_moderate():
        return Lemma1Check(False, False, same_topology_next=(nxt == g))
    d = np.where(np.abs(fac.delta) <= tol, 0.0, fac.delta)
    for i in np.flatnonzero(fac.is_open):
        for j in fac.open_children[i]:
            if d[i] * d[j] < 0:
                return Lemma1Check(False, False, same_topology_next=(nxt == g))

    y2 = step_with(fac.y_next, g)
    k_next = _ratio(y2 - fac.fvct, fac.y_next - fac.fvct, tol)
    mask = g.mask
    bad = []
    for i in np.flatnonzero(fac.is_open):
        if np.isnan(k_next[i]):
            continue
        kids = np.flatnonzero(mask[i])
        ks = fac.k[kids]
        ks = ks[~np.isnan(ks)]
        if ks.size == 0:
            bad.append(int(i))
            continue
        if not (ks.min() - slack <= k_next[i] <= ks.max() + slack):
            bad.append(int(i))
    return Lemma1Check(True, not bad, tuple(bad), same_topology_next=(nxt == g))


def _scaled_pow(c: float, q: float, m: int) -> float:
    """``c * q**m`` for c > 0, evaluated in log space to dodge overflow."""
    if q == 0.0:
        return 0.0
    if q == math.inf:
        return math.inf
    e = math.log(c) + m * math.log(q)
    if e > 700.0:
        return math.inf
    return math.exp(e) if e > -745.0 else 0.0


def _ratio_distance(c: float, a: tuple[float, float], b: tuple[float, float]) -> float:
    """``min |1 - c (alpha/beta)^m|`` over alpha in a, beta in b, integer m >= 0.

    For fixed m the reachable values form ``[c qlo^m, c qhi^m]``.  Both ends
    move monotonically in m, so the minimum sits at m = 0, m = 1 or next to
    the m where one end crosses 1.
    """
    alo, ahi = max(a[0], 0.0), max(a[1], 0.0)
    blo, bhi = max(b[0], 0.0), max(b[1], 0.0)
    best = abs(1.0 - c)
    if c == 0.0 or best == 0.0:
        return best
    if c < 0:
        # |1 - v| = 1 + |v| for v <= 0: smallest magnitude wins.
        if bhi == 0.0:
            return best
        q = alo / bhi
        if q < 1.0:
            return min(best, 1.0)
        return min(best, 1.0 + abs(c) * q)
    qlo = alo / bhi if bhi > 0 else (0.0 if alo == 0 else math.inf)
    qhi = ahi / blo if blo > 0 else (0.0 if ahi == 0 else math.inf)
    if qlo < 1.0 < qhi:
        return 0.0

    def dist(m: int) -> float:
        lo, hi = _scaled_pow(c, qlo, m), _scaled_pow(c, qhi, m)
        if lo <= 1.0 <= hi:
            return 0.0
        return 1.0 - hi if hi < 1.0 else lo - 1.0

    cands = {1}
    for q in (qlo, qhi):
        if 0.0 < q < math.inf and q != 1.0:
            mc = -math.log(c) / math.log(q)
            if 1.0 <= mc < 1e18:
                cands.update((int(math.floor(mc)), int(math.ceil(mc))))
    return min(best, min(dist(m) for m in cands))


def theorem2_condition5_bound(i: int, j: int, factors: ConvergenceFactors) -> float:
    """Right-hand side of the pairwise factor-spread bound for agents ``i``, ``j``.

    The caller orders the pair so that ``|delta_i| >= |delta_j|``.
    """
    need = (factors.k_min[i], factors.k_max[i], factors.k_min[j], factors.k_max[j])
    if any(math.isnan(v) for v in need):
        raise ValueError(f"k_min/k_max undefined for agent pair ({i}, {j})")
    kmax = factors.k_max_pair(i, j)
    kmin = factors.k_min_pair(i, j)
    c = factors.delta[j] / factors.delta[i]
    dist = _ratio_distance(c, (factors.k_min[j], factors.k_max[j]),
                           (factors.k_min[i], factors.k_max[i]))
    return min(1.0 - kmax, kmin) * dist


@dataclass(frozen=True)
class Theorem2Check:
    cond: tuple[bool, bool, bool, bool, bool]
    all_hold: bool
    cond5_failures: tuple = ()
    ambiguous_pairs: tuple = ()

    def to_dict(self) -> dict:
        return {"cond": list(self.cond), "all_hold": self.all_hold,
                "cond5_failures": [[a + 1, b + 1] for a, b in self.cond5_failures[:50]],
                "ambiguous_pairs": [[a + 1, b + 1] for a, b in self.ambiguous_pairs[:50]]}


def check_theorem2(state: OpinionState) -> Theorem2Check:
    g = build_digraph(state)
    fac = factors_for(state.opinions, g)
    tol = fac.degenerate_tol
    y, f = fac.y, fac.fvct

    c1 = build_digraph(state.with_opinions(f)) == g
    ge = y[:, None] >= y[None, :]
    c2 = bool(np.all(~ge | (f[:, None] >= f[None, :] - ORDER_TOL)))
    c3 = bool(_monotone_flags(y, fac.y_next, f, tol).all())

    d = np.where(np.abs(fac.delta) <= tol, 0.0, fac.delta)
    op = fac.is_open
    nb = (g.mask | g.mask.T) & op[:, None] & op[None, :]
    c4 = bool(np.all(~nb | (d[:, None] * d[None, :] >= 0)))

    wcc_of = np.empty(y.size, dtype=np.int64)
    for w, members in enumerate(fac.structure.wccs):
        wcc_of[members] = w
    cand = np.flatnonzero(op & (d != 0))
    failures, ambiguous = [], []
    for a_pos, a in enumerate(cand):
        for b in cand[a_pos + 1:]:
            if wcc_of[a] != wcc_of[b]:
                continue
            if fac.open_children[a] == fac.open_children[b]:
                if abs(fac.k[a] - fac.k[b]) > EQUAL_K_TOL:
                    failures.append((int(a), int(b)))
                continue
            i, j = (a, b) if abs(d[a]) >= abs(d[b]) else (b, a)
            if d[i] * d[j] < 0:
                ambiguous.append((int(i), int(j)))
            lhs = fac.k_max_pair(i, j) - fac.k_min_pair(i, j)
            if lhs > theorem2_condition5_bound(i, j, fac) + BOUND_SLACK:
                failures.append((int(i), int(j)))
    c5 = not failures
    cond = (bool(c1), c2, c3, c4, c5)
    return Theorem2Check(cond=cond, all_hold=all(cond), cond5_failures=tuple(failures),
                         ambiguous_pairs=tuple(ambiguous))
