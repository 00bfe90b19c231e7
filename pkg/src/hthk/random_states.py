"""Random instance generators shared by the fuzzers and the property suites."""
from __future__ import annotations

import numpy as np

from .fixed_topology import fvct_fixed, is_equilibrium
from .leaders import leader_report
from .model import OpinionState, build_digraph, build_matrix
from .neighborhoods import equi_topology_radii
from .simulator import simulate
from .structure import Mind, analyze_structure


def random_state(rng: np.random.Generator, n: int, r_range=(0.05, 0.5),
                 spread: float = 1.0) -> OpinionState:
    x = rng.uniform(0.0, spread, n)
    r = rng.uniform(*r_range, n)
    return OpinionState(x, r)


def random_homogeneous(rng: np.random.Generator, n: int, r_range=(0.05, 0.5)) -> OpinionState:
    x = rng.uniform(0.0, 1.0, n)
    return OpinionState(x, np.full(n, rng.uniform(*r_range)))


def random_equilibrium(rng: np.random.Generator, n: int, attempts: int = 100) -> OpinionState:
    """Equilibrium with every pairwise distance clear of both bounds.

    A random state is run to convergence and then polished to its exact
    final value; candidates with a zero equi-topology radius are redrawn.
    """
    for _ in range(attempts):
        s = random_state(rng, n)
        rep = simulate(s, max_steps=20_000)
        if not rep.converged:
            continue
        y = rep.final_opinions
        z = s.with_opinions(fvct_fixed(y, build_digraph(s.with_opinions(y))).fvct)
        if not is_equilibrium(z):
            continue
        if np.min(equi_topology_radii(z.opinions, z.bounds)) <= 1e-9:
            continue
        return z
    raise RuntimeError("no admissible equilibrium found")


def random_trajectory_state(rng: np.random.Generator, n: int, max_offset: int = 30) -> OpinionState:
    """State visited by the free dynamics a few steps after a random start."""
    s = random_state(rng, n)
    k = int(rng.integers(0, max_offset + 1))
    rep = simulate(s, max_steps=max(k, 1))
    t, xs = rep.trajectory()
    return s.with_opinions(xs[min(k, len(xs) - 1)])


def random_leader_instance(rng: np.random.Generator, n: int, min_gap: float = 0.02,
                           attempts: int = 1000) -> OpinionState:
    """Random state whose frozen topology suits the rate-limit test.

    Rejects states with a moderate-minded component, without open-minded
    agents, with a leader tie, or where two open SCCs on a common successor
    chain have spectral radii closer than ``min_gap`` (relative), which
    would make the rate limit unobservable at a finite horizon.
    """
    for _ in range(attempts):
        s = random_state(rng, n)
        g = build_digraph(s)
        st = analyze_structure(g)
        if st.has_moderate() or Mind.OPEN not in st.class_of:
            continue
        rep = leader_report(build_matrix(g), st)
        ok = not rep.ties
        for k in rep.open_sccs:
            rk = rep.rho[k]
            for m in rep.successor_sets[k]:
                if m != k and abs(rep.rho[m] - rk) < min_gap * max(rk, rep.rho[m]):
                    ok = False
        if ok:
            return s
    raise RuntimeError("no admissible leader instance found")
