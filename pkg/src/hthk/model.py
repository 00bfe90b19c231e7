"""State, proximity digraph and the one-step htHK update."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import _kernels


class StructuralError(RuntimeError):
    """An internal structural invariant was violated (e.g. a singular solve)."""


@dataclass(frozen=True, eq=False)
class OpinionState:
    """Opinion vector paired with per-agent confidence bounds.

    ``tie_tol`` widens the neighbour test to ``|y_i - y_j| <= r_i + tie_tol``;
    the default 0 is the exact ``<=`` rule.
    """

    opinions: np.ndarray
    bounds: np.ndarray
    tie_tol: float = 0.0

    def __post_init__(self):
        y = np.array(self.opinions, dtype=np.float64).reshape(-1)
        r = np.array(self.bounds, dtype=np.float64).reshape(-1)
        if y.size == 0:
            raise ValueError("an opinion state needs at least one agent")
        if y.shape != r.shape:
            raise ValueError(f"opinions ({y.size}) and bounds ({r.size}) differ in length")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(r))):
            raise ValueError("opinions and bounds must be finite")
        if np.any(r <= 0):
            raise ValueError("bounds must be strictly positive")
        if not np.isfinite(self.tie_tol) or self.tie_tol < 0:
            raise ValueError("tie_tol must be a finite non-negative number")
        y.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "opinions", y)
        object.__setattr__(self, "bounds", r)
        object.__setattr__(self, "tie_tol", float(self.tie_tol))

    @property
    def n(self) -> int:
        return self.opinions.size

    def with_opinions(self, y) -> "OpinionState":
        return OpinionState(y, self.bounds, self.tie_tol)


@dataclass(frozen=True, eq=False)
class ProximityDigraph:
    """Out-neighbour structure of ``G_r(y)``; ``mask[i, j]`` is the edge i -> j."""

    mask: np.ndarray
    _fp: str = field(default="", repr=False)

    def __post_init__(self):
        m = np.array(self.mask, dtype=np.bool_)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError("adjacency mask must be a non-empty square matrix")
        if not np.all(np.diag(m)):
            raise ValueError("every node needs a self-loop")
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def n(self) -> int:
        return self.mask.shape[0]

    @property
    def out_neighbors(self) -> list[np.ndarray]:
        """Sorted 0-based out-neighbour index arrays, one per node."""
        return [np.flatnonzero(row) for row in self.mask]

    def edges(self):
        return [tuple(e) for e in np.argwhere(self.mask)]

    def fingerprint(self) -> str:
        if not self._fp:
            h = hashlib.sha1(np.packbits(self.mask).tobytes())
            h.update(str(self.n).encode())
            object.__setattr__(self, "_fp", h.hexdigest())
        return self._fp

    def __eq__(self, other):
        if not isinstance(other, ProximityDigraph):
            return NotImplemented
        return self.mask.shape == other.mask.shape and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash(self.fingerprint())


def build_digraph(state: OpinionState) -> ProximityDigraph:
    return ProximityDigraph(
        _kernels.neighbor_mask(state.opinions, state.bounds, state.tie_tol))


def build_matrix(digraph: ProximityDigraph) -> np.ndarray:
    """Row-stochastic averaging matrix ``A(y)`` of a proximity digraph."""
    m = digraph.mask.astype(np.float64)
    return m / m.sum(axis=1, keepdims=True)


def step(state: OpinionState) -> OpinionState:
    """One synchronous update ``x <- A(x) x``."""
    mask = _kernels.neighbor_mask(state.opinions, state.bounds, state.tie_tol)
    return state.with_opinions(_kernels.averaging_step(state.opinions, mask))


def step_with(y: np.ndarray, digraph: ProximityDigraph) -> np.ndarray:
    """Averaging update of ``y`` under a given (possibly frozen) digraph."""
    return _kernels.averaging_step(np.ascontiguousarray(y, dtype=np.float64), digraph.mask)
