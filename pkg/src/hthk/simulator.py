"""Trajectories of the free and frozen-topology dynamics."""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .model import OpinionState, ProximityDigraph, build_digraph

CONVERGENCE_TOL = 1e-12
STABILITY_WINDOW = 100
FULL_RETENTION = 10_000
TAIL_RETENTION = 1_000
_CHUNK = 4096


class Mode(str, enum.Enum):
    FREE = "free"
    FROZEN = "frozen"


class NonFiniteError(RuntimeError):
    pass


@dataclass(frozen=True)
class Snapshot:
    t: int
    opinions: np.ndarray
    fingerprint: str


@dataclass
class TrajectoryReport:
    """Result of :func:`simulate`.

    ``topology_changes`` lists the update steps s whose output x(s+1) has a
    different proximity digraph from x(s); ``tau_candidate`` is the step after
    the last of them (0 when the digraph never changed).
    """

    snapshots: list[Snapshot]
    topology_changes: list[int]
    tau_candidate: int
    converged: bool
    final_residual: float
    steps_run: int
    mode: Mode = Mode.FREE
    convergence_tol: float = CONVERGENCE_TOL
    final_opinions: np.ndarray = field(default=None, repr=False)

    def trajectory(self) -> tuple[np.ndarray, np.ndarray]:
        t = np.array([s.t for s in self.snapshots])
        x = np.vstack([s.opinions for s in self.snapshots])
        return t, x

    def to_dict(self, with_snapshots: bool = False) -> dict:
        d = {
            "mode": self.mode.value,
            "steps_run": self.steps_run,
            "converged": self.converged,
            "final_residual": self.final_residual,
            "convergence_tol": self.convergence_tol,
            "topology_changes": list(self.topology_changes),
            "tau_candidate": self.tau_candidate,
            "final_opinions": self.final_opinions.tolist(),
        }
        if with_snapshots:
            d["snapshots"] = [{"t": s.t, "opinions": s.opinions.tolist(),
                               "fingerprint": s.fingerprint} for s in self.snapshots]
        return d


def simulate(initial: OpinionState, max_steps: int = 100_000,
             convergence_tol: float = CONVERGENCE_TOL, mode: Mode | str = Mode.FREE,
             frozen_digraph: ProximityDigraph | None = None) -> TrajectoryReport:
    """Iterate the htHK map until the step delta drops to ``convergence_tol``.

    In frozen mode every update uses ``A(x(0))`` (or ``frozen_digraph``);
    topology changes are still tracked on the free digraph of each state.
    """
    mode = Mode(mode)
    if convergence_tol <= 0:
        raise ValueError("convergence_tol must be positive")
    if max_steps < 1:
        raise ValueError("max_steps must be positive")
    g0 = build_digraph(initial)
    frozen = mode is Mode.FROZEN
    fmask = (frozen_digraph or g0).mask if frozen else None

    y = initial.opinions.copy()
    kept: list[tuple[int, np.ndarray]] = [(0, y.copy())]
    tail: deque[tuple[int, np.ndarray]] = deque(maxlen=TAIL_RETENTION)
    changes: list[int] = []
    done = 0
    residual = np.inf
    converged = False
    while done < max_steps and not converged:
        n_chunk = min(_CHUNK, max_steps - done)
        traj, changed, k, residual, converged, finite = _kernels.run_chunk(
            y, initial.bounds, initial.tie_tol, fmask, frozen, n_chunk, convergence_tol)
        changes.extend(int(s) + done for s in np.flatnonzero(changed))
        for s in range(1, k + 1):
            t = done + s
            if t <= FULL_RETENTION or (t & (t - 1)) == 0:
                kept.append((t, traj[s].copy()))
            elif s > k - TAIL_RETENTION:
                tail.append((t, traj[s].copy()))
        if not finite:
            raise NonFiniteError(f"non-finite opinion at step {done + k + 1}")
        y = traj[k].copy()
        done += k
    residual = float(residual)

    have = {t for t, _ in kept}
    kept.extend(item for item in tail if item[0] not in have)
    kept.sort(key=lambda item: item[0])
    r, tt = initial.bounds, initial.tie_tol
    snaps = [Snapshot(t, x, ProximityDigraph(_kernels.neighbor_mask(x, r, tt)).fingerprint())
             for t, x in kept]
    return TrajectoryReport(
        snapshots=snaps, topology_changes=changes,
        tau_candidate=(changes[-1] + 1) if changes else 0,
        converged=converged, final_residual=residual, steps_run=done, mode=mode,
        convergence_tol=convergence_tol, final_opinions=y)


def detect_tau(report: TrajectoryReport, stability_window: int = STABILITY_WINDOW) -> int | None:
    """Certified constant-topology time, or ``None`` when inconclusive.

    A finite run can only support a candidate: the run must have converged
    and the digraph must have been constant for ``stability_window`` steps,
    unless the run ended on an exact fixed point.
    """
    if stability_window < 1:
        raise ValueError("stability_window must be positive")
    if not report.converged:
        return None
    held = report.steps_run - report.tau_candidate
    if held >= stability_window or report.final_residual == 0.0:
        return report.tau_candidate
    return None


def trajectory_states(initial: OpinionState, nsteps: int, mode: Mode | str = Mode.FREE,
                      frozen_digraph: ProximityDigraph | None = None) -> np.ndarray:
    """Exactly ``nsteps + 1`` states x(0..nsteps), without a convergence stop."""
    mode = Mode(mode)
    frozen = mode is Mode.FROZEN
    fmask = None
    if frozen:
        fmask = (frozen_digraph or build_digraph(initial)).mask
    out = np.empty((nsteps + 1, initial.n))
    out[0] = initial.opinions
    done = 0
    while done < nsteps:
        n_chunk = min(_CHUNK, nsteps - done)
        traj, _, k, _, _, finite = _kernels.run_chunk(
            out[done], initial.bounds, initial.tie_tol, fmask, frozen, n_chunk, -1.0)
        if not finite:
            raise NonFiniteError(f"non-finite opinion at step {done + k + 1}")
        out[done + 1:done + k + 1] = traj[1:]
        done += k
    return out
