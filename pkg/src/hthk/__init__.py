"""Heterogeneous Hegselmann-Krause opinion dynamics: simulation and structural analysis."""
from ._kernels import BACKEND
from .model import (OpinionState, ProximityDigraph, StructuralError, build_digraph,
                    build_matrix, step)
from .structure import (CanonicalBlocks, Mind, StructureReport, analyze_structure,
                        canonical_decomposition, wcc_ranges)
from .fixed_topology import (FinalValueResult, check_prop1_part2, fvct, fvct_fixed,
                             is_equilibrium)
from .neighborhoods import (NeighborhoodSpec, check_theorem1, in_equi_topology,
                            in_invariant_equi_topology, neighborhood_spec)
from .convergence import (ConvergenceFactors, check_lemma1, check_monotone_step,
                          check_theorem2, convergence_factors, theorem2_condition5_bound)
from .leaders import LeaderReport, check_theorem3, leader_report
from .simulator import Mode, TrajectoryReport, detect_tau, simulate

__all__ = [
    "BACKEND", "OpinionState", "ProximityDigraph", "StructuralError", "build_digraph",
    "build_matrix", "step", "CanonicalBlocks", "Mind", "StructureReport",
    "analyze_structure", "canonical_decomposition", "wcc_ranges", "FinalValueResult",
    "check_prop1_part2", "fvct", "fvct_fixed", "is_equilibrium", "NeighborhoodSpec",
    "check_theorem1", "in_equi_topology", "in_invariant_equi_topology",
    "neighborhood_spec", "ConvergenceFactors", "check_lemma1", "check_monotone_step",
    "check_theorem2", "convergence_factors", "theorem2_condition5_bound", "LeaderReport",
    "check_theorem3", "leader_report", "Mode", "TrajectoryReport", "detect_tau", "simulate",
]
