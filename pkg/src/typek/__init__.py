"""Numerical analysis of type-K competitive Kolmogorov maps."""

from .cones import Box, Comparison, ConeSplit, OrderRel, compare, in_k_interval, projection
from .model import KolmogorovMap, builtin_example1, load_map, parse_map
from .hypotheses import HypothesisReport, check_hypotheses
from .orbits import OrbitTrace, Verdict, invert_T, iterate_backward, iterate_forward, sample_retrotone
from .fixed_points import FixedPointCatalog, FixedPointRecord, find_fixed_points
from .attractor import (AttractorDecomposition, BasinVerdict, assemble_decomposition,
                        basin_convexity_spot_check, basin_of_repulsion_test)

__version__ = "0.1.0"

__all__ = [
    "Box", "Comparison", "ConeSplit", "OrderRel", "compare", "in_k_interval", "projection",
    "KolmogorovMap", "builtin_example1", "load_map", "parse_map",
    "HypothesisReport", "check_hypotheses",
    "OrbitTrace", "Verdict", "invert_T", "iterate_backward", "iterate_forward", "sample_retrotone",
    "FixedPointCatalog", "FixedPointRecord", "find_fixed_points",
    "AttractorDecomposition", "BasinVerdict", "assemble_decomposition",
    "basin_convexity_spot_check", "basin_of_repulsion_test",
]
