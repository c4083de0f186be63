"""Doubly stochastic graph learning and clustering with symmetric matrix scaling."""

from .clustering import AncmmConfig, AncmmState, ClusterResult, initialize, run, step
from .data_io import DataMatrix, RunRecord, load_builtin, load_csv, preprocess, two_moons
from .evaluation import MetricReport, evaluate
from .exceptions import (
    AncmmError,
    ConfigError,
    DegenerateRow,
    InvalidOmega,
    NonConvergence,
    ParseError,
    ShapeError,
)
from .graph_learning import select_alpha, solve_row
from .marcus import check_marcus_condition, check_total_support, degree_normalize_iterate, marcus_map
from .ot_bridge import entropic_plan
from .spectral import connected_components, laplacian, smallest_eigenpairs

__version__ = "0.1.0"

__all__ = [
    "AncmmConfig", "AncmmState", "ClusterResult", "initialize", "run", "step",
    "DataMatrix", "RunRecord", "load_builtin", "load_csv", "preprocess", "two_moons",
    "MetricReport", "evaluate",
    "AncmmError", "ConfigError", "DegenerateRow", "InvalidOmega", "NonConvergence",
    "ParseError", "ShapeError",
    "select_alpha", "solve_row",
    "check_marcus_condition", "check_total_support", "degree_normalize_iterate", "marcus_map",
    "entropic_plan",
    "connected_components", "laplacian", "smallest_eigenpairs",
]
