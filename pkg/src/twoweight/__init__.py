"""Numerical toolkit for two-weight inequalities of the Cauchy transform.

Discrete measures on the line, half-plane, circle and disk; random dyadic
grids; weighted Haar systems; direct operator norms; the characterizing
constants; corona stopping trees; the disk / model-space variant; and an
acceptance suite tying the pieces together.
"""
from .constants import ConstantsReport, characterize
from .corona import StoppingTree, build_stopping_tree, carleson_ratio
from .disk import InnerFunction, clark_measure, disk_constants
from .dyadic import DyadicInterval, Grid, GridParams, sample_grid, whitney
from .haar import CubeSystem, HaarSystem, analyze
from .kernels import matrix_norm, operator_norm
from .measures import Measure1D, Measure2D
from .suite import SuiteConfig, run_suite, verify_instance

__all__ = [
    "ConstantsReport", "CubeSystem", "DyadicInterval", "Grid", "GridParams", "HaarSystem", "InnerFunction",
    "Measure1D", "Measure2D", "StoppingTree", "SuiteConfig", "analyze", "build_stopping_tree",
    "carleson_ratio", "characterize", "clark_measure", "disk_constants", "matrix_norm", "operator_norm",
    "run_suite", "sample_grid", "verify_instance", "whitney",
]
__version__ = "0.1.0"
