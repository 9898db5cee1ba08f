"""Boundary integral solver for piecewise-constant conductivity in nested planar regions."""
from .config import ProblemConfig, load_config
from .errors import BIEError
from .evaluation import Evaluator, eval_close, eval_naive
from .geometry import Circle, Ellipse, FourierCurve, PolarCosine, RegionTree, build_region_tree
from .solver import DensitySolution, SolveSettings, solve, solve_adaptive
from .summation import Backend

__all__ = [
    "Backend", "BIEError", "Circle", "DensitySolution", "Ellipse", "Evaluator", "FourierCurve", "PolarCosine",
    "ProblemConfig", "RegionTree", "SolveSettings", "build_region_tree", "eval_close", "eval_naive",
    "load_config", "solve", "solve_adaptive",
]
