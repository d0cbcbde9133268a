"""
spreadpc: leading-order critical points of spread-out lattice models.

Return probabilities of the spread-out random walk, the loop sums built from
them, their continuum limits, and Monte Carlo oracles.
"""

__version__ = "1.0.0"

from .kernels import KernelSpec, make_explicit, make_uniform  # noqa: E402
from .returns import ReturnSeries, return_series  # noqa: E402
from .sums import Prediction, loop_sums, predict_pc, predict_pc_continuum  # noqa: E402

__all__ = ["KernelSpec", "make_uniform", "make_explicit", "ReturnSeries",
           "return_series", "Prediction", "loop_sums", "predict_pc",
           "predict_pc_continuum", "__version__"]
