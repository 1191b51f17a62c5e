"""Tensor-train approximations of probability densities sampled on grids."""

__version__ = "0.1.0"

from .densities import GaussianSpec, RadarSpec, gaussian_pdf, radar_pdf
from .estimators import GridResampler, LowRankMatrixApproximator, TensorTrainApproximator
from .grids import (DenseTensor, Grid, MomentEstimate, estimate_moments, make_equidistant_grid,
                    sample_function)
from .gridtransform import (GridMap, SquareRootKind, covariance_square_root, interpolate_to_grid,
                            normalize, spectrum_comparison)
from .matdecomp import (CrossFactorization, DegeneratePivotError, TruncatedSVD, cross_greedy,
                        cross_reconstruct, truncated_svd, update_anatomy)
from .quadratic import (build_quadratic_cores, eval_quadratic_cores, quadratic_rank_report,
                        squeeze_cores)
from .ttcore import (TensorTrain, negativity_stats, tt_dense, tt_eval, tt_from_pair_decomposition,
                     tt_hadamard, tt_norm, tt_round, tt_svd)

__all__ = [
    "CrossFactorization", "DegeneratePivotError", "DenseTensor", "GaussianSpec", "Grid",
    "GridMap", "GridResampler", "LowRankMatrixApproximator", "MomentEstimate", "RadarSpec",
    "SquareRootKind", "TensorTrain", "TensorTrainApproximator", "TruncatedSVD",
    "build_quadratic_cores", "covariance_square_root", "cross_greedy", "cross_reconstruct",
    "estimate_moments", "eval_quadratic_cores", "gaussian_pdf", "interpolate_to_grid",
    "make_equidistant_grid", "negativity_stats", "normalize", "quadratic_rank_report",
    "radar_pdf", "sample_function", "spectrum_comparison", "squeeze_cores", "truncated_svd",
    "tt_dense", "tt_eval", "tt_from_pair_decomposition", "tt_hadamard", "tt_norm", "tt_round",
    "tt_svd", "update_anatomy",
]
