"""scikit-learn style front ends for the decompositions and the grid change."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .grids import Grid, estimate_moments
from .gridtransform import GridMap, covariance_square_root, interpolate_to_grid, normalize
from .matdecomp import cross_greedy, truncated_svd
from .ttcore import tt_dense, tt_eval_many, tt_round, tt_svd


class TensorTrainApproximator(BaseEstimator):
    """Fit a tensor train to a dense array by TT-SVD.

    Parameters
    ----------
    eps : float
        Relative Frobenius accuracy of the TT-SVD.
    round_eps : float or None
        If set, the fitted train is additionally rounded at this accuracy.

    Attributes
    ----------
    tt_ : TensorTrain
    ranks_ : list of int
    """

    def __init__(self, eps=1e-5, round_eps=None):
        self.eps = eps
        self.round_eps = round_eps

    def fit(self, X, y=None):
        X = check_array(X, allow_nd=True, ensure_2d=False, ensure_min_samples=1)
        tt = tt_svd(X, self.eps)
        if self.round_eps is not None:
            tt = tt_round(tt, self.round_eps)
        self.tt_ = tt
        self.ranks_ = tt.ranks
        self.shape_ = tt.shape
        return self

    def predict(self, indices):
        """Values of the fitted train at an ``(m, d)`` array of multi-indices."""
        check_is_fitted(self, "tt_")
        indices = check_array(indices, dtype=int, ensure_2d=True)
        return tt_eval_many(self.tt_, indices)

    def to_dense(self):
        check_is_fitted(self, "tt_")
        return np.array(tt_dense(self.tt_).values)

    def score(self, X, y=None):
        """Negative relative Frobenius error against ``X``."""
        X = check_array(X, allow_nd=True, ensure_2d=False)
        return -float(np.linalg.norm(self.to_dense() - X) / np.linalg.norm(X))


class LowRankMatrixApproximator(TransformerMixin, BaseEstimator):
    """Rank-``rank`` matrix approximation by truncated SVD or greedy cross.

    ``fit`` selects the subspaces (SVD) or the pivot rows and columns
    (cross) from the training matrix. ``transform`` applies that selection
    to a matrix of the same shape: the SVD projects onto the fitted
    singular subspaces and the cross takes the skeleton at the fitted
    pivots. On the training matrix both return the usual approximation.
    """

    def __init__(self, rank=4, method="svd", pivot="full", random_state=0):
        self.rank = rank
        self.method = method
        self.pivot = pivot
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X)
        if self.method == "svd":
            self.factorization_ = truncated_svd(X, self.rank)
        elif self.method == "cross":
            self.factorization_ = cross_greedy(X, self.rank, seed=self.random_state,
                                               mode=self.pivot)
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.approximation_ = self.factorization_.reconstruct()
        self.n_features_in_ = X.shape[1]
        self.n_rows_in_ = X.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "factorization_")
        X = check_array(X)
        if X.shape != (self.n_rows_in_, self.n_features_in_):
            raise ValueError(f"expected a matrix of shape {(self.n_rows_in_, self.n_features_in_)}")
        f = self.factorization_
        if self.method == "svd":
            return f.U @ (f.U.T @ X @ f.V) @ f.V.T
        rows, cols = f.row_indices, f.col_indices
        return X[:, cols] @ np.linalg.solve(X[np.ix_(rows, cols)], X[rows])


class GridResampler(TransformerMixin, BaseEstimator):
    """Move a gridded density to a decorrelated grid.

    ``fit`` estimates mean and covariance of the density on
    ``source_grid`` and builds ``x = m + R y`` with the chosen square root;
    ``transform`` interpolates values onto ``target_grid`` (given in ``y``).
    """

    def __init__(self, source_grid: Grid | None = None, target_grid: Grid | None = None,
                 root="symmetric", normalize_output=True):
        self.source_grid = source_grid
        self.target_grid = target_grid
        self.root = root
        self.normalize_output = normalize_output

    def fit(self, X, y=None):
        if self.source_grid is None or self.target_grid is None:
            raise ValueError("source_grid and target_grid are required")
        X = check_array(X, allow_nd=True)
        self.moments_ = estimate_moments(normalize(X, self.source_grid), self.source_grid)
        root = covariance_square_root(self.moments_.covariance, self.root)
        self.grid_map_ = GridMap(self.moments_.mean, root)
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_map_")
        X = check_array(X, allow_nd=True)
        out = interpolate_to_grid(X, self.source_grid, self.target_grid, self.grid_map_)
        if self.normalize_output:
            out = normalize(out, self.target_grid)
        return np.array(out.values)
