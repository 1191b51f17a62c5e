"""Rank-r matrix approximations: truncated SVD and greedy cross.

Also contains the "update anatomy" diagnostics, which split a sequence of
rank-1..r approximations into approximation, update and error matrices
and count their negative entries.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

# B with a larger condition number is treated as a degraded pivot set
MAX_CONDITION = 1e12
# residual entries below this fraction of max|M| count as exhausted
_RESIDUAL_RTOL = 1e-14
_MAX_ALTERNATIONS = 50


class DegeneratePivotError(np.linalg.LinAlgError):
    """The pivot submatrix B is numerically singular."""


def _check_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got an array of shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite values")
    return M


def _check_rank(M: np.ndarray, r: int) -> int:
    if int(r) != r or not 1 <= r <= min(M.shape):
        raise ValueError(f"rank must be an integer in [1, {min(M.shape)}], got {r}")
    return int(r)


@dataclass(frozen=True)
class TruncatedSVD:
    U: np.ndarray
    s: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return self.s.size

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.s) @ self.V.T


def fix_signs(U: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip singular pairs so each U column has a positive largest entry."""
    pick = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pick, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, V * signs


def truncated_svd(M, r: int) -> TruncatedSVD:
    """Frobenius-optimal rank-``r`` approximation ``U diag(s) V^T``."""
    M = _check_matrix(M)
    r = _check_rank(M, r)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    U, V = fix_signs(U[:, :r], Vt[:r].T)
    return TruncatedSVD(U=U, s=s[:r].copy(), V=V)


def singular_values(M) -> np.ndarray:
    return np.linalg.svd(_check_matrix(M), compute_uv=False)


@dataclass(frozen=True)
class CrossFactorization:
    """Skeleton ``M ~ C B^{-1} R`` built from whole rows and columns of M.

    ``rank_deficient`` is set when the residual vanished before the
    requested rank was reached; ``rank`` then reports what was achieved.
    """

    row_indices: np.ndarray
    col_indices: np.ndarray
    C: np.ndarray
    B: np.ndarray
    R: np.ndarray
    rank_deficient: bool = False

    @property
    def rank(self) -> int:
        return self.row_indices.size

    def truncate(self, r: int) -> "CrossFactorization":
        """Factorization using only the first ``r`` pivots."""
        return CrossFactorization(
            row_indices=self.row_indices[:r],
            col_indices=self.col_indices[:r],
            C=self.C[:, :r],
            B=self.B[:r, :r],
            R=self.R[:r],
        )

    def reconstruct(self) -> np.ndarray:
        return cross_reconstruct(self)


def _pick_stochastic(E: np.ndarray, rng: np.random.Generator, floor: float) -> tuple[int, int]:
    # alternating row/column maximisation from a random column
    j = int(rng.integers(E.shape[1]))
    i = int(np.argmax(np.abs(E[:, j])))
    for _ in range(_MAX_ALTERNATIONS):
        j_new = int(np.argmax(np.abs(E[i])))
        i_new = int(np.argmax(np.abs(E[:, j_new])))
        if (i_new, j_new) == (i, j):
            break
        i, j = i_new, j_new
    if abs(E[i, j]) <= floor:
        # random column was already exhausted (e.g. an earlier pivot column)
        i, j = np.unravel_index(np.argmax(np.abs(E)), E.shape)
    return int(i), int(j)


def cross_greedy(M, r: int, seed: int = 0, mode: str = "full") -> CrossFactorization:
    """Greedy rank-incrementing cross (pseudoskeleton) approximation.

    At each step a pivot of large residual magnitude is chosen and its row
    and column are added. ``mode="full"`` takes the global maximum of
    ``|M - A_t|``; ``mode="stochastic"`` starts from a column drawn with
    ``seed`` and alternates row/column maximisation until it settles.
    """
    M = _check_matrix(M)
    r = _check_rank(M, r)
    if mode not in ("full", "stochastic"):
        raise ValueError(f"unknown pivot mode {mode!r}")
    rng = np.random.default_rng(seed)
    scale = np.abs(M).max()
    E = M.copy()
    rows: list[int] = []
    cols: list[int] = []
    for _ in range(r):
        if mode == "full":
            i, j = np.unravel_index(np.argmax(np.abs(E)), E.shape)
        else:
            i, j = _pick_stochastic(E, rng, _RESIDUAL_RTOL * scale)
        pivot = E[i, j]
        if abs(pivot) <= _RESIDUAL_RTOL * scale or scale == 0:
            break
        rows.append(int(i))
        cols.append(int(j))
        # Schur-complement update keeps E = M - C B^{-1} R
        E = E - np.outer(E[:, j], E[i]) / pivot
    if not rows:
        raise DegeneratePivotError("matrix is numerically zero, no pivot available")
    rows_a = np.array(rows)
    cols_a = np.array(cols)
    B = M[np.ix_(rows_a, cols_a)].copy()
    cond = np.linalg.cond(B)
    if not cond < MAX_CONDITION:
        raise DegeneratePivotError(f"pivot submatrix condition number {cond:.3g}")
    return CrossFactorization(
        row_indices=rows_a,
        col_indices=cols_a,
        C=M[:, cols_a].copy(),
        B=B,
        R=M[rows_a].copy(),
        rank_deficient=len(rows) < r,
    )


def cross_reconstruct(f: CrossFactorization) -> np.ndarray:
    """``C B^{-1} R`` evaluated with a linear solve, never forming the inverse."""
    cond = np.linalg.cond(f.B)
    if not cond < MAX_CONDITION:
        raise DegeneratePivotError(f"pivot submatrix condition number {cond:.3g}")
    return f.C @ np.linalg.solve(f.B, f.R)


class AnatomyStep(NamedTuple):
    rank: int
    approximation: np.ndarray
    update: np.ndarray
    error: np.ndarray

    def negative_counts(self) -> dict[str, int]:
        return {name: int(np.sum(getattr(self, name) < 0))
                for name in ("approximation", "update", "error")}

    def min_values(self) -> dict[str, float]:
        return {name: float(getattr(self, name).min())
                for name in ("approximation", "update", "error")}


def update_anatomy(M, method: str = "svd", r_max: int = 4, *, seed: int = 0,
                   pivot: str = "full") -> list[AnatomyStep]:
    """Approximations ``A_r``, updates ``A_r - A_{r-1}`` and errors ``M - A_r``.

    For the cross method the pivots of a single greedy run are reused, so
    ``A_r`` is built from the first ``r`` pivots. The sequence stops early
    if the cross runs out of pivots.
    """
    M = _check_matrix(M)
    r_max = _check_rank(M, r_max)
    if method == "svd":
        full = truncated_svd(M, r_max)
        approx = [(full.U[:, :r] * full.s[:r]) @ full.V[:, :r].T for r in range(1, r_max + 1)]
    elif method == "cross":
        cross = cross_greedy(M, r_max, seed=seed, mode=pivot)
        approx = [cross.truncate(r).reconstruct() for r in range(1, cross.rank + 1)]
    else:
        raise ValueError(f"unknown method {method!r}")
    steps = []
    previous = np.zeros_like(M)
    for r, A in enumerate(approx, start=1):
        steps.append(AnatomyStep(rank=r, approximation=A, update=A - previous, error=M - A))
        previous = A
    return steps


def write_matrix_csv(path, M: np.ndarray, header: list[str] | None = None) -> None:
    """One CSV row per matrix row, 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in header or []:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        for row in np.atleast_2d(M):
            writer.writerow([format(float(v), ".17g") for v in row])


def write_anatomy_csv(steps: list[AnatomyStep], directory, prefix: str,
                      header: list[str] | None = None) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for step in steps:
        for name in ("approximation", "update", "error"):
            path = directory / f"{prefix}_r{step.rank}_{name}.csv"
            write_matrix_csv(path, getattr(step, name), header)
            written.append(path)
    return written
