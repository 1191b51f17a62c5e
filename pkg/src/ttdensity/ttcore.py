"""Tensor trains: TT-SVD, evaluation, densification, rounding and products."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .grids import DenseTensor, Grid, as_array

MAX_DENSE_ELEMENTS = 10**8


@dataclass(frozen=True, eq=False)
class TensorTrain:
    """Chain of order-3 cores, core ``j`` of shape ``(r_{j-1}, n_j, r_j)``."""

    cores: tuple[np.ndarray, ...]

    def __init__(self, cores: Sequence[np.ndarray]):
        frozen = []
        for j, core in enumerate(cores):
            core = np.array(core, dtype=float, copy=True)
            if core.ndim != 3:
                raise ValueError(f"core {j} must be order 3, got shape {core.shape}")
            if not np.all(np.isfinite(core)):
                raise ValueError(f"core {j} contains non-finite entries")
            if frozen and frozen[-1].shape[2] != core.shape[0]:
                raise ValueError(
                    f"rank mismatch between cores {j - 1} and {j}: "
                    f"{frozen[-1].shape[2]} != {core.shape[0]}"
                )
            core.flags.writeable = False
            frozen.append(core)
        if not frozen:
            raise ValueError("a tensor train needs at least one core")
        if frozen[0].shape[0] != 1 or frozen[-1].shape[2] != 1:
            raise ValueError("boundary ranks must be 1")
        object.__setattr__(self, "cores", tuple(frozen))

    @property
    def ndim(self) -> int:
        return len(self.cores)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> list[int]:
        return [1] + [c.shape[2] for c in self.cores]

    def __repr__(self) -> str:
        return f"TensorTrain(shape={self.shape}, ranks={self.ranks})"

    def to_dict(self) -> dict:
        return {
            "shape": list(self.shape),
            "ranks": self.ranks,
            "cores": [c.ravel(order="C").tolist() for c in self.cores],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TensorTrain":
        shape, ranks = data["shape"], data["ranks"]
        if len(ranks) != len(shape) + 1 or len(data["cores"]) != len(shape):
            raise ValueError("inconsistent shape, ranks and cores lengths")
        cores = [
            np.asarray(flat, dtype=float).reshape(ranks[j], shape[j], ranks[j + 1])
            for j, flat in enumerate(data["cores"])
        ]
        return cls(cores)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "TensorTrain":
        return cls.from_dict(json.loads(text))


def rank_one(vectors: Sequence) -> TensorTrain:
    """Outer product of vectors as a TT with all ranks 1."""
    return TensorTrain([np.asarray(v, dtype=float).reshape(1, -1, 1) for v in vectors])


def _truncation_rank(s: np.ndarray, delta: float) -> int:
    # smallest r whose discarded tail sqrt(sum_{i>=r} s_i^2) is <= delta
    tail = np.sqrt(np.cumsum((s**2)[::-1]))[::-1]
    return max(1, int(np.count_nonzero(tail > delta)))


def tt_svd(t, eps: float) -> TensorTrain:
    """Left-to-right TT-SVD with relative Frobenius accuracy ``eps``.

    Each unfolding is truncated with absolute budget
    ``eps * ||t||_F / sqrt(d - 1)``, which bounds the total error by
    ``eps * ||t||_F``.
    """
    values = as_array(t)
    if values.ndim == 0:
        raise ValueError("tensor must have at least one dimension")
    if not np.all(np.isfinite(values)):
        raise ValueError("tensor contains non-finite values")
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    d = values.ndim
    shape = values.shape
    if d == 1:
        return TensorTrain([values.reshape(1, -1, 1)])
    delta = eps * np.linalg.norm(values) / math.sqrt(d - 1)
    cores = []
    rank = 1
    rest = values
    for k in range(d - 1):
        rest = rest.reshape(rank * shape[k], -1)
        U, s, Vt = np.linalg.svd(rest, full_matrices=False)
        new_rank = _truncation_rank(s, delta)
        cores.append(U[:, :new_rank].reshape(rank, shape[k], new_rank))
        rest = s[:new_rank, None] * Vt[:new_rank]
        rank = new_rank
    cores.append(rest.reshape(rank, shape[-1], 1))
    return TensorTrain(cores)


def tt_eval(tt: TensorTrain, idx: Sequence[int]) -> float:
    """Value at one multi-index: the product of the selected core slices."""
    if len(idx) != tt.ndim:
        raise IndexError(f"expected {tt.ndim} indices, got {len(idx)}")
    row = np.ones((1, 1))
    for j, (core, i) in enumerate(zip(tt.cores, idx)):
        if not 0 <= i < core.shape[1]:
            raise IndexError(f"index {i} out of bounds for axis {j} of size {core.shape[1]}")
        row = row @ core[:, i, :]
    return float(row[0, 0])


def tt_eval_many(tt: TensorTrain, indices) -> np.ndarray:
    """Vectorised ``tt_eval`` for an ``(m, d)`` integer array."""
    indices = np.asarray(indices, dtype=int)
    if indices.ndim != 2 or indices.shape[1] != tt.ndim:
        raise IndexError(f"indices must have shape (m, {tt.ndim})")
    for j, n in enumerate(tt.shape):
        if np.any((indices[:, j] < 0) | (indices[:, j] >= n)):
            raise IndexError(f"index out of bounds on axis {j}")
    rows = np.ones((indices.shape[0], 1))
    for core, col in zip(tt.cores, indices.T):
        rows = np.einsum("ma,amb->mb", rows, core[:, col, :])
    return rows[:, 0]


def tt_dense(tt: TensorTrain) -> DenseTensor:
    """Materialise every element; guarded at ``MAX_DENSE_ELEMENTS``."""
    size = math.prod(tt.shape)
    if size > MAX_DENSE_ELEMENTS:
        raise MemoryError(f"dense tensor would have {size} elements (limit {MAX_DENSE_ELEMENTS})")
    full = tt.cores[0].reshape(tt.shape[0], -1)
    for core in tt.cores[1:]:
        r = core.shape[0]
        full = full.reshape(-1, r) @ core.reshape(r, -1)
    return DenseTensor(full.reshape(tt.shape))


def _orthogonalize_right(cores: list[np.ndarray]) -> list[np.ndarray]:
    # right-to-left QR sweep; afterwards cores[1:] are right-orthogonal
    cores = list(cores)
    for k in range(len(cores) - 1, 0, -1):
        r0, n, r1 = cores[k].shape
        q, rmat = np.linalg.qr(cores[k].reshape(r0, n * r1).T)
        new_r = q.shape[1]
        cores[k] = q.T.reshape(new_r, n, r1)
        cores[k - 1] = np.tensordot(cores[k - 1], rmat.T, axes=(2, 0))
    return cores


def tt_norm(tt: TensorTrain) -> float:
    """Frobenius norm, computed from a right-orthogonalised copy."""
    return float(np.linalg.norm(_orthogonalize_right(list(tt.cores))[0]))


def tt_round(tt: TensorTrain, eps: float) -> TensorTrain:
    """Recompress to the smallest ranks within relative accuracy ``eps``."""
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    d = tt.ndim
    if d == 1:
        return tt
    cores = _orthogonalize_right(list(tt.cores))
    norm = np.linalg.norm(cores[0])
    delta = eps * norm / math.sqrt(d - 1)
    for k in range(d - 1):
        r0, n, r1 = cores[k].shape
        U, s, Vt = np.linalg.svd(cores[k].reshape(r0 * n, r1), full_matrices=False)
        rank = _truncation_rank(s, delta)
        cores[k] = U[:, :rank].reshape(r0, n, rank)
        cores[k + 1] = np.tensordot(s[:rank, None] * Vt[:rank], cores[k + 1], axes=(1, 0))
    return TensorTrain(cores)


def tt_hadamard(a: TensorTrain, b: TensorTrain) -> TensorTrain:
    """Element-wise product; ranks multiply core by core."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    cores = []
    for ca, cb in zip(a.cores, b.cores):
        ra0, n, ra1 = ca.shape
        rb0, _, rb1 = cb.shape
        core = np.einsum("anb,cnd->acnbd", ca, cb).reshape(ra0 * rb0, n, ra1 * rb1)
        cores.append(core)
    return TensorTrain(cores)


class NegativityStats(NamedTuple):
    count: int
    fraction: float
    min_value: float


def negativity_stats(t) -> NegativityStats:
    """Count of strictly negative entries, their share and the minimum."""
    if isinstance(t, TensorTrain):
        t = tt_dense(t)
    values = as_array(t)
    count = int(np.count_nonzero(values < 0))
    return NegativityStats(count=count, fraction=count / values.size,
                           min_value=float(values.min()))


def tt_from_pair_decomposition(grid: Grid, marginals: Sequence, pair: tuple[int, int],
                               pair_factors: tuple[np.ndarray, np.ndarray]) -> TensorTrain:
    """TT of ``f_kl(x_k, x_l) * prod_{j not in (k, l)} f_j(x_j)``.

    ``pair`` holds 0-based axes ``k < l``; ``pair_factors = (left, right)``
    with ``left @ right`` approximating the ``n_k x n_l`` pair matrix (for
    example ``U * s`` and ``V.T`` of a truncated SVD). Axes between ``k``
    and ``l`` get identity cores scaled by their marginal, so the ranks are
    ``r`` on bonds ``k .. l-1`` and 1 elsewhere. Entries of ``marginals``
    at ``k`` and ``l`` are ignored.
    """
    k, l = pair
    d = grid.ndim
    if not 0 <= k < l < d:
        raise ValueError(f"pair must satisfy 0 <= k < l < {d}, got {pair}")
    if len(marginals) != d:
        raise ValueError(f"expected {d} marginals (entries at k and l are ignored)")
    left = np.asarray(pair_factors[0], dtype=float)
    right = np.asarray(pair_factors[1], dtype=float)
    r = left.shape[1]
    if left.shape[0] != grid.shape[k] or right.shape != (r, grid.shape[l]):
        raise ValueError(
            f"pair factors of shapes {left.shape}, {right.shape} do not fit axes of "
            f"sizes {grid.shape[k]}, {grid.shape[l]}"
        )
    cores = []
    for j in range(d):
        if j == k:
            cores.append(left.reshape(1, -1, r))
            continue
        if j == l:
            cores.append(right.reshape(r, -1, 1))
            continue
        m = np.asarray(marginals[j], dtype=float)
        if m.shape != (grid.shape[j],):
            raise ValueError(f"marginal {j} has shape {m.shape}, expected ({grid.shape[j]},)")
        if k < j < l:
            cores.append(np.einsum("ab,n->anb", np.eye(r), m))
        else:
            cores.append(m.reshape(1, -1, 1))
    return TensorTrain(cores)
