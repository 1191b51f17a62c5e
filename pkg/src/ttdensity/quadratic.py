"""Exact functional tensor trains of quadratic forms ``x^T Q x``.

Every core entry is a polynomial ``c0 + c1 * x_j + c2 * x_j**2`` stored as
its three coefficients, so a core is an array of shape ``(r_prev, r_next, 3)``.
Left of the middle the carried state is ``[1, x_1, ..., x_j, partial sum]``,
right of it ``[partial sum, x_j, ..., x_d, 1]``; the middle core (odd d) or
a constant correction matrix (even d) couples the two halves.
"""
from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

CONST, LIN, QUAD = 0, 1, 2


def _poly_matrix(rows: int, cols: int) -> np.ndarray:
    return np.zeros((rows, cols, 3))


def _check_q(Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError(f"Q must be square, got shape {Q.shape}")
    if Q.shape[0] < 2:
        raise ValueError("quadratic cores need d >= 2")
    if not np.array_equal(Q, Q.T):
        raise ValueError("Q must be symmetric")
    return Q


def _first_core(Q):
    g = _poly_matrix(1, 3)
    g[0, 0, CONST] = 1.0
    g[0, 1, LIN] = 1.0
    g[0, 2, QUAD] = Q[0, 0]
    return g


def _last_core(Q):
    d = Q.shape[0]
    g = _poly_matrix(3, 1)
    g[0, 0, QUAD] = Q[d - 1, d - 1]
    g[1, 0, LIN] = 1.0
    g[2, 0, CONST] = 1.0
    return g


def _left_core(Q, j):
    # 1-based j; maps [1, x_1..x_{j-1}, q] to [1, x_1..x_j, q']
    g = _poly_matrix(j + 1, j + 2)
    g[0, 0, CONST] = 1.0
    g[0, j, LIN] = 1.0
    g[0, j + 1, QUAD] = Q[j - 1, j - 1]
    for i in range(1, j):
        g[i, i, CONST] = 1.0
        g[i, j + 1, LIN] = 2.0 * Q[i - 1, j - 1]
    g[j, j + 1, CONST] = 1.0
    return g


def _right_core(Q, j):
    # 1-based j; maps [q', x_{j+1}..x_d, 1] to [q, x_j..x_d, 1]
    d = Q.shape[0]
    m = d - j
    g = _poly_matrix(m + 3, m + 2)
    g[0, 0, CONST] = 1.0
    for i in range(m):
        g[0, 1 + i, LIN] = 2.0 * Q[j - 1, j + i]
    g[0, m + 1, QUAD] = Q[j - 1, j - 1]
    g[1, m + 1, LIN] = 1.0
    for i in range(m):
        g[2 + i, 1 + i, CONST] = 1.0
    g[m + 2, m + 1, CONST] = 1.0
    return g


def _middle_core(Q, j):
    # odd d, 1-based j = (d + 1) / 2
    d = Q.shape[0]
    m = d - j
    g = _poly_matrix(j + 1, m + 2)
    g[0, 0, CONST] = 1.0
    for i in range(m):
        g[0, 1 + i, LIN] = 2.0 * Q[j - 1, j + i]
    g[0, m + 1, QUAD] = Q[j - 1, j - 1]
    for a in range(j - 1):
        for i in range(m):
            g[1 + a, 1 + i, CONST] = 2.0 * Q[a, j + i]
        g[1 + a, m + 1, LIN] = 2.0 * Q[a, j - 1]
    g[j, m + 1, CONST] = 1.0
    return g


def _correction(Q):
    d = Q.shape[0]
    h = d // 2
    D = np.zeros((h + 2, h + 2))
    D[0, 0] = 1.0
    D[1:h + 1, 1:h + 1] = 2.0 * Q[:h, h:]
    D[h + 1, h + 1] = 1.0
    return D


def build_quadratic_cores(Q) -> list[np.ndarray]:
    """Unsqueezed cores whose product is ``x^T Q x`` for every ``x``.

    For even d the correction matrix is absorbed into core ``d/2`` from
    the right.
    """
    Q = _check_q(Q)
    d = Q.shape[0]
    cores = []
    for j in range(1, d + 1):
        if j == 1:
            g = _first_core(Q)
        elif j == d:
            g = _last_core(Q)
        elif d % 2 == 1 and j == (d + 1) // 2:
            g = _middle_core(Q, j)
        elif j <= d // 2:
            g = _left_core(Q, j)
        else:
            g = _right_core(Q, j)
        cores.append(g)
    if d % 2 == 0:
        h = d // 2
        cores[h - 1] = np.einsum("abp,bc->acp", cores[h - 1], _correction(Q))
    return cores


def squeeze_cores(cores: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Drop identically zero columns/rows together with their partners.

    A zero column of core ``j`` makes the matching row of core ``j+1``
    irrelevant, and vice versa. Repeats until nothing changes. Zero means
    exactly zero coefficients.
    """
    cores = [np.array(c, dtype=float, copy=True) for c in cores]
    changed = True
    while changed:
        changed = False
        for j in range(len(cores) - 1):
            left, right = cores[j], cores[j + 1]
            zero_cols = ~np.any(left != 0, axis=(0, 2))
            zero_rows = ~np.any(right != 0, axis=(1, 2))
            drop = zero_cols | zero_rows
            if drop.any() and not drop.all():
                keep = ~drop
                cores[j] = left[:, keep]
                cores[j + 1] = right[keep]
                changed = True
    return cores


def eval_quadratic_cores(cores: Sequence[np.ndarray], x) -> float:
    """Evaluate the polynomial cores at ``x`` and multiply the chain."""
    x = np.asarray(x, dtype=float)
    if x.shape != (len(cores),):
        raise ValueError(f"x must have shape ({len(cores)},), got {x.shape}")
    row = np.ones((1, 1))
    for core, xj in zip(cores, x):
        row = row @ (core[..., CONST] + xj * core[..., LIN] + xj * xj * core[..., QUAD])
    return float(row[0, 0])


def core_ranks(cores: Sequence[np.ndarray]) -> list[int]:
    return [cores[0].shape[0]] + [c.shape[1] for c in cores]


def quadratic_rank_report(Q) -> list[int]:
    """Ranks ``[r_0, ..., r_d]`` of the squeezed cores of ``x^T Q x``."""
    return core_ranks(squeeze_cores(build_quadratic_cores(Q)))


def pattern_matrix(d: int, pairs, off_diagonal: float = 0.5) -> np.ndarray:
    """Unit diagonal plus ``off_diagonal`` at 0-based pairs ``(k, l)``."""
    Q = np.eye(d)
    for k, l in pairs:
        Q[k, l] = Q[l, k] = off_diagonal
    return Q


def expected_pair_ranks(d: int, pairs) -> list[int]:
    """Rank vector predicted by the pair-overlap rule for disjoint pairs.

    Baseline rank 2 on every inner bond; each pair ``(k, l)`` (0-based,
    ``k < l``) adds one to every bond separating ``x_k`` from ``x_l``.
    Pairs sharing an index do not add up this way (see the full case).
    """
    used = [i for p in pairs for i in p]
    if len(set(used)) != len(used):
        raise ValueError("pairs must be disjoint")
    ranks = [1] + [2] * (d - 1) + [1]
    for k, l in pairs:
        for bond in range(k + 1, l + 1):
            ranks[bond] += 1
    return ranks


def all_pair_placements(d: int, n_pairs: int):
    """Disjoint sets of ``n_pairs`` index pairs, each pair sorted."""
    pairs = list(itertools.combinations(range(d), 2))
    for combo in itertools.combinations(pairs, n_pairs):
        used = [i for p in combo for i in p]
        if len(set(used)) == len(used):
            yield combo


def expected_full_ranks(d: int) -> list[int]:
    """Ranks for a fully populated Q: 3, 4, ... up to the middle, then back."""
    inner = [min(b, d - b) + 2 for b in range(1, d)]
    return [1] + inner + [1]
