"""Checkable structural facts about transport LPs and their solutions.

Houses the optimal-support partition with its non-degeneracy margin, the
support-identification test used on restart logs, randomized total
unimodularity checks on the materialized constraint matrix, and restart
length bounds derived from the rational grid spacing of the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .instance import OTProblem
from .kkt import Iterate
from .operator import OTShape, materialize_A

TU_INVERSE_TOL = 1e-9
RATIONAL_TOL = 1e-9


@dataclass
class Partition:
    """Disjoint cover of the plan cells by optimal-support role.

    N holds strictly positive reduced costs, B1 the optimal support, B2 the
    degenerate remainder; delta is the smaller of the minimum scaled reduced
    cost over N and the minimum optimal mass over B1. The cost matrix it was
    built from rides along so identification checks can recompute reduced
    costs.
    """

    N: set
    B1: set
    B2: set
    delta: float
    cost: np.ndarray | None = field(default=None, repr=False)


@dataclass
class TheoryBounds:
    H: float
    Delta: float
    local_restart_bound: float
    global_restart_bound: float


def data_infinity_norm(prob: OTProblem) -> float:
    return float(max(np.abs(prob.C).max(), np.abs(prob.f).max(), np.abs(prob.g).max()))


def partition_and_delta(
    prob: OTProblem,
    X_star: np.ndarray,
    p_star: np.ndarray,
    q_star: np.ndarray,
    tol: float | None = None,
) -> Partition:
    """Classify cells of a (near-)optimal solution and compute its margin.

    ``tol`` separates "zero" from "positive" for floating-point inputs; it
    defaults to 1e-7 * (1 + max data magnitude).
    """
    if tol is None:
        tol = 1e-7 * (1.0 + data_infinity_norm(prob))
    m, n = prob.m, prob.n
    reduced = prob.C - p_star[:, None] - q_star[None, :]
    mask_N = reduced > tol
    mask_B1 = (np.abs(reduced) <= tol) & (X_star > tol)
    mask_B2 = ~(mask_N | mask_B1)

    B1 = {(int(i), int(j)) for i, j in zip(*np.nonzero(mask_B1))}
    if not B1:
        raise ValueError("inconsistent optimal input: empty support set")
    N = {(int(i), int(j)) for i, j in zip(*np.nonzero(mask_N))}
    B2 = {(int(i), int(j)) for i, j in zip(*np.nonzero(mask_B2))}

    delta = float(X_star[mask_B1].min())
    if N:
        delta = min(delta, float(reduced[mask_N].min()) / math.sqrt(m + n))
    return Partition(N=N, B1=B1, B2=B2, delta=delta, cost=prob.C)


def check_identification(partition: Partition, it: Iterate, tol: float) -> bool:
    """True iff the iterate's support pattern matches the optimal partition.

    Every N cell must carry mass at most tol with reduced cost above tol,
    and every B1 cell must carry mass above tol.
    """
    if partition.cost is None:
        raise ValueError("partition does not carry its cost matrix")
    if partition.N:
        idx = np.array(sorted(partition.N))
        rows, cols = idx[:, 0], idx[:, 1]
        if np.any(it.X[rows, cols] > tol):
            return False
        reduced = partition.cost[rows, cols] - it.p[rows] - it.q[cols]
        if np.any(reduced <= tol):
            return False
    if partition.B1:
        idx = np.array(sorted(partition.B1))
        if np.any(it.X[idx[:, 0], idx[:, 1]] <= tol):
            return False
    return True


def tu_submatrix_check(shape: OTShape, trials: int = 200, seed: int = 0) -> bool:
    """Randomized inverse check of total unimodularity.

    Samples ``trials`` random nonsingular square submatrices of the
    materialized constraint matrix, up to size 8, and verifies every inverse
    entry is within 1e-9 of {-1, 0, 1}. Determinants of 0/1 matrices this
    small are exact integers up to far below the 0.5 singularity threshold.
    """
    A = materialize_A(shape)
    n_rows, n_cols = A.shape
    max_size = min(8, n_rows, n_cols)
    rng = np.random.default_rng(seed)
    accepted = 0
    attempts = 0
    while accepted < trials:
        attempts += 1
        if attempts > 200 * trials:
            raise RuntimeError("could not sample enough nonsingular submatrices")
        s = int(rng.integers(1, max_size + 1))
        rows = rng.choice(n_rows, size=s, replace=False)
        cols = rng.choice(n_cols, size=s, replace=False)
        sub = A[np.ix_(rows, cols)]
        if abs(np.linalg.det(sub)) < 0.5:
            continue
        accepted += 1
        inv = np.linalg.inv(sub)
        nearest = np.round(inv)
        if np.max(np.abs(inv - nearest)) > TU_INVERSE_TOL:
            return False
        if np.any(np.abs(nearest) > 1):
            return False
    return True


def data_precision(prob: OTProblem, declared_denominator: int, beta: float = 0.5) -> TheoryBounds:
    """Recover the data grid spacing and the restart-length bounds it implies.

    All entries times the declared denominator must be within 1e-9 of
    integers; the spacing is the declared unit reduced by the gcd of the
    scaled entries. ``beta`` is the restart decay the bounds are quoted for.
    """
    if declared_denominator < 1:
        raise ValueError("declared denominator must be a positive integer")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    data = np.concatenate([prob.C.ravel(), prob.f, prob.g])
    scaled = data * declared_denominator
    nearest = np.round(scaled)
    if np.max(np.abs(scaled - nearest)) > RATIONAL_TOL:
        raise ValueError(
            f"non-rational entry at declared denominator {declared_denominator}"
        )
    ints = [int(abs(v)) for v in nearest if v != 0]
    common = math.gcd(*ints) if ints else 1
    delta = common / declared_denominator
    H = data_infinity_norm(prob)
    s = prob.m + prob.n
    return TheoryBounds(
        H=H,
        Delta=float(delta),
        local_restart_bound=(16.0 / beta) * s ** 1.5,
        global_restart_bound=(1536.0 / beta) * (H / delta) * s ** 3,
    )
