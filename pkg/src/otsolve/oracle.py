"""Exhaustive exact solver for tiny transport instances.

Every vertex of the transportation polytope is the flow solution of some
spanning tree of the complete bipartite graph on the row and column nodes,
so minimizing over all trees with feasible flows gives the exact optimum.
The enumeration backtracks over cells with a union-find cycle check and
verifies itself against the closed-form spanning-tree count m^(n-1) n^(m-1).

Costs grow steeply with size; the guard keeps this a test oracle.
"""

from __future__ import annotations

import math

import numpy as np

from .instance import OTProblem

ORACLE_SIZE_LIMIT = 12
FLOW_FEASIBILITY_TOL = 1e-12


def spanning_tree_count(m: int, n: int) -> int:
    return m ** (n - 1) * n ** (m - 1)


def _enumerate_spanning_trees(m: int, n: int, visit) -> int:
    """Call ``visit(cells)`` for every spanning tree of K_{m,n}.

    ``cells`` is the list of flat plan indices (i * n + j) of the tree edges,
    valid only for the duration of the call. Returns the number of trees.
    """
    N = m + n
    E = m * n
    need = N - 1
    parent = list(range(N))
    size = [1] * N
    chosen: list[int] = []
    count = 0

    def find(x: int) -> int:
        while parent[x] != x:
            x = parent[x]
        return x

    def rec(pos: int, cnt: int) -> None:
        nonlocal count
        if cnt == need:
            count += 1
            visit(chosen)
            return
        if E - pos < need - cnt:
            return
        u = pos // n
        v = m + pos % n
        ru, rv = find(u), find(v)
        if ru != rv:
            if size[ru] < size[rv]:
                ru, rv = rv, ru
            parent[rv] = ru
            size[ru] += size[rv]
            chosen.append(pos)
            rec(pos + 1, cnt + 1)
            chosen.pop()
            size[ru] -= size[rv]
            parent[rv] = rv
        rec(pos + 1, cnt)

    rec(0, 0)
    return count


def _tree_flows(cells: list[int], m: int, n: int, b: list[float]):
    """Solve the tree's triangular flow system by leaf elimination."""
    N = m + n
    deg = [0] * N
    adj: list[list[tuple[int, int]]] = [[] for _ in range(N)]
    for e, c in enumerate(cells):
        u = c // n
        v = m + c % n
        adj[u].append((e, v))
        adj[v].append((e, u))
        deg[u] += 1
        deg[v] += 1
    resid = list(b)
    used = [False] * len(cells)
    flows = [0.0] * len(cells)
    stack = [v for v in range(N) if deg[v] == 1]
    while stack:
        v = stack.pop()
        if deg[v] != 1:
            continue
        for e, u in adj[v]:
            if not used[e]:
                break
        used[e] = True
        flows[e] = resid[v]
        resid[u] -= resid[v]
        resid[v] = 0.0
        deg[v] = 0
        deg[u] -= 1
        if deg[u] == 1:
            stack.append(u)
    return flows


def _check_size(prob: OTProblem) -> None:
    if prob.m + prob.n > ORACLE_SIZE_LIMIT:
        raise ValueError(
            f"oracle limited to m + n <= {ORACLE_SIZE_LIMIT}, got {prob.m + prob.n}"
        )


def exact_oracle(prob: OTProblem) -> tuple[float, np.ndarray]:
    """Exact LP optimum (objective, plan) by exhaustive vertex enumeration."""
    m, n = prob.m, prob.n
    _check_size(prob)
    cvec = prob.C.ravel().tolist()
    b = prob.f.tolist() + prob.g.tolist()
    best_cost = math.inf
    best_cells: list[int] | None = None
    best_flows: list[float] | None = None

    def visit(cells: list[int]) -> None:
        nonlocal best_cost, best_cells, best_flows
        flows = _tree_flows(cells, m, n, b)
        if min(flows) < -FLOW_FEASIBILITY_TOL:
            return
        cost = sum(fl * cvec[c] for fl, c in zip(flows, cells))
        if cost < best_cost:
            best_cost = cost
            best_cells = list(cells)
            best_flows = flows

    count = _enumerate_spanning_trees(m, n, visit)
    if count != spanning_tree_count(m, n):
        raise RuntimeError("spanning-tree enumeration self-check failed")
    if best_cells is None:
        raise RuntimeError("no feasible basic solution found")
    plan = np.zeros((m, n))
    for fl, c in zip(best_flows, best_cells):
        plan[c // n, c % n] = max(fl, 0.0)
    return float(best_cost), plan


def _tree_duals(cells: list[int], C: np.ndarray, m: int, n: int):
    """Dual vectors satisfying p_i + q_j = C_ij on every tree edge."""
    p = np.full(m, np.nan)
    q = np.full(n, np.nan)
    adj: list[list[int]] = [[] for _ in range(m + n)]
    for c in cells:
        adj[c // n].append(c)
        adj[m + c % n].append(c)
    p[0] = 0.0
    stack = [0]
    while stack:
        v = stack.pop()
        for c in adj[v]:
            i, j = c // n, c % n
            if v < m and math.isnan(q[j]):
                q[j] = C[i, j] - p[i]
                stack.append(m + j)
            elif v >= m and math.isnan(p[i]):
                p[i] = C[i, j] - q[j]
                stack.append(i)
    return p, q


def optimal_basis_duals(prob: OTProblem) -> tuple[np.ndarray, np.ndarray]:
    """Exact optimal duals from a dual-feasible minimum-cost tree.

    Enumerates all trees tied (within 1e-9) for the optimal cost and returns
    the duals of the first one whose reduced costs are all non-negative.
    Raises if none qualifies, which only happens for degenerate optima whose
    dual-feasible basis was not visited within the tie tolerance.
    """
    m, n = prob.m, prob.n
    _check_size(prob)
    cvec = prob.C.ravel().tolist()
    b = prob.f.tolist() + prob.g.tolist()
    best_cost = math.inf
    tied: list[list[int]] = []

    def visit(cells: list[int]) -> None:
        nonlocal best_cost, tied
        flows = _tree_flows(cells, m, n, b)
        if min(flows) < -FLOW_FEASIBILITY_TOL:
            return
        cost = sum(fl * cvec[c] for fl, c in zip(flows, cells))
        window = 1e-9 * (1.0 + abs(min(best_cost, cost)))
        if cost < best_cost - window:
            best_cost = cost
            tied = [list(cells)]
        elif cost <= best_cost + window:
            best_cost = min(best_cost, cost)
            tied.append(list(cells))

    count = _enumerate_spanning_trees(m, n, visit)
    if count != spanning_tree_count(m, n):
        raise RuntimeError("spanning-tree enumeration self-check failed")
    feas_tol = 1e-9 * (1.0 + float(np.abs(prob.C).max()))
    for cells in tied:
        p, q = _tree_duals(cells, prob.C, m, n)
        reduced = prob.C - p[:, None] - q[None, :]
        if float(reduced.min()) >= -feas_tol:
            return p, q
    raise RuntimeError("degenerate optimum: no dual-feasible optimal tree found")
