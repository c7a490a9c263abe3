"""Optimal-transport solvers over a segment-pair cost matrix.

Three objectives over ``C`` in [0, 1]^(m x n) with row marginals ``p`` and
column marginals ``q``:

* assignment: the cheapest deterministic row-to-column mapping, injective
  when m <= n and surjective (every column covered) when m >= n, each row's
  cost weighted by its probability mass;
* exact: the transportation LP, solved by the transportation simplex with
  Bland's anti-cycling rule; the returned dual potentials certify
  optimality via complementary slackness;
* entropic: transport cost plus ``epsilon * KL(coupling || p (x) q)``,
  solved by log-domain Sinkhorn iterations.

Instances here are document sentence counts (tens at most), so exact
pivoting is cheap and no sparse machinery is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

from .errors import SolverNonconvergence

KIND_ASSIGNMENT = "assignment"
KIND_EXACT = "exact"
KIND_ENTROPIC = "entropic"

_ENTER_TOL = 1e-11  # reduced-cost threshold for simplex entering variables
_WEIGHT_SUM_TOL = 1e-6


@dataclass(frozen=True)
class EntropicParams:
    """Sinkhorn settings: regularization weight and stopping rule."""

    epsilon: float
    max_iterations: int = 10_000
    tolerance: float = 1e-9

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon!r}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """A coupling with its objective value and solver metadata.

    ``objective`` is always the transport-cost part ``sum(coupling * C)``;
    for entropic plans the regularization term ``epsilon * KL`` is reported
    separately in ``kl_penalty``. ``mapping`` is set for assignment plans
    (column index per row). ``dual_row``/``dual_col`` are the LP potentials
    for exact plans. ``converged`` is False when Sinkhorn hit its iteration
    cap; such plans are still usable downstream.
    """

    kind: str
    coupling: np.ndarray
    objective: float
    kl_penalty: float = 0.0
    mapping: tuple[int, ...] | None = None
    dual_row: np.ndarray | None = None
    dual_col: np.ndarray | None = None
    converged: bool = True
    iterations: int = 0

    @property
    def total_objective(self) -> float:
        return self.objective + self.kl_penalty

    def to_jsonable(self) -> dict:
        out: dict = {
            "kind": self.kind,
            "coupling": [[float(v) for v in row] for row in self.coupling],
            "objective": self.objective,
            "converged": self.converged,
            "iterations": self.iterations,
        }
        if self.kind == KIND_ENTROPIC:
            out["kl_penalty"] = self.kl_penalty
            out["total_objective"] = self.total_objective
        if self.mapping is not None:
            out["mapping"] = list(self.mapping)
        if self.dual_row is not None and self.dual_col is not None:
            out["dual_row"] = [float(v) for v in self.dual_row]
            out["dual_col"] = [float(v) for v in self.dual_col]
        return out


def _validated(C, p_h, p_y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.size == 0:
        raise ValueError(f"cost matrix must be a non-empty 2-D array, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix contains non-finite entries")
    if C.min() < -1e-9:
        raise ValueError(f"cost entries must be non-negative, got {C.min()}")
    # Engine-built cost matrices live in [0, 1]; the solvers themselves only
    # need non-negativity (costs scale linearly, so any positive rescaling
    # of a valid matrix is still solvable).
    C = np.clip(C, 0.0, None)
    m, n = C.shape
    a = np.asarray(p_h, dtype=np.float64).reshape(-1)
    b = np.asarray(p_y, dtype=np.float64).reshape(-1)
    if a.size != m or b.size != n:
        raise ValueError(f"weight lengths ({a.size}, {b.size}) do not match cost shape {C.shape}")
    for name, w in (("p_h", a), ("p_y", b)):
        if w.min() < -1e-12:
            raise ValueError(f"{name} has negative mass")
        if abs(w.sum() - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError(f"{name} must sum to 1, got {w.sum()!r}")
    return C, np.clip(a, 0.0, None), np.clip(b, 0.0, None)


def solve_la(C, p_h, p_y) -> TransportPlan:
    """Cheapest deterministic mapping under the injective/surjective rule.

    Minimizes ``sum_i p_h[i] * C[i, mapping[i]]`` over mappings that are
    injective when m <= n and cover every column when m >= n. The coupling
    places each row's full mass on its mapped column, so it generally does
    not match the column marginals.
    """
    C, a, b = _validated(C, p_h, p_y)
    m, n = C.shape
    weighted = a[:, None] * C
    mapping = np.empty(m, dtype=np.int64)
    if m <= n:
        rows, cols = linear_sum_assignment(weighted)
        mapping[rows] = cols
    else:
        # Every column must be covered. Give each row its cheapest column,
        # then pay the cheapest extra cost of designating one distinct row
        # per column; that residual problem is a rectangular assignment.
        mapping = np.argmin(weighted, axis=1)
        residual = (weighted - weighted.min(axis=1, keepdims=True)).T
        cols, rows = linear_sum_assignment(residual)
        mapping[rows] = cols
    coupling = np.zeros((m, n))
    coupling[np.arange(m), mapping] = a
    objective = float(np.sum(a * C[np.arange(m), mapping]))
    return TransportPlan(kind=KIND_ASSIGNMENT, coupling=coupling,
                         objective=objective, mapping=tuple(int(j) for j in mapping))


def _northwest_corner(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Initial basic feasible solution with exactly m + n - 1 basic cells."""
    m, n = a.size, b.size
    X = np.zeros((m, n))
    basis: list[tuple[int, int]] = []
    ra = a.copy()
    rb = b.copy()
    i = j = 0
    while True:
        q = min(ra[i], rb[j])
        X[i, j] = q
        basis.append((i, j))
        ra[i] -= q
        rb[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if i < m - 1 and (ra[i] <= rb[j] or j == n - 1):
            i += 1
        else:
            j += 1
    return X, basis


def _tree_adjacency(basis: set[tuple[int, int]], m: int, n: int):
    row_adj: list[list[int]] = [[] for _ in range(m)]
    col_adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in basis:
        row_adj[i].append(j)
        col_adj[j].append(i)
    return row_adj, col_adj


def _duals(C: np.ndarray, basis: set[tuple[int, int]], m: int, n: int):
    """Potentials f, g with f[i] + g[j] == C[i, j] on every basic cell."""
    row_adj, col_adj = _tree_adjacency(basis, m, n)
    f = np.full(m, np.nan)
    g = np.full(n, np.nan)
    f[0] = 0.0
    stack: list[tuple[bool, int]] = [(True, 0)]  # (is_row, index)
    while stack:
        is_row, idx = stack.pop()
        if is_row:
            for j in row_adj[idx]:
                if np.isnan(g[j]):
                    g[j] = C[idx, j] - f[idx]
                    stack.append((False, j))
        else:
            for i in col_adj[idx]:
                if np.isnan(f[i]):
                    f[i] = C[i, idx] - g[idx]
                    stack.append((True, i))
    if np.isnan(f).any() or np.isnan(g).any():
        raise SolverNonconvergence("basis lost spanning-tree structure")
    return f, g


def _cycle_cells(basis: set[tuple[int, int]], entering: tuple[int, int],
                 m: int, n: int) -> list[tuple[int, int]]:
    """Cells of the unique cycle closed by ``entering``, entering first.

    Signs alternate along the returned list starting with + at the entering
    cell, so cells at odd positions lose mass during the pivot.
    """
    row_adj, col_adj = _tree_adjacency(basis, m, n)
    start = ("r", entering[0])
    goal = ("c", entering[1])
    parents: dict[tuple[str, int], tuple[str, int]] = {start: start}
    queue = [start]
    while queue:
        node = queue.pop()
        if node == goal:
            break
        kind, idx = node
        neighbors = ((("c", j) for j in row_adj[idx]) if kind == "r"
                     else (("r", i) for i in col_adj[idx]))
        for nxt in neighbors:
            if nxt not in parents:
                parents[nxt] = node
                queue.append(nxt)
    if goal not in parents:
        raise SolverNonconvergence("entering cell not connected to basis tree")
    path = [goal]
    while path[-1] != start:
        path.append(parents[path[-1]])
    path.reverse()
    cells = [entering]
    for left, right in zip(path, path[1:]):
        (ka, ia), (kb, ib) = left, right
        cells.append((ia, ib) if ka == "r" else (ib, ia))
    return cells


def solve_wd(C, p_h, p_y) -> TransportPlan:
    """Exact transportation LP via the transportation simplex.

    Returns an optimal coupling whose marginals match ``p_h`` and ``p_y``,
    together with dual potentials satisfying ``f[i] + g[j] <= C[i, j]``
    everywhere and equality on the support of the coupling.
    """
    C, a, b = _validated(C, p_h, p_y)
    m, n = C.shape
    if m == 1 or n == 1:
        # The coupling is forced by the marginals (and is the product measure).
        coupling = np.outer(a, b)
        dual_row = np.zeros(m) if m == 1 else C[:, 0].copy()
        dual_col = C[0, :].copy() if m == 1 else np.zeros(n)
        return TransportPlan(kind=KIND_EXACT, coupling=coupling,
                             objective=float(np.sum(coupling * C)),
                             dual_row=dual_row, dual_col=dual_col)

    X, basis_list = _northwest_corner(a, b)
    basis = set(basis_list)
    max_pivots = 10_000 + 100 * (m + n)
    pivots = 0
    while True:
        f, g = _duals(C, basis, m, n)
        reduced = C - f[:, None] - g[None, :]
        entering = None
        for i, j in np.argwhere(reduced < -_ENTER_TOL):  # row-major: Bland's order
            cell = (int(i), int(j))
            if cell not in basis:
                entering = cell
                break
        if entering is None:
            break
        pivots += 1
        if pivots > max_pivots:
            raise SolverNonconvergence(
                f"transportation simplex exceeded {max_pivots} pivots on a "
                f"{m}x{n} instance")
        cycle = _cycle_cells(basis, entering, m, n)
        minus_cells = cycle[1::2]
        theta = min(X[c] for c in minus_cells)
        leaving = min(c for c in minus_cells if X[c] == theta)
        for idx, cell in enumerate(cycle):
            if idx % 2 == 0:
                X[cell] += theta
            else:
                X[cell] -= theta
        X[leaving] = 0.0
        basis.remove(leaving)
        basis.add(entering)
    return TransportPlan(kind=KIND_EXACT, coupling=X,
                         objective=float(np.sum(X * C)),
                         dual_row=f, dual_col=g, iterations=pivots)


def solve_ewd(C, p_h, p_y, params: EntropicParams) -> TransportPlan:
    """Entropy-regularized transport via log-domain Sinkhorn iterations.

    Minimizes ``sum(coupling * C) + epsilon * KL(coupling || p (x) q)``.
    Stops when the L1 marginal violation drops below ``params.tolerance``;
    hitting ``params.max_iterations`` flags the plan as non-converged
    rather than raising.
    """
    C, a, b = _validated(C, p_h, p_y)
    m, n = C.shape
    eps = params.epsilon
    if m == 1 or n == 1:
        # Forced coupling; it equals the product measure, so KL is zero.
        coupling = np.outer(a, b)
        return TransportPlan(kind=KIND_ENTROPIC, coupling=coupling,
                             objective=float(np.sum(coupling * C)),
                             kl_penalty=0.0)

    log_a = np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), -np.inf)
    log_b = np.where(b > 0, np.log(np.where(b > 0, b, 1.0)), -np.inf)
    f = np.zeros(m)
    g = np.zeros(n)
    converged = False
    iterations = 0
    coupling = np.outer(a, b)
    for iterations in range(1, params.max_iterations + 1):
        f = eps * (log_a - logsumexp((g[None, :] - C) / eps, axis=1))
        g = eps * (log_b - logsumexp((f[:, None] - C) / eps, axis=0))
        coupling = np.exp((f[:, None] + g[None, :] - C) / eps)
        # Column marginals are exact right after the g-update; only rows drift.
        err = float(np.abs(coupling.sum(axis=1) - a).sum()
                    + np.abs(coupling.sum(axis=0) - b).sum())
        if err < params.tolerance:
            converged = True
            break

    objective = float(np.sum(coupling * C))
    mask = coupling > 0
    log_ref = log_a[:, None] + log_b[None, :]
    kl = float(np.sum(coupling[mask] * (np.log(coupling[mask]) - log_ref[mask])))
    return TransportPlan(kind=KIND_ENTROPIC, coupling=coupling,
                         objective=objective,
                         kl_penalty=eps * max(kl, 0.0),
                         converged=converged, iterations=iterations)
