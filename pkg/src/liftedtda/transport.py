"""Exact optimal transport between empirical measures and the bottleneck
distance between persistence diagrams."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.spatial.distance import cdist

from ._simplex import network_simplex
from .errors import CapacityError, ValidationError
from .geometry import LiftedCloud
from .measure import EmpiricalMeasure, lifted_measure_embedded

MAX_ATOMS = 20000
MAX_ARCS = 50_000_000
PIVOT_TOL = 1e-12
MARGINAL_TOL = 1e-9


@dataclass(frozen=True)
class TransportPlan:
    """Sparse coupling: ``mass[k]`` moves from source ``rows[k]`` to target
    ``cols[k]``.  ``cost`` is the total transport cost ``sum mass * c``."""

    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    cost: float
    shape: tuple

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.rows, weights=self.mass, minlength=self.shape[0])

    def col_sums(self) -> np.ndarray:
        return np.bincount(self.cols, weights=self.mass, minlength=self.shape[1])

    def dense(self) -> np.ndarray:
        P = np.zeros(self.shape)
        np.add.at(P, (self.rows, self.cols), self.mass)
        return P

    def check(self, a, b, tol: float = MARGINAL_TOL) -> None:
        if np.any(self.mass < 0):
            raise ValidationError("negative mass in transport plan")
        if np.max(np.abs(self.row_sums() - a)) > tol or np.max(np.abs(self.col_sums() - b)) > tol:
            raise ValidationError("transport plan marginals do not match the measures")


def cost_matrix(X, Y, p: float) -> np.ndarray:
    D = cdist(X, Y)
    return D if p == 1 else D ** p


def _check_sizes(n1: int, n2: int) -> None:
    if n1 + n2 > MAX_ATOMS or n1 * n2 > MAX_ARCS:
        raise CapacityError(
            f"transport problem with {n1} x {n2} atoms exceeds the exact-solver limit "
            f"({MAX_ATOMS} atoms combined, {MAX_ARCS} arcs)")


def solve_transport(C: np.ndarray, a: np.ndarray, b: np.ndarray, method: str = "auto") -> TransportPlan:
    """Exact minimum-cost coupling of ``a`` and ``b`` for cost matrix ``C``.

    ``method`` is ``"simplex"``, ``"assignment"`` (equal sizes and uniform
    weights only) or ``"auto"``.
    """
    C = np.ascontiguousarray(C, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n1, n2 = C.shape
    if (n1, n2) != (len(a), len(b)):
        raise ValidationError("cost matrix shape does not match the marginals")
    _check_sizes(n1, n2)
    uniform = n1 == n2 and np.all(a == a[0]) and np.all(b == b[0])
    if method == "auto":
        method = "assignment" if uniform else "simplex"
    if method == "assignment":
        if not uniform:
            raise ValidationError("assignment solver needs equal sizes and uniform weights")
        rows, cols = linear_sum_assignment(C)
        mass = np.full(n1, 1.0 / n1)
        return TransportPlan(rows, cols, mass, float(np.sum(C[rows, cols] * mass)), (n1, n2))
    if method != "simplex":
        raise ValidationError(f"unknown transport method {method!r}")

    scale = float(C.max()) if C.size else 0.0
    Cn = (C / scale if scale > 0 else C).ravel()
    flow, art, status, _ = network_simplex(Cn, a, b, PIVOT_TOL, 100 * (n1 + n2) ** 2 + 1000)
    if status != 0:
        raise CapacityError("network simplex did not converge within its iteration budget")
    if art.max(initial=0.0) > MARGINAL_TOL:
        raise ValidationError("marginals have different total mass")
    idx = np.flatnonzero(flow > 0)
    rows, cols = np.divmod(idx, n2)
    mass = flow[idx]
    return TransportPlan(rows, cols, mass, float(np.dot(mass, C.ravel()[idx])), (n1, n2))


def wasserstein(mu: EmpiricalMeasure, nu: EmpiricalMeasure, p: float = 2.0, method: str = "auto"):
    """Exact ``p``-Wasserstein distance; returns ``(value, plan)``."""
    if not p >= 1:
        raise ValidationError("p must be at least 1")
    if mu.ambient_dim != nu.ambient_dim:
        raise ValidationError(f"ambient dimensions differ: {mu.ambient_dim} vs {nu.ambient_dim}")
    _check_sizes(len(mu), len(nu))
    plan = solve_transport(cost_matrix(mu.points, nu.points, p), mu.weights, nu.weights, method)
    return max(plan.cost, 0.0) ** (1.0 / p), plan


def gamma_wasserstein(alpha: LiftedCloud, beta: LiftedCloud, p: float = 2.0, gamma: float = 1.0,
                      method: str = "auto") -> float:
    """Wasserstein distance between lifted clouds for the gamma-norm."""
    mu = lifted_measure_embedded(alpha, gamma)
    nu = lifted_measure_embedded(beta, gamma)
    return wasserstein(mu, nu, p, method)[0]


def _as_pairs(P) -> np.ndarray:
    P = np.asarray(P, dtype=float).reshape(-1, 2)
    if np.any(np.isnan(P)):
        raise ValidationError("diagram contains NaN")
    if np.any(P[:, 1] < P[:, 0]):
        raise ValidationError("diagram point with death < birth")
    return P


def _finite_bottleneck(A: np.ndarray, B: np.ndarray) -> float:
    k1, k2 = len(A), len(B)
    if k1 == 0 and k2 == 0:
        return 0.0
    hA = (A[:, 1] - A[:, 0]) / 2
    hB = (B[:, 1] - B[:, 0]) / 2
    D = cdist(A, B, metric="chebyshev") if k1 and k2 else np.zeros((k1, k2))
    cand = np.unique(np.concatenate([[0.0], D.ravel(), hA, hB]))

    # Left: A then diagonal copies of B.  Right: B then diagonal copies of A.
    def feasible(t):
        G = np.block([[D <= t, np.diag(hA <= t)],
                      [np.diag(hB <= t), np.ones((k2, k1), dtype=bool)]])
        match = maximum_bipartite_matching(csr_matrix(G), perm_type="column")
        return bool(np.all(match >= 0))

    lo, hi = 0, len(cand) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(cand[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cand[lo])


def bottleneck_pairs(P, Q) -> float:
    """Bottleneck distance between two single-dimension diagrams given as
    ``(k, 2)`` birth/death arrays; ``inf`` deaths are allowed.

    Points may be matched to the diagonal at cost half their persistence.
    Infinite bars are matched among themselves by sorted births; differing
    counts of infinite bars give ``inf``.
    """
    P, Q = _as_pairs(P), _as_pairs(Q)
    pinf, qinf = np.isinf(P[:, 1]), np.isinf(Q[:, 1])
    if pinf.sum() != qinf.sum():
        return float("inf")
    ess = 0.0
    if pinf.any():
        ess = float(np.max(np.abs(np.sort(P[pinf, 0]) - np.sort(Q[qinf, 0]))))
    return max(ess, _finite_bottleneck(P[~pinf], Q[~qinf]))


def bottleneck_distance(D1, D2, dim: int | None = None) -> float:
    """Bottleneck distance between persistence diagrams.

    With ``dim`` given, only that homology dimension is compared; otherwise
    the maximum over all dimensions present in either diagram.
    """
    dims = [dim] if dim is not None else sorted(set(D1.dims()) | set(D2.dims()))
    return max((bottleneck_pairs(D1.pairs(k), D2.pairs(k)) for k in dims), default=0.0)
