"""Empirical measures, local covariance matrices and the lifted measure."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyNeighborhoodError, ValidationError
from .geometry import LiftedCloud, as_point_cloud

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Finite probability measure ``sum_i w_i delta_{x_i}``."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        X = as_point_cloud(self.points)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(w) != len(X):
            raise ValidationError("one weight per point is required")
        if len(X) == 0:
            raise ValidationError("an empirical measure needs at least one atom")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValidationError("weights must be positive and finite")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"weights sum to {w.sum()!r}, not 1")
        X.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", X)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "EmpiricalMeasure":
        X = as_point_cloud(points)
        return cls(X, np.full(len(X), 1.0 / len(X)))

    @classmethod
    def normalized(cls, points, weights) -> "EmpiricalMeasure":
        w = np.asarray(weights, dtype=float)
        return cls(points, w / w.sum())

    def __len__(self):
        return len(self.points)

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))


@dataclass(frozen=True)
class LocalCovariance:
    matrix: np.ndarray
    ball_mass: float
    radius: float


def _ball_pairs(tree: cKDTree, atoms: np.ndarray, queries: np.ndarray, r: float):
    """Index pairs ``(query, atom)`` with ``|q - x| <= r`` (closed ball).

    The tree only proposes candidates; membership is decided on the
    directly computed squared distance so results match brute force.
    """
    lists = tree.query_ball_point(queries, r * (1 + 1e-9))
    rows = np.repeat(np.arange(len(queries)), [len(l) for l in lists])
    cols = np.fromiter((j for l in lists for j in l), dtype=np.intp, count=len(rows))
    diff = queries[rows] - atoms[cols]
    keep = np.einsum("kn,kn->k", diff, diff) <= r * r
    return rows[keep], cols[keep], diff[keep]


def local_covariances(nu: EmpiricalMeasure, queries, r: float, chunk: int = 1024):
    """Local covariance matrices at many points at once.

    Returns ``(matrices, ball_masses)`` of shapes ``(k, n, n)`` and ``(k,)``.
    """
    if not r > 0:
        raise ValidationError("radius must be positive")
    Q = as_point_cloud(queries, nu.ambient_dim)
    n = nu.ambient_dim
    tree = cKDTree(nu.points)
    S = np.empty((len(Q), n, n))
    mass = np.empty(len(Q))
    for start in range(0, len(Q), chunk):
        q = Q[start:start + chunk]
        rows, cols, diff = _ball_pairs(tree, nu.points, q, r)
        w = nu.weights[cols]
        m = np.bincount(rows, weights=w, minlength=len(q))
        if np.any(m <= 0):
            bad = start + np.flatnonzero(m <= 0)[:5]
            raise EmptyNeighborhoodError(
                f"closed ball of radius {r} is empty around queries {bad.tolist()}")
        for a in range(n):
            for b in range(a, n):
                v = np.bincount(rows, weights=w * diff[:, a] * diff[:, b], minlength=len(q)) / m
                S[start:start + chunk, a, b] = v
                S[start:start + chunk, b, a] = v
        mass[start:start + chunk] = m
    return S, mass


def local_covariance(nu: EmpiricalMeasure, x, r: float) -> LocalCovariance:
    """Second moment of ``nu`` restricted to the closed ball ``B(x, r)``,
    centred at ``x`` and divided by the ball mass."""
    S, mass = local_covariances(nu, np.reshape(np.asarray(x, dtype=float), (1, -1)), r)
    return LocalCovariance(S[0], float(mass[0]), float(r))


def normalized_local_covariance(nu: EmpiricalMeasure, x, r: float) -> np.ndarray:
    return local_covariance(nu, x, r).matrix / (r * r)


def lift_measure(nu: EmpiricalMeasure, r: float) -> LiftedCloud:
    """Attach to each atom its normalized local covariance matrix.

    The weights of ``nu`` are carried over unchanged.
    """
    S, _ = local_covariances(nu, nu.points, r)
    return LiftedCloud(nu.points.copy(), S / (r * r), nu.weights.copy(), None)


def gamma_embed(lc: LiftedCloud, gamma: float) -> np.ndarray:
    """Map ``(x, A) -> (x, gamma * vec(A))`` (row-major), an isometry from the
    gamma-norm to the Euclidean norm of ``R^(n + n^2)``."""
    if not gamma > 0:
        raise ValidationError("gamma must be positive")
    M = lc.matrices.reshape(len(lc), -1)
    return np.hstack([lc.points, gamma * M])


def lifted_measure_embedded(lc: LiftedCloud, gamma: float) -> EmpiricalMeasure:
    """The lifted cloud as an empirical measure in the gamma-embedded space."""
    return EmpiricalMeasure(gamma_embed(lc, gamma), lc.weights)


def frobenius(A, B=None):
    """Frobenius norm of ``A`` (or of ``A - B``) over the last two axes."""
    D = np.asarray(A, dtype=float) if B is None else np.asarray(A, dtype=float) - np.asarray(B, dtype=float)
    return np.sqrt(np.sum(D * D, axis=(-2, -1)))


def tangent_error_field(lifted: LiftedCloud, exact: LiftedCloud) -> np.ndarray:
    """Per-entry Frobenius distance between estimated and exact matrices."""
    if len(lifted) != len(exact):
        raise ValidationError(f"length mismatch: {len(lifted)} estimated vs {len(exact)} exact")
    return frobenius(lifted.matrices, exact.matrices)
