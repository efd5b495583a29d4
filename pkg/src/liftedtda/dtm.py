"""Distance to measure, the regularity constant c(mu), and a sublevel
Betti-number proxy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geometry import as_point_cloud
from .measure import EmpiricalMeasure


def _check_mass(m: float) -> float:
    m = float(m)
    if not 0.0 < m < 1.0:
        raise ValidationError(f"DTM mass parameter must lie in (0, 1), got {m}")
    return m


def dtm_field(mu: EmpiricalMeasure, m: float, queries, chunk: int = 256) -> np.ndarray:
    """DTM of ``mu`` with parameter ``m`` at every query point.

    With the distances to the atoms sorted increasingly, the quantile
    function ``t -> delta_t`` is a step function jumping at the cumulative
    weights, so ``(1/m) int_0^m delta_t^2 dt`` is a finite sum in which the
    last atom contributes only the part of its weight below ``m``.
    """
    m = _check_mass(m)
    Q = as_point_cloud(queries, mu.ambient_dim)
    X, w = mu.points, mu.weights
    out = np.empty(len(Q))
    for start in range(0, len(Q), chunk):
        q = Q[start:start + chunk]
        diff = q[:, None, :] - X[None, :, :]
        d2 = np.einsum("kjn,kjn->kj", diff, diff)
        order = np.argsort(d2, axis=1, kind="stable")
        d2s = np.take_along_axis(d2, order, axis=1)
        cum = np.cumsum(w[order], axis=1)
        prev = np.concatenate([np.zeros((len(q), 1)), cum[:, :-1]], axis=1)
        share = np.clip(np.minimum(cum, m) - prev, 0.0, None)
        out[start:start + chunk] = np.sqrt(np.sum(d2s * share, axis=1) / m)
    return out


def dtm(mu: EmpiricalMeasure, m: float, x) -> float:
    return float(dtm_field(mu, m, np.reshape(np.asarray(x, dtype=float), (1, -1)))[0])


def c_mu(mu: EmpiricalMeasure, m: float) -> float:
    """Largest DTM value over the support."""
    return float(dtm_field(mu, m, mu.points).max())


@dataclass(frozen=True)
class SublevelBetti:
    betti: tuple
    n_points: int
    empty: bool


def sublevel_betti(points, dtm_values, t: float, link_radius: float, max_dim: int = 1) -> SublevelBetti:
    """Betti numbers of a Rips complex on the points whose DTM is ``<= t``.

    This is a proxy for the continuous sublevel set: ``link_radius`` is the
    Rips edge-length threshold and is never tuned automatically.
    """
    from .persistence import betti_at_scale

    X = as_point_cloud(points)
    f = np.asarray(dtm_values, dtype=float)
    if len(f) != len(X):
        raise ValidationError("one DTM value per point is required")
    if not link_radius > 0:
        raise ValidationError("link_radius must be positive")
    keep = f <= t
    if not np.any(keep):
        return SublevelBetti(tuple([0] * (max_dim + 1)), 0, True)
    betti = betti_at_scale(X[keep], link_radius, max_dim)
    return SublevelBetti(tuple(betti), int(keep.sum()), False)
