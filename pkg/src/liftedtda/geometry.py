"""Parametric immersed shapes, exact tangent lifts, sampling and normal reach.

Parameters are always handled as arrays of shape ``(k, d)``; one-dimensional
shapes also accept flat arrays of shape ``(k,)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import ImmersionError, ResolutionError, ValidationError

RNG_NAME = "numpy.random.Philox (Philox4x64-10)"

# Relative singular-value threshold below which a Jacobian counts as rank deficient.
_RANK_TOL = 1e-10


def make_rng(seed: int) -> np.random.Generator:
    """Seeded counter-based generator used by every sampling routine."""
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class ParametricShape:
    """An immersion ``u: M0 -> R^n`` described on a box of parameters.

    ``domain`` lists one ``(lo, hi, periodic)`` triple per intrinsic
    coordinate. For curves, ``components`` splits the parameter interval
    into the closed curves that make up ``M0`` (a single interval for a
    connected curve); each component is periodic on its own.
    """

    shape_id: str
    intrinsic_dim: int
    ambient_dim: int
    domain: tuple
    eval_fn: Callable[[np.ndarray], np.ndarray]
    jacobian_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    components: Optional[tuple] = None
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.intrinsic_dim not in (1, 2):
            raise ValidationError("intrinsic_dim must be 1 or 2")
        if len(self.domain) != self.intrinsic_dim:
            raise ValidationError("domain needs one interval per intrinsic coordinate")
        if self.components is None:
            lo, hi, _ = self.domain[0]
            object.__setattr__(self, "components", ((float(lo), float(hi)),))

    def as_params(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            t = t.reshape(1, 1)
        elif t.ndim == 1:
            t = t.reshape(-1, 1) if self.intrinsic_dim == 1 else t.reshape(1, -1)
        if t.shape[1] != self.intrinsic_dim:
            raise ValidationError(
                f"expected {self.intrinsic_dim} parameter(s) per point, got {t.shape[1]}")
        for k, (lo, hi, _) in enumerate(self.domain):
            if np.any(t[:, k] < lo - 1e-12) or np.any(t[:, k] > hi + 1e-12):
                raise ValidationError(f"parameter {k} outside [{lo}, {hi}]")
        return t

    def eval(self, t) -> np.ndarray:
        return np.asarray(self.eval_fn(self.as_params(t)), dtype=float)

    def jacobian(self, t) -> np.ndarray:
        """Jacobian matrices, shape ``(k, n, d)``."""
        t = self.as_params(t)
        if self.jacobian_fn is not None:
            return np.asarray(self.jacobian_fn(t), dtype=float)
        # central differences for custom shapes without an analytic Jacobian
        h = 1e-6
        cols = []
        for k in range(self.intrinsic_dim):
            e = np.zeros(self.intrinsic_dim)
            e[k] = h
            cols.append((self.eval_fn(t + e) - self.eval_fn(t - e)) / (2 * h))
        return np.stack(cols, axis=-1)

    def volume_element(self, t) -> np.ndarray:
        """Speed (d=1) or area element (d=2) at each parameter."""
        J = self.jacobian(t)
        G = np.einsum("kni,knj->kij", J, J)
        return np.sqrt(np.abs(np.linalg.det(G)))


# --------------------------------------------------------------------------
# Built-in shapes


def circle(radius: float = 1.0) -> ParametricShape:
    R = float(radius)

    def f(t):
        return np.stack([R * np.cos(t[:, 0]), R * np.sin(t[:, 0])], axis=-1)

    def jac(t):
        return np.stack([-R * np.sin(t[:, 0]), R * np.cos(t[:, 0])], axis=-1)[:, :, None]

    return ParametricShape("circle", 1, 2, ((0.0, 2 * np.pi, True),), f, jac,
                           info={"radius": R})


def lemniscate() -> ParametricShape:
    """Lemniscate of Bernoulli of diameter 2, crossing itself at the origin
    for ``t = pi/2`` and ``t = 3 pi/2``."""

    def f(t):
        s, c = np.sin(t[:, 0]), np.cos(t[:, 0])
        D = 1.0 + s * s
        return np.stack([c / D, s * c / D], axis=-1)

    def jac(t):
        s, c = np.sin(t[:, 0]), np.cos(t[:, 0])
        D = 1.0 + s * s
        dx = (-s * D - 2.0 * s * c * c) / D**2
        dy = ((c * c - s * s) * D - 2.0 * s * s * c * c) / D**2
        return np.stack([dx, dy], axis=-1)[:, :, None]

    return ParametricShape("lemniscate", 1, 2, ((0.0, 2 * np.pi, True),), f, jac)


def torus_figure8(R: float = 2.0, a: float = 0.6) -> ParametricShape:
    """Figure-8 torus: the curve ``a (sin th cos th, sin th)`` turned once in
    its own plane while swept around a circle of radius ``R``."""
    R, a = float(R), float(a)

    def parts(t):
        th, ph = t[:, 0], t[:, 1]
        l1, l2 = a * np.sin(th) * np.cos(th), a * np.sin(th)
        cp, sp = np.cos(ph), np.sin(ph)
        c1, c2 = cp * l1 - sp * l2, sp * l1 + cp * l2
        return th, ph, l1, l2, cp, sp, c1, c2

    def f(t):
        _, _, _, _, cp, sp, c1, c2 = parts(t)
        return np.stack([(R + c1) * cp, (R + c1) * sp, c2], axis=-1)

    def jac(t):
        th, _, _, _, cp, sp, c1, c2 = parts(t)
        dl1, dl2 = a * np.cos(2 * th), a * np.cos(th)
        c1_th, c2_th = cp * dl1 - sp * dl2, sp * dl1 + cp * dl2
        c1_ph, c2_ph = -c2, c1
        d_th = np.stack([c1_th * cp, c1_th * sp, c2_th], axis=-1)
        d_ph = np.stack([c1_ph * cp - (R + c1) * sp, c1_ph * sp + (R + c1) * cp, c2_ph], axis=-1)
        return np.stack([d_th, d_ph], axis=-1)

    return ParametricShape("torus_figure8", 2, 3,
                           ((0.0, 2 * np.pi, True), (0.0, 2 * np.pi, True)), f, jac,
                           info={"R": R, "a": a})


def five_circles(radius: float = 1.0, center_radius: float = 1.2, count: int = 5) -> ParametricShape:
    """``count`` circles whose centres are equally spaced on a circle of
    radius ``center_radius``; parameter ``t`` in ``[0, 2 pi count)`` walks
    through them one after the other."""
    R, C, K = float(radius), float(center_radius), int(count)
    ang = 2 * np.pi * np.arange(K) / K
    centers = C * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    two_pi = 2 * np.pi

    def split(t):
        k = np.clip(np.floor(t[:, 0] / two_pi).astype(int), 0, K - 1)
        return k, t[:, 0] - two_pi * k

    def f(t):
        k, s = split(t)
        return centers[k] + R * np.stack([np.cos(s), np.sin(s)], axis=-1)

    def jac(t):
        _, s = split(t)
        return np.stack([-R * np.sin(s), R * np.cos(s)], axis=-1)[:, :, None]

    comps = tuple((two_pi * k, two_pi * (k + 1)) for k in range(K))
    return ParametricShape("five_circles", 1, 2, ((0.0, two_pi * K, True),), f, jac,
                           components=comps,
                           info={"radius": R, "center_radius": C, "count": K,
                                 "centers": centers.tolist()})


def custom(eval_fn, domain, ambient_dim, jacobian_fn=None, components=None) -> ParametricShape:
    return ParametricShape("custom", len(domain), int(ambient_dim), tuple(domain),
                           eval_fn, jacobian_fn, components)


SHAPES = {
    "circle": circle,
    "lemniscate": lemniscate,
    "torus_figure8": torus_figure8,
    "five_circles": five_circles,
}


def get_shape(shape_id: str, **kwargs) -> ParametricShape:
    try:
        return SHAPES[shape_id](**kwargs)
    except KeyError:
        raise ValidationError(f"unknown shape {shape_id!r}; choose from {sorted(SHAPES)}") from None


# --------------------------------------------------------------------------
# Lifted clouds


@dataclass
class LiftedCloud:
    """Pairs ``(base point, symmetric matrix)`` with optional weights.

    ``matrices`` has shape ``(N, n, n)``. ``weights`` default to uniform.
    """

    points: np.ndarray
    matrices: np.ndarray
    weights: Optional[np.ndarray] = None
    intrinsic_dim_hint: Optional[int] = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.matrices = np.asarray(self.matrices, dtype=float).reshape(
            len(self.points), self.points.shape[1], self.points.shape[1])
        if self.weights is None:
            self.weights = np.full(len(self.points), 1.0 / len(self.points))
        else:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != (len(self.points),):
                raise ValidationError("one weight per lifted entry is required")

    def __len__(self):
        return len(self.points)

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def check(self, tol: float = 1e-10) -> None:
        """Raise if some matrix is not symmetric PSD with trace in [0, 1]."""
        M = self.matrices
        if np.max(np.abs(M - np.swapaxes(M, 1, 2)), initial=0.0) > tol:
            raise ValidationError("lifted matrices must be symmetric")
        if len(M) and np.linalg.eigvalsh(M).min() < -tol:
            raise ValidationError("lifted matrices must be positive semidefinite")
        tr = np.trace(M, axis1=1, axis2=2)
        if np.any(tr < -tol) or np.any(tr > 1 + tol):
            raise ValidationError("lifted matrices must have trace in [0, 1]")


def tangent_projection(shape: ParametricShape, t) -> np.ndarray:
    """Orthogonal projector ``J (J^T J)^{-1} J^T`` onto the tangent space.

    Returns ``(n, n)`` for a single parameter and ``(k, n, n)`` otherwise.
    """
    single = np.ndim(t) == 0 or (np.ndim(t) == 1 and shape.intrinsic_dim > 1)
    J = shape.jacobian(t)
    U, S, _ = np.linalg.svd(J, full_matrices=False)
    if np.any(S[:, -1] <= _RANK_TOL * np.maximum(S[:, 0], 1e-300)):
        bad = np.flatnonzero(S[:, -1] <= _RANK_TOL * np.maximum(S[:, 0], 1e-300))
        raise ImmersionError(f"Jacobian is rank deficient at parameter index {bad[:5].tolist()}")
    P = np.einsum("kni,kmi->knm", U, U)
    P = 0.5 * (P + np.swapaxes(P, 1, 2))
    return P[0] if single else P


def exact_lift(shape: ParametricShape, params) -> LiftedCloud:
    params = shape.as_params(params)
    d = shape.intrinsic_dim
    P = tangent_projection(shape, params)
    if P.ndim == 2:
        P = P[None]
    return LiftedCloud(shape.eval(params), P / (d + 2), intrinsic_dim_hint=d)


# --------------------------------------------------------------------------
# Sampling

_CDF_NODES = 1 << 16


def _arclength_table(shape: ParametricShape, nodes: int = _CDF_NODES):
    lo, hi, _ = shape.domain[0]
    t = np.linspace(lo, hi, nodes + 1)
    speed = shape.volume_element(t)
    # cumulative trapezoid is accurate to O(h^2) on smooth speed
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(t))])
    return t, cum


def curve_length(shape: ParametricShape) -> float:
    if shape.intrinsic_dim != 1:
        raise ValidationError("curve_length needs a curve")
    return float(_arclength_table(shape)[1][-1])


def arclength_params(shape: ParametricShape, u) -> np.ndarray:
    """Map fractions of total arc length in ``[0, 1]`` to curve parameters."""
    t, cum = _arclength_table(shape)
    return np.interp(np.asarray(u, dtype=float) * cum[-1], cum, t)


def sample_uniform(shape: ParametricShape, N: int, seed: int, scheme: str = "iid"):
    """Draw ``N`` points from the normalized Hausdorff measure of the image.

    ``scheme`` applies to curves only:

    * ``"iid"`` -- independent arc-length-uniform draws;
    * ``"stratified"`` -- one iid draw in each of ``N`` equal arc-length cells;
    * ``"regular"`` -- equally spaced in arc length with one random phase.

    Surfaces use rejection sampling against the area element (``"iid"`` only).
    Returns ``(points, params)``.
    """
    N = int(N)
    if N < 1:
        raise ValidationError("N must be at least 1")
    rng = make_rng(seed)
    if shape.intrinsic_dim == 1:
        if scheme == "iid":
            u = rng.random(N)
        elif scheme == "stratified":
            u = (np.arange(N) + rng.random(N)) / N
        elif scheme == "regular":
            u = (np.arange(N) + rng.random()) / N
        else:
            raise ValidationError(f"unknown sampling scheme {scheme!r}")
        params = arclength_params(shape, u).reshape(-1, 1)
    else:
        if scheme != "iid":
            raise ValidationError("surfaces support only the 'iid' scheme")
        params = _rejection_sample(shape, N, rng)
    return shape.eval(params), params


def _rejection_sample(shape: ParametricShape, N: int, rng: np.random.Generator) -> np.ndarray:
    lo = np.array([d[0] for d in shape.domain])
    hi = np.array([d[1] for d in shape.domain])
    g = [np.linspace(a, b, 257) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*g, indexing="ij"), axis=-1).reshape(-1, len(lo))
    bound = 1.1 * shape.volume_element(grid).max()
    out = []
    have = 0
    while have < N:
        batch = max(2 * (N - have), 1024)
        t = lo + (hi - lo) * rng.random((batch, len(lo)))
        keep = rng.random(batch) * bound < shape.volume_element(t)
        out.append(t[keep])
        have += int(keep.sum())
    return np.concatenate(out)[:N]


def reference_grid(shape: ParametricShape, n_ref: int):
    """Deterministic weighted parameter grid standing in for the continuous
    Hausdorff measure: cell midpoints weighted by the volume element.

    Returns ``(points, params, weights)``.
    """
    if shape.intrinsic_dim == 1:
        params = arclength_params(shape, (np.arange(n_ref) + 0.5) / n_ref).reshape(-1, 1)
        w = np.full(n_ref, 1.0 / n_ref)
    else:
        (a0, b0, _), (a1, b1, _) = shape.domain
        ratio = (b0 - a0) / (b1 - a1)
        n0 = max(int(round(np.sqrt(n_ref * ratio))), 1)
        n1 = max(int(round(n_ref / n0)), 1)
        g0 = a0 + (b0 - a0) * (np.arange(n0) + 0.5) / n0
        g1 = a1 + (b1 - a1) * (np.arange(n1) + 0.5) / n1
        params = np.stack(np.meshgrid(g0, g1, indexing="ij"), axis=-1).reshape(-1, 2)
        w = shape.volume_element(params)
        w = w / w.sum()
    return shape.eval(params), params, w


# --------------------------------------------------------------------------
# Normal reach (curves)

NORMAL_REACH_BRACKETS = 4096
NORMAL_REACH_EXCLUSION = 1e-6
_BISECTION_TOL = 1e-10
# distances below this are a second preimage of the base point
_SAME_POINT = 1e-8


def _bisect_roots(shape, x, a, b, ga):
    """Vectorized bisection of ``s -> <x - u(s), u'(s)>`` on brackets
    ``[a, b]``; ``x`` holds the base point of every bracket."""
    while True:
        width = b - a
        if width.size == 0 or width.max() <= _BISECTION_TOL:
            break
        mid = 0.5 * (a + b)
        gm = _orth(shape, x, mid)
        left = np.sign(gm) == np.sign(ga)
        a = np.where(left, mid, a)
        ga = np.where(left, gm, ga)
        b = np.where(left, b, mid)
    return 0.5 * (a + b)


def _orth(shape, x, s):
    y = shape.eval(s)
    dy = shape.jacobian(s)[:, :, 0]
    return np.einsum("kn,kn->k", x - y, dy)


def normal_reach_many(shape: ParametricShape, t0, brackets: int = NORMAL_REACH_BRACKETS,
                      exclusion: float = NORMAL_REACH_EXCLUSION, chunk: int = 256) -> np.ndarray:
    """Normal reach at each parameter of ``t0`` (curves only)."""
    if shape.intrinsic_dim != 1:
        raise ValidationError("normal reach is implemented for curves (d = 1)")
    t0 = shape.as_params(t0)[:, 0]
    out = np.empty(len(t0))
    grids = []
    starts = np.array([lo for lo, _ in shape.components])
    for lo, hi in shape.components:
        # the node at ``hi`` is the node at ``lo`` again, so evaluate once
        s = np.linspace(lo, hi, brackets + 1)
        y = shape.eval(s[:-1])
        dy = shape.jacobian(s[:-1])[:, :, 0]
        grids.append((lo, hi, s, dy, np.einsum("kn,kn->k", y, dy)))
    for start in range(0, len(t0), chunk):
        tc = t0[start:start + chunk]
        x = shape.eval(tc)
        best = np.full(len(tc), np.inf)
        home = np.clip(np.searchsorted(starts, tc, side="right") - 1, 0, len(starts) - 1)
        for ci, (lo, hi, s, dy, ydy) in enumerate(grids):
            g = x @ dy.T - ydy[None, :]
            g = np.hstack([g, g[:, :1]])
            zero = g == 0.0
            cross = (np.sign(g[:, :-1]) * np.sign(g[:, 1:]) < 0)
            # exact zeros on a node count once, as the bracket starting there
            cross |= zero[:, :-1]
            qi, bj = np.nonzero(cross)
            if qi.size == 0:
                continue
            a, b, ga = s[bj], s[bj + 1], g[qi, bj]
            roots = np.where(zero[qi, bj], a,
                             _bisect_roots(shape, x[qi], a, b, ga))
            period = hi - lo
            inside = home[qi] == ci
            gap = np.abs(roots - tc[qi])
            gap = np.minimum(gap, period - gap)
            keep = ~(inside & (gap <= exclusion))
            if not np.any(keep):
                continue
            dist = np.linalg.norm(x[qi[keep]] - shape.eval(roots[keep]), axis=1)
            np.minimum.at(best, qi[keep], dist)
        if np.any(np.isinf(best)):
            bad = tc[np.isinf(best)][:3]
            raise ResolutionError(
                f"no critical point bracketed for t0 in {bad.tolist()}; "
                f"increase the number of brackets (currently {brackets})")
        best[best < _SAME_POINT] = 0.0
        out[start:start + chunk] = best
    return out


def normal_reach(shape: ParametricShape, t0: float, **kwargs) -> float:
    """Distance from ``u(t0)`` to the closest other curve point ``y`` whose
    normal line passes through ``u(t0)``; zero at self-intersections."""
    return float(normal_reach_many(shape, [t0], **kwargs)[0])


def normal_reach_sublevel_fraction(shape: ParametricShape, r: float, grid: int = 2000) -> float:
    """Arc-length fraction of the curve where the normal reach is ``<= r``."""
    if r <= 0:
        return 0.0
    ts, ws = [], []
    for lo, hi in shape.components:
        t = lo + (hi - lo) * (np.arange(grid) + 0.5) / grid
        ts.append(t)
        ws.append(shape.volume_element(t) * (hi - lo) / grid)
    t, w = np.concatenate(ts), np.concatenate(ws)
    lam = normal_reach_many(shape, t)
    return float(w[lam <= r].sum() / w.sum())


# --------------------------------------------------------------------------
# Point clouds


def as_point_cloud(points, ambient_dim: Optional[int] = None) -> np.ndarray:
    """Validate and return a ``(N, n)`` float array of finite coordinates."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if ambient_dim in (None, 1) else X.reshape(1, -1)
    if X.ndim != 2:
        raise ValidationError("a point cloud is a 2-D array (points x coordinates)")
    if ambient_dim is not None and X.shape[1] != ambient_dim:
        raise ValidationError(f"expected {ambient_dim} coordinates, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("point coordinates must be finite")
    return X


def hausdorff_distance(A, B) -> float:
    A, B = as_point_cloud(A), as_point_cloud(B)
    if len(A) == 0 or len(B) == 0:
        raise ValidationError("Hausdorff distance of an empty cloud is undefined")
    if A.shape[1] != B.shape[1]:
        raise ValidationError("clouds live in different dimensions")
    dab = cKDTree(B).query(A)[0].max()
    dba = cKDTree(A).query(B)[0].max()
    return float(max(dab, dba))

