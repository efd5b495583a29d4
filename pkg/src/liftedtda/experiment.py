"""Seeded end-to-end experiment runs writing CSV/JSON artifacts."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .dtm import c_mu, dtm_field
from .errors import ValidationError
from .geometry import (RNG_NAME, LiftedCloud, exact_lift, get_shape, hausdorff_distance, reference_grid,
                       sample_uniform)
from .io import read_diagram_json, write_diagram_json, write_lifted_csv, write_points_csv, write_values_csv
from .measure import EmpiricalMeasure, gamma_embed, lift_measure, tangent_error_field
from .persistence import dtm_filtration, persistence_diagram, prominent_bars, rips_filtration
from .transport import bottleneck_distance, gamma_wasserstein, wasserstein

FILTRATION_KINDS = ("dtm", "rips", "dtm_ambient", "rips_ambient")
REF_SIZE = {1: 2000, 2: 8000}


@dataclass
class ExperimentConfig:
    """Parameters of one run.

    ``filtrations`` lists the filtration kinds to compute: ``dtm`` and
    ``rips`` work on the gamma-embedded lifted cloud, the ``_ambient``
    variants on the plain sample.  ``noise_box`` is ``lo0,hi0,lo1,hi1,...``
    or ``auto`` (bounding square of the shape inflated by 10%).
    ``sampling`` is a sampling scheme or ``auto`` (regular for curves,
    iid for surfaces).
    """

    shape_id: str = "lemniscate"
    N: int = 100
    seed: int = 0
    r: float = 0.1
    gamma: float = 2.0
    m: float = 0.01
    p: float = 2.0
    filtrations: tuple = ("dtm",)
    max_dim: int = 2
    max_value: float = math.inf
    min_bar_length: float = 0.1
    noise_count: int = 0
    noise_box: tuple | str = "auto"
    sampling: str = "auto"
    n_ref: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        get_shape(self.shape_id)
        if isinstance(self.filtrations, str):
            self.filtrations = tuple(s.strip() for s in self.filtrations.split(",") if s.strip())
        self.filtrations = tuple(self.filtrations)
        for kind in self.filtrations:
            if kind not in FILTRATION_KINDS:
                raise ValidationError(f"unknown filtration kind {kind!r}; choose from {', '.join(FILTRATION_KINDS)}")
        if int(self.N) < 1:
            raise ValidationError("N must be at least 1")
        for name in ("r", "gamma"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if not 0 < self.m < 1:
            raise ValidationError("m must lie in (0, 1)")
        if not self.p >= 1:
            raise ValidationError("p must be at least 1")
        if not 0 <= int(self.max_dim) <= 3:
            raise ValidationError("max_dim must lie in 0..3")
        if not self.max_value > 0:
            raise ValidationError("max_value must be positive")
        if self.min_bar_length < 0:
            raise ValidationError("min_bar_length must be nonnegative")
        if int(self.noise_count) < 0 or int(self.n_ref) < 0:
            raise ValidationError("noise_count and n_ref must be nonnegative")
        if isinstance(self.noise_box, str) and self.noise_box != "auto":
            self.noise_box = tuple(float(v) for v in self.noise_box.split(","))
        if not isinstance(self.noise_box, str):
            self.noise_box = tuple(float(v) for v in self.noise_box)
            if len(self.noise_box) % 2 or any(a >= b for a, b in zip(self.noise_box[::2], self.noise_box[1::2])):
                raise ValidationError("noise_box must list lo,hi pairs with lo < hi")
        if self.sampling not in ("auto", "iid", "stratified", "regular"):
            raise ValidationError(f"unknown sampling scheme {self.sampling!r}")

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        """Parse ``key = value`` lines; ``#`` starts a comment."""
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{source}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise ValidationError(f"{source}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _coerce(key, val)
            except ValueError:
                raise ValidationError(f"{source}:{lineno}: bad value for {key}: {val!r}") from None
        try:
            return cls(**values)
        except ValidationError as exc:
            raise ValidationError(f"{source}: {exc}") from None

    def to_text(self) -> str:
        out = []
        for k, v in asdict(self).items():
            if isinstance(v, tuple):
                v = ",".join(map(str, v))
            out.append(f"{k} = {v}")
        return "\n".join(out) + "\n"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["filtrations"] = list(self.filtrations)
        d["noise_box"] = self.noise_box if isinstance(self.noise_box, str) else list(self.noise_box)
        d["max_value"] = _json_num(self.max_value)
        return d


_INT_KEYS = {"N", "seed", "max_dim", "noise_count", "n_ref"}
_FLOAT_KEYS = {"r", "gamma", "m", "p", "max_value", "min_bar_length"}


def _coerce(key, val):
    if key in _INT_KEYS:
        return int(val)
    if key in _FLOAT_KEYS:
        return float(val)
    return val


def _json_num(x):
    x = float(x)
    return "inf" if math.isinf(x) else x


def _bars_json(bars):
    return [[b, _json_num(d)] for b, d in bars]


def clutter_box(shape, n_ref: int = 2000):
    """Bounding square of the shape, inflated by 10% about its centre."""
    X, _, _ = reference_grid(shape, n_ref)
    lo, hi = X.min(0), X.max(0)
    c = (lo + hi) / 2
    h = 1.1 * (hi - lo).max() / 2
    return np.column_stack([c - h, c + h]).ravel()


def make_sample(cfg: ExperimentConfig):
    """Sample and clutter for a config; returns ``(sample, params, clutter)``."""
    shape = get_shape(cfg.shape_id)
    scheme = cfg.sampling
    if scheme == "auto":
        scheme = "regular" if shape.intrinsic_dim == 1 else "iid"
    X, params = sample_uniform(shape, cfg.N, cfg.seed, scheme)
    Z = np.zeros((0, shape.ambient_dim))
    if cfg.noise_count:
        box = clutter_box(shape) if cfg.noise_box == "auto" else np.asarray(cfg.noise_box)
        if len(box) != 2 * shape.ambient_dim:
            raise ValidationError(f"noise_box needs {shape.ambient_dim} lo,hi pairs")
        rng = np.random.Generator(np.random.Philox(int(cfg.seed)).jumped())
        Z = rng.uniform(box[::2], box[1::2], size=(cfg.noise_count, shape.ambient_dim))
    return X, params, Z


def lifted_filtration(kind: str, points: np.ndarray, lifted, cfg: ExperimentConfig):
    """Build one of the filtration kinds of a run."""
    if kind in ("dtm", "rips"):
        Y = gamma_embed(lifted, cfg.gamma)
    else:
        Y = points
    if kind.startswith("rips"):
        return rips_filtration(Y, cfg.max_dim, cfg.max_value)
    f = dtm_field(EmpiricalMeasure(Y, lifted.weights), cfg.m, Y)
    return dtm_filtration(Y, f, cfg.max_dim, cfg.max_value)


def run_experiment(cfg: ExperimentConfig, outdir) -> dict:
    """Run the full pipeline and write its artifacts into ``outdir``."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    shape = get_shape(cfg.shape_id)
    X, params, Z = make_sample(cfg)
    P = np.vstack([X, Z])
    nu = EmpiricalMeasure.uniform(P)
    lifted = lift_measure(nu, cfg.r)
    exact = exact_lift(shape, params)
    errors = tangent_error_field(LiftedCloud(lifted.points[:len(X)], lifted.matrices[:len(X)]), exact)

    n_ref = cfg.n_ref or REF_SIZE[shape.intrinsic_dim]
    R, Rparams, Rw = reference_grid(shape, n_ref)
    ref = EmpiricalMeasure(R, Rw)
    ref_lift = exact_lift(shape, Rparams)
    ref_lift.weights = Rw
    w_p, _ = wasserstein(ref, nu, cfg.p)
    w_pg = gamma_wasserstein(ref_lift, lifted, cfg.p, cfg.gamma)
    Yref = gamma_embed(ref_lift, cfg.gamma)
    Y = gamma_embed(lifted, cfg.gamma)

    write_points_csv(out / "points.csv", P)
    write_lifted_csv(out / "lifted.csv", lifted)
    write_lifted_csv(out / "exact_lift.csv", exact)
    write_values_csv(out / "errors.csv", errors, "frobenius_error")

    bars = {}
    for kind in cfg.filtrations:
        D = persistence_diagram(lifted_filtration(kind, P, lifted, cfg))
        write_diagram_json(out / f"diagram_{kind}.json", D)
        bars[kind] = {f"H{k}": _bars_json(prominent_bars(D, k, cfg.min_bar_length))
                      for k in range(max(cfg.max_dim, 1))}

    summary = {
        "artifact": {"package": "liftedtda", "version": __version__},
        "rng": RNG_NAME,
        "config": cfg.to_dict(),
        "n_sample": int(len(X)),
        "n_noise": int(len(Z)),
        "n_reference": int(n_ref),
        "wasserstein_reference_sample": w_p,
        "gamma_wasserstein_exact_lifted": w_pg,
        "hausdorff_reference_sample": hausdorff_distance(R, P),
        "hausdorff_exact_lifted": hausdorff_distance(Yref, Y),
        "c_lifted": c_mu(EmpiricalMeasure(Y, lifted.weights), cfg.m),
        "tangent_error_max": float(errors.max()),
        "tangent_error_median": float(np.median(errors)),
        "prominent_bars": bars,
    }
    (out / "config.txt").write_text(cfg.to_text())
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def compare_diagrams(path_a, path_b, metric: str = "bottleneck", per_dim: bool = False):
    """Bottleneck distance between two diagram files, overall or per degree."""
    if metric != "bottleneck":
        raise ValidationError(f"unknown metric {metric!r}")
    A, B = read_diagram_json(path_a), read_diagram_json(path_b)
    if per_dim:
        dims = sorted(set(A.dims()) | set(B.dims()))
        return {k: bottleneck_distance(A, B, k) for k in dims}
    return bottleneck_distance(A, B)
