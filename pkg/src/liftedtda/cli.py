"""Command-line entry point ``liftedtda``.

Exit codes: 0 on success, 2 on invalid input or configuration, 3 when a
problem exceeds the exact solvers' capacity.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .dtm import dtm_field
from .errors import CapacityError, LiftedTDAError, ValidationError
from .experiment import FILTRATION_KINDS, ExperimentConfig, compare_diagrams, run_experiment
from .geometry import SHAPES, get_shape, sample_uniform
from .io import (read_lifted_csv, read_points_csv, write_diagram_json, write_lifted_csv,
                 write_points_csv, write_values_csv)
from .measure import EmpiricalMeasure, gamma_embed, lift_measure
from .persistence import dtm_filtration, persistence_diagram, rips_filtration

EXIT_OK, EXIT_INVALID, EXIT_CAPACITY = 0, 2, 3


def _load_cloud(path, gamma):
    """Points from a point CSV, or the gamma-embedded cloud of a lifted CSV."""
    with open(path) as fh:
        header = fh.readline()
    if "m00" in header:
        lc = read_lifted_csv(path)
        return gamma_embed(lc, gamma), lc.weights
    X = read_points_csv(path)
    return X, np.full(len(X), 1.0 / len(X))


def cmd_sample(a):
    X, _ = sample_uniform(get_shape(a.shape), a.N, a.seed, a.scheme)
    write_points_csv(a.output, X)
    print(f"wrote {len(X)} points to {a.output}")


def cmd_lift(a):
    X = read_points_csv(a.points)
    lc = lift_measure(EmpiricalMeasure.uniform(X), a.r)
    write_lifted_csv(a.output, lc)
    print(f"wrote {len(lc)} lifted points to {a.output}")


def cmd_dtm(a):
    Y, w = _load_cloud(a.points, a.gamma)
    Q = Y if a.queries is None else _load_cloud(a.queries, a.gamma)[0]
    vals = dtm_field(EmpiricalMeasure(Y, w), a.m, Q)
    write_values_csv(a.output, vals, "dtm")
    print(f"wrote {len(vals)} DTM values to {a.output}; max {vals.max():.6g}")


def cmd_persist(a):
    Y, w = _load_cloud(a.points, a.gamma)
    if a.filtration == "rips":
        F = rips_filtration(Y, a.max_dim, a.max_value)
    else:
        F = dtm_filtration(Y, dtm_field(EmpiricalMeasure(Y, w), a.m, Y), a.max_dim, a.max_value)
    if a.dump:
        Path(a.dump).write_text(F.to_filtration().dump())
    D = persistence_diagram(F)
    write_diagram_json(a.output, D)
    print(f"wrote {len(D)} bars to {a.output}")


def cmd_compare(a):
    res = compare_diagrams(a.a, a.b, per_dim=a.per_dim)
    fmt = lambda v: "inf" if math.isinf(v) else f"{v:.12g}"
    if a.per_dim:
        for k, v in res.items():
            print(f"H{k}\t{fmt(v)}")
    else:
        print(fmt(res))


def cmd_experiment(a):
    values = {}
    if a.config:
        try:
            text = Path(a.config).read_text()
        except OSError as exc:
            raise ValidationError(f"cannot read {a.config}: {exc.strerror}") from None
        values = {f.name: getattr(ExperimentConfig.from_text(text, a.config), f.name)
                  for f in fields(ExperimentConfig)}
    for f in fields(ExperimentConfig):
        v = getattr(a, f.name, None)
        if v is not None:
            values[f.name] = v
    cfg = ExperimentConfig(**values)
    s = run_experiment(cfg, a.out)
    print(f"run directory: {a.out}")
    for key in ("wasserstein_reference_sample", "gamma_wasserstein_exact_lifted",
                "hausdorff_reference_sample", "hausdorff_exact_lifted", "c_lifted"):
        print(f"{key}\t{s[key]:.6g}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="liftedtda", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="sample a parametric shape")
    s.add_argument("--shape", required=True, choices=sorted(SHAPES))
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--scheme", default="iid", choices=["iid", "stratified", "regular"])
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("lift", help="attach normalized local covariances")
    s.add_argument("points")
    s.add_argument("--r", type=float, required=True)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_lift)

    s = sub.add_parser("dtm", help="distance to measure of a point or lifted cloud")
    s.add_argument("points")
    s.add_argument("--m", type=float, required=True)
    s.add_argument("--gamma", type=float, default=1.0, help="scale of the matrix part for lifted input")
    s.add_argument("--queries", help="evaluate at these points instead of the support")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_dtm)

    s = sub.add_parser("persist", help="persistence diagram of a Rips or DTM filtration")
    s.add_argument("points")
    s.add_argument("--filtration", choices=["rips", "dtm"], default="rips")
    s.add_argument("--m", type=float, default=0.01)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--max-dim", dest="max_dim", type=int, default=2)
    s.add_argument("--max-value", dest="max_value", type=float, default=math.inf)
    s.add_argument("--dump", help="also write the filtration, one simplex per line")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_persist)

    s = sub.add_parser("compare", help="bottleneck distance between two diagram files")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--per-dim", dest="per_dim", action="store_true")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("experiment", help="run a seeded experiment into a directory")
    s.add_argument("--config", help="key = value configuration file")
    s.add_argument("--out", required=True)
    s.add_argument("--shape", dest="shape_id")
    for name, typ in [("N", int), ("seed", int), ("r", float), ("gamma", float), ("m", float),
                      ("p", float), ("max_dim", int), ("max_value", float),
                      ("min_bar_length", float), ("noise_count", int), ("n_ref", int)]:
        s.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)
    s.add_argument("--filtrations", help="comma list of " + ", ".join(FILTRATION_KINDS))
    s.add_argument("--noise-box", dest="noise_box", help="lo0,hi0,lo1,hi1,... or auto")
    s.add_argument("--sampling", choices=["auto", "iid", "stratified", "regular"])
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (LiftedTDAError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
