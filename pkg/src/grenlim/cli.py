"""Command-line interface.

Subcommands
-----------
project   KL projection of a density onto decreasing densities (JSON)
fit       decreasing-density MLE for a data set (CSV of steps)
simulate  finite-sample replication against the limit law (JSON + CSV)
limit     raw draws from a limit law (CSV)
compare   QQ and KS comparison of finite-sample versus limit (JSON)
audit     Monte Carlo check of the tail bounds on flat blocks (JSON)

Exit codes: 0 success, 2 invalid input or domain, 3 theory not
applicable at the request, 4 numeric failure.

Every output embeds the effective configuration (density hash, seed,
sizes, grids). The worker count is excluded: it never changes a number,
and reruns with different --workers are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .density import (
    DEFAULT_PROJECTION_GRID,
    PiecewisePolyDensity,
    _PRESETS,
    decompose_regions,
    kl_projection,
    preset_density,
)
from .exceptions import (
    DomainError,
    GrenlimError,
    InvalidInputError,
    NotApplicableError,
    NumericError,
)
from .experiments import (
    effective_config,
    get_target,
    run_limit,
    run_replication,
    tail_bound_audit,
)
from .grenander import fit as grenander_fit
from .limits import DEFAULT_BRIDGE_GRID
from .rng import stream

__all__ = ["main"]

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_APPLICABLE = 3
EXIT_NUMERIC = 4


def _load_density(spec: str) -> PiecewisePolyDensity:
    if spec in _PRESETS:
        return preset_density(spec)
    if os.path.exists(spec):
        return PiecewisePolyDensity.from_json_file(spec)
    raise InvalidInputError(
        f"density {spec!r} is neither a preset ({', '.join(sorted(_PRESETS))}) "
        "nor an existing JSON file"
    )


def _write_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _write_csv(path: str, header: str, rows: np.ndarray, config: dict) -> None:
    with open(path, "w") as fh:
        fh.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
        fh.write(header + "\n")
        np.savetxt(fh, np.atleast_2d(rows), delimiter=",", fmt="%.17g")


def _add_density_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--density", required=True,
                   help="preset name (eg1, eg2, uniform) or density JSON file")


def _add_target_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--target", required=True,
                   choices=["pointwise", "linear", "entropy"])
    p.add_argument("--x0", type=float, default=None,
                   help="location for the pointwise target")
    p.add_argument("--g", default="identity",
                   help="integrand for the linear target "
                        "(identity, square, exp, const)")


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="grenlim",
        description="Decreasing-density MLE, its KL projection, and the "
                    "limit laws of its functionals under misspecification.",
    )
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="KL projection and region report")
    _add_density_arg(p)
    p.add_argument("--grid", type=int, default=DEFAULT_PROJECTION_GRID)
    p.add_argument("--out", default=None, help="output JSON (default stdout)")

    p = sub.add_parser("fit", help="decreasing-density MLE of a data set")
    p.add_argument("--data", default=None,
                   help="file of observations, one per line (- for stdin)")
    p.add_argument("--density", default=None,
                   help="synthesize the data set from this density instead")
    p.add_argument("--n", type=int, default=None,
                   help="sample size when synthesizing")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV of fitted steps")

    p = sub.add_parser("simulate",
                       help="finite-sample replication against the limit")
    _add_density_arg(p)
    _add_target_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--R", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--grid", type=int, default=DEFAULT_PROJECTION_GRID)
    p.add_argument("--bridge-grid", type=int, default=DEFAULT_BRIDGE_GRID)
    p.add_argument("--out", required=True,
                   help="output prefix: writes PREFIX.json and PREFIX.csv")

    p = sub.add_parser("limit", help="raw draws from a limit law")
    _add_density_arg(p)
    _add_target_args(p)
    p.add_argument("--R", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--grid", type=int, default=DEFAULT_PROJECTION_GRID)
    p.add_argument("--bridge-grid", type=int, default=DEFAULT_BRIDGE_GRID)
    p.add_argument("--out", required=True, help="output CSV of draws")

    p = sub.add_parser("compare",
                       help="QQ and KS comparison, finite sample vs limit")
    _add_density_arg(p)
    _add_target_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--R", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--grid", type=int, default=DEFAULT_PROJECTION_GRID)
    p.add_argument("--bridge-grid", type=int, default=DEFAULT_BRIDGE_GRID)
    p.add_argument("--out", default=None, help="output JSON (default stdout)")

    p = sub.add_parser("audit", help="tail-bound audit on flat blocks")
    _add_density_arg(p)
    p.add_argument("--x", type=float, action="append", required=True,
                   help="audit location (repeatable)")
    p.add_argument("--t", type=float, action="append", required=True,
                   help="deviation size (repeatable)")
    p.add_argument("--n", type=int, action="append", required=True,
                   help="sample size (repeatable)")
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=DEFAULT_PROJECTION_GRID)
    p.add_argument("--out", default=None, help="output JSON (default stdout)")

    return top


def _cmd_project(args) -> int:
    density = _load_density(args.density)
    decomp = decompose_regions(density, grid=args.grid)
    payload = decomp.to_dict()
    payload["config"] = {
        "density_hash": density.spec_hash(),
        "projection_grid": int(args.grid),
    }
    _write_json(payload, args.out)
    return EXIT_OK


def _read_observations(source: str) -> np.ndarray:
    fh = sys.stdin if source == "-" else open(source)
    try:
        vals = [float(line) for line in fh if line.strip()]
    except ValueError as exc:
        raise InvalidInputError(f"non-numeric observation: {exc}") from None
    finally:
        if fh is not sys.stdin:
            fh.close()
    return np.asarray(vals, dtype=np.float64)


def _cmd_fit(args) -> int:
    if (args.data is None) == (args.density is None):
        raise InvalidInputError("provide exactly one of --data or --density")
    if args.data is not None:
        samples = _read_observations(args.data)
        config = {"source": args.data, "n": int(samples.size)}
    else:
        if args.n is None or args.n < 1:
            raise InvalidInputError("--density needs --n >= 1")
        density = _load_density(args.density)
        samples = density.sample(args.n, stream(args.seed, 0, 0))
        config = {"density_hash": density.spec_hash(), "n": int(args.n),
                  "seed": int(args.seed)}
    f = grenander_fit(samples)
    # one row per breakpoint; the level applies to the right of it, and
    # the final level is zero because the fit vanishes past the data
    bp = f.steps.breakpoints
    lv = np.concatenate([f.steps.levels, [0.0]])
    _write_csv(args.out, "breakpoint,level", np.column_stack([bp, lv]), config)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    density = _load_density(args.density)
    target = get_target(args.target, x0=args.x0, g=args.g)
    report = run_replication(density, target, n=args.n, B=args.B, R=args.R,
                             seed=args.seed, workers=args.workers,
                             grid=args.grid, bridge_grid=args.bridge_grid)
    report.to_json(args.out + ".json")
    report.qq_csv(args.out + ".csv")
    s = report.summary()
    sys.stdout.write(
        f"{target.label}: finite var {s['finite_var']:.5g}, "
        f"limit var {s['limit_var']:.5g}, ks {s['ks']:.4f}\n"
    )
    return EXIT_OK


def _cmd_limit(args) -> int:
    density = _load_density(args.density)
    target = get_target(args.target, x0=args.x0, g=args.g)
    draws = run_limit(density, target, R=args.R, seed=args.seed,
                      workers=args.workers, grid=args.grid,
                      bridge_grid=args.bridge_grid)
    config = effective_config(density, target, args.seed, R=args.R,
                              grid=args.grid, bridge_grid=args.bridge_grid)
    _write_csv(args.out, target.label, draws.reshape(-1, 1), config)
    return EXIT_OK


def _cmd_compare(args) -> int:
    density = _load_density(args.density)
    target = get_target(args.target, x0=args.x0, g=args.g)
    report = run_replication(density, target, n=args.n, B=args.B, R=args.R,
                             seed=args.seed, workers=args.workers,
                             grid=args.grid, bridge_grid=args.bridge_grid)
    payload = report.summary()
    payload["qq"] = {
        "prob": report.probs.tolist(),
        "empirical_quantile": report.emp_quantiles.tolist(),
        "limit_quantile": report.limit_quantiles.tolist(),
    }
    _write_json(payload, args.out)
    return EXIT_OK


def _cmd_audit(args) -> int:
    density = _load_density(args.density)
    rows = tail_bound_audit(density, args.x, args.t, args.n, B=args.B,
                            seed=args.seed, grid=args.grid)
    payload = {
        "config": {
            "density_hash": density.spec_hash(),
            "seed": int(args.seed),
            "B": int(args.B),
            "projection_grid": int(args.grid),
            "x": [float(v) for v in args.x],
            "t": [float(v) for v in args.t],
            "n": [int(v) for v in args.n],
        },
        "rows": rows,
        "n_violations": int(sum(r["violated"] for r in rows)),
    }
    _write_json(payload, args.out)
    return EXIT_OK


_COMMANDS = {
    "project": _cmd_project,
    "fit": _cmd_fit,
    "simulate": _cmd_simulate,
    "limit": _cmd_limit,
    "compare": _cmd_compare,
    "audit": _cmd_audit,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (InvalidInputError, DomainError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except NotApplicableError as exc:
        sys.stderr.write(f"not applicable: {exc}\n")
        return EXIT_NOT_APPLICABLE
    except NumericError as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except GrenlimError as exc:  # pragma: no cover - safety net
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
