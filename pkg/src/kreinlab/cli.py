"""Batch command-line front end.

Subcommands: solve, entropy, opuc, verify, figure1. All outputs are CSV or
JSON with fixed schemas and deterministic formatting; exit codes are
0 success, 1 verification failure, 2 usage error, 3 internal consistency
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .entropy import (
    RouteDisagreement,
    entropy_sum,
    equivalence_scan,
    sobolev_h_minus1,
)
from .kernel import DecayFit, Grid, KernelError
from .krein import dump_krein_csv, solve_krein
from .opuc import VerblunskySeq, christoffel_lambda, compare_orders
from .potentials import build_potential, read_potential_csv, tail_integral
from .verify import battery_report, run_battery

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_INCONSISTENT = 3


@dataclass
class RunConfig:
    """Parsed invocation: command, inputs, grids, tolerances, outputs."""

    command: str
    potential_spec: str | None = None
    lambdas: tuple = ()
    alphas: tuple = ()
    rule: str | None = None
    rmax: float = 10.0
    dr: float = 0.05
    tol: float = 1e-10
    nsum: int = 30
    cutoff: float = 200.0
    orders: bool = False
    only: str | None = None
    seed: int = 0
    out_dir: Path = Path(".")
    threads: int = 1


def _threads() -> int:
    raw = os.environ.get("KREINLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parse_potential(spec: str):
    """Parse a potential spec string: zero | box:c,len | constant:c[,cutoff]
    | gaussian:c,scale | figure1 | sampled:path.csv"""
    name, _, args = spec.partition(":")
    if name == "zero":
        return build_potential("zero")
    if name == "figure1":
        return build_potential("figure1")
    if name == "sampled":
        if not args:
            raise ValueError("sampled potential needs a CSV path")
        return read_potential_csv(args)
    vals = [float(x) for x in args.split(",")] if args else []
    if name == "box":
        if len(vals) != 2:
            raise ValueError("box takes two parameters: box:c,length")
        return build_potential("box", *vals)
    if name == "constant":
        if len(vals) not in (1, 2):
            raise ValueError("constant takes constant:c[,cutoff]")
        return build_potential("constant", *vals)
    if name == "gaussian":
        if len(vals) != 2:
            raise ValueError("gaussian takes two parameters: gaussian:c,scale")
        return build_potential("gaussian", *vals)
    raise ValueError(f"unknown potential spec {spec!r}")


def parse_complex(text: str) -> complex:
    """Parse '2', 'i', '1+2i', '-0.5-0.5i' (j also accepted)."""
    cleaned = text.strip().replace("i", "j")
    if cleaned in ("j", "+j"):
        cleaned = "1j"
    if cleaned == "-j":
        cleaned = "-1j"
    return complex(cleaned)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _fit_dict(fit: DecayFit) -> dict:
    return {
        "alpha_hat": None if math.isnan(fit.alpha_hat) else fit.alpha_hat,
        "c_hat": None if math.isnan(fit.c_hat) else fit.c_hat,
        "offset": None if math.isnan(fit.offset) else fit.offset,
        "residual": fit.residual if math.isfinite(fit.residual) else None,
        "window": list(fit.window),
        "n_used": fit.n_used,
        "zero_tail": fit.zero_tail,
        "sub_exponential": fit.sub_exponential,
    }


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def cmd_solve(cfg: RunConfig) -> int:
    pot = parse_potential(cfg.potential_spec)
    grid = Grid(np.arange(0.0, cfg.rmax + cfg.dr / 2.0, cfg.dr))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)

    def one(lam):
        return solve_krein(pot, lam, grid, tol=cfg.tol)

    workers = min(cfg.threads, max(len(cfg.lambdas), 1))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            paths = list(pool.map(one, cfg.lambdas))
    else:
        paths = [one(lam) for lam in cfg.lambdas]

    files = []
    for i, kp in enumerate(paths):
        name = f"krein_path_{i}.csv"
        dump_krein_csv(cfg.out_dir / name, kp)
        files.append(name)
    manifest = {
        "command": "solve",
        "potential": cfg.potential_spec,
        "lambdas": [[lam.real, lam.imag] for lam in cfg.lambdas],
        "rmax": cfg.rmax,
        "dr": cfg.dr,
        "tolerances": {"ode_tol": cfg.tol},
        "files": files,
    }
    _write_json(cfg.out_dir / "manifest.json", manifest)
    return EXIT_OK


def cmd_entropy(cfg: RunConfig) -> int:
    pot = parse_potential(cfg.potential_spec)
    grid = Grid(np.arange(0.0, cfg.rmax + cfg.dr / 2.0, cfg.dr))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)

    scan = equivalence_scan(pot, grid)
    with open(cfg.out_dir / "entropy_scan.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "E", "D", "ratio"])
        for r, e, d, q in zip(grid.points, scan.E, scan.D, scan.ratio):
            writer.writerow([_fmt(r), _fmt(e), _fmt(d),
                             "" if math.isnan(q) else _fmt(q)])

    esum = entropy_sum(pot, cfg.nsum)
    sob = sobolev_h_minus1(pot, cfg.cutoff)
    if esum.total == 0.0 or sob.value == 0.0:
        verdict = "trivial"
        ratio = None
    else:
        ratio = esum.total / sob.value
        verdict = "in-band" if 0.01 <= ratio <= 100.0 else "out-of-band"
    summary = {
        "command": "entropy",
        "potential": cfg.potential_spec,
        "rmax": cfg.rmax,
        "dr": cfg.dr,
        "fit_E": _fit_dict(scan.fit_E),
        "fit_D": _fit_dict(scan.fit_D),
        "entropy_sum": {"total": esum.total, "last_term": esum.last_term,
                        "n_terms": esum.n_terms},
        "sobolev": {"value": sob.value, "cutoff": sob.cutoff,
                    "tail_bound": sob.tail_bound},
        "sum_to_sobolev_ratio": ratio,
        "band_verdict": verdict,
        "tolerances": {"ratio_band": [0.01, 100.0],
                       "route_agreement_rel": 1e-6,
                       "ratio_floor": 1e-12},
        "files": ["entropy_scan.csv"],
    }
    _write_json(cfg.out_dir / "entropy_summary.json", summary)
    return EXIT_OK


def cmd_opuc(cfg: RunConfig) -> int:
    if cfg.rule:
        name, _, args = cfg.rule.partition(":")
        c_str, n_str = args.split(",")
        seq = VerblunskySeq.from_rule(name, float(c_str), int(n_str))
    else:
        seq = VerblunskySeq(np.array([parse_complex(a) for a in cfg.alphas]))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)

    with open(cfg.out_dir / "opuc_table.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "Re_alpha", "Im_alpha", "lambda_n"])
        for n, a in enumerate(seq.alphas):
            writer.writerow([n, _fmt(a.real), _fmt(a.imag),
                             _fmt(christoffel_lambda(seq, n + 1))])

    out = {
        "command": "opuc",
        "n_coefficients": len(seq),
        "files": ["opuc_table.csv"],
    }
    if cfg.orders:
        co = compare_orders(seq)
        out["orders"] = {
            "rho_alpha": {"rho": co.rho_alpha.rho if math.isfinite(co.rho_alpha.rho) else None,
                          "flag": co.rho_alpha.flag},
            "rho_pi": {"rho": co.rho_pi.rho if math.isfinite(co.rho_pi.rho) else None,
                       "flag": co.rho_pi.flag},
            "sampling_radius": co.radius,
        }
    _write_json(cfg.out_dir / "opuc_summary.json", out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    results = run_battery(seed=cfg.seed, only=cfg.only)
    report = battery_report(results, seed=cfg.seed)
    text = json.dumps(report, indent=2)
    sys.stdout.write(text + "\n")
    if cfg.out_dir != Path("."):
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        (cfg.out_dir / "verify_report.json").write_text(text + "\n")
    return EXIT_OK if report["all_passed"] else EXIT_CHECK_FAILED


def cmd_figure1(cfg: RunConfig) -> int:
    pot = build_potential("figure1")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    rs = np.arange(0.0, 8.0 + 0.005, 0.01)
    with open(cfg.out_dir / "figure1.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "f", "tail"])
        for r in rs:
            writer.writerow([_fmt(r), _fmt(float(pot(r))),
                             _fmt(tail_integral(pot, r))])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kreinlab",
        description="Numerical laboratory for Krein systems, entropy "
                    "functionals, ordered exponentials, and unit-circle "
                    "orthogonal polynomials.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="integrate the coupled system and dump paths")
    p_solve.add_argument("--potential", required=True)
    p_solve.add_argument("--lambda", dest="lambdas", required=True,
                         help="comma-separated spectral parameters, e.g. '2,i,1+0.5i'")
    p_solve.add_argument("--rmax", type=float, default=10.0)
    p_solve.add_argument("--dr", type=float, default=0.05)
    p_solve.add_argument("--tol", type=float, default=1e-10)
    p_solve.add_argument("--out", default=".")

    p_ent = sub.add_parser("entropy", help="entropy/variation scan with fits and proxies")
    p_ent.add_argument("--potential", required=True)
    p_ent.add_argument("--rmax", type=float, default=10.0)
    p_ent.add_argument("--dr", type=float, default=0.25)
    p_ent.add_argument("--nsum", type=int, default=30)
    p_ent.add_argument("--cutoff", type=float, default=200.0)
    p_ent.add_argument("--out", default=".")

    p_opuc = sub.add_parser("opuc", help="unit-circle recursion tables and order comparison")
    group = p_opuc.add_mutually_exclusive_group(required=True)
    group.add_argument("--alphas", help="comma-separated coefficients, e.g. '0.5,0.2+0.1i'")
    group.add_argument("--rule", help="factorial:c,len or gaussian:c,len")
    p_opuc.add_argument("--orders", action="store_true")
    p_opuc.add_argument("--out", default=".")

    p_ver = sub.add_parser("verify", help="run the built-in identity battery")
    p_ver.add_argument("--only", default=None, help="filter checks by name prefix")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--out", default=".")

    p_fig = sub.add_parser("figure1", help="dump the oscillating coefficient and its tail")
    p_fig.add_argument("--out", default=".")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    cfg = RunConfig(command=args.command, out_dir=Path(getattr(args, "out", ".")),
                    threads=_threads())
    try:
        if args.command == "solve":
            cfg.potential_spec = args.potential
            cfg.lambdas = tuple(parse_complex(t) for t in args.lambdas.split(","))
            cfg.rmax, cfg.dr, cfg.tol = args.rmax, args.dr, args.tol
            return cmd_solve(cfg)
        if args.command == "entropy":
            cfg.potential_spec = args.potential
            cfg.rmax, cfg.dr = args.rmax, args.dr
            cfg.nsum, cfg.cutoff = args.nsum, args.cutoff
            return cmd_entropy(cfg)
        if args.command == "opuc":
            cfg.alphas = tuple(args.alphas.split(",")) if args.alphas else ()
            cfg.rule = args.rule
            cfg.orders = args.orders
            return cmd_opuc(cfg)
        if args.command == "verify":
            cfg.only, cfg.seed = args.only, args.seed
            return cmd_verify(cfg)
        if args.command == "figure1":
            return cmd_figure1(cfg)
    except RouteDisagreement as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except KernelError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
