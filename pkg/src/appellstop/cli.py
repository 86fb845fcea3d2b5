"""Command-line front end: solve, value, verify, appell, plot-data."""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys

import numpy as np
import yaml

from .atransform import appell_poly, parse_law
from .config import ConfigError, load_config
from .solver import (
    image_values,
    stopping_region,
    strategy_value,
    value_mc,
    value_one_sided,
    value_table,
)
from .verify import SUITES, run_suite

log = logging.getLogger("appellstop")

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def _plain(obj):
    """Turn floats into 12-significant-digit YAML-safe values."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)) or obj is None or isinstance(obj, str):
        return bool(obj) if isinstance(obj, np.bool_) else obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    v = float(obj)
    return v if not math.isfinite(v) else float(f"{v:.12g}")


class _Literal(str):
    pass


def _literal_repr(dumper, data):
    return dumper.represent_scalar("tag:yaml.org,2002:str", data, style="|")


yaml.SafeDumper.add_representer(_Literal, _literal_repr)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_grid(spec: str):
    try:
        lo, hi, step = (float(s) for s in spec.split(":"))
    except ValueError:
        raise ValueError(f"grid must be lo:hi:step, got {spec!r}") from None
    if not lo < hi:
        raise ValueError("grid lo must be below hi")
    if not step > 0:
        raise ValueError("grid step must be positive")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(n + 1)


def _config(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.data["mc"]["seed"] = args.seed
    return cfg


def cmd_solve(args) -> int:
    cfg = _config(args)
    problem = cfg.problem()
    sol = stopping_region(problem)
    rows = value_table(problem, sol, problem.grid.points())
    doc = {
        "config": cfg.resolved(),
        "boundaries": [{"x": b.x, "residual": b.residual} for b in sol.boundaries],
        "region": [[lo, hi] for lo, hi in sol.region.intervals],
        "comonotone": {
            "pass": sol.comonotone.passed,
            "intervals": [{"interval": list(iv["interval"]), "pass": iv["pass"], "witnesses": iv["witnesses"]}
                          for iv in sol.comonotone.intervals],
        },
        "uncertain": [list(iv) for iv in sol.uncertain],
        "status": "inconclusive" if sol.inconclusive else "ok",
    }
    doc = _plain(doc)
    doc["table"] = _Literal(csv_text(["x", "g", "image", "V"], rows))
    _emit(yaml.safe_dump(doc, sort_keys=False), args.out)
    return EXIT_INCONCLUSIVE if sol.inconclusive else EXIT_OK


def cmd_value(args) -> int:
    cfg = _config(args)
    problem = cfg.problem()
    mc = cfg.mc
    sol = stopping_region(problem, comonotone=False)
    x = args.x
    image = float(image_values(problem, [x])[0])
    if problem.eta_mode.monotone:
        closed = value_one_sided(problem, x, sol)
    else:
        closed = strategy_value(problem.model, problem.reward, sol.region, x)
    est = value_mc(problem, x, args.paths or mc["paths"], mc["step"], mc["seed"], region=sol.region,
                   horizon=mc["horizon_cap"], workers=mc["workers"])
    header = ["x", "g", "image", "V", "V_mc", "stderr", "censored", "tail_bound", "samples", "seed"]
    row = [x, float(problem.reward(x)), image, closed, est.estimate, est.stderr, est.censored,
           est.tail_bound, est.samples, est.seed]
    _emit(csv_text(header, [row]), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    problem = cfg.problem()
    mc = cfg.mc
    paths = args.paths or mc["paths"]
    reports = run_suite(args.suite, problem, paths, mc["step"], mc["seed"], workers=mc["workers"])
    header = ["name", "x", "estimate", "target", "stderr", "allowance", "pass"]
    rows = [[r.name, r.x, r.estimate, r.target, r.stderr, r.allowance, r.passed] for r in reports]
    _emit(csv_text(header, rows), args.out)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_ERROR


def cmd_appell(args) -> int:
    law = parse_law(args.law)
    coeffs = appell_poly(law, args.n)
    _emit(csv_text(["power", "coefficient"], [[k, c] for k, c in enumerate(coeffs)]), args.out)
    return EXIT_OK


def cmd_plot_data(args) -> int:
    cfg = _config(args)
    problem = cfg.problem()
    xs = _parse_grid(args.grid)
    g = np.asarray(problem.reward(xs), dtype=float)
    img = image_values(problem, xs)
    _emit(csv_text(["x", "g", "image"], zip(xs, g, img)), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file (default: built-in two-sided example)")
    common.add_argument("--seed", type=int, help="override mc.seed")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="appellstop", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common], help="stopping region, boundaries and value table")
    s.set_defaults(func=cmd_solve)
    s = sub.add_parser("value", parents=[common], help="value at one starting point")
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--paths", type=int)
    s.set_defaults(func=cmd_value)
    s = sub.add_parser("verify", parents=[common], help="run a statistical check suite")
    s.add_argument("--suite", required=True, help="|".join(SUITES + ("all",)))
    s.add_argument("--paths", type=int)
    s.set_defaults(func=cmd_verify)
    s = sub.add_parser("appell", parents=[common], help="Appell polynomial coefficients")
    s.add_argument("--law", required=True, help="exp:BETA, negexp:BETA, bm:MU,SIGMA,T or const:V")
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_appell)
    s = sub.add_parser("plot-data", parents=[common], help="x, g, image over a grid")
    s.add_argument("--grid", required=True, help="lo:hi:step")
    s.set_defaults(func=cmd_plot_data)
    return p


def _glue_grid(argv):
    # a grid such as -40:20:0.5 would otherwise be read as an option flag
    out = []
    for tok in argv:
        if out and out[-1] == "--grid" and tok.startswith("-"):
            out[-1] = f"--grid={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_glue_grid(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
