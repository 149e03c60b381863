"""Command line entry point: ``gbvlab classify | rates | suite | lacunary``.

Exit codes: 0 success, 1 an invariant check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import experiment as ex
from .families import UnknownFamilyError, parse_family

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


def _range(text: str):
    try:
        a, b = (int(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A:B, got {text!r}") from None
    if b < a or a < 1:
        raise argparse.ArgumentTypeError("need 1 <= A <= B")
    return a, b


def _family(text: str):
    try:
        return parse_family(text)
    except UnknownFamilyError as exc:
        raise ex.ConfigError(exc.args[0]) from None
    except (ValueError, TypeError) as exc:
        raise ex.ConfigError(str(exc)) from None


def cmd_classify(args) -> int:
    fam = _family(args.family)
    rec = ex.classify(fam, args.n0_cap, args.range)
    print(json.dumps(ex._jsonable(rec), indent=2, sort_keys=True))
    return EXIT_OK


def _emit(reports, out_dir, stem, fmt, quiet=False) -> None:
    paths = ex.write_reports(reports, ex.output_dir(out_dir), stem, fmt)
    if fmt == "csv" and not quiet:
        sys.stdout.write(ex.to_csv(reports))
    for p in paths:
        print(f"wrote {p}", file=sys.stderr)


def _violations(reports) -> int:
    bad = False
    for r in reports:
        for v in r.violations:
            print(f"[{r.family}] {v}", file=sys.stderr)
            bad = True
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_rates(args) -> int:
    fam = _family(args.family)
    checks = ex.parse_checks(args.checks) if args.checks else ex.DEFAULT_CHECKS
    degrees = ex.parse_degrees(args.degrees)
    ex._validate_degrees(degrees, checks)
    cfg = ex.ExperimentConfig([fam], degrees, checks, tail_tolerance=args.tail_tolerance,
                              grid_oversample=args.grid_oversample, N_max=args.n_max, out_dir=args.out, fmt=args.format)
    rep = ex.run_experiment(cfg)
    _emit([rep], cfg.out_dir, ex.slug(fam.label), cfg.fmt)
    return _violations([rep])


def cmd_suite(args) -> int:
    cfg = ex.load_config(args.config)
    if len(cfg.families) == 1 and cfg.name is None:
        reports = [ex.run_experiment(cfg)]
        stem = ex.slug(cfg.family.label)
    else:
        suite = ex.run_equivalence_suite(cfg.families, cfg.degrees, cfg)
        reports = suite.reports
        stem = cfg.name or "suite"
        for fam, why in suite.skipped.items():
            print(f"skipped {fam}: {why}", file=sys.stderr)
    _emit(reports, cfg.out_dir, ex.slug(stem), cfg.fmt)
    return _violations(reports)


def cmd_lacunary(args) -> int:
    fam = _family(f"lacunary_sine({args.alpha!r})")
    study = ex.lacunary_study(fam, args.eps, args.n0_cap, args.range, args.kmax)
    out = ex.output_dir(args.out)
    stem = ex.slug(f"lacunary_{args.alpha:g}")
    lines = ["k,n,n_eps_b_n"] + [f"{k},{1 << k},{format(v, '.12g')}" for k, v in study["trace"]]
    ex.atomic_write(f"{out}/{stem}_trace.csv", "\n".join(lines) + "\n")
    summary = {k: v for k, v in study.items() if k != "trace"}
    ex.atomic_write(f"{out}/{stem}.json", json.dumps(ex._jsonable(study), indent=2, sort_keys=True) + "\n")
    print(json.dumps(ex._jsonable(summary), indent=2, sort_keys=True))
    ok = study["min_N0"] is None and study["increasing_after_min"] and study["growth"] > 1
    return EXIT_OK if ok else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gbvlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="GBV and sector checks for one family")
    c.add_argument("family", help='e.g. "power_cosine(2)" or "complex_sector(2, pi/6)"')
    c.add_argument("--n0-cap", type=int, default=8)
    c.add_argument("--range", type=_range, default=(1, 2048), help="m range A:B for the GBV scan")
    c.set_defaults(func=cmd_classify)

    r = sub.add_parser("rates", help="E_n, bounds and proxies over a list of degrees")
    r.add_argument("family")
    r.add_argument("--degrees", required=True, help='"4,8,16" or "4:64:x2"')
    r.add_argument("--checks", help="comma separated subset of " + ",".join(ex.CHECKS))
    r.add_argument("--tail-tolerance", type=float, default=1e-10)
    r.add_argument("--grid-oversample", type=int, default=4)
    r.add_argument("--n-max", type=int, default=None, help="largest N in the dual bound (default 4n)")
    r.add_argument("--out", default="gbvlab_out")
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.set_defaults(func=cmd_rates)

    s = sub.add_parser("suite", help="run a JSON experiment config")
    s.add_argument("config")
    s.set_defaults(func=cmd_suite)

    lac = sub.add_parser("lacunary", help="sharpness study for sum k^-alpha sin(2^k x)")
    lac.add_argument("--alpha", type=float, required=True)
    lac.add_argument("--eps", type=float, default=0.1)
    lac.add_argument("--n0-cap", type=int, default=64)
    lac.add_argument("--range", type=_range, default=(1, 8192))
    lac.add_argument("--kmax", type=int, default=256)
    lac.add_argument("--out", default="gbvlab_out")
    lac.set_defaults(func=cmd_lacunary)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ex.ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
