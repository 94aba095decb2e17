"""Command-line entry point ``leviprobe``.

Exit codes: 0 pass, 1 verdict failure, 2 usage or config error, 3 numerically inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, complex_to_json
from .errors import ConfigError, LeviProbeError
from .harness import BUILTINS, RunReport, _jsonable, build_geometry, run_scenario
from .hypersurface import adapt_coordinates, check_strict_pseudoconvexity, graph_form
from .jetcalc import format_jet

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3
CHECKS = {"tangency": "tangency", "order3": "order3", "pseudoconvex": "pseudoconvex", "support": "support"}


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("overrides")
    g.add_argument("--degree", type=int, help="jet truncation degree")
    g.add_argument("--tau", type=float, help="exponent of the Levi polynomial power")
    g.add_argument("--s0", type=float, help="largest s on the probe grid")
    g.add_argument("--grid-count", type=int, help="number of s-grid points")
    g.add_argument("--tol", type=float, help="jet and rank tolerance of the checks")
    g.add_argument("--seed", type=int, help="random seed")
    g.add_argument("--out-dir", help="directory for CSV/JSON artifacts")
    g.add_argument("--override-checks", action="store_true", default=None,
                   help="run the probe even when gating checks fail")
    g.add_argument("--json", action="store_true", help="print the full JSON report")
    return p


def _source() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("scenario source (one of)")
    g.add_argument("--config", help="scenario JSON file")
    g.add_argument("--builtin", choices=sorted(BUILTINS), help="builtin scenario tag")
    g.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="builtin parameter")
    g.add_argument("--rho", help="jet literal of rho (prefix @ to read a file); ';' separates terms")
    g.add_argument("--n", type=int, help="number of tangential complex coordinates for --rho")
    g.add_argument("--point", help="comma-separated real base point")
    return p


def build_parser() -> argparse.ArgumentParser:
    common, source = _common(), _source()
    ap = argparse.ArgumentParser(prog="leviprobe", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("adapt", parents=[common, source], help="adapted chart at the base point")
    sub.add_parser("levi", parents=[common, source], help="graph form, Levi form and Levi polynomial")
    ck = sub.add_parser("check", parents=[common, source], help="run one check")
    ck.add_argument("which", choices=sorted(CHECKS))
    sub.add_parser("probe", parents=[common, source], help="full pipeline with probe and exponent fit")
    sc = sub.add_parser("scenario", help="run scenarios")
    scs = sc.add_subparsers(dest="action", required=True)
    run = scs.add_parser("run", parents=[common], help="run a scenario JSON file")
    run.add_argument("file")
    bi = scs.add_parser("builtin", parents=[common], help="run a builtin scenario")
    bi.add_argument("tag", choices=sorted(BUILTINS))
    bi.add_argument("params", nargs="*", metavar="KEY=VALUE")
    bi.add_argument("--save-config", help="write the generated config to this file")
    rp = sub.add_parser("report", help="inspect run reports")
    rps = rp.add_subparsers(dest="action", required=True)
    show = rps.add_parser("show", help="print a report summary")
    show.add_argument("file")
    show.add_argument("--json", action="store_true")
    return ap


def parse_params(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"parameter {item!r} is not KEY=VALUE")
        k, v = item.split("=", 1)
        try:
            out[k.replace("-", "_")] = json.loads(v)
        except json.JSONDecodeError:
            out[k.replace("-", "_")] = v
    return out


def _overrides(args) -> dict:
    return dict(
        degree=args.degree, tol=args.tol, seed=args.seed,
        out_dir=str(Path(args.out_dir).resolve()) if args.out_dir else None,
        override_checks=args.override_checks,
        probe_tau=args.tau, probe_s0=args.s0, probe_count=args.grid_count,
    )


def _from_builtin(tag: str, params: dict) -> ScenarioConfig:
    try:
        return BUILTINS[tag](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for builtin {tag!r}: {exc}") from exc


def load_config(args) -> ScenarioConfig:
    given = [x for x in (args.config, args.builtin, args.rho) if x]
    if len(given) != 1:
        raise ConfigError("give exactly one of --config, --builtin or --rho")
    if args.config:
        cfg = ScenarioConfig.load(args.config)
    elif args.builtin:
        cfg = _from_builtin(args.builtin, parse_params(args.param))
    else:
        if args.n is None:
            raise ConfigError("--rho needs --n")
        lit = Path(args.rho[1:]).read_text() if args.rho.startswith("@") else args.rho
        cfg = ScenarioConfig(name="rho", geometry={"rho": lit, "n": args.n})
    if args.point:
        try:
            cfg = cfg.with_overrides(base_point=[float(t) for t in args.point.split(",")])
        except ValueError as exc:
            raise ConfigError(f"bad --point: {exc}") from exc
    return cfg.with_overrides(**_overrides(args))


def _emit(obj) -> None:
    print(json.dumps(_jsonable(obj), indent=2, sort_keys=True))


def _chart_objects(cfg):
    df = build_geometry(cfg)
    p = np.zeros(df.nreal) if cfg.base_point is None else np.asarray(cfg.base_point, dtype=float)
    chart = adapt_coordinates(df, p)
    return df, chart, graph_form(df, chart)


def cmd_adapt(args) -> int:
    _, chart, _ = _chart_objects(load_config(args))
    _emit(chart.to_dict())
    return EXIT_PASS


def cmd_levi(args) -> int:
    _, chart, gf = _chart_objects(load_config(args))
    pc = check_strict_pseudoconvexity(gf)
    lam = gf.adapted_levi()
    _emit({"ell": gf.ell, "P": complex_to_json(gf.P), "L": complex_to_json(gf.L),
           "levi_eigenvalues": pc.eigenvalues, "strictly_pseudoconvex": pc.passed,
           "f": format_jet(gf.f), "Lambda_re": format_jet(lam.re), "Lambda_im": format_jet(lam.im)})
    return EXIT_PASS


def _report_exit(rep: RunReport, args) -> int:
    if args.json:
        print(rep.to_json())
    else:
        print(rep.summary())
    return rep.exit_code


def cmd_check(args) -> int:
    cfg = load_config(args)
    stage = CHECKS[args.which]
    rep = run_scenario(cfg, stop_after=stage)
    res = rep.stage(stage)
    if args.json:
        print(rep.to_json())
    else:
        print(f"{args.which}: {res.status} ({res.code})")
        _emit(res.detail)
    return EXIT_PASS if res.status == "pass" else EXIT_FAIL


def cmd_probe(args) -> int:
    rep = run_scenario(load_config(args))
    if args.json:
        print(rep.to_json())
    elif rep.fit is not None:
        _emit(rep.fit)
    else:
        print(rep.summary())
    return rep.exit_code


def cmd_scenario(args) -> int:
    if args.action == "run":
        cfg = ScenarioConfig.load(args.file)
    else:
        cfg = _from_builtin(args.tag, parse_params(args.params))
    cfg = cfg.with_overrides(**_overrides(args))
    if getattr(args, "save_config", None):
        cfg.save(args.save_config)
    return _report_exit(run_scenario(cfg), args)


def cmd_report(args) -> int:
    rep = RunReport.load(args.file)
    print(rep.to_json() if args.json else rep.summary())
    return EXIT_PASS


COMMANDS = {"adapt": cmd_adapt, "levi": cmd_levi, "check": cmd_check, "probe": cmd_probe,
            "scenario": cmd_scenario, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"leviprobe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LeviProbeError as exc:
        print(f"leviprobe: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
