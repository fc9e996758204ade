"""Command-line front end.

Three subcommands cover the workflow:

``dimbound bound FILE``
    Upper bound: rank-class sweep, symbolic program or hybrid per the
    scenario's dimension pattern.  Prints the best value, best class and
    duality gap; writes a result record.

``dimbound seesaw FILE``
    Variational lower bound over explicit representations.

``dimbound verify SUITE``
    Property suites: ``mpi`` (matrix polynomial identity checks),
    ``sandwich`` (see-saw never exceeds the SDP bound), ``basis-stability``
    (span dimension is seed-independent).

Every run-time knob of the scenario file's [run] section has a flag
override.  Result records are JSON documents under ``--out``, the
``DIMBOUND_STORE`` environment variable, or ``./dimbound-runs``.

Exit codes: 0 success, 1 partial sweep or failed verification, 2 scenario
file errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, replace

import numpy as np

from . import __version__
from .relax import SweepConfig, compute_bound, named_level_index
from .scenario import Scenario
from .scnfile import RunSpec, ScnParseError, load_scenario, serialize_scenario
from .seesaw import SeesawError, seesaw_lower_bound
from .verify import (basis_stability_report, check_d2_identities,
                     check_standard_identity, sandwich_report)

QUICK_SUITE = ("chsh_d2.scn", "qrac21_d2.scn", "temporal_d2.scn", "i3322c2_d2.scn")


def _store_root(args) -> str:
    if args.out:
        return args.out
    return os.environ.get("DIMBOUND_STORE", "dimbound-runs")


def _parse_classes(text: str) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(r) for r in part.split(","))
                 for part in text.split(";") if part.strip())


def _apply_overrides(scenario: Scenario, run: RunSpec, args) -> tuple[Scenario, RunSpec]:
    """Command-line flags win over the scenario file's [run] section."""
    if getattr(args, "dim", None):
        dims = dict(scenario.dims)
        for spec in args.dim:
            party, eq, value = spec.partition("=")
            if not eq:
                raise ValueError(f"--dim expects PARTY=D, got {spec!r}")
            if party not in dims:
                raise ValueError(f"--dim names unknown party {party!r}")
            dims[party] = None if value == "inf" else int(value)
        scenario = replace(scenario, dims=dims)
    updates = {}
    for key in ("level", "sym_level", "eps", "confirmations", "seed", "jobs",
                "gap_tol", "feas_tol", "max_iter", "max_samples", "restarts"):
        value = getattr(args, key, None)
        if value is not None:
            updates[key] = value
    if getattr(args, "classes", None) is not None:
        updates["classes"] = _parse_classes(args.classes)
    if getattr(args, "dedup", None) is not None:
        updates["dedup"] = args.dedup
    if updates:
        run = replace(run, **updates)
    return scenario, run


def _sweep_config(run: RunSpec, cache_dir: str | None, verbose: bool) -> SweepConfig:
    cfg = SweepConfig(cache_dir=cache_dir, verbose=verbose)
    overrides = {k: v for k, v in (
        ("eps", run.eps), ("confirmations", run.confirmations),
        ("seed", run.seed), ("dedup", run.dedup), ("jobs", run.jobs),
        ("gap_tol", run.gap_tol), ("feas_tol", run.feas_tol),
        ("max_iter", run.max_iter), ("max_samples", run.max_samples),
        ("classes", run.classes and [tuple(c) for c in run.classes]),
    ) if v is not None}
    return replace(cfg, **overrides)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def _write_record(root: str, scenario: Scenario, record: dict) -> str:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    run_dir = os.path.join(root, f"{scenario.name or 'scenario'}-{scenario.digest()}-{stamp}")
    os.makedirs(run_dir, exist_ok=True)
    with open(os.path.join(run_dir, "record.json"), "w", encoding="utf-8") as fh:
        json.dump(_jsonable(record), fh, indent=2)
        fh.write("\n")
    with open(os.path.join(run_dir, "scenario.scn"), "w", encoding="utf-8") as fh:
        fh.write(serialize_scenario(scenario))
    return run_dir


def _base_record(kind: str, scenario: Scenario, run: RunSpec, path: str) -> dict:
    return {
        "format": "dimbound-result/1",
        "kind": kind,
        "scenario": {"name": scenario.name, "hash": scenario.digest(), "path": path},
        "config": {k: v for k, v in asdict(run).items() if v is not None},
        "versions": {"dimbound": __version__, "numpy": np.__version__,
                     "python": sys.version.split()[0]},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }


def cmd_bound(args) -> int:
    try:
        scenario, run = load_scenario(args.scenario)
        scenario, run = _apply_overrides(scenario, run, args)
    except (ScnParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    root = _store_root(args)
    cache_dir = None if args.no_cache else os.path.join(root, "cache", scenario.digest())
    config = _sweep_config(run, cache_dir, args.verbose)

    def progress(rec):
        if args.verbose:
            ranks = rec.get("ranks")
            label = "symbolic" if ranks is None else ",".join(map(str, ranks))
            value = rec.get("value")
            shown = "-" if value is None else f"{value:.7f}"
            print(f"  class {label}: {rec['status']} {shown} ({rec.get('time', 0):.1f}s)")

    t0 = time.perf_counter()
    result = compute_bound(scenario, run.level, config, sym_level=run.sym_level,
                           progress=progress)
    wall = time.perf_counter() - t0

    record = _base_record("bound", scenario, run, args.scenario)
    record.update(
        classes=[{k: v for k, v in r.items() if k != "witness"} for r in result.records],
        best={"value": result.best_value, "class": result.best_class},
        partial=result.partial, wall_time=wall, meta=result.meta,
    )
    run_dir = _write_record(root, scenario, record)

    solved = [r for r in result.records if r.get("value") is not None]
    gaps = [abs(r.get("gap", 0.0)) for r in solved if r.get("gap") is not None]
    print(f"scenario: {scenario.name} ({scenario.digest()})")
    print(f"classes solved: {len(solved)}/{len(result.records)}")
    if result.best_value is not None:
        label = "symbolic" if result.best_class is None else result.best_class
        print(f"best value: {result.best_value:.7f} at {label}")
        if gaps:
            print(f"worst duality gap: {max(gaps):.2e}")
    else:
        print("best value: none (no class solved)")
    print(f"record: {run_dir}")
    if result.partial:
        print("warning: partial sweep", file=sys.stderr)
        return 1
    return 0


def cmd_seesaw(args) -> int:
    try:
        scenario, run = load_scenario(args.scenario)
        scenario, run = _apply_overrides(scenario, run, args)
    except (ScnParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    rank_class = None
    if run.classes:
        if len(run.classes) != 1:
            print("error: see-saw takes at most one rank class", file=sys.stderr)
            return 2
        rank_class = tuple(run.classes[0])

    t0 = time.perf_counter()
    try:
        result = seesaw_lower_bound(
            scenario, rank_class=rank_class,
            restarts=run.restarts if run.restarts is not None else 50,
            seed=run.seed if run.seed is not None else 0)
    except (SeesawError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    record = _base_record("seesaw", scenario, run, args.scenario)
    record.update(
        best={"value": result.value, "class": result.meta.get("class")},
        restart_values=list(result.values), meta=result.meta,
        wall_time=time.perf_counter() - t0,
    )
    run_dir = _write_record(_store_root(args), scenario, record)

    values = np.asarray(result.values, dtype=float)
    print(f"scenario: {scenario.name} ({scenario.digest()})")
    print(f"lower bound: {result.value:.7f}")
    print(f"witness class: {result.meta.get('class')}")
    print(f"restarts: {len(values)} (median {np.median(values):.7f}, "
          f"best reached by {int(np.sum(values >= result.value - 1e-7))})")
    print(f"record: {run_dir}")
    return 0


def _verify_mpi(args) -> int:
    dim = args.dim if args.dim is not None else 2
    report = check_standard_identity(dim, trials=args.trials, seed=args.seed or 0)
    ok = report["passed"]
    print(f"standard identity, dim {dim} ({report['letters']} letters): "
          f"worst residual {report['max_residual']:.2e}, "
          f"control {report['control_min_residual']:.2e} -> {'pass' if ok else 'FAIL'}")
    if dim == 2:
        d2 = check_d2_identities(trials=max(args.trials, 5), seed=args.seed or 0)
        for name, worst in d2["residuals"].items():
            line = f"  {name}: worst {worst:.2e}"
            if name in d2["controls"]:
                line += f", control {d2['controls'][name]:.2e}"
            print(line)
        ok = ok and d2["passed"]
        print(f"dichotomic qubit identities -> {'pass' if d2['passed'] else 'FAIL'}")
    return 0 if ok else 1


def _verify_sandwich(args) -> int:
    paths = args.scenarios or [os.path.join("examples", n) for n in QUICK_SUITE]
    failures = 0
    for path in paths:
        try:
            scenario, run = load_scenario(path)
        except (ScnParseError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        report = sandwich_report(scenario, run.level,
                                 config=_sweep_config(run, None, False),
                                 restarts=args.restarts or 10,
                                 seed=args.seed or 0, sym_level=run.sym_level)
        status = "pass" if report["ok"] else "FAIL"
        print(f"{scenario.name}: lower {report['lower']:.7f} <= "
              f"upper {report['upper']:.7f} -> {status}")
        failures += not report["ok"]
    return 1 if failures else 0


def _verify_stability(args) -> int:
    path = args.scenarios[0] if args.scenarios else os.path.join("examples", "chsh_d2.scn")
    try:
        scenario, run = load_scenario(path)
    except (ScnParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    seeds = (args.seed or 0, (args.seed or 0) + 1)
    report = basis_stability_report(scenario, int(str(run.level).split("+")[0]),
                                    seeds=seeds,
                                    config=_sweep_config(run, None, False))
    sizes = ", ".join(f"seed {s}: N={n}" for s, n in report["sizes"].items())
    print(f"{report['scenario']} class {report['class']} "
          f"({report['index_size']} words): {sizes}")
    print(f"-> {'pass' if report['stable'] else 'FAIL'}")
    return 0 if report["stable"] else 1


def cmd_verify(args) -> int:
    if args.suite == "mpi":
        return _verify_mpi(args)
    if args.suite == "sandwich":
        return _verify_sandwich(args)
    if args.suite == "basis-stability":
        return _verify_stability(args)
    print(f"error: unknown suite {args.suite!r}", file=sys.stderr)
    return 2


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--out", default=None,
                   help="result store root (default $DIMBOUND_STORE or ./dimbound-runs)")


def _add_scenario_knobs(p):
    p.add_argument("--dim", action="append", metavar="PARTY=D",
                   help="override a party dimension (D an integer or 'inf')")
    p.add_argument("--classes", default=None,
                   help="rank class filter, e.g. '1,1,1,1 ; 1,1,1,2'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dimbound",
        description="Certified bounds on quantum correlations under dimension constraints.")
    parser.add_argument("--version", action="version", version=f"dimbound {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    pb = sub.add_parser("bound", help="SDP upper bound from randomized moment bases")
    pb.add_argument("scenario", help="scenario file (.scn)")
    _add_scenario_knobs(pb)
    pb.add_argument("--level", default=None, help="word index level, e.g. 2 or 1+cross")
    pb.add_argument("--sym-level", dest="sym_level", default=None,
                    help="unconstrained-side level for hybrid scenarios")
    pb.add_argument("--eps", type=float, default=None, help="span acceptance threshold")
    pb.add_argument("--confirmations", type=int, default=None,
                    help="consecutive rejections ending accumulation")
    pb.add_argument("--gap-tol", dest="gap_tol", type=float, default=None)
    pb.add_argument("--feas-tol", dest="feas_tol", type=float, default=None)
    pb.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    pb.add_argument("--max-samples", dest="max_samples", type=int, default=None)
    pb.add_argument("--jobs", type=int, default=None, help="parallel class jobs")
    pb.add_argument("--dedup", dest="dedup", action="store_true", default=None,
                    help="fold rank classes along declared symmetries")
    pb.add_argument("--no-dedup", dest="dedup", action="store_false")
    pb.add_argument("--no-cache", action="store_true", help="skip the basis cache")
    pb.add_argument("--verbose", action="store_true", help="per-class progress")
    _add_common(pb)
    pb.set_defaults(func=cmd_bound)

    ps = sub.add_parser("seesaw", help="variational lower bound")
    ps.add_argument("scenario", help="scenario file (.scn)")
    _add_scenario_knobs(ps)
    ps.add_argument("--restarts", type=int, default=None)
    _add_common(ps)
    ps.set_defaults(func=cmd_seesaw)

    pv = sub.add_parser("verify", help="property suites")
    pv.add_argument("suite", choices=["mpi", "sandwich", "basis-stability"])
    pv.add_argument("scenarios", nargs="*", help="scenario files (suite-dependent)")
    pv.add_argument("--dim", type=int, default=None, help="dimension for the mpi suite")
    pv.add_argument("--trials", type=int, default=5)
    pv.add_argument("--restarts", type=int, default=None)
    _add_common(pv)
    pv.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
