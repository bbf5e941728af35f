"""Command-line front door.

    sdcf simulate          run a scenario's Monte Carlo and export CSVs
    sdcf sweep             re-run a scenario across parameter values
    sdcf analyze           offline feasibility analysis of a scenario
    sdcf graph-info        spectral summary of a communication graph
    sdcf reproduce-figures run the three bundled experiments

Exit codes: 0 success, 1 usage, 2 configuration (bad scenario / missing
file), 3 runtime failure. Analysis output is machine-parseable key=value
lines followed by prose; `parse_report` round-trips the key=value part.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

from .analysis import (
    AnalysisError,
    EnumerationTooLargeError,
    build_feasibility_report,
)
from .attack import AttackError
from .filtering import FilterError
from .graph import GraphError, is_connected, read_edgelist, spectral
from .harness import (
    ScenarioError,
    SWEEP_PARAMETERS,
    export_aggregate_csv,
    export_sweep_csv,
    export_trace_csv,
    export_tracking_csv,
    load_scenario,
    monte_carlo,
    reproduce_figures,
    resolve,
    run_simulation,
    sweep,
)
from .plant import PlantError

_CONFIG_ERRORS = (
    ScenarioError,
    GraphError,
    PlantError,
    AttackError,
    FilterError,
    AnalysisError,
    FileNotFoundError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


def _fmt_value(v) -> str:
    if v is None:
        return "undefined"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return repr(v)
    return str(v)


def _kv(key: str, value) -> str:
    return f"{key}={_fmt_value(value)}"


def parse_report(text: str) -> dict:
    """Parse the key=value lines of any subcommand's output."""
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _resolved_from_args(args):
    rs = resolve(load_scenario(args.scenario))
    if getattr(args, "runs", None) is not None:
        rs = replace(rs, runs=args.runs)
    if getattr(args, "seed", None) is not None:
        rs = replace(rs, master_seed=args.seed)
    return rs


def _analysis_lines(rs, grid_search: bool, samples: int):
    report = build_feasibility_report(
        rs.model,
        rs.gamma,
        rs.attack.s_declared,
        rs.cfg.L,
        rs.cfg.beta,
        samples=samples,
        seed=rs.master_seed,
        grid_search=grid_search,
    )
    tc = report.constants
    lines = [
        _kv("n_agents", rs.n_agents),
        _kv("state_dim", rs.model.n),
        _kv("a", tc.a),
        _kv("lambda2", rs.lambda2),
        _kv("lambda_max", rs.lambda_max),
        _kv("gamma", tc.gamma),
        _kv("alpha", rs.alpha),
        _kv("L", tc.L),
        _kv("beta", tc.beta),
        _kv("eta0", tc.eta0),
        _kv("b_w", tc.b_w),
        _kv("b_v", tc.b_v),
        _kv("s", tc.s),
        _kv("lambda0", report.lam0.value),
        _kv("lambda0_exact", report.lam0.exact),
        _kv("lambda0_subsets", report.lam0.subsets_evaluated),
        _kv("p0_star", tc.p0_star),
        _kv("k_star", tc.k_star),
        _kv("mu0", tc.mu0),
        _kv("q0", tc.q0),
        _kv("theta0", tc.theta0),
        _kv("m0", tc.m0),
        _kv("growth_condition", report.growth.holds),
        _kv("error_bound", report.error_bound),
        _kv("average_error_condition", report.average_condition_holds),
    ]
    if report.attack_feasible is None:
        lines.append(_kv("feasibility", "not_certified"))
    else:
        lines.append(_kv("feasibility", "feasible" if report.attack_feasible else "infeasible"))
    if grid_search:
        if report.witness is None:
            lines.append(_kv("witness", "none"))
        else:
            b, e, l_val = report.witness
            lines.append(_kv("witness", f"beta:{b!r};eta0:{e!r};L:{l_val}"))
    prose = []
    for reason in report.growth.reasons:
        prose.append(f"# growth condition: {reason}")
    for note in report.notes:
        prose.append(f"# note: {note}")
    if report.attack_feasible is False:
        prose.append(
            "# WARNING: the observability margin cannot tolerate the declared "
            "attack size; no parameter choice bounds the error"
        )
    return lines, prose, report


def _cmd_analyze(args) -> int:
    rs = _resolved_from_args(args)
    lines, prose, _ = _analysis_lines(rs, args.grid_search, args.samples)
    header = [
        "# offline feasibility analysis",
        _kv("scenario", args.scenario),
        _kv("master_seed", rs.master_seed),
    ]
    text = "\n".join(header + lines + prose)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "analysis.txt").write_text(text + "\n")
    return 0


def _cmd_simulate(args) -> int:
    rs = _resolved_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    mc = monte_carlo(rs, keep_traces=False)
    first = run_simulation(rs, 0)
    export_trace_csv(first, out / "trace_run000.csv")
    export_tracking_csv(first, out / "tracking_run000.csv")
    export_aggregate_csv(mc, out / "aggregate.csv")

    tail = max(1, (rs.horizon + 1) // 10)
    series = mc.mean_max_err
    finite = series[~(series != series)]  # drop NaN
    lines = [
        "# simulation summary",
        _kv("scenario", args.scenario),
        _kv("master_seed", rs.master_seed),
        _kv("runs", rs.runs),
        _kv("horizon", rs.horizon),
        _kv("backend", _backend_name()),
        _kv("final_mean_max_err", float(series[-1]) if finite.size else None),
        _kv("tail_mean_max_err", float(series[-tail:].mean()) if finite.size else None),
        _kv("divergent_runs", mc.n_divergent),
        _kv("all_divergent", mc.all_divergent),
    ]
    alines, prose, report = _analysis_lines(rs, grid_search=False, samples=args.samples)
    text = "\n".join(lines + alines + prose)
    print(text)
    (out / "summary.txt").write_text(text + "\n")
    return 0


def _cmd_sweep(args) -> int:
    rs = _resolved_from_args(args)
    raw = [v for v in args.values.split(",") if v.strip()]
    if not raw:
        raise ScenarioError("empty --values list")
    if args.param == "beta":
        values = [float(v) for v in raw]
    else:
        values = [int(v) for v in raw]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = sweep(rs, args.param, values)
    path = export_sweep_csv(result, out / f"sweep_{args.param}.csv")
    lines = [
        "# sweep summary",
        _kv("scenario", args.scenario),
        _kv("master_seed", rs.master_seed),
        _kv("param", args.param),
        _kv("values", ",".join(str(v) for v in values)),
        _kv("csv", path),
    ]
    for value, mc in zip(result.values, result.results):
        tail = max(1, (rs.horizon + 1) // 10)
        mean_tail = float(mc.mean_max_err[-tail:].mean())
        lines.append(
            _kv(f"tail_mean_max_err[{value}]", None if math.isnan(mean_tail) else mean_tail)
        )
        lines.append(_kv(f"divergent_runs[{value}]", mc.n_divergent))
    text = "\n".join(lines)
    print(text)
    (out / "summary.txt").write_text(text + "\n")
    return 0


def _cmd_graph_info(args) -> int:
    if bool(args.scenario) == bool(args.edges):
        raise UsageError("graph-info needs exactly one of --scenario or --edges")
    if args.scenario:
        rs = resolve(load_scenario(args.scenario))
        g = rs.graph
    else:
        g = read_edgelist(args.edges)
    lines = [
        "# graph summary",
        _kv("n_nodes", g.n_nodes),
        _kv("n_edges", g.n_edges),
        _kv("connected", is_connected(g)),
    ]
    if is_connected(g) and g.n_nodes >= 2:
        info = spectral(g)
        lines += [
            _kv("lambda2", info.lambda2),
            _kv("lambda_max", info.lambda_max),
            _kv("alpha_star", info.alpha_star),
            _kv("gamma", info.gamma),
        ]
    print("\n".join(lines))
    return 0


def _cmd_reproduce_figures(args) -> int:
    paths = reproduce_figures(args.out, runs=args.runs, seed=args.seed)
    lines = ["# figure reproduction"]
    lines += [_kv(name, path) for name, path in sorted(paths.items())]
    print("\n".join(lines))
    return 0


def _backend_name() -> str:
    from . import kernels

    return kernels.BACKEND


def build_parser() -> _Parser:
    parser = _Parser(prog="sdcf", description=__doc__, add_help=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a scenario and export CSVs")
    sim.add_argument("--scenario", required=True, help="scenario TOML path")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=None, help="override master seed")
    sim.add_argument("--runs", type=int, default=None, help="override Monte Carlo runs")
    sim.add_argument("--samples", type=int, default=10_000,
                     help="subset samples when the margin cannot be enumerated")
    sim.set_defaults(func=_cmd_simulate)

    sw = sub.add_parser("sweep", help="Monte Carlo across parameter values")
    sw.add_argument("--scenario", required=True)
    sw.add_argument("--out", required=True)
    sw.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--seed", type=int, default=None)
    sw.add_argument("--runs", type=int, default=None)
    sw.set_defaults(func=_cmd_sweep)

    an = sub.add_parser("analyze", help="offline feasibility analysis")
    an.add_argument("--scenario", required=True)
    an.add_argument("--out", default=None, help="also write analysis.txt here")
    an.add_argument("--seed", type=int, default=None)
    an.add_argument("--grid-search", action="store_true",
                    help="search (beta, eta0, L) for a boundedness witness")
    an.add_argument("--samples", type=int, default=10_000)
    an.set_defaults(func=_cmd_analyze)

    gi = sub.add_parser("graph-info", help="graph connectivity and spectrum")
    gi.add_argument("--scenario", default=None)
    gi.add_argument("--edges", default=None, help="edge-list file path")
    gi.set_defaults(func=_cmd_graph_info)

    rf = sub.add_parser("reproduce-figures", help="run the bundled experiments")
    rf.add_argument("--out", required=True)
    rf.add_argument("--runs", type=int, default=None, help="override Monte Carlo runs")
    rf.add_argument("--seed", type=int, default=None)
    rf.set_defaults(func=_cmd_reproduce_figures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except EnumerationTooLargeError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


def console_main() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    console_main()
