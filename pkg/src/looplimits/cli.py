"""Command-line entry point.

Subcommands
    bounds      error-floor tables from the closed forms; ``--figure F6A``
    optimize    single-loop designs across net delays; ``--figure F5``
    dess        layered diverse-vs-uniform designs; ``--figure F7`` / ``F8``
    simulate    adversarial worst-case run of a bound-achieving loop
    experiment  synthetic-pilot campaigns: additivity, sweeps, trial batches
    serve       websocket session service for live play
    replay      verify a session log replays bit-exactly
    export      session log -> raw-log copy or campaign CSVs
    accept      acceptance suite (fast | full) with a JSON report

Every subcommand except ``serve`` is deterministic given its flags and
``--seed``. Numeric CSV cells are written with ``repr`` so they parse
back bit-exactly through :func:`read_table`.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import format_report, report_to_dict, run_suite
from .adversary import AdversaryConfig, CellEdges, Corners, Grid, greedy_adversary
from .bounds import rate_error_term, stochastic_bound, worst_case_bound
from .channels import Encoding, LoopParams
from .controllers import make_optimal_controller
from .experiment import (
    TrialConfig,
    load_trial_configs,
    run_additivity_campaign,
    run_trial,
    sweep_added_delay,
    sweep_added_rate,
    sweep_coupled_sat,
)
from .optimize import compare_dess, dess_tradeoff_curve, optimize_single_loop, sweep_regimes
from .plant import ArraySource, SimConfig, run_closed_loop
from .service import ServiceConfig, SessionService, export_session_log, replay_session_log


# --- Table I/O (bit-exact round trip) ---------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table(path, header, rows) -> Path:
    """CSV writer whose numeric cells round-trip exactly: floats via
    repr, ints as ints, None as empty."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def _parse_cell(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_table(path) -> tuple[list, list]:
    """Inverse of :func:`write_table`: (header, rows) with cells parsed
    back to int/float/str/None."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[_parse_cell(c) for c in row] for row in reader]
    return header, rows


def _load_params(path) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise SystemExit(f"params file must hold a JSON object, got {type(doc).__name__}")
    return doc


# --- Figure presets ----------------------------------------------------------


def emit_f6a(out: Path, params: dict) -> Path:
    """Component-coupled system tradeoff: signaling R bits costs R-5
    ticks of loop delay (0.05 s per tick), so the delay and rate error
    terms trade against each other with a sweet spot in between."""
    rates = np.asarray(params.get("rates", np.arange(0.5, 8.0 + 1e-9, 0.05)), dtype=float)
    rows = []
    for r in rates:
        delay_ticks = r - 5.0
        delay_err = max(0.0, delay_ticks)
        rate_err = rate_error_term(float(r))
        rows.append([float(r), delay_ticks, delay_ticks / 20.0, delay_err,
                     rate_err, delay_err + rate_err])
    return write_table(out / "f6a_component_sat.csv",
                       ["rate_bits", "delay_ticks", "delay_seconds",
                        "delay_error", "rate_error", "total_error"], rows)


def emit_f5(out: Path, params: dict) -> Path:
    """Optimal signaling time and error across net delays: delayed
    reaction (net delay > 0) versus advanced planning (< 0)."""
    lam = float(params.get("lambda_cost", 0.1))
    nets = np.asarray(params.get("net_delays", np.arange(-10.0, 10.0 + 1e-9, 0.25)),
                      dtype=float)
    rows = [
        [p.net_delay, p.t_signal, p.rate, p.objective, p.at_kink]
        for p in sweep_regimes(lam, nets)
    ]
    return write_table(out / "f5_regimes.csv",
                       ["net_delay", "t_signal", "rate_bits", "objective",
                        "at_kink"], rows)


def emit_f7(out: Path, params: dict) -> Path:
    """Layered designs at the caption parameters: each internal delay
    gets a diverse and a uniform two-layer design side by side."""
    lam = float(params.get("lambda_cost", 0.1))
    warning = float(params.get("warning", 100.0))
    epsilon = float(params.get("epsilon", 1.0))
    internal_delays = params.get("internal_delays", [0.0, 10.0])
    rows = []
    for ti in internal_delays:
        comp = compare_dess(lam, float(ti), warning, epsilon)
        for design in (comp.diverse, comp.uniform):
            rows.append([float(ti), design.mode, design.t_low, design.t_high,
                         design.rate_low, design.rate_high, design.reflex_part,
                         design.planning_part, design.total])
    return write_table(out / "f7_layered_designs.csv",
                       ["internal_delay", "mode", "t_low", "t_high", "rate_low",
                        "rate_high", "reflex_error", "planning_error",
                        "total_error"], rows)


def emit_f8(out: Path, params: dict) -> Path:
    """Diversity sweet spot frontier: best diverse vs best uniform total
    error as the shared internal delay grows."""
    lam = float(params.get("lambda_cost", 0.1))
    warning = float(params.get("warning", 100.0))
    epsilon = float(params.get("epsilon", 1.0))
    tis = np.asarray(params.get("internal_delays", np.arange(0.0, 20.0 + 1e-9, 0.5)),
                     dtype=float)
    rows = [
        [float(ti), c.diverse.total, c.uniform.total, c.improvement]
        for ti, c in zip(tis, dess_tradeoff_curve(lam, warning, tis, epsilon))
    ]
    return write_table(out / "f8_dess_frontier.csv",
                       ["internal_delay", "diverse_total", "uniform_total",
                        "improvement"], rows)


_FIGURES = {"F5": emit_f5, "F6A": emit_f6a, "F7": emit_f7, "F8": emit_f8}


def _emit_figure(args) -> int:
    fn = _FIGURES[args.figure]
    path = fn(Path(args.out), _load_params(args.params))
    print(path)
    return 0


# --- Subcommands -------------------------------------------------------------


def _float_list(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip() != ""]


def cmd_bounds(args) -> int:
    if args.figure:
        return _emit_figure(args)
    delays = args.delays if args.delays is not None else list(range(-8, 9))
    rates = args.rates if args.rates is not None else [0.5, 1, 2, 3, 4, 5, 6, 7, 8]
    rows = []
    for t in delays:
        p = LoopParams(signal_delay=max(0.0, t), internal_delay=0.0,
                       warning=max(0.0, -t))
        for r in rates:
            pr = LoopParams(signal_delay=p.signal_delay, internal_delay=0.0,
                            warning=p.warning, rate=float(r))
            w = worst_case_bound(pr)
            s = stochastic_bound(pr)
            rows.append([float(t), float(r), w.delay_error, w.rate_error,
                         w.total, s.total])
    path = write_table(Path(args.out) / "bounds.csv",
                       ["total_delay", "rate_bits", "delay_error", "rate_error",
                        "worst_case_total", "stochastic_total"], rows)
    print(path)
    return 0


def cmd_optimize(args) -> int:
    if args.figure:
        return _emit_figure(args)
    encoding = Encoding.SPIKE_BASED if args.encoding == "spike" else Encoding.RATE_BASED
    if args.net_delays is not None:
        pts = sweep_regimes(args.lambda_cost, args.net_delays, encoding=encoding,
                            stochastic=args.stochastic)
        rows = [[p.net_delay, p.t_signal, p.rate, p.objective, p.at_kink] for p in pts]
        path = write_table(Path(args.out) / "optimize_sweep.csv",
                           ["net_delay", "t_signal", "rate_bits", "objective",
                            "at_kink"], rows)
        print(path)
        return 0
    res = optimize_single_loop(args.lambda_cost, internal_delay=args.internal_delay,
                               warning=args.warning, encoding=encoding,
                               stochastic=args.stochastic)
    print(f"t_signal = {res.t_signal:.6f} ticks  rate = {res.rate:.6f} bits/tick")
    print(f"objective = {res.objective:.6f} "
          f"(delay {res.error.delay_error:.6f} + rate {res.error.rate_error:.6f})")
    print(f"kink at t_signal = {res.kink:.6f}; at_kink = {res.at_kink}")
    write_table(Path(args.out) / "optimize_point.csv",
                ["lambda_cost", "internal_delay", "warning", "t_signal",
                 "rate_bits", "objective", "delay_error", "rate_error", "at_kink"],
                [[args.lambda_cost, args.internal_delay, args.warning,
                  res.t_signal, res.rate, res.objective, res.error.delay_error,
                  res.error.rate_error, res.at_kink]])
    return 0


def cmd_dess(args) -> int:
    if args.figure:
        return _emit_figure(args)
    comp = compare_dess(args.lambda_cost, args.internal_delay, args.warning,
                        args.epsilon)
    for design in (comp.diverse, comp.uniform):
        print(f"{design.mode:>8}: total = {design.total:.6f} "
              f"(reflex {design.reflex_part:.6f} + planning {design.planning_part:.6f}) "
              f"t_low = {design.t_low:.3f} t_high = {design.t_high:.3f}")
    print(f"improvement = {comp.improvement:.2%} (diverse wins: {comp.diverse_wins})")
    write_table(Path(args.out) / "dess_comparison.csv",
                ["internal_delay", "mode", "t_low", "t_high", "rate_low",
                 "rate_high", "reflex_error", "planning_error", "total_error"],
                [[args.internal_delay, d.mode, d.t_low, d.t_high, d.rate_low,
                  d.rate_high, d.reflex_part, d.planning_part, d.total]
                 for d in (comp.diverse, comp.uniform)])
    return 0


_POLICIES = {"corners": Corners, "edges": CellEdges}


def _parse_policy(text: str):
    if text in _POLICIES:
        return _POLICIES[text]()
    if text.startswith("grid:"):
        return Grid(int(text.split(":", 1)[1]))
    raise SystemExit(f"unknown policy {text!r}; use corners, edges, or grid:N")


def cmd_simulate(args) -> int:
    t = args.delay_ticks
    p = LoopParams(signal_delay=max(0.0, t), internal_delay=0.0,
                   warning=max(0.0, -t), rate=args.rate)
    bound = worst_case_bound(p).total
    factory = lambda: make_optimal_controller(p)
    cfg = AdversaryConfig(horizon=args.horizon, b_bound=1.0, r_bound=0.0,
                          policy=_parse_policy(args.policy),
                          lookahead=args.lookahead)
    res = greedy_adversary(factory, cfg)
    traj = run_closed_loop(
        SimConfig(horizon=len(res.witness_b)),
        ArraySource(b=np.array(res.witness_b), r=np.array(res.witness_r)),
        factory(),
    )
    path = write_table(
        Path(args.out) / "simulate_trajectory.csv",
        ["tick", "x", "w", "b", "r", "u", "u_low", "u_high"],
        [[rec["tick"], rec["x"], rec["w"], rec["b"], rec["r"], rec["u"],
          rec["u_low"], rec["u_high"]] for rec in traj.records()],
    )
    print(f"worst case found: sup|x| = {res.sup_x:.9f} over {res.nodes} nodes "
          f"({res.method}, horizon {args.horizon})")
    print(f"bound: {bound:.9f}  (attainment {res.sup_x / bound:.1%})")
    print(path)
    return 0


def cmd_experiment(args) -> int:
    out = Path(args.out)
    base = TrialConfig(seed=args.seed)
    seeds = range(args.seed, args.seed + args.seeds)
    if args.mode == "additivity":
        rows, pooled_s, pooled_b = [], [], []
        for c in range(args.campaigns):
            res = run_additivity_campaign(base, seed=args.seed + c)
            pooled_s.append(res.window_sums)
            pooled_b.append(res.window_both)
            for i, (s, b) in enumerate(zip(res.window_sums, res.window_both)):
                rows.append([c, i, float(s), float(b)])
        path = write_table(out / "additivity_windows.csv",
                           ["campaign", "window_index", "sum_single_conditions",
                            "both_conditions"], rows)
        from scipy import stats
        allsum = np.concatenate(pooled_s)
        allboth = np.concatenate(pooled_b)
        r = float(stats.pearsonr(allsum, allboth).statistic)
        pval = float(stats.ttest_rel(allsum, allboth).pvalue)
        print(f"pooled over {args.campaigns} campaigns: r = {r:.3f}, "
              f"paired-t p = {pval:.3f}, n = {len(allboth)}")
        print(path)
        return 0
    if args.mode in ("delay-sweep", "rate-sweep", "coupled-sweep"):
        sweep = {"delay-sweep": sweep_added_delay,
                 "rate-sweep": sweep_added_rate,
                 "coupled-sweep": sweep_coupled_sat}[args.mode]
        pts = sweep(base, seeds=seeds)
        path = write_table(out / f"{args.mode.replace('-', '_')}.csv",
                           ["value", "mean_windowed_error", "sem", "n_trials"],
                           [[p.value, p.mean_error, p.sem, p.n_trials] for p in pts])
        for p in pts:
            print(f"  {p.value:+6.1f}: {p.mean_error:.3f} +- {p.sem:.3f}")
        print(path)
        return 0
    # trial batch from a config file
    configs = load_trial_configs(args.trials)
    win_rows, sum_rows = [], []
    for tid, cfg in enumerate(configs):
        rec = run_trial(cfg)
        rate = cfg.added_rate_bits
        for i, v in enumerate(rec.window_errors):
            win_rows.append([tid, cfg.condition, cfg.added_delay_ticks, rate,
                             i, float(v)])
        sum_rows.append([tid, cfg.condition, cfg.added_delay_ticks, rate,
                         rec.sup_error, rec.mean_windowed_error])
    p1 = write_table(out / "trials_windows.csv",
                     ["trial_id", "condition", "added_delay_ticks", "added_rate",
                      "window_index", "window_worst_case"], win_rows)
    p2 = write_table(out / "trials_summary.csv",
                     ["trial_id", "condition", "added_delay_ticks", "added_rate",
                      "sup_error", "mean_windowed"], sum_rows)
    print(p1)
    print(p2)
    return 0


def cmd_serve(args) -> int:
    host, _, port = args.bind.rpartition(":")
    trials = tuple(load_trial_configs(args.trials))
    service = SessionService(ServiceConfig(
        store_path=args.store,
        trials=trials,
        host=host or "127.0.0.1",
        port=int(port),
        pace=args.pace,
        wheel_mode=args.wheel_mode,
        wheel_gain=args.wheel_gain,
        reseed_per_session=not args.no_reseed,
    ))

    async def _run() -> None:
        await service.start()
        print(f"session service listening on {service.url} "
              f"({len(trials)} trials per session, pace={args.pace}, "
              f"store={args.store})", flush=True)
        try:
            await asyncio.Future()
        finally:
            await service.stop()

    try:
        asyncio.run(_run())
    except KeyboardInterrupt:
        print("stopped")
    return 0


def cmd_replay(args) -> int:
    failures = 0
    for log in args.logs:
        for trial in replay_session_log(log):
            ok = trial.bit_exact and (trial.metrics_match or not trial.complete)
            failures += not ok
            status = "ok" if ok else "MISMATCH"
            extra = "" if trial.complete else " (incomplete)"
            print(f"{log}: trial {trial.trial_id} [{trial.config.condition}] "
                  f"{status}{extra}")
    print("replay verdict:", "ok" if failures == 0 else f"{failures} mismatches")
    return 0 if failures == 0 else 1


def cmd_export(args) -> int:
    for path in export_session_log(args.log, fmt=args.kind, out_dir=args.out):
        print(path)
    return 0


def cmd_accept(args) -> int:
    report = run_suite(args.suite)
    print(format_report(report))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / f"accept_report_{args.suite}.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2)
    print(f"report: {report_path}")
    return 0 if report.passed else 1


# --- Parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="looplimits",
        description="Performance limits, controllers, and experiments for "
                    "delay- and rate-limited control loops.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="base seed for stochastic subcommands")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--format", choices=["csv"], default="csv",
                        help="table output format")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", parents=[common],
                       help="error-floor tables from the closed forms")
    p.add_argument("--delays", type=_float_list, default=None,
                   help="comma-separated total delays (ticks)")
    p.add_argument("--rates", type=_float_list, default=None,
                   help="comma-separated rates (bits/tick)")
    p.add_argument("--figure", choices=["F6A"], default=None)
    p.add_argument("--params", default=None, help="JSON file of figure overrides")
    p.set_defaults(fn=cmd_bounds)

    p = sub.add_parser("optimize", parents=[common],
                       help="optimal single-loop designs")
    p.add_argument("--lambda-cost", type=float, default=0.1, dest="lambda_cost")
    p.add_argument("--internal-delay", type=float, default=0.0)
    p.add_argument("--warning", type=float, default=0.0)
    p.add_argument("--encoding", choices=["spike", "rate"], default="spike")
    p.add_argument("--stochastic", action="store_true")
    p.add_argument("--net-delays", type=_float_list, default=None,
                   help="sweep these net delays instead of one point")
    p.add_argument("--figure", choices=["F5"], default=None)
    p.add_argument("--params", default=None)
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("dess", parents=[common],
                       help="diverse vs uniform layered designs")
    p.add_argument("--lambda-cost", type=float, default=0.1, dest="lambda_cost")
    p.add_argument("--internal-delay", type=float, default=0.0)
    p.add_argument("--warning", type=float, default=100.0)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--figure", choices=["F7", "F8"], default=None)
    p.add_argument("--params", default=None)
    p.set_defaults(fn=cmd_dess)

    p = sub.add_parser("simulate", parents=[common],
                       help="adversarial worst case of a bound-achieving loop")
    p.add_argument("--delay-ticks", type=float, default=0.0,
                   help="total loop delay (negative = advance warning)")
    p.add_argument("--rate", type=float, default=2.0, help="bits per tick")
    p.add_argument("--horizon", type=int, default=80)
    p.add_argument("--policy", default="grid:9",
                   help="disturbance candidates: corners, edges, or grid:N")
    p.add_argument("--lookahead", type=int, default=None)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("experiment", parents=[common],
                       help="synthetic-pilot campaigns")
    p.add_argument("--mode", choices=["additivity", "delay-sweep", "rate-sweep",
                                      "coupled-sweep", "trials"],
                   default="additivity")
    p.add_argument("--campaigns", type=int, default=20,
                   help="paired campaigns for additivity mode")
    p.add_argument("--seeds", type=int, default=10,
                   help="trials per point for sweep modes")
    p.add_argument("--trials", default=None,
                   help="trial-config JSON file for trials mode")
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("serve", parents=[common],
                       help="run the websocket session service")
    p.add_argument("--bind", default="127.0.0.1:8765", help="host:port")
    p.add_argument("--store", default="sessions",
                   help="directory for append-only session logs")
    p.add_argument("--trials", required=True,
                   help="trial-config JSON file served to each session")
    p.add_argument("--pace", choices=["realtime", "lockstep"], default="realtime")
    p.add_argument("--wheel-mode", choices=["velocity", "position"],
                   default="velocity")
    p.add_argument("--wheel-gain", type=float, default=2.5)
    p.add_argument("--no-reseed", action="store_true",
                   help="serve config seeds verbatim instead of per-session seeds")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("replay", parents=[common],
                       help="verify session logs replay bit-exactly")
    p.add_argument("logs", nargs="+", help="session JSONL files")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("export", parents=[common],
                       help="export a session log")
    p.add_argument("log", help="session JSONL file")
    p.add_argument("--kind", choices=["raw-log", "campaign-csv"],
                   default="campaign-csv")
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("accept", parents=[common],
                       help="run the acceptance suite")
    p.add_argument("--suite", choices=["fast", "full"], default="fast")
    p.set_defaults(fn=cmd_accept)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "experiment" and args.mode == "trials" and not args.trials:
        raise SystemExit("experiment --mode trials requires --trials <config-file>")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
