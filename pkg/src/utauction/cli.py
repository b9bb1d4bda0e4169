"""Command line entry point: `utauction <command> SCENARIO [options]`.

Reports go to stdout as tab-separated `key<TAB>value` lines, numbers fixed at
9 decimals, vectors comma-separated. Exit codes: 0 ok, 1 invalid scenario or
failed check, 2 simulation did not converge within max_steps, 64 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import ads, dynamics, oracles, static
from .auction import TieBreakContext, run_auction
from .core import BidProfile, validate_instance
from .scenario import ScenarioError, parse_scenario

EXIT_OK, EXIT_INVALID, EXIT_NOCONV, EXIT_USAGE = 0, 1, 2, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return f"{0.0 if abs(v) < 5e-10 else v:.9f}"
    if x is None:
        return "-"
    if isinstance(x, (list, tuple, np.ndarray)):
        return ",".join(fmt(v) for v in x)
    return str(x)


class Report:
    """Ordered key/value report, printed as TSV and optionally dumped as JSON."""

    def __init__(self):
        self.rows: list[tuple[str, object]] = []

    def add(self, key, value):
        self.rows.append((key, value))

    def emit(self, out=None):
        out = sys.stdout if out is None else out
        for k, v in self.rows:
            print(f"{k}\t{fmt(v)}", file=out)

    def to_json(self) -> str:
        def conv(v):
            if isinstance(v, np.ndarray):
                return [conv(x) for x in v.tolist()]
            if isinstance(v, (list, tuple)):
                return [conv(x) for x in v]
            if isinstance(v, (np.floating, float)):
                return round(float(v), 9)
            if isinstance(v, (np.integer,)):
                return int(v)
            if isinstance(v, np.bool_):
                return bool(v)
            return v
        return json.dumps({k: conv(v) for k, v in self.rows}, indent=1)


def _load(path):
    try:
        return parse_scenario(path)
    except ScenarioError as exc:
        print(f"error\t{exc}", file=sys.stderr)
        return None


def _parse_vector(text, n, what):
    try:
        vec = [float(x) for x in text.split(",")]
    except ValueError:
        raise SystemExit(_usage(f"{what}: expected comma-separated numbers"))
    if len(vec) != n:
        raise SystemExit(_usage(f"{what}: expected {n} numbers, got {len(vec)}"))
    return vec


def _usage(msg):
    print(f"utauction: error: {msg}", file=sys.stderr)
    return EXIT_USAGE


# ---- commands -------------------------------------------------------------

def cmd_validate(args) -> int:
    try:
        sc = parse_scenario(args.scenario)
    except ScenarioError as exc:
        rep = Report()
        rep.add("valid", False)
        rep.add("error", str(exc))
        rep.emit()
        return EXIT_INVALID
    v = validate_instance(sc.instance)
    rep = Report()
    rep.add("scenario", sc.name)
    rep.add("kind", sc.kind)
    rep.add("valid", v.valid)
    rep.add("bidders", sc.instance.num_bidders)
    rep.add("outcomes", sc.instance.num_outcomes)
    rep.add("welfare", v.welfare)
    rep.add("optimal_outcome", v.optimal_outcome)
    rep.add("unique_optimum", v.unique_optimum)
    for w in sc.warnings:
        rep.add("warning", w)
    rep.emit()
    return EXIT_OK


def cmd_solve(args) -> int:
    sc = _load(args.scenario)
    if sc is None:
        return EXIT_INVALID
    inst = sc.instance
    opt = static.optimal_outcome(inst)
    egal = static.egalitarian(inst)
    v = static.vcg(inst)
    threat = static.second_price_threat(inst, opt.outcome)
    eq = static.check_equilibrium(inst, egal.targets)
    cef = static.cef_report_targets(inst, egal.targets)
    levels = static.levels_and_bounds(inst, egal.targets)
    rep = Report()
    rep.add("scenario", sc.name)
    rep.add("optimal_outcome", opt.outcome)
    rep.add("welfare", opt.welfare)
    rep.add("unique_optimum", opt.unique)
    rep.add("pi_star", egal.targets)
    rep.add("egalitarian_outcome", egal.outcome)
    rep.add("egalitarian_payments", egal.payments)
    rep.add("egalitarian_revenue", egal.revenue)
    rep.add("egalitarian_is_cef", cef.is_cef)
    rep.add("egalitarian_is_equilibrium", eq.is_equilibrium)
    rep.add("vcg_prices", v.prices)
    rep.add("vcg_revenue", v.revenue)
    rep.add("second_price_threat", threat)
    rep.add("levels", ";".join(" ".join(str(i) for i in lv) for lv in levels.levels))
    rep.add("b_minus", levels.lower_bounds)
    rep.add("b_plus", levels.upper_bounds)
    for e in egal.events:
        rep.add(f"phase_{e.phase}", f"delta={fmt(e.delta)} target={fmt(e.target)} fixed={fmt(e.fixed)} "
                                    f"reason={e.reason} binding={fmt(e.binding_outcomes) or '-'}")
    for w in egal.warnings:
        rep.add("warning", w)
    rep.emit()
    if args.json:
        Path(args.json).write_text(rep.to_json() + "\n")
    return EXIT_OK if (cef.is_cef and eq.is_equilibrium) else EXIT_INVALID


def cmd_check_cef(args) -> int:
    sc = _load(args.scenario)
    if sc is None:
        return EXIT_INVALID
    inst = sc.instance
    if args.bids:
        if args.bids not in sc.bids:
            return _usage(f"scenario has no bid set {args.bids!r} (available: {', '.join(sc.bids) or 'none'})")
        profile = sc.bids[args.bids]
    elif args.targets:
        if args.targets in sc.targets:
            vec = sc.targets[args.targets]
        else:
            vec = _parse_vector(args.targets, inst.num_bidders, "--targets")
        profile = BidProfile.quasi_truthful(inst, vec)
    else:
        return _usage("check-cef needs --bids NAME or --targets")
    ctx = TieBreakContext(args.previous_winner)
    result = run_auction(inst, profile, ctx)
    report = static.is_cef(inst, profile, ctx)
    rep = Report()
    rep.add("scenario", sc.name)
    rep.add("totals", result.totals)
    rep.add("tied_outcomes", result.tied_outcomes)
    rep.add("winning_outcome", result.winning_outcome)
    rep.add("payments", result.payments)
    rep.add("utilities", result.utilities)
    rep.add("winners", [bool(x) for x in result.is_winner])
    rep.add("is_cef", report.is_cef)
    rep.add("slack", report.slack)
    for o, lhs, rhs in report.violated_outcomes:
        rep.add(f"violation_outcome_{o}", f"lhs={fmt(lhs)} rhs={fmt(rhs)}")
    rep.emit()
    return EXIT_OK if report.is_cef else EXIT_INVALID


def _sim_settings(args, sc):
    sim = sc.simulation

    def pick(name, default):
        val = getattr(args, name)
        return val if val is not None else sim.get(name, default)

    return dict(
        epsilon=float(pick("epsilon", 0.01)),
        seed=int(pick("seed", 0)),
        axioms=pick("axioms", "all"),
        target=pick("target", "egalitarian"),
        max_steps=pick("max_steps", None),
        winner_policy=pick("winner_policy", "round-robin"),
        initial=pick("initial", "caps"),
    )


def cmd_simulate(args) -> int:
    sc = _load(args.scenario)
    if sc is None:
        return EXIT_INVALID
    inst = sc.instance
    s = _sim_settings(args, sc)
    try:
        config = dynamics.SimConfig(s["epsilon"], s["max_steps"], s["seed"], s["axioms"],
                                    s["winner_policy"], s["target"])
    except ValueError as exc:
        return _usage(str(exc))
    init = s["initial"]
    if init == "caps":
        pi0 = inst.caps
    elif init == "zeros":
        pi0 = np.zeros(inst.num_bidders)
    elif isinstance(init, str):
        pi0 = _parse_vector(init, inst.num_bidders, "--initial")
    else:
        pi0 = init
    pi_star = static.egalitarian(inst).targets if config.target == "egalitarian" else None
    trace, conv = dynamics.simulate(inst, pi0, config, pi_star)
    rep = Report()
    rep.add("scenario", sc.name)
    rep.add("axioms", config.axiom_label)
    rep.add("epsilon", config.epsilon)
    rep.add("seed", config.seed)
    rep.add("target", conv.target)
    rep.add("steps", len(trace.events))
    rep.add("max_steps", config.steps_for(inst))
    rep.add("halted", trace.halted)
    rep.add("entered_at_step", conv.entered_at_step)
    rep.add("stayed", conv.stayed)
    rep.add("converged", conv.converged)
    rep.add("violations_after_entry", conv.violations)
    rep.add("all_winners_first_step", conv.all_winners_first_step)
    rep.add("all_winners_bound", conv.all_winners_bound)
    rep.add("degenerate", conv.degenerate)
    if conv.two_sided is not None:
        rep.add("two_sided", conv.two_sided)
    rep.add("final_pi", conv.final_targets)
    if pi_star is not None:
        rep.add("pi_star", pi_star)
        rep.add("lower_bounds", conv.lower_bounds)
        rep.add("upper_bounds", conv.upper_bounds)
    final = static.cef_report_targets(inst, conv.final_targets)
    rep.add("final_outcome", final.winning_outcome)
    if args.out:
        Path(args.out).write_text(trace.to_csv())
        rep.add("trace_csv", args.out)
    if args.trace_json:
        Path(args.trace_json).write_text(trace.to_json() + "\n")
        rep.add("trace_json", args.trace_json)
    if args.figure:
        from .plotting import plot_trace
        names = list(inst.bidder_names) if inst.bidder_names else None
        plot_trace(trace, args.figure, names, conv.lower_bounds, conv.upper_bounds,
                   title=f"{sc.name}: {config.axiom_label}, eps={config.epsilon:g}")
        rep.add("figure", args.figure)
    rep.emit()
    if args.json:
        Path(args.json).write_text(rep.to_json() + "\n")
    ok = conv.converged or (config.target == "ncef_eps" and conv.degenerate)
    return EXIT_OK if ok else EXIT_NOCONV


def cmd_ad_auction(args) -> int:
    sc = _load(args.scenario)
    if sc is None:
        return EXIT_INVALID
    if sc.ad is None:
        return _usage("ad-auction needs an ad scenario (kind = 'ad')")
    setting = sc.ad
    assignment = ads.optimal_assignment(setting)
    rep = Report()
    rep.add("scenario", sc.name)
    rep.add("explicit_outcomes", sc.instance.num_outcomes)
    rep.add("assignment", " ".join(f"{i}->{j}" for i, j in sorted(assignment.slot_of.items())) or "-")
    rep.add("expected_revenue", assignment.total)
    for scheme in ads.SCHEMES:
        pr = ads.price_assignment(setting, assignment, scheme)
        for i in sorted(assignment.slot_of):
            rep.add(f"{scheme}_bidder_{i}",
                    f"ppc={fmt(float(pr.ppc[i]))} rebate={fmt(float(pr.rebate[i]))} "
                    f"expected={fmt(float(pr.expected_payment(i)))}")
    egal = static.egalitarian(sc.instance)
    rep.add("explicit_pi_star", egal.targets)
    rep.add("explicit_egalitarian_outcome", sc.instance.outcome_names[egal.outcome]
            if sc.instance.outcome_names else egal.outcome)
    rep.add("explicit_egalitarian_revenue", egal.revenue)
    if args.gfp:
        g = ads.gfp_dynamics(setting, args.epsilon, args.max_steps)
        rep.add("gfp_epsilon", args.epsilon)
        rep.add("gfp_steps", len(g.steps))
        rep.add("gfp_fixed_point", g.fixed_point)
        rep.add("gfp_cycle_start", g.cycle_start)
        rep.add("gfp_cycle_length", g.cycle_length)
        if args.out:
            Path(args.out).write_text(g.to_csv())
            rep.add("gfp_trace_csv", args.out)
        if args.figure:
            from .plotting import plot_gfp
            plot_gfp(g, args.figure, title=f"{sc.name}: GFP best responses, eps={args.epsilon:g}")
            rep.add("figure", args.figure)
    rep.emit()
    return EXIT_OK


def cmd_oracle_compare(args) -> int:
    sc = _load(args.scenario)
    if sc is None:
        return EXIT_INVALID
    inst = sc.instance
    grid = oracles.GridSpec(args.step, max_points=args.max_points)
    try:
        cg = oracles.enumerate_cef_grid(inst, grid)
    except oracles.BudgetExceeded as exc:
        print(f"error\t{exc}", file=sys.stderr)
        return EXIT_INVALID
    disagree = sum(1 for idx, p in cg.points() if static.in_cef(inst, p) != bool(cg.in_cef[idx]))
    closure = oracles.closure_counterexamples(cg)
    egal = static.egalitarian(inst).targets
    brute = oracles.brute_force_egalitarian(inst, grid)
    dist = min((float(np.max(np.abs(np.asarray(b) - egal))) for b in brute), default=None)
    rep = Report()
    rep.add("scenario", sc.name)
    rep.add("grid_step", args.step)
    rep.add("grid_points", int(cg.in_cef.size))
    rep.add("cef_points", int(cg.in_cef.sum()))
    rep.add("cef_disagreements", disagree)
    rep.add("closure_counterexamples", len(closure))
    rep.add("pi_star", egal)
    rep.add("brute_force_maximizers", len(brute))
    if brute:
        rep.add("brute_force_nearest", min(brute, key=lambda b: float(np.max(np.abs(np.asarray(b) - egal)))))
    rep.add("distance_sup", dist)
    ok = disagree == 0 and not closure and dist is not None and dist <= args.step + 1e-9
    rep.add("agree", ok)
    rep.emit()
    return EXIT_OK if ok else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="utauction", description="Utility-target auction laboratory.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", help="check a scenario file")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("solve", help="egalitarian equilibrium, VCG and second-price threat")
    s.add_argument("scenario")
    s.add_argument("--json", help="also write the report as JSON")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("check-cef", help="run one auction and test the CEF inequality")
    s.add_argument("scenario")
    s.add_argument("--bids", help="named bid set from the scenario")
    s.add_argument("--targets", help="named target vector, or comma-separated quasi-truthful targets")
    s.add_argument("--previous-winner", type=int, default=None)
    s.set_defaults(func=cmd_check_cef)

    s = sub.add_parser("simulate", help="axiom-driven repeated auction")
    s.add_argument("scenario")
    s.add_argument("--epsilon", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--axioms", help="A1+A2, A1+A3, A1+A2+A3, A1+A2+A3+A4 or 'all'")
    s.add_argument("--target", choices=dynamics.TARGETS)
    s.add_argument("--max-steps", type=int)
    s.add_argument("--winner-policy", choices=("round-robin", "seeded-random"))
    s.add_argument("--initial", help="'caps', 'zeros' or comma-separated targets")
    s.add_argument("--out", help="trace CSV path")
    s.add_argument("--trace-json", help="trace JSON path")
    s.add_argument("--json", help="report JSON path")
    s.add_argument("--figure", help="PNG of targets over time")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("ad-auction", help="slot assignment, both pricings, optional GFP demo")
    s.add_argument("scenario")
    s.add_argument("--gfp", action="store_true", help="run GFP best-response dynamics")
    s.add_argument("--epsilon", type=float, default=0.1)
    s.add_argument("--max-steps", type=int, default=100_000)
    s.add_argument("--out", help="GFP trace CSV path")
    s.add_argument("--figure", help="PNG of GFP bids")
    s.set_defaults(func=cmd_ad_auction)

    s = sub.add_parser("oracle-compare", help="brute-force grid vs analytic results")
    s.add_argument("scenario")
    s.add_argument("--step", type=float, default=0.1)
    s.add_argument("--max-points", type=int, default=200_000)
    s.set_defaults(func=cmd_oracle_compare)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
