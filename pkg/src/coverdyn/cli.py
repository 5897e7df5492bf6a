"""Command-line entry point.

Exit status is 0 when every requested check passes, 1 when a check fails
or a computation errors, and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import dynamics, lp, montecarlo, rules
from .constructions import GameFamily, build_gf, search_games, verify_gf, verify_worst_case
from .errors import (
    ConstructionInapplicableError,
    CoverGameError,
    DomainError,
    InvalidInputError,
)
from .game import format_number, load_game, save_game


class UsageError(Exception):
    pass


def _num(x) -> str | None:
    if x is None:
        return None
    return format_number(x)


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text.rstrip("\n") + "\n")


def _rule(args, n_max: int):
    return rules.parse_rule_spec(args.rule, n_max)


def cmd_rule(args) -> int:
    rule = _rule(args, args.n)
    if args.out:
        rules.save_rule(rule, args.out)
    text = "\n".join(f"f({j}) = {format_number(v)}" for j, v in enumerate(rule.values, start=1))
    _emit(args, rule.to_dict(), f"rule {rule.name}\n{text}")
    return 0


def cmd_pob(args) -> int:
    rule = _rule(args, args.n)
    pob = rules.pob_one_round(rule, args.n)
    _emit(args, {"rule": rule.name, "n": args.n, "pob_one_round": _num(pob)},
          f"one-round price of best response ({rule.name}, n={args.n}): {_num(pob)} ~ {float(pob):.10g}")
    return 0


def cmd_poa(args) -> int:
    rule = _rule(args, args.n)
    poa = rules.poa_value(rule, args.n)
    _emit(args, {"rule": rule.name, "n": args.n, "poa": _num(poa)},
          f"price of anarchy ({rule.name}, n={args.n}): {_num(poa)} ~ {float(poa):.10g}")
    return 0


def cmd_frontier(args) -> int:
    if args.C is not None:
        try:
            grid = [Fraction(args.C)]
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"--C expects a rational number, got {args.C!r}")
    else:
        grid = rules.frontier_grid(args.grid)
    try:
        points = rules.frontier_sweep(grid)
    except DomainError as exc:
        raise UsageError(f"{exc}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["C", "pob_opt"])
    for p in points:
        writer.writerow([repr(float(p.poa)), repr(float(p.pob))])
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    payload = {"points": [{"C": _num(p.poa), "pob_opt": _num(p.pob)} for p in points]}
    _emit(args, payload, buf.getvalue())
    return 0


def _report_text(title, rep) -> str:
    return (
        f"{title}\n  predicted {_num(rep.predicted)}\n  achieved  {_num(rep.achieved)}\n"
        f"  matched   {rep.matched}\n  witness end profile {list(rep.witness.end)}"
    )


def _report_payload(rep) -> dict:
    return {
        "predicted": _num(rep.predicted),
        "achieved": _num(rep.achieved),
        "matched": rep.matched,
        "witness_end": list(rep.witness.end),
        "witness_actions": [s.action for s in rep.witness.steps],
    }


def cmd_worstcase(args) -> int:
    rule = _rule(args, args.n)
    rep = verify_worst_case(rule, args.n)
    if args.out:
        save_game(rep.game, args.out)
    _emit(args, _report_payload(rep), _report_text(f"worst-case one-round game, {rule.name}, n={args.n}", rep))
    return 0 if rep.matched else 1


def cmd_gf(args) -> int:
    rule = _rule(args, max(args.n, 2))
    rep = verify_gf(rule, args.n, args.k)
    if args.out:
        save_game(build_gf(rule.to_exact(), args.n), args.out)
    _emit(args, _report_payload(rep), _report_text(f"G^f construction, {rule.name}, n={args.n}, k={args.k}", rep))
    return 0 if rep.matched else 1


def cmd_lp_verify(args) -> int:
    rule = _rule(args, args.n).to_exact()
    program = lp.build_dual_lp(rule, args.n)
    if args.dump:
        program.write(args.dump)
    sol = lp.solve_lp(program)
    formula = rules.pob_one_round(rule, args.n)
    ok = 1 / sol.mu == formula
    payload = {
        "n": args.n,
        "rule": rule.name,
        "constraints": len(program.constraints),
        "mu": _num(sol.mu),
        "lambda": [_num(x) for x in sol.lam],
        "lp_pob": _num(1 / sol.mu),
        "pob_formula": _num(formula),
        "equal": ok,
    }
    _emit(args, payload,
          f"LP ({len(program.constraints)} constraints): pob = {_num(1 / sol.mu)}\n"
          f"closed form:                pob = {_num(formula)}\nequal: {ok}")
    return 0 if ok else 1


def cmd_search(args) -> int:
    family = GameFamily.load(args.family)
    rule = _rule(args, max(family.n, 2))
    best, game = search_games(family, rule, args.k, workers=args.threads)
    bound = rules.pob_one_round(rule.to_exact(), family.n) if family.n >= 2 else None
    ok = bound is None or args.k != 1 or best >= bound
    if args.out:
        save_game(game, args.out)
    payload = {"minimum_pob": _num(best), "pob_formula": _num(bound), "above_bound": ok, "witness": game.to_dict()}
    _emit(args, payload, f"minimum pob over family: {_num(best)} (closed-form bound {_num(bound)})")
    return 0 if ok else 1


def cmd_dynamics(args) -> int:
    game = load_game(args.game)
    rule = _rule(args, game.n)
    traj = dynamics.run_round(game, rule, args.k, args.policy, seed=args.seed)
    if args.out:
        traj.write_csv(args.out)
    payload = {"end": list(traj.end), "welfare": [_num(w) for w in traj.welfares]}
    if args.end_states:
        ends = dynamics.enumerate_end_states(game, rule, args.k)
        dynamics.export_end_states(game, ends, args.end_states)
        payload["end_state_count"] = len(ends)
    lines = [f"step {s.step}: agent {s.agent} -> action {s.action}, welfare {_num(s.welfare)}" for s in traj.steps]
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_montecarlo(args) -> int:
    cfg = montecarlo.ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg = montecarlo.ExperimentConfig(**{**cfg.to_dict(), "seed": args.seed})
    series = montecarlo.run_experiment(cfg, workers=args.threads)
    montecarlo.export_series(series, args.out)
    summary = series.summary(cfg.n)
    if args.summary:
        Path(args.summary).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _emit(args, summary, "\n".join(f"{k}: {v}" for k, v in summary.items()))
    return 0


def cmd_verify(args) -> int:
    n, k = args.n, args.k
    rule = _rule(args, max(n, 2)).to_exact()
    notes = []
    pob_formula = rules.pob_one_round(rule, n)
    lp_value = None
    if n <= lp.MAX_AGENTS:
        lp_value = lp.lp_pob(rule, n)
    else:
        notes.append(f"LP oracle skipped: n > {lp.MAX_AGENTS}")
    construction = None
    try:
        construction = verify_worst_case(rule, n).achieved
    except ConstructionInapplicableError as exc:
        notes.append(f"worst-case construction skipped: {exc}")
    gf = verify_gf(rule, n, k).achieved
    poa = rules.poa_value(rule, n)
    consistent = (
        lp_value in (None, pob_formula)
        and construction in (None, pob_formula)
        and gf == Fraction(1, 2)
        and pob_formula <= Fraction(1, 2)
    )
    payload = {
        "rule": rule.name,
        "n": n,
        "k": k,
        "pob_formula": _num(pob_formula),
        "lp_pob": _num(lp_value),
        "construction_pob": _num(construction),
        "gf_pob": _num(gf),
        "poa_formula": _num(poa),
        "all_consistent": consistent,
        "notes": notes,
    }
    text = "\n".join(f"{key}: {payload[key]}" for key in
                     ["rule", "n", "k", "pob_formula", "lp_pob", "construction_pob", "gf_pob", "poa_formula",
                      "all_consistent"] + (["notes"] if notes else []))
    _emit(args, payload, text)
    return 0 if consistent else 1


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--json", action="store_true", help="machine-readable JSON on stdout")
    shared.add_argument("--threads", type=int, default=1, help="worker cap (output does not depend on it)")
    shared.add_argument("--seed", type=int, default=None)
    shared.add_argument("--out", default=None)

    parser = argparse.ArgumentParser(prog="coverdyn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[shared], help=help_)
        p.set_defaults(func=func)
        return p

    def rule_n(p):
        p.add_argument("--rule", required=True, help="mc | poa-opt | pareto:X=<q> | pareto:C=<q> | custom:@file.json")
        p.add_argument("--n", type=int, required=True)

    rule_n(add("rule", cmd_rule, "print a utility rule"))
    rule_n(add("pob", cmd_pob, "closed-form one-round price of best response"))
    rule_n(add("poa", cmd_poa, "closed-form price of anarchy"))
    p = add("frontier", cmd_frontier, "optimal PoA / PoB trade-off curve as CSV")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--grid", type=int)
    g.add_argument("--C")
    rule_n(add("worstcase", cmd_worstcase, "verify the one-round worst-case construction"))
    p = add("gf", cmd_gf, "verify the two-agent construction with efficiency 1/2")
    rule_n(p)
    p.add_argument("--k", type=int, default=1)
    p = add("lp-verify", cmd_lp_verify, "solve the dual LP exactly and compare with the closed form")
    rule_n(p)
    p.add_argument("--dump", default=None, help="write the LP listing here")
    p = add("search", cmd_search, "brute-force the minimum efficiency over a small game family")
    p.add_argument("--family", required=True)
    p.add_argument("--rule", required=True)
    p.add_argument("--k", type=int, default=1)
    p = add("dynamics", cmd_dynamics, "run k best-response rounds on a game file")
    p.add_argument("--game", required=True)
    p.add_argument("--rule", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--policy", default=dynamics.TiePolicy.LOWEST.value,
                   choices=[t.value for t in dynamics.TiePolicy if t is not dynamics.TiePolicy.ENUMERATE_ALL])
    p.add_argument("--end-states", default=None, help="also write E(k) as JSON here")
    p = add("montecarlo", cmd_montecarlo, "random-game comparison of f_MC and f_PoA")
    p.add_argument("--config", required=True)
    p.add_argument("--summary", default=None)
    p = add("verify", cmd_verify, "cross-check closed form, LP, constructions in one report")
    rule_n(p)
    p.add_argument("--k", type=int, default=1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "montecarlo" and not args.out:
        parser.error("montecarlo needs --out")
    try:
        return args.func(args)
    except (UsageError, InvalidInputError) as exc:
        print(f"coverdyn {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except CoverGameError as exc:
        print(f"coverdyn {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
