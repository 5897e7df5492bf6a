"""Best responses, k-round best-response dynamics and empirical efficiency.

A k-round run has ``n * k`` steps starting from the all-null profile; at
step ``m`` (1-based) agent ``(m - 1) % n`` (0-based) best-responds while all
other agents keep their actions.  In 1-based terms agents act in the fixed
order 1, ..., n, repeated k times.
"""

from __future__ import annotations

import csv
import enum
import json
import random
from dataclasses import dataclass
from pathlib import Path

from .errors import InvalidInputError, ResourceLimitError, UndefinedRatioError
from .game import (
    DEFAULT_PROFILE_CAP,
    JointAction,
    Number,
    SetCoveringGame,
    UtilityRule,
    _welfare,
    action_utility,
    check_profile,
    coverage_counts,
    format_number,
    iter_profiles,
    optimal_welfare,
    potential,
)
from .rules import poa_value, pob_one_round

DEFAULT_LEAF_CAP = 10**6


class TiePolicy(str, enum.Enum):
    ENUMERATE_ALL = "enumerate-all"
    LOWEST = "lowest-action-index"
    PREFER_STAY = "prefer-stay"
    SEEDED_RANDOM = "seeded-random"


@dataclass(frozen=True)
class Step:
    step: int
    agent: int
    action: int
    welfare: Number
    potential: Number


@dataclass(frozen=True)
class Trajectory:
    start: JointAction
    steps: tuple
    end: JointAction

    @property
    def welfares(self) -> list:
        return [s.welfare for s in self.steps]

    @property
    def potentials(self) -> list:
        return [s.potential for s in self.steps]

    def write_csv(self, path) -> None:
        try:
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["step", "agent", "action_index", "welfare", "potential"])
                for s in self.steps:
                    writer.writerow([s.step, s.agent, s.action, format_number(s.welfare), format_number(s.potential)])
        except OSError as exc:
            raise OSError(f"cannot write trajectory to {path}: {exc}") from exc


def acting_agent(step: int, n: int) -> int:
    """0-based agent that moves at 1-based step ``step``."""
    return (step - 1) % n


def _best_set(game: SetCoveringGame, rule: UtilityRule, i: int, a: JointAction) -> list:
    others = coverage_counts(game, a, skip=i)
    utils = [action_utility(game, rule, i, x, others) for x in range(len(game.actions[i]))]
    top = max(utils)
    return [x for x, u in enumerate(utils) if u == top]


def best_responses(game: SetCoveringGame, rule: UtilityRule, i: int, a: JointAction) -> frozenset:
    """All utility-maximizing action indices of agent ``i`` against ``a``."""
    check_profile(game, a)
    if not 0 <= i < game.n:
        raise InvalidInputError(f"agent {i} out of range")
    return frozenset(_best_set(game, rule, i, a))


def is_nash(game: SetCoveringGame, rule: UtilityRule, a: JointAction) -> bool:
    check_profile(game, a)
    return all(a[i] in _best_set(game, rule, i, a) for i in range(game.n))


def _replace(a: JointAction, i: int, x: int) -> JointAction:
    return a[:i] + (x,) + a[i + 1:]


def run_round(
    game: SetCoveringGame,
    rule: UtilityRule,
    k: int,
    policy: TiePolicy = TiePolicy.LOWEST,
    seed: int | None = None,
) -> Trajectory:
    """One sampled k-round trajectory; ties resolved by ``policy``."""
    policy = TiePolicy(policy)
    if policy is TiePolicy.ENUMERATE_ALL:
        raise InvalidInputError("run_round samples one path; use enumerate_end_states for enumerate-all")
    if k < 1:
        raise InvalidInputError("k must be at least 1")
    rng = random.Random(seed)
    a = start = game.null_profile()
    steps = []
    for m in range(1, game.n * k + 1):
        i = acting_agent(m, game.n)
        best = _best_set(game, rule, i, a)
        if policy is TiePolicy.LOWEST:
            x = best[0]
        elif policy is TiePolicy.PREFER_STAY:
            x = a[i] if a[i] in best else best[0]
        else:
            x = rng.choice(best)
        a = _replace(a, i, x)
        steps.append(Step(m, i, x, _welfare(game, a), potential(game, rule, a)))
    return Trajectory(start, tuple(steps), a)


def _explore(game: SetCoveringGame, rule: UtilityRule, k: int, cap: int) -> list:
    """Level-by-level traversal of every tie branch.

    Returns one dict per step mapping each reachable profile to the first
    (in sorted order) predecessor that reaches it.  Identical successor
    profiles are merged, so each level holds distinct profiles only.
    """
    if k < 1:
        raise InvalidInputError("k must be at least 1")
    levels = [{game.null_profile(): None}]
    for m in range(1, game.n * k + 1):
        i = acting_agent(m, game.n)
        nxt = {}
        for a in sorted(levels[-1]):
            for x in _best_set(game, rule, i, a):
                b = _replace(a, i, x)
                if b not in nxt:
                    nxt[b] = a
            if len(nxt) > cap:
                raise ResourceLimitError(f"more than {cap} distinct profiles at step {m}")
        levels.append(nxt)
    return levels


def enumerate_end_states(
    game: SetCoveringGame, rule: UtilityRule, k: int, cap: int = DEFAULT_LEAF_CAP
) -> frozenset:
    """Every profile reachable at the end of some tie-consistent k-round run."""
    return frozenset(_explore(game, rule, k, cap)[-1])


def _trajectory_to(game, rule, levels, end) -> Trajectory:
    path = [end]
    for level in reversed(levels[1:]):
        path.append(level[path[-1]])
    path.reverse()
    steps = []
    for m, b in enumerate(path[1:], start=1):
        i = acting_agent(m, game.n)
        steps.append(Step(m, i, b[i], _welfare(game, b), potential(game, rule, b)))
    return Trajectory(path[0], tuple(steps), end)


def worst_trajectory(
    game: SetCoveringGame, rule: UtilityRule, k: int, cap: int = DEFAULT_LEAF_CAP
) -> Trajectory:
    """A tie-consistent trajectory ending in a minimum-welfare member of E(k).

    Among minimum-welfare end states the lexicographically smallest is used.
    """
    levels = _explore(game, rule, k, cap)
    end = min(levels[-1], key=lambda a: (_welfare(game, a), a))
    return _trajectory_to(game, rule, levels, end)


def nash_profiles(game: SetCoveringGame, rule: UtilityRule, cap: int = DEFAULT_PROFILE_CAP) -> list:
    return [a for a in iter_profiles(game, cap) if is_nash(game, rule, a)]


def _ratio(num: Number, den: Number) -> Number:
    if den == 0:
        raise UndefinedRatioError("optimal welfare is zero; efficiency ratio undefined")
    return num / den


def empirical_poa(game: SetCoveringGame, rule: UtilityRule, cap: int = DEFAULT_PROFILE_CAP) -> Number:
    """Worst Nash welfare over optimal welfare, by exhaustive enumeration."""
    opt, _ = optimal_welfare(game, cap)
    if opt == 0:
        raise UndefinedRatioError("optimal welfare is zero; efficiency ratio undefined")
    nash = nash_profiles(game, rule, cap)
    if not nash:
        raise RuntimeError("no pure Nash equilibrium found in a potential game; this is a bug")
    return _ratio(min(_welfare(game, a) for a in nash), opt)


@dataclass(frozen=True)
class EfficiencyReport:
    n: int
    k: int
    pob_empirical: Number
    pob_formula: Number | None
    poa_empirical: Number | None
    poa_formula: Number | None
    witness_end: JointAction
    witness_opt: JointAction

    def to_dict(self) -> dict:
        def fmt(x):
            return None if x is None else format_number(x)

        return {
            "n": self.n,
            "k": self.k,
            "pob_empirical": fmt(self.pob_empirical),
            "pob_formula": fmt(self.pob_formula),
            "poa_empirical": fmt(self.poa_empirical),
            "poa_formula": fmt(self.poa_formula),
            "witness_end": list(self.witness_end),
            "witness_opt": list(self.witness_opt),
        }


def empirical_pob(
    game: SetCoveringGame,
    rule: UtilityRule,
    k: int,
    cap: int = DEFAULT_LEAF_CAP,
    profile_cap: int = DEFAULT_PROFILE_CAP,
    with_poa: bool = True,
) -> tuple:
    """Exact min over E(k) of welfare divided by optimal welfare.

    Returns ``(ratio, EfficiencyReport)``.  Closed-form fields of the report
    are ``None`` when the formula does not apply (n < 2 or n > n_max).
    """
    opt, opt_a = optimal_welfare(game, profile_cap)
    if opt == 0:
        raise UndefinedRatioError("optimal welfare is zero; efficiency ratio undefined")
    ends = enumerate_end_states(game, rule, k, cap)
    worst = min(ends, key=lambda a: (_welfare(game, a), a))
    ratio = _ratio(_welfare(game, worst), opt)
    formula_ok = 2 <= game.n <= rule.n_max
    report = EfficiencyReport(
        n=game.n,
        k=k,
        pob_empirical=ratio,
        pob_formula=pob_one_round(rule, game.n) if formula_ok else None,
        poa_empirical=empirical_poa(game, rule, profile_cap) if with_poa else None,
        poa_formula=poa_value(rule, game.n) if formula_ok else None,
        witness_end=worst,
        witness_opt=opt_a,
    )
    return ratio, report


def export_end_states(game: SetCoveringGame, states, path) -> None:
    """Write E(k) as a JSON list of ``{"profile": [...], "welfare": "..."}``, 0-based agents."""
    rows = [
        {"profile": list(a), "welfare": format_number(_welfare(game, a))}
        for a in sorted(states)
    ]
    try:
        Path(path).write_text(json.dumps(rows, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write end states to {path}: {exc}") from exc
