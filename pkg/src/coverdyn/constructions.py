"""Worst-case game instances and a brute-force search over small games."""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .dynamics import Trajectory, empirical_pob, worst_trajectory
from .errors import (
    ConstructionInapplicableError,
    InvalidInputError,
    ResourceLimitError,
    UndefinedRatioError,
)
from .game import Number, SetCoveringGame, UtilityRule, parse_number
from .rules import pob_one_round


@dataclass(frozen=True)
class ConstructionReport:
    game: SetCoveringGame
    predicted: Number
    achieved: Number
    witness: Trajectory

    @property
    def matched(self) -> bool:
        return self.predicted == self.achieved


def worst_case_one_round(rule: UtilityRule, n: int) -> SetCoveringGame:
    """Game whose one-round price of best response equals the closed form.

    Every agent can take the shared resource ``r1`` (value 1).  Agent ``i``
    (1-based, ``i < n``) also has a private resource worth ``f(i)/f(1)``,
    which makes it exactly indifferent between the two once ``i - 1`` agents
    sit on ``r1``.  Agent ``n`` can only take ``r1``.  The ``r1`` action is
    listed first, so lowest-index tie-breaking walks the bad path.
    """
    if n < 2:
        raise InvalidInputError("the construction needs n >= 2")
    if rule.n_max < n:
        raise InvalidInputError(f"rule defines f up to {rule.n_max}, need {n}")
    f1 = rule(1)
    vals = rule.values[:n]
    if min(vals) != vals[-1]:
        raise ConstructionInapplicableError(
            f"min_j f(j) over 1..{n} is not attained at j = n; the construction needs f(n) = min f"
        )
    values = [Fraction(1) if rule.is_exact else 1.0]
    ids = ["r1"]
    actions = []
    for i in range(1, n):
        ids.append(f"s{i}")
        values.append(rule(i) / f1)
        actions.append([frozenset(), {"r1"}, {f"s{i}"}])
    actions.append([frozenset(), {"r1"}])
    return SetCoveringGame.build(values, actions, ids=ids)


def build_gf(rule: UtilityRule, n: int) -> SetCoveringGame:
    """Two-agent game (padded to ``n``) whose k-round efficiency is 1/2 for every rule.

    Resources r1, r2, r3, r4 are worth 1, 1, f(2), 0.  Agent 1 chooses among
    {r1}, {r2}; agent 2 among {r3}, {r1}; agents 3..n may only take the
    worthless r4.
    """
    if n < 2:
        raise InvalidInputError("the construction needs n >= 2")
    if rule.n_max < max(2, n - 2):
        raise InvalidInputError(f"rule defines f up to {rule.n_max}, need {max(2, n - 2)}")
    one = Fraction(1) if rule.is_exact else 1.0
    values = [one, one, rule(2), 0 * one]
    actions = [
        [frozenset(), {"r1"}, {"r2"}],
        [frozenset(), {"r3"}, {"r1"}],
    ] + [[frozenset(), {"r4"}] for _ in range(n - 2)]
    return SetCoveringGame.build(values, actions, ids=["r1", "r2", "r3", "r4"])


def verify_worst_case(rule: UtilityRule, n: int) -> ConstructionReport:
    """Compare the closed form with exhaustive one-round dynamics, exactly."""
    rule = rule.to_exact()
    game = worst_case_one_round(rule, n)
    achieved, _ = empirical_pob(game, rule, 1, with_poa=False)
    return ConstructionReport(game, pob_one_round(rule, n), achieved, worst_trajectory(game, rule, 1))


def verify_gf(rule: UtilityRule, n: int, k: int) -> ConstructionReport:
    rule = rule.to_exact()
    game = build_gf(rule, n)
    achieved, _ = empirical_pob(game, rule, k, with_poa=False)
    return ConstructionReport(game, Fraction(1, 2), achieved, worst_trajectory(game, rule, k))


@dataclass(frozen=True)
class GameFamily:
    """All games with ``n`` agents, at most ``max_actions`` distinct non-null
    actions per agent, 1..``max_resources`` resources, and resource values
    drawn from ``value_grid`` (default {0, f(2), 1/2, 1})."""

    n: int
    max_actions: int
    max_resources: int
    value_grid: tuple | None = None

    def __post_init__(self):
        if not (1 <= self.n <= 3 and 1 <= self.max_actions <= 3 and 1 <= self.max_resources <= 4):
            raise ResourceLimitError(
                "search families are limited to n <= 3, max_actions <= 3, max_resources <= 4"
            )

    def grid(self, rule: UtilityRule) -> tuple:
        raw = self.value_grid
        if raw is None:
            raw = (Fraction(0), Fraction(rule(2)) if rule.n_max >= 2 else Fraction(0), Fraction(1, 2), Fraction(1))
        return tuple(sorted({Fraction(v) for v in raw}))

    def to_dict(self) -> dict:
        d = {"n": self.n, "max_actions": self.max_actions, "max_resources": self.max_resources}
        if self.value_grid is not None:
            d["value_grid"] = [str(Fraction(v)) for v in self.value_grid]
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "GameFamily":
        try:
            grid = data.get("value_grid")
            return cls(
                n=int(data["n"]),
                max_actions=int(data["max_actions"]),
                max_resources=int(data["max_resources"]),
                value_grid=None if grid is None else tuple(parse_number(v) for v in grid),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed family descriptor: {exc}") from exc

    @classmethod
    def load(cls, path) -> "GameFamily":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except OSError as exc:
            raise InvalidInputError(f"cannot read family file {path}: {exc}") from exc


def _remap(mask: int, perm) -> int:
    out = 0
    for k, target in enumerate(perm):
        if mask >> k & 1:
            out |= 1 << target
    return out


def _candidates(family: GameFamily, grid: tuple, cap: int):
    """Yield (values, profile-of-action-masks) for canonical family members.

    Games are canonical under resource relabeling: value vectors are sorted
    and, among relabelings that keep the values, only the lexicographically
    smallest action structure is kept.  Games with a resource nobody can
    cover are skipped (they equal a smaller game).  Agent order is not
    canonicalized, since the round order matters.
    """
    total = 0
    plans = []
    for R in range(1, family.max_resources + 1):
        masks = range(1, 1 << R)
        sets = [c for size in range(family.max_actions + 1) for c in itertools.combinations(masks, size)]
        vectors = list(itertools.combinations_with_replacement(grid, R))
        total += len(vectors) * len(sets) ** family.n
        plans.append((R, sets, vectors))
    if total > cap:
        raise ResourceLimitError(f"family has {total} raw candidates, over the cap of {cap}")
    for R, sets, vectors in plans:
        full = (1 << R) - 1
        for values in vectors:
            perms = [
                p for p in itertools.permutations(range(R))
                if p != tuple(range(R)) and all(values[p[k]] == values[k] for k in range(R))
            ]
            for profile in itertools.product(sets, repeat=family.n):
                used = 0
                for acts in profile:
                    for m in acts:
                        used |= m
                if used != full:
                    continue
                if any(
                    tuple(tuple(sorted(_remap(m, p) for m in acts)) for acts in profile) < profile
                    for p in perms
                ):
                    continue
                yield values, profile


def _to_game(values, profile) -> SetCoveringGame:
    ids = [f"r{k + 1}" for k in range(len(values))]
    actions = [
        [frozenset()] + [frozenset(ids[k] for k in range(len(values)) if m >> k & 1) for m in acts]
        for acts in profile
    ]
    return SetCoveringGame.build(list(values), actions, ids=ids)


def _evaluate(chunk, rule, k):
    best = None
    for idx, values, profile in chunk:
        game = _to_game(values, profile)
        try:
            ratio, _ = empirical_pob(game, rule, k, with_poa=False)
        except UndefinedRatioError:
            continue
        if best is None or ratio < best[0]:
            best = (ratio, idx, game)
    return best


def search_games(
    family: GameFamily, rule: UtilityRule, k: int, workers: int = 1, cap: int = 500_000
) -> tuple:
    """Minimum k-round price of best response over every game in ``family``.

    Returns ``(minimum, witness_game)``.  The earliest game in enumeration
    order wins ties, so the result does not depend on ``workers``.
    """
    rule = rule.to_exact()
    if rule.n_max < family.n:
        raise InvalidInputError(f"rule defines f up to {rule.n_max}, family has {family.n} agents")
    items = [(idx, v, p) for idx, (v, p) in enumerate(_candidates(family, family.grid(rule), cap))]
    workers = max(1, workers)
    chunks = [items[w::workers] for w in range(workers)]
    if workers == 1:
        results = [_evaluate(chunks[0], rule, k)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _evaluate(c, rule, k), chunks))
    results = [r for r in results if r is not None]
    if not results:
        raise InvalidInputError("family contains no game with positive optimal welfare")
    ratio, _, game = min(results, key=lambda r: (r[0], r[1]))
    return ratio, game
