"""Set covering games, utility rules, welfare and the Rosenthal potential.

Agents are 0-indexed in code and in every serialized file.  A joint action
is a plain tuple holding, per agent, an index into that agent's action list.

Every quantity works in two numeric modes: exact (``fractions.Fraction``)
and 64-bit float.  Exact values stay exact through every computation here;
float sums go through ``math.fsum`` so results do not depend on resource
order.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

from .errors import CapacityError, InvalidInputError, InvalidRuleError, ResourceLimitError

Number = Union[Fraction, float, int]
JointAction = tuple  # tuple[int, ...], one action index per agent

DEFAULT_PROFILE_CAP = 10**7


def total(xs: Iterable[Number]) -> Number:
    """Sum that is exact for rationals and correctly rounded for floats."""
    xs = list(xs)
    if any(isinstance(x, float) for x in xs):
        return math.fsum(xs)
    return sum(xs, Fraction(0))


def parse_number(raw) -> Number:
    """Read a value from JSON or the command line.

    Strings (``"3/7"``, ``"0.25"``) become exact fractions, JSON floats stay
    floats and JSON integers become fractions.
    """
    if isinstance(raw, bool):
        raise InvalidInputError(f"not a number: {raw!r}")
    if isinstance(raw, (Fraction, float)):
        return raw
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, str):
        try:
            return Fraction(raw.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInputError(f"not a rational number: {raw!r}") from exc
    raise InvalidInputError(f"not a number: {raw!r}")


def format_number(x: Number) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(Fraction(x))


def exact(x: Number) -> Fraction:
    """Exact rational value of ``x`` (floats convert without rounding)."""
    return Fraction(x)


@dataclass(frozen=True)
class UtilityRule:
    """Per-resource payoff schedule ``f(1), ..., f(n_max)``.

    An agent covering resource ``r`` together with ``j - 1`` others earns
    ``v_r * f(j)`` from it.
    """

    values: tuple
    name: str = "custom"
    _prefix: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = tuple(self.values)
        if not values:
            raise InvalidRuleError("a utility rule needs at least f(1)")
        for j, v in enumerate(values, start=1):
            if isinstance(v, bool) or not isinstance(v, (Fraction, float, int)):
                raise InvalidRuleError(f"f({j}) = {v!r} is not a number")
            if not v >= 0:
                raise InvalidRuleError(f"f({j}) = {v} is negative")
        if not values[0] > 0:
            raise InvalidRuleError("f(1) must be positive")
        values = tuple(Fraction(v) if isinstance(v, int) else v for v in values)
        object.__setattr__(self, "values", values)
        prefix = [Fraction(0)]
        for v in values:
            prefix.append(prefix[-1] + v)
        object.__setattr__(self, "_prefix", tuple(prefix))

    @property
    def n_max(self) -> int:
        return len(self.values)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.values)

    def __call__(self, j: int) -> Number:
        if not 1 <= j <= len(self.values):
            raise CapacityError(f"rule {self.name!r} defines f(1..{self.n_max}), asked for f({j})")
        return self.values[j - 1]

    def cumulative(self, k: int) -> Number:
        """``f(1) + ... + f(k)``; zero for ``k = 0``."""
        if not 0 <= k <= len(self.values):
            raise CapacityError(f"rule {self.name!r} defines f(1..{self.n_max}), asked for f({k})")
        return self._prefix[k]

    def is_nonincreasing(self, upto: int | None = None) -> bool:
        vals = self.values[: upto or len(self.values)]
        return all(a >= b for a, b in zip(vals, vals[1:]))

    def scaled(self, c: Number) -> "UtilityRule":
        if not c > 0:
            raise InvalidInputError("scale factor must be positive")
        return UtilityRule(tuple(v / c for v in self.values), name=f"{self.name}/{c}")

    def truncated(self, n_max: int) -> "UtilityRule":
        return UtilityRule(self.values[:n_max], name=self.name)

    def to_exact(self) -> "UtilityRule":
        return UtilityRule(tuple(exact(v) for v in self.values), name=self.name)

    def to_float(self) -> "UtilityRule":
        return UtilityRule(tuple(float(v) for v in self.values), name=self.name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "values": [format_number(exact(v)) for v in self.values],
            "n_max": self.n_max,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "UtilityRule":
        try:
            values = tuple(parse_number(v) for v in data["values"])
        except KeyError as exc:
            raise InvalidRuleError("rule file needs a 'values' list") from exc
        n_max = data.get("n_max", len(values))
        if n_max != len(values):
            raise InvalidRuleError(f"n_max = {n_max} but {len(values)} values given")
        return cls(values, name=data.get("name", "custom"))


@dataclass(frozen=True)
class Resource:
    id: str
    value: Number

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, (Fraction, float, int)):
            raise InvalidInputError(f"resource {self.id!r}: value {self.value!r} is not a number")
        if not self.value >= 0:
            raise InvalidInputError(f"resource {self.id!r} has negative value {self.value}")
        if isinstance(self.value, int):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class SetCoveringGame:
    """Resources with values, and per-agent lists of resource subsets.

    ``actions[i][null_index[i]]`` is agent ``i``'s empty (null) action.
    """

    resources: tuple
    actions: tuple
    null_index: tuple
    _members: tuple = field(init=False, repr=False, compare=False)
    _values: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        resources = tuple(self.resources)
        actions = tuple(tuple(frozenset(act) for act in acts) for acts in self.actions)
        null_index = tuple(self.null_index)
        object.__setattr__(self, "resources", resources)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "null_index", null_index)

        if not actions:
            raise InvalidInputError("a game needs at least one agent")
        if len(null_index) != len(actions):
            raise InvalidInputError("null_index must have one entry per agent")
        position = {}
        for k, res in enumerate(resources):
            if res.id in position:
                raise InvalidInputError(f"duplicate resource id {res.id!r}")
            position[res.id] = k
        members = []
        for i, acts in enumerate(actions):
            if not acts:
                raise InvalidInputError(f"agent {i} has an empty action set")
            z = null_index[i]
            if not (0 <= z < len(acts)) or acts[z]:
                raise InvalidInputError(f"agent {i}: null_index {z} does not point at the empty action")
            row = []
            for act in acts:
                unknown = [r for r in act if r not in position]
                if unknown:
                    raise InvalidInputError(f"agent {i}: unknown resource ids {sorted(map(str, unknown))}")
                row.append(tuple(sorted(position[r] for r in act)))
            members.append(tuple(row))
        object.__setattr__(self, "_members", tuple(members))
        object.__setattr__(self, "_values", tuple(r.value for r in resources))

    @classmethod
    def build(
        cls,
        values: Sequence[Number],
        actions: Sequence[Sequence[Iterable]],
        ids: Sequence[str] | None = None,
        null_index: Sequence[int] | None = None,
    ) -> "SetCoveringGame":
        """Convenience constructor.

        ``values`` lists resource values; resource ids default to ``r1, r2, ...``.
        When ``null_index`` is omitted, each agent's first empty action is used,
        and an empty action is prepended for agents that have none.
        """
        ids = list(ids) if ids is not None else [f"r{k + 1}" for k in range(len(values))]
        if len(ids) != len(values):
            raise InvalidInputError("ids and values differ in length")
        resources = tuple(Resource(rid, v) for rid, v in zip(ids, values))
        acts = [[frozenset(a) for a in agent] for agent in actions]
        if null_index is None:
            null_index = []
            for agent in acts:
                if frozenset() not in agent:
                    agent.insert(0, frozenset())
                null_index.append(agent.index(frozenset()))
        return cls(resources, tuple(tuple(a) for a in acts), tuple(null_index))

    @property
    def n(self) -> int:
        return len(self.actions)

    @property
    def values(self) -> tuple:
        return self._values

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in self._values)

    def num_actions(self, i: int) -> int:
        return len(self.actions[i])

    def members(self, i: int, action: int) -> tuple:
        """Positions (into ``resources``) of the resources in an action."""
        return self._members[i][action]

    def null_profile(self) -> JointAction:
        return tuple(self.null_index)

    def profile_count(self) -> int:
        return math.prod(len(a) for a in self.actions)

    def resource_position(self, rid) -> int:
        for k, res in enumerate(self.resources):
            if res.id == rid:
                return k
        raise InvalidInputError(f"unknown resource id {rid!r}")

    def to_exact(self) -> "SetCoveringGame":
        res = tuple(Resource(r.id, exact(r.value)) for r in self.resources)
        return SetCoveringGame(res, self.actions, self.null_index)

    def to_float(self) -> "SetCoveringGame":
        res = tuple(Resource(r.id, float(r.value)) for r in self.resources)
        return SetCoveringGame(res, self.actions, self.null_index)

    def to_dict(self) -> dict:
        exact_mode = self.is_exact
        ids = [r.id for r in self.resources]
        order = {rid: k for k, rid in enumerate(ids)}
        return {
            "format": "set-covering-game",
            "agent_index_base": 0,
            "numeric": "rational" if exact_mode else "float",
            "n": self.n,
            "resources": [
                {"id": r.id, "value": format_number(r.value) if exact_mode else float(r.value)}
                for r in self.resources
            ],
            "actions": [[sorted(act, key=order.__getitem__) for act in acts] for acts in self.actions],
            "null_index": list(self.null_index),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SetCoveringGame":
        try:
            resources = tuple(Resource(r["id"], parse_number(r["value"])) for r in data["resources"])
            actions = tuple(tuple(frozenset(a) for a in acts) for acts in data["actions"])
            null_index = tuple(data["null_index"])
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed game document: {exc}") from exc
        if "n" in data and data["n"] != len(actions):
            raise InvalidInputError(f"n = {data['n']} but {len(actions)} action sets given")
        return cls(resources, actions, null_index)


def save_game(game: SetCoveringGame, path) -> None:
    Path(path).write_text(json.dumps(game.to_dict(), indent=2) + "\n")


def load_game(path) -> SetCoveringGame:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read game file {path}: {exc}") from exc
    return SetCoveringGame.from_dict(json.loads(text))


def check_profile(game: SetCoveringGame, a: JointAction) -> None:
    if len(a) != game.n:
        raise InvalidInputError(f"joint action has {len(a)} entries, game has {game.n} agents")
    for i, ai in enumerate(a):
        if not (isinstance(ai, int) and 0 <= ai < len(game.actions[i])):
            raise InvalidInputError(f"agent {i}: action index {ai!r} out of range")


def coverage_counts(game: SetCoveringGame, a: JointAction, skip: int | None = None) -> list:
    """Number of agents covering each resource (optionally ignoring agent ``skip``)."""
    counts = [0] * len(game.resources)
    for i, ai in enumerate(a):
        if i != skip:
            for k in game._members[i][ai]:
                counts[k] += 1
    return counts


def coverage_count(game: SetCoveringGame, a: JointAction, rid) -> int:
    check_profile(game, a)
    return coverage_counts(game, a)[game.resource_position(rid)]


def welfare(game: SetCoveringGame, a: JointAction) -> Number:
    """Total value of the union of covered resources."""
    check_profile(game, a)
    return _welfare(game, a)


def _welfare(game: SetCoveringGame, a: JointAction) -> Number:
    covered = set()
    for i, ai in enumerate(a):
        covered.update(game._members[i][ai])
    return total(game._values[k] for k in covered)


def action_utility(game: SetCoveringGame, rule: UtilityRule, i: int, action: int, others: list) -> Number:
    """Utility of agent ``i`` playing ``action`` when ``others`` are the
    coverage counts produced by everyone else."""
    vals = game._values
    return total(vals[k] * rule(others[k] + 1) for k in game._members[i][action])


def utility(game: SetCoveringGame, rule: UtilityRule, i: int, a: JointAction) -> Number:
    check_profile(game, a)
    return action_utility(game, rule, i, a[i], coverage_counts(game, a, skip=i))


def potential(game: SetCoveringGame, rule: UtilityRule, a: JointAction) -> Number:
    """Rosenthal potential: sum over resources of v_r * (f(1) + ... + f(|a|_r))."""
    check_profile(game, a)
    counts = coverage_counts(game, a)
    return total(v * rule.cumulative(c) for v, c in zip(game._values, counts) if c)


def iter_profiles(game: SetCoveringGame, cap: int = DEFAULT_PROFILE_CAP) -> Iterator[JointAction]:
    """All joint actions in lexicographic order of the index vector."""
    size = game.profile_count()
    if size > cap:
        raise ResourceLimitError(f"{size} joint actions exceed the enumeration cap of {cap}")
    return itertools.product(*(range(len(acts)) for acts in game.actions))


def optimal_welfare(game: SetCoveringGame, cap: int = DEFAULT_PROFILE_CAP) -> tuple:
    """Exact maximum welfare and the lexicographically smallest maximizer."""
    best, best_a = None, None
    for a in iter_profiles(game, cap):
        w = _welfare(game, a)
        if best is None or w > best:
            best, best_a = w, a
    return best, best_a
