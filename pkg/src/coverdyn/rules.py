"""Utility rule families and closed-form efficiency expressions.

Rules built here:

* ``mc_rule``            marginal contribution, f = (1, 0, 0, ...)
* ``poa_optimal_rule``   the rule with the best possible price of anarchy, 1 - 1/e
* ``pareto_rule``        the one-parameter family trading price of anarchy
                         ``1 / (1 + X)`` against one-round price of best response

Closed forms: ``pob_one_round``, ``poa_value``, ``poa_value_nonincreasing``
and the optimal trade-off curve ``frontier_point`` / ``frontier_sweep``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import mpmath

from .errors import DomainError, InvalidInputError, InvalidRuleError
from .game import Number, UtilityRule, total

E_MINUS_1 = math.e - 1.0
POA_MAX = 1.0 - 1.0 / math.e
#: Trade-off inputs this close to 1 - 1/e are treated as the endpoint itself.
ENDPOINT_TOL = 1e-9


def mc_rule(n_max: int) -> UtilityRule:
    if n_max < 1:
        raise InvalidInputError("n_max must be at least 1")
    return UtilityRule((Fraction(1),) + (Fraction(0),) * (n_max - 1), name="mc")


def poa_optimal_rule(n_max: int, tol: float = 1e-15) -> UtilityRule:
    """f(j) = (j-1)!/(e-1) * sum_{l >= j} 1/l!, evaluated as a tail sum.

    The tail stops once the next term falls below ``tol`` times the partial
    sum.  Values are floats (the rule is irrational).
    """
    if n_max < 1:
        raise InvalidInputError("n_max must be at least 1")
    if not tol > 0:
        raise InvalidInputError("tol must be positive")
    values = []
    for j in range(1, n_max + 1):
        # term for l = j is (j-1)!/j! = 1/j; each next term divides by l + 1
        term = 1.0 / j
        terms = [term]
        l = j
        while True:
            l += 1
            term /= l
            if term < tol * math.fsum(terms):
                break
            terms.append(term)
        values.append(math.fsum(terms) / E_MINUS_1)
    return UtilityRule(tuple(values), name="poa-opt")


@dataclass(frozen=True)
class ParetoParameter:
    """Slack ``X`` of the trade-off family; its price of anarchy is 1/(1+X).

    ``X`` may be a ``Fraction`` (exact rule values), a float, or an
    ``mpmath.mpf`` for irrational values such as 1/(e-1).
    """

    X: object

    def __post_init__(self):
        if not self.X >= 0:
            raise DomainError(f"X must be nonnegative, got {self.X}")

    @classmethod
    def from_C(cls, C) -> "ParetoParameter":
        if not C > 0:
            raise DomainError(f"C must be positive, got {C}")
        if isinstance(C, float):
            C = Fraction(C)
        return cls((1 - C) / C)

    @classmethod
    def poa_optimal(cls, dps: int = 60) -> "ParetoParameter":
        """X = 1/(e-1), carried at ``dps`` significant digits."""
        with mpmath.workdps(dps):
            return cls(1 / (mpmath.e - 1))

    @property
    def C(self):
        return 1 / (1 + self.X)


def _clamped_closed_form(X: Fraction, n_max: int) -> list:
    # f(j) = (j-1)! * (1 - X * sum_{t=1}^{j-1} 1/t!), clamped at zero; the
    # bracket only shrinks with j, so everything after the first zero is zero
    values = []
    partial = Fraction(0)
    fact = 1
    for j in range(1, n_max + 1):
        factor = 1 - X * partial
        if factor <= 0:
            break
        values.append(fact * factor)
        fact *= j
        partial += Fraction(1, fact)
    values += [Fraction(0)] * (n_max - len(values))
    return values


def _closed_form_mp(X, n_max: int) -> list:
    # (j-1)! amplifies the cancellation in the bracket, so carry enough digits
    digits = 30 + int(mpmath.log10(mpmath.factorial(n_max)))
    values = []
    with mpmath.workdps(digits):
        X = mpmath.mpf(X)
        partial = mpmath.mpf(0)
        fact = mpmath.mpf(1)
        for j in range(1, n_max + 1):
            factor = 1 - X * partial
            if factor <= 0:
                break
            values.append(float(fact * factor))
            fact *= j
            partial += 1 / fact
    return values + [0.0] * (n_max - len(values))


def pareto_rule(p: ParetoParameter, n_max: int) -> UtilityRule:
    """Closed-form rule of the trade-off family.

    Exact ``Fraction`` input gives exact values.  A float ``X`` is converted
    to its exact binary value and the closed form is evaluated without
    rounding, so only the final conversion to float rounds.
    """
    if n_max < 1:
        raise InvalidInputError("n_max must be at least 1")
    X = p.X
    if isinstance(X, (Fraction, int)):
        values = _clamped_closed_form(Fraction(X), n_max)
    elif isinstance(X, float):
        values = [float(v) for v in _clamped_closed_form(Fraction(X), n_max)]
    else:
        values = _closed_form_mp(X, n_max)
    return UtilityRule(tuple(values), name=f"pareto(X={_label(X)})")


def pareto_recursion(X, n_max: int) -> UtilityRule:
    """The raw recursion f(1) = 1, f(j+1) = max(j f(j) - X, 0).

    Float input multiplies rounding error by j at every step; use it in
    exact mode, or as a cross-check only.
    """
    one = Fraction(1) if isinstance(X, (Fraction, int)) else 1.0
    values = [one]
    for j in range(1, n_max):
        values.append(max(j * values[-1] - X, 0 * one))
    return UtilityRule(tuple(values), name=f"pareto-rec(X={_label(X)})")


def _label(X) -> str:
    if isinstance(X, Fraction):
        return str(X)
    return mpmath.nstr(X, 12) if not isinstance(X, float) else repr(X)


def _check_n(rule: UtilityRule, n: int) -> None:
    if not 2 <= n <= rule.n_max:
        raise InvalidInputError(f"need 2 <= n <= n_max = {rule.n_max}, got n = {n}")
    if not rule(1) > 0:
        raise InvalidRuleError("f(1) must be positive")


def _reciprocal(x: Number) -> Number:
    return Fraction(1) / x if isinstance(x, Fraction) else 1.0 / x


def pob_one_round(rule: UtilityRule, n: int) -> Number:
    """One-round price of best response over all set covering games with n agents.

    1/PoB = (f(1) + ... + f(n) - min_j f(j)) / f(1) + 1.
    """
    _check_n(rule, n)
    vals = rule.values[:n]
    return _reciprocal((total(vals) - min(vals)) / vals[0] + 1)


def poa_value(rule: UtilityRule, n: int) -> Number:
    """Price of anarchy of ``rule`` over all set covering games with n agents."""
    _check_n(rule, n)
    f = rule
    worst = max(
        max((j + 1) * f(j + 1) - f(1), j * f(j) - f(j + 1), j * f(j + 1))
        for j in range(1, n)
    )
    return _reciprocal(1 + worst / f(1))


def poa_value_nonincreasing(rule: UtilityRule, n: int) -> Number:
    """Reduced price-of-anarchy expression valid for non-increasing rules with f(1) = 1."""
    _check_n(rule, n)
    if rule(1) != 1:
        raise InvalidRuleError("this expression needs f(1) = 1")
    if not rule.is_nonincreasing(n):
        raise InvalidRuleError("this expression needs a non-increasing rule")
    f = rule
    worst = max(max(j * f(j) - f(j + 1) for j in range(1, n)), (n - 1) * f(n))
    return _reciprocal(1 + worst)


@dataclass(frozen=True)
class FrontierPoint:
    poa: Number
    pob: Number


def frontier_point(C) -> FrontierPoint:
    """Best one-round price of best response achievable at price of anarchy ``C``.

    Valid for 1/2 <= C <= 1 - 1/e.  The series is summed in exact arithmetic
    (float input is converted exactly) and stops at its first zero term.
    Inputs within ``ENDPOINT_TOL`` of 1 - 1/e return 0.
    """
    exact_in = isinstance(C, (Fraction, int))
    Cq = Fraction(C)
    zero = Fraction(0) if exact_in else 0.0
    if Cq < Fraction(1, 2):
        raise DomainError(f"C = {C} is below 1/2; valid interval is [1/2, 1 - 1/e]")
    if abs(float(Cq) - POA_MAX) <= ENDPOINT_TOL:
        return FrontierPoint(C, zero)
    if float(Cq) > POA_MAX:
        raise DomainError(f"C = {C} exceeds 1 - 1/e = {POA_MAX!r}; valid interval is [1/2, 1 - 1/e]")
    X = (1 - Cq) / Cq
    series = Fraction(1)  # j = 0 term
    partial = Fraction(0)
    fact = 1
    j = 1
    while True:
        fact *= j
        partial += Fraction(1, fact)
        term = fact * (1 - X * partial)
        if term <= 0:
            break
        series += term
        j += 1
    pob = 1 / (series + 1)
    return FrontierPoint(C, pob if exact_in else float(pob))


def frontier_sweep(grid) -> list:
    return [frontier_point(C) for C in grid]


def frontier_grid(points: int) -> list:
    """``points`` evenly spaced values from 1/2 to 1 - 1/e inclusive."""
    if points < 1:
        raise InvalidInputError("grid needs at least one point")
    if points == 1:
        return [0.5]
    step = (POA_MAX - 0.5) / (points - 1)
    return [0.5 + i * step for i in range(points - 1)] + [POA_MAX]


def parse_rule_spec(spec: str, n_max: int) -> UtilityRule:
    """Build a rule from ``mc``, ``poa-opt``, ``pareto:X=<q>``, ``pareto:C=<q>``
    or ``custom:@file.json``."""
    spec = spec.strip()
    if spec == "mc":
        return mc_rule(n_max)
    if spec == "poa-opt":
        return poa_optimal_rule(n_max)
    if spec.startswith("pareto:"):
        key, _, raw = spec[len("pareto:"):].partition("=")
        try:
            q = Fraction(raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInputError(f"bad rational in rule spec {spec!r}") from exc
        if key == "X":
            return pareto_rule(ParetoParameter(q), n_max)
        if key == "C":
            return pareto_rule(ParetoParameter.from_C(q), n_max)
        raise InvalidInputError(f"pareto rule needs X=<q> or C=<q>, got {spec!r}")
    if spec.startswith("custom:@"):
        return load_rule(spec[len("custom:@"):])
    raise InvalidInputError(
        f"unknown rule {spec!r}; use mc, poa-opt, pareto:X=<q>, pareto:C=<q> or custom:@file.json"
    )


def save_rule(rule: UtilityRule, path) -> None:
    Path(path).write_text(json.dumps(rule.to_dict(), indent=2) + "\n")


def load_rule(path) -> UtilityRule:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InvalidInputError(f"cannot read rule file {path}: {exc}") from exc
    return UtilityRule.from_dict(data)
