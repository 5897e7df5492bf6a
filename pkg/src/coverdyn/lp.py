"""Exact dual linear program for the one-round price of best response.

Variables are one multiplier ``lam_i >= 0`` per agent and a free ``mu``.
Every resource signature ``(B, O)`` (agents covering the resource in the
one-round best-response profile, agents covering it in the optimum) gives
one constraint

    mu * [B nonempty] >= [O nonempty]
                         + sum_i lam_i * (1_B(i) - 1_O(i)) * f(|B ∩ {agents before i}| + 1)

and the optimal ``mu`` is the reciprocal of the one-round price of best
response.  Inputs and results are exact ``fractions.Fraction`` values.

The program has ``4^n - 1`` rows but only ``n + 1`` columns, so it is
solved through its LP dual (``n + 1`` rows); the optimal ``lam`` and ``mu``
are read off the final reduced costs of the slack and artificial columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

import gmpy2

from .errors import InvalidInputError, LPError, ResourceLimitError
from .game import UtilityRule

# tableau arithmetic runs on GMP rationals; results convert back to Fraction
_Q = gmpy2.mpq

MAX_AGENTS = 8

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


@dataclass(frozen=True)
class ResourceSignature:
    br_set: frozenset
    opt_set: frozenset

    def __post_init__(self):
        if not self.br_set and not self.opt_set:
            raise InvalidInputError("a resource signature needs a nonempty br_set or opt_set")


@dataclass(frozen=True)
class Constraint:
    """``mu_coef * mu + sum_i lam_coefs[i] * lam_i >= rhs``."""

    mu_coef: Fraction
    lam_coefs: tuple
    rhs: Fraction
    signature: ResourceSignature | None = None

    def slack(self, mu, lam) -> Fraction:
        return self.mu_coef * mu + sum(c * x for c, x in zip(self.lam_coefs, lam)) - self.rhs


@dataclass(frozen=True)
class DualLP:
    """minimize mu  subject to  ``constraints``,  lam >= 0,  mu free."""

    n: int
    constraints: tuple
    label: str = ""

    def without(self, drop: Callable[[Constraint], bool]) -> "DualLP":
        return DualLP(self.n, tuple(c for c in self.constraints if not drop(c)), self.label)

    def dump(self) -> str:
        """Plain-text listing with exact rational coefficients (0-based agents)."""
        lines = [f"\\ {self.label}".rstrip(), "minimize", "  obj: mu", "subject to"]
        for k, c in enumerate(self.constraints, start=1):
            terms = [f"{c.mu_coef} mu"] + [f"{a} lam{i}" for i, a in enumerate(c.lam_coefs)]
            tag = ""
            if c.signature is not None:
                tag = f" [br={sorted(c.signature.br_set)} opt={sorted(c.signature.opt_set)}]"
            lines.append(f"  c{k}{tag}: " + " + ".join(terms) + f" >= {c.rhs}")
        lines.append("bounds")
        lines += [f"  lam{i} >= 0" for i in range(self.n)]
        lines += ["  mu free", "end"]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        try:
            Path(path).write_text(self.dump())
        except OSError as exc:
            raise OSError(f"cannot write LP dump to {path}: {exc}") from exc


def _agents(mask: int, n: int) -> frozenset:
    return frozenset(i for i in range(n) if mask >> i & 1)


def build_dual_lp(rule: UtilityRule, n: int) -> DualLP:
    if not 1 <= n <= MAX_AGENTS:
        if n > MAX_AGENTS:
            raise ResourceLimitError(f"n = {n} gives {4**n - 1} constraints; the cap is n <= {MAX_AGENTS}")
        raise InvalidInputError("n must be at least 1")
    if rule.n_max < n:
        raise InvalidInputError(f"rule defines f up to {rule.n_max}, need {n}")
    f = [None] + [Fraction(v) for v in rule.values[:n]]
    rows = []
    for bmask in range(1 << n):
        for omask in range(1 << n):
            if not bmask and not omask:
                continue
            coefs = []
            before = 0  # members of B among agents 0..i-1
            for i in range(n):
                in_b, in_o = bmask >> i & 1, omask >> i & 1
                coefs.append(-(in_b - in_o) * f[before + 1])
                before += in_b
            rows.append(
                Constraint(
                    mu_coef=Fraction(1 if bmask else 0),
                    lam_coefs=tuple(coefs),
                    rhs=Fraction(1 if omask else 0),
                    signature=ResourceSignature(_agents(bmask, n), _agents(omask, n)),
                )
            )
    return DualLP(n, tuple(rows), label=f"one-round best-response dual LP, n = {n}, rule {rule.name}")


def _pivot(rows, rhs, obj, basis, r, j) -> None:
    piv = rows[r][j]
    rows[r] = [x / piv for x in rows[r]]
    rhs[r] /= piv
    prow = rows[r]
    nz = [q for q, x in enumerate(prow) if x]
    for s in range(len(rows)):
        if s != r and rows[s][j]:
            g = rows[s][j]
            row = rows[s]
            for q in nz:
                row[q] -= g * prow[q]
            rhs[s] -= g * rhs[r]
    g = obj[j]
    if g:
        for q in nz:
            obj[q] -= g * prow[q]
        obj[-1] -= g * rhs[r]
    basis[r] = j


def _run(rows, rhs, obj, basis, allowed) -> str:
    """Bland's-rule primal simplex maximizing; ``obj`` holds z_j - c_j and, last, the value."""
    while True:
        enter = next((j for j in allowed if obj[j] < 0), None)
        if enter is None:
            return OPTIMAL
        best = None
        for r, row in enumerate(rows):
            if row[enter] > 0:
                key = (rhs[r] / row[enter], basis[r])
                if best is None or key < best[0]:
                    best = (key, r)
        if best is None:
            return UNBOUNDED
        _pivot(rows, rhs, obj, basis, best[1], enter)


def _objective_row(rows, rhs, basis, cost) -> list:
    width = len(rows[0]) if rows else len(cost)
    obj = [-c for c in cost] + [_Q(0)]
    for r, j in enumerate(basis):
        cb = cost[j]
        if cb:
            for q in range(width):
                obj[q] += cb * rows[r][q]
            obj[-1] += cb * rhs[r]
    return obj


@dataclass(frozen=True)
class LPSolution:
    mu: Fraction
    lam: tuple


def _transposed(lp: DualLP, mu_rhs) -> tuple:
    """Two-phase simplex on the LP dual of ``lp``.

    With ``mu_rhs = 1`` this is the true dual; with ``mu_rhs = 0`` it is the
    Farkas system whose unboundedness certifies that ``lp`` is infeasible.
    Returns ``(status, obj, m, art)``.
    """
    n, cons = lp.n, lp.constraints
    m = len(cons)
    # maximize sum rhs_r y_r over y >= 0 subject to
    #   sum_r lam_coefs[r][i] y_r <= 0        (row i, slack column m + i)
    #   sum_r mu_coef[r] y_r      == mu_rhs   (row n, artificial column m + n)
    width = m + n + 1
    zero, one = _Q(0), _Q(1)
    rows = []
    for i in range(n):
        row = [_Q(c.lam_coefs[i]) for c in cons] + [zero] * (n + 1)
        row[m + i] = one
        rows.append(row)
    row = [_Q(c.mu_coef) for c in cons] + [zero] * (n + 1)
    row[m + n] = one
    rows.append(row)
    rhs = [zero] * n + [_Q(mu_rhs)]
    basis = [m + i for i in range(n + 1)]
    art = m + n

    phase1 = [zero] * width
    phase1[art] = -one
    obj = _objective_row(rows, rhs, basis, phase1)
    _run(rows, rhs, obj, basis, range(width))
    if obj[-1] < 0:
        return INFEASIBLE, obj, m, art
    if art in basis:
        r = basis.index(art)
        j = next((q for q in range(art) if rows[r][q]), None)
        if j is not None:
            _pivot(rows, rhs, obj, basis, r, j)
        # otherwise the row is 0 = 0 and the artificial stays at zero

    cost = [_Q(c.rhs) for c in cons] + [zero] * (n + 1)
    obj = _objective_row(rows, rhs, basis, cost)
    return _run(rows, rhs, obj, basis, range(art)), obj, m, art


def solve_lp(lp: DualLP) -> LPSolution:
    """Exact optimum of ``lp``; raises ``LPError`` if it is infeasible or unbounded."""
    status, obj, m, art = _transposed(lp, 1)
    if status == UNBOUNDED:
        raise LPError(INFEASIBLE, "dual LP is infeasible")
    if status == INFEASIBLE:
        # no finite optimum: either no feasible point, or mu is unbounded below
        if _transposed(lp, 0)[0] == UNBOUNDED:
            raise LPError(INFEASIBLE, "dual LP is infeasible")
        raise LPError(UNBOUNDED, "dual LP is unbounded below")
    lam = tuple(_fraction(obj[m + i]) for i in range(lp.n))
    mu = _fraction(obj[art])
    assert obj[art] == obj[-1], "strong duality violated; simplex bug"
    return LPSolution(mu, lam)


def _fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def lp_pob(rule: UtilityRule, n: int) -> Fraction:
    """One-round price of best response as 1 / (optimal mu), exactly."""
    return 1 / solve_lp(build_dual_lp(rule.to_exact(), n)).mu
