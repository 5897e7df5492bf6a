"""Shared hypothesis strategies: small exact games and non-increasing rules."""

from fractions import Fraction

from hypothesis import strategies as st

from coverdyn.game import SetCoveringGame, UtilityRule

VALUE_GRID = [Fraction(0), Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(1)]


@st.composite
def small_games(draw, max_n=3, max_resources=4, max_actions=3):
    n = draw(st.integers(1, max_n))
    R = draw(st.integers(1, max_resources))
    values = draw(st.lists(st.sampled_from(VALUE_GRID), min_size=R, max_size=R))
    ids = [f"r{k + 1}" for k in range(R)]
    subset = st.sets(st.sampled_from(ids), min_size=1, max_size=R)
    actions = [draw(st.lists(subset, min_size=1, max_size=max_actions)) for _ in range(n)]
    return SetCoveringGame.build(values, actions, ids=ids)


@st.composite
def nonincreasing_rules(draw, n_max=5):
    """f(1) = 1 followed by non-increasing nonnegative rationals."""
    vals = [Fraction(1)]
    for _ in range(n_max - 1):
        num = draw(st.integers(0, 12))
        vals.append(vals[-1] * Fraction(num, 12))
    return UtilityRule(tuple(vals), name="random")


@st.composite
def any_rules(draw, n_max=5):
    """Nonnegative rationals with f(1) > 0, not necessarily monotone."""
    first = Fraction(draw(st.integers(1, 8)), 4)
    rest = [Fraction(draw(st.integers(0, 8)), 4) for _ in range(n_max - 1)]
    return UtilityRule((first, *rest), name="random")
