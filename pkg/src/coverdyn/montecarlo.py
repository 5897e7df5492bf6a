"""Seeded Monte Carlo comparison of the marginal-contribution rule and the
price-of-anarchy-optimal rule along best-response rounds.

Each run draws a random game, plays it once under each rule from the
all-null profile with the same tie policy and seed, and records the ratio
W_MC / W_PoA after every step.  Run ``r`` is seeded from ``(seed, r)``
alone, so results do not depend on worker count or scheduling.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import TiePolicy, Trajectory, run_round
from .errors import InvalidInputError
from .game import SetCoveringGame
from .rules import mc_rule, poa_optimal_rule

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    runs: int = 200
    n: int = 10
    set_size: int = 10
    rounds: int = 4
    seed: int = 0
    tie_policy: str = TiePolicy.LOWEST.value

    def __post_init__(self):
        if self.runs < 1 or self.n < 2 or self.rounds < 1 or self.set_size < 1:
            raise InvalidInputError("need runs >= 1, n >= 2, rounds >= 1, set_size >= 1")
        if TiePolicy(self.tie_policy) is TiePolicy.ENUMERATE_ALL:
            raise InvalidInputError("Monte Carlo runs sample one path; enumerate-all is not allowed")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise InvalidInputError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad experiment config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InvalidInputError(f"cannot read config file {path}: {exc}") from exc
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return asdict(self)


def derive_run_seed(seed: int, run_index: int) -> int:
    return int(np.random.SeedSequence([seed, run_index]).generate_state(1, np.uint64)[0])


def random_game(cfg: ExperimentConfig, run_seed: int) -> SetCoveringGame:
    """Two pools of ``set_size`` resources with values uniform on [0, 1];
    each agent gets one singleton action from each pool (plus null)."""
    rng = np.random.default_rng(run_seed)
    values = [float(v) for v in rng.uniform(0.0, 1.0, size=2 * cfg.set_size)]
    ids = [f"a{k + 1}" for k in range(cfg.set_size)] + [f"b{k + 1}" for k in range(cfg.set_size)]
    picks = rng.integers(0, cfg.set_size, size=(cfg.n, 2))
    actions = [[frozenset(), {ids[p]}, {ids[cfg.set_size + q]}] for p, q in picks]
    return SetCoveringGame.build(values, actions, ids=ids)


def simulate_run(cfg: ExperimentConfig, run_index: int) -> tuple:
    """``(game, trajectory under f_MC, trajectory under f_PoA)`` for one run."""
    run_seed = derive_run_seed(cfg.seed, run_index)
    game = random_game(cfg, run_seed)
    mc = run_round(game, mc_rule(cfg.n), cfg.rounds, cfg.tie_policy, seed=run_seed)
    poa = run_round(game, poa_optimal_rule(cfg.n), cfg.rounds, cfg.tie_policy, seed=run_seed)
    return game, mc, poa


def _ratios(mc: Trajectory, poa: Trajectory) -> list:
    """Per-step W_MC / W_PoA, step 0 included; ``None`` marks x/0 with x > 0."""
    out = [1.0]
    for w_mc, w_poa in zip(mc.welfares, poa.welfares):
        if w_poa == 0:
            out.append(1.0 if w_mc == 0 else None)
        else:
            out.append(w_mc / w_poa)
    return out


@dataclass
class RatioSeries:
    mean: list = field(default_factory=list)
    min: list = field(default_factory=list)
    max: list = field(default_factory=list)
    excluded: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.mean)

    def summary(self, n: int) -> dict:
        return {
            "first_round_end_mean": self.mean[n] if len(self) > n else None,
            "final_mean": self.mean[-1] if self.mean else None,
            "excluded_total": sum(self.excluded),
        }


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> RatioSeries:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_run = list(pool.map(lambda r: _ratios(*simulate_run(cfg, r)[1:]), range(cfg.runs)))
    else:
        per_run = [_ratios(*simulate_run(cfg, r)[1:]) for r in range(cfg.runs)]

    series = RatioSeries()
    for step in range(cfg.n * cfg.rounds + 1):
        kept = [run[step] for run in per_run if run[step] is not None]
        series.excluded.append(len(per_run) - len(kept))
        if kept:
            series.mean.append(math.fsum(kept) / len(kept))
            series.min.append(min(kept))
            series.max.append(max(kept))
        else:
            series.mean.append(math.nan)
            series.min.append(math.nan)
            series.max.append(math.nan)
    if sum(series.excluded):
        log.info("excluded %d step ratios with W_PoA = 0 < W_MC", sum(series.excluded))
    return series


def export_series(series: RatioSeries, path) -> None:
    """CSV with columns step, mean, min, max, excluded_count."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["step", "mean", "min", "max", "excluded_count"])
            for step in range(len(series)):
                writer.writerow(
                    [step, repr(series.mean[step]), repr(series.min[step]), repr(series.max[step]), series.excluded[step]]
                )
    except OSError as exc:
        raise OSError(f"cannot write series to {path}: {exc}") from exc
