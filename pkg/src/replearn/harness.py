"""Representation testing: train a plain fixed-representation Q-learner from
scratch, measure it periodically with batches of frozen-policy trials, and
average the resulting learning curves over several runs.

The tester deliberately knows nothing about how a representation was
produced: it sees only the classification interface, which is what makes
representations comparable.  Measurements never interrupt a running trial;
the decision to measure is taken at trial ends once enough learning steps or
enough trials have accumulated since the last measurement.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, TextIO

import numpy as np

from .criteria import CriteriaParams
from .partition import Representation
from .puck import Bounds, DEFAULT_BOUNDS, PuckEnv, StartZone, sample_start, State
from .qtable import LearningParams, QTable, preferred_actions, q_update, state_value


@dataclass(frozen=True)
class TestConfig:
    batch_size: int = 50
    trial_cap: int = 100_000          # desk-scale cap; the full-scale figure is 5,000,000
    measure_every_steps: int = 2_000
    measure_every_trials: int = 20
    runs: int = 10
    max_train_steps: int = 100_000    # training budget per run
    train_trial_cap: int = 10_000     # keeps trial ends (hence measurements) coming
    train_zone: StartZone = StartZone.CENTRAL_THIRD
    test_zone: StartZone = StartZone.CENTRAL_QUARTER

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.trial_cap < 1:
            raise ValueError(f"trial_cap must be >= 1, got {self.trial_cap}")
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if self.max_train_steps < 1:
            raise ValueError(f"max_train_steps must be >= 1")
        if self.train_trial_cap < 1:
            raise ValueError(f"train_trial_cap must be >= 1")


@dataclass(frozen=True)
class CurvePoint:
    train_steps: int
    score: float
    run_id: int


def _seed_int(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


class _RegionValues:
    """Dense (region -> action values) view of a QTable for vector lookups."""

    def __init__(self, qt: QTable, region_ids):
        self.ids = np.array(sorted(region_ids), dtype=np.int64)
        self.values = np.zeros((len(self.ids), len(qt.actions)))
        pos = {int(j): i for i, j in enumerate(self.ids)}
        for (j, a), val in qt.q.items():
            row = pos.get(int(j))
            if row is not None:
                self.values[row, int(a)] = val

    def rows(self, regions: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.ids, regions)


def measure_policy(
    rep: Representation,
    env: PuckEnv,
    qt: QTable,
    config: TestConfig,
    seed: int,
    bounds: Bounds = DEFAULT_BOUNDS,
) -> float:
    """Median trial length for one batch of greedy trials, learning off.

    All batch trials run in lockstep; one tie-break draw per trial per step is
    consumed regardless of which trials are still alive, so trajectories do
    not depend on the cap or on each other.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n = config.batch_size
    frac = config.test_zone.value
    (wx, wv) = bounds.widths()
    (cx, cv) = bounds.center()
    x = rng.uniform(cx - wx * frac / 2, cx + wx * frac / 2, size=n)
    v = rng.uniform(cv - wv * frac / 2, cv + wv * frac / 2, size=n)
    lengths = np.full(n, config.trial_cap, dtype=np.int64)
    alive = np.ones(n, dtype=bool)
    rv = _RegionValues(qt, rep.region_ids())
    force = env.params.force
    x_limit = env.params.x_limit
    for step in range(config.trial_cap):
        u = rng.random(n)
        if not alive.any():
            break
        ai = np.nonzero(alive)[0]
        regions = rep.classify_batch(x[ai], v[ai])
        q = rv.values[rv.rows(regions)]
        gap = q[:, 1] - q[:, 0]
        act_right = np.where(gap == 0.0, u[ai] < 0.5, gap > 0.0)
        f = np.where(act_right, force, -force)
        x2, v2 = env.step_arrays(x[ai], v[ai], f)
        x[ai], v[ai] = x2, v2
        dead = np.abs(x2) >= x_limit
        lengths[ai[dead]] = step + 1
        alive[ai[dead]] = False
    return float(np.median(lengths))


def test_representation(
    rep: Representation,
    env: PuckEnv,
    config: TestConfig,
    learn: LearningParams,
    criteria: CriteriaParams,
    seed: int,
    run_id: int = 0,
    bounds: Bounds = DEFAULT_BOUNDS,
) -> list[CurvePoint]:
    """One learning curve: fresh action values, training trials alternating
    with measurements per the two-part trigger."""
    qt = QTable(env.actions)
    rng = random.Random(_seed_int(seed, run_id, 0))
    actions = env.actions
    delta = criteria.delta
    gamma, alpha = learn.gamma, learn.alpha_fixed
    points: list[CurvePoint] = []
    train_steps = 0
    steps_since = 0
    trials_since = 0
    measurement = 0
    while train_steps < config.max_train_steps:
        s = sample_start(config.train_zone, bounds, rng)
        trial_len = 0
        while True:
            j = rep.classify(s)
            prefs = sorted(preferred_actions(qt, j, delta))
            a = prefs[rng.randrange(len(prefs))]
            tr = env.step(s, a)
            if tr.terminal:
                target = tr.reward
            else:
                target = tr.reward + gamma * state_value(qt, rep.classify(tr.next))
            q_update(qt, j, a, target, alpha)
            train_steps += 1
            steps_since += 1
            trial_len += 1
            s = tr.next
            if tr.terminal or trial_len >= config.train_trial_cap \
                    or train_steps >= config.max_train_steps:
                break
        trials_since += 1
        if (steps_since >= config.measure_every_steps
                or trials_since >= config.measure_every_trials
                or train_steps >= config.max_train_steps):
            score = measure_policy(
                rep, env, qt, config,
                seed=_seed_int(seed, run_id, 1, measurement), bounds=bounds)
            points.append(CurvePoint(train_steps, score, run_id))
            measurement += 1
            steps_since = 0
            trials_since = 0
    return points


def run_series(
    rep: Representation,
    env: PuckEnv,
    config: TestConfig,
    learn: LearningParams,
    criteria: CriteriaParams,
    seed: int,
    bounds: Bounds = DEFAULT_BOUNDS,
) -> list[list[CurvePoint]]:
    return [
        test_representation(rep, env, config, learn, criteria, seed,
                            run_id=run, bounds=bounds)
        for run in range(config.runs)
    ]


def average_curves(curves: list[list[CurvePoint]]) -> list[tuple[int, float]]:
    """Piecewise-constant average: each run's score is carried forward onto
    the union of measurement abscissas (and backward before its first point)."""
    if not curves or any(not c for c in curves):
        raise ValueError("cannot average empty curves")
    axis = sorted({p.train_steps for c in curves for p in c})
    out = []
    for t in axis:
        total = 0.0
        for c in curves:
            val = c[0].score
            for p in c:
                if p.train_steps <= t:
                    val = p.score
                else:
                    break
            total += val
        out.append((t, total / len(curves)))
    return out


@dataclass
class ComparisonEntry:
    name: str
    regions: int
    final_score: float
    steps_to_cap: Optional[int]
    averaged: list = field(default_factory=list)
    runs: list = field(default_factory=list)


def compare(
    named_reps: list[tuple[str, Representation]],
    env: PuckEnv,
    config: TestConfig,
    learn: LearningParams,
    criteria: CriteriaParams,
    seed: int,
    bounds: Bounds = DEFAULT_BOUNDS,
) -> list[ComparisonEntry]:
    entries = []
    for rep_index, (name, rep) in enumerate(named_reps):
        runs = run_series(rep, env, config, learn, criteria,
                          seed=_seed_int(seed, 7, rep_index), bounds=bounds)
        avg = average_curves(runs)
        cap_points = [t for t, score in avg if score >= config.trial_cap]
        entries.append(ComparisonEntry(
            name=name,
            regions=rep.region_count(),
            final_score=avg[-1][1],
            steps_to_cap=min(cap_points) if cap_points else None,
            averaged=avg,
            runs=runs,
        ))
    return entries


# -- CSV output ----------------------------------------------------------------

def write_curves_csv(curves: list[list[CurvePoint]], sink: TextIO) -> None:
    sink.write("train_steps,score,run_id\n")
    for run in curves:
        for p in run:
            sink.write(f"{p.train_steps},{p.score!r},{p.run_id}\n")


def write_average_csv(avg: list[tuple[int, float]], sink: TextIO) -> None:
    sink.write("train_steps,mean_score\n")
    for t, score in avg:
        sink.write(f"{t},{score!r}\n")


def write_summary_csv(entries: list[ComparisonEntry], sink: TextIO) -> None:
    sink.write("name,regions,final_score,steps_to_cap\n")
    for e in entries:
        cap = "" if e.steps_to_cap is None else e.steps_to_cap
        sink.write(f"{e.name},{e.regions},{e.final_score!r},{cap}\n")
