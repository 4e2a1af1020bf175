"""The online learning agent: Q-learning with surprise detection, a
replacing-stack of states to investigate at trial ends, and representation
updates that split incompatible regions and consolidate compatible ones.

The agent is generic over environments: anything exposing actions,
step(state, action) -> Transition and is_terminal(state) works, with states
carried as puck.State points and regions provided by a partition
Representation.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .criteria import (
    CriteriaParams,
    LookaheadProfile,
    compatible,
    investigate,
    is_adequate,
    should_split,
)
from .partition import RegionId, Representation
from .puck import Bounds, DEFAULT_BOUNDS, StartZone, State, sample_start
from .qtable import (
    LearningParams,
    QTable,
    alpha_investigate,
    preferred_actions,
    q_update,
    reliable_prototype,
    reliable_source,
    state_value,
)

TRIAL_END = object()


class ReplacingStack:
    """LIFO of (state, region) pairs holding at most one entry per region."""

    def __init__(self):
        self._items: list[tuple[State, RegionId]] = []

    def __len__(self) -> int:
        return len(self._items)

    def __bool__(self) -> bool:
        return bool(self._items)

    def regions(self) -> list[RegionId]:
        return [j for _, j in self._items]

    def push(self, s: State, j: RegionId) -> None:
        self._items = [(t, r) for t, r in self._items if r != j]
        self._items.append((s, j))

    def pop(self) -> tuple[State, RegionId]:
        return self._items.pop()


@dataclass(frozen=True)
class AgentConfig:
    criteria: CriteriaParams = CriteriaParams()
    learning: LearningParams = LearningParams()
    fe_period: int = 5            # pops between feature-extraction passes; 0 disables
    merge_period: int = 10        # feature-extraction passes between consolidations; 0 disables
    repush_probability: float = 0.1
    stack_start_probability: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.fe_period < 0:
            raise ValueError(f"fe_period must be >= 0, got {self.fe_period}")
        if self.merge_period < 0:
            raise ValueError(f"merge_period must be >= 0, got {self.merge_period}")
        if not 0.0 <= self.repush_probability <= 1.0:
            raise ValueError(f"repush_probability must be in [0, 1]")


class EconomizerAgent:
    """Owns its environment handle, representation, Q-table, stack and RNG."""

    def __init__(
        self,
        env,
        rep: Representation,
        config: AgentConfig = AgentConfig(),
        qt: Optional[QTable] = None,
    ):
        self.env = env
        self.rep = rep
        self.config = config
        self.qt = qt if qt is not None else QTable(env.actions)
        self.stack = ReplacingStack()
        self.rng = random.Random(config.seed)
        self.investigated: set[RegionId] = set()
        self.pop_count = 0
        self.fe_passes = 0
        self.split_count = 0
        self.merge_count = 0
        self.detach_count = 0
        self.investigation_steps = 0  # environment steps spent in rollouts

    # -- primitives ----------------------------------------------------------

    def investigate(self, s: State) -> LookaheadProfile:
        prof = investigate(self.env, self.rep, self.qt, s,
                           self.config.learning, self.config.criteria.max_steps)
        self.investigated.add(prof.origin_region)
        self.investigation_steps += sum(o.steps for o in prof.outcomes.values())
        return prof

    def next_action(self, s: State):
        prefs = sorted(preferred_actions(self.qt, self.rep.classify(s), self.config.criteria.delta))
        return prefs[self.rng.randrange(len(prefs))]

    def _apply_profile(self, j: RegionId, profile: LookaheadProfile) -> None:
        # Blend stored values toward the profile, reliable actions only, with
        # the decreasing rate (count first, then rate).
        learn = self.config.learning
        for a, outcome in profile.outcomes.items():
            if outcome.reliable:
                self.qt.bump(j, a)
                rate = alpha_investigate(self.qt, j, a, learn.enough_samples)
                self.qt.blend(j, a, outcome.value, rate)

    # -- the top-level step --------------------------------------------------

    def get_action(self, s_prev: State, a, r: float, s_t: State):
        """Consume one transition; return the next action, or TRIAL_END after
        a terminal transition (stack processing included)."""
        learn = self.config.learning
        j = self.rep.classify(s_prev)
        terminal = self.env.is_terminal(s_t)
        k = None if terminal else self.rep.classify(s_t)
        if terminal or reliable_source(self.qt, k, learn.min_updates):
            target = r if terminal else r + learn.gamma * state_value(self.qt, k)
            q_update(self.qt, j, a, target, learn.alpha_fixed)
        if (
            not is_adequate(s_prev, a, r, s_t, terminal, self.qt, self.rep,
                            self.config.criteria, learn)
            or j not in self.investigated
            or self.rng.random() < self.config.repush_probability
        ):
            self.stack.push(s_prev, j)
        if terminal:
            self.process_stack()
            return TRIAL_END
        return self.next_action(s_t)

    # -- end-of-trial work -----------------------------------------------------

    def process_stack(self) -> None:
        """Investigate queued states, most recent first; every fe_period-th pop
        becomes a feature-extraction pass instead of a value refresh."""
        while self.stack:
            s, _ = self.stack.pop()
            j = self.rep.classify(s)  # region at pop time, not push time
            self.pop_count += 1
            if self.config.fe_period and self.pop_count % self.config.fe_period == 0:
                self.update_representation(s, j)
            else:
                self._apply_profile(j, self.investigate(s))

    def update_representation(self, s: State, j: RegionId) -> None:
        """Split j when s has proven incompatible with its primary prototype;
        patch up merged neighbors; occasionally consolidate."""
        cfg = self.config
        s_p, s_p2 = self.rep.nearest_and_primary(s)
        prof_s = self.investigate(s)
        prof_p = self.investigate(s_p.point)
        self._apply_profile(j, prof_p)
        if (not should_split(prof_s, prof_p, cfg.criteria)
                or not reliable_prototype(self.qt, j, cfg.learning.min_updates)):
            self._apply_profile(j, prof_s)
        else:
            self.qt.halve_counts(j)
            prof_p2 = self.investigate(s_p2.point) if s_p2 is not None else None
            split_p_p2 = should_split(prof_p, prof_p2, cfg.criteria) if prof_p2 else False
            split_s_p2 = should_split(prof_s, prof_p2, cfg.criteria) if prof_p2 else False
            added = False
            if (not split_p_p2) or split_s_p2:
                if not self.rep.has_point(s):
                    self.rep.add_prototype(s)
                    self.split_count += 1
                    added = True
            if s_p2 is not None and split_p_p2:
                self.rep.detach(s_p2.id)
                self.detach_count += 1
                if not added:
                    self._apply_profile(s_p2.id, prof_s)
        self.fe_passes += 1
        if cfg.merge_period and self.fe_passes % cfg.merge_period == 0:
            self.consolidate()

    def consolidate(self) -> None:
        """Merge mutually-near primary regions whose prototypes prove
        compatible; only regions with fully-updated values are considered."""
        cfg = self.config
        learn = cfg.learning
        for a_id, b_id in self._mutual_neighbor_pairs(k=3):
            pa = self.rep.prototypes.get(a_id)
            pb = self.rep.prototypes.get(b_id)
            if pa is None or pb is None or pa.merged_into is not None or pb.merged_into is not None:
                continue
            if not (reliable_prototype(self.qt, a_id, learn.min_updates)
                    and reliable_prototype(self.qt, b_id, learn.min_updates)):
                continue
            prof_a = self.investigate(pa.point)
            prof_b = self.investigate(pb.point)
            if not (prof_a.all_reliable() and prof_b.all_reliable()):
                continue
            if compatible(prof_a, prof_b, cfg.criteria):
                self.rep.merge(max(a_id, b_id), min(a_id, b_id))
                self.merge_count += 1

    def _mutual_neighbor_pairs(self, k: int) -> list[tuple[int, int]]:
        primaries = [self.rep.prototypes[i] for i in self.rep.primary_ids()]
        if len(primaries) < 2:
            return []
        sx, sv = self.rep.scale
        neighbors: dict[int, set[int]] = {}
        for p in primaries:
            dists = sorted(
                (((p.point.x - q.point.x) * sx) ** 2 + ((p.point.v - q.point.v) * sv) ** 2, q.id)
                for q in primaries
                if q.id != p.id
            )
            neighbors[p.id] = {qid for _, qid in dists[:k]}
        pairs = []
        for p in primaries:
            for qid in neighbors[p.id]:
                if p.id < qid and p.id in neighbors[qid]:
                    pairs.append((p.id, qid))
        return sorted(pairs)


# -- generation sessions -------------------------------------------------------

@dataclass(frozen=True)
class StopRule:
    """Session end conditions.  A trial that reaches success_trial_steps is
    cut and counted as a success, but only an unbroken run of success_trials
    such trials, with no representation change along the way, ends the
    session.  One long trial alone is weak evidence: the agent can ride a
    lucky cycle from one start while the representation is still poor
    elsewhere, so success must repeat from fresh starts with the structure
    holding still."""

    max_total_steps: Optional[int] = 5_000_000
    max_trials: Optional[int] = 100_000
    success_trial_steps: Optional[int] = 100_000
    success_trials: int = 10


@dataclass
class TrialRecord:
    trial: int
    steps: int
    regions: int
    splits: int
    merges: int
    stack_max: int


@dataclass
class SessionLog:
    records: list = field(default_factory=list)

    def write_csv(self, sink) -> None:
        sink.write("trial,steps,regions,splits,merges,stack_max\n")
        for r in self.records:
            sink.write(f"{r.trial},{r.steps},{r.regions},{r.splits},{r.merges},{r.stack_max}\n")


def run_generation_session(
    env,
    config: AgentConfig,
    stop: StopRule,
    init_rep: Optional[Representation] = None,
    bounds: Bounds = DEFAULT_BOUNDS,
    train_zone: StartZone = StartZone.CENTRAL_THIRD,
    start_sampler=None,
) -> tuple[Representation, QTable, SessionLog]:
    """Run trials until the stop rule fires; the representation is grown from
    the first observed state unless a seed representation is supplied.

    start_sampler(rng) -> State overrides the default zone sampling, for
    environments that are not the puck task.

    max_total_steps budgets *all* environment experience, investigation
    rollouts included; active exploration is not free.
    """
    if start_sampler is None:
        start_sampler = lambda rng: sample_start(train_zone, bounds, rng)
    rep = init_rep if init_rep is not None else Representation()
    agent = EconomizerAgent(env, rep, config)
    log = SessionLog()
    trial = 0
    trial_steps_total = 0
    consecutive_successes = 0
    done = False
    pending_start: Optional[State] = None
    if rep.is_empty():
        # The first observed state seeds the representation, even if the stop
        # rule fires before any trial runs.
        pending_start = start_sampler(agent.rng)
        rep.add_prototype(pending_start)
    while not done:
        if stop.max_trials is not None and trial >= stop.max_trials:
            break
        if pending_start is not None:
            s, pending_start = pending_start, None
        elif agent.stack and agent.rng.random() < config.stack_start_probability:
            s, _ = agent.stack.pop()
        else:
            s = start_sampler(agent.rng)
        splits0, merges0 = agent.split_count, agent.merge_count
        detaches0 = agent.detach_count
        stack_max = len(agent.stack)
        a = agent.next_action(s)
        steps = 0
        terminal = False
        while True:
            tr = env.step(s, a)
            steps += 1
            result = agent.get_action(s, a, tr.reward, tr.next)
            stack_max = max(stack_max, len(agent.stack))
            if tr.terminal:
                terminal = True
                break
            if stop.success_trial_steps is not None and steps >= stop.success_trial_steps:
                break
            if stop.max_total_steps is not None \
                    and trial_steps_total + steps + agent.investigation_steps >= stop.max_total_steps:
                done = True
                break
            s, a = tr.next, result
        trial_steps_total += steps
        if not terminal:
            # a cut trial still gets its end-of-trial exploration
            agent.process_stack()
        structure_changed = (
            (agent.split_count, agent.merge_count, agent.detach_count)
            != (splits0, merges0, detaches0))
        if (not terminal and not structure_changed
                and stop.success_trial_steps is not None
                and steps >= stop.success_trial_steps):
            consecutive_successes += 1
            if consecutive_successes >= stop.success_trials:
                done = True
        else:
            consecutive_successes = 0
        log.records.append(TrialRecord(
            trial=trial, steps=steps, regions=rep.region_count(),
            splits=agent.split_count - splits0, merges=agent.merge_count - merges0,
            stack_max=stack_max,
        ))
        trial += 1
    return rep, agent.qt, log
