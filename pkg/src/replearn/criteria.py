"""Look-ahead machinery and the two decision criteria.

An investigation rolls each action out from a state until the trajectory
leaves the state's region, hits a terminal state, or times out; the resulting
per-action look-ahead values bypass the origin region's own stored values.
Those profiles feed two tests: whether a single experienced transition is
adequately represented (the online surprise test), and whether two states may
share a region (the split/merge criterion).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .partition import RegionId, Representation
from .puck import State
from .qtable import (
    LearningParams,
    QTable,
    preferred_actions,
    reliable_source,
    state_value,
)


@dataclass(frozen=True)
class CriteriaParams:
    epsilon: float = 0.05   # adequacy tolerance, in reward units
    delta: float = 0.05     # action-selection tolerance, in reward units
    max_steps: int = 200    # investigation step cap per action

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta <= self.epsilon:
            raise ValueError(
                f"need 0 <= delta <= epsilon, got delta={self.delta} epsilon={self.epsilon}"
            )
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")


@dataclass(frozen=True)
class ActionOutcome:
    value: float        # look-ahead action value
    reliable: bool
    steps: int
    terminal: bool


@dataclass(frozen=True)
class LookaheadProfile:
    origin: State
    origin_region: RegionId
    outcomes: dict

    def value(self, a) -> float:
        return self.outcomes[a].value

    def best_value(self) -> float:
        return max(o.value for o in self.outcomes.values())

    def preferred(self, eps: float) -> frozenset:
        best = self.best_value()
        return frozenset(a for a, o in self.outcomes.items() if o.value >= best - eps)

    def all_reliable(self) -> bool:
        return all(o.reliable for o in self.outcomes.values())


def investigate(
    env,
    rep: Representation,
    qt: QTable,
    s: State,
    learn: LearningParams,
    max_steps: int,
) -> LookaheadProfile:
    """Mini-trial per action from s, per the active exploration scheme.

    The per-action rollout repeats the same action, accumulating discounted
    reward, until the state leaves s's region, terminates, or max_steps pass.
    Terminal exits are reliable by construction (the reward is ground truth);
    non-terminal exits inherit the reliability of the region bootstrapped from.
    """
    origin_region = rep.classify(s)
    outcomes = {}
    for a in env.actions:
        cur = s
        acc = 0.0
        discount = 1.0
        steps = 0
        terminal = False
        k = origin_region
        while True:
            tr = env.step(cur, a)
            acc += discount * tr.reward
            discount *= learn.gamma
            steps += 1
            cur = tr.next
            if tr.terminal:
                terminal = True
                break
            k = rep.classify(cur)
            if k != origin_region or steps >= max_steps:
                break
        if terminal:
            outcomes[a] = ActionOutcome(acc, True, steps, True)
        else:
            value = acc + discount * state_value(qt, k)
            outcomes[a] = ActionOutcome(value, reliable_source(qt, k, learn.min_updates), steps, False)
    return LookaheadProfile(origin=s, origin_region=origin_region, outcomes=outcomes)


def lookahead_target(r: float, terminal: bool, next_region: Optional[RegionId],
                     qt: QTable, gamma: float) -> float:
    """One-transition look-ahead value: r, plus the next region's discounted
    stored value when the transition does not terminate."""
    if terminal:
        return r
    return r + gamma * state_value(qt, next_region)


def is_adequate(
    s_prev: State,
    a,
    r: float,
    s_t: State,
    terminal: bool,
    qt: QTable,
    rep: Representation,
    params: CriteriaParams,
    learn: LearningParams,
) -> bool:
    """Single-transition surrogate of the adequacy criterion.

    Only the experienced action is checked: its one-step look-ahead value must
    sit within epsilon of the stored estimate, and if the action currently
    looks preferred it must not look-ahead much worse than the region's value.
    Returns False for a surprising transition.
    """
    j = rep.classify(s_prev)
    k = None if terminal else rep.classify(s_t)
    q1 = lookahead_target(r, terminal, k, qt, learn.gamma)
    if abs(q1 - qt.get(j, a)) > params.epsilon:
        return False
    if a in preferred_actions(qt, j, params.delta):
        if q1 < state_value(qt, j) - params.epsilon:
            return False
    return True


def compatible(p1: LookaheadProfile, p2: LookaheadProfile, params: CriteriaParams) -> bool:
    """May two states share a region?  Three conditions on their profiles:
    equal preferred sets at epsilon, look-ahead values within delta, and a
    consistency rule on the top actions whose strictness depends on how delta
    compares with epsilon/2."""
    if p1.preferred(params.epsilon) != p2.preferred(params.epsilon):
        return False
    if abs(p1.best_value() - p2.best_value()) > params.delta:
        return False
    if params.delta <= params.epsilon / 2.0:
        return p1.preferred(params.delta) == p2.preferred(params.delta)
    return p1.preferred(0.0) == p2.preferred(0.0)


def should_split(
    p1: LookaheadProfile, p2: LookaheadProfile, params: CriteriaParams
) -> bool:
    """Split only on evidence: every action reliable in both profiles, and the
    profiles incompatible."""
    if not (p1.all_reliable() and p2.all_reliable()):
        return False
    return not compatible(p1, p2, params)
