"""Tabular action values over partition regions, with update counters,
preference sets, reliability tests, and the decreasing investigation rate.

Missing entries read as 0.0, which is optimistic relative to the task's -1
failure reward and so nudges the learner toward unvisited actions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TextIO

from .partition import RegionId


@dataclass(frozen=True)
class LearningParams:
    gamma: float = 0.99
    alpha_fixed: float = 0.5
    min_updates: int = 3
    enough_samples: int = 10

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0.0 < self.alpha_fixed <= 1.0:
            raise ValueError(f"alpha_fixed must be in (0, 1], got {self.alpha_fixed}")
        if self.min_updates < 1:
            raise ValueError(f"min_updates must be >= 1, got {self.min_updates}")
        if self.enough_samples < 1:
            raise ValueError(f"enough_samples must be >= 1, got {self.enough_samples}")


class QTable:
    """Per-(region, action) value estimates plus non-decreasing update counts."""

    def __init__(self, actions):
        self.actions = tuple(actions)
        self.q: dict[tuple[RegionId, int], float] = {}
        self.n: dict[tuple[RegionId, int], int] = {}

    def get(self, j: RegionId, a) -> float:
        return self.q.get((j, a), 0.0)

    def updates(self, j: RegionId, a) -> int:
        return self.n.get((j, a), 0)

    def total_updates(self) -> int:
        return sum(self.n.values())

    def blend(self, j: RegionId, a, target: float, rate: float) -> None:
        if not 0.0 < rate <= 1.0:
            raise ValueError(f"learning rate must be in (0, 1], got {rate}")
        key = (j, a)
        self.q[key] = (1.0 - rate) * self.q.get(key, 0.0) + rate * target

    def bump(self, j: RegionId, a) -> None:
        key = (j, a)
        self.n[key] = self.n.get(key, 0) + 1
        self.q.setdefault(key, 0.0)

    def halve_counts(self, j: RegionId) -> None:
        # Split aftermath: force re-confirmation without discarding everything.
        for a in self.actions:
            key = (j, a)
            if key in self.n:
                self.n[key] //= 2

    def dump(self, sink: TextIO) -> None:
        for (j, a), value in sorted(self.q.items()):
            sink.write(f"{j} {int(a)} {value!r} {self.n.get((j, a), 0)}\n")


def q_update(qt: QTable, j: RegionId, a, target: float, rate: float) -> None:
    """Convex blend toward the target; counts the update."""
    qt.blend(j, a, target, rate)
    qt.bump(j, a)


def state_value(qt: QTable, j: RegionId) -> float:
    return max(qt.get(j, a) for a in qt.actions)


def preferred_actions(qt: QTable, j: RegionId, eps: float) -> frozenset:
    """Every action whose value is within eps of the region's best (inclusive)."""
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    best = state_value(qt, j)
    return frozenset(a for a in qt.actions if qt.get(j, a) >= best - eps)


def alpha_investigate(qt: QTable, j: RegionId, a, enough_samples: int) -> float:
    """Decreasing rate 1/n, floored at 1/enough_samples.  Callers bump the
    count before asking for the rate."""
    n = qt.updates(j, a)
    if n < 1:
        raise ValueError(f"no updates recorded for region {j} action {a}")
    return 1.0 / min(n, enough_samples)


def reliable_source(qt: QTable, j: RegionId, min_updates: int) -> bool:
    """Some action in the region has been updated at least min_updates times."""
    return any(qt.updates(j, a) >= min_updates for a in qt.actions)


def reliable_prototype(qt: QTable, j: RegionId, min_updates: int) -> bool:
    """Every action in the region has been updated at least min_updates times."""
    return all(qt.updates(j, a) >= min_updates for a in qt.actions)
