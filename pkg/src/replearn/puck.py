"""Puck-on-a-hill task: bang-bang control of a puck on a parabolic hill.

The hill is y = -beta * x**2.  The puck is pushed left or right with a
constant-magnitude force and fails when it reaches a containing wall at
|x| >= x_limit, receiving the failure reward; every other step is reward 0.
All functions here are pure: stepping takes an explicit state, so a caller
can restart the dynamics from any state it likes (needed by the active
investigation machinery).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class Action(enum.IntEnum):
    PUSH_LEFT = 0
    PUSH_RIGHT = 1

    def opposite(self) -> "Action":
        return Action.PUSH_RIGHT if self is Action.PUSH_LEFT else Action.PUSH_LEFT


ACTIONS = (Action.PUSH_LEFT, Action.PUSH_RIGHT)


@dataclass(frozen=True)
class State:
    """A point in the task's continuous state space."""

    x: float
    v: float

    def mirror(self) -> "State":
        return State(-self.x, -self.v)


@dataclass(frozen=True)
class Transition:
    reward: float
    next: State
    terminal: bool


@dataclass(frozen=True)
class Bounds:
    """State-space rectangle used for start sampling and grid constructions."""

    x_lo: float = -2.4
    x_hi: float = 2.4
    v_lo: float = -5.5
    v_hi: float = 5.5

    def widths(self) -> tuple[float, float]:
        return (self.x_hi - self.x_lo, self.v_hi - self.v_lo)

    def center(self) -> tuple[float, float]:
        return ((self.x_lo + self.x_hi) / 2.0, (self.v_lo + self.v_hi) / 2.0)


DEFAULT_BOUNDS = Bounds()


class StartZone(enum.Enum):
    """Centered start-sampling zones: training uses the wider one."""

    CENTRAL_THIRD = 1.0 / 3.0
    CENTRAL_QUARTER = 1.0 / 4.0


@dataclass(frozen=True)
class EnvParams:
    beta: float = 0.3
    gravity: float = 9.8
    mass: float = 1.0
    dt: float = 0.02
    force: float = 3.0
    x_limit: float = 2.4
    fail_reward: float = -1.0

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.force <= 0:
            raise ValueError(f"force must be positive, got {self.force}")
        if self.x_limit <= 0:
            raise ValueError(f"x_limit must be positive, got {self.x_limit}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")


class NoEquilibriumError(ValueError):
    """Raised when the thrusters always dominate gravity."""


class PuckEnv:
    """Deterministic simulator.  Instances are stateless and thread-safe."""

    actions = ACTIONS

    def __init__(self, params: EnvParams | None = None):
        self.params = params or EnvParams()

    def hill_angle(self, x: float) -> float:
        """Slope angle at position x; positive on the left side of the hill."""
        return math.atan(-2.0 * self.params.beta * x)

    def is_terminal(self, s: State) -> bool:
        return abs(s.x) >= self.params.x_limit

    def force_of(self, a: Action) -> float:
        return self.params.force if a is Action.PUSH_RIGHT else -self.params.force

    def step(self, s: State, a: Action) -> Transition:
        """One explicit-Euler step; the slope angle is taken at the current x."""
        if self.is_terminal(s):
            raise ValueError(f"cannot step from terminal state {s}")
        p = self.params
        f = self.force_of(a)
        th = math.atan(-2.0 * p.beta * s.x)
        x2 = s.x + p.dt * s.v
        v2 = s.v + p.dt * (f - p.mass * p.gravity * math.sin(th)) * math.cos(th) / p.mass
        terminal = abs(x2) >= p.x_limit
        reward = p.fail_reward if terminal else 0.0
        return Transition(reward, State(x2, v2), terminal)

    def step_arrays(
        self, x: np.ndarray, v: np.ndarray, f: np.ndarray | float
    ) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized twin of step() for batch rollouts; no terminal handling."""
        p = self.params
        th = np.arctan(-2.0 * p.beta * x)
        x2 = x + p.dt * v
        v2 = v + p.dt * (f - p.mass * p.gravity * np.sin(th)) * np.cos(th) / p.mass
        return x2, v2

    def equilibrium_position(self) -> float:
        """Positive x at which a stationary puck can hold its place on the hill.

        Balances the thruster force against the gravity component along the
        slope.  Beyond this position gravity wins and a stationary puck is lost.
        """
        p = self.params
        if p.force >= p.mass * p.gravity:
            raise NoEquilibriumError(
                f"force {p.force} >= weight {p.mass * p.gravity}: "
                "thrusters dominate gravity everywhere"
            )
        return math.tan(math.asin(p.force / (p.mass * p.gravity))) / (2.0 * p.beta)


def sample_start(zone: StartZone, bounds: Bounds, rng) -> State:
    """Uniform sample from the centered sub-rectangle scaled by the zone fraction.

    rng is anything with a uniform(lo, hi) method (random.Random works).
    """
    frac = zone.value
    (wx, wv), (cx, cv) = bounds.widths(), bounds.center()
    hx, hv = wx * frac / 2.0, wv * frac / 2.0
    return State(rng.uniform(cx - hx, cx + hx), rng.uniform(cv - hv, cv + hv))


def sweep_bounds(
    env: PuckEnv,
    rng,
    trials: int = 200,
    max_steps: int = 2000,
    seed_zone_width: float = 0.5,
) -> Bounds:
    """Re-derive observed state-space extremes with random-policy trials.

    Off by default everywhere; the standard bounds are fixed configuration.
    """
    p = env.params
    x_lo = x_hi = v_lo = v_hi = 0.0
    for _ in range(trials):
        s = State(rng.uniform(-seed_zone_width, seed_zone_width),
                  rng.uniform(-seed_zone_width, seed_zone_width))
        for _ in range(max_steps):
            a = ACTIONS[rng.randrange(2)]
            tr = env.step(s, a)
            s = tr.next
            x_lo, x_hi = min(x_lo, s.x), max(x_hi, s.x)
            v_lo, v_hi = min(v_lo, s.v), max(v_hi, s.v)
            if tr.terminal:
                break
    return Bounds(max(x_lo, -p.x_limit), min(x_hi, p.x_limit), v_lo, v_hi)
