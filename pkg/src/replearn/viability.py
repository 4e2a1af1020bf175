"""Brute-force ground truth for the puck task: which states are controllable
at all, which controllable states commit the agent to one action, and whether
a representation separates the two committed classes.

The controllable set is computed as a viability kernel on a fine grid by
fixpoint iteration.  Each (cell, action) pair is mapped to the first *other*
cell reached by holding that action from the cell center (or to a terminal /
off-grid sentinel); a cell is doomed once every action leads to a doomed or
terminal image.  Following the flow until it actually leaves the cell avoids
the spurious self-loops a single-Euler-step image produces at low speeds,
where one step moves the state by far less than one cell.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .partition import Representation
from .puck import Bounds, DEFAULT_BOUNDS, Action, PuckEnv, State

TERMINAL = -1   # image sentinel: wall reached
OFF_GRID = -2   # image sentinel: left the grid in v; treated as doomed


class CriticalClass(enum.IntEnum):
    DOOMED = 0
    MUST_PUSH_LEFT = 1
    MUST_PUSH_RIGHT = 2
    DONT_CARE = 3


@dataclass
class ViabilityGrid:
    bounds: Bounds
    resolution: float
    controllable: np.ndarray   # bool, shape (nx, nv)

    @property
    def nx(self) -> int:
        return self.controllable.shape[0]

    @property
    def nv(self) -> int:
        return self.controllable.shape[1]

    def cell_index(self, x: float, v: float) -> tuple[int, int] | None:
        b, r = self.bounds, self.resolution
        i = int(np.floor((x - b.x_lo) / r))
        k = int(np.floor((v - b.v_lo) / r))
        if 0 <= i < self.nx and 0 <= k < self.nv:
            return i, k
        return None

    def is_controllable(self, s: State) -> bool:
        idx = self.cell_index(s.x, s.v)
        if idx is None:
            return False
        return bool(self.controllable[idx])

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        b, r = self.bounds, self.resolution
        xs = b.x_lo + r * (np.arange(self.nx) + 0.5)
        vs = b.v_lo + r * (np.arange(self.nv) + 0.5)
        return xs, vs


def _cell_images(
    env: PuckEnv, bounds: Bounds, resolution: float, nx: int, nv: int,
    action: Action, max_cell_steps: int,
) -> np.ndarray:
    """Flat image index per cell for one held action (sentinels < 0).

    Cells whose trajectory never leaves within max_cell_steps keep themselves
    as image (a genuine near-equilibrium self-loop).
    """
    r = resolution
    xs = bounds.x_lo + r * (np.arange(nx) + 0.5)
    vs = bounds.v_lo + r * (np.arange(nv) + 0.5)
    x, v = np.meshgrid(xs, vs, indexing="ij")
    x, v = x.ravel().copy(), v.ravel().copy()
    home = np.arange(nx * nv)
    image = home.copy()   # default: self-loop
    active = np.ones(nx * nv, dtype=bool)
    f = env.force_of(action)
    x_limit = env.params.x_limit
    for _ in range(max_cell_steps):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        x2, v2 = env.step_arrays(x[idx], v[idx], f)
        x[idx], v[idx] = x2, v2
        hit_wall = np.abs(x2) >= x_limit
        off_v = (~hit_wall) & ((v2 < bounds.v_lo) | (v2 >= bounds.v_hi))
        off_x = (~hit_wall) & (~off_v) & ((x2 < bounds.x_lo) | (x2 >= bounds.x_hi))
        ci = np.floor((x2 - bounds.x_lo) / r).astype(np.int64)
        ck = np.floor((v2 - bounds.v_lo) / r).astype(np.int64)
        cell = ci * nv + ck
        moved = (~hit_wall) & (~off_v) & (~off_x) & (cell != home[idx])
        image[idx[hit_wall]] = TERMINAL
        image[idx[off_v | off_x]] = OFF_GRID
        image[idx[moved]] = cell[moved]
        active[idx[hit_wall | off_v | off_x | moved]] = False
    return image


def viability_map(
    env: PuckEnv,
    bounds: Bounds = DEFAULT_BOUNDS,
    resolution: float = 0.01,
    max_cell_steps: int = 500,
) -> ViabilityGrid:
    """Fixpoint viability kernel on the discretized dynamics.

    Starts from every cell controllable; a cell becomes doomed when, for every
    action, its image is doomed, terminal, or off-grid.  Synchronous sweeps
    keep the result independent of visitation order.
    """
    if resolution <= 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    nx = int(round((bounds.x_hi - bounds.x_lo) / resolution))
    nv = int(round((bounds.v_hi - bounds.v_lo) / resolution))
    if nx < 1 or nv < 1:
        raise ValueError("resolution coarser than bounds")
    for n, width in ((nx, bounds.x_hi - bounds.x_lo), (nv, bounds.v_hi - bounds.v_lo)):
        if abs(n * resolution - width) > 1e-9 * max(1.0, width):
            raise ValueError(
                f"resolution {resolution} does not divide the bounds width {width}")
    images = [
        _cell_images(env, bounds, resolution, nx, nv, a, max_cell_steps)
        for a in env.actions
    ]
    controllable = np.ones(nx * nv, dtype=bool)
    while True:
        ok = np.zeros(nx * nv, dtype=bool)
        for img in images:
            valid = img >= 0
            ok[valid] |= controllable[img[valid]]
        new = controllable & ok
        if np.array_equal(new, controllable):
            break
        controllable = new
    return ViabilityGrid(bounds=bounds, resolution=resolution,
                         controllable=controllable.reshape(nx, nv))


def _post_state_ok(grid: ViabilityGrid, env: PuckEnv, x: float, v: float) -> bool:
    """Does a one-step image state stay terminal-free and controllable?"""
    if abs(x) >= env.params.x_limit:
        return False
    idx = grid.cell_index(x, v)
    if idx is None:
        return False
    return bool(grid.controllable[idx])


def classify_critical(grid: ViabilityGrid, env: PuckEnv, s: State) -> CriticalClass:
    """One push each way from s decides whether the state commits the agent."""
    idx = grid.cell_index(s.x, s.v)
    if idx is None:
        raise ValueError(f"state {s} outside analyzed bounds")
    if not grid.controllable[idx]:
        return CriticalClass.DOOMED
    left = env.step(s, Action.PUSH_LEFT).next
    right = env.step(s, Action.PUSH_RIGHT).next
    left_ok = _post_state_ok(grid, env, left.x, left.v)
    right_ok = _post_state_ok(grid, env, right.x, right.v)
    if left_ok and right_ok:
        return CriticalClass.DONT_CARE
    if left_ok and not right_ok:
        return CriticalClass.MUST_PUSH_LEFT
    if right_ok and not left_ok:
        return CriticalClass.MUST_PUSH_RIGHT
    # Both images doomed from a controllable cell: a resolution artifact.
    return CriticalClass.DOOMED


def critical_classes(grid: ViabilityGrid, env: PuckEnv) -> np.ndarray:
    """Vectorized classify_critical over all cell centers, shape (nx, nv)."""
    xs, vs = grid.centers()
    x, v = np.meshgrid(xs, vs, indexing="ij")
    x, v = x.ravel(), v.ravel()
    ctrl = grid.controllable.ravel()
    out = np.full(x.shape, CriticalClass.DOOMED, dtype=np.int8)

    def ok_after(f: float) -> np.ndarray:
        x2, v2 = env.step_arrays(x, v, f)
        inside = np.abs(x2) < env.params.x_limit
        b, r = grid.bounds, grid.resolution
        ci = np.floor((x2 - b.x_lo) / r).astype(np.int64)
        ck = np.floor((v2 - b.v_lo) / r).astype(np.int64)
        on_grid = inside & (ci >= 0) & (ci < grid.nx) & (ck >= 0) & (ck < grid.nv)
        good = np.zeros(x.shape, dtype=bool)
        flat = ci[on_grid] * grid.nv + ck[on_grid]
        good[on_grid] = ctrl[flat]
        return good

    left_ok = ok_after(-env.params.force)
    right_ok = ok_after(env.params.force)
    out[ctrl & left_ok & right_ok] = CriticalClass.DONT_CARE
    out[ctrl & left_ok & ~right_ok] = CriticalClass.MUST_PUSH_LEFT
    out[ctrl & right_ok & ~left_ok] = CriticalClass.MUST_PUSH_RIGHT
    return out.reshape(grid.nx, grid.nv)


@dataclass(frozen=True)
class ValidationReport:
    violations: int          # (must-push-left, must-push-right) pairs sharing a region
    region_count: int
    must_push_left: int
    must_push_right: int


def validate_representation(
    grid: ViabilityGrid, env: PuckEnv, rep: Representation
) -> ValidationReport:
    """Count committed-state pairs of opposite kinds that the representation
    fails to separate."""
    classes = critical_classes(grid, env).ravel()
    xs, vs = grid.centers()
    x, v = np.meshgrid(xs, vs, indexing="ij")
    x, v = x.ravel(), v.ravel()
    mpl = classes == CriticalClass.MUST_PUSH_LEFT
    mpr = classes == CriticalClass.MUST_PUSH_RIGHT
    regions_l = rep.classify_batch(x[mpl], v[mpl])
    regions_r = rep.classify_batch(x[mpr], v[mpr])
    violations = 0
    counts_l: dict[int, int] = {}
    for rj in regions_l:
        counts_l[int(rj)] = counts_l.get(int(rj), 0) + 1
    for rj in regions_r:
        violations += counts_l.get(int(rj), 0)
    return ValidationReport(
        violations=violations,
        region_count=rep.region_count(),
        must_push_left=int(mpl.sum()),
        must_push_right=int(mpr.sum()),
    )


def export_critical_csv(grid: ViabilityGrid, env: PuckEnv, sink: TextIO) -> None:
    """Rows x, v, class for every cell center (plot-ready)."""
    classes = critical_classes(grid, env)
    xs, vs = grid.centers()
    sink.write("x,v,class\n")
    names = {c.value: c.name.lower() for c in CriticalClass}
    for i in range(grid.nx):
        for k in range(grid.nv):
            sink.write(f"{float(xs[i])!r},{float(vs[k])!r},{names[int(classes[i, k])]}\n")
