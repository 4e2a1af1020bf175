#!/usr/bin/env python3
"""Regenerates the committed baseline box geometries in src/replearn/data/.

Two geometries ship with the package:

* vrdp_boxes.txt - a kd-tree refinement of the state space along trajectories
  from the task, in the style of trajectory-focused variable-resolution
  methods: up to six binary splits per coordinate wherever a trajectory point
  lands, with a gradual 2:1 falloff between neighbors.  The driving
  trajectory is a noisy bang-bang balancing run plus the first moments of an
  all-right failing run.
* controllability_boxes.txt - a model-based quantization with the finest
  cells where the dynamics are most sensitive (near the crest), growing
  geometrically outward.

Both are hand-tuned reconstructions: the originals were constructed by hand,
so only their style and scale are reproducible, not their exact cell layout.
"""
from __future__ import annotations

import random
import sys
from dataclasses import dataclass, replace
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from replearn.partition import Box, Representation, save
from replearn.puck import ACTIONS, Action, Bounds, PuckEnv, State

BOUNDS = Bounds()
MAX_SPLITS = 6   # finest cells 4.8/64 x 11.0/64


@dataclass
class Node:
    x_lo: float
    x_hi: float
    v_lo: float
    v_hi: float
    depth_x: int = 0
    depth_v: int = 0

    def contains(self, p) -> bool:
        return self.x_lo <= p[0] < self.x_hi and self.v_lo <= p[1] < self.v_hi

    def box(self) -> Box:
        return Box(self.x_lo, self.x_hi, self.v_lo, self.v_hi)


def split_axis(node: Node, axis: str) -> list[Node]:
    if axis == "x":
        mid = (node.x_lo + node.x_hi) / 2
        return [replace(node, x_hi=mid, depth_x=node.depth_x + 1),
                replace(node, x_lo=mid, depth_x=node.depth_x + 1)]
    mid = (node.v_lo + node.v_hi) / 2
    return [replace(node, v_hi=mid, depth_v=node.depth_v + 1),
            replace(node, v_lo=mid, depth_v=node.depth_v + 1)]


def refine_on_points(points: list[tuple[float, float]]) -> list[Node]:
    leaves = [Node(BOUNDS.x_lo, BOUNDS.x_hi, BOUNDS.v_lo, BOUNDS.v_hi)]
    changed = True
    while changed:
        changed = False
        out = []
        for node in leaves:
            hit = any(node.contains(p) for p in points)
            if hit and (node.depth_x < MAX_SPLITS or node.depth_v < MAX_SPLITS):
                # split the coarser coordinate first so cells stay squat
                axis = "x" if (node.depth_x <= node.depth_v and node.depth_x < MAX_SPLITS) else "v"
                if axis == "v" and node.depth_v >= MAX_SPLITS:
                    axis = "x"
                out.extend(split_axis(node, axis))
                changed = True
            else:
                out.append(node)
        leaves = out
    return leaves


def enforce_gradual_falloff(leaves: list[Node]) -> list[Node]:
    """No leaf may neighbor a leaf refined 2+ levels deeper on either axis."""

    def touches(a: Node, b: Node) -> bool:
        return (min(a.x_hi, b.x_hi) - max(a.x_lo, b.x_lo) > -1e-12
                and min(a.v_hi, b.v_hi) - max(a.v_lo, b.v_lo) > -1e-12)

    changed = True
    while changed:
        changed = False
        out = []
        for node in leaves:
            need_x = any(touches(node, m) and m.depth_x >= node.depth_x + 2 for m in leaves)
            need_v = any(touches(node, m) and m.depth_v >= node.depth_v + 2 for m in leaves)
            if need_x and node.depth_x < MAX_SPLITS:
                out.extend(split_axis(node, "x"))
                changed = True
            elif need_v and node.depth_v < MAX_SPLITS:
                out.extend(split_axis(node, "v"))
                changed = True
            else:
                out.append(node)
        leaves = out
    return leaves


def balancing_trajectory(flip_prob: float, steps: int, seed: int) -> list[tuple[float, float]]:
    """Bang-bang toward the diagonal with occasional random flips, restarted
    from varied spots on death; wanders over a good share of the band."""
    env = PuckEnv()
    rng = random.Random(seed)
    s = State(rng.uniform(-0.8, 0.8), rng.uniform(-1.8, 1.8))
    pts = []
    while len(pts) < steps:
        a = Action.PUSH_LEFT if s.v > -1.7615 * s.x else Action.PUSH_RIGHT
        if rng.random() < flip_prob:
            a = a.opposite()
        tr = env.step(s, a)
        if tr.terminal:
            s = State(rng.uniform(-0.8, 0.8), rng.uniform(-1.8, 1.8))
            continue
        s = tr.next
        pts.append((s.x, s.v))
    return pts


def failing_trajectory() -> list[tuple[float, float]]:
    env = PuckEnv()
    s = State(0.0, 0.0)
    pts = []
    while True:
        tr = env.step(s, Action.PUSH_RIGHT)
        if tr.terminal:
            return pts
        s = tr.next
        pts.append((s.x, s.v))


def vrdp_style() -> list[Box]:
    pts = balancing_trajectory(flip_prob=0.18, steps=60_000, seed=5)
    pts = pts[:: max(1, len(pts) // 1200)]
    pts += failing_trajectory()[:12]   # most of the failed run is pruned away
    leaves = refine_on_points(pts)
    leaves = enforce_gradual_falloff(leaves)
    return [n.box() for n in leaves]


def controllability_style() -> list[Box]:
    x_cuts = [-2.4, -1.7, -1.1, -0.65, -0.35, -0.15, 0.0,
              0.15, 0.35, 0.65, 1.1, 1.7, 2.4]
    v_cuts = [-5.5, -3.2, -1.9, -1.0, -0.4, 0.0, 0.4, 1.0, 1.9, 3.2, 5.5]
    return [Box(x_cuts[i], x_cuts[i + 1], v_cuts[k], v_cuts[k + 1])
            for i in range(len(x_cuts) - 1) for k in range(len(v_cuts) - 1)]


def main() -> None:
    data = Path(__file__).resolve().parent.parent / "src" / "replearn" / "data"
    data.mkdir(parents=True, exist_ok=True)
    for name, boxes in (("vrdp_boxes.txt", vrdp_style()),
                        ("controllability_boxes.txt", controllability_style())):
        rep = Representation(kind="boxes", boxes=boxes)
        path = data / name
        with open(path, "w") as fh:
            fh.write(f"# generated by tools/generate_baseline_boxes.py ({len(boxes)} boxes)\n")
            save(rep, fh)
        print(f"{path}: {len(boxes)} boxes")


if __name__ == "__main__":
    main()
