"""State-space partitions: nearest-neighbor Voronoi regions with merge
structure, plus box-grid and half-plane baselines, all sharing one
classification interface and one text interchange format.

A Voronoi region is identified by the id of its primary prototype.  Merged
(compound) regions keep their member prototypes but route classification to
the primary; merge chains are flattened so the indirection depth is at most
one.  Box and half-plane representations use plain indices as region ids.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, TextIO, Union

import numpy as np

from .puck import Bounds, DEFAULT_BOUNDS, State

# Per-dimension distance scaling: reciprocal of the default state-space extent,
# so neither coordinate dominates the metric.
DEFAULT_SCALE = (1.0 / 4.8, 1.0 / 11.0)

VORONOI = "voronoi"
BOXES = "boxes"
HALFPLANE = "halfplane"

RegionId = int


class PartitionError(ValueError):
    pass


class RepresentationParseError(PartitionError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass
class Prototype:
    id: int
    point: State
    merged_into: Optional[int] = None  # id of the primary of its compound region


@dataclass(frozen=True)
class Box:
    x_lo: float
    x_hi: float
    v_lo: float
    v_hi: float

    def contains(self, x: float, v: float) -> bool:
        return self.x_lo <= x < self.x_hi and self.v_lo <= v < self.v_hi

    def area(self) -> float:
        return (self.x_hi - self.x_lo) * (self.v_hi - self.v_lo)


class Representation:
    """One partition of the plane.  Mutation is only meaningful for the
    Voronoi kind; baselines are fixed geometries."""

    def __init__(
        self,
        kind: str = VORONOI,
        scale: tuple[float, float] = DEFAULT_SCALE,
        boxes: Optional[list[Box]] = None,
        slope: Optional[float] = None,
    ):
        if kind not in (VORONOI, BOXES, HALFPLANE):
            raise PartitionError(f"unknown representation kind {kind!r}")
        if scale[0] <= 0 or scale[1] <= 0:
            raise PartitionError(f"scale must be strictly positive, got {scale}")
        self.kind = kind
        self.scale = scale
        self.prototypes: dict[int, Prototype] = {}
        self._next_id = 0
        self._cache: Optional[_VoronoiCache] = None
        self.boxes: list[Box] = boxes or []
        self.slope = slope
        self._box_index: Optional[_BoxIndex] = None
        if kind == BOXES:
            if not self.boxes:
                raise PartitionError("boxes representation needs at least one box")
            _validate_boxes(self.boxes)
            self._box_index = _BoxIndex(self.boxes)
        if kind == HALFPLANE and slope is None:
            raise PartitionError("halfplane representation needs a slope")

    # -- introspection ------------------------------------------------------

    def is_empty(self) -> bool:
        return self.kind == VORONOI and not self.prototypes

    def primary_ids(self) -> list[int]:
        return [p.id for p in self.prototypes.values() if p.merged_into is None]

    def region_count(self) -> int:
        if self.kind == BOXES:
            return len(self.boxes)
        if self.kind == HALFPLANE:
            return 2
        return len(self.primary_ids())

    def region_ids(self) -> list[RegionId]:
        if self.kind == BOXES:
            return list(range(len(self.boxes)))
        if self.kind == HALFPLANE:
            return [0, 1]
        return self.primary_ids()

    def has_point(self, s: State) -> bool:
        return any(p.point == s for p in self.prototypes.values())

    # -- classification -----------------------------------------------------

    def classify(self, s: State) -> RegionId:
        return self.classify_xy(s.x, s.v)

    def classify_xy(self, x: float, v: float) -> RegionId:
        if self.kind == HALFPLANE:
            # Upper region (1) lies above the line v = -slope * x.
            return 1 if v > -self.slope * x else 0
        if self.kind == BOXES:
            return self._box_index.locate(x, v)
        if not self.prototypes:
            raise PartitionError("cannot classify with an empty representation")
        cache = self._voronoi_cache()
        return int(cache.primary[cache.nearest_index(x, v)])

    def classify_batch(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Vectorized classify; returns an int array of region ids."""
        if self.kind == HALFPLANE:
            return (v > -self.slope * x).astype(np.int64)
        if self.kind == BOXES:
            return self._box_index.locate_batch(x, v)
        if not self.prototypes:
            raise PartitionError("cannot classify with an empty representation")
        cache = self._voronoi_cache()
        sx, sv = self.scale
        d = ((x[:, None] - cache.px[None, :]) * sx) ** 2 \
            + ((v[:, None] - cache.pv[None, :]) * sv) ** 2
        return cache.primary[np.argmin(d, axis=1)]

    def nearest_and_primary(self, s: State) -> tuple[Prototype, Optional[Prototype]]:
        """Primary prototype of s's region, plus the nearest prototype when it
        is not itself the primary."""
        if self.kind != VORONOI:
            raise PartitionError("nearest_and_primary applies to Voronoi kind only")
        if not self.prototypes:
            raise PartitionError("representation is empty")
        cache = self._voronoi_cache()
        nearest = self.prototypes[int(cache.ids[cache.nearest_index(s.x, s.v)])]
        if nearest.merged_into is None:
            return nearest, None
        return self.prototypes[nearest.merged_into], nearest

    # -- mutation (Voronoi kind) --------------------------------------------

    def add_prototype(self, s: State) -> RegionId:
        if self.kind != VORONOI:
            raise PartitionError("can only add prototypes to Voronoi kind")
        if self.has_point(s):
            raise PartitionError(f"prototype point {s} already present")
        pid = self._next_id
        self._next_id += 1
        self.prototypes[pid] = Prototype(pid, s)
        self._cache = None
        return pid

    def merge(self, a: RegionId, b: RegionId) -> None:
        """Fold region b's compound into region a; a's prototype stays primary."""
        if a == b:
            raise PartitionError(f"cannot merge region {a} into itself")
        for rid in (a, b):
            p = self.prototypes.get(rid)
            if p is None or p.merged_into is not None:
                raise PartitionError(f"region {rid} is not a primary region")
        for p in self.prototypes.values():
            if p.id == b or p.merged_into == b:
                p.merged_into = a
        self._cache = None

    def detach(self, prototype_id: int) -> None:
        p = self.prototypes.get(prototype_id)
        if p is None:
            raise PartitionError(f"no prototype with id {prototype_id}")
        if p.merged_into is None:
            raise PartitionError(f"prototype {prototype_id} is not merged")
        p.merged_into = None
        self._cache = None

    # -- internals -----------------------------------------------------------

    def _voronoi_cache(self) -> "_VoronoiCache":
        if self._cache is None:
            protos = sorted(self.prototypes.values(), key=lambda p: p.id)
            self._cache = _VoronoiCache(
                ids=np.array([p.id for p in protos], dtype=np.int64),
                px=np.array([p.point.x for p in protos]),
                pv=np.array([p.point.v for p in protos]),
                primary=np.array(
                    [p.id if p.merged_into is None else p.merged_into for p in protos],
                    dtype=np.int64,
                ),
                scale=self.scale,
            )
        return self._cache


@dataclass
class _VoronoiCache:
    """Prototype arrays sorted by ascending id, so argmin tie-breaks to the
    lowest id."""

    ids: np.ndarray
    px: np.ndarray
    pv: np.ndarray
    primary: np.ndarray
    scale: tuple[float, float]

    def nearest_index(self, x: float, v: float) -> int:
        sx, sv = self.scale
        d = ((x - self.px) * sx) ** 2 + ((v - self.pv) * sv) ** 2
        return int(np.argmin(d))


class _BoxIndex:
    """O(1)-ish box lookup via the micro-grid induced by all box edges."""

    def __init__(self, boxes: list[Box]):
        self.boxes = boxes
        self.x_edges = np.array(sorted({b.x_lo for b in boxes} | {b.x_hi for b in boxes}))
        self.v_edges = np.array(sorted({b.v_lo for b in boxes} | {b.v_hi for b in boxes}))
        nx, nv = len(self.x_edges) - 1, len(self.v_edges) - 1
        self.table = np.full((nx, nv), -1, dtype=np.int64)
        xc = (self.x_edges[:-1] + self.x_edges[1:]) / 2.0
        vc = (self.v_edges[:-1] + self.v_edges[1:]) / 2.0
        for bi, b in enumerate(boxes):
            xi = (xc >= b.x_lo) & (xc < b.x_hi)
            vi = (vc >= b.v_lo) & (vc < b.v_hi)
            self.table[np.ix_(xi, vi)] = bi

    def _clip(self, x, v):
        # Classification is total: out-of-cover points snap to the nearest cell.
        x = np.clip(x, self.x_edges[0], np.nextafter(self.x_edges[-1], -np.inf))
        v = np.clip(v, self.v_edges[0], np.nextafter(self.v_edges[-1], -np.inf))
        return x, v

    def locate(self, x: float, v: float) -> int:
        x, v = self._clip(x, v)
        xi = int(np.searchsorted(self.x_edges, x, side="right")) - 1
        vi = int(np.searchsorted(self.v_edges, v, side="right")) - 1
        return int(self.table[xi, vi])

    def locate_batch(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        x, v = self._clip(np.asarray(x, dtype=float), np.asarray(v, dtype=float))
        xi = np.searchsorted(self.x_edges, x, side="right") - 1
        vi = np.searchsorted(self.v_edges, v, side="right") - 1
        return self.table[xi, vi]


def _validate_boxes(boxes: list[Box], tol: float = 1e-9) -> None:
    """Boxes must be non-degenerate, mutually non-overlapping, and cover their
    bounding rectangle exactly."""
    for b in boxes:
        if b.x_hi <= b.x_lo or b.v_hi <= b.v_lo:
            raise PartitionError(f"degenerate box {b}")
    for i, a in enumerate(boxes):
        for b in boxes[i + 1:]:
            if (min(a.x_hi, b.x_hi) - max(a.x_lo, b.x_lo) > tol
                    and min(a.v_hi, b.v_hi) - max(a.v_lo, b.v_lo) > tol):
                raise PartitionError(f"overlapping boxes {a} and {b}")
    x_lo = min(b.x_lo for b in boxes)
    x_hi = max(b.x_hi for b in boxes)
    v_lo = min(b.v_lo for b in boxes)
    v_hi = max(b.v_hi for b in boxes)
    total = sum(b.area() for b in boxes)
    cover = (x_hi - x_lo) * (v_hi - v_lo)
    if abs(total - cover) > tol * max(1.0, cover):
        raise PartitionError(
            f"boxes cover area {total:.12g} of bounding rectangle {cover:.12g}: "
            "gaps in coverage"
        )


# -- constructors -------------------------------------------------------------

def diagonal_split(slope: float = 1.7615, scale: tuple[float, float] = DEFAULT_SCALE) -> Representation:
    """Two regions split by the line v = -slope * x."""
    return Representation(kind=HALFPLANE, scale=scale, slope=slope)


def uniform_grid(
    nx: int = 10,
    nv: int = 10,
    bounds: Bounds = DEFAULT_BOUNDS,
    scale: tuple[float, float] = DEFAULT_SCALE,
) -> Representation:
    if nx < 1 or nv < 1:
        raise PartitionError(f"grid needs at least one cell per axis, got {nx}x{nv}")
    xs = np.linspace(bounds.x_lo, bounds.x_hi, nx + 1)
    vs = np.linspace(bounds.v_lo, bounds.v_hi, nv + 1)
    boxes = [
        Box(float(xs[i]), float(xs[i + 1]), float(vs[k]), float(vs[k + 1]))
        for i in range(nx)
        for k in range(nv)
    ]
    return Representation(kind=BOXES, scale=scale, boxes=boxes)


def voronoi_from_points(
    points: Iterable[State], scale: tuple[float, float] = DEFAULT_SCALE
) -> Representation:
    rep = Representation(kind=VORONOI, scale=scale)
    for s in points:
        rep.add_prototype(s)
    return rep


def load_boxes(
    source: Union[str, TextIO], scale: tuple[float, float] = DEFAULT_SCALE
) -> Representation:
    """Load a box-partition file; anything else in the file is an error."""
    rep = load(source, scale=scale)
    if rep.kind != BOXES:
        raise PartitionError(f"expected a boxes file, found kind {rep.kind!r}")
    return rep


# -- serialization -------------------------------------------------------------

def save(rep: Representation, sink: Union[str, TextIO]) -> None:
    """Text format: header line with the kind, then one record per line."""
    if isinstance(sink, str):
        with open(sink, "w") as fh:
            save(rep, fh)
        return
    sink.write(rep.kind + "\n")
    if rep.kind == VORONOI:
        for p in sorted(rep.prototypes.values(), key=lambda p: p.id):
            rec = f"{p.id} {p.point.x!r} {p.point.v!r}"
            if p.merged_into is not None:
                rec += f" {p.merged_into}"
            sink.write(rec + "\n")
    elif rep.kind == BOXES:
        for b in rep.boxes:
            sink.write(f"{b.x_lo!r} {b.x_hi!r} {b.v_lo!r} {b.v_hi!r}\n")
    else:
        sink.write(f"{rep.slope!r}\n")


def load(
    source: Union[str, TextIO], scale: tuple[float, float] = DEFAULT_SCALE
) -> Representation:
    if isinstance(source, str):
        with open(source) as fh:
            return load(fh, scale=scale)
    records: list[tuple[int, list[str]]] = []
    kind = None
    for line_no, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if kind is None:
            if line not in (VORONOI, BOXES, HALFPLANE):
                raise RepresentationParseError(line_no, f"unknown header {line!r}")
            kind = line
            continue
        records.append((line_no, line.split()))
    if kind is None:
        raise RepresentationParseError(0, "empty representation file (no header)")
    if kind == VORONOI:
        rep = Representation(kind=VORONOI, scale=scale)
        merges: list[tuple[int, int, int]] = []
        for line_no, parts in records:
            if len(parts) not in (3, 4):
                raise RepresentationParseError(line_no, f"expected 3 or 4 fields, got {len(parts)}")
            try:
                pid = int(parts[0])
                point = State(float(parts[1]), float(parts[2]))
            except ValueError as exc:
                raise RepresentationParseError(line_no, str(exc)) from exc
            if pid in rep.prototypes:
                raise RepresentationParseError(line_no, f"duplicate prototype id {pid}")
            rep.prototypes[pid] = Prototype(pid, point)
            rep._next_id = max(rep._next_id, pid + 1)
            if len(parts) == 4:
                try:
                    merges.append((line_no, pid, int(parts[3])))
                except ValueError as exc:
                    raise RepresentationParseError(line_no, str(exc)) from exc
        for line_no, pid, target in merges:
            if target not in rep.prototypes:
                raise RepresentationParseError(line_no, f"merged_into unknown id {target}")
            rep.prototypes[pid].merged_into = target
        for line_no, pid, target in merges:
            if rep.prototypes[target].merged_into is not None:
                raise RepresentationParseError(line_no, f"merged_into non-primary id {target}")
        rep._cache = None
        return rep
    if kind == BOXES:
        boxes = []
        for line_no, parts in records:
            if len(parts) != 4:
                raise RepresentationParseError(line_no, f"expected 4 fields, got {len(parts)}")
            try:
                boxes.append(Box(*(float(p) for p in parts)))
            except ValueError as exc:
                raise RepresentationParseError(line_no, str(exc)) from exc
        try:
            return Representation(kind=BOXES, scale=scale, boxes=boxes)
        except PartitionError as exc:
            raise PartitionError(f"invalid box file: {exc}") from exc
    # halfplane
    if len(records) != 1 or len(records[0][1]) != 1:
        line_no = records[0][0] if records else 0
        raise RepresentationParseError(line_no, "halfplane file needs exactly one slope value")
    try:
        slope = float(records[0][1][0])
    except ValueError as exc:
        raise RepresentationParseError(records[0][0], str(exc)) from exc
    return Representation(kind=HALFPLANE, scale=scale, slope=slope)
