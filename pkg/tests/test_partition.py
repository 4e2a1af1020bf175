import io
import random

import numpy as np
import pytest

from replearn.partition import (
    Box,
    PartitionError,
    Representation,
    RepresentationParseError,
    diagonal_split,
    load,
    load_boxes,
    save,
    uniform_grid,
    voronoi_from_points,
)
from replearn.puck import Bounds, State


def probe_grid(n=50, bounds=Bounds()):
    # offsets avoid exact boundary/tie points
    xs = np.linspace(bounds.x_lo + 0.0137, bounds.x_hi - 0.0137, n)
    vs = np.linspace(bounds.v_lo + 0.0251, bounds.v_hi - 0.0251, n)
    gx, gv = np.meshgrid(xs, vs, indexing="ij")
    return gx.ravel(), gv.ravel()


class TestVoronoiClassify:
    def test_nearest_neighbor(self):
        rep = voronoi_from_points([State(0, 0), State(1, 0)])
        assert rep.classify(State(0.2, 0)) == 0
        assert rep.classify(State(0.8, 0)) == 1

    def test_merged_routes_to_primary(self):
        rep = voronoi_from_points([State(0, 0), State(1, 0)])
        rep.merge(1, 0)
        assert rep.classify(State(0.1, 0)) == 1

    def test_empty_rejected(self):
        rep = Representation()
        with pytest.raises(PartitionError):
            rep.classify(State(0, 0))

    def test_tie_breaks_to_lowest_id(self):
        rep = voronoi_from_points([State(-1, 0), State(1, 0)])
        assert rep.classify(State(0, 0)) == 0

    def test_perpendicular_bisector(self):
        rep = voronoi_from_points([State(0, 0), State(1, 0)])
        assert rep.classify(State(0.499, 0)) == 0
        assert rep.classify(State(0.501, 0)) == 1

    def test_prototype_point_maps_to_own_region(self):
        rng = random.Random(0)
        pts = [State(rng.uniform(-2, 2), rng.uniform(-5, 5)) for _ in range(30)]
        rep = voronoi_from_points(pts)
        for pid in rep.primary_ids():
            assert rep.classify(rep.prototypes[pid].point) == pid

    def test_batch_matches_scalar(self):
        rng = random.Random(1)
        rep = voronoi_from_points(
            [State(rng.uniform(-2, 2), rng.uniform(-5, 5)) for _ in range(17)])
        rep.merge(3, 11)
        rep.merge(0, 7)
        x, v = probe_grid(20)
        batch = rep.classify_batch(x, v)
        for i in range(len(x)):
            assert batch[i] == rep.classify(State(x[i], v[i]))

    def test_mirror_symmetric_prototypes_commute_with_mirror(self):
        pts = [State(0.3, 1.2), State(-0.3, -1.2), State(1.5, -2.0), State(-1.5, 2.0)]
        rep = voronoi_from_points(pts)
        partner = {0: 1, 1: 0, 2: 3, 3: 2}
        rng = random.Random(2)
        for _ in range(500):
            s = State(rng.uniform(-2.4, 2.4), rng.uniform(-5.5, 5.5))
            assert rep.classify(s.mirror()) == partner[rep.classify(s)]


class TestNearestAndPrimary:
    def test_single_prototype(self):
        rep = voronoi_from_points([State(0, 0)])
        primary, second = rep.nearest_and_primary(State(3, 3))
        assert primary.id == 0 and second is None

    def test_nearest_is_merged(self):
        rep = voronoi_from_points([State(0, 0), State(1, 0)])
        rep.merge(0, 1)
        primary, second = rep.nearest_and_primary(State(1.1, 0))
        assert primary.id == 0
        assert second is not None and second.id == 1

    def test_nearest_is_primary(self):
        rep = voronoi_from_points([State(0, 0), State(1, 0)])
        primary, second = rep.nearest_and_primary(State(-0.5, 0))
        assert primary.id == 0 and second is None

    def test_wrong_kind_rejected(self):
        with pytest.raises(PartitionError):
            diagonal_split().nearest_and_primary(State(0, 0))


class TestMutation:
    def test_add_prototype_changes_classification(self):
        rep = voronoi_from_points([State(0, 0)])
        assert rep.classify(State(1.4, 0)) == 0
        new = rep.add_prototype(State(1.5, 0))
        assert rep.classify(State(1.4, 0)) == new

    def test_duplicate_point_rejected_and_state_unchanged(self):
        rep = voronoi_from_points([State(0, 0)])
        with pytest.raises(PartitionError):
            rep.add_prototype(State(0, 0))
        assert rep.region_count() == 1

    def test_merge_then_detach_restores_classification(self):
        rng = random.Random(3)
        pts = [State(rng.uniform(-2, 2), rng.uniform(-5, 5)) for _ in range(12)]
        rep = voronoi_from_points(pts)
        x, v = probe_grid(25)
        before = rep.classify_batch(x, v).copy()
        rep.merge(2, 9)
        assert (rep.classify_batch(x, v) != before).any()
        rep.detach(9)
        assert (rep.classify_batch(x, v) == before).all()

    def test_merge_validation(self):
        rep = voronoi_from_points([State(0, 0), State(1, 0), State(2, 0)])
        with pytest.raises(PartitionError):
            rep.merge(0, 0)
        rep.merge(0, 1)
        with pytest.raises(PartitionError):
            rep.merge(2, 1)  # 1 is no longer primary

    def test_detach_primary_rejected(self):
        rep = voronoi_from_points([State(0, 0)])
        with pytest.raises(PartitionError):
            rep.detach(0)

    def test_merge_flattens_chains(self):
        rep = voronoi_from_points([State(0, 0), State(1, 0), State(2, 0)])
        rep.merge(1, 2)          # 2 -> 1
        rep.merge(0, 1)          # compound {1, 2} folds into 0
        assert rep.prototypes[1].merged_into == 0
        assert rep.prototypes[2].merged_into == 0
        assert rep.region_count() == 1

    def test_region_count_equals_primaries(self):
        rng = random.Random(4)
        rep = voronoi_from_points(
            [State(rng.uniform(-2, 2), rng.uniform(-5, 5)) for _ in range(10)])
        rep.merge(0, 5)
        rep.merge(0, 6)
        assert rep.region_count() == 8
        assert len(rep.primary_ids()) == 8

    def test_random_merge_detach_round_trips(self):
        rng = random.Random(5)
        for trial in range(20):
            count = rng.randrange(3, 16)
            pts = [State(rng.uniform(-2, 2), rng.uniform(-5, 5)) for _ in range(count)]
            rep = voronoi_from_points(pts)
            x, v = probe_grid(12)
            before = rep.classify_batch(x, v).copy()
            primaries = rep.primary_ids()
            a, b = rng.sample(primaries, 2)
            rep.merge(a, b)
            rep.detach(b)
            assert (rep.classify_batch(x, v) == before).all()


class TestBaselines:
    def test_diagonal_regions(self):
        rep = diagonal_split(1.7615)
        assert rep.region_count() == 2
        # v above the line -> upper region
        assert rep.classify(State(1.0, 0.0)) == 1
        assert rep.classify(State(1.0, -3.0)) == 0
        assert rep.classify(State(-1.0, 0.0)) == 0
        assert rep.classify(State(-1.0, 3.0)) == 1

    def test_grid_region_count(self):
        rep = uniform_grid(10, 10)
        assert rep.region_count() == 100

    def test_grid_cell_locate(self):
        rep = uniform_grid(10, 10)
        # cells are 0.48 x 1.1; region index is xi * nv + vi
        assert rep.classify(State(-2.4, -5.5)) == 0
        assert rep.classify(State(-2.4 + 0.4, -5.5 + 1.0)) == 0
        assert rep.classify(State(-2.4 + 0.5, -5.5 + 1.2)) == 11

    def test_grid_classify_total_outside_cover(self):
        rep = uniform_grid(4, 4)
        assert rep.classify(State(99.0, 99.0)) == 15
        assert rep.classify(State(-99.0, -99.0)) == 0

    def test_every_probe_claimed_once(self):
        for rep in (uniform_grid(7, 5), diagonal_split(),
                    voronoi_from_points([State(0, 0), State(1, 1), State(-1, 2)])):
            x, v = probe_grid(30)
            regions = rep.classify_batch(x, v)
            assert len(regions) == len(x)
            assert set(np.unique(regions)) <= set(rep.region_ids())

    def test_overlapping_boxes_rejected(self):
        with pytest.raises(PartitionError):
            Representation(kind="boxes", boxes=[
                Box(0, 2, 0, 2), Box(1, 3, 0, 2), Box(2, 3, 0, 2)])

    def test_gap_in_coverage_rejected(self):
        with pytest.raises(PartitionError):
            Representation(kind="boxes", boxes=[
                Box(0, 1, 0, 2), Box(2, 3, 0, 2)])


class TestSerialization:
    def test_round_trip_voronoi(self):
        rng = random.Random(6)
        pts = [State(rng.uniform(-2, 2), rng.uniform(-5, 5)) for _ in range(24)]
        rep = voronoi_from_points(pts)
        rep.merge(1, 13)
        rep.merge(4, 20)
        buf = io.StringIO()
        save(rep, buf)
        loaded = load(io.StringIO(buf.getvalue()))
        x, v = probe_grid(100)
        assert (rep.classify_batch(x, v) == loaded.classify_batch(x, v)).all()

    def test_round_trip_empty(self):
        buf = io.StringIO()
        save(Representation(), buf)
        loaded = load(io.StringIO(buf.getvalue()))
        assert loaded.is_empty()

    def test_round_trip_boxes_and_halfplane(self):
        for rep in (uniform_grid(3, 4), diagonal_split(2.5)):
            buf = io.StringIO()
            save(rep, buf)
            loaded = load(io.StringIO(buf.getvalue()))
            x, v = probe_grid(20)
            assert (rep.classify_batch(x, v) == loaded.classify_batch(x, v)).all()

    def test_malformed_line_reports_line_number(self):
        text = "voronoi\n0 0.0 0.0\n1 nope 3.0\n"
        with pytest.raises(RepresentationParseError) as err:
            load(io.StringIO(text))
        assert "line 3" in str(err.value)

    def test_comments_and_blanks_ignored(self):
        text = "# a representation\nvoronoi\n\n0 0.5 1.0  # the only prototype\n"
        rep = load(io.StringIO(text))
        assert rep.region_count() == 1

    def test_merge_chain_rejected(self):
        text = "voronoi\n0 0.0 0.0 1\n1 1.0 0.0 2\n2 2.0 0.0\n"
        with pytest.raises(RepresentationParseError):
            load(io.StringIO(text))

    def test_unknown_header_rejected(self):
        with pytest.raises(RepresentationParseError):
            load(io.StringIO("polygons\n1 2 3\n"))

    def test_load_boxes_enforces_kind(self):
        grid = uniform_grid(2, 2)
        buf = io.StringIO()
        save(grid, buf)
        assert load_boxes(io.StringIO(buf.getvalue())).region_count() == 4
        with pytest.raises(PartitionError):
            load_boxes(io.StringIO("halfplane\n1.7615\n"))
