from fractions import Fraction as F

import pytest

from pwc import (
    Box,
    ClosedBox,
    Facet,
    Partition,
    box_intersect,
    closure_strictly_inside,
    dedupe_facets,
    format_rat,
    parse_rat,
    set_distance,
    sup_dist,
    validate_partition,
)
from pwc.geometry import as_rat

from corpus import HALVES, UNIT, e1


class TestRationals:
    def test_parse_plain_and_fraction(self):
        assert parse_rat("3") == F(3)
        assert parse_rat("-7/2") == F(-7, 2)
        assert parse_rat(" 1/3 ") == F(1, 3)

    @pytest.mark.parametrize("bad", ["1/0", "0.5", "1e-3", "", "a/b", "1/2/3"])
    def test_parse_rejects_non_rationals(self, bad):
        with pytest.raises(ValueError):
            parse_rat(bad)

    def test_format_roundtrip(self):
        for v in (F(0), F(5), F(-3, 7), F(10, 4)):
            assert parse_rat(format_rat(v)) == v

    def test_as_rat_accepts_int_str_fraction(self):
        assert as_rat(2) == F(2)
        assert as_rat("2/3") == F(2, 3)
        assert as_rat(F(1, 5)) == F(1, 5)

    def test_as_rat_rejects_float_and_bool(self):
        with pytest.raises(TypeError):
            as_rat(0.5)
        with pytest.raises(TypeError):
            as_rat(True)


class TestBox:
    def test_constructor_requires_positive_sides(self):
        with pytest.raises(ValueError):
            Box(("0",), ("0",))
        with pytest.raises(ValueError):
            Box(("1",), ("0",))
        with pytest.raises(ValueError):
            Box(("0", "0"), ("1",))

    def test_membership_is_open(self):
        b = Box(("0", "0"), ("1", "2"))
        assert b.contains((F(1, 2), F(1)))
        assert not b.contains((F(0), F(1)))
        assert b.closed_contains((F(0), F(1)))
        assert not b.closed_contains((F(0), F(3)))

    def test_diameter_is_longest_side(self):
        assert Box(("0", "0"), ("1", "3")).diameter == F(3)

    def test_center_and_corners(self):
        b = Box(("0", "0"), ("1", "2"))
        assert b.center() == (F(1, 2), F(1))
        corners = set(b.corners())
        assert len(corners) == 4
        assert (F(0), F(2)) in corners

    def test_translate_and_fatten(self):
        b = Box(("0",), ("1",))
        assert b.translate((F(1, 4),)) == Box(("1/4",), ("5/4",))
        assert b.fatten("1/8") == Box(("-1/8",), ("9/8",))
        with pytest.raises(ValueError):
            b.fatten("-1")

    def test_contains_box_is_closed_containment(self):
        outer = Box(("0",), ("1",))
        assert outer.contains_box(Box(("0",), ("1",)))
        assert outer.contains_box(Box(("1/4",), ("1/2",)))
        assert not outer.contains_box(Box(("1/4",), ("9/8",)))

    def test_facets_of_square(self):
        b = Box(("0", "0"), ("1", "2"))
        fs = b.facets()
        assert len(fs) == 4
        values = {(f.axis, f.value) for f in fs}
        assert values == {(0, F(0)), (0, F(1)), (1, F(0)), (1, F(2))}
        for f in fs:
            assert f.ambient_dim == 2

    def test_drop_axis(self):
        b = Box(("0", "1"), ("1", "3"))
        assert b.drop_axis(0) == Box(("1",), ("3",))


class TestBoxPredicates:
    def test_box_intersect(self):
        a = Box(("0",), ("1",))
        assert box_intersect(a, Box(("1/2",), ("2",))) == Box(("1/2",), ("1",))
        assert box_intersect(a, Box(("1",), ("2",))) is None
        assert box_intersect(a, Box(("3",), ("4",))) is None

    def test_closure_strictly_inside(self):
        outer = Box(("0",), ("1",))
        assert closure_strictly_inside(Box(("1/4",), ("1/2",)), outer)
        # touching the boundary fails the strict test
        assert not closure_strictly_inside(Box(("0",), ("1/2",)), outer)
        assert not closure_strictly_inside(outer, outer)


class TestClosedBox:
    def test_degenerate_allowed(self):
        r = ClosedBox(("1/2",), ("1/2",))
        assert r.contains((F(1, 2),))
        assert r.diameter == 0

    def test_distance_interval_gap(self):
        a = ClosedBox(("0",), ("1",))
        b = ClosedBox(("3/2",), ("2",))
        assert a.distance(b) == F(1, 2)
        assert b.distance(a) == F(1, 2)
        assert a.distance(ClosedBox(("1",), ("2",))) == 0

    def test_distance_uses_sup_norm(self):
        a = ClosedBox(("0", "0"), ("1", "1"))
        b = ClosedBox(("2", "3"), ("4", "4"))
        # axis gaps are 1 and 2; sup-norm distance is the larger
        assert a.distance(b) == F(2)

    def test_fatten_and_intersects(self):
        a = ClosedBox(("0",), ("1",))
        b = ClosedBox(("5/4",), ("2",))
        assert not a.intersects(b)
        assert a.fatten("1/4").intersects(b)


class TestSetDistance:
    def test_point_to_facets(self):
        fs = [Facet(0, F(0), UNIT.drop_axis(0)), Facet(0, F(1), UNIT.drop_axis(0))]
        assert set_distance((F(1, 4),), fs) == F(1, 4)
        assert set_distance((F(2, 3),), fs) == F(1, 3)

    def test_box_to_box(self):
        assert set_distance(Box(("0",), ("1",)), Box(("2",), ("3",))) == F(1)

    def test_mixed_collections(self):
        d = set_distance([(F(0),), (F(1),)], ClosedBox(("1/3",), ("1/2",)))
        assert d == F(1, 3)

    def test_facet_in_two_dims(self):
        f = Facet(0, F(1, 2), Box(("0",), ("1",)))
        assert set_distance((F(1, 4), F(1, 2)), f) == F(1, 4)
        # point beyond the facet extent: sup of axis offset and extent gap
        assert set_distance((F(1, 2), F(3, 2)), f) == F(1, 2)


class TestDedupeFacets:
    def test_shared_facet_collapses(self):
        fs = [f for b in HALVES for f in b.facets()]
        assert len(fs) == 4
        deduped = dedupe_facets(fs)
        assert len(deduped) == 3
        assert {f.value for f in deduped} == {F(0), F(1, 2), F(1)}


class TestPartition:
    def test_delta_facets_of_halves(self):
        part = e1().partition
        assert {f.value for f in part.delta_facets} == {F(0), F(1, 2), F(1)}

    def test_valid_partition_has_no_violations(self):
        assert validate_partition(e1().partition) == []

    def test_overlap_is_reported_with_witness(self):
        part = Partition(UNIT, (Box(("0",), ("2/3",)), Box(("1/2",), ("1",))))
        violations = validate_partition(part)
        kinds = {v.kind for v in violations}
        assert "overlap" in kinds
        v = next(v for v in violations if v.kind == "overlap")
        assert v.indices == (1, 2)
        assert v.witness_box == Box(("1/2",), ("2/3",))

    def test_gap_is_reported_with_interior_point(self):
        part = Partition(UNIT, (Box(("0",), ("1/3",)), Box(("1/2",), ("1",))))
        violations = validate_partition(part)
        v = next(v for v in violations if v.kind == "uncovered")
        assert v.witness_point is not None
        x = v.witness_point
        assert UNIT.contains(x)
        assert not any(b.contains(x) for b in part.elements)

    def test_element_outside_domain(self):
        part = Partition(UNIT, (Box(("0",), ("1/2",)), Box(("1/2",), ("3/2",))))
        violations = validate_partition(part)
        assert any(v.kind == "outside_domain" and v.indices == (2,)
                   for v in violations)

    def test_two_dimensional_grid_cover_passes(self):
        dom = Box(("0", "0"), ("1", "1"))
        cells = [Box((x, y), (F(x) + F(1, 2), F(y) + F(1, 2)))
                 for x in (F(0), F(1, 2)) for y in (F(0), F(1, 2))]
        assert validate_partition(Partition(dom, tuple(cells))) == []


def test_sup_dist():
    assert sup_dist((F(0), F(0)), (F(1), F(-2))) == F(2)
    assert sup_dist((F(1, 3),), (F(1, 3),)) == 0
