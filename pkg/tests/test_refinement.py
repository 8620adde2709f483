from fractions import Fraction as F

import pytest

from pwc import (
    Box,
    NotMarkovError,
    attractor,
    detect_markov,
    max_cells_sharing_point,
    partition_maximality_warnings,
    refine,
    refine_levels,
    stabilisation_check,
    symbolic_model,
)

from corpus import (
    E1_ATTRACTOR,
    E1_MIN_DELTA_DIST,
    E3_ATTRACTOR,
    E4_ORBIT,
    M2D_ATTRACTOR,
    M2D_MIN_DELTA_DIST,
    SINGLE_FIXED,
    e1,
    e2,
    e3,
    e4,
    markov_2d,
    markov_corpus,
    single_piece,
)


class TestRefine:
    def test_depth_one_is_the_partition(self):
        refined = refine(e1(), 1)
        assert refined.words() == [(1,), (2,)]
        assert refined.regions() == list(e1().partition.elements)

    def test_e1_cells_stay_the_elements(self):
        # both elements map into themselves, so every depth has two cells
        for refined in refine_levels(e1(), 4):
            assert refined.m_n == 2
            assert refined.words() == [(1,) * refined.depth, (2,) * refined.depth]
            assert refined.regions() == list(e1().partition.elements)

    def test_e3_depth_two_words(self):
        refined = refine(e3(), 2)
        assert refined.words() == [(1, 2), (2, 2)]
        assert refined.regions() == list(e3().partition.elements)

    def test_words_order_is_itinerary(self):
        # cell word (1, 2): starts in element 1, lands in element 2
        cell = refine(e3(), 2).cells[0]
        assert cell.word == (1, 2)
        img = e3().pieces[0].apply_box(cell.region)
        assert e3().partition.elements[1].contains_box(img)

    def test_truncating_the_word_grows_the_region(self):
        for _, f in markov_corpus():
            deep = {c.word: c.region for c in refine(f, 3).cells}
            shallow = {c.word: c.region for c in refine(f, 2).cells}
            for word, region in deep.items():
                assert shallow[word[:-1]].contains_box(region)

    def test_e2_never_splits(self):
        for refined in refine_levels(e2(), 10):
            assert refined.m_n == 2
            assert refined.regions() == list(e2().partition.elements)

    def test_depth_must_be_positive(self):
        with pytest.raises(ValueError):
            refine(e1(), 0)

    def test_boundary_facet_values(self):
        refined = refine(e1(), 2)
        assert {f.value for f in refined.boundary_facets()} == {F(0), F(1, 2), F(1)}


class TestStabilisation:
    def test_e1_passes_at_depth_one(self):
        check = stabilisation_check(e1(), 1)
        assert check.passed
        assert check.containment == (1, 2)

    def test_e2_failure_witness_names_the_facet(self):
        check = stabilisation_check(e2(), 1)
        assert not check.passed
        assert check.touching_facet is not None
        assert check.touching_facet.value == F(1, 2)
        assert check.failing_cell is not None

    def test_detect_markov_on_corpus(self):
        for name, f in markov_corpus():
            report = detect_markov(f, 10)
            assert report.is_markov, name
            assert report.stabilisation_time == 1, name

    def test_detect_markov_e2_exhausts_budget(self):
        report = detect_markov(e2(), 50)
        assert not report.is_markov
        assert report.stabilisation_time is None
        assert report.n_max == 50
        assert report.touching_facet.value == F(1, 2)

    def test_containment_maps_cells_to_cells(self):
        f = e3()
        report = detect_markov(f, 10)
        refined = refine(f, report.stabilisation_time)
        for i, j in enumerate(report.containment, start=1):
            cell = refined.cells[i - 1]
            img = f.word_map(cell.word).apply_box(cell.region)
            target = refined.cells[j - 1].region
            assert target.contains_box(img)
            assert not any(img.closure().intersects(fc.closed_rect())
                           for fc in target.facets())


class TestSymbolicModel:
    def test_e1_two_fixed_cells(self):
        model = symbolic_model(e1(), 1)
        assert model.next_map == (1, 2)
        assert set(model.cycles) == {(1,), (2,)}
        assert model.wandering == frozenset()

    def test_e3_wandering_cell(self):
        model = symbolic_model(e3(), 1)
        assert model.next_map == (2, 2)
        assert model.cycles == ((2,),)
        assert model.wandering == frozenset({1})
        assert model.nonwandering == frozenset({2})

    def test_e4_period_two_cycle(self):
        model = symbolic_model(e4(), 1)
        assert model.next_map == (2, 1)
        assert len(model.cycles) == 1
        assert set(model.cycles[0]) == {1, 2}

    def test_successor_is_one_based(self):
        model = symbolic_model(e3(), 1)
        assert model.successor(1) == 2
        assert model.successor(2) == 2


class TestAttractor:
    def test_e1(self):
        report = attractor(e1())
        points = {p for orb in report.orbits for p in orb.points}
        assert points == E1_ATTRACTOR
        assert {orb.period for orb in report.orbits} == {1}
        assert report.min_distance_to_delta == E1_MIN_DELTA_DIST

    def test_e3_single_fixed_point(self):
        report = attractor(e3())
        assert {p for orb in report.orbits for p in orb.points} == E3_ATTRACTOR

    def test_e4_period_two(self):
        report = attractor(e4())
        assert len(report.orbits) == 1
        orb = report.orbits[0]
        assert orb.period == 2
        assert set(orb.points) == E4_ORBIT
        # consecutive points map to each other
        f = e4()
        assert f.evaluate(orb.points[0]) == orb.points[1]
        assert f.evaluate(orb.points[1]) == orb.points[0]

    def test_single_piece(self):
        report = attractor(single_piece())
        assert report.orbits[0].points == (SINGLE_FIXED,)

    def test_markov_2d(self):
        report = attractor(markov_2d())
        points = {p for orb in report.orbits for p in orb.points}
        assert points == M2D_ATTRACTOR
        assert report.min_distance_to_delta == M2D_MIN_DELTA_DIST

    def test_orbit_points_are_exactly_periodic(self):
        for name, f in markov_corpus():
            for orb in attractor(f).orbits:
                x = orb.points[0]
                for _ in range(orb.period):
                    x = f.evaluate(x)
                assert x == orb.points[0], name

    def test_non_markov_map_raises(self):
        with pytest.raises(NotMarkovError):
            attractor(e2())

    def test_boundary_rule_does_not_change_attractor(self):
        lo = attractor(e1())
        hi = attractor(e1().with_pieces(e1().pieces))
        hi2 = attractor(
            type(e1())(e1().partition, e1().pieces, "max_index"))
        assert lo.orbits == hi.orbits == hi2.orbits


class TestSharing:
    def test_interval_maps_share_at_most_two(self):
        for name, f in markov_corpus():
            if f.dim != 1:
                continue
            shared = max_cells_sharing_point(refine(f, 1))
            assert shared == (2 if f.m > 1 else 1), name

    def test_2d_elements_meet_along_facet(self):
        assert max_cells_sharing_point(refine(markov_2d(), 1)) == 2

    def test_four_quadrants_share_the_center(self):
        from pwc import DiagonalAffineMap, Partition, PiecewiseContraction
        dom = Box(("0", "0"), ("1", "1"))
        quads = tuple(Box((x, y), (x + F(1, 2), y + F(1, 2)))
                      for x in (F(0), F(1, 2)) for y in (F(0), F(1, 2)))
        contract = DiagonalAffineMap(("1/4", "1/4"), ("3/8", "3/8"))
        f = PiecewiseContraction(Partition(dom, quads), (contract,) * 4)
        assert max_cells_sharing_point(refine(f, 1)) == 4


def test_maximality_warnings_flag_identical_neighbours():
    assert partition_maximality_warnings(e2())
    assert partition_maximality_warnings(e1()) == []
