"""Refined partitions, stabilisation detection and periodic attractors.

The depth-n refinement splits each element by the preimages of the deeper
levels: a cell is the set of points sharing the same length-n visit
itinerary.  A map *stabilises* at depth N when the closure of every cell's
n-step image lands strictly inside a single cell of the same refinement;
from then on the cell structure is frozen and the dynamics factors through a
finite functional graph whose cycles carry the periodic attractor.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .geometry import (
    Box,
    Facet,
    Point,
    box_intersect,
    closure_strictly_inside,
    dedupe_facets,
    set_distance,
)
from .dynamics import DiagonalAffineMap, PiecewiseContraction

Word = tuple[int, ...]


class NotMarkovError(ValueError):
    """Raised when an operation needs a stabilised map but none was found."""


@dataclass(frozen=True)
class Cell:
    """One cell of a refined partition: itinerary word plus its open region."""

    word: Word
    region: Box


@dataclass(frozen=True)
class RefinedPartition:
    depth: int
    cells: tuple[Cell, ...]

    @property
    def m_n(self) -> int:
        return len(self.cells)

    def words(self) -> list[Word]:
        return [c.word for c in self.cells]

    def regions(self) -> list[Box]:
        return [c.region for c in self.cells]

    def boundary_facets(self) -> tuple[Facet, ...]:
        return dedupe_facets(f for c in self.cells for f in c.region.facets())


def _next_level(f: PiecewiseContraction, cells: Sequence[Cell]) -> list[Cell]:
    # cell(i . w) = P_i ∩ piece_i^{-1}(cell(w)); empty intersections drop out
    out: list[Cell] = []
    for i, (element, piece) in enumerate(
            zip(f.partition.elements, f.pieces), start=1):
        inv = piece.inverse()
        for cell in cells:
            pulled = inv.apply_box(cell.region)
            region = box_intersect(element, pulled)
            if region is not None:
                out.append(Cell((i,) + cell.word, region))
    return out


def refine_levels(f: PiecewiseContraction, depth: int) -> Iterator[RefinedPartition]:
    """Yield the refinements of depth 1..depth, each built from the last."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    cells = [Cell((i,), e) for i, e in enumerate(f.partition.elements, start=1)]
    yield RefinedPartition(1, tuple(cells))
    for n in range(2, depth + 1):
        cells = _next_level(f, cells)
        yield RefinedPartition(n, tuple(cells))


def refine(f: PiecewiseContraction, depth: int) -> RefinedPartition:
    """Depth-n refined partition of a validated map.

    Cells are ordered lexicographically by word; each region is a nonempty
    open box and the cell set tiles the domain like the base partition does.
    """
    last = None
    for last in refine_levels(f, depth):
        pass
    assert last is not None
    return last


@dataclass(frozen=True)
class StabilisationCheck:
    passed: bool
    containment: Optional[tuple[int, ...]]  # 1-based: cell i -> containing cell
    failing_cell: Optional[Cell] = None
    touching_facet: Optional[Facet] = None


def _touching_facet(image: Box, refined: RefinedPartition,
                    domain: Box) -> Optional[Facet]:
    closed = image.closure()
    for facet in dedupe_facets(itertools.chain(refined.boundary_facets(),
                                               domain.facets())):
        if facet.closed_rect().distance(closed) == 0:
            return facet
    return None


def stabilisation_check(f: PiecewiseContraction, depth: int,
                        refined: Optional[RefinedPartition] = None) -> StabilisationCheck:
    """Decide whether every cell's depth-n image closure sits strictly inside
    some cell of the same refinement; on failure, report an offending cell
    and a facet its image closure touches."""
    if refined is None:
        refined = refine(f, depth)
    containment: list[int] = []
    for cell in refined.cells:
        image = f.word_map(cell.word).apply_box(cell.region)
        target = None
        for j, other in enumerate(refined.cells, start=1):
            if closure_strictly_inside(image, other.region):
                target = j
                break
        if target is None:
            facet = _touching_facet(image, refined, f.domain)
            return StabilisationCheck(False, None, cell, facet)
        containment.append(target)
    return StabilisationCheck(True, tuple(containment))


@dataclass(frozen=True)
class MarkovReport:
    """Outcome of the stabilisation search up to a depth budget.

    When stabilised, ``stabilisation_time`` is minimal by construction and
    ``containment`` maps each cell to the cell strictly containing its image
    closure.  Otherwise the failure witness of the deepest level is kept.
    """

    stabilised: bool
    stabilisation_time: Optional[int]
    n_max: int
    containment: Optional[tuple[int, ...]] = None
    failing_cell: Optional[Cell] = None
    touching_facet: Optional[Facet] = None

    @property
    def is_markov(self) -> bool:
        return self.stabilised


def detect_markov(f: PiecewiseContraction, n_max: int = 50) -> MarkovReport:
    """Search for the least stabilisation depth within the budget."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    last_fail: Optional[StabilisationCheck] = None
    for refined in refine_levels(f, n_max):
        check = stabilisation_check(f, refined.depth, refined)
        if check.passed:
            return MarkovReport(True, refined.depth, n_max,
                                containment=check.containment)
        last_fail = check
    assert last_fail is not None
    return MarkovReport(False, None, n_max,
                        failing_cell=last_fail.failing_cell,
                        touching_facet=last_fail.touching_facet)


@dataclass(frozen=True)
class SymbolicModel:
    """Functional graph induced on the stabilised cells.

    ``next_map[i-1]`` is the unique cell containing the image of cell i under
    one application of the map.  Nonwandering cells are exactly those lying
    on a cycle; every other cell leaves itself permanently after at most
    ``cell_count`` steps.
    """

    cell_count: int
    next_map: tuple[int, ...]
    cycles: tuple[tuple[int, ...], ...]
    nonwandering: frozenset[int]
    wandering: frozenset[int]

    def successor(self, index: int) -> int:
        return self.next_map[index - 1]


def _functional_cycles(next_map: Sequence[int]) -> list[list[int]]:
    n = len(next_map)
    color = [0] * (n + 1)  # 0 unseen, 1 on current walk, 2 resolved
    cycles: list[list[int]] = []
    for start in range(1, n + 1):
        if color[start]:
            continue
        path: list[int] = []
        node = start
        while color[node] == 0:
            color[node] = 1
            path.append(node)
            node = next_map[node - 1]
        if color[node] == 1:  # found a new cycle within this walk
            k = path.index(node)
            cycles.append(path[k:])
        for v in path:
            color[v] = 2
    return cycles


def symbolic_model(f: PiecewiseContraction, stabilisation_time: int) -> SymbolicModel:
    """Induced cell map at the given stabilisation depth.

    Requires a depth at which the map actually stabilises; the successor of
    each cell is found by exact containment of the cell's one-step image box
    and exists uniquely for stabilised maps.
    """
    refined = refine(f, stabilisation_time)
    if not stabilisation_check(f, stabilisation_time, refined).passed:
        raise NotMarkovError(
            f"map does not stabilise at depth {stabilisation_time}")
    next_map: list[int] = []
    for cell in refined.cells:
        image = f.pieces[cell.word[0] - 1].apply_box(cell.region)
        target = None
        for j, other in enumerate(refined.cells, start=1):
            if other.region.contains_box(image):
                target = j
                break
        if target is None:
            raise NotMarkovError(
                f"one-step image of cell {cell.word} straddles the refinement")
        next_map.append(target)
    cycles = _functional_cycles(next_map)
    canonical = []
    for cyc in cycles:
        k = cyc.index(min(cyc))
        canonical.append(tuple(cyc[k:] + cyc[:k]))
    canonical.sort(key=lambda c: c[0])
    on_cycle = frozenset(i for cyc in canonical for i in cyc)
    all_idx = frozenset(range(1, len(next_map) + 1))
    return SymbolicModel(len(next_map), tuple(next_map), tuple(canonical),
                         on_cycle, all_idx - on_cycle)


@dataclass(frozen=True)
class PeriodicOrbit:
    period: int
    cycle: tuple[int, ...]      # visited cell indices, 1-based
    points: tuple[Point, ...]   # one point per cycle position, exact


@dataclass(frozen=True)
class AttractorReport:
    orbits: tuple[PeriodicOrbit, ...]
    min_distance_to_delta: Fraction


def attractor(f: PiecewiseContraction, n_max: int = 50) -> AttractorReport:
    """Exact periodic attractor of a stabilised map.

    One orbit per cycle of the induced cell map: the composed piece map
    along the cycle is solved componentwise for its fixed point, the orbit
    is generated forward, and each point is verified to lie in the open
    region of its cell (which also certifies minimal period).  The report
    carries the least sup-norm distance from an orbit point to the union of
    partition boundary and domain boundary.
    """
    report = detect_markov(f, n_max)
    if not report.stabilised:
        raise NotMarkovError(f"map does not stabilise within depth {n_max}")
    depth = report.stabilisation_time
    assert depth is not None
    refined = refine(f, depth)
    model = symbolic_model(f, depth)
    delta = list(f.partition.delta_facets)
    orbits = []
    min_dist: Optional[Fraction] = None
    for cycle in model.cycles:
        loop = f.word_map([refined.cells[i - 1].word[0] for i in cycle])
        x = loop.fixed_point()
        points = [x]
        for idx in cycle[:-1]:
            x = f.pieces[refined.cells[idx - 1].word[0] - 1].apply(x)
            points.append(x)
        for idx, p in zip(cycle, points):
            if not refined.cells[idx - 1].region.contains(p):
                raise RuntimeError(
                    f"orbit point {p} escaped its cell {refined.cells[idx - 1].word}")
        if len(set(points)) != len(points):
            raise RuntimeError("periodic orbit revisits a point early")
        for p in points:
            d = set_distance(p, delta)
            min_dist = d if min_dist is None or d < min_dist else min_dist
        orbits.append(PeriodicOrbit(len(cycle), cycle, tuple(points)))
    assert min_dist is not None
    return AttractorReport(tuple(orbits), min_dist)


def max_cells_sharing_point(refined: RefinedPartition) -> int:
    """Largest number of cell closures meeting at a single point.

    The membership pattern of a point is determined, per axis, by its
    position relative to the cell bounds, so checking every bound value and
    every midpoint between consecutive values is exhaustive.
    """
    if not refined.cells:
        return 0
    dim = refined.cells[0].region.dim
    per_axis: list[list[Fraction]] = []
    for k in range(dim):
        vals = sorted({c.region.lo[k] for c in refined.cells}
                      | {c.region.hi[k] for c in refined.cells})
        cands = list(vals)
        cands.extend((a + b) / 2 for a, b in zip(vals, vals[1:]))
        per_axis.append(cands)
    closures = [c.region.closure() for c in refined.cells]
    best = 0
    for point in itertools.product(*per_axis):
        count = sum(1 for cl in closures if cl.contains(point))
        if count > best:
            best = count
    return best


def partition_maximality_warnings(f: PiecewiseContraction) -> list[str]:
    """Advisory lint: adjacent pieces that agree on a shared facet mean the
    partition has a removable boundary (it is not maximal).  Never an error."""
    warnings = []
    elems = f.partition.elements
    for (i, a), (j, b) in itertools.combinations(enumerate(elems, start=1), 2):
        pa, pb = f.pieces[i - 1], f.pieces[j - 1]
        for axis in range(f.dim):
            shared = None
            if a.hi[axis] == b.lo[axis]:
                shared = a.hi[axis]
            elif b.hi[axis] == a.lo[axis]:
                shared = b.hi[axis]
            if shared is None:
                continue
            if box_intersect(a.drop_axis(axis), b.drop_axis(axis)) is None:
                continue
            off_axis_equal = all(
                pa.scale[k] == pb.scale[k] and pa.offset[k] == pb.offset[k]
                for k in range(f.dim) if k != axis)
            agree_on_facet = (pa.scale[axis] * shared + pa.offset[axis]
                              == pb.scale[axis] * shared + pb.offset[axis])
            if off_axis_equal and agree_on_facet:
                warnings.append(
                    f"pieces {i} and {j} agree on their shared facet "
                    f"x{axis} = {shared}; the partition is not maximal")
    return warnings
