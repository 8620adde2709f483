"""Exact axis-aligned geometry over the rationals.

Every coordinate in this module is a :class:`fractions.Fraction` and every
predicate is a decision procedure: there is no floating point and no
tolerance anywhere.  Distances use the sup norm, under which the distance
between two closed axis-aligned rectangles is itself rational and is computed
componentwise, so all derived quantities stay exact.

Conventions used throughout the package:

* a :class:`Box` always denotes an *open* box (``lo_i < hi_i`` on every
  axis); use :meth:`Box.closure` for the closed counterpart,
* a :class:`ClosedBox` may be degenerate (``lo_i == hi_i``) and is the
  common currency for distance computations (points, facets and closures
  all convert to it),
* a :class:`Facet` is a codimension-one axis-aligned piece, kept as a
  distinct type rather than a degenerate box,
* element and facet indices reported to callers are 1-based.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Optional, Sequence, Union

Rat = Fraction
Point = tuple[Fraction, ...]
RatLike = Union[Fraction, int, str]


def parse_rat(text: str) -> Fraction:
    """Parse ``"p/q"`` (or a bare integer string) into a Fraction.

    Zero denominators and anything that is not an integer ratio are
    rejected; decimal notation is deliberately not accepted so that inputs
    are unambiguous.
    """
    s = text.strip()
    if "/" in s:
        num, _, den = s.partition("/")
        try:
            n, d = int(num), int(den)
        except ValueError as exc:
            raise ValueError(f"malformed rational {text!r}") from exc
        if d == 0:
            raise ValueError(f"zero denominator in rational {text!r}")
        return Fraction(n, d)
    try:
        return Fraction(int(s))
    except ValueError as exc:
        raise ValueError(f"malformed rational {text!r}") from exc


def format_rat(value: Fraction) -> str:
    """Canonical rendering: lowest terms, bare integers without the /1."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def as_rat(value: RatLike) -> Fraction:
    """Coerce an int, ``"p/q"`` string, or Fraction to an exact rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rat(value)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def as_point(coords: Sequence[RatLike]) -> Point:
    return tuple(as_rat(c) for c in coords)


def sup_norm(v: Sequence[Fraction]) -> Fraction:
    return max((abs(x) for x in v), default=Fraction(0))


def sup_dist(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    if len(a) != len(b):
        raise ValueError("dimension mismatch")
    return max((abs(x - y) for x, y in zip(a, b)), default=Fraction(0))


@dataclass(frozen=True)
class Box:
    """Nonempty open axis-aligned box: ``lo_i < hi_i`` for every axis.

    Degenerate sides are rejected at construction.  Zero-dimensional boxes
    (no axes at all) are permitted: they stand for the single point of R^0
    and occur as extents of interval endpoints in dimension one.
    """

    lo: Point
    hi: Point

    def __post_init__(self) -> None:
        lo = as_point(self.lo)
        hi = as_point(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ValueError("lo/hi dimension mismatch")
        for a, b in zip(lo, hi):
            if not a < b:
                raise ValueError(f"degenerate or empty box side [{a}, {b}]")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def diameter(self) -> Fraction:
        """Sup-norm diameter: the longest side length."""
        return max((b - a for a, b in zip(self.lo, self.hi)), default=Fraction(0))

    def center(self) -> Point:
        return tuple((a + b) / 2 for a, b in zip(self.lo, self.hi))

    def corners(self) -> Iterator[Point]:
        """All 2^d corner points of the closure."""
        for picks in itertools.product(*zip(self.lo, self.hi)):
            yield tuple(picks)

    def contains(self, point: Sequence[Fraction]) -> bool:
        """Open membership."""
        if len(point) != self.dim:
            raise ValueError("dimension mismatch")
        return all(a < x < b for a, x, b in zip(self.lo, point, self.hi))

    def closed_contains(self, point: Sequence[Fraction]) -> bool:
        if len(point) != self.dim:
            raise ValueError("dimension mismatch")
        return all(a <= x <= b for a, x, b in zip(self.lo, point, self.hi))

    def contains_box(self, other: "Box") -> bool:
        """Open containment ``other ⊆ self`` (equivalent to componentwise bounds)."""
        return all(sa <= oa and ob <= sb
                   for sa, sb, oa, ob in zip(self.lo, self.hi, other.lo, other.hi))

    def translate(self, delta: Sequence[Fraction]) -> "Box":
        if len(delta) != self.dim:
            raise ValueError("dimension mismatch")
        return Box(tuple(a + d for a, d in zip(self.lo, delta)),
                   tuple(b + d for b, d in zip(self.hi, delta)))

    def fatten(self, eps: RatLike) -> "Box":
        """Open eps-neighbourhood in sup norm (eps >= 0)."""
        e = as_rat(eps)
        if e < 0:
            raise ValueError("negative fattening")
        if e == 0:
            return self
        return Box(tuple(a - e for a in self.lo), tuple(b + e for b in self.hi))

    def closure(self) -> "ClosedBox":
        return ClosedBox(self.lo, self.hi)

    def drop_axis(self, axis: int) -> "Box":
        """Cross-section box with the given axis removed."""
        return Box(self.lo[:axis] + self.lo[axis + 1:],
                   self.hi[:axis] + self.hi[axis + 1:])

    def facets(self) -> tuple["Facet", ...]:
        """The 2d boundary facets of the box."""
        out = []
        for k in range(self.dim):
            extent = self.drop_axis(k)
            out.append(Facet(k, self.lo[k], extent))
            out.append(Facet(k, self.hi[k], extent))
        return tuple(out)

    def __repr__(self) -> str:  # compact: Box([0, 1/2] x [1/4, 1])
        sides = " x ".join(f"[{a}, {b}]" for a, b in zip(self.lo, self.hi))
        return f"Box({sides or 'R^0'})"


@dataclass(frozen=True)
class ClosedBox:
    """Closed axis-aligned rectangle; degenerate sides are allowed.

    This is the common representation for closures, facets and points when
    computing sup-norm distances.
    """

    lo: Point
    hi: Point

    def __post_init__(self) -> None:
        lo = as_point(self.lo)
        hi = as_point(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ValueError("lo/hi dimension mismatch")
        for a, b in zip(lo, hi):
            if a > b:
                raise ValueError(f"empty closed box side [{a}, {b}]")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def diameter(self) -> Fraction:
        return max((b - a for a, b in zip(self.lo, self.hi)), default=Fraction(0))

    def contains(self, point: Sequence[Fraction]) -> bool:
        if len(point) != self.dim:
            raise ValueError("dimension mismatch")
        return all(a <= x <= b for a, x, b in zip(self.lo, point, self.hi))

    def contains_rect(self, other: "ClosedBox") -> bool:
        return all(sa <= oa and ob <= sb
                   for sa, sb, oa, ob in zip(self.lo, self.hi, other.lo, other.hi))

    def intersects(self, other: "ClosedBox") -> bool:
        """Closed intersection test (touching counts)."""
        return self.distance(other) == 0

    def distance(self, other: "ClosedBox") -> Fraction:
        """Exact sup-norm distance between the two closed rectangles."""
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        gap = Fraction(0)
        for sa, sb, oa, ob in zip(self.lo, self.hi, other.lo, other.hi):
            g = max(Fraction(0), sa - ob, oa - sb)
            if g > gap:
                gap = g
        return gap

    def fatten(self, eps: RatLike) -> "ClosedBox":
        e = as_rat(eps)
        if e < 0:
            raise ValueError("negative fattening")
        return ClosedBox(tuple(a - e for a in self.lo), tuple(b + e for b in self.hi))

    def __repr__(self) -> str:
        sides = " x ".join(f"[{a}, {b}]" for a, b in zip(self.lo, self.hi))
        return f"ClosedBox({sides or 'R^0'})"


@dataclass(frozen=True)
class Facet:
    """Codimension-one piece ``{x : x[axis] = value, rest in closure(extent)}``."""

    axis: int
    value: Fraction
    extent: Box

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", as_rat(self.value))
        if not 0 <= self.axis <= self.extent.dim:
            raise ValueError("facet axis out of range")

    @property
    def ambient_dim(self) -> int:
        return self.extent.dim + 1

    def closed_rect(self) -> ClosedBox:
        lo = self.extent.lo[:self.axis] + (self.value,) + self.extent.lo[self.axis:]
        hi = self.extent.hi[:self.axis] + (self.value,) + self.extent.hi[self.axis:]
        return ClosedBox(lo, hi)

    def fattened(self, delta: RatLike) -> ClosedBox:
        """Closed delta-neighbourhood of the facet in sup norm."""
        return self.closed_rect().fatten(delta)

    def __repr__(self) -> str:
        return f"Facet(x{self.axis} = {self.value}, extent={self.extent!r})"


def box_intersect(a: Box, b: Box) -> Optional[Box]:
    """Intersection of two open boxes; ``None`` when it is empty."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    lo = tuple(max(x, y) for x, y in zip(a.lo, b.lo))
    hi = tuple(min(x, y) for x, y in zip(a.hi, b.hi))
    if any(p >= q for p, q in zip(lo, hi)):
        return None
    return Box(lo, hi)


def closure_strictly_inside(inner: Box, outer: Box) -> bool:
    """True iff the closure of ``inner`` lies in the open box ``outer``.

    Componentwise this is ``outer.lo_i < inner.lo_i`` and
    ``inner.hi_i < outer.hi_i`` on every axis; boundary touching fails.
    """
    if inner.dim != outer.dim:
        raise ValueError("dimension mismatch")
    return all(oa < ia and ib < ob
               for oa, ob, ia, ib in zip(outer.lo, outer.hi, inner.lo, inner.hi))


SetLike = Union[Box, ClosedBox, Facet, tuple, list]


def _closed_rects(obj: SetLike) -> list[ClosedBox]:
    """Normalise a set-like argument to a list of closed rectangles.

    Tuples of rationals are read as points; lists may mix boxes, facets
    and points.
    """
    if isinstance(obj, ClosedBox):
        return [obj]
    if isinstance(obj, Box):
        return [obj.closure()]
    if isinstance(obj, Facet):
        return [obj.closed_rect()]
    if isinstance(obj, tuple):
        p = as_point(obj)
        return [ClosedBox(p, p)]
    if isinstance(obj, list):
        rects: list[ClosedBox] = []
        for item in obj:
            rects.extend(_closed_rects(item))
        if not rects:
            raise ValueError("empty set has no distance")
        return rects
    raise TypeError(f"cannot interpret {obj!r} as a closed set")


def set_distance(a: SetLike, b: SetLike) -> Fraction:
    """Exact sup-norm distance between two finite unions of closed rectangles.

    Accepts boxes (read as closures), facets, points (tuples of rationals)
    and lists of those.  The result is zero iff the closed sets intersect.
    """
    ra = _closed_rects(a)
    rb = _closed_rects(b)
    return min(x.distance(y) for x in ra for y in rb)


def _facet_key(f: Facet):
    return (f.axis, f.value, f.extent.lo, f.extent.hi)


def dedupe_facets(facets: Iterable[Facet]) -> tuple[Facet, ...]:
    seen = {}
    for f in facets:
        seen.setdefault(_facet_key(f), f)
    return tuple(seen.values())


@dataclass(frozen=True)
class Partition:
    """Finite family of disjoint open boxes whose closures tile the domain.

    The invariants are *not* enforced at construction so that
    :func:`validate_partition` can report violations; all dynamical
    operations assume a validated partition.
    """

    domain: Box
    elements: tuple[Box, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", tuple(self.elements))
        if not self.elements:
            raise ValueError("partition needs at least one element")
        for e in self.elements:
            if e.dim != self.domain.dim:
                raise ValueError("element/domain dimension mismatch")

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def m(self) -> int:
        return len(self.elements)

    @cached_property
    def boundary_facets(self) -> tuple[Facet, ...]:
        """Union of the element boundaries, as deduplicated facets."""
        return dedupe_facets(f for e in self.elements for f in e.facets())

    @cached_property
    def delta_facets(self) -> tuple[Facet, ...]:
        """Element boundaries together with the domain boundary."""
        return dedupe_facets(itertools.chain(self.boundary_facets,
                                             self.domain.facets()))


@dataclass(frozen=True)
class PartitionViolation:
    """One defect found by :func:`validate_partition`.

    ``kind`` is ``"overlap"`` (indices name the pair, witness_box their
    common open region), ``"uncovered"`` (witness_point is an interior point
    in no element) or ``"outside_domain"`` (indices name the element).
    """

    kind: str
    indices: tuple[int, ...] = ()
    witness_box: Optional[Box] = None
    witness_point: Optional[Point] = None


def _grid_coords(partition: Partition) -> list[list[Fraction]]:
    dom = partition.domain
    per_axis: list[list[Fraction]] = []
    for k in range(dom.dim):
        vals = {dom.lo[k], dom.hi[k]}
        for e in partition.elements:
            for v in (e.lo[k], e.hi[k]):
                if dom.lo[k] < v < dom.hi[k]:
                    vals.add(v)
        per_axis.append(sorted(vals))
    return per_axis


def validate_partition(partition: Partition) -> list[PartitionViolation]:
    """Decide both partition invariants exactly; empty list means valid.

    The element coordinates induce a grid refining every element, so it is
    enough to test the center of each grid cell: a cell center belongs to an
    element iff the whole cell does, and the closures cover the domain iff
    every cell is claimed by exactly one element.
    """
    violations: list[PartitionViolation] = []
    dom = partition.domain
    for i, e in enumerate(partition.elements, start=1):
        inside = all(da <= ea and eb <= db for da, db, ea, eb
                     in zip(dom.lo, dom.hi, e.lo, e.hi))
        if not inside:
            violations.append(PartitionViolation("outside_domain", (i,), witness_box=e))

    per_axis = _grid_coords(partition)
    overlap_pairs: set[tuple[int, int]] = set()
    for spans in itertools.product(*(zip(vals, vals[1:]) for vals in per_axis)):
        center = tuple((a + b) / 2 for a, b in spans)
        holders = [i for i, e in enumerate(partition.elements, start=1)
                   if e.contains(center)]
        if not holders:
            violations.append(PartitionViolation("uncovered", witness_point=center))
        elif len(holders) > 1:
            for i, j in itertools.combinations(holders, 2):
                if (i, j) not in overlap_pairs:
                    overlap_pairs.add((i, j))
                    witness = box_intersect(partition.elements[i - 1],
                                            partition.elements[j - 1])
                    violations.append(
                        PartitionViolation("overlap", (i, j), witness_box=witness))
    return violations
