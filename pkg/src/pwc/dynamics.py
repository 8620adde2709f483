"""Piecewise contractions with diagonal affine pieces.

A map is a partition of a compact box together with one contraction per
element.  Pieces act componentwise (``x_k -> scale_k * x_k + offset_k``),
which keeps images and preimages of boxes exactly representable as boxes.
Boundary points of the partition are resolved by a fixed total rule; the
default assigns each boundary point to the adjacent element of smallest
index.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence

from .geometry import (
    Box,
    ClosedBox,
    Partition,
    Point,
    RatLike,
    as_point,
    closure_strictly_inside,
    set_distance,
)


class OutsideDomainError(ValueError):
    """Raised when a point is evaluated outside the closed domain."""


class ValidationError(ValueError):
    """Raised when an operation requires a valid map but validation fails."""

    def __init__(self, violations):
        super().__init__(f"map validation failed: {violations}")
        self.violations = list(violations)


@dataclass(frozen=True)
class DiagonalAffineMap:
    """Componentwise affine map ``x_k -> scale_k * x_k + offset_k``.

    Contractivity (``|scale_k| < 1``) is *not* enforced at construction;
    :meth:`PiecewiseContraction.validate` reports non-contracting pieces.
    """

    scale: Point
    offset: Point

    def __post_init__(self) -> None:
        object.__setattr__(self, "scale", as_point(self.scale))
        object.__setattr__(self, "offset", as_point(self.offset))
        if len(self.scale) != len(self.offset):
            raise ValueError("scale/offset dimension mismatch")

    @staticmethod
    def identity(dim: int) -> "DiagonalAffineMap":
        one = Fraction(1)
        zero = Fraction(0)
        return DiagonalAffineMap((one,) * dim, (zero,) * dim)

    @property
    def dim(self) -> int:
        return len(self.scale)

    @property
    def contraction_factor(self) -> Fraction:
        """Exact Lipschitz constant in sup norm: max |scale_k|."""
        return max((abs(s) for s in self.scale), default=Fraction(0))

    # uniform name shared with bump perturbations
    @property
    def lipschitz_bound(self) -> Fraction:
        return self.contraction_factor

    @property
    def is_injective(self) -> bool:
        return all(s != 0 for s in self.scale)

    def apply(self, point: Sequence[Fraction]) -> Point:
        if len(point) != self.dim:
            raise ValueError("dimension mismatch")
        return tuple(s * x + o for s, x, o in zip(self.scale, point, self.offset))

    def apply_box(self, box: Box) -> Box:
        """Exact image of an open box; requires nonzero scales."""
        lo, hi = [], []
        for s, o, a, b in zip(self.scale, self.offset, box.lo, box.hi):
            if s == 0:
                raise ValueError("degenerate image: zero scale component")
            p, q = s * a + o, s * b + o
            if s < 0:
                p, q = q, p
            lo.append(p)
            hi.append(q)
        return Box(tuple(lo), tuple(hi))

    def apply_closed(self, rect: ClosedBox) -> ClosedBox:
        lo, hi = [], []
        for s, o, a, b in zip(self.scale, self.offset, rect.lo, rect.hi):
            p, q = s * a + o, s * b + o
            if p > q:
                p, q = q, p
            lo.append(p)
            hi.append(q)
        return ClosedBox(tuple(lo), tuple(hi))

    def compose(self, inner: "DiagonalAffineMap") -> "DiagonalAffineMap":
        """``self ∘ inner`` (apply ``inner`` first)."""
        if inner.dim != self.dim:
            raise ValueError("dimension mismatch")
        scale = tuple(s2 * s1 for s2, s1 in zip(self.scale, inner.scale))
        offset = tuple(s2 * o1 + o2 for s2, o1, o2
                       in zip(self.scale, inner.offset, self.offset))
        return DiagonalAffineMap(scale, offset)

    def inverse(self) -> "DiagonalAffineMap":
        if not self.is_injective:
            raise ValueError("map with zero scale component has no inverse")
        scale = tuple(1 / s for s in self.scale)
        offset = tuple(-o / s for s, o in zip(self.scale, self.offset))
        return DiagonalAffineMap(scale, offset)

    def preimage_box(self, box: Box) -> Box:
        return self.inverse().apply_box(box)

    def fixed_point(self) -> Point:
        """Componentwise solve of ``x = scale*x + offset``; needs scale_k != 1."""
        if any(s == 1 for s in self.scale):
            raise ValueError("component with scale 1 has no unique fixed point")
        return tuple(o / (1 - s) for s, o in zip(self.scale, self.offset))

    def translate(self, delta: Sequence[Fraction]) -> "DiagonalAffineMap":
        if len(delta) != self.dim:
            raise ValueError("dimension mismatch")
        return DiagonalAffineMap(
            self.scale, tuple(o + d for o, d in zip(self.offset, as_point(delta))))

    def __repr__(self) -> str:
        comps = ", ".join(f"{s}*x{k}+{o}" for k, (s, o)
                          in enumerate(zip(self.scale, self.offset)))
        return f"DiagonalAffineMap({comps})"


@dataclass(frozen=True)
class MapViolation:
    """Per-piece validation defect (1-based piece index).

    ``kind`` is ``"not_contracting"``, ``"not_injective"`` or
    ``"image_escapes"``; for the latter ``witness`` holds the offending
    image box.
    """

    kind: str
    piece: int
    witness: Optional[Box] = None


@dataclass(frozen=True)
class OrbitSegment:
    start: Point
    points: tuple[Point, ...]        # n+1 points including the start
    piece_itinerary: tuple[int, ...]  # n applied piece indices, 1-based


BOUNDARY_RULES = ("min_index", "max_index")


@dataclass(frozen=True)
class PiecewiseContraction:
    """A partitioned family of diagonal affine contractions on a box.

    ``pieces[i]`` acts on ``partition.elements[i]``; the boundary rule
    extends the map to all of the closed domain by assigning each boundary
    point to one adjacent element.
    """

    partition: Partition
    pieces: tuple[DiagonalAffineMap, ...]
    boundary_rule: str = "min_index"

    def __post_init__(self) -> None:
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if len(self.pieces) != self.partition.m:
            raise ValueError("one piece per partition element required")
        for p in self.pieces:
            if p.dim != self.partition.dim:
                raise ValueError("piece/partition dimension mismatch")
        if self.boundary_rule not in BOUNDARY_RULES:
            raise ValueError(f"unknown boundary rule {self.boundary_rule!r}")

    @property
    def dim(self) -> int:
        return self.partition.dim

    @property
    def m(self) -> int:
        return self.partition.m

    @property
    def domain(self) -> Box:
        return self.partition.domain

    @property
    def contraction_factor(self) -> Fraction:
        return max(p.contraction_factor for p in self.pieces)

    def validate(self) -> list[MapViolation]:
        """Check contractivity, injectivity and strict image containment.

        Every piece must contract (max |scale| < 1), have no zero scale
        component, and send the closure of its element strictly inside the
        open domain.  Returns all violations; empty means valid.
        """
        violations: list[MapViolation] = []
        for i, (piece, element) in enumerate(
                zip(self.pieces, self.partition.elements), start=1):
            if piece.contraction_factor >= 1:
                violations.append(MapViolation("not_contracting", i))
            if not piece.is_injective:
                violations.append(MapViolation("not_injective", i))
                continue  # image box is degenerate; skip the escape check
            image = piece.apply_box(element)
            if not closure_strictly_inside(image, self.domain):
                violations.append(MapViolation("image_escapes", i, witness=image))
        return violations

    def require_valid(self) -> "PiecewiseContraction":
        violations = self.validate()
        if violations:
            raise ValidationError(violations)
        return self

    def validation_margin(self) -> Fraction:
        """Smallest sup-norm distance from a piece-image closure to the
        domain boundary; positive exactly when no image escapes."""
        facets = list(self.domain.facets())
        return min(set_distance(piece.apply_box(element).closure(), facets)
                   for piece, element in zip(self.pieces, self.partition.elements))

    def element_index(self, point: Sequence[Fraction]) -> int:
        """1-based element owning the point, boundary rule applied."""
        p = as_point(point)
        if not self.domain.closed_contains(p):
            raise OutsideDomainError(f"point {p} outside the closed domain")
        adjacent = [i for i, e in enumerate(self.partition.elements, start=1)
                    if e.closed_contains(p)]
        if not adjacent:
            raise OutsideDomainError(
                f"point {p} not covered by any element closure (invalid partition?)")
        return min(adjacent) if self.boundary_rule == "min_index" else max(adjacent)

    def evaluate(self, point: Sequence[Fraction]) -> Point:
        i = self.element_index(point)
        return self.pieces[i - 1].apply(as_point(point))

    def orbit(self, start: Sequence[Fraction], steps: int) -> OrbitSegment:
        """Exact orbit segment with the visited element itinerary."""
        if steps < 0:
            raise ValueError("steps must be >= 0")
        x = as_point(start)
        points = [x]
        itinerary = []
        for _ in range(steps):
            i = self.element_index(x)
            x = self.pieces[i - 1].apply(x)
            itinerary.append(i)
            points.append(x)
        return OrbitSegment(points[0], tuple(points), tuple(itinerary))

    def word_map(self, word: Sequence[int]) -> DiagonalAffineMap:
        """Composition of pieces along an itinerary, first letter applied first."""
        current = DiagonalAffineMap.identity(self.dim)
        for letter in word:
            if not 1 <= letter <= self.m:
                raise ValueError(f"letter {letter} out of range 1..{self.m}")
            current = self.pieces[letter - 1].compose(current)
        return current

    def image_cover(self, depth: int) -> list[Box]:
        """Exact boxes covering the n-th iterate image.

        One box per cell of the depth-n refined partition: the composed
        piece map of the cell word applied to the cell region.  The closed
        union contains the closure of f^n(X) and each box has sup-norm
        diameter at most (contraction factor)^n times the domain diameter.
        """
        from .refinement import refine  # local import to keep modules acyclic

        refined = refine(self, depth)
        return [self.word_map(cell.word).apply_box(cell.region)
                for cell in refined.cells]

    def with_pieces(self, pieces) -> "PiecewiseContraction":
        return replace(self, pieces=tuple(pieces))


def evaluate(f: PiecewiseContraction, point: Sequence[RatLike]) -> Point:
    return f.evaluate(as_point(point))


def orbit(f: PiecewiseContraction, start: Sequence[RatLike], steps: int) -> OrbitSegment:
    return f.orbit(as_point(start), steps)
