"""Globally defined function systems attached to a piecewise contraction.

Dropping the partition constraint and letting every piece act on a common
invariant box Y gives an iterated function system whose attractor contains
the attractor of the original map.  Words here follow the composition
convention of the fixed-point machinery: for a word (s1, ..., sq) the
composed map is piece(s1) applied *last*.  Cell itineraries in
:mod:`pwc.refinement` read the other way around (first visited element
first); admissible words of length n correspond to nonempty refinement
cells up to this reversal when the fattening is zero.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence

from .geometry import (
    Box,
    ClosedBox,
    Facet,
    Partition,
    Point,
    RatLike,
    as_point,
    as_rat,
    box_intersect,
    dedupe_facets,
    set_distance,
    sup_dist,
)
from .dynamics import DiagonalAffineMap, PiecewiseContraction

Word = tuple[int, ...]


@dataclass(frozen=True)
class IFS:
    """Finitely many contractions sharing an invariant box Y.

    ``maps`` usually holds :class:`DiagonalAffineMap` pieces; after a bump
    perturbation one entry is a nonlinear map that still exposes ``apply``
    and ``lipschitz_bound``.  ``gamma`` is the base of the word metric used
    in continuity statements and is carried for reporting only.
    """

    maps: tuple
    Y: Box
    gamma: Fraction = Fraction(2)

    def __post_init__(self) -> None:
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "gamma", as_rat(self.gamma))
        if not self.maps:
            raise ValueError("an IFS needs at least one map")
        if self.gamma <= 1:
            raise ValueError("gamma must exceed 1")

    @property
    def m(self) -> int:
        return len(self.maps)

    @property
    def dim(self) -> int:
        return self.Y.dim

    @property
    def lam(self) -> Fraction:
        """Certified contraction bound: max Lipschitz bound of the maps."""
        return max(m.lipschitz_bound for m in self.maps)

    def map_for(self, letter: int):
        if not 1 <= letter <= self.m:
            raise ValueError(f"letter {letter} out of range 1..{self.m}")
        return self.maps[letter - 1]

    def compose_word(self, word: Sequence[int]) -> DiagonalAffineMap:
        """Affine composition for a word, last letter applied first."""
        current = DiagonalAffineMap.identity(self.dim)
        for letter in reversed(tuple(word)):
            piece = self.map_for(letter)
            if not isinstance(piece, DiagonalAffineMap):
                raise TypeError("exact composition requires affine maps only")
            current = piece.compose(current)
        return current


def invariant_box(maps: Sequence[DiagonalAffineMap],
                  domain: Optional[Box] = None) -> Box:
    """Smallest symmetric box [-R, R]^d from the standard radius estimate.

    R = max(K, M / (1 - lam)) with K the largest sup-norm over the closed
    domain (0 when no domain is given), M the largest sup-norm of an offset
    and lam the joint contraction factor.  The returned box is verified to
    absorb every map exactly.
    """
    lam = max(m.contraction_factor for m in maps)
    if lam >= 1:
        raise ValueError("maps must contract")
    dim = maps[0].dim
    big_m = max(max((abs(o) for o in m.offset), default=Fraction(0)) for m in maps)
    big_k = Fraction(0)
    if domain is not None:
        big_k = max(max(abs(a), abs(b)) for a, b in zip(domain.lo, domain.hi))
    radius = max(big_k, big_m / (1 - lam))
    if radius == 0:
        radius = Fraction(1)  # all-zero system; any symmetric box is invariant
    y = Box((-radius,) * dim, (radius,) * dim)
    for i, m in enumerate(maps, start=1):
        image = m.apply_box(y)
        if not all(ya <= ia and ib <= yb for ya, yb, ia, ib
                   in zip(y.lo, y.hi, image.lo, image.hi)):
            raise ValueError(f"map {i} does not keep the candidate box invariant")
    return y


def associated_ifs(f: PiecewiseContraction, gamma: RatLike = Fraction(2)) -> IFS:
    """Forget the partition: the pieces acting on a common invariant box."""
    return IFS(f.pieces, invariant_box(f.pieces, f.domain), as_rat(gamma))


@dataclass(frozen=True)
class ThetaValue:
    """Finite-word evaluation point with its exact truncation error bound."""

    word: Word
    point: Point
    error_bound: Fraction


def theta(ifs: IFS, prefix: Sequence[int]) -> ThetaValue:
    """Evaluate a word prefix at the center of Y.

    Any infinite word starting with this prefix lands within
    lam^n * diam(Y) of the returned point.
    """
    word = tuple(prefix)
    point = ifs.compose_word(word).apply(ifs.Y.center())
    err = ifs.lam ** len(word) * ifs.Y.diameter
    return ThetaValue(word, point, err)


def symbolic_distance(a: Sequence[int], b: Sequence[int],
                      gamma: RatLike = Fraction(2)) -> Fraction:
    """Word metric sum |a_i - b_i| / gamma^i over the common length."""
    g = as_rat(gamma)
    total = Fraction(0)
    for i, (x, y) in enumerate(zip(a, b), start=1):
        total += Fraction(abs(x - y)) / g ** i
    return total


def ifs_cover_cells(ifs: IFS, depth: int) -> list[tuple[Word, Box]]:
    """All depth-n word boxes (word, image of Y), lexicographic by word."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    level: list[tuple[Word, Box]] = [((), ifs.Y)]
    for _ in range(depth):
        level = [((i,) + w, ifs.map_for(i).apply_box(box))
                 for i in range(1, ifs.m + 1)
                 for (w, box) in level]
    level.sort(key=lambda t: t[0])
    return level


def ifs_attractor_cover(ifs: IFS, depth: int) -> list[Box]:
    """Exact cover of the system attractor by all depth-n word boxes."""
    return [box for _, box in ifs_cover_cells(ifs, depth)]


def _point_covered(ifs: IFS, point: Point, depth: int) -> bool:
    # point lies in some depth-n word box iff some preimage chain stays in Y
    if depth == 0:
        return ifs.Y.closure().contains(point)
    for m in ifs.maps:
        pre = m.inverse().apply(point)
        if ifs.Y.closure().contains(pre) and _point_covered(ifs, pre, depth - 1):
            return True
    return False


def check_attractor_inclusion(f: PiecewiseContraction, depth: int,
                              n_max: int = 50) -> tuple[bool, Optional[Point]]:
    """Every attractor point of the map must lie in the depth-n IFS cover.

    Returns (ok, witness); the witness is an uncovered attractor point.
    Membership is decided exactly by walking preimages instead of
    materialising all m^n cover boxes.
    """
    from .refinement import attractor

    ifs = associated_ifs(f)
    for orb in attractor(f, n_max).orbits:
        for p in orb.points:
            if not _point_covered(ifs, p, depth):
                return False, p
    return True, None


def _neighbourhoods(partition: Partition, fattening: Fraction) -> list[Box]:
    out = []
    for e in partition.elements:
        v = box_intersect(e.fatten(fattening), partition.domain)
        if v is None:
            raise ValueError("fattened element misses the domain")
        out.append(v)
    return out


def admissible_words(ifs: IFS, partition: Partition, length: int,
                     fattening: RatLike = Fraction(0)) -> list[tuple[Word, Box]]:
    """Words whose constraint region is nonempty, with those exact regions.

    A word (s1, ..., sn) is admissible when some x in the (fattened)
    element neighbourhood V[sn] has its successive images under piece(sn),
    then piece(s(n-1)), ..., landing in V[s(n-1)], ..., V[s1].  At zero
    fattening the admissible words are exactly the reversed itineraries of
    the nonempty refinement cells.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    eps = as_rat(fattening)
    neigh = _neighbourhoods(partition, eps)
    # entries: word, constraint region D(word), composed map for the word
    level: list[tuple[Word, Box, DiagonalAffineMap]] = [
        ((i,), neigh[i - 1], ifs.compose_word((i,)))
        for i in range(1, ifs.m + 1)]
    for _ in range(length - 1):
        nxt: list[tuple[Word, Box, DiagonalAffineMap]] = []
        for word, region, comp in level:
            pulled_template = comp.inverse()
            for i in range(1, ifs.m + 1):
                constraint = pulled_template.apply_box(neigh[i - 1])
                new_region = box_intersect(region, constraint)
                if new_region is None:
                    continue
                nxt.append(((i,) + word, new_region,
                            ifs.map_for(i).compose(comp)))
        level = nxt
    out = [(w, r) for w, r, _ in level]
    out.sort(key=lambda t: t[0])
    return out


@dataclass(frozen=True)
class BoundaryPreimageSet:
    """Exact pullbacks of the partition boundary along admissible words.

    ``facets`` holds (word, facet) pairs; the empty word tags the original
    boundary facets.  The fattened view is the closed delta-neighbourhood
    of each facet, suitable for avoidance tests.
    """

    depth: int
    delta: Fraction
    epsilon: Fraction
    facets: tuple[tuple[Word, Facet], ...]

    def fattened_boxes(self) -> list[ClosedBox]:
        return [facet.fattened(self.delta) for _, facet in self.facets]

    def distance_to(self, target) -> Fraction:
        return set_distance([facet for _, facet in self.facets], target)


def boundary_preimages(ifs: IFS, partition: Partition, depth: int,
                       delta: RatLike = Fraction(0),
                       epsilon: Optional[RatLike] = None) -> BoundaryPreimageSet:
    """Collect boundary facets and their admissible-word pullbacks.

    For every admissible word whose composed image region crosses a boundary
    facet, the facet is pulled back through the inverse composition and
    restricted to the word's constraint region.  ``epsilon`` is the
    admissibility fattening; by default half the validation margin of the
    underlying pieces on this partition.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    d = as_rat(delta)
    if d < 0:
        raise ValueError("delta must be >= 0")
    if epsilon is None:
        dom_facets = list(partition.domain.facets())
        margin = min(
            set_distance(m.apply_box(e).closure(), dom_facets)
            for m, e in zip(ifs.maps, partition.elements))
        eps = margin / 2
    else:
        eps = as_rat(epsilon)
    delta_facets = dedupe_facets(itertools.chain(
        (f for e in partition.elements for f in e.facets()),
        partition.domain.facets()))
    found: list[tuple[Word, Facet]] = [((), f) for f in delta_facets]
    for n in range(1, depth + 1):
        for word, region in admissible_words(ifs, partition, n, eps):
            comp = ifs.compose_word(word)
            image = comp.apply_box(region)
            inv = comp.inverse()
            for facet in delta_facets:
                pulled = _pullback_facet(inv, facet, image, region)
                if pulled is not None:
                    found.append((word, pulled))
    return BoundaryPreimageSet(depth, d, eps, tuple(found))


def _pullback_facet(inv: DiagonalAffineMap, facet: Facet, image: Box,
                    region: Box) -> Optional[Facet]:
    """Pull one facet back when the open image box crosses it, restricted to
    the constraint region; None when they miss each other."""
    a = facet.axis
    if not image.lo[a] < facet.value < image.hi[a]:
        return None
    cross = image.drop_axis(a)
    ext = facet.extent
    if ext.dim and any(cl >= eh or el >= ch for cl, ch, el, eh
                       in zip(cross.lo, cross.hi, ext.lo, ext.hi)):
        return None
    value = inv.scale[a] * facet.value + inv.offset[a]
    if not region.lo[a] < value < region.hi[a]:
        return None
    if ext.dim:
        reduced = DiagonalAffineMap(inv.scale[:a] + inv.scale[a + 1:],
                                    inv.offset[:a] + inv.offset[a + 1:])
        pulled_ext = box_intersect(reduced.apply_box(ext), region.drop_axis(a))
        if pulled_ext is None:
            return None
    else:
        pulled_ext = ext
    return Facet(a, value, pulled_ext)


def word_fixed_point(ifs: IFS, word: Sequence[int]) -> Point:
    """Exact fixed point of the composed affine word map."""
    return ifs.compose_word(word).fixed_point()


def primitive_root(word: Sequence[int]) -> Word:
    """Shortest word u with word = u^k."""
    w = tuple(word)
    n = len(w)
    for p in range(1, n + 1):
        if n % p == 0 and w == w[:p] * (n // p):
            return w[:p]
    return w


@dataclass(frozen=True)
class Collision:
    word_a: Word
    word_b: Word
    common_root: Optional[Word]

    @property
    def violation(self) -> bool:
        return self.common_root is None


@dataclass(frozen=True)
class FixedPointTable:
    """All word fixed points up to the budget, with exact-collision audit.

    Two words sharing a fixed point are harmless when both are powers of one
    primitive word; any other exact coincidence is flagged as a violation.
    """

    budget: int
    entries: tuple[tuple[Word, Point], ...]
    collisions: tuple[Collision, ...]

    @property
    def violations(self) -> tuple[Collision, ...]:
        return tuple(c for c in self.collisions if c.violation)


def separation_check(ifs: IFS, budget: int) -> FixedPointTable:
    """Fixed points of every word of length 1..budget+1, grouped exactly."""
    if budget < 0:
        raise ValueError("budget must be >= 0")
    entries: list[tuple[Word, Point]] = []
    level: list[tuple[Word, DiagonalAffineMap]] = [((), DiagonalAffineMap.identity(ifs.dim))]
    for _ in range(budget + 1):
        level = [((i,) + w, ifs.map_for(i).compose(comp))
                 for i in range(1, ifs.m + 1) for (w, comp) in level]
        entries.extend((w, comp.fixed_point()) for w, comp in level)
    entries.sort(key=lambda t: (len(t[0]), t[0]))
    by_point: dict[Point, list[Word]] = {}
    for w, p in entries:
        by_point.setdefault(p, []).append(w)
    collisions: list[Collision] = []
    for p, words in by_point.items():
        if len(words) < 2:
            continue
        for wa, wb in itertools.combinations(sorted(words, key=lambda w: (len(w), w)), 2):
            ra, rb = primitive_root(wa), primitive_root(wb)
            collisions.append(Collision(wa, wb, ra if ra == rb else None))
    collisions.sort(key=lambda c: (len(c.word_a), c.word_a, len(c.word_b), c.word_b))
    return FixedPointTable(budget, tuple(entries), tuple(collisions))


def ball_return_fixed_point_check(ifs: IFS, word: Sequence[int],
                                  center: Sequence[RatLike],
                                  radius: RatLike) -> bool:
    """Exact ball-return test for locating word fixed points.

    If the composed word map sends the closed sup-norm ball B(center,
    radius) to a box meeting that ball, the word's fixed point must lie in
    the ball scaled by c = 2/(1 - lam); that consequence is verified
    exactly and a failure (impossible for a correct composition) raises.
    Returns whether the return hypothesis held.
    """
    y = as_point(center)
    r = as_rat(radius)
    if r <= 0:
        raise ValueError("radius must be positive")
    ball = ClosedBox(tuple(c - r for c in y), tuple(c + r for c in y))
    comp = ifs.compose_word(word)
    if not comp.apply_closed(ball).intersects(ball):
        return False
    c_star = 2 / (1 - ifs.lam)
    fixed = comp.fixed_point()
    if sup_dist(fixed, y) > c_star * r:
        raise RuntimeError(
            "ball-return bound violated: fixed point "
            f"{fixed} farther than {c_star * r} from {y}")
    return True


def replace_map(ifs: IFS, map_index: int, new_map) -> IFS:
    """Swap one map (1-based index); used by perturbation builders."""
    if not 1 <= map_index <= ifs.m:
        raise ValueError("map index out of range")
    maps = list(ifs.maps)
    maps[map_index - 1] = new_map
    return replace(ifs, maps=tuple(maps))
