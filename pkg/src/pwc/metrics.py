"""Computable distance estimators and the stabilisation margin.

The true partition-matching distance takes an infimum over all partition
homeomorphisms; this module only ever produces certified upper bounds from
canonical matchers (the identity when the partitions agree as box sets, and
the two monotone endpoint matchers on intervals).  Upper bounds are all the
stability statements consume, and kinds keep the distinction honest.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .geometry import Box, RatLike, as_rat, set_distance, sup_norm
from .dynamics import DiagonalAffineMap, PiecewiseContraction
from .refinement import (
    NotMarkovError,
    detect_markov,
    refine,
    refine_levels,
    symbolic_model,
)


def metric_bound(f: PiecewiseContraction) -> Fraction:
    """A = 2 diam(X): trivial upper bound for the matching distance."""
    return 2 * f.domain.diameter


def _affine_gap(a: DiagonalAffineMap, b: DiagonalAffineMap, box: Box) -> Fraction:
    """sup |a - b| over the closed box; affine, so attained at a corner."""
    return max(sup_norm(tuple(x - y for x, y in zip(a.apply(c), b.apply(c))))
               for c in box.corners())


def _element_key(box: Box) -> tuple:
    return (box.lo, box.hi)


@dataclass(frozen=True)
class RhoEstimate:
    """Upper bound for the matching distance, with the matcher that made it.

    kind is "exact" (the true value, currently only when 0), "upper_bound",
    or "no_match" (no canonical matcher applies; value = 2 diam(X)).
    ``breakpoints`` lists (x, psi(x)) pairs for interval matchers.
    """

    value: Fraction
    kind: str
    witness: str
    breakpoints: tuple[tuple[Fraction, Fraction], ...] = ()


def _identity_rho(f: PiecewiseContraction, g: PiecewiseContraction) -> Fraction:
    g_by_box = {_element_key(e): p for e, p in zip(g.partition.elements, g.pieces)}
    return max(_affine_gap(piece, g_by_box[_element_key(element)], element)
               for element, piece in zip(f.partition.elements, f.pieces))


def _interval_data(f: PiecewiseContraction) -> list[tuple[Fraction, Fraction, DiagonalAffineMap]]:
    order = sorted(zip(f.partition.elements, f.pieces), key=lambda t: t[0].lo[0])
    return [(e.lo[0], e.hi[0], p) for e, p in order]


def _matcher_value(fd, gd, reverse: bool):
    """Value of one monotone endpoint matcher and its breakpoint graph."""
    m = len(fd)
    psi_dev = Fraction(0)
    fg_dev = Fraction(0)
    graph: list[tuple[Fraction, Fraction]] = []
    for k, (a, b, pf) in enumerate(fd):
        c, d, pg = gd[m - 1 - k] if reverse else gd[k]
        if reverse:
            # x -> d - (x - a)(d - c)/(b - a), decreasing on the element
            slope = -(d - c) / (b - a)
            inter = d - a * slope
        else:
            slope = (d - c) / (b - a)
            inter = c - a * slope
        for x in (a, b):
            px = slope * x + inter
            psi_dev = max(psi_dev, abs(px - x))
            fg_dev = max(fg_dev, abs((pf.scale[0] * x + pf.offset[0])
                                     - (pg.scale[0] * px + pg.offset[0])))
            graph.append((x, px))
    return psi_dev + fg_dev, tuple(dict(graph).items())


def rho_upper(f: PiecewiseContraction, g: PiecewiseContraction) -> RhoEstimate:
    """Certified upper bound for the matching distance between two maps.

    Identical partitions (as box sets) use the identity matcher and exact
    corner evaluation.  On intervals with equal element counts the two
    monotone endpoint matchers are tried and the better one reported.
    Everything else falls back to the trivial bound.
    """
    if f.domain != g.domain:
        raise ValueError("maps must share a domain")
    f_boxes = {_element_key(e) for e in f.partition.elements}
    g_boxes = {_element_key(e) for e in g.partition.elements}
    if f_boxes == g_boxes:
        value = _identity_rho(f, g)
        return RhoEstimate(value, "exact" if value == 0 else "upper_bound",
                           "identity")
    if f.dim == 1 and f.m == g.m:
        fd, gd = _interval_data(f), _interval_data(g)
        inc, inc_graph = _matcher_value(fd, gd, reverse=False)
        dec, dec_graph = _matcher_value(fd, gd, reverse=True)
        value, graph, name = min(
            (inc, inc_graph, "order-preserving endpoint matcher"),
            (dec, dec_graph, "order-reversing endpoint matcher"),
            key=lambda t: t[0])
        return RhoEstimate(value, "exact" if value == 0 else "upper_bound",
                           name, graph)
    return RhoEstimate(metric_bound(f), "no_match", "none")


def d2(f: PiecewiseContraction, g: PiecewiseContraction) -> Union[Fraction, float]:
    """Piecewise C^2 distance; infinite when the partitions differ.

    Pieces are matched by their element box.  Per piece the distance is the
    sup of |f - g| over the closed element plus the largest scale
    difference (second derivatives vanish identically).
    """
    if f.domain != g.domain:
        return float("inf")
    g_by_box = {_element_key(e): p for e, p in zip(g.partition.elements, g.pieces)}
    if {_element_key(e) for e in f.partition.elements} != set(g_by_box):
        return float("inf")
    worst = Fraction(0)
    for element, piece in zip(f.partition.elements, f.pieces):
        other = g_by_box[_element_key(element)]
        scale_gap = max(abs(x - y) for x, y in zip(piece.scale, other.scale))
        worst = max(worst, _affine_gap(piece, other, element) + scale_gap)
    return worst


@dataclass(frozen=True)
class D1Estimate:
    """Truncated weighted sum of per-iterate matching bounds plus tail.

    Each summand is an upper bound for the n-th iterate's matching
    distance, so partial + tail_bound bounds the full series.
    """

    sigma: Fraction
    terms: int
    partial: Fraction
    tail_bound: Fraction
    per_term: tuple[Fraction, ...]

    @property
    def total(self) -> Fraction:
        return self.partial + self.tail_bound


def d1_upper(f: PiecewiseContraction, g: PiecewiseContraction,
             n_terms: int, sigma: RatLike = Fraction(1, 2)) -> D1Estimate:
    """Upper bound for the weighted-iterate distance.

    The n-th iterates are compared through their refined partitions: when
    both maps produce the same depth-n region boxes, the identity matcher
    applies and the summand is the exact corner sup of the composed-piece
    difference per region; otherwise the summand is the trivial bound A.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    s = as_rat(sigma)
    if not 0 < s < 1:
        raise ValueError("sigma must lie in (0, 1)")
    if f.domain != g.domain:
        raise ValueError("maps must share a domain")
    a_bound = metric_bound(f)
    per_term: list[Fraction] = []
    partial = Fraction(0)
    for rf, rg in zip(refine_levels(f, n_terms), refine_levels(g, n_terms)):
        f_cells = {_element_key(c.region): c.word for c in rf.cells}
        g_cells = {_element_key(c.region): c.word for c in rg.cells}
        if set(f_cells) == set(g_cells):
            term = max(_affine_gap(f.word_map(f_cells[key]),
                                   g.word_map(g_cells[key]),
                                   Box(*key))
                       for key in f_cells)
        else:
            term = a_bound
        per_term.append(term)
        partial += s ** rf.depth * term
    tail = s ** (n_terms + 1) * a_bound / (1 - s)
    return D1Estimate(s, n_terms, partial, tail, tuple(per_term))


def stability_margin(f: PiecewiseContraction, n_max: int = 50,
                     sigma: RatLike = Fraction(1, 2)) -> Fraction:
    """Perturbation budget under which stabilisation provably survives.

    min{sigma^N A, (sigma^N / 3) eps} with N the stabilisation time and
    eps the least distance from a cell's image closure to the boundary of
    the cell containing it.
    """
    s = as_rat(sigma)
    if not 0 < s < 1:
        raise ValueError("sigma must lie in (0, 1)")
    report = detect_markov(f, n_max)
    if not report.stabilised:
        raise NotMarkovError(f"map does not stabilise within depth {n_max}")
    n = report.stabilisation_time
    assert n is not None and report.containment is not None
    refined = refine(f, n)
    eps: Optional[Fraction] = None
    for cell, target in zip(refined.cells, report.containment):
        image = f.word_map(cell.word).apply_box(cell.region)
        container = refined.cells[target - 1].region
        d = set_distance(image.closure(), list(container.facets()))
        eps = d if eps is None or d < eps else eps
    assert eps is not None
    return min(s ** n * metric_bound(f), s ** n / 3 * eps)


@dataclass(frozen=True)
class StabilityReport:
    """Checkable shadow of topological stability for a pair of maps.

    ``conjugate`` compares the induced cell maps on their nonwandering
    parts: equal cycle-length multisets, plus (on intervals) an actual
    order-preserving or order-reversing cell matching.
    """

    margin: Optional[Fraction]
    same_stabilisation_time: bool
    conjugate: bool
    stabilisation_time_a: Optional[int]
    stabilisation_time_b: Optional[int]
    cycle_lengths_a: Optional[tuple[int, ...]]
    cycle_lengths_b: Optional[tuple[int, ...]]

    @property
    def same_N(self) -> bool:
        return self.same_stabilisation_time


def _ordered_nonwandering(f: PiecewiseContraction, n: int) -> tuple[list[int], dict[int, int]]:
    refined = refine(f, n)
    model = symbolic_model(f, n)
    order = sorted(model.nonwandering,
                   key=lambda i: refined.cells[i - 1].region.lo)
    return order, {i: model.successor(i) for i in model.nonwandering}


def _interval_conjugacy(f: PiecewiseContraction, nf: int,
                        g: PiecewiseContraction, ng: int) -> bool:
    fo, fnext = _ordered_nonwandering(f, nf)
    go, gnext = _ordered_nonwandering(g, ng)
    if len(fo) != len(go):
        return False
    for matched in (go, go[::-1]):
        pair = dict(zip(fo, matched))
        if all(pair[fnext[c]] == gnext[pair[c]] for c in fo):
            return True
    return False


def verify_stability(f: PiecewiseContraction, g: PiecewiseContraction,
                     n_max: int = 50) -> StabilityReport:
    """Compare stabilisation data of two maps; never raises on non-Markov
    inputs (they simply cannot match)."""
    rf = detect_markov(f, n_max)
    rg = detect_markov(g, n_max)
    margin = None
    cycles_f = cycles_g = None
    same_time = bool(rf.stabilised and rg.stabilised
                     and rf.stabilisation_time == rg.stabilisation_time)
    conjugate = False
    if rf.stabilised:
        margin = stability_margin(f, n_max)
        assert rf.stabilisation_time is not None
        cycles_f = tuple(sorted(
            len(c) for c in symbolic_model(f, rf.stabilisation_time).cycles))
    if rg.stabilised:
        assert rg.stabilisation_time is not None
        cycles_g = tuple(sorted(
            len(c) for c in symbolic_model(g, rg.stabilisation_time).cycles))
    if rf.stabilised and rg.stabilised:
        conjugate = cycles_f == cycles_g
        if conjugate and f.dim == 1 and g.dim == 1:
            conjugate = _interval_conjugacy(f, rf.stabilisation_time,
                                            g, rg.stabilisation_time)
    return StabilityReport(margin, same_time, conjugate,
                           rf.stabilisation_time, rg.stabilisation_time,
                           cycles_f, cycles_g)
