"""Lossless JSON wire format for maps and analysis reports.

Rationals travel as "p/q" strings in every direction; floats appear only
in clearly named *_approx fields and are never read back.  Serialization
is canonical (sorted keys, fixed indentation) so equal inputs produce
byte-identical documents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional

from .geometry import (
    Box,
    Facet,
    Partition,
    as_rat,
    format_rat,
)
from .dynamics import (
    BOUNDARY_RULES,
    DiagonalAffineMap,
    MapViolation,
    PiecewiseContraction,
)
from .refinement import (
    AttractorReport,
    MarkovReport,
    RefinedPartition,
    SymbolicModel,
)


class ConfigError(ValueError):
    """Structured parse failure: every problem found, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class MapOptions:
    """Optional analysis knobs carried alongside a map config."""

    sigma: Fraction = Fraction(1, 2)
    epsilon_fattening: Optional[Fraction] = None


def dumps_canonical(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def point_to_json(point) -> list[str]:
    return [format_rat(x) for x in point]


def point_approx(point) -> list[float]:
    return [float(x) for x in point]


def box_to_json(box) -> dict:
    return {"lo": point_to_json(box.lo), "hi": point_to_json(box.hi)}


def facet_to_json(facet: Facet) -> dict:
    return {"axis": facet.axis, "value": format_rat(facet.value),
            "extent": box_to_json(facet.extent)}


def piece_to_json(piece: DiagonalAffineMap) -> dict:
    return {"scale": point_to_json(piece.scale),
            "offset": point_to_json(piece.offset)}


def map_to_json(f: PiecewiseContraction) -> dict:
    return {
        "domain": box_to_json(f.domain),
        "elements": [box_to_json(e) for e in f.partition.elements],
        "pieces": [piece_to_json(p) for p in f.pieces],
        "boundary_rule": f.boundary_rule,
    }


def _parse_point(obj, where: str, errors: list[str]):
    if not isinstance(obj, list) or not obj:
        errors.append(f"{where}: expected a nonempty list of rationals")
        return None
    out = []
    for k, item in enumerate(obj):
        try:
            out.append(as_rat(item))
        except (ValueError, TypeError) as exc:
            errors.append(f"{where}[{k}]: {exc}")
    return tuple(out) if len(out) == len(obj) else None


def _parse_box(obj, where: str, errors: list[str]) -> Optional[Box]:
    if not isinstance(obj, dict):
        errors.append(f"{where}: expected an object with lo/hi")
        return None
    lo = _parse_point(obj.get("lo"), f"{where}.lo", errors)
    hi = _parse_point(obj.get("hi"), f"{where}.hi", errors)
    if lo is None or hi is None:
        return None
    try:
        return Box(lo, hi)
    except ValueError as exc:
        errors.append(f"{where}: {exc}")
        return None


def _parse_piece(obj, where: str, errors: list[str]) -> Optional[DiagonalAffineMap]:
    if not isinstance(obj, dict):
        errors.append(f"{where}: expected an object with scale/offset")
        return None
    scale = _parse_point(obj.get("scale"), f"{where}.scale", errors)
    offset = _parse_point(obj.get("offset"), f"{where}.offset", errors)
    if scale is None or offset is None:
        return None
    try:
        return DiagonalAffineMap(scale, offset)
    except ValueError as exc:
        errors.append(f"{where}: {exc}")
        return None


def map_from_json(data) -> tuple[PiecewiseContraction, MapOptions]:
    """Parse a map config, reporting every structural problem at once.

    Semantic validation (partition coverage, contraction, containment) is
    separate; see PiecewiseContraction.validate and validate_partition.
    """
    errors: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["top level: expected an object"])
    domain = _parse_box(data.get("domain"), "domain", errors)
    raw_elements = data.get("elements")
    elements = []
    if not isinstance(raw_elements, list) or not raw_elements:
        errors.append("elements: expected a nonempty list of boxes")
    else:
        for k, obj in enumerate(raw_elements):
            box = _parse_box(obj, f"elements[{k}]", errors)
            if box is not None:
                elements.append(box)
    raw_pieces = data.get("pieces")
    pieces = []
    if not isinstance(raw_pieces, list) or not raw_pieces:
        errors.append("pieces: expected a nonempty list of {scale, offset}")
    else:
        for k, obj in enumerate(raw_pieces):
            piece = _parse_piece(obj, f"pieces[{k}]", errors)
            if piece is not None:
                pieces.append(piece)
    rule = data.get("boundary_rule", "min_index")
    if rule not in BOUNDARY_RULES:
        errors.append(f"boundary_rule: unknown rule {rule!r}")
    options = _parse_options(data.get("options"), errors)
    if not errors and isinstance(raw_elements, list) and isinstance(raw_pieces, list):
        if len(pieces) != len(elements):
            errors.append(
                f"pieces: {len(pieces)} pieces for {len(elements)} elements")
    if errors:
        raise ConfigError(errors)
    assert domain is not None
    try:
        f = PiecewiseContraction(Partition(domain, tuple(elements)),
                                 tuple(pieces), rule)
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc
    return f, options


def _parse_options(obj, errors: list[str]) -> MapOptions:
    if obj is None:
        return MapOptions()
    if not isinstance(obj, dict):
        errors.append("options: expected an object")
        return MapOptions()
    sigma = Fraction(1, 2)
    eps = None
    if "sigma" in obj:
        try:
            sigma = as_rat(obj["sigma"])
            if not 0 < sigma < 1:
                errors.append("options.sigma: must lie strictly between 0 and 1")
        except (ValueError, TypeError) as exc:
            errors.append(f"options.sigma: {exc}")
    if "epsilon_fattening" in obj:
        try:
            eps = as_rat(obj["epsilon_fattening"])
            if eps < 0:
                errors.append("options.epsilon_fattening: must be >= 0")
        except (ValueError, TypeError) as exc:
            errors.append(f"options.epsilon_fattening: {exc}")
    return MapOptions(sigma, eps)


def load_map(path: str) -> tuple[PiecewiseContraction, MapOptions]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON: {exc}"]) from exc
    return map_from_json(data)


def map_violations_to_json(violations: list[MapViolation]) -> list[dict]:
    out = []
    for v in violations:
        entry: dict[str, Any] = {"kind": v.kind, "piece": v.piece}
        if v.witness is not None:
            entry["witness"] = box_to_json(v.witness)
        out.append(entry)
    return out


def partition_violations_to_json(violations) -> list[dict]:
    out = []
    for v in violations:
        entry: dict[str, Any] = {"kind": v.kind, "elements": list(v.elements)}
        if v.witness_box is not None:
            entry["witness_box"] = box_to_json(v.witness_box)
        if v.witness_point is not None:
            entry["witness_point"] = point_to_json(v.witness_point)
        out.append(entry)
    return out


def markov_report_to_json(report: MarkovReport) -> dict:
    out: dict[str, Any] = {
        "stabilised": report.stabilised,
        "stabilisation_time": report.stabilisation_time,
        "n_max": report.n_max,
    }
    if report.containment is not None:
        out["containment"] = list(report.containment)
    if report.failing_cell is not None:
        out["failing_cell"] = {"word": list(report.failing_cell.word),
                               "region": box_to_json(report.failing_cell.region)}
    if report.touching_facet is not None:
        out["touching_facet"] = facet_to_json(report.touching_facet)
    return out


def model_to_json(model: SymbolicModel) -> dict:
    return {
        "cell_count": model.cell_count,
        "next_map": list(model.next_map),
        "cycles": [list(c) for c in model.cycles],
        "nonwandering": sorted(model.nonwandering),
        "wandering": sorted(model.wandering),
    }


def attractor_to_json(report: AttractorReport) -> dict:
    return {
        "orbits": [{
            "period": orb.period,
            "cycle": list(orb.cycle),
            "points": [point_to_json(p) for p in orb.points],
            "points_approx": [point_approx(p) for p in orb.points],
        } for orb in report.orbits],
        "min_distance_to_boundary": format_rat(report.min_distance_to_delta),
        "min_distance_to_boundary_approx": float(report.min_distance_to_delta),
    }


def cells_to_json(refined: RefinedPartition) -> dict:
    return {
        "depth": refined.depth,
        "cell_count": refined.m_n,
        "cells": [{"word": list(c.word), "region": box_to_json(c.region)}
                  for c in refined.cells],
    }
