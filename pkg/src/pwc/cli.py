"""Command-line front end.

Every command reads JSON map configs (exact "p/q" rationals), writes a
canonical JSON (or CSV) report embedding a run manifest, and uses stable
exit codes: 0 success, 1 input error, 2 validation failure, 3 analysis
budget exhausted (only with --strict).  Reports are reproducible byte for
byte given the same inputs, seed, and SOURCE_DATE_EPOCH.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import io
import os
import shlex
import sys
import time
from typing import Optional, Sequence

from .geometry import as_rat, format_rat, validate_partition
from .dynamics import PiecewiseContraction, ValidationError
from .refinement import (
    NotMarkovError,
    attractor,
    detect_markov,
    refine,
    refine_levels,
    symbolic_model,
)
from .ifs import (
    associated_ifs,
    boundary_preimages,
    ifs_cover_cells,
    separation_check,
)
from .metrics import d1_upper, d2, rho_upper, stability_margin, verify_stability
from .perturb import (
    TOOL_VERSION,
    genericity_sweep,
    markovify_search,
    strong_contraction_exponent,
)
from .serialize import (
    ConfigError,
    MapOptions,
    attractor_to_json,
    box_to_json,
    cells_to_json,
    dumps_canonical,
    facet_to_json,
    load_map,
    map_violations_to_json,
    markov_report_to_json,
    model_to_json,
    partition_violations_to_json,
    point_to_json,
)

__version__ = TOOL_VERSION


def _created_at() -> str:
    """UTC timestamp; honors SOURCE_DATE_EPOCH for reproducible reports."""
    raw = os.environ.get("SOURCE_DATE_EPOCH")
    stamp = int(raw) if raw else int(time.time())
    return datetime.datetime.fromtimestamp(
        stamp, tz=datetime.timezone.utc).isoformat()


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _manifest(argv: Sequence[str], seed: Optional[int],
              inputs: dict[str, str]) -> dict:
    return {
        "tool": "pwc",
        "version": __version__,
        "command": shlex.join(["pwc", *argv]),
        "seed": seed,
        "created_at": _created_at(),
        "input_sha256": {name: _sha256(path) for name, path in inputs.items()},
    }


def _emit(doc: dict, out: Optional[str]) -> None:
    text = dumps_canonical(doc)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _threads() -> Optional[int]:
    raw = os.environ.get("PWC_THREADS")
    if raw is None:
        return None
    count = int(raw)
    return count if count > 1 else None


def _diagnose(f: PiecewiseContraction) -> tuple[list, list]:
    return validate_partition(f.partition), f.validate()


def _load_checked(path: str, argv, seed=None, extra_inputs=None):
    """Load, validate, and prepare the common report skeleton."""
    f, options = load_map(path)
    inputs = {"map": path}
    inputs.update(extra_inputs or {})
    manifest = _manifest(argv, seed, inputs)
    part_v, map_v = _diagnose(f)
    if part_v or map_v:
        doc = {
            "manifest": manifest,
            "valid": False,
            "partition_violations": partition_violations_to_json(part_v),
            "map_violations": map_violations_to_json(map_v),
        }
        raise _Invalid(doc)
    return f, options, manifest


class _Invalid(Exception):
    def __init__(self, doc: dict):
        self.doc = doc
        super().__init__("validation failed")


def cmd_validate(args, argv) -> int:
    f, _ = load_map(args.map)
    manifest = _manifest(argv, None, {"map": args.map})
    part_v, map_v = _diagnose(f)
    if part_v or map_v:
        _emit({
            "manifest": manifest,
            "valid": False,
            "partition_violations": partition_violations_to_json(part_v),
            "map_violations": map_violations_to_json(map_v),
        }, args.out)
        return 2
    _emit({
        "manifest": manifest,
        "valid": True,
        "validation_margin": format_rat(f.validation_margin()),
    }, args.out)
    return 0


def cmd_markov(args, argv) -> int:
    f, _, manifest = _load_checked(args.map, argv)
    report = detect_markov(f, args.nmax)
    _emit({"manifest": manifest, "markov": markov_report_to_json(report)},
          args.out)
    return 3 if args.strict and not report.stabilised else 0


def cmd_attractor(args, argv) -> int:
    f, _, manifest = _load_checked(args.map, argv)
    report = detect_markov(f, args.nmax)
    doc: dict = {"manifest": manifest, "markov": markov_report_to_json(report)}
    if report.stabilised:
        doc["attractor"] = attractor_to_json(attractor(f, args.nmax))
        _emit(doc, args.out)
        return 0
    _emit(doc, args.out)
    return 3 if args.strict else 0


def cmd_analyze(args, argv) -> int:
    f, options, manifest = _load_checked(args.map, argv)
    report = detect_markov(f, args.nmax)
    cell_counts = {r.depth: r.m_n for r in refine_levels(f, args.pmax)}
    system = associated_ifs(f)
    doc: dict = {
        "manifest": manifest,
        "markov": markov_report_to_json(report),
        "cell_counts": {str(p): n for p, n in cell_counts.items()},
        "strong_contraction_exponent":
            strong_contraction_exponent(f, args.pmax),
        "contraction_factor": format_rat(f.contraction_factor),
        "validation_margin": format_rat(f.validation_margin()),
        "invariant_box": box_to_json(system.Y),
    }
    if args.cover_depth > 0:
        doc["ifs_cover"] = {
            "depth": args.cover_depth,
            "boxes": [box_to_json(b)
                      for _, b in ifs_cover_cells(system, args.cover_depth)],
        }
    if report.stabilised:
        assert report.stabilisation_time is not None
        model = symbolic_model(f, report.stabilisation_time)
        doc["symbolic_model"] = model_to_json(model)
        doc["attractor"] = attractor_to_json(attractor(f, args.nmax))
        margin = stability_margin(f, args.nmax, options.sigma)
        doc["stability_margin"] = format_rat(margin)
        doc["stability_margin_approx"] = float(margin)
    _emit(doc, args.out)
    return 3 if args.strict and not report.stabilised else 0


def cmd_refine(args, argv) -> int:
    f, _, manifest = _load_checked(args.map, argv)
    doc = {"manifest": manifest, "refined": cells_to_json(refine(f, args.depth))}
    _emit(doc, args.out)
    return 0


def cmd_ifs_cover(args, argv) -> int:
    f, _, manifest = _load_checked(args.map, argv)
    system = associated_ifs(f)
    cells = ifs_cover_cells(system, args.depth)
    _emit({
        "manifest": manifest,
        "Y": box_to_json(system.Y),
        "contraction_factor": format_rat(system.lam),
        "depth": args.depth,
        "boxes": [{"word": list(w), "box": box_to_json(b)} for w, b in cells],
    }, args.out)
    return 0


def cmd_fixed_points(args, argv) -> int:
    f, _, manifest = _load_checked(args.map, argv)
    if args.maxlen < 1:
        raise ConfigError(["--maxlen must be >= 1"])
    system = associated_ifs(f)
    table = separation_check(system, args.maxlen - 1)
    doc: dict = {
        "manifest": manifest,
        "max_word_length": args.maxlen,
        "entries": [{
            "word": list(word),
            "point": point_to_json(point),
            "point_approx": [float(x) for x in point],
        } for word, point in table.entries],
    }
    if args.check_separation:
        doc["collisions"] = [{
            "word_a": list(c.word_a),
            "word_b": list(c.word_b),
            "common_root": list(c.common_root) if c.common_root else None,
            "violation": c.violation,
        } for c in table.collisions]
        doc["violations"] = len(table.violations)
    _emit(doc, args.out)
    return 0


def cmd_boundary(args, argv) -> int:
    f, options, manifest = _load_checked(args.map, argv)
    system = associated_ifs(f)
    eps = None
    if args.eps is not None:
        eps = as_rat(args.eps)
    elif options.epsilon_fattening is not None:
        eps = options.epsilon_fattening
    bps = boundary_preimages(system, f.partition, args.depth,
                             as_rat(args.delta), eps)
    _emit({
        "manifest": manifest,
        "depth": bps.depth,
        "delta": format_rat(bps.delta),
        "epsilon": format_rat(bps.epsilon),
        "facets": [{"word": list(w), **facet_to_json(facet)}
                   for w, facet in bps.facets],
    }, args.out)
    return 0


def _sweep_doc(manifest: dict, report) -> dict:
    return {
        "manifest": manifest,
        "trials": report.trials,
        "markov_count": report.markov_count,
        "fraction": format_rat(report.fraction),
        "fraction_approx": float(report.fraction),
        "epsilon": format_rat(report.epsilon),
        "n_max": report.n_max,
        "seed": report.rng_seed,
        "grid_denominator": report.grid_denominator,
        "per_trial": [{
            "trial": t.index,
            "delta": point_to_json(t.delta),
            "stabilised": t.stabilised,
            "N": t.report.stabilisation_time,
        } for t in report.per_trial],
    }


def _sweep_csv(manifest: dict, report) -> str:
    buf = io.StringIO()
    for key in ("tool", "version", "command", "seed", "created_at"):
        buf.write(f"# {key}: {manifest[key]}\n")
    for name, digest in sorted(manifest["input_sha256"].items()):
        buf.write(f"# input_sha256[{name}]: {digest}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["trial", "delta", "outcome", "N"])
    for t in report.per_trial:
        writer.writerow([
            t.index,
            ";".join(format_rat(x) for x in t.delta),
            "markov" if t.stabilised else "not_stabilised",
            t.report.stabilisation_time if t.stabilised else "",
        ])
    return buf.getvalue()


def _write_text(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def cmd_markovify(args, argv) -> int:
    f, _, manifest = _load_checked(args.map, argv, seed=args.seed)
    result = markovify_search(f, as_rat(args.eps), args.nmax,
                              args.trials, args.seed)
    doc = {
        "manifest": manifest,
        "found": result.found,
        "delta": point_to_json(result.delta) if result.delta is not None else None,
        "markov": markov_report_to_json(result.report) if result.report else None,
        "sweep": _sweep_doc(manifest, result.sweep),
    }
    _emit(doc, args.out)
    return 3 if args.strict and not result.found else 0


def cmd_genericity(args, argv) -> int:
    f, _, manifest = _load_checked(args.map, argv, seed=args.seed)
    report = genericity_sweep(f, as_rat(args.eps), args.nmax,
                              args.samples, args.seed, _threads())
    if args.out and args.out.endswith(".csv"):
        _write_text(_sweep_csv(manifest, report), args.out)
    else:
        _emit(_sweep_doc(manifest, report), args.out)
    return 0


def _load_pair(a: str, b: str, argv) -> tuple[PiecewiseContraction, MapOptions,
                                              PiecewiseContraction, dict]:
    fa, options = load_map(a)
    fb, _ = load_map(b)
    manifest = _manifest(argv, None, {"a": a, "b": b})
    for f in (fa, fb):
        part_v, map_v = _diagnose(f)
        if part_v or map_v:
            raise _Invalid({
                "manifest": manifest,
                "valid": False,
                "partition_violations": partition_violations_to_json(part_v),
                "map_violations": map_violations_to_json(map_v),
            })
    return fa, options, fb, manifest


def cmd_distance(args, argv) -> int:
    fa, options, fb, manifest = _load_pair(args.a, args.b, argv)
    doc: dict = {"manifest": manifest, "metric": args.metric}
    if args.metric == "d2":
        value = d2(fa, fb)
        if value == float("inf"):
            doc.update({"value": None, "infinite": True})
        else:
            doc.update({"value": format_rat(value), "infinite": False,
                        "value_approx": float(value)})
    elif args.metric == "rho":
        est = rho_upper(fa, fb)
        doc.update({
            "value": format_rat(est.value),
            "value_approx": float(est.value),
            "kind": est.kind,
            "witness": est.witness,
            "breakpoints": [[format_rat(x), format_rat(y)]
                            for x, y in est.breakpoints],
        })
    else:
        sigma = as_rat(args.sigma) if args.sigma is not None else options.sigma
        est = d1_upper(fa, fb, args.terms, sigma)
        doc.update({
            "sigma": format_rat(est.sigma),
            "terms": est.terms,
            "partial": format_rat(est.partial),
            "tail_bound": format_rat(est.tail_bound),
            "total": format_rat(est.total),
            "total_approx": float(est.total),
            "per_term": [format_rat(t) for t in est.per_term],
        })
    _emit(doc, args.out)
    return 0


def cmd_stability(args, argv) -> int:
    fa, _, fb, manifest = _load_pair(args.a, args.b, argv)
    report = verify_stability(fa, fb, args.nmax)
    _emit({
        "manifest": manifest,
        "margin": format_rat(report.margin) if report.margin is not None else None,
        "same_N": report.same_stabilisation_time,
        "conjugate": report.conjugate,
        "stabilisation_time_a": report.stabilisation_time_a,
        "stabilisation_time_b": report.stabilisation_time_b,
        "cycle_lengths_a": list(report.cycle_lengths_a or ()) or None,
        "cycle_lengths_b": list(report.cycle_lengths_b or ()) or None,
    }, args.out)
    return 0


def _add_map_arg(sub) -> None:
    sub.add_argument("map", help="JSON map config")


def _add_common(sub) -> None:
    sub.add_argument("--out", help="write the report here instead of stdout")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pwc",
        description="Exact analysis of piecewise affine contractions on boxes.")
    parser.add_argument("--version", action="version", version=f"pwc {__version__}")
    subs = parser.add_subparsers(dest="command", metavar="command")

    p = subs.add_parser("validate", help="check a map config")
    _add_map_arg(p)
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    p = subs.add_parser("analyze", help="full report: stabilisation, model, attractor")
    _add_map_arg(p)
    _add_common(p)
    p.add_argument("--nmax", type=int, default=50)
    p.add_argument("--pmax", type=int, default=8)
    p.add_argument("--cover-depth", type=int, default=3)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = subs.add_parser("markov", help="stabilisation search only")
    _add_map_arg(p)
    _add_common(p)
    p.add_argument("--nmax", type=int, default=50)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_markov)

    p = subs.add_parser("attractor", help="periodic attractor of a stabilised map")
    _add_map_arg(p)
    _add_common(p)
    p.add_argument("--nmax", type=int, default=50)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_attractor)

    p = subs.add_parser("refine", help="refined partition cells at a depth")
    _add_map_arg(p)
    _add_common(p)
    p.add_argument("--depth", type=int, required=True)
    p.set_defaults(func=cmd_refine)

    p = subs.add_parser("ifs-cover", help="attractor cover boxes of the associated system")
    _add_map_arg(p)
    _add_common(p)
    p.add_argument("--depth", type=int, required=True)
    p.set_defaults(func=cmd_ifs_cover)

    p = subs.add_parser("fixed-points", help="exact word fixed points")
    _add_map_arg(p)
    _add_common(p)
    p.add_argument("--maxlen", type=int, default=5)
    p.add_argument("--check-separation", action="store_true")
    p.set_defaults(func=cmd_fixed_points)

    p = subs.add_parser("boundary", help="boundary facets and their word preimages")
    _add_map_arg(p)
    _add_common(p)
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--delta", default="0", help="facet fattening (rational)")
    p.add_argument("--eps", default=None,
                   help="admissibility fattening; default: half the validation margin")
    p.set_defaults(func=cmd_boundary)

    p = subs.add_parser("markovify", help="search translations for a stabilising one")
    _add_map_arg(p)
    _add_common(p)
    p.add_argument("--eps", required=True, help="translation budget (rational)")
    p.add_argument("--nmax", type=int, default=30)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_markovify)

    p = subs.add_parser("genericity", help="Monte Carlo stabilisation fraction")
    _add_map_arg(p)
    _add_common(p)
    p.add_argument("--eps", required=True, help="translation budget (rational)")
    p.add_argument("--nmax", type=int, default=30)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_genericity)

    p = subs.add_parser("distance", help="metric estimators between two maps")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--metric", choices=("d2", "rho", "d1"), default="d2")
    p.add_argument("--terms", type=int, default=30)
    p.add_argument("--sigma", default=None, help="weight for d1 (rational in (0,1))")
    _add_common(p)
    p.set_defaults(func=cmd_distance)

    p = subs.add_parser("stability", help="compare stabilisation data of two maps")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--nmax", type=int, default=50)
    _add_common(p)
    p.set_defaults(func=cmd_stability)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.func(args, list(argv))
    except _Invalid as exc:
        _emit(exc.doc, getattr(args, "out", None))
        return 2
    except ConfigError as exc:
        _emit({"errors": exc.errors}, None)
        return 1
    except ValidationError as exc:
        _emit({"errors": ["validation failed"],
               "map_violations": map_violations_to_json(exc.violations)}, None)
        return 2
    except NotMarkovError as exc:
        _emit({"errors": [str(exc)]}, None)
        return 3
    except (ValueError, OSError) as exc:
        print(f"pwc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
