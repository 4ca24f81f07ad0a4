"""Command-line front end: reproducible experiments with JSON reports.

Every report embeds the full run configuration; identical argv (including
--seed) produces byte-identical output.  Exit codes: 0 success, 1 for
negative outcomes where the command defines failure (invalid UPB,
inequivalent pair, inconsistent certificate), 2 numerical errors, 3 usage
errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import qutrit
from .filtering import EquivalentPairError, GapSearchConfig, certify_gap
from .graphs import enumerate_colorings, enumerate_valid_party_graphs
from .product_search import SearchConfig, Subspace, find_product_vectors
from .serialize import (
    SCHEMA_VERSION,
    dumps_report,
    matrix_to_lists,
    upb_from_document,
    upb_to_document,
    vector_to_lists,
)
from .upb import CanonicalAngles, build_canonical, canonicalize, equivalent, state_of, validate

DEFAULT_SEED = SearchConfig().seed

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_NUMERICAL = 2
EXIT_USAGE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def load_upb_spec(spec: str):
    """A UPB from ``canonical:tA,tB,tC``, a bundled name, or a JSON file path."""
    if spec.startswith("canonical:"):
        parts = spec[len("canonical:"):].split(",")
        if len(parts) != 3:
            raise UsageError(f"canonical shorthand needs three angles, got {spec!r}")
        try:
            angles = CanonicalAngles(*(float(p) for p in parts))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        return build_canonical(angles)
    if spec in qutrit.BUNDLED:
        return qutrit.bundled_upb(spec)
    try:
        with open(spec, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read UPB file {spec!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{spec!r} is not valid JSON: {exc}") from exc
    return upb_from_document(doc)


def _parse_partition(text: str | None, n_parties: int):
    if text is None:
        return None
    groups = []
    for chunk in text.split("|"):
        if not chunk:
            raise UsageError(f"empty group in partition {text!r}")
        try:
            groups.append(tuple(int(p) for p in chunk.split(",")))
        except ValueError as exc:
            raise UsageError(f"bad partition {text!r}: {exc}") from exc
    return groups


def _search_config(args) -> SearchConfig:
    try:
        return SearchConfig(
            grid_resolution=args.grid,
            residual_tol=args.tol,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _hit_document(hit) -> dict:
    return {
        "partition": [list(g) for g in hit.partition],
        "factors": [vector_to_lists(f) for f in hit.factors],
        "residual": hit.residual,
    }


def _witness_document(w) -> dict:
    return {
        "permutation": list(w.permutation),
        "unitaries": [matrix_to_lists(u) for u in w.unitaries],
        "max_error": w.max_error,
    }


def _graph_document(g) -> dict:
    return {"n": g.n, "edges": sorted([list(e) for e in g.edges])}


def build_parser() -> _Parser:
    parser = _Parser(prog="upbkit", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p):
        p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
        p.add_argument("--format", choices=("json", "text"), default="json")

    def add_search_flags(p):
        p.add_argument("--grid", type=int, default=SearchConfig().grid_resolution,
                       help="start-grid resolution per angular parameter")
        p.add_argument("--tol", type=float, default=SearchConfig().residual_tol,
                       help="acceptance residual for product-vector hits")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser("build", help="canonical UPB from an angle triple")
    p.add_argument("--angles", required=True, help="tA,tB,tC in radians")
    add_common(p)

    p = sub.add_parser("validate", help="orthonormality / unextendibility report")
    p.add_argument("--upb", required=True)
    add_search_flags(p)
    add_common(p)

    p = sub.add_parser("state", help="emit the bound entangled state of a UPB")
    p.add_argument("--upb", required=True)
    add_common(p)

    p = sub.add_parser("equiv", help="decide equivalence of two UPBs")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    add_common(p)

    p = sub.add_parser("graphs", help="exhaustive five-member coloring scan")
    p.add_argument("--min-edges", type=int, default=4)
    add_common(p)

    p = sub.add_parser("search-pv", help="product vectors inside a UPB's span or complement")
    p.add_argument("--upb", required=True)
    p.add_argument("--space", choices=("span", "complement"), default="span")
    p.add_argument("--partition", default=None, help="party groups, e.g. 0|1,2")
    add_search_flags(p)
    add_common(p)

    p = sub.add_parser("certify", help="non-convertibility gap certificate")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--restarts", type=int, default=GapSearchConfig().restarts)
    p.add_argument("--budget", type=int, default=GapSearchConfig().budget)
    p.add_argument("--slack", type=float, default=GapSearchConfig().slack)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    add_common(p)

    p = sub.add_parser("qutrit-extras", help="extra product vectors in a two-qutrit span")
    p.add_argument("--upb", required=True, help="tiles, pyramid, or a UPB file")
    add_search_flags(p)
    p.set_defaults(grid=qutrit.QUTRIT_SEARCH.grid_resolution)
    add_common(p)

    return parser


def _run_build(args):
    spec = args.angles if args.angles.startswith("canonical:") else "canonical:" + args.angles
    upb = load_upb_spec(spec)
    return EXIT_OK, upb_to_document(upb)


def _run_validate(args):
    upb = load_upb_spec(args.upb)
    report = validate(upb, config=_search_config(args))
    doc = {
        "dims": list(report.dims),
        "n_members": report.n_members,
        "orthonormality_error": report.orthonormality_error,
        "productness_error": report.productness_error,
        "member_count_ok": report.member_count_ok,
        "unextendible": report.unextendible,
        "extension": _hit_document(report.extension) if report.extension else None,
        "party_graphs": [_graph_document(g) for g in report.party_graphs],
        "passed": report.passed,
    }
    return (EXIT_OK if report.passed else EXIT_NEGATIVE), doc


def _run_state(args):
    upb = load_upb_spec(args.upb)
    rho = state_of(upb)
    return EXIT_OK, {"dims": list(rho.dims), "matrix": matrix_to_lists(rho.matrix)}


def _run_equiv(args):
    a = load_upb_spec(args.a)
    b = load_upb_spec(args.b)
    witness = equivalent(a, b)
    doc = {
        "equivalent": witness is not None,
        "angles_a": list(canonicalize(a)[0].as_tuple()),
        "angles_b": list(canonicalize(b)[0].as_tuple()),
        "witness": _witness_document(witness) if witness else None,
    }
    return (EXIT_OK if witness is not None else EXIT_NEGATIVE), doc


def _run_graphs(args):
    scan = enumerate_colorings()
    classes = enumerate_valid_party_graphs(5, args.min_edges)
    # survivors always have a four-edge heavy party, so classify against the
    # four-edge classes regardless of the listing threshold
    heavy_classes = classes if args.min_edges <= 4 else enumerate_valid_party_graphs(5, 4)
    class_keys = [g.canonical_form() for g in heavy_classes]
    per_class = [0] * len(heavy_classes)
    form_cache: dict[frozenset, tuple] = {}
    survivors = []
    for coloring in scan.survivors:
        heavy = coloring.heavy_parties()
        heavy_graph = coloring.party_graph(heavy[0])
        key = frozenset(heavy_graph.edges)
        if key not in form_cache:
            form_cache[key] = heavy_graph.canonical_form()
        per_class[class_keys.index(form_cache[key])] += 1
        survivors.append({"labels": "".join(coloring.labels), "heavy_parties": list(heavy)})
    doc = {
        "scanned": scan.scanned,
        "survivor_count": len(scan.survivors),
        "classes": [_graph_document(g) for g in classes],
        "heavy_classes": [_graph_document(g) for g in heavy_classes],
        "survivors_per_class": per_class,
        "survivors": survivors,
    }
    return EXIT_OK, doc


def _run_search_pv(args):
    upb = load_upb_spec(args.upb)
    basis = upb.span_basis if args.space == "span" else upb.complement_basis
    sub = Subspace(upb.dims, basis)
    partition = _parse_partition(args.partition, len(upb.dims))
    hits = find_product_vectors(sub, partition, _search_config(args))
    doc = {
        "space": args.space,
        "dims": list(upb.dims),
        "n_hits": len(hits),
        "hits": [_hit_document(h) for h in hits],
    }
    return EXIT_OK, doc


def _run_certify(args):
    source = load_upb_spec(args.source)
    target = load_upb_spec(args.target)
    try:
        config = GapSearchConfig(
            restarts=args.restarts, budget=args.budget, seed=args.seed, slack=args.slack
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    cert = certify_gap(source, target, config)
    return (EXIT_OK if cert.consistent else EXIT_NEGATIVE), cert.to_document()


def _run_qutrit_extras(args):
    upb = load_upb_spec(args.upb)
    config = SearchConfig(
        grid_resolution=args.grid,
        residual_tol=args.tol,
        max_iterations=qutrit.QUTRIT_SEARCH.max_iterations,
        seed=args.seed,
    )
    sub = Subspace(upb.dims, upb.span_basis)
    all_hits = find_product_vectors(sub, [(0,), (1,)], config)
    extras = [
        h for h in all_hits
        if not any(h.matches(m.factors, config.dedup_tol) for m in upb.members)
    ]
    doc = {
        "dims": list(upb.dims),
        "total_product_vectors": len(all_hits),
        "n_extras": len(extras),
        "extras": [_hit_document(h) for h in extras],
    }
    return EXIT_OK, doc


_RUNNERS = {
    "build": _run_build,
    "validate": _run_validate,
    "state": _run_state,
    "equiv": _run_equiv,
    "graphs": _run_graphs,
    "search-pv": _run_search_pv,
    "certify": _run_certify,
    "qutrit-extras": _run_qutrit_extras,
}


def _config_document(args) -> dict:
    skip = {"out", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, report: dict) -> None:
    if args.format == "json":
        text = dumps_report(report)
    else:
        lines = [f"{k}: {v}" for k, v in sorted(report["result"].items()) if not isinstance(v, (list, dict))]
        text = "\n".join([f"# {report['config']['subcommand']}"] + lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        code, result = _RUNNERS[args.subcommand](args)
        report = {
            "schema": SCHEMA_VERSION,
            "config": _config_document(args),
            "result": result,
            "exit_code": code,
        }
        _emit(args, report)
        return code
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EquivalentPairError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
