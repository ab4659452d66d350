"""Command-line front end.

Exit codes: 0 on success, 1 when a query is not identified or a
verification fails, 2 on input errors.  Output is deterministic for
identical inputs and seed; PATHID_COLOR=1 turns on ANSI colors for the
PASS/FAIL verdicts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from random import Random

from .expr import from_json, render, to_json
from .graphs import (
    Admg,
    CausalGraph,
    GraphError,
    ParseError,
    districts,
    hidden_form,
    induced_subgraph,
    latent_project,
    parse_admg,
    parse_graph,
    render_admg,
    ystar,
)
from .identify import Query, UnsupportedQuery, query_from_json, run_query
from .npsem import random_spec, spec_loads
from .pathsets import enumerate_proper_paths
from .separation import find_mediation_adjustment_sets
from .verify import verify_expression

GOOD_EXIT = 0
FAIL_EXIT = 1
INPUT_EXIT = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = INPUT_EXIT):
        super().__init__(message)
        self.code = code


def _color(text: str, code: str) -> str:
    if os.environ.get("PATHID_COLOR") == "1":
        return f"\x1b[{code}m{text}\x1b[0m"
    return text


def _ok(text: str) -> str:
    return _color(text, "32")


def _bad(text: str) -> str:
    return _color(text, "31")


def load_graph(path: str) -> CausalGraph:
    """Parse a DSL file; ADMG input is wrapped into canonical hidden form."""
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}")
    try:
        if "<->" in text:
            return hidden_form(parse_admg(text))
        return parse_graph(text)
    except (ParseError, GraphError) as exc:
        raise CliError(f"{path}: {exc}")


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON ({exc})")


def _fmt_set(nodes) -> str:
    return "{" + ",".join(sorted(nodes)) + "}"


def _default_roles(g: CausalGraph, roles: str | None) -> tuple[str, str] | None:
    if roles:
        parts = roles.split(",")
        if len(parts) != 2:
            raise CliError("--roles expects TREATMENT,OUTCOME")
        return parts[0], parts[1]
    if {"A", "Y"} <= g.observed:
        return "A", "Y"
    return None


def cmd_inspect(args) -> int:
    g = load_graph(args.graph)
    admg = latent_project(g)
    out = ["latent projection:"]
    out.extend("  " + line for line in render_admg(admg).splitlines())
    out.append(
        "districts: " + " ".join(_fmt_set(d) for d in sorted(districts(admg), key=sorted))
    )
    roles = _default_roles(g, args.roles)
    if roles:
        a, y = roles
        for v in roles:
            if v not in admg.nodes:
                raise CliError(f"role node {v} is not in the graph")
        stars = ystar(admg, a, y)
        sub_districts = districts(induced_subgraph(admg, stars))
        out.append(f"Y* (ancestors of {y} avoiding {a}): " + _fmt_set(stars))
        out.append(
            "G_{Y*} districts: "
            + " ".join(_fmt_set(d) for d in sorted(sub_districts, key=sorted))
        )
        paths = enumerate_proper_paths(admg, a, y)
        out.append(f"proper paths {a} -> {y}:")
        for p in paths.sorted_paths():
            out.append("  " + " -> ".join(p))
        if not paths.paths:
            out.append("  (none)")
    print("\n".join(out))
    return GOOD_EXIT


def _build_query(g: CausalGraph, path: str) -> Query:
    data = _load_json(path)
    try:
        return query_from_json(g, data)
    except (UnsupportedQuery, GraphError, KeyError) as exc:
        raise CliError(f"invalid query: {exc}")


def cmd_identify(args) -> int:
    g = load_graph(args.graph)
    query = _build_query(g, args.query)
    result = run_query(query)
    for line in result.diagnostics:
        print(f"# {line}", file=sys.stderr)
    if not result.identified:
        reason = result.reason
        if reason.kind == "recanting_witness":
            print(_bad("not identified: recanting witness " + ",".join(sorted(reason.nodes))))
        elif reason.kind == "recanting_district":
            print(_bad("not identified: recanting district " + _fmt_set(reason.nodes)))
        elif reason.kind == "criterion_failure":
            print(_bad(f"not identified: criterion {reason.detail} fails"))
        else:
            print(_bad("not identified: unidentifiable fragment " + _fmt_set(reason.nodes)))
        return FAIL_EXIT
    print(render(result.expression, args.format))
    return GOOD_EXIT


def cmd_check_adjustment(args) -> int:
    g = load_graph(args.graph)
    parts = args.roles.split(",") if args.roles else []
    if len(parts) != 3:
        raise CliError("--roles expects TREATMENT,MEDIATOR,OUTCOME")
    a, m, y = parts
    try:
        reports = find_mediation_adjustment_sets(g, a, m, y, args.max_size)
    except GraphError as exc:
        raise CliError(str(exc))
    for rep in reports:
        flags = []
        flags.append("ii.a" if rep.passes_iia else "----")
        flags.append("ii.b" if rep.passes_iib else "----")
        flags.append("adjust" if rep.passes_adjustment_criterion else "------")
        print(f"{_fmt_set(rep.candidate):<24} {' '.join(flags)}")
    winners = [rep for rep in reports if rep.passes_adjustment_criterion]
    print(f"valid adjustment sets: {len(winners)}")
    return GOOD_EXIT


def cmd_verify(args) -> int:
    g = load_graph(args.graph)
    query = _build_query(g, args.query)
    if args.expr:
        expr = from_json(_load_json(args.expr))
    else:
        result = run_query(query)
        if not result.identified:
            print(_bad(f"not identified: {result.reason.kind} "
                       + _fmt_set(result.reason.nodes)))
            return FAIL_EXIT
        expr = result.expression
    if args.npsem:
        specs = [(args.npsem, spec_loads(open(args.npsem, encoding="utf-8").read()))]
    else:
        rng = Random(args.seed)
        specs = [
            (f"seed {args.seed} spec {i}", random_spec(g, rng))
            for i in range(args.n)
        ]
    failures = 0
    for label, spec in specs:
        if spec.graph != g:
            raise CliError("NPSEM graph does not match the query graph")
        outcome = verify_expression(expr, query, spec)
        if outcome.ok:
            print(f"{_ok('PASS')} {label}")
        else:
            failures += 1
            print(f"{_bad('FAIL')} {label}: {outcome.detail}")
    print(f"{len(specs) - failures}/{len(specs)} specs passed")
    return GOOD_EXIT if failures == 0 else FAIL_EXIT


def cmd_render(args) -> int:
    expr = from_json(_load_json(args.expr))
    print(render(expr, args.format))
    return GOOD_EXIT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathid",
        description="identify and verify total and path-specific causal effects",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="projection, districts, Y*, proper paths")
    p.add_argument("graph")
    p.add_argument("--roles", help="TREATMENT,OUTCOME (default A,Y when present)")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("identify", help="run an identification query")
    p.add_argument("graph")
    p.add_argument("--query", required=True)
    p.add_argument("--format", choices=("text", "latex", "json"), default="text")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("check-adjustment", help="score covariate adjustment sets")
    p.add_argument("graph")
    p.add_argument("--roles", required=True, help="TREATMENT,MEDIATOR,OUTCOME")
    p.add_argument("--max-size", type=int, default=6)
    p.set_defaults(func=cmd_check_adjustment)

    p = sub.add_parser("verify", help="check an identified functional against the oracle")
    p.add_argument("graph")
    p.add_argument("--query", required=True)
    p.add_argument("--npsem", help="explicit model file (JSON)")
    p.add_argument("--expr", help="explicit expression file instead of identifying")
    p.add_argument("--n", type=int, default=20, help="number of random models")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("render", help="render an expression file")
    p.add_argument("--expr", required=True)
    p.add_argument("--format", choices=("text", "latex", "json"), default="text")
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ParseError, GraphError, UnsupportedQuery) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_EXIT


if __name__ == "__main__":
    sys.exit(main())
