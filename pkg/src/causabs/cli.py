"""Command-line front end.

Exit codes: 0 success or pass, 1 validation/verification failure, 2 input
error, 3 search finished without an abstraction.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .abstraction import ScmPair, verify
from .cca import CcaState, step
from .data import DataMatrix, SchemaError
from .formats import (
    ParseError,
    abstraction_from_json,
    abstraction_to_json,
    dump_json,
    graph_from_json,
    load_json,
    scm_from_json,
    space_from_config,
)
from .poset import check_poset_for
from .scm import StructureError, validate
from .search import CandidateSpace, CapacityError, SearchLog, find_abstraction

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_EXHAUSTED = 0, 1, 2, 3


class InputError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_scm(path: str):
    try:
        return scm_from_json(load_json(path))
    except ParseError as exc:
        msg = str(exc)
        raise InputError(msg if msg.startswith(str(path)) else f"{path}: {msg}") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _load_pair(low_path: str, high_path: str) -> ScmPair:
    pair = ScmPair(*_load_scm(low_path), *_load_scm(high_path))
    problems = pair.problems()
    if problems:
        raise InputError("models are not well-formed: " + "; ".join(problems[:5]))
    return pair


def _space(args) -> CandidateSpace:
    space = CandidateSpace()
    if args.config:
        try:
            space = space_from_config(load_json(args.config))
        except ParseError as exc:
            raise InputError(f"{args.config}: {exc}") from None
    try:
        if args.mode:
            space = replace(space, mode=args.mode)
        if args.budget is not None:
            space = replace(space, budget=args.budget)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return space


def cmd_validate(args) -> int:
    scm, poset = _load_scm(args.scm)
    violations = [
        {"kind": v.kind, "location": v.location, "detail": v.detail} for v in validate(scm)
    ]
    if not any(v["kind"] in ("cycle", "unknown-parent", "missing-equation") for v in violations):
        violations += [
            {"kind": "poset", "location": "interventions", "detail": p}
            for p in check_poset_for(scm, poset)
        ]
    if args.format == "text":
        lines = [f"{v['kind']} at {v['location']}: {v['detail']}" for v in violations]
        text = "\n".join(lines or ["valid"]) + "\n"
    else:
        text = dump_json({"valid": not violations, "violations": violations})
    _emit(text, args.out)
    return EXIT_OK if not violations else EXIT_FAIL


def cmd_verify(args) -> int:
    pair = _load_pair(args.low, args.high)
    try:
        ab = abstraction_from_json(load_json(args.abstraction))
    except ParseError as exc:
        raise InputError(f"{args.abstraction}: {exc}") from None
    try:
        report = verify(pair, ab)
    except StructureError as exc:
        raise InputError(f"{args.abstraction}: {exc}") from None
    text = report.to_text() + "\n" if args.format == "text" else dump_json(report.to_json())
    _emit(text, args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_search(args) -> int:
    pair = _load_pair(args.low, args.high)
    space = _space(args)
    log = SearchLog()
    try:
        found = find_abstraction(pair, space, workers=args.workers, log=log)
    except CapacityError as exc:
        raise InputError(str(exc)) from None
    doc = {"mode": space.mode, "budget": space.budget, **log.to_json()}
    if found is not None:
        if args.out:
            Path(args.out).write_text(dump_json(abstraction_to_json(found)), encoding="utf-8")
            doc["abstraction"] = args.out
        else:
            doc["abstraction"] = abstraction_to_json(found)
    sys.stdout.write(dump_json(doc))
    return EXIT_OK if found is not None else EXIT_EXHAUSTED


def _read_csv(path: str) -> DataMatrix:
    try:
        return DataMatrix.from_csv(Path(path).read_text(encoding="utf-8"))
    except SchemaError as exc:
        raise InputError(f"{path}: {exc}") from None


def cmd_cca_run(args) -> int:
    data = _read_csv(args.data)
    stream = _read_csv(args.stream)
    if stream.columns != data.columns:
        raise InputError(f"stream columns {list(stream.columns)} differ from data columns {list(data.columns)}")
    try:
        parents, target, cause = graph_from_json(load_json(args.graph))
    except ParseError as exc:
        raise InputError(f"{args.graph}: {exc}") from None
    space = _space(args)
    try:
        state = CcaState.initial(data, parents, target, cause, space)
    except (SchemaError, StructureError) as exc:
        raise InputError(str(exc)) from None
    lines = []
    for row in stream.rows:
        state = step(state, row)
        lines.append(json.dumps(state.log[-1].to_json()))
    _emit("".join(line + "\n" for line in lines), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="causabs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, search=False):
        p.add_argument("--out", help="write the main output here instead of stdout")
        p.add_argument("--format", choices=("json", "text"), default="json")
        if search:
            p.add_argument("--config", help="JSON file with a 'search' block")
            p.add_argument("--mode", choices=("partition", "table"))
            p.add_argument("--budget", type=int)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("scm")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("verify", help="check an abstraction between two models")
    p.add_argument("low")
    p.add_argument("high")
    p.add_argument("abstraction")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("search", help="find the first verifying abstraction")
    p.add_argument("low")
    p.add_argument("high")
    p.add_argument("--workers", type=int, default=1)
    common(p, search=True)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("cca-run", help="stream rows through the revision loop")
    p.add_argument("data")
    p.add_argument("graph")
    p.add_argument("stream")
    common(p, search=True)
    p.set_defaults(func=cmd_cca_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
