"""JSON documents for models, abstractions, graphs and search configuration.

Readers reject unknown keys and raise :class:`ParseError` carrying the JSON
path of the offending element. Rationals are written as ``"p/q"`` strings.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .abstraction import TauAbstraction, intervention_json
from .poset import InterventionPoset
from .scm import EMPTY, Equation, FiniteScm, Intervention
from .search import CandidateSpace


class ParseError(ValueError):
    pass


def load_json(path: str | Path) -> Any:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def dump_json(doc: Any) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _keys(obj: Any, where: str, required: set[str], optional: set[str] = frozenset()) -> dict:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    unknown = sorted(set(obj) - required - set(optional))
    if unknown:
        raise ParseError(f"{where}: unknown keys {unknown}")
    missing = sorted(required - set(obj))
    if missing:
        raise ParseError(f"{where}: missing keys {missing}")
    return obj


def _list(obj: Any, where: str) -> list:
    if not isinstance(obj, list):
        raise ParseError(f"{where}: expected an array")
    return obj


def _int(obj: Any, where: str) -> int:
    if not isinstance(obj, int) or isinstance(obj, bool):
        raise ParseError(f"{where}: expected an integer")
    return obj


def _ints(obj: Any, where: str) -> tuple[int, ...]:
    return tuple(_int(x, f"{where}[{k}]") for k, x in enumerate(_list(obj, where)))


def _str(obj: Any, where: str) -> str:
    if not isinstance(obj, str):
        raise ParseError(f"{where}: expected a string")
    return obj


def parse_rational(text: Any, where: str) -> Fraction:
    text = _str(text, where)
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"{where}: bad rational {text!r} ({exc})") from None


def format_rational(p: Fraction) -> str:
    p = Fraction(p)
    return f"{p.numerator}/{p.denominator}"


def parse_intervention(obj: Any, where: str) -> Intervention:
    obj = _keys(obj, where, {"targets"})
    pairs = []
    for k, item in enumerate(_list(obj["targets"], f"{where}.targets")):
        at = f"{where}.targets[{k}]"
        item = _list(item, at)
        if len(item) != 2:
            raise ParseError(f"{at}: expected [id, value]")
        pairs.append((_str(item[0], f"{at}[0]"), _int(item[1], f"{at}[1]")))
    try:
        return Intervention(tuple(pairs))
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from None


def _variables(obj: Any, where: str) -> list[tuple[str, tuple[int, ...]]]:
    out = []
    for k, item in enumerate(_list(obj, where)):
        at = f"{where}[{k}]"
        item = _keys(item, at, {"id", "range"})
        out.append((_str(item["id"], f"{at}.id"), _ints(item["range"], f"{at}.range")))
    return out


def scm_from_json(doc: Any) -> tuple[FiniteScm, InterventionPoset]:
    doc = _keys(doc, "$", {"exogenous", "endogenous", "equations", "prior"}, {"interventions"})
    exo = _variables(doc["exogenous"], "$.exogenous")
    endo = _variables(doc["endogenous"], "$.endogenous")
    equations: dict[str, Equation] = {}
    for k, item in enumerate(_list(doc["equations"], "$.equations")):
        at = f"$.equations[{k}]"
        item = _keys(item, at, {"child", "parents", "table"})
        child = _str(item["child"], f"{at}.child")
        if child in equations:
            raise ParseError(f"{at}: second equation for {child!r}")
        parents = tuple(_str(p, f"{at}.parents[{n}]") for n, p in enumerate(_list(item["parents"], f"{at}.parents")))
        table = {}
        for n, entry in enumerate(_list(item["table"], f"{at}.table")):
            e_at = f"{at}.table[{n}]"
            entry = _keys(entry, e_at, {"in", "out"})
            key = _ints(entry["in"], f"{e_at}.in")
            if len(key) != len(parents):
                raise ParseError(f"{e_at}.in: expected {len(parents)} values")
            if key in table:
                raise ParseError(f"{e_at}.in: duplicate row {list(key)}")
            table[key] = _int(entry["out"], f"{e_at}.out")
        equations[child] = Equation(parents, table)
    prior: dict[tuple[int, ...], Fraction] = {}
    for k, entry in enumerate(_list(doc["prior"], "$.prior")):
        at = f"$.prior[{k}]"
        entry = _keys(entry, at, {"u", "p"})
        u = _ints(entry["u"], f"{at}.u")
        if len(u) != len(exo):
            raise ParseError(f"{at}.u: expected {len(exo)} values")
        if u in prior:
            raise ParseError(f"{at}.u: duplicate state {list(u)}")
        prior[u] = parse_rational(entry["p"], f"{at}.p")
    scm = FiniteScm(exo, endo, equations, prior)
    members = [parse_intervention(m, f"$.interventions[{k}]")
               for k, m in enumerate(_list(doc.get("interventions", [{"targets": []}]), "$.interventions"))]
    if len(set(members)) != len(members):
        raise ParseError("$.interventions: duplicate intervention")
    return scm, InterventionPoset.from_members(members)


def scm_to_json(scm: FiniteScm, poset: InterventionPoset | None = None) -> dict:
    poset = poset or InterventionPoset.from_members([EMPTY])
    return {
        "exogenous": [{"id": n, "range": list(r)} for n, r in scm.exogenous],
        "endogenous": [{"id": n, "range": list(r)} for n, r in scm.endogenous],
        "equations": [
            {
                "child": child,
                "parents": list(scm.equations[child].parents),
                "table": [{"in": list(k), "out": v} for k, v in scm.equations[child].table.items()],
            }
            for child in scm.endogenous_ids if child in scm.equations
        ],
        "prior": [{"u": list(u), "p": format_rational(p)} for u, p in scm.prior.items()],
        "interventions": [intervention_json(i) for i in poset.members],
    }


def abstraction_to_json(ab: TauAbstraction) -> dict:
    return {
        "tau": [{"in": list(k), "out": list(v)} for k, v in ab.tau.items()],
        "tauU": [{"in": list(k), "out": list(v)} for k, v in ab.tau_u.items()],
        "omega": [{"in": intervention_json(k), "out": intervention_json(v)} for k, v in ab.omega.items()],
    }


def abstraction_from_json(doc: Any) -> TauAbstraction:
    doc = _keys(doc, "$", {"tau", "tauU", "omega"})

    def table(name):
        out = {}
        for k, entry in enumerate(_list(doc[name], f"$.{name}")):
            at = f"$.{name}[{k}]"
            entry = _keys(entry, at, {"in", "out"})
            key = _ints(entry["in"], f"{at}.in")
            if key in out:
                raise ParseError(f"{at}.in: duplicate entry {list(key)}")
            out[key] = _ints(entry["out"], f"{at}.out")
        return out

    omega = {}
    for k, entry in enumerate(_list(doc["omega"], "$.omega")):
        at = f"$.omega[{k}]"
        entry = _keys(entry, at, {"in", "out"})
        key = parse_intervention(entry["in"], f"{at}.in")
        if key in omega:
            raise ParseError(f"{at}.in: duplicate intervention {key}")
        omega[key] = parse_intervention(entry["out"], f"{at}.out")
    return TauAbstraction(table("tau"), table("tauU"), omega)


def graph_from_json(doc: Any) -> tuple[dict[str, list[str]], str, str | None]:
    doc = _keys(doc, "$", {"parents", "target"}, {"cause"})
    parents_doc = doc["parents"]
    if not isinstance(parents_doc, dict):
        raise ParseError("$.parents: expected an object")
    parents = {
        _str(v, "$.parents"): [_str(p, f"$.parents.{v}[{k}]") for k, p in enumerate(_list(ps, f"$.parents.{v}"))]
        for v, ps in parents_doc.items()
    }
    cause = doc.get("cause")
    return parents, _str(doc["target"], "$.target"), None if cause is None else _str(cause, "$.cause")


def graph_to_json(parents: dict[str, list[str]], target: str, cause: str | None = None) -> dict:
    out: dict[str, Any] = {"parents": {v: list(ps) for v, ps in parents.items()}, "target": target}
    if cause is not None:
        out["cause"] = cause
    return out


def space_from_config(doc: Any) -> CandidateSpace:
    doc = _keys(doc, "$", set(), {"search"})
    block = _keys(doc.get("search", {}), "$.search", set(), {"mode", "budget", "max_high_vars"})
    kwargs: dict[str, Any] = {}
    if "mode" in block:
        kwargs["mode"] = _str(block["mode"], "$.search.mode")
    if "budget" in block:
        kwargs["budget"] = _int(block["budget"], "$.search.budget")
    if block.get("max_high_vars") is not None:
        kwargs["max_high_vars"] = _int(block["max_high_vars"], "$.search.max_high_vars")
    try:
        return CandidateSpace(**kwargs)
    except ValueError as exc:
        raise ParseError(f"$.search: {exc}") from None
