"""Tau-abstraction triples between a low- and a high-level model, and their
exhaustive verification.

A candidate is a triple of total tables: ``tau`` on endogenous states,
``tau_u`` on exogenous states and ``omega`` on admissible interventions. It is
an abstraction when all three maps are onto, ``omega`` is monotone, the image
of every low interventional distribution equals the matching high one, and
mapping then solving commutes with solving then mapping for every exogenous
state and admissible intervention.

Every failed check carries the first counterexample in canonical enumeration
order, so reports are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping

from .poset import InterventionPoset, check_poset_for
from .scm import (
    Assignment,
    Distribution,
    FiniteScm,
    Intervention,
    StructureError,
    map_distribution,
    pushforward,
    solve,
    validate,
)

CONDITIONS = ("surjectivity", "order", "pushforward", "commutation")


@dataclass(frozen=True)
class ScmPair:
    low: FiniteScm
    low_poset: InterventionPoset
    high: FiniteScm
    high_poset: InterventionPoset

    def problems(self) -> list[str]:
        out = [f"low: {v}" for v in validate(self.low)]
        out += [f"high: {v}" for v in validate(self.high)]
        out += [f"low poset: {p}" for p in check_poset_for(self.low, self.low_poset)]
        out += [f"high poset: {p}" for p in check_poset_for(self.high, self.high_poset)]
        return out


@dataclass(frozen=True)
class TauAbstraction:
    tau: Mapping[Assignment, Assignment]
    tau_u: Mapping[Assignment, Assignment]
    omega: Mapping[Intervention, Intervention]


def identity_abstraction(scm: FiniteScm, poset: InterventionPoset) -> TauAbstraction:
    return TauAbstraction(
        {v: v for v in scm.endogenous_states()},
        {u: u for u in scm.exogenous_states()},
        {i: i for i in poset.members},
    )


def compose(first: TauAbstraction, second: TauAbstraction) -> TauAbstraction:
    """Abstraction L -> H from L -> M followed by M -> H."""
    def chain(f, g, what):
        out = {}
        for k, mid in f.items():
            if mid not in g:
                raise StructureError(f"{what}: intermediate value {mid} is outside the second map's domain")
            out[k] = g[mid]
        return out

    return TauAbstraction(
        chain(first.tau, second.tau, "tau"),
        chain(first.tau_u, second.tau_u, "tau_u"),
        chain(first.omega, second.omega, "omega"),
    )


def check_structure(pair: ScmPair, ab: TauAbstraction) -> None:
    """Raise :class:`StructureError` unless every table is total with in-codomain outputs."""
    _check_table("tau", ab.tau, pair.low.endogenous_states(), set(pair.high.endogenous_states()))
    _check_table("tau_u", ab.tau_u, pair.low.exogenous_states(), set(pair.high.exogenous_states()))
    _check_table("omega", ab.omega, pair.low_poset.members, set(pair.high_poset.members))


def _check_table(name, table, domain, codomain) -> None:
    if len(table) != len(domain) or any(k not in table for k in domain):
        missing = [k for k in domain if k not in table]
        extra = len(table) - (len(domain) - len(missing))
        raise StructureError(
            f"{name} is not defined exactly on its domain "
            f"({len(missing)} missing, {extra} unexpected entries)"
        )
    for k in domain:
        if table[k] not in codomain:
            raise StructureError(f"{name} maps {_show(k)} to {_show(table[k])}, outside the codomain")


def _show(x) -> str:
    return str(x) if isinstance(x, Intervention) else str(list(x))


class PairTables:
    """Lazily cached solves and push-forwards for a pair.

    Shared between candidate checks so a search pays for each model
    evaluation once.
    """

    def __init__(self, pair: ScmPair):
        self.pair = pair
        self.low_u = pair.low.exogenous_states()
        self.high_u = pair.high.exogenous_states()
        self._low_solve: dict[Intervention, list[Assignment]] = {}
        self._high_solve: dict[Intervention, dict[Assignment, Assignment]] = {}
        self._low_push: dict[Intervention, Distribution] = {}
        self._high_push: dict[Intervention, Distribution] = {}

    def low_solutions(self, i: Intervention) -> list[Assignment]:
        got = self._low_solve.get(i)
        if got is None:
            got = [solve(self.pair.low, u, i) for u in self.low_u]
            self._low_solve[i] = got
        return got

    def high_solutions(self, j: Intervention) -> dict[Assignment, Assignment]:
        got = self._high_solve.get(j)
        if got is None:
            got = {u: solve(self.pair.high, u, j) for u in self.high_u}
            self._high_solve[j] = got
        return got

    def low_pushforward(self, i: Intervention) -> Distribution:
        got = self._low_push.get(i)
        if got is None:
            got = pushforward(self.pair.low, i)
            self._low_push[i] = got
        return got

    def high_pushforward(self, j: Intervention) -> Distribution:
        got = self._high_push.get(j)
        if got is None:
            got = pushforward(self.pair.high, j)
            self._high_push[j] = got
        return got


@dataclass(frozen=True)
class MapVerdict:
    name: str
    missed: tuple = ()

    @property
    def passed(self) -> bool:
        return not self.missed


@dataclass(frozen=True)
class SurjectivityVerdict:
    tau: MapVerdict
    tau_u: MapVerdict
    omega: MapVerdict

    @property
    def passed(self) -> bool:
        return self.tau.passed and self.tau_u.passed and self.omega.passed


@dataclass(frozen=True)
class OrderVerdict:
    witness: tuple[Intervention, Intervention] | None = None

    @property
    def passed(self) -> bool:
        return self.witness is None


@dataclass(frozen=True)
class PushforwardVerdict:
    intervention: Intervention | None = None
    low_image: Distribution | None = None
    high: Distribution | None = None

    @property
    def passed(self) -> bool:
        return self.intervention is None


@dataclass(frozen=True)
class CommutationVerdict:
    u: Assignment | None = None
    intervention: Intervention | None = None
    mapped_low: Assignment | None = None
    high: Assignment | None = None

    @property
    def passed(self) -> bool:
        return self.u is None


def check_surjectivity(pair: ScmPair, ab: TauAbstraction) -> SurjectivityVerdict:
    check_structure(pair, ab)

    def unhit(name, table, codomain):
        hit = set(table.values())
        return MapVerdict(name, tuple(c for c in codomain if c not in hit))

    return SurjectivityVerdict(
        unhit("tau", ab.tau, pair.high.endogenous_states()),
        unhit("tau_u", ab.tau_u, pair.high.exogenous_states()),
        unhit("omega", ab.omega, pair.high_poset.members),
    )


def check_order_preserving(pair: ScmPair, ab: TauAbstraction) -> OrderVerdict:
    check_structure(pair, ab)
    low, high = pair.low_poset, pair.high_poset
    for a in low.members:
        for b in low.members:
            if low.leq(a, b) and not high.leq(ab.omega[a], ab.omega[b]):
                return OrderVerdict((a, b))
    return OrderVerdict()


def check_pushforward(pair: ScmPair, ab: TauAbstraction,
                      tables: PairTables | None = None) -> PushforwardVerdict:
    check_structure(pair, ab)
    tables = tables or PairTables(pair)
    for i in pair.low_poset.members:
        image = map_distribution(tables.low_pushforward(i), ab.tau)
        target = tables.high_pushforward(ab.omega[i])
        if image != target:
            return PushforwardVerdict(i, image, target)
    return PushforwardVerdict()


def check_commutation(pair: ScmPair, ab: TauAbstraction,
                      tables: PairTables | None = None) -> CommutationVerdict:
    check_structure(pair, ab)
    tables = tables or PairTables(pair)
    members = pair.low_poset.members
    columns = [(i, tables.low_solutions(i), tables.high_solutions(ab.omega[i])) for i in members]
    for k, u in enumerate(tables.low_u):
        hu = ab.tau_u[u]
        for i, low_col, high_col in columns:
            lhs = ab.tau[low_col[k]]
            rhs = high_col[hu]
            if lhs != rhs:
                return CommutationVerdict(u, i, lhs, rhs)
    return CommutationVerdict()


@dataclass(frozen=True)
class VerificationReport:
    surjectivity: SurjectivityVerdict
    order: OrderVerdict
    pushforward: PushforwardVerdict
    commutation: CommutationVerdict

    @property
    def passed(self) -> bool:
        return not self.failed_conditions()

    def failed_conditions(self) -> list[str]:
        return [name for name in CONDITIONS if not getattr(self, name).passed]

    def to_json(self) -> dict[str, Any]:
        s = self.surjectivity
        out: dict[str, Any] = {"passed": self.passed, "conditions": {}}
        out["conditions"]["surjectivity"] = {
            "passed": s.passed,
            **{m.name: {"passed": m.passed, "missed": [_jsonable(x) for x in m.missed]}
               for m in (s.tau, s.tau_u, s.omega)},
        }
        order: dict[str, Any] = {"passed": self.order.passed}
        if self.order.witness:
            order["witness"] = [intervention_json(w) for w in self.order.witness]
        out["conditions"]["order"] = order
        push: dict[str, Any] = {"passed": self.pushforward.passed}
        if not self.pushforward.passed:
            push["witness"] = {
                "intervention": intervention_json(self.pushforward.intervention),
                "low_image": distribution_json(self.pushforward.low_image),
                "high": distribution_json(self.pushforward.high),
            }
        out["conditions"]["pushforward"] = push
        comm: dict[str, Any] = {"passed": self.commutation.passed}
        if not self.commutation.passed:
            c = self.commutation
            comm["witness"] = {
                "u": list(c.u),
                "intervention": intervention_json(c.intervention),
                "tau_of_low": list(c.mapped_low),
                "high": list(c.high),
            }
        out["conditions"]["commutation"] = comm
        return out

    def to_text(self) -> str:
        lines = []
        for name, payload in self.to_json()["conditions"].items():
            verdict = "pass" if payload["passed"] else "FAIL"
            detail = ""
            if name == "surjectivity" and not payload["passed"]:
                detail = "; ".join(
                    f"{m} misses {len(payload[m]['missed'])}"
                    for m in ("tau", "tau_u", "omega") if not payload[m]["passed"]
                )
            elif "witness" in payload:
                detail = str(payload["witness"])
            lines.append(f"{name:<13} {verdict}" + (f"  {detail}" if detail else ""))
        lines.append(f"{'overall':<13} {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def verify(pair: ScmPair, ab: TauAbstraction, tables: PairTables | None = None) -> VerificationReport:
    """Run all four checks exhaustively; structural errors propagate."""
    check_structure(pair, ab)
    tables = tables or PairTables(pair)
    return VerificationReport(
        check_surjectivity(pair, ab),
        check_order_preserving(pair, ab),
        check_pushforward(pair, ab, tables),
        check_commutation(pair, ab, tables),
    )


def intervention_json(i: Intervention) -> dict[str, Any]:
    return {"targets": [[k, v] for k, v in i.assignments]}


def distribution_json(dist: Mapping[Assignment, Fraction]) -> list[dict[str, Any]]:
    return [{"v": list(v), "p": _rational(p)} for v, p in sorted(dist.items()) if p]


def _rational(p: Fraction) -> str:
    return f"{p.numerator}/{p.denominator}"


def _jsonable(x):
    return intervention_json(x) if isinstance(x, Intervention) else list(x)

