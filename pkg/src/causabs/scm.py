"""Finite-range structural causal models.

A model is a set of exogenous variables with a joint prior, and endogenous
variables each driven by a total lookup table over its parents. Everything is
finite and probabilities are :class:`fractions.Fraction`, so evaluation and
push-forward distributions are exact.

Joint assignments are plain tuples laid out in the model's declared variable
order (exogenous order for ``u``, endogenous order for ``v``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Iterator, Mapping, Sequence

Value = int
Range = tuple[int, ...]
Assignment = tuple[int, ...]
Distribution = dict[Assignment, Fraction]


class DomainError(ValueError):
    """A value lies outside the range of the variable it is assigned to."""


class StructureError(ValueError):
    """Two objects that must share domains or variables do not."""


@dataclass(frozen=True)
class Equation:
    parents: tuple[str, ...]
    table: Mapping[Assignment, Value]

    @classmethod
    def constant(cls, value: Value) -> "Equation":
        return cls((), {(): value})


@dataclass(frozen=True, order=True)
class Intervention:
    """A do-operation: a partial map from endogenous ids to values.

    Stored sorted by variable id so equal maps compare and hash equal. The
    empty intervention is the "no intervention" element.
    """

    assignments: tuple[tuple[str, Value], ...] = ()

    def __post_init__(self) -> None:
        items = tuple(sorted(self.assignments))
        ids = [k for k, _ in items]
        if len(set(ids)) != len(ids):
            raise ValueError(f"intervention assigns a variable twice: {ids}")
        object.__setattr__(self, "assignments", items)

    @classmethod
    def of(cls, mapping: Mapping[str, Value] | None = None, **kwargs: Value) -> "Intervention":
        items = dict(mapping or {})
        items.update(kwargs)
        return cls(tuple(items.items()))

    @property
    def targets(self) -> frozenset[str]:
        return frozenset(k for k, _ in self.assignments)

    def as_dict(self) -> dict[str, Value]:
        return dict(self.assignments)

    def restrict(self, keep: Iterable[str]) -> "Intervention":
        keep = set(keep)
        return Intervention(tuple((k, v) for k, v in self.assignments if k in keep))

    def __bool__(self) -> bool:
        return bool(self.assignments)

    def __str__(self) -> str:
        if not self.assignments:
            return "∅"
        return "do(" + ", ".join(f"{k}={v}" for k, v in self.assignments) + ")"


EMPTY = Intervention()


@dataclass(frozen=True)
class FiniteScm:
    exogenous: tuple[tuple[str, Range], ...]
    endogenous: tuple[tuple[str, Range], ...]
    equations: Mapping[str, Equation]
    prior: Mapping[Assignment, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "exogenous", tuple((name, tuple(rng)) for name, rng in self.exogenous)
        )
        object.__setattr__(
            self, "endogenous", tuple((name, tuple(rng)) for name, rng in self.endogenous)
        )

    @property
    def exogenous_ids(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.exogenous)

    @property
    def endogenous_ids(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.endogenous)

    @cached_property
    def ranges(self) -> dict[str, Range]:
        return dict(self.exogenous + self.endogenous)

    @cached_property
    def order(self) -> tuple[str, ...]:
        """Endogenous ids in an evaluation-safe order (parents first)."""
        return _topological_order(self)

    def exogenous_states(self) -> list[Assignment]:
        return list(itertools.product(*(rng for _, rng in self.exogenous)))

    def endogenous_states(self) -> list[Assignment]:
        return list(itertools.product(*(rng for _, rng in self.endogenous)))

    def support(self) -> list[Assignment]:
        """Exogenous states with positive prior mass, in canonical order."""
        return [u for u in self.exogenous_states() if self.prior.get(u, 0) > 0]


def product_prior(scm_exogenous: Sequence[tuple[str, Range]],
                  marginals: Sequence[Mapping[Value, Fraction]] | None = None) -> dict[Assignment, Fraction]:
    """Joint prior from independent per-variable marginals; uniform when omitted."""
    ranges = [rng for _, rng in scm_exogenous]
    if marginals is None:
        marginals = [{x: Fraction(1, len(rng)) for x in rng} for rng in ranges]
    joint: dict[Assignment, Fraction] = {}
    for u in itertools.product(*ranges):
        p = Fraction(1)
        for x, marg in zip(u, marginals):
            p *= Fraction(marg.get(x, 0))
        if p:
            joint[u] = p
    return joint


def _topological_order(scm: FiniteScm) -> tuple[str, ...]:
    endo = set(scm.endogenous_ids)
    graph = {
        v: [p for p in scm.equations[v].parents if p in endo] if v in scm.equations else []
        for v in scm.endogenous_ids
    }
    try:
        return tuple(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        raise StructureError(f"cycle through {sorted(set(exc.args[1]))}") from None


@dataclass(frozen=True)
class Violation:
    kind: str
    location: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.location}: {self.detail}"


def validate(scm: FiniteScm) -> list[Violation]:
    """Every well-formedness problem of ``scm``; an empty list means valid."""
    out: list[Violation] = []
    seen: set[str] = set()
    for name, rng in scm.exogenous + scm.endogenous:
        if name in seen:
            out.append(Violation("duplicate-id", name, "variable id declared twice"))
        seen.add(name)
        if not rng:
            out.append(Violation("empty-range", name, "range is empty"))
        elif len(set(rng)) != len(rng):
            out.append(Violation("duplicate-value", name, f"range {list(rng)} repeats a value"))

    ranges = dict(scm.exogenous + scm.endogenous)
    endo = scm.endogenous_ids
    for child in scm.equations:
        if child not in endo:
            out.append(Violation("stray-equation", child, "equation for a non-endogenous id"))
    for child in endo:
        eq = scm.equations.get(child)
        if eq is None:
            out.append(Violation("missing-equation", child, "endogenous variable has no equation"))
            continue
        unknown = [p for p in eq.parents if p not in ranges]
        if unknown:
            out.append(Violation("unknown-parent", child, f"parents {unknown} are not declared"))
            continue
        out.extend(_table_violations(child, eq, ranges))

    cycle = _find_cycle(scm)
    if cycle:
        out.append(Violation("cycle", "equations", f"cycle through {sorted(set(cycle))}"))

    out.extend(_prior_violations(scm))
    return out


def _table_violations(child: str, eq: Equation, ranges: Mapping[str, Range]) -> list[Violation]:
    out = []
    domain = set(itertools.product(*(ranges[p] for p in eq.parents)))
    missing = sorted(domain - set(eq.table))
    if missing:
        out.append(Violation("partial-table", child,
                             f"{len(missing)} parent combinations undefined, first {list(missing[0])}"))
    extra = sorted(set(eq.table) - domain)
    if extra:
        out.append(Violation("table-domain", child,
                             f"entries outside the parents' ranges, first {list(extra[0])}"))
    allowed = set(ranges.get(child, ()))
    for key in sorted(eq.table):
        if eq.table[key] not in allowed:
            out.append(Violation("out-of-range", child,
                                 f"table maps {list(key)} to {eq.table[key]}, not in range"))
            break
    return out


def _find_cycle(scm: FiniteScm) -> list[str] | None:
    endo = set(scm.endogenous_ids)
    graph = {
        child: [p for p in eq.parents if p in endo]
        for child, eq in scm.equations.items() if child in endo
    }
    try:
        TopologicalSorter(graph).prepare()
    except CycleError as exc:
        return list(exc.args[1])
    return None


def _prior_violations(scm: FiniteScm) -> list[Violation]:
    out = []
    states = set(scm.exogenous_states())
    total = Fraction(0)
    for u, p in scm.prior.items():
        if u not in states:
            out.append(Violation("prior-domain", "prior", f"{list(u)} is not an exogenous state"))
        if p < 0:
            out.append(Violation("negative-mass", "prior", f"{list(u)} has mass {p}"))
        total += p
    if total != 1:
        out.append(Violation("prior-sum", "prior", f"masses sum to {total}, not 1"))
    return out


def check_intervention(scm: FiniteScm, i: Intervention) -> None:
    ranges = scm.ranges
    endo = set(scm.endogenous_ids)
    for name, value in i.assignments:
        if name not in endo:
            raise DomainError(f"intervention targets {name!r}, which is not endogenous")
        if value not in ranges[name]:
            raise DomainError(f"intervention sets {name}={value}, outside {list(ranges[name])}")


def solve(scm: FiniteScm, u: Sequence[Value], i: Intervention = EMPTY) -> Assignment:
    """Endogenous values for exogenous state ``u`` under intervention ``i``."""
    if len(u) != len(scm.exogenous):
        raise DomainError(f"expected {len(scm.exogenous)} exogenous values, got {len(u)}")
    values: dict[str, Value] = {}
    for (name, rng), x in zip(scm.exogenous, u):
        if x not in rng:
            raise DomainError(f"exogenous {name}={x} outside {list(rng)}")
        values[name] = x
    forced = i.as_dict()
    for name in scm.order:
        if name in forced:
            values[name] = forced[name]
        else:
            eq = scm.equations[name]
            values[name] = eq.table[tuple(values[p] for p in eq.parents)]
    return tuple(values[name] for name in scm.endogenous_ids)


def pushforward(scm: FiniteScm, i: Intervention = EMPTY) -> Distribution:
    """Exact distribution over endogenous states induced by the prior under ``i``."""
    dist: Distribution = {}
    for u, p in scm.prior.items():
        if not p:
            continue
        v = solve(scm, u, i)
        dist[v] = dist.get(v, Fraction(0)) + p
    return dist


def map_distribution(dist: Mapping[Assignment, Fraction],
                     fn: Mapping[Assignment, Assignment]) -> Distribution:
    out: Distribution = {}
    for v, p in dist.items():
        w = fn[v]
        out[w] = out.get(w, Fraction(0)) + p
    return out


def intervene(scm: FiniteScm, i: Intervention) -> FiniteScm:
    """The mutilated model: each target's equation becomes a constant."""
    check_intervention(scm, i)
    equations = dict(scm.equations)
    for name, value in i.assignments:
        equations[name] = Equation.constant(value)
    return FiniteScm(scm.exogenous, scm.endogenous, equations, dict(scm.prior))


def equation_from_function(parents: Sequence[str], ranges: Mapping[str, Range], fn) -> Equation:
    """Tabulate ``fn(*parent_values)`` over the product of the parents' ranges."""
    parents = tuple(parents)
    table = {key: fn(*key) for key in itertools.product(*(ranges[p] for p in parents))}
    return Equation(parents, table)


def iter_interventions(scm: FiniteScm, targets: Sequence[str]) -> Iterator[Intervention]:
    """All interventions on exactly ``targets``, in canonical value order."""
    ranges = scm.ranges
    for values in itertools.product(*(ranges[t] for t in targets)):
        yield Intervention(tuple(zip(targets, values)))
