"""The continual causal abstraction loop over a stream of binary rows.

1. fit a deterministic table model from the initial data and a given graph;
2. read decision rules off it: every joint setting of the non-target
   variables is an input, the model's target value is the prediction, and
   a rule ``(V=w) => y`` is the projection of such a pair onto one input;
3. a new row is inconsistent when some observed ``(V=w, target)`` pair is
   not predicted by any rule; the first such column is discarded from the
   rules and the data;
4. the remaining history is re-fitted by :func:`search.fit_high_level` and
   the winning model replaces the current one.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from graphlib import CycleError, TopologicalSorter
from typing import Mapping, Sequence

from .data import DataMatrix, SchemaError, majority_equation
from .scm import FiniteScm, Intervention, StructureError, solve
from .search import UNIT, CandidateSpace, fit_high_level


class UnsupportedModel(ValueError):
    """The model is outside what rule extraction handles."""


class CoverageError(ValueError):
    """An observed predictor value has no rule at all."""


def fit_initial_scm(data: DataMatrix, graph: Mapping[str, Sequence[str]]) -> FiniteScm:
    """Deterministic binary model with majority-vote tables (ties and unseen -> 0)."""
    if not len(data):
        raise SchemaError("cannot fit on an empty data matrix")
    names = set(graph) | {p for ps in graph.values() for p in ps}
    unknown = sorted(n for n in names if n not in data.columns)
    if unknown:
        raise SchemaError(f"graph mentions unknown columns {unknown}")
    try:
        TopologicalSorter({v: list(graph.get(v, ())) for v in names}).prepare()
    except CycleError as exc:
        raise StructureError(f"graph has a cycle through {sorted(set(exc.args[1]))}") from None

    variables = [c for c in data.columns if c in names]
    binary = (0, 1)
    equations = {}
    for v in variables:
        parents = tuple(graph.get(v, ()))
        obs = [(tuple(r[p] for p in parents), r[v]) for r in data.records()]
        equations[v] = majority_equation(parents, [binary] * len(parents), binary, obs)
    if UNIT in names:
        raise SchemaError(f"column name {UNIT!r} is reserved")
    return FiniteScm([(UNIT, (0,))], [(v, binary) for v in variables], equations, {(0,): Fraction(1)})


@dataclass(frozen=True, order=True)
class DecisionRule:
    predictor: str
    value: int
    prediction: int

    def __str__(self) -> str:
        return f"({self.predictor}={self.value}) => {self.prediction}"


@dataclass(frozen=True)
class RuleSet:
    target: str
    rules: tuple[DecisionRule, ...]

    def predictions(self, predictor: str, value: int) -> frozenset[int]:
        return frozenset(r.prediction for r in self.rules
                         if r.predictor == predictor and r.value == value)

    def mentions(self, predictor: str) -> bool:
        return any(r.predictor == predictor for r in self.rules)

    def without(self, predictor: str) -> "RuleSet":
        return RuleSet(self.target, tuple(r for r in self.rules if r.predictor != predictor))

    def __len__(self) -> int:
        return len(self.rules)


def extract_rules(scm: FiniteScm, target: str) -> RuleSet:
    """Rules read off ``scm`` by fully intervening on every non-target variable."""
    ranges = scm.ranges
    if target not in scm.endogenous_ids:
        raise UnsupportedModel(f"target {target!r} is not endogenous")
    if set(ranges[target]) != {0, 1}:
        raise UnsupportedModel(f"target {target!r} is not binary")
    support = scm.support()
    if len(support) != 1:
        raise UnsupportedModel("rule extraction needs a point-mass exogenous prior")
    (u,) = support
    inputs = [v for v in scm.endogenous_ids if v != target]
    t = scm.endogenous_ids.index(target)
    found = set()
    for values in itertools.product(*(ranges[v] for v in inputs)):
        y = solve(scm, u, Intervention(tuple(zip(inputs, values))))[t]
        found.update(DecisionRule(v, w, y) for v, w in zip(inputs, values))
    order = {v: k for k, v in enumerate(inputs)}
    return RuleSet(target, tuple(sorted(found, key=lambda r: (order[r.predictor], r.value, r.prediction))))


@dataclass(frozen=True)
class Verdict:
    predictor: str | None = None
    value: int | None = None
    observed: int | None = None
    predicted: frozenset[int] = frozenset()

    @property
    def consistent(self) -> bool:
        return self.predictor is None

    def to_json(self) -> dict:
        if self.consistent:
            return {"verdict": "consistent"}
        return {
            "verdict": "inconsistent",
            "j": self.predictor,
            "observed": [self.value, self.observed],
            "rule": [[self.value, p] for p in sorted(self.predicted)],
        }


def check_consistency(rules: RuleSet, row: Mapping[str, int], target: str) -> Verdict:
    """First column (in ``row`` order) whose observed pair no rule predicts."""
    if target not in row:
        raise SchemaError(f"row lacks the target column {target!r}")
    y = row[target]
    for v, w in row.items():
        if v == target:
            continue
        predicted = rules.predictions(v, w)
        if not predicted:
            raise CoverageError(f"no rule covers ({v}={w})")
        if y not in predicted:
            return Verdict(v, w, y, predicted)
    return Verdict()


@dataclass(frozen=True)
class InconsistencyReport:
    j: str
    rules: RuleSet
    data: DataMatrix
    verdict: Verdict | None = None


def discard(rules: RuleSet, data: DataMatrix, j: str, verdict: Verdict | None = None,
            columns: Sequence[str] | None = None) -> InconsistencyReport:
    """Rules and data with predictor ``j`` removed; the inputs are left as they were.

    ``columns`` names the data columns behind ``j`` when ``j`` is an aggregated
    model variable; by default it is the single column ``j``.
    """
    for c in columns or (j,):
        data = data.drop(c)
    return InconsistencyReport(j, rules.without(j), data, verdict)


@dataclass(frozen=True)
class LogEntry:
    row: int
    verdict: Verdict
    installed: dict | None = None
    score: int | None = None
    unresolved: bool = False

    def to_json(self) -> dict:
        out = {"row": self.row, **self.verdict.to_json()}
        if self.installed is not None:
            out["installed"] = self.installed
        if self.score is not None:
            out["score"] = self.score
        if self.unresolved:
            out["unresolved"] = True
        return out


@dataclass(frozen=True)
class CcaState:
    scm: FiniteScm
    rules: RuleSet
    history: DataMatrix
    target: str
    cause: str | None
    # (model variable, data columns summed into it), in model order
    view: tuple[tuple[str, tuple[str, ...]], ...]
    space: CandidateSpace = field(default_factory=CandidateSpace)
    log: tuple[LogEntry, ...] = ()
    unresolved: bool = False

    @classmethod
    def initial(cls, data: DataMatrix, graph: Mapping[str, Sequence[str]], target: str,
                cause: str | None = None, space: CandidateSpace | None = None) -> "CcaState":
        scm = fit_initial_scm(data, graph)
        if target not in scm.endogenous_ids:
            raise SchemaError(f"target {target!r} is not in the graph")
        view = tuple((v, (v,)) for v in scm.endogenous_ids)
        return cls(scm, extract_rules(scm, target), data, target, cause, view,
                   space or CandidateSpace())

    def project(self, row: Mapping[str, int]) -> dict[str, int]:
        """A full data row in terms of the current model's variables."""
        return {name: sum(row[c] for c in cols) for name, cols in self.view}

    @property
    def revisions(self) -> list[LogEntry]:
        return [e for e in self.log if e.installed is not None]


def step(state: CcaState, row: Sequence[int] | Mapping[str, int]) -> CcaState:
    """Feed one row; revise the model if the current rules contradict it."""
    values = state.history.conform(row)
    history = state.history.append(values)
    index = len(history) - 1
    record = dict(zip(history.columns, values))
    verdict = check_consistency(state.rules, state.project(record), state.target)
    if verdict.consistent:
        entry = LogEntry(index, verdict)
        return replace(state, history=history, log=state.log + (entry,))

    columns = dict(state.view)[verdict.predictor]
    report = discard(state.rules, history, verdict.predictor, verdict, columns)
    cause = state.cause if state.cause not in columns else None
    fit = fit_high_level(report.data, state.target, state.space, cause=cause)
    if fit.budget_exhausted:
        entry = LogEntry(index, verdict, unresolved=True)
        return replace(state, history=history, log=state.log + (entry,), unresolved=True)
    entry = LogEntry(index, verdict, installed=fit.summary(), score=fit.score)
    return replace(
        state,
        scm=fit.scm,
        rules=extract_rules(fit.scm, state.target),
        history=history,
        view=fit.blocks,
        log=state.log + (entry,),
        unresolved=False,
    )


def run(state: CcaState, rows) -> CcaState:
    for row in rows:
        state = step(state, row)
    return state


def replay_violations(state: CcaState) -> list[int]:
    """History indices whose projected row the current rules reject."""
    bad = []
    for k, record in enumerate(state.history.records()):
        if not check_consistency(state.rules, state.project(record), state.target).consistent:
            bad.append(k)
    return bad

