import random

import pytest
from hypothesis import given, settings, strategies as st

from causabs.cca import (
    CcaState,
    CoverageError,
    DecisionRule,
    RuleSet,
    UnsupportedModel,
    check_consistency,
    discard,
    extract_rules,
    fit_initial_scm,
    replay_violations,
    run,
    step,
)
from causabs.data import DataMatrix, SchemaError, majority_equation
from causabs.fixtures import (
    DIETITIAN_CAUSE,
    DIETITIAN_COLUMNS,
    DIETITIAN_FOURTH,
    DIETITIAN_GRAPH,
    DIETITIAN_ROWS,
    DIETITIAN_TARGET,
    example1_low,
)
from causabs.scm import Intervention, StructureError, solve
from causabs.search import CandidateSpace


def base():
    return DataMatrix(DIETITIAN_COLUMNS, DIETITIAN_ROWS[:2])


def initial_state(data=None):
    return CcaState.initial(data or base(), DIETITIAN_GRAPH, DIETITIAN_TARGET, DIETITIAN_CAUSE)


# Data matrix

def test_csv_round_trip():
    data = DataMatrix(DIETITIAN_COLUMNS, DIETITIAN_ROWS)
    assert DataMatrix.from_csv(data.to_csv()) == data


def test_csv_errors_carry_line_numbers():
    with pytest.raises(SchemaError, match="line 3"):
        DataMatrix.from_csv("A,B\n0,1\n1\n")
    with pytest.raises(SchemaError, match="line 2"):
        DataMatrix.from_csv("A,B\nx,1\n")
    with pytest.raises(SchemaError, match="non-binary"):
        DataMatrix.from_csv("A,B\n0,2\n")
    with pytest.raises(SchemaError, match="duplicate"):
        DataMatrix.from_csv("A,A\n0,1\n")


def test_conform_accepts_mappings_in_any_order():
    data = base()
    row = dict(zip(reversed(DIETITIAN_COLUMNS), reversed(DIETITIAN_ROWS[2])))
    assert data.conform(row) == DIETITIAN_ROWS[2]
    with pytest.raises(SchemaError):
        data.conform({"DP": 1})


def test_majority_ties_and_unseen_default_to_zero():
    eq = majority_equation(["X"], [(0, 1)], (0, 1), [((1,), 0), ((1,), 1)])
    assert eq.table == {(0,): 0, (1,): 0}


# Step 1: fitting

def test_dietitian_initial_fit():
    scm = fit_initial_scm(base(), DIETITIAN_GRAPH)
    assert scm.endogenous_ids == ("DP", "TC", "HD")
    assert scm.equations["TC"].table == {(0,): 1, (1,): 0}
    assert scm.equations["HD"].table == {(0,): 0, (1,): 1}


def test_single_row_fit_keeps_observation_and_defaults_the_rest():
    scm = fit_initial_scm(DataMatrix(("X", "Y"), ((1, 1),)), {"Y": ["X"]})
    assert scm.equations["Y"].table == {(0,): 0, (1,): 1}


def test_contradictory_rows_tie_to_zero():
    scm = fit_initial_scm(DataMatrix(("X", "Y"), ((1, 0), (1, 1))), {"Y": ["X"]})
    assert scm.equations["Y"].table[(1,)] == 0


def test_fit_errors():
    with pytest.raises(StructureError, match="cycle"):
        fit_initial_scm(base(), {"DP": ["TC"], "TC": ["DP"]})
    with pytest.raises(SchemaError, match="unknown"):
        fit_initial_scm(base(), {"HD": ["BMI"]})
    with pytest.raises(SchemaError, match="empty"):
        fit_initial_scm(DataMatrix(DIETITIAN_COLUMNS), DIETITIAN_GRAPH)


# Step 2: rules

def test_dietitian_rules_include_tc_implies_hd():
    rules = extract_rules(fit_initial_scm(base(), DIETITIAN_GRAPH), "HD")
    assert DecisionRule("TC", 1, 1) in rules.rules
    assert DecisionRule("TC", 0, 0) in rules.rules
    assert rules.predictions("TC", 1) == {1}


def test_identity_chain_rules():
    scm = fit_initial_scm(DataMatrix(("X", "Y"), ((0, 0), (1, 1))), {"Y": ["X"]})
    assert extract_rules(scm, "Y").rules == (DecisionRule("X", 0, 0), DecisionRule("X", 1, 1))


def test_rules_need_a_binary_target_in_a_point_mass_model():
    scm, _ = example1_low()
    with pytest.raises(UnsupportedModel):
        extract_rules(scm, "C")
    with pytest.raises(UnsupportedModel):
        extract_rules(scm, "Q")


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_unambiguous_data_is_reproduced_by_its_rules(seed):
    rng = random.Random(seed)
    # chain X -> M -> Y with a functional M and Y, so every row is unambiguous
    fm, fy = rng.choice([(0, 1), (1, 0), (0, 0), (1, 1)]), rng.choice([(0, 1), (1, 0)])
    xs = [rng.randint(0, 1) for _ in range(rng.randint(1, 6))]
    rows = tuple((x, fm[x], fy[fm[x]]) for x in xs)
    data = DataMatrix(("X", "M", "Y"), rows)
    scm = fit_initial_scm(data, {"M": ["X"], "Y": ["M"]})
    rules = extract_rules(scm, "Y")
    for rec in data.records():
        assert check_consistency(rules, rec, "Y").consistent


# Step 3: consistency and discarding

def test_sumo_row_is_inconsistent_at_tc():
    state = initial_state()
    verdict = check_consistency(state.rules, state.project(dict(zip(DIETITIAN_COLUMNS, DIETITIAN_ROWS[2]))), "HD")
    assert verdict.predictor == "TC"
    assert verdict.to_json() == {"verdict": "inconsistent", "j": "TC", "observed": [1, 0], "rule": [[1, 1]]}


def test_training_rows_are_consistent():
    state = initial_state()
    for rec in base().records():
        assert check_consistency(state.rules, state.project(rec), "HD").consistent


def test_two_violations_report_the_earlier_column():
    rules = RuleSet("Y", (DecisionRule("A", 1, 1), DecisionRule("B", 1, 1)))
    assert check_consistency(rules, {"A": 1, "B": 1, "Y": 0}, "Y").predictor == "A"
    assert check_consistency(rules, {"B": 1, "A": 1, "Y": 0}, "Y").predictor == "B"


def test_missing_rule_is_a_coverage_error():
    rules = RuleSet("Y", (DecisionRule("A", 1, 1),))
    with pytest.raises(CoverageError, match="A=0"):
        check_consistency(rules, {"A": 0, "Y": 0}, "Y")
    with pytest.raises(CoverageError):
        check_consistency(RuleSet("Y", ()), {"A": 0, "Y": 0}, "Y")


def test_discard_tc():
    state = initial_state()
    data = DataMatrix(DIETITIAN_COLUMNS, DIETITIAN_ROWS)
    report = discard(state.rules, data, "TC")
    assert report.data.columns == ("DP", "HL", "LL", "HD")
    assert not report.rules.mentions("TC")
    assert state.rules.mentions("TC") and "TC" in data.columns


def test_discard_without_rules_keeps_rules_and_drops_column():
    state = initial_state()
    report = discard(state.rules, base(), "HL")
    assert report.rules == state.rules and "HL" not in report.data.columns
    with pytest.raises(SchemaError):
        discard(state.rules, base(), "BMI")


def test_discards_commute():
    state = initial_state()
    data = DataMatrix(DIETITIAN_COLUMNS, DIETITIAN_ROWS)
    a = discard(state.rules, data, "TC")
    ab = discard(a.rules, a.data, "DP")
    b = discard(state.rules, data, "DP")
    ba = discard(b.rules, b.data, "TC")
    assert (ab.rules, ab.data) == (ba.rules, ba.data)


# Step 4 and the loop

def test_sumo_row_triggers_hl_ll_revision():
    state = step(initial_state(), DIETITIAN_ROWS[2])
    (entry,) = state.log
    assert entry.verdict.predictor == "TC" and entry.score == 3
    assert entry.installed["mediators"] == [["HL"], ["LL"]]
    assert replay_violations(state) == []
    assert step(state, DIETITIAN_FOURTH).log[-1].verdict.consistent


def test_consistent_row_is_a_no_op():
    state = initial_state()
    after = step(state, DIETITIAN_ROWS[0])
    assert len(after.history) == len(state.history) + 1
    assert (after.scm, after.rules, after.view) == (state.scm, state.rules, state.view)
    assert after.log[-1].installed is None


def mispredicted(state):
    """History rows whose target the installed model gets wrong from the row's other values."""
    ids = state.scm.endogenous_ids
    bad = set()
    for k, rec in enumerate(state.history.records()):
        row = state.project(rec)
        forced = Intervention.of({v: w for v, w in row.items() if v != state.target})
        if solve(state.scm, (0,), forced)[ids.index(state.target)] != row[state.target]:
            bad.add(k)
    return bad


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_revision_iff_inconsistent_and_log_is_monotone(seed):
    # noisy rows can contradict each other; only the rows the model fits must replay
    rng = random.Random(seed)
    stream = [DIETITIAN_ROWS[2], DIETITIAN_FOURTH] + [tuple(rng.randint(0, 1) for _ in range(5)) for _ in range(12)]
    state = initial_state()
    for row in stream:
        rules_before = state.rules
        record = dict(zip(DIETITIAN_COLUMNS, row))
        verdict = check_consistency(rules_before, state.project(record), "HD")
        state = step(state, row)
        assert (state.log[-1].installed is not None) == (not verdict.consistent)
        assert set(replay_violations(state)) <= mispredicted(state)
    assert len(state.history) == 2 + len(stream)
    rows = [e.row for e in state.log]
    assert rows == sorted(set(rows))


def test_budget_exhausted_revision_installs_nothing():
    state = CcaState.initial(base(), DIETITIAN_GRAPH, "HD", "DP", CandidateSpace(budget=1))
    after = step(state, DIETITIAN_ROWS[2])
    assert after.unresolved and after.log[-1].unresolved
    assert after.scm == state.scm


def test_run_feeds_rows_in_order():
    state = run(initial_state(), [DIETITIAN_ROWS[2], DIETITIAN_FOURTH])
    assert [e.row for e in state.log] == [2, 3]
    assert len(state.revisions) == 1
