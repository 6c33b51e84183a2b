import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmkit.diagnostics import CATALOG, Severity
from tmkit.model import ArcKind, Profile, StageKind, create_model
from tmkit.validator import is_legal_flow, legality_matrix, validate_model

from modelgen import random_model
from oracles import LEGAL_FLOWS

@pytest.mark.parametrize("profile", list(Profile))
def test_legality_matches_truth_table(profile):
    matrix = legality_matrix(profile)
    rows = list(itertools.product(StageKind, StageKind, (False, True)))
    assert len(rows) == 98
    mismatches = [r for r in rows if is_legal_flow(matrix, *r) != (r in LEGAL_FLOWS[profile])]
    assert mismatches == []


def test_named_examples():
    m = legality_matrix(Profile.STRICT)
    assert is_legal_flow(m, StageKind.RELEASE, StageKind.TRANSFER, False)
    assert is_legal_flow(m, StageKind.TRANSFER, StageKind.TRANSFER, True)
    assert not is_legal_flow(m, StageKind.PROCESS, StageKind.RECEIVE, False)


def machine(profile=Profile.STRICT, *kinds):
    m = create_model(profile)
    t = m.add_thimac("M")
    return m, t, {k: m.add_stage(t, k) for k in kinds}


def codes(diags):
    return [(d.severity, d.code) for d in diags]


def test_illegal_flow_strict_and_lenient():
    out = {}
    for profile in (Profile.STRICT, Profile.LENIENT):
        m, t, s = machine(profile, StageKind.CREATE, StageKind.PROCESS, StageKind.RECEIVE)
        m.add_arc(ArcKind.FLOW, s[StageKind.CREATE], s[StageKind.PROCESS])
        m.add_arc(ArcKind.FLOW, s[StageKind.PROCESS], s[StageKind.RECEIVE])
        out[profile] = [d for d in validate_model(m) if d.code == "E-FLOW-ILLEGAL"]
    assert [d.severity for d in out[Profile.STRICT]] == [Severity.ERROR]
    assert [d.severity for d in out[Profile.LENIENT]] == [Severity.WARNING]
    assert out[Profile.STRICT][0].subject == "M.process->M.receive"


def test_trigger_source_rule():
    m, t, s = machine(Profile.STRICT, StageKind.CREATE, StageKind.RELEASE, StageKind.TRANSFER)
    other = m.add_thimac("N")
    target = m.add_stage(other, StageKind.CREATE)
    m.add_arc(ArcKind.FLOW, s[StageKind.CREATE], s[StageKind.RELEASE])
    m.add_arc(ArcKind.FLOW, s[StageKind.RELEASE], s[StageKind.TRANSFER])
    m.add_arc(ArcKind.TRIGGER, s[StageKind.RELEASE], target)
    assert (Severity.ERROR, "E-TRIG-SRC") in codes(validate_model(m))
    m.profile = Profile.LENIENT
    assert (Severity.WARNING, "E-TRIG-SRC") in codes(validate_model(m))


def test_trigger_alongside_flow_warns():
    m, t, s = machine(Profile.STRICT, StageKind.CREATE, StageKind.PROCESS)
    m.add_arc(ArcKind.FLOW, s[StageKind.CREATE], s[StageKind.PROCESS])
    m.add_arc(ArcKind.TRIGGER, s[StageKind.CREATE], s[StageKind.PROCESS])
    assert codes(validate_model(m)) == [(Severity.WARNING, "W-TRIG-FLOW")]


def test_isolated_stage_warning_and_lenient_info():
    m, t, s = machine(Profile.STRICT, StageKind.CREATE)
    assert codes(validate_model(m)) == [(Severity.WARNING, "W-ISOLATED")]
    m.profile = Profile.LENIENT
    assert codes(validate_model(m)) == [(Severity.INFO, "W-ISOLATED")]


def test_component_without_source_warns():
    m, t, s = machine(Profile.STRICT, StageKind.RECEIVE, StageKind.PROCESS)
    m.add_arc(ArcKind.FLOW, s[StageKind.RECEIVE], s[StageKind.PROCESS])
    assert codes(validate_model(m)) == [(Severity.WARNING, "W-UNREACHABLE-CREATE-FREE")]
    # an open transfer (nothing flows into it) counts as a source
    tr = m.add_stage(t, StageKind.TRANSFER)
    m.add_arc(ArcKind.FLOW, tr, s[StageKind.RECEIVE])
    assert validate_model(m) == []


def test_duplicate_stage_and_dangling_refs_on_unchecked_input():
    m = create_model()
    t = m.add_thimac("M")
    a = m._insert_stage(t, StageKind.CREATE)
    m._insert_stage(t, StageKind.CREATE)
    m._insert_arc(ArcKind.FLOW, a, m._unresolved_ref("Ghost.process"))
    m._insert_thimac("Orphan", m._unresolved_ref("Nowhere"))
    found = codes(validate_model(m))
    assert found.count((Severity.ERROR, "E-DUP-STAGE")) == 1
    assert found.count((Severity.ERROR, "E-DANGLING")) == 2


def test_extended_receive_conflict():
    m = create_model(Profile.EXTENDED)
    door = m.add_thimac("Door")
    tr, ar, ac, rc, pr = (m.add_stage(door, k) for k in ("transfer", "arrive", "accept", "receive", "process"))
    m.add_arc(ArcKind.FLOW, tr, ar)
    m.add_arc(ArcKind.FLOW, ar, ac)
    m.add_arc(ArcKind.FLOW, ac, pr)
    m.add_arc(ArcKind.FLOW, tr, rc)
    diags = validate_model(m)
    assert [(d.code, d.subject) for d in diags] == [("E-FLOW-ILLEGAL", "Door.receive")]


def test_window_source_has_expected_trigger(window):
    m = window.model
    src = m.resolve_stage("Robot.DataProcessing.process")
    dst = m.resolve_stage("Robot.WindowPosition.create")
    assert m.find_arc(ArcKind.TRIGGER, src, dst) is not None


def test_corpus_is_clean(corpus):
    for result in corpus.values():
        assert validate_model(result.model) == []


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_validator_properties(seed):
    model, _, _ = random_model(seed)
    first = validate_model(model)
    assert validate_model(model) == first
    assert all(d.code in CATALOG for d in first)
    assert [d.sort_key for d in first] == sorted(d.sort_key for d in first)
    if model.profile is not Profile.EXTENDED:
        strict_errors = set()
        lenient_errors = set()
        for profile, sink in ((Profile.STRICT, strict_errors), (Profile.LENIENT, lenient_errors)):
            model.profile = profile
            sink.update((d.code, d.subject) for d in validate_model(model) if d.severity is Severity.ERROR)
        assert lenient_errors <= strict_errors
