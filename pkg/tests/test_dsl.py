import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmkit.diagnostics import Severity
from tmkit.dsl import format_model, parse_model, quote, tokenize
from tmkit.model import ArcKind, Profile

from modelgen import random_model, signature

GOLDEN = Path(__file__).parent / "golden"


def errors(result):
    return [d for d in result.diagnostics if d.severity is Severity.ERROR]


def test_minimal_program():
    r = parse_model("thimac Robot { stage create }")
    assert r.ok and r.diagnostics == []
    assert (len(r.model.thimacs), len(r.model.stages), len(r.model.arcs)) == (1, 1, 0)


def test_illegal_flow_parses_cleanly():
    r = parse_model("thimac Robot { stage process stage receive }\nflow Robot.process -> Robot.receive\n")
    assert r.ok and len(r.model.arcs) == 1


def test_tokens_and_comments():
    toks = tokenize('thimac A { # comment -> ignored\n attr k = "a\\"b" }')
    kinds = [t.kind for t in toks]
    assert kinds == ["IDENT", "IDENT", "LBRACE", "IDENT", "IDENT", "EQ", "STRING", "RBRACE", "EOF"]
    assert toks[6].value == 'a"b'
    assert (toks[3].line, toks[3].col) == (2, 2)


def test_string_escapes_round_trip():
    text = 'tab\there "q" back\\slash\nnewline ✓'
    (tok, _eof) = tokenize(quote(text))
    assert tok.kind == "STRING" and tok.value == text


def test_parse_errors_carry_spans():
    bad = [
        "thimac A { stage frob }",
        "flow A.create B.create",
        'thimac A { attr x "v" }',
        "thimac A { stage create",
        '"unterminated',
        "@",
        "behavior { E1 -> }",
    ]
    for src in bad:
        r = parse_model(src, filename="bad.tm")
        assert r.model is None
        assert errors(r), src
        for d in r.diagnostics:
            assert d.span is not None and d.span.file == "bad.tm" and d.span.line >= 1


def test_semantic_errors():
    cases = {
        "thimac A { stage create } thimac A { }": "E-DUP-NAME",
        "thimac A { stage create stage create }": "E-DUP-STAGE",
        "thimac A { stage arrive }": "E-PROFILE-KIND",
        "thimac A { stage create }\nflow A.create -> B.process": "E-REF-UNKNOWN",
        "thimac A { stage create }\nflow A.create -> A.create": "E-SELF-ARC",
        "thimac A { stage create stage process }\nflow A.create -> A.process\nflow A.create -> A.process": "E-DUP-ARC",
        "thimac A { stage create }\nevent E { stage A.create }\nevent E { stage A.create }": "E-DUP-EVENT",
        "thimac A { stage create }\nevent E { }": "E-EVT-EMPTY",
        "thimac A { stage create }\nevent E { stage A.create }\nbehavior { E -> E9 }": "E-UNKNOWN-EVENT",
        "thimac A { stage create }\nevent E { stage A.create }\nbehavior { E -> E\n E -> E }": "E-DUP-EDGE",
    }
    for src, code in cases.items():
        r = parse_model(src)
        assert [d.code for d in errors(r)] == [code], src


def test_extended_profile_parses_arrive():
    r = parse_model("thimac Door { stage arrive stage accept }", Profile.EXTENDED)
    assert r.ok


def test_event_arc_member_takes_flow_and_trigger():
    src = ("thimac A { stage create stage process }\n"
           "flow A.create -> A.process\ntrigger A.create -> A.process\n"
           "event E { arc A.create -> A.process }\n")
    r = parse_model(src)
    assert r.ok
    assert {r.model.arcs[a].kind for a in r.events[0].arcs} == {ArcKind.FLOW, ArcKind.TRIGGER}


def test_window_trigger_present(window):
    m = window.model
    src = m.resolve_stage("Robot.DataProcessing.process")
    dst = m.resolve_stage("Robot.WindowPosition.create")
    assert m.find_arc(ArcKind.TRIGGER, src, dst) is not None


def test_format_layout():
    src = ('thimac B { stage receive stage create attr k = "v" thimac C { stage process } }\n'
           'thimac A { stage transfer }\n'
           'trigger B.create -> B.C.process label "go"\nflow B.create -> A.transfer\n')
    r = parse_model(src)
    assert format_model(r.model) == (
        "thimac B {\n"
        '  attr k = "v"\n'
        "  stage create\n"
        "  stage receive\n"
        "  thimac C {\n"
        "    stage process\n"
        "  }\n"
        "}\n"
        "\n"
        "thimac A {\n"
        "  stage transfer\n"
        "}\n"
        "\n"
        "flow B.create -> A.transfer\n"
        'trigger B.create -> B.C.process label "go"\n')


def test_format_empty_model():
    assert format_model(parse_model("").model) == ""


def test_nao_format_matches_golden(nao):
    text = format_model(nao.model, nao.events, nao.behavior)
    assert text == (GOLDEN / "nao.canonical.tm").read_text(encoding="utf-8")
    assert format_model(nao.model, nao.events, nao.behavior) == text


def isomorphic_round_trip(model, events, behavior):
    text = format_model(model, events, behavior)
    again = parse_model(text, model.profile)
    assert again.ok, [d.render() for d in again.diagnostics]
    assert signature(again.model, again.events, again.behavior) == signature(model, events, behavior)
    assert format_model(again.model, again.events, again.behavior) == text


def test_corpus_round_trip(corpus):
    for r in corpus.values():
        isomorphic_round_trip(r.model, r.events, r.behavior)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_random_round_trip(seed):
    isomorphic_round_trip(*random_model(seed))


# -- error recovery -----------------------------------------------------------

def _break_arc(line, rng):
    choice = rng.randrange(4)
    if choice == 0:
        return line.replace(" -> ", " ", 1)
    if choice == 1:
        head, _, rest = line.partition(" -> ")
        return head.rsplit(".", 1)[0] + ". -> " + rest
    if choice == 2:
        return line + ' label "unterminated'
    return line + " label"


def _break_stage(line, rng):
    return line.replace("stage ", rng.choice(["stage frob ", "stage 42 ", "stag "]), 1)


MUTATORS = {"arc": _break_arc, "stage": _break_stage}


def mutate(text, rng, count):
    lines = text.split("\n")
    arc_lines = [i for i, l in enumerate(lines) if l.startswith(("flow ", "trigger "))]
    stage_lines = [i for i, l in enumerate(lines) if l.strip().startswith("stage ") and not lines[i - 1].startswith("event")]
    picked = set()
    # at most one mutation per thimac block keeps "one error per item" exact
    blocks_used = set()
    while len(picked) < count:
        if rng.random() < 0.5:
            i = rng.choice(arc_lines)
            if i in picked:
                continue
            lines[i] = _break_arc(lines[i], rng)
        else:
            i = rng.choice(stage_lines)
            block = max(j for j in range(i + 1) if lines[j].startswith(("thimac ", "event ")))
            if block in blocks_used or i in picked:
                continue
            blocks_used.add(block)
            lines[i] = _break_stage(lines[i], rng)
        picked.add(i)
    return "\n".join(lines), sorted(picked)


@pytest.mark.parametrize("seed", range(40))
def test_seeded_mutations_recover(seed):
    text = (GOLDEN / "nao.canonical.tm").read_text(encoding="utf-8")
    rng = random.Random(seed)
    count = rng.randint(1, 3)
    broken, lines = mutate(text, rng, count)
    r = parse_model(broken, filename="m.tm")
    errs = errors(r)
    assert r.model is None
    assert len(errs) == count, [d.render() for d in errs]
    assert sorted(d.span.line for d in errs) == [i + 1 for i in lines]


def test_dropped_stage_does_not_cascade():
    src = ("thimac A { stage create stage frob stage process }\n"
           "flow A.create -> A.process\nflow A.process -> A.release\n"
           "event E { arc A.process -> A.release }\n")
    r = parse_model(src)
    assert [d.code for d in errors(r)] == ["E-SYNTAX"]


def test_broken_event_does_not_cascade_into_behavior():
    src = ("thimac A { stage create }\nevent E1 { stage A.create }\nevent E2 \"x\" {\n"
           "behavior { E1 -> E2 }\n")
    r = parse_model(src)
    assert [d.code for d in errors(r)] == ["E-SYNTAX"]


def test_unrelated_bad_reference_still_reported():
    src = ("thimac A { stage create stage process }\nflow A.create A.process\n"
           "flow B.create -> A.process\n")
    r = parse_model(src)
    assert sorted(d.code for d in errors(r)) == ["E-REF-UNKNOWN", "E-SYNTAX"]


def test_missing_token_at_line_end_points_at_that_line():
    r = parse_model('thimac A { stage create stage process }\nflow A.create -> A.process label\nthimac B { }\n',
                    filename="m.tm")
    (d,) = errors(r)
    assert (d.span.line, d.span.column) == (2, 33)
