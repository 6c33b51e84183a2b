import pytest

from tmkit.diagnostics import CATALOG, Diagnostic, Severity, SourceSpan, count_errors, sort_diagnostics


def test_render_with_span():
    d = Diagnostic(Severity.ERROR, "E-FLOW-ILLEGAL", "flow process -> receive within one machine is not permitted",
                   "Robot.process->Robot.receive", SourceSpan("m.tm", 3, 7, 4))
    assert d.render() == ("error E-FLOW-ILLEGAL Robot.process->Robot.receive: "
                          "flow process -> receive within one machine is not permitted (m.tm:3:7)")


def test_render_without_span():
    d = Diagnostic(Severity.WARNING, "W-ISOLATED", "stage has no incident arcs", "A.create")
    assert d.render() == "warning W-ISOLATED A.create: stage has no incident arcs"


def test_unknown_code_rejected():
    with pytest.raises(ValueError):
        Diagnostic(Severity.INFO, "X-NOPE", "m")


@pytest.mark.parametrize("line,col", [(0, 1), (1, 0)])
def test_span_positions_are_one_based(line, col):
    with pytest.raises(ValueError):
        SourceSpan("f", line, col, 0)


def test_sort_order_severity_then_code_then_subject():
    ds = [
        Diagnostic(Severity.INFO, "I-EVT-OVERLAP", "m", "a"),
        Diagnostic(Severity.WARNING, "W-ISOLATED", "m", "b"),
        Diagnostic(Severity.ERROR, "E-TRIG-SRC", "m", "a"),
        Diagnostic(Severity.ERROR, "E-FLOW-ILLEGAL", "m", "z"),
        Diagnostic(Severity.ERROR, "E-FLOW-ILLEGAL", "m", "c"),
    ]
    out = sort_diagnostics(ds)
    assert [(d.code, d.subject) for d in out] == [
        ("E-FLOW-ILLEGAL", "c"), ("E-FLOW-ILLEGAL", "z"), ("E-TRIG-SRC", "a"),
        ("W-ISOLATED", "b"), ("I-EVT-OVERLAP", "a")]
    assert count_errors(out) == 3


def test_catalog_prefix_matches_default_severity():
    for code in CATALOG:
        assert code[0] in "EWI"
