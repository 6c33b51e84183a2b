"""Toolkit for thinging-machine models: a textual model language, a
validator, events and behavior graphs, a token-flow simulator, and export."""

from .diagnostics import Diagnostic, Severity, SourceSpan, sort_diagnostics
from .dsl import ParseResult, format_model, parse_file, parse_model
from .events import (BehaviorEdge, BehaviorError, BehaviorGraph, EventDef, EventError, attach_event,
                     build_behavior, check_decomposition, induced_subdiagram)
from .export import ExportOptions, SchemaError, export, from_json, to_dot, to_json
from .model import (ArcKind, ComponentView, ModelError, Profile, StageKind, StaticModel, create_model,
                    extract_components)
from .simulator import (Scenario, ScenarioError, Trace, TraceRecord, check_conservation,
                        check_trace_conformance, run_scenario)
from .validator import LegalityMatrix, is_legal_flow, legality_matrix, validate_model

__all__ = [
    "ArcKind", "BehaviorEdge", "BehaviorError", "BehaviorGraph", "ComponentView", "Diagnostic",
    "EventDef", "EventError", "ExportOptions", "LegalityMatrix", "ModelError", "ParseResult", "Profile",
    "Scenario", "ScenarioError", "SchemaError", "Severity", "SourceSpan", "StageKind", "StaticModel",
    "Trace", "TraceRecord", "attach_event", "build_behavior", "check_conservation", "check_decomposition",
    "check_trace_conformance", "create_model", "export", "extract_components", "format_model",
    "from_json", "induced_subdiagram", "is_legal_flow", "legality_matrix", "parse_file", "parse_model",
    "run_scenario", "sort_diagnostics", "to_dot", "to_json", "validate_model",
]
