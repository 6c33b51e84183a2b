"""DOT and JSON export.

DOT output is byte-stable: clusters, nodes and edges are emitted in path
order.  The JSON form names everything by dotted path instead of by id so
that files diff cleanly; thimacs are listed parents-first with their stages
nested inside.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import jsonschema

from .events import BehaviorEdge, BehaviorGraph, EventDef
from .model import ArcKind, Profile, StageKind, StaticModel, create_model, extract_components

FLAVORS = ("model-dot", "components-dot", "behavior-dot", "json")
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ExportOptions:
    flavor: str = "model-dot"
    include_labels: bool = True

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}; expected one of {', '.join(FLAVORS)}")


# -- DOT ----------------------------------------------------------------------

def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _attrs(pairs: list[tuple[str, str]]) -> str:
    if not pairs:
        return ""
    return " [" + ", ".join(f"{k}={v}" for k, v in pairs) + "]"


def _model_dot(model: StaticModel, options: ExportOptions) -> list[str]:
    lines = ["  node [shape=box];"]
    counter = [0]

    def cluster(tid: int, depth: int):
        pad = "  " * depth
        lines.append(f"{pad}subgraph cluster_{counter[0]} {{")
        counter[0] += 1
        lines.append(f"{pad}  label={_q(model.thimacs[tid].name)};")
        for sid in sorted(model.thimacs[tid].stages, key=model.stage_path):
            lines.append(f"{pad}  {_q(model.stage_path(sid))} [label={_q(model.stages[sid].kind.value)}];")
        for child in sorted(model.children(tid), key=model.path):
            cluster(child, depth + 1)
        lines.append(f"{pad}}}")

    for root in sorted(model.roots(), key=model.path):
        cluster(root, 1)
    arcs = [a for a in model.arcs.values() if a.src in model.stages and a.dst in model.stages]
    arcs.sort(key=lambda a: (model.stage_path(a.src), model.stage_path(a.dst), a.kind.value))
    for a in arcs:
        attrs = []
        if a.kind is ArcKind.TRIGGER:
            attrs.append(("style", "dashed"))
        if options.include_labels and a.label is not None:
            attrs.append(("label", _q(a.label)))
        lines.append(f"  {_q(model.stage_path(a.src))} -> {_q(model.stage_path(a.dst))}{_attrs(attrs)};")
    return lines


def _components_dot(model: StaticModel, options: ExportOptions) -> list[str]:
    view = extract_components(model)
    lines = ["  node [shape=box];"]
    for tid in view.nodes:
        lines.append(f"  {_q(model.path(tid))} [label={_q(model.thimacs[tid].name)}];")
    for tid in view.nodes:
        parent = view.parents[tid]
        if parent is not None:
            lines.append(f"  {_q(model.path(parent))} -> {_q(model.path(tid))} [style=dotted, arrowhead=none];")
    for (a, b), kinds in view.edges.items():
        for kind in sorted(kinds, key=lambda k: k.value):
            attrs = [("dir", "none")]
            if kind is ArcKind.TRIGGER:
                attrs.append(("style", "dashed"))
            lines.append(f"  {_q(model.path(a))} -> {_q(model.path(b))}{_attrs(attrs)};")
    return lines


def _behavior_dot(behavior: Optional[BehaviorGraph], events: Sequence[EventDef],
                  options: ExportOptions) -> list[str]:
    lines = ["  node [shape=ellipse];"]
    if behavior is None:
        return lines
    described = {e.name: e.description for e in events}
    for name in behavior.nodes:
        attrs = []
        if options.include_labels and described.get(name):
            attrs.append(("tooltip", _q(described[name])))
        lines.append(f"  {_q(name)}{_attrs(attrs)};")
    for e in behavior.edges:
        attrs = [("label", _q(e.label))] if options.include_labels and e.label is not None else []
        lines.append(f"  {_q(e.src)} -> {_q(e.dst)}{_attrs(attrs)};")
    return lines


def to_dot(model: StaticModel, options: ExportOptions = ExportOptions(),
           events: Sequence[EventDef] = (), behavior: Optional[BehaviorGraph] = None) -> str:
    if options.flavor == "model-dot":
        name, body = "model", _model_dot(model, options)
    elif options.flavor == "components-dot":
        name, body = "components", _components_dot(model, options)
    elif options.flavor == "behavior-dot":
        name, body = "behavior", _behavior_dot(behavior, events, options)
    else:
        raise ValueError(f"{options.flavor} is not a DOT flavor")
    return "\n".join([f"digraph {name} {{", *body, "}"]) + "\n"


def export(model: StaticModel, events: Sequence[EventDef] = (), behavior: Optional[BehaviorGraph] = None,
           options: ExportOptions = ExportOptions()) -> str:
    if options.flavor == "json":
        return to_json(model, events, behavior)
    return to_dot(model, options, events, behavior)


# -- JSON ---------------------------------------------------------------------

_LABEL = {"type": ["string", "null"]}
_ARC = {
    "type": "object",
    "required": ["kind", "src", "dst"],
    "properties": {
        "kind": {"enum": [k.value for k in ArcKind]},
        "src": {"type": "string"},
        "dst": {"type": "string"},
        "label": _LABEL,
    },
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "required": ["version", "profile", "thimacs", "arcs"],
    "properties": {
        "version": {"const": FORMAT_VERSION},
        "profile": {"enum": [p.value for p in Profile]},
        "thimacs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "parent"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "parent": {"type": ["string", "null"]},
                    "attributes": {
                        "type": "array",
                        "items": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2},
                    },
                    "stages": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["kind"],
                            "properties": {"kind": {"enum": [k.value for k in StageKind]}, "note": _LABEL},
                            "additionalProperties": False,
                        },
                    },
                },
                "additionalProperties": False,
            },
        },
        "arcs": {"type": "array", "items": _ARC},
        "events": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "description": _LABEL,
                    "stages": {"type": "array", "items": {"type": "string"}},
                    "arcs": {"type": "array", "items": _ARC},
                },
                "additionalProperties": False,
            },
        },
        "behavior": {
            "type": ["object", "null"],
            "required": ["nodes", "edges"],
            "properties": {
                "nodes": {"type": "array", "items": {"type": "string"}},
                "edges": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["src", "dst"],
                        "properties": {"src": {"type": "string"}, "dst": {"type": "string"}, "label": _LABEL},
                        "additionalProperties": False,
                    },
                },
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


class SchemaError(ValueError):
    """Input that does not follow the JSON schema.  ``errors`` holds
    ``(pointer, message)`` pairs, pointers in JSON-pointer syntax."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{p or '/'}: {m}" for p, m in errors))


def _pointer(parts) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


def to_json(model: StaticModel, events: Sequence[EventDef] = (), behavior: Optional[BehaviorGraph] = None) -> str:
    thimacs = []
    for tid in model.walk():
        t = model.thimacs[tid]
        entry = {"name": t.name, "parent": model.path(t.parent) if t.parent is not None else None}
        if t.attributes:
            entry["attributes"] = [list(pair) for pair in t.attributes]
        if t.stages:
            stages = []
            for sid in t.stages:
                s = model.stages[sid]
                stages.append({"kind": s.kind.value, **({"note": s.note} if s.note is not None else {})})
            entry["stages"] = stages
        thimacs.append(entry)

    def arc_entry(a, with_label=True):
        out = {"kind": a.kind.value, "src": model.stage_path(a.src), "dst": model.stage_path(a.dst)}
        if with_label and a.label is not None:
            out["label"] = a.label
        return out

    doc = {
        "version": FORMAT_VERSION,
        "profile": model.profile.value,
        "thimacs": thimacs,
        "arcs": [arc_entry(a) for a in sorted(model.arcs.values(), key=lambda a: a.id)],
    }
    if events:
        doc["events"] = [
            {
                "name": e.name,
                **({"description": e.description} if e.description is not None else {}),
                "stages": sorted(model.stage_path(s) for s in e.stages),
                "arcs": sorted((arc_entry(model.arcs[a], False) for a in e.arcs),
                               key=lambda d: (d["kind"], d["src"], d["dst"])),
            }
            for e in events
        ]
    if behavior is not None:
        doc["behavior"] = {
            "nodes": list(behavior.nodes),
            "edges": [{"src": e.src, "dst": e.dst, **({"label": e.label} if e.label is not None else {})}
                      for e in behavior.edges],
        }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def from_json(text: str) -> tuple[StaticModel, list[EventDef], Optional[BehaviorGraph]]:
    """Inverse of :func:`to_json`.

    Broken references inside the model (an unknown parent or arc endpoint)
    are kept as dangling ids for the validator to report; broken references
    inside events or the behavior graph raise :class:`SchemaError`.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError([("", f"not JSON: {exc.msg} at line {exc.lineno} column {exc.colno}")]) from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    problems = sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if problems:
        raise SchemaError([(_pointer(e.absolute_path), e.message) for e in problems])

    model = create_model(doc["profile"])
    for t in doc["thimacs"]:
        parent = None
        if t["parent"] is not None:
            parent = model.resolve_thimac(t["parent"])
            if parent is None:
                parent = model._unresolved_ref(t["parent"])
        tid = model._insert_thimac(t["name"], parent, [tuple(p) for p in t.get("attributes", [])])
        for s in t.get("stages", []):
            model._insert_stage(tid, StageKind(s["kind"]), s.get("note"))

    def stage_ref(path: str) -> int:
        sid = model.resolve_stage(path)
        return sid if sid is not None else model._unresolved_ref(path)

    for a in doc["arcs"]:
        model._insert_arc(ArcKind(a["kind"]), stage_ref(a["src"]), stage_ref(a["dst"]), a.get("label"))

    errors: list[tuple[str, str]] = []
    events: list[EventDef] = []
    for i, e in enumerate(doc.get("events", [])):
        stages, arcs = set(), set()
        for j, path in enumerate(e.get("stages", [])):
            sid = model.resolve_stage(path)
            if sid is None:
                errors.append((f"/events/{i}/stages/{j}", f"no stage {path!r}"))
            else:
                stages.add(sid)
        for j, a in enumerate(e.get("arcs", [])):
            src, dst = model.resolve_stage(a["src"]), model.resolve_stage(a["dst"])
            aid = model.find_arc(ArcKind(a["kind"]), src, dst) if src is not None and dst is not None else None
            if aid is None:
                errors.append((f"/events/{i}/arcs/{j}", f"no {a['kind']} arc {a['src']} -> {a['dst']}"))
            else:
                arcs.add(aid)
        if not e.get("stages") and not e.get("arcs"):
            errors.append((f"/events/{i}", f"event {e['name']!r} has no members"))
        if any(x.name == e["name"] for x in events):
            errors.append((f"/events/{i}/name", f"duplicate event name {e['name']!r}"))
        events.append(EventDef(e["name"], frozenset(stages), frozenset(arcs), e.get("description")))

    behavior = None
    if doc.get("behavior") is not None:
        b = doc["behavior"]
        known = {e.name for e in events}
        for i, name in enumerate(b["nodes"]):
            if name not in known:
                errors.append((f"/behavior/nodes/{i}", f"no event named {name!r}"))
        behavior = BehaviorGraph(tuple(b["nodes"]))
        nodes = set(b["nodes"])
        for i, e in enumerate(b["edges"]):
            for end in ("src", "dst"):
                if e[end] not in nodes:
                    errors.append((f"/behavior/edges/{i}/{end}", f"no behavior node {e[end]!r}"))
            edge = BehaviorEdge(e["src"], e["dst"], e.get("label"))
            if edge in behavior.edges:
                errors.append((f"/behavior/edges/{i}", f"edge {e['src']} -> {e['dst']} declared twice"))
            behavior.edges.append(edge)
    if errors:
        raise SchemaError(errors)
    return model, events, behavior
