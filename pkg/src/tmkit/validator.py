"""Structural rules for static models.

R1 E-DUP-STAGE, R2 E-FLOW-ILLEGAL, R3 E-TRIG-SRC, R4 W-TRIG-FLOW,
R5 E-DANGLING, R6 W-ISOLATED, R7 W-UNREACHABLE-CREATE-FREE.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .diagnostics import Diagnostic, Severity, sort_diagnostics
from .model import ArcKind, Profile, StageKind, StaticModel

C, P, RL, T, RC, AR, AC = (StageKind.CREATE, StageKind.PROCESS, StageKind.RELEASE,
                           StageKind.TRANSFER, StageKind.RECEIVE, StageKind.ARRIVE,
                           StageKind.ACCEPT)

_SAME = [(RC, P), (RC, RL), (P, RL), (C, P), (C, RL), (RL, T), (T, RC)]
_CROSS = [(T, T)]
_EXTENDED_SAME = [(T, AR), (AR, AC), (AC, P), (AC, RL)]

TRIGGER_SOURCES = frozenset({StageKind.PROCESS, StageKind.CREATE})


@dataclass(frozen=True)
class LegalityMatrix:
    relation: frozenset[tuple[StageKind, StageKind, bool]]


@lru_cache(maxsize=None)
def legality_matrix(profile: Profile | str) -> LegalityMatrix:
    profile = Profile(profile)
    same = list(_SAME)
    if profile is Profile.EXTENDED:
        same += _EXTENDED_SAME
    rel = {(s, d, False) for s, d in same} | {(s, d, True) for s, d in _CROSS}
    return LegalityMatrix(frozenset(rel))


def is_legal_flow(matrix: LegalityMatrix, src: StageKind, dst: StageKind, cross: bool) -> bool:
    return (StageKind(src), StageKind(dst), bool(cross)) in matrix.relation


def _severity(profile: Profile, rule: str) -> Severity:
    if profile is Profile.LENIENT:
        if rule in ("R2", "R3"):
            return Severity.WARNING
        if rule == "R6":
            return Severity.INFO
    return Severity.ERROR if rule in ("R1", "R2", "R3", "R5") else Severity.WARNING


def validate_model(model: StaticModel) -> list[Diagnostic]:
    profile = model.profile
    matrix = legality_matrix(profile)
    out: list[Diagnostic] = []

    def emit(rule, code, subject, message, span=None):
        out.append(Diagnostic(_severity(profile, rule), code, message, subject, span))

    # R5: anything pointing nowhere
    for t in model.thimacs.values():
        if t.parent is not None and t.parent not in model.thimacs:
            emit("R5", "E-DANGLING", model.path(t.id),
                 f"parent {model.unresolved.get(t.parent, t.parent)!r} does not resolve", t.span)
    for s in model.stages.values():
        if s.owner not in model.thimacs:
            emit("R5", "E-DANGLING", model.stage_path(s.id),
                 f"owner {model.unresolved.get(s.owner, s.owner)!r} does not resolve", s.span)
    live_arcs = []
    for a in model.arcs.values():
        missing = [e for e in (a.src, a.dst) if e not in model.stages]
        if missing:
            names = ", ".join(repr(model.stage_path(e)) for e in missing)
            emit("R5", "E-DANGLING", model.arc_path(a.id),
                 f"{a.kind.value} arc endpoint {names} does not resolve", a.span)
        else:
            live_arcs.append(a)

    # R1
    for t in model.thimacs.values():
        seen = {}
        for sid in t.stages:
            kind = model.stages[sid].kind
            if kind in seen:
                emit("R1", "E-DUP-STAGE", model.stage_path(sid),
                     f"{model.path(t.id)} declares more than one {kind.value} stage", model.stages[sid].span)
            seen[kind] = sid

    owner_kinds: dict[int, set[StageKind]] = {}
    for s in model.stages.values():
        owner_kinds.setdefault(s.owner, set()).add(s.kind)

    # R2
    for a in live_arcs:
        if a.kind is not ArcKind.FLOW:
            continue
        src, dst = model.stages[a.src], model.stages[a.dst]
        cross = src.owner != dst.owner
        if not is_legal_flow(matrix, src.kind, dst.kind, cross):
            where = "across machines" if cross else "within one machine"
            emit("R2", "E-FLOW-ILLEGAL", model.arc_path(a.id),
                 f"flow {src.kind.value} -> {dst.kind.value} {where} is not permitted", a.span)
    if profile is Profile.EXTENDED:
        for s in model.stages.values():
            kinds = owner_kinds.get(s.owner, set())
            if s.kind is StageKind.RECEIVE and kinds & {StageKind.ARRIVE, StageKind.ACCEPT}:
                emit("R2", "E-FLOW-ILLEGAL", model.stage_path(s.id),
                     "receive cannot coexist with arrive/accept in one machine", s.span)

    # R3, R4
    flow_pairs = {(a.src, a.dst) for a in live_arcs if a.kind is ArcKind.FLOW}
    for a in live_arcs:
        if a.kind is not ArcKind.TRIGGER:
            continue
        src_kind = model.stages[a.src].kind
        if src_kind not in TRIGGER_SOURCES:
            emit("R3", "E-TRIG-SRC", model.arc_path(a.id),
                 f"trigger starts at a {src_kind.value} stage; only process and create may trigger", a.span)
        if (a.src, a.dst) in flow_pairs:
            emit("R4", "W-TRIG-FLOW", model.arc_path(a.id),
                 "a flow joins the same stage pair as this trigger", a.span)

    # R6
    touched = set()
    for a in live_arcs:
        touched.update((a.src, a.dst))
    for s in model.stages.values():
        if s.id not in touched:
            emit("R6", "W-ISOLATED", model.stage_path(s.id), "stage has no incident arcs", s.span)

    # R7: weakly connected components over arcs
    parent = {sid: sid for sid in touched}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in live_arcs:
        ra, rb = find(a.src), find(a.dst)
        if ra != rb:
            parent[ra] = rb
    groups: dict[int, list[int]] = {}
    for sid in touched:
        groups.setdefault(find(sid), []).append(sid)
    flow_in = {a.dst for a in live_arcs if a.kind is ArcKind.FLOW}
    for members in groups.values():
        sourced = any(
            model.stages[s].kind is StageKind.CREATE
            or (model.stages[s].kind is StageKind.TRANSFER and s not in flow_in)
            for s in members)
        if not sourced:
            first = min(members, key=model.stage_path)
            emit("R7", "W-UNREACHABLE-CREATE-FREE", model.stage_path(first),
                 f"{len(members)} connected stages contain no create stage and no open transfer",
                 model.stages[first].span)

    return sort_diagnostics(out)
