"""Events as sub-diagrams of a static model, decomposition checks, and the
behavior graph that orders events in time."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .diagnostics import Diagnostic, Severity, sort_diagnostics
from .model import StageKind, StaticModel

# A member reference: a stage path ("A.B.process"), an arc pair of stage
# paths ("A.transfer", "B.transfer") selecting every arc joining them, or a
# raw stage/arc id.
MemberRef = Union[str, tuple[str, str], int]


class EventError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class EventDef:
    name: str
    stages: frozenset[int]
    arcs: frozenset[int]
    description: Optional[str] = None

    @property
    def id(self) -> str:
        return self.name

    def signature(self, model: StaticModel) -> tuple:
        stages = tuple(sorted(model.stage_path(s) for s in self.stages))
        arcs = tuple(sorted((model.arcs[a].kind.value, model.stage_path(model.arcs[a].src),
                             model.stage_path(model.arcs[a].dst)) for a in self.arcs))
        return (self.name, self.description, stages, arcs)

    def scope(self, model: StaticModel) -> set[int]:
        """Member stages plus endpoints of member arcs."""
        out = set(self.stages)
        for aid in self.arcs:
            arc = model.arcs[aid]
            out.update((arc.src, arc.dst))
        return out


def resolve_members(model: StaticModel, members: Iterable[MemberRef]) -> tuple[set[int], set[int]]:
    stages: set[int] = set()
    arcs: set[int] = set()
    for ref in members:
        if isinstance(ref, int):
            if ref in model.stages:
                stages.add(ref)
            elif ref in model.arcs:
                arcs.add(ref)
            else:
                raise EventError("unknown-ref", f"no stage or arc with id {ref}")
        elif isinstance(ref, str):
            sid = model.resolve_stage(ref)
            if sid is None:
                raise EventError("unknown-ref", f"no stage {ref!r}")
            stages.add(sid)
        else:
            src_path, dst_path = ref
            src, dst = model.resolve_stage(src_path), model.resolve_stage(dst_path)
            found = model.arcs_between(src, dst) if src is not None and dst is not None else []
            if not found:
                raise EventError("unknown-ref", f"no arc {src_path} -> {dst_path}")
            arcs.update(found)
    return stages, arcs


def attach_event(model: StaticModel, name: str, members: Sequence[MemberRef],
                 description: Optional[str] = None,
                 events: Optional[list[EventDef]] = None) -> EventDef:
    """Build an event over ``model``.  When ``events`` is given the name is
    checked against it and the new event appended."""
    if events is not None and any(e.name == name for e in events):
        raise EventError("duplicate-event-name", f"event {name!r} already declared")
    if not members:
        raise EventError("empty-members", f"event {name!r} has no members")
    stages, arcs = resolve_members(model, members)
    event = EventDef(name, frozenset(stages), frozenset(arcs), description)
    if events is not None:
        events.append(event)
    return event


def _weakly_connected(nodes: set[int], edges: Iterable[tuple[int, int]]) -> bool:
    if len(nodes) <= 1:
        return True
    adj: dict[int, set[int]] = {n: set() for n in nodes}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    start = next(iter(nodes))
    seen = {start}
    stack = [start]
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen == nodes


def check_decomposition(model: StaticModel, events: Sequence[EventDef]) -> list[Diagnostic]:
    out = []
    owners: dict[int, list[str]] = {}
    for event in events:
        scope = event.scope(model)
        # induced subgraph: every arc of the model joining two scope stages
        edges = [(a.src, a.dst) for a in model.arcs.values() if a.src in scope and a.dst in scope]
        if not _weakly_connected(scope, edges):
            out.append(Diagnostic(Severity.WARNING, "W-EVT-DISCONNECTED",
                                  "sub-diagram is not connected", event.name))
        if not event.arcs and len(event.stages) == 1:
            (only,) = event.stages
            kind = model.stages[only].kind
            if kind is not StageKind.CREATE:
                out.append(Diagnostic(Severity.WARNING, "W-EVT-TRIVIAL",
                                      f"a lone {kind.value} stage is not a meaningful event", event.name))
        for sid in scope:
            owners.setdefault(sid, []).append(event.name)
    for sid in model.stages:
        names = owners.get(sid, [])
        if not names:
            out.append(Diagnostic(Severity.WARNING, "W-EVT-COVERAGE", "stage belongs to no event",
                                  model.stage_path(sid)))
        elif len(names) > 1:
            out.append(Diagnostic(Severity.INFO, "I-EVT-OVERLAP",
                                  "shared by " + ", ".join(sorted(names)), model.stage_path(sid)))
    return sort_diagnostics(out)


def induced_subdiagram(model: StaticModel, event: EventDef) -> StaticModel:
    scope = event.scope(model)
    keep = set()
    for sid in scope:
        keep.update(model.ancestors(model.stages[sid].owner))
    sub = StaticModel(profile=model.profile)
    tmap: dict[int, int] = {}
    for tid in model.walk():
        if tid in keep:
            t = model.thimacs[tid]
            tmap[tid] = sub.add_thimac(t.name, tmap.get(t.parent), t.attributes, t.span)
    smap: dict[int, int] = {}
    for sid in sorted(model.stages):
        if sid in scope:
            s = model.stages[sid]
            smap[sid] = sub.add_stage(tmap[s.owner], s.kind, s.note, s.span)
    for aid in sorted(event.arcs):
        a = model.arcs[aid]
        sub.add_arc(a.kind, smap[a.src], smap[a.dst], a.label, a.span)
    return sub


class BehaviorError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class BehaviorEdge:
    src: str
    dst: str
    label: Optional[str] = None


@dataclass
class BehaviorGraph:
    nodes: tuple[str, ...]
    edges: list[BehaviorEdge] = field(default_factory=list)

    @property
    def initial(self) -> list[str]:
        targets = {e.dst for e in self.edges}
        return [n for n in self.nodes if n not in targets]

    def successors(self, node: str) -> list[str]:
        return [e.dst for e in self.edges if e.src == node]

    def components(self) -> list[list[str]]:
        """Strongly connected components (Tarjan), in node order."""
        index: dict[str, int] = {}
        low: dict[str, int] = {}
        stack: list[str] = []
        on_stack: set[str] = set()
        result: list[list[str]] = []
        counter = [0]

        def strongconnect(v):
            index[v] = low[v] = counter[0]
            counter[0] += 1
            stack.append(v)
            on_stack.add(v)
            for w in self.successors(v):
                if w not in index:
                    strongconnect(w)
                    low[v] = min(low[v], low[w])
                elif w in on_stack:
                    low[v] = min(low[v], index[w])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                result.append(comp)

        for v in self.nodes:
            if v not in index:
                strongconnect(v)
        order = {n: i for i, n in enumerate(self.nodes)}
        comps = [sorted(c, key=order.__getitem__) for c in result]
        return sorted(comps, key=lambda c: order[c[0]])

    def cyclic_components(self) -> list[list[str]]:
        selfloops = {e.src for e in self.edges if e.src == e.dst}
        return [c for c in self.components() if len(c) > 1 or c[0] in selfloops]

    def diagnostics(self) -> list[Diagnostic]:
        return sort_diagnostics(
            Diagnostic(Severity.INFO, "I-BEHAVIOR-CYCLE", "cycle through " + ", ".join(c), c[0])
            for c in self.cyclic_components())


def build_behavior(events: Sequence[EventDef],
                   edges: Iterable[tuple[str, str] | tuple[str, str, Optional[str]]]) -> BehaviorGraph:
    names = tuple(e.name for e in events)
    known = set(names)
    graph = BehaviorGraph(names)
    seen = set()
    for edge in edges:
        src, dst = edge[0], edge[1]
        label = edge[2] if len(edge) > 2 else None
        for name in (src, dst):
            if name not in known:
                raise BehaviorError("unknown-event-name", f"no event named {name!r}")
        e = BehaviorEdge(src, dst, label)
        if e in seen:
            raise BehaviorError("duplicate-edge", f"edge {src} -> {dst} declared twice")
        seen.add(e)
        graph.edges.append(e)
    return graph
