"""In-memory static model: a containment forest of thimacs, their stages, and
flow/trigger arcs between stages.

A stage is addressed by the dotted root path of its owning thimac followed by
its kind, e.g. ``Robot.Wheels.process``.  At most one stage of each kind per
thimac keeps that address unique.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .diagnostics import SourceSpan


class StageKind(enum.Enum):
    CREATE = "create"
    PROCESS = "process"
    RELEASE = "release"
    TRANSFER = "transfer"
    RECEIVE = "receive"
    ARRIVE = "arrive"
    ACCEPT = "accept"

    @property
    def order(self) -> int:
        return KIND_ORDER.index(self)


KIND_ORDER = list(StageKind)
KIND_NAMES = frozenset(k.value for k in StageKind)
EXTENDED_ONLY = frozenset({StageKind.ARRIVE, StageKind.ACCEPT})


class ArcKind(enum.Enum):
    FLOW = "flow"
    TRIGGER = "trigger"


class Profile(enum.Enum):
    STRICT = "strict"
    LENIENT = "lenient"
    EXTENDED = "extended"

    def allows(self, kind: StageKind) -> bool:
        return self is Profile.EXTENDED or kind not in EXTENDED_ONLY


class ModelError(ValueError):
    """Rejected model mutation.  ``code`` is one of the kebab-case error
    names (``duplicate-kind``, ``self-arc``, ...)."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class Thimac:
    id: int
    name: str
    parent: Optional[int]
    attributes: list[tuple[str, str]] = field(default_factory=list)
    stages: list[int] = field(default_factory=list)
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass
class StageNode:
    id: int
    owner: int
    kind: StageKind
    note: Optional[str] = None
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass
class ArcEdge:
    id: int
    kind: ArcKind
    src: int
    dst: int
    label: Optional[str] = None
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass
class StaticModel:
    profile: Profile = Profile.STRICT
    thimacs: dict[int, Thimac] = field(default_factory=dict)
    stages: dict[int, StageNode] = field(default_factory=dict)
    arcs: dict[int, ArcEdge] = field(default_factory=dict)
    # ids handed out for references that never resolved (deserialized input
    # only), mapped to the text that failed to resolve
    unresolved: dict[int, str] = field(default_factory=dict)
    _next_id: int = field(default=1, compare=False, repr=False)

    # -- construction -----------------------------------------------------

    def _fresh_id(self) -> int:
        ident = self._next_id
        self._next_id += 1
        return ident

    def add_thimac(self, name: str, parent: Optional[int] = None,
                   attributes: Iterable[tuple[str, str]] = (),
                   span: Optional[SourceSpan] = None) -> int:
        if not name:
            raise ModelError("empty-name", "thimac name must be non-empty")
        if parent is not None and parent not in self.thimacs:
            raise ModelError("unknown-parent", f"no thimac with id {parent}")
        if self.child_named(parent, name) is not None:
            where = self.path(parent) if parent is not None else "the root"
            raise ModelError("duplicate-sibling-name", f"{where} already has a child named {name!r}")
        return self._insert_thimac(name, parent, attributes, span)

    def add_stage(self, owner: int, kind: StageKind, note: Optional[str] = None,
                  span: Optional[SourceSpan] = None) -> int:
        kind = StageKind(kind)
        if owner not in self.thimacs:
            raise ModelError("unknown-owner", f"no thimac with id {owner}")
        if not self.profile.allows(kind):
            raise ModelError("kind-not-in-profile",
                             f"{kind.value} stages need the extended profile, model is {self.profile.value}")
        if self.stage_of(owner, kind) is not None:
            raise ModelError("duplicate-kind", f"{self.path(owner)} already has a {kind.value} stage")
        return self._insert_stage(owner, kind, note, span)

    def add_arc(self, kind: ArcKind, src: int, dst: int, label: Optional[str] = None,
                span: Optional[SourceSpan] = None) -> int:
        kind = ArcKind(kind)
        for end in (src, dst):
            if end not in self.stages:
                raise ModelError("unknown-endpoint", f"no stage with id {end}")
        if src == dst:
            raise ModelError("self-arc", f"arc from {self.stage_path(src)} to itself")
        if self.find_arc(kind, src, dst) is not None:
            raise ModelError("duplicate-arc",
                             f"{kind.value} {self.stage_path(src)} -> {self.stage_path(dst)} already exists")
        return self._insert_arc(kind, src, dst, label, span)

    # Unchecked inserts; used by deserializers so that broken input survives
    # long enough to be diagnosed by the validator.

    def _insert_thimac(self, name, parent, attributes=(), span=None) -> int:
        ident = self._fresh_id()
        self.thimacs[ident] = Thimac(ident, name, parent, [(str(k), str(v)) for k, v in attributes], [], span)
        return ident

    def _insert_stage(self, owner, kind, note=None, span=None) -> int:
        ident = self._fresh_id()
        self.stages[ident] = StageNode(ident, owner, StageKind(kind), note, span)
        if owner in self.thimacs:
            self.thimacs[owner].stages.append(ident)
        return ident

    def _insert_arc(self, kind, src, dst, label=None, span=None) -> int:
        ident = self._fresh_id()
        self.arcs[ident] = ArcEdge(ident, ArcKind(kind), src, dst, label, span)
        return ident

    def _unresolved_ref(self, text: str) -> int:
        ident = self._fresh_id()
        self.unresolved[ident] = text
        return ident

    # -- queries ------------------------------------------------------------

    def children(self, parent: Optional[int]) -> list[int]:
        return [t.id for t in self.thimacs.values() if t.parent == parent]

    def roots(self) -> list[int]:
        return self.children(None)

    def child_named(self, parent: Optional[int], name: str) -> Optional[int]:
        for t in self.thimacs.values():
            if t.parent == parent and t.name == name:
                return t.id
        return None

    def ancestors(self, tid: int) -> list[int]:
        """Chain from the root down to ``tid`` inclusive."""
        chain = []
        seen = set()
        cur: Optional[int] = tid
        while cur is not None and cur in self.thimacs and cur not in seen:
            seen.add(cur)
            chain.append(cur)
            cur = self.thimacs[cur].parent
        chain.reverse()
        return chain

    def in_subtree(self, tid: int, root: int) -> bool:
        return root in self.ancestors(tid)

    def path(self, tid: int) -> str:
        if tid not in self.thimacs:
            return self.unresolved.get(tid, f"?{tid}")
        chain = self.ancestors(tid)
        names = [self.thimacs[t].name for t in chain]
        top = self.thimacs[chain[0]].parent
        if top is not None:
            names.insert(0, self.unresolved.get(top, f"?{top}"))
        return ".".join(names)

    def stage_path(self, sid: int) -> str:
        stage = self.stages.get(sid)
        if stage is None:
            return self.unresolved.get(sid, f"?{sid}")
        return f"{self.path(stage.owner)}.{stage.kind.value}"

    def arc_path(self, aid: int) -> str:
        arc = self.arcs[aid]
        return f"{self.stage_path(arc.src)}->{self.stage_path(arc.dst)}"

    def stage_of(self, owner: int, kind: StageKind) -> Optional[int]:
        thimac = self.thimacs.get(owner)
        if thimac is None:
            return None
        for sid in thimac.stages:
            if self.stages[sid].kind is kind:
                return sid
        return None

    def resolve_thimac(self, path: str) -> Optional[int]:
        cur: Optional[int] = None
        for name in path.split("."):
            cur = self.child_named(cur, name)
            if cur is None:
                return None
        return cur

    def resolve_stage(self, path: str) -> Optional[int]:
        head, _, kind = path.rpartition(".")
        if not head or kind not in KIND_NAMES:
            return None
        owner = self.resolve_thimac(head)
        if owner is None:
            return None
        return self.stage_of(owner, StageKind(kind))

    def find_arc(self, kind: ArcKind, src: int, dst: int) -> Optional[int]:
        for arc in self.arcs.values():
            if arc.kind is kind and arc.src == src and arc.dst == dst:
                return arc.id
        return None

    def arcs_between(self, src: int, dst: int) -> list[int]:
        return [a.id for a in self.arcs.values() if a.src == src and a.dst == dst]

    def outgoing(self, sid: int, kind: Optional[ArcKind] = None) -> list[int]:
        return [a.id for a in self.arcs.values() if a.src == sid and (kind is None or a.kind is kind)]

    def incoming(self, sid: int, kind: Optional[ArcKind] = None) -> list[int]:
        return [a.id for a in self.arcs.values() if a.dst == sid and (kind is None or a.kind is kind)]

    def is_cross(self, aid: int) -> bool:
        arc = self.arcs[aid]
        return self.stages[arc.src].owner != self.stages[arc.dst].owner

    def walk(self) -> list[int]:
        """Thimac ids in declaration order, depth first."""
        out = []

        def visit(tid):
            out.append(tid)
            for child in self.children(tid):
                visit(child)

        for root in self.roots():
            visit(root)
        return out

    def sorted_stages(self, tid: int) -> list[int]:
        return sorted(self.thimacs[tid].stages, key=lambda s: self.stages[s].kind.order)

    def signature(self) -> tuple:
        """Id-free description of the model; two models are isomorphic
        exactly when their signatures are equal."""
        thimacs = sorted((self.path(t.id), tuple(t.attributes)) for t in self.thimacs.values())
        stages = sorted((self.stage_path(s.id), s.note or "", s.note is None) for s in self.stages.values())
        arcs = sorted((a.kind.value, self.stage_path(a.src), self.stage_path(a.dst), a.label or "", a.label is None)
                      for a in self.arcs.values())
        return (self.profile.value, tuple(thimacs), tuple(stages), tuple(arcs))


def create_model(profile: Profile | str = Profile.STRICT) -> StaticModel:
    return StaticModel(profile=Profile(profile))


@dataclass(frozen=True)
class ComponentView:
    """Thimac-level picture of a model with every stage removed.

    ``edges`` maps an unordered pair of thimac ids, stored as a tuple ordered
    by path, to the arc kinds that induced it.
    """

    nodes: tuple[int, ...]
    edges: dict[tuple[int, int], frozenset[ArcKind]]
    parents: dict[int, Optional[int]]

    def top_level(self) -> list[int]:
        return [n for n in self.nodes if self.parents[n] is None]


def _lift(model: StaticModel, a: int, b: int) -> Optional[tuple[int, int]]:
    if a == b:
        return None
    ca, cb = model.ancestors(a), model.ancestors(b)
    i = 0
    while i < len(ca) and i < len(cb) and ca[i] == cb[i]:
        i += 1
    # one side is an ancestor of the other: the edge joins it to the child
    # that leads towards the descendant
    x = ca[i] if i < len(ca) else ca[-1]
    y = cb[i] if i < len(cb) else cb[-1]
    return (x, y)


def extract_components(model: StaticModel) -> ComponentView:
    owning = {s.owner for s in model.stages.values() if s.owner in model.thimacs}
    keep = set()
    for tid in owning:
        keep.update(model.ancestors(tid))
    nodes = tuple(sorted(keep, key=model.path))
    edges: dict[tuple[int, int], set[ArcKind]] = {}
    for arc in model.arcs.values():
        src, dst = model.stages.get(arc.src), model.stages.get(arc.dst)
        if src is None or dst is None:
            continue
        pair = _lift(model, src.owner, dst.owner)
        if pair is None:
            continue
        key = tuple(sorted(pair, key=model.path))
        edges.setdefault(key, set()).add(arc.kind)
    frozen = {k: frozenset(edges[k]) for k in sorted(edges, key=lambda p: (model.path(p[0]), model.path(p[1])))}
    return ComponentView(nodes, frozen, {n: model.thimacs[n].parent for n in nodes})
