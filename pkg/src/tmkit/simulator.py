"""Deterministic token-flow execution of a static model.

Time is a logical tick counter.  Within one tick the engine runs these
phases, in order:

1. stop triggers fired last tick terminate every token resident in the
   target machine's subtree;
2. every resident token, in ascending id order, advances along one outgoing
   flow arc, or terminates if its stage has none;
3. scenario injections for this tick enter the model;
4. tokens spawned by triggers fired last tick appear at their targets;
5. each trigger arc leaving a stage that received a token this tick fires
   once, scheduling a spawn (or a stop) for the next tick;
6. event activations for the tick are recorded.

Arc choice at a stage: a transfer stage sends tokens that came from outside
the machine inwards and tokens coming from inside the machine outwards, when
arcs for that role exist.  Where more than one candidate remains, the next
scenario choice label for the stage picks the arc; otherwise, or once the
labels run out, the arc with the lexicographically least destination path wins.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .diagnostics import Diagnostic, Severity, count_errors, sort_diagnostics
from .events import BehaviorGraph, EventDef
from .model import ArcKind, StageKind, StaticModel
from .validator import validate_model

STOP_LABEL = "stop"
DEFAULT_TRIGGER_THING = "triggered"
RECORD_FIELDS = ("tick", "kind", "token", "arc", "stage", "event")
RECORD_KINDS = ("inject", "spawn", "move", "trigger", "terminate", "event")


class ScenarioError(ValueError):
    """``code`` is ``invalid-scenario`` or ``validation-failed``."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Injection:
    tick: int
    stage: str
    thing: str


@dataclass
class Scenario:
    injections: list[Injection] = field(default_factory=list)
    choices: dict[str, list[str]] = field(default_factory=dict)
    max_ticks: int = 1000

    @classmethod
    def from_dict(cls, data) -> "Scenario":
        if not isinstance(data, dict):
            raise ScenarioError("invalid-scenario", "scenario must be a JSON object")
        unknown = set(data) - {"inject", "choices", "max_ticks"}
        if unknown:
            raise ScenarioError("invalid-scenario", f"unknown scenario keys: {', '.join(sorted(unknown))}")
        injections = []
        for i, item in enumerate(data.get("inject", [])):
            if not isinstance(item, dict) or set(item) != {"tick", "stage", "thing"}:
                raise ScenarioError("invalid-scenario", f"/inject/{i}: needs exactly tick, stage and thing")
            tick, stage, thing = item["tick"], item["stage"], item["thing"]
            if isinstance(tick, bool) or not isinstance(tick, int) or tick < 0:
                raise ScenarioError("invalid-scenario", f"/inject/{i}/tick: must be a non-negative integer")
            if not isinstance(stage, str) or not isinstance(thing, str):
                raise ScenarioError("invalid-scenario", f"/inject/{i}: stage and thing must be strings")
            injections.append(Injection(tick, stage, thing))
        choices = data.get("choices", {})
        if not isinstance(choices, dict):
            raise ScenarioError("invalid-scenario", "/choices: must be an object")
        for stage, labels in choices.items():
            if not isinstance(labels, list) or not labels or not all(isinstance(x, str) for x in labels):
                raise ScenarioError("invalid-scenario", f"/choices/{stage}: must be a non-empty list of strings")
        max_ticks = data.get("max_ticks", 1000)
        if isinstance(max_ticks, bool) or not isinstance(max_ticks, int) or max_ticks <= 0:
            raise ScenarioError("invalid-scenario", "/max_ticks: must be a positive integer")
        return cls(injections, {k: list(v) for k, v in choices.items()}, max_ticks)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError("invalid-scenario", f"scenario is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "inject": [{"tick": i.tick, "stage": i.stage, "thing": i.thing} for i in self.injections],
            "choices": {k: list(v) for k, v in self.choices.items()},
            "max_ticks": self.max_ticks,
        }


@dataclass
class TokenInstance:
    id: int
    thing: str
    location: Optional[int]  # None once terminated
    born_tick: int
    from_outside: bool = True


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    kind: str
    token: Optional[int] = None
    arc: Optional[int] = None
    stage: Optional[int] = None
    event: Optional[str] = None


@dataclass
class Trace:
    records: list[TraceRecord]
    first_activation: dict[str, int]
    tokens: dict[int, TokenInstance] = field(default_factory=dict, repr=False)
    model: Optional[StaticModel] = field(default=None, compare=False, repr=False)

    def activated(self) -> set[str]:
        return set(self.first_activation)

    def record_dicts(self) -> list[dict]:
        out = []
        for r in self.records:
            row = {"tick": r.tick, "kind": r.kind}
            if r.token is not None:
                row["token"] = r.token
            if r.arc is not None:
                row["arc"] = self.model.arc_path(r.arc)
            if r.stage is not None:
                row["stage"] = self.model.stage_path(r.stage)
            if r.event is not None:
                row["event"] = r.event
            out.append(row)
        return out

    def to_jsonl(self) -> str:
        return "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in self.record_dicts())


def _bind_scenario(model: StaticModel, scenario: Scenario):
    injections = []
    for inj in scenario.injections:
        sid = model.resolve_stage(inj.stage)
        if sid is None:
            raise ScenarioError("invalid-scenario", f"injection stage {inj.stage!r} does not resolve")
        if model.stages[sid].kind not in (StageKind.CREATE, StageKind.TRANSFER):
            raise ScenarioError("invalid-scenario",
                                f"injection at {inj.stage}: only create and transfer stages accept injections")
        injections.append((inj.tick, sid, inj.thing))
    choices = {}
    for path, labels in scenario.choices.items():
        sid = model.resolve_stage(path)
        if sid is None:
            raise ScenarioError("invalid-scenario", f"choice stage {path!r} does not resolve")
        if not labels:
            raise ScenarioError("invalid-scenario", f"choice list for {path} is empty")
        offered = {model.arcs[a].label for a in model.outgoing(sid, ArcKind.FLOW)}
        for label in labels:
            if label not in offered:
                raise ScenarioError("invalid-scenario", f"no flow labelled {label!r} leaves {path}")
        choices[sid] = list(labels)
    injections.sort(key=lambda x: x[0])
    return injections, choices


def run_scenario(model: StaticModel, events: Sequence[EventDef], scenario: Scenario) -> Trace:
    if count_errors(validate_model(model)):
        raise ScenarioError("validation-failed", "model has validation errors")
    injections, choices = _bind_scenario(model, scenario)
    choice_pos = {sid: 0 for sid in choices}

    flows_out = {sid: model.outgoing(sid, ArcKind.FLOW) for sid in model.stages}
    trig_out = {sid: sorted(model.outgoing(sid, ArcKind.TRIGGER),
                            key=lambda a: model.stage_path(model.arcs[a].dst))
                for sid in model.stages}
    dst_path = {aid: model.stage_path(a.dst) for aid, a in model.arcs.items()}
    cross = {aid: model.is_cross(aid) for aid in model.arcs}

    by_arc: dict[int, list[str]] = {}
    by_stage: dict[int, list[str]] = {}
    for event in events:
        for aid in event.arcs:
            by_arc.setdefault(aid, []).append(event.name)
        for sid in event.stages:
            if model.stages[sid].kind in (StageKind.CREATE, StageKind.RECEIVE):
                by_stage.setdefault(sid, []).append(event.name)
    event_order = [e.name for e in events]

    records: list[TraceRecord] = []
    first: dict[str, int] = {}
    tokens: dict[int, TokenInstance] = {}
    live: list[int] = []
    next_token = 1
    pending: list[tuple[int, str]] = []  # (trigger arc, thing) due next tick
    inj_i = 0

    def pick(tok: TokenInstance) -> Optional[int]:
        outs = flows_out[tok.location]
        if not outs:
            return None
        candidates = outs
        if model.stages[tok.location].kind is StageKind.TRANSFER:
            role = [a for a in outs if cross[a] != tok.from_outside]
            if role:
                candidates = role
        sid = tok.location
        if len(candidates) > 1 and sid in choices and choice_pos[sid] < len(choices[sid]):
            label = choices[sid][choice_pos[sid]]
            choice_pos[sid] += 1
            match = [a for a in candidates if model.arcs[a].label == label]
            if not match:
                raise ScenarioError("invalid-scenario",
                                    f"choice {label!r} at {model.stage_path(sid)} names no candidate arc")
            candidates = match
        return min(candidates, key=dst_path.__getitem__)

    for tick in range(scenario.max_ticks):
        if not live and not pending and inj_i >= len(injections):
            break
        arrivals: list[int] = []
        active: set[str] = set()

        def born(sid, thing, kind, arc=None):
            nonlocal next_token
            tok = TokenInstance(next_token, thing, sid, tick)
            next_token += 1
            tokens[tok.id] = tok
            live.append(tok.id)
            records.append(TraceRecord(tick, kind, tok.id, arc, sid))
            arrivals.append(sid)
            active.update(by_stage.get(sid, ()))

        def terminate(tok, arc=None):
            records.append(TraceRecord(tick, "terminate", tok.id, arc, tok.location))
            tok.location = None

        due, pending = pending, []
        for aid, _thing in due:
            if model.arcs[aid].label == STOP_LABEL:
                machine = model.stages[model.arcs[aid].dst].owner
                for tid in live:
                    tok = tokens[tid]
                    if tok.location is not None and model.in_subtree(model.stages[tok.location].owner, machine):
                        terminate(tok, aid)
        live = [t for t in live if tokens[t].location is not None]

        for tid in list(live):
            tok = tokens[tid]
            if tok.born_tick == tick:
                continue
            aid = pick(tok)
            if aid is None:
                terminate(tok)
                continue
            arc = model.arcs[aid]
            tok.location = arc.dst
            tok.from_outside = cross[aid]
            records.append(TraceRecord(tick, "move", tid, aid, arc.dst))
            arrivals.append(arc.dst)
            active.update(by_arc.get(aid, ()))
            if model.stages[arc.dst].kind is StageKind.RECEIVE:
                active.update(by_stage.get(arc.dst, ()))
        live = [t for t in live if tokens[t].location is not None]

        while inj_i < len(injections) and injections[inj_i][0] == tick:
            _, sid, thing = injections[inj_i]
            inj_i += 1
            born(sid, thing, "inject")

        for aid, thing in due:
            if model.arcs[aid].label != STOP_LABEL:
                born(model.arcs[aid].dst, thing, "spawn", aid)

        fired = set()
        for sid in arrivals:
            for aid in trig_out[sid]:
                if aid in fired:
                    continue
                fired.add(aid)
                arc = model.arcs[aid]
                records.append(TraceRecord(tick, "trigger", None, aid, arc.dst))
                active.update(by_arc.get(aid, ()))
                pending.append((aid, arc.label if arc.label is not None else DEFAULT_TRIGGER_THING))

        for name in event_order:
            if name in active:
                records.append(TraceRecord(tick, "event", event=name))
                first.setdefault(name, tick)

    return Trace(records, first, tokens, model)


def check_trace_conformance(trace: Trace, behavior: BehaviorGraph) -> list[Diagnostic]:
    first = trace.first_activation
    comp_of = {}
    for i, comp in enumerate(behavior.components()):
        for node in comp:
            comp_of[node] = i
    initial = behavior.initial
    out = []
    for edge in behavior.edges:
        a, b = edge.src, edge.dst
        if comp_of[a] == comp_of[b]:
            continue
        subject = f"{a}->{b}"
        if a in first and b in first and first[a] > first[b]:
            out.append(Diagnostic(Severity.ERROR, "E-BEHAVIOR-ORDER",
                                  f"{b} first activated at tick {first[b]}, before {a} at tick {first[a]}",
                                  subject))
        if b in first and a not in first and b not in _reachable_avoiding(behavior, initial, a):
            out.append(Diagnostic(Severity.ERROR, "E-BEHAVIOR-SKIP",
                                  f"{b} activated at tick {first[b]} but {a}, on every path to it, never did",
                                  subject))
    return sort_diagnostics(out)


def _reachable_avoiding(behavior: BehaviorGraph, initial: Iterable[str], avoid: str) -> set[str]:
    seen = {n for n in initial if n != avoid}
    stack = list(seen)
    while stack:
        for nxt in behavior.successors(stack.pop()):
            if nxt != avoid and nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def check_conservation(rows: Iterable[dict]) -> list[str]:
    """Replay serialized trace records and check, at the end of every tick,
    that tokens at stages plus terminated tokens equals injections plus
    spawns.  Returns human-readable violations (empty when the trace is
    consistent)."""
    where: dict[int, str] = {}
    dead: set[int] = set()
    injected = spawned = 0
    problems: list[str] = []
    last_tick = None

    def settle(tick):
        if tick is None:
            return
        if len(where) + len(dead) != injected + spawned:
            problems.append(f"tick {tick}: {len(where)} at stages + {len(dead)} terminated "
                            f"!= {injected} injected + {spawned} spawned")

    for row in rows:
        tick = row["tick"]
        if last_tick is not None and tick < last_tick:
            problems.append(f"tick {tick} after tick {last_tick}")
        if tick != last_tick:
            settle(last_tick)
            last_tick = tick
        kind = row["kind"]
        token = row.get("token")
        if kind in ("inject", "spawn"):
            if token in where or token in dead:
                problems.append(f"tick {tick}: token {token} born twice")
            where[token] = row["stage"]
            if kind == "inject":
                injected += 1
            else:
                spawned += 1
        elif kind == "move":
            src, _, dst = row["arc"].partition("->")
            if where.get(token) != src:
                problems.append(f"tick {tick}: token {token} moved along {row['arc']} from {where.get(token)}")
            if dst != row["stage"]:
                problems.append(f"tick {tick}: move of token {token} ends at {row['stage']}, arc ends at {dst}")
            where[token] = row["stage"]
        elif kind == "terminate":
            if token not in where:
                problems.append(f"tick {tick}: token {token} terminated while not live")
            else:
                del where[token]
                dead.add(token)
    settle(last_tick)
    return problems
