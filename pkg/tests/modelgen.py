"""Seeded generator of well-formed models, events and behavior graphs."""

import random

from tmkit.events import BehaviorEdge, BehaviorGraph, EventDef
from tmkit.model import KIND_ORDER, EXTENDED_ONLY, ArcKind, Profile, create_model

NAMES = ["Robot", "Wheels", "Camera", "Door", "Sensor", "Motor", "Storage", "Path", "A", "B", "x1",
         "_tmp", "Controller", "Handle", "stage", "thimac", "flow", "label", "process", "E1"]
TEXTS = ["", "plain", "with \"quotes\"", "back\\slash", "tab\there", "line\nbreak", "ünïcødé ✓",
         "# not a comment", "->", "{braces}"]


def random_model(seed: int, max_thimacs: int = 30):
    rng = random.Random(seed)
    profile = rng.choice(list(Profile))
    kinds = [k for k in KIND_ORDER if profile.allows(k)]
    model = create_model(profile)
    for _ in range(rng.randint(0, max_thimacs)):
        parents = [None] + list(model.thimacs)
        parent = rng.choice(parents)
        taken = {model.thimacs[c].name for c in model.children(parent)}
        free = [n for n in NAMES if n not in taken]
        if not free:
            continue
        attrs = [(rng.choice(["task", "maker", "size"]), rng.choice(TEXTS)) for _ in range(rng.randint(0, 2))]
        tid = model.add_thimac(rng.choice(free), parent, attrs)
        for kind in rng.sample(kinds, rng.randint(0, len(kinds))):
            note = rng.choice(TEXTS) if rng.random() < 0.2 else None
            model.add_stage(tid, kind, note)
    stages = list(model.stages)
    if len(stages) >= 2:
        for _ in range(rng.randint(0, 2 * len(stages))):
            src, dst = rng.sample(stages, 2)
            kind = rng.choice(list(ArcKind))
            if model.find_arc(kind, src, dst) is None:
                label = rng.choice(TEXTS) if rng.random() < 0.5 else None
                model.add_arc(kind, src, dst, label)
    events = []
    members = stages + list(model.arcs)
    for i in range(rng.randint(0, 6) if members else 0):
        chosen = rng.sample(members, rng.randint(1, min(4, len(members))))
        ev_stages = frozenset(m for m in chosen if m in model.stages)
        # an arc member selects every arc joining its two stages
        ev_arcs = set()
        for m in chosen:
            if m in model.arcs:
                a = model.arcs[m]
                ev_arcs.update(model.arcs_between(a.src, a.dst))
        desc = rng.choice(TEXTS) if rng.random() < 0.5 else None
        events.append(EventDef(f"E{i + 1}", ev_stages, frozenset(ev_arcs), desc))
    behavior = None
    if events and rng.random() < 0.8:
        behavior = BehaviorGraph(tuple(e.name for e in events))
        for _ in range(rng.randint(0, 2 * len(events))):
            a, b = rng.choice(events).name, rng.choice(events).name
            edge = BehaviorEdge(a, b, rng.choice(TEXTS) if rng.random() < 0.3 else None)
            if edge not in behavior.edges:
                behavior.edges.append(edge)
    return model, events, behavior


def signature(model, events, behavior):
    return (
        model.signature(),
        tuple(e.signature(model) for e in events),
        None if behavior is None else (behavior.nodes, tuple(behavior.edges)),
    )
