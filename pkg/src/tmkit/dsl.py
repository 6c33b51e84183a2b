"""Textual syntax for static models, events and behavior graphs.

::

    model      := item* ;
    item       := thimac | arc | event | behavior ;
    thimac     := "thimac" IDENT "{" (attr | stageDecl | thimac)* "}" ;
    attr       := "attr" IDENT "=" STRING ;
    stageDecl  := "stage" KIND STRING? ;
    arc        := ("flow" | "trigger") PATH "->" PATH ("label" STRING)? ;
    PATH       := IDENT ("." IDENT)* "." KIND ;
    event      := "event" IDENT STRING? "{" ("stage" PATH | "arc" PATH "->" PATH)* "}" ;
    behavior   := "behavior" "{" (IDENT "->" IDENT ("label" STRING)?)* "}" ;

``#`` starts a comment that runs to the end of the line.  Parsing never
raises: every problem becomes a located diagnostic and the parser resumes at
the next item (or the next member inside a block).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .diagnostics import Diagnostic, Severity, SourceSpan, count_errors
from .events import BehaviorEdge, BehaviorGraph, EventDef, EventError, attach_event
from .model import KIND_NAMES, ArcKind, ModelError, Profile, StageKind, StaticModel, create_model

ITEM_KEYWORDS = frozenset({"thimac", "flow", "trigger", "event", "behavior"})
THIMAC_MEMBERS = frozenset({"attr", "stage", "thimac"})
EVENT_MEMBERS = frozenset({"stage", "arc"})

_MODEL_CODES = {
    "duplicate-sibling-name": "E-DUP-NAME",
    "duplicate-kind": "E-DUP-STAGE",
    "kind-not-in-profile": "E-PROFILE-KIND",
    "unknown-endpoint": "E-REF-UNKNOWN",
    "unknown-owner": "E-REF-UNKNOWN",
    "unknown-parent": "E-REF-UNKNOWN",
    "self-arc": "E-SELF-ARC",
    "duplicate-arc": "E-DUP-ARC",
    "empty-name": "E-SYNTAX",
    "unknown-ref": "E-REF-UNKNOWN",
    "duplicate-event-name": "E-DUP-EVENT",
    "empty-members": "E-EVT-EMPTY",
}


# -- lexing -------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # IDENT STRING LBRACE RBRACE EQ ARROW DOT ERROR EOF
    value: str
    line: int
    col: int
    length: int

    def describe(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        if self.kind == "STRING":
            return "a string"
        return repr(self.value)


_PUNCT = {"{": "LBRACE", "}": "RBRACE", "=": "EQ", ".": "DOT"}
_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}


def tokenize(source: str) -> list[Token]:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch in " \t\r\f\v":
            i, col = i + 1, col + 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isascii() and (ch.isalpha() or ch == "_"):
            j = i + 1
            while j < n and source[j].isascii() and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(Token("IDENT", source[i:j], line, start_col, j - i))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            chars = []
            problem = None
            while True:
                if j >= n or source[j] == "\n":
                    problem = "unterminated string"
                    break
                c = source[j]
                if c == '"':
                    j += 1
                    break
                if c == "\\":
                    if j + 1 < n and source[j + 1] in _ESCAPES:
                        chars.append(_ESCAPES[source[j + 1]])
                        j += 2
                        continue
                    problem = problem or f"unknown escape in string at column {col + (j - i)}"
                    j += 2 if j + 1 < n and source[j + 1] != "\n" else 1
                    continue
                chars.append(c)
                j += 1
            if problem:
                tokens.append(Token("ERROR", problem, line, start_col, j - i))
            else:
                tokens.append(Token("STRING", "".join(chars), line, start_col, j - i))
            col += j - i
            i = j
            continue
        if source.startswith("->", i):
            tokens.append(Token("ARROW", "->", line, start_col, 2))
            i, col = i + 2, col + 2
            continue
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, line, start_col, 1))
            i, col = i + 1, col + 1
            continue
        tokens.append(Token("ERROR", f"unexpected character {ch!r}", line, start_col, 1))
        i, col = i + 1, col + 1
    tokens.append(Token("EOF", "", line, col, 0))
    return tokens


# -- syntax tree ----------------------------------------------------------------

@dataclass
class PathRef:
    owner: tuple[str, ...]
    kind: str
    span: SourceSpan

    @property
    def text(self) -> str:
        return ".".join(self.owner) + "." + self.kind


@dataclass
class ThimacDecl:
    name: str
    span: SourceSpan
    attrs: list[tuple[str, str]] = field(default_factory=list)
    stages: list[tuple[str, Optional[str], SourceSpan]] = field(default_factory=list)
    children: list["ThimacDecl"] = field(default_factory=list)


@dataclass
class ArcDecl:
    kind: str
    src: PathRef
    dst: PathRef
    label: Optional[str]
    span: SourceSpan


@dataclass
class EventDecl:
    name: str
    description: Optional[str]
    members: list  # ("stage", PathRef) | ("arc", PathRef, PathRef)
    span: SourceSpan
    broken: bool = False  # some member failed to parse


@dataclass
class BehaviorDecl:
    edges: list[tuple[str, str, Optional[str], SourceSpan]]
    span: SourceSpan


class _Abort(Exception):
    def __init__(self, diag: Diagnostic):
        super().__init__(diag.message)
        self.diag = diag


class _Parser:
    def __init__(self, source: str, filename: str):
        self.toks = tokenize(source)
        self.pos = 0
        self.file = filename
        self.diags: list[Diagnostic] = []
        # paths and event names touched by malformed input; missing
        # references to them are consequences of an error already reported
        self.poisoned: set[str] = set()
        self.poisoned_events: set[str] = set()
        self.scope: list[str] = []

    # helpers

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def advance(self) -> Token:
        tok = self.peek()
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def span(self, tok: Token) -> SourceSpan:
        return SourceSpan(self.file, tok.line, tok.col, tok.length)

    def error(self, tok: Token, message: str) -> Diagnostic:
        if tok.kind == "ERROR":
            message = tok.value
        subject = tok.value if tok.kind == "IDENT" else tok.describe()
        return Diagnostic(Severity.ERROR, "E-SYNTAX", message, subject, self.span(tok))

    def fail(self, expected: str):
        tok = self.peek()
        diag = self.error(tok, f"expected {expected}, found {tok.describe()}")
        prev = self.toks[self.pos - 1] if self.pos > 0 else None
        if prev is not None and tok.line > prev.line:
            # point just past the last good token rather than at the next line
            end = SourceSpan(self.file, prev.line, prev.col + prev.length, 0)
            diag = Diagnostic(diag.severity, diag.code, diag.message, diag.subject, end)
        raise _Abort(diag)

    def expect(self, kind: str, expected: str) -> Token:
        if self.peek().kind != kind:
            self.fail(expected)
        return self.advance()

    def is_word(self, words, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok.kind == "IDENT" and tok.value in words

    def expect_word(self, word: str) -> Token:
        if not self.is_word({word}):
            self.fail(repr(word))
        return self.advance()

    # recovery

    def sync(self, stop_words, *, stop_at_close: bool, line_after: Optional[int] = None):
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "EOF":
                return
            if depth == 0:
                if tok.kind == "IDENT" and (tok.value in stop_words or tok.value in ITEM_KEYWORDS):
                    if line_after is None or tok.line > line_after:
                        return
                if tok.kind == "RBRACE" and stop_at_close:
                    return
                if line_after is not None and tok.line > line_after and tok.kind == "IDENT":
                    return
            if tok.kind == "LBRACE":
                depth += 1
            elif tok.kind == "RBRACE" and depth > 0:
                depth -= 1
            self.advance()

    def poison_range(self, start: int, end: int):
        parts: list[str] = []
        for tok in self.toks[start:end] + [Token("EOF", "", 0, 0, 0)]:
            if tok.kind == "IDENT" and (not parts or parts[-1] == "."):
                parts.append(tok.value)
            elif tok.kind == "DOT" and parts and parts[-1] != ".":
                parts.append(".")
            else:
                text = "".join(parts).rstrip(".")
                if "." in text:
                    self.poisoned.add(text)
                parts = [tok.value] if tok.kind == "IDENT" else []

    # grammar

    def parse(self) -> list:
        items = []
        while self.peek().kind != "EOF":
            if self.is_word(ITEM_KEYWORDS):
                start = self.pos
                try:
                    items.append(self.item())
                except _Abort as exc:
                    self.diags.append(exc.diag)
                    if self.pos == start:
                        self.advance()
                    self.sync((), stop_at_close=False)
                    self.poison_range(start, self.pos)
            else:
                tok = self.advance()
                self.diags.append(self.error(tok, f"expected an item (thimac, flow, trigger, event, behavior), "
                                                  f"found {tok.describe()}"))
                self.sync((), stop_at_close=False)
        return items

    def item(self):
        word = self.peek().value
        if word == "thimac":
            return self.thimac()
        if word in ("flow", "trigger"):
            return self.arc()
        if word == "event":
            return self.event()
        return self.behavior()

    def ident(self, what: str) -> Token:
        return self.expect("IDENT", what)

    def path(self) -> PathRef:
        first = self.ident("a stage path")
        parts = [first]
        while self.peek().kind == "DOT":
            self.advance()
            parts.append(self.ident("a name after '.'"))
        last = parts[-1]
        end = last.col + last.length
        span = SourceSpan(self.file, first.line, first.col, max(0, end - first.col) if last.line == first.line else first.length)
        if len(parts) < 2 or last.value not in KIND_NAMES:
            raise _Abort(Diagnostic(Severity.ERROR, "E-SYNTAX",
                                    "stage path must end in a stage kind (create, process, release, "
                                    "transfer, receive, arrive, accept)",
                                    ".".join(p.value for p in parts), span))
        return PathRef(tuple(p.value for p in parts[:-1]), last.value, span)

    def thimac(self) -> ThimacDecl:
        head = self.expect_word("thimac")
        name = self.ident("a thimac name")
        self.scope.append(name.value)
        try:
            return self.thimac_body(head, name)
        except _Abort:
            self.poisoned.add(".".join(self.scope))
            raise
        finally:
            self.scope.pop()

    def thimac_body(self, head: Token, name: Token) -> ThimacDecl:
        decl = ThimacDecl(name.value, self.span(name))
        self.expect("LBRACE", "'{'")
        while True:
            tok = self.peek()
            if tok.kind == "RBRACE":
                self.advance()
                return decl
            if tok.kind == "EOF":
                raise _Abort(self.error(head, f"thimac {name.value} is missing its closing '}}'"))
            if self.is_word(THIMAC_MEMBERS):
                start = self.pos
                try:
                    self.thimac_member(decl)
                except _Abort as exc:
                    self.diags.append(exc.diag)
                    self.poisoned.add(".".join(self.scope))
                    if self.pos == start:
                        self.advance()
                    self.sync(THIMAC_MEMBERS, stop_at_close=True)
            elif self.is_word(ITEM_KEYWORDS):
                raise _Abort(self.error(tok, f"expected '}}' to close thimac {name.value}, found {tok.describe()}"))
            else:
                self.advance()
                self.diags.append(self.error(tok, f"expected attr, stage or thimac, found {tok.describe()}"))
                self.poisoned.add(".".join(self.scope))
                self.sync(THIMAC_MEMBERS, stop_at_close=True)

    def thimac_member(self, decl: ThimacDecl):
        word = self.peek().value
        if word == "thimac":
            decl.children.append(self.thimac())
        elif word == "attr":
            self.advance()
            key = self.ident("an attribute name")
            self.expect("EQ", "'='")
            value = self.expect("STRING", "a quoted attribute value")
            decl.attrs.append((key.value, value.value))
        else:
            self.advance()
            kind = self.peek()
            if kind.kind != "IDENT" or kind.value not in KIND_NAMES:
                self.fail("a stage kind")
            self.advance()
            note = self.advance().value if self.peek().kind == "STRING" else None
            decl.stages.append((kind.value, note, self.span(kind)))

    def arc(self) -> ArcDecl:
        kw = self.advance()
        src = self.path()
        self.expect("ARROW", "'->'")
        dst = self.path()
        label = None
        if self.is_word({"label"}):
            self.advance()
            label = self.expect("STRING", "a quoted label").value
        return ArcDecl(kw.value, src, dst, label, self.span(kw))

    def event(self) -> EventDecl:
        kw = self.advance()
        name = self.ident("an event name")
        desc = self.advance().value if self.peek().kind == "STRING" else None
        decl = EventDecl(name.value, desc, [], self.span(name))
        try:
            return self.event_body(kw, name, decl)
        except _Abort:
            self.poisoned_events.add(name.value)
            raise

    def event_body(self, kw: Token, name: Token, decl: EventDecl) -> EventDecl:
        self.expect("LBRACE", "'{'")
        while True:
            tok = self.peek()
            if tok.kind == "RBRACE":
                self.advance()
                return decl
            if tok.kind == "EOF":
                raise _Abort(self.error(kw, f"event {name.value} is missing its closing '}}'"))
            if self.is_word(EVENT_MEMBERS):
                start = self.pos
                try:
                    if self.advance().value == "stage":
                        decl.members.append(("stage", self.path()))
                    else:
                        src = self.path()
                        self.expect("ARROW", "'->'")
                        decl.members.append(("arc", src, self.path()))
                except _Abort as exc:
                    self.diags.append(exc.diag)
                    decl.broken = True
                    if self.pos == start:
                        self.advance()
                    self.sync(EVENT_MEMBERS, stop_at_close=True)
            elif self.is_word(ITEM_KEYWORDS):
                raise _Abort(self.error(tok, f"expected '}}' to close event {name.value}, found {tok.describe()}"))
            else:
                self.advance()
                self.diags.append(self.error(tok, f"expected stage or arc, found {tok.describe()}"))
                decl.broken = True
                self.sync(EVENT_MEMBERS, stop_at_close=True)

    def behavior(self) -> BehaviorDecl:
        kw = self.advance()
        decl = BehaviorDecl([], self.span(kw))
        self.expect("LBRACE", "'{'")
        while True:
            tok = self.peek()
            if tok.kind == "RBRACE":
                self.advance()
                return decl
            if tok.kind == "EOF":
                raise _Abort(self.error(kw, "behavior block is missing its closing '}'"))
            start = self.pos
            try:
                src = self.ident("an event name")
                self.expect("ARROW", "'->'")
                dst = self.ident("an event name")
                label = None
                if self.is_word({"label"}):
                    self.advance()
                    label = self.expect("STRING", "a quoted label").value
                decl.edges.append((src.value, dst.value, label, self.span(src)))
            except _Abort as exc:
                self.diags.append(exc.diag)
                if self.pos == start:
                    self.advance()
                self.sync((), stop_at_close=True, line_after=tok.line)


# -- building ---------------------------------------------------------------------

@dataclass
class ParseResult:
    model: Optional[StaticModel]
    events: list[EventDef] = field(default_factory=list)
    behavior: Optional[BehaviorGraph] = None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.model is not None


def _semantic(code: str, message: str, subject: str, span: SourceSpan) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, message, subject, span)


def _build(items: list, profile: Profile, diags: list[Diagnostic],
           poisoned: frozenset = frozenset(), poisoned_events: frozenset = frozenset()):
    model = create_model(profile)

    def tainted(text: str) -> bool:
        return any(text == p or text.startswith(p + ".") for p in poisoned)

    def add(decl: ThimacDecl, parent):
        try:
            tid = model.add_thimac(decl.name, parent, decl.attrs, decl.span)
        except ModelError as exc:
            where = (model.path(parent) + "." if parent is not None else "") + decl.name
            diags.append(_semantic(_MODEL_CODES[exc.code], str(exc), where, decl.span))
            return
        model.thimacs[tid].span = decl.span
        for kind, note, span in decl.stages:
            try:
                model.add_stage(tid, StageKind(kind), note, span)
            except ModelError as exc:
                diags.append(_semantic(_MODEL_CODES[exc.code], str(exc), f"{model.path(tid)}.{kind}", span))
        for child in decl.children:
            add(child, tid)

    for item in items:
        if isinstance(item, ThimacDecl):
            add(item, None)

    def stage(ref: PathRef) -> Optional[int]:
        sid = model.resolve_stage(ref.text)
        if sid is None and not tainted(ref.text):
            diags.append(_semantic("E-REF-UNKNOWN", f"no stage {ref.text}", ref.text, ref.span))
        return sid

    for item in items:
        if isinstance(item, ArcDecl):
            src, dst = stage(item.src), stage(item.dst)
            if src is None or dst is None:
                continue
            try:
                model.add_arc(ArcKind(item.kind), src, dst, item.label, item.span)
            except ModelError as exc:
                diags.append(_semantic(_MODEL_CODES[exc.code], str(exc),
                                       f"{item.src.text}->{item.dst.text}", item.span))

    events: list[EventDef] = []
    for item in items:
        if not isinstance(item, EventDecl):
            continue
        refs = []
        bad = False
        for member in item.members:
            if member[0] == "stage":
                if stage(member[1]) is None:
                    bad = True
                refs.append(member[1].text)
            else:
                src, dst = stage(member[1]), stage(member[2])
                if src is None or dst is None:
                    bad = True
                elif not model.arcs_between(src, dst):
                    if not (tainted(member[1].text) or tainted(member[2].text)):
                            diags.append(_semantic("E-REF-UNKNOWN", f"no arc {member[1].text} -> {member[2].text}",
                                               f"{member[1].text}->{member[2].text}", member[1].span))
                    bad = True
                refs.append((member[1].text, member[2].text))
        if bad or (item.broken and not refs):
            continue
        try:
            attach_event(model, item.name, refs, item.description, events)
        except EventError as exc:
            diags.append(_semantic(_MODEL_CODES[exc.code], str(exc), item.name, item.span))

    behavior = None
    blocks = [item for item in items if isinstance(item, BehaviorDecl)]
    if blocks:
        known = {e.name for e in events}
        declared = {item.name for item in items if isinstance(item, EventDecl)}
        behavior = BehaviorGraph(tuple(e.name for e in events))
        seen = set()
        for block in blocks:
            for src, dst, label, span in block.edges:
                missing = [n for n in (src, dst) if n not in declared]
                if any(n in poisoned_events for n in missing):
                    continue
                if missing:
                    diags.append(_semantic("E-UNKNOWN-EVENT", f"no event named {missing[0]}", missing[0], span))
                    continue
                if src not in known or dst not in known:
                    continue  # the event itself was rejected above
                edge = BehaviorEdge(src, dst, label)
                if edge in seen:
                    diags.append(_semantic("E-DUP-EDGE", f"edge {src} -> {dst} declared twice", src, span))
                    continue
                seen.add(edge)
                behavior.edges.append(edge)
    return model, events, behavior


def parse_model(source: str, profile: Profile | str = Profile.STRICT, filename: str = "<input>") -> ParseResult:
    parser = _Parser(source, filename)
    items = parser.parse()
    diags = parser.diags
    model, events, behavior = _build(items, Profile(profile), diags,
                                     frozenset(parser.poisoned), frozenset(parser.poisoned_events))
    diags.sort(key=lambda d: (d.span.line, d.span.column) if d.span else (0, 0))
    if count_errors(diags):
        return ParseResult(None, [], None, diags)
    return ParseResult(model, events, behavior, diags)


def parse_file(path, profile: Profile | str = Profile.STRICT) -> ParseResult:
    path = Path(path)
    return parse_model(path.read_text(encoding="utf-8"), profile, str(path.name))


# -- formatting ---------------------------------------------------------------------

def quote(text: str) -> str:
    out = text.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
    return f'"{out}"'


def _format_thimac(model: StaticModel, tid: int, depth: int, lines: list[str]):
    pad = "  " * depth
    t = model.thimacs[tid]
    lines.append(f"{pad}thimac {t.name} {{")
    for key, value in t.attributes:
        lines.append(f"{pad}  attr {key} = {quote(value)}")
    for sid in model.sorted_stages(tid):
        s = model.stages[sid]
        note = f" {quote(s.note)}" if s.note is not None else ""
        lines.append(f"{pad}  stage {s.kind.value}{note}")
    for child in model.children(tid):
        _format_thimac(model, child, depth + 1, lines)
    lines.append(f"{pad}}}")


def format_model(model: StaticModel, events: Sequence[EventDef] = (),
                 behavior: Optional[BehaviorGraph] = None) -> str:
    sections: list[list[str]] = []
    for root in model.roots():
        block: list[str] = []
        _format_thimac(model, root, 0, block)
        sections.append(block)

    arcs = sorted(model.arcs.values(),
                  key=lambda a: (a.kind.value, model.stage_path(a.src), model.stage_path(a.dst)))
    if arcs:
        block = []
        for a in arcs:
            label = f" label {quote(a.label)}" if a.label is not None else ""
            block.append(f"{a.kind.value} {model.stage_path(a.src)} -> {model.stage_path(a.dst)}{label}")
        sections.append(block)

    for event in events:
        desc = f" {quote(event.description)}" if event.description is not None else ""
        block = [f"event {event.name}{desc} {{"]
        for path in sorted(model.stage_path(s) for s in event.stages):
            block.append(f"  stage {path}")
        pairs = sorted({(model.stage_path(model.arcs[a].src), model.stage_path(model.arcs[a].dst))
                        for a in event.arcs})
        for src, dst in pairs:
            block.append(f"  arc {src} -> {dst}")
        block.append("}")
        sections.append(block)

    if behavior is not None:
        block = ["behavior {"]
        for e in behavior.edges:
            label = f" label {quote(e.label)}" if e.label is not None else ""
            block.append(f"  {e.src} -> {e.dst}{label}")
        block.append("}")
        sections.append(block)

    if not sections:
        return ""
    return "\n\n".join("\n".join(block) for block in sections) + "\n"
