"""Concrete syntax readers and writers for the textual formats."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .core import (
    Action,
    Arm,
    Branch,
    Direction,
    End,
    Fsm,
    GlobalType,
    LocalType,
    Msg,
    Rec,
    Select,
    Var,
)


class ErrorKind(enum.Enum):
    LEX = "Lex"
    PARSE = "Parse"
    VALIDATION = "Validation"


class SourceError(Exception):
    def __init__(self, kind: ErrorKind, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {kind.value} error: {message}")
        self.kind = kind
        self.line = line
        self.column = column
        self.message = message


@dataclass(frozen=True)
class Token:
    kind: str  # "id", "num", "str", "punct", "eof"
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<num>[0-9]+)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<punct>->|[{}()\[\];,.!?=:])
    """,
    re.VERBOSE | re.DOTALL,
)


def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            line, col = _position(text, pos)
            raise SourceError(ErrorKind.LEX, line, col, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            line, col = _position(text, pos)
            value = m.group()
            if kind == "str":
                value = bytes(value[1:-1], "utf-8").decode("unicode_escape")
            tokens.append(Token(kind, value, line, col))
        pos = m.end()
    line, col = _position(text, len(text))
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def error(self, message: str, tok: Token | None = None, kind=ErrorKind.PARSE):
        tok = tok or self.tok
        return SourceError(kind, tok.line, tok.column, message)

    def invalid(self, message: str, tok: Token):
        return self.error(message, tok, ErrorKind.VALIDATION)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "id") and self.tok.text == text

    def advance(self) -> Token:
        tok = self.tok
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "id":
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what}, found {found!r}")
        return self.advance()

    def expect_eof(self):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r} after end of term")

    def optional_sort(self) -> str | None:
        if not self.at("("):
            return None
        self.advance()
        if self.at(")"):
            self.advance()
            return None
        sort = self.ident("sort").text
        self.expect(")")
        return sort


# -- local types ------------------------------------------------------------

_KEYWORDS = {"rec", "end"}


def parse_local(text: str) -> LocalType:
    """Parse the compact local-type grammar.

    ``end | X | rec X . T | P!l(S).T | P?l(S).T | P!{ l(S).T, ... } | P?{ ... }``
    """
    p = _Parser(text)
    term = _local(p, (), frozenset())
    p.expect_eof()
    return term


def _local(p: _Parser, bound: tuple[str, ...], unguarded: frozenset[str]) -> LocalType:
    tok = p.tok
    if p.at("end"):
        p.advance()
        return End()
    if p.at("rec"):
        p.advance()
        name_tok = p.ident("recursion variable")
        name = name_tok.text
        if name in _KEYWORDS:
            raise p.error(f"{name!r} is reserved", name_tok)
        if name in bound:
            raise p.invalid(f"recursion variable {name!r} shadows an outer binding", name_tok)
        p.expect(".")
        body = _local(p, bound + (name,), unguarded | {name})
        return Rec(name, body)
    if tok.kind == "id" and p.peek().text in ("!", "?") and p.peek().kind == "punct":
        peer = p.advance().text
        direction = Direction(p.advance().text)
        cls = Select if direction is Direction.SEND else Branch
        if p.at("{"):
            p.advance()
            items = [_local_arm(p, bound)]
            while p.at(","):
                p.advance()
                items.append(_local_arm(p, bound))
            p.expect("}")
        else:
            items = [_local_arm(p, bound)]
        _check_labels(p, items)
        return cls(peer, tuple(arm for arm, _ in items))
    if tok.kind == "id":
        p.advance()
        if tok.text not in bound:
            raise p.invalid(f"unbound variable {tok.text!r}", tok)
        if tok.text in unguarded:
            raise p.invalid(f"non-contractive recursion on {tok.text!r}", tok)
        return Var(tok.text)
    raise p.error(f"expected a local type, found {tok.text or 'end of input'!r}")


def _local_arm(p: _Parser, bound):
    label_tok = p.ident("label")
    sort = p.optional_sort()
    p.expect(".")
    cont = _local(p, bound, frozenset())
    return Arm(label_tok.text, sort, cont), label_tok


def _check_labels(p: _Parser, items):
    seen = set()
    for arm, tok in items:
        if arm.label in seen:
            raise p.invalid(f"duplicate label {arm.label!r}", tok)
        seen.add(arm.label)


def _sort_suffix(sort: str | None) -> str:
    return f"({sort})" if sort is not None else ""


def format_local(term: LocalType) -> str:
    if isinstance(term, End):
        return "end"
    if isinstance(term, Var):
        return term.name
    if isinstance(term, Rec):
        return f"rec {term.var} . {format_local(term.body)}"
    mark = term.direction.value
    rendered = [f"{a.label}{_sort_suffix(a.sort)} . {format_local(a.cont)}" for a in term.arms]
    if len(rendered) == 1:
        return f"{term.peer}{mark}{rendered[0]}"
    return f"{term.peer}{mark}{{ {', '.join(rendered)} }}"


# -- global protocols -------------------------------------------------------


@dataclass(frozen=True)
class Protocol:
    name: str
    roles: tuple[str, ...]
    body: GlobalType


def parse_global(text: str) -> Protocol:
    """Parse ``global protocol Name(role A, ...) { ... }``."""
    p = _Parser(text)
    p.expect("global")
    p.expect("protocol")
    name = p.ident("protocol name").text
    p.expect("(")
    roles: list[str] = []
    while True:
        p.expect("role")
        role_tok = p.ident("role name")
        if role_tok.text in roles:
            raise p.invalid(f"role {role_tok.text!r} declared twice", role_tok)
        roles.append(role_tok.text)
        if p.at(","):
            p.advance()
            continue
        break
    p.expect(")")
    p.expect("{")
    ctx = _GlobalCtx(p, tuple(roles))
    body = ctx.sequence(ctx.block_statements(()), End(), frozenset())
    p.expect("}")
    p.expect_eof()
    return Protocol(name, tuple(roles), body)


class _GlobalCtx:
    def __init__(self, p: _Parser, roles: tuple[str, ...]):
        self.p = p
        self.roles = roles

    def role(self) -> str:
        tok = self.p.ident("role name")
        if tok.text not in self.roles:
            raise self.p.invalid(f"undeclared role {tok.text!r}", tok)
        return tok.text

    def statement(self, bound):
        p = self.p
        tok = p.tok
        if p.at("choice"):
            p.advance()
            p.expect("at")
            chooser_tok = p.tok
            chooser = self.role()
            blocks = []
            while True:
                p.expect("{")
                blocks.append((p.tok, self.block_statements(bound)))
                p.expect("}")
                if p.at("or"):
                    p.advance()
                    continue
                break
            return ("choice", tok, chooser, chooser_tok, blocks)
        if p.at("rec"):
            p.advance()
            name_tok = p.ident("recursion variable")
            if name_tok.text in bound:
                raise p.invalid(
                    f"recursion variable {name_tok.text!r} shadows an outer binding", name_tok
                )
            p.expect("{")
            inner = self.block_statements(bound + (name_tok.text,))
            p.expect("}")
            return ("rec", tok, name_tok.text, inner)
        if p.at("continue"):
            p.advance()
            name_tok = p.ident("recursion variable")
            if name_tok.text not in bound:
                raise p.invalid(f"unbound 'continue {name_tok.text}'", name_tok)
            p.expect(";")
            return ("continue", name_tok, name_tok.text)
        label_tok = p.ident("message label")
        p.expect("(")
        sort = None
        if not p.at(")"):
            sort = p.ident("sort").text
        p.expect(")")
        p.expect("from")
        sender_tok = p.tok
        sender = self.role()
        p.expect("to")
        receiver = self.role()
        if sender == receiver:
            raise p.invalid(f"role {sender!r} sends a message to itself", sender_tok)
        p.expect(";")
        return ("msg", label_tok, label_tok.text, sort, sender, receiver)

    def block_statements(self, bound):
        p = self.p
        stmts = []
        while not p.at("}") and p.tok.kind != "eof":
            stmts.append(self.statement(bound))
            if stmts[-1][0] == "continue" and not p.at("}"):
                raise p.error("statements after 'continue' are unreachable")
        return stmts

    def sequence(self, stmts, cont, unguarded):
        """Fold statements right-to-left onto the continuation ``cont``."""
        result = cont
        for index in range(len(stmts) - 1, -1, -1):
            result = self._one(stmts[index], result, unguarded if index == 0 else frozenset())
        return result

    def _one(self, stmt, cont, unguarded):
        p = self.p
        kind = stmt[0]
        if kind == "msg":
            _, _, label, sort, sender, receiver = stmt
            return Msg(sender, receiver, (Arm(label, sort, cont),))
        if kind == "continue":
            _, tok, name = stmt
            if name in unguarded:
                raise p.invalid(f"non-contractive recursion on {name!r}", tok)
            return Var(name)
        if kind == "rec":
            _, tok, name, inner = stmt
            if not inner:
                raise p.invalid(f"empty recursion body for {name!r}", tok)
            body = self.sequence(inner, cont, unguarded | {name})
            return Rec(name, body)
        _, tok, chooser, chooser_tok, blocks = stmt
        arms = []
        receiver = None
        labels = set()
        for block_tok, inner in blocks:
            if not inner or inner[0][0] != "msg":
                raise p.invalid(f"choice branch must begin with a message from {chooser!r}", block_tok)
            head = inner[0]
            _, label_tok, label, sort, sender, to = head
            if sender != chooser:
                raise p.invalid(
                    f"choice branch must begin with a message from {chooser!r}", label_tok
                )
            if receiver is None:
                receiver = to
            elif to != receiver:
                raise p.invalid("choice branches must address a common receiver", label_tok)
            if label in labels:
                raise p.invalid(f"duplicate label {label!r} in choice", label_tok)
            labels.add(label)
            rest = self.sequence(inner[1:], cont, frozenset())
            arms.append(Arm(label, sort, rest))
        return Msg(chooser, receiver, tuple(arms))


def format_global(g: GlobalType) -> str:
    if isinstance(g, End):
        return "end"
    if isinstance(g, Var):
        return g.name
    if isinstance(g, Rec):
        return f"rec {g.var} . {format_global(g.body)}"
    rendered = [f"{a.label}{_sort_suffix(a.sort)} . {format_global(a.cont)}" for a in g.arms]
    inner = rendered[0] if len(rendered) == 1 else "{ " + ", ".join(rendered) + " }"
    return f"{g.sender}->{g.receiver}:{inner}"


# -- DOT --------------------------------------------------------------------

_EDGE_LABEL_RE = re.compile(
    r"^([A-Za-z_][A-Za-z0-9_]*)([!?])([A-Za-z_][A-Za-z0-9_]*)(?:\(([A-Za-z_][A-Za-z0-9_]*)?\))?$"
)


def parse_action(text: str) -> Action:
    """Parse ``ROLE!LABEL`` / ``ROLE?LABEL`` with an optional ``(SORT)``."""
    m = _EDGE_LABEL_RE.match(text)
    if m is None:
        raise SourceError(ErrorKind.PARSE, 1, 1, f"malformed action label {text!r}")
    peer, mark, label, sort = m.groups()
    return Action(Direction(mark), peer, label, sort)


def parse_fsm_dot(text: str, role: str | None = None) -> Fsm:
    """Read a DOT digraph whose node ``0`` is the initial state."""
    p = _Parser(text)
    if p.at("strict"):
        p.advance()
    p.expect("digraph")
    if p.tok.kind in ("id", "str", "num"):
        p.advance()
    p.expect("{")
    nodes: dict[int, Token] = {}
    edges: list[tuple[int, int, Action, Token]] = []
    graph_role = None
    while not p.at("}"):
        if p.tok.kind == "eof":
            raise p.error("unterminated digraph")
        tok = p.tok
        if tok.kind == "id" and tok.text in ("graph", "node", "edge") and p.peek().text == "[":
            p.advance()
            attrs = _dot_attrs(p)
            if tok.text == "graph" and "role" in attrs:
                graph_role = attrs["role"][0]
        elif tok.kind in ("id", "str") and p.peek().text == "=":
            key = p.advance().text
            p.advance()
            value = _dot_value(p)
            if key == "role":
                graph_role = value
        else:
            src = _dot_node(p)
            nodes.setdefault(src, tok)
            if p.at("->"):
                p.advance()
                dst_tok = p.tok
                dst = _dot_node(p)
                nodes.setdefault(dst, dst_tok)
                if p.at("->"):
                    raise p.error("edge chains are not supported")
                attrs = _dot_attrs(p) if p.at("[") else {}
                if "label" not in attrs:
                    raise p.error("edge without a label", tok)
                label, label_tok = attrs["label"]
                try:
                    action = parse_action(label)
                except SourceError as exc:
                    raise p.error(exc.message, label_tok) from None
                edges.append((src, dst, action, tok))
            elif p.at("["):
                _dot_attrs(p)
        if p.at(";") or p.at(","):
            p.advance()
    p.expect("}")
    p.expect_eof()

    if 0 not in nodes:
        raise p.invalid("missing initial node 0", p.tokens[0])
    order = [0] + sorted(n for n in nodes if n != 0)
    index = {n: k for k, n in enumerate(order)}
    trans: list[list[tuple[Action, int]]] = [[] for _ in order]
    for src, dst, action, tok in edges:
        outs = trans[index[src]]
        if outs:
            first = outs[0][0]
            if first.direction is not action.direction:
                raise p.invalid(f"state {src} mixes sends and receives", tok)
            if first.peer != action.peer:
                raise p.invalid(f"state {src} mixes peers {first.peer!r} and {action.peer!r}", tok)
            if any(a.label == action.label for a, _ in outs):
                raise p.invalid(f"state {src} has duplicate label {action.label!r}", tok)
        outs.append((action, index[dst]))
    fsm = Fsm(role if role is not None else (graph_role or ""), tuple(tuple(o) for o in trans), 0)
    reachable = set(fsm.reachable())
    for n in order:
        if index[n] not in reachable:
            raise p.invalid(f"state {n} is unreachable from 0", nodes[n])
    return fsm


def _dot_node(p: _Parser) -> int:
    tok = p.tok
    if tok.kind == "num":
        p.advance()
        return int(tok.text)
    if tok.kind == "str" and tok.text.isdigit():
        p.advance()
        return int(tok.text)
    raise p.error(f"node ids must be non-negative integers, found {tok.text or 'end of input'!r}")


def _dot_value(p: _Parser) -> str:
    tok = p.tok
    if tok.kind in ("id", "str", "num"):
        p.advance()
        return tok.text
    raise p.error(f"expected attribute value, found {tok.text or 'end of input'!r}")


def _dot_attrs(p: _Parser) -> dict[str, tuple[str, Token]]:
    p.expect("[")
    attrs = {}
    while not p.at("]"):
        key_tok = p.tok
        if key_tok.kind not in ("id", "str"):
            raise p.error(f"expected attribute name, found {key_tok.text or 'end of input'!r}")
        p.advance()
        p.expect("=")
        value_tok = p.tok
        attrs[key_tok.text] = (_dot_value(p), value_tok)
        if p.at(",") or p.at(";"):
            p.advance()
    p.expect("]")
    return attrs


def write_fsm_dot(fsm: Fsm) -> str:
    """Render with node ``0`` as the initial state."""
    order = [fsm.initial] + [s for s in range(fsm.size) if s != fsm.initial]
    index = {s: k for k, s in enumerate(order)}
    lines = ["digraph {"]
    if fsm.role:
        lines.append(f'  role="{fsm.role}";')
    for s in order:
        lines.append(f"  {index[s]};")
    for s in order:
        for action, t in fsm.transitions[s]:
            lines.append(f'  {index[s]} -> {index[t]} [label="{action}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
