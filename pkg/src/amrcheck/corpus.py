"""Reference protocols, known subtype pairs and parametric benchmark families."""

from __future__ import annotations

from dataclasses import dataclass

from .core import End, GlobalType, LocalType, Msg, Rec, Var, arms, branch, msg, select
from .syntax import parse_global, parse_local

DOUBLE_BUFFERING_SCR = """\
global protocol DoubleBuffering
    (role s, role k, role t) {
  rec loop {
    ready() from k to s;
    copy() from s to k;
    ready() from t to k;
    copy() from k to t;
    continue loop;
  }
}
"""

STREAM_SCR = """\
global protocol Stream(role s, role t) {
  rec x {
    ready() from t to s;
    choice at s {
      value() from s to t;
      continue x;
    } or {
      stop() from s to t;
    }
  }
}
"""

# the infinite variant used for reordering experiments
STREAM_LOOP_SCR = """\
global protocol StreamLoop(role s, role t) {
  rec x {
    ready() from t to s;
    value() from s to t;
    continue x;
  }
}
"""

RING_CHOICE_SCR = """\
global protocol RingChoice(role a, role b, role c) {
  rec t {
    add() from a to b;
    choice at b {
      add() from b to c;
      add() from c to a;
      continue t;
    } or {
      sub() from b to c;
      add() from c to a;
      continue t;
    }
  }
}
"""

ALTERNATING_BIT_SCR = """\
global protocol AlternatingBit(role s, role r) {
  rec t {
    d0() from s to r;
    choice at r {
      a0() from r to s;
      rec u {
        d1() from s to r;
        choice at r {
          a0() from r to s;
          continue u;
        } or {
          a1() from r to s;
          continue t;
        }
      }
    } or {
      a1() from r to s;
      continue t;
    }
  }
}
"""

REORDER_SCR = """\
global protocol Reorder(role q, role p) {
  l1() from p to q;
  l2() from q to p;
}
"""

FORGET_SCR = """\
global protocol Forget(role p, role q, role r) {
  lp() from q to r;
  rec t {
    l() from p to r;
    continue t;
  }
}
"""


@dataclass(frozen=True)
class CorpusPair:
    name: str
    role: str
    sub: LocalType
    sup: LocalType
    visits: int
    expected: str  # "proven", "not_proven" or "refuted"
    protocol: str | None = None  # Scribble source of the surrounding system

    def global_type(self) -> GlobalType | None:
        return parse_global(self.protocol).body if self.protocol else None

    def roles(self) -> list[str] | None:
        return list(parse_global(self.protocol).roles) if self.protocol else None


def _p(text: str) -> LocalType:
    return parse_local(text)


DOUBLE_BUFFERING = CorpusPair(
    "double_buffering",
    "k",
    _p("s!ready . rec x . s!ready . s?copy . t?ready . t!copy . x"),
    _p("rec x . s!ready . s?copy . t?ready . t!copy . x"),
    2,
    "proven",
    DOUBLE_BUFFERING_SCR,
)

RING_CHOICE = CorpusPair(
    "ring_choice",
    "b",
    _p("rec t . c!{ add . a?add . t, sub . a?add . t }"),
    _p("rec t . a?add . c!{ add . t, sub . t }"),
    1,
    "proven",
    RING_CHOICE_SCR,
)

ALTERNATING_BIT = CorpusPair(
    "alternating_bit",
    "r",
    _p("rec t . s?{ d0 . s!a0 . t, d1 . s!a1 . t }"),
    _p(
        "rec t . s?d0 . s!{ a0 . rec x . s?d1 . s!{ a0 . x, a1 . t }, a1 . t }"
    ),
    2,
    "proven",
    ALTERNATING_BIT_SCR,
)

FORGOTTEN_ACTIONS = CorpusPair(
    "forgotten_actions",
    "r",
    _p("rec t . p?l . t"),
    _p("q?lp . rec t . p?l . t"),
    2,
    "not_proven",
    FORGET_SCR,
)

REORDER_Q = CorpusPair(
    "reorder_q_prime",
    "q",
    _p("p!l2 . p?l1 . end"),
    _p("p?l1 . p!l2 . end"),
    1,
    "proven",
    REORDER_SCR,
)

REORDER_P = CorpusPair(
    "reorder_p_prime",
    "p",
    _p("q?l2 . q!l1 . end"),
    _p("q!l1 . q?l2 . end"),
    1,
    "refuted",
    REORDER_SCR,
)

PAIRS = (
    DOUBLE_BUFFERING,
    RING_CHOICE,
    ALTERNATING_BIT,
    FORGOTTEN_ACTIONS,
    REORDER_Q,
    REORDER_P,
)

# -- benchmark families ------------------------------------------------------

FAMILIES = ("streaming", "nested_choice", "ring", "k_buffering")


def _prepend_sends(peer: str, label: str, n: int, tail: LocalType) -> LocalType:
    for _ in range(n):
        tail = select(peer, (label, tail))
    return tail


def gen_streaming(n: int) -> tuple[LocalType, LocalType]:
    """Source side of the looping stream with ``n`` values sent ahead of time."""
    if n < 0:
        raise ValueError("n must be non-negative")
    sup = _p("rec x . t?ready . t!value . x")
    return _prepend_sends("t", "value", n, sup), sup


def streaming_global() -> GlobalType:
    return parse_global(STREAM_LOOP_SCR).body


def gen_kbuffering(n: int) -> tuple[LocalType, LocalType]:
    """Kernel of the buffering pipeline announcing ``n`` extra free buffers up front."""
    if n < 0:
        raise ValueError("n must be non-negative")
    sup = _p("rec x . s!ready . s?copy . t?ready . t!copy . x")
    return _prepend_sends("s", "ready", n, sup), sup


def kbuffering_global() -> GlobalType:
    return parse_global(DOUBLE_BUFFERING_SCR).body


def gen_nested_choice(n: int) -> tuple[LocalType, LocalType]:
    if n < 0:
        raise ValueError("n must be non-negative")
    sub: LocalType = End()
    sup: LocalType = End()
    for _ in range(n):
        sub = select(
            "o",
            ("m", branch("o", ("r", sub), ("s", sub), ("u", sub))),
            ("p", branch("o", ("r", sub), ("s", sub))),
        )
        sup = branch(
            "o",
            ("r", select("o", ("m", sup), ("p", sup), ("q", sup))),
            ("s", select("o", ("m", sup), ("p", sup))),
        )
    return sub, sup


def nested_choice_global(n: int) -> GlobalType:
    """Two-party protocol between ``o`` and ``x`` whose ``x`` projection is the supertype."""
    g: GlobalType = End()
    for _ in range(n):
        g = msg(
            "o",
            "x",
            ("r", msg("x", "o", ("m", g), ("p", g), ("q", g))),
            ("s", msg("x", "o", ("m", g), ("p", g))),
        )
    return g


def ring_roles(n: int) -> list[str]:
    return [f"p{i}" for i in range(n)]


def gen_ring(n: int) -> list[tuple[str, LocalType, LocalType]]:
    """Every participant but the initiator sends to its successor before receiving."""
    if n < 2:
        raise ValueError("a ring needs at least two participants")
    roles = ring_roles(n)
    out = []
    for i, role in enumerate(roles):
        prev, nxt = roles[i - 1], roles[(i + 1) % n]
        if i == 0:
            sup = Rec("t", select(nxt, ("v", branch(prev, ("v", Var("t"))))))
            sub = sup
        else:
            sup = Rec("t", branch(prev, ("v", select(nxt, ("v", Var("t"))))))
            sub = Rec("t", select(nxt, ("v", branch(prev, ("v", Var("t"))))))
        out.append((role, sub, sup))
    return out


def ring_global(n: int) -> GlobalType:
    roles = ring_roles(n)
    body: GlobalType = Var("t")
    for i in range(n - 1, -1, -1):
        body = Msg(roles[i], roles[(i + 1) % n], arms(("v", body)))
    return Rec("t", body)


def family_visits(family: str, n: int) -> int:
    """Visit bound used for a family member: one more than the anticipations."""
    if family in ("streaming", "k_buffering"):
        return n + 1
    if family == "ring":
        return 1
    if family == "nested_choice":
        return 1
    raise ValueError(f"unknown family {family!r}")
