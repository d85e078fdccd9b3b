"""Shared data model used by the checker, the projection and the oracle."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Union


class Direction(enum.Enum):
    SEND = "!"
    RECV = "?"


@dataclass(frozen=True, slots=True)
class Action:
    direction: Direction
    peer: str
    label: str
    sort: str | None = None

    @property
    def is_send(self) -> bool:
        return self.direction is Direction.SEND

    def __str__(self) -> str:
        suffix = f"({self.sort})" if self.sort is not None else ""
        return f"{self.peer}{self.direction.value}{self.label}{suffix}"


def send(peer: str, label: str, sort: str | None = None) -> Action:
    return Action(Direction.SEND, peer, label, sort)


def recv(peer: str, label: str, sort: str | None = None) -> Action:
    return Action(Direction.RECV, peer, label, sort)


class SortTable:
    """Coercion relation on payload sorts.

    Always reflexive; extra ``(sub, sup)`` pairs are closed transitively.
    The unit sort (``None``) only coerces to itself.
    """

    def __init__(self, pairs: Iterable[tuple[str, str]] = ()):
        rel = {(a, b) for a, b in pairs if a != b}
        changed = True
        while changed:
            changed = False
            for a, b in list(rel):
                for c, d in list(rel):
                    if b == c and a != d and (a, d) not in rel:
                        rel.add((a, d))
                        changed = True
        self.pairs = frozenset(rel)

    @classmethod
    def standard(cls) -> SortTable:
        return cls([("nat", "int")])

    def coerces(self, sub: str | None, sup: str | None) -> bool:
        if sub == sup:
            return True
        if sub is None or sup is None:
            return False
        return (sub, sup) in self.pairs

    def __repr__(self) -> str:
        return f"SortTable({sorted(self.pairs)!r})"


REFLEXIVE = SortTable()


# -- session types ----------------------------------------------------------


class Arm(NamedTuple):
    label: str
    sort: str | None
    cont: "Term"


@dataclass(frozen=True)
class End:
    def __repr__(self) -> str:
        return "End()"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Rec:
    var: str
    body: "Term"


@dataclass(frozen=True)
class Select:
    """Internal choice: send one of ``arms`` to ``peer``."""

    peer: str
    arms: tuple[Arm, ...]
    direction = Direction.SEND

    def actions(self):
        for arm in self.arms:
            yield Action(self.direction, self.peer, arm.label, arm.sort), arm.cont


@dataclass(frozen=True)
class Branch:
    """External choice: receive one of ``arms`` from ``peer``."""

    peer: str
    arms: tuple[Arm, ...]
    direction = Direction.RECV

    def actions(self):
        for arm in self.arms:
            yield Action(self.direction, self.peer, arm.label, arm.sort), arm.cont


@dataclass(frozen=True)
class Msg:
    """Global message exchange ``sender -> receiver`` with labelled branches."""

    sender: str
    receiver: str
    arms: tuple[Arm, ...]


LocalType = Union[End, Var, Rec, Select, Branch]
GlobalType = Union[End, Var, Rec, Msg]
Term = Union[End, Var, Rec, Select, Branch, Msg]
Choice = (Select, Branch, Msg)


def arms(*items) -> tuple[Arm, ...]:
    """Build arms from ``(label, cont)`` or ``(label, sort, cont)`` tuples."""
    out = []
    for item in items:
        if len(item) == 2:
            out.append(Arm(item[0], None, item[1]))
        else:
            out.append(Arm(*item))
    return tuple(out)


def select(peer: str, *items) -> Select:
    return Select(peer, arms(*items))


def branch(peer: str, *items) -> Branch:
    return Branch(peer, arms(*items))


def msg(sender: str, receiver: str, *items) -> Msg:
    return Msg(sender, receiver, arms(*items))


def substitute(term: Term, name: str, value: Term) -> Term:
    if isinstance(term, Var):
        return value if term.name == name else term
    if isinstance(term, End):
        return term
    if isinstance(term, Rec):
        if term.var == name:
            return term
        return Rec(term.var, substitute(term.body, name, value))
    new_arms = tuple(Arm(a.label, a.sort, substitute(a.cont, name, value)) for a in term.arms)
    return _with_arms(term, new_arms)


def _with_arms(term, new_arms):
    if isinstance(term, Msg):
        return Msg(term.sender, term.receiver, new_arms)
    return type(term)(term.peer, new_arms)


def unfold(term: Term) -> Term:
    """Unfold top-level recursion until the head is a choice or ``end``."""
    while isinstance(term, Rec):
        term = substitute(term.body, term.var, term)
    return term


def free_vars(term: Term) -> set[str]:
    if isinstance(term, Var):
        return {term.name}
    if isinstance(term, End):
        return set()
    if isinstance(term, Rec):
        return free_vars(term.body) - {term.var}
    out: set[str] = set()
    for a in term.arms:
        out |= free_vars(a.cont)
    return out


class WellFormednessError(ValueError):
    pass


def well_formedness_problems(term: Term) -> list[str]:
    """Closedness, contractivity, no shadowing, distinct labels, no self-messages."""
    problems: list[str] = []

    def walk(t, bound: tuple[str, ...], unguarded: frozenset[str]):
        if isinstance(t, End):
            return
        if isinstance(t, Var):
            if t.name not in bound:
                problems.append(f"unbound variable {t.name!r}")
            elif t.name in unguarded:
                problems.append(f"non-contractive recursion on {t.name!r}")
            return
        if isinstance(t, Rec):
            if t.var in bound:
                problems.append(f"recursion variable {t.var!r} shadows an outer binding")
            walk(t.body, bound + (t.var,), unguarded | {t.var})
            return
        if not t.arms:
            problems.append("choice with no branches")
        labels = [a.label for a in t.arms]
        if len(set(labels)) != len(labels):
            problems.append(f"duplicate labels in choice: {labels}")
        if isinstance(t, Msg) and t.sender == t.receiver:
            problems.append(f"self-message at role {t.sender!r}")
        for a in t.arms:
            walk(a.cont, bound, frozenset())

    walk(term, (), frozenset())
    return problems


def check_well_formed(term: Term) -> Term:
    problems = well_formedness_problems(term)
    if problems:
        raise WellFormednessError("; ".join(problems))
    return term


def roles_of(g: GlobalType) -> list[str]:
    """Participants of a global type in order of first appearance."""
    seen: dict[str, None] = {}

    def walk(t):
        if isinstance(t, Rec):
            walk(t.body)
        elif isinstance(t, Msg):
            seen.setdefault(t.sender)
            seen.setdefault(t.receiver)
            for a in t.arms:
                walk(a.cont)

    walk(g)
    return list(seen)


# -- action sequences -------------------------------------------------------


def _live(seq) -> Iterable[Action]:
    if isinstance(seq, Prefix):
        return seq.live()
    return seq


def act(seq) -> set[tuple[Direction, str]]:
    """Direction/peer pairs occurring in a prefix or action sequence."""
    return {(a.direction, a.peer) for a in _live(seq)}


def terms_count(seq) -> int:
    return sum(1 for _ in _live(seq))


class Snapshot(NamedTuple):
    size: int
    start: int
    removed: int


class Prefix:
    """Action sequence with lazy removal and cheap snapshot/restore.

    ``actions``/``removed`` are parallel lists; entries before ``start`` are
    gone, flagged entries at or after ``start`` are gone too. Every removal is
    logged in ``log`` so a restore can unflag it and scanners can see what
    disappeared since they last looked. The entry at ``start`` (if any) is
    never flagged.
    """

    __slots__ = ("actions", "removed", "start", "log", "version")

    def __init__(self, actions: Iterable[Action] = ()):
        self.actions: list[Action] = list(actions)
        self.removed: list[bool] = [False] * len(self.actions)
        self.start = 0
        self.log: list[int] = []
        # bumped on every restore so scanners can tell the entries may differ
        self.version = 0

    def push(self, action: Action) -> None:
        self.actions.append(action)
        self.removed.append(False)

    def head(self) -> Action | None:
        return self.actions[self.start] if self.start < len(self.actions) else None

    def remove(self, index: int) -> None:
        if index < self.start or self.removed[index]:
            raise ValueError(f"entry {index} already removed")
        if index == self.start:
            n = len(self.actions)
            start = index + 1
            while start < n and self.removed[start]:
                start += 1
            self.start = start
        else:
            self.removed[index] = True
        self.log.append(index)

    def live_indices(self) -> list[int]:
        rem = self.removed
        return [i for i in range(self.start, len(self.actions)) if not rem[i]]

    def live(self) -> list[Action]:
        return [self.actions[i] for i in self.live_indices()]

    def is_empty(self) -> bool:
        return self.start >= len(self.actions)

    def snapshot(self) -> Snapshot:
        return Snapshot(len(self.actions), self.start, len(self.log))

    def restore(self, snap: Snapshot) -> None:
        if snap.size > len(self.actions) or snap.removed > len(self.log):
            raise AssertionError("snapshot is newer than the prefix")
        for index in self.log[snap.removed:]:
            if index < snap.size:
                self.removed[index] = False
        del self.log[snap.removed:]
        del self.actions[snap.size:]
        del self.removed[snap.size:]
        self.start = snap.start
        self.version += 1

    def window(self) -> list[tuple[bool, Action]]:
        """Raw entries from ``start`` onward, removal flags included."""
        return list(zip(self.removed[self.start:], self.actions[self.start:]))

    def copy(self) -> Prefix:
        other = Prefix()
        other.actions = list(self.actions)
        other.removed = list(self.removed)
        other.start = self.start
        other.log = list(self.log)
        other.version = self.version
        return other

    def __len__(self) -> int:
        return terms_count(self)

    def __str__(self) -> str:
        items = self.live()
        return ".".join(str(a) for a in items) if items else "ε"

    def __repr__(self) -> str:
        return f"Prefix({self})"


# -- finite state machines --------------------------------------------------


@dataclass(frozen=True)
class Fsm:
    """Communicating FSM; ``transitions[s]`` lists ``(action, target)`` pairs."""

    role: str
    transitions: tuple[tuple[tuple[Action, int], ...], ...]
    initial: int = 0

    @property
    def size(self) -> int:
        return len(self.transitions)

    def __len__(self) -> int:
        return len(self.transitions)

    def is_terminal(self, state: int) -> bool:
        return not self.transitions[state]

    def edges(self):
        for s, outs in enumerate(self.transitions):
            for action, t in outs:
                yield s, action, t

    def max_branching(self) -> int:
        return max((len(outs) for outs in self.transitions), default=0)

    def reachable(self) -> list[int]:
        seen = {self.initial}
        order = [self.initial]
        queue = deque(order)
        while queue:
            s = queue.popleft()
            for _, t in self.transitions[s]:
                if t not in seen:
                    seen.add(t)
                    order.append(t)
                    queue.append(t)
        return order

    def renumbered(self) -> Fsm:
        """Canonical numbering: breadth-first from the initial state."""
        order = self.reachable()
        index = {s: k for k, s in enumerate(order)}
        trans = tuple(
            tuple((a, index[t]) for a, t in self.transitions[s]) for s in order
        )
        return Fsm(self.role, trans, 0)


def fsm_isomorphic(a: Fsm, b: Fsm) -> bool:
    """Isomorphism of deterministic FSMs, anchored at the initial states."""
    if a.size != b.size:
        return False
    mapping = {a.initial: b.initial}
    queue = deque([a.initial])
    while queue:
        s = queue.popleft()
        t = mapping[s]
        outs_a = {act: tgt for act, tgt in a.transitions[s]}
        outs_b = {act: tgt for act, tgt in b.transitions[t]}
        if outs_a.keys() != outs_b.keys() or len(outs_a) != len(a.transitions[s]):
            return False
        for action, sa in outs_a.items():
            sb = outs_b[action]
            if sa in mapping:
                if mapping[sa] != sb:
                    return False
            else:
                mapping[sa] = sb
                queue.append(sa)
    return len(set(mapping.values())) == len(mapping) == a.size
