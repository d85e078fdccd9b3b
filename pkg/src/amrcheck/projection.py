"""Global-to-local projection and local-type-to-FSM conversion."""

from __future__ import annotations

import enum
import warnings
from collections import deque

from .core import (
    Action,
    Arm,
    Branch,
    End,
    Fsm,
    GlobalType,
    LocalType,
    Msg,
    Rec,
    Select,
    Var,
    free_vars,
    unfold,
)


class ProjectionReason(enum.Enum):
    UNMERGEABLE_BRANCHES = "UnmergeableBranches"
    NON_PARTICIPANT = "NonParticipant"


class ProjectionError(Exception):
    def __init__(self, role: str, location: tuple, reason: ProjectionReason, detail: str = ""):
        path = "/".join(str(step) for step in location) or "<root>"
        super().__init__(f"cannot project onto {role!r} at {path}: {reason.value} {detail}".rstrip())
        self.role = role
        self.location = location
        self.reason = reason


class NonParticipantWarning(UserWarning):
    pass


def participates(g: GlobalType, role: str) -> bool:
    if isinstance(g, Rec):
        return participates(g.body, role)
    if isinstance(g, Msg):
        return role in (g.sender, g.receiver) or any(participates(a.cont, role) for a in g.arms)
    return False


def project(g: GlobalType, role: str) -> LocalType:
    """Project ``g`` onto ``role`` using plain merge for third-party choices."""
    if not participates(g, role):
        warnings.warn(f"role {role!r} does not occur in the protocol", NonParticipantWarning)
        return End()
    return _project(g, role, ())


def _project(g: GlobalType, role: str, path: tuple) -> LocalType:
    if isinstance(g, (End, Var)):
        return g
    if isinstance(g, Rec):
        if not participates(g.body, role) and free_vars(g.body) <= {g.var}:
            return End()
        body = _project(g.body, role, path + ("rec " + g.var,))
        if body == Var(g.var):
            return End()
        if g.var not in free_vars(body):
            return body
        return Rec(g.var, body)
    projected = [
        Arm(a.label, a.sort, _project(a.cont, role, path + (a.label,))) for a in g.arms
    ]
    if role == g.sender:
        return Select(g.receiver, tuple(projected))
    if role == g.receiver:
        return Branch(g.sender, tuple(projected))
    first = projected[0].cont
    for arm in projected[1:]:
        if arm.cont != first:
            raise ProjectionError(
                role,
                path + (f"{g.sender}->{g.receiver}",),
                ProjectionReason.UNMERGEABLE_BRANCHES,
                f"(branches {projected[0].label!r} and {arm.label!r} differ)",
            )
    return first


def local_to_fsm(term: LocalType, role: str = "") -> Fsm:
    """States are the distinct closed unfoldings reachable from ``term``."""
    start = unfold(term)
    index = {start: 0}
    order = [start]
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if isinstance(node, End):
            continue
        for _, cont in node.actions():
            nxt = unfold(cont)
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
    trans = []
    for node in order:
        if isinstance(node, End):
            trans.append(())
        else:
            trans.append(tuple((action, index[unfold(cont)]) for action, cont in node.actions()))
    return Fsm(role, tuple(trans), 0)


def validate_fsm(fsm: Fsm) -> list[str]:
    """Violations of the FSM invariants; empty when the machine is well formed."""
    problems = []
    n = fsm.size
    if not 0 <= fsm.initial < n:
        return [f"initial state {fsm.initial} out of range"]
    for s, outs in enumerate(fsm.transitions):
        if not outs:
            continue
        first: Action = outs[0][0]
        labels = set()
        for action, t in outs:
            if not 0 <= t < n:
                problems.append(f"state {s}: target {t} out of range")
            if action.direction is not first.direction:
                problems.append(f"state {s}: mixed direction")
            if action.peer != first.peer:
                problems.append(f"state {s}: mixed peers {first.peer!r}/{action.peer!r}")
            if action.label in labels:
                problems.append(f"state {s}: duplicate label {action.label!r}")
            labels.add(action.label)
    if not problems:
        reachable = set(fsm.reachable())
        for s in range(n):
            if s not in reachable:
                problems.append(f"state {s}: unreachable")
    return problems
