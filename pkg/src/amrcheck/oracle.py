"""Bounded exhaustive execution of communicating FSMs over FIFO channels.

Used as a brute-force deadlock oracle to cross-check subtyping verdicts.
Every ordered role pair has its own FIFO queue.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

from .core import REFLEXIVE, Action, Direction, Fsm, GlobalType, SortTable, roles_of
from .projection import local_to_fsm, project

DEFAULT_BOUND = 4
DEFAULT_BUDGET = 10**6


@dataclass
class SystemConfig:
    machines: list[tuple[str, Fsm]]
    channel_bound: int = DEFAULT_BOUND
    max_configs: int = DEFAULT_BUDGET
    sort_table: SortTable = REFLEXIVE

    def __post_init__(self):
        names = [r for r, _ in self.machines]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate roles in system: {names}")
        known = set(names)
        for role, fsm in self.machines:
            for _, action, _ in fsm.edges():
                if action.peer not in known:
                    raise ValueError(f"machine {role!r} talks to undeclared role {action.peer!r}")
                if action.peer == role:
                    raise ValueError(f"machine {role!r} sends to itself")
        if self.channel_bound < 1:
            raise ValueError("channel_bound must be at least 1")

    @property
    def roles(self) -> list[str]:
        return [r for r, _ in self.machines]


class Configuration(NamedTuple):
    control: tuple[int, ...]
    # queues[k] for the k-th ordered pair, each a tuple of (label, sort)
    queues: tuple[tuple[tuple[str, str | None], ...], ...]


class Outcome(enum.Enum):
    DEADLOCK_FREE = "DeadlockFree"
    DEADLOCK = "Deadlock"
    ORPHAN = "Orphan"
    BOUND_EXCEEDED = "BoundExceeded"


class Step(NamedTuple):
    role: str
    action: Action

    def __str__(self) -> str:
        return f"{self.role}:{self.action}"


@dataclass
class OracleResult:
    outcome: Outcome
    trace: list[Step] = field(default_factory=list)
    explored: int = 0
    stuck: Configuration | None = None

    @property
    def deadlock_free(self) -> bool:
        return self.outcome is Outcome.DEADLOCK_FREE

    def to_json(self) -> dict:
        out = {"verdict": self.outcome.value, "configurations": self.explored}
        if self.outcome in (Outcome.DEADLOCK, Outcome.ORPHAN):
            out["trace"] = [str(s) for s in self.trace]
        return out


class _System:
    def __init__(self, cfg: SystemConfig):
        self.cfg = cfg
        self.roles = cfg.roles
        self.fsms = [f for _, f in cfg.machines]
        index = {r: k for k, r in enumerate(self.roles)}
        n = len(self.roles)
        self.channel = {}
        for s in range(n):
            for r in range(n):
                if s != r:
                    self.channel[(s, r)] = len(self.channel)
        # precompute per machine/state: (action, target, channel, is_send)
        self.moves = []
        for m, fsm in enumerate(self.fsms):
            per_state = []
            for outs in fsm.transitions:
                row = []
                for action, t in outs:
                    peer = index[action.peer]
                    if action.direction is Direction.SEND:
                        row.append((action, t, self.channel[(m, peer)], True))
                    else:
                        row.append((action, t, self.channel[(peer, m)], False))
                per_state.append(tuple(row))
            self.moves.append(per_state)

    def initial(self) -> Configuration:
        return Configuration(
            tuple(f.initial for f in self.fsms), tuple(() for _ in self.channel)
        )

    def successors(self, c: Configuration):
        bound = self.cfg.channel_bound
        coerces = self.cfg.sort_table.coerces
        for m, state in enumerate(c.control):
            for action, t, ch, is_send in self.moves[m][state]:
                q = c.queues[ch]
                if is_send:
                    if len(q) >= bound:
                        continue
                    queues = list(c.queues)
                    queues[ch] = q + ((action.label, action.sort),)
                else:
                    if not q or q[0][0] != action.label or not coerces(q[0][1], action.sort):
                        continue
                    queues = list(c.queues)
                    queues[ch] = q[1:]
                control = list(c.control)
                control[m] = t
                yield m, action, ch, is_send, Configuration(tuple(control), tuple(queues))

    def is_final(self, c: Configuration) -> bool:
        return all(self.fsms[m].is_terminal(s) for m, s in enumerate(c.control)) and not any(
            c.queues
        )


def run_bounded(cfg: SystemConfig, detect_orphans: bool = True) -> OracleResult:
    """Breadth-first search of the reachable configurations.

    A Deadlock is a reachable non-final configuration with nothing enabled.
    With ``detect_orphans`` a deadlock-free system is also checked for
    messages that sit in a queue forever: a reachable configuration with a
    non-empty queue from which no continuation ever consumes from it.
    """
    sys_ = _System(cfg)
    start = sys_.initial()
    ids = {start: 0}
    configs = [start]
    parent: list[tuple[int, Step] | None] = [None]
    edges: list[list[tuple[int, int | None]]] = []
    queue = deque([0])
    while queue:
        cid = queue.popleft()
        c = configs[cid]
        out = []
        for m, action, ch, is_send, nxt in sys_.successors(c):
            nid = ids.get(nxt)
            if nid is None:
                if len(configs) >= cfg.max_configs:
                    return OracleResult(Outcome.BOUND_EXCEEDED, explored=len(configs))
                nid = len(configs)
                ids[nxt] = nid
                configs.append(nxt)
                parent.append((cid, Step(sys_.roles[m], action)))
                queue.append(nid)
            out.append((nid, None if is_send else ch))
        edges.append(out)
        if not out and not sys_.is_final(c):
            return OracleResult(Outcome.DEADLOCK, _trace(parent, cid), len(configs), c)
    if detect_orphans:
        orphan = _find_orphan(configs, edges, len(sys_.channel))
        if orphan is not None:
            return OracleResult(Outcome.ORPHAN, _trace(parent, orphan), len(configs), configs[orphan])
    return OracleResult(Outcome.DEADLOCK_FREE, explored=len(configs))


def _trace(parent, cid: int) -> list[Step]:
    steps = []
    while parent[cid] is not None:
        cid, step = parent[cid]
        steps.append(step)
    steps.reverse()
    return steps


def _find_orphan(configs, edges, channels: int) -> int | None:
    reverse: list[list[int]] = [[] for _ in configs]
    for src, outs in enumerate(edges):
        for dst, _ in outs:
            reverse[dst].append(src)
    for ch in range(channels):
        # configurations that can still reach a receive on this channel
        live = set()
        work = [src for src, outs in enumerate(edges) if any(c == ch for _, c in outs)]
        live.update(work)
        while work:
            node = work.pop()
            for prev in reverse[node]:
                if prev not in live:
                    live.add(prev)
                    work.append(prev)
        for cid, c in enumerate(configs):
            if c.queues[ch] and cid not in live:
                return cid
    return None


def compose_system(
    g: GlobalType,
    replacements: Mapping[str, Fsm] | None = None,
    roles: list[str] | None = None,
    channel_bound: int = DEFAULT_BOUND,
    max_configs: int = DEFAULT_BUDGET,
    sort_table: SortTable = REFLEXIVE,
) -> SystemConfig:
    """Project ``g`` onto every role, swapping in the given replacement machines."""
    replacements = dict(replacements or {})
    roles = list(roles) if roles is not None else roles_of(g)
    unknown = set(replacements) - set(roles)
    if unknown:
        raise ValueError(f"replacement for undeclared role(s): {sorted(unknown)}")
    machines = []
    for role in roles:
        fsm = replacements.get(role)
        if fsm is None:
            fsm = local_to_fsm(project(g, role), role)
        machines.append((role, fsm))
    return SystemConfig(machines, channel_bound, max_configs, sort_table)
