"""Reduction of prefix pairs: the [i], [o], [A] and [B] rewriting rules."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .core import REFLEXIVE, Direction, Prefix, Snapshot, SortTable

__all__ = [
    "PrefixPair",
    "ReductionRule",
    "fail_early",
    "find_match",
    "reduce_full",
    "reduce_step",
    "restore",
    "snapshot",
]


class ReductionRule(NamedTuple):
    name: str  # "i", "o", "A" or "B"
    index: int  # position of the matched supertype entry
    skipped: int  # live supertype entries jumped over

    def __str__(self) -> str:
        return self.name


@dataclass
class PrefixPair:
    sub: Prefix = field(default_factory=Prefix)
    sup: Prefix = field(default_factory=Prefix)
    # per head class, how far the supertype has been scanned; see find_match
    scans: dict = field(default_factory=dict, compare=False, repr=False)

    def snapshot(self) -> tuple[Snapshot, Snapshot]:
        return self.sub.snapshot(), self.sup.snapshot()

    def restore(self, snaps: tuple[Snapshot, Snapshot]) -> None:
        self.sub.restore(snaps[0])
        self.sup.restore(snaps[1])

    def measure(self) -> tuple[int, int]:
        return len(self.sub), len(self.sup)

    def __str__(self) -> str:
        return f"<{self.sub}, {self.sup}>"


def snapshot(p: Prefix) -> Snapshot:
    return p.snapshot()


def restore(p: Prefix, snap: Snapshot) -> None:
    p.restore(snap)


def find_match(pair: PrefixPair, sorts: SortTable = REFLEXIVE) -> tuple[int, int, bool]:
    """Locate the supertype entry that can absorb the subtype's head.

    Returns ``(index, skipped, blocked)``. ``index`` is -1 when there is no
    match; ``blocked`` says a non-skippable entry sits before any possible
    match, so no extension of the supertype prefix can ever supply one.
    Same direction and peer never commute, so the first such entry decides.
    """
    sub, sup = pair.sub, pair.sup
    if sub.start >= len(sub.actions):
        return -1, 0, False
    head = sub.actions[sub.start]
    peer = head.peer
    direction = head.direction
    receiving = direction is Direction.RECV
    actions = sup.actions
    removed = sup.removed
    log = sup.log
    # Where a scan stops depends only on the head's direction and peer. Until
    # the next restore entries are only appended or removed, so an earlier
    # scan for the same class stays valid up to its end; removals since then
    # only lower the number of live entries it jumped over.
    cls = (direction, peer)
    stamp = (id(sup), sup.version)
    cached = pair.scans.get(cls)
    if cached is not None and cached[0] == stamp:
        _, end, skipped, seen = cached
        for i in log[seen:]:
            if i < end:
                skipped -= 1
        begin = max(end, sup.start)
    else:
        begin, skipped = sup.start, 0
    stop = len(actions)
    for j in range(begin, len(actions)):
        if removed[j]:
            continue
        a = actions[j]
        if a.direction is direction:
            if a.peer == peer:
                stop = j
                break
        elif receiving:
            # an input may only be anticipated past other inputs
            stop = j
            break
        skipped += 1
    pair.scans[cls] = (stamp, stop, skipped, len(log))
    if stop == len(actions):
        return -1, skipped, False
    a = actions[stop]
    if a.direction is not direction or a.label != head.label:
        return -1, skipped, True
    ok = sorts.coerces(a.sort, head.sort) if receiving else sorts.coerces(head.sort, a.sort)
    return (stop, skipped, False) if ok else (-1, skipped, True)


def reduce_step(pair: PrefixPair, sorts: SortTable = REFLEXIVE) -> ReductionRule | None:
    index, skipped, _ = find_match(pair, sorts)
    if index < 0:
        return None
    sending = pair.sub.actions[pair.sub.start].direction is Direction.SEND
    if skipped:
        name = "B" if sending else "A"
    else:
        name = "o" if sending else "i"
    pair.sub.remove(pair.sub.start)
    pair.sup.remove(index)
    return ReductionRule(name, index, skipped)


def reduce_full(pair: PrefixPair, sorts: SortTable = REFLEXIVE) -> list[ReductionRule]:
    """Rewrite to normal form; returns the applied rules in order."""
    trace = []
    while True:
        rule = reduce_step(pair, sorts)
        if rule is None:
            return trace
        trace.append(rule)


def fail_early(pair: PrefixPair, sorts: SortTable = REFLEXIVE) -> bool:
    """True when the subtype's head can never be matched, whatever is appended."""
    index, _, blocked = find_match(pair, sorts)
    return index < 0 and blocked
