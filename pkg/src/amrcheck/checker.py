"""Bounded asynchronous multiparty subtyping over pairs of FSMs.

The search is a depth-first walk over state pairs carrying one prefix per
side. Nodes evaluate to a three-valued outcome: PROVEN, REFUTED (no bound can
ever help this node) or UNKNOWN (a visit bound cut the search). Choice rules
combine children with Kleene conjunction/disjunction.
"""

from __future__ import annotations

import enum
import sys
import time
from dataclasses import dataclass, field, replace

from .core import REFLEXIVE, Direction, Fsm, Prefix, Snapshot, SortTable, act
from .prefix import PrefixPair, find_match, reduce_step


class VerdictKind(enum.IntEnum):
    # ordered so that min() is Kleene "and" and max() is Kleene "or"
    REFUTED = 0
    UNKNOWN = 1
    PROVEN = 2

    def __str__(self) -> str:
        return self.name.capitalize()


class Reason(enum.Enum):
    FAIL_EARLY = "FailEarly"
    STRUCTURAL_MISMATCH = "StructuralMismatch"
    TERMINAL_MISMATCH = "TerminalMismatch"
    BOUND_EXHAUSTED = "BoundExhausted"


class ConfigError(ValueError):
    pass


@dataclass
class Derivation:
    """One rule application of an accepting derivation."""

    rule: str
    states: tuple[int, int]
    reductions: tuple[str, ...]
    sub_window: str
    sup_window: str
    pushed: tuple[str, str] | None = None
    children: list["Derivation"] = field(default_factory=list)

    def walk(self, depth: int = 0):
        yield depth, self
        for child in self.children:
            yield from child.walk(depth + 1)

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "states": list(self.states),
            "pushed": list(self.pushed) if self.pushed else None,
            "reductions": list(self.reductions),
            "sub_prefix": self.sub_window,
            "sup_prefix": self.sup_window,
            "children": [c.to_dict() for c in self.children],
        }

    def lines(self) -> list[str]:
        out = []
        for depth, node in self.walk():
            pushed = f" push {node.pushed[0]} | {node.pushed[1]}" if node.pushed else ""
            red = f" reduce[{','.join(node.reductions)}]" if node.reductions else ""
            windows = f" -> <{node.sub_window}, {node.sup_window}>" if node.sub_window else ""
            out.append(f"{'  ' * depth}{node.rule} {node.states}{pushed}{red}{windows}")
        return out


@dataclass
class Stats:
    nodes: int = 0
    max_depth: int = 0
    peak_prefix: int = 0
    asm_superset_mismatches: int = 0


@dataclass
class Verdict:
    kind: VerdictKind
    reason: Reason | None = None
    derivation: Derivation | None = None
    stats: Stats = field(default_factory=Stats)
    elapsed: float = 0.0
    links: list["Verdict"] | None = None

    @property
    def proven(self) -> bool:
        return self.kind is VerdictKind.PROVEN

    @property
    def nodes_explored(self) -> int:
        return self.stats.nodes

    def to_json(self, trace: bool = False) -> dict:
        out = {
            "verdict": str(self.kind),
            "reason": self.reason.value if self.reason else None,
            "nodes_explored": self.stats.nodes,
            "elapsed_seconds": self.elapsed,
        }
        if trace:
            out["trace"] = self.derivation.to_dict() if self.derivation else None
        return out


@dataclass
class Previous:
    """History cell for one state pair."""

    visits: int
    snapshots: tuple[Snapshot, Snapshot] | None = None


class HistoryMatrix:
    def __init__(self, rows: int, cols: int, visits: int):
        self.bound = visits
        self.cells = [[Previous(visits) for _ in range(cols)] for _ in range(rows)]

    def __getitem__(self, states: tuple[int, int]) -> Previous:
        return self.cells[states[0]][states[1]]


@dataclass
class CheckerConfig:
    visits: int | None = None  # None: |states(sub)| + |states(sup)| + 1
    sort_table: SortTable = REFLEXIVE
    tra_chain: list[Fsm] | None = None
    record: bool = True
    # also render both prefix windows at every derivation node (quadratic)
    windows: bool = False
    cross_check_asm: bool = False

    def resolved_visits(self, sub: Fsm, sup: Fsm) -> int:
        visits = self.visits if self.visits is not None else sub.size + sup.size + 1
        if visits < 1:
            raise ConfigError("visits must be at least 1")
        return visits


def default_visits(sub: Fsm, sup: Fsm) -> int:
    return sub.size + sup.size + 1


def _window_unchanged(p: Prefix, snap: Snapshot) -> bool:
    # raw entries including removal flags: an entry that lingers in the
    # supertype prefix keeps the window growing and the check fails
    if len(p.actions) - p.start != snap.size - snap.start:
        return False
    return (
        p.actions[p.start:] == p.actions[snap.start:snap.size]
        and p.removed[p.start:] == p.removed[snap.start:snap.size]
    )


def check_assumption(cell: Previous, pair: PrefixPair) -> bool:
    """Both prefix windows equal the windows recorded at the earlier visit."""
    if cell.snapshots is None:
        return False
    sub_snap, sup_snap = cell.snapshots
    return _window_unchanged(pair.sub, sub_snap) and _window_unchanged(pair.sup, sup_snap)


def actions_not_forgotten(cell: Previous, pair: PrefixPair) -> bool:
    """Set-based form: act(subtype actions since the visit) covers act(sup prefix)."""
    sub_snap, _ = cell.snapshots
    since = pair.sub.actions[sub_snap.size:]
    return act(since) >= act(pair.sup)


def node_ceiling(sub: Fsm, sup: Fsm, visits: int) -> tuple[int, int]:
    """(max path depth, max node count) for a search with the given bound."""
    depth = sub.size * sup.size * visits + 1
    b = max(1, sub.max_branching() * sup.max_branching())
    nodes = depth + 1 if b == 1 else (b ** (depth + 1) - 1) // (b - 1)
    return depth, nodes


class _Search:
    def __init__(self, sub: Fsm, sup: Fsm, visits: int, cfg: CheckerConfig):
        self.sub = sub
        self.sup = sup
        self.sorts = cfg.sort_table
        self.record = cfg.record
        self.windows = cfg.windows
        self.cross_check = cfg.cross_check_asm
        self.history = HistoryMatrix(sub.size, sup.size, visits)
        self.pair = PrefixPair(Prefix(), Prefix())
        self.stats = Stats()

    def leaf(self, kind, reason, rule, states, reductions):
        if kind is VerdictKind.PROVEN and self.record:
            return kind, reason, self._node(rule, states, reductions)
        return kind, reason, None

    def _node(self, rule, states, reductions):
        windows = (str(self.pair.sub), str(self.pair.sup)) if self.windows else ("", "")
        return Derivation(rule, states, tuple(r.name for r in reductions), *windows)

    def visit(self, i: int, j: int, depth: int):
        stats = self.stats
        stats.nodes += 1
        if depth > stats.max_depth:
            stats.max_depth = depth
        pair = self.pair
        sub_p, sup_p = pair.sub, pair.sup
        if len(sub_p.actions) > stats.peak_prefix:
            stats.peak_prefix = len(sub_p.actions)
        assert len(sub_p.actions) == len(sup_p.actions), "unbalanced prefixes"

        reductions = []
        while True:
            rule = reduce_step(pair, self.sorts)
            if rule is None:
                break
            reductions.append(rule)
        index, _, blocked = find_match(pair, self.sorts)
        if blocked:
            return VerdictKind.REFUTED, Reason.FAIL_EARLY, None

        cell = self.history.cells[i][j]
        if cell.snapshots is not None and check_assumption(cell, pair):
            if self.cross_check and not actions_not_forgotten(cell, pair):
                stats.asm_superset_mismatches += 1
            return self.leaf(VerdictKind.PROVEN, None, "asm", (i, j), reductions)

        sub_outs = self.sub.transitions[i]
        sup_outs = self.sup.transitions[j]
        if not sub_outs or not sup_outs:
            if not sub_outs and not sup_outs and sub_p.is_empty() and sup_p.is_empty():
                return self.leaf(VerdictKind.PROVEN, None, "end", (i, j), reductions)
            return VerdictKind.REFUTED, Reason.TERMINAL_MISMATCH, None

        if cell.visits == 0:
            return VerdictKind.UNKNOWN, Reason.BOUND_EXHAUSTED, None

        snaps = (sub_p.snapshot(), sup_p.snapshot())
        saved = (cell.visits, cell.snapshots)
        cell.visits -= 1
        cell.snapshots = snaps
        try:
            sub_send = sub_outs[0][0].direction is Direction.SEND
            sup_send = sup_outs[0][0].direction is Direction.SEND
            if sub_send and not sup_send:
                rule = "oi"
                result = self._forall_forall(sub_outs, sup_outs, snaps, depth)
            elif sub_send and sup_send:
                rule = "oo"
                result = self._forall_exists(sub_outs, sup_outs, snaps, depth, sub_outer=True)
            elif not sub_send and not sup_send:
                rule = "ii"
                result = self._forall_exists(sub_outs, sup_outs, snaps, depth, sub_outer=False)
            else:
                rule = "io"
                result = self._exists_exists(sub_outs, sup_outs, snaps, depth)
        finally:
            cell.visits, cell.snapshots = saved
        kind, reason, children = result
        if kind is VerdictKind.PROVEN and self.record:
            if self.windows:
                windows = (_window_text(sub_p, snaps[0]), _window_text(sup_p, snaps[1]))
            else:
                windows = ("", "")
            node = Derivation(rule, (i, j), tuple(r.name for r in reductions), *windows)
            node.children = children
            return kind, None, node
        return kind, reason, None

    def child(self, a, ti, b, tj, snaps, depth):
        pair = self.pair
        pair.sub.push(a)
        pair.sup.push(b)
        try:
            kind, reason, node = self.visit(ti, tj, depth + 1)
        finally:
            pair.sub.restore(snaps[0])
            pair.sup.restore(snaps[1])
        if node is not None:
            node.pushed = (str(a), str(b))
        return kind, reason, node

    def _forall_forall(self, sub_outs, sup_outs, snaps, depth):
        worst, reason, nodes = VerdictKind.PROVEN, None, []
        for a, ti in sub_outs:
            for b, tj in sup_outs:
                kind, why, node = self.child(a, ti, b, tj, snaps, depth)
                if kind is VerdictKind.REFUTED:
                    return kind, why, None
                if kind < worst:
                    worst, reason = kind, why
                if node is not None:
                    nodes.append(node)
        return worst, reason, nodes

    def _forall_exists(self, sub_outs, sup_outs, snaps, depth, sub_outer):
        outer, inner = (sub_outs, sup_outs) if sub_outer else (sup_outs, sub_outs)
        worst, reason, nodes = VerdictKind.PROVEN, None, []
        for x, tx in outer:
            kind, why, node = self._exists(
                [(x, tx, y, ty) if sub_outer else (y, ty, x, tx) for y, ty in inner], snaps, depth
            )
            if kind is VerdictKind.REFUTED:
                return kind, why, None
            if kind < worst:
                worst, reason = kind, why
            if node is not None:
                nodes.append(node)
        return worst, reason, nodes

    def _exists_exists(self, sub_outs, sup_outs, snaps, depth):
        candidates = [(a, ti, b, tj) for a, ti in sub_outs for b, tj in sup_outs]
        kind, reason, node = self._exists(candidates, snaps, depth)
        return kind, reason, [node] if node is not None else []

    def _exists(self, candidates, snaps, depth):
        best, reasons = VerdictKind.REFUTED, set()
        for a, ti, b, tj in candidates:
            kind, why, node = self.child(a, ti, b, tj, snaps, depth)
            if kind is VerdictKind.PROVEN:
                return kind, None, node
            if kind > best:
                best = kind
            reasons.add(why)
        if best is VerdictKind.UNKNOWN:
            return best, Reason.BOUND_EXHAUSTED, None
        reason = reasons.pop() if len(reasons) == 1 else Reason.STRUCTURAL_MISMATCH
        return best, reason, None


def _window_text(p: Prefix, snap: Snapshot) -> str:
    live = [a for a, r in zip(p.actions[snap.start:snap.size], p.removed[snap.start:snap.size]) if not r]
    return ".".join(str(a) for a in live) if live else "ε"


def check_subtype(sub: Fsm, sup: Fsm, cfg: CheckerConfig | None = None) -> Verdict:
    """Decide (soundly, boundedly) whether ``sub`` may replace ``sup``."""
    cfg = cfg or CheckerConfig()
    if cfg.tra_chain:
        return check_with_chain(sub, cfg.tra_chain, sup, replace(cfg, tra_chain=None))
    visits = cfg.resolved_visits(sub, sup)
    search = _Search(sub, sup, visits, cfg)
    depth_needed = sub.size * sup.size * visits + 100
    old_limit = sys.getrecursionlimit()
    if old_limit < 4 * depth_needed:
        sys.setrecursionlimit(4 * depth_needed)
    started = time.perf_counter()
    try:
        kind, reason, node = search.visit(sub.initial, sup.initial, 0)
    finally:
        sys.setrecursionlimit(old_limit)
    elapsed = time.perf_counter() - started
    return Verdict(kind, reason, node, search.stats, elapsed)


def check_with_chain(sub: Fsm, mids: list[Fsm], sup: Fsm, cfg: CheckerConfig | None = None) -> Verdict:
    """Transitivity through user-supplied intermediate machines."""
    if not mids:
        raise ConfigError("transitivity chain needs at least one intermediate machine")
    cfg = cfg or CheckerConfig()
    chain = [sub, *mids, sup]
    links = [check_subtype(a, b, cfg) for a, b in zip(chain, chain[1:])]
    worst = min(links, key=lambda v: v.kind)
    stats = Stats(
        nodes=sum(v.stats.nodes for v in links),
        max_depth=max(v.stats.max_depth for v in links),
        peak_prefix=max(v.stats.peak_prefix for v in links),
    )
    return Verdict(
        worst.kind,
        worst.reason,
        None,
        stats,
        sum(v.elapsed for v in links),
        links,
    )
