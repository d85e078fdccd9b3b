"""Synchronous subtyping: no reordering, only branch widening and selection narrowing."""

from __future__ import annotations

from .core import REFLEXIVE, Direction, Fsm, SortTable
from .projection import local_to_fsm


def _as_fsm(t) -> Fsm:
    return t if isinstance(t, Fsm) else local_to_fsm(t)


def check_sync_subtype(sub, sup, sort_table: SortTable = REFLEXIVE) -> bool:
    """Greatest-fixpoint simulation; revisiting an assumed pair succeeds.

    ``sub``/``sup`` may be local types or FSMs. Sends are covariant in the
    payload sort, receives contravariant.
    """
    a, b = _as_fsm(sub), _as_fsm(sup)
    assumed = set()
    stack = [(a.initial, b.initial)]
    while stack:
        pair = stack.pop()
        if pair in assumed:
            continue
        assumed.add(pair)
        i, j = pair
        outs_a, outs_b = a.transitions[i], b.transitions[j]
        if not outs_a or not outs_b:
            if outs_a or outs_b:
                return False
            continue
        ha, hb = outs_a[0][0], outs_b[0][0]
        if ha.direction is not hb.direction or ha.peer != hb.peer:
            return False
        by_label_a = {act.label: (act, t) for act, t in outs_a}
        by_label_b = {act.label: (act, t) for act, t in outs_b}
        if ha.direction is Direction.SEND:
            # the subtype may select fewer labels
            required = by_label_a
        else:
            # the subtype must accept every label the supertype does
            required = by_label_b
        for label in required:
            if label not in by_label_a or label not in by_label_b:
                return False
            (x, ti), (y, tj) = by_label_a[label], by_label_b[label]
            if x.direction is Direction.SEND:
                ok = sort_table.coerces(x.sort, y.sort)
            else:
                ok = sort_table.coerces(y.sort, x.sort)
            if not ok:
                return False
            stack.append((ti, tj))
    return True
