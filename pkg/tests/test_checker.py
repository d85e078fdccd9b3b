import random

import pytest

from amrcheck.bench import family_instances
from amrcheck.checker import (
    CheckerConfig,
    ConfigError,
    Previous,
    Reason,
    VerdictKind,
    check_assumption,
    check_subtype,
    check_with_chain,
    default_visits,
    node_ceiling,
)
from amrcheck.core import REFLEXIVE, Direction, Prefix, SortTable, recv, send
from amrcheck.corpus import (
    ALTERNATING_BIT,
    DOUBLE_BUFFERING,
    FORGOTTEN_ACTIONS,
    PAIRS,
    REORDER_P,
    REORDER_Q,
    RING_CHOICE,
)
from amrcheck.prefix import PrefixPair
from amrcheck.projection import local_to_fsm
from amrcheck.syntax import parse_local
from generators import random_local, reference_normal_form


def fsms(pair):
    return local_to_fsm(pair.sub), local_to_fsm(pair.sup)


def check(pair, visits=None, **kw):
    sub, sup = fsms(pair)
    return check_subtype(sub, sup, CheckerConfig(visits=visits or pair.visits, **kw))


def replay(derivation, sub, sup, sorts=REFLEXIVE):
    """Re-derive every step of an accepting derivation from scratch."""

    def edge_target(fsm, state, text):
        hits = [t for a, t in fsm.transitions[state] if str(a) == text]
        assert len(hits) == 1, (state, text)
        return hits[0]

    def walk(node, states, pi, rho, history):
        if node.pushed:
            assert edge_target(sub, states[0], node.pushed[0]) == node.states[0]
            assert edge_target(sup, states[1], node.pushed[1]) == node.states[1]
            pi = pi + [_parse(node.pushed[0])]
            rho = rho + [_parse(node.pushed[1])]
        assert len(pi) == len(rho)
        names, pi, rho = reference_normal_form(pi, rho, sorts)
        assert tuple(names) == node.reductions
        i, j = node.states
        if node.rule == "end":
            assert not pi and not rho and sub.is_terminal(i) and sup.is_terminal(j)
            return
        if node.rule == "asm":
            assert (i, j, tuple(pi), tuple(rho)) in history
            return
        outs_sub, outs_sup = sub.transitions[i], sup.transitions[j]
        sends = (outs_sub[0][0].direction is Direction.SEND, outs_sup[0][0].direction is Direction.SEND)
        expected = {
            (True, False): ("oi", len(outs_sub) * len(outs_sup)),
            (True, True): ("oo", len(outs_sub)),
            (False, False): ("ii", len(outs_sup)),
            (False, True): ("io", 1),
        }[sends]
        assert (node.rule, len(node.children)) == expected
        history = history | {(i, j, tuple(pi), tuple(rho))}
        for child in node.children:
            walk(child, (i, j), pi, rho, history)

    walk(derivation, (sub.initial, sup.initial), [], [], frozenset())


def _parse(text):
    from amrcheck.syntax import parse_action

    return parse_action(text)


@pytest.mark.parametrize("pair", [DOUBLE_BUFFERING, RING_CHOICE, ALTERNATING_BIT, REORDER_Q], ids=lambda p: p.name)
def test_proven_pairs_and_their_derivations_replay(pair):
    v = check(pair)
    assert v.kind is VerdictKind.PROVEN
    sub, sup = fsms(pair)
    replay(v.derivation, sub, sup)


def test_double_buffering_closes_the_loop_with_b_i_i_o():
    v = check(DOUBLE_BUFFERING)
    leaves = [n for _, n in v.derivation.walk() if not n.children]
    assert [(n.rule, n.reductions) for n in leaves] == [("asm", ("B", "i", "i", "o"))]


def test_loop_closes_on_the_first_revisit():
    # the assumption check runs before the visit bound, so one entry per pair suffices
    for visits in (1, 2, 3):
        assert check(DOUBLE_BUFFERING, visits=visits).proven


def test_forgotten_actions_are_not_proven():
    for visits in (1, 2, 3, 6):
        v = check(FORGOTTEN_ACTIONS, visits=visits)
        assert v.kind is not VerdictKind.PROVEN
        assert v.reason is Reason.BOUND_EXHAUSTED


def test_forgotten_actions_window_grows():
    # at re-entry the supertype window still holds the unmatched q?lp
    p_sub, p_sup = Prefix(), Prefix([recv("q", "lp")])
    cell = Previous(0, (p_sub.snapshot(), p_sup.snapshot()))
    p_sub.push(recv("p", "l"))
    p_sup.push(recv("p", "l"))
    pp = PrefixPair(p_sub, p_sup)
    from amrcheck.prefix import reduce_full

    assert [r.name for r in reduce_full(pp)] == ["A"]
    assert not check_assumption(cell, pp)


def test_reordered_receive_is_refuted_at_any_bound():
    for visits in range(1, 6):
        v = check(REORDER_P, visits=visits)
        assert (v.kind, v.reason) == (VerdictKind.REFUTED, Reason.FAIL_EARLY)


def test_check_assumption_examples():
    pp = PrefixPair()
    cell = Previous(1, pp.snapshot())
    assert check_assumption(cell, pp)
    pp = PrefixPair(Prefix([send("p", "a"), recv("q", "b")]), Prefix([recv("q", "b"), recv("r", "c")]))
    cell = Previous(1, pp.snapshot())
    assert check_assumption(cell, pp)
    assert not check_assumption(Previous(1, None), pp)


def test_terminal_mismatch():
    v = check_subtype(local_to_fsm(parse_local("end")), local_to_fsm(parse_local("p!a . end")))
    assert (v.kind, v.reason) == (VerdictKind.REFUTED, Reason.TERMINAL_MISMATCH)
    v = check_subtype(local_to_fsm(parse_local("p!a . end")), local_to_fsm(parse_local("q?b . end")))
    # the pending actions can never be matched once both sides have ended
    assert (v.kind, v.reason) == (VerdictKind.REFUTED, Reason.TERMINAL_MISMATCH)
    v = check_subtype(local_to_fsm(parse_local("p!a . end")), local_to_fsm(parse_local("p!b . end")))
    assert (v.kind, v.reason) == (VerdictKind.REFUTED, Reason.FAIL_EARLY)


def test_existential_prefers_unknown_over_refuted():
    # the q!b branch ends in a terminal mismatch, the q!c branch runs out of visits
    sub = local_to_fsm(parse_local("rec x . p!a . x"))
    sup = local_to_fsm(parse_local("q!{ b . end, c . rec y . p!a . q!d . y }"))
    v = check_subtype(sub, sup, CheckerConfig(visits=1))
    assert (v.kind, v.reason) == (VerdictKind.UNKNOWN, Reason.BOUND_EXHAUSTED)


def test_visits_zero_is_a_configuration_error():
    sub, sup = fsms(DOUBLE_BUFFERING)
    with pytest.raises(ConfigError):
        check_subtype(sub, sup, CheckerConfig(visits=0))


def test_default_bound():
    sub, sup = fsms(DOUBLE_BUFFERING)
    assert default_visits(sub, sup) == sub.size + sup.size + 1
    assert check_subtype(sub, sup).kind is VerdictKind.PROVEN


def test_sort_table_is_consulted():
    sub = local_to_fsm(parse_local("p!a(nat) . p?b(int) . end"))
    sup = local_to_fsm(parse_local("p!a(int) . p?b(nat) . end"))
    assert check_subtype(sub, sup, CheckerConfig(visits=1)).kind is VerdictKind.REFUTED
    assert check_subtype(sub, sup, CheckerConfig(visits=1, sort_table=SortTable.standard())).proven


def test_chain():
    sub, sup = fsms(DOUBLE_BUFFERING)
    assert check_with_chain(sup, [sup], sup).proven
    v = check_with_chain(sub, [sup], sup, CheckerConfig(visits=2))
    assert v.proven and len(v.links) == 2
    bad_sub, bad_sup = fsms(REORDER_P)
    assert not check_with_chain(bad_sub, [bad_sup], bad_sup).proven
    assert check_subtype(sub, sup, CheckerConfig(visits=2, tra_chain=[sup])).proven
    with pytest.raises(ConfigError):
        check_with_chain(sub, [], sup)


def test_search_stays_within_the_node_and_space_ceilings():
    instances = [fsms(pair) for pair in PAIRS]
    for family in ("streaming", "k_buffering", "nested_choice", "ring"):
        for n in range(2, 6):
            instances += family_instances(family, n)
    for sub, sup in instances:
        for visits in (1, 2, 4):
            v = check_subtype(sub, sup, CheckerConfig(visits=visits))
            depth, nodes = node_ceiling(sub, sup, visits)
            assert v.stats.nodes <= nodes
            assert v.stats.max_depth <= depth
            b = max(sub.max_branching(), sup.max_branching(), 1)
            assert v.stats.peak_prefix <= visits * max(sub.size, sup.size) * b


def test_bound_monotonicity_on_the_corpus():
    for pair in PAIRS:
        base = check(pair).kind
        for extra in (1, 5):
            later = check(pair, visits=pair.visits + extra).kind
            if base is VerdictKind.PROVEN:
                assert later is VerdictKind.PROVEN
            if base is VerdictKind.REFUTED:
                assert later is VerdictKind.REFUTED


def test_reflexivity_on_random_types():
    rng = random.Random(21)
    for _ in range(200):
        m = local_to_fsm(random_local(rng, 4))
        assert check_subtype(m, m, CheckerConfig(visits=m.size + 1)).proven


def test_superset_assumption_hook_is_silent_on_the_corpus():
    for pair in PAIRS:
        v = check(pair, cross_check_asm=True)
        assert v.stats.asm_superset_mismatches == 0


def test_json_schema_is_stable():
    keys = {"verdict", "reason", "nodes_explored", "elapsed_seconds"}
    for pair in PAIRS:
        v = check(pair)
        assert set(v.to_json()) == keys
        assert set(v.to_json(trace=True)) == keys | {"trace"}


def test_windows_render_on_request():
    v = check(DOUBLE_BUFFERING, windows=True)
    lines = v.derivation.lines()
    assert lines[-1].strip().startswith("asm (1, 1) push t!copy | s!ready reduce[B,i,i,o]")
    assert "<s!ready.s?copy.t?ready, s?copy.t?ready.t!copy>" in lines[-2]
