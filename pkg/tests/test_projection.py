from pathlib import Path

import pytest

from amrcheck.core import Action, End, Fsm, Rec, Var, branch, fsm_isomorphic, msg, select
from amrcheck.corpus import ALTERNATING_BIT, RING_CHOICE, STREAM_SCR, nested_choice_global, ring_global
from amrcheck.projection import (
    NonParticipantWarning,
    ProjectionError,
    ProjectionReason,
    local_to_fsm,
    project,
    validate_fsm,
)
from amrcheck.syntax import parse_action, parse_fsm_dot, parse_global, parse_local

FIXTURES = Path(__file__).parent / "fixtures"


def renamed(fsm: Fsm, old: str, new: str) -> Fsm:
    trans = tuple(
        tuple((Action(a.direction, a.peer, new if a.label == old else a.label, a.sort), t) for a, t in outs)
        for outs in fsm.transitions
    )
    return Fsm(fsm.role, trans, fsm.initial)


@pytest.mark.parametrize("role, fixture", [("s", "source.dot"), ("k", "kernel.dot"), ("t", "sink.dot")])
def test_double_buffering_projects_to_the_drawn_machines(role, fixture):
    proto = parse_global((FIXTURES / "double_buffering.scr").read_text())
    projected = local_to_fsm(project(proto.body, role), role)
    drawn = parse_fsm_dot((FIXTURES / fixture).read_text())
    assert drawn.role == role
    # the drawing calls the payload message "value" where the protocol says "copy"
    assert fsm_isomorphic(projected, renamed(drawn, "value", "copy"))


def test_stream_projections():
    g = parse_global(STREAM_SCR).body
    assert project(g, "t") == Rec("x", select("s", ("ready", branch("s", ("value", Var("x")), ("stop", End())))))
    assert project(g, "s") == Rec("x", branch("t", ("ready", select("t", ("value", Var("x")), ("stop", End())))))


def test_third_party_branches_merge_when_identical():
    g = RING_CHOICE.global_type()
    assert project(g, "a") == parse_local("rec t . b!add . c?add . t")
    assert project(g, "b") == RING_CHOICE.sup


def test_alternating_bit_receiver_matches_the_printed_projection():
    g = ALTERNATING_BIT.global_type()
    assert fsm_isomorphic(local_to_fsm(project(g, "r")), local_to_fsm(ALTERNATING_BIT.sup))


def test_unmergeable_third_party():
    g = msg("a", "b", ("x", msg("a", "c", ("m", End()))), ("y", msg("a", "c", ("n", End()))))
    with pytest.raises(ProjectionError) as info:
        project(g, "c")
    assert info.value.reason is ProjectionReason.UNMERGEABLE_BRANCHES
    assert info.value.location == ("a->b",)


def test_non_participant_gets_end_with_a_warning():
    g = msg("a", "b", ("m", End()))
    with pytest.warns(NonParticipantWarning):
        assert project(g, "z") == End()


def test_recursion_the_role_never_joins_collapses():
    g = msg("a", "c", ("go", Rec("x", msg("a", "b", ("ping", Var("x"))))))
    assert project(g, "c") == branch("a", ("go", End()))


def test_inner_loop_escaping_to_an_outer_one_is_kept():
    g = Rec("t", msg("a", "b", ("m", Rec("u", msg("a", "c", ("n", Var("t")))))))
    assert project(g, "b") == Rec("t", branch("a", ("m", Var("t"))))


def test_fsm_shapes():
    fsm = local_to_fsm(parse_local("rec x . s!ready . s?copy . t?ready . t!copy . x"))
    assert fsm.size == 4 and not any(fsm.is_terminal(s) for s in range(4))
    ring_sub = local_to_fsm(RING_CHOICE.sub)
    # both choice continuations are the same term and share a state
    assert ring_sub.size == 2
    assert validate_fsm(local_to_fsm(End())) == []


def test_every_family_global_projects_cleanly():
    for n in range(5):
        g = nested_choice_global(n)
        if n:
            assert validate_fsm(local_to_fsm(project(g, "x"))) == []
    for n in range(2, 8):
        for r in range(n):
            assert validate_fsm(local_to_fsm(project(ring_global(n), f"p{r}"))) == []


def test_validate_fsm_reports_problems():
    mixed = Fsm("", (((parse_action("s!a"), 1), (parse_action("t!b"), 1)), ()), 0)
    assert any("mixed peers" in p for p in validate_fsm(mixed))
    unreachable = Fsm("", ((), ((parse_action("s!a"), 0),)), 0)
    assert validate_fsm(unreachable) == ["state 1: unreachable"]
