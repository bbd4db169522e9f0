"""Execution semantics against hand-computed timelines.

Every expected number in this file was worked out by hand from the stated
rules before the engine ran, then frozen here.
"""
from __future__ import annotations

import pytest

import tmkit
from tmkit import (
    ActionKind,
    BehaviorDecl,
    FirstDeclared,
    ScriptedExhaustedError,
    Scripted,
    SeededRandom,
    SimulationError,
    StaticModel,
    build_behavior,
    build_from_document,
    define_event,
    init,
    race_report,
    run,
    step,
)

import oracles


def simple_events(names_durations):
    model = StaticModel()
    stage_ids = {}
    for name, _ in names_durations:
        mid = model.add_machine(f"host-{name}")
        stage_ids[name] = model.add_stage(mid, ActionKind.CREATE)
    model.freeze()
    return {
        name: define_event(model, name, [stage_ids[name]], duration=duration)
        for name, duration in names_durations
    }


def graph_of(names_durations, decls):
    return build_behavior(simple_events(names_durations), decls)


def live_at(trace, tick):
    return trace.ticks[tick].live


def archived_at(trace, tick):
    return trace.ticks[tick].archived


# -- hand table: the chewing loop --------------------------------------------


def test_eating_run_matches_hand_table(corpus):
    _, graph, _ = build_from_document(corpus["eating"])
    trace = run(graph, FirstDeclared(), horizon=20)

    assert live_at(trace, 0) == ("E1#1", "E2#1")
    assert archived_at(trace, 1) == ("E1#1", "E2#1")
    assert live_at(trace, 1) == ("E3#1",)
    assert live_at(trace, 2) == ("E4#1",)
    assert live_at(trace, 3) == ("E5#1",)
    assert live_at(trace, 4) == ("E6#1",)
    # the chewing loop alternates from here on
    for tick in range(5, 20, 2):
        gen = (tick - 3) // 2 + 1
        assert live_at(trace, tick) == (f"E5#{gen}",)
        if tick + 1 <= 20:
            assert live_at(trace, tick + 1) == (f"E6#{gen}",)
    assert trace.termination == "horizon"
    assert len(trace.ticks) == 21
    assert live_at(trace, 20) == ("E6#9",)
    assert len(trace.record) == 21
    assert oracles.presentism_violations(trace) == []
    assert oracles.cutoff_violations(graph, trace) == []
    assert oracles.repetition_violations(trace) == []


def test_ball_run_reaches_terminal(corpus):
    _, graph, _ = build_from_document(corpus["ball"])
    trace = run(graph, FirstDeclared(), horizon=10)
    assert [snap.live for snap in trace.ticks] == [
        ("Ej#1",),
        ("Ej#1",),
        ("Ej1#1",),
        ("Ej1#1",),
        (),
    ]
    assert trace.termination == "terminal-reached"
    assert [inst.iid for inst in trace.record.entries] == ["Ej#1", "Ej1#1"]
    assert trace.record.entries[0].end == 2
    assert trace.record.entries[1].end == 4


# -- repetition ----------------------------------------------------------------


def test_bounded_self_repeat_drains_to_deadlock():
    graph = graph_of([("A", 1)], [BehaviorDecl("repeat", "A", ("A",), 3)])
    trace = run(graph, FirstDeclared(), horizon=10)
    assert trace.termination == "deadlock"
    assert [inst.iid for inst in trace.record.entries] == ["A#1", "A#2", "A#3"]
    assert [inst.end for inst in trace.record.entries] == [1, 2, 3]
    assert oracles.repetition_violations(trace) == []


def test_repeat_replaces_a_live_target():
    graph = graph_of(
        [("A", 3), ("B", 1)],
        [
            BehaviorDecl("concurrent", None, ("A", "B")),
            BehaviorDecl("repeat", "B", ("A",)),
        ],
    )
    trace = run(graph, FirstDeclared(), horizon=10)
    spans = oracles.lifespans(trace)
    assert spans["A#1"].end == 1  # replaced mid-flight by its successor
    assert spans["A#2"].start == 1 and spans["A#2"].end == 4
    assert oracles.repetition_violations(trace) == []
    assert trace.termination == "terminal-reached"


def test_unbounded_repeat_stops_once_a_terminal_event_finished():
    graph = graph_of(
        [("T", 2), ("F", 1)],
        [
            BehaviorDecl("concurrent", None, ("T", "F")),
            BehaviorDecl("repeat", "F", ("F",)),
        ],
    )
    trace = run(graph, FirstDeclared(), horizon=30)
    assert trace.termination == "terminal-reached"
    spans = oracles.lifespans(trace)
    assert {iid for iid in spans} == {"T#1", "F#1", "F#2"}
    assert len(trace.ticks) == 3


def test_bounded_repeat_runs_out_its_bound_after_terminal():
    graph = graph_of(
        [("T", 2), ("F", 1)],
        [
            BehaviorDecl("concurrent", None, ("T", "F")),
            BehaviorDecl("repeat", "F", ("F",), 5),
        ],
    )
    trace = run(graph, FirstDeclared(), horizon=30)
    assert trace.termination == "terminal-reached"
    spans = oracles.lifespans(trace)
    assert max(span.generation for span in spans.values() if span.event == "F") == 5
    assert len(trace.ticks) == 6  # fifth generation archives at tick 5


# -- joins and the cutoff ------------------------------------------------------


def test_or_join_starts_one_instance():
    graph = graph_of(
        [("A", 1), ("B", 1), ("C", 1)],
        [
            BehaviorDecl("concurrent", None, ("A", "B")),
            BehaviorDecl("seq", "A", ("C",)),
            BehaviorDecl("seq", "B", ("C",)),
        ],
    )
    trace = run(graph, FirstDeclared(), horizon=10)
    spans = oracles.lifespans(trace)
    assert sorted(spans) == ["A#1", "B#1", "C#1"]
    assert spans["C#1"].start == 1 and spans["C#1"].end == 2


def test_cutoff_archives_the_slow_predecessor():
    graph = graph_of(
        [("A", 5), ("C", 1), ("B", 1)],
        [
            BehaviorDecl("concurrent", None, ("A", "C")),
            BehaviorDecl("seq", "A", ("B",)),
            BehaviorDecl("seq", "C", ("B",)),
        ],
    )
    trace = run(graph, FirstDeclared(), horizon=10)
    spans = oracles.lifespans(trace)
    # B's arrival at tick 1 retires A on the spot, five planned ticks or not
    assert spans["B#1"].start == 1
    assert spans["A#1"].end == 1
    assert trace.termination == "terminal-reached"
    assert oracles.cutoff_violations(graph, trace) == []
    assert oracles.presentism_violations(trace) == []


# -- policies ------------------------------------------------------------------


def test_first_declared_takes_the_first_member():
    graph = graph_of(
        [("A", 1), ("B", 1), ("C", 1)],
        [BehaviorDecl("seq", "A", ()), BehaviorDecl("choice", "A", ("B", "C"))][1:],
    )
    trace = run(graph, FirstDeclared(), horizon=10)
    assert trace.ticks[1].choices == (("c1", "B"),)
    assert "B#1" in live_at(trace, 1)


def test_seeded_choice_follows_the_stated_recurrence():
    # state' = (1664525 * state + 1013904223) mod 2^32; index = state' mod n
    graph = graph_of(
        [("A", 1), ("B", 1), ("C", 1), ("D", 1)],
        [BehaviorDecl("choice", "A", ("B", "C", "D"))],
    )
    seed = 7
    state = (1664525 * (seed % 2**32) + 1013904223) % 2**32
    expected = ("B", "C", "D")[state % 3]
    trace = run(graph, SeededRandom(seed), horizon=10)
    assert trace.ticks[1].choices == (("c1", expected),)
    assert trace.seed == 7 and trace.policy == "random"


def test_same_seed_same_story():
    graph = graph_of(
        [("A", 1), ("B", 1), ("C", 1), ("D", 2)],
        [
            BehaviorDecl("choice", "A", ("B", "C")),
            BehaviorDecl("seq", "B", ("D",)),
            BehaviorDecl("seq", "C", ("D",)),
        ],
    )
    first = run(graph, SeededRandom(99), horizon=10)
    second = run(graph, SeededRandom(99), horizon=10)
    assert first == second
    third = run(graph, SeededRandom(100), horizon=10)
    assert third.ticks != first.ticks or third.seed != first.seed


def test_scripted_follows_exhausts_and_rejects():
    decls = [
        BehaviorDecl("choice", "A", ("B", "C")),
        BehaviorDecl("choice", "B", ("D", "E")),
    ]
    durations = [("A", 1), ("B", 1), ("C", 1), ("D", 1), ("E", 1)]

    followed = run(graph_of(durations, decls), Scripted(("B", "E")), horizon=10)
    assert followed.termination == "terminal-reached"
    assert followed.ticks[1].choices == (("c1", "B"),)
    assert followed.ticks[2].choices == (("c2", "E"),)
    assert followed.policy == "scripted:B,E"

    exhausted = run(graph_of(durations, decls), Scripted(("B",)), horizon=10)
    assert exhausted.termination == "scripted-exhausted"

    with pytest.raises(SimulationError):
        run(graph_of(durations, decls), Scripted(("Nope",)), horizon=10)


def test_scripted_exhaustion_at_the_starting_line():
    graph = graph_of(
        [("A", 1), ("B", 1)], [BehaviorDecl("choice", None, ("A", "B"))]
    )
    trace = run(graph, Scripted(()), horizon=10)
    assert trace.termination == "scripted-exhausted"
    assert trace.ticks == ()


# -- engine mechanics ----------------------------------------------------------


def test_step_is_pure():
    graph = graph_of([("A", 2), ("B", 1)], [BehaviorDecl("seq", "A", ("B",))])
    state = init(graph, FirstDeclared())
    frozen_live = dict(state.live)
    frozen_tick = state.tick
    one = step(state, graph, FirstDeclared())
    two = step(state, graph, FirstDeclared())
    assert one == two
    assert state.tick == frozen_tick and state.live == frozen_live
    assert len(state.record) == 0


def test_step_refuses_an_empty_world():
    graph = graph_of([("A", 1)], [])
    state = init(graph, FirstDeclared())
    state = step(state, graph, FirstDeclared())
    assert not state.live
    with pytest.raises(SimulationError):
        step(state, graph, FirstDeclared())


def test_run_validates_horizon():
    graph = graph_of([("A", 1)], [])
    with pytest.raises(ValueError):
        run(graph, FirstDeclared(), horizon=0)


def test_state_presentism_self_check():
    graph = graph_of([("A", 1), ("B", 1)], [BehaviorDecl("seq", "A", ("B",))])
    state = init(graph, FirstDeclared())
    while state.live:
        state.check_presentism()
        state = step(state, graph, FirstDeclared())
    state.check_presentism()
    assert len(state.record) == 2


# -- races ---------------------------------------------------------------------


def race_fixture():
    return graph_of(
        [("R1", 1), ("R2", 1), ("R3", 1), ("R4", 1), ("F", 1)],
        [
            BehaviorDecl("concurrent", None, ("R1", "F")),
            BehaviorDecl("seq", "R1", ("R2",)),
            BehaviorDecl("seq", "R2", ("R3",)),
            BehaviorDecl("seq", "R3", ("R4",)),
            BehaviorDecl("repeat", "F", ("F",), 6),
        ],
    )


def test_race_margin_matches_hand_table():
    graph = race_fixture()
    trace = run(graph, FirstDeclared(), horizon=30)
    report = race_report(graph, trace, "R1", "F")
    assert report.finish_a == 4
    assert report.finish_b == 6
    assert report.winner == "R1"
    assert report.margin == 2
    assert not report.tie


def test_race_requires_concurrent_roots():
    graph = race_fixture()
    trace = run(graph, FirstDeclared(), horizon=30)
    with pytest.raises(SimulationError):
        race_report(graph, trace, "R2", "F")


def test_race_tie():
    graph = graph_of(
        [("X", 2), ("Y", 2)],
        [BehaviorDecl("concurrent", None, ("X", "Y"))],
    )
    trace = run(graph, FirstDeclared(), horizon=10)
    report = race_report(graph, trace, "X", "Y")
    assert report.tie and report.winner is None and report.margin == 0
    assert report.finish_a == report.finish_b == 2


def test_race_with_an_unfinished_stream():
    graph = graph_of(
        [("X", 2), ("Y", 2), ("Z", 9)],
        [
            BehaviorDecl("concurrent", None, ("X", "Y")),
            BehaviorDecl("seq", "Y", ("Z",)),
        ],
    )
    partial = run(graph, FirstDeclared(), horizon=4)  # Z still going
    report = race_report(graph, partial, "X", "Y")
    assert report.finish_a == 2 and report.finish_b is None
    assert report.winner == "X" and report.margin is None


def test_disaster_race_report(corpus):
    _, graph, _ = build_from_document(corpus["disaster"])
    trace = run(graph, Scripted(("Es2",)), horizon=30, seed=7)
    assert trace.termination == "terminal-reached"
    assert len(trace.ticks) == 17
    assert len(trace.record) == 36
    report = race_report(graph, trace, "Erespond", "Efiregrow")
    assert (report.finish_a, report.finish_b) == (12, 16)
    assert report.winner == "Erespond" and report.margin == 4


def test_digest_is_stable_and_sensitive():
    graph = race_fixture()
    assert tmkit.behavior_digest(graph) == tmkit.behavior_digest(race_fixture())
    other = graph_of(
        [("R1", 1), ("R2", 1), ("R3", 1), ("R4", 1), ("F", 2)],
        [
            BehaviorDecl("concurrent", None, ("R1", "F")),
            BehaviorDecl("seq", "R1", ("R2",)),
            BehaviorDecl("seq", "R2", ("R3",)),
            BehaviorDecl("seq", "R3", ("R4",)),
            BehaviorDecl("repeat", "F", ("F",), 6),
        ],
    )
    assert tmkit.behavior_digest(graph) != tmkit.behavior_digest(other)
