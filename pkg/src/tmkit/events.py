"""Eventizer: regions become events, events connect into a behavior graph.

An event is a region of the static model paired with a time submachine. The
time submachine is the event's own transfer->receive->process chain: receive
fires at the tick the event instantiates (opening its "now"), and process
spans `duration` ticks. Behavior edges order events: Sequence, Choice (one
alternative is taken), Concurrent (all branches are taken), and Repeat (the
next generation of the target replaces the previous one, optionally bounded).

Initial events are those with no inbound sequence/choice/concurrent edge from
a source event; choice/concurrent statements written without a source describe
how the initial events start. Terminal events have no outbound edges at all:
an event that only repeats is not terminal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from tmkit.diagnostics import has_errors
from tmkit.dsl import BehaviorDecl, ModelDocument
from tmkit.model import Region, StaticModel
from tmkit.validate import check_region


class EventError(Exception):
    pass


class BehaviorError(Exception):
    pass


TIME_STAGES: tuple[str, str, str] = ("transfer", "receive", "process")


@dataclass(frozen=True, slots=True)
class TimeSubmachine:
    """The machine side of an event: arrival, acceptance, and timed processing."""

    duration: int = 1
    stages: tuple[str, str, str] = TIME_STAGES

    def __post_init__(self) -> None:
        if self.duration < 1:
            raise EventError(f"duration must be >= 1, got {self.duration}")


@dataclass(frozen=True, slots=True, eq=False)
class Event:
    name: str
    region: Region
    time: TimeSubmachine
    model: StaticModel
    label: str | None = None

    @property
    def duration(self) -> int:
        return self.time.duration


class BehaviorEdgeKind(Enum):
    SEQUENCE = "sequence"
    CHOICE = "choice"
    CONCURRENT = "concurrent"
    REPEAT = "repeat"


@dataclass(frozen=True, slots=True)
class BehaviorEdge:
    source: str | None  # None for start groups
    target: str
    kind: BehaviorEdgeKind
    group: str | None = None  # shared by the members of one choice/concurrent group
    bound: int | None = None  # repeat only: max generations of the target


@dataclass(frozen=True, slots=True)
class Group:
    group_id: str
    kind: BehaviorEdgeKind
    source: str | None
    members: tuple[str, ...]


@dataclass(slots=True)
class BehaviorGraph:
    events: dict[str, Event]
    edges: tuple[BehaviorEdge, ...]
    groups: tuple[Group, ...]
    initial: frozenset[str] = field(init=False)
    terminal: frozenset[str] = field(init=False)

    def __post_init__(self) -> None:
        has_inbound: set[str] = set()
        has_outbound: set[str] = set()
        for edge in self.edges:
            if edge.source is not None:
                has_outbound.add(edge.source)
                if edge.kind is not BehaviorEdgeKind.REPEAT:
                    has_inbound.add(edge.target)
        self.initial = frozenset(name for name in self.events if name not in has_inbound)
        self.terminal = frozenset(name for name in self.events if name not in has_outbound)

    def out_edges(self, event: str) -> tuple[BehaviorEdge, ...]:
        return tuple(e for e in self.edges if e.source == event)

    def predecessors(self, event: str) -> frozenset[str]:
        """Events whose completion can instantiate `event` (repeat excluded)."""
        return frozenset(
            e.source
            for e in self.edges
            if e.target == event and e.source is not None and e.kind is not BehaviorEdgeKind.REPEAT
        )

    def start_groups(self) -> tuple[Group, ...]:
        return tuple(g for g in self.groups if g.source is None)

    def reachable_events(self, root: str) -> frozenset[str]:
        if root not in self.events:
            raise BehaviorError(f"unknown event {root!r}")
        seen = {root}
        frontier = [root]
        while frontier:
            name = frontier.pop()
            for edge in self.edges:
                if edge.source == name and edge.target not in seen:
                    seen.add(edge.target)
                    frontier.append(edge.target)
        return frozenset(seen)


def define_event(
    model: StaticModel,
    name: str,
    stage_ids: Iterable[str],
    duration: int = 1,
    label: str | None = None,
) -> Event:
    """Carve an event out of the model. The region must pass the error rules
    (a disconnected region is allowed with a warning; empty or split ones are not)."""
    members = tuple(stage_ids)
    findings = check_region(model, members, subject=name)
    if has_errors(findings):
        first = next(d for d in findings if d.is_error)
        raise EventError(f"region of event {name!r} is invalid: {first.code}: {first.message}")
    region = model.subdiagram(members)
    return Event(name, region, TimeSubmachine(duration), model, label)


def build_behavior(events: Mapping[str, Event], decls: Sequence[BehaviorDecl]) -> BehaviorGraph:
    """Connect events along declared statements and validate the result."""
    edges: list[BehaviorEdge] = []
    groups: list[Group] = []
    choice_seq = 0
    concurrent_seq = 0

    def known(name: str | None) -> None:
        if name is not None and name not in events:
            raise BehaviorError(f"behavior references unknown event {name!r}")

    for decl in decls:
        known(decl.source)
        for target in decl.targets:
            known(target)
        if decl.kind == "seq":
            edges.append(BehaviorEdge(decl.source, decl.targets[0], BehaviorEdgeKind.SEQUENCE))
        elif decl.kind == "repeat":
            if decl.bound is not None and decl.bound < 1:
                raise BehaviorError("repeat bound must be >= 1")
            edges.append(
                BehaviorEdge(decl.source, decl.targets[0], BehaviorEdgeKind.REPEAT, bound=decl.bound)
            )
        elif decl.kind in ("choice", "concurrent"):
            if len(decl.targets) < 2:
                raise BehaviorError(f"a {decl.kind} group needs at least two events")
            if decl.kind == "choice":
                choice_seq += 1
                group_id = f"c{choice_seq}"
                kind = BehaviorEdgeKind.CHOICE
            else:
                concurrent_seq += 1
                group_id = f"k{concurrent_seq}"
                kind = BehaviorEdgeKind.CONCURRENT
            groups.append(Group(group_id, kind, decl.source, decl.targets))
            for target in decl.targets:
                edges.append(BehaviorEdge(decl.source, target, kind, group=group_id))
        else:
            raise BehaviorError(f"unknown behavior statement kind {decl.kind!r}")

    graph = BehaviorGraph(dict(events), tuple(edges), tuple(groups))
    _reject_unannotated_cycles(graph)
    if graph.events and not graph.initial:
        raise BehaviorError("behavior has no initial event: every event has an inbound edge")
    return graph


def _reject_unannotated_cycles(graph: BehaviorGraph) -> None:
    """Cycles must pass through a repeat edge; anything else cannot make progress."""
    forward: dict[str, list[str]] = {name: [] for name in graph.events}
    for edge in graph.edges:
        if edge.source is not None and edge.kind is not BehaviorEdgeKind.REPEAT:
            forward[edge.source].append(edge.target)
    state: dict[str, int] = {}  # 0 visiting, 1 done

    for start in sorted(graph.events):
        if start in state:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        state[start] = 0
        while stack:
            node, index = stack.pop()
            if index < len(forward[node]):
                stack.append((node, index + 1))
                nxt = forward[node][index]
                if nxt not in state:
                    state[nxt] = 0
                    stack.append((nxt, 0))
                elif state[nxt] == 0:
                    raise BehaviorError(
                        f"cycle through {nxt!r} has no repeat edge; annotate it with 'repeat'"
                    )
            else:
                state[node] = 1


@dataclass(frozen=True, slots=True)
class CoverageReport:
    """Which stages the events cover: dead statics and shared (overlap) stages."""

    uncovered: tuple[str, ...]
    overlaps: tuple[tuple[str, tuple[str, ...]], ...]  # (stage id, event names)

    def overlap_stages(self) -> tuple[str, ...]:
        return tuple(stage for stage, _ in self.overlaps)


def coverage(events: Mapping[str, Event], model: StaticModel) -> CoverageReport:
    holders: dict[str, list[str]] = {}
    for name in sorted(events):
        for stage_id in events[name].region.stages:
            holders.setdefault(stage_id, []).append(name)
    uncovered = tuple(sorted(s for s in model.stages if s not in holders))
    overlaps = tuple(
        (stage_id, tuple(holders[stage_id]))
        for stage_id in sorted(holders)
        if len(holders[stage_id]) > 1
    )
    return CoverageReport(uncovered, overlaps)


def overlap(a: Event, b: Event) -> Region | None:
    """Induced subdiagram on the shared stages; None when the events are disjoint."""
    if a.model is not b.model:
        raise EventError("events belong to different models")
    shared = a.region.stages & b.region.stages
    if not shared:
        return None
    return a.model.subdiagram(shared)


def build_from_document(document: ModelDocument) -> tuple[dict[str, Event], BehaviorGraph, CoverageReport]:
    """Eventize a parsed document: define every declared event, connect the
    behavior, and report coverage."""
    events: dict[str, Event] = {}
    for name, decl in document.events.items():
        region = document.regions[decl.region]
        events[name] = define_event(
            document.model, name, region.stage_ids, decl.duration, decl.label
        )
    graph = build_behavior(events, document.behavior)
    report = coverage(events, document.model)
    return events, graph, report
