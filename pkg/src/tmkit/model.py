"""Static-structure core: machines, stages, flows, triggers, storages, regions.

A model is a tree of machines rooted at a synthetic "world" machine. Each machine
owns at most one stage per action kind. Flow edges connect stages (or storage
nodes) and carry an optional thing label; trigger edges connect stages across
flow series. Models are mutable while being built and immutable after freeze().

Entity ids are deterministic:
  machine id   dotted path from the root, e.g. "mouth.moistening" (root id is "")
  stage id     "<machine id>.<kind>", e.g. "mouth.moistening.process"
  storage id   "<machine id>.<thing>"
  flow id      "f0001", "f0002", ... in insertion order (triggers: "t0001", ...)

Mutation ops only guard referential integrity; legality of flows against the
adjacency table is the validator's job.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence


class ActionKind(Enum):
    CREATE = "create"
    PROCESS = "process"
    RELEASE = "release"
    TRANSFER = "transfer"
    RECEIVE = "receive"


# Canonical emission order for stages inside a machine block.
KIND_ORDER: tuple[ActionKind, ...] = (
    ActionKind.CREATE,
    ActionKind.PROCESS,
    ActionKind.RELEASE,
    ActionKind.TRANSFER,
    ActionKind.RECEIVE,
)

KIND_NAMES: frozenset[str] = frozenset(kind.value for kind in ActionKind)

ROOT_ID = ""
ROOT_NAME = "world"


class ModelError(Exception):
    """Base class for construction and query failures on static models."""


class UnknownEntityError(ModelError):
    pass


class DuplicateEntityError(ModelError):
    pass


class FrozenModelError(ModelError):
    pass


class InvalidNameError(ModelError):
    pass


@dataclass(slots=True)
class Machine:
    id: str
    name: str
    parent: str | None
    children: list[str] = field(default_factory=list)
    stages: dict[ActionKind, str] = field(default_factory=dict)
    storages: list[str] = field(default_factory=list)


@dataclass(frozen=True, slots=True)
class Stage:
    id: str
    kind: ActionKind
    owner: str


@dataclass(frozen=True, slots=True)
class FlowEdge:
    id: str
    src: str
    dst: str
    thing: str | None = None


@dataclass(frozen=True, slots=True)
class TriggerEdge:
    id: str
    src: str
    dst: str


@dataclass(frozen=True, slots=True)
class Storage:
    id: str
    owner: str
    thing: str


@dataclass(frozen=True, slots=True)
class Region:
    """Induced subdiagram: a stage set plus every edge with both endpoints inside."""

    stages: frozenset[str]
    flows: frozenset[str]
    triggers: frozenset[str]
    connected: bool


def validate_name(name: str) -> str:
    """Names must be printable, dot-free, quote-free, and not reserved."""
    if not name:
        raise InvalidNameError("name must not be empty")
    if any(ch in name for ch in '."') or any(ord(ch) < 0x20 or ord(ch) == 0x7F for ch in name):
        raise InvalidNameError(f"name contains a forbidden character: {name!r}")
    if name == ROOT_NAME:
        raise InvalidNameError(f"{ROOT_NAME!r} names the root machine and is reserved")
    if name in KIND_NAMES:
        raise InvalidNameError(f"{name!r} is a stage kind and is reserved")
    return name


class StaticModel:
    """Mutable-until-frozen container for the static structure."""

    def __init__(self) -> None:
        self.machines: dict[str, Machine] = {ROOT_ID: Machine(ROOT_ID, ROOT_NAME, None)}
        self.stages: dict[str, Stage] = {}
        self.flows: dict[str, FlowEdge] = {}
        self.triggers: dict[str, TriggerEdge] = {}
        self.storages: dict[str, Storage] = {}
        self._frozen = False
        self._flow_seq = 0
        self._trigger_seq = 0

    # -- construction -----------------------------------------------------

    @property
    def frozen(self) -> bool:
        return self._frozen

    def _guard_mutable(self) -> None:
        if self._frozen:
            raise FrozenModelError("model is frozen; mutation is not allowed")

    def _machine(self, machine_id: str) -> Machine:
        try:
            return self.machines[machine_id]
        except KeyError:
            raise UnknownEntityError(f"unknown machine: {machine_id!r}") from None

    def _sibling_names(self, machine: Machine) -> set[str]:
        names = {self.machines[c].name for c in machine.children}
        names.update(self.storages[s].thing for s in machine.storages)
        return names

    def add_machine(self, name: str, parent: str | None = None) -> str:
        self._guard_mutable()
        validate_name(name)
        parent_id = ROOT_ID if parent is None else parent
        parent_machine = self._machine(parent_id)
        if name in self._sibling_names(parent_machine):
            raise DuplicateEntityError(f"machine or storage {name!r} already exists in {parent_machine.name!r}")
        machine_id = name if parent_id == ROOT_ID else f"{parent_id}.{name}"
        self.machines[machine_id] = Machine(machine_id, name, parent_id)
        parent_machine.children.append(machine_id)
        return machine_id

    def add_stage(self, machine_id: str, kind: ActionKind) -> str:
        self._guard_mutable()
        machine = self._machine(machine_id)
        if kind in machine.stages:
            raise DuplicateEntityError(f"machine {machine.name!r} already has a {kind.value} stage")
        stage_id = f"{machine_id}.{kind.value}"
        self.stages[stage_id] = Stage(stage_id, kind, machine_id)
        machine.stages[kind] = stage_id
        return stage_id

    def add_storage(self, machine_id: str, thing: str) -> str:
        self._guard_mutable()
        validate_name(thing)
        machine = self._machine(machine_id)
        if thing in self._sibling_names(machine):
            raise DuplicateEntityError(f"machine or storage {thing!r} already exists in {machine.name!r}")
        storage_id = f"{machine_id}.{thing}"
        self.storages[storage_id] = Storage(storage_id, machine_id, thing)
        machine.storages.append(storage_id)
        return storage_id

    def _node(self, node_id: str) -> str:
        if node_id in self.stages or node_id in self.storages:
            return node_id
        raise UnknownEntityError(f"unknown stage or storage: {node_id!r}")

    def add_flow(self, src: str, dst: str, thing: str | None = None) -> str:
        """Insert a flow edge. Endpoints must exist; legality is checked later."""
        self._guard_mutable()
        self._node(src)
        self._node(dst)
        self._flow_seq += 1
        flow_id = f"f{self._flow_seq:04d}"
        self.flows[flow_id] = FlowEdge(flow_id, src, dst, thing)
        return flow_id

    def add_trigger(self, src: str, dst: str) -> str:
        self._guard_mutable()
        for node in (src, dst):
            if node not in self.stages:
                raise UnknownEntityError(f"triggers connect stages; unknown stage: {node!r}")
        self._trigger_seq += 1
        trigger_id = f"t{self._trigger_seq:04d}"
        self.triggers[trigger_id] = TriggerEdge(trigger_id, src, dst)
        return trigger_id

    def freeze(self) -> None:
        """Verify referential integrity and lock the model against mutation."""
        if self._frozen:
            return
        for machine in self.machines.values():
            if machine.id != ROOT_ID and machine.parent not in self.machines:
                raise ModelError(f"machine {machine.id!r} has a dangling parent")
            for child in machine.children:
                if child not in self.machines:
                    raise ModelError(f"machine {machine.id!r} lists a dangling child {child!r}")
        for edge in self.flows.values():
            self._node(edge.src)
            self._node(edge.dst)
        for trig in self.triggers.values():
            if trig.src not in self.stages or trig.dst not in self.stages:
                raise ModelError(f"trigger {trig.id!r} has a dangling endpoint")
        self._frozen = True

    # -- queries ----------------------------------------------------------

    def owner_of(self, node_id: str) -> str:
        """Machine id that owns a stage or storage node."""
        if node_id in self.stages:
            return self.stages[node_id].owner
        if node_id in self.storages:
            return self.storages[node_id].owner
        raise UnknownEntityError(f"unknown stage or storage: {node_id!r}")

    def same_machine(self, a: str, b: str) -> bool:
        return self.owner_of(a) == self.owner_of(b)

    def stage_of(self, machine_id: str, kind: ActionKind) -> str | None:
        return self._machine(machine_id).stages.get(kind)

    def stages_under(self, machine_id: str) -> list[str]:
        """All stage ids owned by a machine or any of its descendants, sorted."""
        found: list[str] = []
        queue = [self._machine(machine_id).id]
        while queue:
            mid = queue.pop()
            machine = self.machines[mid]
            found.extend(machine.stages.values())
            queue.extend(machine.children)
        return sorted(found)

    def resolve(self, segments: Sequence[str]) -> tuple[str, str]:
        """Resolve a dotted path to ("machine" | "stage" | "storage", entity id).

        The first segment may be the reserved root name. Intermediate segments
        must name child machines; the final segment may name a stage kind, a
        child machine, or a storage thing (checked in that order).
        """
        if not segments:
            raise UnknownEntityError("empty path")
        current = self.machines[ROOT_ID]
        start = 0
        if segments[0] == ROOT_NAME:
            start = 1
            if len(segments) == 1:
                return ("machine", ROOT_ID)
        for index in range(start, len(segments)):
            segment = segments[index]
            last = index == len(segments) - 1
            if last and segment in KIND_NAMES:
                stage_id = current.stages.get(ActionKind(segment))
                if stage_id is None:
                    raise UnknownEntityError(
                        f"machine {current.name!r} has no {segment} stage"
                    )
                return ("stage", stage_id)
            child = next(
                (c for c in current.children if self.machines[c].name == segment), None
            )
            if child is not None:
                if last:
                    return ("machine", child)
                current = self.machines[child]
                continue
            if last:
                storage = next(
                    (s for s in current.storages if self.storages[s].thing == segment),
                    None,
                )
                if storage is not None:
                    return ("storage", storage)
            raise UnknownEntityError(
                f"{'.'.join(segments)!r} does not resolve: no {segment!r} in {current.name!r}"
            )
        raise UnknownEntityError("empty path")  # pragma: no cover

    def _adjacency(self) -> dict[str, list[str]]:
        adjacency: dict[str, list[str]] = {}
        for edge in self.flows.values():
            adjacency.setdefault(edge.src, []).append(edge.dst)
        for trig in self.triggers.values():
            adjacency.setdefault(trig.src, []).append(trig.dst)
        return adjacency

    def reachable_stages(self, start: str) -> frozenset[str]:
        """Forward closure over flow and trigger edges; storage nodes are passed
        through but only stage ids are reported. Includes the start stage."""
        if start not in self.stages:
            raise UnknownEntityError(f"unknown stage: {start!r}")
        adjacency = self._adjacency()
        seen = {start}
        frontier = [start]
        while frontier:
            node = frontier.pop()
            for nxt in adjacency.get(node, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return frozenset(node for node in seen if node in self.stages)

    def subdiagram(self, stage_ids: Iterable[str]) -> Region:
        """Induced subdiagram over a non-empty stage set, with weak connectivity."""
        members = set(stage_ids)
        if not members:
            raise ModelError("region must contain at least one stage")
        for stage_id in members:
            if stage_id not in self.stages:
                raise UnknownEntityError(f"unknown stage: {stage_id!r}")
        flow_ids = frozenset(
            e.id for e in self.flows.values() if e.src in members and e.dst in members
        )
        trigger_ids = frozenset(
            t.id for t in self.triggers.values() if t.src in members and t.dst in members
        )
        connected = self._weakly_connected(members, flow_ids, trigger_ids)
        return Region(frozenset(members), flow_ids, trigger_ids, connected)

    def _weakly_connected(
        self, members: set[str], flow_ids: frozenset[str], trigger_ids: frozenset[str]
    ) -> bool:
        if len(members) <= 1:
            return True
        neighbours: dict[str, set[str]] = {m: set() for m in members}
        for fid in flow_ids:
            edge = self.flows[fid]
            neighbours[edge.src].add(edge.dst)
            neighbours[edge.dst].add(edge.src)
        for tid in trigger_ids:
            trig = self.triggers[tid]
            neighbours[trig.src].add(trig.dst)
            neighbours[trig.dst].add(trig.src)
        start = next(iter(sorted(members)))
        seen = {start}
        frontier = [start]
        while frontier:
            node = frontier.pop()
            for nxt in neighbours[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return seen == members
