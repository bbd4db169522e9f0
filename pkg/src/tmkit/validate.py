"""Well-formedness rules for static models and regions.

Every rule reports through the closed diagnostic catalogue:

  F1  same-machine flow edge whose (from kind, to kind) pair is not in the table
  F2  cross-machine flow edge not allowed by the table (defaults: only
      transfer->transfer and transfer->receive may cross a machine boundary)
  T1  trigger whose endpoints sit in one machine on one flow series (warning)
  M1  machine with stages but no entry: no create stage and no inbound
      cross-machine flow into its transfer/receive (warning)
  M2  release stage with no outgoing flow to a transfer (warning)
  D1  duplicate stage kind inside one machine
  R1  empty region
  R2  region not weakly connected (warning)
  R3  region contains exactly one endpoint of a transfer->receive flow edge;
      the atomic move must be wholly inside or wholly outside

Structural impossibilities are errors and block simulation; stylistic findings
are warnings. The flow adjacency table is a value and can be overridden per
call; the default below is the single source of truth for flow legality.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from tmkit.diagnostics import Diagnostic, make
from tmkit.model import ActionKind, StaticModel

Triple = tuple[ActionKind, ActionKind, bool]  # (from kind, to kind, same machine?)


@dataclass(frozen=True, slots=True)
class FlowAdjacencyTable:
    """Set of permitted (from kind, to kind, same-machine?) flow triples."""

    triples: frozenset[Triple]

    def allows(self, src: ActionKind, dst: ActionKind, same_machine: bool) -> bool:
        return (src, dst, same_machine) in self.triples


_K = ActionKind
DEFAULT_TABLE = FlowAdjacencyTable(
    frozenset(
        {
            (_K.TRANSFER, _K.RECEIVE, True),
            (_K.RECEIVE, _K.PROCESS, True),
            (_K.RECEIVE, _K.RELEASE, True),
            (_K.PROCESS, _K.RELEASE, True),
            (_K.PROCESS, _K.CREATE, True),
            (_K.CREATE, _K.RELEASE, True),
            (_K.CREATE, _K.PROCESS, True),
            (_K.RELEASE, _K.TRANSFER, True),
            (_K.TRANSFER, _K.TRANSFER, False),
            (_K.TRANSFER, _K.RECEIVE, False),
        }
    )
)


def _sorted(diagnostics: list[Diagnostic]) -> list[Diagnostic]:
    return sorted(diagnostics, key=lambda d: (d.code, d.subject or "", d.message))


def _flow_components(model: StaticModel) -> dict[str, int]:
    """Weakly-connected component label per node, over flow edges only."""
    label: dict[str, int] = {}
    for index, node in enumerate(sorted(model.stages) + sorted(model.storages)):
        label[node] = index
    changed = True
    while changed:
        changed = False
        for edge in model.flows.values():
            low = min(label[edge.src], label[edge.dst])
            for node in (edge.src, edge.dst):
                if label[node] != low:
                    label[node] = low
                    changed = True
    return label


def check_model(model: StaticModel, table: FlowAdjacencyTable = DEFAULT_TABLE) -> list[Diagnostic]:
    """Check every flow, trigger, and machine of the model. Pure; deterministic order."""
    found: list[Diagnostic] = []

    # D1: one stage per kind per machine (guarded at build time, re-checked for imports).
    per_machine: dict[tuple[str, ActionKind], int] = {}
    for stage in model.stages.values():
        per_machine[(stage.owner, stage.kind)] = per_machine.get((stage.owner, stage.kind), 0) + 1
    for (owner, kind), count in per_machine.items():
        if count > 1:
            found.append(
                make("D1", f"machine has {count} {kind.value} stages", subject=owner)
            )

    # F1/F2: every stage-to-stage flow edge against the adjacency table.
    for edge in model.flows.values():
        if edge.src not in model.stages or edge.dst not in model.stages:
            continue  # storage endpoints are exempt from the kind table
        src = model.stages[edge.src]
        dst = model.stages[edge.dst]
        same = src.owner == dst.owner
        if table.allows(src.kind, dst.kind, same):
            continue
        if same:
            found.append(
                make(
                    "F1",
                    f"flow {edge.src} -> {edge.dst}: {src.kind.value}->"
                    f"{dst.kind.value} is not allowed within a machine",
                    subject=edge.id,
                )
            )
        else:
            found.append(
                make(
                    "F2",
                    f"flow {edge.src} -> {edge.dst}: {src.kind.value}->"
                    f"{dst.kind.value} may not cross machines",
                    subject=edge.id,
                )
            )

    # T1: trigger that never leaves one flow series of one machine.
    components = _flow_components(model)
    for trig in model.triggers.values():
        src_owner = model.stages[trig.src].owner
        dst_owner = model.stages[trig.dst].owner
        if src_owner == dst_owner and components[trig.src] == components[trig.dst]:
            found.append(
                make(
                    "T1",
                    "trigger connects stages already joined by one flow series",
                    subject=trig.id,
                )
            )

    # M1: machines with stages but no way for anything to arrive.
    inbound: set[str] = set()
    for edge in model.flows.values():
        if edge.dst in model.stages:
            dst = model.stages[edge.dst]
            if dst.kind in (ActionKind.TRANSFER, ActionKind.RECEIVE):
                if model.owner_of(edge.src) != dst.owner:
                    inbound.add(dst.owner)
    for machine in model.machines.values():
        if not machine.stages:
            continue
        if ActionKind.CREATE in machine.stages or machine.id in inbound:
            continue
        found.append(make("M1", "machine is unreachable: nothing is created or received", subject=machine.id))

    # M2: release stages that never hand off to a transfer.
    handed_off: set[str] = set()
    for edge in model.flows.values():
        if edge.src in model.stages and edge.dst in model.stages:
            if model.stages[edge.dst].kind is ActionKind.TRANSFER:
                handed_off.add(edge.src)
    for stage in model.stages.values():
        if stage.kind is ActionKind.RELEASE and stage.id not in handed_off:
            found.append(make("M2", "release has no outgoing flow to a transfer", subject=stage.id))

    return _sorted(found)


def check_region(
    model: StaticModel, stage_ids: Iterable[str], subject: str | None = None
) -> list[Diagnostic]:
    """Check one region (as a stage id set) for R1/R2/R3."""
    members = set(stage_ids)
    found: list[Diagnostic] = []
    if not members:
        return [make("R1", "region has no stages", subject=subject)]
    region = model.subdiagram(members)
    if not region.connected:
        found.append(make("R2", "region is not weakly connected", subject=subject))
    for edge in model.flows.values():
        if edge.src not in model.stages or edge.dst not in model.stages:
            continue
        if model.stages[edge.src].kind is ActionKind.TRANSFER and model.stages[edge.dst].kind is ActionKind.RECEIVE:
            inside = (edge.src in members) + (edge.dst in members)
            if inside == 1:
                found.append(
                    make(
                        "R3",
                        f"region splits the atomic move {edge.src} -> {edge.dst}",
                        subject=subject,
                    )
                )
    return _sorted(found)
