"""Serialization: DOT rendering, versioned JSON export/import, atomic writes.

JSON documents carry a schema tag: "tm-model/1" for static models (optionally
with regions, events, and behavior) and "tm-trace/1" for run traces. Traces
reference their inputs by sha256 content digests. All emission is in sorted-id
order so identical inputs produce identical bytes.

DOT output renders machines as nested clusters, stages as boxes, storages as
cylinders, flows as solid arrows (labelled with their thing), and triggers as
dashed arrows. Regions are shown as node fill colors with a legend in comments:
regions may overlap and span machines, which rules out literal clusters. With
behavior included, a second digraph for the event graph follows the first.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile

from tmkit.dsl import BehaviorDecl, EventDecl, ModelDocument, document_from_parts
from tmkit.events import BehaviorGraph
from tmkit.model import ActionKind, ROOT_ID, StaticModel
from tmkit.sim import SimTrace, behavior_digest


class ExportError(Exception):
    pass


MODEL_SCHEMA_ID = "tm-model/1"
TRACE_SCHEMA_ID = "tm-trace/1"

MODEL_SCHEMA: dict = {
    "type": "object",
    "required": ["schema", "machines", "stages", "flows", "triggers", "storages"],
    "properties": {
        "schema": {"const": MODEL_SCHEMA_ID},
        "machines": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "name", "parent", "children", "stages", "storages"],
                "properties": {
                    "id": {"type": "string"},
                    "name": {"type": "string"},
                    "parent": {"type": ["string", "null"]},
                    "children": {"type": "array", "items": {"type": "string"}},
                    "stages": {"type": "array", "items": {"type": "string"}},
                    "storages": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
        "stages": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind", "owner"],
                "properties": {
                    "id": {"type": "string"},
                    "kind": {"enum": [k.value for k in ActionKind]},
                    "owner": {"type": "string"},
                },
            },
        },
        "flows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "src", "dst", "thing"],
                "properties": {
                    "id": {"type": "string"},
                    "src": {"type": "string"},
                    "dst": {"type": "string"},
                    "thing": {"type": ["string", "null"]},
                },
            },
        },
        "triggers": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "src", "dst"],
                "properties": {
                    "id": {"type": "string"},
                    "src": {"type": "string"},
                    "dst": {"type": "string"},
                },
            },
        },
        "storages": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "owner", "thing"],
                "properties": {
                    "id": {"type": "string"},
                    "owner": {"type": "string"},
                    "thing": {"type": "string"},
                },
            },
        },
        "regions": {
            "type": "object",
            "additionalProperties": {"type": "array", "items": {"type": "string"}},
        },
        "events": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["region", "duration", "label"],
                "properties": {
                    "region": {"type": "string"},
                    "duration": {"type": "integer", "minimum": 1},
                    "label": {"type": ["string", "null"]},
                },
            },
        },
        "behavior": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind", "source", "targets", "bound"],
                "properties": {
                    "kind": {"enum": ["seq", "choice", "concurrent", "repeat"]},
                    "source": {"type": ["string", "null"]},
                    "targets": {"type": "array", "items": {"type": "string"}},
                    "bound": {"type": ["integer", "null"]},
                },
            },
        },
    },
}

TRACE_SCHEMA: dict = {
    "type": "object",
    "required": ["schema", "model", "behavior", "policy", "seed", "horizon", "ticks", "termination"],
    "properties": {
        "schema": {"const": TRACE_SCHEMA_ID},
        "model": {"type": "string"},
        "behavior": {"type": "string"},
        "policy": {"type": "string"},
        "seed": {"type": ["integer", "null"]},
        "horizon": {"type": "integer", "minimum": 1},
        "termination": {
            "enum": ["horizon", "terminal-reached", "deadlock", "scripted-exhausted"]
        },
        "ticks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["tick", "live", "archived", "choices"],
                "properties": {
                    "tick": {"type": "integer", "minimum": 0},
                    "live": {"type": "array", "items": {"type": "string"}},
                    "archived": {"type": "array", "items": {"type": "string"}},
                    "choices": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["group", "chosen"],
                            "properties": {
                                "group": {"type": "string"},
                                "chosen": {"type": "string"},
                            },
                        },
                    },
                },
            },
        },
    },
}


def write_text_atomic(path: str, text: str) -> None:
    """Write via a sibling temp file and rename; never leaves partial output."""
    directory = os.path.dirname(os.path.abspath(path))
    handle = tempfile.NamedTemporaryFile(
        "w", encoding="utf-8", dir=directory, prefix=".tmkit-", delete=False
    )
    try:
        with handle:
            handle.write(text)
        os.replace(handle.name, path)
    except BaseException:
        try:
            os.unlink(handle.name)
        except OSError:
            pass
        raise


def _model_payload(document: ModelDocument, include_regions: bool, include_behavior: bool) -> dict:
    model = document.model
    payload: dict = {
        "schema": MODEL_SCHEMA_ID,
        "machines": [
            {
                "id": machine.id,
                "name": machine.name,
                "parent": machine.parent,
                "children": sorted(machine.children),
                "stages": sorted(machine.stages.values()),
                "storages": sorted(machine.storages),
            }
            for machine in sorted(model.machines.values(), key=lambda m: m.id)
        ],
        "stages": [
            {"id": s.id, "kind": s.kind.value, "owner": s.owner}
            for s in sorted(model.stages.values(), key=lambda s: s.id)
        ],
        "flows": [
            {"id": e.id, "src": e.src, "dst": e.dst, "thing": e.thing}
            for e in sorted(model.flows.values(), key=lambda e: e.id)
        ],
        "triggers": [
            {"id": t.id, "src": t.src, "dst": t.dst}
            for t in sorted(model.triggers.values(), key=lambda t: t.id)
        ],
        "storages": [
            {"id": s.id, "owner": s.owner, "thing": s.thing}
            for s in sorted(model.storages.values(), key=lambda s: s.id)
        ],
    }
    if include_regions:
        payload["regions"] = {
            name: list(decl.stage_ids) for name, decl in sorted(document.regions.items())
        }
        payload["events"] = {
            name: {"region": decl.region, "duration": decl.duration, "label": decl.label}
            for name, decl in sorted(document.events.items())
        }
    if include_behavior:
        payload["behavior"] = [
            {
                "kind": decl.kind,
                "source": decl.source,
                "targets": list(decl.targets),
                "bound": decl.bound,
            }
            for decl in document.behavior
        ]
    return payload


def model_to_json(
    document: ModelDocument, include_regions: bool = False, include_behavior: bool = False
) -> str:
    if not document.model.frozen:
        raise ExportError("model must be frozen before export")
    payload = _model_payload(document, include_regions, include_behavior)
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def model_digest(model: StaticModel) -> str:
    """Content digest over the structure only. Flow and trigger ids reflect
    declaration order, so they are left out: two models that draw the same
    diagram hash alike no matter how their sources were arranged."""
    payload = {
        "machines": [
            {
                "id": machine.id,
                "name": machine.name,
                "parent": machine.parent,
                "children": sorted(machine.children),
                "stages": sorted(machine.stages.values()),
                "storages": sorted(machine.storages),
            }
            for machine in sorted(model.machines.values(), key=lambda m: m.id)
        ],
        "flows": sorted(
            [e.src, e.dst, e.thing or ""] for e in model.flows.values()
        ),
        "triggers": sorted([t.src, t.dst] for t in model.triggers.values()),
        "storages": [
            {"id": s.id, "owner": s.owner, "thing": s.thing}
            for s in sorted(model.storages.values(), key=lambda s: s.id)
        ],
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def import_json(text: str) -> ModelDocument:
    """Rebuild a document from tm-model/1 JSON. Ids are reassigned in sorted
    order, which reproduces exported ids and keeps hand-written files isomorphic."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ExportError(f"not JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("schema") != MODEL_SCHEMA_ID:
        raise ExportError(f"expected schema {MODEL_SCHEMA_ID!r}")
    model = StaticModel()
    try:
        machines = sorted(payload["machines"], key=lambda m: m["id"].count("."))
        ids: dict[str, str] = {ROOT_ID: ROOT_ID}
        for entry in machines:
            if entry["id"] == ROOT_ID:
                continue
            parent = entry["parent"]
            new_id = model.add_machine(entry["name"], ids[parent] if parent != ROOT_ID else None)
            ids[entry["id"]] = new_id
        nodes: dict[str, str] = {}
        for entry in sorted(payload["stages"], key=lambda s: s["id"]):
            nodes[entry["id"]] = model.add_stage(ids[entry["owner"]], ActionKind(entry["kind"]))
        for entry in sorted(payload["storages"], key=lambda s: s["id"]):
            nodes[entry["id"]] = model.add_storage(ids[entry["owner"]], entry["thing"])
        for entry in sorted(payload["flows"], key=lambda e: e["id"]):
            model.add_flow(nodes[entry["src"]], nodes[entry["dst"]], entry.get("thing"))
        for entry in sorted(payload["triggers"], key=lambda t: t["id"]):
            model.add_trigger(nodes[entry["src"]], nodes[entry["dst"]])
        regions = {
            name: tuple(nodes[sid] for sid in stage_ids)
            for name, stage_ids in payload.get("regions", {}).items()
        }
        events = {
            name: EventDecl(name, body["region"], body.get("duration", 1), body.get("label"))
            for name, body in payload.get("events", {}).items()
        }
        behavior = tuple(
            BehaviorDecl(
                entry["kind"],
                entry.get("source"),
                tuple(entry["targets"]),
                entry.get("bound"),
            )
            for entry in payload.get("behavior", [])
        )
        return document_from_parts(model, regions, events, behavior, source="<json>")
    except ExportError:
        raise
    except Exception as exc:
        raise ExportError(f"malformed model document: {exc}") from exc


def trace_to_json(trace: SimTrace, behavior: BehaviorGraph, model: StaticModel) -> str:
    payload = {
        "schema": TRACE_SCHEMA_ID,
        "model": model_digest(model),
        "behavior": behavior_digest(behavior),
        "policy": trace.policy,
        "seed": trace.seed,
        "horizon": trace.horizon,
        "termination": trace.termination,
        "ticks": [
            {
                "tick": snap.tick,
                "live": list(snap.live),
                "archived": list(snap.archived),
                "choices": [{"group": g, "chosen": c} for g, c in snap.choices],
            }
            for snap in trace.ticks
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# -- DOT ---------------------------------------------------------------------

_REGION_COLORS = (
    "#aec7e8",
    "#ffbb78",
    "#98df8a",
    "#ff9896",
    "#c5b0d5",
    "#c49c94",
    "#f7b6d2",
    "#dbdb8d",
    "#9edae5",
    "#cccccc",
)
_OVERLAP_COLOR = "#bbbbbb"


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _node_colors(document: ModelDocument) -> tuple[dict[str, str], list[str]]:
    colors: dict[str, str] = {}
    legend: list[str] = []
    counts: dict[str, int] = {}
    for index, name in enumerate(sorted(document.regions)):
        color = _REGION_COLORS[index % len(_REGION_COLORS)]
        legend.append(f"// region {name}: {color}")
        for stage_id in document.regions[name].stage_ids:
            counts[stage_id] = counts.get(stage_id, 0) + 1
            colors[stage_id] = color if counts[stage_id] == 1 else _OVERLAP_COLOR
    if any(count > 1 for count in counts.values()):
        legend.append(f"// shared by several regions: {_OVERLAP_COLOR}")
    return colors, legend


def _emit_cluster(
    document: ModelDocument,
    machine_id: str,
    indent: str,
    colors: dict[str, str],
    lines: list[str],
) -> None:
    model = document.model
    machine = model.machines[machine_id]
    lines.append(f"{indent}subgraph cluster_{_cluster_key(machine_id)} {{")
    lines.append(f"{indent}  label={_dot_quote(machine.name)};")
    for stage_id in sorted(machine.stages.values()):
        stage = model.stages[stage_id]
        fill = colors.get(stage_id, "white")
        lines.append(
            f"{indent}  {_dot_quote(stage_id)} "
            f"[label={_dot_quote(stage.kind.value)}, fillcolor={_dot_quote(fill)}];"
        )
    for storage_id in sorted(machine.storages):
        storage = model.storages[storage_id]
        lines.append(
            f"{indent}  {_dot_quote(storage_id)} "
            f"[label={_dot_quote(storage.thing)}, shape=cylinder, fillcolor=white];"
        )
    for child_id in sorted(machine.children, key=lambda c: model.machines[c].name):
        _emit_cluster(document, child_id, indent + "  ", colors, lines)
    lines.append(f"{indent}}}")


def _cluster_key(machine_id: str) -> str:
    return hashlib.sha256(machine_id.encode("utf-8")).hexdigest()[:12]


def export_dot(
    document: ModelDocument,
    behavior: BehaviorGraph | None = None,
    include_regions: bool = True,
) -> str:
    """Render the static model (and optionally the behavior graph) as DOT text."""
    model = document.model
    colors, legend = _node_colors(document) if include_regions else ({}, [])
    lines = ["digraph model {"]
    lines.extend(f"  {line}" for line in legend)
    lines.append("  rankdir=LR;")
    lines.append('  node [shape=box, style="rounded,filled", fillcolor=white];')
    root = model.machines[ROOT_ID]
    for child_id in sorted(root.children, key=lambda c: model.machines[c].name):
        _emit_cluster(document, child_id, "  ", colors, lines)
    for edge in sorted(model.flows.values(), key=lambda e: e.id):
        label = f" [label={_dot_quote(edge.thing)}]" if edge.thing else ""
        lines.append(f"  {_dot_quote(edge.src)} -> {_dot_quote(edge.dst)}{label};")
    for trig in sorted(model.triggers.values(), key=lambda t: t.id):
        lines.append(f"  {_dot_quote(trig.src)} -> {_dot_quote(trig.dst)} [style=dashed];")
    lines.append("}")

    if behavior is not None:
        lines.append("")
        lines.append("digraph behavior {")
        lines.append("  rankdir=LR;")
        lines.append('  node [shape=ellipse, style=filled, fillcolor="#f2f2f2"];')
        for name in sorted(behavior.events):
            event = behavior.events[name]
            label = name if event.duration == 1 else f"{name} ({event.duration})"
            lines.append(f"  {_dot_quote(name)} [label={_dot_quote(label)}];")
        start_needed = any(g.source is None for g in behavior.groups)
        if start_needed:
            lines.append('  "__start__" [shape=point, label=""];')
        for edge in behavior.edges:
            src = _dot_quote(edge.source) if edge.source is not None else '"__start__"'
            attrs: list[str] = []
            if edge.kind.value == "repeat":
                style = "dashed"
                text = "repeat" if edge.bound is None else f"repeat <= {edge.bound}"
                attrs.append(f"label={_dot_quote(text)}")
            elif edge.group is not None:
                style = "solid"
                attrs.append(f"label={_dot_quote(edge.group)}")
            else:
                style = "solid"
            attrs.append(f"style={style}")
            lines.append(f"  {src} -> {_dot_quote(edge.target)} [{', '.join(attrs)}];")
        lines.append("}")
    return "\n".join(lines) + "\n"
