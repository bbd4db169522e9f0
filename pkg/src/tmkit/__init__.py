"""tmkit: model machines as flows of things, carve events, and run them.

The pipeline: write a model in the small text language (`parse`), check its
structure (`check_model`), carve regions into timed events and connect them
into a behavior graph (`build_from_document`), then execute the graph tick by
tick (`run`) and export models and traces (`model_to_json`, `export_dot`,
`trace_to_json`). Bundled example models live under `corpus_names()`.
"""
from importlib import resources

from tmkit.diagnostics import (
    CATALOGUE,
    Diagnostic,
    RULES,
    Severity,
    SourceSpan,
    has_errors,
)
from tmkit.dsl import (
    BehaviorDecl,
    EventDecl,
    ModelDocument,
    ParseResult,
    RegionDecl,
    document_from_parts,
    parse,
)
from tmkit.events import (
    BehaviorEdge,
    BehaviorEdgeKind,
    BehaviorError,
    BehaviorGraph,
    CoverageReport,
    Event,
    EventError,
    build_behavior,
    build_from_document,
    coverage,
    define_event,
    overlap,
)
from tmkit.export import (
    MODEL_SCHEMA,
    TRACE_SCHEMA,
    ExportError,
    export_dot,
    import_json,
    model_digest,
    model_to_json,
    trace_to_json,
    write_text_atomic,
)
from tmkit.formatter import format_document
from tmkit.model import (
    ActionKind,
    DuplicateEntityError,
    FrozenModelError,
    InvalidNameError,
    ModelError,
    Region,
    StaticModel,
    UnknownEntityError,
)
from tmkit.sim import (
    EventInstance,
    FirstDeclared,
    Phase,
    RaceReport,
    ScriptedExhaustedError,
    Scripted,
    SeededRandom,
    SimState,
    SimTrace,
    SimulationError,
    TickSnapshot,
    behavior_digest,
    init,
    race_report,
    run,
    step,
)
from tmkit.validate import DEFAULT_TABLE, FlowAdjacencyTable, check_model, check_region

__version__ = "0.1.0"


def corpus_names() -> tuple[str, ...]:
    """Names of the bundled example models, without the .tm suffix."""
    root = resources.files(__name__) / "corpus"
    return tuple(
        sorted(entry.name[:-3] for entry in root.iterdir() if entry.name.endswith(".tm"))
    )


def corpus_text(name: str) -> str:
    """Source text of a bundled example model."""
    entry = resources.files(__name__) / "corpus" / f"{name}.tm"
    if not entry.is_file():
        raise KeyError(f"no bundled model named {name!r}; have {corpus_names()}")
    return entry.read_text(encoding="utf-8")


__all__ = [
    "ActionKind",
    "BehaviorDecl",
    "BehaviorEdge",
    "BehaviorEdgeKind",
    "BehaviorError",
    "BehaviorGraph",
    "CATALOGUE",
    "CoverageReport",
    "DEFAULT_TABLE",
    "Diagnostic",
    "DuplicateEntityError",
    "Event",
    "EventDecl",
    "EventError",
    "EventInstance",
    "ExportError",
    "FirstDeclared",
    "FlowAdjacencyTable",
    "FrozenModelError",
    "InvalidNameError",
    "MODEL_SCHEMA",
    "ModelDocument",
    "ModelError",
    "ParseResult",
    "Phase",
    "RaceReport",
    "Region",
    "RegionDecl",
    "RULES",
    "ScriptedExhaustedError",
    "Scripted",
    "SeededRandom",
    "Severity",
    "SimState",
    "SimTrace",
    "SimulationError",
    "SourceSpan",
    "StaticModel",
    "TickSnapshot",
    "TRACE_SCHEMA",
    "UnknownEntityError",
    "behavior_digest",
    "build_behavior",
    "build_from_document",
    "check_model",
    "check_region",
    "corpus_names",
    "corpus_text",
    "coverage",
    "define_event",
    "document_from_parts",
    "export_dot",
    "format_document",
    "has_errors",
    "import_json",
    "init",
    "model_digest",
    "model_to_json",
    "overlap",
    "parse",
    "race_report",
    "run",
    "step",
    "trace_to_json",
    "write_text_atomic",
    "__version__",
]
