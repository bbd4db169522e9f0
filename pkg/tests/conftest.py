"""Shared fixtures and seeded generators for the test suite."""
from __future__ import annotations

import random

import pytest

import tmkit
from tmkit import (
    ActionKind,
    BehaviorDecl,
    BehaviorGraph,
    EventDecl,
    FirstDeclared,
    ModelDocument,
    SeededRandom,
    StaticModel,
    build_behavior,
    define_event,
    document_from_parts,
)


@pytest.fixture(scope="session")
def corpus() -> dict[str, ModelDocument]:
    docs: dict[str, ModelDocument] = {}
    for name in tmkit.corpus_names():
        result = tmkit.parse(tmkit.corpus_text(name), source=f"{name}.tm")
        assert result.ok, [d.render() for d in result.diagnostics]
        docs[name] = result.document
    return docs


# -- seeded random generators -------------------------------------------------

_NAME_STEMS = ("gear", "duct", "lobby", "crate", "pump", "relay", "chute", "track")


def machine_name(rng: random.Random, index: int) -> str:
    style = rng.randrange(5)
    stem = rng.choice(_NAME_STEMS)
    if style == 0:
        return f"{stem}{index}"
    if style == 1:
        return f"{stem}-{index}"
    if style == 2:
        return f"{stem} {index}"  # needs quoting
    if style == 3:
        return f"{stem}\\{index}"  # backslash, exercises escaping
    return f"{stem}.{index}".replace(".", "_")


def make_random_model(rng: random.Random, max_machines: int = 8) -> StaticModel:
    """A structurally arbitrary model: flows may well be illegal on purpose."""
    model = StaticModel()
    machine_ids: list[str] = []
    for index in range(rng.randint(1, max_machines)):
        parent = rng.choice(machine_ids) if machine_ids and rng.random() < 0.4 else None
        mid = model.add_machine(machine_name(rng, index), parent)
        machine_ids.append(mid)
        for kind in rng.sample(list(ActionKind), rng.randint(1, len(ActionKind))):
            model.add_stage(mid, kind)
    for index in range(rng.randint(0, 3)):
        model.add_storage(rng.choice(machine_ids), f"stuff{index}")
    nodes = sorted(model.stages) + sorted(model.storages)
    for _ in range(rng.randint(0, 2 * len(nodes))):
        model.add_flow(rng.choice(nodes), rng.choice(nodes), rng.choice((None, "x", "y")))
    stages = sorted(model.stages)
    for _ in range(rng.randint(0, 3)):
        model.add_trigger(rng.choice(stages), rng.choice(stages))
    model.freeze()
    return model


def make_random_document(rng: random.Random) -> ModelDocument:
    """A random model plus regions, events, and behavior for format testing.
    Region health and behavior runnability are irrelevant here."""
    model = make_random_model(rng)
    stages = sorted(model.stages)
    regions: dict[str, tuple[str, ...]] = {}
    events: dict[str, EventDecl] = {}
    for index in range(rng.randint(0, 4)):
        members = tuple(rng.sample(stages, rng.randint(1, min(4, len(stages)))))
        rname = f"zone{index}"
        regions[rname] = members
        label = rng.choice((None, f'step "{index}" of\\the run'))
        # An event literally named like a keyword must survive formatting.
        ename = "choice" if index == 0 and rng.random() < 0.25 else f"ev{index}"
        events[ename] = EventDecl(ename, rname, rng.randint(1, 3), label)
    names = sorted(events)
    decls: list[BehaviorDecl] = []
    for _ in range(rng.randint(0, 4)):
        if not names:
            break
        kind = rng.choice(("seq", "repeat", "choice", "concurrent"))
        if kind == "seq":
            decls.append(BehaviorDecl("seq", rng.choice(names), (rng.choice(names),)))
        elif kind == "repeat":
            decls.append(
                BehaviorDecl(
                    "repeat",
                    rng.choice(names),
                    (rng.choice(names),),
                    rng.choice((None, rng.randint(1, 5))),
                )
            )
        elif len(names) >= 2:
            source = rng.choice((None, rng.choice(names)))
            targets = tuple(rng.sample(names, rng.randint(2, min(3, len(names)))))
            decls.append(BehaviorDecl(kind, source, targets))
    return document_from_parts(model, regions, events, tuple(decls), source="<generated>")


def make_random_behavior(rng: random.Random, max_events: int = 12) -> BehaviorGraph:
    """A runnable behavior graph: single-stage events, forward non-repeat
    edges (event 0 stays initial), repeats anywhere."""
    count = rng.randint(1, max_events)
    model = StaticModel()
    stage_ids: list[str] = []
    for index in range(count):
        mid = model.add_machine(f"unit{index}")
        stage_ids.append(model.add_stage(mid, ActionKind.CREATE))
    model.freeze()
    names = [f"Ev{index}" for index in range(count)]
    events = {
        name: define_event(model, name, [stage_ids[index]], duration=rng.randint(1, 3))
        for index, name in enumerate(names)
    }
    decls: list[BehaviorDecl] = []
    for index in range(1, count):
        if rng.random() < 0.8:
            decls.append(BehaviorDecl("seq", names[rng.randrange(index)], (names[index],)))
    for index in range(count):
        later = names[index + 1 :]
        if len(later) >= 2 and rng.random() < 0.25:
            targets = tuple(rng.sample(later, rng.randint(2, min(3, len(later)))))
            decls.append(BehaviorDecl(rng.choice(("choice", "concurrent")), names[index], targets))
    for index in range(count):
        if rng.random() < 0.3:
            target = names[rng.randrange(index + 1)]
            bound = rng.choice((None, rng.randint(1, 4)))
            decls.append(BehaviorDecl("repeat", names[index], (target,), bound))
    return build_behavior(events, decls)


def make_random_policy(rng: random.Random):
    if rng.random() < 0.5:
        return FirstDeclared()
    return SeededRandom(rng.randrange(2**32))
