from dataclasses import replace

import pytest

from awm.core import parse_workflow, render_workflow
from awm.errors import ModeError
from awm.memory import BASE_ACTION_DOCS, WorkflowStore, add_workflows, normalize_mode, seed_offline

from fixtures import MAP_BLOCK, REDDIT_BLOCK, SHOPPING_BLOCK, workflow


def _novel(i):
    return workflow(f"n{i}", "shopping", f"Goal {i}", ["click('1')", f"fill('2', '{{v{i}}}')", "click('3')"][: 2 + i % 2])


def test_add_novel_and_duplicate():
    store = WorkflowStore("online")
    a = workflow("a", "shopping", "Search", ["fill('1', '{q}')", "click('2')"])
    b = workflow("b", "shopping", "Open cart", ["click('9')", "click('10')"])
    assert add_workflows(store, "shopping", [a, b]) == 2
    assert len(store) == 2
    again = workflow("c", "shopping", "Search again", ["fill('1', '{query}')", "click('2')"])
    assert store.add_workflows("shopping", [again]) == 0
    assert store.add_workflows("gitlab", [a]) == 1
    assert store.workflows("gitlab")[0].website == "gitlab"


def test_ids_are_positional(tmp_path):
    store = WorkflowStore()
    a = workflow("w0", "map", "A", ["click('1')", "click('2')"])
    b = workflow("w0", "map", "B", ["click('3')", "click('4')"])
    store.add_workflows("map", [a])
    store.add_workflows("map", [b])
    assert [w.id for w in store.workflows("map")] == ["map-0", "map-1"]
    store.write(tmp_path)
    assert WorkflowStore.load([tmp_path / "map.workflows.txt"]).workflows("map") == [
        replace(w, source="human") for w in store.workflows("map")]


def test_empty_render_is_base_docs():
    store = WorkflowStore()
    assert store.render_memory("map") == BASE_ACTION_DOCS
    assert store.render_memory("map", "custom docs") == "custom docs"


def test_render_contains_headers_in_order():
    store = WorkflowStore()
    first = parse_workflow(MAP_BLOCK)
    second = parse_workflow("## map: Find a place\nfill('101', '{place}')\nclick('102')", id="w1")
    store.add_workflows("map", [first, second])
    text = store.render_memory("map")
    assert text.startswith(BASE_ACTION_DOCS)
    assert text.index("## map: Calculate Travel Time and Distance") < text.index("## map: Find a place")
    assert "Workflows:" in text


def test_cross_website_isolation():
    store = WorkflowStore()
    store.add_workflows("shopping", [parse_workflow(SHOPPING_BLOCK)])
    store.add_workflows("reddit", [parse_workflow(REDDIT_BLOCK)])
    assert "Browse Products" not in store.render_memory("gitlab")
    assert "Browse Products" not in store.render_memory("reddit")
    assert render_workflow(store.workflows("reddit")[0]) in store.render_memory("reddit")


def test_offline_freezes_after_seed():
    store = WorkflowStore("offline")
    w = parse_workflow(REDDIT_BLOCK)
    seed_offline(store, {"reddit": [w]})
    assert store.frozen
    with pytest.raises(ModeError):
        store.add_workflows("reddit", [_novel(0)])
    seed_offline(store, {"reddit": [w]})  # same content: no-op
    assert len(store) == 1
    with pytest.raises(ModeError):
        store.seed_offline({"reddit": [_novel(1)]})


def test_offline_plus_online_accepts_additions():
    store = WorkflowStore("offline+online")
    assert store.mode == "offline_plus_online"
    store.seed_offline({"shopping": [_novel(0)]})
    assert store.add_workflows("shopping", [_novel(1)]) == 1
    store.seed_offline({"shopping": [_novel(0)]})
    assert len(store) == 2


def test_online_rejects_seed_and_grows_monotonically():
    store = WorkflowStore("online")
    with pytest.raises(ModeError):
        store.seed_offline({})
    sizes = []
    for i in range(6):
        store.add_workflows("shopping", [_novel(i % 3)])
        sizes.append(len(store))
    assert sizes == sorted(sizes)


def test_mode_names():
    assert normalize_mode("offline-plus-online") == "offline_plus_online"
    with pytest.raises(ValueError):
        normalize_mode("sometimes")


def test_checkpoint_and_reload(tmp_path):
    store = WorkflowStore("online", checkpoint_dir=tmp_path)
    store.add_workflows("map", [parse_workflow(MAP_BLOCK)])
    path = store.checkpoint_path("map")
    assert path.exists()
    back = WorkflowStore.load([path], mode="offline")
    assert back.frozen
    assert back.render_memory("map") == store.render_memory("map")
