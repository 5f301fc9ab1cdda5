import io
import json
import logging

import pytest

from helpers import RA_DIR, ra_remotes, ra_source, ra_task
from ontoplan import ontology
from ontoplan.ontology import (
    AnnotationSource,
    Ontology,
    PropertyRecord,
    build_class_ontology,
    enrich,
    export_owl,
    extend_ontology,
    load_remote_tasks,
    local_ontology,
    parse_remote,
    remote_ontology,
)
from ontoplan.task import ClassHierarchy, Pattern, TaskSemanticError


def test_class_ontology_mirrors_hierarchy():
    task = ra_task()
    onto = build_class_ontology(task.classes)
    assert len(onto.concepts) == len(task.classes) == 10
    for c in task.classes:
        assert onto.parent(c) == task.classes.parent(c)
    assert onto.annotations == {} and onto.properties == ()


def test_single_class_ontology():
    onto = build_class_ontology(ClassHierarchy({"thing": None}))
    assert onto.concepts == ["thing"]


def test_enrich_adds_uri_and_snapshot_edges():
    onto = enrich(build_class_ontology(ra_task().classes), ra_source())
    fridge_edges = dict((r, v) for r, v in onto.annotations_of("refrigerator") if r == "synonym")
    assert ("uri", "refrigerator") in onto.annotations_of("refrigerator")
    assert fridge_edges  # the snapshot lists synonyms for refrigerator
    assert all(r in ontology.ANNOTATION_RELATIONS for t in onto.terms() for r, _ in onto.annotations_of(t))


def test_enrich_is_idempotent():
    src = ra_source()
    once = enrich(build_class_ontology(ra_task().classes), src)
    assert enrich(once, src) == once


def test_unknown_term_gets_only_uri():
    h = ClassHierarchy({"thing": None, "zorblax": "thing"})
    onto = enrich(build_class_ontology(h), ra_source())
    assert onto.annotations_of("zorblax") == (("uri", "zorblax"),)


def test_extend_records_disjunctive_slot():
    task = ra_task()
    onto = local_ontology(task, extended=True)
    (be,) = [r for r in onto.records("pattern") if r.head == "be"]
    assert set(be.slots[0]) == {"dishwasher", "refrigerator", "robot", "television"}
    assert be.slots[1] == ("location",)
    heads = {r.head for r in onto.records("schema-head")}
    assert heads == {"move", "load", "unload", "repair", "dummy"}


def test_extend_zero_arity_pattern():
    onto = extend_ontology(build_class_ontology(ClassHierarchy({"thing": None})), [Pattern("tick", ())])
    assert onto.properties == (PropertyRecord("tick", "pattern", ()),)


def test_extend_missing_concept_is_an_error():
    onto = build_class_ontology(ClassHierarchy({"thing": None}))
    with pytest.raises(TaskSemanticError, match="ghost"):
        extend_ontology(onto, [Pattern("p", (("ghost",),))])


def test_export_owl_format_and_determinism():
    onto = local_ontology(ra_task(), ra_source(), extended=True)
    text = export_owl(onto)
    lines = text.splitlines()
    assert lines[0] == "Ontology(<local>)"
    assert "SubClassOf(dishwasher major_appliance)" in lines
    assert 'AnnotationAssertion(uri dishwasher "dishwasher")' in lines
    assert "ObjectPropertyAssertion(hasParameter1 pattern:be robot)" in lines
    assert "ObjectPropertyAssertion(hasParameter2 action:repair television)" in lines
    # structurally equal ontologies built in another order export identically
    shuffled = Ontology(onto.name, dict(reversed(list(onto.parents.items()))), dict(reversed(list(onto.annotations.items()))), onto.properties)
    assert export_owl(shuffled) == text


def test_export_owl_empty_ontology():
    assert export_owl(Ontology("empty", {})) == "Ontology(<empty>)\n"


def test_parse_remote_fixtures():
    remotes = ra_remotes()
    assert sorted(remotes) == ["A", "B", "C"]
    a = remotes["A"]
    assert "mobile_phone" in a and "kitchen_range" in a
    assert "mobile_phone" not in remotes["B"] and "kitchen_range" in remotes["B"]
    assert "hotel" in remotes["C"]
    assert {h for h, _ in remotes["B"].heads} == {"load", "fix", "unload"}


def test_parse_remote_rejects_unlisted_class():
    with pytest.raises(TaskSemanticError, match="unicorn"):
        parse_remote("(:classes a - thing)(:patterns (p unicorn))", "X")


def test_load_remote_tasks_skips_unreadable(tmp_path, caplog):
    (tmp_path / "good.task").write_text("(:classes a b - thing)")
    (tmp_path / "broken.task").write_text("(:classes a - thing")
    with caplog.at_level(logging.WARNING):
        infos = load_remote_tasks([tmp_path / "good.task", tmp_path / "broken.task", tmp_path / "missing.task"])
    assert [i.agent_id for i in infos] == ["good"]
    assert "broken.task" in caplog.text and "missing.task" in caplog.text


def test_remote_ontology_degraded_without_patterns():
    info = parse_remote("(:classes a b - thing)", "X")
    onto = remote_ontology(info, ra_source(), extended=True)
    assert onto.properties == ()


def test_snapshot_file_format():
    data = json.loads((RA_DIR / "annotations.json").read_text())
    for term, edges in data.items():
        assert term == term.lower()
        for e in edges:
            assert set(e) == {"rel", "val"}
            assert e["rel"] in ontology.ANNOTATION_RELATIONS


class _Response(io.BytesIO):
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def test_fetch_parses_conceptnet_edges(monkeypatch):
    payload = {
        "edges": [
            {"rel": {"label": "IsA"}, "start": {"label": "toaster"}, "end": {"label": "appliance"}},
            {"rel": {"label": "UsedFor"}, "start": {"label": "toaster"}, "end": {"label": "toast bread"}},
            {"rel": {"label": "AtLocation"}, "start": {"label": "toast"}, "end": {"label": "toaster"}},
            {"rel": {"label": "NotARelation"}, "start": {"label": "toaster"}, "end": {"label": "x"}},
        ]
    }
    seen = []

    def fake_urlopen(url, timeout):
        seen.append(url)
        return _Response(json.dumps(payload).encode())

    monkeypatch.setattr(ontology.urllib.request, "urlopen", fake_urlopen)
    src = AnnotationSource({}, endpoint="http://conceptnet.example")
    edges = src.lookup("Toaster")
    assert edges == [("isA", "appliance"), ("usedFor", "toast bread"), ("atLocation", "toast")]
    src.lookup("toaster")
    assert len(seen) == 1 and seen[0].startswith("http://conceptnet.example/c/en/toaster")


def test_fetch_failure_is_logged_not_raised(monkeypatch, caplog):
    def boom(url, timeout):
        raise OSError("network down")

    monkeypatch.setattr(ontology.urllib.request, "urlopen", boom)
    src = AnnotationSource({}, endpoint="http://conceptnet.example")
    with caplog.at_level(logging.WARNING):
        assert src.lookup("toaster") == []
    assert "network down" in caplog.text


def test_endpoint_from_environment(monkeypatch):
    monkeypatch.setenv(ontology.ENDPOINT_ENV, "http://env.example")
    assert AnnotationSource.from_file(RA_DIR / "annotations.json").endpoint == "http://env.example"
    assert ra_source().endpoint == ""  # explicit empty endpoint disables fetching
