"""Concept ontologies for local and remote planning tasks.

An :class:`Ontology` holds a concept forest (one concept per planning class),
ConceptNet-style annotations keyed by term, and ``hasParameterK`` property
records describing patterns and action-schema heads.
"""

from __future__ import annotations

import json
import logging
import os
import urllib.parse
import urllib.request
from dataclasses import dataclass, field, replace
from pathlib import Path

from .task import (
    ROOT,
    ClassHierarchy,
    Pattern,
    TaskError,
    TaskSemanticError,
    _forms,
    _parse_classes,
    _parse_pattern_sig,
    _sections,
)

__all__ = [
    "CONCEPTNET_RELATIONS",
    "ANNOTATION_RELATIONS",
    "ENDPOINT_ENV",
    "PropertyRecord",
    "Ontology",
    "RemoteTaskInfo",
    "AnnotationSource",
    "normalize_term",
    "build_class_ontology",
    "enrich",
    "extend_ontology",
    "export_owl",
    "parse_remote",
    "load_remote_tasks",
    "local_ontology",
    "remote_ontology",
]

log = logging.getLogger(__name__)

ENDPOINT_ENV = "ONTOPLAN_CONCEPTNET_URL"

CONCEPTNET_RELATIONS = (
    "relatedTo", "formOf", "isA", "partOf", "hasA", "usedFor", "capableOf",
    "atLocation", "causes", "hasSubevent", "hasFirstSubevent", "hasLastSubevent",
    "hasPrerequisite", "hasProperty", "motivatedByGoal", "obstructedBy", "desires",
    "createdBy", "synonym", "antonym", "distinctFrom", "derivedFrom", "symbolOf",
    "definedAs", "mannerOf", "locatedNear", "hasContext", "similarTo",
    "etymologicallyRelatedTo", "etymologicallyDerivedFrom", "causesDesire",
    "madeOf", "receivesAction", "externalURL", "instanceOf", "entails",
)
ANNOTATION_RELATIONS = frozenset(CONCEPTNET_RELATIONS) | {"uri"}

_REL_BY_FOLD = {r.casefold(): r for r in ANNOTATION_RELATIONS}


def normalize_term(term):
    return " ".join(str(term).replace("_", " ").replace("-", " ").lower().split())


def _relation(name):
    rel = _REL_BY_FOLD.get(str(name).replace("/r/", "").casefold())
    if rel is None:
        raise ValueError(f"unknown annotation relation {name!r}")
    return rel


@dataclass(frozen=True)
class PropertyRecord:
    head: str
    kind: str  # "pattern" | "schema-head"
    slots: tuple


@dataclass
class Ontology:
    name: str = "ontology"
    parents: dict = field(default_factory=dict)
    annotations: dict = field(default_factory=dict)
    properties: tuple = ()

    @property
    def concepts(self):
        return list(self.parents)

    def __contains__(self, concept):
        return concept in self.parents

    def parent(self, concept):
        return self.parents.get(concept)

    def children(self, concept):
        return [c for c, p in self.parents.items() if p == concept]

    def siblings(self, concept):
        p = self.parents.get(concept)
        if p is None:
            return []
        return [c for c in self.children(p) if c != concept]

    def annotations_of(self, term):
        return self.annotations.get(term, ())

    def records(self, kind):
        return [r for r in self.properties if r.kind == kind]

    def terms(self):
        """Every annotatable term: concepts then property heads."""
        out = list(self.parents)
        for r in self.properties:
            if r.head not in out:
                out.append(r.head)
        return out

    def with_concept(self, concept, parent):
        if concept in self.parents:
            raise TaskSemanticError(f"concept {concept!r} already present")
        if parent not in self.parents:
            raise TaskSemanticError(f"undefined concept {parent!r}")
        parents = dict(self.parents)
        parents[concept] = parent
        return replace(self, parents=parents)


@dataclass
class RemoteTaskInfo:
    """Public vocabulary shared by a semi-cooperative agent."""

    agent_id: str
    classes: ClassHierarchy
    patterns: list = field(default_factory=list)
    heads: list = field(default_factory=list)  # (name, slots)

    def __contains__(self, cls):
        return cls in self.classes


class AnnotationSource:
    """Term -> [(relation, value)] lookups from a pinned snapshot.

    When ``endpoint`` is set, terms missing from the snapshot are fetched from a
    ConceptNet-compatible web API (depth-1 edges only). Fetch failures are
    logged and treated as "no annotations".
    """

    def __init__(self, snapshot=None, endpoint=None, timeout=5.0, limit=50):
        self.snapshot = {}
        for term, edges in (snapshot or {}).items():
            self.snapshot[normalize_term(term)] = [(_relation(e["rel"]), str(e["val"])) for e in edges]
        self.endpoint = endpoint
        self.timeout = timeout
        self.limit = limit
        self._fetched = {}

    @classmethod
    def from_file(cls, path, endpoint=None, **kw):
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if endpoint is None:
            endpoint = os.environ.get(ENDPOINT_ENV) or None
        return cls(data, endpoint=endpoint, **kw)

    def lookup(self, term):
        key = normalize_term(term)
        if key in self.snapshot:
            return list(self.snapshot[key])
        if self.endpoint:
            if key not in self._fetched:
                self._fetched[key] = self.fetch(key)
            return list(self._fetched[key])
        return []

    def fetch(self, term):
        url = "{}/c/en/{}?limit={}".format(
            self.endpoint.rstrip("/"), urllib.parse.quote(term.replace(" ", "_")), self.limit
        )
        try:
            with urllib.request.urlopen(url, timeout=self.timeout) as resp:
                payload = json.load(resp)
        except (OSError, ValueError) as exc:
            log.warning("annotation fetch failed for %r: %s", term, exc)
            return []
        out = []
        for edge in payload.get("edges", []):
            try:
                rel = _relation(edge["rel"]["label"])
            except (KeyError, ValueError):
                continue
            start, end = edge.get("start", {}), edge.get("end", {})
            if normalize_term(start.get("label", "")) == term:
                other = end.get("label")
            else:
                other = start.get("label")
            if other and (rel, other) not in out:
                out.append((rel, other))
        return out


# ---------------------------------------------------------------------------


def build_class_ontology(classes, name="local"):
    """One concept per class, same parent structure, no annotations or properties."""
    return Ontology(name=name, parents=dict(classes.parents))


def enrich(ontology, source):
    """Attach depth-1 annotations to every concept and property head.

    Every term also carries a ``uri`` self-annotation. Existing annotations are
    kept; duplicates are dropped, so enrichment is idempotent.
    """
    annotations = dict(ontology.annotations)
    for term in ontology.terms():
        merged = list(annotations.get(term, ()))
        for edge in source.lookup(term) + [("uri", term)]:
            if edge not in merged:
                merged.append(edge)
        annotations[term] = tuple(merged)
    return replace(ontology, annotations=annotations)


def extend_ontology(ontology, patterns=(), heads=()):
    """Add ``hasParameterK`` records for patterns and schema heads."""
    records = list(ontology.properties)
    items = [(p.name, p.args, "pattern") for p in patterns]
    items += [(name, slots, "schema-head") for name, slots in heads]
    for name, slots, kind in items:
        for slot in slots:
            for c in slot:
                if c not in ontology.parents:
                    raise TaskSemanticError(f"{kind} {name!r} references missing concept {c!r}")
        rec = PropertyRecord(name, kind, tuple(tuple(s) for s in slots))
        if rec not in records:
            records.append(rec)
    return replace(ontology, properties=tuple(records))


def _prefixed(rec):
    return ("pattern:" if rec.kind == "pattern" else "action:") + rec.head


def export_owl(ontology):
    """Functional-style OWL text; deterministic for structurally equal ontologies."""
    lines = [f"Ontology(<{ontology.name}>)"]
    for c in sorted(ontology.parents):
        p = ontology.parents[c]
        lines.append(f"SubClassOf({c} {p if p is not None else 'owl:Thing'})")
    for term in sorted(ontology.annotations):
        for rel, val in ontology.annotations[term]:
            lines.append(f"AnnotationAssertion({rel} {term} {json.dumps(val)})")
    for rec in ontology.properties:
        for k, slot in enumerate(rec.slots, 1):
            for c in slot:
                lines.append(f"ObjectPropertyAssertion(hasParameter{k} {_prefixed(rec)} {c})")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Remote tasks


def parse_remote(text, agent_id):
    """Parse a public task file: ``(:classes)``, optional ``(:patterns)`` and ``(:heads)``."""
    secs = _sections(_forms(text), {":classes", ":patterns", ":heads"})
    classes = _parse_classes(secs.get(":classes", []))
    classes.validate()
    patterns, heads = [], []
    for node in secs.get(":patterns", []):
        name, args = _parse_pattern_sig(node)
        patterns.append(Pattern(name, args))
    for node in secs.get(":heads", []):
        heads.append(_parse_pattern_sig(node, "head"))
    for name, slots in [(p.name, p.args) for p in patterns] + heads:
        for slot in slots:
            for c in slot:
                if c not in classes:
                    raise TaskSemanticError(f"remote {agent_id}: {name!r} references unlisted class {c!r}")
    if len(classes) <= 1 and not classes.children(ROOT):
        raise TaskSemanticError(f"remote {agent_id}: no classes")
    return RemoteTaskInfo(agent_id, classes, patterns, heads)


def load_remote_tasks(where):
    """Read remote task files from a directory or a list of paths/URLs.

    Unreadable sources are skipped with a warning.
    """
    if isinstance(where, (str, os.PathLike)) and Path(where).is_dir():
        sources = sorted(p for p in Path(where).iterdir() if p.is_file() and not p.name.startswith("."))
    elif isinstance(where, (str, os.PathLike)):
        sources = [where]
    else:
        sources = list(where)
    out = []
    for src in sources:
        src_s = str(src)
        agent_id = Path(urllib.parse.urlparse(src_s).path).stem or src_s
        try:
            if "://" in src_s:
                with urllib.request.urlopen(src_s, timeout=10) as resp:
                    text = resp.read().decode("utf-8")
            else:
                text = Path(src_s).read_text(encoding="utf-8")
            out.append(parse_remote(text, agent_id))
        except (OSError, UnicodeDecodeError, TaskError) as exc:
            log.warning("skipping remote task %s: %s", src_s, exc)
    return out


def local_ontology(task, source=None, extended=False, name="local"):
    onto = build_class_ontology(task.classes, name)
    if extended:
        heads = [(s.name, s.pars) for s in task.domain.schemas.values()]
        onto = extend_ontology(onto, task.domain.patterns.values(), heads)
    if source is not None:
        onto = enrich(onto, source)
    return onto


def remote_ontology(info, source=None, extended=False):
    onto = build_class_ontology(info.classes, info.agent_id)
    if extended:
        onto = extend_ontology(onto, info.patterns, info.heads)
    if source is not None:
        onto = enrich(onto, source)
    return onto

