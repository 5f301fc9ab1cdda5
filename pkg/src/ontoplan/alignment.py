"""Place a new class inside the local ontology and extend the planning task with it."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace

from .ontology import PropertyRecord
from .similarity import TsmContext
from .task import TaskSemanticError

__all__ = [
    "MATCH_CUTOFF",
    "SIBLING_THRESHOLD",
    "Placement",
    "neighbourhood_align",
    "integrate_class",
    "integrate_object",
]

MATCH_CUTOFF = 0.6
SIBLING_THRESHOLD = 0.5


@dataclass
class Placement:
    mode: str  # "parent-match" | "sibling-vote" | "rejected"
    parent: str | None = None
    evidence: list = field(default_factory=list)  # (local, remote, similarity)
    sibling_fraction: float | None = None
    diagnostic: str = ""

    @property
    def rejected(self):
        return self.mode == "rejected"

    def to_dict(self):
        return {
            "mode": self.mode,
            "parent": self.parent,
            "sibling_fraction": self.sibling_fraction,
            "evidence": [list(e) for e in self.evidence],
            "diagnostic": self.diagnostic,
        }


def _best_local(ctx, local, remote_concept, cutoff):
    best, best_c = -1.0, None
    for c in local.concepts:
        sim = ctx.concept_by_name(c, remote_concept)
        if sim > best:
            best, best_c = sim, c
    if best_c is not None and best >= cutoff:
        return best_c, best
    return None, max(best, 0.0)


def neighbourhood_align(local, remote, omega, match_cutoff=MATCH_CUTOFF, sibling_threshold=SIBLING_THRESHOLD):
    """Position ``omega`` (a remote concept) under a local concept.

    The remote parent of ``omega`` is tried first; failing that, ``omega``'s
    remote siblings vote for the local parent of the concepts they match.
    """
    if omega not in remote:
        raise ValueError(f"{omega!r} is not a concept of remote ontology {remote.name!r}")
    if omega in local:
        raise ValueError(f"{omega!r} is already a local concept")
    ctx = TsmContext(local, remote)
    parent = remote.parent(omega)
    siblings = remote.siblings(omega)
    if parent is None and not siblings:
        return Placement("rejected", diagnostic=f"{omega!r} has neither parent nor siblings in {remote.name!r}")

    evidence = []
    if parent is not None:
        c, sim = _best_local(ctx, local, parent, match_cutoff)
        if c is not None:
            return Placement("parent-match", c, [(c, parent, sim)])

    matched = []
    for s in siblings:
        c, sim = _best_local(ctx, local, s, match_cutoff)
        if c is not None:
            matched.append(c)
            evidence.append((c, s, sim))
    fraction = len(matched) / len(siblings) if siblings else 0.0
    if not matched or fraction < sibling_threshold:
        return Placement(
            "rejected",
            evidence=evidence,
            sibling_fraction=fraction,
            diagnostic=f"parent unmatched; {len(matched)}/{len(siblings)} siblings matched",
        )
    parents = Counter(local.parent(c) for c in matched)
    top, count = parents.most_common(1)[0]
    if top is None or (count != len(matched) and count * 2 <= len(matched)):
        return Placement(
            "rejected",
            evidence=evidence,
            sibling_fraction=fraction,
            diagnostic="matched siblings have no common local parent",
        )
    return Placement("sibling-vote", top, evidence, fraction)


def _extend_slot(slot, classes, omega, parent):
    """Slot edit rule: subsumed slots stay, enumerated sibling disjunctions gain ``omega``."""
    if classes.admits(slot, omega):
        return slot
    siblings = set(classes.children(parent)) - {omega}
    if siblings & set(slot):
        return tuple(slot) + (omega,)
    return slot


def integrate_class(task, local, omega, placement):
    """Add ``omega`` to the class hierarchy, pattern args, schema pars and ontology.

    Returns a new ``(task, ontology)`` pair; inputs are not modified.
    """
    if placement.rejected:
        raise ValueError(f"cannot integrate {omega!r}: placement rejected")
    if omega in task.classes:
        raise TaskSemanticError(f"class {omega!r} already defined")
    new = task.copy()
    classes = task.classes.with_class(omega, placement.parent)
    new.domain.classes = classes
    for name, p in task.domain.patterns.items():
        new.domain.patterns[name] = replace(p, args=tuple(_extend_slot(s, classes, omega, placement.parent) for s in p.args))
    for name, s in task.domain.schemas.items():
        new.domain.schemas[name] = replace(
            s, pars=tuple(_extend_slot(sl, classes, omega, placement.parent) for sl in s.pars)
        )
    onto = local.with_concept(omega, placement.parent)
    records = tuple(
        PropertyRecord(r.head, r.kind, tuple(_extend_slot(sl, classes, omega, placement.parent) for sl in r.slots))
        for r in onto.properties
    )
    return new, replace(onto, properties=records)


def integrate_object(task, obj, omega):
    if omega not in task.classes:
        raise TaskSemanticError(f"undefined class {omega!r}")
    if obj in task.objects or any(o.casefold() == obj.casefold() for o in task.objects):
        raise TaskSemanticError(f"object {obj!r} already defined")
    new = task.copy()
    new.problem.objects[obj] = omega
    return new
