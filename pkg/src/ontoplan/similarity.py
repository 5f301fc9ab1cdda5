"""String and ontology similarity: cosine TF, Jaro-Winkler, SoftTFIDF and TSM."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .ontology import normalize_term

__all__ = [
    "ALGORITHM_RELATIONS",
    "tokenize",
    "token_doc",
    "cosine_tf",
    "ontology_document",
    "vsm_similarity",
    "jaro",
    "jaro_winkler",
    "TfidfWeights",
    "soft_tfidf",
    "Term",
    "inflected_form",
    "synonyms",
    "tsm_concept",
    "Structured",
    "structured_similarity",
    "SimilarityMatrix",
    "matrix_score",
    "TsmReport",
    "TsmContext",
    "tsm",
]

# Relations averaged by the fallback branch of the concept measure.
ALGORITHM_RELATIONS = (
    "synonym", "isA", "usedFor", "atLocation", "capableOf", "relatedTo",
    "antonym", "hasA", "derivedFrom", "hasContext", "uri",
)

JW_THRESHOLD = 0.9
SYNONYM_CUTOFF = 0.7

_SPLIT = re.compile(r"[\s_\-]+")


def tokenize(text):
    return [t for t in _SPLIT.split(str(text).lower()) if t]


def token_doc(*texts):
    """Bag of tokens (a ``Counter``) from any number of strings."""
    doc = Counter()
    for t in texts:
        doc.update(tokenize(t))
    return doc


def cosine_tf(d1, d2):
    if not d1 or not d2:
        return 0.0
    dot = sum(n * d2.get(t, 0) for t, n in d1.items())
    norm = math.sqrt(sum(n * n for n in d1.values())) * math.sqrt(sum(n * n for n in d2.values()))
    return min(1.0, dot / norm) if norm else 0.0


def ontology_document(onto):
    """Concept names plus annotation values of the concepts (not property heads)."""
    doc = Counter()
    for c in onto.parents:
        doc.update(tokenize(c))
        for _, val in onto.annotations_of(c):
            doc.update(tokenize(val))
    return doc


def vsm_similarity(local, remote):
    return cosine_tf(ontology_document(local), ontology_document(remote))


# ---------------------------------------------------------------------------
# Jaro-Winkler


def jaro(s, t):
    if s == t:
        return 1.0 if s else 0.0
    ls, lt = len(s), len(t)
    if not ls or not lt:
        return 0.0
    window = max(max(ls, lt) // 2 - 1, 0)
    s_hit = [False] * ls
    t_hit = [False] * lt
    m = 0
    for i, ch in enumerate(s):
        lo, hi = max(0, i - window), min(lt, i + window + 1)
        for j in range(lo, hi):
            if not t_hit[j] and t[j] == ch:
                s_hit[i] = t_hit[j] = True
                m += 1
                break
    if not m:
        return 0.0
    s_m = [c for c, h in zip(s, s_hit) if h]
    t_m = [c for c, h in zip(t, t_hit) if h]
    half_transpositions = sum(a != b for a, b in zip(s_m, t_m))
    return (m / ls + m / lt + (m - half_transpositions / 2) / m) / 3


def jaro_winkler(s, t, scaling=0.1, max_prefix=4):
    j = jaro(s, t)
    prefix = 0
    for a, b in zip(s[:max_prefix], t[:max_prefix]):
        if a != b:
            break
        prefix += 1
    return j + prefix * scaling * (1 - j)


# ---------------------------------------------------------------------------
# TF-IDF and SoftTFIDF


class TfidfWeights:
    """Document frequencies over a corpus of token lists.

    Weight of token ``w`` in a token list: ``log(tf + 1) * idf(w)``, with the
    smoothed ``idf(w) = log((1 + N) / (1 + df(w))) + 1``; vectors are L2
    normalised.
    """

    def __init__(self, documents=()):
        self.n_docs = 0
        self.df = Counter()
        for doc in documents:
            self.n_docs += 1
            self.df.update(set(doc))

    def idf(self, token):
        return math.log((1 + self.n_docs) / (1 + self.df.get(token, 0))) + 1

    def vector(self, tokens):
        tf = Counter(tokens)
        raw = {w: math.log(n + 1) * self.idf(w) for w, n in tf.items()}
        norm = math.sqrt(sum(v * v for v in raw.values()))
        if not norm:
            return {}
        return {w: v / norm for w, v in raw.items()}


def _soft_directional(vs, vt, threshold):
    total = 0.0
    for w, ws in vs.items():
        best, best_v = 0.0, None
        for v in vt:
            sim = jaro_winkler(w, v)
            if sim > best or (sim == best and best_v is not None and v < best_v):
                best, best_v = sim, v
        if best_v is not None and best >= threshold:
            total += ws * vt[best_v] * best
    return total


def soft_tfidf(s, t, weights=None, threshold=JW_THRESHOLD):
    """Symmetrised SoftTFIDF between two token lists, clipped to [0, 1]."""
    if weights is None:
        weights = TfidfWeights([s, t])
    vs, vt = weights.vector(s), weights.vector(t)
    if not vs or not vt:
        return 0.0
    value = 0.5 * (_soft_directional(vs, vt, threshold) + _soft_directional(vt, vs, threshold))
    return min(1.0, value)


# ---------------------------------------------------------------------------
# Concept measure


@dataclass(frozen=True)
class Term:
    """A concept or property head together with its annotations."""

    name: str
    annotations: tuple = ()

    def values(self, relation):
        return [v for r, v in self.annotations if r == relation]

    def tokens(self, relation):
        out = []
        for v in self.values(relation):
            out.extend(tokenize(v))
        return out

    def document(self):
        out = tokenize(self.name)
        for _, v in self.annotations:
            out.extend(tokenize(v))
        return out


def _plural_of(a, b):
    return b == a + "s" or b == a + "es"


def inflected_form(a, b):
    """Equal after case/underscore normalisation and naive plural stripping."""
    ta, tb = tokenize(normalize_term(a)), tokenize(normalize_term(b))
    if len(ta) != len(tb) or not ta:
        return False
    return all(x == y or _plural_of(x, y) or _plural_of(y, x) for x, y in zip(ta, tb))


def synonyms(t1, t2):
    n1, n2 = normalize_term(t1.name), normalize_term(t2.name)
    return n2 in {normalize_term(v) for v in t1.values("synonym")} or n1 in {
        normalize_term(v) for v in t2.values("synonym")
    }


def tsm_concept(t1, t2, weights=None, trace=None):
    """Concept similarity: inflection/synonym check, synonym SoftTFIDF, relation average.

    ``trace``, when a list, receives the branch taken (``"exact"``,
    ``"synonym"`` or ``"relations"``) followed, for the last branch, by the
    relations that had values on both sides.
    """
    if weights is None:
        weights = TfidfWeights([t1.document(), t2.document()])
    if inflected_form(t1.name, t2.name) or synonyms(t1, t2):
        if trace is not None:
            trace.append("exact")
        return 1.0
    s1, s2 = t1.tokens("synonym"), t2.tokens("synonym")
    if s1 and s2:
        value = soft_tfidf(s1, s2, weights)
        if value > SYNONYM_CUTOFF:
            if trace is not None:
                trace.append("synonym")
            return value
    if trace is not None:
        trace.append("relations")
    values = []
    for rel in ALGORITHM_RELATIONS:
        a, b = t1.tokens(rel), t2.tokens(rel)
        if a and b:
            values.append(soft_tfidf(a, b, weights))
            if trace is not None:
                trace.append(rel)
    return sum(values) / len(values) if values else 0.0


@dataclass(frozen=True)
class Structured:
    """A pattern or schema head: a named term plus slots of terms."""

    head: Term
    slots: tuple = ()  # tuple of tuples of Term


def structured_similarity(p1, p2, concept=None):
    """Mean of the head-name similarity and the positional slot similarities.

    A slot pair scores the best member-to-member concept similarity; slots
    present on only one side score 0.
    """
    if concept is None:
        concept = tsm_concept
    parts = [concept(p1.head, p2.head)]
    for k in range(max(len(p1.slots), len(p2.slots))):
        if k >= len(p1.slots) or k >= len(p2.slots):
            parts.append(0.0)
            continue
        parts.append(max(concept(a, b) for a in p1.slots[k] for b in p2.slots[k]))
    return sum(parts) / len(parts)


# ---------------------------------------------------------------------------
# Matrices and TSM


@dataclass
class SimilarityMatrix:
    rows: list
    cols: list
    values: np.ndarray

    def row_max(self):
        if not self.cols:
            return np.zeros(len(self.rows))
        return self.values.max(axis=1)

    def col_max(self):
        if not self.rows:
            return np.zeros(len(self.cols))
        return self.values.max(axis=0)

    def cell(self, row, col):
        return float(self.values[self.rows.index(row), self.cols.index(col)])

    def to_tsv(self):
        lines = ["\t".join([""] + list(self.cols))]
        for r, vals in zip(self.rows, self.values):
            lines.append("\t".join([r] + [f"{v:.4f}" for v in vals]))
        return "\n".join(lines) + "\n"


@dataclass
class TsmReport:
    class_matrix: SimilarityMatrix
    pattern_matrix: SimilarityMatrix
    head_matrix: SimilarityMatrix
    scores: dict
    final: float
    threshold: float
    degraded: bool = False

    @property
    def manageable(self):
        return self.final >= self.threshold

    def to_dict(self):
        return {
            "final": self.final,
            "threshold": self.threshold,
            "manageable": self.manageable,
            "degraded": self.degraded,
            "scores": dict(self.scores),
        }


def _term(onto, name):
    return Term(name, tuple(onto.annotations_of(name)))


@dataclass
class TsmContext:
    """Shared TF-IDF corpus and concept cache for one local/remote comparison."""

    local: object
    remote: object
    weights: TfidfWeights = field(init=False)

    def __post_init__(self):
        docs = [_term(self.local, t).document() for t in self.local.terms()]
        docs += [_term(self.remote, t).document() for t in self.remote.terms()]
        self.weights = TfidfWeights(docs)
        self._cache = {}

    def concept(self, t1, t2):
        key = (t1, t2)
        if key not in self._cache:
            self._cache[key] = tsm_concept(t1, t2, self.weights)
        return self._cache[key]

    def concept_by_name(self, local_name, remote_name):
        return self.concept(_term(self.local, local_name), _term(self.remote, remote_name))

    def _structured(self, onto, rec):
        return Structured(_term(onto, rec.head), tuple(tuple(_term(onto, c) for c in s) for s in rec.slots))

    def class_matrix(self):
        rows, cols = self.local.concepts, self.remote.concepts
        vals = np.zeros((len(rows), len(cols)))
        for i, r in enumerate(rows):
            for j, c in enumerate(cols):
                vals[i, j] = self.concept_by_name(r, c)
        return SimilarityMatrix(rows, cols, vals)

    def record_matrix(self, kind):
        lrec, rrec = self.local.records(kind), self.remote.records(kind)
        vals = np.zeros((len(lrec), len(rrec)))
        for i, a in enumerate(lrec):
            sa = self._structured(self.local, a)
            for j, b in enumerate(rrec):
                vals[i, j] = structured_similarity(sa, self._structured(self.remote, b), self.concept)
        return SimilarityMatrix([r.head for r in lrec], [r.head for r in rrec], vals)


def matrix_score(m):
    """Mean of the best-match averages over local rows and over remote columns.

    Returns ``None`` when both sides are empty (nothing to compare).
    """
    if not m.rows and not m.cols:
        return None
    if not m.rows or not m.cols:
        return 0.0
    return float((m.row_max().mean() + m.col_max().mean()) / 2)


def tsm(local, remote, threshold=0.5):
    """Tailored similarity between two extended, enriched ontologies.

    Class, pattern and head matrices are each scored with :func:`matrix_score`;
    the final value is their product, so a remote ontology only scores high
    when its classes, relations and operations all correspond to local ones.
    A remote without patterns and heads is scored on classes alone (degraded).
    """
    ctx = TsmContext(local, remote)
    cm = ctx.class_matrix()
    pm = ctx.record_matrix("pattern")
    hm = ctx.record_matrix("schema-head")
    degraded = not remote.properties
    scores = {"classes": matrix_score(cm)}
    if not degraded:
        scores["patterns"] = matrix_score(pm)
        scores["heads"] = matrix_score(hm)
    scores = {k: v for k, v in scores.items() if v is not None}
    final = float(np.prod(list(scores.values()))) if scores else 0.0
    return TsmReport(cm, pm, hm, scores, min(1.0, max(0.0, final)), threshold, degraded)
