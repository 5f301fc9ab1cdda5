"""
Comparing task vocabularies
===========================

Two similarity measures decide whether a remote agent's vocabulary is a
useful guide for an unknown class: a cheap bag-of-words cosine used as a
pre-filter, and a structure-aware measure over classes, relation patterns
and action heads.
"""

# %%
# String metrics
# --------------
from ontoplan.similarity import jaro_winkler, soft_tfidf

for a, b in [("martha", "marhta"), ("refrigerator", "refrigerators"), ("fridge", "hotel")]:
    print(f"jaro_winkler({a!r}, {b!r}) = {jaro_winkler(a, b):.4f}")
print("soft_tfidf('kitchen range', 'kitchen ranges') =",
      round(soft_tfidf(["kitchen", "range"], ["kitchen", "ranges"]), 4))

# %%
# Ontologies
# ----------
# The local ontology mirrors the robot's class hierarchy; annotations from the
# bundled snapshot add synonyms and related terms.
from importlib import resources

import numpy as np

from ontoplan.ontology import AnnotationSource, load_remote_tasks, local_ontology, remote_ontology
from ontoplan.similarity import tsm, vsm_similarity
from ontoplan.task import parse_task

ra = resources.files("ontoplan") / "data" / "ra"
task = parse_task((ra / "domain.task").read_text(), (ra / "problem.task").read_text())
source = AnnotationSource.from_file(ra / "annotations.json")
remotes = load_remote_tasks(ra / "remotes")

local = local_ontology(task, source)
print("\nVSM pre-filter")
for r in remotes:
    print(f"  {r.agent_id}: {vsm_similarity(local, remote_ontology(r, source)):.3f}")

# %%
# Structure-aware similarity
# --------------------------
# Each vocabulary part gets a similarity matrix; its score averages the best
# match per row and per column, and the final score multiplies the parts.
local_ext = local_ontology(task, source, extended=True)
np.set_printoptions(precision=2, suppress=True)
for r in remotes[:2]:
    rep = tsm(local_ext, remote_ontology(r, source, extended=True))
    print(f"\nremote {r.agent_id}: final {rep.final:.3f}, parts", {k: round(v, 3) for k, v in rep.scores.items()})
    m = rep.class_matrix
    print("  remote classes:", m.cols)
    for name, row in zip(m.rows, m.values):
        print(f"  {name:>16}", row)
