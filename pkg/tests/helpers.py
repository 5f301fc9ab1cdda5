"""Shared fixtures, generators and brute-force oracles for the test suite."""

from __future__ import annotations

import itertools
import math
import random
from collections import Counter, deque
from fractions import Fraction
from importlib import resources

from ontoplan.ontology import AnnotationSource, load_remote_tasks
from ontoplan.task import (
    ActionSchema,
    Atom,
    ClassHierarchy,
    Cond,
    Domain,
    Effect,
    Lookup,
    Pattern,
    PlanningTask,
    Problem,
    TimedLiteral,
    ground_actions,
    iter_variables,
    parse_plan,
    parse_task,
)

RA_DIR = resources.files("ontoplan") / "data" / "ra"


def ra_text(name):
    return (RA_DIR / name).read_text(encoding="utf-8")


def ra_task():
    return parse_task(ra_text("domain.task"), ra_text("problem.task"))


def ra_plan1():
    return parse_plan(ra_text("plan1.txt"))


def ra_source():
    return AnnotationSource.from_file(RA_DIR / "annotations.json", endpoint="")


def ra_remotes():
    return {r.agent_id: r for r in load_remote_tasks(RA_DIR / "remotes")}


# ---------------------------------------------------------------------------
# RA-family problems: 1-4 items, the three warehouse areas


LOCATIONS = (("area_transit", "location"), ("area_inspect", "inspection"), ("area_storage", "storage"))
APPLIANCES = ("dishwasher", "refrigerator", "television")


def ra_family_problem(rng, n_items, window=780):
    objs = ["  av - robot"] + [f"  {n} - {c}" for n, c in LOCATIONS]
    items = []
    for i in range(n_items):
        name = f"item{i}"
        items.append(name)
        objs.append(f"  {name} - {rng.choice(APPLIANCES)}")
    locs = [n for n, _ in LOCATIONS]
    init = [f"  (be av {rng.choice(locs)})", "  (empty av)", "  (active av)"]
    for it in items:
        init.append(f"  (be {it} {rng.choice(locs[:2])})")
        init.append(f"  (require_repair {it})")
    for a, b in itertools.product(locs, locs):
        init.append(f"  (= (duration {a} {b}) {0 if a == b else rng.randint(1, 9)})")
    init.append(f"  (at {window} (not (active av)))")
    goals = []
    for it in items:
        goals.append(f"  (repaired {it})")
        if rng.random() < 0.7:
            goals.append(f"  (delivered {it})")
    return (
        "(:objects\n" + "\n".join(objs) + ")\n(:init\n" + "\n".join(init) + ")\n(:goal\n" + "\n".join(goals) + ")\n"
    )


def ra_family_task(rng, n_items, window=780):
    return parse_task(ra_text("domain.task"), ra_family_problem(rng, n_items, window))


def bfs_optimum(task, max_depth=30):
    """Fewest actions reaching the goals, by breadth-first search over fact sets.

    Independent of the planner: plain sets, no heuristics, no timing (the
    generated windows are far longer than any plan found here).
    """
    actions = ground_actions(task)
    start = frozenset(v for v, val in task.problem.init.items() if val is True)
    goals = task.problem.goals

    def sat(state, items):
        return all((v in state) == val for v, val in items)

    def step(state, a):
        if not sat(state, [(v, val) for t, v, val in a.conds if t in ("at-start", "over-all")]):
            return None
        s = set(state)
        for t, v, val in a.effs:
            if t == "at-start":
                s.add(v) if val else s.discard(v)
        if not sat(s, [(v, val) for t, v, val in a.conds if t in ("over-all", "at-end")]):
            return None
        for t, v, val in a.effs:
            if t == "at-end":
                s.add(v) if val else s.discard(v)
        return frozenset(s)

    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        state, depth = frontier.popleft()
        if all((v in state) == val for v, val in goals.items()):
            return depth
        if depth >= max_depth:
            continue
        for a in actions:
            nxt = step(state, a)
            if nxt is not None and nxt not in seen:
                seen.add(nxt)
                frontier.append((nxt, depth + 1))
    return None


# ---------------------------------------------------------------------------
# Random tasks for round-trip checks


def random_task(rng):
    names = [f"c{i}" for i in range(rng.randint(1, 7))]
    parents = {"thing": None}
    for i, c in enumerate(names):
        parents[c] = rng.choice(["thing"] + names[:i])
    classes = ClassHierarchy(parents)
    all_cls = list(parents)

    def slot():
        return tuple(rng.sample(all_cls, rng.randint(1, min(3, len(all_cls)))))

    patterns = {}
    for i in range(rng.randint(0, 5)):
        patterns[f"p{i}"] = Pattern(f"p{i}", tuple(slot() for _ in range(rng.randint(0, 3))))
    schemas = {}
    for i in range(rng.randint(0, 4)):
        pars = tuple(slot() for _ in range(rng.randint(0, 3)))
        usable = [p for p in patterns.values() if p.arity == 0 or pars]
        conds, effs = [], []
        for _ in range(rng.randint(0, 3)):
            if usable:
                p = rng.choice(usable)
                atom = Atom(p.name, tuple(rng.randrange(len(pars)) for _ in range(p.arity)))
                conds.append(Cond(rng.choice(("at-start", "over-all", "at-end")), atom, rng.random() < 0.7))
        for _ in range(rng.randint(0, 3)):
            if usable:
                p = rng.choice(usable)
                atom = Atom(p.name, tuple(rng.randrange(len(pars)) for _ in range(p.arity)))
                effs.append(Effect(rng.choice(("at-start", "at-end")), atom, rng.random() < 0.6))
        lookups = [p for p in patterns.values() if pars and p.arity <= len(pars)]
        if lookups and rng.random() < 0.3:
            p = rng.choice(lookups)
            duration = Lookup(p.name, tuple(rng.randrange(len(pars)) for _ in range(p.arity)))
        else:
            duration = Fraction(rng.randint(0, 400), rng.choice((1, 2, 3, 4, 1000)))
        schemas[f"a{i}"] = ActionSchema(f"a{i}", pars, duration, tuple(conds), tuple(effs))
    objects = {f"o{i}": rng.choice(all_cls) for i in range(rng.randint(0, 6))}
    task = PlanningTask(Domain(classes, patterns, schemas), Problem(objects, {}, (), {}))
    variables = [v for p in patterns.values() for v in iter_variables(task, p)]
    init = {}
    for v in rng.sample(variables, min(len(variables), rng.randint(0, 8))):
        r = rng.random()
        init[v] = Fraction(rng.randint(0, 99), rng.choice((1, 4, 7))) if r < 0.25 else r < 0.7
    timed = tuple(
        TimedLiteral(Fraction(rng.randint(0, 1000), rng.choice((1, 10))), rng.choice(variables), rng.random() < 0.5)
        for _ in range(rng.randint(0, 2) if variables else 0)
    )
    goals = {v: rng.random() < 0.8 for v in rng.sample(variables, min(len(variables), rng.randint(0, 3)))}
    task.problem = Problem(objects, init, timed, goals)
    task.validate()
    return task


# ---------------------------------------------------------------------------
# TF-IDF oracle and string generators


def tfidf_cosine_oracle(s, t, corpus):
    """Plain TF-IDF cosine with the library's weighting, computed from scratch."""
    n = len(corpus)
    df = Counter()
    for doc in corpus:
        for w in set(doc):
            df[w] += 1

    def vec(tokens):
        tf = Counter(tokens)
        raw = {w: math.log(c + 1) * (math.log((1 + n) / (1 + df[w])) + 1) for w, c in tf.items()}
        norm = math.sqrt(sum(x * x for x in raw.values()))
        return {w: x / norm for w, x in raw.items()} if norm else {}

    a, b = vec(s), vec(t)
    return sum(a[w] * b.get(w, 0.0) for w in a)


def random_word(rng, alphabet="abcdefgh", lo=1, hi=8):
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(lo, hi)))


def random_tokens(rng, lo=1, hi=5, alphabet="abcdef"):
    return [random_word(rng, alphabet, 1, 6) for _ in range(rng.randint(lo, hi))]


def seeded(seed):
    return random.Random(seed)
