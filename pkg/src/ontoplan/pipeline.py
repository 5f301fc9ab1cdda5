"""Knowledge-acquisition pipeline: from an exogenous discrepancy to a replan.

Stages:

1. VSM pre-filter of remote class ontologies (run once, at start-up).
2. TSM assessment of the remotes that know the new class.
3. Neighbourhood alignment and task extension.
4. Variables and initial values for the new object.
5. Candidate goals, then opportunity identification by replanning.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .alignment import MATCH_CUTOFF, SIBLING_THRESHOLD, integrate_class, integrate_object, neighbourhood_align
from .ontology import AnnotationSource, enrich, load_remote_tasks, local_ontology, remote_ontology
from .planner import Unsolvable, solve, solve_from_state
from .simulation import Simulator, classify_discrepancy
from .similarity import tsm, vsm_similarity
from .task import (
    TaskError,
    TaskSemanticError,
    Variable,
    format_plan,
    instantiate_variable,
    parse_plan,
    parse_task,
)

__all__ = [
    "Thresholds",
    "Scenario",
    "FixtureError",
    "PipelineFault",
    "AcquisitionOutcome",
    "Assessment",
    "Opportunity",
    "Report",
    "load_scenario",
    "stage1_prefilter",
    "stage2_assess",
    "stage3_integrate",
    "stage4_create_variables",
    "stage5_formulate_goals",
    "identify_opportunity",
    "acquire",
    "run_scenario",
]

log = logging.getLogger(__name__)

INTEGRATED = "integrated"
REJECTED_IRRELEVANT = "rejected-irrelevant"
REJECTED_UNMANAGEABLE = "rejected-unmanageable"


class FixtureError(Exception):
    """A scenario fixture is missing or malformed."""


class PipelineFault(Exception):
    """The pipeline reached an inconsistent state while handling a discrepancy."""


@dataclass
class Thresholds:
    vsm: float = 0.5
    tsm: float = 0.5
    sibling: float = SIBLING_THRESHOLD
    match: float = MATCH_CUTOFF


@dataclass
class ExogenousSpec:
    time: Fraction
    var: Variable
    value: bool
    source: str = "exogenous"


@dataclass
class Scenario:
    task: object
    plan: object = None
    exogenous: list = field(default_factory=list)
    class_oracle: dict = field(default_factory=dict)
    object_info: dict = field(default_factory=dict)
    remotes: list = field(default_factory=list)
    source: AnnotationSource = field(default_factory=AnnotationSource)
    thresholds: Thresholds = field(default_factory=Thresholds)
    name: str = "scenario"


def _var(fact):
    if not isinstance(fact, list) or not fact or not all(isinstance(x, str) for x in fact):
        raise FixtureError(f"fact must be a list of names, got {fact!r}")
    return Variable(fact[0], tuple(fact[1:]))


def load_scenario(path):
    """Read a scenario JSON file; relative paths resolve against its directory."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise FixtureError(f"cannot read scenario {path}: {exc}") from None
    base = path.parent
    try:
        t = data["task"]
        task = parse_task((base / t["domain"]).read_text(encoding="utf-8"), (base / t["problem"]).read_text(encoding="utf-8"))
        plan = parse_plan((base / data["plan"]).read_text(encoding="utf-8")) if data.get("plan") else None
        exo = [
            ExogenousSpec(Fraction(str(e["time"])), _var(e["fact"]), bool(e.get("value", True)), e.get("source", "exogenous"))
            for e in data.get("exogenous", [])
        ]
        info = {
            obj: [(_var(f["fact"]), bool(f.get("value", True))) for f in facts]
            for obj, facts in data.get("object_info", {}).items()
        }
        remotes_dir = data.get("remotes")
        remotes = []
        if remotes_dir:
            rpath = base / remotes_dir
            if not rpath.exists():
                raise FixtureError(f"remotes directory {rpath} not found")
            remotes = load_remote_tasks(rpath)
        source = AnnotationSource.from_file(base / data["annotations"]) if data.get("annotations") else AnnotationSource()
        th = Thresholds(**data.get("thresholds", {}))
    except FixtureError:
        raise
    except (OSError, KeyError, TypeError, ValueError, TaskError) as exc:
        raise FixtureError(f"scenario {path}: {exc}") from None
    return Scenario(task, plan, exo, dict(data.get("class_oracle", {})), info, remotes, source, th, path.stem)


# ---------------------------------------------------------------------------
# Outcomes


@dataclass
class Assessment:
    manageable: bool
    remote: object = None  # RemoteTaskInfo
    report: object = None  # TsmReport of the selected remote
    reports: dict = field(default_factory=dict)  # agent id -> TsmReport
    reason: str = ""


@dataclass
class Opportunity:
    plan: object
    goals: list  # accepted candidate goals
    task: object  # task whose goals include the accepted candidates


@dataclass
class AcquisitionOutcome:
    object: str
    cls: str
    decision: str
    time: Fraction = Fraction(0)
    vsm_scores: dict = field(default_factory=dict)
    tsm_reports: dict = field(default_factory=dict)
    remote: str | None = None
    placement: object = None
    new_goals: list = field(default_factory=list)
    new_plan: object = None
    reason: str = ""

    @property
    def tsm_report(self):
        return self.tsm_reports.get(self.remote) if self.remote else None

    def to_dict(self):
        return {
            "object": self.object,
            "class": self.cls,
            "decision": self.decision,
            "time": float(self.time),
            "vsm_scores": {k: round(v, 4) for k, v in self.vsm_scores.items()},
            "tsm": {k: r.to_dict() for k, r in self.tsm_reports.items()},
            "remote": self.remote,
            "placement": self.placement.to_dict() if self.placement else None,
            "new_goals": [[str(v), val] for v, val in self.new_goals],
            "new_plan": format_plan(self.new_plan).splitlines() if self.new_plan is not None else None,
            "reason": self.reason,
        }


@dataclass
class Report:
    outcomes: list
    executed: list  # PlanStep
    goals: list  # (Variable, value, achieved)
    violations: list
    timings: dict

    @property
    def goals_achieved(self):
        return sum(1 for _, _, ok in self.goals if ok)

    @property
    def goals_total(self):
        return len(self.goals)

    def to_dict(self, timings=True):
        d = {
            "outcomes": [o.to_dict() for o in self.outcomes],
            "executed": format_plan(self.executed).splitlines(),
            "goals_achieved": self.goals_achieved,
            "goals_total": self.goals_total,
            "goals": [{"var": str(v), "value": val, "achieved": ok} for v, val, ok in self.goals],
            "violations": [str(v) for v in self.violations],
        }
        if timings:
            d["timings"] = {k: round(v, 6) for k, v in self.timings.items()}
        return d


# ---------------------------------------------------------------------------
# Stages


def stage1_prefilter(local, remotes, source=None, threshold=0.5):
    """Remotes whose enriched class ontology is VSM-similar to ``local``.

    Returns ``(kept, scores)`` with scores for every remote.
    """
    kept, scores = [], {}
    for info in remotes:
        score = vsm_similarity(local, remote_ontology(info, source))
        scores[info.agent_id] = score
        if score >= threshold:
            kept.append(info)
    return kept, scores


def stage2_assess(task, candidates, omega, source=None, threshold=0.5):
    """Select the most similar remote that knows ``omega``, if it scores above ``threshold``."""
    if omega in task.classes:
        raise TaskSemanticError(f"class {omega!r} is already known")
    hosts = [info for info in candidates if omega in info]
    if not hosts:
        return Assessment(False, reason=f"no pre-filtered remote defines {omega!r}")
    local = local_ontology(task, source, extended=True)
    reports = {info.agent_id: tsm(local, remote_ontology(info, source, extended=True), threshold) for info in hosts}
    best = max(hosts, key=lambda info: reports[info.agent_id].final)  # first wins ties
    rep = reports[best.agent_id]
    if rep.final < threshold:
        return Assessment(False, None, None, reports, f"best TSM {rep.final:.3f} ({best.agent_id}) below {threshold}")
    return Assessment(True, best, rep, reports)


def stage3_integrate(task, local, remote, omega, obj, source=None, thresholds=None):
    """Align ``omega`` using ``remote`` and extend the task with the class and ``obj``.

    Returns ``(task, ontology, placement)``; on rejection the first two are the
    inputs, unchanged.
    """
    thresholds = thresholds or Thresholds()
    placement = neighbourhood_align(
        local, remote_ontology(remote, source), omega, thresholds.match, thresholds.sibling
    )
    if placement.rejected:
        return task, local, placement
    new_task, onto = integrate_class(task, local, omega, placement)
    new_task = integrate_object(new_task, obj, omega)
    if source is not None:
        onto = enrich(onto, source)
    return new_task, onto, placement


def stage4_create_variables(task, obj, info=(), trigger=()):
    """Add known facts about ``obj`` to the initial state.

    ``info`` is the object-information response (``(Variable, value)`` pairs);
    ``trigger`` holds the discrepancy entries, which are always added. Facts
    that do not type-check are skipped. Returns ``(task, facts)``.
    """
    if obj not in task.objects:
        raise TaskSemanticError(f"undefined object {obj!r}")
    new = task.copy()
    facts = []
    admitting = [p for p in task.domain.patterns.values() if any(task.classes.admits(s, task.objects[obj]) for s in p.args)]
    provided = set()
    for var, val in list(trigger) + list(info):
        pat = task.domain.patterns.get(var.name)
        if pat is None or obj not in var.objs:
            log.warning("ignoring fact %s for %s: not about the object or unknown pattern", var, obj)
            continue
        try:
            var = instantiate_variable(pat, var.objs, task)
        except TaskError as exc:
            log.warning("ignoring fact %s: %s", var, exc)
            continue
        if var in provided:
            continue
        provided.add(var)
        new.problem.init[var] = val
        facts.append((var, val))
    for p in admitting:
        if not any(v.name == p.name for v in provided):
            log.info("no information on %s for %s; assuming false", p.name, obj)
    return new, facts


def stage5_formulate_goals(task, obj, omega):
    """Candidate goals substituting ``obj`` into goals over related classes."""
    classes = task.classes
    related = {omega, *classes.siblings(omega)}
    candidates = []
    for var, val in task.problem.goals.items():
        pat = task.domain.patterns[var.name]
        for k, o in enumerate(var.objs):
            if o == obj or task.objects.get(o) not in related:
                continue
            if not classes.admits(pat.args[k], task.objects[obj]):
                continue
            new = Variable(var.name, var.objs[:k] + (obj,) + var.objs[k + 1 :])
            if new not in task.problem.goals and (new, val) not in candidates:
                candidates.append((new, val))
    return candidates


def _with_goals(task, goals):
    new = task.copy()
    new.problem.goals = dict(goals)
    return new


def identify_opportunity(task, candidates, state, clock, solver=solve_from_state, deadline=None):
    """Plan for outstanding goals plus candidates: all together first, then one at a time."""
    if not candidates:
        return None
    remaining = {v: val for v, val in task.problem.goals.items() if state.get(v) != val}
    attempts = [list(candidates)] + ([[c] for c in candidates] if len(candidates) > 1 else [])
    for goals in attempts:
        planning = _with_goals(task, {**remaining, **dict(goals)})
        try:
            plan = solver(planning, state, clock) if deadline is None else solver(planning, state, clock, deadline)
        except Unsolvable as exc:
            log.info("no plan with candidate goals %s: %s", [str(v) for v, _ in goals], exc)
            continue
        full = _with_goals(task, {**task.problem.goals, **dict(goals)})
        return Opportunity(plan, list(goals), full)
    return None


def acquire(task, local, candidates, vsm_scores, obj, omega, trigger, source=None, info=(), thresholds=None):
    """Stages 2-5 for one new object of an unknown class.

    Returns ``(outcome, task, ontology, facts, goals)``; rejected objects leave
    ``task`` and ``ontology`` untouched (the same objects are returned).
    """
    thresholds = thresholds or Thresholds()
    outcome = AcquisitionOutcome(obj, omega, REJECTED_IRRELEVANT, vsm_scores=dict(vsm_scores))
    assessment = stage2_assess(task, candidates, omega, source, thresholds.tsm)
    outcome.tsm_reports = assessment.reports
    if not assessment.manageable:
        outcome.decision = REJECTED_UNMANAGEABLE if assessment.reports else REJECTED_IRRELEVANT
        outcome.reason = assessment.reason
        return outcome, task, local, [], []
    outcome.remote = assessment.remote.agent_id
    new_task, onto, placement = stage3_integrate(task, local, assessment.remote, omega, obj, source, thresholds)
    outcome.placement = placement
    if placement.rejected:
        outcome.decision = REJECTED_UNMANAGEABLE
        outcome.reason = placement.diagnostic
        return outcome, task, local, [], []
    new_task, facts = stage4_create_variables(new_task, obj, info, trigger)
    outcome.decision = INTEGRATED
    goals = stage5_formulate_goals(new_task, obj, omega)
    return outcome, new_task, onto, facts, goals


# ---------------------------------------------------------------------------


class _Timer:
    def __init__(self):
        self.totals = {}

    def __call__(self, name):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                timer.totals[name] = timer.totals.get(name, 0.0) + time.perf_counter() - self.t

        return _Ctx()


def run_scenario(scenario, trace=None, solver=solve_from_state):
    """Simulate the scenario's plan, handling new objects as they appear."""
    timer = _Timer()
    th = scenario.thresholds
    task = scenario.task
    with timer("plan"):
        plan = scenario.plan if scenario.plan is not None else solve(task)
    with timer("stage1"):
        local = local_ontology(task, scenario.source)
        candidates, vsm_scores = stage1_prefilter(local, scenario.remotes, scenario.source, th.vsm)
    sim = Simulator(task, plan, trace)
    for e in scenario.exogenous:
        sim.inject(e.time, e.var, e.value, e.source)
    outcomes, handled = [], set()
    with timer("simulation"):
        while not sim.done:
            result = sim.advance()
            if not result.discrepancy:
                continue
            cls = classify_discrepancy(result.discrepancy, sim.task, scenario.class_oracle)
            if cls.kind not in ("new-object-of-new-class", "new-object-of-known-class") or cls.obj in handled:
                sim.acknowledge(result.discrepancy)
                continue
            handled.add(cls.obj)
            info = scenario.object_info.get(cls.obj, [])
            if cls.kind == "new-object-of-new-class":
                with timer("acquisition"):
                    outcome, new_task, new_local, facts, goals = acquire(
                        sim.task, local, candidates, vsm_scores, cls.obj, cls.cls, cls.entries,
                        scenario.source, info, th,
                    )
            else:
                outcome = AcquisitionOutcome(cls.obj, cls.cls, INTEGRATED, vsm_scores=dict(vsm_scores))
                new_task, facts = stage4_create_variables(integrate_object(sim.task, cls.obj, cls.cls), cls.obj, info, cls.entries)
                new_local = local
                goals = stage5_formulate_goals(new_task, cls.obj, cls.cls)
            outcome.time = result.event.time
            sim.acknowledge(result.discrepancy)
            if outcome.decision == INTEGRATED:
                local = new_local
                sim.assert_facts(facts)
                outcome.new_goals = goals
                sim.settle()
                with timer("replan"):
                    opp = identify_opportunity(new_task, goals, sim.observed, sim.clock, solver)
                if opp is not None:
                    outcome.new_goals = opp.goals
                    outcome.new_plan = opp.plan
                    sim.replace_plan(opp.task, opp.plan)
                else:
                    outcome.new_goals = []
                    sim.task = new_task
            outcomes.append(outcome)
    goals = [(v, val, sim.observed.get(v) == val) for v, val in sim.task.problem.goals.items()]
    return Report(outcomes, sim.executed(), goals, list(sim.violations), timer.totals)
