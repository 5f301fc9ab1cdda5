"""Discrete-event execution simulator with discrepancy detection.

A plan is encoded as a :class:`Timeline` of condition checks and effect
applications. The simulator keeps two states: *expected* (what the plan
predicts) and *observed* (expected plus exogenous happenings). Conditions are
checked against the observed state.
"""

from __future__ import annotations

import bisect
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .task import TaskError, TaskSemanticError, Variable, format_number, ground_step

__all__ = [
    "TimedEvent",
    "Timeline",
    "WorldState",
    "Violation",
    "DiscrepancySet",
    "Classification",
    "StepResult",
    "Simulator",
    "encode_timeline",
    "inject_exogenous",
    "detect_discrepancy",
    "classify_discrepancy",
    "validate_plan",
]

log = logging.getLogger(__name__)

# Event kinds
CHECK, APPLY, EXOGENOUS = "check", "apply", "exogenous"

# Ordering bands at one instant: ends of actions started earlier, then actions
# starting now (start checks, start effects, zero-duration end checks/effects),
# then exogenous happenings.
_BAND_END, _BAND_START, _BAND_EXO = 0, 1, 2
_SUB = {
    ("end", CHECK): 0,
    ("end", APPLY): 1,
    ("start", CHECK): 0,
    ("start", APPLY): 1,
    ("zero-end", CHECK): 2,
    ("zero-end", APPLY): 3,
}


@dataclass(frozen=True)
class TimedEvent:
    time: Fraction
    kind: str
    var: Variable
    value: bool
    timing: str = ""  # at-start / over-all / at-end for plan events
    step: int | None = None
    source: str | None = None  # "init" for timed initial literals, else agent id
    band: int = _BAND_EXO
    sub: int = 0
    seq: int = 0

    @property
    def key(self):
        return (self.time, self.band, self.sub, self.seq)

    def to_dict(self):
        d = {
            "time": format_number(self.time),
            "kind": self.kind,
            "var": str(self.var),
            "value": self.value,
        }
        if self.timing:
            d["timing"] = self.timing
        if self.step is not None:
            d["step"] = self.step
        if self.source is not None:
            d["source"] = self.source
        return d


def exogenous_event(time, var, value, source="exogenous"):
    return TimedEvent(Fraction(time), EXOGENOUS, var, bool(value), source=source, band=_BAND_EXO)


class Timeline:
    """Pending events in processing order plus the clock of the last event taken."""

    def __init__(self, events=(), clock=Fraction(0)):
        self.events = sorted(events, key=lambda e: e.key)
        self.clock = Fraction(clock)
        self._seq = max((e.seq for e in self.events), default=-1) + 1

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __bool__(self):
        return bool(self.events)

    def next_seq(self):
        self._seq += 1
        return self._seq

    def insert(self, event):
        if event.time < self.clock:
            raise ValueError(f"event at {format_number(event.time)} is before the clock {format_number(self.clock)}")
        if event.kind == EXOGENOUS:
            event = _with(event, seq=self.next_seq())
        bisect.insort(self.events, event, key=lambda e: e.key)
        return self

    def pop(self):
        ev = self.events.pop(0)
        self.clock = ev.time
        return ev

    def peek(self):
        return self.events[0] if self.events else None

    def drop(self, predicate):
        self.events = [e for e in self.events if not predicate(e)]


def _with(event, **kw):
    d = {k: getattr(event, k) for k in event.__dataclass_fields__}
    d.update(kw)
    return TimedEvent(**d)


def _step_events(task, index, step, seq):
    """Events for one plan step, numbered from ``seq``."""
    try:
        ga = ground_step(task, step.action, step.args)
    except TaskError as exc:
        raise TaskSemanticError(f"plan step {index + 1} {step.action} {' '.join(step.args)}: {exc}") from None
    t0, t1 = Fraction(step.time), Fraction(step.time) + ga.duration
    end_phase = "zero-end" if ga.duration == 0 else "end"
    out = []

    def add(time, phase, kind, var, value, timing):
        nonlocal seq
        band = _BAND_END if phase == "end" else _BAND_START
        out.append(TimedEvent(time, kind, var, value, timing, index, None, band, _SUB[(phase, kind)], seq))
        seq += 1

    for timing, var, val in ga.conds:
        if timing in ("at-start", "over-all"):
            add(t0, "start", CHECK, var, val, timing)
    for timing, var, val in ga.effs:
        if timing == "at-start":
            add(t0, "start", APPLY, var, val, timing)
    for timing, var, val in ga.conds:
        if timing in ("over-all", "at-end"):
            add(t1, end_phase, CHECK, var, val, timing)
    for timing, var, val in ga.effs:
        if timing == "at-end":
            add(t1, end_phase, APPLY, var, val, timing)
    overall = tuple((v, val) for timing, v, val in ga.conds if timing == "over-all")
    return out, seq, (index, t0, t1, ga, overall)


def encode_timeline(task, plan=None, include_timed=True, first_index=0, clock=Fraction(0)):
    """Encode ``plan`` (and the task's timed initial literals) into a :class:`Timeline`."""
    events, seq = [], 0
    for i, step in enumerate(plan or (), first_index):
        evs, seq, _ = _step_events(task, i, step, seq)
        events.extend(evs)
    if include_timed:
        for lit in task.problem.timed:
            if lit.time >= clock:
                events.append(_with(exogenous_event(lit.time, lit.var, lit.value, "init"), seq=seq))
                seq += 1
    return Timeline(events, clock)


def inject_exogenous(timeline, event):
    """Insert an exogenous event, keeping the order invariant. Returns ``timeline``."""
    return timeline.insert(event)


# ---------------------------------------------------------------------------
# States


@dataclass
class WorldState:
    """Closed-world boolean assignment plus read-only numerics."""

    facts: set = field(default_factory=set)
    numerics: dict = field(default_factory=dict)
    clock: Fraction = Fraction(0)

    @classmethod
    def initial(cls, task):
        facts = {v for v, val in task.problem.init.items() if val is True}
        nums = {v: val for v, val in task.problem.init.items() if not isinstance(val, bool)}
        return cls(facts, nums, Fraction(0))

    def get(self, var):
        return var in self.facts

    def set(self, var, value):
        if value:
            self.facts.add(var)
        else:
            self.facts.discard(var)

    @property
    def assignment(self):
        return {v: True for v in self.facts}

    def copy(self):
        return WorldState(set(self.facts), dict(self.numerics), self.clock)

    def holds(self, goals):
        return all(self.get(v) == val for v, val in goals.items())


@dataclass(frozen=True)
class Violation:
    time: Fraction
    step: int | None
    action: str
    var: Variable | None
    required: bool | None
    timing: str
    message: str = ""

    def __str__(self):
        if self.timing == "goal":
            return f"goal {self.var}={self.required} not achieved"
        if self.timing == "plan":
            return self.message
        where = f"step {self.step + 1} {self.action}" if self.step is not None else self.action
        return f"{format_number(self.time)}: {where}: {self.timing} condition {self.var}={self.required} does not hold"


class DiscrepancySet(frozenset):
    """Entries ``(Variable, value)`` that hold in the observed state but not in the expected one."""

    def objects(self):
        seen = []
        for var, _ in sorted(self, key=lambda e: (str(e[0]), e[1])):
            for o in var.objs:
                if o not in seen:
                    seen.append(o)
        return seen


def detect_discrepancy(observed, expected):
    novel = {(v, True) for v in observed.facts - expected.facts}
    novel |= {(v, False) for v in expected.facts - observed.facts}
    return DiscrepancySet(novel)


@dataclass(frozen=True)
class Classification:
    kind: str  # new-object-of-new-class | new-object-of-known-class | state-change | unresolved
    obj: str | None = None
    cls: str | None = None
    entries: tuple = ()


def classify_discrepancy(dset, task, class_oracle):
    """Classify by the first out-of-vocabulary object, using ``class_oracle`` for its class."""
    if not dset:
        raise ValueError("empty discrepancy set")
    known = {o.casefold() for o in task.objects}
    for obj in dset.objects():
        if obj.casefold() in known:
            continue
        entries = tuple(sorted((e for e in dset if obj in e[0].objs), key=lambda e: str(e[0])))
        cls = class_oracle.get(obj)
        if cls is None:
            log.warning("no class information for new object %r", obj)
            return Classification("unresolved", obj, None, entries)
        kind = "new-object-of-known-class" if cls in task.classes else "new-object-of-new-class"
        return Classification(kind, obj, cls, entries)
    return Classification("state-change", entries=tuple(sorted(dset, key=lambda e: str(e[0]))))


# ---------------------------------------------------------------------------
# Simulator


@dataclass
class StepResult:
    event: TimedEvent
    violations: list
    discrepancy: DiscrepancySet | None = None


class Simulator:
    """Runs a timeline against observed and expected world states."""

    def __init__(self, task, plan=None, trace=None):
        self.task = task
        self.observed = WorldState.initial(task)
        self.expected = self.observed.copy()
        self.steps = []  # every loaded plan step, by global index
        self.violations = []
        self.trace = trace  # file-like sink for JSON lines, or None
        self.timeline = encode_timeline(task, None)
        self._intervals = {}  # index -> (index, start, end, ground action, over-all conds)
        self._pending = Counter()  # index -> events not yet processed
        self._begun = set()
        if plan is not None:
            self.load_plan(plan)

    @property
    def clock(self):
        return self.timeline.clock

    @property
    def done(self):
        return not self.timeline

    def load_plan(self, plan):
        """Append ``plan``'s events; its steps get fresh global indices."""
        seq = self.timeline.next_seq()
        for step in plan:
            index = len(self.steps)
            evs, seq, info = _step_events(self.task, index, step, seq)
            self.steps.append(step)
            self._intervals[index] = info
            self._pending[index] = len(evs)
            for ev in evs:
                self.timeline.insert(ev)
        self.timeline._seq = max(self.timeline._seq, seq)

    def inject(self, time, var, value, source="exogenous"):
        inject_exogenous(self.timeline, exogenous_event(time, var, value, source))

    def in_progress(self):
        return sorted(i for i in self._begun if self._pending[i])

    def executed(self):
        """Steps that have started, in start order."""
        return [self.steps[i] for i in sorted(self._begun)]

    def _violation(self, time, index, var, value, timing):
        action = self.steps[index].action if index is not None else ""
        v = Violation(time, index, action, var, value, timing)
        self.violations.append(v)
        return v

    def _intermediate(self, time):
        """Sample over-all conditions of actions strictly inside their interval."""
        out = []
        for index in self.in_progress():
            _, t0, t1, _, overall = self._intervals[index]
            if t0 < time < t1:
                for var, val in overall:
                    if self.observed.get(var) != val:
                        out.append(self._violation(time, index, var, val, "over-all"))
        return out

    def advance(self):
        """Process the next event and report violations and any discrepancy."""
        ev = self.timeline.pop()
        self.observed.clock = self.expected.clock = ev.time
        violations, disc = [], None
        if ev.step is not None:
            self._begun.add(ev.step)
            self._pending[ev.step] -= 1
        if ev.kind == CHECK:
            if self.observed.get(ev.var) != ev.value:
                violations.append(self._violation(ev.time, ev.step, ev.var, ev.value, ev.timing))
        elif ev.kind == APPLY:
            self.observed.set(ev.var, ev.value)
            self.expected.set(ev.var, ev.value)
            violations = self._intermediate(ev.time)
        else:
            self.observed.set(ev.var, ev.value)
            if ev.source == "init":
                self.expected.set(ev.var, ev.value)
            else:
                disc = detect_discrepancy(self.observed, self.expected)
            violations = self._intermediate(ev.time)
        if self.trace is not None:
            rec = ev.to_dict()
            rec["ok"] = not violations
            if disc:
                rec["discrepancy"] = sorted(f"{v}={val}" for v, val in disc)
            self.trace.write(json.dumps(rec) + "\n")
        return StepResult(ev, violations, disc)

    def run(self, until=None):
        """Advance until the timeline is empty or the next event is after ``until``."""
        results = []
        while self.timeline and (until is None or self.timeline.peek().time <= until):
            results.append(self.advance())
        return results

    def acknowledge(self, entries):
        """Accept observed facts into the expected state."""
        for var, val in entries:
            self.expected.set(var, val)

    def assert_facts(self, facts):
        """Learned facts hold in both states."""
        for var, val in facts:
            self.observed.set(var, val)
            self.expected.set(var, val)

    def settle(self):
        """Finish every action that has already started."""
        results = []
        while self.in_progress():
            results.append(self.advance())
        return results

    def replace_plan(self, task, plan):
        """Drop steps that have not started and continue with ``plan`` on ``task``."""
        unstarted = {i for i in range(len(self.steps)) if i not in self._begun}
        self.timeline.drop(lambda e: e.step in unstarted)
        for i in unstarted:
            self._pending[i] = 0
        self.task = task
        self.load_plan(plan)


def validate_plan(task, plan):
    """Replay ``plan`` with no exogenous events. Returns ``(valid, violations)``."""
    try:
        sim = Simulator(task, plan)
    except TaskError as exc:
        return False, [Violation(Fraction(0), None, "", None, None, "plan", str(exc))]
    sim.run()
    violations = list(sim.violations)
    for var, val in task.problem.goals.items():
        if sim.observed.get(var) != val:
            violations.append(Violation(sim.clock, None, "", var, val, "goal"))
    return not violations, violations
