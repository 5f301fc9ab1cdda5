"""Grounded forward-search temporal planner (sequential semantics) and external-planner adapter.

Actions run one after another: each starts ``EPSILON`` after its predecessor
ends. Search is A* with g = number of actions and h = number of unsatisfied
goals. Timed initial literals are applied as the clock passes them, and
over-all conditions are re-checked whenever one fires inside an action.
"""

from __future__ import annotations

import heapq
import math
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .simulation import WorldState, validate_plan
from .task import Plan, PlanStep, TaskError, ground_actions, parse_plan, serialize_task

__all__ = [
    "EPSILON",
    "NODE_BUDGET",
    "TIMEOUT_ENV",
    "Unsolvable",
    "ExternalPlannerError",
    "InvalidPlanError",
    "solve",
    "solve_from_state",
    "invoke_external",
]

EPSILON = Fraction(1, 1000)
NODE_BUDGET = 10**6
TIMEOUT_ENV = "ONTOPLAN_PLANNER_TIMEOUT"


class Unsolvable(Exception):
    def __init__(self, message, explored=0):
        super().__init__(f"{message} ({explored} nodes explored)")
        self.explored = explored


class ExternalPlannerError(RuntimeError):
    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class InvalidPlanError(ExternalPlannerError):
    def __init__(self, violations):
        super().__init__("external plan is invalid: " + "; ".join(str(v) for v in violations[:5]))
        self.violations = violations


@dataclass(frozen=True)
class _Compiled:
    ga: object
    duration: Fraction
    start_pos: int
    start_neg: int
    over_pos: int
    over_neg: int
    end_pos: int
    end_neg: int
    start_add: int
    start_del: int
    end_add: int
    end_del: int


def _masks(items, bit):
    pos = neg = 0
    for var, val in items:
        if val:
            pos |= bit[var]
        else:
            neg |= bit[var]
    return pos, neg


class _Encoding:
    def __init__(self, task, facts):
        self.actions = sorted(
            ground_actions(task),
            key=lambda a: (a.name, tuple(list(task.objects).index(o) for o in a.args)),
        )
        vars_ = []
        seen = set()

        def note(v):
            if v not in seen:
                seen.add(v)
                vars_.append(v)

        for a in self.actions:
            for _, v, _ in a.conds + a.effs:
                note(v)
        for v in task.problem.goals:
            note(v)
        for lit in task.problem.timed:
            note(lit.var)
        for v in sorted(facts, key=str):
            note(v)
        self.bit = {v: 1 << i for i, v in enumerate(vars_)}
        self.compiled = []
        for a in self.actions:
            sp, sn = _masks([(v, val) for t, v, val in a.conds if t == "at-start"], self.bit)
            op, on = _masks([(v, val) for t, v, val in a.conds if t == "over-all"], self.bit)
            ep, en = _masks([(v, val) for t, v, val in a.conds if t == "at-end"], self.bit)
            sa, sd = _masks([(v, val) for t, v, val in a.effs if t == "at-start"], self.bit)
            ea, ed = _masks([(v, val) for t, v, val in a.effs if t == "at-end"], self.bit)
            self.compiled.append(_Compiled(a, a.duration, sp | op, sn | on, op, on, ep | op, en | on, sa, sd, ea, ed))
        self.goal_pos, self.goal_neg = _masks(task.problem.goals.items(), self.bit)

    def encode(self, facts):
        s = 0
        for v in facts:
            b = self.bit.get(v)
            if b:
                s |= b
        return s


def _holds(state, pos, neg):
    return state & pos == pos and not state & neg


def _apply_literal(state, lit, bit):
    return state | bit[lit.var] if lit.value else state & ~bit[lit.var]


def _unsat(state, enc):
    return bin(enc.goal_pos & ~state).count("1") + bin(enc.goal_neg & state).count("1")


def _time_scale(*values):
    scale = 1
    for v in values:
        scale = math.lcm(scale, Fraction(v).denominator)
    return scale


def _search(task, facts, clock, deadline, node_budget, all_timed=False):
    enc = _Encoding(task, facts)
    timed = sorted((lit for lit in task.problem.timed if all_timed or lit.time > clock), key=lambda l: l.time)
    # integer time units keep the inner loop free of Fraction arithmetic
    scale = _time_scale(EPSILON, clock, *(c.duration for c in enc.compiled), *(l.time for l in timed),
                        *(() if deadline is None else (deadline,)))
    eps = int(EPSILON * scale)
    durs = [int(c.duration * scale) for c in enc.compiled]
    times = [int(lit.time * scale) for lit in timed]
    limit = None if deadline is None else Fraction(deadline) * scale
    n_timed = len(timed)
    bit = enc.bit

    def final_goal_check(state, li):
        for lit in timed[li:]:
            state = _apply_literal(state, lit, bit)
        return _holds(state, enc.goal_pos, enc.goal_neg)

    def execute(state, li, start, c, dur):
        while li < n_timed and times[li] < start:
            state = _apply_literal(state, timed[li], bit)
            li += 1
        if state & c.start_pos != c.start_pos or state & c.start_neg:
            return None
        state = (state | c.start_add) & ~c.start_del
        end = start + dur
        while li < n_timed and times[li] < end:
            state = _apply_literal(state, timed[li], bit)
            if times[li] > start and not _holds(state, c.over_pos, c.over_neg):
                return None
            li += 1
        if state & c.end_pos != c.end_pos or state & c.end_neg:
            return None
        return (state | c.end_add) & ~c.end_del, li, end

    s0 = enc.encode(facts)
    t0 = int(Fraction(clock) * scale)
    # nodes: (state, li, clock, g, parent, action)
    nodes = [(s0, 0, t0, 0, -1, -1)]
    best = {(s0, 0): [(0, t0)]}
    h0 = _unsat(s0, enc)
    heap = [(h0, h0, 0, 0)]
    counter = 1
    explored = 0
    compiled = list(zip(enc.compiled, durs))
    while heap:
        _, h, _, idx = heapq.heappop(heap)
        state, li, now, g, _, _ = nodes[idx]
        if h == 0 and final_goal_check(state, li):
            return _extract(nodes, idx, enc, scale), explored
        explored += 1
        if explored > node_budget:
            raise Unsolvable("node budget exhausted", explored)
        start = now + eps
        for ai, (c, dur) in enumerate(compiled):
            res = execute(state, li, start, c, dur)
            if res is None:
                continue
            nstate, nli, end = res
            if nstate == state:
                continue  # no-op (e.g. moving to the current location)
            if limit is not None and end > limit:
                continue
            key = (nstate, nli)
            entries = best.setdefault(key, [])
            if any(eg <= g + 1 and ec <= end for eg, ec in entries):
                continue
            entries[:] = [(eg, ec) for eg, ec in entries if not (g + 1 <= eg and end <= ec)]
            entries.append((g + 1, end))
            nodes.append((nstate, nli, end, g + 1, idx, ai))
            nh = _unsat(nstate, enc)
            heapq.heappush(heap, (g + 1 + nh, nh, counter, len(nodes) - 1))
            counter += 1
    raise Unsolvable("search space exhausted", explored)


def _extract(nodes, idx, enc, scale):
    steps = []
    while nodes[idx][4] >= 0:
        _, _, end, _, parent, ai = nodes[idx]
        c = enc.compiled[ai]
        steps.append(PlanStep(Fraction(end, scale) - c.duration, c.ga.name, c.ga.args, c.duration))
        idx = parent
    return Plan(tuple(reversed(steps)))


def solve(task, deadline=None, node_budget=NODE_BUDGET):
    """Plan from the task's initial state; raises :class:`Unsolvable`."""
    facts = {v for v, val in task.problem.init.items() if val is True}
    plan, _ = _search(task, facts, Fraction(0), deadline, node_budget, all_timed=True)
    return plan


def solve_from_state(task, state, clock=None, deadline=None, node_budget=NODE_BUDGET):
    """Plan from ``state`` at ``clock``; timed literals at or before ``clock`` are taken as already applied."""
    if clock is None:
        clock = state.clock
    facts = state.facts if isinstance(state, WorldState) else set(state)
    plan, _ = _search(task, facts, Fraction(clock), deadline, node_budget)
    return plan


def invoke_external(command, task, timeout=None):
    """Run an external planner on the serialized task and validate its plan.

    ``command`` is a string or argv list containing ``{domain}``, ``{problem}``
    and ``{plan_out}`` placeholders.
    """
    if timeout is None:
        timeout = float(os.environ.get(TIMEOUT_ENV, "60"))
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    dom_text, prob_text = serialize_task(task)
    with tempfile.TemporaryDirectory(prefix="ontoplan-") as tmp:
        paths = {
            "domain": str(Path(tmp, "domain.task")),
            "problem": str(Path(tmp, "problem.task")),
            "plan_out": str(Path(tmp, "plan.txt")),
        }
        Path(paths["domain"]).write_text(dom_text, encoding="utf-8")
        Path(paths["problem"]).write_text(prob_text, encoding="utf-8")
        argv = [a.format(**paths) for a in argv]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            raise ExternalPlannerError(f"external planner timed out after {timeout}s") from None
        except OSError as exc:
            raise ExternalPlannerError(f"cannot run external planner: {exc}") from None
        if proc.returncode != 0:
            raise ExternalPlannerError(
                f"external planner exited with status {proc.returncode}: {proc.stderr.strip()[:500]}",
                proc.returncode,
            )
        try:
            text = Path(paths["plan_out"]).read_text(encoding="utf-8")
        except OSError:
            raise ExternalPlannerError("external planner produced no plan file", proc.returncode) from None
    try:
        plan = parse_plan(text)
    except TaskError as exc:
        raise ExternalPlannerError(f"unreadable external plan: {exc}", proc.returncode) from None
    valid, violations = validate_plan(task, plan)
    if not valid:
        raise InvalidPlanError(violations)
    return plan
