"""Temporal planning task model: classes, patterns, action schemas, problems and plans.

Textual format (UTF-8 s-expressions)::

    (:classes agent location major_appliance - thing
              robot - agent)
    (:patterns (be (dishwasher refrigerator robot television) location)
               (empty robot))
    (:actions
      (move :pars (robot location location)
            :duration (lookup duration 1 2)
            :cond ((at-start (be ?0 ?1)) (over-all (active ?0)))
            :eff ((at-start (not (be ?0 ?1))) (at-end (be ?0 ?2)))))

    (:objects av - robot area_transit area_storage - location)
    (:init (be av area_storage) (= (duration area_storage area_transit) 5)
           (at 780 (not (active av))))
    (:goal (repaired washer_ID02))

Action literals refer to parameters by position (``?0``, ``?1`` ...); any other
argument is a constant object name.
"""

from __future__ import annotations

import copy
import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Union

from .sexpr import SExpr, SExprSyntaxError, Symbol, read_all

__all__ = [
    "ROOT",
    "TaskError",
    "TaskSyntaxError",
    "TaskSemanticError",
    "ClassHierarchy",
    "Pattern",
    "Atom",
    "Lookup",
    "Cond",
    "Effect",
    "ActionSchema",
    "Domain",
    "Variable",
    "TimedLiteral",
    "Problem",
    "PlanningTask",
    "PlanStep",
    "Plan",
    "GroundAction",
    "parse_task",
    "parse_domain",
    "parse_problem",
    "serialize_task",
    "serialize_domain",
    "serialize_problem",
    "parse_plan",
    "format_plan",
    "instantiate_variable",
    "ground_actions",
    "ground_step",
    "format_number",
]

ROOT = "thing"
COND_TIMINGS = ("at-start", "over-all", "at-end")
EFF_TIMINGS = ("at-start", "at-end")

Value = Union[bool, Fraction]


class TaskError(ValueError):
    pass


class TaskSyntaxError(TaskError):
    def __init__(self, message, line=0, col=0):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class TaskSemanticError(TaskError):
    pass


def _syntax(msg, node):
    return TaskSyntaxError(msg, getattr(node, "line", 0), getattr(node, "col", 0))


# ---------------------------------------------------------------------------
# Domain types


@dataclass
class ClassHierarchy:
    """Forest of classes under the single root ``thing``.

    ``parents`` maps every class to its parent; the root maps to ``None``.
    """

    parents: dict = field(default_factory=lambda: {ROOT: None})

    def __contains__(self, name):
        return name in self.parents

    def __iter__(self):
        return iter(self.parents)

    def __len__(self):
        return len(self.parents)

    def parent(self, name):
        return self.parents[name]

    def children(self, name):
        return [c for c, p in self.parents.items() if p == name]

    def siblings(self, name):
        p = self.parents[name]
        if p is None:
            return []
        return [c for c in self.children(p) if c != name]

    def ancestors(self, name):
        """``name`` followed by its ancestors up to the root."""
        out = []
        cur = name
        while cur is not None:
            if cur in out:
                raise TaskSemanticError(f"cycle in class hierarchy at {cur!r}")
            out.append(cur)
            cur = self.parents[cur]
        return out

    def is_subclass(self, name, ancestor):
        return ancestor in self.ancestors(name)

    def admits(self, slot, cls):
        """True if ``cls`` equals or descends from any class in ``slot``."""
        anc = self.ancestors(cls)
        return any(s in anc for s in slot)

    def depth_order(self):
        """Classes ordered so that every parent precedes its children."""
        order = [c for c, p in self.parents.items() if p is None]
        i = 0
        while i < len(order):
            order.extend(self.children(order[i]))
            i += 1
        return order

    def with_class(self, name, parent):
        if name in self.parents:
            raise TaskSemanticError(f"class {name!r} already defined")
        if parent not in self.parents:
            raise TaskSemanticError(f"undefined class {parent!r}")
        parents = dict(self.parents)
        parents[name] = parent
        return ClassHierarchy(parents)

    def validate(self):
        roots = [c for c, p in self.parents.items() if p is None]
        if roots != [ROOT]:
            raise TaskSemanticError(f"class hierarchy must have the single root {ROOT!r}, got {roots}")
        for c, p in self.parents.items():
            if p is not None and p not in self.parents:
                raise TaskSemanticError(f"class {c!r} has undefined parent {p!r}")
        for c in self.parents:
            self.ancestors(c)


@dataclass(frozen=True)
class Pattern:
    """A relation template; each arg slot is a disjunction of class names."""

    name: str
    args: tuple = ()

    @property
    def arity(self):
        return len(self.args)


@dataclass(frozen=True)
class Atom:
    """Pattern reference inside an action schema. Ints are parameter indices."""

    pattern: str
    args: tuple = ()


@dataclass(frozen=True)
class Lookup:
    """Duration read from a numeric initial-state variable."""

    pattern: str
    indices: tuple = ()


@dataclass(frozen=True)
class Cond:
    timing: str
    atom: Atom
    value: bool = True


@dataclass(frozen=True)
class Effect:
    timing: str
    atom: Atom
    value: bool = True


@dataclass(frozen=True)
class ActionSchema:
    name: str
    pars: tuple = ()
    duration: Union[Fraction, Lookup] = Fraction(0)
    conds: tuple = ()
    effs: tuple = ()


@dataclass
class Domain:
    classes: ClassHierarchy = field(default_factory=ClassHierarchy)
    patterns: dict = field(default_factory=dict)
    schemas: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Variable:
    name: str
    objs: tuple = ()

    def __str__(self):
        return "(" + " ".join((self.name,) + tuple(self.objs)) + ")"

    def mentions(self, obj):
        return obj in self.objs


@dataclass(frozen=True)
class TimedLiteral:
    time: Fraction
    var: Variable
    value: bool


@dataclass
class Problem:
    objects: dict = field(default_factory=dict)
    init: dict = field(default_factory=dict)
    timed: tuple = ()
    goals: dict = field(default_factory=dict)


@dataclass
class PlanningTask:
    domain: Domain = field(default_factory=Domain)
    problem: Problem = field(default_factory=Problem)

    @property
    def classes(self):
        return self.domain.classes

    @property
    def objects(self):
        return self.problem.objects

    @property
    def variables(self):
        """V: every variable assigned in the initial state, timed literals or goals."""
        out = set(self.problem.init)
        out.update(t.var for t in self.problem.timed)
        out.update(self.problem.goals)
        return out

    def copy(self):
        return copy.deepcopy(self)

    def resolve_object(self, name):
        """Case-insensitive object lookup returning the declared spelling."""
        if name in self.problem.objects:
            return name
        folded = name.casefold()
        for o in self.problem.objects:
            if o.casefold() == folded:
                return o
        raise TaskSemanticError(f"undefined object {name!r}")

    def class_of(self, obj):
        return self.problem.objects[self.resolve_object(obj)]

    def objects_admitted(self, slot):
        return [o for o, c in self.problem.objects.items() if self.classes.admits(slot, c)]

    def numeric(self, var):
        val = self.problem.init.get(var)
        if isinstance(val, bool) or val is None:
            raise TaskSemanticError(f"missing numeric variable {var}")
        return val

    def validate(self):
        _validate_domain(self.domain)
        _validate_problem(self.domain, self.problem)


# ---------------------------------------------------------------------------
# Plans


@dataclass(frozen=True)
class PlanStep:
    time: Fraction
    action: str
    args: tuple
    duration: Fraction

    @property
    def end(self):
        return self.time + self.duration

    def signature(self):
        return (self.action.casefold(),) + tuple(a.casefold() for a in self.args)


@dataclass(frozen=True)
class Plan:
    steps: tuple = ()

    def __len__(self):
        return len(self.steps)

    def __iter__(self) -> Iterator[PlanStep]:
        return iter(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    def actions(self):
        """Action sequence without timestamps, case-folded."""
        return [s.signature() for s in self.steps]


_PLAN_LINE = re.compile(
    r"^\s*(?P<time>\d+(?:\.\d*)?)\s*:\s*\(\s*(?P<body>[^()]*?)\s*\)\s*"
    r"\[\s*(?P<dur>\d+(?:\.\d*)?)\s*\]\s*$"
)


def parse_plan(text):
    """Parse plan lines ``T: (NAME ARGS) [D]``; names are lower-cased."""
    steps = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith(";"):
            continue
        m = _PLAN_LINE.match(line)
        if m is None or not m.group("body"):
            raise TaskSyntaxError(f"malformed plan line: {line.strip()!r}", lineno, 1)
        name, *args = m.group("body").lower().split()
        steps.append(PlanStep(Fraction(m.group("time")), name, tuple(args), Fraction(m.group("dur"))))
    steps.sort(key=lambda s: s.time)  # stable: ties keep textual order
    return Plan(tuple(steps))


def format_plan(plan):
    lines = []
    for s in plan:
        body = " ".join((s.action,) + tuple(s.args)).upper()
        lines.append(f"{float(s.time):.4f}: ({body}) [{float(s.duration):.4f}]")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Numbers


def _parse_number(sym):
    try:
        return Fraction(str(sym))
    except (ValueError, ZeroDivisionError):
        raise _syntax(f"expected a number, got {sym!r}", sym) from None


def format_number(x):
    """Exact text for a rational: integer, finite decimal, or ``p/q``."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    d = x.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{x.numerator}/{x.denominator}"
    k = max(twos, fives)
    scaled = x * 10**k
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(k + 1, "0")
    return f"{sign}{digits[:-k]}.{digits[-k:]}"


# ---------------------------------------------------------------------------
# Parsing


def _sections(forms, allowed):
    out = {}
    for form in forms:
        if not isinstance(form, SExpr) or not form or not isinstance(form[0], Symbol) or not form[0].startswith(":"):
            raise _syntax("expected a (:section ...) form", form)
        key = form[0].lower()
        if key not in allowed:
            raise _syntax(f"unknown section {form[0]!r}", form[0])
        if key in out:
            raise _syntax(f"duplicate section {form[0]!r}", form[0])
        out[key] = form[1:]
    return out


def _typed_list(items, what):
    """``a b - c d - e`` -> [(a, c), (b, c), (d, e)]."""
    out, pending = [], []
    it = iter(items)
    for tok in it:
        if isinstance(tok, SExpr):
            raise _syntax(f"unexpected list in {what} declaration", tok)
        if tok == "-":
            parent = next(it, None)
            if parent is None or isinstance(parent, SExpr):
                raise _syntax(f"expected a class name after '-' in {what}", tok)
            if not pending:
                raise _syntax(f"'-' with no {what} names before it", tok)
            out.extend((name, str(parent)) for name in pending)
            pending = []
        else:
            pending.append(str(tok))
    if pending:
        raise _syntax(f"{what} {pending[0]!r} has no '- <class>'", items[-1])
    return out


def _slot(node):
    if isinstance(node, SExpr):
        if not node or any(isinstance(x, SExpr) for x in node):
            raise _syntax("an argument slot must be a class name or a list of class names", node)
        return tuple(str(x) for x in node)
    return (str(node),)


def _parse_classes(items):
    parents = {ROOT: None}
    for name, parent in _typed_list(items, "class"):
        if name == ROOT or name in parents:
            raise TaskSemanticError(f"class {name!r} declared twice")
        parents[name] = parent
    return ClassHierarchy(parents)


def _parse_pattern_sig(node, what="pattern"):
    if not isinstance(node, SExpr) or not node or isinstance(node[0], SExpr):
        raise _syntax(f"expected ({what}-name slot ...)", node)
    return str(node[0]), tuple(_slot(x) for x in node[1:])


def _parse_atom(node):
    if not isinstance(node, SExpr) or not node or isinstance(node[0], SExpr):
        raise _syntax("expected a literal (pattern arg ...)", node)
    args = []
    for a in node[1:]:
        if isinstance(a, SExpr):
            raise _syntax("nested list inside a literal", a)
        if a.startswith("?"):
            try:
                args.append(int(a[1:]))
            except ValueError:
                raise _syntax(f"bad parameter reference {a!r}", a) from None
        else:
            args.append(str(a))
    return Atom(str(node[0]), tuple(args))


def _parse_literal(node, parse_atom):
    """``(p ...)`` or ``(not (p ...))`` -> (atom, value)."""
    if isinstance(node, SExpr) and len(node) == 2 and node[0] == "not" and isinstance(node[1], SExpr):
        return parse_atom(node[1]), False
    return parse_atom(node), True


def _parse_timed_list(node, timings, cls):
    if not isinstance(node, SExpr):
        raise _syntax("expected a list of (timing literal) entries", node)
    out = []
    for entry in node:
        if not isinstance(entry, SExpr) or len(entry) != 2 or entry[0] not in timings:
            raise _syntax(f"expected ({'|'.join(timings)} literal)", entry)
        atom, value = _parse_literal(entry[1], _parse_atom)
        out.append(cls(str(entry[0]), atom, value))
    return tuple(out)


def _parse_schema(node):
    if not isinstance(node, SExpr) or not node or isinstance(node[0], SExpr):
        raise _syntax("expected (action-name :pars ... )", node)
    name = str(node[0])
    opts = {}
    rest = list(node[1:])
    if len(rest) % 2:
        raise _syntax(f"action {name!r}: keyword without value", node)
    for key, val in zip(rest[::2], rest[1::2]):
        if not isinstance(key, Symbol) or key not in (":pars", ":duration", ":cond", ":eff"):
            raise _syntax(f"action {name!r}: unknown keyword {key!r}", key)
        opts[str(key)] = val
    pars = opts.get(":pars", SExpr())
    if not isinstance(pars, SExpr):
        raise _syntax(f"action {name!r}: :pars must be a list", pars)
    dur = opts.get(":duration", Symbol("0"))
    if isinstance(dur, SExpr):
        if len(dur) < 2 or dur[0] != "lookup" or isinstance(dur[1], SExpr):
            raise _syntax(f"action {name!r}: expected (lookup pattern idx ...)", dur)
        try:
            idx = tuple(int(x) for x in dur[2:])
        except (TypeError, ValueError):
            raise _syntax(f"action {name!r}: lookup indices must be integers", dur) from None
        duration = Lookup(str(dur[1]), idx)
    else:
        duration = _parse_number(dur)
    conds = _parse_timed_list(opts.get(":cond", SExpr()), COND_TIMINGS, Cond)
    effs = _parse_timed_list(opts.get(":eff", SExpr()), EFF_TIMINGS, Effect)
    return ActionSchema(name, tuple(_slot(x) for x in pars), duration, conds, effs)


def _forms(text):
    try:
        return read_all(text)
    except SExprSyntaxError as e:
        raise TaskSyntaxError(str(e).rsplit(" (line", 1)[0], e.line, e.col) from None


def parse_domain(text):
    secs = _sections(_forms(text), {":classes", ":patterns", ":actions"})
    classes = _parse_classes(secs.get(":classes", []))
    patterns = {}
    for node in secs.get(":patterns", []):
        name, args = _parse_pattern_sig(node)
        if name in patterns:
            raise TaskSemanticError(f"pattern {name!r} declared twice")
        patterns[name] = Pattern(name, args)
    schemas = {}
    for node in secs.get(":actions", []):
        s = _parse_schema(node)
        if s.name in schemas:
            raise TaskSemanticError(f"action {s.name!r} declared twice")
        schemas[s.name] = s
    domain = Domain(classes, patterns, schemas)
    _validate_domain(domain)
    return domain


def _parse_var(node):
    if not isinstance(node, SExpr) or not node or any(isinstance(x, SExpr) for x in node):
        raise _syntax("expected a ground literal (pattern obj ...)", node)
    return Variable(str(node[0]), tuple(str(x) for x in node[1:]))


def parse_problem(text, domain=None):
    secs = _sections(_forms(text), {":objects", ":init", ":goal"})
    objects = {}
    for name, cls in _typed_list(secs.get(":objects", []), "object"):
        if name in objects:
            raise TaskSemanticError(f"object {name!r} declared twice")
        objects[name] = cls
    init, timed = {}, []
    for node in secs.get(":init", []):
        if isinstance(node, SExpr) and node and node[0] == "=":
            if len(node) != 3:
                raise _syntax("expected (= (var ...) number)", node)
            init[_parse_var(node[1])] = _parse_number(node[2])
        elif isinstance(node, SExpr) and node and node[0] == "at":
            if len(node) != 3:
                raise _syntax("expected (at time literal)", node)
            var, value = _parse_literal(node[2], _parse_var)
            timed.append(TimedLiteral(_parse_number(node[1]), var, value))
        else:
            var, value = _parse_literal(node, _parse_var)
            init[var] = value
    goals = {}
    for node in secs.get(":goal", []):
        var, value = _parse_literal(node, _parse_var)
        goals[var] = value
    problem = Problem(objects, init, tuple(timed), goals)
    if domain is not None:
        _validate_problem(domain, problem)
    return problem


def parse_task(domain_text, problem_text):
    domain = parse_domain(domain_text)
    return PlanningTask(domain, parse_problem(problem_text, domain))


# ---------------------------------------------------------------------------
# Validation


def _check_slot(classes, slot, owner):
    for c in slot:
        if c not in classes:
            raise TaskSemanticError(f"{owner}: undefined class {c!r}")


def _validate_domain(domain):
    domain.classes.validate()
    for p in domain.patterns.values():
        for slot in p.args:
            _check_slot(domain.classes, slot, f"pattern {p.name!r}")
    for s in domain.schemas.values():
        for slot in s.pars:
            _check_slot(domain.classes, slot, f"action {s.name!r}")
        atoms = [c.atom for c in s.conds] + [e.atom for e in s.effs]
        for atom in atoms:
            pat = domain.patterns.get(atom.pattern)
            if pat is None:
                raise TaskSemanticError(f"action {s.name!r}: undefined pattern {atom.pattern!r}")
            if pat.arity != len(atom.args):
                raise TaskSemanticError(
                    f"action {s.name!r}: pattern {atom.pattern!r} takes {pat.arity} args, got {len(atom.args)}"
                )
            for a in atom.args:
                if isinstance(a, int) and not 0 <= a < len(s.pars):
                    raise TaskSemanticError(f"action {s.name!r}: parameter ?{a} out of range")
        if isinstance(s.duration, Lookup):
            pat = domain.patterns.get(s.duration.pattern)
            if pat is None:
                raise TaskSemanticError(f"action {s.name!r}: undefined pattern {s.duration.pattern!r}")
            if pat.arity != len(s.duration.indices):
                raise TaskSemanticError(f"action {s.name!r}: duration lookup arity mismatch")
            for i in s.duration.indices:
                if not 0 <= i < len(s.pars):
                    raise TaskSemanticError(f"action {s.name!r}: duration parameter {i} out of range")


def _check_variable(domain, objects, var):
    pat = domain.patterns.get(var.name)
    if pat is None:
        raise TaskSemanticError(f"undefined pattern {var.name!r} in {var}")
    if pat.arity != len(var.objs):
        raise TaskSemanticError(f"{var}: pattern {var.name!r} takes {pat.arity} args")
    for k, (obj, slot) in enumerate(zip(var.objs, pat.args), 1):
        if obj not in objects:
            raise TaskSemanticError(f"{var}: undefined object {obj!r}")
        if not domain.classes.admits(slot, objects[obj]):
            raise TaskSemanticError(f"{var}: object {obj!r} of class {objects[obj]!r} not admitted at slot {k}")


def _validate_problem(domain, problem):
    for obj, cls in problem.objects.items():
        if cls not in domain.classes:
            raise TaskSemanticError(f"object {obj!r}: undefined class {cls!r}")
    for var in problem.init:
        _check_variable(domain, problem.objects, var)
    for t in problem.timed:
        if t.time < 0:
            raise TaskSemanticError(f"timed literal {t.var} at negative time")
        _check_variable(domain, problem.objects, t.var)
    for var in problem.goals:
        _check_variable(domain, problem.objects, var)
    for s in domain.schemas.values():
        for atom in [c.atom for c in s.conds] + [e.atom for e in s.effs]:
            for a in atom.args:
                if isinstance(a, str) and a not in problem.objects:
                    raise TaskSemanticError(f"action {s.name!r}: undefined constant {a!r}")


# ---------------------------------------------------------------------------
# Serialisation


def _fmt_slot(slot):
    return slot[0] if len(slot) == 1 else "(" + " ".join(slot) + ")"


def _fmt_arg(a):
    return f"?{a}" if isinstance(a, int) else a


def _fmt_atom(atom, value=True):
    body = "(" + " ".join((atom.pattern,) + tuple(_fmt_arg(a) for a in atom.args)) + ")"
    return body if value else f"(not {body})"


def _fmt_var(var, value=True):
    if isinstance(value, bool):
        return str(var) if value else f"(not {var})"
    return f"(= {var} {format_number(value)})"


def _group_typed(pairs):
    """Emit ``a b - c`` runs, grouping consecutive names that share a type."""
    lines, run, cur = [], [], None
    for name, typ in pairs:
        if typ != cur and run:
            lines.append(" ".join(run) + f" - {cur}")
            run = []
        cur = typ
        run.append(name)
    if run:
        lines.append(" ".join(run) + f" - {cur}")
    return lines


def serialize_domain(domain):
    classes = domain.classes
    pairs = [(c, classes.parent(c)) for c in classes.depth_order() if classes.parent(c) is not None]
    pairs.sort(key=lambda cp: classes.depth_order().index(cp[1]))
    out = ["(:classes" + "".join("\n  " + ln for ln in _group_typed(pairs)) + ")"]
    pats = ["(" + " ".join((p.name,) + tuple(_fmt_slot(s) for s in p.args)) + ")" for p in domain.patterns.values()]
    out.append("(:patterns" + "".join("\n  " + p for p in pats) + ")")
    acts = []
    for s in domain.schemas.values():
        if isinstance(s.duration, Lookup):
            dur = "(lookup " + " ".join([s.duration.pattern] + [str(i) for i in s.duration.indices]) + ")"
        else:
            dur = format_number(s.duration)
        conds = " ".join(f"({c.timing} {_fmt_atom(c.atom, c.value)})" for c in s.conds)
        effs = " ".join(f"({e.timing} {_fmt_atom(e.atom, e.value)})" for e in s.effs)
        acts.append(
            f"({s.name} :pars ({' '.join(_fmt_slot(p) for p in s.pars)})\n"
            f"    :duration {dur}\n"
            f"    :cond ({conds})\n"
            f"    :eff ({effs}))"
        )
    out.append("(:actions" + "".join("\n  " + a for a in acts) + ")")
    return "\n".join(out) + "\n"


def serialize_problem(problem):
    out = ["(:objects" + "".join("\n  " + ln for ln in _group_typed(problem.objects.items())) + ")"]
    init = [_fmt_var(v, val) for v, val in problem.init.items()]
    init += [f"(at {format_number(t.time)} {_fmt_var(t.var, t.value)})" for t in problem.timed]
    out.append("(:init" + "".join("\n  " + x for x in init) + ")")
    out.append("(:goal" + "".join("\n  " + _fmt_var(v, val) for v, val in problem.goals.items()) + ")")
    return "\n".join(out) + "\n"


def serialize_task(task):
    return serialize_domain(task.domain), serialize_problem(task.problem)


# ---------------------------------------------------------------------------
# Variables and grounding


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple
    duration: Fraction
    conds: tuple  # (timing, Variable, bool)
    effs: tuple  # (timing, Variable, bool)

    def __str__(self):
        return "(" + " ".join((self.name,) + tuple(self.args)) + ")"

    def signature(self):
        return (self.name.casefold(),) + tuple(a.casefold() for a in self.args)


def instantiate_variable(pattern, objs, task):
    """Bind ``pattern``'s arg slots to ``objs``, checking class admission."""
    objs = tuple(objs)
    if len(objs) != pattern.arity:
        raise TaskSemanticError(f"pattern {pattern.name!r} takes {pattern.arity} args, got {len(objs)}")
    resolved = []
    for k, (obj, slot) in enumerate(zip(objs, pattern.args), 1):
        o = task.resolve_object(obj)
        cls = task.objects[o]
        if not task.classes.admits(slot, cls):
            raise TaskSemanticError(
                f"class mismatch at slot {k} of {pattern.name!r}: {o!r} is {cls!r}, slot requires {_fmt_slot(slot)}"
            )
        resolved.append(o)
    return Variable(pattern.name, tuple(resolved))


def _bind(atom, args):
    return Variable(atom.pattern, tuple(args[a] if isinstance(a, int) else a for a in atom.args))


def _instantiate(task, schema, args):
    if isinstance(schema.duration, Lookup):
        var = Variable(schema.duration.pattern, tuple(args[i] for i in schema.duration.indices))
        duration = task.numeric(var)
    else:
        duration = schema.duration
    conds = tuple((c.timing, _bind(c.atom, args), c.value) for c in schema.conds)
    effs = tuple((e.timing, _bind(e.atom, args), e.value) for e in schema.effs)
    return GroundAction(schema.name, tuple(args), Fraction(duration), conds, effs)


def ground_actions(task) -> list:
    """Every type-compatible binding of every schema, in declaration order."""
    out = []
    for schema in task.domain.schemas.values():
        candidates = [task.objects_admitted(slot) for slot in schema.pars]
        for args in itertools.product(*candidates):
            out.append(_instantiate(task, schema, args))
    return out


def ground_step(task, name, args) -> GroundAction:
    """Ground one named action (case-insensitive), as read from a plan."""
    schema = task.domain.schemas.get(name)
    if schema is None:
        for s in task.domain.schemas.values():
            if s.name.casefold() == name.casefold():
                schema = s
                break
        else:
            raise TaskSemanticError(f"undefined action {name!r}")
    if len(args) != len(schema.pars):
        raise TaskSemanticError(f"action {schema.name!r} takes {len(schema.pars)} args, got {len(args)}")
    resolved = []
    for k, (a, slot) in enumerate(zip(args, schema.pars), 1):
        o = task.resolve_object(a)
        if not task.classes.admits(slot, task.objects[o]):
            raise TaskSemanticError(f"action {schema.name!r}: {o!r} not admitted at parameter {k}")
        resolved.append(o)
    return _instantiate(task, schema, tuple(resolved))


def iter_variables(task, pattern) -> Iterable[Variable]:
    """All instantiations of ``pattern`` over the task's objects."""
    candidates = [task.objects_admitted(slot) for slot in pattern.args]
    for objs in itertools.product(*candidates):
        yield Variable(pattern.name, tuple(objs))
