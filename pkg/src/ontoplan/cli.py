"""Command-line entry point.

Exit codes: 0 success, 1 scenario/planning fault, 2 fixture error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .alignment import MATCH_CUTOFF, SIBLING_THRESHOLD, neighbourhood_align
from .ontology import AnnotationSource, RemoteTaskInfo, export_owl, local_ontology, parse_remote, remote_ontology
from .pipeline import FixtureError, PipelineFault, load_scenario, run_scenario
from .planner import ExternalPlannerError, Unsolvable, invoke_external, solve
from .similarity import tsm, vsm_similarity
from .simulation import Simulator, validate_plan
from .task import TaskError, format_plan, parse_domain, parse_plan, parse_task

EXIT_OK, EXIT_FAULT, EXIT_FIXTURE = 0, 1, 2


def default_annotations():
    return resources.files("ontoplan") / "data" / "ra" / "annotations.json"


def _read(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FixtureError(f"cannot read {path}: {exc}") from None


def _task(domain, problem):
    try:
        return parse_task(_read(domain), _read(problem))
    except TaskError as exc:
        raise FixtureError(str(exc)) from None


def _source(path):
    try:
        return AnnotationSource.from_file(path)
    except (OSError, ValueError, KeyError) as exc:
        raise FixtureError(f"cannot read annotations {path}: {exc}") from None


def _vocabulary(path):
    """Public vocabulary of a domain file or a remote task file."""
    text = _read(path)
    name = Path(path).stem
    try:
        dom = parse_domain(text)
        heads = [(s.name, s.pars) for s in dom.schemas.values()]
        return RemoteTaskInfo(name, dom.classes, list(dom.patterns.values()), heads)
    except TaskError:
        pass
    try:
        return parse_remote(text, name)
    except TaskError as exc:
        raise FixtureError(f"{path}: {exc}") from None


def cmd_run(args):
    scenario = load_scenario(args.scenario)
    trace = open(args.trace, "w", encoding="utf-8") if args.trace else None
    try:
        report = run_scenario(scenario, trace)
    finally:
        if trace:
            trace.close()
    data = report.to_dict()
    if args.report:
        Path(args.report).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    for o in report.outcomes:
        print(f"{o.object} ({o.cls}): {o.decision}" + (f" - {o.reason}" if o.reason else ""))
    print(f"executed {len(report.executed)} actions; goals achieved {report.goals_achieved}/{report.goals_total}")
    for v in report.violations:
        print(f"violation: {v}")
    return EXIT_OK


def cmd_plan(args):
    task = _task(args.domain, args.problem)
    if args.external:
        plan = invoke_external(args.external, task)
    else:
        plan = solve(task, deadline=args.deadline)
    text = format_plan(plan)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args):
    task = _task(args.domain, args.problem)
    try:
        plan = parse_plan(_read(args.plan))
    except TaskError as exc:
        raise FixtureError(str(exc)) from None
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            Simulator(task, plan, fh).run()
    valid, violations = validate_plan(task, plan)
    for v in violations:
        print(f"violation: {v}")
    print("plan valid" if valid else "plan invalid")
    return EXIT_OK if valid else EXIT_FAULT


def cmd_similarity(args):
    source = _source(args.annotations)
    a, b = _vocabulary(args.task_a), _vocabulary(args.task_b)
    if args.stage == "vsm":
        score = vsm_similarity(remote_ontology(a, source), remote_ontology(b, source))
        print(f"vsm {score:.4f}")
    else:
        rep = tsm(remote_ontology(a, source, extended=True), remote_ontology(b, source, extended=True), args.threshold)
        print(json.dumps(rep.to_dict(), indent=2))
    return EXIT_OK


def cmd_align(args):
    source = _source(args.annotations)
    task = _task(args.domain, args.problem) if args.problem else None
    local_info = _vocabulary(args.domain)
    local = local_ontology(task, source) if task else remote_ontology(local_info, source)
    remote = _vocabulary(args.remote)
    if args.cls not in remote:
        raise FixtureError(f"class {args.cls!r} not defined by {args.remote}")
    placement = neighbourhood_align(local, remote_ontology(remote, source), args.cls, args.match, args.sibling)
    print(json.dumps(placement.to_dict(), indent=2))
    return EXIT_FAULT if placement.rejected else EXIT_OK


def cmd_export_owl(args):
    info = _vocabulary(args.task)
    source = _source(args.annotations) if args.annotations else None
    onto = remote_ontology(info, source, extended=args.extended)
    text = export_owl(onto)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="ontoplan", description="Ontology-driven goal formulation for temporal planning.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario end to end")
    r.add_argument("scenario")
    r.add_argument("--report", help="write the JSON report here")
    r.add_argument("--trace", help="write a JSON-lines event trace here")
    r.set_defaults(func=cmd_run)

    pl = sub.add_parser("plan", help="solve a planning task")
    pl.add_argument("domain")
    pl.add_argument("problem")
    pl.add_argument("--external", metavar="CMD", help="external planner template with {domain} {problem} {plan_out}")
    pl.add_argument("--deadline", type=Fraction, help="latest allowed action end time")
    pl.add_argument("-o", "--output", help="write the plan here instead of stdout")
    pl.set_defaults(func=cmd_plan)

    s = sub.add_parser("simulate", help="validate a plan by simulation")
    s.add_argument("domain")
    s.add_argument("problem")
    s.add_argument("plan")
    s.add_argument("--trace", help="write a JSON-lines event trace here")
    s.set_defaults(func=cmd_simulate)

    si = sub.add_parser("similarity", help="compare the vocabularies of two tasks")
    si.add_argument("task_a")
    si.add_argument("task_b")
    si.add_argument("--stage", choices=("vsm", "tsm"), default="vsm")
    si.add_argument("--threshold", type=float, default=0.5)
    si.add_argument("--annotations", default=str(default_annotations()))
    si.set_defaults(func=cmd_similarity)

    a = sub.add_parser("align", help="place a remote class in the local hierarchy")
    a.add_argument("domain", help="local domain file")
    a.add_argument("remote", help="remote task file")
    a.add_argument("cls", metavar="class")
    a.add_argument("--problem", help="local problem file (optional)")
    a.add_argument("--match", type=float, default=MATCH_CUTOFF)
    a.add_argument("--sibling", type=float, default=SIBLING_THRESHOLD)
    a.add_argument("--annotations", default=str(default_annotations()))
    a.set_defaults(func=cmd_align)

    e = sub.add_parser("export-owl", help="write a task's ontology in OWL functional style")
    e.add_argument("task", help="domain or remote task file")
    e.add_argument("-o", "--output")
    e.add_argument("--extended", action="store_true", help="include hasParameterK properties")
    e.add_argument("--annotations", help="annotation snapshot to enrich with")
    e.set_defaults(func=cmd_export_owl)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except FixtureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FIXTURE
    except (Unsolvable, ExternalPlannerError, PipelineFault, TaskError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
