"""
Planning and monitoring execution
=================================

Solve the repair task, replay the plan on a deterministic event timeline,
and watch an unexpected observation surface as a discrepancy.
"""

# %%
from fractions import Fraction
from importlib import resources

from ontoplan.planner import solve
from ontoplan.simulation import Simulator, classify_discrepancy, validate_plan
from ontoplan.task import Variable, format_plan, parse_task

ra = resources.files("ontoplan") / "data" / "ra"
task = parse_task((ra / "domain.task").read_text(), (ra / "problem.task").read_text())

plan = solve(task)
print(format_plan(plan))
print("valid:", validate_plan(task, plan)[0])

# %%
# Inject an observation
# ---------------------
# A parcel appears in the transit area halfway through the first repair.
sim = Simulator(task, plan)
sim.inject(Fraction(50), Variable("be", ("parcel_7", "area_transit")), True, "courier")
for step in sim.run():
    if step.discrepancy:
        print(f"\nt={float(step.event.time)}: discrepancy {[(str(v), val) for v, val in step.discrepancy]}")
        c = classify_discrepancy(step.discrepancy, task, {"parcel_7": "box"})
        print(f"classified as {c.kind}: {c.obj} of class {c.cls}")
        sim.acknowledge(step.discrepancy)

print(f"\nexecuted {len(sim.executed())} actions, violations: {len(sim.violations)}")
