"""Ontology-driven goal formulation for temporal planning agents."""

from .alignment import Placement, integrate_class, integrate_object, neighbourhood_align
from .ontology import (
    AnnotationSource,
    Ontology,
    RemoteTaskInfo,
    build_class_ontology,
    enrich,
    export_owl,
    extend_ontology,
    load_remote_tasks,
    local_ontology,
    remote_ontology,
)
from .pipeline import Report, Scenario, load_scenario, run_scenario
from .planner import Unsolvable, invoke_external, solve, solve_from_state
from .similarity import cosine_tf, jaro_winkler, soft_tfidf, tsm, tsm_concept, vsm_similarity
from .simulation import (
    Simulator,
    Timeline,
    WorldState,
    classify_discrepancy,
    detect_discrepancy,
    encode_timeline,
    inject_exogenous,
    validate_plan,
)
from .task import (
    Plan,
    PlanningTask,
    Variable,
    format_plan,
    ground_actions,
    instantiate_variable,
    parse_plan,
    parse_task,
    serialize_task,
)

__version__ = "0.1.0"
