"""Bounds on causal effects with partially observed adjustment variables."""

__version__ = "0.1.0"

from .bounds import (
    BackdoorInstance,
    BoundsResult,
    FrontdoorInstance,
    build_backdoor_program,
    build_frontdoor_program,
    compute_bounds,
    ensemble_bounds,
    independence_seed,
)
from .diagram import CausalDiagram, build_diagram, d_separated, satisfies_backdoor, satisfies_frontdoor
from .errors import *  # noqa: F401,F403
from .nlp import FractionalProgram, RatioTerm, Solution, SolverConfig, check_feasibility, solve
from .reduce import (
    EquivalentTuple,
    StateMapping,
    make_equivalent_tuple,
    project_observables,
    verify_equivalence,
)
from .tables import (
    Cpt,
    Interval,
    JointTable,
    adjust_backdoor,
    adjust_frontdoor,
    generate_cpts,
    joint_from_cpts,
    query_marginal,
    required_sample_size,
    tian_pearl_bounds,
)
