"""Empirical upper-tail statistics of central L-values in quadratic twist families.

The package is organized bottom-up: curve arithmetic (ec), twist family
enumeration (family), central values (lcentral), the barrier segment
schedule (schedule), prime-sum random walks (walk), sparse Dirichlet
polynomials and mollifiers (dpoly), moment estimates (moments), and the
quadratic form dominance tests (quadform).  reports and cli sit on top.
"""

from .dpoly import ONE, DirichletPoly, evaluate, multiply, well_factorable
from .ec import EllipticCurve, HeckeTable, curve_by_label, hecke_table
from .family import (
    FamilyConstraints,
    TwistFamily,
    enumerate_family,
    family_by_address,
    is_fundamental,
    root_number,
    union_families,
)
from .lcentral import (
    VALUE_FLOOR,
    CentralValueCache,
    cached_family_values,
    central_value,
    family_central_values,
    functional_equation_check,
)
from .moments import (
    beta_factors,
    first_twisted_moment,
    mollified_square_bound,
    mollified_square_empirical,
    walk_moment_bound,
    walk_moment_empirical,
)
from .quadform import (
    check_dominance,
    local_twist_form,
    rank_structured_eval,
    sym_form,
    tensor_dominance_test,
)
from .reports import run_suites, tail_report
from .schedule import WalkSchedule, build_schedule, desk_overrides, prime_interval
from .walk import (
    WalkTrace,
    empirical_decomposition,
    family_flags,
    family_partials,
    gaussian_tail,
    trace,
)

__all__ = [
    "ONE",
    "CentralValueCache",
    "DirichletPoly",
    "EllipticCurve",
    "FamilyConstraints",
    "HeckeTable",
    "TwistFamily",
    "VALUE_FLOOR",
    "WalkSchedule",
    "WalkTrace",
    "beta_factors",
    "build_schedule",
    "cached_family_values",
    "central_value",
    "check_dominance",
    "curve_by_label",
    "desk_overrides",
    "empirical_decomposition",
    "enumerate_family",
    "evaluate",
    "family_by_address",
    "family_central_values",
    "family_flags",
    "family_partials",
    "first_twisted_moment",
    "functional_equation_check",
    "gaussian_tail",
    "hecke_table",
    "is_fundamental",
    "local_twist_form",
    "mollified_square_bound",
    "mollified_square_empirical",
    "multiply",
    "prime_interval",
    "rank_structured_eval",
    "root_number",
    "run_suites",
    "sym_form",
    "tail_report",
    "tensor_dominance_test",
    "trace",
    "union_families",
    "walk_moment_bound",
    "walk_moment_empirical",
    "well_factorable",
]

__version__ = "0.1.0"
