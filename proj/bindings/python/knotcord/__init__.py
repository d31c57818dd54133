"""Knot concordance toolkit.

PD-code diagram manipulation, an exact scanning homology engine for the
s-invariant, twisted-double threshold searches, and the command-line
interface — all callable in process.  Diagrams are PD strings
(``PD[X[1,4,2,5],...]``); knots are expression strings (``T(2,3)``,
``knot:fig8``, ``m(...)``, ``a#b``).
"""

from ._core import (
    ENGINE_VERSION,
    ArcMultiplicityError,
    InequalityViolation,
    MalformedSyntax,
    MissingLeafError,
    MonotonicityViolation,
    MultiComponentError,
    NonCoprimeError,
    ResourceBudgetExceeded,
    UnknownTauError,
    canonical_expr,
    crossing_count,
    expr_pd,
    jones_polynomial,
    kh_table,
    linear_guess_residual,
    negative_double_profile,
    nu_s,
    pd_canonical,
    pd_connected_sum,
    pd_mirror,
    pd_reverse,
    run_cli,
    s_invariant,
    seifert_circle_count,
    stacked_gap,
    step_profile,
    t_nu_search,
    t_tau,
    tau,
    torus_knot,
    twisted_double,
    verify_sandwich,
    writhe,
)

__version__ = ENGINE_VERSION

__all__ = [
    "ENGINE_VERSION",
    "ArcMultiplicityError",
    "InequalityViolation",
    "MalformedSyntax",
    "MissingLeafError",
    "MonotonicityViolation",
    "MultiComponentError",
    "NonCoprimeError",
    "ResourceBudgetExceeded",
    "UnknownTauError",
    "canonical_expr",
    "crossing_count",
    "expr_pd",
    "jones_polynomial",
    "kh_table",
    "linear_guess_residual",
    "negative_double_profile",
    "nu_s",
    "pd_canonical",
    "pd_connected_sum",
    "pd_mirror",
    "pd_reverse",
    "run_cli",
    "s_invariant",
    "seifert_circle_count",
    "stacked_gap",
    "step_profile",
    "t_nu_search",
    "t_tau",
    "tau",
    "torus_knot",
    "twisted_double",
    "verify_sandwich",
    "writhe",
]
