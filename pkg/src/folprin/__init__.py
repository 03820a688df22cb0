"""folprin: exact foliated principalization over the rationals.

Truncated polynomial (jet) arithmetic with exact rational coefficients,
logarithmic foliations and their orders, Rees algebras with fractional
grades, the three-tier invariant with its maximal aligned center,
cobordant weighted blow-ups with controlled and strict transforms,
monomial foliation smoothing, and a principalization driver with a CLI.
"""

from .kernel import (
    ContextMismatch, IdealGens, Jet, ParseError, Q, RingContext,
    TruncationOverflow, parse_poly,
)
from .foliation import (
    BudgetExhausted, Derivation, Foliation, INFINITE, NotLogarithmic,
    check_involutive, f_infty, f_order_at, f_order_rees, is_f_invariant,
    lie_bracket, log_smooth_at, parse_derivation, sm_rank_at,
)
from .rees import (
    Center, InvValue, InvVector, ReesAlgebra, TOP, center_inv, coefficient_rees,
    compare_inv, fin, ideal_from_rees, is_admissible, rees_from_ideal,
)
from .rectify import (
    CertificateFailure, CoordinateChange, invert_jet_map, rectify_coordinate,
    split_foliation,
)
from .invariant import PointedInstance, check_transverse, find_maximal_contact, inv_at
from .blowup import (
    Cobordism, EtaleChart, build_cobordant, chart_transform_derivation,
    etale_chart, transform_derivation, transform_element, transform_foliation,
    transform_rees,
)
from .monres import (
    MonomialPresentation, SmRankFailure, monomial_resolve, monomial_to_foliation,
    resolve_report, smrank_center,
)
from .driver import (
    ChartPoint, Instance, RunConfig, TraceStep, cli_main, parse_instance,
    principalize, track_point,
)

__version__ = "0.1.0"
