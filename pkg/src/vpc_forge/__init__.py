"""V-polyhedral disjunctive cuts with certificate recovery and monoidal strengthening."""

from .certify import FarkasCertificate, certify_cut, recover_certificate, select_term_vertex, split_certificate, supporting_constant
from .collector import BasisCone, PointRayCollection, assemble_collection, collect, term_basis_cone
from .disjunction import Disjunction, DisjunctionTerm, build_partial_tree, disjunction_from_json
from .gmic import generate_gmics
from .harness import EvalReport, gap_closed, run_experiment, verify_cuts
from .linalg_lp import LpProblem, LpSolution, Status, solve_lp, tableau_row
from .model import Instance, brute_force_ip, load_instance, parse_instance, standardize
from .monoidal import solve_monoid, strengthen_cut, term_lower_bounds
from .prlp import Cut, build_prlp, harvest_cuts
from .tolerances import DEFAULT, Tolerances

__version__ = "0.1.0"

__all__ = [
    "FarkasCertificate", "certify_cut", "recover_certificate", "select_term_vertex", "split_certificate", "supporting_constant",
    "BasisCone", "PointRayCollection", "assemble_collection", "collect", "term_basis_cone",
    "Disjunction", "DisjunctionTerm", "build_partial_tree", "disjunction_from_json",
    "generate_gmics", "EvalReport", "gap_closed", "run_experiment", "verify_cuts",
    "LpProblem", "LpSolution", "Status", "solve_lp", "tableau_row",
    "Instance", "brute_force_ip", "load_instance", "parse_instance", "standardize",
    "solve_monoid", "strengthen_cut", "term_lower_bounds",
    "Cut", "build_prlp", "harvest_cuts", "DEFAULT", "Tolerances",
]
