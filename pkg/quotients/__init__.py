from .errors import QuotientError, InputError, ArithmeticOverflowError, InvariantViolation
from .lattice_core import IntegerMatrix, TorusActionSpec, StabilizerGroup, smith_normal_form, stratum_stabilizer, global_stabilizer, make_effective
from .polyhedral import Polytope, ChamberComplex, Location, convex_hull, locate, git_chambers
from .moment_kn import AmbientPoint, KNSolveResult, moment_map, kn_minimize, semistable_exact, fibre_orbit_probe
from .families import FamilySpec, FamilyKind, ChowQuotientPair, GitQuotient, ambient_spec, chow_quotient_map, chow_boundary, boundary_from_stabilizers, git_quotient, support_from_moment
from .log_canonical import PlaneDivisor, OnePS, degenerate, is_lc_concurrent, lc_feasible, glct_bound, glct_bound_via_search
from .ke_certifier import KECertificate, Verdict, certify
