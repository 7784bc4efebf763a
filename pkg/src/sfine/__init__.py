"""Fine-structure functional calculi on the S-spectrum in the Clifford algebra R_5."""

__version__ = "0.1.0"

from .calculus import CalculusKind, apply, apply_adaptive, riesz_projector
from .clifford import Multivector, Paravector, UnitImaginary, mul, mv_inverse
from .contour import Contour, annulus
from .operators import CliffordOperator, ParavectorOperator, make_commuting_operator, s_spectrum
from .resolvents import IdentityId, ResolventKind, check_identity, resolvent, sweep
from .slice import StemPolynomial, axial_parts

__all__ = [
    "CalculusKind",
    "CliffordOperator",
    "Contour",
    "IdentityId",
    "Multivector",
    "Paravector",
    "ParavectorOperator",
    "ResolventKind",
    "StemPolynomial",
    "UnitImaginary",
    "annulus",
    "apply",
    "apply_adaptive",
    "axial_parts",
    "check_identity",
    "make_commuting_operator",
    "mul",
    "mv_inverse",
    "resolvent",
    "riesz_projector",
    "s_spectrum",
    "sweep",
]
