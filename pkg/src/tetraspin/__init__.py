"""Quantum R matrices for spin representations from a 3d R / tetrahedron-equation reduction."""

__version__ = "0.1.0"

from .scalars import (NoConvergence, OutOfRange, Params, PoleGuard, ResourceGuard, TailWarning,
                      TetraspinError, make_params, qpoch_finite, qpoch_infinite)
from .oscillator import (ExactRing, FloatRing, OscElement, boundary_bra, boundary_ket, fock_matrix,
                         generators, parse_word)
from .threed import ThreeDR, check_tetrahedron
from .reduction import BracketForm, ReducedRMatrix, build_reduced_r, check_yang_baxter, w_element
from .spinrep import AlgebraId, build_generators, solve_r_oracle

__all__ = [
    "__version__", "TetraspinError", "OutOfRange", "PoleGuard", "NoConvergence", "ResourceGuard",
    "TailWarning", "Params", "make_params", "qpoch_finite", "qpoch_infinite", "FloatRing",
    "ExactRing", "OscElement", "generators", "parse_word", "fock_matrix", "boundary_ket",
    "boundary_bra", "ThreeDR", "check_tetrahedron", "BracketForm", "ReducedRMatrix",
    "build_reduced_r", "check_yang_baxter", "w_element", "AlgebraId", "build_generators",
    "solve_r_oracle",
]
