"""Interacting bosons on a chain with a density-dependent non-Hermitian gauge field.

Exact diagonalization in the Fock basis, point-gap winding numbers, the
effective doublon model, eigenstate diagnostics and Floquet realisations.
"""

__version__ = "0.1.0"

from .fock import FockBasis, basis_size, enumerate_basis
from .model import Boundary, ModelParams, build_hamiltonian
from .spectral import ComplexSpectrum, eigendecompose, suggest_gap_point
from .topology import WindingResult, doublon_bloch_winding, winding_number
from .doublon import DoublonParams, derive_doublon_params, doublon_realspace, reality_criterion, tridiagonalize

__all__ = [
    "__version__",
    "FockBasis",
    "basis_size",
    "enumerate_basis",
    "Boundary",
    "ModelParams",
    "build_hamiltonian",
    "ComplexSpectrum",
    "eigendecompose",
    "suggest_gap_point",
    "WindingResult",
    "winding_number",
    "doublon_bloch_winding",
    "DoublonParams",
    "derive_doublon_params",
    "doublon_realspace",
    "reality_criterion",
    "tridiagonalize",
]
