"""Dense many-body matrices for the chain with a density-dependent gauge field.

The Hamiltonian is

    H = sum_j a+_{j+1} [-t + i g_R (n_{j+1} - n_j)] a_j
            + a+_j [-t + i g_L (n_j - n_{j+1})] a_{j+1}
        + U sum_j n_j (n_j - 1)

Each hopping string is applied right to left, so the density difference is
read off the intermediate state after the annihilator has acted.  For two
bosons this gives the doublon couplings sqrt(2)(-t -/+ i g) exactly.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .fock import FockBasis, enumerate_basis

__all__ = [
    "Boundary",
    "ModelParams",
    "ORDERINGS",
    "build_hamiltonian",
    "density_hopping_operator",
    "hermiticity_defect",
    "flux_derivative",
    "hopping_operator",
    "interaction_operator",
    "density_operator",
    "translation_operator",
    "dump_matrix",
]

# "normal": densities on the intermediate state (the literal operator string).
# "pre"/"post": densities on the source/target state.  The mean of "pre" and
# "post" coincides with "normal" because the coefficient is linear in n.
ORDERINGS = ("normal", "pre", "post")


@dataclass(frozen=True)
class Boundary:
    periodic: bool = True
    flux: float = 0.0

    @classmethod
    def open(cls) -> "Boundary":
        return cls(periodic=False)

    @classmethod
    def closed(cls, flux: float = 0.0) -> "Boundary":
        return cls(periodic=True, flux=flux)

    @property
    def reduced_flux(self) -> float:
        return self.flux % (2 * np.pi)

    def __str__(self) -> str:
        return f"periodic(phi={self.flux:g})" if self.periodic else "open"


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the chain.  ``gamma_l``/``gamma_r`` and ``U`` may be complex."""

    t: float = 1.0
    gamma_l: complex = 0.0
    gamma_r: complex = 0.0
    L: int = 20
    N: int = 2
    boundary: Boundary = field(default_factory=Boundary)
    U: complex = 0.0
    ordering: str = "normal"

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be positive")
        if self.N < 0:
            raise ValueError("N must be non-negative")
        if self.boundary.periodic and self.L < 3:
            raise ValueError("periodic chains need L >= 3")
        if self.ordering not in ORDERINGS:
            raise ValueError(f"ordering must be one of {ORDERINGS}")

    @property
    def non_hermitian(self) -> bool:
        return (
            not np.isclose(self.gamma_r, np.conj(self.gamma_l))
            or np.imag(self.U) != 0
            or np.imag(self.t) != 0
        )

    def with_flux(self, phi: float) -> "ModelParams":
        return replace(self, boundary=Boundary(periodic=True, flux=phi))

    def with_boundary(self, boundary: Boundary) -> "ModelParams":
        return replace(self, boundary=boundary)

    def basis(self) -> FockBasis:
        return _basis(self.L, self.N)


@lru_cache(maxsize=32)
def _basis(L: int, N: int) -> FockBasis:
    return enumerate_basis(L, N)


def _bonds(L: int, periodic: bool) -> list[tuple[int, int]]:
    bonds = [(j, j + 1) for j in range(L - 1)]
    if periodic and L >= 3:
        bonds.append((L - 1, 0))
    return bonds


@dataclass(frozen=True)
class _Hop:
    bond: int
    rightward: bool
    source: np.ndarray
    target: np.ndarray
    amplitude: np.ndarray
    n_src: np.ndarray
    n_dst: np.ndarray


@lru_cache(maxsize=32)
def _hops(basis: FockBasis, periodic: bool) -> tuple[_Hop, ...]:
    occ = basis.occupations
    out = []
    for b, (j, k) in enumerate(_bonds(basis.L, periodic)):
        for src, dst, rightward in ((j, k, True), (k, j, False)):
            rows = np.nonzero(occ[:, src] > 0)[0]
            moved = occ[rows].copy()
            n_src = moved[:, src].copy()
            n_dst = moved[:, dst].copy()
            moved[:, src] -= 1
            moved[:, dst] += 1
            out.append(
                _Hop(
                    bond=b,
                    rightward=rightward,
                    source=rows,
                    target=basis.rank_many(moved),
                    amplitude=np.sqrt(n_src * (n_dst + 1.0)),
                    n_src=n_src,
                    n_dst=n_dst,
                )
            )
    return tuple(out)


def _density_difference(hop: _Hop, ordering: str) -> np.ndarray:
    """``n_dst - n_src`` on the state selected by ``ordering``."""
    if ordering == "normal":
        return hop.n_dst - (hop.n_src - 1)
    if ordering == "pre":
        return hop.n_dst - hop.n_src
    return (hop.n_dst + 1) - (hop.n_src - 1)


def _boundary_phase(L: int, hop: _Hop, boundary: Boundary) -> complex:
    if boundary.periodic and hop.bond == L - 1 and boundary.flux != 0.0:
        return cmath.exp(-1j * boundary.flux) if hop.rightward else cmath.exp(1j * boundary.flux)
    return 1.0


def density_hopping_operator(
    basis: FockBasis,
    boundary: Boundary,
    right=0.0,
    left=0.0,
    right_density=0.0,
    left_density=0.0,
    ordering: str = "normal",
) -> np.ndarray:
    """``sum_j a+_{j+1}[r + r' (n_{j+1} - n_j)] a_j + a+_j[l + l' (n_j - n_{j+1})] a_{j+1}``.

    Scalars or per-bond arrays are accepted for every coefficient.
    """
    nb = len(_bonds(basis.L, boundary.periodic))
    coeffs = [np.broadcast_to(np.asarray(c, dtype=complex), (nb,)) for c in (right, left, right_density, left_density)]
    r, l, rd, ld = coeffs
    dim = len(basis)
    H = np.zeros((dim, dim), dtype=complex)
    for hop in _hops(basis, boundary.periodic):
        b = hop.bond
        const, dens = (r[b], rd[b]) if hop.rightward else (l[b], ld[b])
        coeff = const + dens * _density_difference(hop, ordering)
        coeff = coeff * _boundary_phase(basis.L, hop, boundary)
        np.add.at(H, (hop.target, hop.source), hop.amplitude * coeff)
    return H


def build_hamiltonian(params: ModelParams, basis: FockBasis | None = None) -> np.ndarray:
    """Dense matrix of the chain Hamiltonian in the canonical Fock basis."""
    if basis is None:
        basis = params.basis()
    elif (basis.L, basis.N) != (params.L, params.N):
        raise ValueError("basis does not match the model size")
    H = density_hopping_operator(
        basis,
        params.boundary,
        right=-params.t,
        left=-params.t,
        right_density=1j * params.gamma_r,
        left_density=1j * params.gamma_l,
        ordering=params.ordering,
    )
    if params.U != 0:
        H[np.diag_indices(len(basis))] += params.U * interaction_diagonal(basis)
    return H


def flux_derivative(params: ModelParams, basis: FockBasis | None = None) -> np.ndarray:
    """``dH/dphi`` at the params' flux; only the boundary bond contributes."""
    if not params.boundary.periodic:
        raise ValueError("flux derivative needs a periodic chain")
    if basis is None:
        basis = params.basis()
    dim = len(basis)
    D = np.zeros((dim, dim), dtype=complex)
    phi = params.boundary.flux
    for hop in _hops(basis, True):
        if hop.bond != params.L - 1:
            continue
        gamma = params.gamma_r if hop.rightward else params.gamma_l
        coeff = -params.t + 1j * gamma * _density_difference(hop, params.ordering)
        dphase = -1j * cmath.exp(-1j * phi) if hop.rightward else 1j * cmath.exp(1j * phi)
        np.add.at(D, (hop.target, hop.source), hop.amplitude * coeff * dphase)
    return D


def hermiticity_defect(H: np.ndarray) -> float:
    """Max-norm of ``H - H^dagger``."""
    H = np.asarray(H)
    return float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0


def hopping_operator(basis: FockBasis, right, left, periodic: bool, flux: float = 0.0) -> np.ndarray:
    """``sum_b right_b a+_{b+1} a_b + left_b a+_b a_{b+1}`` with per-bond coefficients.

    Bond ``b`` joins sites ``b`` and ``b+1``; the last bond of a periodic
    chain joins ``L-1`` and ``0``.
    """
    return density_hopping_operator(basis, Boundary(periodic=periodic, flux=flux), right=right, left=left)


def interaction_diagonal(basis: FockBasis) -> np.ndarray:
    occ = basis.occupations
    return np.sum(occ * (occ - 1), axis=1).astype(float)


def interaction_operator(basis: FockBasis) -> np.ndarray:
    """``sum_j n_j (n_j - 1)``."""
    return np.diag(interaction_diagonal(basis)).astype(complex)


def density_operator(basis: FockBasis, weights) -> np.ndarray:
    """``sum_j w_j n_j`` for site weights ``w``."""
    w = np.asarray(weights, dtype=complex)
    return np.diag(basis.occupations @ w)


def translation_operator(basis: FockBasis, shift: int = 1) -> np.ndarray:
    """Permutation matrix moving every particle ``shift`` sites to the right."""
    rolled = np.roll(basis.occupations, shift, axis=1)
    T = np.zeros((len(basis), len(basis)))
    T[basis.rank_many(rolled), np.arange(len(basis))] = 1.0
    return T


def dump_matrix(H: np.ndarray, path, tol: float = 0.0) -> int:
    """Write nonzero entries as ``row,col,re,im`` lines; returns the entry count."""
    rows, cols = np.nonzero(np.abs(H) > tol)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("row,col,re,im\n")
        for r, c in zip(rows, cols):
            z = H[r, c]
            fh.write(f"{r},{c},{z.real:.17g},{z.imag:.17g}\n")
    return len(rows)
