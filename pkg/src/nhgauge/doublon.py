"""Effective two-boson doublon model.

Sublattice A holds the on-site pairs ``|2_j>``, sublattice B the nearest
neighbour pairs ``|1_j 1_{j+1}>``.  In the restricted basis the chain
Hamiltonian only switches A and B:

    H = sum_j J1 A+_j B_j + J2 A+_{j+1} B_j + J3 B+_j A_j + J4 B+_j A_{j+1}

with J1 = sqrt2(-t + i g_L), J2 = sqrt2(-t + i g_R), J3 = sqrt2(-t - i g_R),
J4 = sqrt2(-t - i g_L).
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import directed_hausdorff

from .model import Boundary, ModelParams, build_hamiltonian
from .observables import cluster_weights
from .spectral import eigendecompose

__all__ = [
    "DoublonParams",
    "TridiagonalReport",
    "derive_doublon_params",
    "doublon_realspace",
    "doublon_bloch",
    "bloch_energies",
    "sublattice_parity",
    "tridiagonalize",
    "reality_criterion",
    "phase_diagram",
    "hausdorff_distance",
    "doublon_agreement",
]

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class DoublonParams:
    J1: complex
    J2: complex
    J3: complex
    J4: complex
    L: int = 20

    @property
    def hoppings(self) -> tuple[complex, complex, complex, complex]:
        return self.J1, self.J2, self.J3, self.J4


def derive_doublon_params(params: ModelParams) -> DoublonParams:
    t, gl, gr = params.t, params.gamma_l, params.gamma_r
    return DoublonParams(
        J1=complex(SQRT2 * (-t + 1j * gl)),
        J2=complex(SQRT2 * (-t + 1j * gr)),
        J3=complex(SQRT2 * (-t - 1j * gr)),
        J4=complex(SQRT2 * (-t - 1j * gl)),
        L=params.L,
    )


def doublon_realspace(dparams: DoublonParams, boundary: Boundary = Boundary()) -> np.ndarray:
    """Real-space doublon matrix.

    Periodic chains have 2L sites ordered A_0, B_0, A_1, B_1, ...; the flux
    of ``boundary`` enters twice on the closing bond since both bosons cross
    it.  Open chains start and end on A (B_{L-1} does not exist), giving
    2L - 1 sites.
    """
    L = dparams.L
    if L < 2:
        raise ValueError("doublon chain needs L >= 2")
    J1, J2, J3, J4 = dparams.hoppings
    dim = 2 * L if boundary.periodic else 2 * L - 1
    H = np.zeros((dim, dim), dtype=complex)
    for j in range(L):
        a, b = 2 * j, 2 * j + 1
        if b >= dim:
            break
        H[a, b] += J1
        H[b, a] += J3
        nxt = 2 * (j + 1)
        phase = 1.0
        if nxt >= dim:
            if not boundary.periodic:
                continue
            nxt = 0
            phase = cmath.exp(-2j * boundary.flux)
        H[nxt, b] += J2 * phase
        H[b, nxt] += J4 / phase
    return H


def doublon_bloch(dparams: DoublonParams, k: float) -> np.ndarray:
    """2x2 Bloch matrix [[0, J1 + J2 e^{-ik}], [J3 + J4 e^{ik}, 0]]."""
    J1, J2, J3, J4 = dparams.hoppings
    return np.array(
        [[0.0, J1 + J2 * np.exp(-1j * k)], [J3 + J4 * np.exp(1j * k), 0.0]],
        dtype=complex,
    )


def bloch_energies(dparams: DoublonParams, k) -> np.ndarray:
    """``+-sqrt(H+(k) H-(k))`` stacked as shape ``(2, len(k))``."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    J1, J2, J3, J4 = dparams.hoppings
    e = np.sqrt((J1 + J2 * np.exp(-1j * k)) * (J3 + J4 * np.exp(1j * k)))
    return np.vstack([e, -e])


def sublattice_parity(dim: int) -> np.ndarray:
    """diag(+1, -1, +1, ...) -- +1 on A sites, -1 on B sites."""
    return np.diag(np.where(np.arange(dim) % 2 == 0, 1.0, -1.0))


@dataclass(frozen=True)
class TridiagonalReport:
    matrix: np.ndarray
    gauge: np.ndarray  # diagonal of the similarity transform S, with S H S^-1 = matrix
    condition_number: float
    real_entries: bool
    branch_ambiguous: bool
    spectral_mismatch: float


def _radicand_flags(z: complex, tol: float = 1e-12) -> tuple[bool, bool]:
    scale = max(abs(z), 1.0)
    real = abs(z.imag) <= tol * scale
    return real and z.real >= 0, real and z.real < 0


def tridiagonalize(dparams: DoublonParams, check: bool = True) -> TridiagonalReport:
    """Similarity transform of the open doublon chain to symmetric tridiagonal form.

    Off-diagonals alternate sqrt(J1 J3), sqrt(J2 J4) on the principal branch.
    The diagonal gauge is built explicitly; its condition number grows
    exponentially with L whenever |J1/J3| or |J4/J2| differs from one.
    """
    H = doublon_realspace(dparams, Boundary.open())
    dim = len(H)
    upper = np.diag(H, 1)
    lower = np.diag(H, -1)
    if np.any(upper == 0) or np.any(lower == 0):
        raise ValueError("a vanishing hopping makes the chain reducible; no similarity to symmetric form")
    offdiag = np.sqrt(upper * lower)
    # S = diag(g) with g_{i+1} = g_i u_i / sqrt(u_i l_i) sends both neighbours to sqrt(u_i l_i)
    log_gauge = np.zeros(dim, dtype=complex)
    log_gauge[1:] = np.cumsum(np.log(upper) - np.log(offdiag))
    gauge = np.exp(log_gauge)
    T = np.diag(offdiag, 1) + np.diag(offdiag, -1)
    cond = float(np.exp(log_gauge.real.max() - log_gauge.real.min()))
    J1, J2, J3, J4 = dparams.hoppings
    ok13, neg13 = _radicand_flags(J1 * J3)
    ok24, neg24 = _radicand_flags(J2 * J4)
    mismatch = float("nan")
    if check:
        cost = np.abs(np.linalg.eigvals(T)[:, None] - np.linalg.eigvals(H)[None, :])
        r, c = linear_sum_assignment(cost)
        mismatch = float(cost[r, c].max())
    return TridiagonalReport(T, gauge, cond, ok13 and ok24, neg13 or neg24, mismatch)


def reality_criterion(dparams: DoublonParams, tol: float = 1e-12) -> bool:
    """True iff J1 J3 is real and positive.

    Only meaningful for real gamma_L, gamma_R, where J2 J4 = conj(J1 J3);
    complex couplings are rejected.
    """
    J1, J2, J3, J4 = dparams.hoppings
    if abs(J2 * J4 - np.conj(J1 * J3)) > tol * max(abs(J1 * J3), 1.0):
        raise ValueError("criterion only established for real gauge couplings (J2 J4 = conj(J1 J3))")
    z = J1 * J3
    return bool(abs(z.imag) <= tol * max(abs(z), 1.0) and z.real > 0)


def phase_diagram(t: float, gammas_l, gammas_r, L: int = 20) -> list[tuple[float, float, bool, float]]:
    """Rows ``(gamma_L, gamma_R, criterion, max|Im E|)`` for the open doublon chain."""
    rows = []
    for gl in gammas_l:
        for gr in gammas_r:
            dp = derive_doublon_params(ModelParams(t=t, gamma_l=gl, gamma_r=gr, L=L, N=2))
            ev = np.linalg.eigvals(doublon_realspace(dp, Boundary.open()))
            rows.append((float(gl), float(gr), reality_criterion(dp), float(np.max(np.abs(ev.imag)))))
    return rows


def hausdorff_distance(a, b) -> float:
    """Symmetric Hausdorff distance between two sets of complex numbers."""
    pa = np.column_stack([np.real(a), np.imag(a)])
    pb = np.column_stack([np.real(b), np.imag(b)])
    return float(max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0]))


def doublon_agreement(params: ModelParams, threshold: float = 0.5) -> float:
    """Hausdorff distance between the doublon spectrum and the clustered full-model eigenvalues.

    Both are taken with the boundary of ``params``; a state counts as
    clustered when its cluster weight reaches ``threshold``.
    """
    if params.N != 2:
        raise ValueError("the doublon model describes two bosons")
    spec = eigendecompose(build_hamiltonian(params))
    w = cluster_weights(spec.right_eigenvectors, params.basis(), params.boundary.periodic)
    full = spec.eigenvalues[w >= threshold]
    doublon = np.linalg.eigvals(doublon_realspace(derive_doublon_params(params), params.boundary))
    return hausdorff_distance(doublon, full)
