"""Eigenstate diagnostics: cluster weight, four-point correlator, densities, skin metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import FockBasis

__all__ = [
    "CLUSTER_THRESHOLD",
    "EigenstateDiagnostics",
    "SkinMetrics",
    "BiorthogonalityError",
    "cluster_mask",
    "cluster_weight",
    "cluster_weights",
    "four_point_correlator",
    "density_profile",
    "center_of_mass",
    "participation_ratio",
    "edge_fraction",
    "skin_metrics",
    "diagnose",
    "write_diagnostics_csv",
]

CLUSTER_THRESHOLD = 0.5
BIORTHOGONAL_TOL = 1e-10


class BiorthogonalityError(ValueError):
    """Left and right eigenvectors are (nearly) orthogonal."""


def _is_contiguous(sites: np.ndarray, L: int, periodic: bool) -> bool:
    if sites.size <= 1:
        return True
    gaps = np.diff(sites)
    if not periodic:
        return bool(np.all(gaps == 1))
    gaps = np.append(gaps, sites[0] + L - sites[-1])
    # a ring of occupied sites is contiguous when at most one gap exceeds one bond
    return int(np.sum(gaps > 1)) <= 1


def cluster_mask(basis: FockBasis, periodic: bool) -> np.ndarray:
    """Basis states whose occupied sites form one unbroken run.

    For two bosons this is exactly "same site or adjacent sites", the
    doublon subspace |2_j>, |1_j 1_j+1>.  For more bosons the natural
    extension is used: no empty site separates two occupied ones.  Under
    periodic boundaries sites 0 and L-1 are adjacent.
    """
    occ = basis.occupations
    return np.array([_is_contiguous(np.nonzero(n)[0], basis.L, periodic) for n in occ], dtype=bool)


def cluster_weight(state, basis: FockBasis, periodic: bool = True) -> float:
    """Probability of ``state`` on the clustered subspace (state is normalised here)."""
    psi = np.asarray(state)
    p = np.abs(psi) ** 2
    total = p.sum()
    if total == 0:
        raise ValueError("zero vector")
    return float(np.clip(p[cluster_mask(basis, periodic)].sum() / total, 0.0, 1.0))


def cluster_weights(vectors: np.ndarray, basis: FockBasis, periodic: bool = True) -> np.ndarray:
    """Cluster weight of every column of ``vectors``."""
    p = np.abs(np.asarray(vectors)) ** 2
    w = p[cluster_mask(basis, periodic)].sum(axis=0) / p.sum(axis=0)
    return np.clip(w, 0.0, 1.0)


def four_point_correlator(state, basis: FockBasis, k: int) -> np.ndarray:
    """``<a+_j a+_k a_j a_k>`` for every j, normalised by ``<psi|psi>``.

    The operator is diagonal in the Fock basis: n_j n_k for j != k and
    n_k (n_k - 1) on site k.
    """
    if basis.N < 2:
        raise ValueError("the four-point correlator needs at least two particles")
    if not 0 <= k < basis.L:
        raise ValueError(f"site {k} outside the chain of length {basis.L}")
    psi = np.asarray(state)
    p = np.abs(psi) ** 2
    occ = basis.occupations.astype(float)
    values = occ * occ[:, [k]]
    values[:, k] = occ[:, k] * (occ[:, k] - 1)
    return (p @ values) / p.sum()


def density_profile(state, basis: FockBasis, mode: str = "right", left=None, return_imag: bool = False):
    """Site densities ``<n_j>``.

    ``mode="right"`` uses ``<R|n_j|R>/<R|R>`` and always sums to N.
    ``mode="biorthogonal"`` uses ``<L|n_j|R>/<L|R>``; the real part is
    returned, and with ``return_imag`` the imaginary part as well.
    """
    psi = np.asarray(state)
    occ = basis.occupations.astype(float)
    if mode == "right":
        p = np.abs(psi) ** 2
        rho = (p @ occ) / p.sum()
        return (rho, np.zeros_like(rho)) if return_imag else rho
    if mode != "biorthogonal":
        raise ValueError("mode must be 'right' or 'biorthogonal'")
    if left is None:
        raise ValueError("biorthogonal densities need the left eigenvector")
    phi = np.asarray(left)
    overlap = np.vdot(phi, psi)
    scale = np.linalg.norm(phi) * np.linalg.norm(psi)
    if abs(overlap) < BIORTHOGONAL_TOL * scale:
        raise BiorthogonalityError(f"|<L|R>| = {abs(overlap):.3e} is below {BIORTHOGONAL_TOL:g}; near an exceptional point")
    rho = ((phi.conj() * psi) @ occ) / overlap
    return (rho.real, rho.imag) if return_imag else rho.real


def center_of_mass(profile) -> float:
    rho = np.asarray(profile, dtype=float)
    return float(np.arange(len(rho)) @ rho / rho.sum())


def participation_ratio(profile) -> float:
    """``(sum rho)^2 / sum rho^2``: 1 for a single site, L for a flat profile."""
    rho = np.asarray(profile, dtype=float)
    return float(rho.sum() ** 2 / np.sum(rho**2))


def edge_fraction(profile) -> tuple[float, float]:
    """Share of the density in the quarter of the chain nearest each edge (left, right)."""
    rho = np.asarray(profile, dtype=float)
    q = max(1, len(rho) // 4)
    total = rho.sum()
    return float(rho[:q].sum() / total), float(rho[-q:].sum() / total)


@dataclass(frozen=True)
class EigenstateDiagnostics:
    energy: complex
    cluster_weight: float
    density_profile: np.ndarray
    correlator_row: np.ndarray | None
    participation_ratio: float
    center_of_mass: float


def diagnose(energy, state, basis: FockBasis, periodic: bool, k: int | None = None) -> EigenstateDiagnostics:
    rho = density_profile(state, basis)
    row = four_point_correlator(state, basis, k) if (k is not None and basis.N >= 2) else None
    return EigenstateDiagnostics(
        complex(energy),
        cluster_weight(state, basis, periodic),
        rho,
        row,
        participation_ratio(rho),
        center_of_mass(rho),
    )


@dataclass(frozen=True)
class SkinMetrics:
    centers_of_mass: np.ndarray
    participation_ratios: np.ndarray
    left_edge_fraction: float  # share of eigenstates with >= 50% density in the left quarter
    right_edge_fraction: float
    left_density_share: float = 0.0  # mean share of density in the left quarter
    right_density_share: float = 0.0

    @property
    def dominant_edge(self) -> str:
        return "left" if self.left_edge_fraction >= self.right_edge_fraction else "right"

    @property
    def edge_fraction(self) -> float:
        return max(self.left_edge_fraction, self.right_edge_fraction)


def skin_metrics(spectrum, basis: FockBasis, majority: float = 0.5) -> SkinMetrics:
    """Per-eigenstate centre of mass and participation ratio, plus edge-quarter fractions."""
    vecs = np.asarray(spectrum.right_eigenvectors)
    p = np.abs(vecs) ** 2
    rho = (basis.occupations.astype(float).T @ p) / p.sum(axis=0)  # shape (L, n_states)
    L = basis.L
    q = max(1, L // 4)
    total = rho.sum(axis=0)
    left = rho[:q].sum(axis=0) / total
    right = rho[-q:].sum(axis=0) / total
    com = np.arange(L) @ rho / total
    pr = total**2 / np.sum(rho**2, axis=0)
    return SkinMetrics(
        com,
        pr,
        float(np.mean(left >= majority)),
        float(np.mean(right >= majority)),
        float(left.mean()),
        float(right.mean()),
    )


def write_diagnostics_csv(path, eigenvalues, weights, centers, ratios) -> None:
    """Columns ``index,re,im,cluster_weight,center_of_mass,participation_ratio``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,re,im,cluster_weight,center_of_mass,participation_ratio\n")
        for i, (z, w, c, r) in enumerate(zip(eigenvalues, weights, centers, ratios)):
            fh.write(f"{i},{z.real:.17g},{z.imag:.17g},{w:.17g},{c:.17g},{r:.17g}\n")
