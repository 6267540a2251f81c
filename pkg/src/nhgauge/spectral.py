"""Dense non-Hermitian eigendecomposition and point-gap helpers."""

from __future__ import annotations

from dataclasses import dataclass

import warnings

import numpy as np
import scipy.linalg as sla
from scipy.spatial import Delaunay, cKDTree

__all__ = [
    "ComplexSpectrum",
    "PointGapProbe",
    "SpectralError",
    "NoComplexSectorError",
    "eigendecompose",
    "complex_sector",
    "suggest_gap_point",
    "probe",
    "log_det",
    "write_spectrum_csv",
]

COMPLEX_THRESHOLD = 1e-6
RESIDUAL_TOL = 1e-8


class SpectralError(RuntimeError):
    """Eigensolver failure or residual check violation."""


class NoComplexSectorError(ValueError):
    pass


@dataclass(frozen=True)
class ComplexSpectrum:
    eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray
    residuals: np.ndarray
    left_eigenvectors: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues))) if len(self) else 0.0


@dataclass(frozen=True)
class PointGapProbe:
    delta: complex
    min_distance: float

    @property
    def valid(self) -> bool:
        return self.min_distance > 0


def _order(w: np.ndarray) -> np.ndarray:
    # rounding keeps the order stable under last-bit noise in the solver
    return np.lexsort((np.round(w.imag, 10), np.round(w.real, 10)))


def eigendecompose(H, left: bool = False, check: bool = True) -> ComplexSpectrum:
    """Full spectrum with unit-norm right eigenvectors, sorted by (Re, Im).

    With ``left=True`` the matching left eigenvectors are returned as columns
    ``u_i`` satisfying ``u_i^dagger H = lambda_i u_i^dagger``.
    """
    H = np.asarray(H, dtype=complex)
    if not np.all(np.isfinite(H)):
        raise SpectralError("matrix has non-finite entries")
    try:
        if left:
            w, vl, vr = sla.eig(H, left=True, right=True)
        else:
            w, vr = sla.eig(H)
            vl = None
    except np.linalg.LinAlgError as exc:
        raise SpectralError(
            f"eigensolver failed on {H.shape} matrix with norm {np.linalg.norm(H):.3e}: {exc}"
        ) from exc
    order = _order(w)
    w, vr = w[order], vr[:, order]
    vr = vr / np.linalg.norm(vr, axis=0)
    if vl is not None:
        vl = vl[:, order]
        vl = vl / np.linalg.norm(vl, axis=0)
    residuals = np.linalg.norm(H @ vr - vr * w, axis=0)
    if check and len(w):
        scale = max(np.linalg.norm(H, 2), 1.0)
        worst = float(residuals.max())
        if worst > RESIDUAL_TOL * scale:
            raise SpectralError(f"residual {worst:.3e} exceeds {RESIDUAL_TOL:g} * |H| = {RESIDUAL_TOL * scale:.3e}")
    return ComplexSpectrum(w, vr, residuals, vl)


def complex_sector(eigenvalues, threshold: float = COMPLEX_THRESHOLD) -> np.ndarray:
    """Boolean mask of eigenvalues with ``|Im| > threshold * spectral radius``."""
    w = np.asarray(eigenvalues)
    if w.size == 0:
        return np.zeros(0, dtype=bool)
    return np.abs(w.imag) > threshold * np.max(np.abs(w))


def probe(eigenvalues, delta: complex) -> PointGapProbe:
    w = np.asarray(eigenvalues)
    return PointGapProbe(complex(delta), float(np.min(np.abs(w - delta))) if w.size else np.inf)


def suggest_gap_point(spectrum, threshold: float = COMPLEX_THRESHOLD, resolution: int = 201) -> PointGapProbe:
    """Reference point inside the point gap of the complex sector.

    Starts from the centroid of the complex-sector eigenvalues.  If the
    centroid sits on the spectrum (as it does when a real continuum threads
    the ring), the point farthest from every eigenvalue inside the convex
    hull of the complex sector is returned instead; ties go to larger Im.
    """
    w = np.asarray(getattr(spectrum, "eigenvalues", spectrum))
    if w.size == 0:
        raise ValueError("empty spectrum")
    mask = complex_sector(w, threshold)
    if not mask.any():
        raise NoComplexSectorError("all eigenvalues are real within the classification threshold")
    sector = w[mask]
    centroid = probe(w, sector.mean())
    pts = np.column_stack([sector.real, sector.imag])
    try:
        hull = Delaunay(pts)
    except Exception:
        return centroid
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    xs = np.linspace(lo[0], hi[0], resolution)
    ys = np.linspace(lo[1], hi[1], resolution)
    X, Y = np.meshgrid(xs, ys)
    grid = np.column_stack([X.ravel(), Y.ravel()])
    inside = hull.find_simplex(grid) >= 0
    if not inside.any():
        return centroid
    grid = grid[inside]
    dist, _ = cKDTree(np.column_stack([w.real, w.imag])).query(grid)
    if centroid.min_distance >= 0.5 * dist.max():
        return centroid
    best = np.lexsort((-grid[:, 1], -np.round(dist, 12)))[0]
    return probe(w, complex(grid[best, 0], grid[best, 1]))


def log_det(A) -> tuple[float, float]:
    """``(log|det A|, arg det A)`` from an LU factorisation."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(np.asarray(A, dtype=complex), check_finite=False)
    d = np.diag(lu)
    if np.any(d == 0):
        return -np.inf, 0.0
    sign = -1.0 if np.count_nonzero(piv != np.arange(len(piv))) % 2 else 1.0
    phase = np.angle(sign) + np.sum(np.angle(d))
    return float(np.sum(np.log(np.abs(d)))), float(np.angle(np.exp(1j * phase)))


def write_spectrum_csv(path, spectrum: ComplexSpectrum, extra: dict | None = None) -> None:
    """Columns ``index,re,im,residual`` plus any per-eigenvalue ``extra`` columns."""
    extra = extra or {}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(["index", "re", "im", "residual", *extra]) + "\n")
        for i, z in enumerate(spectrum.eigenvalues):
            cols = [str(i), f"{z.real:.17g}", f"{z.imag:.17g}", f"{spectrum.residuals[i]:.17g}"]
            cols += [f"{float(v[i]):.17g}" for v in extra.values()]
            fh.write(",".join(cols) + "\n")
