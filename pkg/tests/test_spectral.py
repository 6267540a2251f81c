import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra.numpy import arrays

from nhgauge.model import ModelParams, build_hamiltonian
from nhgauge.spectral import (
    NoComplexSectorError,
    SpectralError,
    complex_sector,
    eigendecompose,
    log_det,
    probe,
    suggest_gap_point,
    write_spectrum_csv,
)

from conftest import multiset_distance

FIG1 = ModelParams(t=1, gamma_l=1.5, gamma_r=0, L=20, N=2)

entries = st.floats(-2, 2, allow_nan=False)


@st.composite
def complex_matrices(draw, max_dim=12):
    n = draw(st.integers(1, max_dim))
    re = draw(arrays(float, (n, n), elements=entries))
    im = draw(arrays(float, (n, n), elements=entries))
    return re + 1j * im


@given(complex_matrices())
def test_trace_and_determinant(H):
    spec = eigendecompose(H, check=False)
    w = spec.eigenvalues
    scale = max(1.0, np.abs(np.trace(H)), np.abs(w).sum())
    assert abs(w.sum() - np.trace(H)) <= 1e-8 * scale
    logabs, arg = log_det(H)
    det = np.exp(logabs + 1j * arg)
    # eigenvalue products lose relative accuracy only through ill-conditioned eigenvalues
    assume(abs(det) > 1e-8 and np.linalg.cond(spec.right_eigenvectors) < 1e6)
    assert abs(np.prod(w) - det) <= 1e-6 * abs(det)


@given(complex_matrices())
def test_adjoint_spectrum_is_conjugate(H):
    a = eigendecompose(H, check=False).eigenvalues
    b = eigendecompose(H.conj().T, check=False).eigenvalues
    scale = max(1.0, np.abs(a).max())
    # defective matrices split eigenvalues like eps^(1/n); compare where well conditioned
    assume(np.linalg.cond(eigendecompose(H, check=False).right_eigenvectors) < 1e6)
    assert multiset_distance(a.conj(), b) < 1e-8 * scale


@given(complex_matrices())
def test_ordering_is_deterministic_and_vectors_are_unit(H):
    a = eigendecompose(H, check=False)
    b = eigendecompose(H.copy(), check=False)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.allclose(np.linalg.norm(a.right_eigenvectors, axis=0), 1)


def test_residuals_and_left_vectors():
    H = build_hamiltonian(ModelParams(gamma_l=1.5, L=8, N=2))
    spec = eigendecompose(H, left=True)
    assert spec.residuals.max() < 1e-10
    vl = spec.left_eigenvectors
    lhs = vl.conj().T @ H
    rhs = spec.eigenvalues[:, None] * vl.conj().T
    assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_sorted_by_real_then_imag():
    spec = eigendecompose(np.diag([1 + 1j, -1, 1 - 1j, 0.5j]))
    assert np.allclose(spec.eigenvalues, [-1, 0.5j, 1 - 1j, 1 + 1j])


def test_non_finite_matrix_rejected():
    with pytest.raises(SpectralError):
        eigendecompose(np.array([[np.nan]]))


def test_complex_sector_threshold_is_relative():
    w = np.array([10.0, -10.0, 1e-6j, 1.0j])
    assert complex_sector(w).tolist() == [False, False, False, True]


def test_single_particle_spectrum_has_no_complex_sector():
    H = build_hamiltonian(ModelParams(gamma_l=1.5, L=20, N=1))
    with pytest.raises(NoComplexSectorError):
        suggest_gap_point(eigendecompose(H))


def test_eigenvalue_at_probe_point_is_invalid():
    assert not probe(np.array([0.0]), 0.0).valid
    assert probe(np.array([0.0]), 1j).min_distance == pytest.approx(1.0)


def test_gap_point_at_figure_parameters():
    spec = eigendecompose(build_hamiltonian(FIG1))
    gp = suggest_gap_point(spec)
    ring = spec.eigenvalues[complex_sector(spec.eigenvalues)]
    # the raw centroid lands on the nearly-real scattering band
    centroid = probe(spec.eigenvalues, ring.mean())
    assert centroid.min_distance < 0.1
    # the chosen point is well inside the gap and no eigenvalue is closer than reported
    assert gp.valid and gp.min_distance > 0.9
    assert np.min(np.abs(spec.eigenvalues - gp.delta)) == pytest.approx(gp.min_distance)
    assert abs(gp.delta.real) < 0.05 and gp.delta.imag == pytest.approx(1.0394, abs=1e-3)


def test_centroid_is_kept_when_it_is_central():
    w = np.exp(2j * np.pi * np.arange(12) / 12 + 0.1j)
    gp = suggest_gap_point(w)
    assert abs(gp.delta) < 1e-12 and gp.min_distance == pytest.approx(1.0)


def test_spectrum_csv(tmp_path):
    spec = eigendecompose(np.diag([1.0, 2.0 + 0.5j]))
    path = tmp_path / "s.csv"
    write_spectrum_csv(path, spec, {"cluster_weight": np.array([0.25, 1.0])})
    lines = path.read_text().splitlines()
    assert lines[0] == "index,re,im,residual,cluster_weight"
    assert lines[2].startswith("1,2,0.5,0,1")
