import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from nhgauge.floquet import (
    GD_COEFF,
    BranchFoldingError,
    FloquetError,
    ModulatedInteraction,
    Propagator,
    SquareWaveGD,
    ThreeStepHatanoNelson,
    TwoFrequencySinusoid,
    averaged_floquet_generator,
    compare_quasienergies,
    convergence_sweep,
    effective_hamiltonian,
    effective_params,
    hatano_nelson_asymmetry,
    instantaneous_hamiltonian,
    kick_operator,
    propagate,
    propagate_period,
    quasienergies,
    write_convergence_csv,
)
from nhgauge.fock import enumerate_basis
from nhgauge.model import (
    Boundary,
    ModelParams,
    build_hamiltonian,
    density_hopping_operator,
    density_operator,
    hopping_operator,
    interaction_operator,
)
from nhgauge.spectral import eigendecompose, suggest_gap_point
from nhgauge.topology import winding_number

B6 = enumerate_basis(6, 1)
B5 = enumerate_basis(5, 2)


def ratios(rows):
    return [rows[i][1] / rows[i + 1][1] for i in range(len(rows) - 1)]


# -- propagators -------------------------------------------------------------


def test_piecewise_propagator_is_product_of_step_exponentials():
    p = ThreeStepHatanoNelson(Omega=7.0, U=0.3)
    tau = p.period / 3
    ref = np.eye(len(B6), dtype=complex)
    for _, H in p.pieces(B6):
        ref = sla.expm(-1j * H * tau) @ ref
    U = propagate_period(p, B6).U_T
    assert np.max(np.abs(U - ref)) < 1e-12


def test_piecewise_propagator_from_mid_period():
    p = SquareWaveGD(omega=5.0, delta3=0.3j)
    T = p.period
    t0 = 0.4 * T  # inside the second pulse
    pieces = [H for _, H in p.pieces(B5)]
    ref = sla.expm(-1j * pieces[1] * (2 * T / 3 - t0))
    ref = sla.expm(-1j * pieces[2] * (T / 3)) @ ref
    ref = sla.expm(-1j * pieces[0] * (T / 3)) @ ref
    ref = sla.expm(-1j * pieces[1] * (t0 + T - 4 * T / 3)) @ ref
    assert np.max(np.abs(propagate(p, B5, t0, t0 + T).U_T - ref)) < 1e-11


def test_instantaneous_hamiltonian_selects_pieces():
    p = ThreeStepHatanoNelson()
    T = p.period
    pieces = [H for _, H in p.pieces(B6)]
    for s, i in [(0.1, 0), (0.4, 1), (0.9, 2), (1.1, 0)]:
        assert np.array_equal(instantaneous_hamiltonian(p, s * T, B6), pieces[i])
    q = TwoFrequencySinusoid(delta_r=0.3, delta_l=-0.2, omega=2)
    t = 0.37
    assert np.allclose(instantaneous_hamiltonian(q, t, B5), q.static(B5) + np.sin(2 * t) * q.drive(B5))


def test_smooth_drive_matches_ode_solver():
    p = TwoFrequencySinusoid(U=0.1, delta_r=0.8, delta_l=-0.3 + 0.2j, omega=3.0)
    H0, V = p.static(B5), p.drive(B5)
    n = len(B5)

    def rhs(t, y):
        return (-1j * (H0 + np.sin(p.omega * t) * V) @ y.reshape(n, n)).ravel()

    sol = solve_ivp(rhs, (0, p.period), np.eye(n, dtype=complex).ravel(), method="DOP853", rtol=1e-12, atol=1e-12)
    ref = sol.y[:, -1].reshape(n, n)
    U = propagate_period(p, B5).U_T
    assert np.max(np.abs(U - ref)) < 1e-8


def test_magnus_integrator_is_fourth_order():
    from nhgauge.floquet import _magnus4

    p = TwoFrequencySinusoid(U=0.1, delta_r=1.0, omega=2.0)
    H0, V = p.static(B5), p.drive(B5)
    ref = _magnus4(H0, V, p.omega, 0, p.period, 2048)
    e1 = np.abs(_magnus4(H0, V, p.omega, 0, p.period, 16) - ref).max()
    e2 = np.abs(_magnus4(H0, V, p.omega, 0, p.period, 32) - ref).max()
    assert 12 < e1 / e2 < 20


def test_midpoint_option_agrees():
    p = TwoFrequencySinusoid(U=0.1, delta_r=1.0, omega=4.0)
    a = propagate_period(p, B5, tol=1e-10).U_T
    b = propagate_period(p, B5, tol=1e-10, method="midpoint").U_T
    assert np.max(np.abs(a - b)) < 1e-7


def test_refinement_limit_raises():
    p = TwoFrequencySinusoid(U=0.1, delta_r=1.0, omega=0.5)
    with pytest.raises(FloquetError):
        propagate(p, B5, tol=1e-15, max_steps=64)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.5, 4))
def test_hermitian_drive_is_unitary(dr, du, omega):
    p = ModulatedInteraction(U=0.2, delta_r=dr, delta_l=dr, U_omega=du, omega=omega)
    U = propagate_period(p, enumerate_basis(4, 2), tol=1e-10).U_T
    assert np.max(np.abs(U.conj().T @ U - np.eye(len(U)))) < 1e-8
    assert np.max(np.abs(quasienergies(U, p.period).imag)) < 1e-8


@given(st.integers(3, 6), st.floats(-1, 1), st.floats(0.1, 1))
def test_quasienergies_of_static_evolution(L, g, T):
    H = build_hamiltonian(ModelParams(gamma_l=g, L=L, N=2)) * 0.2
    eps = quasienergies(sla.expm(-1j * H * T), T)
    prop = Propagator(sla.expm(-1j * H * T), T, 1)
    cmp = compare_quasienergies(prop, H)
    assert cmp.max_distance < 1e-9
    assert np.all(np.abs(eps.real) <= np.pi / T + 1e-12)


def test_zone_edge_is_reported():
    T = 1.0
    H = np.diag([np.pi / T, 0.1])
    with pytest.raises(BranchFoldingError):
        compare_quasienergies(Propagator(sla.expm(-1j * H * T), T, 1), H)


def test_comparison_folds_effective_spectrum():
    T = 1.0
    H = np.diag([0.3 + 2 * np.pi / T, -0.2 - 0.1j])
    cmp = compare_quasienergies(Propagator(sla.expm(-1j * H * T), T, 1), H)
    assert cmp.max_distance < 1e-12


# -- protocol definitions and mappings -----------------------------------------


def test_protocol_validation():
    with pytest.raises(ValueError):
        ThreeStepHatanoNelson(Omega=0)
    with pytest.raises(ValueError):
        ThreeStepHatanoNelson(loss_sign=2)
    with pytest.raises(ValueError):
        TwoFrequencySinusoid(omega=2, fast_frequency=15)
    TwoFrequencySinusoid(omega=2, fast_frequency=20)
    with pytest.raises(ValueError):
        effective_hamiltonian(ThreeStepHatanoNelson(), B6, convention="other")
    with pytest.raises(TypeError):
        effective_params(ThreeStepHatanoNelson(), 6, 1)


def test_hatano_nelson_drive_has_opposite_amplitudes():
    p = TwoFrequencySinusoid.from_hatano_nelson(0.4, delta_t=0.1)
    assert (p.delta_r, p.delta_l) == (0.4, -0.4)
    assert p.drive_amplitudes == pytest.approx((0.5, -0.3))


def test_two_frequency_mapping_signs():
    p = TwoFrequencySinusoid(delta=-1, U=0.1, delta_r=1.0, delta_l=0.5, omega=4)
    derived = effective_params(p, 5, 2)
    printed = effective_params(p, 5, 2, convention="printed")
    assert derived.t == 1 and derived.U == 0.1
    assert derived.gamma_r == pytest.approx(-2 * 0.1 * 1.0 / 4)
    assert derived.gamma_l == pytest.approx(-2 * 0.1 * 0.5 / 4)
    assert printed.gamma_r == pytest.approx(-derived.gamma_r)


def test_modulated_interaction_mapping():
    p = ModulatedInteraction(delta=-1, U=0.1j, delta_r=0.5, delta_l=0.1, U_omega=0.3, omega=2)
    m = effective_params(p, 5, 2)
    assert m.gamma_l == pytest.approx(2 / 2 * (-1 * 0.3 - 0.1j * 0.1))
    assert m.gamma_r == pytest.approx(2 / 2 * (-1 * 0.3 - 0.1j * 0.5))


def test_first_order_magnus_term_equals_gauge_chain():
    # (i/omega)[V, H0] for a sinusoidal hopping drive is the density-dependent hopping
    p = TwoFrequencySinusoid(delta=-1, U=0.3, delta_r=0.7, delta_l=-0.2, omega=2)
    H0, V = p.static(B5), p.drive(B5)
    first = 1j / p.omega * (V @ H0 - H0 @ V)
    H_eff = effective_hamiltonian(p, B5)
    assert np.max(np.abs(H0 + first - H_eff)) < 1e-12


def test_hatano_nelson_asymmetry_and_kick():
    assert hatano_nelson_asymmetry(1.0, 0.3, 20.0) == pytest.approx(np.pi / 27 * 0.3 / 20)
    assert GD_COEFF == pytest.approx(np.pi / 27)
    p = ThreeStepHatanoNelson(delta1=2.0, Omega=10)
    K = hopping_operator(B6, 1, 1, False)
    assert np.allclose(kick_operator(p, B6), -(2 * np.pi / 90) * 2.0 * K)


def test_three_step_effective_model_is_hatano_nelson():
    p = ThreeStepHatanoNelson(delta=1, delta1=1, mu0=0.3, Omega=20)
    H = effective_hamiltonian(p, B6, convention="printed")
    shift = np.pi / 27 * 0.3 / 20
    assert H[B6.rank((0, 1, 0, 0, 0, 0)), B6.rank((1, 0, 0, 0, 0, 0))] == pytest.approx(1 + shift)
    assert H[B6.rank((1, 0, 0, 0, 0, 0)), B6.rank((0, 1, 0, 0, 0, 0))] == pytest.approx(1 - shift)


# -- high-frequency convergence --------------------------------------------------


def test_three_step_quasienergies_converge():
    rows = convergence_sweep(ThreeStepHatanoNelson(), B6, [10, 20, 40, 80])
    assert all(2 <= r <= 6 for r in ratios(rows))
    assert rows[0][1] == pytest.approx(2.3414266e-4, rel=1e-4)


def test_three_step_closed_form_without_time_average_stalls():
    rows = convergence_sweep(ThreeStepHatanoNelson(), B6, [10, 20, 40, 80], convention="printed")
    assert all(abs(r - 1) < 1e-3 for r in ratios(rows))
    assert rows[-1][1] == pytest.approx(0.63055, abs=1e-4)


def test_two_frequency_quasienergies_converge():
    p = TwoFrequencySinusoid(U=0.1, delta_r=1.0, delta_l=0.0, omega=4)
    rows = convergence_sweep(p, B5, [4, 8, 16, 32])
    assert all(2 <= r <= 6 for r in ratios(rows))
    # the quasienergy spectrum cannot tell the two sign conventions apart
    printed_rows = convergence_sweep(p, B5, [4, 8, 16, 32], convention="printed")
    assert np.allclose([r[1] for r in rows], [r[1] for r in printed_rows], rtol=1e-6)


def test_modulated_interaction_converges():
    p = ModulatedInteraction(U=0.1j, delta_r=0.5 + 0.2j, delta_l=0.1, U_omega=0.3, omega=4)
    rows = convergence_sweep(p, B5, [16, 32, 64])
    assert all(3 <= r <= 5 for r in ratios(rows))


def test_square_wave_converges_with_time_average():
    p = SquareWaveGD(delta3=0.5 + 0.5j)
    rows = convergence_sweep(p, B5, [20, 40, 80, 160])
    assert all(abs(r - 4) < 0.1 for r in ratios(rows))


def test_convergence_csv(tmp_path):
    path = tmp_path / "f.csv"
    write_convergence_csv(path, [(10.0, 1e-3, 5e-4, 16)])
    assert path.read_text().splitlines() == [
        "frequency,max_matched_distance,mean_matched_distance,step_count",
        "10,0.001,0.00050000000000000001,16",
    ]


# -- operator-level check of the first-order terms ---------------------------


def _three_step_average(p, basis):
    K = hopping_operator(basis, 1.0, 1.0, p.periodic)
    M = density_operator(basis, p.losses(basis.L))
    return p.static(basis) + p.delta1 / 3 * K + 1j * p.loss_sign / 3 * M


def _square_wave_average(p, basis):
    bd = Boundary(periodic=p.periodic)
    hop = density_hopping_operator(basis, bd, right=p.delta1 / 3 + 1j * p.delta3 / 3, left=p.delta1 / 3 - 1j * p.delta3 / 3)
    return p.static(basis) + hop + p.delta2 / 3 * interaction_operator(basis)


def test_three_step_first_order_operator():
    errs = []
    for w in (20, 40):
        p = ThreeStepHatanoNelson(Omega=w)
        avg = _three_step_average(p, B6)
        measured = w * (averaged_floquet_generator(p, B6) - avg)
        predicted = w * (effective_hamiltonian(p, B6) - avg)
        errs.append(np.abs(measured - predicted).max())
        # dropping the first-order term would leave an O(1) discrepancy
        assert np.abs(predicted).max() > 5 * errs[-1]
    assert errs[0] / errs[1] == pytest.approx(2, rel=0.1)


def test_square_wave_first_order_operator():
    for w in (20, 40):
        p = SquareWaveGD(delta3=0.5 + 0.5j, omega=w)
        avg = _square_wave_average(p, B5)
        measured = w * (averaged_floquet_generator(p, B5) - avg)
        derived = w * (effective_hamiltonian(p, B5) - avg)
        printed = w * (build_hamiltonian(effective_params(p, 5, 2, convention="printed"), B5) - p.static(B5))
        assert np.abs(measured - derived).max() < 1.0 / w
        assert np.abs(measured - printed).max() > 0.5


def test_averaged_generator_needs_samples():
    with pytest.raises(ValueError):
        averaged_floquet_generator(ThreeStepHatanoNelson(), B6, samples=0)


# -- the drive realises a topological phase ------------------------------------


def test_two_frequency_drive_maps_to_winding_regime():
    U, omega = 0.1, 2.0
    p = TwoFrequencySinusoid(U=U, delta_r=0.0, delta_l=-1.5 * omega / (2 * U), omega=omega)
    params = effective_params(p, L=8, N=2)
    assert params.gamma_l == pytest.approx(1.5) and params.gamma_r == 0
    spec = eigendecompose(build_hamiltonian(params))
    res = winding_number(params, suggest_gap_point(spec).delta, grid_size=64)
    assert res.winding == 2
