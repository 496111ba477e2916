"""General d-dimensional engine: averages, series remainder, pulsed levels."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from kampulse import (
    SIGMA_1,
    SIGMA_2,
    SIGMA_3,
    EigenSystem,
    KamConfig,
    PulsedKamLevels,
    QuadratureError,
    as_hermitian,
    autonomous_average,
    build_hierarchy,
    hatv_general,
    next_level,
    pauli_to_matrix,
    propagate_unitary,
    propagator_interaction,
    pulsed_propagator_general,
    pulsed_s1_and_he1,
    pulsed_vbar,
    remainder_truncated,
    sine_squared,
    unitary_exp,
    v1_at,
)
from kampulse.su2 import PauliVector


def random_hermitian(rng, d, scale=1.0):
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * (m + m.conj().T) / 2.0


def gapped_reference(rng, d, degenerate=False):
    # Haar-ish basis with eigenvalues spaced by at least ~0.5, optionally
    # with one exactly repeated pair to exercise the cluster logic.
    q, _ = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    vals = np.cumsum(0.5 + rng.uniform(0.0, 1.0, size=d))
    if degenerate and d >= 2:
        vals[1] = vals[0]
    return (q * vals) @ q.conj().T


def commutator(a, b):
    return a @ b - b @ a


# ---------------------------------------------------------------- helpers


def test_as_hermitian_validates():
    good = np.array([[1.0, 2.0 - 1j], [2.0 + 1j, -1.0]])
    np.testing.assert_allclose(as_hermitian(good), good)
    with pytest.raises(ValueError):
        as_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        as_hermitian(np.ones((2, 3)))


def test_unitary_exp_matches_expm():
    rng = np.random.default_rng(61)
    for d in (2, 3, 5):
        for _ in range(10):
            h = random_hermitian(rng, d)
            c = float(rng.uniform(-3.0, 3.0))
            np.testing.assert_allclose(
                unitary_exp(h, c), expm(-1j * c * h), atol=1e-12
            )


def test_unitary_exp_is_unitary():
    rng = np.random.default_rng(67)
    h = random_hermitian(rng, 4, scale=5.0)
    u = unitary_exp(h, 2.0)
    assert np.linalg.norm(u.conj().T @ u - np.eye(4)) < 1e-13


# ------------------------------------------------------------- eigensystem


def test_eigensystem_orders_and_reconstructs():
    rng = np.random.default_rng(71)
    k0 = gapped_reference(rng, 4)
    sys = EigenSystem.from_operator(k0)
    assert np.all(np.diff(sys.values) >= 0.0)
    recon = (sys.vectors * sys.values) @ sys.vectors.conj().T
    assert np.linalg.norm(recon - k0) < 1e-11
    assert sys.clusters == ((0,), (1,), (2,), (3,))


def test_eigensystem_detects_degenerate_cluster():
    sys = EigenSystem.from_operator(np.diag([1.0, 1.0, 2.0]))
    assert sys.clusters == ((0, 1), (2,))
    mask = sys.cluster_mask()
    assert mask[0, 1] and mask[1, 0]
    assert not mask[0, 2]


def test_eigensystem_identity_is_one_cluster():
    sys = EigenSystem.from_operator(np.eye(3))
    assert sys.clusters == ((0, 1, 2),)
    assert sys.cluster_mask().all()


def test_eigensystem_rejects_non_hermitian():
    with pytest.raises(ValueError):
        EigenSystem.from_operator(np.array([[0.0, 1.0], [0.0, 0.0]]))


# ------------------------------------------------------ autonomous average


def test_average_diagonal_perturbation_passes_through():
    k0 = EigenSystem.from_operator(np.diag([0.0, 1.0, 3.0]))
    v = np.diag([0.4, -0.1, 0.2]).astype(complex)
    d_op, w_op = autonomous_average(k0, v)
    np.testing.assert_allclose(d_op, v, atol=1e-14)
    np.testing.assert_allclose(w_op, 0.0, atol=1e-14)


def test_average_sigma3_sigma1_closed_form():
    k0 = EigenSystem.from_operator(SIGMA_3)
    d_op, w_op = autonomous_average(k0, SIGMA_1)
    np.testing.assert_allclose(d_op, 0.0, atol=1e-14)
    # W solves (E_j - E_k) W_jk = (D - V)_jk; here W = -(i/2) sigma2
    np.testing.assert_allclose(w_op, -0.5j * SIGMA_2, atol=1e-14)


def test_average_fully_degenerate_reference():
    k0 = EigenSystem.from_operator(np.eye(2))
    rng = np.random.default_rng(73)
    v = random_hermitian(rng, 2)
    d_op, w_op = autonomous_average(k0, v)
    np.testing.assert_allclose(d_op, v, atol=1e-14)
    np.testing.assert_allclose(w_op, 0.0, atol=1e-14)


def test_average_commutator_equation_residuals():
    rng = np.random.default_rng(79)
    for trial in range(30):
        d = int(rng.choice([2, 3, 5]))
        k0_mat = gapped_reference(rng, d, degenerate=(trial % 5 == 0))
        k0 = EigenSystem.from_operator(k0_mat)
        v = random_hermitian(rng, d)
        d_op, w_op = autonomous_average(k0, v)
        assert np.linalg.norm(commutator(k0_mat, d_op)) < 1e-10
        residual = commutator(k0_mat, w_op) + v - d_op
        assert np.linalg.norm(residual) < 1e-10
        assert np.linalg.norm(d_op - d_op.conj().T) < 1e-12
        assert np.linalg.norm(w_op + w_op.conj().T) < 1e-12


# --------------------------------------------------------- pulsed averages


def diag_ref(eps):
    def u_h0(t, t0):
        return np.diag([np.exp(-1j * eps * (t - t0)), np.exp(1j * eps * (t - t0))])

    return u_h0


def test_pulsed_vbar_zero_start_stays_zero():
    out = pulsed_vbar(diag_ref(1.0), np.zeros((2, 2)), 0.0, 0.7)
    np.testing.assert_allclose(out, 0.0)


def test_pulsed_vbar_at_and_before_switch_on():
    v0 = SIGMA_1 + 0.3 * SIGMA_3
    np.testing.assert_allclose(pulsed_vbar(diag_ref(1.0), v0, 0.2, 0.2), v0)
    np.testing.assert_allclose(pulsed_vbar(diag_ref(1.0), v0, 0.2, -1.0), v0)


def test_pulsed_vbar_commuting_pair_is_constant():
    for t in (0.1, 0.5, 2.0):
        np.testing.assert_allclose(
            pulsed_vbar(diag_ref(0.8), SIGMA_3, 0.0, t), SIGMA_3, atol=1e-14
        )


def test_pulsed_vbar_is_hermitian_rotation():
    u_h0 = diag_ref(1.3)
    out = pulsed_vbar(u_h0, SIGMA_1, 0.0, 0.9)
    np.testing.assert_allclose(out, out.conj().T, atol=1e-14)
    u = u_h0(0.9, 0.0)
    np.testing.assert_allclose(out, u @ SIGMA_1 @ u.conj().T, atol=1e-14)


def test_s1_identity_cases():
    s1, u_he1 = pulsed_s1_and_he1(diag_ref(1.0), np.zeros((2, 2)), 1.0, 0.0, 0.8, 0.1)
    np.testing.assert_allclose(s1, np.eye(2), atol=1e-14)
    u_h0 = diag_ref(1.0)
    np.testing.assert_allclose(
        u_he1, u_h0(0.8, 0.0) @ u_h0(0.1, 0.0).conj().T, atol=1e-14
    )
    s1_eps0, _ = pulsed_s1_and_he1(diag_ref(0.0), SIGMA_3, 0.0, 0.0, 0.8, 0.1)
    np.testing.assert_allclose(s1_eps0, np.eye(2), atol=1e-14)


def test_s1_diagonal_closed_form_and_factorization():
    eps, ti, t, t0 = 0.7, 0.0, 0.9, 0.2
    u_h0 = diag_ref(1.1)
    s1, u_he1 = pulsed_s1_and_he1(u_h0, SIGMA_3, eps, ti, t, t0)
    phase = eps * (t - t0)
    np.testing.assert_allclose(
        s1, np.diag([np.exp(-1j * phase), np.exp(1j * phase)]), atol=1e-14
    )
    np.testing.assert_allclose(u_he1, u_h0(t, t0) @ s1, atol=1e-14)


def test_s1_factorization_generic_input():
    rng = np.random.default_rng(83)
    v0 = np.diag(rng.standard_normal(3)).astype(complex)
    vals = np.array([1.0, 0.0, -1.0])

    def u_h0(t, t0):
        return np.diag(np.exp(-1j * vals * (t - t0)))

    s1, u_he1 = pulsed_s1_and_he1(u_h0, v0, 0.4, 0.0, 1.0, 0.3)
    np.testing.assert_allclose(u_he1, u_h0(1.0, 0.3) @ s1, atol=1e-13)
    assert np.linalg.norm(s1.conj().T @ s1 - np.eye(3)) < 1e-13
    assert np.linalg.norm(u_he1.conj().T @ u_he1 - np.eye(3)) < 1e-13


# ------------------------------------------------------- integral operator


def test_hatv_zero_for_balanced_integrand():
    v = lambda t: SIGMA_1 * math.sin(t)
    out = hatv_general(diag_ref(1.0), v, v, 0.0, 1.0)
    np.testing.assert_allclose(out, 0.0, atol=1e-15)


def test_hatv_zero_before_switch_on():
    v = lambda t: SIGMA_1
    zero = lambda t: np.zeros((2, 2))
    out = hatv_general(diag_ref(1.0), v, zero, 0.5, 0.2)
    np.testing.assert_allclose(out, 0.0)


def test_hatv_matches_fast_path_level_one():
    eps = 1.0
    pulse = sine_squared(math.pi / 2)
    hier = build_hierarchy(
        KamConfig(epsilon=eps, n_levels=1, pulse=pulse, hierarchy_tol=1e-11)
    )
    zero = lambda t: np.zeros((2, 2))
    v = lambda t: pauli_to_matrix(v1_at(pulse, t))
    for t in (0.3, 0.7, 1.0):
        got = hatv_general(diag_ref(eps), v, zero, 0.0, t, tol=1e-11)
        want = pauli_to_matrix(hier.v_hat(1, t))
        assert np.linalg.norm(got - want) < 1e-8


def test_hatv_reports_nonconvergence():
    v = lambda t: SIGMA_1 * math.sin(40.0 * t)
    zero = lambda t: np.zeros((2, 2))
    with pytest.raises(QuadratureError):
        hatv_general(diag_ref(1.0), v, zero, 0.0, 1.0, tol=1e-30, max_intervals=128)


# --------------------------------------------------------- remainder series


def test_remainder_commuting_inputs_vanish():
    out = remainder_truncated(SIGMA_3, SIGMA_3, None, 0.5, 1)
    np.testing.assert_allclose(out, 0.0, atol=1e-15)


def test_remainder_single_term_is_half_commutator():
    rng = np.random.default_rng(89)
    vhat = random_hermitian(rng, 3)
    v = random_hermitian(rng, 3)
    out = remainder_truncated(vhat, v, None, 1.0, 1, k_max=1)
    expected = 0.5j * (vhat @ v - v @ vhat)
    np.testing.assert_allclose(out, expected, atol=1e-13)


def test_remainder_is_hermitian_at_convergence():
    rng = np.random.default_rng(97)
    for _ in range(20):
        vhat = random_hermitian(rng, 3, scale=0.4)
        v = random_hermitian(rng, 3)
        d_op = random_hermitian(rng, 3, scale=0.2)
        out = remainder_truncated(vhat, v, d_op, 0.6, 1)
        assert np.linalg.norm(out - out.conj().T) < 1e-10


def test_remainder_matches_resummed_form():
    # d = 2, D = 0: the truncated matrix series and the closed resummation
    # are the same object whenever x = 2 a |vhat| < 1.
    rng = np.random.default_rng(101)
    for _ in range(50):
        p = int(rng.integers(1, 4))
        eps = float(rng.uniform(0.05, 0.9))
        a = eps ** (2 ** (p - 1))
        hv = rng.standard_normal(3)
        hv *= float(rng.uniform(0.05, 0.45)) / (a * np.linalg.norm(hv))
        v = rng.standard_normal(3)
        vhat_vec = PauliVector(*hv)
        v_vec = PauliVector(*v)
        got = remainder_truncated(
            pauli_to_matrix(vhat_vec), pauli_to_matrix(v_vec), None, eps, p
        )
        want = pauli_to_matrix(next_level(v_vec, vhat_vec, eps, p))
        assert np.linalg.norm(got - want) < 1e-10


def test_remainder_argument_validation():
    with pytest.raises(ValueError):
        remainder_truncated(SIGMA_1, SIGMA_3, None, 1.0, 1, k_max=0)
    with pytest.raises(ValueError):
        remainder_truncated(SIGMA_1, SIGMA_3, None, math.inf, 1)


# ---------------------------------------------------- propagator assembly


def test_general_propagator_trivial_cases():
    u_h0 = diag_ref(1.0)
    got = pulsed_propagator_general([], u_h0, np.zeros((2, 2)), 1.0, 0, 0.9, 0.2, 0.0)
    np.testing.assert_allclose(got, u_h0(0.9, 0.2), atol=1e-14)
    ident = pulsed_propagator_general([], u_h0, np.zeros((2, 2)), 1.0, 0, 0.5, 0.5, 0.0)
    np.testing.assert_allclose(ident, np.eye(2), atol=1e-14)
    with pytest.raises(ValueError):
        pulsed_propagator_general([], u_h0, np.zeros((2, 2)), 1.0, 1, 0.9, 0.2, 0.0)


# -------------------------------------------------------- mesh-based levels


def su2_partition(eps, pulse):
    return diag_ref(eps), (lambda t: pauli_to_matrix(v1_at(pulse, t)))


def test_levels_match_fast_path_vhat():
    eps = 1.0
    pulse = sine_squared(math.pi / 2)
    u_h0, v_func = su2_partition(eps, pulse)
    eng = PulsedKamLevels(u_h0, v_func, eps, 2, 0.0, 1.0, mesh_points=2001)
    hier = build_hierarchy(
        KamConfig(epsilon=eps, n_levels=2, pulse=pulse, hierarchy_tol=1e-11)
    )
    for p in (1, 2):
        for t in (0.25, 0.6, 1.0):
            got = eng.vhat(p, t)
            want = pauli_to_matrix(hier.v_hat(p, t))
            assert np.linalg.norm(got - want) < 1e-8


def test_levels_match_fast_path_propagator():
    pulse = sine_squared(math.pi / 2)
    for eps in (0.1, 1.0):
        u_h0, v_func = su2_partition(eps, pulse)
        eng = PulsedKamLevels(u_h0, v_func, eps, 3, 0.0, 1.0, mesh_points=2001)
        hier = build_hierarchy(
            KamConfig(epsilon=eps, n_levels=3, pulse=pulse, hierarchy_tol=1e-11)
        )
        for t, t0 in ((1.0, 0.0), (0.8, 0.3)):
            got = eng.propagator(t, t0)
            want = propagator_interaction(hier, t, t0).matrix
            assert np.linalg.norm(got - want) < 1e-9


def test_levels_nonzero_average_two_level():
    # V(ti) != 0 exercises the S1 shift and the level-2 frame change; the
    # engine must converge superconvergently onto the brute-force solution.
    eps = 0.3

    def u_h0(t, t0):
        return np.diag([np.exp(-1j * (t - t0)), np.exp(1j * (t - t0))])

    def v_func(t):
        s = math.sin(math.pi * min(max(t, 0.0), 1.0)) ** 2
        return SIGMA_3 + s * SIGMA_1

    oracle = propagate_unitary(
        lambda t: SIGMA_3 + eps * v_func(t), 0.0, 1.0, rel_tol=1e-12
    ).matrix
    eng = PulsedKamLevels(u_h0, v_func, eps, 3, 0.0, 1.0, mesh_points=1001)
    errs = [
        float(np.linalg.norm(eng.propagator(1.0, 0.0, n=n) - oracle))
        for n in range(4)
    ]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[3] < 1e-7
    u = eng.propagator(1.0, 0.0)
    assert np.linalg.norm(u.conj().T @ u - np.eye(2)) < 1e-12


def test_levels_nonzero_average_three_level():
    vals = np.array([1.0, 0.0, -1.0])
    d0 = np.diag([0.5, -0.2, -0.3]).astype(complex)
    x = np.array(
        [[0.0, 1.0, 0.3j], [1.0, 0.0, -0.6], [-0.3j, -0.6, 0.0]], dtype=complex
    )
    eps = 0.4

    def u_h0(t, t0):
        return np.diag(np.exp(-1j * vals * (t - t0)))

    def v_func(t):
        s = math.sin(math.pi * min(max(t, 0.0), 1.0)) ** 2
        return d0 + s * x

    oracle = propagate_unitary(
        lambda t: np.diag(vals).astype(complex) + eps * v_func(t),
        0.0,
        1.0,
        rel_tol=1e-12,
    ).matrix
    eng = PulsedKamLevels(u_h0, v_func, eps, 3, 0.0, 1.0, mesh_points=1001)
    errs = [
        float(np.linalg.norm(eng.propagator(1.0, 0.0, n=n) - oracle))
        for n in range(4)
    ]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[3] < 1e-7
    u = eng.propagator(1.0, 0.0)
    assert np.linalg.norm(u.conj().T @ u - np.eye(3)) < 1e-12


def test_levels_validation():
    u_h0, v_func = su2_partition(1.0, sine_squared(math.pi / 2))
    with pytest.raises(ValueError):
        PulsedKamLevels(u_h0, v_func, 1.0, -1, 0.0, 1.0)
    with pytest.raises(ValueError):
        PulsedKamLevels(u_h0, v_func, 1.0, 1, 0.0, 1.0, mesh_points=100)
    with pytest.raises(ValueError):
        PulsedKamLevels(u_h0, v_func, 1.0, 1, 1.0, 1.0)
    eng = PulsedKamLevels(u_h0, v_func, 1.0, 1, 0.0, 1.0, mesh_points=501)
    with pytest.raises(ValueError):
        eng.vhat(2, 0.5)
    with pytest.raises(ValueError):
        eng.propagator(1.0, 0.0, n=2)
