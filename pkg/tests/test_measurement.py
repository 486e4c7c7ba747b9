"""Density-matrix pipeline, parity algebra, fits, and readout statistics."""

import math

import numpy as np
import pytest

from dickesim import (InternalDensityMatrix, StateVector, build_space, embed,
                      fidelity_dicke, fit_parity, make_dicke, parity,
                      parity_curve, rotate_global, simulate_histogram,
                      threshold_estimate, trace_out_motion)
from dickesim.measurement import (parity_closed_form, random_density_matrix,
                                  rotation_matrix)

DICKE_VEC = np.array([0.0, 1.0, 1.0, 0.0]) / math.sqrt(2.0)
DICKE_RHO = InternalDensityMatrix(np.outer(DICKE_VEC, DICKE_VEC))


def reference_rho(diag_sum=0.74, offset=0.58):
    """Valid state with a given diagonal sum and bright-pair coherence."""
    rest = (1.0 - diag_sum) / 2.0
    m = np.diag([rest, diag_sum / 2.0, diag_sum / 2.0, rest]).astype(complex)
    m[1, 2] = m[2, 1] = offset / 2.0
    return InternalDensityMatrix(m)


class TestTraceOutMotion:
    def test_bright_state_with_ground_motion(self):
        space = build_space(2, 5)
        rho = trace_out_motion(make_dicke(2, 1, space))
        assert rho.element("du", "ud") == pytest.approx(0.5)
        assert np.trace(rho.matrix @ rho.matrix).real == pytest.approx(1.0)

    def test_motional_which_path_kills_coherence(self):
        space = build_space(2, 5)
        amp = np.zeros(space.dim, dtype=complex)
        amp[space.index("du", 0)] = 1 / math.sqrt(2)
        amp[space.index("ud", 1)] = 1 / math.sqrt(2)
        rho = trace_out_motion(StateVector(space, amp))
        # hand-computed partial trace: diagonal 1/2, 1/2 and no du-ud coherence
        assert rho.element("du", "du") == pytest.approx(0.5)
        assert rho.element("ud", "ud") == pytest.approx(0.5)
        assert abs(rho.element("du", "ud")) < 1e-15

    def test_product_state(self):
        space = build_space(2, 5)
        rho = trace_out_motion(embed(space, "dd", 1))
        expected = np.zeros((4, 4))
        expected[0, 0] = 1.0
        assert np.allclose(rho.matrix, expected)

    def test_requires_two_ions(self):
        space = build_space(3, 2)
        with pytest.raises(ValueError):
            trace_out_motion(embed(space, "ddd", 0))


class TestFidelity:
    def test_decomposition_arithmetic(self):
        assert fidelity_dicke(reference_rho()) == pytest.approx(0.66, abs=1e-12)

    def test_pure_target(self):
        assert fidelity_dicke(DICKE_RHO) == pytest.approx(1.0)

    def test_maximally_mixed(self):
        rho = InternalDensityMatrix(np.eye(4) / 4)
        assert fidelity_dicke(rho) == pytest.approx(0.25)

    def test_equals_matrix_sandwich_on_random_states(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            rho = random_density_matrix(rng)
            sandwich = float(np.real(DICKE_VEC @ rho.matrix @ DICKE_VEC))
            assert abs(fidelity_dicke(rho) - sandwich) < 1e-12


class TestRotationAndParity:
    def test_trace_preserved(self):
        rng = np.random.default_rng(5)
        rho = random_density_matrix(rng)
        for phi in (0.0, 0.4, 2.2):
            assert np.trace(rotate_global(rho, phi).matrix).real == pytest.approx(1.0)

    def test_all_down_rotates_to_uniform(self):
        rho = InternalDensityMatrix(np.diag([1.0, 0.0, 0.0, 0.0]))
        for phi in (0.0, 1.0, 2.5):
            pops = rotate_global(rho, phi).populations()
            assert np.allclose(pops, 0.25, atol=1e-12)

    def test_basis_state_parities(self):
        assert parity(InternalDensityMatrix(np.diag([1.0, 0, 0, 0]))) == 1.0
        assert parity(InternalDensityMatrix(np.diag([0, 1.0, 0, 0]))) == -1.0

    def test_dicke_parity_phase_independent(self):
        for phi in np.linspace(0, math.pi, 17):
            assert parity(rotate_global(DICKE_RHO, phi)) == pytest.approx(1.0, abs=1e-12)

    def test_rotation_is_unitary(self):
        for phi in (0.0, 0.7, 3.1):
            r = rotation_matrix(phi)
            assert np.allclose(r @ r.conj().T, np.eye(4), atol=1e-14)


class TestParityCurve:
    def test_ghz_type_oscillation(self):
        m = np.diag([0.5, 0.0, 0.0, 0.5]).astype(complex)
        m[0, 3] = m[3, 0] = 0.5
        rho = InternalDensityMatrix(m)
        grid = np.linspace(0, math.pi, 9, endpoint=False)
        values = np.array([v for _, v in parity_curve(rho, grid)])
        assert np.allclose(values, -np.cos(2 * grid), atol=1e-12)

    def test_dicke_constant_unity(self):
        for _, v in parity_curve(DICKE_RHO, np.linspace(0, math.pi, 13)):
            assert v == pytest.approx(1.0, abs=1e-12)

    def test_operator_equals_closed_form_random(self):
        rng = np.random.default_rng(23)
        for _ in range(1000):
            rho = random_density_matrix(rng)
            phi = float(rng.uniform(0, 2 * math.pi))
            op_value = parity(rotate_global(rho, phi))
            assert abs(op_value - parity_closed_form(rho, phi)) < 1e-10

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            parity_curve(DICKE_RHO, [])


class TestBellTransfer:
    def test_half_pulse_reaches_even_parity_bell_state(self):
        rotated = rotate_global(DICKE_RHO, 0.0)
        coherence = rotated.element("dd", "uu")
        assert abs(coherence) == pytest.approx(0.5, abs=1e-12)
        chi = -np.angle(coherence)
        bell = np.array([1.0, 0.0, 0.0, np.exp(1j * chi)]) / math.sqrt(2)
        overlap = float(np.real(bell.conj() @ rotated.matrix @ bell))
        assert overlap == pytest.approx(1.0, abs=1e-12)


class TestFitParity:
    def test_noiseless_exact(self):
        a, b, c = 0.3, -0.5, 0.2
        grid = np.linspace(0, math.pi, 12, endpoint=False)
        samples = [(p, a + b * math.cos(2 * p) + c * math.sin(2 * p)) for p in grid]
        fit = fit_parity(samples)
        assert fit.offset == pytest.approx(a, abs=1e-12)
        assert fit.cos_amp == pytest.approx(b, abs=1e-12)
        assert fit.sin_amp == pytest.approx(c, abs=1e-12)
        assert fit.residual_rms < 1e-12

    def test_recovers_reference_offset(self):
        grid = np.linspace(0, math.pi, 20, endpoint=False)
        samples = [(p, 0.58 + 0.1 * math.cos(2 * p)) for p in grid]
        assert fit_parity(samples).offset == pytest.approx(0.58, abs=1e-12)

    def test_noise_calibration(self):
        # offset-estimate spread under sigma = 0.05 noise at 20 phases:
        # std = 0.05 / sqrt(20) = 0.0112, so |err| < 0.04 is a 3.6 sigma event
        rng = np.random.default_rng(99)
        grid = np.linspace(0, math.pi, 20, endpoint=False)
        clean = 0.58 + 0.1 * np.cos(2 * grid)
        hits = 0
        for _ in range(1000):
            noisy = clean + rng.normal(0, 0.05, size=20)
            fit = fit_parity(list(zip(grid, noisy)))
            hits += abs(fit.offset - 0.58) < 0.04
        assert hits >= 950

    def test_degenerate_phases_rejected(self):
        samples = [(0.1, 1.0), (0.1 + math.pi, 0.9), (0.1 + 2 * math.pi, 1.1)]
        with pytest.raises(ValueError):
            fit_parity(samples)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            fit_parity([(0.0, 1.0), (1.0, 0.5)])


class TestHistogram:
    def test_both_bright_cluster(self):
        hist = simulate_histogram((1.0, 0.0, 0.0), shots=10_000, seed=4)
        counts = np.arange(len(hist))
        mean = float((counts * hist).sum() / hist.sum())
        assert mean == pytest.approx(140.5, abs=1.0)
        assert hist[counts <= 105].sum() < 0.01 * hist.sum()

    def test_all_dark_without_background(self):
        hist = simulate_histogram((0.0, 0.0, 1.0), shots=500, seed=1, background=0.0)
        assert hist[0] == 500
        assert hist.sum() == 500

    def test_deterministic_under_seed(self):
        a = simulate_histogram((0.2, 0.5, 0.3), shots=2000, seed=42)
        b = simulate_histogram((0.2, 0.5, 0.3), shots=2000, seed=42)
        assert np.array_equal(a, b)

    def test_middle_class_statistics(self):
        hist = simulate_histogram((0.13, 0.74, 0.13), shots=10_000, seed=7)
        est = threshold_estimate(hist, (35, 105))
        assert est[1] == pytest.approx(0.74, abs=0.01)

    def test_validation(self):
        with pytest.raises(ValueError):
            simulate_histogram((0.5, 0.6, -0.1), shots=10, seed=0)
        with pytest.raises(ValueError):
            simulate_histogram((0.5, 0.2, 0.2), shots=10, seed=0)
        with pytest.raises(ValueError):
            simulate_histogram((1.0, 0.0, 0.0), shots=0, seed=0)


class TestThresholdEstimate:
    def test_all_zero_counts(self):
        est = threshold_estimate(np.array([100]), (35, 105))
        assert np.allclose(est, [0.0, 0.0, 1.0])

    def test_boundary_convention(self):
        hist = np.zeros(107, dtype=int)
        hist[35] = 5     # exactly at the low threshold: dark class
        hist[105] = 7    # exactly at the high threshold: middle class
        hist[106] = 2
        est = threshold_estimate(hist, (35, 105))
        assert np.allclose(est, [2 / 14, 7 / 14, 5 / 14])

    def test_round_trip(self):
        pops = (0.13, 0.74, 0.13)
        shots = 100_000
        hist = simulate_histogram(pops, shots=shots, seed=13)
        est = threshold_estimate(hist, (35, 105))
        for p, e in zip(pops, est):
            sigma = math.sqrt(p * (1 - p) / shots)
            assert abs(e - p) <= 3 * sigma

    def test_empty_histogram(self):
        with pytest.raises(ValueError):
            threshold_estimate(np.zeros(10, dtype=int))
        with pytest.raises(ValueError):
            threshold_estimate(np.array([1, 2]), (5, 5))


class TestDensityMatrixValidation:
    def test_trace_enforced(self):
        with pytest.raises(ValueError):
            InternalDensityMatrix(np.eye(4))

    def test_positivity_enforced(self):
        m = np.diag([0.8, 0.5, -0.2, -0.1])
        with pytest.raises(ValueError):
            InternalDensityMatrix(m)

    def test_hermiticity_enforced(self):
        m = np.diag([0.25] * 4).astype(complex)
        m[0, 1] = 0.3
        with pytest.raises(ValueError):
            InternalDensityMatrix(m)
