"""Affine velocities, frame rates, Legendre maps, spins, Poisson oracle."""

import numpy as np
import pytest
from scipy.linalg import expm

from affinebody.errors import AsymmetricInputError, TangencyViolationError
from affinebody.kinematics import (
    CanonicalPoint,
    PhaseState,
    TwoPolarRates,
    affine_velocities,
    legendre,
    omega_from_polar,
    poisson_bracket,
    polar_rates_from_state,
    twopolar_rates_from_state,
    twopolar_spins,
    twopolar_velocities,
    vorticity_spin,
)
from affinebody.tensors import polar_decompose, two_polar_decompose

from conftest import random_invertible, random_skew, random_spd


def make_state(rng, n, g=None):
    return PhaseState(
        x=rng.normal(size=n),
        phi=random_invertible(rng, n),
        xdot=rng.normal(size=n),
        phidot=rng.normal(size=(n, n)),
    )


class TestAffineVelocities:
    def test_rest(self):
        v = affine_velocities(PhaseState.rest(3))
        np.testing.assert_allclose(v.Omega, 0.0)
        np.testing.assert_allclose(v.Omega_hat, 0.0)

    def test_planar_rotation_generator(self):
        omega = 0.8
        gen = np.array([[0.0, -omega], [omega, 0.0]])
        state = PhaseState(np.zeros(2), np.eye(2), np.zeros(2), gen @ np.eye(2))
        np.testing.assert_allclose(affine_velocities(state).Omega, gen, atol=1e-14)

    def test_material_is_conjugated_spatial(self, rng):
        for _ in range(20):
            state = make_state(rng, 3)
            v = affine_velocities(state)
            conj = np.linalg.inv(state.phi) @ v.Omega @ state.phi
            assert abs(v.Omega_hat - conj).max() < 1e-13 * max(1.0, abs(v.Omega_hat).max())


class TestOmegaFromPolar:
    def test_zero_rate(self, rng):
        eta = random_spd(rng, 3)
        A = np.linalg.inv(eta) @ random_spd(rng, 3)
        np.testing.assert_allclose(omega_from_polar(A, np.zeros((3, 3)), eta), 0.0)

    def test_commuting_pair(self):
        A = np.diag([2.0, 3.0])
        Adot = np.diag([0.1, -0.2])
        np.testing.assert_allclose(omega_from_polar(A, Adot, np.eye(2)), 0.0, atol=1e-15)

    def test_result_is_eta_skew(self, rng):
        eta = random_spd(rng, 3)
        eta_inv = np.linalg.inv(eta)
        A = eta_inv @ random_spd(rng, 3)
        Adot = eta_inv @ (lambda M: M + M.T)(rng.normal(size=(3, 3)))
        w = omega_from_polar(A, Adot, eta)
        ew = eta @ w
        assert abs(ew + ew.T).max() < 1e-12 * max(1.0, abs(ew).max())

    def test_rejects_asymmetric(self, rng):
        with pytest.raises(AsymmetricInputError):
            omega_from_polar(rng.normal(size=(3, 3)), np.zeros((3, 3)), np.eye(3))

    def test_finite_difference_polar_factor_oracle(self, rng):
        # Integrate a spatially rotation-free motion phi(t) = expm(t S) phi0
        # with S g-symmetric, finite-difference the polar factors, and check
        # U^-1 dU/dt = (1/2)[A^-1, dA/dt] with second-order convergence.
        n = 3
        g = random_spd(rng, n)
        eta = random_spd(rng, n)
        S = np.linalg.inv(g) @ (lambda M: M + M.T)(0.3 * rng.normal(size=(n, n)))
        phi0 = random_invertible(rng, n)

        def factors(t):
            return polar_decompose(expm(t * S) @ phi0, g, eta)

        errors = []
        for h in (1e-2, 5e-3, 2.5e-3):
            fp, fm, f0 = factors(h), factors(-h), factors(0.0)
            Udot = (fp.U - fm.U) / (2 * h)
            Adot = (fp.A - fm.A) / (2 * h)
            lhs = np.linalg.solve(f0.U, Udot)
            rhs = omega_from_polar(f0.A, Adot, eta)
            errors.append(abs(lhs - rhs).max())
        orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
        assert errors[-1] < 1e-6
        assert orders.min() > 1.7


class TestTwoPolarVelocities:
    def test_pure_stretch_is_rotation_free(self, rng):
        n = 2
        g = random_spd(rng, n)
        eta = random_spd(rng, n)
        f = two_polar_decompose(random_invertible(rng, n), g, eta)
        Ddot = np.diag(rng.normal(size=n))
        gyro = twopolar_velocities(f, TwoPolarRates(np.zeros((n, n)), Ddot, np.zeros((n, n))))
        D_inv = np.linalg.inv(f.D)
        expected = f.L @ Ddot @ D_inv @ np.linalg.inv(f.L)
        np.testing.assert_allclose(gyro.Omega, expected, atol=1e-12)
        gO = g @ gyro.Omega
        assert abs(gO - gO.T).max() < 1e-10 * max(1.0, abs(gO).max())

    def test_left_frame_spin_only(self, rng):
        n = 3
        f = two_polar_decompose(random_invertible(rng, n), np.eye(n), np.eye(n))
        k = random_skew(rng, n)
        gyro = twopolar_velocities(f, TwoPolarRates(f.L @ k, np.zeros((n, n)), np.zeros((n, n))))
        expected = f.R @ k @ np.linalg.inv(f.R)
        np.testing.assert_allclose(gyro.omega_hat, expected, atol=1e-12)

    def test_chain_rule_oracle(self, rng):
        # Omega from the frame rates must equal d(phi)/dt phi^-1 for
        # phi = L D R^-1 differentiated by the product rule.
        for n in (2, 3):
            g = random_spd(rng, n)
            eta = random_spd(rng, n)
            f = two_polar_decompose(random_invertible(rng, n), g, eta)
            kL = random_skew(rng, n)
            kR = random_skew(rng, n)
            rates = TwoPolarRates(f.L @ kL, np.diag(rng.normal(size=n)), f.R @ kR)
            gyro = twopolar_velocities(f, rates)
            R_inv = np.linalg.inv(f.R)
            phi = f.L @ f.D @ R_inv
            phidot = (
                rates.Ldot @ f.D @ R_inv
                + f.L @ rates.Ddot @ R_inv
                - f.L @ f.D @ R_inv @ rates.Rdot @ R_inv
            )
            np.testing.assert_allclose(gyro.Omega, phidot @ np.linalg.inv(phi), atol=1e-11)
            np.testing.assert_allclose(
                gyro.Omega_tilde, f.D @ gyro.Omega_under @ np.linalg.inv(f.D), atol=1e-11
            )
            # skewness bookkeeping
            for M in (gyro.chi_hat, gyro.theta_hat):
                assert abs(M + M.T).max() < 1e-12 * max(1.0, abs(M).max())
            ew = eta @ gyro.omega_hat
            assert abs(ew + ew.T).max() < 1e-11 * max(1.0, abs(ew).max())

    def test_rates_roundtrip_from_state(self, rng):
        for n in (2, 3):
            g = random_spd(rng, n)
            eta = random_spd(rng, n)
            phi = random_invertible(rng, n)
            phidot = rng.normal(size=(n, n))
            f, rates = twopolar_rates_from_state(phi, phidot, g, eta)
            R_inv = np.linalg.inv(f.R)
            recon = (
                rates.Ldot @ f.D @ R_inv
                + f.L @ rates.Ddot @ R_inv
                - f.L @ f.D @ R_inv @ rates.Rdot @ R_inv
            )
            np.testing.assert_allclose(recon, phidot, atol=1e-9 * max(1.0, abs(phidot).max()))

    def test_tangency_violation_raises(self, rng):
        f = two_polar_decompose(random_invertible(rng, 2), np.eye(2), np.eye(2))
        bad = TwoPolarRates(f.L @ np.eye(2), np.zeros((2, 2)), np.zeros((2, 2)))
        with pytest.raises(TangencyViolationError):
            twopolar_velocities(f, bad)


class TestLegendre:
    def test_rest_gives_zero(self):
        m = legendre(PhaseState.rest(2), 1.0, np.eye(2), np.eye(2))
        for field in (m.p, m.P, m.k, m.K, m.Sigma, m.S):
            np.testing.assert_allclose(field, 0.0)

    def test_pure_translation(self):
        state = PhaseState(np.zeros(2), np.eye(2), np.array([1.0, 0.0]), np.zeros((2, 2)))
        m = legendre(state, 1.0, np.eye(2), np.eye(2))
        np.testing.assert_allclose(m.p, [1.0, 0.0])
        np.testing.assert_allclose(m.k, [1.0, 0.0])

    def test_spin_index_identity(self, rng):
        for _ in range(20):
            n = 3
            g = random_spd(rng, n)
            J = random_spd(rng, n)
            state = make_state(rng, n)
            m = legendre(state, 1.7, J, g)
            np.testing.assert_allclose(m.Sigma, m.K @ g, rtol=1e-13, atol=1e-13)
            np.testing.assert_allclose(
                m.Sigma_hat,
                np.linalg.inv(state.phi) @ m.Sigma @ state.phi,
                atol=1e-11 * max(1.0, abs(m.Sigma).max()),
            )
            # S is the doubled g-skew part: g S is plain skew
            gS = g @ m.S
            assert abs(gS + gS.T).max() < 1e-11 * max(1.0, abs(gS).max())


class TestTwoPolarSpins:
    def test_stretch_only_has_no_spin(self, rng):
        n = 2
        f = two_polar_decompose(random_invertible(rng, n), np.eye(n), np.eye(n))
        rates = TwoPolarRates(np.zeros((n, n)), np.diag(rng.normal(size=n)), np.zeros((n, n)))
        s = twopolar_spins(f, rates, 1.3)
        np.testing.assert_allclose(s.S, 0.0, atol=1e-13)
        np.testing.assert_allclose(s.V, 0.0, atol=1e-13)

    def test_equal_frame_rates_cancel_at_unit_stretch(self, rng):
        n = 3
        k = random_skew(rng, n)
        f = two_polar_decompose(np.eye(n), np.eye(n), np.eye(n))
        rates = TwoPolarRates(f.L @ k, np.zeros((n, n)), f.R @ k)
        s = twopolar_spins(f, rates, 2.0)
        np.testing.assert_allclose(s.S, 0.0, atol=1e-12)

    def test_cross_module_against_legendre(self, rng):
        # spins from the closed two-polar formulas == spins from the
        # Legendre map on the reconstructed velocity state
        for n in (2, 3):
            g = random_spd(rng, n)
            eta = random_spd(rng, n)
            I0 = 0.9
            J = I0 * np.linalg.inv(eta)
            f = two_polar_decompose(random_invertible(rng, n), g, eta)
            kL = random_skew(rng, n)
            kR = random_skew(rng, n)
            rates = TwoPolarRates(f.L @ kL, np.diag(rng.normal(size=n)), f.R @ kR)
            s = twopolar_spins(f, rates, I0)
            R_inv = np.linalg.inv(f.R)
            phi = f.L @ f.D @ R_inv
            phidot = (
                rates.Ldot @ f.D @ R_inv
                + f.L @ rates.Ddot @ R_inv
                - f.L @ f.D @ R_inv @ rates.Rdot @ R_inv
            )
            state = PhaseState(np.zeros(n), phi, np.zeros(n), phidot)
            m = legendre(state, 1.0, J, g)
            tol = 1e-9 * max(1.0, abs(m.Sigma).max())
            np.testing.assert_allclose(s.Sigma, m.Sigma, atol=tol)
            np.testing.assert_allclose(s.Sigma_hat, m.Sigma_hat, atol=tol)
            np.testing.assert_allclose(s.K_hat, m.K_hat @ eta, atol=tol)
            np.testing.assert_allclose(s.S, m.S, atol=tol)
            np.testing.assert_allclose(s.V, vorticity_spin(m.Sigma_hat, eta), atol=tol)


def sigma_component(i, j):
    def f(pt):
        return float((np.asarray(pt.phi) @ np.asarray(pt.P))[i, j])

    return f


def sigma_hat_component(a, b):
    def f(pt):
        return float((np.asarray(pt.P) @ np.asarray(pt.phi))[a, b])

    return f


class TestPoissonBracket:
    @pytest.fixture
    def point(self, rng):
        n = 2
        return CanonicalPoint(
            x=rng.normal(size=n),
            phi=random_invertible(rng, n),
            p=rng.normal(size=n),
            P=rng.normal(size=(n, n)),
        )

    def test_antisymmetry(self, point):
        F = sigma_component(0, 1)
        assert abs(poisson_bracket(F, F, point)) < 1e-12

    def test_spin_algebra_structure(self, point, rng):
        # {Sigma^i_j, Sigma^k_l} = delta^i_l Sigma^k_j - delta^k_j Sigma^i_l
        n = 2
        Sigma = np.asarray(point.phi) @ np.asarray(point.P)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        got = poisson_bracket(sigma_component(i, j), sigma_component(k, l), point)
                        want = (i == l) * Sigma[k, j] - (k == j) * Sigma[i, l]
                        assert abs(got - want) < 1e-6 * max(1.0, abs(Sigma).max())

    def test_spatial_material_commute(self, point):
        n = 2
        for i in range(n):
            for j in range(n):
                for a in range(n):
                    for b in range(n):
                        got = poisson_bracket(
                            sigma_component(i, j), sigma_hat_component(a, b), point
                        )
                        assert abs(got) < 1e-6

    def test_spin_configuration_bracket(self, point):
        # {Sigma^i_j, phi^k_A} = -delta^k_j phi^i_A with the q-before-p
        # convention (the reversed argument order flips the sign).
        phi = np.asarray(point.phi)

        def phi_comp(k, a):
            return lambda pt: float(np.asarray(pt.phi)[k, a])

        got = poisson_bracket(sigma_component(0, 1), phi_comp(1, 0), point)
        assert abs(got - (-phi[0, 0])) < 1e-6
        got_rev = poisson_bracket(phi_comp(1, 0), sigma_component(0, 1), point)
        assert abs(got_rev - phi[0, 0]) < 1e-6

    def test_material_spin_algebra(self, point):
        # {Sig^A_B, Sig^C_D} = delta^C_B Sig^A_D - delta^A_D Sig^C_B
        n = 2
        Sh = np.asarray(point.P) @ np.asarray(point.phi)
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    for d in range(n):
                        got = poisson_bracket(
                            sigma_hat_component(a, b), sigma_hat_component(c, d), point
                        )
                        want = (c == b) * Sh[a, d] - (a == d) * Sh[c, b]
                        assert abs(got - want) < 1e-6 * max(1.0, abs(Sh).max())
