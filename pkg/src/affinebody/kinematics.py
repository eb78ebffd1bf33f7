"""Velocity- and momentum-level kinematics of affine motion.

Affine velocities are the Lie-algebraic rates ``Omega = dphi/dt phi^-1``
(spatial) and ``Omega_hat = phi^-1 dphi/dt`` (material).  Their momentum
duals are the affine spin ``Sigma = phi P`` and co-moving spin
``Sigma_hat = P phi`` built from the canonical momenta ``P`` conjugate
to the placement.  The module also expresses velocities in the frames of
the polar and two-polar splittings, provides the factor-rate extraction
needed to move between representations, and ships a finite-difference
Poisson bracket used purely as a numerical oracle for the canonical
structure relations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    AsymmetricInputError,
    DegenerateSpectrumError,
    TangencyViolationError,
)
from .tensors import (
    Metric,
    PolarFactors,
    TwoPolarFactors,
    _unwrap_metric,
    _unwrap_phi,
    polar_decompose,
    two_polar_decompose,
)

SKEW_ATOL = 1e-9
SYMMETRY_RTOL = 1e-8
# Central-difference step for the Poisson bracket, relative to coordinate size.
BRACKET_REL_STEP = 1e-6


@dataclass(frozen=True)
class PhaseState:
    """Velocity-level state: translation, placement, and their rates."""

    x: np.ndarray
    phi: np.ndarray
    xdot: np.ndarray
    phidot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "xdot", np.asarray(self.xdot, dtype=float))
        object.__setattr__(self, "phi", _unwrap_phi(self.phi))
        object.__setattr__(self, "phidot", np.asarray(self.phidot, dtype=float))

    @property
    def dim(self) -> int:
        return self.phi.shape[0]

    @classmethod
    def rest(cls, n: int) -> "PhaseState":
        return cls(np.zeros(n), np.eye(n), np.zeros(n), np.zeros((n, n)))


@dataclass(frozen=True)
class AffineVelocities:
    """Spatial and material affine velocities plus co-moving translation rate."""

    Omega: np.ndarray
    Omega_hat: np.ndarray
    vhat: np.ndarray


@dataclass(frozen=True)
class GyroVelocities:
    """Angular velocities attached to the two-polar splitting.

    ``chi_hat = L^-1 dL/dt`` and ``theta_hat = R^-1 dR/dt`` are the
    co-moving rates of the two orthonormal frames (plain skew),
    ``omega_hat = R (chi_hat - theta_hat) R^-1`` the eta-skew rate of the
    polar isometry, and ``Omega_tilde`` / ``Omega_under`` the components
    of the affine velocities in the L- and R-frames, related by
    ``Omega_tilde = D Omega_under D^-1``.
    """

    chi_hat: np.ndarray
    theta_hat: np.ndarray
    omega_hat: np.ndarray
    Omega_tilde: np.ndarray
    Omega_under: np.ndarray
    Omega: np.ndarray
    Omega_hat: np.ndarray


@dataclass(frozen=True)
class TwoPolarRates:
    """Time derivatives of the two-polar factors (L, D, R)."""

    Ldot: np.ndarray
    Ddot: np.ndarray
    Rdot: np.ndarray


@dataclass(frozen=True)
class Momenta:
    """Canonical and kinematic momenta of a state.

    ``p`` is the covariant linear momentum, ``P`` the canonical momenta
    conjugate to the placement entries, ``k``/``K`` the kinematic linear
    and affine momenta, ``Sigma``/``Sigma_hat`` the affine spin and its
    co-moving form, ``K_hat`` the co-moving affine momentum (both indices
    contravariant), and ``S`` the doubled g-skew part of Sigma (internal
    angular momentum, mixed indices).
    """

    p: np.ndarray
    P: np.ndarray
    k: np.ndarray
    K: np.ndarray
    Sigma: np.ndarray
    Sigma_hat: np.ndarray
    K_hat: np.ndarray
    S: np.ndarray


@dataclass(frozen=True)
class TwoPolarSpins:
    """Spin-type momenta in the two-polar frames (isotropic inertia only).

    ``S`` is the spatial spin, ``V`` minus the vorticity (the material
    spin with reversed sign convention), ``S_hat`` the doubled skew part
    of the co-moving affine momentum; ``Sigma``, ``Sigma_hat``, ``K_hat``
    are the full momenta they descend from.
    """

    Sigma: np.ndarray
    Sigma_hat: np.ndarray
    K_hat: np.ndarray
    S: np.ndarray
    V: np.ndarray
    S_hat: np.ndarray


def affine_velocities(state: PhaseState) -> AffineVelocities:
    """Spatial/material affine velocities and co-moving translation rate."""
    phi_inv = np.linalg.inv(state.phi)
    Omega = state.phidot @ phi_inv
    Omega_hat = phi_inv @ state.phidot
    return AffineVelocities(Omega=Omega, Omega_hat=Omega_hat, vhat=phi_inv @ state.xdot)


def omega_from_polar(A: np.ndarray, Adot: np.ndarray, eta) -> np.ndarray:
    """Rotation rate of the polar isometry factor along rotation-free motion.

    For spatially rotation-less motion the isometry factor of the polar
    splitting evolves with angular velocity equal to half the commutator
    of the stretch inverse with the stretch rate:

        omega_hat = (1/2) [A^-1, dA/dt]

    The result is eta-skew.  Inputs must be eta-symmetric.
    """
    A = np.asarray(A, dtype=float)
    Adot = np.asarray(Adot, dtype=float)
    eta = _unwrap_metric(eta)
    for name, M in (("A", A), ("Adot", Adot)):
        ME = eta @ M
        scale = max(1.0, abs(ME).max())
        if abs(ME - ME.T).max() > SYMMETRY_RTOL * scale:
            raise AsymmetricInputError(f"{name} is not eta-symmetric")
    A_inv = np.linalg.inv(A)
    return 0.5 * (A_inv @ Adot - Adot @ A_inv)


def twopolar_velocities(f: TwoPolarFactors, fdot: TwoPolarRates) -> GyroVelocities:
    """Angular velocities of the two-polar frames and frame components of Omega.

    Requires the rates to be tangent to the frame orthonormality
    constraints, i.e. ``L^-1 dL/dt`` and ``R^-1 dR/dt`` skew and ``dD/dt``
    diagonal.
    """
    L, D, R = f.L, f.D, f.R
    chi_hat = np.linalg.solve(L, fdot.Ldot)
    theta_hat = np.linalg.solve(R, fdot.Rdot)
    Ddot = np.asarray(fdot.Ddot, dtype=float)
    for name, M in (("L rate", chi_hat), ("R rate", theta_hat)):
        if abs(M + M.T).max() > SKEW_ATOL * max(1.0, abs(M).max()):
            raise TangencyViolationError(f"{name} is not skew: frame rates leave the orthonormal manifold")
    if abs(Ddot - np.diag(np.diag(Ddot))).max() > SKEW_ATOL * max(1.0, abs(Ddot).max()):
        raise TangencyViolationError("D rate is not diagonal")
    D_inv = np.diag(1.0 / np.diag(D))
    Omega_tilde = chi_hat + Ddot @ D_inv - D @ theta_hat @ D_inv
    Omega_under = D_inv @ chi_hat @ D + D_inv @ Ddot - theta_hat
    L_inv = np.linalg.inv(L)
    R_inv = np.linalg.inv(R)
    return GyroVelocities(
        chi_hat=chi_hat,
        theta_hat=theta_hat,
        omega_hat=R @ (chi_hat - theta_hat) @ R_inv,
        Omega_tilde=Omega_tilde,
        Omega_under=Omega_under,
        Omega=L @ Omega_tilde @ L_inv,
        Omega_hat=R @ Omega_under @ R_inv,
    )


def legendre(state: PhaseState, m: float, J: np.ndarray, g) -> Momenta:
    """Legendre map from velocities to momenta for velocity-independent forces.

    p = m g xdot, P = J phidot^T g; the kinematic momenta are k = m xdot
    and K = phi J phidot^T, identified with (p, Sigma) by index lowering.
    """
    g = _unwrap_metric(g)
    J = np.asarray(J, dtype=float)
    phi, phidot = state.phi, state.phidot
    p = m * g @ state.xdot
    P = J @ phidot.T @ g
    k = m * state.xdot
    K = phi @ J @ phidot.T
    Sigma = phi @ P
    Sigma_hat = P @ phi
    phi_inv = np.linalg.inv(phi)
    K_hat = phi_inv @ K @ phi_inv.T
    g_inv = np.linalg.inv(g)
    S = Sigma - g_inv @ Sigma.T @ g
    return Momenta(p=p, P=P, k=k, K=K, Sigma=Sigma, Sigma_hat=Sigma_hat, K_hat=K_hat, S=S)


def vorticity_spin(Sigma_hat: np.ndarray, eta) -> np.ndarray:
    """Minus the vorticity: eta-transpose of the co-moving spin minus itself."""
    eta = _unwrap_metric(eta)
    return np.linalg.inv(eta) @ Sigma_hat.T @ eta - Sigma_hat


def twopolar_spins(f: TwoPolarFactors, fdot: TwoPolarRates, inertia_scalar: float) -> TwoPolarSpins:
    """Closed-form momenta in the two-polar frames for isotropic inertia.

    Caller guarantees the quadrupole inertia is ``inertia_scalar * eta^-1``
    (materially isotropic body); the formulas below are the Legendre images
    of the frame rates under that inertia.
    """
    gyro = twopolar_velocities(f, fdot)
    L, D, R = f.L, f.D, f.R
    chi, theta = gyro.chi_hat, gyro.theta_hat
    Ddot = np.asarray(fdot.Ddot, dtype=float)
    D_inv = np.diag(1.0 / np.diag(D))
    L_inv = np.linalg.inv(L)
    R_inv = np.linalg.inv(R)
    I0 = float(inertia_scalar)
    Sigma = I0 * L @ (D @ theta @ D + D @ Ddot - D @ D @ chi) @ L_inv
    Sigma_hat = I0 * R @ (theta @ D @ D + Ddot @ D - D @ chi @ D) @ R_inv
    K_hat = I0 * R @ (theta + Ddot @ D_inv - D @ chi @ D_inv) @ R_inv
    S = I0 * L @ (2.0 * D @ theta @ D - D @ D @ chi - chi @ D @ D) @ L_inv
    V = I0 * R @ (2.0 * D @ chi @ D - D @ D @ theta - theta @ D @ D) @ R_inv
    S_hat = I0 * R @ (2.0 * theta - D @ chi @ D_inv - D_inv @ chi @ D) @ R_inv
    return TwoPolarSpins(Sigma=Sigma, Sigma_hat=Sigma_hat, K_hat=K_hat, S=S, V=V, S_hat=S_hat)


# ---------------------------------------------------------------------------
# Factor-rate extraction
# ---------------------------------------------------------------------------

def polar_rates_from_state(phi, phidot, g, eta) -> tuple[PolarFactors, np.ndarray, np.ndarray]:
    """Polar factors plus (Adot, omega_hat) matching a velocity state.

    Adot solves the Sylvester equation  Adot A + A Adot = d(Ghat)/dt
    in eta-selfadjoint coordinates; omega_hat then follows from
    phidot = U (omega_hat A + Adot).
    """
    phi = _unwrap_phi(phi)
    phidot = np.asarray(phidot, dtype=float)
    g = _unwrap_metric(g)
    eta = _unwrap_metric(eta)
    factors = polar_decompose(phi, g, eta)
    Gdot = phidot.T @ g @ phi + phi.T @ g @ phidot
    E = np.linalg.cholesky(eta).T
    E_inv = np.linalg.inv(E)
    A_sym = E @ factors.A @ E_inv  # symmetric image of A
    w, V = np.linalg.eigh(0.5 * (A_sym + A_sym.T))
    rhs = V.T @ (E_inv.T @ Gdot @ E_inv) @ V
    Adot_sym = V @ (rhs / np.add.outer(w, w)) @ V.T
    Adot = E_inv @ Adot_sym @ E
    omega_hat = (np.linalg.solve(factors.U, phidot) - Adot) @ np.linalg.inv(factors.A)
    return factors, Adot, omega_hat


def twopolar_rates_from_state(phi, phidot, g, eta) -> tuple[TwoPolarFactors, TwoPolarRates]:
    """Two-polar factors plus factor rates matching a velocity state.

    Writing X = L^-1 phidot R, the diagonal of X is dD/dt and each
    off-diagonal pair determines (chi_hat, theta_hat) through a 2x2 solve
    whose determinant is the eigenvalue gap; a degenerate spectrum makes
    the extraction singular and raises.
    """
    phi = _unwrap_phi(phi)
    phidot = np.asarray(phidot, dtype=float)
    factors = two_polar_decompose(phi, g, eta)
    if factors.degenerate:
        raise DegenerateSpectrumError(
            "repeated principal stretch: two-polar factor rates are not determined"
        )
    L, D, R = factors.L, factors.D, factors.R
    Q = np.diag(D)
    n = Q.size
    X = np.linalg.solve(L, phidot @ R)
    Ddot = np.diag(np.diag(X))
    chi = np.zeros((n, n))
    theta = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            det = Q[b] ** 2 - Q[a] ** 2
            chi[a, b] = (Q[b] * X[a, b] + Q[a] * X[b, a]) / det
            theta[a, b] = (Q[a] * X[a, b] + Q[b] * X[b, a]) / det
            chi[b, a] = -chi[a, b]
            theta[b, a] = -theta[a, b]
    rates = TwoPolarRates(Ldot=L @ chi, Ddot=Ddot, Rdot=R @ theta)
    return factors, rates


# ---------------------------------------------------------------------------
# Poisson bracket oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CanonicalPoint:
    """Point of the canonical phase space: (x, phi, p, P)."""

    x: np.ndarray
    phi: np.ndarray
    p: np.ndarray
    P: np.ndarray

    @property
    def dim(self) -> int:
        return np.asarray(self.phi).shape[0]


PhaseFunction = Callable[[CanonicalPoint], float]


def _bracket_step(value: float) -> float:
    return BRACKET_REL_STEP * max(1.0, abs(value))


def _gradients(F: PhaseFunction, at: CanonicalPoint):
    """Central-difference gradients of F with respect to all canonical coords."""
    n = at.dim
    x = np.asarray(at.x, dtype=float).copy()
    phi = np.asarray(at.phi, dtype=float).copy()
    p = np.asarray(at.p, dtype=float).copy()
    P = np.asarray(at.P, dtype=float).copy()

    def diff(arr, idx):
        h = _bracket_step(arr[idx])
        orig = arr[idx]
        arr[idx] = orig + h
        plus = F(CanonicalPoint(x, phi, p, P))
        arr[idx] = orig - h
        minus = F(CanonicalPoint(x, phi, p, P))
        arr[idx] = orig
        return (plus - minus) / (2.0 * h)

    dx = np.array([diff(x, i) for i in range(n)])
    dp = np.array([diff(p, i) for i in range(n)])
    dphi = np.array([[diff(phi, (i, a)) for a in range(n)] for i in range(n)])
    dP = np.array([[diff(P, (a, i)) for i in range(n)] for a in range(n)])
    return dx, dp, dphi, dP


def poisson_bracket(F: PhaseFunction, G: PhaseFunction, at: CanonicalPoint) -> float:
    """Canonical Poisson bracket {F, G} by central finite differences.

    The canonical pairs are (x^i, p_i) and (phi^i_A, P^A_i):

        {F, G} = dF/dx . dG/dp - dF/dp . dG/dx
               + sum_iA (dF/dphi^i_A dG/dP^A_i - dF/dP^A_i dG/dphi^i_A)

    Accuracy is limited by the differencing step; this is a verification
    oracle, not a production derivative.
    """
    Fx, Fp, Fphi, FP = _gradients(F, at)
    Gx, Gp, Gphi, GP = _gradients(G, at)
    bracket = float(Fx @ Gp - Fp @ Gx)
    bracket += float(np.sum(Fphi * GP.T) - np.sum(FP.T * Gphi))
    return bracket
