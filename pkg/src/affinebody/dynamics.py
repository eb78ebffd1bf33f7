"""Kinetic energy, force models, and unconstrained equations of motion.

The kinetic energy of an affine body is

    T = (m/2) g(xdot, xdot) + (1/2) g_ij dphi^i_A/dt dphi^j_B/dt J^AB

with total mass ``m`` and quadrupole inertia ``J``.  The same quantity
can be evaluated through the polar splitting, the two-polar splitting,
or (for isotropic inertia) a diagonalized Hamiltonian form; all
representations agree and the redundancy is used heavily in tests.

Force models are doubly isotropic: a hyperelastic torque derived from a
potential in the deformation invariants, plus a linear viscous torque
built from the symmetric part of the spatial affine velocity.  The free
balance law ``phi J (d2phi/dt2)^T = N`` is solved as a dense linear
system in the placement acceleration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    DegenerateSpectrumError,
    FrameMismatchError,
    IsotropyViolationError,
    NegativeDeterminantError,
    ReprPreconditionError,
)
from .kinematics import (
    CanonicalPoint,
    PhaseState,
    affine_velocities,
    polar_rates_from_state,
    twopolar_rates_from_state,
    twopolar_velocities,
)
from .tensors import (
    PolarFactors,
    TwoPolarFactors,
    _unwrap_metric,
    invariants_of,
    two_polar_decompose,
)

ISOTROPY_ATOL = 1e-12
FRAME_MATCH_RTOL = 1e-9
BALANCE_RESIDUAL_RTOL = 1e-10
BALANCE_RESIDUAL_ATOL = 1e-12
# Step for the finite-difference gradient of callable (non-polynomial) potentials.
POTENTIAL_FD_STEP = 1e-7

REPRESENTATIONS = ("direct", "polar", "twopolar", "twopolar_isotropic")


@dataclass(frozen=True)
class Inertia:
    """Constant inertial parameters: total mass and quadrupole tensor.

    ``J`` has both indices contravariant.  ``isotropic`` holds the scalar
    I when J = I * eta^-1 (materially isotropic body); it unlocks the
    specialised two-polar formulas.
    """

    m: float
    J: np.ndarray
    isotropic: float | None = None

    def __post_init__(self):
        if self.m <= 0.0:
            raise ValueError("mass must be positive")
        J = np.asarray(self.J, dtype=float)
        if not np.allclose(J, J.T, atol=1e-12 * max(1.0, abs(J).max())):
            raise ValueError("quadrupole inertia must be symmetric")
        if np.linalg.eigvalsh(J)[0] <= 0.0:
            raise ValueError("quadrupole inertia must be positive definite")
        object.__setattr__(self, "J", J)

    @classmethod
    def spherical(cls, m: float, I0: float, eta) -> "Inertia":
        """Isotropic inertia J = I0 * eta^-1."""
        eta = _unwrap_metric(eta)
        return cls(m=m, J=I0 * np.linalg.inv(eta), isotropic=float(I0))

    def check_isotropic(self, eta) -> float:
        eta = _unwrap_metric(eta)
        if self.isotropic is None:
            raise ReprPreconditionError("inertia is not flagged isotropic")
        if abs(self.J - self.isotropic * np.linalg.inv(eta)).max() > ISOTROPY_ATOL * max(
            1.0, abs(self.J).max()
        ):
            raise ReprPreconditionError("J does not equal isotropic * eta^-1")
        return float(self.isotropic)


@dataclass(frozen=True)
class PolynomialPotential:
    """Polynomial potential in the deformation invariants.

    ``coeffs`` maps exponent multi-indices (k_1, ..., k_n) to
    coefficients: V(I) = sum c * I_1^k_1 ... I_n^k_n.  The gradient with
    respect to each invariant is analytic, which keeps the hyperelastic
    force coefficients exact.
    """

    coeffs: dict[tuple[int, ...], float]

    def __post_init__(self):
        clean = {}
        for powers, c in self.coeffs.items():
            powers = tuple(int(k) for k in powers)
            if any(k < 0 for k in powers):
                raise ValueError("invariant exponents must be non-negative")
            if not np.isfinite(c):
                raise ValueError("potential coefficients must be finite")
            clean[powers] = float(c)
        object.__setattr__(self, "coeffs", clean)

    def value(self, invariants: np.ndarray) -> float:
        I = np.asarray(invariants, dtype=float)
        total = 0.0
        for powers, c in self.coeffs.items():
            total += c * np.prod(I[: len(powers)] ** powers)
        return float(total)

    def gradient(self, invariants: np.ndarray) -> np.ndarray:
        I = np.asarray(invariants, dtype=float)
        grad = np.zeros_like(I)
        for powers, c in self.coeffs.items():
            for a, k in enumerate(powers):
                if k == 0:
                    continue
                term = c * k * I[a] ** (k - 1)
                for b, kb in enumerate(powers):
                    if b != a:
                        term *= I[b] ** kb
                grad[a] += term
        return grad


Potential = PolynomialPotential | Callable[[np.ndarray], float]


def potential_value_gradient(potential: Potential, invariants: np.ndarray):
    """Value and invariant-gradient of a potential.

    Polynomial potentials are differentiated analytically; a bare callable
    V(I_1..I_n) falls back to central differences with a fixed step.
    """
    if isinstance(potential, PolynomialPotential):
        return potential.value(invariants), potential.gradient(invariants)
    I = np.asarray(invariants, dtype=float)
    value = float(potential(I))
    grad = np.zeros_like(I)
    for a in range(I.size):
        h = POTENTIAL_FD_STEP * max(1.0, abs(I[a]))
        up = I.copy()
        dn = I.copy()
        up[a] += h
        dn[a] -= h
        grad[a] = (float(potential(up)) - float(potential(dn))) / (2.0 * h)
    return value, grad


TorqueHook = Callable[[PhaseState, float], np.ndarray]
ForceHook = Callable[[PhaseState, float], np.ndarray]


@dataclass(frozen=True)
class ForceModel:
    """Hyperelastic potential + linear viscosity + optional external hooks.

    ``nu`` and ``zeta`` are shear and bulk viscosity coefficients, ``V0``
    the reference (material) volume scaling the viscous torque.
    ``external`` may inject an extra spatial torque N(state, t) (both
    indices contravariant); ``external_force`` a translational force.
    Built-in parts are doubly isotropic; hooks are the caller's problem.
    """

    potential: Potential | None = None
    nu: float = 0.0
    zeta: float = 0.0
    V0: float = 1.0
    external: TorqueHook | None = None
    external_force: ForceHook | None = None

    def __post_init__(self):
        if self.nu < 0.0 or self.zeta < 0.0:
            raise ValueError("viscosity coefficients must be non-negative")
        if self.V0 <= 0.0:
            raise ValueError("reference volume must be positive")

    @property
    def has_viscosity(self) -> bool:
        return self.nu > 0.0 or self.zeta > 0.0

    def require_isotropic(self) -> None:
        if self.external is not None or self.external_force is not None:
            raise IsotropyViolationError(
                "external hooks may break isotropy; reduced schemes accept only "
                "the built-in potential and viscous terms"
            )


@dataclass(frozen=True)
class Torque:
    """Affine torque in several frames.

    ``N`` is spatial with both indices contravariant, ``N_hat`` its
    co-moving image phi^-1 N phi^-T.  ``N_bar`` (polar-rotator frame) and
    ``N_tilde`` (two-polar principal frame) are filled in by
    :func:`frame_transform_torque`.  ``phi`` records the configuration the
    torque was evaluated at so frame transforms can detect mismatches.
    """

    N: np.ndarray
    N_hat: np.ndarray
    phi: np.ndarray
    N_bar: np.ndarray | None = None
    N_tilde: np.ndarray | None = None


def zero_torque(n: int, phi=None) -> Torque:
    phi = np.eye(n) if phi is None else np.asarray(phi, dtype=float)
    return Torque(N=np.zeros((n, n)), N_hat=np.zeros((n, n)), phi=phi)


# ---------------------------------------------------------------------------
# Kinetic energy
# ---------------------------------------------------------------------------

def _translational_energy(state: PhaseState, m: float, g: np.ndarray) -> float:
    return 0.5 * m * float(state.xdot @ g @ state.xdot)


def kinetic_energy(state: PhaseState, inertia: Inertia, g, eta, representation: str = "direct") -> float:
    """Kinetic energy of a velocity state, by choice of representation.

    ``direct`` contracts the raw placement rate with the metrics;
    ``polar`` works through (A, Adot, omega_hat); ``twopolar`` through the
    frame rates with the rotated inertia R^-1 J R^-T; and
    ``twopolar_isotropic`` uses the short isotropic-inertia form (requires
    ``inertia.isotropic``).  All agree; the slower paths exist to
    cross-check each other.
    """
    g = _unwrap_metric(g)
    eta = _unwrap_metric(eta)
    J = inertia.J
    T_tr = _translational_energy(state, inertia.m, g)
    if representation == "direct":
        pd = state.phidot
        return T_tr + 0.5 * float(np.trace(pd.T @ g @ pd @ J))
    if representation == "polar":
        factors, Adot, omega = polar_rates_from_state(state.phi, state.phidot, g, eta)
        wA = omega @ factors.A
        T_int = (
            0.5 * float(np.trace(Adot.T @ eta @ Adot @ J))
            + float(np.trace(wA.T @ eta @ Adot @ J))
            + 0.5 * float(np.trace(wA.T @ eta @ wA @ J))
        )
        return T_tr + T_int
    if representation == "twopolar":
        factors, rates = twopolar_rates_from_state(state.phi, state.phidot, g, eta)
        gyro = twopolar_velocities(factors, rates)
        D = factors.D
        Dd = rates.Ddot
        chi, th = gyro.chi_hat, gyro.theta_hat
        R_inv = np.linalg.inv(factors.R)
        JR = R_inv @ J @ R_inv.T  # inertia pulled to the principal frame
        tr = np.trace
        T_int = 0.5 * float(
            tr(Dd @ Dd @ JR)
            + tr(Dd @ chi @ D @ JR)
            - tr(D @ chi @ Dd @ JR)
            + tr(th @ D @ Dd @ JR)
            - tr(Dd @ D @ th @ JR)
            - tr(D @ chi @ chi @ D @ JR)
            - tr(th @ D @ D @ th @ JR)
            + tr(th @ D @ chi @ D @ JR)
            + tr(D @ chi @ D @ th @ JR)
        )
        return T_tr + T_int
    if representation == "twopolar_isotropic":
        I0 = inertia.check_isotropic(eta)
        factors, rates = twopolar_rates_from_state(state.phi, state.phidot, g, eta)
        gyro = twopolar_velocities(factors, rates)
        D, Dd = factors.D, rates.Ddot
        chi, th = gyro.chi_hat, gyro.theta_hat
        tr = np.trace
        T_int = float(
            0.5 * I0 * tr(Dd @ Dd)
            + I0 * tr(D @ chi @ D @ th)
            - 0.5 * I0 * tr(D @ D @ chi @ chi)
            - 0.5 * I0 * tr(D @ D @ th @ th)
        )
        return T_tr + T_int
    raise ReprPreconditionError(f"unknown representation {representation!r}")


def kinetic_energy_hamiltonian(
    point: CanonicalPoint, inertia: Inertia, g, eta, representation: str = "canonical"
) -> float:
    """Kinetic energy from canonical momenta.

    ``canonical`` evaluates the quadratic form in (p, P) with the inverse
    inertia.  ``twopolar`` evaluates the diagonalized isotropic form in
    the stretch momenta and the frame spins; it requires isotropic inertia
    and a non-degenerate stretch spectrum (the pair couplings carry
    1/(Q_a - Q_b)^2).
    """
    g = _unwrap_metric(g)
    eta = _unwrap_metric(eta)
    g_inv = np.linalg.inv(g)
    p = np.asarray(point.p, dtype=float)
    P = np.asarray(point.P, dtype=float)
    T_tr = 0.5 * float(p @ g_inv @ p) / inertia.m
    if representation == "canonical":
        J_inv = np.linalg.inv(inertia.J)
        return T_tr + 0.5 * float(np.trace(J_inv @ P @ g_inv @ P.T))
    if representation == "twopolar":
        I0 = inertia.check_isotropic(eta)
        factors = two_polar_decompose(point.phi, g, eta)
        Q = factors.Q
        n = Q.size
        gap = min(
            abs(Q[a] - Q[b]) for a in range(n) for b in range(n) if a != b
        ) if n > 1 else np.inf
        if factors.degenerate or gap <= 1e-8 * Q.max():
            raise DegenerateSpectrumError(
                "repeated principal stretch makes the diagonalized form singular"
            )
        phi = np.asarray(point.phi, dtype=float)
        Sigma = phi @ P
        Sigma_hat = P @ phi
        S = Sigma - g_inv @ Sigma.T @ g
        V = np.linalg.inv(eta) @ Sigma_hat.T @ eta - Sigma_hat
        L_inv = np.linalg.inv(factors.L)
        R_inv = np.linalg.inv(factors.R)
        rho = L_inv @ S @ factors.L
        tau = R_inv @ V @ factors.R
        P_a = np.diag(L_inv @ Sigma @ factors.L) / Q
        shear_minus = -rho - tau  # couples through the stretch gaps
        shear_plus = rho - tau    # couples through the stretch sums
        T_int = float(np.sum(P_a**2)) / (2.0 * I0)
        for a in range(n):
            for b in range(n):
                if a != b:
                    T_int += shear_minus[a, b] ** 2 / (Q[a] - Q[b]) ** 2 / (8.0 * I0)
                T_int += shear_plus[a, b] ** 2 / (Q[a] + Q[b]) ** 2 / (8.0 * I0)
        return T_tr + T_int
    raise ReprPreconditionError(f"unknown representation {representation!r}")


# ---------------------------------------------------------------------------
# Force models
# ---------------------------------------------------------------------------

def elastic_coefficients(potential: Potential, invariants: np.ndarray) -> np.ndarray:
    """Expansion coefficients B_a = -2 a dV/dI_a of the hyperelastic torque."""
    _, grad = potential_value_gradient(potential, invariants)
    a = np.arange(1, grad.size + 1, dtype=float)
    return -2.0 * a * grad


def force_hyperelastic(phi, potential: Potential, g, eta) -> Torque:
    """Hyperelastic affine torque N = -phi dV/dphi (indices raised with g).

    For a potential in the invariants the co-moving torque expands in
    powers of the mixed Green tensor:

        N_hat (mixed) = sum_a B_a Ghat^(a-1),   B_a = -2 a dV/dI_a,

    which is exact for polynomial potentials.  The spatial torque is
    symmetric, so purely potential motion conserves spin.
    """
    g = _unwrap_metric(g)
    eta = _unwrap_metric(eta)
    phi = np.asarray(phi.phi if hasattr(phi, "phi") else phi, dtype=float)
    n = phi.shape[0]
    if potential is None:
        return zero_torque(n, phi)
    eta_inv = np.linalg.inv(eta)
    Ghat = eta_inv @ phi.T @ g @ phi
    inv = invariants_of(phi, g, eta)
    B = elastic_coefficients(potential, inv.I)
    N_hat_mixed = np.zeros((n, n))
    power = np.eye(n)
    for a in range(n):
        N_hat_mixed += B[a] * power
        power = power @ Ghat
    N_hat = N_hat_mixed @ eta_inv
    N = phi @ N_hat @ phi.T
    return Torque(N=N, N_hat=N_hat, phi=phi)


def force_viscous(phi, Omega, nu: float, zeta: float, V0: float, g, eta) -> Torque:
    """Linear viscous affine torque from the deformation-rate tensor.

    d = sym(Omega with index raised by g); the torque is the volume-scaled
    mean viscous stress

        N = -V0 sqrt(det g / det eta) det(phi)
            [ nu (Omega_up + Omega_up^T) + (zeta - 2 nu / n) tr(Omega) g^-1 ].

    Requires det phi > 0.  Power against Omega is non-positive for
    nu, zeta >= 0.
    """
    g = _unwrap_metric(g)
    eta = _unwrap_metric(eta)
    phi = np.asarray(phi.phi if hasattr(phi, "phi") else phi, dtype=float)
    Omega = np.asarray(Omega, dtype=float)
    n = phi.shape[0]
    det = np.linalg.det(phi)
    if det <= 0.0:
        raise NegativeDeterminantError(f"viscous torque needs det phi > 0, got {det:.3e}")
    g_inv = np.linalg.inv(g)
    Omega_up = Omega @ g_inv
    scale = V0 * np.sqrt(np.linalg.det(g) / np.linalg.det(eta)) * det
    N = -scale * (
        nu * (Omega_up + Omega_up.T)
        + (zeta - 2.0 * nu / n) * np.trace(Omega) * g_inv
    )
    phi_inv = np.linalg.inv(phi)
    return Torque(N=N, N_hat=phi_inv @ N @ phi_inv.T, phi=phi)


def evaluate_torque(state: PhaseState, force: ForceModel, g, eta, t: float = 0.0) -> Torque:
    """Total affine torque of a force model at a state: elastic + viscous + hook."""
    g = _unwrap_metric(g)
    eta = _unwrap_metric(eta)
    n = state.dim
    N = np.zeros((n, n))
    if force.potential is not None:
        N = N + force_hyperelastic(state.phi, force.potential, g, eta).N
    if force.has_viscosity:
        Omega = affine_velocities(state).Omega
        N = N + force_viscous(state.phi, Omega, force.nu, force.zeta, force.V0, g, eta).N
    if force.external is not None:
        N = N + np.asarray(force.external(state, t), dtype=float)
    phi_inv = np.linalg.inv(state.phi)
    return Torque(N=N, N_hat=phi_inv @ N @ phi_inv.T, phi=state.phi.copy())


def translational_force(state: PhaseState, force: ForceModel, t: float = 0.0) -> np.ndarray:
    if force.external_force is None:
        return np.zeros(state.dim)
    return np.asarray(force.external_force(state, t), dtype=float)


def torque_power(torque_N: np.ndarray, Omega: np.ndarray, g) -> float:
    """Power of an affine torque against a spatial affine velocity."""
    g = _unwrap_metric(g)
    return float(np.trace(torque_N @ g @ Omega))


def frame_transform_torque(torque: Torque, frame, g) -> Torque:
    """Re-express a torque in the polar-rotator or two-polar principal frame.

    With polar factors, N_bar = A N_hat A^T carries the components of N in
    the orthonormal frame co-moving with the rotator.  With two-polar
    factors, N_tilde = L^-1 (N g) L carries the mixed components in the
    principal frame.  The factors must decompose the same placement the
    torque was evaluated at.
    """
    g = _unwrap_metric(g)
    phi = torque.phi
    scale = max(1.0, float(abs(phi).max()))
    if isinstance(frame, PolarFactors):
        recon = frame.U @ frame.A
        if abs(recon - phi).max() > FRAME_MATCH_RTOL * scale:
            raise FrameMismatchError("polar factors do not reconstruct the torque's placement")
        N_bar = frame.A @ torque.N_hat @ frame.A.T
        return Torque(N=torque.N, N_hat=torque.N_hat, phi=phi, N_bar=N_bar, N_tilde=torque.N_tilde)
    if isinstance(frame, TwoPolarFactors):
        recon = frame.L @ frame.D @ np.linalg.inv(frame.R)
        if abs(recon - phi).max() > FRAME_MATCH_RTOL * scale:
            raise FrameMismatchError("two-polar factors do not reconstruct the torque's placement")
        N_tilde = np.linalg.solve(frame.L, torque.N @ g @ frame.L)
        return Torque(N=torque.N, N_hat=torque.N_hat, phi=phi, N_bar=torque.N_bar, N_tilde=N_tilde)
    raise FrameMismatchError(f"unsupported frame type {type(frame).__name__}")


# ---------------------------------------------------------------------------
# Reduced-frame torques (inputs to the reduced integration schemes)
# ---------------------------------------------------------------------------

def polar_frame_torque(A: np.ndarray, Adot: np.ndarray, force: ForceModel, eta) -> np.ndarray:
    """Rotator-frame torque N_bar(A, Adot) of the built-in isotropic models.

    Spatial isotropy makes N_bar independent of the rotator configuration:
    the elastic part is sum_a B_a A^(2a) (indices raised with eta^-1) and
    the viscous part depends on A, Adot only.
    """
    force.require_isotropic()
    eta = _unwrap_metric(eta)
    eta_inv = np.linalg.inv(eta)
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    N_bar = np.zeros((n, n))
    A2 = A @ A
    if force.potential is not None:
        traces = np.empty(n)
        power = np.eye(n)
        for k in range(n):
            power = power @ A2
            traces[k] = np.trace(power)
        B = elastic_coefficients(force.potential, traces)
        power = np.eye(n)
        for a in range(n):
            power = power @ A2
            N_bar += B[a] * power @ eta_inv
    if force.has_viscosity:
        det = np.linalg.det(A)
        if det <= 0.0:
            raise NegativeDeterminantError("stretch factor must have positive determinant")
        A_inv = np.linalg.inv(A)
        AdAi = Adot @ A_inv
        N_bar += -force.V0 * det * (
            force.nu * (AdAi + A_inv @ Adot)
            + (force.zeta - 2.0 * force.nu / n) * np.trace(AdAi) * np.eye(n)
        ) @ eta_inv
    return N_bar


def twopolar_frame_torque(
    D: np.ndarray, Ddot: np.ndarray, chi: np.ndarray, theta: np.ndarray, force: ForceModel
) -> np.ndarray:
    """Principal-frame torque N_tilde of the built-in doubly isotropic models.

    Double isotropy removes all frame dependence: the elastic part is
    diagonal in the stretches, sum_a B_a D^(2a), and the viscous part uses
    the principal-frame affine velocity chi + Ddot D^-1 - D theta D^-1.
    """
    force.require_isotropic()
    D = np.asarray(D, dtype=float)
    Q = np.diag(D)
    n = Q.size
    N_tilde = np.zeros((n, n))
    if force.potential is not None:
        traces = np.array([np.sum(Q ** (2 * k)) for k in range(1, n + 1)])
        B = elastic_coefficients(force.potential, traces)
        for a in range(n):
            N_tilde += B[a] * np.diag(Q ** (2 * (a + 1)))
    if force.has_viscosity:
        det = np.prod(Q)
        if det <= 0.0:
            raise NegativeDeterminantError("stretch factor must have positive determinant")
        D_inv = np.diag(1.0 / Q)
        Om = chi + Ddot @ D_inv - D @ theta @ D_inv
        N_tilde += -force.V0 * det * (
            force.nu * (Om + Om.T)
            + (force.zeta - 2.0 * force.nu / n) * np.trace(Om) * np.eye(n)
        )
    return N_tilde


# ---------------------------------------------------------------------------
# Free equations of motion
# ---------------------------------------------------------------------------

def balance_matrix(phi: np.ndarray, J: np.ndarray) -> np.ndarray:
    """Matrix of the linear map  vec(phiddot^T) -> vec(phi J phiddot^T)."""
    n = phi.shape[0]
    return np.kron(phi @ J, np.eye(n))


def solve_balance(phi: np.ndarray, J: np.ndarray, N: np.ndarray) -> np.ndarray:
    """Solve phi J phiddot^T = N for the placement acceleration.

    Assembled as a dense n^2 x n^2 system and LU-solved; the residual is
    checked afterwards so silent ill-conditioning cannot slip through.
    """
    n = phi.shape[0]
    M = balance_matrix(phi, J)
    vec = np.linalg.solve(M, N.reshape(-1))
    phiddot = vec.reshape(n, n).T
    residual = phi @ J @ phiddot.T - N
    limit = BALANCE_RESIDUAL_RTOL * np.linalg.norm(N) + BALANCE_RESIDUAL_ATOL
    if np.linalg.norm(residual) > limit:
        raise ArithmeticError(
            f"balance solve residual {np.linalg.norm(residual):.3e} exceeds {limit:.3e}"
        )
    return phiddot


def free_rhs(
    state: PhaseState, inertia: Inertia, force: ForceModel, g, eta, t: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Accelerations (xddot, phiddot) of unconstrained affine motion."""
    g = _unwrap_metric(g)
    eta = _unwrap_metric(eta)
    torque = evaluate_torque(state, force, g, eta, t)
    xddot = translational_force(state, force, t) / inertia.m
    phiddot = solve_balance(state.phi, inertia.J, torque.N)
    return xddot, phiddot
