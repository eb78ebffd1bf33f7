"""Metric-aware tensor algebra for affine configurations.

A configuration of an affinely-rigid body is an invertible placement
matrix ``phi`` mapping material axes to spatial axes, together with a
spatial metric ``g`` and a material metric ``eta``.  This module builds
the derived objects everything else rests on:

* Green tensor ``G = phi^T g phi`` and Cauchy tensor
  ``C = phi^-T eta phi^-1`` with their mixed forms ``Ghat = eta^-1 G``,
  ``Chat = g^-1 C`` and contravariant inverses,
* orthogonal deformation invariants ``I_k = tr(Ghat^k)``, principal
  stretches, and their logs,
* the metric polar splitting ``phi = U A = B U`` (U an (eta,g)-isometry,
  A eta-symmetric positive, B g-symmetric positive),
* the two-polar splitting ``phi = L D R^-1`` into two orthonormal frames
  and a diagonal stretch.

Everything is a plain value: inputs are never mutated and all functions
are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .errors import SingularPlacementError

# SPD acceptance: smallest eigenvalue must exceed this fraction of the largest.
SPD_RTOL = 1e-12
# Placement is rejected as singular when |det phi| < SINGULAR_RTOL * ||phi||^n.
SINGULAR_RTOL = 1e-12
# Relative gap under which two stretches count as degenerate.
DEGENERATE_RTOL = 1e-8
SYMMETRY_ATOL = 1e-10


def _as_square(M, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {M.shape}")
    return M


@dataclass(frozen=True)
class Metric:
    """Symmetric positive-definite metric on an n-dimensional space."""

    matrix: np.ndarray

    def __post_init__(self):
        M = _as_square(self.matrix, "metric")
        if not np.allclose(M, M.T, atol=SYMMETRY_ATOL * max(1.0, abs(M).max())):
            raise ValueError("metric must be symmetric")
        w = np.linalg.eigvalsh(0.5 * (M + M.T))
        if w[0] <= SPD_RTOL * w[-1] or w[-1] <= 0.0:
            raise ValueError("metric must be positive definite")
        object.__setattr__(self, "matrix", 0.5 * (M + M.T))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)

    @classmethod
    def identity(cls, n: int) -> "Metric":
        return cls(np.eye(n))


@dataclass(frozen=True)
class Placement:
    """Invertible linear part of an affine configuration (material -> spatial)."""

    phi: np.ndarray

    def __post_init__(self):
        phi = _as_square(self.phi, "placement")
        check_invertible(phi)
        object.__setattr__(self, "phi", phi.copy())

    @property
    def dim(self) -> int:
        return self.phi.shape[0]


def check_invertible(phi: np.ndarray) -> None:
    """Reject placements with |det phi| below the singularity threshold."""
    phi = np.asarray(phi, dtype=float)
    n = phi.shape[0]
    det = np.linalg.det(phi)
    norm = np.linalg.norm(phi)
    if det == 0.0 or abs(det) < SINGULAR_RTOL * norm**n:
        raise SingularPlacementError(
            f"placement is numerically singular (|det|={abs(det):.3e}, ||phi||={norm:.3e})"
        )


def _unwrap_phi(phi) -> np.ndarray:
    arr = phi.phi if isinstance(phi, Placement) else _as_square(phi, "placement")
    check_invertible(arr)
    return arr


def _unwrap_metric(m) -> np.ndarray:
    return m.matrix if isinstance(m, Metric) else Metric(m).matrix


@dataclass(frozen=True)
class DeformationTensors:
    """Green and Cauchy tensors of a placement, with mixed forms and inverses.

    ``G`` and ``C`` are covariant, ``Ginv``/``Cinv`` their contravariant
    inverses (distinct objects from the index-raised tensors), and
    ``Ghat = eta^-1 G``, ``Chat = g^-1 C`` the mixed forms whose traces
    produce the deformation invariants.
    """

    G: np.ndarray
    C: np.ndarray
    Ghat: np.ndarray
    Chat: np.ndarray
    Ginv: np.ndarray
    Cinv: np.ndarray


@dataclass(frozen=True)
class InvariantSet:
    """Orthogonal deformation invariants.

    ``I[k-1] = tr(Ghat^k)`` for k = 1..n, ``lam`` the eigenvalues of Ghat
    sorted descending, ``Q = sqrt(lam)`` the principal stretches and
    ``q = log(Q)`` their logs.
    """

    I: np.ndarray
    lam: np.ndarray
    Q: np.ndarray
    q: np.ndarray


@dataclass(frozen=True)
class PolarFactors:
    """Polar splitting phi = U A = B U.

    U is an (eta, g)-isometry (U^T g U = eta), A is eta-symmetric positive
    definite, B is g-symmetric positive definite, and A = U^-1 B U.
    """

    U: np.ndarray
    A: np.ndarray
    B: np.ndarray


@dataclass(frozen=True)
class TwoPolarFactors:
    """Two-polar splitting phi = L D R^-1.

    Columns of L are g-orthonormal, columns of R are eta-orthonormal, and
    D is diagonal positive with the principal stretches sorted descending.
    ``degenerate`` flags a (near-)repeated stretch, in which case the
    eigenframes are an arbitrary orthonormal gauge of the eigenspaces.
    """

    L: np.ndarray
    D: np.ndarray
    R: np.ndarray
    degenerate: bool = False

    @property
    def Q(self) -> np.ndarray:
        return np.diag(self.D)


def deformation_tensors(phi, g, eta) -> DeformationTensors:
    """Green and Cauchy deformation tensors of a placement.

    G = phi^T g phi pulls the spatial metric back to the body;
    C = phi^-T eta phi^-1 pushes the material metric forward.
    """
    phi = _unwrap_phi(phi)
    g = _unwrap_metric(g)
    eta = _unwrap_metric(eta)
    phi_inv = np.linalg.inv(phi)
    G = phi.T @ g @ phi
    C = phi_inv.T @ eta @ phi_inv
    return DeformationTensors(
        G=G,
        C=C,
        Ghat=np.linalg.inv(eta) @ G,
        Chat=np.linalg.inv(g) @ C,
        Ginv=np.linalg.inv(G),
        Cinv=np.linalg.inv(C),
    )


def deformation_invariants(tensors: DeformationTensors) -> InvariantSet:
    """Traces of powers of the mixed Green tensor, and principal stretches."""
    Ghat = tensors.Ghat
    n = Ghat.shape[0]
    lam = np.sort(np.linalg.eigvals(Ghat).real)[::-1]
    power = np.eye(n)
    traces = np.empty(n)
    for k in range(n):
        power = power @ Ghat
        traces[k] = np.trace(power)
    Q = np.sqrt(lam)
    return InvariantSet(I=traces, lam=lam, Q=Q, q=np.log(Q))


def invariants_of(phi, g, eta) -> InvariantSet:
    """Convenience wrapper: invariants straight from a placement."""
    return deformation_invariants(deformation_tensors(phi, g, eta))


def _metric_sqrt_factor(metric: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Upper-triangular E with metric = E^T E, and its inverse."""
    E = np.linalg.cholesky(metric).T
    return E, np.linalg.inv(E)


def polar_decompose(phi, g, eta) -> PolarFactors:
    """Metric polar splitting phi = U A = B U.

    A is the eta-selfadjoint square root of Ghat = eta^-1 G, computed
    spectrally; U = phi A^-1 is then an (eta, g)-isometry and B = U A U^-1
    the g-symmetric left factor.  Both splittings are unique.
    """
    phi = _unwrap_phi(phi)
    g = _unwrap_metric(g)
    eta = _unwrap_metric(eta)
    G = phi.T @ g @ phi
    E, Einv = _metric_sqrt_factor(eta)
    M = Einv.T @ G @ Einv  # symmetric SPD similarity image of Ghat
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    if w[0] <= SPD_RTOL * w[-1]:
        raise SingularPlacementError("Green tensor is not positive definite")
    sqrt_M = (V * np.sqrt(w)) @ V.T
    A = Einv @ sqrt_M @ E
    U = phi @ np.linalg.inv(A)
    B = U @ A @ np.linalg.inv(U)
    return PolarFactors(U=U, A=A, B=B)


def two_polar_decompose(phi, g, eta) -> TwoPolarFactors:
    """Two-polar splitting phi = L D R^-1.

    Columns of R are eta-orthonormal eigenvectors of Ghat (descending
    eigenvalues), D carries the square roots, and L = phi R D^-1 is then
    automatically g-orthonormal and diagonalizes the mixed Cauchy tensor
    with reciprocal eigenvalues.

    Gauge fixing: eigenvalues sorted descending; each R column is flipped
    so its first significant entry is positive; L is derived from R, which
    makes the reconstruction exact.  A (near-)repeated stretch leaves the
    eigenframe gauge-arbitrary and is reported via ``degenerate``.
    """
    phi = _unwrap_phi(phi)
    g = _unwrap_metric(g)
    eta = _unwrap_metric(eta)
    G = phi.T @ g @ phi
    lam, R = eigh(0.5 * (G + G.T), eta)
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    R = R[:, order]
    if lam[-1] <= SPD_RTOL * lam[0]:
        raise SingularPlacementError("Green tensor is not positive definite")
    for a in range(R.shape[1]):
        col = R[:, a]
        significant = np.nonzero(np.abs(col) > 1e-12 * np.abs(col).max())[0]
        if col[significant[0]] < 0.0:
            R[:, a] = -col
    Q = np.sqrt(lam)
    D = np.diag(Q)
    L = phi @ R @ np.diag(1.0 / Q)
    gaps = np.abs(np.diff(lam))
    degenerate = bool(gaps.size and gaps.min() <= DEGENERATE_RTOL * lam[0])
    return TwoPolarFactors(L=L, D=D, R=R, degenerate=degenerate)


def project_isometry(phi, g, eta) -> np.ndarray:
    """Closest (eta, g)-isometry to phi: the U factor of the polar splitting.

    Used as a post-step stabilizer for metrically rigid motion; idempotent
    on matrices that already satisfy phi^T g phi = eta.
    """
    return polar_decompose(phi, g, eta).U
