"""Activation expectations C[i,j] = <phi(h_i) phi(h_j)> under a Gaussian prior.

Preactivations h are zero-mean Gaussian with covariance K.  For the scaled
error function phi(x) = erf(sqrt(pi)/2 x) (slope 1 at the origin) the
expectation has the closed form

    C[i,j] = 2/pi * arcsin( (pi/2) K[i,j] / sqrt((1 + pi/2 K[i,i]) (1 + pi/2 K[j,j])) )

implemented by `ErfKernel`.  `QuadratureKernel` evaluates the same
expectation for an arbitrary elementwise activation by tensor-product
Gauss-Hermite quadrature and serves as the independent oracle.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

from .errors import NonPsdInputError

# numerical guard for arcsin arguments that roundoff pushes past +-1
ARCSIN_CLAMP_TOL = 1e-12

_HALF_PI = np.pi / 2.0


def erf_activation(x):
    """The experimental activation phi(x) = erf(sqrt(pi)/2 x); phi'(0) = 1."""
    return erf(np.sqrt(np.pi) / 2.0 * x)


def validate_covariance(K: np.ndarray, sym_tol: float = 1e-12, psd_tol: float = -1e-10):
    """Raise NonPsdInputError unless K is symmetric and PSD within tolerance."""
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise NonPsdInputError("covariance must be a square matrix")
    asym = float(np.max(np.abs(K - K.T))) if K.size else 0.0
    if asym > sym_tol * max(1.0, float(np.max(np.abs(K)))):
        raise NonPsdInputError(f"covariance asymmetric by {asym:.3e}")
    min_eig = float(np.linalg.eigvalsh(K).min())
    if min_eig < psd_tol * max(1.0, float(np.max(np.abs(K)))):
        raise NonPsdInputError(f"minimum eigenvalue {min_eig:.3e} below tolerance")
    return K


def _clamped_arcsin_arg(num, denom):
    z = num / denom
    bad = np.abs(z) > 1.0 + ARCSIN_CLAMP_TOL
    if np.any(bad):
        worst = float(np.max(np.abs(np.atleast_1d(z)[np.atleast_1d(bad)])))
        raise NonPsdInputError(f"arcsin argument {worst:.15g} exceeds 1 beyond tolerance")
    return np.clip(z, -1.0, 1.0)


class ErfKernel:
    """Closed-form expectation and derivatives for phi(x) = erf(sqrt(pi)/2 x)."""

    def c_matrix(self, K: np.ndarray) -> np.ndarray:
        """Elementwise C matrix for all node pairs."""
        K = np.asarray(K, dtype=np.float64)
        a = 1.0 + _HALF_PI * np.diag(K)
        denom = np.sqrt(np.outer(a, a))
        z = _clamped_arcsin_arg(_HALF_PI * K, denom)
        return (2.0 / np.pi) * np.arcsin(z)

    def c_value(self, K: np.ndarray, i: int, j: int) -> float:
        K = np.asarray(K, dtype=np.float64)
        a_i = 1.0 + _HALF_PI * K[i, i]
        a_j = 1.0 + _HALF_PI * K[j, j]
        z = _clamped_arcsin_arg(_HALF_PI * K[i, j], np.sqrt(a_i * a_j))
        return float((2.0 / np.pi) * np.arcsin(z))

    def c_scalar(self, k: float) -> float:
        """C(k) for a single node with variance k; the zero-distance map uses it."""
        return float((2.0 / np.pi) * np.arcsin(_HALF_PI * k / (1.0 + _HALF_PI * k)))

    def c_scalar_derivative(self, k: float) -> float:
        """d C(k) / dk for the scalar zero-distance map."""
        a = 1.0 + _HALF_PI * k
        z = _HALF_PI * k / a
        return float((2.0 / np.pi) * _HALF_PI / (a * a * np.sqrt(1.0 - z * z)))

    def linearization_coefficients(self, K: np.ndarray):
        """Partial derivatives of C with respect to the entries of K.

        Returns
        -------
        (P, Q, Dd)
            P[i,j] = dC[i,j]/dK[i,j] for i != j (diagonal of P is zero),
            Q[i,j] = dC[i,j]/dK[i,i] for i != j (note the asymmetry),
            Dd[i]  = dC[i,i]/dK[i,i].
        """
        K = np.asarray(K, dtype=np.float64)
        d = np.diag(K)
        a = 1.0 + _HALF_PI * d
        denom = np.sqrt(np.outer(a, a))
        z = _clamped_arcsin_arg(_HALF_PI * K, denom)
        under = 1.0 - z * z
        # the off-diagonal derivative genuinely diverges at |correlation| = 1
        if np.any(under <= 0.0):
            raise NonPsdInputError("kernel derivative diverges at |correlation| = 1")
        w = 1.0 / np.sqrt(under)

        P = (2.0 / np.pi) * _HALF_PI * w / denom
        Q = -(2.0 / np.pi) * w * z * _HALF_PI / (2.0 * a)[:, None]
        np.fill_diagonal(P, 0.0)
        np.fill_diagonal(Q, 0.0)

        z_d = _HALF_PI * d / a
        w_d = 1.0 / np.sqrt(1.0 - z_d * z_d)
        Dd = (2.0 / np.pi) * _HALF_PI * w_d / (a * a)
        return P, Q, Dd

    def c_derivative(self, K: np.ndarray, theta: int, phi_idx: int, gamma: int, delta: int) -> float:
        """Derivative of C[theta, phi] with respect to the unordered entry K[gamma, delta].

        Zero whenever C[theta, phi] does not depend on that entry.
        """
        gamma, delta = (gamma, delta) if gamma <= delta else (delta, gamma)
        P, Q, Dd = self.linearization_coefficients(K)
        if gamma != delta:
            if {gamma, delta} == {theta, phi_idx} and theta != phi_idx:
                return float(P[theta, phi_idx])
            return 0.0
        if theta == phi_idx:
            return float(Dd[theta]) if gamma == theta else 0.0
        if gamma == theta:
            return float(Q[theta, phi_idx])
        if gamma == phi_idx:
            return float(Q[phi_idx, theta])
        return 0.0


class QuadratureKernel:
    """Gauss-Hermite evaluation of the activation expectation for arbitrary phi.

    Uses a tensor-product rule over the two correlated preactivations after
    an eigenvalue-based change of variables, so degenerate (rank-one) 2x2
    covariance blocks are handled without a Cholesky failure.
    """

    def __init__(self, activation=erf_activation, n_points: int = 64):
        self.activation = activation
        self.n_points = int(n_points)
        nodes, weights = np.polynomial.hermite.hermgauss(self.n_points)
        self._nodes = nodes
        self._w2 = np.outer(weights, weights) / np.pi
        self._grid = np.stack(np.meshgrid(nodes, nodes, indexing="ij")).reshape(2, -1)

    def _pair_expectation(self, k_ii: float, k_ij: float, k_jj: float) -> float:
        cov = np.array([[k_ii, k_ij], [k_ij, k_jj]])
        lam, vec = np.linalg.eigh(cov)
        scale = max(1.0, abs(k_ii), abs(k_jj))
        if lam.min() < -1e-10 * scale:
            raise NonPsdInputError(f"2x2 covariance block has eigenvalue {lam.min():.3e}")
        factor = vec * np.sqrt(np.clip(lam, 0.0, None))
        pts = np.sqrt(2.0) * (factor @ self._grid)
        vals = self.activation(pts[0]) * self.activation(pts[1])
        return float(np.sum(self._w2.ravel() * vals))

    def c_value(self, K: np.ndarray, i: int, j: int) -> float:
        K = np.asarray(K, dtype=np.float64)
        return self._pair_expectation(K[i, i], K[i, j], K[j, j])

    def c_matrix(self, K: np.ndarray) -> np.ndarray:
        K = np.asarray(K, dtype=np.float64)
        n = K.shape[0]
        C = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                C[i, j] = C[j, i] = self._pair_expectation(K[i, i], K[i, j], K[j, j])
        return C

    def c_scalar(self, k: float) -> float:
        return self._pair_expectation(k, k, k)

    def c_scalar_derivative(self, k: float, step: float = 1e-6) -> float:
        h = step * max(1.0, abs(k))
        lo = max(k - h, 0.0)
        return (self.c_scalar(k + h) - self.c_scalar(lo)) / (k + h - lo)

    def c_derivative(
        self, K: np.ndarray, theta: int, phi_idx: int, gamma: int, delta: int, step: float = 1e-6
    ) -> float:
        """Central finite difference on the unordered entry K[gamma, delta]."""
        gamma, delta = (gamma, delta) if gamma <= delta else (delta, gamma)
        if not ({gamma, delta} & {theta, phi_idx}):
            return 0.0
        K = np.asarray(K, dtype=np.float64)
        h = step * max(1.0, float(np.max(np.abs(K))))
        Kp = K.copy()
        Km = K.copy()
        Kp[gamma, delta] += h
        Km[gamma, delta] -= h
        if gamma != delta:
            Kp[delta, gamma] += h
            Km[delta, gamma] -= h
        return (self.c_value(Kp, theta, phi_idx) - self.c_value(Km, theta, phi_idx)) / (2.0 * h)

    def linearization_coefficients(self, K: np.ndarray):
        """Finite-difference analogue of ErfKernel.linearization_coefficients."""
        K = np.asarray(K, dtype=np.float64)
        n = K.shape[0]
        P = np.zeros((n, n))
        Q = np.zeros((n, n))
        Dd = np.zeros(n)
        for i in range(n):
            Dd[i] = self.c_derivative(K, i, i, i, i)
            for j in range(n):
                if i == j:
                    continue
                P[i, j] = self.c_derivative(K, i, j, i, j)
                Q[i, j] = self.c_derivative(K, i, j, i, i)
        return P, Q, Dd


Kernel = ErfKernel | QuadratureKernel
