"""Layer-to-layer dynamics of the GCN Gaussian-process covariance.

One layer maps the preactivation covariance K to

    K' = sigma_b^2 * 1 1^T + sigma_w^2 * A C(K) A^T

where C(K) is the elementwise activation expectation from `kernels`.  A
state with constant entries (all node features identical, "zero distance")
is always a fixed point because the shift operator has unit row sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DimensionMismatchError, NoConvergenceError, NotConvergedError
from .graphs import ShiftOperator
from .kernels import ErfKernel, Kernel

# feature distance below which a state counts as oversmoothed (zero distance)
ZERO_DISTANCE_MU = 1e-5

DEFAULT_MAX_LAYERS = 4000
DEFAULT_TOL = 1e-12


@dataclass
class GpHyper:
    """Prior hyperparameters of the network.

    sigma_w2 is the weight variance (before fan-in scaling), sigma_b2 the
    bias variance, sigma_ro the readout noise standard deviation.
    """

    sigma_w2: float
    sigma_b2: float = 0.0
    sigma_ro: float = 0.01
    kernel: Kernel = field(default_factory=ErfKernel)

    def __post_init__(self):
        if self.sigma_w2 < 0:
            raise ValueError("sigma_w2 must be nonnegative")
        if self.sigma_b2 < 0:
            raise ValueError("sigma_b2 must be nonnegative")
        if self.sigma_ro < 0:
            raise ValueError("sigma_ro must be nonnegative")


@dataclass
class GpState:
    """Covariance of the preactivations at a given layer."""

    layer: int
    K: np.ndarray


def step(state: GpState, A: ShiftOperator, hyper: GpHyper) -> GpState:
    """Advance the covariance by one layer."""
    K_next = apply_map(state.K, A, hyper)
    return GpState(layer=state.layer + 1, K=K_next)


def apply_map(K: np.ndarray, A: ShiftOperator, hyper: GpHyper) -> np.ndarray:
    """The covariance map itself, without the layer bookkeeping."""
    C = hyper.kernel.c_matrix(K)
    M = A.matrix
    K_next = hyper.sigma_b2 + hyper.sigma_w2 * (M @ C @ M.T)
    return 0.5 * (K_next + K_next.T)


def input_covariance(features: np.ndarray, A: ShiftOperator, hyper: GpHyper) -> GpState:
    """First-layer preactivation covariance for a concrete input matrix.

    The feature Gram matrix is normalized by the input dimension so GP
    quantities stay finite, giving K1 = sigma_b^2 + sigma_w^2 A (X X^T / d0) A^T.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != A.n_nodes:
        raise DimensionMismatchError(
            f"features must be (n_nodes, d0); got {features.shape} for {A.n_nodes} nodes"
        )
    gram = features @ features.T / features.shape[1]
    M = A.matrix
    K1 = hyper.sigma_b2 + hyper.sigma_w2 * (M @ gram @ M.T)
    return GpState(layer=1, K=0.5 * (K1 + K1.T))


def relax(
    A: ShiftOperator,
    hyper: GpHyper,
    K0: np.ndarray,
    max_layers: int = DEFAULT_MAX_LAYERS,
    tol: float = DEFAULT_TOL,
):
    """Iterate the map until the max-norm update drops below tol.

    Returns (K, layers_used, residual, converged) without raising, so
    callers can decide how to treat a exhausted layer budget.
    """
    K = np.asarray(K0, dtype=np.float64).copy()
    residual = np.inf
    for layer in range(1, max_layers + 1):
        K_next = apply_map(K, A, hyper)
        residual = float(np.max(np.abs(K_next - K)))
        K = K_next
        if residual < tol:
            return K, layer, residual, True
    return K, max_layers, residual, False


def find_equilibrium(
    A: ShiftOperator,
    hyper: GpHyper,
    K0: np.ndarray,
    max_layers: int = DEFAULT_MAX_LAYERS,
    tol: float = DEFAULT_TOL,
) -> tuple[np.ndarray, int]:
    """Fixed point of the covariance map, reached by forward iteration.

    Raises
    ------
    NotConvergedError
        If the update is still larger than tol after max_layers layers.
    """
    if max_layers < 1:
        raise ValueError("max_layers must be at least 1")
    K, layers, residual, converged = relax(A, hyper, K0, max_layers, tol)
    if not converged:
        raise NotConvergedError(f"no equilibrium within {max_layers} layers", residual)
    return K, layers


def run_layers(A: ShiftOperator, hyper: GpHyper, K0: np.ndarray, n_layers: int) -> np.ndarray:
    """Apply exactly n_layers covariance updates."""
    K = np.asarray(K0, dtype=np.float64).copy()
    for _ in range(n_layers):
        K = apply_map(K, A, hyper)
    return K


def scalar_equilibrium(hyper: GpHyper) -> float:
    """Largest nonnegative solution of k = sigma_b^2 + sigma_w^2 C(k).

    This is the variance of the zero-distance manifold: on states with
    constant covariance entries the full map reduces to this scalar map
    because the shift operator rows sum to one.
    """
    kernel = hyper.kernel
    sw2, sb2 = hyper.sigma_w2, hyper.sigma_b2

    if sw2 == 0.0:
        return sb2
    # with no bias the map is concave with slope sw2 at the origin: zero is
    # the largest root iff sw2 <= 1 (for activations with unit slope at 0)
    slope0 = sw2 * _slope_at_zero(kernel)
    if sb2 == 0.0 and slope0 <= 1.0:
        return 0.0

    def f(k):
        return k - sb2 - sw2 * kernel.c_scalar(k)

    hi = sb2 + sw2 + 1.0  # C < 1, so every fixed point lies below this
    # walk down from hi to bracket the largest root from the right
    lo = hi
    for _ in range(200):
        lo = 0.5 * lo
        if sb2 == 0.0:
            lo = max(lo, 1e-12)
        if f(lo) < 0.0:
            return float(brentq(f, lo, hi, xtol=1e-15, maxiter=200))
        if lo <= 1e-12:
            break
    raise NoConvergenceError(
        f"could not bracket the scalar fixed point (sigma_w2={sw2}, sigma_b2={sb2})"
    )


def _slope_at_zero(kernel: Kernel) -> float:
    if isinstance(kernel, ErfKernel):
        return 1.0
    h = 1e-5
    return (kernel.c_scalar(h) - kernel.c_scalar(0.0)) / h


@dataclass
class DistanceReport:
    """Pairwise squared feature distances and their graph-wide average.

    ``pairwise[a, b] = C'[a,a] + C'[b,b] - 2 C'[a,b]`` with C' the normalized
    feature Gram matrix, and ``mu`` is the strict-upper-triangle sum divided
    by 2 N (N - 1).
    """

    pairwise: np.ndarray
    mu: float


def gram_distances(gram: np.ndarray) -> DistanceReport:
    """Distance report from a normalized scalar-product matrix."""
    gram = np.asarray(gram, dtype=np.float64)
    d = np.diag(gram)
    pairwise = d[:, None] + d[None, :] - 2.0 * gram
    np.fill_diagonal(pairwise, 0.0)
    n = gram.shape[0]
    if n > 1:
        mu = float(np.sum(np.triu(pairwise, k=1)) / (2.0 * n * (n - 1)))
    else:
        mu = 0.0
    return DistanceReport(pairwise=pairwise, mu=mu)


def gp_distances(K: np.ndarray, kernel: Kernel | None = None) -> DistanceReport:
    """Distances predicted by the GP: the Gram matrix is C evaluated at K."""
    kernel = kernel or ErfKernel()
    return gram_distances(kernel.c_matrix(K))


def empirical_distances(features: np.ndarray) -> DistanceReport:
    """Distances of a concrete feature matrix, normalized by feature count."""
    features = np.asarray(features, dtype=np.float64)
    gram = features @ features.T / features.shape[1]
    return gram_distances(gram)


def mu_trajectory(A: ShiftOperator, hyper: GpHyper, K0: np.ndarray, n_layers: int) -> np.ndarray:
    """GP-predicted feature distance mu at layers 1..n_layers.

    Entry l-1 is mu evaluated on the covariance of layer l, with K0 taken
    as the layer-1 covariance.
    """
    K = np.asarray(K0, dtype=np.float64).copy()
    out = np.empty(n_layers)
    for l in range(n_layers):
        if l > 0:
            K = apply_map(K, A, hyper)
        out[l] = gp_distances(K, hyper.kernel).mu
    return out
