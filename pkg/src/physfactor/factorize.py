"""Multiplicative-update NMF solvers and constraint basis constructors.

Two solvers are provided. `nmf_mu` minimizes ||V - W H||_F over
non-negative W, H with the classic multiplicative updates. The
constrained variant keeps a fixed non-negative basis B and optimizes
||V - B P Q||_F over non-negative P, Q, so every column of the
reconstruction stays inside the column span of B. The basis can be a
bank of Gaussian radial bumps (smoothness constraint) or a single
normalized target signal column (target-signal constraint).

Solutions are not unique, so both solvers are seeded and deterministic:
same input, rank, iterations and seed gives bitwise identical factors.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .tensors import EmbeddingMatrix, Waveform

# Additive guard in every update denominator. Small enough not to move
# fixed points visibly, large enough to keep zero columns from dividing
# by zero.
DENOM_GUARD = 1e-6


@dataclass(frozen=True)
class FactorPair:
    """Non-negative factors. w is M x L (or K x L inner gains when a
    basis is involved), h is L x N."""

    w: np.ndarray
    h: np.ndarray
    rank: int


@dataclass(frozen=True)
class GrbfBasis:
    """Bank of Gaussian bumps, one column per center, spaced delta_t samples."""

    phi: np.ndarray
    sigma: float
    delta_t: int
    k: int


@dataclass(frozen=True)
class TargetConstraint:
    """Single-column constraint built from a target signal, min-max
    normalized into [floor, 1]."""

    basis: np.ndarray
    floor: float


@dataclass(frozen=True)
class FactorizationResult:
    factors: FactorPair
    low_rank: np.ndarray
    error_trace: np.ndarray
    iterations: int
    seed: int


def _check_nonneg(a, name):
    if a.min() < 0:
        raise DomainError(f"{name} must be non-negative")


def _as_matrix(v):
    if isinstance(v, EmbeddingMatrix):
        return v.data
    return np.asarray(v, dtype=np.float64)


def nmf_mu(v, rank, iterations=4, seed=0, guard=DENOM_GUARD):
    """Factor a non-negative matrix V into W (M x L) times H (L x N).

    Updates (Frobenius objective):
        H <- H * (W^T V) / (W^T W H + guard)
        W <- W * (V H^T) / (W H H^T + guard)

    Factors are initialized uniformly on (0, 1] from a seeded generator.
    The Frobenius reconstruction error is recorded after each full
    iteration and is non-increasing up to the guard's perturbation.

    Args:
        v: non-negative EmbeddingMatrix or 2D array.
        rank: number of components L, 1 <= L <= min(M, N).
        iterations: full update sweeps, >= 1.
        seed: RNG seed for the factor init.
        guard: additive denominator guard.

    Returns:
        FactorizationResult with low_rank = W @ H.
    """
    a = _as_matrix(v)
    if a.ndim != 2:
        raise DomainError("nmf_mu expects a 2D matrix")
    _check_nonneg(a, "nmf_mu input")
    m, n = a.shape
    if not 1 <= rank <= min(m, n):
        raise DomainError(f"rank must satisfy 1 <= rank <= min(M, N) = {min(m, n)}, got {rank}")
    if iterations < 1:
        raise DomainError("iterations must be >= 1")

    rng = np.random.default_rng(seed)
    w = 1.0 - rng.random((m, rank))    # uniform on (0, 1]
    h = 1.0 - rng.random((rank, n))

    trace = np.empty(iterations)
    for it in range(iterations):
        h *= (w.T @ a) / (w.T @ w @ h + guard)
        w *= (a @ h.T) / (w @ h @ h.T + guard)
        trace[it] = np.linalg.norm(a - w @ h)

    low = w @ h
    w.flags.writeable = False
    h.flags.writeable = False
    low.flags.writeable = False
    trace.flags.writeable = False
    return FactorizationResult(FactorPair(w, h, rank), low, trace, iterations, seed)


def constrained_nmf_mu(v, basis, rank, iterations=4, seed=0, guard=DENOM_GUARD):
    """Factor V as B P Q with B fixed and P (K x L), Q (L x N) non-negative.

    Substituting W = B P into the standard updates gives
        P <- P * (B^T V Q^T) / (B^T B P Q Q^T + guard)
        Q <- Q * (P^T B^T V) / (P^T B^T B P Q + guard)
    which are valid multiplicative updates because B is non-negative.
    Every column of the reconstruction B P Q lies in span(B).

    Args:
        v: non-negative EmbeddingMatrix or 2D array (M x N).
        basis: fixed non-negative M x K matrix (bump bank or target column).
        rank: inner rank L >= 1.
        iterations: full update sweeps, >= 1.
        seed: RNG seed for the factor init.
        guard: additive denominator guard.
    """
    a = _as_matrix(v)
    if a.ndim != 2:
        raise DomainError("constrained_nmf_mu expects a 2D matrix")
    b = np.asarray(basis, dtype=np.float64)
    if b.ndim == 1:
        b = b[:, None]
    _check_nonneg(a, "constrained_nmf_mu input")
    _check_nonneg(b, "constraint basis")
    if b.shape[0] != a.shape[0]:
        raise DomainError(
            f"basis has {b.shape[0]} rows but the matrix has {a.shape[0]}"
        )
    if rank < 1:
        raise DomainError("rank must be >= 1")
    if iterations < 1:
        raise DomainError("iterations must be >= 1")

    k = b.shape[1]
    n = a.shape[1]
    rng = np.random.default_rng(seed)
    p = 1.0 - rng.random((k, rank))
    q = 1.0 - rng.random((rank, n))

    btb = b.T @ b          # (k, k)
    btv = b.T @ a          # (k, n)
    trace = np.empty(iterations)
    for it in range(iterations):
        p *= (btv @ q.T) / (btb @ p @ q @ q.T + guard)
        q *= (p.T @ btv) / (p.T @ btb @ p @ q + guard)
        trace[it] = np.linalg.norm(a - b @ p @ q)

    low = b @ p @ q
    p.flags.writeable = False
    q.flags.writeable = False
    low.flags.writeable = False
    trace.flags.writeable = False
    return FactorizationResult(FactorPair(p, q, rank), low, trace, iterations, seed)


def grbf_basis(m, sigma, delta_t):
    """Build the M x K Gaussian radial bump bank.

    Entry (row, k) = exp(-(row - k*delta_t)^2 / (2 sigma^2)) with
    k = 0..K-1 and K = floor((m - 1)/delta_t) + 1, so the last center
    still falls inside the signal.
    """
    m = int(m)
    delta_t = int(delta_t)
    if m < 2:
        raise DomainError(f"grbf_basis needs m >= 2, got {m}")
    if delta_t < 1:
        raise DomainError(f"grbf_basis needs delta_t >= 1, got {delta_t}")
    if not sigma > 0:
        raise DomainError(f"grbf_basis needs sigma > 0, got {sigma}")
    k = (m - 1) // delta_t + 1
    rows = np.arange(m)[:, None]
    centers = np.arange(k)[None, :] * delta_t
    phi = np.exp(-((rows - centers) ** 2) / (2.0 * sigma ** 2))
    phi.flags.writeable = False
    return GrbfBasis(phi, float(sigma), delta_t, k)


def target_basis(y, m, floor=1e-3):
    """Turn a target signal into a single non-negative constraint column.

    The signal is min-max normalized onto [floor, 1]:
        basis = floor + (1 - floor) * (y - min y) / (max y - min y)
    A constant signal is rejected, it would make the constrained
    factorization degenerate.
    """
    if isinstance(y, Waveform):
        y = y.samples
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != int(m):
        raise DomainError(f"target length {y.size} does not match m = {m}")
    if not 0 < floor < 1:
        raise DomainError(f"floor must lie in (0, 1), got {floor}")
    lo, hi = y.min(), y.max()
    if hi == lo:
        raise DomainError("target signal is constant, cannot build a constraint")
    col = floor + (1.0 - floor) * (y - lo) / (hi - lo)
    col = col[:, None]
    col.flags.writeable = False
    return TargetConstraint(col, float(floor))
