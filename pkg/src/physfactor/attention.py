"""Factorize-and-excite attention over voxel embeddings.

Pipeline: mix channels and rectify so the embedding is non-negative,
flatten to a (time x features) matrix, compute a low-rank approximation
with one of three solvers, map it back to the embedding shape, mix and
rectify again, then excite the original embedding with the result:

    excited = eps + instance_norm(eps * attended)

Variants:
    fsam  unconstrained NMF of the flattened embedding.
    grbf  NMF constrained to the span of a Gaussian bump bank, which
          smooths the temporal profile of the attention.
    tsfm  NMF constrained to a single target-signal column, so every
          attention trace is a rescaled copy of the target.

The factorization is a solver run, not a differentiable layer; callers
must treat `attended` as a constant with respect to any gradients.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .factorize import (
    DENOM_GUARD,
    FactorizationResult,
    constrained_nmf_mu,
    grbf_basis,
    nmf_mu,
    target_basis,
)
from .tensors import (
    EmbeddingMatrix,
    VoxelEmbedding,
    flatten_to_matrix,
    hadamard,
    instance_norm,
    unflatten_to_voxel,
)

VARIANTS = ("fsam", "grbf", "tsfm")


@dataclass(frozen=True)
class AttentionConfig:
    """Configuration of one attention module.

    pre_mix and post_mix are kappa x kappa channel mixing matrices (the
    1x1x1 convolution weights around the factorization); None means
    identity, which isolates the factorization behavior.
    """

    variant: str = "fsam"
    rank: int = 8
    iterations: int = 4
    epsilon: float = DENOM_GUARD
    grbf_sigma: float | None = None
    grbf_delta_t: int | None = None
    pre_mix: np.ndarray | None = None
    post_mix: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown attention variant {self.variant!r}, expected one of {VARIANTS}")
        if self.iterations < 1:
            raise DomainError("attention iterations must be >= 1")
        if self.variant == "grbf" and (self.grbf_sigma is None or self.grbf_delta_t is None):
            raise DomainError("grbf variant needs grbf_sigma and grbf_delta_t")


@dataclass(frozen=True)
class AttentionOutput:
    attended: VoxelEmbedding
    excited: VoxelEmbedding
    factorization: FactorizationResult


def _mix_weights(w, kappa, name):
    if w is None:
        return None
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (kappa, kappa):
        raise DomainError(f"{name} must be {kappa}x{kappa}, got {w.shape}")
    return w


def channel_mix_relu(eps, weights=None):
    """Per-voxel channel mixing followed by ReLU.

    out[t, c', a, b] = max(0, sum_c weights[c', c] * eps[t, c, a, b]).
    weights=None applies the identity mix (plain rectification).
    """
    w = _mix_weights(weights, eps.kappa, "mix weights")
    x = eps.data
    if w is not None:
        x = np.einsum("dc,tcab->tdab", w, x)
    return VoxelEmbedding(np.maximum(x, 0.0))


def excite(eps, attended):
    """Residual excitation: eps + instance_norm(eps * attended)."""
    return VoxelEmbedding(eps.data + instance_norm(hadamard(eps, attended)).data)


def compute_attention(eps, cfg, target=None):
    """Run the full factorize-and-excite pipeline on one embedding.

    Args:
        eps: VoxelEmbedding of shape (tau, kappa, alpha, beta).
        cfg: AttentionConfig selecting the variant and solver knobs.
        target: sample vector of length tau; required by tsfm, ignored
            by fsam and grbf.

    Returns:
        AttentionOutput carrying the back-mapped low-rank attention, the
        excited embedding and the solver result (with its error trace).
    """
    pre = channel_mix_relu(eps, cfg.pre_mix)
    v = flatten_to_matrix(pre)

    if cfg.variant == "fsam":
        res = nmf_mu(v, cfg.rank, cfg.iterations, cfg.seed, guard=cfg.epsilon)
    elif cfg.variant == "grbf":
        basis = grbf_basis(eps.tau, cfg.grbf_sigma, cfg.grbf_delta_t)
        res = constrained_nmf_mu(v, basis.phi, cfg.rank, cfg.iterations, cfg.seed, guard=cfg.epsilon)
    else:  # tsfm
        if target is None:
            raise DomainError("tsfm attention needs a target signal")
        constraint = target_basis(target, eps.tau)
        res = constrained_nmf_mu(v, constraint.basis, cfg.rank, cfg.iterations, cfg.seed, guard=cfg.epsilon)

    back = unflatten_to_voxel(EmbeddingMatrix(res.low_rank), eps.shape)
    attended = channel_mix_relu(back, cfg.post_mix)
    return AttentionOutput(attended, excite(eps, attended), res)


def csim_map(eps, target):
    """Absolute cosine similarity of every voxel trace with a target.

    For each (c, a, b) the temporal vector eps[:, c, a, b] is compared
    with the target; the result lies in [0, 1]. Zero-norm traces map to
    0 rather than dividing by zero.
    """
    y = np.asarray(target, dtype=np.float64).ravel()
    if y.size != eps.tau:
        raise DomainError(f"target length {y.size} does not match tau = {eps.tau}")
    ynorm = np.linalg.norm(y)
    if ynorm == 0.0:
        raise DomainError("target signal is all zeros")
    x = eps.data
    num = np.abs(np.tensordot(y, x, axes=([0], [0])))   # (c, a, b)
    den = np.linalg.norm(x, axis=0) * ynorm
    out = np.zeros_like(num)
    nz = den > 0
    out[nz] = num[nz] / den[nz]
    return np.minimum(out, 1.0)
