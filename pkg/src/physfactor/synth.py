"""Deterministic generators for pulse-like signals, planted embeddings
and toy video clips. Everything here exists to give the oracle tests a
known ground truth."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .tensors import VideoClip, VoxelEmbedding, Waveform

PULSE_RATE_RANGE = (30.0, 220.0)     # plausible heart rates, beats/min
RESP_RATE_RANGE = (4.0, 40.0)        # plausible breathing rates, breaths/min


def _gen_tone(fs, rate_bpm, duration_s, harmonic_ratio, noise_sigma, seed, lo, hi):
    if not lo <= rate_bpm <= hi:
        raise DomainError(f"rate {rate_bpm} outside supported range [{lo}, {hi}] per minute")
    if duration_s < 1.0:
        raise DomainError(f"duration must be >= 1 s, got {duration_s}")
    if noise_sigma < 0:
        raise DomainError("noise_sigma must be >= 0")
    n = int(round(fs * duration_s))
    t = np.arange(n) / fs
    f0 = rate_bpm / 60.0
    x = np.sin(2 * np.pi * f0 * t) + harmonic_ratio * np.sin(2 * np.pi * 2 * f0 * t)
    if noise_sigma > 0:
        x = x + noise_sigma * np.random.default_rng(seed).normal(size=n)
    return Waveform(x, fs)


def gen_pulse(fs, rate_bpm, duration_s, harmonic_ratio=0.0, noise_sigma=0.0, seed=0):
    """Unit-amplitude fundamental plus an optional second harmonic and
    seeded Gaussian noise. Rate must lie in the cardiac range."""
    lo, hi = PULSE_RATE_RANGE
    return _gen_tone(fs, rate_bpm, duration_s, harmonic_ratio, noise_sigma, seed, lo, hi)


def gen_resp(fs, rate_bpm, duration_s, harmonic_ratio=0.0, noise_sigma=0.0, seed=0):
    """Same generator as gen_pulse but validated against the respiratory
    rate range."""
    lo, hi = RESP_RATE_RANGE
    return _gen_tone(fs, rate_bpm, duration_s, harmonic_ratio, noise_sigma, seed, lo, hi)


@dataclass(frozen=True)
class PlantSpec:
    """Recipe for an embedding with a signal planted at known coordinates.

    shape is (tau, kappa, alpha, beta); mask is an iterable of (c, a, b)
    coordinates that receive the signal; noise_sigma is the Gaussian
    noise level relative to the unit-amplitude signal.
    """

    shape: tuple
    mask: tuple
    signal: Waveform
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        shape = tuple(int(x) for x in self.shape)
        if len(shape) != 4 or min(shape) < 1:
            raise DomainError(f"PlantSpec shape must be 4 positive extents, got {self.shape}")
        mask = tuple((int(c), int(a), int(b)) for (c, a, b) in self.mask)
        if not mask:
            raise DomainError("PlantSpec mask must be non-empty")
        if len(set(mask)) != len(mask):
            raise DomainError("PlantSpec mask contains duplicate coordinates")
        _, kappa, alpha, beta = shape
        for (c, a, b) in mask:
            if not (0 <= c < kappa and 0 <= a < alpha and 0 <= b < beta):
                raise DomainError(f"planted coordinate {(c, a, b)} outside shape {shape}")
        if self.noise_sigma < 0:
            raise DomainError("noise_sigma must be >= 0")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "mask", mask)


def gen_planted_embedding(spec):
    """Build an embedding whose masked voxels carry the signal plus noise
    and whose remaining voxels are pure noise.

    The signal is scaled to unit peak amplitude, and the whole tensor is
    shifted by its global minimum afterwards so the result is
    non-negative (ready for the attention pipeline). Note the shift adds
    a constant to every trace; it is zero when the noiseless signal
    already has minimum 0.

    Returns:
        (VoxelEmbedding, boolean mask array over (kappa, alpha, beta)).
    """
    tau, kappa, alpha, beta = spec.shape
    y = spec.signal.samples
    if y.size != tau:
        raise DomainError(f"signal length {y.size} does not match tau = {tau}")
    peak = np.abs(y).max()
    if peak == 0:
        raise DomainError("planted signal is all zeros")
    y = y / peak

    rng = np.random.default_rng(spec.seed)
    data = spec.noise_sigma * rng.normal(size=spec.shape) if spec.noise_sigma > 0 else np.zeros(spec.shape)
    mask = np.zeros((kappa, alpha, beta), dtype=bool)
    for (c, a, b) in spec.mask:
        data[:, c, a, b] += y
        mask[c, a, b] = True
    data -= data.min()
    mask.flags.writeable = False
    return VoxelEmbedding(data), mask


def gen_clip(frames, resolution, channels, rate_bpm=72.0, fs=25.0, noise_sigma=0.02, seed=0):
    """Toy video clip: mid-gray frames with a weak pulse modulating all
    pixels plus per-pixel noise, clipped into [0, 1]."""
    pulse = gen_pulse(fs, rate_bpm, frames / fs if frames / fs >= 1 else 1.0, 0.2, 0.0, seed)
    s = pulse.samples[:frames]
    rng = np.random.default_rng(seed)
    data = 0.5 + 0.05 * s[:, None, None, None]
    data = data + noise_sigma * rng.normal(size=(frames, channels, resolution, resolution))
    return VideoClip(np.clip(data, 0.0, 1.0))
