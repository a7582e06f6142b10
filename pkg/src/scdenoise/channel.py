"""AWGN channel, SNR arithmetic, and the annealed (variance-exploding) forward process.

Complex noise convention, used everywhere: a unit complex Gaussian CN(0, 1)
has independent real/imag parts of variance 1/2 each, and SNR(dB) is defined
against the *total* complex noise variance: SNR = 10*log10(P / sigma^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NoiseSchedule",
    "ChannelConfig",
    "stream_rng",
    "complex_noise",
    "snr_to_sigma",
    "awgn_transmit",
    "build_schedule",
    "forward_diffuse",
    "snr_to_step",
    "match_to_grid",
    "vp_forward_reference",
]


def stream_rng(master_seed: int, *stream: int) -> np.random.Generator:
    """Independent, reproducible RNG stream derived from (master_seed, stream ids).

    Parallel trials each get their own stream, so results do not depend on
    execution order.
    """
    # SeedSequence entropy words must be non-negative; wrap negatives (e.g.
    # stream ids taken from SNR values) into the 63-bit range injectively.
    words = [int(master_seed), *[int(s) for s in stream]]
    return np.random.default_rng([w % (1 << 63) for w in words])


def complex_noise(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) samples: unit total variance, 1/2 per real dimension."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def snr_to_sigma(snr_db: float, power: float = 1.0) -> float:
    """Channel noise std (total complex) for a given SNR in dB."""
    if power <= 0:
        raise ValueError("power must be positive")
    return float(np.sqrt(power * 10.0 ** (-snr_db / 10.0)))


@dataclass(frozen=True)
class ChannelConfig:
    """An AWGN channel operating point."""

    snr_db: float
    power: float = 1.0

    @property
    def sigma_ch(self) -> float:
        return snr_to_sigma(self.snr_db, self.power)


def awgn_transmit(z: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Transmit z through an AWGN channel: z + sigma * CN(0, I)."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    z = np.asarray(z, dtype=np.complex128)
    if sigma == 0:
        return z.copy()
    return z + sigma * complex_noise(rng, z.shape)


@dataclass(frozen=True)
class NoiseSchedule:
    """Geometric sigma grid sigma_1..sigma_N, with sigma_0 = 0 by convention."""

    sigma_min: float
    sigma_max: float
    n_steps: int
    sigmas: np.ndarray = field(repr=False)  # shape (N,), sigmas[i-1] == sigma_i

    def __post_init__(self):
        object.__setattr__(self, "sigmas", np.asarray(self.sigmas, dtype=float))
        self.sigmas.setflags(write=False)

    def sigma(self, i: int) -> float:
        """1-based level lookup; sigma(0) is the noiseless origin."""
        if i == 0:
            return 0.0
        if not 1 <= i <= self.n_steps:
            raise ValueError(f"schedule level {i} out of range [0, {self.n_steps}]")
        return float(self.sigmas[i - 1])


def build_schedule(sigma_min: float, sigma_max: float, n_steps: int) -> NoiseSchedule:
    """Geometric grid sigma_i = sigma_min * (sigma_max/sigma_min)^((i-1)/(N-1))."""
    if not 0 < sigma_min < sigma_max:
        raise ValueError("need 0 < sigma_min < sigma_max")
    if n_steps < 2:
        raise ValueError("need at least 2 schedule steps")
    expo = np.arange(n_steps) / (n_steps - 1)
    sigmas = sigma_min * (sigma_max / sigma_min) ** expo
    return NoiseSchedule(float(sigma_min), float(sigma_max), int(n_steps), sigmas)


def forward_diffuse(
    z0: np.ndarray, i: int, sched: NoiseSchedule, rng: np.random.Generator
) -> np.ndarray:
    """Drift-free forward corruption to level i, in one shot: z0 + sigma_i * eps.

    Equal in distribution to iterating the per-step corruption, because the
    per-step variances add.
    """
    if not 1 <= i <= sched.n_steps:
        raise ValueError(f"diffusion step {i} out of range [1, {sched.n_steps}]")
    z0 = np.asarray(z0, dtype=np.complex128)
    return z0 + sched.sigma(i) * complex_noise(rng, z0.shape)


def snr_to_step(
    snr_db: float, sched: NoiseSchedule, power: float = 1.0
) -> tuple[int, float]:
    """Map a channel SNR onto the schedule.

    Returns (k, sigma_gap): k is the smallest level with sigma_k >= sigma_ch,
    and sigma_gap = sqrt(sigma_k^2 - sigma_ch^2) is the extra noise std needed
    to land a received sequence exactly on grid level k.
    """
    sigma_ch = snr_to_sigma(snr_db, power)
    if sigma_ch > sched.sigma_max:
        raise ValueError(
            f"channel noise {sigma_ch:.4g} exceeds schedule sigma_max {sched.sigma_max:.4g}"
        )
    k = int(np.searchsorted(sched.sigmas, sigma_ch, side="left")) + 1
    gap = float(np.sqrt(max(sched.sigma(k) ** 2 - sigma_ch**2, 0.0)))
    return k, gap


def match_to_grid(
    z_tilde: np.ndarray, sigma_gap: float, rng: np.random.Generator
) -> np.ndarray:
    """Add the noise deficit so the total corruption sits exactly on a grid level.

    Noise-matching (rather than rescaling) preserves the drift-free property.
    """
    if sigma_gap < 0:
        raise ValueError("sigma_gap must be non-negative")
    z_tilde = np.asarray(z_tilde, dtype=np.complex128)
    if sigma_gap == 0:
        return z_tilde.copy()
    return z_tilde + sigma_gap * complex_noise(rng, z_tilde.shape)


def vp_forward_reference(
    z0: np.ndarray, i: int, beta: float, rng: np.random.Generator
) -> np.ndarray:
    """Drifted (variance-preserving style) forward reference, iterated i steps.

    z <- sqrt(1-beta) z + sqrt(beta) eps. Only used to illustrate how a drift
    term collapses the constellation toward the origin; the denoiser itself
    never uses it.
    """
    if not 0 < beta < 1:
        raise ValueError("beta must be in (0, 1)")
    if i < 1:
        raise ValueError("need at least one step")
    z = np.asarray(z0, dtype=np.complex128).copy()
    for _ in range(i):
        z = np.sqrt(1.0 - beta) * z + np.sqrt(beta) * complex_noise(rng, z.shape)
    return z
