"""Predictor-Corrector reverse sampler over the annealed noise schedule.

The predictor is the discrete reverse-diffusion step

    z_i = z_{i+1} + (sigma_{i+1}^2 - sigma_i^2) s(z_{i+1}, sigma_{i+1})
               + sqrt(sigma_{i+1}^2 - sigma_i^2) eps,

the corrector is annealed Langevin refinement at the current level with the
step size xi = 2 (r ||eps|| / ||g||)^2 computed over the full 2n-real view of
the sequence. Any (z, sigma) -> score callable works: the exact mixture
oracle or a trained model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (
    NoiseSchedule,
    complex_noise,
    match_to_grid,
    snr_to_step,
)

__all__ = [
    "SamplerConfig",
    "predictor_step",
    "corrector_step",
    "denoise_from_level",
    "pc_sample",
]


@dataclass(frozen=True)
class SamplerConfig:
    """Reverse-sampling knobs: Langevin steps per level and the step-length ratio."""

    schedule: NoiseSchedule
    langevin_steps: int = 2
    step_scale: float = 0.16  # the 'r' controlling xi
    denoise_final: bool = True

    def __post_init__(self):
        if self.langevin_steps < 0:
            raise ValueError("langevin_steps must be non-negative")
        if not 0 < self.step_scale < 1:
            raise ValueError("step_scale must lie in (0, 1)")


def predictor_step(
    z_next: np.ndarray,
    score_fn,
    sigma_next: float,
    sigma_cur: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """One reverse-diffusion step from level sigma_next down to sigma_cur."""
    if not sigma_next > sigma_cur >= 0:
        raise ValueError("need sigma_next > sigma_cur >= 0")
    z_next = np.asarray(z_next, dtype=np.complex128)
    dvar = sigma_next**2 - sigma_cur**2
    drift = dvar * score_fn(z_next, sigma_next)
    return z_next + drift + np.sqrt(dvar) * complex_noise(rng, z_next.shape)


def _seq_norm(a: np.ndarray) -> np.ndarray:
    # Euclidean norm over the trailing (sequence) axis, viewing each complex
    # symbol as two reals; keeps a batch axis if present.
    return np.sqrt(np.sum(np.abs(a) ** 2, axis=-1, keepdims=True))


def corrector_step(
    z: np.ndarray,
    score_fn,
    sigma: float,
    r: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """One Langevin correction at a fixed noise level.

    A degenerate score (||g|| = 0) would make the step size undefined; the
    update is skipped in that case.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    z = np.asarray(z, dtype=np.complex128)
    eps_scale = complex_noise(rng, z.shape)
    g = score_fn(z, sigma)
    g_norm = _seq_norm(g)
    eps = complex_noise(rng, z.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = 2.0 * (r * _seq_norm(eps_scale) / g_norm) ** 2
    xi = np.where(g_norm > 0.0, xi, 0.0)
    return z + xi * g + np.sqrt(2.0 * xi) * eps


def denoise_from_level(
    z: np.ndarray,
    level: int,
    score_fn,
    config: SamplerConfig,
    rng: np.random.Generator,
    observer=None,
) -> np.ndarray:
    """Run the PC loop from schedule level `level` down to level 1.

    Ends with an optional noise-free Tweedie step removing the residual
    sigma_1-level noise. `observer(level, sigma, z)` is called after each
    completed level, for convergence tracing.
    """
    sched = config.schedule
    if not 1 <= level <= sched.n_steps:
        raise ValueError(f"level {level} outside schedule range")
    z = np.asarray(z, dtype=np.complex128)
    if observer is not None:
        observer(level, sched.sigma(level), z)
    for i in range(level, 1, -1):
        sigma_hi = sched.sigma(i)
        sigma_lo = sched.sigma(i - 1)
        z = predictor_step(z, score_fn, sigma_hi, sigma_lo, rng)
        for _ in range(config.langevin_steps):
            z = corrector_step(z, score_fn, sigma_lo, config.step_scale, rng)
        if observer is not None:
            observer(i - 1, sigma_lo, z)
    if config.denoise_final:
        sigma_1 = sched.sigma(1)
        z = z + (sigma_1**2 / 2.0) * score_fn(z, sigma_1)
        if observer is not None:
            observer(0, 0.0, z)
    return z


def pc_sample(
    z_tilde: np.ndarray,
    snr_db: float,
    score_fn,
    config: SamplerConfig,
    rng: np.random.Generator,
    power: float = 1.0,
    observer=None,
) -> np.ndarray:
    """Denoise a received sequence: map the SNR onto the schedule, close the
    off-grid noise gap, then anneal down with the PC loop."""
    level, gap = snr_to_step(snr_db, config.schedule, power)
    z = match_to_grid(z_tilde, gap, rng)
    return denoise_from_level(z, level, score_fn, config, rng, observer=observer)
