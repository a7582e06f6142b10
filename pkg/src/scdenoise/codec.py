"""Toy digital-semantic pipeline: fixed quantizing encoder, trainable MLP decoder.

The encoder maps each pair of source dimensions in [-1, 1] onto one
constellation symbol by per-axis nearest-level quantization; it is
deliberately untrainable so the second training stage (decoder adaptation to
denoised symbols) is isolated from codec learning.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import NoiseSchedule, forward_diffuse
from .constellation import ConstellationScheme
from .errors import DivergenceError
from .mlp import AdamState, Mlp, adam_step
from .sampler import SamplerConfig, denoise_from_level

__all__ = [
    "QuantizingEncoder",
    "DecoderModel",
    "JointTrainConfig",
    "encode",
    "dequantize",
    "decode",
    "joint_train",
    "save_decoder",
    "load_decoder",
]

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class QuantizingEncoder:
    """Per-axis quantizer onto the constellation's amplitude levels.

    Source values in [-1, 1] are scaled onto the level span; even dimensions
    feed the in-phase axis, odd dimensions the quadrature axis.
    """

    scheme: ConstellationScheme
    levels: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        levels = np.unique(self.scheme.points.real)
        object.__setattr__(self, "levels", levels)
        self.levels.setflags(write=False)

    @property
    def level_span(self) -> float:
        return float(self.levels.max())


def _quantize_axis(enc: QuantizingEncoder, x: np.ndarray) -> np.ndarray:
    scaled = x * enc.level_span
    idx = np.argmin(np.abs(scaled[..., None] - enc.levels), axis=-1)
    return enc.levels[idx]


def encode(x: np.ndarray, enc: QuantizingEncoder) -> np.ndarray:
    """Source vector(s) of even dimension d -> sequence(s) of d/2 symbols."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] % 2 != 0:
        raise ValueError("source dimension must be even (two dims per symbol)")
    re = _quantize_axis(enc, x[..., 0::2])
    im = _quantize_axis(enc, x[..., 1::2])
    return re + 1j * im


def dequantize(z: np.ndarray, enc: QuantizingEncoder) -> np.ndarray:
    """Map symbols back to the source domain (inverse of the level scaling)."""
    z = np.asarray(z, dtype=np.complex128)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real / enc.level_span
    out[..., 1::2] = z.imag / enc.level_span
    return out


@dataclass
class DecoderModel:
    """MLP from a 2n-real symbol sequence to a d-real source estimate."""

    net: Mlp

    @property
    def n_symbols(self) -> int:
        return self.net.layer_sizes[0] // 2

    @property
    def source_dim(self) -> int:
        return self.net.layer_sizes[-1]

    @classmethod
    def build(cls, n_symbols: int, source_dim: int, hidden=(128, 128), rng=None):
        return cls(net=Mlp([2 * n_symbols, *hidden, source_dim], rng=rng))


def _seq_to_reals(z: np.ndarray) -> np.ndarray:
    z = np.atleast_2d(np.asarray(z, dtype=np.complex128))
    out = np.empty((z.shape[0], 2 * z.shape[1]))
    out[:, 0::2] = z.real
    out[:, 1::2] = z.imag
    return out


def decode(z_hat: np.ndarray, dec: DecoderModel) -> np.ndarray:
    """Deterministic decoder forward pass, clamped to the source range."""
    z_hat = np.asarray(z_hat, dtype=np.complex128)
    single = z_hat.ndim == 1
    if z_hat.shape[-1] != dec.n_symbols:
        raise ValueError("sequence length does not match decoder input")
    out = np.clip(dec.net(_seq_to_reals(z_hat)), -1.0, 1.0)
    return out[0] if single else out


@dataclass
class JointTrainConfig:
    """Stage-2 training loop parameters."""

    steps: int = 2000
    batch_size: int = 64
    learning_rate: float = 1e-3
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    denoise: bool = True  # False trains the raw-noisy-symbol baseline


def joint_train(
    enc: QuantizingEncoder,
    dec: DecoderModel,
    score_fn,
    sampler_config: SamplerConfig,
    sched: NoiseSchedule,
    config: JointTrainConfig,
    rng: np.random.Generator,
):
    """Train the decoder on (denoised) channel outputs; the score model is frozen.

    Each iteration draws a batch of uniform sources, corrupts the encoded
    symbols to a uniformly random schedule level, optionally denoises with the
    PC sampler, and descends the decoder's reconstruction loss ||x - x_hat||^2.
    Returns (decoder, trace) with one (loss, level) row per step.
    """
    d = dec.source_dim
    if 2 * dec.n_symbols != d:
        raise ValueError("decoder shape must pair two source dims per symbol")
    state = AdamState.for_params(dec.net.params)
    trace = np.empty((config.steps, 2))
    for step in range(config.steps):
        x = rng.uniform(-1.0, 1.0, size=(config.batch_size, d))
        z0 = encode(x, enc)
        level = int(rng.integers(1, sched.n_steps + 1))
        z_noisy = forward_diffuse(z0, level, sched, rng)
        if config.denoise:
            z_in = denoise_from_level(z_noisy, level, score_fn, sampler_config, rng)
        else:
            z_in = z_noisy
        out, cache = dec.net.forward(_seq_to_reals(z_in))
        resid = out - x
        loss = float(np.mean(np.sum(resid**2, axis=-1)))
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite decoder loss at step {step}")
        grads, _ = dec.net.backward(cache, (2.0 / config.batch_size) * resid)
        adam_step(
            dec.net.params,
            grads,
            state,
            lr=config.learning_rate,
            betas=config.adam_betas,
            eps=config.adam_eps,
        )
        trace[step] = (loss, level)
    if not dec.net.all_finite():
        raise DivergenceError("non-finite decoder parameters after training")
    return dec, trace


def save_decoder(path: str, dec: DecoderModel) -> None:
    # Same layout as the score-model checkpoint: layer sizes plus row-major
    # parameter arrays under a version tag.
    arrays = {f"w{i}": w for i, w in enumerate(dec.net.weights)}
    arrays.update({f"b{i}": b for i, b in enumerate(dec.net.biases)})
    np.savez(
        path,
        version=CHECKPOINT_VERSION,
        kind="decoder",
        layer_sizes=np.array(dec.net.layer_sizes),
        **arrays,
    )


def load_decoder(path: str) -> DecoderModel:
    with np.load(path, allow_pickle=False) as data:
        if int(data["version"]) != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {data['version']}")
        sizes = [int(s) for s in data["layer_sizes"]]
        net = Mlp(sizes)
        net.weights = [data[f"w{i}"].copy() for i in range(len(sizes) - 1)]
        net.biases = [data[f"b{i}"].copy() for i in range(len(sizes) - 1)]
        return DecoderModel(net=net)


def write_joint_trace(path: str, trace) -> None:
    with open(path, "w") as fh:
        fh.write("step,loss,snr_step\n")
        for step, (loss, level) in enumerate(trace):
            fh.write(f"{step},{loss:.12g},{int(level)}\n")
