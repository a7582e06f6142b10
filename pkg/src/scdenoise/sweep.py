"""SNR-sweep experiment runner and figure-data emitters.

Output is CSV data, not plots; rows are deterministic (byte-identical) for a
fixed configuration and master seed because every trial owns an RNG stream
derived from (master_seed, snr index, trial index).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import score_model
from .channel import (
    awgn_transmit,
    build_schedule,
    forward_diffuse,
    snr_to_sigma,
    stream_rng,
    vp_forward_reference,
)
from .constellation import build_bpsk, build_square_qam, demodulate_hard, modulate
from .errors import ConfigError
from .metrics import mse, ser
from .oracle import mmse_bound, oracle_score_fn, posterior_mean
from .sampler import SamplerConfig, pc_sample

__all__ = ["SweepRecord", "ExperimentConfig", "run_sweep", "emit_scatter", "write_sweep_csv"]

SWEEP_MODES = ("raw", "mmse", "oracle_pc", "learned_pc")


@dataclass(frozen=True)
class SweepRecord:
    """One sweep row: an (SNR, estimator mode) measurement."""

    snr_db: float
    mode: str
    mse: float
    ser: float
    mmse_bound: float
    trials: int
    seed: int


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a sweep or scatter run needs; defaults follow the reference setup."""

    order: int = 64
    sigma_min: float = 0.01
    sigma_max: float = 10.0
    n_steps: int = 64
    langevin_steps: int = 2
    step_scale: float = 0.16
    denoise_final: bool = True
    n_symbols: int = 128
    snr_grid: tuple[float, ...] = tuple(float(s) for s in range(-18, 19, 3))
    trials: int = 80
    master_seed: int = 0
    modes: tuple[str, ...] = ("raw", "mmse", "oracle_pc")
    checkpoint: str | None = None
    mmse_trials: int = 200_000
    scatter_beta: float = 0.1
    scatter_trials: int = 2000

    def scheme(self):
        if self.order == 2:
            return build_bpsk()
        return build_square_qam(self.order)

    def schedule(self):
        return build_schedule(self.sigma_min, self.sigma_max, self.n_steps)

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig(
            schedule=self.schedule(),
            langevin_steps=self.langevin_steps,
            step_scale=self.step_scale,
            denoise_final=self.denoise_final,
        )

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in mapping.items():
            if key not in fields:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, value, fields[key].type)
        cfg = cls(**kwargs)
        for mode in cfg.modes:
            if mode not in SWEEP_MODES:
                raise ConfigError(f"unknown sweep mode {mode!r}")
        return cfg


def _coerce(key: str, value, annotation: str):
    if not isinstance(value, str):
        return value
    if key in ("snr_grid",):
        return tuple(float(v) for v in value.split(",") if v.strip())
    if key in ("modes",):
        return tuple(v.strip() for v in value.split(",") if v.strip())
    if key in ("checkpoint",):
        return value or None
    if key in ("denoise_final",):
        return value.strip().lower() in ("1", "true", "yes", "on")
    try:
        if key in ("order", "n_steps", "langevin_steps", "n_symbols", "trials",
                   "master_seed", "mmse_trials", "scatter_trials"):
            return int(value)
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r}") from exc


def parse_config_file(path: str) -> dict:
    """Plain key=value lines; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def run_sweep(config: ExperimentConfig):
    """One SweepRecord per (snr, mode). All modes of a trial share the same
    channel realization, so estimator comparisons are paired."""
    scheme = config.scheme()
    sampler_cfg = config.sampler_config()
    score_fns = {}
    if "oracle_pc" in config.modes:
        score_fns["oracle_pc"] = oracle_score_fn(scheme)
    if "learned_pc" in config.modes:
        if config.checkpoint is None:
            raise ConfigError("learned_pc mode requires a checkpoint")
        model = score_model.load_model(config.checkpoint)
        score_fns["learned_pc"] = score_model.model_score_fn(model)

    records = []
    for si, snr_db in enumerate(config.snr_grid):
        sigma_ch = snr_to_sigma(snr_db)
        bound = mmse_bound(
            sigma_ch, scheme, config.mmse_trials, stream_rng(config.master_seed, si, 1 << 20)
        )
        sums = {m: [0.0, 0.0] for m in config.modes}  # mode -> [mse, ser] accumulators
        for trial in range(config.trials):
            rng_ch = stream_rng(config.master_seed, si, trial, 0)
            idx = rng_ch.integers(0, scheme.order, size=config.n_symbols)
            z0 = modulate(idx, scheme)
            z_tilde = awgn_transmit(z0, sigma_ch, rng_ch)
            for mi, mode in enumerate(config.modes):
                if mode == "raw":
                    est = z_tilde
                elif mode == "mmse":
                    est = posterior_mean(z_tilde, sigma_ch, scheme)
                else:
                    rng_mode = stream_rng(config.master_seed, si, trial, 1 + mi)
                    est = pc_sample(z_tilde, snr_db, score_fns[mode], sampler_cfg, rng_mode)
                sums[mode][0] += mse(est, z0)
                sums[mode][1] += ser(idx, demodulate_hard(est, scheme))
        for mode in config.modes:
            records.append(
                SweepRecord(
                    snr_db=float(snr_db),
                    mode=mode,
                    mse=sums[mode][0] / config.trials,
                    ser=sums[mode][1] / config.trials,
                    mmse_bound=bound,
                    trials=config.trials,
                    seed=config.master_seed,
                )
            )
    return records


def write_sweep_csv(records, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("snr_db,mode,mse,ser,mmse_bound,trials,seed\n")
        for r in records:
            fh.write(
                f"{r.snr_db:.12g},{r.mode},{r.mse:.12g},{r.ser:.12g},"
                f"{r.mmse_bound:.12g},{r.trials},{r.seed}\n"
            )


def emit_scatter(config: ExperimentConfig, step: int, path: str) -> None:
    """Forward-scatter CSV at one diffusion step, for the drift-free vs
    drifted contrast: mode 'scdm' keeps means on the constellation, mode 'vp'
    shrinks them toward the origin."""
    sched = config.schedule()
    if not 1 <= step <= sched.n_steps:
        raise ConfigError(f"scatter step {step} outside [1, {sched.n_steps}]")
    scheme = config.scheme()
    rng = stream_rng(config.master_seed, 9000, step)
    idx = rng.integers(0, scheme.order, size=config.scatter_trials)
    z0 = modulate(idx, scheme)
    z_scdm = forward_diffuse(z0, step, sched, rng)
    z_vp = vp_forward_reference(z0, step, config.scatter_beta, rng)
    with open(path, "w") as fh:
        fh.write("step,mode,trial,re,im\n")
        for mode, z in (("scdm", z_scdm), ("vp", z_vp)):
            for t, zk in enumerate(z):
                fh.write(f"{step},{mode},{t},{zk.real:.12g},{zk.imag:.12g}\n")
