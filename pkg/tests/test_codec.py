"""Tests for the quantizing encoder / trainable decoder pipeline."""

import numpy as np
import pytest

from scdenoise.channel import build_schedule, forward_diffuse, stream_rng
from scdenoise.codec import (
    DecoderModel,
    JointTrainConfig,
    QuantizingEncoder,
    decode,
    dequantize,
    encode,
    joint_train,
    load_decoder,
    save_decoder,
    write_joint_trace,
)
from scdenoise.constellation import build_square_qam
from scdenoise.mlp import Mlp
from scdenoise.oracle import oracle_score_fn
from scdenoise.sampler import SamplerConfig, pc_sample


def small_setup(order=16):
    scheme = build_square_qam(order)
    sched = build_schedule(0.05, 4.0, 8)
    return scheme, sched, QuantizingEncoder(scheme)


def test_encoder_levels():
    scheme, _, enc = small_setup(16)
    np.testing.assert_allclose(enc.levels, np.unique(scheme.points.real))
    assert enc.level_span == pytest.approx(np.max(scheme.points.real))


def test_encode_fixed_points():
    # sources sitting exactly at scaled level centers map onto constellation points
    scheme, _, enc = small_setup(16)
    x = np.empty(2 * scheme.order)
    for m, p in enumerate(scheme.points):
        x[2 * m] = p.real / enc.level_span
        x[2 * m + 1] = p.imag / enc.level_span
    z = encode(x, enc)
    np.testing.assert_allclose(z, scheme.points, atol=1e-12)


def test_encode_sign_quantization_qam4():
    _, _, enc = small_setup(4)
    level = 1.0 / np.sqrt(2.0)
    z = encode(np.array([0.3, -0.2]), enc)
    assert z[0] == pytest.approx(level + 1j * -level)


def test_encode_odd_dimension_rejected():
    _, _, enc = small_setup(4)
    with pytest.raises(ValueError):
        encode(np.zeros(3), enc)


def test_encode_quantization_error_bounded():
    scheme, _, enc = small_setup(64)
    rng = np.random.default_rng(0)
    x = rng.uniform(-1.0, 1.0, size=(100, 16))
    z = encode(x, enc)
    back = dequantize(z, enc)
    # nearest-level quantization: per-axis error at most half the level spacing
    spacing = (enc.levels[1] - enc.levels[0]) / enc.level_span
    assert np.max(np.abs(back - x)) <= spacing / 2 + 1e-12
    # every emitted symbol is a constellation point
    assert np.all(np.isin(z.ravel(), scheme.points))


def test_dequantize_roundtrip_shape():
    _, _, enc = small_setup(16)
    z = encode(np.zeros((5, 8)), enc)
    assert z.shape == (5, 4)
    assert dequantize(z, enc).shape == (5, 8)


def test_decoder_zero_weights_and_determinism():
    dec = DecoderModel(net=Mlp([8, 16, 8]))
    z = np.random.default_rng(1).standard_normal(4) + 1j * np.zeros(4)
    np.testing.assert_array_equal(decode(z, dec), np.zeros(8))
    dec2 = DecoderModel.build(4, 8, hidden=(16,), rng=stream_rng(0, 0))
    np.testing.assert_array_equal(decode(z, dec2), decode(z, dec2))


def test_decoder_output_clamped():
    dec = DecoderModel.build(2, 4, hidden=(8,), rng=stream_rng(1, 0))
    dec.net.biases[-1][:] = 50.0  # force saturation
    out = decode(np.array([1 + 1j, -1 - 1j]), dec)
    assert np.all(out <= 1.0) and np.all(out >= -1.0)


def test_decoder_shape_check():
    dec = DecoderModel.build(4, 8, rng=stream_rng(2, 0))
    with pytest.raises(ValueError):
        decode(np.zeros(3, dtype=complex), dec)


def test_joint_train_decreases_loss_and_is_deterministic():
    scheme, sched, enc = small_setup(16)
    sampler_cfg = SamplerConfig(schedule=sched, langevin_steps=1)
    cfg = JointTrainConfig(steps=300, batch_size=32, learning_rate=2e-3)
    fn = oracle_score_fn(scheme)

    def run():
        dec = DecoderModel.build(4, 8, hidden=(32,), rng=stream_rng(10, 0))
        return joint_train(enc, dec, fn, sampler_cfg, sched, cfg, stream_rng(10, 1))

    dec1, trace1 = run()
    dec2, trace2 = run()
    for a, b in zip(dec1.net.params, dec2.net.params):
        np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(trace1, trace2)
    assert np.mean(trace1[-50:, 0]) < np.mean(trace1[:50, 0])
    # noise levels drawn over the whole schedule
    assert trace1[:, 1].min() >= 1 and trace1[:, 1].max() <= sched.n_steps


def test_joint_train_shape_mismatch():
    scheme, sched, enc = small_setup(16)
    dec = DecoderModel.build(4, 10, rng=stream_rng(0, 0))  # 10 != 2*4
    with pytest.raises(ValueError):
        joint_train(enc, dec, oracle_score_fn(scheme), SamplerConfig(schedule=sched),
                    sched, JointTrainConfig(steps=1), stream_rng(0, 1))


def test_decoder_checkpoint_roundtrip(tmp_path):
    dec = DecoderModel.build(4, 8, hidden=(16,), rng=stream_rng(3, 0))
    path = tmp_path / "dec.npz"
    save_decoder(str(path), dec)
    loaded = load_decoder(str(path))
    z = np.random.default_rng(4).standard_normal(4) * (1 + 0.5j)
    np.testing.assert_array_equal(decode(z, loaded), decode(z, dec))


def test_joint_trace_csv(tmp_path):
    trace = np.array([[0.5, 3], [0.4, 7]])
    path = tmp_path / "trace.csv"
    write_joint_trace(str(path), trace)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "step,loss,snr_step"
    assert lines[1] == "0,0.5,3"


@pytest.mark.parametrize("order,dim", [(4, 4), (16, 8), (64, 6)])
def test_pipeline_shapes(order, dim):
    scheme = build_square_qam(order)
    sched = build_schedule(0.05, 4.0, 8)
    enc = QuantizingEncoder(scheme)
    dec = DecoderModel.build(dim // 2, dim, hidden=(16,), rng=stream_rng(5, 0))
    rng = stream_rng(5, 1)
    x = rng.uniform(-1, 1, size=dim)
    z0 = encode(x, enc)
    z_noisy = forward_diffuse(z0, 4, sched, rng)
    z_hat = pc_sample(z_noisy, 0.0, oracle_score_fn(scheme),
                      SamplerConfig(schedule=sched, langevin_steps=1), rng)
    x_hat = decode(z_hat, dec)
    assert z0.shape == (dim // 2,)
    assert x_hat.shape == (dim,)
    assert np.all(np.isfinite(x_hat))
