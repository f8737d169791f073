import math

import numpy as np
import pytest

from cortexload import numkit as nk
from cortexload.convnext_eeg import (BlockParams, ConvNeXtConfig, ConvNeXtEEG, block_drop_probs,
                                     block_forward, count_parameters, forward_features,
                                     init_params, load_checkpoint, model_forward,
                                     parameter_shapes, save_checkpoint)
from cortexload.errors import ConfigurationError, DimensionError

from oracles import direct_conv2d, std_normal_cdf, triple_loop_linear


def T(a):
    return nk.Tensor(np.asarray(a, dtype=float), requires_grad=True)


def random_block(width, rng, scale=0.3, layer_scale=None, drop_prob=0.0):
    hidden = 4 * width
    return BlockParams(
        dw_weight=T(rng.normal(0, scale, (width, 1, 7, 7))), dw_bias=T(rng.normal(0, scale, width)),
        norm_gamma=T(1 + rng.normal(0, 0.1, width)), norm_beta=T(rng.normal(0, 0.1, width)),
        expand_weight=T(rng.normal(0, scale, (hidden, width))),
        expand_bias=T(rng.normal(0, scale, hidden)),
        project_weight=T(rng.normal(0, scale, (width, hidden))),
        project_bias=T(rng.normal(0, scale, width)),
        layer_scale=T(rng.normal(0, 1, width) if layer_scale is None else layer_scale),
        drop_prob=drop_prob)


def composed_block(x, b, eps=1e-6):
    """The block assembled step by step from reference computations."""
    n, c, h, w = x.shape
    y = direct_conv2d(x, b.dw_weight.data, b.dw_bias.data, padding=(3, 3), groups=c)
    mu = y.mean(axis=1, keepdims=True)
    var = ((y - mu) ** 2).mean(axis=1, keepdims=True)
    y = (y - mu) / np.sqrt(var + eps)
    y = y * b.norm_gamma.data[None, :, None, None] + b.norm_beta.data[None, :, None, None]
    tokens = y.transpose(0, 2, 3, 1).reshape(-1, c)
    hidden = triple_loop_linear(tokens, b.expand_weight.data, b.expand_bias.data)
    hidden = np.vectorize(lambda v: v * std_normal_cdf(v))(hidden)
    out = triple_loop_linear(hidden, b.project_weight.data, b.project_bias.data)
    out = out * b.layer_scale.data[None, :]
    return x + out.reshape(n, h, w, c).transpose(0, 3, 1, 2)


@pytest.mark.parametrize("channels", [1, 4])
def test_block_matches_composition_oracle(channels, rng):
    x = rng.normal(size=(1, channels, 8, 8))
    b = random_block(channels, rng)
    got = block_forward(x, b).data
    np.testing.assert_allclose(got, composed_block(x, b), rtol=0, atol=1e-12)


def test_block_zero_branch_is_identity(rng):
    x = rng.normal(size=(2, 8, 7, 16))
    b = random_block(8, rng)
    for t in (b.dw_weight, b.dw_bias, b.norm_gamma, b.norm_beta, b.expand_weight, b.expand_bias,
              b.project_weight, b.project_bias):
        t.data[...] = 0.0
    np.testing.assert_array_equal(block_forward(x, b).data, x)


def test_block_preserves_every_stage_shape(rng):
    for c, h, w in ConvNeXtConfig().stage_shapes():
        x = rng.normal(size=(2, c, h, w))
        assert block_forward(x, random_block(c, rng)).shape == x.shape


def test_block_rejects_wrong_width(rng):
    with pytest.raises(DimensionError):
        block_forward(rng.normal(size=(1, 5, 7, 7)), random_block(4, rng))


def test_stage_shape_chain():
    assert ConvNeXtConfig().stage_shapes() == [(32, 7, 32), (32, 7, 16), (64, 7, 8), (64, 7, 4)]


def test_forward_records_stage_shapes(rng):
    cfg = ConvNeXtConfig(num_classes=3)
    seen = []
    feats = forward_features(rng.random((2, 1, 14, 128)), init_params(cfg, rng), cfg,
                             collect=seen)
    assert seen == [(32, 7, 32), (32, 7, 16), (64, 7, 8), (64, 7, 4)]
    assert feats.shape == (2, 64)


def test_logits_shape_and_eval_determinism(rng):
    model = ConvNeXtEEG(ConvNeXtConfig(num_classes=3), rng=rng)
    x = rng.random((4, 1, 14, 128))
    a, b = model(x), model(x)
    assert a.shape == (4, 3)
    assert a.data.tobytes() == b.data.tobytes()


def test_wrong_input_shape_names_expected(rng):
    model = ConvNeXtEEG(rng=rng)
    with pytest.raises(DimensionError, match=r"\(1, 14, 128\)"):
        model(rng.random((2, 1, 14, 64)))


def analytic_parameter_count(depths, widths, classes, expansion=4):
    total = widths[0] * 1 * 2 * 4 + widths[0] + 2 * widths[0]            # stem conv + norm
    for s, (d, c) in enumerate(zip(depths, widths)):
        if s:
            total += 2 * widths[s - 1] + c * widths[s - 1] * 1 * 2 + c      # norm + conv
        block = (c * 49 + c) + 2 * c + 2 * (expansion * c * c) + expansion * c + c + c
        total += d * block
    return total + 2 * widths[-1] + classes * widths[-1] + classes


@pytest.mark.parametrize("classes", [2, 3])
def test_parameter_count(classes, rng):
    model = ConvNeXtEEG(ConvNeXtConfig(num_classes=classes), rng=rng)
    walked = sum(math.prod(p.shape) for p in model.params.values())
    assert model.num_parameters() == walked
    assert walked == analytic_parameter_count((1, 1, 2, 1), (32, 32, 64, 64), classes)


def test_parameter_count_frozen():
    assert analytic_parameter_count((1, 1, 2, 1), (32, 32, 64, 64), 3) == 144963


def test_init_values(rng):
    cfg = ConvNeXtConfig()
    params = init_params(cfg, rng)
    scales = [p.data for k, p in params.items() if k.endswith("layer_scale")]
    assert len(scales) == 5 and all(np.all(s == 1e-6) for s in scales)
    for name, p in params.items():
        if name.endswith(".bias") or name.endswith(".beta"):
            assert np.all(p.data == 0.0), name
        if name.endswith(".gamma"):
            assert np.all(p.data == 1.0), name


def test_drop_probability_ramp():
    assert block_drop_probs(ConvNeXtConfig()) == pytest.approx([0, 0.025, 0.05, 0.075, 0.1])


def test_truncated_normal_weights(rng):
    params = init_params(ConvNeXtConfig(), rng)
    w = np.concatenate([p.data.ravel() for k, p in params.items() if k.endswith(".weight")])
    assert w.size >= 10_000
    assert abs(w.mean()) <= 3 * 0.02 / math.sqrt(w.size)
    assert np.abs(w).max() <= 0.04
    # truncation at 2 std leaves a std of 0.02 * 0.8796
    assert w.std() == pytest.approx(0.02 * 0.87962566, rel=0.02)


def test_every_parameter_gets_gradient(rng):
    model = ConvNeXtEEG(ConvNeXtConfig(num_classes=3), rng=rng)
    logits = model(rng.random((4, 1, 14, 128)))
    nk.backward(nk.softmax_cross_entropy(logits, [0, 1, 2, 1]))
    for name, p in model.params.items():
        assert p.grad is not None and np.abs(p.grad).max() > 0, name


def test_zeroed_blocks_equal_blocks_removed_model(rng):
    cfg = ConvNeXtConfig(num_classes=3)
    params = init_params(cfg, rng)
    for name, p in params.items():
        if name.startswith("stages.") and ".norm." not in name:
            p.data[...] = 0.0
    bare = ConvNeXtConfig(depths=(0, 0, 0, 0), num_classes=3)
    bare_params = {name: params[name] for name, _ in parameter_shapes(bare)}
    x = rng.random((3, 1, 14, 128))
    np.testing.assert_array_equal(model_forward(x, params, cfg).data,
                                  model_forward(x, bare_params, bare).data)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ConvNeXtConfig(depths=(1, 1, 1))
    with pytest.raises(ConfigurationError):
        ConvNeXtConfig(downsample_kernel=(2, 2), downsample_stride=(2, 2))   # 7 rows collapse
    with pytest.raises(ConfigurationError):
        ConvNeXtConfig(dw_padding=(2, 2))
    with pytest.raises(ConfigurationError):
        ConvNeXtConfig.from_dict({"depth": [1, 1, 1, 1]})


def test_checkpoint_round_trip(tmp_path, rng):
    cfg = ConvNeXtConfig(num_classes=3, stochastic_depth_max=0.05)
    model = ConvNeXtEEG(cfg, rng=rng)
    save_checkpoint(tmp_path, cfg, model.params, {"epoch": 7})
    cfg2, params2 = load_checkpoint(tmp_path)
    assert cfg2 == cfg
    assert list(params2) == list(model.params)
    x = rng.random((2, 1, 14, 128))
    assert model(x).data.tobytes() == model_forward(x, params2, cfg2).data.tobytes()


def test_checkpoint_shape_validation(tmp_path, rng):
    cfg = ConvNeXtConfig()
    model = ConvNeXtEEG(cfg, rng=rng)
    save_checkpoint(tmp_path, cfg, model.params)
    nk.save_tensor(tmp_path / "tensors" / "head.fc.bias", np.zeros(5))
    with pytest.raises(DimensionError, match="head.fc.bias"):
        load_checkpoint(tmp_path)


def test_parameter_count_helper(rng):
    params = init_params(ConvNeXtConfig(), rng)
    assert count_parameters(params) == analytic_parameter_count((1, 1, 2, 1),
                                                                (32, 32, 64, 64), 2)
