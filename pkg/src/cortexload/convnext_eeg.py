"""ConvNeXt scaled down for single-window EEG input of shape (1, 14, 128).

Stem, four stages of ConvNeXt blocks with downsampling layers between them,
then global mean, layer norm and a linear classifier. Parameters live in a
flat, insertion-ordered ``dict`` of name -> Tensor; the order is the
checkpoint registry order.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import truncnorm

from . import numkit as nk
from .errors import ConfigurationError, DimensionError, ParseError


def _pair(v):
    return (int(v[0]), int(v[1]))


@dataclass(frozen=True)
class ConvNeXtConfig:
    depths: tuple = (1, 1, 2, 1)
    widths: tuple = (32, 32, 64, 64)
    stem_kernel: tuple = (2, 4)
    stem_stride: tuple = (2, 4)
    downsample_kernel: tuple = (1, 2)
    downsample_stride: tuple = (1, 2)
    dw_kernel: tuple = (7, 7)
    dw_padding: tuple = (3, 3)
    expansion: int = 4
    layer_scale_init: float = 1e-6
    use_layer_scale: bool = True
    stochastic_depth_max: float = 0.1
    num_classes: int = 2
    input_shape: tuple = (1, 14, 128)
    norm_eps: float = 1e-6
    init_std: float = 0.02

    def __post_init__(self):
        for name in ("depths", "widths", "stem_kernel", "stem_stride", "downsample_kernel",
                     "downsample_stride", "dw_kernel", "dw_padding", "input_shape"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        if len(self.depths) != 4 or len(self.widths) != 4:
            raise ConfigurationError("depths and widths must each list 4 stages")
        if min(self.depths) < 0 or min(self.widths) < 1:
            raise ConfigurationError(f"bad depths {self.depths} or widths {self.widths}")
        if self.num_classes < 2:
            raise ConfigurationError(f"num_classes must be >= 2, got {self.num_classes}")
        if not 0.0 <= self.stochastic_depth_max < 1.0:
            raise ConfigurationError("stochastic_depth_max must lie in [0, 1)")
        if self.expansion < 1:
            raise ConfigurationError("expansion must be >= 1")
        if any(k != 2 * p + 1 for k, p in zip(self.dw_kernel, self.dw_padding)):
            raise ConfigurationError(f"depthwise kernel {self.dw_kernel} with padding "
                                     f"{self.dw_padding} does not preserve block shape")
        self.stage_shapes()

    @property
    def total_blocks(self):
        return sum(self.depths)

    def stage_shapes(self):
        """(C, H, W) at the output of each stage; raises if any extent hits 0."""
        _, h, w = self.input_shape
        shapes = []
        kernel, stride = self.stem_kernel, self.stem_stride
        for s, width in enumerate(self.widths):
            if h < kernel[0] or w < kernel[1]:
                raise ConfigurationError(
                    f"stage {s}: spatial extent {(h, w)} is smaller than kernel {kernel}")
            h = (h - kernel[0]) // stride[0] + 1
            w = (w - kernel[1]) // stride[1] + 1
            if h < 1 or w < 1:
                raise ConfigurationError(f"stage {s}: spatial extent collapsed to {(h, w)}")
            shapes.append((width, h, w))
            kernel, stride = self.downsample_kernel, self.downsample_stride
        return shapes

    def to_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v
                for k, v in dataclasses.asdict(self).items()}

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigurationError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class BlockParams:
    dw_weight: nk.Tensor
    dw_bias: nk.Tensor
    norm_gamma: nk.Tensor
    norm_beta: nk.Tensor
    expand_weight: nk.Tensor
    expand_bias: nk.Tensor
    project_weight: nk.Tensor
    project_bias: nk.Tensor
    layer_scale: nk.Tensor | None
    drop_prob: float = 0.0

    @property
    def width(self):
        return self.dw_weight.shape[0]


def block_drop_probs(config):
    """Linear ramp 0 -> stochastic_depth_max over the blocks, in order."""
    n = config.total_blocks
    if n == 0:
        return []
    if n == 1:
        return [0.0]
    return [config.stochastic_depth_max * i / (n - 1) for i in range(n)]


def _block_names(stage, index):
    prefix = f"stages.{stage}.{index}"
    return {
        "dw_weight": f"{prefix}.dwconv.weight", "dw_bias": f"{prefix}.dwconv.bias",
        "norm_gamma": f"{prefix}.norm.gamma", "norm_beta": f"{prefix}.norm.beta",
        "expand_weight": f"{prefix}.expand.weight", "expand_bias": f"{prefix}.expand.bias",
        "project_weight": f"{prefix}.project.weight", "project_bias": f"{prefix}.project.bias",
        "layer_scale": f"{prefix}.layer_scale",
    }


def parameter_shapes(config):
    """Ordered (name, shape) registry for ``config``."""
    c0 = config.widths[0]
    in_ch = config.input_shape[0]
    shapes = [("stem.conv.weight", (c0, in_ch) + config.stem_kernel),
              ("stem.conv.bias", (c0,)),
              ("stem.norm.gamma", (c0,)), ("stem.norm.beta", (c0,))]
    for s, (depth, width) in enumerate(zip(config.depths, config.widths)):
        if s > 0:
            prev = config.widths[s - 1]
            shapes += [(f"downsample.{s}.norm.gamma", (prev,)),
                       (f"downsample.{s}.norm.beta", (prev,)),
                       (f"downsample.{s}.conv.weight", (width, prev) + config.downsample_kernel),
                       (f"downsample.{s}.conv.bias", (width,))]
        hidden = config.expansion * width
        for b in range(depth):
            n = _block_names(s, b)
            shapes += [(n["dw_weight"], (width, 1) + config.dw_kernel), (n["dw_bias"], (width,)),
                       (n["norm_gamma"], (width,)), (n["norm_beta"], (width,)),
                       (n["expand_weight"], (hidden, width)), (n["expand_bias"], (hidden,)),
                       (n["project_weight"], (width, hidden)), (n["project_bias"], (width,))]
            if config.use_layer_scale:
                shapes.append((n["layer_scale"], (width,)))
    last = config.widths[-1]
    shapes += [("head.norm.gamma", (last,)), ("head.norm.beta", (last,)),
               ("head.fc.weight", (config.num_classes, last)),
               ("head.fc.bias", (config.num_classes,))]
    return shapes


def is_decayed(name):
    """Weight decay applies to conv/linear weights only."""
    return name.endswith(".weight")


def init_params(config, rng):
    """Truncated-normal weights (std ``init_std``, cut at 2 std), zero biases,
    unit/zero norm affine and layer scale at ``layer_scale_init``."""
    params = {}
    for name, shape in parameter_shapes(config):
        if name.endswith(".weight"):
            values = truncnorm.rvs(-2.0, 2.0, scale=config.init_std, size=shape, random_state=rng)
        elif name.endswith(".gamma"):
            values = np.ones(shape)
        elif name.endswith("layer_scale"):
            values = np.full(shape, float(config.layer_scale_init))
        else:
            values = np.zeros(shape)
        params[name] = nk.Tensor(values, requires_grad=True)
    return params


def get_block(params, config, stage, index):
    names = _block_names(stage, index)
    flat = sum(config.depths[:stage]) + index
    fields = {k: params.get(v) for k, v in names.items()}
    if not config.use_layer_scale:
        fields["layer_scale"] = None
    return BlockParams(**fields, drop_prob=block_drop_probs(config)[flat])


def block_forward(x, block, training=False, rng=None, eps=1e-6, padding=None):
    """One ConvNeXt block: depthwise conv, channel norm, 1x1 expand, GELU,
    1x1 project, layer scale, then the (stochastic-depth) residual sum."""
    x = nk.as_tensor(x)
    if x.ndim != 4 or x.shape[1] != block.width:
        raise DimensionError(f"block expects N x {block.width} x H x W input, got {x.shape}")
    n, c, h, w = x.shape
    kh, kw = block.dw_weight.shape[2:]
    padding = (kh // 2, kw // 2) if padding is None else padding
    y = nk.conv2d(x, block.dw_weight, block.dw_bias, padding=padding, groups=c)
    y = nk.layer_norm(y, 1, block.norm_gamma, block.norm_beta, eps)
    y = nk.reshape(nk.permute(y, (0, 2, 3, 1)), (n * h * w, c))
    y = nk.gelu(nk.linear(y, block.expand_weight, block.expand_bias))
    y = nk.linear(y, block.project_weight, block.project_bias)
    if block.layer_scale is not None:
        y = nk.scale_channels(y, block.layer_scale, axis=1)
    y = nk.permute(nk.reshape(y, (n, h, w, c)), (0, 3, 1, 2))
    return nk.stochastic_depth(x, y, block.drop_prob, training, rng)


def forward_features(batch, params, config, training=False, rng=None, collect=None):
    """Everything up to and including the pooled, normalised feature vector."""
    x = nk.as_tensor(batch)
    expected = tuple(config.input_shape)
    if x.ndim != 4 or tuple(x.shape[1:]) != expected:
        raise DimensionError(f"model expects input N x {expected}, got {x.shape}")
    eps = config.norm_eps
    x = nk.conv2d(x, params["stem.conv.weight"], params["stem.conv.bias"],
                  stride=config.stem_stride)
    x = nk.layer_norm(x, 1, params["stem.norm.gamma"], params["stem.norm.beta"], eps)
    for s, depth in enumerate(config.depths):
        if s > 0:
            p = f"downsample.{s}"
            x = nk.layer_norm(x, 1, params[f"{p}.norm.gamma"], params[f"{p}.norm.beta"], eps)
            x = nk.conv2d(x, params[f"{p}.conv.weight"], params[f"{p}.conv.bias"],
                          stride=config.downsample_stride)
        for b in range(depth):
            x = block_forward(x, get_block(params, config, s, b), training, rng, eps,
                              config.dw_padding)
        if collect is not None:
            collect.append(x.shape[1:])
    x = nk.mean_pool_spatial(x)
    return nk.layer_norm(x, 1, params["head.norm.gamma"], params["head.norm.beta"], eps)


def model_forward(batch, params, config, training=False, rng=None):
    """Logits (N, num_classes) for a batch shaped N x 1 x 14 x 128."""
    feats = forward_features(batch, params, config, training, rng)
    return nk.linear(feats, params["head.fc.weight"], params["head.fc.bias"])


def count_parameters(params):
    return int(sum(t.size for t in params.values()))


class ConvNeXtEEG:
    """Config plus parameter dict, with a callable forward."""

    def __init__(self, config=None, params=None, rng=None):
        self.config = config or ConvNeXtConfig()
        if params is None:
            params = init_params(self.config, rng if rng is not None else np.random.default_rng())
        self.params = params

    def __call__(self, batch, training=False, rng=None):
        return model_forward(batch, self.params, self.config, training, rng)

    def predict(self, batch, batch_size=256):
        batch = np.asarray(batch, dtype=np.float64)
        out = []
        with nk.no_grad():
            for i in range(0, len(batch), batch_size):
                out.append(self(batch[i:i + batch_size]).data)
        return np.concatenate(out) if out else np.zeros((0, self.config.num_classes))

    def num_parameters(self):
        return count_parameters(self.params)

    def state(self):
        return {k: v.data.copy() for k, v in self.params.items()}

    def load_state(self, state):
        for k, v in state.items():
            self.params[k] = nk.Tensor(v, requires_grad=True)


# checkpoints

def save_checkpoint(directory, config, params, extra=None):
    """Manifest (config fields + ordered registry) and one tensor dump per array."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = ["# convnext-eeg checkpoint"]
    for key, value in config.to_dict().items():
        if isinstance(value, list):
            value = " ".join(str(v) for v in value)
        lines.append(f"config.{key} = {value}")
    for key, value in (extra or {}).items():
        lines.append(f"meta.{key} = {value}")
    for i, (name, tensor) in enumerate(params.items()):
        shape = " ".join(str(d) for d in tensor.shape)
        lines.append(f"param.{i:03d} = {name} : {shape}")
        nk.save_tensor(directory / "tensors" / name, tensor.data, name=name)
    (directory / "manifest.txt").write_text("\n".join(lines) + "\n")
    return directory


def _parse_config_value(field, raw):
    if field.type in ("tuple",) or isinstance(field.default, tuple):
        return tuple(int(v) for v in raw.split())
    if isinstance(field.default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(field.default, int):
        return int(raw)
    return float(raw)


def load_checkpoint(directory):
    """Returns (config, params); every array shape is checked against the config."""
    directory = Path(directory)
    manifest = directory / "manifest.txt"
    fields = {f.name: f for f in dataclasses.fields(ConvNeXtConfig)}
    cfg, registry = {}, []
    for lineno, line in enumerate(manifest.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError("expected key = value", path=manifest, line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("config."):
            name = key[len("config."):]
            if name not in fields:
                raise ParseError(f"unknown config field {name!r}", path=manifest, line=lineno)
            cfg[name] = _parse_config_value(fields[name], value)
        elif key.startswith("param."):
            pname, _, shape = value.partition(":")
            registry.append((pname.strip(), tuple(int(d) for d in shape.split())))
    config = ConvNeXtConfig(**cfg)
    expected = parameter_shapes(config)
    if [n for n, _ in expected] != [n for n, _ in registry]:
        raise ParseError("parameter registry does not match the config", path=manifest)
    params = {}
    for name, shape in expected:
        data = nk.load_tensor(directory / "tensors" / name)
        if data.shape != shape:
            raise DimensionError(f"checkpoint array {name} has shape {data.shape}, "
                                 f"config requires {shape}")
        params[name] = nk.Tensor(data, requires_grad=True)
    return config, params
