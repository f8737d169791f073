"""Differentiable operations needed by the ConvNeXt-EEG model and its loss."""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import ndtr

from ..errors import ConfigurationError, DimensionError, LabelError
from .tensor import Tensor, record

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _pair(v):
    if isinstance(v, (tuple, list)):
        if len(v) != 2:
            raise ConfigurationError(f"expected a pair, got {v!r}")
        return int(v[0]), int(v[1])
    return int(v), int(v)


def _same_shape(a, b, what):
    if a.shape != b.shape:
        raise DimensionError(f"{what}: shapes {a.shape} and {b.shape} differ")


# elementwise / structural helpers

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "add")
    return record(a.data + b.data, (a, b), lambda g: (g, g), "add")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "mul")
    ad, bd = a.data, b.data
    return record(ad * bd, (a, b), lambda g: (g * bd, g * ad), "mul")


def tensor_sum(x):
    x = as_tensor(x)
    shape = x.shape
    return record(np.asarray(x.data.sum()), (x,),
                  lambda g: (np.broadcast_to(g, shape).copy(),), "sum")


def reshape(x, shape):
    x = as_tensor(x)
    old = x.shape
    return record(x.data.reshape(shape), (x,), lambda g: (g.reshape(old),), "reshape")


def permute(x, axes):
    x = as_tensor(x)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return record(np.ascontiguousarray(x.data.transpose(axes)), (x,),
                  lambda g: (np.ascontiguousarray(g.transpose(inverse)),), "permute")


def _channel_view(v, ndim, axis):
    shape = [1] * ndim
    shape[axis] = v.shape[0]
    return v.reshape(shape)


def scale_channels(x, gamma, axis=1):
    """Multiply ``x`` by a per-channel vector laid along ``axis``."""
    x, gamma = as_tensor(x), as_tensor(gamma)
    axis = axis % x.ndim
    if gamma.ndim != 1 or gamma.shape[0] != x.shape[axis]:
        raise DimensionError(
            f"scale_channels: gamma shape {gamma.shape} does not match axis {axis} "
            f"of extent {x.shape[axis]}")
    gv = _channel_view(gamma.data, x.ndim, axis)
    xd = x.data
    others = tuple(i for i in range(x.ndim) if i != axis)

    def rule(g):
        return g * gv, (g * xd).sum(axis=others)

    return record(xd * gv, (x, gamma), rule, "scale_channels")


# convolution

def _conv_windows(xp, kh, kw, sh, sw, oh, ow):
    # (N, C, Hp, Wp) -> strided view (N, C, oh, ow, kh, kw)
    v = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    return v[:, :, ::sh, ::sw][:, :, :oh, :ow]


def _depthwise_operands(xp, wd, sh, sw, oh, ow):
    """Depthwise correlation as one batched matmul per channel.

    Row bands of the padded input, (C, N*oh, kh*Wp), times a banded Toeplitz
    matrix built from each channel's kernel, (C, kh*Wp, ow).
    """
    n, c, _, wp = xp.shape
    kh, kw = wd.shape[2:]
    bands = sliding_window_view(xp, kh, axis=2)[:, :, ::sh][:, :, :oh]  # (N, C, oh, Wp, kh)
    rows = bands.transpose(1, 0, 2, 4, 3).reshape(c, n * oh, kh * wp)
    toeplitz = np.zeros((c, kh, wp, ow))
    q = np.arange(ow)
    for j in range(kw):
        toeplitz[:, :, q * sw + j, q] = wd[:, 0, :, j][:, :, None]
    return rows, toeplitz.reshape(c, kh * wp, ow)


def conv2d(x, weight, bias=None, stride=1, padding=0, groups=1):
    """2-D cross-correlation over NCHW input with zero padding and groups.

    ``weight`` is (Cout, Cin/groups, Kh, Kw). ``groups == Cin`` with one
    filter per channel is the depthwise case.
    """
    x, weight = as_tensor(x), as_tensor(weight)
    bias = None if bias is None else as_tensor(bias)
    if x.ndim != 4:
        raise DimensionError(f"conv2d: input must be NCHW, got rank {x.ndim}")
    if weight.ndim != 4:
        raise DimensionError(f"conv2d: weight must be rank 4, got rank {weight.ndim}")
    groups = int(groups)
    if groups < 1:
        raise ConfigurationError(f"conv2d: groups must be positive, got {groups}")
    n, cin, h, w = x.shape
    cout, cg, kh, kw = weight.shape
    if cin % groups or cout % groups:
        raise ConfigurationError(
            f"conv2d: groups={groups} must divide Cin={cin} and Cout={cout}")
    if cg != cin // groups:
        raise DimensionError(
            f"conv2d: weight axis 1 is {cg}, expected Cin/groups = {cin // groups}")
    if bias is not None and bias.shape != (cout,):
        raise DimensionError(f"conv2d: bias shape {bias.shape}, expected ({cout},)")
    sh, sw = _pair(stride)
    ph, pw = _pair(padding)
    if sh < 1 or sw < 1 or ph < 0 or pw < 0:
        raise ConfigurationError(f"conv2d: bad stride {stride!r} or padding {padding!r}")
    if h + 2 * ph < kh:
        raise DimensionError(f"conv2d: height {h} + 2*{ph} is smaller than kernel {kh}")
    if w + 2 * pw < kw:
        raise DimensionError(f"conv2d: width {w} + 2*{pw} is smaller than kernel {kw}")
    oh = (h + 2 * ph - kh) // sh + 1
    ow = (w + 2 * pw - kw) // sw + 1
    og = cout // groups

    xd, wd = x.data, weight.data
    xp = np.pad(xd, ((0, 0), (0, 0), (ph, ph), (pw, pw))) if (ph or pw) else xd
    depthwise = cg == 1 and og == 1

    if groups == 1:
        cols = _conv_windows(xp, kh, kw, sh, sw, oh, ow)
        out = np.tensordot(cols, wd, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    elif depthwise:
        rows, toeplitz = _depthwise_operands(xp, wd, sh, sw, oh, ow)
        out = (rows @ toeplitz).reshape(cin, n, oh, ow).transpose(1, 0, 2, 3)
    else:
        cols = _conv_windows(xp, kh, kw, sh, sw, oh, ow).reshape(n, groups, cg, oh, ow, kh, kw)
        wg = wd.reshape(groups, og, cg, kh, kw)
        out = np.einsum("ngchwij,gocij->ngohw", cols, wg, optimize=True).reshape(n, cout, oh, ow)
    out = np.ascontiguousarray(out)
    if bias is not None:
        out += bias.data[None, :, None, None]

    def rule(g):
        gx = gw = gb = None
        if depthwise:
            gc = g.transpose(1, 0, 2, 3).reshape(cin, n * oh, ow)
        if bias is not None and bias.requires_grad:
            gb = g.sum(axis=(0, 2, 3))
        if weight.requires_grad:
            if groups == 1:
                cols = _conv_windows(xp, kh, kw, sh, sw, oh, ow)
                gw = np.tensordot(g, cols, axes=([0, 2, 3], [0, 2, 3]))
            elif depthwise:
                gt = (rows.transpose(0, 2, 1) @ gc).reshape(cin, kh, -1, ow)
                gw = np.empty_like(wd)
                q = np.arange(ow)
                for j in range(kw):
                    gw[:, 0, :, j] = gt[:, :, q * sw + j, q].sum(axis=-1)
            else:
                cols = _conv_windows(xp, kh, kw, sh, sw, oh, ow).reshape(
                    n, groups, cg, oh, ow, kh, kw)
                gg = g.reshape(n, groups, og, oh, ow)
                gw = np.einsum("ngohw,ngchwij->gocij", gg, cols, optimize=True).reshape(wd.shape)
        if x.requires_grad and depthwise:
            gxp = np.zeros(xp.shape)
            grows = (gc @ toeplitz.transpose(0, 2, 1)).reshape(cin, n, oh, kh, -1)
            grows = grows.transpose(1, 0, 2, 3, 4)
            for i in range(kh):
                gxp[:, :, i:i + sh * (oh - 1) + 1:sh, :] += grows[:, :, :, i, :]
            gx = gxp[:, :, ph:ph + h, pw:pw + w]
        elif x.requires_grad:
            gxp = np.zeros(xp.shape)
            if groups == 1:
                # (N, oh, ow, Cin, kh, kw)
                dcols = np.tensordot(g, wd, axes=([1], [0]))
            else:
                gg = g.reshape(n, groups, og, oh, ow)
                wg = wd.reshape(groups, og, cg, kh, kw)
            for i in range(kh):
                for j in range(kw):
                    rsl = slice(i, i + sh * (oh - 1) + 1, sh)
                    csl = slice(j, j + sw * (ow - 1) + 1, sw)
                    if groups == 1:
                        gxp[:, :, rsl, csl] += dcols[..., i, j].transpose(0, 3, 1, 2)
                    else:
                        contrib = np.einsum("ngohw,goc->ngchw", gg, wg[..., i, j])
                        gxp[:, :, rsl, csl] += contrib.reshape(n, cin, oh, ow)
            gx = gxp[:, :, ph:ph + h, pw:pw + w]
        return gx, gw, gb

    parents = (x, weight) if bias is None else (x, weight, bias)
    return record(out, parents, rule, "conv2d")


# normalisation and activations

def layer_norm(x, axis, gamma, beta, eps=1e-6):
    """Normalise ``x`` along one axis with the biased variance, then affine."""
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if eps < 0:
        raise ConfigurationError(f"layer_norm: eps must be non-negative, got {eps}")
    axis = axis % x.ndim
    extent = x.shape[axis]
    if extent == 0:
        raise DimensionError(f"layer_norm: normalised axis {axis} has zero length")
    if gamma.shape != (extent,) or beta.shape != (extent,):
        raise DimensionError(
            f"layer_norm: gamma {gamma.shape} / beta {beta.shape} must both be ({extent},)")
    xd = x.data
    mu = xd.mean(axis=axis, keepdims=True)
    xc = xd - mu
    var = (xc * xc).mean(axis=axis, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = xc * rstd
    gv = _channel_view(gamma.data, x.ndim, axis)
    bv = _channel_view(beta.data, x.ndim, axis)
    out = xhat * gv + bv
    others = tuple(i for i in range(x.ndim) if i != axis)

    def rule(g):
        gxhat = g * gv
        gx = rstd * (gxhat - gxhat.mean(axis=axis, keepdims=True)
                     - xhat * (gxhat * xhat).mean(axis=axis, keepdims=True))
        return gx, (g * xhat).sum(axis=others), g.sum(axis=others)

    return record(out, (x, gamma, beta), rule, "layer_norm")


def gelu(x):
    """Exact GELU, x * Phi(x) with Phi the standard normal cdf."""
    x = as_tensor(x)
    xd = x.data
    cdf = ndtr(xd)

    def rule(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * xd * xd)
        return (g * (cdf + xd * pdf),)

    return record(xd * cdf, (x,), rule, "gelu")


def linear(x, weight, bias=None):
    x, weight = as_tensor(x), as_tensor(weight)
    bias = None if bias is None else as_tensor(bias)
    if x.ndim != 2 or weight.ndim != 2:
        raise DimensionError(
            f"linear: expected x (N, Din) and weight (Dout, Din), got {x.shape} and {weight.shape}")
    if x.shape[1] != weight.shape[1]:
        raise DimensionError(
            f"linear: x has Din={x.shape[1]} but weight has Din={weight.shape[1]}")
    if bias is not None and bias.shape != (weight.shape[0],):
        raise DimensionError(f"linear: bias shape {bias.shape}, expected ({weight.shape[0]},)")
    xd, wd = x.data, weight.data
    out = xd @ wd.T
    if bias is not None:
        out += bias.data

    def rule(g):
        gb = g.sum(axis=0) if bias is not None else None
        return g @ wd, g.T @ xd, gb

    parents = (x, weight) if bias is None else (x, weight, bias)
    return record(out, parents, rule, "linear")


def mean_pool_spatial(x):
    x = as_tensor(x)
    if x.ndim != 4:
        raise DimensionError(f"mean_pool_spatial: expected NCHW, got rank {x.ndim}")
    n, c, h, w = x.shape
    if h * w < 1:
        raise DimensionError("mean_pool_spatial: empty spatial extent")

    def rule(g):
        return (np.broadcast_to(g[:, :, None, None] / (h * w), (n, c, h, w)).copy(),)

    return record(x.data.mean(axis=(2, 3)), (x,), rule, "mean_pool_spatial")


def softmax_cross_entropy(logits, labels):
    """Mean negative log-likelihood of integer ``labels`` under softmax(logits)."""
    logits = as_tensor(logits)
    if logits.ndim != 2:
        raise DimensionError(f"softmax_cross_entropy: logits must be (N, K), got {logits.shape}")
    n, k = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise DimensionError(f"softmax_cross_entropy: {labels.shape[0] if labels.ndim else 0} "
                             f"labels for {n} rows")
    bad = np.flatnonzero((labels < 0) | (labels >= k))
    if bad.size:
        row = int(bad[0])
        raise LabelError(f"label {labels[row]} in row {row} is outside [0, {k})")
    labels = labels.astype(np.intp)
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    ez = np.exp(z)
    sez = ez.sum(axis=1, keepdims=True)
    rows = np.arange(n)
    loss = np.mean(np.log(sez[:, 0]) - z[rows, labels])

    def rule(g):
        p = ez / sez
        p[rows, labels] -= 1.0
        return (p * (g / n),)

    return record(np.asarray(loss), (logits,), rule, "softmax_cross_entropy")


def stochastic_depth(x, residual, drop_prob, training, rng=None):
    """Residual sum where the branch is dropped per sample while training.

    Survivors are rescaled by 1/(1 - drop_prob) so the expectation equals
    the evaluation-mode output ``x + residual``.
    """
    x, residual = as_tensor(x), as_tensor(residual)
    _same_shape(x, residual, "stochastic_depth")
    if not 0.0 <= drop_prob < 1.0:
        raise ConfigurationError(f"stochastic_depth: drop_prob must lie in [0, 1), got {drop_prob}")
    if not training or drop_prob == 0.0:
        return add(x, residual)
    if rng is None:
        raise ConfigurationError("stochastic_depth: training with drop_prob > 0 needs an rng")
    keep_prob = 1.0 - drop_prob
    if x.ndim == 0:
        mask = np.asarray(float(rng.random() >= drop_prob))
    else:
        draws = rng.random(x.shape[0]) >= drop_prob
        mask = draws.astype(np.float64).reshape((x.shape[0],) + (1,) * (x.ndim - 1))
    factor = mask / keep_prob
    out = x.data + residual.data * factor
    return record(out, (x, residual), lambda g: (g, g * factor), "stochastic_depth")
