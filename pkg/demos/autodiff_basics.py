"""
Gradients with numkit
=====================

A small define-by-run tape: build a graph by calling ops on tensors, then
walk it backwards from a scalar.
"""

# %%
# A scalar function of a matrix: sum(gelu(x @ w.T + b))
import numpy as np
from cortexload import numkit as nk

rng = np.random.default_rng(0)
x = nk.Tensor(rng.normal(size=(4, 3)))
w = nk.Tensor(rng.normal(size=(2, 3)), requires_grad=True)
b = nk.Tensor(np.zeros(2), requires_grad=True)
loss = nk.tensor_sum(nk.gelu(nk.linear(x, w, b)))
nk.backward(loss)
print("loss", float(loss.data))
print("d loss / d w\n", w.grad)

# %%
# The same derivative by central differences, one entry at a time
h = 1e-5
numeric = np.zeros_like(w.data)
for idx in np.ndindex(w.data.shape):
    for sign in (1, -1):
        w2 = w.data.copy()
        w2[idx] += sign * h
        with nk.no_grad():
            value = float(nk.tensor_sum(nk.gelu(nk.linear(x, nk.Tensor(w2), b))).data)
        numeric[idx] += sign * value / (2 * h)
print("max |analytic - numeric|", np.abs(numeric - w.grad).max())

# %%
# Depthwise convolution: one 7x7 filter per channel, padding keeps the size
img = nk.Tensor(rng.normal(size=(1, 3, 7, 16)), requires_grad=True)
kernel = nk.Tensor(rng.normal(size=(3, 1, 7, 7)), requires_grad=True)
out = nk.conv2d(img, kernel, padding=3, groups=3)
print("depthwise output", out.shape)
nk.backward(nk.tensor_sum(out))
print("kernel gradient", kernel.grad.shape)

# %%
# Tensors can be dumped as raw float64 plus a text header
import tempfile
from pathlib import Path

with tempfile.TemporaryDirectory() as tmp:
    nk.save_tensor(Path(tmp) / "kernel", kernel.data)
    print((Path(tmp) / "kernel.hdr").read_text())
    assert np.array_equal(nk.load_tensor(Path(tmp) / "kernel"), kernel.data)
