"""
The ConvNeXt-EEG model
======================

A window of shape (1, 14, 128) passes a patchify stem, four stages of
ConvNeXt blocks and a pooled linear head.
"""

# %%
import numpy as np

from cortexload.convnext_eeg import ConvNeXtConfig, ConvNeXtEEG, block_drop_probs, forward_features

config = ConvNeXtConfig(num_classes=3)
model = ConvNeXtEEG(config, rng=np.random.default_rng(0))
print("parameters:", model.num_parameters())
print("drop probability per block:", block_drop_probs(config))

# %%
# Feature-map shape after each stage
batch = np.random.default_rng(1).random((2, 1, 14, 128))
shapes = []
features = forward_features(batch, model.params, config, collect=shapes)
for stage, shape in enumerate(shapes):
    print(f"stage {stage}: {shape}")
print("pooled features", features.shape)

# %%
# Logits and class probabilities
logits = model(batch).data
probs = np.exp(logits - logits.max(axis=1, keepdims=True))
probs /= probs.sum(axis=1, keepdims=True)
print(np.round(probs, 4))

# %%
# Parameter registry, in checkpoint order
for name, p in list(model.params.items())[:14]:
    print(f"{name:32s} {p.shape}")
