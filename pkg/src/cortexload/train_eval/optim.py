"""Adam and AdamW (decoupled weight decay) over dicts of float64 arrays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, NumericError


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "adamw"
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.05

    def __post_init__(self):
        if self.kind not in ("adam", "adamw"):
            raise ConfigurationError(f"optimizer kind must be adam or adamw, got {self.kind!r}")
        if not self.lr > 0:
            raise ConfigurationError(f"lr must be positive, got {self.lr}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigurationError("beta1 and beta2 must lie in [0, 1)")
        if not self.eps > 0:
            raise ConfigurationError("eps must be positive")
        if self.weight_decay < 0:
            raise ConfigurationError("weight_decay must be non-negative")


# Adam with the library defaults quoted for the baseline models
ADAM_DEFAULTS = OptimizerConfig(kind="adam", lr=1e-3, weight_decay=0.0)


@dataclass
class OptimizerState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0

    @classmethod
    def for_params(cls, params):
        return cls({k: np.zeros(np.shape(p)) for k, p in params.items()},
                   {k: np.zeros(np.shape(p)) for k, p in params.items()}, 0)


def _check_finite(grads):
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for {name}")


def adam_step(params, grads, state, config, lr=None):
    """One bias-corrected Adam update. Returns (new params, state)."""
    _check_finite(grads)
    lr = config.lr if lr is None else lr
    b1, b2 = config.beta1, config.beta2
    state.t += 1
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    out = {}
    for name, theta in params.items():
        g = grads.get(name)
        if g is None:
            out[name] = theta
            continue
        m = b1 * state.m[name] + (1.0 - b1) * g
        v = b2 * state.v[name] + (1.0 - b2) * g * g
        state.m[name], state.v[name] = m, v
        out[name] = theta - lr * (m / c1) / (np.sqrt(v / c2) + config.eps)
    return out, state


def default_decay_mask(name):
    return name.endswith(".weight")


def adamw_step(params, grads, state, config, lr=None, decay_mask=default_decay_mask):
    """Decay weights by lr * weight_decay, then the Adam update.

    Arrays for which ``decay_mask(name)`` is false (norm affine, biases,
    layer scale) are not decayed.
    """
    _check_finite(grads)
    lr = config.lr if lr is None else lr
    wd = config.weight_decay
    if wd:
        params = {k: (p - lr * wd * p if decay_mask(k) else p) for k, p in params.items()}
    return adam_step(params, grads, state, config, lr)


def optimizer_step(params, grads, state, config, lr=None, decay_mask=default_decay_mask):
    if config.kind == "adamw":
        return adamw_step(params, grads, state, config, lr, decay_mask)
    return adam_step(params, grads, state, config, lr)
