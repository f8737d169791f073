"""Symmetric FastICA (log-cosh contrast) and kurtosis-based component rejection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError, RankError


@dataclass
class ICAResult:
    sources: np.ndarray     # (n_components, samples)
    mixing: np.ndarray      # (channels, n_components)
    unmixing: np.ndarray    # (n_components, channels), applied to centred data
    mean: np.ndarray        # (channels,)
    n_iter: int
    delta: float

    def reconstruct(self, sources=None):
        s = self.sources if sources is None else sources
        return self.mixing @ s + self.mean[:, None]


def _sym_decorrelate(w):
    # (W W^T)^(-1/2) W
    s, u = np.linalg.eigh(w @ w.T)
    s = np.clip(s, np.finfo(float).tiny, None)
    return (u * (1.0 / np.sqrt(s))) @ u.T @ w


def whiten(x, n_components=None, rank_tol=1e-10):
    """Centre and whiten; returns (z, whitening, dewhitening, mean)."""
    x = np.asarray(x, dtype=np.float64)
    m, t = x.shape
    mean = x.mean(axis=1)
    xc = x - mean[:, None]
    cov = xc @ xc.T / t
    d, e = np.linalg.eigh(cov)
    order = np.argsort(d)[::-1]
    d, e = d[order], e[:, order]
    n = m if n_components is None else int(n_components)
    if not 1 <= n <= m:
        raise RankError(f"n_components={n} outside 1..{m}", stage="ica")
    if d[0] <= 0 or d[n - 1] <= rank_tol * d[0]:
        raise RankError(f"covariance is rank deficient (eigenvalue {d[n - 1]:.3e} "
                        f"vs largest {d[0]:.3e})", stage="ica")
    d, e = d[:n], e[:, :n]
    k = (e / np.sqrt(d)).T
    k_inv = e * np.sqrt(d)
    return k @ xc, k, k_inv, mean


def fastica(x, n_components=None, max_iter=400, tol=1e-6, rng=None, alpha=1.0):
    """Estimate independent components of ``x`` (components x samples).

    Fixed-point iteration on the whitened data with all rows updated
    together and re-orthogonalised symmetrically. Converged when
    max |1 - |diag(W_k W_{k-1}^T)|| < tol.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise RankError(f"expected a 2-D matrix, got shape {x.shape}", stage="ica")
    if not np.all(np.isfinite(x)):
        raise RankError("input contains non-finite values", stage="ica")
    z, k, k_inv, mean = whiten(x, n_components)
    n, t = z.shape
    rng = rng if rng is not None else np.random.default_rng(0)
    w = _sym_decorrelate(rng.normal(size=(n, n)))
    delta = np.inf
    for it in range(1, max_iter + 1):
        wz = alpha * (w @ z)
        g = np.tanh(wz)
        g_prime = alpha * (1.0 - g * g)
        w_new = _sym_decorrelate(g @ z.T / t - g_prime.mean(axis=1)[:, None] * w)
        delta = float(np.max(np.abs(1.0 - np.abs(np.einsum("ij,ij->i", w_new, w)))))
        w = w_new
        if delta < tol:
            break
    else:
        raise ConvergenceError(f"FastICA did not converge in {max_iter} iterations", delta)
    unmixing = w @ k
    mixing = k_inv @ w.T
    return ICAResult(unmixing @ (x - mean[:, None]), mixing, unmixing, mean, it, delta)


def excess_kurtosis(s):
    """Fisher (excess) kurtosis of each row."""
    s = np.asarray(s, dtype=np.float64)
    c = s - s.mean(axis=-1, keepdims=True)
    m2 = (c * c).mean(axis=-1)
    m4 = (c ** 4).mean(axis=-1)
    return m4 / (m2 * m2) - 3.0


def reject_artifacts(recording, ica, kurtosis_threshold=8.0):
    """Zero the heavy-tailed components and rebuild the channels.

    Returns (cleaned recording, indices of rejected components).
    """
    kurt = excess_kurtosis(ica.sources)
    rejected = [int(i) for i in np.flatnonzero(kurt > kurtosis_threshold)]
    kept = ica.sources.copy()
    kept[rejected] = 0.0
    return recording.with_data(ica.reconstruct(kept)), rejected
