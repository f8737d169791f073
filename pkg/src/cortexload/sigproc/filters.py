from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from ..errors import ConfigurationError, FilterDesignError


@dataclass(frozen=True)
class FilterSpec:
    """Butterworth band-pass; ``order`` is the prototype order per pass."""

    low_hz: float = 0.5
    high_hz: float = 45.0
    order: int = 4
    zero_phase: bool = True

    def validate(self, sample_rate):
        nyquist = sample_rate / 2.0
        if not 0.0 < self.low_hz < self.high_hz < nyquist:
            raise ConfigurationError(
                f"band {self.low_hz}-{self.high_hz} Hz invalid for Nyquist {nyquist} Hz")
        if self.order < 2 or self.order % 2:
            raise ConfigurationError(f"filter order must be a positive even integer, "
                                     f"got {self.order}")


def design_sos(spec, sample_rate):
    """Second-order sections (bilinear transform of the analog prototype)."""
    spec.validate(sample_rate)
    sos = signal.butter(spec.order, [spec.low_hz, spec.high_hz], btype="bandpass",
                        fs=sample_rate, output="sos")
    for k, section in enumerate(sos):
        poles = np.roots(section[3:])
        if np.any(np.abs(poles) >= 1.0):
            raise FilterDesignError(f"section {k} is unstable (|pole| = "
                                    f"{np.abs(poles).max():.6f})", stage="bandpass")
    return sos


def apply_sos(sos, data, zero_phase=True):
    """Filter along the last axis; zero-phase runs the cascade forward then backward."""
    data = np.asarray(data, dtype=np.float64)
    if not zero_phase:
        return signal.sosfilt(sos, data, axis=-1)
    n = data.shape[-1]
    default_pad = 3 * (2 * len(sos) + 1 - min((sos[:, 2] == 0).sum(), (sos[:, 5] == 0).sum()))
    return signal.sosfiltfilt(sos, data, axis=-1, padlen=min(default_pad, max(n - 1, 0)))


def bandpass(recording, spec=None):
    spec = spec or FilterSpec()
    sos = design_sos(spec, recording.sample_rate)
    return recording.with_data(apply_sos(sos, recording.data, spec.zero_phase))


def magnitude_response(spec, sample_rate, freqs):
    """|H(f)| of one pass of the digital design at ``freqs`` (Hz)."""
    sos = design_sos(spec, sample_rate)
    _, h = signal.sosfreqz(sos, worN=np.asarray(freqs, dtype=float), fs=sample_rate)
    return np.abs(h)
