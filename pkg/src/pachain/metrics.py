"""Signal-quality metrics: NMSE, PSD, ACLR, and AM/AM point clouds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as scipy_signal

from .signals import DegenerateSignalError, Signal

# Finite stand-in for -inf dB in serialized output.
FLOOR_DB = -300.0

# Channel width in symbol rates; matches the default shaping rolloff of 0.22
# (occupied bandwidth (1+rolloff) symbol rates).
DEFAULT_CHANNEL_BANDWIDTH = 1.22


@dataclass(frozen=True)
class PsdEstimate:
    """Averaged-periodogram PSD on a symmetric normalized frequency axis.

    frequencies are in symbol rates; power_density is in dB relative to the
    peak bin, with peak_density holding the absolute linear density of that
    peak so absolute levels can be reconstructed.
    """

    frequencies: np.ndarray
    power_density: np.ndarray
    segment_length: int
    overlap_fraction: float
    peak_density: float

    @property
    def bin_width(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    @property
    def total_power(self) -> float:
        """Integrated absolute power (density times bin width)."""
        return float(
            np.sum(10.0 ** (self.power_density / 10.0)) * self.peak_density * self.bin_width
        )


@dataclass(frozen=True)
class MetricsReport:
    """One signal's quality summary against its reference."""

    nmse_db: float
    aclr_db: float
    psd: PsdEstimate
    amam: np.ndarray  # shape (n, 2): |input|, |output|


def nmse(desired: Signal, actual: Signal) -> float:
    """10*log10( sum|d - a|^2 / sum|d|^2 ); -inf when the residual is zero."""
    d = desired.samples
    a = actual.samples
    if len(d) != len(a):
        raise ValueError(f"length mismatch: {len(d)} vs {len(a)}")
    denom = float(np.sum(np.abs(d) ** 2))
    if denom == 0.0:
        raise DegenerateSignalError("desired signal has zero energy")
    num = float(np.sum(np.abs(d - a) ** 2))
    if num == 0.0:
        return float("-inf")
    return 10.0 * np.log10(num / denom)


def estimate_psd(
    signal: Signal,
    segment_length: int = 1024,
    overlap_fraction: float = 0.5,
) -> PsdEstimate:
    """Welch PSD with a Hann window, axis in symbol rates, peak at 0 dB.

    The unpaired bin at minus the Nyquist frequency is dropped so the axis is
    symmetric about 0.
    """
    if segment_length > len(signal):
        raise ValueError(
            f"segment_length {segment_length} exceeds signal length {len(signal)}"
        )
    if not 0 <= overlap_fraction < 1:
        raise ValueError(f"overlap_fraction must be in [0, 1), got {overlap_fraction}")
    freqs, density = scipy_signal.welch(
        signal.samples,
        fs=float(signal.oversampling),
        window="hann",
        nperseg=segment_length,
        noverlap=int(segment_length * overlap_fraction),
        detrend=False,
        return_onesided=False,
        scaling="density",
    )
    freqs = np.fft.fftshift(freqs)
    density = np.fft.fftshift(density)
    if segment_length % 2 == 0:
        # Even-length FFT axes carry -Nyquist without +Nyquist.
        freqs = freqs[1:]
        density = density[1:]
    peak = float(np.max(density))
    if peak == 0.0:
        raise DegenerateSignalError("signal has no spectral power")
    with np.errstate(divide="ignore"):
        density_db = 10.0 * np.log10(density / peak)
    return PsdEstimate(
        frequencies=freqs,
        power_density=density_db,
        segment_length=segment_length,
        overlap_fraction=overlap_fraction,
        peak_density=peak,
    )


def aclr(psd: PsdEstimate, channel_bandwidth: float = DEFAULT_CHANNEL_BANDWIDTH) -> float:
    """Worst adjacent-channel to main-channel power ratio in dB.

    Main channel is [-B/2, B/2); the two adjacent channels are the same width
    centered at +-B.  Negative for well-behaved signals; -inf if the adjacent
    channels are empty.
    """
    b = channel_bandwidth
    f = psd.frequencies
    if f[-1] < 1.5 * b:
        raise ValueError(
            f"PSD spans only |f| <= {f[-1]:.3g} symbol rates; ACLR needs "
            f"{1.5 * b:.3g}"
        )
    linear = 10.0 ** (psd.power_density / 10.0)
    main = float(np.sum(linear[(f >= -b / 2) & (f < b / 2)]))
    upper = float(np.sum(linear[(f >= b / 2) & (f < 3 * b / 2)]))
    lower = float(np.sum(linear[(f >= -3 * b / 2) & (f < -b / 2)]))
    worst = max(upper, lower)
    if worst == 0.0:
        return float("-inf")
    return 10.0 * np.log10(worst / main)


def amam_points(input_signal: Signal, output_signal: Signal, decimate: int = 1) -> np.ndarray:
    """(|x_n|, |y_n|) pairs, optionally keeping every decimate-th sample."""
    if len(input_signal) != len(output_signal):
        raise ValueError(
            f"length mismatch: {len(input_signal)} vs {len(output_signal)}"
        )
    if decimate < 1:
        raise ValueError(f"decimate must be >= 1, got {decimate}")
    x = np.abs(input_signal.samples[::decimate])
    y = np.abs(output_signal.samples[::decimate])
    return np.column_stack([x, y])


def report(
    desired: Signal,
    actual: Signal,
    reference_input: Signal | None = None,
    segment_length: int = 1024,
    overlap_fraction: float = 0.5,
    channel_bandwidth: float = DEFAULT_CHANNEL_BANDWIDTH,
    amam_decimate: int = 1,
) -> MetricsReport:
    """Bundle NMSE, ACLR, PSD, and AM/AM for one output signal.

    AM/AM pairs are computed against ``reference_input`` when given (the
    chain's input), otherwise against ``desired``; ``amam_decimate`` thins
    the point cloud for plotting.
    """
    psd = estimate_psd(actual, segment_length, overlap_fraction)
    amam_ref = reference_input if reference_input is not None else desired
    return MetricsReport(
        nmse_db=nmse(desired, actual),
        aclr_db=aclr(psd, channel_bandwidth),
        psd=psd,
        amam=amam_points(amam_ref, actual, decimate=amam_decimate),
    )
