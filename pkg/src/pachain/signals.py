"""Baseband excitation generation, pulse shaping, and noise realizations.

The excitation pipeline is 16-QAM symbols -> zero-insertion upsampling ->
root-raised-cosine shaping.  The shaped signal is calibrated so that its peak
amplitude is exactly 1: driving it at input power ``p0 <= 1`` then keeps every
sample inside the amplifier's invertible region (the cubic model's output
magnitude peaks at an input magnitude of about 1 for the default nonlinearity
coefficient).  ``p0`` is therefore a drive level relative to saturation, not
the mean sample power; the mean power of the unit-drive excitation is set by
the constellation and shaping (about 0.22 for the defaults).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

QAM16_LEVELS = np.array([-3, -1, 1, 3], dtype=float)
# Mean energy of the unnormalized {+-1, +-3}^2 constellation: (2*1 + 2*9)/4
# per axis, times two axes.
QAM16_SECOND_MOMENT = 10.0


class DegenerateSignalError(ValueError):
    """Raised when an operation needs signal energy and there is none."""


@dataclass(frozen=True)
class Signal:
    """Complex baseband samples plus the metadata needed to interpret them.

    ``nominal_power`` is the mean of |sample|^2 and is kept consistent by the
    operations in this module.
    """

    samples: np.ndarray
    oversampling: int
    symbol_count: int
    nominal_power: float

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=complex)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if len(samples) != self.symbol_count * self.oversampling:
            raise ValueError(
                f"length {len(samples)} != symbol_count*oversampling "
                f"({self.symbol_count}*{self.oversampling})"
            )

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))


@dataclass(frozen=True)
class NoiseRealization:
    """Per-stage unit-variance complex noise, regenerable from its seed."""

    stage_noise: np.ndarray  # shape (stages, length)
    seed: int

    @property
    def stages(self) -> int:
        return self.stage_noise.shape[0]

    @property
    def length(self) -> int:
        return self.stage_noise.shape[1]


def generate_qam16(symbol_count: int, seed: int) -> np.ndarray:
    """Draw uniform 16-QAM symbols from {+-1, +-3} x {+-1, +-3}.

    The raw constellation is returned (second moment 10); scaling to unit
    average power happens in unit_excitation.
    """
    if symbol_count < 1:
        raise ValueError(f"symbol_count must be >= 1, got {symbol_count}")
    rng = np.random.default_rng(seed)
    re = QAM16_LEVELS[rng.integers(0, 4, symbol_count)]
    im = QAM16_LEVELS[rng.integers(0, 4, symbol_count)]
    return re + 1j * im


def rrc_taps(oversampling: int, rolloff: float, span_symbols: int) -> np.ndarray:
    """Unit-energy root-raised-cosine filter, span_symbols*oversampling+1 taps."""
    n_taps = span_symbols * oversampling + 1
    t = (np.arange(n_taps) - (n_taps - 1) / 2) / oversampling
    taps = np.empty(n_taps)
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            taps[i] = 1.0 - rolloff + 4.0 * rolloff / np.pi
        elif abs(abs(4.0 * rolloff * ti) - 1.0) < 1e-9:
            # Removable singularity at t = +-1/(4*rolloff).
            taps[i] = (rolloff / np.sqrt(2.0)) * (
                (1 + 2 / np.pi) * np.sin(np.pi / (4 * rolloff))
                + (1 - 2 / np.pi) * np.cos(np.pi / (4 * rolloff))
            )
        else:
            num = np.sin(np.pi * ti * (1 - rolloff)) + 4 * rolloff * ti * np.cos(
                np.pi * ti * (1 + rolloff)
            )
            den = np.pi * ti * (1 - (4 * rolloff * ti) ** 2)
            taps[i] = num / den
    return taps / np.sqrt(np.sum(taps**2))


def pulse_shape(
    symbols: np.ndarray,
    oversampling: int,
    rolloff: float,
    span_symbols: int,
) -> Signal:
    """Upsample by zero insertion and convolve with a unit-energy RRC filter.

    Output length is symbol_count * oversampling ("same" alignment, so the
    filter transient is split between both ends).
    """
    if oversampling < 2:
        raise ValueError("oversampling must be >= 2 (adjacent channel would alias)")
    if not 0 < rolloff <= 1:
        raise ValueError(f"rolloff must be in (0, 1], got {rolloff}")
    if span_symbols < 4:
        raise ValueError(f"span_symbols must be >= 4, got {span_symbols}")
    symbols = np.asarray(symbols, dtype=complex)
    upsampled = np.zeros(len(symbols) * oversampling, dtype=complex)
    upsampled[::oversampling] = symbols
    shaped = np.convolve(upsampled, rrc_taps(oversampling, rolloff, span_symbols), mode="same")
    return Signal(
        samples=shaped,
        oversampling=oversampling,
        symbol_count=len(symbols),
        nominal_power=float(np.mean(np.abs(shaped) ** 2)),
    )


def normalize_power(signal: Signal, target_power: float) -> Signal:
    """Scale all samples by one real factor so mean |sample|^2 == target_power."""
    if target_power <= 0:
        raise ValueError(f"target_power must be > 0, got {target_power}")
    current = signal.mean_power
    if current == 0.0:
        raise DegenerateSignalError("cannot normalize an all-zero signal")
    factor = np.sqrt(target_power / current)
    return replace(
        signal,
        samples=signal.samples * factor,
        nominal_power=target_power,
    )


def scale_amplitude(signal: Signal, factor: float) -> Signal:
    """Multiply every sample by a real factor, updating nominal_power."""
    return replace(
        signal,
        samples=signal.samples * factor,
        nominal_power=signal.nominal_power * factor**2,
    )


def unit_excitation(
    symbol_count: int,
    oversampling: int,
    rolloff: float,
    span_symbols: int,
    seed: int,
) -> Signal:
    """Shaped 16-QAM excitation calibrated to unit drive (peak amplitude 1).

    The constellation is first scaled to unit average power, shaped, and the
    result divided by its own peak magnitude.  Scaling this signal by sqrt(p0)
    gives the input at drive power p0, with peaks at sqrt(p0) <= 1.
    """
    symbols = generate_qam16(symbol_count, seed) / np.sqrt(QAM16_SECOND_MOMENT)
    shaped = pulse_shape(symbols, oversampling, rolloff, span_symbols)
    peak = float(np.max(np.abs(shaped.samples)))
    if peak == 0.0:
        raise DegenerateSignalError("excitation has zero peak amplitude")
    return scale_amplitude(shaped, 1.0 / peak)


def draw_noise(stages: int, length: int, seed: int) -> NoiseRealization:
    """Circularly-symmetric complex Gaussian noise, unit variance per sample.

    Returns one independent sequence per stage; deterministic per seed, and
    the first k rows of a (stages >= k) draw equal the rows of a k-stage draw
    with the same seed.
    """
    if stages < 1:
        raise ValueError(f"stages must be >= 1, got {stages}")
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    rng = np.random.default_rng(seed)
    # One interleaved draw per stage keeps row k identical for any total
    # stage count, so a K=2 realization is a prefix of the K=5 one.
    noise = np.empty((stages, length), dtype=complex)
    for k in range(stages):
        re = rng.standard_normal(length)
        im = rng.standard_normal(length)
        noise[k] = (re + 1j * im) * np.sqrt(0.5)
    return NoiseRealization(stage_noise=noise, seed=seed)
