"""Cascaded third-order power-amplifier model and its one-shot equivalent.

A single stage maps x -> g * f(x) with f(x) = x + alpha*x*|x|^2; a cascade
applies K such stages with additive Gaussian noise injected before each one.
The whole chain is also summarized by an equivalent single PA:

    g_tilde     = prod_k g_k
    alpha_tilde = alpha_1 + sum_{k>=2} alpha_k * prod_{q<k} g_q^2
    sigma_tilde = sigma * sqrt( sum_k prod_{q>=k} g_q^2 )

obtained by discarding terms of second and higher order in the alphas, so the
equivalent model's error shrinks quadratically (in amplitude) as the alphas
shrink.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .signals import NoiseRealization, Signal

# |alpha| beyond this is outside the cubic model's sensible range: saturation
# would sit below typical drive levels and the fit to a real PA is meaningless.
ALPHA_VALIDITY_LIMIT = 1.0


class SaturationUndefinedError(ValueError):
    """A linear stage (alpha = 0) has no saturation point."""


class ModelValidityWarning(UserWarning):
    """A stage is being driven past the cubic model's monotone region."""


@dataclass(frozen=True)
class PaStage:
    """One amplifier: third-order coefficient and real linear gain.

    The gain folds the amplifier gain and any connector loss into one number.
    """

    alpha: complex
    gain: float

    def __post_init__(self) -> None:
        if self.gain <= 0:
            raise ValueError(f"gain must be > 0, got {self.gain}")
        if abs(self.alpha) > ALPHA_VALIDITY_LIMIT:
            raise ValueError(
                f"|alpha| = {abs(self.alpha):.3g} exceeds the model validity "
                f"limit {ALPHA_VALIDITY_LIMIT}"
            )


@dataclass(frozen=True)
class CascadeConfig:
    """A full chain: stages, noise level, drive, and gain-bound window."""

    stages: tuple[PaStage, ...]
    sigma: float
    input_power: float
    reference_gain: float
    epsilon: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "stages", tuple(self.stages))
        if len(self.stages) < 1:
            raise ValueError("cascade needs at least one stage")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not 0 < self.input_power <= 1:
            raise ValueError(f"input_power must be in (0, 1], got {self.input_power}")
        if self.reference_gain <= 0:
            raise ValueError(f"reference_gain must be > 0, got {self.reference_gain}")
        if not 0 <= self.epsilon < 1:
            raise ValueError(f"epsilon must be in [0, 1), got {self.epsilon}")

    @property
    def stage_count(self) -> int:
        return len(self.stages)

    @property
    def gains(self) -> np.ndarray:
        return np.array([s.gain for s in self.stages])

    @property
    def alphas(self) -> np.ndarray:
        return np.array([s.alpha for s in self.stages], dtype=complex)

    @property
    def gain_bounds(self) -> tuple[float, float]:
        return (
            (1.0 - self.epsilon) * self.reference_gain,
            (1.0 + self.epsilon) * self.reference_gain,
        )

    def gains_feasible(self, tolerance: float = 0.0) -> bool:
        """Whether every stage gain sits inside the bound window."""
        lo, hi = self.gain_bounds
        g = self.gains
        return bool(np.all(g >= lo - tolerance) and np.all(g <= hi + tolerance))


@dataclass(frozen=True)
class EquivalentPa:
    """Closed-form single-PA summary (g_tilde, alpha_tilde, sigma_tilde)."""

    g_tilde: float
    alpha_tilde: complex
    sigma_tilde: float


@dataclass(frozen=True)
class CascadeRun:
    """Final output plus (optionally) every intermediate stage output."""

    output: Signal
    stage_outputs: tuple[Signal, ...]


def pa_nonlinearity(x, alpha):
    """f(x) = x + alpha * x * |x|^2, elementwise over scalars or arrays."""
    return x + alpha * x * np.abs(x) ** 2


def stage_forward(
    y_prev: Signal,
    stage: PaStage,
    sigma: float,
    noise_slice: np.ndarray | None = None,
) -> Signal:
    """One stage: g * f(previous output + sigma * noise)."""
    x = y_prev.samples
    if noise_slice is not None and len(noise_slice) != len(x):
        raise ValueError(
            f"noise length {len(noise_slice)} != signal length {len(x)}"
        )
    if sigma != 0.0:
        if noise_slice is None:
            raise ValueError("sigma > 0 requires a noise_slice")
        x = x + sigma * noise_slice
    out = stage.gain * pa_nonlinearity(x, stage.alpha)
    return Signal(
        samples=out,
        oversampling=y_prev.oversampling,
        symbol_count=y_prev.symbol_count,
        nominal_power=float(np.mean(np.abs(out) ** 2)),
    )


def cascade_samples(
    x0: np.ndarray,
    alphas: np.ndarray,
    gains: np.ndarray,
    sigma: float,
    stage_noise: np.ndarray | None = None,
) -> np.ndarray:
    """Bare-array cascade kernel; the hot path for the optimizer.

    Applies y <- g_k * f(y + sigma*w_k) for k = 1..K with exactly the same
    arithmetic as the Signal-level loop.
    """
    y = x0
    for k in range(len(gains)):
        x = y
        if sigma != 0.0:
            x = x + sigma * stage_noise[k]
        y = gains[k] * pa_nonlinearity(x, alphas[k])
    return y


def cascade_forward(
    x0: Signal,
    config: CascadeConfig,
    noise: NoiseRealization | None = None,
    keep_stages: bool = True,
) -> CascadeRun:
    """Run the full chain, retaining per-stage outputs for diagnostics.

    ``x0`` must already be scaled to the configured drive (input_power).
    With ``keep_stages=False`` the intermediate outputs are discarded
    (stage_outputs is empty), which matters only for very long signals.

    Emits ModelValidityWarning if any stage's mean input power exceeds the
    squared saturation input of that stage -- the model still evaluates (the
    cubic folds over exactly as written), but it no longer resembles an
    amplifier there.
    """
    if config.sigma != 0.0:
        if noise is None:
            raise ValueError("sigma > 0 requires a NoiseRealization")
        if noise.stages < config.stage_count:
            raise ValueError(
                f"noise has {noise.stages} stage rows, cascade needs "
                f"{config.stage_count}"
            )
        if noise.length != len(x0):
            raise ValueError(
                f"noise length {noise.length} != signal length {len(x0)}"
            )

    overdriven: list[int] = []
    y = x0
    kept: list[Signal] = []
    for k, stage in enumerate(config.stages):
        stage_in = y.samples
        if config.sigma != 0.0:
            stage_in = stage_in + config.sigma * noise.stage_noise[k]
        if stage.alpha != 0:
            if np.mean(np.abs(stage_in) ** 2) > x_max(stage.alpha) ** 2:
                overdriven.append(k + 1)
        out = stage.gain * pa_nonlinearity(stage_in, stage.alpha)
        y = Signal(
            samples=out,
            oversampling=x0.oversampling,
            symbol_count=x0.symbol_count,
            nominal_power=float(np.mean(np.abs(out) ** 2)),
        )
        if keep_stages:
            kept.append(y)

    if overdriven:
        warnings.warn(
            f"stage(s) {overdriven} driven past the saturation input; the "
            "cubic model folds over in this regime",
            ModelValidityWarning,
            stacklevel=2,
        )
    return CascadeRun(output=y, stage_outputs=tuple(kept))


def equivalent_gain(gains: Sequence[float]) -> float:
    """Product of the stage gains."""
    gains = np.asarray(gains, dtype=float)
    if np.any(gains <= 0):
        raise ValueError("all gains must be > 0")
    return float(np.prod(gains))


def equivalent_alpha(gains: Sequence[float], alphas: Sequence[complex]) -> complex:
    """alpha_1 + sum_{k=2..K} alpha_k * prod_{q=1..k-1} g_q^2."""
    gains = np.asarray(gains, dtype=float)
    alphas = np.asarray(alphas, dtype=complex)
    if len(gains) != len(alphas):
        raise ValueError(f"got {len(gains)} gains but {len(alphas)} alphas")
    if len(alphas) == 0:
        raise ValueError("need at least one stage")
    total = alphas[0]
    prefix = 1.0
    for k in range(1, len(alphas)):
        prefix *= gains[k - 1] ** 2
        total = total + alphas[k] * prefix
    return complex(total)


def equivalent_sigma(gains: Sequence[float], sigma: float) -> float:
    """sigma * sqrt( sum_{k=1..K} prod_{q=k..K} g_q^2 )."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    gains = np.asarray(gains, dtype=float)
    if len(gains) == 1:
        # Single stage: the closed form collapses to sigma*g; return it
        # without a sqrt round trip.
        return sigma * float(gains[0])
    total = 0.0
    suffix = 1.0
    for g in gains[::-1]:
        suffix *= g**2
        total += suffix
    return sigma * float(np.sqrt(total))


def equivalent_pa(config: CascadeConfig) -> EquivalentPa:
    """Closed-form equivalent of the whole configured chain."""
    gains = config.gains
    return EquivalentPa(
        g_tilde=equivalent_gain(gains),
        alpha_tilde=equivalent_alpha(gains, config.alphas),
        sigma_tilde=equivalent_sigma(gains, config.sigma),
    )


def approx_cascade_forward(
    x0: Signal,
    config: CascadeConfig,
    noise_equiv: np.ndarray | None = None,
) -> Signal:
    """One-shot equivalent-PA model of the chain.

    y_tilde = g_tilde * f_tilde(x0) + sigma_tilde * w, where f_tilde uses
    alpha_tilde.  Pass ``noise_equiv=None`` (or zeros) for the noise-free
    form.
    """
    eq = equivalent_pa(config)
    out = eq.g_tilde * pa_nonlinearity(x0.samples, eq.alpha_tilde)
    if noise_equiv is not None:
        if len(noise_equiv) != len(x0):
            raise ValueError(
                f"noise length {len(noise_equiv)} != signal length {len(x0)}"
            )
        out = out + eq.sigma_tilde * noise_equiv
    return Signal(
        samples=out,
        oversampling=x0.oversampling,
        symbol_count=x0.symbol_count,
        nominal_power=float(np.mean(np.abs(out) ** 2)),
    )


def x_max(alpha: complex) -> float:
    """Input magnitude where the stage's output magnitude peaks: sqrt(1/(3|alpha|))."""
    if alpha == 0:
        raise SaturationUndefinedError("a linear stage has no saturation point")
    return float(np.sqrt(1.0 / (3.0 * abs(alpha))))


def scenario2_gain(alpha: complex) -> float:
    """Gain restoring a stage's peak output to the saturation input level.

    g = x_max / |f(x_max)|.  A chain of such stages keeps the signal peak at
    the saturation input of every stage, i.e. each PA runs at its maximum
    usable drive.  The magnitude is used because gains are real while
    f(x_max) is complex for complex alpha.
    """
    xm = x_max(alpha)
    return xm / abs(pa_nonlinearity(xm, alpha))
