"""Box-constrained nonlinear least squares over drive power and stage gains.

The objective is ||G*x_unit - y_K(theta)||^2 where y_K is the cascade output
at drive p0 with the stage gains taken from theta (or held fixed, depending
on the mode).  Normalizing the desired signal by 1/sqrt(p0) cancels the p0
dependence of the reference, so the desired side is simply G times the
unit-drive excitation.

The solver is a damped Gauss-Newton (Levenberg-Marquardt) iteration with a
finite-difference Jacobian and projection of trial points onto the box; at
most K+1 parameters are ever optimized, so the Jacobian is cheap.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cascade import CascadeConfig, cascade_samples, scenario2_gain
from .signals import NoiseRealization, Signal

POWER_LOWER_BOUND = 1e-6  # open interval 0 < p0 is not machine-representable
LAMBDA_LIMIT = 1e12
START_MARGIN = 1e-3  # fraction of the box width the start is pushed inside


class UnsupportedModeError(ValueError):
    """The requested operation does not support this optimization mode."""


class InvalidStartError(ValueError):
    """The objective is not finite at the starting point."""


class Mode(enum.Enum):
    POWER_ONLY = "power"
    EQUAL_GAINS = "equal-gains"
    UNEQUAL_GAINS = "unequal-gains"
    JOINT_EQUAL_GAINS = "joint-equal"
    JOINT_UNEQUAL_GAINS = "joint-unequal"


class SolveStatus(enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    STALLED_AT_BOUND = "StalledAtBound"


class Scenario(enum.Enum):
    ONE = 1
    TWO = 2


def mode_dimension(mode: Mode, stage_count: int) -> int:
    """Number of free parameters for a mode over a K-stage cascade."""
    return {
        Mode.POWER_ONLY: 1,
        Mode.EQUAL_GAINS: 1,
        Mode.UNEQUAL_GAINS: stage_count,
        Mode.JOINT_EQUAL_GAINS: 2,
        Mode.JOINT_UNEQUAL_GAINS: stage_count + 1,
    }[mode]


def expand_parameters(
    theta: np.ndarray, mode: Mode, config: CascadeConfig
) -> tuple[float, np.ndarray]:
    """Map a parameter vector to (p0, per-stage gains).

    Values not covered by the mode come from the config: gains for
    power-only, drive power for the gains-only modes.
    """
    theta = np.asarray(theta, dtype=float)
    expected = mode_dimension(mode, config.stage_count)
    if theta.shape != (expected,):
        raise ValueError(
            f"mode {mode.value} over {config.stage_count} stages takes "
            f"{expected} parameters, got shape {theta.shape}"
        )
    k = config.stage_count
    if mode is Mode.POWER_ONLY:
        return float(theta[0]), config.gains
    if mode is Mode.EQUAL_GAINS:
        return config.input_power, np.full(k, theta[0])
    if mode is Mode.UNEQUAL_GAINS:
        return config.input_power, theta.copy()
    if mode is Mode.JOINT_EQUAL_GAINS:
        return float(theta[0]), np.full(k, theta[1])
    return float(theta[0]), theta[1:].copy()


def scenario_start(
    scenario: Scenario,
    stage_count: int,
    alpha: complex,
    mode: Mode | None = None,
) -> np.ndarray:
    """Starting point from one of the two bracketing configurations.

    Scenario ONE: unit gains (amplification just covers connector losses).
    Scenario TWO: every stage at the maximum-drive gain scenario2_gain(alpha).
    Both start at full drive p0 = 1.  With a mode given, the full
    (p0, gains) start is reduced to that mode's parameter vector.
    """
    if stage_count < 1:
        raise ValueError(f"stage_count must be >= 1, got {stage_count}")
    if scenario is Scenario.ONE:
        gains = np.ones(stage_count)
    else:
        gains = np.full(stage_count, scenario2_gain(alpha))
    if mode is None:
        return np.concatenate([[1.0], gains])
    if mode is Mode.POWER_ONLY:
        return np.array([1.0])
    if mode is Mode.EQUAL_GAINS:
        return gains[:1].copy()
    if mode is Mode.UNEQUAL_GAINS:
        return gains.copy()
    if mode is Mode.JOINT_EQUAL_GAINS:
        return np.array([1.0, gains[0]])
    return np.concatenate([[1.0], gains])


@dataclass(frozen=True)
class OptimizationSpec:
    """What to solve: mode, start, box, and termination settings."""

    mode: Mode
    stage_count: int
    start: np.ndarray
    power_bounds: tuple[float, float] = (POWER_LOWER_BOUND, 1.0)
    gain_bounds: tuple[float, float] = (0.7, 1.3)
    max_iterations: int = 200
    gradient_tolerance: float = 1e-8
    step_tolerance: float = 1e-10

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        dim = mode_dimension(self.mode, self.stage_count)
        if self.mode is Mode.POWER_ONLY:
            return (np.array([self.power_bounds[0]]), np.array([self.power_bounds[1]]))
        if self.mode in (Mode.EQUAL_GAINS, Mode.UNEQUAL_GAINS):
            return (np.full(dim, self.gain_bounds[0]), np.full(dim, self.gain_bounds[1]))
        lo = np.concatenate([[self.power_bounds[0]], np.full(dim - 1, self.gain_bounds[0])])
        hi = np.concatenate([[self.power_bounds[1]], np.full(dim - 1, self.gain_bounds[1])])
        return lo, hi


@dataclass(frozen=True)
class OptimizationResult:
    parameters: np.ndarray
    objective: float
    objective_history: np.ndarray
    status: SolveStatus
    iterations: int


def build_residual(
    x0_unit: Signal,
    config: CascadeConfig,
    noise: NoiseRealization | None,
    mode: Mode,
) -> Callable[[np.ndarray], np.ndarray]:
    """Residual of the desired output against the cascade output.

    Returns a function theta -> 2N real values (real parts, then imaginary
    parts) of G*x_unit - y_K(theta).  The noise realization is frozen into
    the closure so the objective is deterministic.
    """
    if config.sigma != 0.0:
        if noise is None:
            raise ValueError("config.sigma > 0 requires a NoiseRealization")
        if noise.stages < config.stage_count:
            raise ValueError(
                f"noise has {noise.stages} stage rows, cascade needs "
                f"{config.stage_count}"
            )
        if noise.length != len(x0_unit):
            raise ValueError(
                f"noise length {noise.length} != signal length {len(x0_unit)}"
            )
    x = x0_unit.samples
    desired = config.reference_gain * x
    alphas = config.alphas
    sigma = config.sigma
    stage_noise = noise.stage_noise if noise is not None else None

    def residual(theta: np.ndarray) -> np.ndarray:
        p0, gains = expand_parameters(theta, mode, config)
        y = cascade_samples(np.sqrt(p0) * x, alphas, gains, sigma, stage_noise)
        r = desired - y
        return np.concatenate([r.real, r.imag])

    return residual


def _project_start(start: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    margin = START_MARGIN * (hi - lo)
    return np.clip(np.asarray(start, dtype=float), lo + margin, hi - margin)


def solve(
    spec: OptimizationSpec,
    residual: Callable[[np.ndarray], np.ndarray],
) -> OptimizationResult:
    """Projected Levenberg-Marquardt descent over the spec's box.

    Jacobian by central differences (step 1e-6 * max(1, |theta_i|)); trial
    steps are clipped to the box and accepted only on strict objective
    decrease; damping is multiplied by 10 on rejection and divided by 10 on
    acceptance.  Terminates when the projected gradient falls below
    gradient_tolerance relative to its starting magnitude, when the accepted
    step is below step_tolerance, or at max_iterations.
    """
    lo, hi = spec.bounds()
    if spec.start.size != lo.size:
        raise InvalidStartError(
            f"start has {spec.start.size} parameters, mode {spec.mode.value} "
            f"over {spec.stage_count} stages needs {lo.size}"
        )
    theta = _project_start(spec.start, lo, hi)
    r = residual(theta)
    objective = float(r @ r)
    if not np.isfinite(objective):
        raise InvalidStartError(f"objective is {objective} at start {theta}")
    history = [objective]
    lam = 1e-3
    dim = theta.size
    status = SolveStatus.MAX_ITERATIONS
    gradient_floor: float | None = None
    iterations = 0

    for _ in range(spec.max_iterations):
        iterations += 1
        jac = np.empty((r.size, dim))
        for i in range(dim):
            h = 1e-6 * max(1.0, abs(theta[i]))
            up = theta.copy()
            up[i] += h
            down = theta.copy()
            down[i] -= h
            jac[:, i] = (residual(up) - residual(down)) / (2.0 * h)
        gradient = jac.T @ r
        if gradient_floor is None:
            gradient_floor = spec.gradient_tolerance * max(
                float(np.max(np.abs(gradient))), 1.0
            )
        # Zero out components that point outside the box at active bounds.
        projected = np.where(
            theta <= lo, np.minimum(gradient, 0.0),
            np.where(theta >= hi, np.maximum(gradient, 0.0), gradient),
        )
        if float(np.max(np.abs(projected))) <= gradient_floor:
            status = SolveStatus.CONVERGED
            break

        normal = jac.T @ jac
        damping_scale = np.diag(normal).copy()
        damping_scale[damping_scale == 0.0] = 1.0
        accepted = False
        while lam <= LAMBDA_LIMIT:
            step = np.linalg.solve(normal + lam * np.diag(damping_scale), -gradient)
            trial = np.clip(theta + step, lo, hi)
            if float(np.max(np.abs(trial - theta))) <= spec.step_tolerance:
                status = SolveStatus.CONVERGED
                break
            trial_r = residual(trial)
            trial_objective = float(trial_r @ trial_r)
            if trial_objective < objective:
                theta, r, objective = trial, trial_r, trial_objective
                history.append(objective)
                lam = max(lam / 10.0, 1e-12)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            if status is not SolveStatus.CONVERGED:
                status = SolveStatus.STALLED_AT_BOUND
            break

    return OptimizationResult(
        parameters=theta,
        objective=objective,
        objective_history=np.array(history),
        status=status,
        iterations=iterations,
    )


def grid_search(
    objective: Callable[[np.ndarray], float],
    bounds: Sequence[tuple[float, float]],
    resolution: int,
) -> tuple[np.ndarray, float]:
    """Exhaustive minimum of an objective on a uniform grid over a box."""
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    axes = [np.linspace(lo, hi, resolution) for lo, hi in bounds]
    best_theta = None
    best_value = np.inf
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=-1)
    for theta in flat:
        value = float(objective(theta))
        if value < best_value:
            best_value = value
            best_theta = theta
    return np.asarray(best_theta), best_value


def grid_oracle(
    x0_unit: Signal,
    config: CascadeConfig,
    noise: NoiseRealization | None,
    mode: Mode,
    resolution: int,
) -> tuple[np.ndarray, float]:
    """Brute-force verification oracle for the 1- and 2-parameter modes.

    Evaluates the same objective as the solver on a uniform grid over the
    box and returns the grid argmin.  The cascade is evaluated in batches,
    one grid row at a time, so this stays usable at resolution 200.
    """
    dim = mode_dimension(mode, config.stage_count)
    if dim > 2:
        raise UnsupportedModeError(
            f"grid oracle covers at most 2 parameters; mode {mode.value} over "
            f"{config.stage_count} stages has {dim}"
        )
    if resolution < 50:
        raise ValueError(f"resolution must be >= 50 per axis, got {resolution}")

    x = x0_unit.samples
    desired = config.reference_gain * x
    alphas = config.alphas
    sigma = config.sigma
    stage_noise = noise.stage_noise if noise is not None else None

    def batch_objective(p0_values: np.ndarray, gain_grid: np.ndarray) -> np.ndarray:
        # Rows: one drive level each; columns: samples.  gain_grid is
        # (rows, K) of per-stage gains.
        y = np.sqrt(p0_values)[:, None] * x[None, :]
        for k in range(config.stage_count):
            if sigma != 0.0:
                y = y + sigma * stage_noise[k][None, :]
            y = gain_grid[:, k : k + 1] * (y + alphas[k] * y * np.abs(y) ** 2)
        return np.sum(np.abs(desired[None, :] - y) ** 2, axis=1)

    if mode is Mode.POWER_ONLY:
        p0_axis = np.linspace(POWER_LOWER_BOUND, 1.0, resolution)
        gains = np.broadcast_to(config.gains, (resolution, config.stage_count))
        values = batch_objective(p0_axis, gains)
        best = int(np.argmin(values))
        return np.array([p0_axis[best]]), float(values[best])

    gain_lo, gain_hi = config.gain_bounds
    gain_axis = np.linspace(gain_lo, gain_hi, resolution)

    if mode is Mode.EQUAL_GAINS or (mode is Mode.UNEQUAL_GAINS and dim == 1):
        p0 = np.full(resolution, config.input_power)
        gains = np.repeat(gain_axis[:, None], config.stage_count, axis=1)
        values = batch_objective(p0, gains)
        best = int(np.argmin(values))
        return np.array([gain_axis[best]]), float(values[best])

    if mode is Mode.UNEQUAL_GAINS:
        # Two stages: scan the first gain row by row against a vectorized
        # second-gain axis, at the configured fixed drive.
        p0 = np.full(resolution, config.input_power)
        best_theta = None
        best_value = np.inf
        for first_gain in gain_axis:
            gains = np.stack([np.full(resolution, first_gain), gain_axis], axis=1)
            values = batch_objective(p0, gains)
            idx = int(np.argmin(values))
            if values[idx] < best_value:
                best_value = float(values[idx])
                best_theta = np.array([first_gain, gain_axis[idx]])
        return best_theta, best_value

    # Joint modes at dim <= 2: scan drive rows against a vectorized gain axis.
    p0_axis = np.linspace(POWER_LOWER_BOUND, 1.0, resolution)
    gains = np.repeat(gain_axis[:, None], config.stage_count, axis=1)
    best_theta = None
    best_value = np.inf
    for p0 in p0_axis:
        values = batch_objective(np.full(resolution, p0), gains)
        idx = int(np.argmin(values))
        if values[idx] < best_value:
            best_value = float(values[idx])
            best_theta = np.array([p0, gain_axis[idx]])
    return best_theta, best_value
