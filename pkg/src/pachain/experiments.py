"""Experiment harness: scenario sweeps, the optimization study, and file export.

A run is fully determined by its configuration (including the seed).  Three
derived random streams keep the pieces reproducible yet distinct: the symbol
seed itself, seed+1 for the noise frozen into optimization objectives, and
seed+2 for the evaluation noise shared by pre- and post-optimization metrics
(so ordering comparisons see the same realization).
"""

from __future__ import annotations

import hashlib
import json
import os
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cascade import CascadeConfig, PaStage, cascade_forward
from .cascade import scenario2_gain as _scenario2_gain
from .metrics import FLOOR_DB, MetricsReport, report
from .optimizer import (
    Mode,
    OptimizationResult,
    OptimizationSpec,
    Scenario,
    SolveStatus,
    build_residual,
    expand_parameters,
    scenario_start,
    solve,
)
from .signals import NoiseRealization, Signal, draw_noise, scale_amplitude, unit_excitation

RRC_SPAN_SYMBOLS = 16

ALL_MODES = (
    Mode.POWER_ONLY,
    Mode.EQUAL_GAINS,
    Mode.UNEQUAL_GAINS,
    Mode.JOINT_EQUAL_GAINS,
    Mode.JOINT_UNEQUAL_GAINS,
)

# Row/file ordering for emitted CSVs; scenario rows come first.
CASE_ORDER = (
    "scenario1",
    "scenario2",
    "power_s1",
    "power_s2",
    "equal_gains",
    "unequal_gains",
    "joint_equal",
    "joint_unequal",
)

# Cases that optimize gains and therefore appear in table_gains.csv.
GAIN_CASES = ("equal_gains", "unequal_gains", "joint_equal", "joint_unequal")
# Cases with an optimized drive power, appearing in table_power.csv.
POWER_CASES = ("power_s1", "power_s2", "joint_equal", "joint_unequal")


class ConfigError(ValueError):
    """Bad experiment configuration (file or field level)."""


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: complex = -0.33 * (1 - 0.1j)
    sigma_sq: float = 1e-5
    G: float = 1.0
    epsilon: float = 0.3
    K_range: tuple[int, ...] = (1, 2, 3, 4, 5)
    symbols: int = 4096
    oversampling: int = 8
    rolloff: float = 0.22
    seed: int = 42
    modes: tuple[Mode, ...] = ALL_MODES
    output_dir: Path = Path("runs")

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "K_range", tuple(int(k) for k in self.K_range))
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.sigma_sq < 0:
            raise ConfigError(f"sigma_sq must be >= 0, got {self.sigma_sq}")
        if self.G <= 0:
            raise ConfigError(f"G must be > 0, got {self.G}")
        if not 0 <= self.epsilon < 1:
            raise ConfigError(f"epsilon must be in [0, 1), got {self.epsilon}")
        if any(k < 1 for k in self.K_range):
            raise ConfigError(f"K_range entries must be >= 1, got {self.K_range}")
        if self.symbols < 1:
            raise ConfigError(f"symbols must be >= 1, got {self.symbols}")
        if self.oversampling < 2:
            raise ConfigError(f"oversampling must be >= 2, got {self.oversampling}")
        if not 0 < self.rolloff <= 1:
            raise ConfigError(f"rolloff must be in (0, 1], got {self.rolloff}")
        if not all(isinstance(m, Mode) for m in self.modes):
            raise ConfigError(f"modes must be Mode values, got {self.modes}")

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma_sq))


@dataclass
class RunRecord:
    """Everything a run produced, regenerable bit-exactly from the config."""

    config: ExperimentConfig
    scenario_metrics: dict[tuple[int, str], MetricsReport] = field(default_factory=dict)
    optimization_results: dict[tuple[int, str], OptimizationResult] = field(default_factory=dict)
    optimization_metrics: dict[tuple[int, str], MetricsReport] = field(default_factory=dict)
    optimized_parameters: dict[tuple[int, str], tuple[float, np.ndarray]] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    def solver_failures(self) -> list[tuple[int, str]]:
        return [
            key
            for key, result in self.optimization_results.items()
            if result.status is SolveStatus.STALLED_AT_BOUND
        ]


def combine_records(first: RunRecord, second: RunRecord) -> RunRecord:
    if first.config != second.config:
        raise ValueError("cannot combine records from different configurations")
    merged = RunRecord(config=first.config)
    for source in (first, second):
        merged.scenario_metrics.update(source.scenario_metrics)
        merged.optimization_results.update(source.optimization_results)
        merged.optimization_metrics.update(source.optimization_metrics)
        merged.optimized_parameters.update(source.optimized_parameters)
        merged.timings.update(source.timings)
    return merged


# --------------------------------------------------------------------------
# Configuration (de)serialization


_CONFIG_FIELDS = (
    "alpha", "sigma_sq", "G", "epsilon", "K_range", "symbols",
    "oversampling", "rolloff", "seed", "modes", "output_dir",
)


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a config from JSON-style data; unknown keys are rejected."""
    unknown = set(data) - set(_CONFIG_FIELDS)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    kwargs: dict = {}
    if "alpha" in data:
        alpha = data["alpha"]
        if not (isinstance(alpha, (list, tuple)) and len(alpha) == 2):
            raise ConfigError("alpha must be a [real, imaginary] pair")
        kwargs["alpha"] = complex(float(alpha[0]), float(alpha[1]))
    if "modes" in data:
        try:
            kwargs["modes"] = tuple(Mode(slug) for slug in data["modes"])
        except ValueError as exc:
            raise ConfigError(f"bad mode name: {exc}") from None
    for key in ("sigma_sq", "G", "epsilon", "rolloff"):
        if key in data:
            kwargs[key] = float(data[key])
    for key in ("symbols", "oversampling", "seed"):
        if key in data:
            kwargs[key] = int(data[key])
    if "K_range" in data:
        kwargs["K_range"] = tuple(int(k) for k in data["K_range"])
    if "output_dir" in data:
        kwargs["output_dir"] = Path(data["output_dir"])
    return ExperimentConfig(**kwargs)


def config_from_json(path: Path | str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"configuration root must be an object, got {type(data).__name__}")
    return config_from_dict(data)


def config_to_dict(config: ExperimentConfig) -> dict:
    """JSON-ready mirror of the config (alpha as a [re, im] pair)."""
    return {
        "alpha": [config.alpha.real, config.alpha.imag],
        "sigma_sq": config.sigma_sq,
        "G": config.G,
        "epsilon": config.epsilon,
        "K_range": list(config.K_range),
        "symbols": config.symbols,
        "oversampling": config.oversampling,
        "rolloff": config.rolloff,
        "seed": config.seed,
        "modes": [mode.value for mode in config.modes],
        "output_dir": str(config.output_dir),
    }


# --------------------------------------------------------------------------
# Shared run plumbing


def excitation_for(config: ExperimentConfig) -> Signal:
    return unit_excitation(
        config.symbols, config.oversampling, config.rolloff,
        RRC_SPAN_SYMBOLS, config.seed,
    )


def optimization_noise(config: ExperimentConfig, stages: int, length: int) -> NoiseRealization:
    return draw_noise(stages, length, config.seed + 1)


def evaluation_noise(config: ExperimentConfig, stages: int, length: int) -> NoiseRealization:
    return draw_noise(stages, length, config.seed + 2)


def scenario_gains(config: ExperimentConfig, scenario: Scenario, stages: int) -> np.ndarray:
    """Stage gains for a bracketing scenario.

    Scenario TWO degenerates to unit gains for a linear chain (alpha = 0),
    where there is no compression for extra amplification to compensate.
    """
    if scenario is Scenario.ONE or config.alpha == 0:
        return np.ones(stages)
    return np.full(stages, _scenario2_gain(config.alpha))


def make_cascade_config(
    config: ExperimentConfig,
    gains: np.ndarray,
    input_power: float = 1.0,
) -> CascadeConfig:
    return CascadeConfig(
        stages=tuple(PaStage(alpha=config.alpha, gain=float(g)) for g in gains),
        sigma=config.sigma,
        input_power=input_power,
        reference_gain=config.G,
        epsilon=config.epsilon,
    )


def _evaluate(
    config: ExperimentConfig,
    x_unit: Signal,
    cascade_cfg: CascadeConfig,
    p0: float,
    noise: NoiseRealization,
) -> MetricsReport:
    """Metrics of the configured chain at drive p0 on the given realization."""
    x0 = scale_amplitude(x_unit, float(np.sqrt(p0)))
    run = cascade_forward(x0, cascade_cfg, noise, keep_stages=False)
    desired = scale_amplitude(x_unit, config.G)
    return report(
        desired,
        run.output,
        reference_input=x0,
        channel_bandwidth=1.0 + config.rolloff,
        amam_decimate=config.oversampling,
    )


# --------------------------------------------------------------------------
# Scenario study


def run_scenarios(config: ExperimentConfig) -> RunRecord:
    """Both bracketing scenarios at full drive, for every configured K.

    Metrics are computed on the evaluation-noise realization so the rows are
    directly comparable with post-optimization metrics from the same config.
    """
    record = RunRecord(config=config)
    if not config.K_range:
        return record
    started = time.perf_counter()
    x_unit = excitation_for(config)
    for stages in config.K_range:
        noise = evaluation_noise(config, stages, len(x_unit))
        for scenario in (Scenario.ONE, Scenario.TWO):
            gains = scenario_gains(config, scenario, stages)
            cascade_cfg = make_cascade_config(config, gains, input_power=1.0)
            metrics = _evaluate(config, x_unit, cascade_cfg, 1.0, noise)
            record.scenario_metrics[(stages, f"scenario{scenario.value}")] = metrics
    record.timings["scenarios"] = time.perf_counter() - started
    return record


# --------------------------------------------------------------------------
# Optimization study


def _solve_case(
    config: ExperimentConfig,
    x_unit: Signal,
    cascade_cfg: CascadeConfig,
    mode: Mode,
    start: np.ndarray,
    noise: NoiseRealization,
) -> OptimizationResult:
    residual = build_residual(x_unit, cascade_cfg, noise, mode)
    spec = OptimizationSpec(
        mode=mode,
        stage_count=cascade_cfg.stage_count,
        start=start,
        gain_bounds=cascade_cfg.gain_bounds,
    )
    return solve(spec, residual)


def run_optimizations(config: ExperimentConfig) -> RunRecord:
    """Solve the requested modes for every K and evaluate the optima.

    All solves start from the unit-gain scenario; drive-only optimization is
    additionally run over the maximum-drive scenario's fixed gains (the
    power_s2 case).  Joint power-and-gain search over per-stage gains also
    restarts from the joint equal-gain optimum -- that solution is a
    feasible point of the larger problem, so the restart guards the
    highest-dimensional search against inferior local valleys; the better
    of the two solves is kept.
    """
    record = RunRecord(config=config)
    if not config.K_range:
        return record
    started = time.perf_counter()
    x_unit = excitation_for(config)

    for stages in config.K_range:
        opt_noise = optimization_noise(config, stages, len(x_unit))
        eval_noise = evaluation_noise(config, stages, len(x_unit))
        s1_gains = scenario_gains(config, Scenario.ONE, stages)
        s1_config = make_cascade_config(config, s1_gains, input_power=1.0)

        equal_cache: dict[Mode, OptimizationResult] = {}

        def solved_equal(mode: Mode) -> OptimizationResult:
            if mode not in equal_cache:
                start = scenario_start(Scenario.ONE, stages, config.alpha, mode)
                equal_cache[mode] = _solve_case(
                    config, x_unit, s1_config, mode, start, opt_noise
                )
            return equal_cache[mode]

        def best_of(mode: Mode, warm_start: np.ndarray) -> OptimizationResult:
            cold = _solve_case(
                config, x_unit, s1_config, mode,
                scenario_start(Scenario.ONE, stages, config.alpha, mode),
                opt_noise,
            )
            warm = _solve_case(config, x_unit, s1_config, mode, warm_start, opt_noise)
            return warm if warm.objective < cold.objective else cold

        for mode in config.modes:
            case_results: list[tuple[str, CascadeConfig, OptimizationResult]] = []
            case_started = time.perf_counter()
            if mode is Mode.POWER_ONLY:
                start = scenario_start(Scenario.ONE, stages, config.alpha, mode)
                case_results.append(
                    ("power_s1", s1_config,
                     _solve_case(config, x_unit, s1_config, mode, start, opt_noise))
                )
                s2_gains = scenario_gains(config, Scenario.TWO, stages)
                s2_config = make_cascade_config(config, s2_gains, input_power=1.0)
                start = scenario_start(Scenario.TWO, stages, config.alpha, mode)
                case_results.append(
                    ("power_s2", s2_config,
                     _solve_case(config, x_unit, s2_config, mode, start, opt_noise))
                )
            elif mode is Mode.EQUAL_GAINS:
                case_results.append(("equal_gains", s1_config, solved_equal(mode)))
            elif mode is Mode.UNEQUAL_GAINS:
                start = scenario_start(Scenario.ONE, stages, config.alpha, mode)
                case_results.append(
                    ("unequal_gains", s1_config,
                     _solve_case(config, x_unit, s1_config, mode, start, opt_noise))
                )
            elif mode is Mode.JOINT_EQUAL_GAINS:
                case_results.append(("joint_equal", s1_config, solved_equal(mode)))
            elif mode is Mode.JOINT_UNEQUAL_GAINS:
                anchor = solved_equal(Mode.JOINT_EQUAL_GAINS)
                warm = np.concatenate(
                    [anchor.parameters[:1], np.full(stages, anchor.parameters[1])]
                )
                case_results.append(("joint_unequal", s1_config, best_of(mode, warm)))

            for case, case_config, result in case_results:
                p0, gains = expand_parameters(result.parameters, mode, case_config)
                eval_config = make_cascade_config(config, gains, input_power=1.0)
                metrics = _evaluate(config, x_unit, eval_config, p0, eval_noise)
                key = (stages, case)
                record.optimization_results[key] = result
                record.optimization_metrics[key] = metrics
                record.optimized_parameters[key] = (p0, gains)
                record.timings[f"optimize_K{stages}_{case}"] = (
                    time.perf_counter() - case_started
                )

    record.timings["optimizations"] = time.perf_counter() - started
    return record


# --------------------------------------------------------------------------
# File emission


def _finite_db(value: float) -> float:
    return FLOOR_DB if value == float("-inf") else float(value)


def _csv_bytes(header: str, rows: list[str]) -> bytes:
    return ("\n".join([header] + rows) + "\n").encode("utf-8")


def _full(value: float) -> str:
    return repr(float(value))


def _case_sort_key(item: tuple[int, str]) -> tuple[int, int]:
    stages, case = item
    return (stages, CASE_ORDER.index(case))


def _build_files(record: RunRecord) -> dict[str, bytes]:
    files: dict[str, bytes] = {}

    def add_signal_files(stages: int, case: str, metrics: MetricsReport) -> None:
        amam_rows = [f"{_full(x)},{_full(y)}" for x, y in metrics.amam]
        files[f"amam_K{stages}_{case}.csv"] = _csv_bytes("input_mag,output_mag", amam_rows)
        psd_rows = [
            f"{_full(f)},{_full(p)}"
            for f, p in zip(metrics.psd.frequencies, metrics.psd.power_density)
        ]
        files[f"psd_K{stages}_{case}.csv"] = _csv_bytes("freq_symrate,psd_db", psd_rows)

    for key in sorted(record.scenario_metrics, key=_case_sort_key):
        add_signal_files(*key, record.scenario_metrics[key])

    for key in sorted(record.optimization_metrics, key=_case_sort_key):
        if key[1] in ("joint_equal", "joint_unequal"):
            add_signal_files(*key, record.optimization_metrics[key])

    metric_rows = []
    all_metrics = {**record.scenario_metrics, **record.optimization_metrics}
    for (stages, case) in sorted(all_metrics, key=_case_sort_key):
        metrics = all_metrics[(stages, case)]
        metric_rows.append(
            f"{stages},{case},{_full(_finite_db(metrics.nmse_db))},"
            f"{_full(_finite_db(metrics.aclr_db))}"
        )
    if metric_rows:
        files["metrics_vs_K.csv"] = _csv_bytes("K,scenario_or_mode,nmse_db,aclr_db", metric_rows)

    power_rows = []
    gain_rows = []
    for (stages, case) in sorted(record.optimized_parameters, key=_case_sort_key):
        p0, gains = record.optimized_parameters[(stages, case)]
        if case in POWER_CASES:
            power_rows.append(f"{case},{stages},{p0:.2f}")
        if case in GAIN_CASES:
            for k, gain in enumerate(gains, start=1):
                gain_rows.append(f"{case},{stages},{k},{gain:.2f}")
    if power_rows:
        files["table_power.csv"] = _csv_bytes("case,K,p0", power_rows)
    if gain_rows:
        files["table_gains.csv"] = _csv_bytes("case,K,k,gain", gain_rows)

    return files


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_bytes(data)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def emit_outputs(record: RunRecord) -> list[Path]:
    """Write the run's CSV files and a digest manifest to the output dir.

    The manifest holds the config, seed, and a sha256 digest per emitted
    file; identical (config, seed) runs produce byte-identical trees.
    """
    output_dir = record.config.output_dir
    output_dir.mkdir(parents=True, exist_ok=True)
    files = _build_files(record)
    if not files:
        warnings.warn("run produced no data (empty K_range); emitting manifest only")

    written: list[Path] = []
    for name in sorted(files):
        path = output_dir / name
        _write_atomic(path, files[name])
        written.append(path)

    manifest = {
        "config": config_to_dict(record.config),
        "seed": record.config.seed,
        "files": {
            name: hashlib.sha256(files[name]).hexdigest() for name in sorted(files)
        },
    }
    manifest_bytes = (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8")
    manifest_path = output_dir / "manifest.json"
    _write_atomic(manifest_path, manifest_bytes)
    written.append(manifest_path)
    return written
