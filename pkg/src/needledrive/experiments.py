"""Validation harness: accuracy trials, noise calibration, and drift runs.

The bench campaign this reproduces measured closed-loop positioning with a
caliper and protractor, so noise is injected as measurement error on the
final position of each trial, not as a plant disturbance. The measurement
sigma grows linearly with the commanded distance (hand-made parts accumulate
dimensional error over travel), and calibrate_noise fits that affine model
to a measured accuracy table.

Exact reproduction of the bench numbers is out of reach (they encode one
specific hand-built mechanism); the harness reproduces their structure and
magnitude envelope instead.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constants import RPM_TO_DEG_PER_S
from .simulate import ConvergenceError, NeedleDriverSim, SimConfig


class Axis(Enum):
    INSERTION = "insertion"
    ROTARY = "rotary"


class TrialFailure(RuntimeError):
    """A closed-loop trial failed to converge; never silently dropped."""


class ReportFormat(Enum):
    CSV = "csv"
    JSON = "json"


@dataclass(frozen=True)
class TrialSpec:
    """One accuracy experiment: repeated closed-loop motions to one target."""

    axis: Axis
    target: float           # mm or deg depending on axis
    repetitions: int = 5

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if not math.isfinite(self.target):
            raise ValueError("target must be finite")


@dataclass(frozen=True)
class NoiseModel:
    """Affine measurement-noise model: sigma(t) = intercept + slope * |t|.

    bias_slope adds a distance-proportional systematic offset. The seed
    makes every run reproducible.
    """

    sigma_intercept: float = 0.0
    sigma_slope: float = 0.0
    bias_slope: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sigma_intercept < 0 or self.sigma_slope < 0:
            raise ValueError("sigma terms must be >= 0")

    def sigma_for(self, target: float) -> float:
        return max(0.0, self.sigma_intercept + self.sigma_slope * abs(target))

    def bias_for(self, target: float) -> float:
        return self.bias_slope * target


@dataclass(frozen=True)
class ExperimentStats:
    """Per-target error statistics over the stored measured samples."""

    target: float
    mean_error: float
    std_dev: float            # sample (n-1) estimator; 0.0 when n == 1
    samples: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class DriftResult:
    """Insertion accumulated during a commanded pure rotation."""

    total_rotation: float   # deg actually rotated
    insertion_drift: float  # mm
    drift_per_rev: float    # mm per shaft revolution


@dataclass(frozen=True)
class CalibrationResult:
    model: NoiseModel
    sigma_residuals: tuple[float, ...]  # observed - fitted, per table row
    bias_residuals: tuple[float, ...]


def _stats_from_samples(target: float, samples: list[float]) -> ExperimentStats:
    # Sorting fixes the floating-point summation order, so aggregation is
    # independent of trial ordering.
    ordered = tuple(sorted(samples))
    errors = np.asarray(ordered) - target
    mean_error = float(np.mean(errors))
    std_dev = float(np.std(errors, ddof=1)) if len(ordered) > 1 else 0.0
    return ExperimentStats(target=target, mean_error=mean_error,
                           std_dev=std_dev, samples=ordered)


def run_accuracy_trials(
    trial: TrialSpec,
    noise: NoiseModel,
    config: SimConfig | None = None,
    mismatch: float = 0.0,
    timeout: float = 120.0,
) -> ExperimentStats:
    """Run repeated closed-loop motions to one target and collect statistics.

    The plant and controller are deterministic and the noise perturbs only
    the measurement, so the repeated motions are identical by construction;
    the closed loop is solved once and the repetitions differ in their
    measurement draws (seeded, one independent substream per repetition).

    Raises TrialFailure if the motion does not converge.
    """
    sim = NeedleDriverSim(config, mismatch=mismatch)
    if trial.axis is Axis.INSERTION:
        sim.set_insertion_target(trial.target)
    else:
        sim.set_rotary_target(trial.target)
    try:
        sim.run_until_settled(timeout=timeout)
    except ConvergenceError as exc:
        raise TrialFailure(f"{trial.axis.value} trial to {trial.target}: {exc}") from exc

    if trial.axis is Axis.INSERTION:
        final_true = sim.drive.pose.insertion
    else:
        final_true = sim.drive.pose.rotation

    sigma = noise.sigma_for(trial.target)
    bias = noise.bias_for(trial.target)
    streams = np.random.SeedSequence(noise.seed).spawn(trial.repetitions)
    samples = [
        final_true + bias + np.random.default_rng(stream).normal(0.0, sigma)
        for stream in streams
    ]
    return _stats_from_samples(trial.target, samples)


def calibrate_noise(
    table: list[tuple[float, float, float]],
    seed: int = 0,
) -> CalibrationResult:
    """Fit a NoiseModel to rows of (target, mean_error, std_dev).

    Least squares: std_dev ~ sigma_intercept + sigma_slope * |target| and
    mean_error ~ bias_slope * target. A non-physical negative fitted
    intercept is clamped to zero and the slope refit. Returns the model and
    the per-row residuals (observed - fitted).
    """
    if len(table) < 2:
        raise ValueError("calibration needs at least 2 rows")
    targets = np.array([row[0] for row in table], dtype=float)
    means = np.array([row[1] for row in table], dtype=float)
    sigmas = np.array([row[2] for row in table], dtype=float)

    abs_t = np.abs(targets)
    if np.ptp(abs_t) == 0:
        raise ValueError("degenerate fit: all targets have the same magnitude")

    design = np.column_stack([np.ones_like(abs_t), abs_t])
    (intercept, slope), *_ = np.linalg.lstsq(design, sigmas, rcond=None)
    if slope < 0:
        slope = 0.0
        intercept = float(np.mean(sigmas))
    if intercept < 0:
        intercept = 0.0
        slope = float(abs_t @ sigmas / (abs_t @ abs_t))

    bias_slope = float(targets @ means / (targets @ targets))

    model = NoiseModel(
        sigma_intercept=float(intercept),
        sigma_slope=float(slope),
        bias_slope=bias_slope,
        seed=seed,
    )
    sigma_res = tuple(float(s - model.sigma_for(t)) for t, s in zip(targets, sigmas))
    bias_res = tuple(float(m - model.bias_for(t)) for t, m in zip(targets, means))
    return CalibrationResult(model=model, sigma_residuals=sigma_res,
                             bias_residuals=bias_res)


def run_drift_experiment(
    revolutions: int,
    epsilon: float,
    config: SimConfig | None = None,
) -> DriftResult:
    """Command a pure rotation in rotation-enabled mode and report the drift.

    The insertion motor mirrors the rotary motor with a speed mismatch of
    (1 + epsilon), so the commanded rotation is really a shallow spiral; the
    reported drift is the physical insertion accumulated over the run, which
    the frozen display never shows. PID compensation runs only if the
    supplied config enables it.
    """
    if revolutions < 1:
        raise ValueError(f"revolutions must be >= 1, got {revolutions}")
    cfg = config or SimConfig()
    sim = NeedleDriverSim(cfg, mismatch=epsilon)
    sim.set_rotation_enable(True)
    sim.set_rotary_target(360.0 * revolutions)

    traverse_deg_s = (
        cfg.controller.rotary_speed * cfg.spline_transmission.ratio * RPM_TO_DEG_PER_S
    )
    timeout = max(30.0, 5.0 * 360.0 * revolutions / traverse_deg_s)
    try:
        sim.run_until_settled(timeout=timeout)
    except ConvergenceError as exc:
        raise TrialFailure(f"drift rotation did not complete: {exc}") from exc

    total_rotation = sim.drive.pose.rotation
    drift = sim.drive.pose.insertion
    return DriftResult(
        total_rotation=total_rotation,
        insertion_drift=drift,
        drift_per_rev=drift / (total_rotation / 360.0),
    )


def speed_table(
    motor_speed: float,
    configs: list | None = None,
) -> dict[str, float]:
    """Output nut speed for each pulley option at one motor speed.

    configs is a list of (name, TransmissionConfig); defaults to the five
    stock slave pulleys in catalog order. Tooth ratios are exact binary
    fractions here, so the outputs carry no floating error.
    """
    from .drivetrain import standard_pulley_set, transmission_output

    if not math.isfinite(motor_speed):
        raise ValueError("motor_speed must be finite")
    configs = configs if configs is not None else standard_pulley_set()
    return {name: transmission_output(motor_speed, cfg) for name, cfg in configs}


REPORT_FIELDS = ("target", "mean_error", "std_dev", "n")


def _check_stats(stats: list[ExperimentStats]) -> None:
    if not stats:
        raise ValueError("emit_report requires at least one ExperimentStats")
    for s in stats:
        values = (s.target, s.mean_error, s.std_dev, *s.samples)
        if any(not math.isfinite(v) for v in values):
            raise ValueError(f"non-finite value in stats for target {s.target}")


def emit_report(stats: list[ExperimentStats], fmt: ReportFormat | str) -> str:
    """Serialize stats as CSV (target,mean_error,std_dev,n) or JSON.

    Floats are written with repr-level precision, so a read-back loses
    nothing. The JSON form also carries the raw samples.
    """
    fmt = ReportFormat(fmt)
    _check_stats(stats)
    if fmt is ReportFormat.CSV:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_FIELDS)
        for s in stats:
            writer.writerow([repr(s.target), repr(s.mean_error), repr(s.std_dev), s.n])
        return buf.getvalue()
    doc = {
        "version": 1,
        "reports": [
            {
                "target": s.target,
                "mean_error": s.mean_error,
                "std_dev": s.std_dev,
                "n": s.n,
                "samples": list(s.samples),
            }
            for s in stats
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def read_report(text: str, fmt: ReportFormat | str) -> list[dict]:
    """Parse a document produced by emit_report.

    Returns one dict per row with the REPORT_FIELDS keys (plus "samples"
    for JSON, which carries them).
    """
    fmt = ReportFormat(fmt)
    out: list[dict] = []
    if fmt is ReportFormat.CSV:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != REPORT_FIELDS:
            raise ValueError(f"bad report header: {rows[:1]}")
        for target, mean_error, std_dev, n in rows[1:]:
            out.append(
                {
                    "target": float(target),
                    "mean_error": float(mean_error),
                    "std_dev": float(std_dev),
                    "n": int(n),
                }
            )
        return out
    doc = json.loads(text)
    for entry in doc["reports"]:
        out.append(
            {
                "target": entry["target"],
                "mean_error": entry["mean_error"],
                "std_dev": entry["std_dev"],
                "n": entry["n"],
                "samples": list(entry["samples"]),
            }
        )
    return out
