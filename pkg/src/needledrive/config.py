"""Scenario configuration: a strict, human-editable JSON schema.

A scenario file pins everything an experiment run depends on: geometry,
transmission, motor caps, encoder, controller settings, the measurement
noise model, the experiment list, and the seed. Parsing is strict — any
unknown key anywhere is rejected with a message naming it — so a reviewed
config diff says exactly what changed. parse -> serialize -> parse is the
identity.

The full schema is documented field by field in docs/config_schema.md.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .control import ControllerState, ObserverKind
from .drivetrain import (
    EncoderSpec,
    MotorRole,
    MotorSpec,
    TransmissionConfig,
    slave_pulley,
)
from .experiments import Axis, NoiseModel, TrialSpec
from .kinematics import ScrewSpec
from .simulate import SimConfig


class ConfigError(ValueError):
    """A scenario file failed validation; the message names the offender."""


@dataclass(frozen=True)
class AccuracyExperiment:
    axis: Axis
    target: float
    repetitions: int = 5

    def trial(self) -> TrialSpec:
        return TrialSpec(axis=self.axis, target=self.target, repetitions=self.repetitions)


@dataclass(frozen=True)
class DriftExperiment:
    revolutions: int
    epsilon: float
    pid: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario: simulator settings plus an experiment list."""

    seed: int
    screw: ScrewSpec = field(default_factory=ScrewSpec)
    transmission: TransmissionConfig = field(default_factory=TransmissionConfig)
    motor: MotorSpec = field(default_factory=MotorSpec)
    encoder: EncoderSpec = field(default_factory=EncoderSpec)
    controller: ControllerState = field(default_factory=ControllerState)
    noise: NoiseModel = field(default_factory=NoiseModel)
    experiments: tuple = ()

    def sim_config(self, pid_enabled: bool | None = None) -> SimConfig:
        ctrl = self.controller
        if pid_enabled is not None:
            ctrl = replace(ctrl, pid_enabled=pid_enabled)
        return SimConfig(
            screw=self.screw,
            screw_transmission=self.transmission,
            spline_transmission=self.transmission,
            insertion_motor=replace(self.motor, role=MotorRole.INSERTION),
            rotary_motor=replace(self.motor, role=MotorRole.ROTARY),
            encoder=self.encoder,
            controller=ctrl,
        )

    def experiment_noise(self, index: int) -> NoiseModel:
        """Noise model for experiment `index` with an independent substream."""
        derived = int(np.random.SeedSequence([self.seed, index]).generate_state(1)[0])
        return replace(self.noise, seed=derived)


def _require_keys(obj: Any, allowed: set[str], path: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}.{key}" if path else f"unknown key {key}")


def _get(obj: dict, key: str, kind, path: str, default=None, required: bool = False):
    key_path = f"{path}.{key}" if path else key
    if key not in obj:
        if required:
            raise ConfigError(f"missing required key {key_path}")
        return default
    value = obj[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (isinstance(value, bool) and kind is not bool):
        raise ConfigError(f"{key_path}: expected {kind.__name__}, got {value!r}")
    return value


def parse_scenario(raw: dict) -> ScenarioConfig:
    """Build a validated ScenarioConfig from a parsed JSON object."""
    _require_keys(raw, {"seed", "screw", "transmission", "motors", "encoder",
                        "controller", "noise", "experiments"}, "")
    seed = _get(raw, "seed", int, "", required=True)

    screw = ScrewSpec()
    if "screw" in raw:
        node = raw["screw"]
        _require_keys(node, {"lead_mm", "starts", "handedness"}, "screw")
        screw = ScrewSpec(
            lead=_get(node, "lead_mm", float, "screw", screw.lead),
            starts=_get(node, "starts", int, "screw", screw.starts),
            handedness=_get(node, "handedness", int, "screw", screw.handedness),
        )

    transmission = TransmissionConfig()
    if "transmission" in raw:
        node = raw["transmission"]
        _require_keys(node, {"slave_pulley", "master_teeth", "slave_teeth"}, "transmission")
        if "slave_pulley" in node:
            if "master_teeth" in node or "slave_teeth" in node:
                raise ConfigError(
                    "transmission: give either slave_pulley or tooth counts, not both"
                )
            name = _get(node, "slave_pulley", str, "transmission")
            try:
                transmission = slave_pulley(name)
            except ValueError as exc:
                raise ConfigError(f"transmission.slave_pulley: {exc}") from None
        else:
            transmission = TransmissionConfig(
                master_teeth=_get(node, "master_teeth", int, "transmission",
                                  transmission.master_teeth),
                slave_teeth=_get(node, "slave_teeth", int, "transmission",
                                 transmission.slave_teeth),
            )

    motor = MotorSpec()
    if "motors" in raw:
        node = raw["motors"]
        _require_keys(node, {"rated_rpm", "real_rpm_cap"}, "motors")
        motor = MotorSpec(
            rated_speed=_get(node, "rated_rpm", float, "motors", motor.rated_speed),
            real_speed_cap=_get(node, "real_rpm_cap", float, "motors", motor.real_speed_cap),
        )

    encoder = EncoderSpec()
    if "encoder" in raw:
        node = raw["encoder"]
        _require_keys(node, {"lines_per_rev", "quadrature"}, "encoder")
        encoder = EncoderSpec(
            lines_per_rev=_get(node, "lines_per_rev", int, "encoder", encoder.lines_per_rev),
            quadrature_multiplier=_get(node, "quadrature", int, "encoder",
                                       encoder.quadrature_multiplier),
        )

    controller = ControllerState()
    if "controller" in raw:
        node = raw["controller"]
        _require_keys(node, {
            "insertion_tol_mm", "rotary_tol_deg", "insertion_speed_rpm",
            "rotary_speed_rpm", "insertion_approach_rpm", "rotary_approach_rpm",
            "insertion_slow_zone_mm", "rotary_slow_zone_deg", "observer", "pid",
        }, "controller")
        pid = node.get("pid", {})
        _require_keys(pid, {"kp", "ki", "kd", "integral_limit_rpm", "enabled"},
                      "controller.pid")
        observer_name = _get(node, "observer", str, "controller",
                             controller.observer.value)
        try:
            observer = ObserverKind(observer_name)
        except ValueError:
            raise ConfigError(
                f"controller.observer: expected one of "
                f"{[k.value for k in ObserverKind]}, got {observer_name!r}"
            ) from None
        controller = ControllerState(
            insertion_tol=_get(node, "insertion_tol_mm", float, "controller",
                               controller.insertion_tol),
            rotary_tol=_get(node, "rotary_tol_deg", float, "controller",
                            controller.rotary_tol),
            insertion_speed=_get(node, "insertion_speed_rpm", float, "controller",
                                 controller.insertion_speed),
            rotary_speed=_get(node, "rotary_speed_rpm", float, "controller",
                              controller.rotary_speed),
            insertion_approach_speed=_get(node, "insertion_approach_rpm", float,
                                          "controller", controller.insertion_approach_speed),
            rotary_approach_speed=_get(node, "rotary_approach_rpm", float,
                                       "controller", controller.rotary_approach_speed),
            insertion_slow_zone=_get(node, "insertion_slow_zone_mm", float, "controller",
                                     controller.insertion_slow_zone),
            rotary_slow_zone=_get(node, "rotary_slow_zone_deg", float, "controller",
                                  controller.rotary_slow_zone),
            pid_kp=_get(pid, "kp", float, "controller.pid", controller.pid_kp),
            pid_ki=_get(pid, "ki", float, "controller.pid", controller.pid_ki),
            pid_kd=_get(pid, "kd", float, "controller.pid", controller.pid_kd),
            pid_integral_limit=_get(pid, "integral_limit_rpm", float, "controller.pid",
                                    controller.pid_integral_limit),
            pid_enabled=_get(pid, "enabled", bool, "controller.pid",
                             controller.pid_enabled),
            observer=observer,
        )

    noise = NoiseModel(seed=seed)
    if "noise" in raw:
        node = raw["noise"]
        _require_keys(node, {"sigma_intercept", "sigma_slope", "bias_slope"}, "noise")
        try:
            noise = NoiseModel(
                sigma_intercept=_get(node, "sigma_intercept", float, "noise", 0.0),
                sigma_slope=_get(node, "sigma_slope", float, "noise", 0.0),
                bias_slope=_get(node, "bias_slope", float, "noise", 0.0),
                seed=seed,
            )
        except ValueError as exc:
            raise ConfigError(f"noise: {exc}") from None

    experiments = []
    raw_experiments = raw.get("experiments", [])
    if not isinstance(raw_experiments, list):
        raise ConfigError("experiments: expected a list")
    for i, entry in enumerate(raw_experiments):
        path = f"experiments[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{path}: expected an object")
        kind = _get(entry, "kind", str, path, required=True)
        if kind == "accuracy":
            _require_keys(entry, {"kind", "axis", "target", "repetitions"}, path)
            axis_name = _get(entry, "axis", str, path, required=True)
            try:
                axis = Axis(axis_name)
            except ValueError:
                raise ConfigError(
                    f"{path}.axis: expected one of {[a.value for a in Axis]}, "
                    f"got {axis_name!r}"
                ) from None
            experiments.append(AccuracyExperiment(
                axis=axis,
                target=_get(entry, "target", float, path, required=True),
                repetitions=_get(entry, "repetitions", int, path, 5),
            ))
        elif kind == "drift":
            _require_keys(entry, {"kind", "revolutions", "epsilon", "pid"}, path)
            experiments.append(DriftExperiment(
                revolutions=_get(entry, "revolutions", int, path, required=True),
                epsilon=_get(entry, "epsilon", float, path, required=True),
                pid=_get(entry, "pid", bool, path, False),
            ))
        else:
            raise ConfigError(f"{path}.kind: expected 'accuracy' or 'drift', got {kind!r}")

    try:
        scenario = ScenarioConfig(
            seed=seed, screw=screw, transmission=transmission, motor=motor,
            encoder=encoder, controller=controller, noise=noise,
            experiments=tuple(experiments),
        )
        scenario.sim_config()  # cross-field validation (caps, landing guarantee)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return scenario


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    """Canonical JSON form; parse(scenario_to_dict(x)) == x."""
    experiments = []
    for exp in cfg.experiments:
        if isinstance(exp, AccuracyExperiment):
            experiments.append({
                "kind": "accuracy", "axis": exp.axis.value,
                "target": exp.target, "repetitions": exp.repetitions,
            })
        else:
            experiments.append({
                "kind": "drift", "revolutions": exp.revolutions,
                "epsilon": exp.epsilon, "pid": exp.pid,
            })
    return {
        "seed": cfg.seed,
        "screw": {
            "lead_mm": cfg.screw.lead,
            "starts": cfg.screw.starts,
            "handedness": cfg.screw.handedness,
        },
        "transmission": {
            "master_teeth": cfg.transmission.master_teeth,
            "slave_teeth": cfg.transmission.slave_teeth,
        },
        "motors": {
            "rated_rpm": cfg.motor.rated_speed,
            "real_rpm_cap": cfg.motor.real_speed_cap,
        },
        "encoder": {
            "lines_per_rev": cfg.encoder.lines_per_rev,
            "quadrature": cfg.encoder.quadrature_multiplier,
        },
        "controller": {
            "insertion_tol_mm": cfg.controller.insertion_tol,
            "rotary_tol_deg": cfg.controller.rotary_tol,
            "insertion_speed_rpm": cfg.controller.insertion_speed,
            "rotary_speed_rpm": cfg.controller.rotary_speed,
            "insertion_approach_rpm": cfg.controller.insertion_approach_speed,
            "rotary_approach_rpm": cfg.controller.rotary_approach_speed,
            "insertion_slow_zone_mm": cfg.controller.insertion_slow_zone,
            "rotary_slow_zone_deg": cfg.controller.rotary_slow_zone,
            "observer": cfg.controller.observer.value,
            "pid": {
                "kp": cfg.controller.pid_kp,
                "ki": cfg.controller.pid_ki,
                "kd": cfg.controller.pid_kd,
                "integral_limit_rpm": cfg.controller.pid_integral_limit,
                "enabled": cfg.controller.pid_enabled,
            },
        },
        "noise": {
            "sigma_intercept": cfg.noise.sigma_intercept,
            "sigma_slope": cfg.noise.sigma_slope,
            "bias_slope": cfg.noise.bias_slope,
        },
        "experiments": experiments,
    }


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario file (raises ConfigError on bad content)."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from None
    return parse_scenario(raw)
