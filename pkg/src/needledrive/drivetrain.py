"""Discrete-time plant: motors, belt transmission, nuts, and encoders.

Motors are ideal rate sources (no inertia): when enabled they spin at the
commanded speed times a mismatch factor that models the small calibration
error between the two drives. A belt stage scales motor speed onto each nut
(output = motor speed * slave_teeth / master_teeth). Encoders quantize the
nut angle onto a count grid and support a count freeze: while frozen the
counter holds its value and the angle swept in the meantime is never counted.

The plant transition is a pure function over an immutable DriveState, exact
for piecewise-constant rates at any fixed step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .constants import (
    ENCODER_LINES_PER_REV,
    MASTER_TEETH,
    MOTOR_RATED_RPM,
    MOTOR_REAL_RPM,
    QUADRATURE_MULTIPLIER,
    RPM_TO_DEG_PER_S,
    SLAVE_PULLEY_TEETH,
)
from .kinematics import NutAngles, ScrewSpec, ShaftPose, forward_kinematics

MAX_PLANT_DT = 0.1  # seconds
MAX_MISMATCH = 0.1  # |mismatch_factor - 1| bound


class MotorRole(Enum):
    INSERTION = "insertion"  # drives the screw nut
    ROTARY = "rotary"        # drives the spline nut


class Direction(Enum):
    """Motor rotation direction; CW is the positive angle direction."""

    CW = 1
    CCW = -1


class EncoderRole(Enum):
    INSERTION = "insertion"  # screw-nut side
    ROTARY = "rotary"        # spline-nut side


@dataclass(frozen=True)
class MotorSpec:
    """Speed envelope of one drive motor.

    real_speed_cap is the speed the motor actually sustains under load,
    which on the bench is well below the nameplate rating.
    """

    rated_speed: float = MOTOR_RATED_RPM
    real_speed_cap: float = MOTOR_REAL_RPM
    role: MotorRole = MotorRole.INSERTION

    def __post_init__(self) -> None:
        if not 0 < self.real_speed_cap <= self.rated_speed:
            raise ValueError(
                f"need 0 < real_speed_cap <= rated_speed, got "
                f"{self.real_speed_cap} / {self.rated_speed}"
            )


@dataclass(frozen=True)
class MotorState:
    """Instantaneous state of one motor (angle in degrees, speeds in rpm)."""

    enabled: bool = False
    direction: Direction = Direction.CW
    commanded_speed: float = 0.0   # magnitude, >= 0
    actual_speed: float = 0.0      # signed, 0 when disabled
    angle: float = 0.0
    mismatch_factor: float = 1.0

    def __post_init__(self) -> None:
        if self.commanded_speed < 0:
            raise ValueError(f"commanded_speed must be >= 0, got {self.commanded_speed}")
        if abs(self.mismatch_factor - 1.0) > MAX_MISMATCH:
            raise ValueError(
                f"|mismatch_factor - 1| must be <= {MAX_MISMATCH}, got {self.mismatch_factor}"
            )


@dataclass(frozen=True)
class TransmissionConfig:
    """One belt pulley pair: motor-side (slave) driving the nut-side (master)."""

    master_teeth: int = MASTER_TEETH
    slave_teeth: int = SLAVE_PULLEY_TEETH["Slave Pulley 1"]

    def __post_init__(self) -> None:
        if self.master_teeth <= 0 or self.slave_teeth <= 0:
            raise ValueError("tooth counts must be positive")

    @property
    def ratio(self) -> float:
        """Speed multiplication from motor to nut."""
        return self.slave_teeth / self.master_teeth


def slave_pulley(name: str) -> TransmissionConfig:
    """Transmission for one of the five stock slave pulleys by name."""
    try:
        teeth = SLAVE_PULLEY_TEETH[name]
    except KeyError:
        raise ValueError(
            f"unknown slave pulley {name!r}; expected one of {sorted(SLAVE_PULLEY_TEETH)}"
        ) from None
    return TransmissionConfig(master_teeth=MASTER_TEETH, slave_teeth=teeth)


def standard_pulley_set() -> list[tuple[str, TransmissionConfig]]:
    """All five stock slave pulleys, in catalog order."""
    return [(name, slave_pulley(name)) for name in SLAVE_PULLEY_TEETH]


@dataclass(frozen=True)
class EncoderSpec:
    lines_per_rev: int = ENCODER_LINES_PER_REV
    quadrature_multiplier: int = QUADRATURE_MULTIPLIER
    role: EncoderRole = EncoderRole.INSERTION

    def __post_init__(self) -> None:
        if self.lines_per_rev <= 0:
            raise ValueError(f"lines_per_rev must be > 0, got {self.lines_per_rev}")
        if self.quadrature_multiplier not in (1, 2, 4):
            raise ValueError(
                f"quadrature_multiplier must be 1, 2, or 4, got {self.quadrature_multiplier}"
            )

    @property
    def counts_per_rev(self) -> int:
        return self.lines_per_rev * self.quadrature_multiplier


@dataclass(frozen=True)
class EncoderState:
    """Quadrature counter state.

    While counting, counts = floor((angle - skipped_angle) * counts_per_rev
    / 360). skipped_angle accumulates the rotation swept while the counter
    was frozen, so resuming never jumps and the count grid stays anchored to
    the angle actually counted.
    """

    counts: int = 0
    counting_enabled: bool = True
    last_true_angle: float = 0.0
    skipped_angle: float = 0.0


def quantize_angle(angle: float, spec: EncoderSpec) -> int:
    """Absolute count-grid position of an angle (floor quantization)."""
    return math.floor(angle * spec.counts_per_rev / 360.0)


def transmission_output(motor_speed: float, cfg: TransmissionConfig) -> float:
    """Nut speed (rpm, sign-preserving) for a motor speed through one belt stage."""
    return motor_speed * cfg.slave_teeth / cfg.master_teeth


def motor_step(m: MotorState, dt: float) -> MotorState:
    """Advance one motor by dt seconds.

    actual_speed = direction * commanded_speed * mismatch_factor when
    enabled, else 0; the angle integrates it exactly.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if m.enabled:
        actual = m.direction.value * m.commanded_speed * m.mismatch_factor
    else:
        actual = 0.0
    return replace(
        m,
        actual_speed=actual,
        angle=m.angle + actual * RPM_TO_DEG_PER_S * dt,
    )


def encoder_sample(e: EncoderState, spec: EncoderSpec, true_angle: float) -> EncoderState:
    """Sample the counter against the current true angle.

    Frozen counters hold their value and bank the swept angle into
    skipped_angle; the true angle is tracked either way.
    """
    if e.counting_enabled:
        counts = quantize_angle(true_angle - e.skipped_angle, spec)
        return replace(e, counts=counts, last_true_angle=true_angle)
    return replace(
        e,
        skipped_angle=e.skipped_angle + (true_angle - e.last_true_angle),
        last_true_angle=true_angle,
    )


@dataclass(frozen=True)
class DriveState:
    """Full plant state: two motors, two nuts, two encoders, shaft pose."""

    insertion_motor: MotorState
    rotary_motor: MotorState
    screw_nut_angle: float
    spline_nut_angle: float
    ie: EncoderState  # insertion encoder, screw-nut side
    re: EncoderState  # rotary encoder, spline-nut side
    pose: ShaftPose
    time: float


def initial_drive_state(
    insertion_spec: MotorSpec | None = None,
    rotary_spec: MotorSpec | None = None,
) -> DriveState:
    """Plant at rest at the origin with both counters live."""
    del insertion_spec, rotary_spec  # specs carry no initial state today
    return DriveState(
        insertion_motor=MotorState(),
        rotary_motor=MotorState(),
        screw_nut_angle=0.0,
        spline_nut_angle=0.0,
        ie=EncoderState(),
        re=EncoderState(),
        pose=ShaftPose(0.0, 0.0),
        time=0.0,
    )


def plant_step(
    s: DriveState,
    dt: float,
    screw_cfg: TransmissionConfig,
    spline_cfg: TransmissionConfig,
    spec: ScrewSpec,
    enc_spec: EncoderSpec | None = None,
    motor_mounted_encoders: bool = False,
) -> DriveState:
    """Advance the whole plant by dt seconds.

    Motors integrate first, the belt stages scale their rates onto the nuts,
    the pose is recomputed from the nut angles, and both encoders sample
    their assigned shaft (nut side by default, motor back-shaft when
    motor_mounted_encoders is set).
    """
    if not 0 < dt <= MAX_PLANT_DT:
        raise ValueError(f"dt must be in (0, {MAX_PLANT_DT}], got {dt}")
    enc_spec = enc_spec or EncoderSpec()

    im = motor_step(s.insertion_motor, dt)
    rm = motor_step(s.rotary_motor, dt)

    screw_angle = s.screw_nut_angle + (
        transmission_output(im.actual_speed, screw_cfg) * RPM_TO_DEG_PER_S * dt
    )
    spline_angle = s.spline_nut_angle + (
        transmission_output(rm.actual_speed, spline_cfg) * RPM_TO_DEG_PER_S * dt
    )

    if motor_mounted_encoders:
        ie_angle, re_angle = im.angle, rm.angle
    else:
        ie_angle, re_angle = screw_angle, spline_angle

    return DriveState(
        insertion_motor=im,
        rotary_motor=rm,
        screw_nut_angle=screw_angle,
        spline_nut_angle=spline_angle,
        ie=encoder_sample(s.ie, enc_spec, ie_angle),
        re=encoder_sample(s.re, enc_spec, re_angle),
        pose=forward_kinematics(NutAngles(screw_angle, spline_angle), spec),
        time=s.time + dt,
    )


def apply_speed_mismatch(s: DriveState, epsilon: float) -> DriveState:
    """Set the insertion motor's speed mismatch to (1 + epsilon).

    The insertion motor carries the relative error because the rotary
    encoder is the rotary reference; the rotary motor stays nominal.
    """
    if abs(epsilon) >= MAX_MISMATCH:
        raise ValueError(f"|epsilon| must be < {MAX_MISMATCH}, got {epsilon}")
    return replace(
        s,
        insertion_motor=replace(s.insertion_motor, mismatch_factor=1.0 + epsilon),
    )
