"""Feedback display, mode-switch bang-bang controller, and PID speed trim.

Two selectable position observers:

* DIFFERENTIAL — insertion display = handedness * lead * (IE - RE) /
  counts_per_rev. Subtracting the rotary count cancels the screw-nut motion
  that a pure rotation produces, so the display stays put during rotation
  without any special casing.
* DIRECT — insertion display maps one-to-one from IE alone. Correct only if
  rotation happens exclusively in rotation-enabled mode with the IE counter
  frozen; during mixed motion the rotary axis bleeds into the reading.

The controller has two modes. In Normal mode each axis runs an independent
bang-bang loop with a deadband: full speed far from the target, a slow
approach speed inside the slow zone, off inside the deadband. In
RotationEnabled mode the rotary axis runs its loop and the insertion motor
mirrors the rotary command (two motors, one degree of freedom); the counter
freeze is asserted, which stops both accumulators feeding the insertion
display (IE, and the display's gated image of RE) while the live RE keeps
the rotary display tracking. Frozen accumulators hold their value and resume
seamlessly, so the insertion display is exactly constant during the mode and
carries over without a jump when it ends — silently missing whatever
insertion a motor mismatch really produced, which is precisely the spiral
feed-in error the drift experiments quantify.

The PID speed trim targets the residual rate difference between the two nuts
during rotation-enabled motion, which is what turns a commanded pure rotation
into a slow spiral when the motors are mismatched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .drivetrain import Direction, EncoderSpec, MotorRole, TransmissionConfig
from .kinematics import ScrewSpec


class ControllerMode(Enum):
    NORMAL = "normal"
    ROTATION_ENABLED = "rotation_enabled"


class ObserverKind(Enum):
    DIFFERENTIAL = "differential"  # insertion from IE - RE
    DIRECT = "direct"              # insertion from IE alone, needs the freeze


@dataclass(frozen=True)
class DisplayedPosition:
    """Operator-facing position readout."""

    insertion_display: float  # mm
    rotary_display: float     # deg


@dataclass(frozen=True)
class MotorCommand:
    """One motor's enable/direction/speed setting for the next control period."""

    target: MotorRole
    enabled: bool
    direction: Direction
    speed: float  # rpm, >= 0

    def __post_init__(self) -> None:
        if self.speed < 0:
            raise ValueError(f"command speed must be >= 0, got {self.speed}")

    @property
    def signed_speed(self) -> float:
        return self.direction.value * self.speed if self.enabled else 0.0


@dataclass(frozen=True)
class ControllerState:
    """Controller configuration plus its evolving state.

    Speeds are motor-side rpm. The *_approach_speed values apply inside the
    *_slow_zone band around the target and must be slow enough that one
    control period of travel fits inside twice the deadband, otherwise the
    loop steps over the deadband and limit-cycles.
    """

    mode: ControllerMode = ControllerMode.NORMAL
    insertion_target: float = 0.0   # mm
    rotary_target: float = 0.0      # deg
    insertion_tol: float = 0.05     # mm deadband
    rotary_tol: float = 0.5         # deg deadband
    insertion_speed: float = 67.2   # traverse rpm
    rotary_speed: float = 67.2
    insertion_approach_speed: float = 8.4
    rotary_approach_speed: float = 4.2
    insertion_slow_zone: float = 2.0   # mm
    rotary_slow_zone: float = 15.0     # deg
    pid_kp: float = 0.8
    pid_ki: float = 20.0            # 1/s
    pid_kd: float = 0.0             # s
    pid_integral: float = 0.0       # rpm, clamped
    pid_prev_error: float = 0.0     # rpm
    pid_integral_limit: float = 10.0  # rpm
    pid_enabled: bool = False
    observer: ObserverKind = ObserverKind.DIFFERENTIAL
    # Motor direction that advances the needle; CCW for a left-hand thread.
    insertion_positive_direction: Direction = Direction.CW

    def __post_init__(self) -> None:
        if self.insertion_tol <= 0 or self.rotary_tol <= 0:
            raise ValueError("deadband tolerances must be > 0")
        for name in ("insertion_speed", "rotary_speed",
                     "insertion_approach_speed", "rotary_approach_speed"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.pid_integral_limit <= 0:
            raise ValueError("pid_integral_limit must be > 0")
        if not math.isfinite(self.insertion_target) or not math.isfinite(self.rotary_target):
            raise ValueError("targets must be finite")

    @property
    def ie_freeze_asserted(self) -> bool:
        """The IE counter freeze travels with rotation-enabled mode."""
        return self.mode is ControllerMode.ROTATION_ENABLED


def displayed_position(
    ie_counts: int,
    re_counts: int,
    enc: EncoderSpec,
    cfg: TransmissionConfig,
    spec: ScrewSpec,
    motor_referenced: bool = False,
) -> DisplayedPosition:
    """Position readout from raw encoder counts (differential pattern).

    insertion = handedness * lead * (IE - RE) / counts_per_rev
    rotary    = 360 * RE / counts_per_rev

    With nut-referenced encoders (the default) the transmission drops out;
    with encoders on the motor back-shafts the counts are scaled through the
    belt ratio first.
    """
    cpr = enc.counts_per_rev
    scale = cfg.ratio if motor_referenced else 1.0
    return DisplayedPosition(
        insertion_display=spec.handedness * spec.lead * scale * (ie_counts - re_counts) / cpr,
        rotary_display=360.0 * scale * re_counts / cpr,
    )


def observe(
    ctrl: ControllerState,
    ie_counts: int,
    re_counts: int,
    re_display_counts: int,
    enc: EncoderSpec,
    cfg: TransmissionConfig,
    spec: ScrewSpec,
    motor_referenced: bool = False,
) -> DisplayedPosition:
    """Controller-facing readout.

    re_counts is the live rotary accumulator (drives the rotary display);
    re_display_counts is the freeze-gated image of the same channel that the
    insertion display subtracts, so the insertion readout holds exactly
    while the freeze is asserted and resumes without a jump.
    """
    cpr = enc.counts_per_rev
    scale = cfg.ratio if motor_referenced else 1.0
    mm_per_count = spec.handedness * spec.lead * scale / cpr

    if ctrl.observer is ObserverKind.DIFFERENTIAL:
        raw = ie_counts - re_display_counts
    else:
        raw = ie_counts

    return DisplayedPosition(
        insertion_display=mm_per_count * raw,
        rotary_display=360.0 * scale * re_counts / cpr,
    )


def toggle_rotation_enable(ctrl: ControllerState, on: bool) -> ControllerState:
    """Switch rotation-enabled mode on or off (idempotent).

    The mode change carries the counter freeze with it; the frozen
    accumulators hold and later resume seamlessly, so the insertion display
    is continuous across both transitions by construction.
    """
    if on and ctrl.mode is ControllerMode.NORMAL:
        return replace(ctrl, mode=ControllerMode.ROTATION_ENABLED)
    if not on and ctrl.mode is ControllerMode.ROTATION_ENABLED:
        return replace(ctrl, mode=ControllerMode.NORMAL)
    return ctrl


def _axis_command(
    role: MotorRole,
    error: float,
    tol: float,
    traverse_speed: float,
    approach_speed: float,
    slow_zone: float,
    positive_direction: Direction,
) -> MotorCommand:
    if abs(error) <= tol:
        return MotorCommand(role, enabled=False, direction=positive_direction, speed=0.0)
    speed = approach_speed if abs(error) <= slow_zone else traverse_speed
    if error > 0:
        direction = positive_direction
    else:
        direction = Direction.CCW if positive_direction is Direction.CW else Direction.CW
    return MotorCommand(role, enabled=True, direction=direction, speed=speed)


def bang_bang_update(
    ctrl: ControllerState,
    disp: DisplayedPosition,
) -> tuple[MotorCommand, MotorCommand, ControllerState]:
    """One control decision: commands for both motors.

    Normal mode runs the two axis loops independently. Rotation-enabled mode
    runs the rotary loop and mirrors its command onto the insertion motor so
    both nuts turn together.
    """
    rotary_cmd = _axis_command(
        MotorRole.ROTARY,
        ctrl.rotary_target - disp.rotary_display,
        ctrl.rotary_tol,
        ctrl.rotary_speed,
        ctrl.rotary_approach_speed,
        ctrl.rotary_slow_zone,
        Direction.CW,
    )
    if ctrl.mode is ControllerMode.NORMAL:
        insertion_cmd = _axis_command(
            MotorRole.INSERTION,
            ctrl.insertion_target - disp.insertion_display,
            ctrl.insertion_tol,
            ctrl.insertion_speed,
            ctrl.insertion_approach_speed,
            ctrl.insertion_slow_zone,
            ctrl.insertion_positive_direction,
        )
    else:
        insertion_cmd = MotorCommand(
            MotorRole.INSERTION,
            enabled=rotary_cmd.enabled,
            direction=rotary_cmd.direction,
            speed=rotary_cmd.speed,
        )
    return insertion_cmd, rotary_cmd, ctrl


def pid_compensation_update(
    ctrl: ControllerState,
    speed_error: float,
    dt: float,
) -> tuple[float, ControllerState]:
    """Discrete PID on the nut speed error (rpm), returning a trim in rpm.

    correction = kp*e + clamp(integral + ki*e*dt) + kd*(e - e_prev)/dt

    The integral term is clamped to +-pid_integral_limit for anti-windup.
    The caller adds the correction to the insertion motor's commanded speed
    while in rotation-enabled mode.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not ctrl.pid_enabled:
        raise ValueError("pid_compensation_update requires pid_enabled")
    integral = ctrl.pid_integral + ctrl.pid_ki * speed_error * dt
    limit = ctrl.pid_integral_limit
    integral = max(-limit, min(limit, integral))
    derivative = (speed_error - ctrl.pid_prev_error) / dt
    correction = ctrl.pid_kp * speed_error + integral + ctrl.pid_kd * derivative
    return correction, replace(ctrl, pid_integral=integral, pid_prev_error=speed_error)
