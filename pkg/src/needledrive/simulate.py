"""Closed-loop simulation: controller and plant stepped together.

The plant integrates at a fixed 1 ms step; the controller runs every 10 ms
(both configurable, the control period must be a whole number of plant
steps). Each control tick observes the encoders, runs the bang-bang
controller (plus the PID speed trim in rotation-enabled mode), applies the
motor commands, wires the IE counter freeze to the controller mode, and then
advances the plant.

Everything is deterministic: the same configuration and command sequence
reproduces bit-identical trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .constants import RPM_TO_DEG_PER_S
from .control import (
    ControllerMode,
    ControllerState,
    DisplayedPosition,
    MotorCommand,
    bang_bang_update,
    observe,
    pid_compensation_update,
    toggle_rotation_enable,
)
from .drivetrain import (
    Direction,
    DriveState,
    EncoderSpec,
    EncoderState,
    MotorRole,
    MotorSpec,
    MotorState,
    TransmissionConfig,
    apply_speed_mismatch,
    encoder_sample,
    initial_drive_state,
    plant_step,
    quantize_angle,
)
from .kinematics import ScrewSpec


class ConvergenceError(RuntimeError):
    """A closed-loop motion failed to settle in the allotted time."""


class StrokeLimitError(RuntimeError):
    """The shaft ran past a configured stroke limit."""


@dataclass
class SimConfig:
    """Everything needed to build a simulator instance."""

    screw: ScrewSpec = field(default_factory=ScrewSpec)
    screw_transmission: TransmissionConfig = field(default_factory=TransmissionConfig)
    spline_transmission: TransmissionConfig = field(default_factory=TransmissionConfig)
    insertion_motor: MotorSpec = field(
        default_factory=lambda: MotorSpec(role=MotorRole.INSERTION)
    )
    rotary_motor: MotorSpec = field(
        default_factory=lambda: MotorSpec(role=MotorRole.ROTARY)
    )
    encoder: EncoderSpec = field(default_factory=EncoderSpec)
    motor_mounted_encoders: bool = False
    plant_dt: float = 0.001
    control_period: float = 0.01
    controller: ControllerState = field(default_factory=ControllerState)
    stroke_limits: tuple[float, float] | None = None  # (min, max) insertion mm

    def __post_init__(self) -> None:
        if self.plant_dt <= 0 or self.control_period <= 0:
            raise ValueError("plant_dt and control_period must be > 0")
        steps = self.control_period / self.plant_dt
        if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
            raise ValueError(
                f"control_period ({self.control_period}) must be a whole number "
                f"of plant steps ({self.plant_dt})"
            )
        if self.motor_mounted_encoders and (
            self.screw_transmission != self.spline_transmission
        ):
            raise ValueError(
                "motor-mounted encoders require equal transmissions on both axes"
            )
        ctrl = self.controller
        if ctrl.insertion_speed > self.insertion_motor.real_speed_cap:
            raise ValueError("insertion_speed exceeds real_speed_cap")
        if ctrl.rotary_speed > self.rotary_motor.real_speed_cap:
            raise ValueError("rotary_speed exceeds real_speed_cap")
        # Landing guarantee: one control period of approach travel must fit
        # inside twice the deadband or the loop never settles.
        ins_step = (
            ctrl.insertion_approach_speed * self.screw_transmission.ratio
            * self.screw.lead / 60.0 * self.control_period
        )
        if ins_step > 2 * ctrl.insertion_tol:
            raise ValueError(
                f"insertion approach travel per control period ({ins_step:.4f} mm) "
                f"exceeds twice the deadband ({ctrl.insertion_tol} mm)"
            )
        rot_step = (
            ctrl.rotary_approach_speed * self.spline_transmission.ratio
            * RPM_TO_DEG_PER_S * self.control_period
        )
        if rot_step > 2 * ctrl.rotary_tol:
            raise ValueError(
                f"rotary approach travel per control period ({rot_step:.4f} deg) "
                f"exceeds twice the deadband ({ctrl.rotary_tol} deg)"
            )

    @property
    def steps_per_tick(self) -> int:
        return round(self.control_period / self.plant_dt)

    def insertion_traverse_mm_per_s(self) -> float:
        return (
            self.controller.insertion_speed * self.screw_transmission.ratio
            * self.screw.lead / 60.0
        )


class NeedleDriverSim:
    """Owns one drive state and one controller and steps them together."""

    def __init__(self, config: SimConfig | None = None, mismatch: float = 0.0):
        self.cfg = config or SimConfig()
        drive = initial_drive_state()
        if mismatch:
            drive = apply_speed_mismatch(drive, mismatch)
        self.drive: DriveState = drive
        # The advancing motor direction depends on the thread handedness.
        positive = Direction.CW if self.cfg.screw.handedness > 0 else Direction.CCW
        self.ctrl: ControllerState = replace(
            self.cfg.controller, insertion_positive_direction=positive
        )
        self.estopped = False
        self._pending_rotation_enable: bool | None = None
        # Freeze-gated image of the rotary channel feeding the insertion
        # display's subtraction; the live RE keeps the rotary display moving.
        self._re_display = EncoderState()
        self._raw_ie = quantize_angle(self.drive.ie.last_true_angle, self.cfg.encoder)
        self._raw_re = quantize_angle(self.drive.re.last_true_angle, self.cfg.encoder)
        self.displayed: DisplayedPosition = self._observe()

    # ------------------------------------------------------------------
    # operator commands
    # ------------------------------------------------------------------

    def set_insertion_target(self, target_mm: float) -> None:
        if not math.isfinite(target_mm):
            raise ValueError("target must be finite")
        self.ctrl = replace(self.ctrl, insertion_target=target_mm)

    def set_rotary_target(self, target_deg: float) -> None:
        if not math.isfinite(target_deg):
            raise ValueError("target must be finite")
        self.ctrl = replace(self.ctrl, rotary_target=target_deg)

    def set_rotation_enable(self, on: bool) -> None:
        """Request a mode change; it takes effect at the next control tick.

        Deferring the toggle to the tick boundary makes the held display
        value exactly the readout of the transition instant.
        """
        self._pending_rotation_enable = on

    def set_axis_speed(self, role: MotorRole, rpm: float) -> None:
        """Set an axis traverse speed; rejects values over the motor's real cap."""
        cap = (
            self.cfg.insertion_motor.real_speed_cap
            if role is MotorRole.INSERTION
            else self.cfg.rotary_motor.real_speed_cap
        )
        if not 0 <= rpm <= cap:
            raise ValueError(f"speed {rpm} rpm exceeds real_speed_cap {cap} rpm")
        if role is MotorRole.INSERTION:
            self.ctrl = replace(self.ctrl, insertion_speed=rpm)
        else:
            self.ctrl = replace(self.ctrl, rotary_speed=rpm)

    def set_estop(self, engaged: bool) -> None:
        """Engage or release the e-stop latch; engaged kills both motors."""
        self.estopped = engaged

    # ------------------------------------------------------------------
    # stepping
    # ------------------------------------------------------------------

    def _observe(self) -> DisplayedPosition:
        return observe(
            self.ctrl,
            self.drive.ie.counts,
            self.drive.re.counts,
            self._re_display.counts,
            self.cfg.encoder,
            self.cfg.screw_transmission,
            self.cfg.screw,
            motor_referenced=self.cfg.motor_mounted_encoders,
        )

    def _apply_command(self, motor: MotorState, cmd: MotorCommand, cap: float) -> MotorState:
        return replace(
            motor,
            enabled=cmd.enabled,
            direction=cmd.direction,
            commanded_speed=min(cmd.speed, cap),
        )

    def tick(self) -> None:
        """One control period: observe, decide, actuate, integrate."""
        disp = self._observe()
        if self._pending_rotation_enable is not None:
            # The displayed value is continuous across the mode change (the
            # gated counters hold and resume seamlessly), so disp stands.
            self.ctrl = toggle_rotation_enable(self.ctrl, self._pending_rotation_enable)
            self._pending_rotation_enable = None
        self.displayed = disp
        im_cmd, rm_cmd, self.ctrl = bang_bang_update(self.ctrl, disp)

        # Nut-speed trim from the encoder-estimated rates of the previous
        # control period; only meaningful while the two motors are ganged.
        raw_ie = quantize_angle(self.drive.ie.last_true_angle, self.cfg.encoder)
        raw_re = quantize_angle(self.drive.re.last_true_angle, self.cfg.encoder)
        if self.ctrl.mode is ControllerMode.ROTATION_ENABLED and self.ctrl.pid_enabled:
            cpr = self.cfg.encoder.counts_per_rev
            period = self.cfg.control_period
            ie_rate = (raw_ie - self._raw_ie) / cpr * 60.0 / period  # nut rpm
            re_rate = (raw_re - self._raw_re) / cpr * 60.0 / period
            speed_error = (re_rate - ie_rate) / self.cfg.screw_transmission.ratio
            correction, self.ctrl = pid_compensation_update(
                self.ctrl, speed_error, period
            )
            signed = rm_cmd.signed_speed + correction
            im_cmd = MotorCommand(
                MotorRole.INSERTION,
                enabled=rm_cmd.enabled,
                direction=Direction.CW if signed >= 0 else Direction.CCW,
                speed=abs(signed),
            )
        self._raw_ie, self._raw_re = raw_ie, raw_re

        if self.estopped:
            im_cmd = replace(im_cmd, enabled=False, speed=0.0)
            rm_cmd = replace(rm_cmd, enabled=False, speed=0.0)

        drive = replace(
            self.drive,
            insertion_motor=self._apply_command(
                self.drive.insertion_motor, im_cmd, self.cfg.insertion_motor.real_speed_cap
            ),
            rotary_motor=self._apply_command(
                self.drive.rotary_motor, rm_cmd, self.cfg.rotary_motor.real_speed_cap
            ),
        )
        counting = not self.ctrl.ie_freeze_asserted
        if drive.ie.counting_enabled != counting:
            drive = replace(drive, ie=replace(drive.ie, counting_enabled=counting))
        if self._re_display.counting_enabled != counting:
            self._re_display = replace(self._re_display, counting_enabled=counting)
        for _ in range(self.cfg.steps_per_tick):
            drive = plant_step(
                drive,
                self.cfg.plant_dt,
                self.cfg.screw_transmission,
                self.cfg.spline_transmission,
                self.cfg.screw,
                self.cfg.encoder,
                self.cfg.motor_mounted_encoders,
            )
        self.drive = drive
        # The gated rotary image only matters at tick boundaries, and its
        # quantization is a pure function of the endpoint angle, so one
        # sample per tick is exact.
        re_source = (
            drive.rotary_motor.angle
            if self.cfg.motor_mounted_encoders
            else drive.spline_nut_angle
        )
        self._re_display = encoder_sample(self._re_display, self.cfg.encoder, re_source)

        if self.cfg.stroke_limits is not None:
            lo, hi = self.cfg.stroke_limits
            if not lo <= drive.pose.insertion <= hi:
                raise StrokeLimitError(
                    f"insertion {drive.pose.insertion:.3f} mm outside limits [{lo}, {hi}]"
                )

    def current_display(self) -> DisplayedPosition:
        """Readout matching the current plant state (a consistent snapshot).

        `displayed` is the controller's view from the start of the last
        tick; this recomputes from the latest encoder counts.
        """
        return self._observe()

    def run(self, duration: float) -> None:
        """Advance by a fixed duration (whole control periods)."""
        for _ in range(round(duration / self.cfg.control_period)):
            self.tick()

    def settled(self) -> bool:
        """Both axes inside their deadbands with both motors commanded off."""
        disp = self.displayed
        in_band = (
            abs(self.ctrl.insertion_target - disp.insertion_display) <= self.ctrl.insertion_tol
            and abs(self.ctrl.rotary_target - disp.rotary_display) <= self.ctrl.rotary_tol
        )
        motors_off = (
            not self.drive.insertion_motor.enabled and not self.drive.rotary_motor.enabled
        )
        return in_band and motors_off

    def run_until_settled(self, timeout: float = 120.0, hold: float = 0.05) -> float:
        """Run until both axes settle and stay settled for `hold` seconds.

        Returns the simulated time at which the loop first entered the held
        settled stretch. Raises ConvergenceError on timeout.
        """
        held_ticks_needed = max(1, round(hold / self.cfg.control_period))
        held = 0
        settle_time = None
        max_ticks = round(timeout / self.cfg.control_period)
        for _ in range(max_ticks):
            self.tick()
            if self.settled():
                if held == 0:
                    settle_time = self.drive.time
                held += 1
                if held >= held_ticks_needed:
                    assert settle_time is not None
                    return settle_time
            else:
                held = 0
                settle_time = None
        raise ConvergenceError(
            f"did not settle within {timeout} s (targets "
            f"{self.ctrl.insertion_target} mm / {self.ctrl.rotary_target} deg)"
        )

    @property
    def time(self) -> float:
        return self.drive.time
