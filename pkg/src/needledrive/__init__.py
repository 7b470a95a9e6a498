"""Simulator and control library for a 2-DOF differential screw/spline needle driver."""

from .kinematics import (
    MotionMode,
    NutAngles,
    ScrewSpec,
    ShaftPose,
    classify_motion,
    forward_kinematics,
    inverse_kinematics,
)
from .drivetrain import (
    Direction,
    DriveState,
    EncoderRole,
    EncoderSpec,
    EncoderState,
    MotorRole,
    MotorSpec,
    MotorState,
    TransmissionConfig,
    apply_speed_mismatch,
    encoder_sample,
    initial_drive_state,
    motor_step,
    plant_step,
    slave_pulley,
    standard_pulley_set,
    transmission_output,
)
from .control import (
    ControllerMode,
    ControllerState,
    DisplayedPosition,
    MotorCommand,
    ObserverKind,
    bang_bang_update,
    displayed_position,
    observe,
    pid_compensation_update,
    toggle_rotation_enable,
)
from .simulate import ConvergenceError, NeedleDriverSim, SimConfig, StrokeLimitError
from .experiments import (
    Axis,
    CalibrationResult,
    DriftResult,
    ExperimentStats,
    NoiseModel,
    ReportFormat,
    TrialFailure,
    TrialSpec,
    calibrate_noise,
    emit_report,
    read_report,
    run_accuracy_trials,
    run_drift_experiment,
    speed_table,
)

__version__ = "0.1.0"
