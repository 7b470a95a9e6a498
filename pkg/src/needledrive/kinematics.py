"""Differential screw/spline kinematics.

A single shaft carries both a screw thread and a spline groove, each engaged
by its own motor-driven nut. Turning the screw nut relative to the spline nut
translates the shaft; turning the spline nut rotates it. Running both nuts at
the same speed and direction yields pure rotation, running only the screw nut
yields pure translation, and unequal rates produce a coupled spiral.

Sign convention (used everywhere in this package): positive relative rotation
(screw nut leading the spline nut) with right-hand threading (handedness +1)
advances the needle (positive insertion). Angles are continuous accumulators
in degrees and are never wrapped, because drift analysis needs multi-
revolution totals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .constants import LEAD_MM_PER_REV, SCREW_STARTS

#: Default rate tolerance (rpm) below which an axis is considered stopped.
DEFAULT_RATE_TOL_RPM = 0.5


@dataclass(frozen=True)
class ScrewSpec:
    """Lead screw geometry relating relative nut rotation to travel.

    lead is the axial travel per relative revolution (mm/rev) — on a
    multi-start thread this is starts * pitch, and it alone governs travel.
    handedness is +1 for a right-hand thread, -1 for left-hand.
    """

    lead: float = LEAD_MM_PER_REV
    starts: int = SCREW_STARTS
    handedness: int = 1

    def __post_init__(self) -> None:
        if not (self.lead > 0 and math.isfinite(self.lead)):
            raise ValueError(f"lead must be positive and finite, got {self.lead}")
        if self.starts < 1:
            raise ValueError(f"starts must be >= 1, got {self.starts}")
        if self.handedness not in (1, -1):
            raise ValueError(f"handedness must be +1 or -1, got {self.handedness}")


@dataclass(frozen=True)
class NutAngles:
    """Accumulated rotation of the two nuts, in degrees (unbounded)."""

    screw_angle: float
    spline_angle: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.screw_angle) and math.isfinite(self.spline_angle)):
            raise ValueError("nut angles must be finite")


@dataclass(frozen=True)
class ShaftPose:
    """Shaft position: insertion depth (mm) and accumulated rotation (deg)."""

    insertion: float
    rotation: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.insertion) and math.isfinite(self.rotation)):
            raise ValueError("pose values must be finite")


class MotionMode(Enum):
    """Shaft motion produced by a pair of nut rates."""

    LINEAR = "linear"    # screw nut turns, spline nut stopped
    ROTARY = "rotary"    # both nuts at equal speed and direction
    SPIRAL = "spiral"    # unequal rates: coupled translation + rotation
    IDLE = "idle"        # both nuts stopped


def forward_kinematics(nuts: NutAngles, spec: ScrewSpec) -> ShaftPose:
    """Map nut angles to shaft pose.

    insertion = handedness * lead * (screw_angle - spline_angle) / 360
    rotation  = spline_angle

    Both coordinates are linear in the nut angles, so equal increments on
    both nuts leave insertion unchanged (pure rotation).
    """
    relative_revs = (nuts.screw_angle - nuts.spline_angle) / 360.0
    return ShaftPose(
        insertion=spec.handedness * spec.lead * relative_revs,
        rotation=nuts.spline_angle,
    )


def inverse_kinematics(pose: ShaftPose, spec: ScrewSpec) -> NutAngles:
    """Nut angles that realize a shaft pose (exact algebraic inverse)."""
    spline = pose.rotation
    # 1/handedness == handedness since handedness is +-1
    screw = spline + spec.handedness * 360.0 * pose.insertion / spec.lead
    return NutAngles(screw_angle=screw, spline_angle=spline)


def classify_motion(
    screw_rate: float,
    spline_rate: float,
    tol: float = DEFAULT_RATE_TOL_RPM,
) -> MotionMode:
    """Classify the shaft motion produced by the given nut rates (rpm).

    Rates within tol of zero count as stopped; rates within tol of each
    other count as synchronized.
    """
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    screw_stopped = abs(screw_rate) <= tol
    spline_stopped = abs(spline_rate) <= tol
    if screw_stopped and spline_stopped:
        return MotionMode.IDLE
    if spline_stopped:
        return MotionMode.LINEAR
    if abs(screw_rate - spline_rate) <= tol:
        return MotionMode.ROTARY
    return MotionMode.SPIRAL
