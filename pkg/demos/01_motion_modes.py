"""Motion modes of the differential screw/spline shaft.

One grooved shaft, two nuts. The screw nut converts relative rotation into
travel (20 mm per relative revolution); the spline nut carries the shaft's
rotation. Driving the nuts at different rate combinations produces linear,
rotary, or spiral shaft motion.
"""

from needledrive import (
    NutAngles,
    ScrewSpec,
    ShaftPose,
    classify_motion,
    forward_kinematics,
    inverse_kinematics,
)

spec = ScrewSpec(lead=20.0, starts=4, handedness=1)

print("Three canonical rate combinations (rates in rpm):")
for screw_rate, spline_rate in [(150.0, 0.0), (150.0, 150.0), (150.0, 60.0)]:
    mode = classify_motion(screw_rate, spline_rate)
    print(f"  screw {screw_rate:6.1f}, spline {spline_rate:6.1f}  ->  {mode.name}")

print("\nForward kinematics (nut angles -> shaft pose):")
for nuts in [
    NutAngles(360.0, 0.0),      # one screw rev, spline held: pure travel
    NutAngles(720.0, 720.0),    # both together: pure rotation
    NutAngles(0.0, 360.0),      # spline alone: spiral (rotates, retracts)
    NutAngles(900.0, 720.0),    # arbitrary mix
]:
    pose = forward_kinematics(nuts, spec)
    print(
        f"  screw {nuts.screw_angle:7.1f} deg, spline {nuts.spline_angle:7.1f} deg"
        f"  ->  insertion {pose.insertion:7.2f} mm, rotation {pose.rotation:7.1f} deg"
    )

print("\nInverse kinematics recovers the nut angles:")
pose = ShaftPose(insertion=10.0, rotation=720.0)
nuts = inverse_kinematics(pose, spec)
print(f"  pose ({pose.insertion} mm, {pose.rotation} deg)"
      f"  ->  screw {nuts.screw_angle} deg, spline {nuts.spline_angle} deg")
roundtrip = forward_kinematics(nuts, spec)
print(f"  round trip: insertion {roundtrip.insertion} mm, "
      f"rotation {roundtrip.rotation} deg")

print("\nSynchronized increments never move the needle:")
base = forward_kinematics(NutAngles(900.0, 720.0), spec)
for delta in (360.0, 3600.0, 36000.0):
    moved = forward_kinematics(NutAngles(900.0 + delta, 720.0 + delta), spec)
    print(f"  +{delta:7.0f} deg on both nuts: insertion still {moved.insertion} mm "
          f"(was {base.insertion})")
