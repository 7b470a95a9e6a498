"""Belt-stage speed options.

Each nut carries a 24-tooth pulley driven by a swappable motor-side pulley.
The bench prototype runs the 60-tooth option (1:2.5), which lifted the nut
speed from the motor's real 75 rpm to 187.5 rpm rated; with shaft losses the
measured nut speed was 168 rpm.
"""

from needledrive import speed_table, standard_pulley_set, transmission_output
from needledrive.constants import (
    MEASURED_MOTOR_RPM,
    MEASURED_NUT_RPM,
    MOTOR_RATED_RPM,
    MOTOR_REAL_RPM,
)

rated = speed_table(MOTOR_RATED_RPM)
real = speed_table(MOTOR_REAL_RPM)

print(f"{'Pulley':<16} {'Teeth':>5} {'Ratio':>6} "
      f"{'Out @150 rpm':>13} {'Out @75 rpm':>12}")
for name, cfg in standard_pulley_set():
    print(f"{name:<16} {cfg.slave_teeth:>5} {cfg.ratio:>6.2f} "
          f"{rated[name]:>13g} {real[name]:>12g}")

print(f"\nMeasured bench speed: {MEASURED_NUT_RPM} rpm at the nuts, i.e. the "
      f"1:2.5 stage driven at {MEASURED_MOTOR_RPM} rpm motor-side:")
print(f"  transmission_output({MEASURED_MOTOR_RPM}, 1:2.5) = "
      f"{transmission_output(MEASURED_MOTOR_RPM, standard_pulley_set()[0][1])} rpm")
