"""Physical constants and measured reference data for the prototype needle driver.

All values describe the validated bench prototype: a 4-start 20x20 mm lead
screw (20 mm of travel per relative revolution), a belt stage with a 24-tooth
pulley on each nut, and 1250-line quadrature encoders read at x4.
"""

from __future__ import annotations

# Screw geometry: travel per relative revolution of the screw nut (mm/rev).
# It is a 4-start thread, so the lead is 4x the 5 mm pitch; the lead is what
# governs travel.
LEAD_MM_PER_REV = 20.0
SCREW_STARTS = 4

# rpm -> deg/s
RPM_TO_DEG_PER_S = 6.0

# Encoder readout: 1250 lines per revolution, x4 quadrature decoding.
ENCODER_LINES_PER_REV = 1250
QUADRATURE_MULTIPLIER = 4
COUNTS_PER_REV = ENCODER_LINES_PER_REV * QUADRATURE_MULTIPLIER  # 5000

# One count of insertion resolution (mm): lead / counts-per-rev.
ENCODER_QUANTUM_MM = LEAD_MM_PER_REV / COUNTS_PER_REV  # 0.004 mm

# Motor speed envelope: nameplate rating and the speed actually sustained
# under load on the bench.
MOTOR_RATED_RPM = 150.0
MOTOR_REAL_RPM = 75.0

# Belt stage: each nut carries a 24-tooth pulley; the motor-side pulley is
# swappable. Output nut speed = motor speed * slave_teeth / master_teeth.
MASTER_TEETH = 24
SLAVE_PULLEY_TEETH = {
    "Slave Pulley 1": 60,  # 1:2.5 — the validated configuration
    "Slave Pulley 2": 48,  # 1:2
    "Slave Pulley 3": 36,  # 1:1.5
    "Slave Pulley 4": 24,  # 1:1
    "Slave Pulley 5": 72,  # 1:3 (oversized, unmounted)
}
DEFAULT_SLAVE_PULLEY = "Slave Pulley 1"

# Measured nut speed with the 1:2.5 stage driving the shaft (some loss from
# shaft runout), and the motor speed that produces it.
MEASURED_NUT_RPM = 168.0
MEASURED_MOTOR_RPM = MEASURED_NUT_RPM / 2.5  # 67.2

# Spiral-drift reference: over 7 shaft revolutions (2520 deg) of commanded
# pure rotation the bench accumulated ~2.1 mm of unintended insertion.
# The implied relative speed mismatch between the two motors:
#   epsilon = 2.1 mm / (7 rev * 20 mm/rev) = 0.015
DRIFT_REFERENCE_MM = 2.1
DRIFT_REFERENCE_REVOLUTIONS = 7
DRIFT_REFERENCE_ROTATION_DEG = 2520.0
CANONICAL_MISMATCH = DRIFT_REFERENCE_MM / (
    DRIFT_REFERENCE_REVOLUTIONS * LEAD_MM_PER_REV
)  # 0.015

# Bench accuracy measurements, 5 trials per target.
# Rows: (target, mean error, sample std dev), mm for insertion, deg for rotary.
INSERTION_ACCURACY_REFERENCE = (
    (122.0, 0.1, 2.83),
    (164.3, -1.9, 3.43),
    (45.3, -0.94, 1.16),
    (162.5, 1.08, 3.37),
    (8.3, 1.1, 0.74),
)
ROTARY_ACCURACY_REFERENCE = (
    (182.525, -1.325, 1.304),
    (95.4, -1.06, 1.549),
    (356.75, 1.45, 1.789),
    (142.51, -0.79, 1.221),
    (8.825, 0.835, 0.422),
)
ACCURACY_TRIALS_PER_TARGET = 5
