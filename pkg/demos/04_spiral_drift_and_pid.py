"""Spiral feed-in drift from motor speed mismatch, and PID compensation.

In rotation-enabled mode the insertion motor mirrors the rotary motor. A
relative speed error epsilon turns the commanded pure rotation into a
shallow spiral: the shaft feeds in epsilon * 20 mm per revolution, invisible
to the frozen insertion display. The bench observed ~2.1 mm per 7
revolutions (2520 deg), implying epsilon = 2.1 / (7 * 20) = 0.015.

A PID trim on the encoder-estimated nut speed difference removes almost all
of it.
"""

from dataclasses import replace

from needledrive import SimConfig, run_drift_experiment
from needledrive.constants import CANONICAL_MISMATCH, LEAD_MM_PER_REV

print("Drift scales linearly with the mismatch (7 revolutions each):")
print(f"{'epsilon':>8} {'drift (mm)':>11} {'closed form':>12} {'mm/rev':>8}")
for epsilon in (0.005, 0.015, 0.03):
    result = run_drift_experiment(7, epsilon)
    expected = epsilon * LEAD_MM_PER_REV * 7
    print(f"{epsilon:>8.3f} {result.insertion_drift:>11.4f} "
          f"{expected:>12.4f} {result.drift_per_rev:>8.4f}")

print("\n...and linearly with rotation count (epsilon = 0.015):")
for revs in (7, 14, 28):
    result = run_drift_experiment(revs, CANONICAL_MISMATCH)
    print(f"  {revs:3d} revolutions -> {result.insertion_drift:7.4f} mm")

print("\nPID speed compensation (default gains) on the reference case:")
uncompensated = run_drift_experiment(7, CANONICAL_MISMATCH)
cfg = SimConfig()
cfg.controller = replace(cfg.controller, pid_enabled=True)
compensated = run_drift_experiment(7, CANONICAL_MISMATCH, cfg)
ratio = abs(compensated.insertion_drift) / abs(uncompensated.insertion_drift)
print(f"  without PID: {uncompensated.insertion_drift:7.4f} mm over 2520 deg")
print(f"  with PID:    {compensated.insertion_drift:7.4f} mm "
      f"({100 * ratio:.2f}% of uncompensated)")
