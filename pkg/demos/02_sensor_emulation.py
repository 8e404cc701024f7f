"""From ideal length change to what a draw-wire potentiometer on a 12-bit ADC would report."""
import numpy as np

from tendonsense import SensorEmulation, compare_channels, default_layout, quantization_step
from tendonsense.evaluation import hysteresis_sweep

emu = SensorEmulation()
print(f"one ADC count = {quantization_step(emu):.5f} mm = {emu.volts_per_count * 1e3:.3f} mV")

layout = default_layout()

# Repeated raise-and-lower in the flexion plane, once through a perfect channel and once
# through channels with increasing play.
for b in (0.0, 0.5, 1.0, 2.0):
    _, joints, ideal, emulated = hysteresis_sweep(layout, SensorEmulation(hysteresis_backlash_mm=b))
    m = compare_channels(ideal, emulated, joints)
    print(f"backlash {b:.1f} mm -> loop width F {m['F'].loop_width_mm:.3f}, R {m['R'].loop_width_mm:.3f} mm;"
          f" rms gap F {m['F'].rms_gap_mm:.3f} mm")

# A hard stop that the tendon runs into mid-trial. The channel flat-lines at the stop while the
# tendon keeps shortening. The stop itself has no memory, so what is left at the end of the
# trial is the half-width of the play, on the side of the last direction of travel.
stop = SensorEmulation(limit_min_mm=-30.0, hysteresis_backlash_mm=1.0)
t, joints, ideal, emulated = hysteresis_sweep(layout, stop, reps=1)
m = compare_channels(ideal, emulated, joints)["F"]
print(f"\nwith a -30 mm stop: F bottoms at {emulated[:, 0].min():.2f} mm (ideal {ideal[:, 0].min():.2f}),"
      f" residual offset at the end {m.residual_offset_mm:+.3f} mm")

# A few samples from the middle of the first sweep.
i = np.arange(0, len(t) // 4, len(t) // 40)
print("\n  t s    phi   ideal F  emulated F")
for k in i:
    print(f"{t[k]:5.2f} {joints[k, 1]:6.1f} {ideal[k, 0]:9.3f} {emulated[k, 0]:11.3f}")
