"""Tendon length changes over the shoulder workspace, and which tendons only ever pull."""
import numpy as np

from tendonsense import default_layout, forward_surface, monotonicity_screen
from tendonsense.tendon import layout_to_dict

np.set_printoptions(precision=2, suppress=True, linewidth=110)

layout = default_layout()
for name, tendon in layout_to_dict(layout).items():
    print(name, [(e["frame"][0], e["xyz_mm"]) for e in tendon["elements"]])

# Sensor values on a coarse lattice: rows are azimuth, columns elevation.
az = np.linspace(-40, 90, 6)
el = np.linspace(0, 90, 7)
surf = forward_surface(layout, az, el)
print("\nazimuth rows", az, "\nelevation columns", el)
for name, grid in surf.items():
    print(f"\ndl_{name} (mm)\n{grid}")

# Every column 0 entry is the hanging arm, so it reads zero whatever the azimuth.
assert all(np.all(g[:, 0] == 0) for g in surf.values())

# Along simple sweeps, a tendon that could drive the motion must only shorten.
report = monotonicity_screen(layout)
print(f"\n{'tendon':>6} {'movement':>22} {'trend':>11} {'reversals':>9} {'change mm':>10}")
for e in report.entries:
    print(f"{e.tendon:>6} {e.movement:>22} {e.trend:>11} {e.reversals:>9} {e.total_change_mm:>10.1f}")

# The same layout under the other path models. Wrapping over the humeral head lengthens paths
# that would otherwise cut through it.
for policy in ("polyline", "spherewrap"):
    other = forward_surface(default_layout(policy), [90.0], [90.0])
    print(policy, {n: round(float(v[0, 0]), 2) for n, v in other.items()})
