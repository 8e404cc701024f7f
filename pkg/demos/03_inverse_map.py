"""Learn joint angles from the four sensor values on the synthetic motion protocol.

Pass ``--quick`` to train for 200 epochs instead of 2000.
"""
import sys
import time

import numpy as np

from tendonsense import SensorEmulation, TrainConfig, default_layout, protocol_dataset, train
from tendonsense.mapping import joint_rmse, split_indices

quick = "--quick" in sys.argv
cfg = TrainConfig(max_epochs=200) if quick else TrainConfig()
layout = default_layout()

for label, emulation in (("ideal", None), ("emulated", SensorEmulation(noise_std_mm=0.1, hysteresis_backlash_mm=0.5))):
    data = protocol_dataset(layout, seed=0, emulation=emulation)
    t0 = time.perf_counter()
    model, report = train(data.joints, data.sensors, "inv", cfg=cfg)
    print(f"\n{label}: {len(data)} frames, {report.epochs_run} epochs in {time.perf_counter() - t0:.0f} s")
    print(f"  test RMSE azimuth {report.test_rmse[0]:.2f} deg, elevation {report.test_rmse[1]:.2f} deg")

    # Where does the azimuth error come from? Bin the test rows by true elevation.
    _, _, te = split_indices(len(data), cfg)
    pred, true = model.predict(data.sensors[te]), data.joints[te]
    edges = [0, 1, 5, 15, 45, 90.01]
    for lo, hi in zip(edges[:-1], edges[1:]):
        rows = (true[:, 1] >= lo) & (true[:, 1] < hi)
        r = joint_rmse(pred[rows], true[rows])
        print(f"  elevation {lo:>4}-{hi:<5.0f} {rows.sum():5d} rows  azimuth RMSE {r[0]:7.2f}  elevation RMSE {r[1]:5.2f}")
    w = joint_rmse(pred, true, weight_azimuth_by_sin_phi=True)
    print(f"  azimuth RMSE with errors scaled by sin(elevation): {w[0]:.2f} deg")

# Near the hanging position the azimuth is not defined, so large azimuth errors there cost
# almost nothing in arm direction.
print("\nangle between predicted and true arm direction for the last model:")
u = lambda q: np.column_stack([np.sin(np.radians(q[:, 1])) * np.cos(np.radians(q[:, 0])),
                               np.sin(np.radians(q[:, 1])) * np.sin(np.radians(q[:, 0])),
                               -np.cos(np.radians(q[:, 1]))])
cosang = np.clip(np.sum(u(pred) * u(true), axis=1), -1, 1)
print(f"  RMS {np.degrees(np.sqrt(np.mean(np.arccos(cosang) ** 2))):.2f} deg")
