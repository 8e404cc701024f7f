"""Which sensor subsets carry enough information to recover both joint angles?

Trains one inverse model per subset of two or more sensors. The full run takes several
minutes; ``--quick`` trains 100 epochs per subset.
"""
import sys

from tendonsense import TrainConfig, ablate, default_layout, protocol_dataset

cfg = TrainConfig(max_epochs=100) if "--quick" in sys.argv else TrainConfig()
data = protocol_dataset(default_layout(), seed=0)
report = ablate(data, cfg)

print(f"{'subset':>12} {'azimuth':>8} {'elevation':>9} {'mean':>7}")
for e in sorted(report.entries, key=lambda e: e.mean_rmse):
    print(f"{e.label:>12} {e.rmse_theta_deg:8.2f} {e.rmse_phi_deg:9.2f} {e.mean_rmse:7.2f}")
for k in (2, 3, 4):
    print(f"mean over subsets of {k}: {report.mean_by_size(k):.2f} deg")
print(report.ordering())

# F and R pull along the same line from opposite sides, so together they mostly see one
# direction of motion; the pair cannot tell flexion from abduction well.
