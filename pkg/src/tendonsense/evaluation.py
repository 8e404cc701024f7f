"""Analyses over a layout and its datasets.

* :func:`forward_surface` - dense sensor values over an azimuth x elevation lattice.
* :func:`monotonicity_screen` - does each tendon move one way along simple sweeps?
  A tendon used for actuation can only pull, so a reversal along a sweep matters.
* :func:`ablate` - inverse-map accuracy for every sensor subset of size >= 2.
* :func:`compare_channels` - hysteresis band, residual offset and RMS gap between
  ideal and emulated sensor streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .mapping import TrainConfig, TrainingDivergedError, sensor_subsets, split_indices, train
from .motion import MotionKind, TrajectorySpec, generate
from .sensor import EmulatorState, NeutralReference, SensorEmulation, delta_lengths, emulate_stream, quantization_step
from .tendon import TENDON_NAMES, TendonLayout

# --- forward map -------------------------------------------------------------------


def forward_surface(layout: TendonLayout, azimuth_deg, elevation_deg, neutral: NeutralReference | None = None):
    """Sensor values on the lattice ``azimuth_deg x elevation_deg``.

    Returns a dict tendon -> array of shape ``(len(azimuth_deg), len(elevation_deg))``.
    """
    neutral = neutral or NeutralReference.from_layout(layout)
    az = np.asarray(azimuth_deg, dtype=float)
    el = np.asarray(elevation_deg, dtype=float)
    A, E = np.meshgrid(az, el, indexing="ij")
    S = delta_lengths(layout, neutral, A.ravel(), E.ravel())
    return {name: S[:, j].reshape(A.shape) for j, name in enumerate(TENDON_NAMES)}


# --- monotonicity -------------------------------------------------------------------


@dataclass(frozen=True)
class Movement:
    """A single-parameter sweep through joint space."""

    name: str
    azimuth_deg: np.ndarray
    elevation_deg: np.ndarray


def canonical_movements(n: int = 181) -> list[Movement]:
    ramp = np.linspace(0.0, 90.0, n)
    return [
        Movement("flexion", np.full(n, 90.0), ramp),
        Movement("extension", np.full(n, -90.0), ramp),
        Movement("abduction", np.zeros(n), ramp),
        Movement("horizontal_abduction", np.linspace(90.0, -40.0, n), np.full(n, 90.0)),
    ]


@dataclass(frozen=True)
class MonotonicityEntry:
    tendon: str
    movement: str
    sign_pattern: str
    reversals: int
    max_reversal_mm: float
    total_change_mm: float

    @property
    def monotone(self) -> bool:
        return self.reversals == 0

    @property
    def trend(self) -> str:
        return {"+": "increasing", "-": "decreasing"}.get(self.sign_pattern[0], "constant")


@dataclass
class MonotonicityReport:
    entries: list = field(default_factory=list)

    def get(self, tendon: str, movement: str) -> MonotonicityEntry:
        for e in self.entries:
            if e.tendon == tendon and e.movement == movement:
                return e
        raise KeyError((tendon, movement))


def turning_points(values, dead_band: float):
    """Direction runs of a signal, ignoring wiggles no larger than ``dead_band``.

    Returns ``(pattern, retreats)``: the sequence of run directions as a string of
    ``+``/``-`` (``"0"`` if the signal never moves more than the dead-band), and
    the full extent of every run after the first.
    """
    v = np.asarray(values, dtype=float)
    pattern = ""
    starts, extremes = [], []
    anchor = v[0]  # running extreme of the current run
    direction = 0
    for x in v[1:]:
        if direction == 0:
            if abs(x - anchor) > dead_band:
                direction = 1 if x > anchor else -1
                pattern += "+" if direction > 0 else "-"
                starts.append(anchor)
                anchor = x
            continue
        if (x - anchor) * direction > 0:
            anchor = x
        elif abs(x - anchor) > dead_band:
            extremes.append(anchor)
            starts.append(anchor)
            direction = -direction
            pattern += "+" if direction > 0 else "-"
            anchor = x
    if direction:
        extremes.append(anchor)
    retreats = [float(abs(e - s)) for s, e in zip(starts[1:], extremes[1:])]
    return pattern or "0", retreats


def monotonicity_screen(layout: TendonLayout, movements=None, dead_band: float | None = None,
                        neutral: NeutralReference | None = None) -> MonotonicityReport:
    """Count direction reversals of each tendon's signal along each sweep.

    The dead-band defaults to one ADC step of the default sensor, so numerical
    chatter below sensor resolution is not reported.
    """
    movements = canonical_movements() if movements is None else movements
    dead_band = quantization_step(SensorEmulation()) if dead_band is None else dead_band
    neutral = neutral or NeutralReference.from_layout(layout)
    report = MonotonicityReport()
    for mv in movements:
        S = delta_lengths(layout, neutral, mv.azimuth_deg, mv.elevation_deg)
        for j, name in enumerate(TENDON_NAMES):
            pattern, retreats = turning_points(S[:, j], dead_band)
            report.entries.append(MonotonicityEntry(
                name, mv.name, pattern, len(retreats), float(max(retreats, default=0.0)),
                float(S[-1, j] - S[0, j]),
            ))
    return report


# --- ablation -----------------------------------------------------------------------


@dataclass(frozen=True)
class AblationEntry:
    subset: tuple[str, ...]
    rmse_theta_deg: float
    rmse_phi_deg: float
    seed: int
    epochs_run: int

    @property
    def mean_rmse(self) -> float:
        return 0.5 * (self.rmse_theta_deg + self.rmse_phi_deg)

    @property
    def label(self) -> str:
        return "+".join(self.subset)


@dataclass
class AblationReport:
    entries: list = field(default_factory=list)

    def by_size(self, k: int) -> list:
        return [e for e in self.entries if len(e.subset) == k]

    def mean_by_size(self, k: int) -> float:
        return float(np.mean([e.mean_rmse for e in self.by_size(k)]))

    def best(self) -> AblationEntry:
        return min(self.entries, key=lambda e: e.mean_rmse)

    def worst_pair(self) -> AblationEntry:
        return max(self.by_size(2), key=lambda e: e.mean_rmse)

    def ordering(self) -> dict:
        """The expected ordering: all four sensors best, triples beat pairs, F+R the worst pair."""
        return {
            "all_four_best": self.best().subset == TENDON_NAMES,
            "triples_beat_pairs": self.mean_by_size(3) <= self.mean_by_size(2),
            "F_R_worst_pair": self.worst_pair().subset == ("F", "R"),
        }

    def to_rows(self) -> list:
        return [
            {"subset": e.label, "size": len(e.subset), "rmse_theta_deg": e.rmse_theta_deg,
             "rmse_phi_deg": e.rmse_phi_deg, "mean_rmse_deg": e.mean_rmse, "seed": e.seed,
             "epochs_run": e.epochs_run}
            for e in self.entries
        ]


def _ablate_one(data: Dataset, subset, cfg: TrainConfig, split):
    try:
        _, rep = train(data.joints, data.sensors, "inv", subset, cfg, split=split)
    except TrainingDivergedError as exc:
        raise TrainingDivergedError(exc.epoch, subset) from exc
    return AblationEntry(tuple(subset), rep.test_rmse[0], rep.test_rmse[1], cfg.init_seed, rep.epochs_run)


def ablate(data: Dataset, cfg: TrainConfig = TrainConfig(), n_jobs: int = 1) -> AblationReport:
    """Train one inverse model per sensor subset on a shared split with shared seeds."""
    split = split_indices(len(data), cfg)
    subsets = sensor_subsets(2)
    if n_jobs == 1:
        entries = [_ablate_one(data, s, cfg, split) for s in subsets]
    else:
        from joblib import Parallel, delayed

        entries = Parallel(n_jobs=n_jobs)(delayed(_ablate_one)(data, s, cfg, split) for s in subsets)
    return AblationReport(list(entries))


# --- real vs ideal channels ---------------------------------------------------------------


@dataclass(frozen=True)
class ChannelMetrics:
    loop_width_mm: float
    residual_offset_mm: float
    rms_gap_mm: float
    n_rising: int
    n_falling: int


def _crossings(phi, values, level):
    """Values interpolated where ``phi`` passes ``level``, split by the direction of ``phi``."""
    rising, falling = [], []
    for i in range(len(phi) - 1):
        a, b = phi[i] - level, phi[i + 1] - level
        if phi[i + 1] == phi[i] or a * b > 0 or (b == 0 and i + 1 < len(phi) - 1):
            continue
        w = a / (a - b)
        v = values[i] + w * (values[i + 1] - values[i])
        (rising if phi[i + 1] > phi[i] else falling).append(v)
    return np.array(rising), np.array(falling)


def hysteresis_sweep(layout: TendonLayout, emulation: SensorEmulation, reps: int = 4, azimuth_deg: float = 90.0,
                     sweep_duration_s: float | None = None):
    """Repeated 0 -> 90 -> 0 deg elevation sweeps in one plane, ideal and emulated.

    Staying on one side of the pole keeps every tendon's direction of travel tied to
    the direction of the elevation sweep. Returns ``(time_s, joints, ideal, emulated)``.
    """
    traj = generate(TrajectorySpec(MotionKind.AB_AD, reps=reps, sweep_duration_s=sweep_duration_s))
    az = np.full(len(traj), float(azimuth_deg))
    ideal = delta_lengths(layout, NeutralReference.from_layout(layout), az, traj.elevation_deg)
    emulated = emulate_stream(emulation, ideal, EmulatorState.initial(emulation, ideal[0]))
    return traj.time_s, np.column_stack([az, traj.elevation_deg]), ideal, emulated


def compare_channels(ideal, emulated, joints, at_elevation_deg: float | None = None) -> dict:
    """Per-tendon hysteresis metrics between an ideal and an emulated stream.

    ``loop_width_mm`` is the gap between the emulated-minus-ideal residual on rising
    and on falling elevation, measured where elevation crosses ``at_elevation_deg``
    (default: middle of the elevation range). That is the vertical thickness of the
    band in a sensor-vs-elevation plot. ``residual_offset_mm`` is the residual at the
    last sample; ``rms_gap_mm`` the RMS of the residual over the stream.
    """
    ideal = np.asarray(ideal, dtype=float)
    emulated = np.asarray(emulated, dtype=float)
    joints = np.asarray(joints, dtype=float)
    if not (len(ideal) == len(emulated) == len(joints)):
        raise ValueError(f"stream lengths differ: ideal {len(ideal)}, emulated {len(emulated)}, joints {len(joints)}")
    phi = joints[:, 1]
    level = 0.5 * (phi.min() + phi.max()) if at_elevation_deg is None else at_elevation_deg
    resid = emulated - ideal
    out = {}
    for j, name in enumerate(TENDON_NAMES):
        up, down = _crossings(phi, resid[:, j], level)
        width = float(abs(down.mean() - up.mean())) if len(up) and len(down) else 0.0
        out[name] = ChannelMetrics(width, float(resid[-1, j]), float(np.sqrt(np.mean(resid[:, j] ** 2))),
                                   len(up), len(down))
    return out
