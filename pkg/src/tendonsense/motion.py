"""Joint-space trajectories that replay the motion-capture movement protocol.

Five movement rows are available. Structured rows are built from out-and-back
sweeps whose position profile is a trapezoid in velocity with raised-cosine
blends, so every sweep starts and ends at rest and the path is C1. Default
sweep durations are the recorded trial times divided by the number of sweeps,
which reproduces the recorded frame counts at 120 Hz.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal, special

from .geometry import WORKSPACE_AZIMUTH_DEG, WORKSPACE_ELEVATION_DEG, JointPose, WorkspaceWarning

FRAME_RATE_HZ = 120.0


class MotionKind(enum.Enum):
    FLEX_EXT = "flex_ext"
    AB_AD = "ab_ad"
    FIXED_AZIMUTH_SWEEP = "fixed_azimuth_sweep"
    FIXED_ELEVATION_SWEEP = "fixed_elevation_sweep"
    RANDOM = "random"

    @classmethod
    def parse(cls, value) -> "MotionKind":
        if isinstance(value, MotionKind):
            return value
        key = str(value).replace("_", "").replace("-", "").lower()
        for kind in cls:
            if kind.value.replace("_", "") == key:
                return kind
        raise ValueError(f"unknown movement kind {value!r}")


# recorded reps, trial time (s) and frame count per movement row
PROTOCOL_TABLE = {
    MotionKind.FLEX_EXT: (4, 25.31, 3037),
    MotionKind.AB_AD: (4, 30.25, 3630),
    MotionKind.FIXED_AZIMUTH_SWEEP: (2, 48.45, 5814),
    MotionKind.FIXED_ELEVATION_SWEEP: (2, 56.31, 6757),
    MotionKind.RANDOM: (1, 85.94, 10313),
}
PROTOCOL_TOTAL_FRAMES = 29551

_SWEEPS_PER_REP = {
    MotionKind.FLEX_EXT: 2,
    MotionKind.AB_AD: 1,
    MotionKind.FIXED_AZIMUTH_SWEEP: 5,
    MotionKind.FIXED_ELEVATION_SWEEP: 5,
    MotionKind.RANDOM: 1,
}
N_CONSTANT_VALUES = 5


class TrajectoryError(ValueError):
    pass


def default_sweep_duration(kind: MotionKind) -> float:
    reps, trial_s, _ = PROTOCOL_TABLE[kind]
    return trial_s / (reps * _SWEEPS_PER_REP[kind])


@dataclass(frozen=True)
class TrajectorySpec:
    """One movement row.

    ``sweep_duration_s`` is the time for one out-and-back sweep; for ``RANDOM`` it
    is the whole trial. ``None`` picks the protocol default for the kind.
    """

    kind: MotionKind
    reps: int | None = None
    frame_rate_hz: float = FRAME_RATE_HZ
    seed: int = 0
    sweep_duration_s: float | None = None
    azimuth_range_deg: tuple[float, float] = WORKSPACE_AZIMUTH_DEG
    elevation_range_deg: tuple[float, float] = WORKSPACE_ELEVATION_DEG
    blend_fraction: float = 0.02
    cutoff_hz: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "kind", MotionKind.parse(self.kind))
        if self.reps is None:
            object.__setattr__(self, "reps", PROTOCOL_TABLE[self.kind][0])
        if self.sweep_duration_s is None:
            object.__setattr__(self, "sweep_duration_s", default_sweep_duration(self.kind))
        if self.reps < 1:
            raise TrajectoryError("reps must be >= 1")
        if not self.frame_rate_hz > 0 or not self.sweep_duration_s > 0:
            raise TrajectoryError("frame_rate_hz and sweep_duration_s must be positive")
        if not 0 < self.blend_fraction <= 0.25:
            raise TrajectoryError("blend_fraction must lie in (0, 0.25]")
        az, el = tuple(map(float, self.azimuth_range_deg)), tuple(map(float, self.elevation_range_deg))
        object.__setattr__(self, "azimuth_range_deg", az)
        object.__setattr__(self, "elevation_range_deg", el)
        if not (WORKSPACE_AZIMUTH_DEG[0] <= az[0] < az[1] <= WORKSPACE_AZIMUTH_DEG[1]):
            raise TrajectoryError(f"azimuth range {az} is outside the workspace {WORKSPACE_AZIMUTH_DEG}")
        if not (WORKSPACE_ELEVATION_DEG[0] <= el[0] < el[1] <= WORKSPACE_ELEVATION_DEG[1]):
            raise TrajectoryError(f"elevation range {el} is outside the workspace {WORKSPACE_ELEVATION_DEG}")

    @property
    def n_frames(self) -> int:
        return int(round(self.reps * _SWEEPS_PER_REP[self.kind] * self.sweep_duration_s * self.frame_rate_hz))


@dataclass(frozen=True)
class Trajectory:
    name: str
    time_s: np.ndarray
    azimuth_deg: np.ndarray
    elevation_deg: np.ndarray
    frame_rate_hz: float = FRAME_RATE_HZ

    def __len__(self):
        return len(self.time_s)

    @property
    def frames(self) -> list[tuple[float, JointPose]]:
        # extension half-phases sit at theta=-90, on their own locus rather than in the random-motion box
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", WorkspaceWarning)
            return [(float(t), JointPose(float(a), float(e)))
                    for t, a, e in zip(self.time_s, self.azimuth_deg, self.elevation_deg)]

    @property
    def joints(self) -> np.ndarray:
        return np.column_stack([self.azimuth_deg, self.elevation_deg])


def sweep_profile(tau, blend: float = 0.02) -> np.ndarray:
    """Normalised out-and-back position: 0 -> 1 -> 0 as ``tau`` runs over [0, 1].

    Velocity is a constant-speed ramp; each turnaround is a raised-cosine velocity
    reversal of total width ``2 * blend`` (half of it inside this sweep), so the
    position is C1 and leaves the end points with finite acceleration.
    """
    tau = np.clip(np.asarray(tau, dtype=float), 0.0, 1.0)
    u = np.where(tau <= 0.5, tau, 1.0 - tau)
    w = 2.0 * blend / np.pi
    v = 1.0 / (0.5 - 2.0 * blend + 2.0 * w)
    q = np.pi / (2.0 * blend)
    cruise_start = w * v
    top_start = cruise_start + v * (0.5 - 2.0 * blend)
    s = np.where(
        u <= blend,
        w * v * (1.0 - np.cos(q * u)),
        np.where(u >= 0.5 - blend, top_start + w * v * np.sin(q * (u - 0.5 + blend)), cruise_start + v * (u - blend)),
    )
    return s


def _sweep_series(spec: TrajectorySpec, t: np.ndarray):
    """Index of the current sweep and the normalised time inside it."""
    k = np.floor(t / spec.sweep_duration_s).astype(int)
    n_sweeps = spec.reps * _SWEEPS_PER_REP[spec.kind]
    k = np.minimum(k, n_sweeps - 1)
    tau = t / spec.sweep_duration_s - k
    return k, np.clip(tau, 0.0, 1.0)


def constant_values(lo: float, hi: float, include_low: bool) -> np.ndarray:
    if include_low:
        return np.linspace(lo, hi, N_CONSTANT_VALUES)
    return lo + (hi - lo) * np.arange(1, N_CONSTANT_VALUES + 1) / N_CONSTANT_VALUES


def generate(spec: TrajectorySpec, name: str | None = None) -> Trajectory:
    n = spec.n_frames
    t = np.arange(n) / spec.frame_rate_hz
    # include the endpoint so each trial ends back at its starting pose
    t_prof = t * (spec.reps * _SWEEPS_PER_REP[spec.kind] * spec.sweep_duration_s) / max(t[-1], 1e-12)
    az_lo, az_hi = spec.azimuth_range_deg
    el_lo, el_hi = spec.elevation_range_deg
    kind = spec.kind
    blend = spec.blend_fraction

    if kind is MotionKind.RANDOM:
        az, el = _random_walk(spec, n)
    else:
        k, tau = _sweep_series(spec, t_prof)
        s = sweep_profile(tau, blend)
        if kind is MotionKind.AB_AD:
            az = np.zeros(n)
            el = el_lo + (el_hi - el_lo) * s
        elif kind is MotionKind.FLEX_EXT:
            # first half of each rep on the flexion side, second half on the extension side
            az = np.where(k % 2 == 0, 90.0, -90.0)
            el = el_lo + (el_hi - el_lo) * s
        elif kind is MotionKind.FIXED_AZIMUTH_SWEEP:
            values = constant_values(az_lo, az_hi, include_low=True)
            az = values[_level_index(k)]
            el = el_lo + (el_hi - el_lo) * s
        else:
            az, el = _fixed_elevation(spec, k, tau)
    return Trajectory(name or kind.value, t, np.asarray(az, float), np.asarray(el, float), spec.frame_rate_hz)


def _level_index(k):
    # ascending through the constant values on even reps, descending on odd reps
    rep, j = np.divmod(k, N_CONSTANT_VALUES)
    return np.where(rep % 2 == 0, j, N_CONSTANT_VALUES - 1 - j)


TRANSITION_FRACTION = 0.15


def _fixed_elevation(spec: TrajectorySpec, k, tau):
    """Azimuth sweeps at constant elevation, joined by elevation moves at the low azimuth."""
    az_lo, az_hi = spec.azimuth_range_deg
    el_lo, el_hi = spec.elevation_range_deg
    levels = constant_values(el_lo, el_hi, include_low=False)
    idx = _level_index(k)
    target = levels[idx]
    prev = np.where(k == 0, el_lo, levels[_level_index(np.maximum(k - 1, 0))])
    g = TRANSITION_FRACTION
    in_move = tau < g
    step = sweep_profile(0.5 * np.clip(tau / g, 0.0, 1.0), spec.blend_fraction * 2)
    el = np.where(in_move, prev + (target - prev) * step, target)
    s = sweep_profile(np.clip((tau - g) / (1.0 - g), 0.0, 1.0), spec.blend_fraction)
    az = np.where(in_move, az_lo, az_lo + (az_hi - az_lo) * s)
    return az, el


def _random_walk(spec: TrajectorySpec, n: int):
    """Low-pass filtered Gaussian noise pushed through the normal CDF.

    Azimuth is uniform over its range; elevation is uniform over the area of the
    spherical cap of arm directions, so the arm rarely sits at the gimbal pole.
    """
    rng = np.random.default_rng(spec.seed)
    b, a = signal.butter(2, spec.cutoff_hz / (0.5 * spec.frame_rate_hz))
    white = rng.standard_normal((2, n + 2000))
    smooth = signal.filtfilt(b, a, white, axis=1)[:, 1000:1000 + n]
    smooth = (smooth - smooth.mean(axis=1, keepdims=True)) / smooth.std(axis=1, keepdims=True)
    u = special.ndtr(smooth)
    az_lo, az_hi = spec.azimuth_range_deg
    el_lo, el_hi = np.radians(spec.elevation_range_deg)
    az = az_lo + (az_hi - az_lo) * u[0]
    c_lo, c_hi = np.cos(el_lo), np.cos(el_hi)
    el = np.degrees(np.arccos(c_lo + (c_hi - c_lo) * u[1]))
    return az, el


def protocol_specs(seed: int = 0, overrides: dict | None = None) -> list[TrajectorySpec]:
    """The five movement rows with their recorded reps; ``overrides`` maps kind -> field dict."""
    overrides = overrides or {}
    specs = []
    for kind in MotionKind:
        kw = dict(overrides.get(kind.value, {}))
        kw.setdefault("seed", seed)
        specs.append(TrajectorySpec(kind, **kw))
    return specs


def protocol_suite(seed: int = 0, overrides: dict | None = None) -> list[tuple[str, Trajectory]]:
    return [(s.kind.value, generate(s)) for s in protocol_specs(seed, overrides)]
