"""Paired joint-angle / sensor datasets and their CSV form.

CSV layout: an optional ``# provenance: <tag>`` comment line, then the header
``frame,time_s,theta_deg,phi_deg,dl_F_mm,dl_SF_mm,dl_SR_mm,dl_R_mm`` and one
row per frame. Floats are written with ``repr`` so a write/read round trip is
exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .motion import protocol_suite
from .sensor import EmulatorState, NeutralReference, SensorEmulation, delta_lengths, emulate_stream
from .tendon import TendonLayout

HEADER = ("frame", "time_s", "theta_deg", "phi_deg", "dl_F_mm", "dl_SF_mm", "dl_SR_mm", "dl_R_mm")
PROVENANCES = ("synthetic-ideal", "synthetic-emulated", "imported")


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    frame: np.ndarray
    time_s: np.ndarray
    joints: np.ndarray
    sensors: np.ndarray
    provenance: str = "imported"

    def __post_init__(self):
        frame = np.asarray(self.frame, dtype=np.int64).reshape(-1)
        n = len(frame)
        time_s = np.asarray(self.time_s, dtype=float).reshape(n)
        joints = np.asarray(self.joints, dtype=float).reshape(n, 2)
        sensors = np.asarray(self.sensors, dtype=float).reshape(n, 4)
        if self.provenance not in PROVENANCES:
            raise ValueError(f"provenance must be one of {PROVENANCES}, got {self.provenance!r}")
        if not (np.all(np.isfinite(time_s)) and np.all(np.isfinite(joints)) and np.all(np.isfinite(sensors))):
            raise ValueError("dataset contains non-finite values")
        if n > 1 and np.any(np.diff(frame) <= 0):
            raise ValueError("frame numbers must be strictly increasing")
        for name, v in (("frame", frame), ("time_s", time_s), ("joints", joints), ("sensors", sensors)):
            object.__setattr__(self, name, v)

    def __len__(self):
        return len(self.frame)

    @property
    def theta_deg(self):
        return self.joints[:, 0]

    @property
    def phi_deg(self):
        return self.joints[:, 1]


def synthesize(layout: TendonLayout, trajectories, emulation: SensorEmulation | None = None,
               neutral: NeutralReference | None = None) -> Dataset:
    """Concatenate trajectories into one dataset with ideal or emulated sensor values.

    Emulation restarts for each trajectory (one sensor stream per trial) with its
    backlash at the trial's first ideal sample and a noise stream keyed by trial index.
    """
    neutral = neutral or NeutralReference.from_layout(layout)
    trajs = [t[1] if isinstance(t, tuple) else t for t in trajectories]
    times, joints, sensors = [], [], []
    offset = 0.0
    for i, tr in enumerate(trajs):
        S = delta_lengths(layout, neutral, tr.azimuth_deg, tr.elevation_deg)
        if emulation is not None:
            S = emulate_stream(emulation, S, EmulatorState.initial(emulation, S[0], stream=i))
        times.append(tr.time_s + offset)
        offset = times[-1][-1] + 1.0 / tr.frame_rate_hz
        joints.append(tr.joints)
        sensors.append(S)
    n = sum(len(t) for t in times)
    prov = "synthetic-ideal" if emulation is None else "synthetic-emulated"
    return Dataset(np.arange(n), np.concatenate(times), np.concatenate(joints), np.concatenate(sensors), prov)


def protocol_dataset(layout: TendonLayout, seed: int = 0, emulation: SensorEmulation | None = None,
                     overrides: dict | None = None) -> Dataset:
    return synthesize(layout, protocol_suite(seed, overrides), emulation)


def write_dataset(path, data: Dataset) -> None:
    lines = [f"# provenance: {data.provenance}", ",".join(HEADER)]
    for f, t, (th, ph), s in zip(data.frame.tolist(), data.time_s.tolist(), data.joints.tolist(),
                                 data.sensors.tolist()):
        lines.append(",".join([str(f), repr(t), repr(th), repr(ph)] + [repr(x) for x in s]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_dataset(path) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    provenance = "imported"
    rows = []
    header_seen = False
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("provenance:"):
                    provenance = body.split(":", 1)[1].strip()
                continue
            cells = line.split(",")
            if not header_seen:
                if tuple(c.strip() for c in cells) != HEADER:
                    raise DatasetFormatError(f"{path}:{lineno}: expected header {','.join(HEADER)}")
                header_seen = True
                continue
            if len(cells) != len(HEADER):
                raise DatasetFormatError(f"{path}:{lineno}: expected {len(HEADER)} columns, got {len(cells)}")
            try:
                frame = int(cells[0])
                vals = [float(c) for c in cells[1:]]
            except ValueError as exc:
                raise DatasetFormatError(f"{path}:{lineno}: {exc}") from None
            if not all(np.isfinite(vals)):
                raise DatasetFormatError(f"{path}:{lineno}: non-finite value")
            if rows and frame <= rows[-1][0]:
                raise DatasetFormatError(f"{path}:{lineno}: frame {frame} does not increase")
            rows.append([frame] + vals)
    if not header_seen:
        raise DatasetFormatError(f"{path}: missing header line")
    arr = np.array(rows, dtype=float).reshape(-1, len(HEADER))
    try:
        return Dataset(arr[:, 0].astype(np.int64), arr[:, 1], arr[:, 2:4], arr[:, 4:], provenance)
    except ValueError as exc:
        raise DatasetFormatError(f"{path}: {exc}") from None
