"""Tendon displacement signals and a string-potentiometer channel emulator.

The ideal signal of a tendon is its length at the current pose minus its
length in the neutral (arm hanging) pose, so shortening reads negative. The
emulator turns an ideal stream into what a draw-wire sensor read through an
ADC would report: additive Gaussian noise, mechanical play (backlash), a
travel clamp and rounding to the ADC step, applied in that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import NEUTRAL_POSE, JointPose
from .tendon import DEFAULT_REL_TOL, TENDON_NAMES, TendonLayout, layout_lengths


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class SensorFrame:
    dl_F_mm: float
    dl_SF_mm: float
    dl_SR_mm: float
    dl_R_mm: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError(f"non-finite sensor value in {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.dl_F_mm, self.dl_SF_mm, self.dl_SR_mm, self.dl_R_mm], dtype=float)

    @classmethod
    def from_array(cls, values) -> "SensorFrame":
        v = np.asarray(values, dtype=float).reshape(4)
        return cls(*(float(x) for x in v))

    def __getitem__(self, name: str) -> float:
        return float(self.as_array()[TENDON_NAMES.index(name)])


@dataclass(frozen=True)
class SensorEmulation:
    """Parameters of the emulated string-pot channel.

    Defaults are a 12-bit ADC across a 304.8 mm (12 in) draw wire powered at 3.3 V,
    with noise and backlash off. ``hysteresis_backlash_mm`` is the total play: after a
    reversal the input has to travel this far before the output follows again.
    """

    supply_voltage_V: float = 3.3
    adc_bits: int = 12
    travel_mm: float = 304.8
    noise_std_mm: float = 0.0
    limit_min_mm: float = -152.4
    limit_max_mm: float = 152.4
    hysteresis_backlash_mm: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.limit_min_mm >= self.limit_max_mm:
            raise ConfigurationError("limit_min_mm must be below limit_max_mm")
        if self.adc_bits < 1 or self.travel_mm <= 0:
            raise ConfigurationError("need adc_bits >= 1 and travel_mm > 0")
        if self.noise_std_mm < 0 or self.hysteresis_backlash_mm < 0:
            raise ConfigurationError("noise_std_mm and hysteresis_backlash_mm must be >= 0")

    @property
    def volts_per_count(self) -> float:
        return self.supply_voltage_V / 2**self.adc_bits


def quantization_step(emu: SensorEmulation) -> float:
    return emu.travel_mm / 2**emu.adc_bits


@dataclass(frozen=True)
class NeutralReference:
    pose: JointPose
    lengths: dict

    @classmethod
    def from_layout(cls, layout: TendonLayout, pose: JointPose = NEUTRAL_POSE,
                    rel_tol=DEFAULT_REL_TOL) -> "NeutralReference":
        L = layout_lengths(layout, [pose.azimuth_deg], [pose.elevation_deg], rel_tol)[0]
        return cls(pose, dict(zip(layout.names, (float(x) for x in L))))

    def as_array(self) -> np.ndarray:
        return np.array([self.lengths[n] for n in TENDON_NAMES])


def _check_neutral(layout: TendonLayout, neutral: NeutralReference):
    if set(neutral.lengths) != set(layout.names):
        raise ConfigurationError(
            f"neutral reference tendons {sorted(neutral.lengths)} do not match layout {sorted(layout.names)}"
        )


def delta_lengths(layout: TendonLayout, neutral: NeutralReference, azimuth_deg, elevation_deg,
                  rel_tol=DEFAULT_REL_TOL) -> np.ndarray:
    """Ideal sensor values for many poses, shape ``(n, 4)`` in F, SF, SR, R order."""
    _check_neutral(layout, neutral)
    return layout_lengths(layout, azimuth_deg, elevation_deg, rel_tol) - neutral.as_array()


def delta_length(layout: TendonLayout, neutral: NeutralReference, pose: JointPose,
                 rel_tol=DEFAULT_REL_TOL) -> SensorFrame:
    return SensorFrame.from_array(
        delta_lengths(layout, neutral, [pose.azimuth_deg], [pose.elevation_deg], rel_tol)[0]
    )


# --- emulation ---------------------------------------------------------------


@dataclass
class EmulatorState:
    """Backlash memory and noise generator for one sensor stream.

    Not safe to share between concurrent streams.
    """

    output: np.ndarray = field(default_factory=lambda: np.zeros(4))
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    @classmethod
    def initial(cls, emu: SensorEmulation, start=None, stream: int = 0) -> "EmulatorState":
        out = np.zeros(4) if start is None else np.asarray(start, dtype=float).reshape(4).copy()
        return cls(out, np.random.default_rng([emu.seed, stream]))


def _round_to_step(x, step):
    return np.round(np.asarray(x) / step) * step


def emulate(emu: SensorEmulation, ideal: SensorFrame, state: EmulatorState) -> SensorFrame:
    """Advance ``state`` by one sample and return the emulated reading."""
    x = ideal.as_array()
    if emu.noise_std_mm > 0:
        x = x + state.rng.normal(0.0, emu.noise_std_mm, size=4)
    half = 0.5 * emu.hysteresis_backlash_mm
    state.output = np.minimum(np.maximum(state.output, x - half), x + half)
    y = np.clip(state.output, emu.limit_min_mm, emu.limit_max_mm)
    return SensorFrame.from_array(_round_to_step(y, quantization_step(emu)))


def emulate_stream(emu: SensorEmulation, ideal: np.ndarray, state: EmulatorState | None = None) -> np.ndarray:
    """Emulate a whole ``(n, 4)`` ideal stream; same result as calling :func:`emulate` per row.

    A fresh state starts its backlash at the first ideal sample.
    """
    ideal = np.asarray(ideal, dtype=float)
    if state is None:
        state = EmulatorState.initial(emu, ideal[0] if len(ideal) else None)
    x = ideal
    if emu.noise_std_mm > 0:
        x = ideal + state.rng.normal(0.0, emu.noise_std_mm, size=ideal.shape)
    half = 0.5 * emu.hysteresis_backlash_mm
    out = np.empty_like(x)
    y = state.output.copy()
    if half > 0:
        for i in range(len(x)):
            y = np.minimum(np.maximum(y, x[i] - half), x[i] + half)
            out[i] = y
    else:
        out[:] = x
        if len(x):
            y = x[-1].copy()
    state.output = y
    out = np.clip(out, emu.limit_min_mm, emu.limit_max_mm)
    return _round_to_step(out, quantization_step(emu))
