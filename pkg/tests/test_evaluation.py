import numpy as np
import pytest

from tendonsense.dataset import Dataset
from tendonsense.evaluation import (Movement, ablate, canonical_movements, compare_channels, forward_surface,
                                    hysteresis_sweep, monotonicity_screen, turning_points)
from tendonsense.mapping import TrainConfig
from tendonsense.sensor import NeutralReference, SensorEmulation, delta_lengths
from tendonsense.tendon import RoutingElement, TendonLayout, TendonPath

STEP = 304.8 / 4096


def replace(layout, path):
    return TendonLayout(tuple(path if t.name == path.name else t for t in layout.tendons), layout.model)


def test_surface_matches_pointwise(layout, rng):
    az = np.linspace(-40, 90, 14)
    el = np.linspace(0, 90, 10)
    surf = forward_surface(layout, az, el)
    neutral = NeutralReference.from_layout(layout)
    i = rng.integers(0, len(az), 100)
    j = rng.integers(0, len(el), 100)
    point = delta_lengths(layout, neutral, az[i], el[j])
    for k, name in enumerate(("F", "SF", "SR", "R")):
        assert np.array_equal(surf[name][i, j], point[:, k])


def test_surface_neutral_and_regridding(layout):
    coarse = forward_surface(layout, [0.0, 45.0, 90.0], [0.0, 45.0, 90.0])
    fine = forward_surface(layout, np.linspace(0, 90, 7), np.linspace(0, 90, 7))
    for name in coarse:
        assert coarse[name][0, 0] == 0.0
        assert np.array_equal(fine[name][::3, ::3], coarse[name])


def test_surface_along_flexion_line(layout):
    surf = forward_surface(layout, [90.0], np.linspace(0, 90, 46))
    assert np.all(np.diff(surf["F"][0]) < 0) and np.all(np.diff(surf["R"][0]) > 0)


def test_turning_points():
    assert turning_points([0, 1, 2, 3], 0.5) == ("+", [])
    assert turning_points([0, 0.1, -0.1, 0.05], 0.5) == ("0", [])
    pattern, retreats = turning_points([0, 2, 1, 3, 0], 0.5)
    assert pattern == "+-+-" and retreats == [1, 2, 3]
    # wiggles inside the dead-band do not count
    assert turning_points([0, 1, 0.8, 2], 0.5)[0] == "+"


def test_default_layout_sign_pattern(any_layout):
    rep = monotonicity_screen(any_layout)
    for tendon, movement, trend in (("F", "flexion", "decreasing"), ("R", "flexion", "increasing"),
                                    ("SF", "abduction", "decreasing"), ("SR", "abduction", "decreasing")):
        e = rep.get(tendon, movement)
        assert e.monotone and e.trend == trend, (tendon, movement, e)
    assert len(rep.entries) == 4 * len(canonical_movements())


def test_torso_only_tendon_is_degenerate_monotone(layout):
    fixed = TendonPath("SF", (RoutingElement("a", "torso", (0, 40, 90)), RoutingElement("b", "torso", (50, 30, 60))))
    rep = monotonicity_screen(replace(layout, fixed))
    for mv in canonical_movements():
        e = rep.get("SF", mv.name)
        assert e.monotone and e.sign_pattern == "0" and e.trend == "constant"


def test_zig_zag_layout_reverses(layout):
    # anchored in front of and below the shoulder: flexion first approaches the anchor, then swings past it
    zig = TendonPath("F", (RoutingElement("a", "torso", (0, 150, -210)), RoutingElement("b", "humerus", (0, 0, -150))))
    e = monotonicity_screen(replace(layout, zig)).get("F", "flexion")
    assert e.reversals == 1 and e.sign_pattern == "-+" and e.max_reversal_mm > 10


def test_screen_custom_movement(layout):
    mv = Movement("still", np.zeros(5), np.zeros(5))
    rep = monotonicity_screen(layout, [mv])
    assert all(e.sign_pattern == "0" for e in rep.entries)


def _hysteresis_streams(layout, emu, reps=3):
    _, joints, ideal, emulated = hysteresis_sweep(layout, emu, reps=reps)
    return ideal, emulated, joints


def test_channels_without_emulation_effects(layout):
    ideal, emulated, joints = _hysteresis_streams(layout, SensorEmulation())
    for m in compare_channels(ideal, emulated, joints).values():
        assert m.loop_width_mm <= STEP and abs(m.residual_offset_mm) <= STEP / 2 and m.rms_gap_mm <= STEP / 2
    for m in compare_channels(ideal, ideal, joints).values():
        assert m.loop_width_mm == 0 and m.rms_gap_mm == 0


@pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
def test_backlash_loop_width(layout, b):
    ideal, emulated, joints = _hysteresis_streams(layout, SensorEmulation(hysteresis_backlash_mm=b))
    metrics = compare_channels(ideal, emulated, joints)
    for name in ("F", "R"):
        assert metrics[name].loop_width_mm == pytest.approx(b, abs=STEP)
        assert metrics[name].n_rising == 3 and metrics[name].n_falling == 3


def test_saturation_leaves_offset(layout):
    emu = SensorEmulation(limit_min_mm=-20.0, hysteresis_backlash_mm=1.0)
    ideal, emulated, joints = _hysteresis_streams(layout, emu, reps=1)
    m = compare_channels(ideal, emulated, joints)["F"]
    assert ideal[:, 0].min() < -20
    assert abs(m.residual_offset_mm) > STEP


def test_channel_length_mismatch():
    with pytest.raises(ValueError):
        compare_channels(np.zeros((5, 4)), np.zeros((4, 4)), np.zeros((5, 2)))


@pytest.fixture(scope="module")
def small_data():
    rng = np.random.default_rng(0)
    from tendonsense.tendon import default_layout
    lay = default_layout("polyline")
    n = 800
    q = np.column_stack([rng.uniform(-40, 90, n), rng.uniform(5, 90, n)])
    S = delta_lengths(lay, NeutralReference.from_layout(lay), q[:, 0], q[:, 1])
    return Dataset(np.arange(n), np.arange(n) / 120, q, S, "synthetic-ideal")


def test_ablation_report_shape_and_determinism(small_data):
    cfg = TrainConfig(max_epochs=40, early_stop_patience=10)
    rep = ablate(small_data, cfg)
    assert len(rep.entries) == 11
    assert [len(rep.by_size(k)) for k in (2, 3, 4)] == [6, 4, 1]
    assert rep.best().mean_rmse == min(e.mean_rmse for e in rep.entries)
    assert set(rep.ordering()) == {"all_four_best", "triples_beat_pairs", "F_R_worst_pair"}
    again = ablate(small_data, cfg, n_jobs=2)
    assert again.to_rows() == rep.to_rows()
