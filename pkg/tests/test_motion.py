import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tendonsense.motion import (PROTOCOL_TABLE, PROTOCOL_TOTAL_FRAMES, MotionKind, TrajectoryError, TrajectorySpec,
                                generate, protocol_suite, sweep_profile)

TABLE_FRAMES = {"flex_ext": 3037, "ab_ad": 3630, "fixed_azimuth_sweep": 5814, "fixed_elevation_sweep": 6757,
                "random": 10313}


@pytest.fixture(scope="module")
def suite():
    return protocol_suite(seed=0)


def test_suite_frame_counts(suite):
    assert [name for name, _ in suite] == list(TABLE_FRAMES)
    for name, traj in suite:
        assert abs(len(traj) - TABLE_FRAMES[name]) <= 0.05 * TABLE_FRAMES[name]
    assert abs(sum(len(t) for _, t in suite) - PROTOCOL_TOTAL_FRAMES) <= 0.05 * PROTOCOL_TOTAL_FRAMES


def test_ab_ad_default_frames():
    assert len(generate(TrajectorySpec("ab_ad", reps=4))) == pytest.approx(3630, rel=0.05)


def test_time_axis(suite):
    for _, traj in suite:
        assert np.allclose(np.diff(traj.time_s), 1 / 120)


def test_poses_stay_on_their_rows(suite):
    tr = dict(suite)
    for traj in tr.values():
        assert traj.elevation_deg.min() >= -1e-12 and traj.elevation_deg.max() <= 90 + 1e-12
    assert set(np.unique(tr["flex_ext"].azimuth_deg)) == {-90.0, 90.0}
    assert np.all(tr["ab_ad"].azimuth_deg == 0)
    assert np.allclose(np.unique(tr["fixed_azimuth_sweep"].azimuth_deg), np.linspace(-40, 90, 5))
    fe = tr["fixed_elevation_sweep"]
    assert fe.azimuth_deg.min() >= -40 and fe.azimuth_deg.max() <= 90
    plateaus = np.unique(np.round(fe.elevation_deg[np.abs(np.gradient(fe.elevation_deg)) < 1e-12], 9))
    assert set(np.linspace(18, 90, 5)) <= set(plateaus)
    rnd = tr["random"]
    assert rnd.azimuth_deg.min() >= -40 and rnd.azimuth_deg.max() <= 90


def test_sweeps_return_to_neutral(suite):
    for name in ("flex_ext", "ab_ad", "fixed_azimuth_sweep"):
        traj = dict(suite)[name]
        spec = TrajectorySpec(name)
        sweeps = spec.reps * {"flex_ext": 2, "ab_ad": 1, "fixed_azimuth_sweep": 5}[name]
        edges = np.round(np.linspace(0, len(traj) - 1, sweeps + 1)).astype(int)
        assert np.all(traj.elevation_deg[edges] < 0.05)
    fe = dict(suite)["flex_ext"]
    switch = np.flatnonzero(np.diff(fe.azimuth_deg) != 0)
    assert np.all(fe.elevation_deg[switch] < 0.1)


def _max_velocity_jump(traj):
    jumps = []
    for series in (traj.azimuth_deg, traj.elevation_deg):
        dv = np.abs(np.diff(np.diff(series))) * traj.frame_rate_hz
        if series is traj.azimuth_deg:
            # azimuth may step between planes while the arm hangs at the pole, where it is undefined
            dv = dv[traj.elevation_deg[1:-1] > 0.5]
        jumps.append(dv.max(initial=0.0))
    return max(jumps)


@pytest.mark.parametrize("kind", ["flex_ext", "ab_ad", "fixed_azimuth_sweep", "fixed_elevation_sweep", "random"])
def test_velocity_is_continuous(kind):
    # a velocity step would keep the same size as the frame rate rises; a C1 path's per-frame
    # velocity change shrinks in proportion to the frame interval
    coarse = _max_velocity_jump(generate(TrajectorySpec(kind, frame_rate_hz=120)))
    fine = _max_velocity_jump(generate(TrajectorySpec(kind, frame_rate_hz=480)))
    assert fine < 0.3 * coarse
    speed = np.abs(np.diff(generate(TrajectorySpec(kind)).elevation_deg)).max() * 120
    assert coarse < 0.5 * speed


def test_sweep_profile_shape():
    u = np.linspace(0, 1, 100_001)
    s = sweep_profile(u)
    assert s[0] == pytest.approx(0, abs=1e-12) and s[50_000] == pytest.approx(1) and s[-1] == pytest.approx(0, abs=1e-9)
    v = np.gradient(s, u)
    assert abs(v[0]) < 1e-3 and abs(v[50_000]) < 1e-2
    assert np.abs(np.diff(v)).max() < 1e-2


def test_random_determinism():
    a = generate(TrajectorySpec("random", seed=5))
    b = generate(TrajectorySpec("random", seed=5))
    c = generate(TrajectorySpec("random", seed=6))
    assert np.array_equal(a.azimuth_deg, b.azimuth_deg) and np.array_equal(a.elevation_deg, b.elevation_deg)
    assert not np.array_equal(a.azimuth_deg, c.azimuth_deg)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.floats(-40, 80), st.floats(5, 50))
def test_random_confined_to_requested_box(seed, lo, width):
    hi = min(lo + width, 90.0)
    traj = generate(TrajectorySpec("random", seed=seed, sweep_duration_s=5.0, azimuth_range_deg=(lo, hi),
                                   elevation_range_deg=(10, 60)))
    assert traj.azimuth_deg.min() >= lo and traj.azimuth_deg.max() <= hi
    assert traj.elevation_deg.min() >= 10 - 1e-9 and traj.elevation_deg.max() <= 60 + 1e-9


@pytest.mark.parametrize("kw", [dict(reps=0), dict(frame_rate_hz=0), dict(azimuth_range_deg=(-60, 90)),
                                dict(elevation_range_deg=(0, 120)), dict(blend_fraction=0.4)])
def test_spec_validation(kw):
    with pytest.raises(TrajectoryError):
        TrajectorySpec("ab_ad", **kw)


def test_frame_count_scales_with_duration():
    base = TrajectorySpec("ab_ad")
    double = TrajectorySpec("ab_ad", sweep_duration_s=2 * base.sweep_duration_s)
    assert len(generate(double)) == pytest.approx(2 * len(generate(base)), abs=1)


def test_frames_are_pose_pairs():
    traj = generate(TrajectorySpec("ab_ad", reps=1, sweep_duration_s=1.0))
    t, pose = traj.frames[10]
    assert t == traj.time_s[10] and pose.elevation_deg == traj.elevation_deg[10]
    assert MotionKind.parse("AbAd") is MotionKind.AB_AD
    assert set(PROTOCOL_TABLE) == set(MotionKind)
