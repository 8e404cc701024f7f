"""Tendon routing and path-length evaluation.

A tendon is an ordered list of routing elements, each fixed either to the
torso or to the humerus. At a given pose the elements are mapped into torso
coordinates and the tendon length is the arc length of the curve through
them. Three curve policies are supported:

``polyline``
    straight segments between consecutive elements.
``spline``
    natural interpolating cubic (chord-length knots) through all elements,
    integrated by adaptive Simpson bisection with a Richardson correction.
``spherewrap``
    straight segments, except that a segment passing through the wrap sphere is
    replaced by the shortest tangent-arc-tangent path over that sphere.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .geometry import Frame, JointPose, ShoulderModel, humerus_rotations

TENDON_NAMES = ("F", "SF", "SR", "R")
DEFAULT_REL_TOL = 1e-8


class InvalidPathError(ValueError):
    pass


class PathPolicy(enum.Enum):
    POLYLINE = "polyline"
    SPLINE = "spline"
    SPHEREWRAP = "spherewrap"

    @classmethod
    def parse(cls, value: "str | PathPolicy") -> "PathPolicy":
        if isinstance(value, PathPolicy):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            opts = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown path policy {value!r}; expected one of {opts}") from None


@dataclass(frozen=True)
class RoutingElement:
    id: str
    frame: Frame
    local_position_mm: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "frame", Frame.parse(self.frame))
        p = np.asarray(self.local_position_mm, dtype=float).reshape(3)
        if not np.all(np.isfinite(p)):
            raise ValueError(f"routing element {self.id!r} has a non-finite position")
        object.__setattr__(self, "local_position_mm", p)


@dataclass(frozen=True)
class TendonPath:
    name: str
    elements: tuple[RoutingElement, ...]
    path_policy: PathPolicy = PathPolicy.SPLINE

    def __post_init__(self):
        if self.name not in TENDON_NAMES:
            raise ValueError(f"tendon name must be one of {TENDON_NAMES}, got {self.name!r}")
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "path_policy", PathPolicy.parse(self.path_policy))
        if len(self.elements) < 2:
            raise InvalidPathError(f"tendon {self.name} needs at least 2 routing elements")
        ids = [e.id for e in self.elements]
        if len(set(ids)) != len(ids):
            raise InvalidPathError(f"tendon {self.name} has duplicate element ids: {ids}")

    @property
    def is_torso_only(self) -> bool:
        return all(e.frame is Frame.TORSO for e in self.elements)


@dataclass(frozen=True)
class TendonLayout:
    tendons: tuple[TendonPath, ...]
    model: ShoulderModel = field(default_factory=ShoulderModel)

    def __post_init__(self):
        tendons = tuple(self.tendons)
        names = sorted(t.name for t in tendons)
        if names != sorted(TENDON_NAMES):
            raise ValueError(f"layout must define tendons {TENDON_NAMES} exactly once, got {names}")
        # canonical order F, SF, SR, R
        tendons = tuple(sorted(tendons, key=lambda t: TENDON_NAMES.index(t.name)))
        object.__setattr__(self, "tendons", tendons)
        for t in tendons:
            for e in t.elements:
                if e.frame is Frame.HUMERUS:
                    r = np.linalg.norm(e.local_position_mm - self.model.center)
                    if r > self.model.arm_length_mm:
                        raise ValueError(
                            f"humerus element {t.name}/{e.id} lies {r:.1f} mm from the joint, "
                            f"beyond the {self.model.arm_length_mm} mm arm"
                        )

    def __getitem__(self, name: str) -> TendonPath:
        for t in self.tendons:
            if t.name == name:
                return t
        raise KeyError(f"unknown tendon {name!r}; expected one of {TENDON_NAMES}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tendons)

    def with_policy(self, policy) -> "TendonLayout":
        policy = PathPolicy.parse(policy)
        return TendonLayout(
            tuple(TendonPath(t.name, t.elements, policy) for t in self.tendons), self.model
        )


def path_points(path: TendonPath, pose: JointPose, model: ShoulderModel | None = None) -> np.ndarray:
    """Routing element positions in torso coordinates, shape ``(n, 3)``."""
    return batch_path_points(path, [pose.azimuth_deg], [pose.elevation_deg], model)[0]


def batch_path_points(path: TendonPath, azimuth_deg, elevation_deg, model=None) -> np.ndarray:
    """Element positions for many poses at once, shape ``(n_poses, n_elements, 3)``."""
    R = humerus_rotations(azimuth_deg, elevation_deg)
    if model is not None and not np.allclose(model.neutral_axis, [0.0, 0.0, -1.0]):
        Q = model.base_alignment()
        R = Q @ R @ Q.T
    center = np.zeros(3) if model is None else model.center
    local = np.stack([e.local_position_mm for e in path.elements])
    out = np.broadcast_to(local, (R.shape[0],) + local.shape).copy()
    moving = np.array([e.frame is Frame.HUMERUS for e in path.elements])
    if moving.any():
        rel = local[moving] - center
        out[:, moving] = center + np.einsum("nij,kj->nki", R, rel)
    return out


# --- arc length -------------------------------------------------------------


def _natural_spline(points: np.ndarray):
    """Chord-length natural cubic spline coefficients for a batch of curves.

    Returns knot spacings ``h`` with shape ``(B, m)`` and per-segment derivative
    coefficients so that on segment ``i`` with local parameter ``s`` in ``[0, h]``
    the derivative is ``d1 + d2 * s + d3 * s**2``.
    """
    B, n, _ = points.shape
    chords = np.diff(points, axis=1)
    h = np.linalg.norm(chords, axis=2)
    slope = chords / h[..., None]
    M = np.zeros_like(points)
    if n > 2:
        # Thomas algorithm on the interior second derivatives
        m = n - 2
        diag = 2.0 * (h[:, :-1] + h[:, 1:])
        rhs = 6.0 * (slope[:, 1:] - slope[:, :-1])
        sub = h[:, 1:-1] if m > 1 else np.zeros((B, 0))
        cp = np.zeros((B, m))
        dp = np.zeros((B, m, 3))
        cp[:, 0] = h[:, 1] / diag[:, 0] if m > 1 else 0.0
        dp[:, 0] = rhs[:, 0] / diag[:, 0, None]
        for i in range(1, m):
            denom = diag[:, i] - sub[:, i - 1] * cp[:, i - 1]
            if i < m - 1:
                cp[:, i] = h[:, i + 1] / denom
            dp[:, i] = (rhs[:, i] - sub[:, i - 1, None] * dp[:, i - 1]) / denom[:, None]
        x = np.zeros((B, m, 3))
        x[:, -1] = dp[:, -1]
        for i in range(m - 2, -1, -1):
            x[:, i] = dp[:, i] - cp[:, i, None] * x[:, i + 1]
        M[:, 1:-1] = x
    Ml, Mr = M[:, :-1], M[:, 1:]
    d1 = slope - h[..., None] * (2.0 * Ml + Mr) / 6.0
    d2 = Ml
    d3 = (Mr - Ml) / (2.0 * h[..., None])
    return h, d1, d2, d3


def _spline_lengths(points: np.ndarray, rel_tol: float, max_depth: int = 40) -> np.ndarray:
    B, n, _ = points.shape
    h, d1, d2, d3 = _natural_spline(points)
    m = n - 1
    d1, d2, d3 = (d.reshape(B * m, 3) for d in (d1, d2, d3))

    def speed(seg, s):
        v = d1[seg] + s[:, None] * (d2[seg] + s[:, None] * d3[seg])
        return np.sqrt(np.einsum("ij,ij->i", v, v))

    # start each segment pre-split into 4 panels so a lucky coincidence cannot end refinement early
    pieces = 4
    seg = np.repeat(np.arange(B * m), pieces)
    hh = np.repeat(h.reshape(-1), pieces)
    k = np.tile(np.arange(pieces), B * m)
    a = hh * k / pieces
    b = hh * (k + 1) / pieces
    row = seg // m
    # with chord-length knots each segment's arc length is at least its parameter width
    tol = rel_tol * (b - a)
    mid = 0.5 * (a + b)
    fa, fm, fb = speed(seg, a), speed(seg, mid), speed(seg, b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    out = np.zeros(B)
    for depth in range(max_depth):
        lm = 0.5 * (a + mid)
        rm = 0.5 * (mid + b)
        flm, frm = speed(seg, lm), speed(seg, rm)
        left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        done = np.abs(delta) <= 15.0 * tol
        if depth == max_depth - 1:
            done[:] = True
        if done.any():
            np.add.at(out, row[done], left[done] + right[done] + delta[done] / 15.0)
        keep = ~done
        if not keep.any():
            break
        # split survivors into [a, mid] and [mid, b]
        seg = np.concatenate([seg[keep], seg[keep]])
        row = np.concatenate([row[keep], row[keep]])
        tol = np.concatenate([tol[keep], tol[keep]]) * 0.5
        a, mid, b = (
            np.concatenate([a[keep], mid[keep]]),
            np.concatenate([lm[keep], rm[keep]]),
            np.concatenate([mid[keep], b[keep]]),
        )
        fa, fm, fb = (
            np.concatenate([fa[keep], fm[keep]]),
            np.concatenate([flm[keep], frm[keep]]),
            np.concatenate([fm[keep], fb[keep]]),
        )
        whole = np.concatenate([left[keep], right[keep]])
    return out


def _wrap_lengths(points: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    P = points[:, :-1] - center
    Q = points[:, 1:] - center
    chord = np.linalg.norm(Q - P, axis=2)
    d = Q - P
    denom = np.einsum("...i,...i", d, d)
    t = np.clip(-np.einsum("...i,...i", P, d) / np.where(denom > 0, denom, 1.0), 0.0, 1.0)
    closest = np.linalg.norm(P + t[..., None] * d, axis=2)
    rp = np.linalg.norm(P, axis=2)
    rq = np.linalg.norm(Q, axis=2)
    # segments with an endpoint inside the sphere cannot wrap; they stay straight
    wraps = (closest < radius) & (rp > radius) & (rq > radius)
    out = chord.copy()
    if wraps.any():
        p, q = rp[wraps], rq[wraps]
        cosg = np.einsum("ij,ij->i", P[wraps], Q[wraps]) / (p * q)
        gamma = np.arccos(np.clip(cosg, -1.0, 1.0))
        arc = gamma - np.arccos(radius / p) - np.arccos(radius / q)
        out[wraps] = np.sqrt(p * p - radius**2) + np.sqrt(q * q - radius**2) + radius * np.maximum(arc, 0.0)
    return out.sum(axis=1)


def batch_arc_length(points, policy="spline", *, rel_tol=DEFAULT_REL_TOL, sphere_center=None,
                     sphere_radius=None) -> np.ndarray:
    """Arc lengths of ``B`` curves given as a ``(B, n, 3)`` array of waypoints."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 3 or pts.shape[2] != 3:
        raise InvalidPathError(f"expected waypoints of shape (B, n, 3), got {pts.shape}")
    if pts.shape[1] < 2:
        raise InvalidPathError("a path needs at least 2 points")
    policy = PathPolicy.parse(policy)
    chord = np.linalg.norm(np.diff(pts, axis=1), axis=2)
    if policy is PathPolicy.POLYLINE:
        return chord.sum(axis=1)
    if policy is PathPolicy.SPHEREWRAP:
        if sphere_radius is None:
            raise ValueError("spherewrap needs a sphere radius")
        c = np.zeros(3) if sphere_center is None else np.asarray(sphere_center, dtype=float)
        return _wrap_lengths(pts, c, float(sphere_radius))
    degenerate = (chord <= 1e-12).any(axis=1)
    if not degenerate.any():
        return _spline_lengths(pts, rel_tol)
    out = np.empty(pts.shape[0])
    if (~degenerate).any():
        out[~degenerate] = _spline_lengths(pts[~degenerate], rel_tol)
    for i in np.flatnonzero(degenerate):
        # coincident consecutive waypoints add nothing to the curve
        keep = np.concatenate([[True], chord[i] > 1e-12])
        p = pts[i][keep]
        out[i] = 0.0 if len(p) < 2 else _spline_lengths(p[None], rel_tol)[0]
    return out


def arc_length(points, policy="spline", *, rel_tol=DEFAULT_REL_TOL, sphere_center=None,
               sphere_radius=None) -> float:
    """Length in mm of the curve through ``points`` (shape ``(n, 3)``) under ``policy``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise InvalidPathError(f"a path needs at least 2 points, got array of shape {pts.shape}")
    return float(batch_arc_length(pts[None], policy, rel_tol=rel_tol, sphere_center=sphere_center,
                                  sphere_radius=sphere_radius)[0])


def tendon_length(layout: TendonLayout, name: str, pose: JointPose, rel_tol=DEFAULT_REL_TOL) -> float:
    if name not in TENDON_NAMES:
        raise KeyError(f"unknown tendon {name!r}; expected one of {TENDON_NAMES}")
    return float(batch_tendon_length(layout, name, [pose.azimuth_deg], [pose.elevation_deg], rel_tol)[0])


def batch_tendon_length(layout: TendonLayout, name: str, azimuth_deg, elevation_deg,
                        rel_tol=DEFAULT_REL_TOL) -> np.ndarray:
    path = layout[name]
    pts = batch_path_points(path, azimuth_deg, elevation_deg, layout.model)
    return batch_arc_length(pts, path.path_policy, rel_tol=rel_tol, sphere_center=layout.model.center,
                            sphere_radius=layout.model.sphere_radius_mm)


def layout_lengths(layout: TendonLayout, azimuth_deg, elevation_deg, rel_tol=DEFAULT_REL_TOL) -> np.ndarray:
    """Lengths of all four tendons, shape ``(n_poses, 4)`` in F, SF, SR, R order."""
    return np.stack(
        [batch_tendon_length(layout, n, azimuth_deg, elevation_deg, rel_tol) for n in TENDON_NAMES], axis=1
    )


# --- layout data ------------------------------------------------------------


def layout_from_dict(layout: dict, model: ShoulderModel | None = None) -> TendonLayout:
    """Build a layout from the ``[layout]`` config table.

    Each tendon is a sub-table with an ``elements`` array of ``{id, frame, xyz_mm}``
    entries and an optional ``policy``; a top-level ``policy`` sets the default.
    """
    model = model or ShoulderModel()
    default_policy = layout.get("policy", "spline")
    unknown = set(layout) - set(TENDON_NAMES) - {"policy"}
    if unknown:
        raise ValueError(f"[layout]: unknown keys {sorted(unknown)}")
    paths = []
    for name in TENDON_NAMES:
        if name not in layout:
            raise ValueError(f"[layout]: missing tendon {name}")
        spec = layout[name]
        extra = set(spec) - {"elements", "policy"}
        if extra:
            raise ValueError(f"[layout.{name}]: unknown keys {sorted(extra)}")
        elements = []
        for i, e in enumerate(spec["elements"]):
            bad = set(e) - {"id", "frame", "xyz_mm"}
            if bad:
                raise ValueError(f"[layout.{name}].elements[{i}]: unknown keys {sorted(bad)}")
            elements.append(RoutingElement(str(e["id"]), Frame.parse(e["frame"]), e["xyz_mm"]))
        paths.append(TendonPath(name, tuple(elements), spec.get("policy", default_policy)))
    return TendonLayout(tuple(paths), model)


def layout_to_dict(layout: TendonLayout) -> dict:
    return {
        t.name: {
            "policy": t.path_policy.value,
            "elements": [
                {"id": e.id, "frame": e.frame.value, "xyz_mm": [float(v) for v in e.local_position_mm]}
                for e in t.elements
            ],
        }
        for t in layout.tendons
    }


def default_layout(policy=None) -> TendonLayout:
    """The bundled four-tendon layout (see ``data/default_config.toml``)."""
    from .config import load_config_text

    text = resources.files("tendonsense").joinpath("data/default_config.toml").read_text()
    layout = load_config_text(text).layout
    return layout if policy is None else layout.with_policy(policy)
