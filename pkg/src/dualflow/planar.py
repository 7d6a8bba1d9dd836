"""Planar Brownian particle coupled to a moving symmetric convex domain.

The boundary evolves along its inward normal field by one shared scalar per
step: the particle-aligned noise dW = sign(X1) cos(theta) dX1 +
sign(X2) sin(theta) dX2, the curvature drift (h(y)/2 - h(X)) dt, and the
particle's local time at the horizontal skeleton weighted by sin(theta).
Every node carries the same noise and local-time push, so axis symmetry is
preserved by construction; nodes are redistributed to equal arc length each
step and the skeleton (half-length and angle profile) is recomputed on a
configurable cadence with the endpoint ODE advancing it in between.

The deterministic specializations (noise and local time off, or the plain
half-curvature flow) drive the convexity and skeleton-monotonicity checks;
``FrozenCurveField`` evaluates signed distance, normals, curvature and the
skeleton angle along free Brownian paths in a fixed domain for the
Ito-Tanaka residual test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from dualflow.geometry import (
    FocalSingularityError,
    GeometryError,
    SkeletonSegment,
    SymmetricConvexCurve,
    _project_to_segments,
    curvatures,
    foot_point,
    inward_normals,
    medial_axis,
    point_in_polygon,
    resample_equal_arclength,
    skeleton_endpoint_rate,
)

__all__ = [
    "PlanarDualState",
    "planar_step",
    "run_planar_replica",
    "sample_uniform_planar",
    "deterministic_flow_step",
    "interior_area_fraction",
    "FrozenCurveField",
    "frozen_field_residuals",
]


@dataclass
class PlanarDualState:
    """Mutable per-replica state of the planar dual."""

    x: np.ndarray
    curve: SymmetricConvexCurve
    skeleton: SkeletonSegment
    endpoint_rate: float
    local_time: float = 0.0
    x_star: float = 0.0
    steps_since_skeleton: int = 0
    containment_repairs: int = 0
    steps_done: int = 0
    stop_reason: str | None = None

    @classmethod
    def start(cls, x0, curve: SymmetricConvexCurve, n_profile: int = 129):
        seg = medial_axis(curve, n_profile)
        return cls(
            x=np.asarray(x0, dtype=float).copy(),
            curve=curve,
            skeleton=seg,
            endpoint_rate=skeleton_endpoint_rate(curve, 0.5),
            x_star=seg.half_length,
        )


def _nearest_on_boundary(q: np.ndarray, nodes: np.ndarray):
    """Nearest boundary point without the interior-membership check."""
    k = int(np.argmin(np.linalg.norm(nodes - q, axis=1)))
    n = len(nodes)
    segs = np.array([k, (k - 1) % n])
    feet, dists = _project_to_segments(
        np.broadcast_to(q, (2, 2)), nodes[segs], nodes[(segs + 1) % n]
    )
    j = int(np.argmin(dists))
    return feet[j], float(dists[j]), segs[j]


def _theta_of_point(x, foot, normal, skeleton: SkeletonSegment, x_star: float) -> float:
    """Skeleton angle extended constant along the normal line through the foot."""
    if normal[1] == 0.0:
        return 0.0
    t = -foot[1] / normal[1]
    x_cross = foot[0] + t * normal[0]
    if abs(x_cross) >= x_star:
        return 0.0
    return float(skeleton.theta_at(x_cross))


def planar_step(
    state: PlanarDualState,
    dx: np.ndarray,
    dt: float,
    beta: float,
    k_skel: int = 10,
    n_profile: int = 129,
) -> PlanarDualState:
    """One Euler step of the coupled particle/boundary evolution.

    Boundary displacement of every node y along its inward normal:
        -dW + (h(y)/2 - h(X)) dt - 2 sin(theta(X)) dL,
    the sign convention fixed by the radial specializations (the boundary
    follows the particle through -dW and inflates by the local-time push).
    Typed stops: "convexity-breakdown" when resampling detects a concave
    node, "focal-crossing" when the particle's level curvature degenerates.
    """
    if state.stop_reason is not None:
        return state
    curve = state.curve
    nodes = curve.nodes
    x = state.x
    # particle-side geometry at the step start
    try:
        fp = foot_point(x, curve)
    except GeometryError:
        # discrete containment loss at the step start: repair and continue
        foot, dist, _seg = _nearest_on_boundary(x, nodes)
        normals_all = inward_normals(curve)
        n_f = normals_all[int(np.argmin(np.linalg.norm(nodes - x, axis=1)))]
        state.x = foot + 1e-10 * n_f
        state.containment_repairs += 1
        fp = foot_point(state.x, curve)
        x = state.x
    kap = curvatures(curve)
    n = len(curve)
    k_foot = (1.0 - fp.offset) * kap[fp.node_index] + fp.offset * kap[(fp.node_index + 1) % n]
    denom = 1.0 - fp.distance * k_foot
    if denom <= 0.0:
        state.stop_reason = "focal-crossing"
        return state
    h_x = k_foot / denom
    theta = _theta_of_point(x, fp.foot, fp.inward_normal, state.skeleton, state.x_star)
    # shared scalar drive
    dw = math.copysign(1.0, x[0]) * math.cos(theta) * dx[0] if x[0] != 0.0 else 0.0
    if x[1] != 0.0:
        dw += math.copysign(1.0, x[1]) * math.sin(theta) * dx[1]
    dl = 0.0
    if abs(x[1]) <= beta and abs(x[0]) < state.x_star:
        dl = dx[1] * dx[1] / (2.0 * beta)
    scalar = -dw + (0.5 * kap - h_x) * dt - 2.0 * math.sin(theta) * dl
    moved = nodes + inward_normals(curve) * scalar[:, None]
    # advance the particle, then rebuild the curve
    x_new = x + dx
    try:
        resampled = resample_equal_arclength(moved)
        new_curve = SymmetricConvexCurve(resampled)
    except GeometryError:
        state.stop_reason = "convexity-breakdown"
        return state
    state.curve = new_curve
    state.x = x_new
    state.local_time += dl
    state.steps_done += 1
    # containment repair (the continuum particle cannot exit; discrete noise can)
    if not point_in_polygon(state.x, new_curve.nodes):
        foot, dist, seg = _nearest_on_boundary(state.x, new_curve.nodes)
        n_f = inward_normals(new_curve)[seg]
        state.x = foot + 1e-10 * n_f
        state.containment_repairs += 1
    # skeleton cadence: advance the endpoint ODE, recompute every k_skel steps
    state.steps_since_skeleton += 1
    state.x_star = max(state.x_star + state.endpoint_rate * dt, 0.0)
    if state.steps_since_skeleton >= k_skel:
        try:
            state.skeleton = medial_axis(new_curve, n_profile)
        except GeometryError:
            state.stop_reason = "convexity-breakdown"
            return state
        state.x_star = state.skeleton.half_length
        state.endpoint_rate = skeleton_endpoint_rate(new_curve, 0.5)
        state.steps_since_skeleton = 0
    return state


def run_planar_replica(
    curve0: SymmetricConvexCurve,
    x0,
    n_steps: int,
    dt: float,
    bandwidth_c: float,
    increments: np.ndarray,
    k_skel: int = 10,
    n_profile: int = 129,
) -> PlanarDualState:
    """Drive one replica for n_steps (or until a typed stop)."""
    beta = bandwidth_c * math.sqrt(dt)
    state = PlanarDualState.start(x0, curve0, n_profile)
    for i in range(n_steps):
        planar_step(state, increments[i], dt, beta, k_skel, n_profile)
        if state.stop_reason is not None:
            break
    return state


def sample_uniform_planar(curve: SymmetricConvexCurve, rng: np.random.Generator,
                          max_rejections: int = 10_000) -> np.ndarray:
    """Rejection sampling in the bounding box against point-in-polygon."""
    nodes = curve.nodes
    lo = nodes.min(axis=0)
    hi = nodes.max(axis=0)
    rejected = 0
    while rejected < max_rejections:
        batch = lo + (hi - lo) * rng.random((64, 2))
        inside = point_in_polygon(batch, nodes)
        hit = np.nonzero(inside)[0]
        if hit.size:
            return batch[hit[0]].copy()
        rejected += 64
    raise GeometryError("rejection sampling failed %d times (degenerate domain)" % rejected)


def deterministic_flow_step(curve: SymmetricConvexCurve, dt: float,
                            h_particle: float | None = None) -> SymmetricConvexCurve:
    """Noise-free boundary step: speed h(y)/2 - h_particle along the inward
    normal (h_particle = None gives the plain half-curvature flow H = h/2)."""
    kap = curvatures(curve)
    speed = 0.5 * kap - (h_particle if h_particle is not None else 0.0)
    moved = curve.nodes + inward_normals(curve) * (speed * dt)[:, None]
    return SymmetricConvexCurve(resample_equal_arclength(moved))


def interior_area_fraction(curve: SymmetricConvexCurve, depth: float,
                           rays=None) -> float:
    """Fraction of the domain's area deeper than ``depth`` from the boundary.

    Uses per-node normal rays with the exact offset Jacobian 1 - r kappa and
    the axis-crossing skeleton cutoff (valid for axis-symmetric convex
    shapes); the conditional-uniformity diagnostic pushes the particle's
    boundary distance through 1 minus this fraction.
    """
    kap = curvatures(curve)
    normals = inward_normals(curve)
    nodes = curve.nodes
    el = curve.edge_lengths()
    w = 0.5 * (el + np.roll(el, 1))
    # cutoff: crossing of the inward normal with the horizontal axis
    with np.errstate(divide="ignore", invalid="ignore"):
        t_axis = np.where(normals[:, 1] != 0.0, -nodes[:, 1] / normals[:, 1], np.inf)
    # vertex rays run along the axis: cut at the focal distance instead
    tau = np.where(np.isfinite(t_axis) & (t_axis > 0), t_axis, np.inf)
    with np.errstate(divide="ignore"):
        focal = np.where(kap > 0.0, 1.0 / kap, np.inf)
    tau = np.minimum(tau, focal)

    def offset_area(s):
        lo = np.minimum(np.maximum(s, 0.0), tau)
        return float(np.sum(w * ((tau - lo) - 0.5 * kap * (tau**2 - lo**2))))

    total = offset_area(0.0)
    if total <= 0.0:
        return 0.0
    return offset_area(depth) / total


class FrozenCurveField:
    """Vectorized geometry channels of a fixed symmetric convex domain.

    ``query`` returns, per point: the signed distance (positive inside), the
    inward normal, the level curvature, the extended skeleton angle, and the
    inside mask.  Built once; queries use a KD tree over the nodes.
    """

    def __init__(self, curve: SymmetricConvexCurve, n_profile: int = 1025):
        self.curve = curve
        self.nodes = curve.nodes
        self.kappas = curvatures(curve)
        self.normals = inward_normals(curve)
        self.skeleton = medial_axis(curve, n_profile)
        self.x_star = self.skeleton.half_length
        self.tree = cKDTree(self.nodes)
        self.n = len(curve)

    def query(self, points: np.ndarray):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        _, ks = self.tree.query(pts, workers=-1)
        best_feet = self.nodes[ks]
        best_d = np.linalg.norm(best_feet - pts, axis=1)
        best_seg = ks.copy()
        best_t = np.zeros(len(pts))
        for off in (0, -1):
            seg = (ks + off) % self.n
            feet, dist = _project_to_segments(pts, self.nodes[seg], self.nodes[(seg + 1) % self.n])
            better = dist < best_d
            best_feet = np.where(better[:, None], feet, best_feet)
            best_d = np.where(better, dist, best_d)
            best_seg = np.where(better, seg, best_seg)
            d = self.nodes[(seg + 1) % self.n] - self.nodes[seg]
            dd = np.einsum("ij,ij->i", d, d)
            t = np.clip(np.einsum("ij,ij->i", pts - self.nodes[seg], d) / dd, 0.0, 1.0)
            best_t = np.where(better, t, best_t)
        # inside iff the foot-to-point direction agrees with the inward normal
        n_seg = 0.5 * (self.normals[best_seg] + self.normals[(best_seg + 1) % self.n])
        side = np.einsum("ij,ij->i", pts - best_feet, n_seg)
        inside = side > 0.0
        signed = np.where(inside, best_d, -best_d)
        with np.errstate(invalid="ignore", divide="ignore"):
            direction = (pts - best_feet) / np.where(best_d > 0.0, best_d, 1.0)[:, None]
        normal = np.where(inside[:, None], direction, -direction)
        k_foot = (1.0 - best_t) * self.kappas[best_seg] + best_t * self.kappas[
            (best_seg + 1) % self.n
        ]
        denom = 1.0 - signed * k_foot
        h = np.where(denom > 1e-12, k_foot / np.maximum(denom, 1e-12), np.inf)
        # skeleton angle via the axis crossing of the foot's normal line
        n_f = normal
        with np.errstate(divide="ignore", invalid="ignore"):
            t_axis = np.where(n_f[:, 1] != 0.0, -best_feet[:, 1] / n_f[:, 1], np.inf)
        x_cross = best_feet[:, 0] + t_axis * n_f[:, 0]
        theta = np.where(
            np.isfinite(x_cross) & (np.abs(x_cross) < self.x_star),
            self.skeleton.theta_at(np.where(np.isfinite(x_cross), x_cross, 0.0)),
            0.0,
        )
        return {
            "signed_distance": signed,
            "normal": normal,
            "level_curvature": h,
            "theta": theta,
            "inside": inside,
        }


def frozen_field_residuals(
    field: FrozenCurveField,
    x0: np.ndarray,
    increments: np.ndarray,
    dt: float,
    bandwidth_c: float = 1.0,
) -> np.ndarray:
    """Per-path sup of the signed-distance decomposition defect.

    r_t = rho+(X_t) - rho+(X_0) - sum [ <N, dX> - h/2 dt - sin(theta) dL ]
    with all channels evaluated at the step start and dL the gated band
    occupation of the second coordinate at the skeleton.  Paths freeze when
    they exit the domain; the sup runs over the stopped path.
    """
    n_paths, n_steps, _ = increments.shape
    beta = bandwidth_c * math.sqrt(dt)
    x = np.array(x0, dtype=float)
    q = field.query(x)
    rho0 = q["signed_distance"].copy()
    partial = np.zeros(n_paths)
    sup_res = np.zeros(n_paths)
    alive = q["inside"].copy()
    for i in range(n_steps):
        if not np.any(alive):
            break
        dxi = increments[:, i, :]
        dl = np.where(
            (np.abs(x[:, 1]) <= beta) & (np.abs(x[:, 0]) < field.x_star),
            dxi[:, 1] ** 2 / (2.0 * beta),
            0.0,
        )
        flux = np.einsum("ij,ij->i", q["normal"], dxi)
        inc = flux - 0.5 * q["level_curvature"] * dt - np.sin(q["theta"]) * dl
        x_new = np.where(alive[:, None], x + dxi, x)
        q_new = field.query(x_new)
        newly_dead = alive & ~q_new["inside"]
        still = alive & q_new["inside"]
        partial = np.where(still, partial + inc, partial)
        res = np.abs(q_new["signed_distance"] - rho0 - partial)
        sup_res = np.where(still, np.maximum(sup_res, res), sup_res)
        x = x_new
        q = q_new
        alive = still
    return sup_res
