"""Planar discrete-curve geometry.

Closed polyline curves with signed curvature, foot points and signed
distance, the medial axis of axis-symmetric convex shapes, normal-ray tube
quadrature with the curvature Jacobian, the boundary/skeleton
integration-by-parts identity, and the two-foot-point skeleton velocity in
flat R^2.

Conventions
-----------
* Curves are closed and counterclockwise; the inward normal is the left
  normal of the traversal direction.
* A shape may carry several oriented boundary components: ``side=+1`` for the
  outer boundary, ``side=-1`` for a hole, which flips both the inward normal
  and the sign of the curvature seen from the domain.
* Signed curvature of three consecutive nodes comes from their circumscribed
  circle and is positive for convex counterclockwise curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "GeometryError",
    "DomainMembershipError",
    "FocalSingularityError",
    "EquidistanceError",
    "ResolutionError",
    "DiscreteCurve",
    "SymmetricConvexCurve",
    "FootPointResult",
    "SkeletonSegment",
    "PlanarShape",
    "circle_curve",
    "ellipse_curve",
    "disk_shape",
    "ellipse_shape",
    "annulus_shape",
    "curvature_at",
    "curvatures",
    "inward_normals",
    "node_weights",
    "point_in_polygon",
    "foot_point",
    "level_curvature",
    "medial_axis",
    "tube_integrate",
    "stokes_identity_residual",
    "skeleton_motion",
    "skeleton_endpoint_rate",
    "normal_flow_step",
    "resample_equal_arclength",
    "write_curve",
    "read_curve",
    "FIELDS",
]


class GeometryError(ValueError):
    """Invalid curve or failed geometric invariant."""


class DomainMembershipError(GeometryError):
    """Query point is outside the domain or on its boundary."""


class FocalSingularityError(GeometryError):
    """Query lies at or beyond the focal distance of its boundary foot."""


class EquidistanceError(GeometryError):
    """Skeleton point is not equidistant from its two boundary feet."""


class ResolutionError(GeometryError):
    """Ray step too coarse to resolve the skeleton cutoff."""


# ---------------------------------------------------------------------------
# curves


def _signed_area(nodes: np.ndarray) -> float:
    x, y = nodes[:, 0], nodes[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _edge_cross_products(nodes: np.ndarray) -> np.ndarray:
    e = np.roll(nodes, -1, axis=0) - nodes
    e_next = np.roll(e, -1, axis=0)
    return e[:, 0] * e_next[:, 1] - e[:, 1] * e_next[:, 0]


def _check_simple(nodes: np.ndarray) -> bool:
    """Segment sweep for self-intersection (block-vectorized all-pairs)."""
    n = len(nodes)
    p = nodes
    q = np.roll(nodes, -1, axis=0)
    lo = np.minimum(p, q)
    hi = np.maximum(p, q)
    d = q - p
    idx = np.arange(n)
    block = 256
    for s in range(0, n, block):
        sl = slice(s, min(s + block, n))
        # bounding-box prefilter
        overlap = (
            (lo[sl, None, 0] <= hi[None, :, 0])
            & (lo[None, :, 0] <= hi[sl, None, 0])
            & (lo[sl, None, 1] <= hi[None, :, 1])
            & (lo[None, :, 1] <= hi[sl, None, 1])
        )
        # skip self and neighbors (shared endpoints)
        gap = (idx[sl, None] - idx[None, :]) % n
        overlap &= (gap > 1) & (gap < n - 1)
        ii, jj = np.nonzero(overlap)
        if ii.size == 0:
            continue
        a, b = p[sl][ii], d[sl][ii]
        c, e = p[jj], d[jj]
        denom = b[:, 0] * e[:, 1] - b[:, 1] * e[:, 0]
        ac = c - a
        t = ac[:, 0] * e[:, 1] - ac[:, 1] * e[:, 0]
        u = ac[:, 0] * b[:, 1] - ac[:, 1] * b[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = t / denom
            u = u / denom
        hit = (denom != 0) & (t > 0) & (t < 1) & (u > 0) & (u < 1)
        if np.any(hit):
            return False
    return True


class DiscreteCurve:
    """Closed counterclockwise polyline with at least 16 nodes."""

    def __init__(self, nodes, check_simple: bool = True):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 2 or nodes.shape[0] < 16:
            raise GeometryError("curve needs an (N>=16, 2) node array")
        if _signed_area(nodes) <= 0.0:
            raise GeometryError("curve must be counterclockwise (signed area > 0)")
        if check_simple and not _check_simple(nodes):
            raise GeometryError("curve is self-intersecting")
        self.nodes = nodes

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def area(self) -> float:
        return _signed_area(self.nodes)

    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.roll(self.nodes, -1, axis=0) - self.nodes, axis=1)

    def perimeter(self) -> float:
        return float(self.edge_lengths().sum())


class SymmetricConvexCurve(DiscreteCurve):
    """Convex curve symmetric about both axes, node 0 on the positive x axis.

    The node count is a multiple of 4 and node k mirrors node (N-k) mod N
    across the horizontal axis and node (N/2-k) mod N across the vertical one;
    the skeleton is then a horizontal segment [-x*, x*] x {0}.
    """

    SYMMETRY_TOL = 1e-12

    def __init__(self, nodes, check: bool = True):
        nodes = np.asarray(nodes, dtype=float)
        # convexity implies simplicity: skip the sweep
        super().__init__(nodes, check_simple=False)
        n = len(nodes)
        if n % 4 != 0:
            raise GeometryError("symmetric curve needs a node count divisible by 4")
        if check:
            cross = _edge_cross_products(nodes)
            scale = float(np.median(np.abs(cross))) + 1e-300
            if np.any(cross < -1e-9 * scale):
                raise GeometryError("curve is not convex")
            tol = self.SYMMETRY_TOL * max(1.0, float(np.abs(nodes).max()))
            k = np.arange(n)
            mirror_y = nodes[(-k) % n] * np.array([1.0, -1.0])
            mirror_x = nodes[(n // 2 - k) % n] * np.array([-1.0, 1.0])
            if np.abs(nodes - mirror_y).max() > tol or np.abs(nodes - mirror_x).max() > tol:
                raise GeometryError("curve is not symmetric about both axes")

    def is_convex(self) -> bool:
        cross = _edge_cross_products(self.nodes)
        scale = float(np.median(np.abs(cross))) + 1e-300
        return not np.any(cross < -1e-9 * scale)


def _mirror_first_quadrant(quarter: np.ndarray) -> np.ndarray:
    """Assemble a bitwise-symmetric closed curve from its first-quadrant arc.

    ``quarter`` runs from the positive-x vertex (y = 0) to the positive-y
    vertex (x = 0) inclusive, m+1 points for a curve of N = 4m nodes.
    """
    q = np.array(quarter, dtype=float)
    m = len(q) - 1
    q[0, 1] = 0.0
    q[m, 0] = 0.0
    out = np.empty((4 * m, 2))
    out[:m] = q[:m]
    out[m : 2 * m] = q[m:0:-1] * np.array([-1.0, 1.0])
    out[2 * m : 3 * m] = q[:m] * np.array([-1.0, -1.0])
    out[3 * m :] = q[m:0:-1] * np.array([1.0, -1.0])
    return out


def circle_curve(radius: float, n: int = 1024) -> SymmetricConvexCurve:
    m = n // 4
    ang = np.linspace(0.0, math.pi / 2.0, m + 1)
    quarter = radius * np.column_stack([np.cos(ang), np.sin(ang)])
    return SymmetricConvexCurve(_mirror_first_quadrant(quarter))


def ellipse_curve(a: float, b: float, n: int = 1024) -> SymmetricConvexCurve:
    m = n // 4
    ang = np.linspace(0.0, math.pi / 2.0, m + 1)
    quarter = np.column_stack([a * np.cos(ang), b * np.sin(ang)])
    return SymmetricConvexCurve(_mirror_first_quadrant(quarter))


# ---------------------------------------------------------------------------
# per-node differential geometry


def curvatures(curve: DiscreteCurve, side: int = 1) -> np.ndarray:
    """Signed circumscribed-circle curvature at every node.

    Positive for convex counterclockwise curves; collinear triples give 0.
    ``side=-1`` returns the curvature seen from a domain that lies outside
    the curve (hole component).
    """
    p = curve.nodes
    a = np.roll(p, 1, axis=0)
    c = np.roll(p, -1, axis=0)
    ab = p - a
    ac = c - a
    bc = c - p
    cross = ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0]
    denom = np.linalg.norm(ab, axis=1) * np.linalg.norm(bc, axis=1) * np.linalg.norm(ac, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(denom > 0.0, 2.0 * cross / denom, 0.0)
    return side * kappa


def curvature_at(curve: DiscreteCurve, node_index: int, side: int = 1) -> float:
    return float(curvatures(curve, side)[node_index % len(curve)])


def inward_normals(curve: DiscreteCurve, side: int = 1) -> np.ndarray:
    """Unit normals pointing into the domain (left of traversal, times side)."""
    p = curve.nodes
    tangent = np.roll(p, -1, axis=0) - np.roll(p, 1, axis=0)
    tangent /= np.linalg.norm(tangent, axis=1)[:, None]
    normal = np.column_stack([-tangent[:, 1], tangent[:, 0]])
    return side * normal


def node_weights(curve: DiscreteCurve) -> np.ndarray:
    """Arc-length weight of each node (half the two adjacent edges)."""
    el = curve.edge_lengths()
    return 0.5 * (el + np.roll(el, 1))


def point_in_polygon(points, nodes: np.ndarray) -> np.ndarray:
    """Crossing-number inside test, vectorized over query points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    x0, y0 = nodes[:, 0], nodes[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    # edge straddles the horizontal line through the query
    straddle = (y0[None, :] > y[:, None]) != (y1[None, :] > y[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        x_int = x0[None, :] + (y[:, None] - y0[None, :]) / (y1 - y0)[None, :] * (x1 - x0)[None, :]
    crossings = np.sum(straddle & (x_int > x[:, None]), axis=1)
    inside = (crossings % 2) == 1
    return inside if np.asarray(points).ndim == 2 else inside[0]


@dataclass(frozen=True)
class FootPointResult:
    foot: np.ndarray
    distance: float
    inward_normal: np.ndarray
    node_index: int
    offset: float  # barycentric position on the segment [node_index, node_index+1]


def _project_to_segment(q, p0, p1):
    d = p1 - p0
    dd = float(d @ d)
    if dd == 0.0:
        return p0, 0.0
    t = float(np.clip((q - p0) @ d / dd, 0.0, 1.0))
    return p0 + t * d, t


def foot_point(query, curve: DiscreteCurve) -> FootPointResult:
    """Nearest boundary point of a query strictly inside the domain.

    Linear scan over nodes, then refinement on the two adjacent segments;
    equidistant ties resolve to the lowest node index.
    """
    q = np.asarray(query, dtype=float)
    nodes = curve.nodes
    if not point_in_polygon(q, nodes):
        raise DomainMembershipError("query %s is outside the domain or on its boundary" % (q,))
    k = int(np.argmin(np.linalg.norm(nodes - q, axis=1)))
    n = len(nodes)
    best_foot = nodes[k]
    best_dist = float(np.linalg.norm(best_foot - q))
    best_seg, best_t = k, 0.0
    for seg in (k, (k - 1) % n):
        foot, t = _project_to_segment(q, nodes[seg], nodes[(seg + 1) % n])
        dist = float(np.linalg.norm(foot - q))
        if dist < best_dist:
            best_foot, best_dist, best_seg, best_t = foot, dist, seg, t
    if best_dist <= 1e-13 * max(1.0, float(np.abs(nodes).max())):
        raise DomainMembershipError("query lies on the boundary")
    normal = (q - best_foot) / best_dist
    return FootPointResult(
        foot=best_foot,
        distance=best_dist,
        inward_normal=normal,
        node_index=best_seg,
        offset=best_t,
    )


def level_curvature(query, curve: DiscreteCurve) -> float:
    """Curvature of the distance level set through an interior query point.

    Offset-curve formula kappa_foot / (1 - s kappa_foot) with s the distance
    to the foot; fails with FocalSingularityError at or beyond the focal
    distance.
    """
    fp = foot_point(query, curve)
    kap = curvatures(curve)
    n = len(curve)
    k_foot = (1.0 - fp.offset) * kap[fp.node_index] + fp.offset * kap[(fp.node_index + 1) % n]
    denom = 1.0 - fp.distance * k_foot
    if denom <= 0.0:
        raise FocalSingularityError(
            "query at distance %.6g reaches the focal set of curvature %.6g"
            % (fp.distance, k_foot)
        )
    return float(k_foot / denom)


# ---------------------------------------------------------------------------
# medial axis of symmetric convex shapes


@dataclass(frozen=True)
class SkeletonSegment:
    """Horizontal skeleton segment [-x*, x*] x {0} with its angle profile.

    ``thetas[j]`` is the smallest angle between the skeleton and the two
    minimal boundary-to-skeleton geodesics at abscissa ``abscissae[j]``;
    it decays to 0 at the endpoints and the profile extends evenly and by 0
    beyond [-x*, x*].
    """

    half_length: float
    abscissae: np.ndarray
    thetas: np.ndarray

    def theta_at(self, x) -> np.ndarray:
        ax = np.abs(np.asarray(x, dtype=float))
        out = np.interp(ax, self.abscissae, self.thetas, right=0.0)
        return np.where(ax > self.half_length, 0.0, out)

    def sin_theta_at(self, x) -> np.ndarray:
        return np.sin(self.theta_at(x))


def _project_to_segments(q: np.ndarray, p0: np.ndarray, p1: np.ndarray):
    """Row-wise point-to-segment projection; returns (feet, distances)."""
    d = p1 - p0
    dd = np.einsum("ij,ij->i", d, d)
    t = np.einsum("ij,ij->i", q - p0, d) / np.where(dd > 0.0, dd, 1.0)
    t = np.clip(np.where(dd > 0.0, t, 0.0), 0.0, 1.0)
    feet = p0 + t[:, None] * d
    return feet, np.linalg.norm(feet - q, axis=1)


def _feet_on_axis(xs: np.ndarray, curve: DiscreteCurve) -> np.ndarray:
    """Foot points of the on-axis queries (x, 0); fully vectorized."""
    nodes = curve.nodes
    n = len(nodes)
    q = np.column_stack([xs, np.zeros_like(xs)])
    d2 = (nodes[None, :, 0] - xs[:, None]) ** 2 + nodes[None, :, 1] ** 2
    ks = np.argmin(d2, axis=1)
    feet = nodes[ks]
    best = np.sqrt(d2[np.arange(len(xs)), ks])
    for off in (0, -1):
        seg = (ks + off) % n
        f, dist = _project_to_segments(q, nodes[seg], nodes[(seg + 1) % n])
        better = dist < best
        feet = np.where(better[:, None], f, feet)
        best = np.where(better, dist, best)
    return feet


def medial_axis(curve: SymmetricConvexCurve, n_profile: int = 257) -> SkeletonSegment:
    """Skeleton of an axis-symmetric convex shape.

    x* is the center of curvature of the horizontal vertex (node 0); the
    angle profile on a uniform abscissa grid comes from the feet of the
    on-axis points: theta = angle between the foot-to-skeleton segment and
    the horizontal axis.
    """
    if not isinstance(curve, SymmetricConvexCurve):
        raise GeometryError("medial_axis needs a SymmetricConvexCurve")
    v = float(curve.nodes[0, 0])
    k0 = curvature_at(curve, 0)
    if k0 <= 0.0:
        raise GeometryError("vertex curvature must be positive")
    x_star = v - 1.0 / k0
    if x_star <= 1e-12 * max(1.0, v):
        # skeleton degenerates to the center point
        return SkeletonSegment(
            half_length=0.0,
            abscissae=np.array([0.0]),
            thetas=np.array([math.pi / 2.0]),
        )
    xs = np.linspace(0.0, x_star, n_profile)
    feet = _feet_on_axis(xs, curve)
    dx = np.abs(feet[:, 0] - xs)
    dy = np.abs(feet[:, 1])
    thetas = np.arctan2(dy, dx)
    thetas[-1] = 0.0  # endpoint foot is the vertex itself
    return SkeletonSegment(half_length=x_star, abscissae=xs, thetas=thetas)


# ---------------------------------------------------------------------------
# shapes with oriented boundary components and a skeleton quadrature rule


@dataclass
class PlanarShape:
    """Domain bounded by oriented components with a known skeleton rule.

    ``skeleton_kind`` is one of "point" (no skeleton mass), "segment"
    (axis-symmetric convex shape, quadrature over [-x*, x*] weighted by
    sin theta), or "circle" (annulus; sin theta = 1 on the skeleton circle).
    """

    name: str
    components: list  # [(DiscreteCurve, side)]
    skeleton_kind: str
    segment: SkeletonSegment | None = None
    circle_radius: float = 0.0
    _ray_cache: dict = field(default_factory=dict, repr=False)

    def area(self) -> float:
        return float(sum(side * _signed_area(c.nodes) for c, side in self.components))

    def boundary_integral(self, g) -> float:
        total = 0.0
        for c, _side in self.components:
            total += float(np.sum(node_weights(c) * g(c.nodes)))
        return total

    def skeleton_integral(self, g, n_quad: int = 4097) -> float:
        """integral over the skeleton of g * sin(theta)."""
        if self.skeleton_kind == "point":
            return 0.0
        if self.skeleton_kind == "circle":
            phi = np.linspace(0.0, 2.0 * math.pi, n_quad)
            pts = self.circle_radius * np.column_stack([np.cos(phi), np.sin(phi)])
            vals = g(pts)
            return float(np.trapezoid(vals, phi) * self.circle_radius)
        seg = self.segment
        xs = np.linspace(-seg.half_length, seg.half_length, n_quad)
        pts = np.column_stack([xs, np.zeros_like(xs)])
        vals = g(pts) * seg.sin_theta_at(xs)
        return float(np.trapezoid(vals, xs))


def disk_shape(radius: float, n: int = 2048) -> PlanarShape:
    return PlanarShape(
        name="disk(%g)" % radius,
        components=[(circle_curve(radius, n), 1)],
        skeleton_kind="point",
    )


def ellipse_shape(a: float, b: float, n: int = 2048) -> PlanarShape:
    curve = ellipse_curve(a, b, n)
    return PlanarShape(
        name="ellipse(%g,%g)" % (a, b),
        components=[(curve, 1)],
        skeleton_kind="segment",
        segment=medial_axis(curve, n_profile=1025),
    )


def annulus_shape(r_in: float, r_out: float, n: int = 2048) -> PlanarShape:
    if not (0.0 < r_in < r_out):
        raise GeometryError("annulus needs 0 < r_in < r_out")
    return PlanarShape(
        name="annulus(%g,%g)" % (r_in, r_out),
        components=[(circle_curve(r_out, n), 1), (circle_curve(r_in, n), -1)],
        skeleton_kind="circle",
        circle_radius=0.5 * (r_in + r_out),
    )


# ---------------------------------------------------------------------------
# tube quadrature


def _ray_geometry(shape: PlanarShape):
    """Per-node ray data (origin, normal, curvature, weight, cutoff tau).

    tau is detected by foot-point consistency: marching along the inward
    normal, the nearest boundary node must stay within 2 node spacings of the
    ray origin (and on the same component); the switch is bracketed on a
    coarse grid and located by vectorized bisection.  Cached on the shape.
    """
    if "rays" in shape._ray_cache:
        return shape._ray_cache["rays"]
    origins, normals, kappas, weights = [], [], [], []
    comp_id, node_id, comp_len = [], [], []
    for ci, (curve, side) in enumerate(shape.components):
        origins.append(curve.nodes)
        normals.append(inward_normals(curve, side))
        kappas.append(curvatures(curve, side))
        weights.append(node_weights(curve))
        m = len(curve)
        comp_id.append(np.full(m, ci))
        node_id.append(np.arange(m))
        comp_len.append(m)
    origins = np.concatenate(origins)
    normals = np.concatenate(normals)
    kappas = np.concatenate(kappas)
    weights = np.concatenate(weights)
    comp_id = np.concatenate(comp_id)
    node_id = np.concatenate(node_id)
    comp_len = np.asarray(comp_len)
    tree = cKDTree(origins)

    bbox = origins.max(axis=0) - origins.min(axis=0)
    r_max = float(np.hypot(*bbox))
    n_all = len(origins)

    def consistent(points_flat, k_flat):
        _, idx = tree.query(points_flat, workers=-1)
        same = comp_id[idx] == comp_id[k_flat]
        m = comp_len[comp_id[k_flat]]
        gap = np.abs(node_id[idx] - node_id[k_flat])
        gap = np.minimum(gap, m - gap)
        return same & (gap <= 2)

    # coarse bracketing, all nodes at once
    n_coarse = 256
    rs = np.linspace(r_max / n_coarse, r_max * 1.01, n_coarse)
    pts = origins[:, None, :] + rs[None, :, None] * normals[:, None, :]
    k_flat = np.repeat(np.arange(n_all), n_coarse)
    good = consistent(pts.reshape(-1, 2), k_flat).reshape(n_all, n_coarse)
    first_bad = np.argmin(good, axis=1)  # index of first False (0 if none/all-bad)
    all_good = good.all(axis=1)
    lo = np.where(first_bad > 0, rs[np.maximum(first_bad - 1, 0)], 0.0)
    hi = np.where(first_bad > 0, rs[first_bad], rs[0])
    lo = np.where(all_good, rs[-1], lo)
    hi = np.where(all_good, r_max * 1.02, hi)
    # vectorized bisection
    ks = np.arange(n_all)
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        ok = consistent(origins + mid[:, None] * normals, ks)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    taus = 0.5 * (lo + hi)
    data = {
        "origins": origins,
        "normals": normals,
        "kappas": kappas,
        "weights": weights,
        "taus": taus,
    }
    shape._ray_cache["rays"] = data
    return data


def _ray_quadrature(shape: PlanarShape, integrand, ray_step: float) -> float:
    """Sum over boundary nodes of w * int_0^tau integrand(points, r, node) J(r) dr.

    J(r) = exp(-int_0^r h) with h the level curvature along the ray; since the
    foot is fixed along a normal ray the cell increments integrate exactly to
    J(r) = 1 - r kappa (clamped at 0 near the focal cutoff).
    """
    data = _ray_geometry(shape)
    if np.any(data["taus"] < ray_step):
        raise ResolutionError("ray step %.3g cannot resolve the skeleton cutoff" % ray_step)
    total = 0.0
    for k in range(len(data["origins"])):
        tau = data["taus"][k]
        n_cells = max(1, int(math.ceil(tau / ray_step)))
        rs = np.linspace(0.0, tau, n_cells + 1)
        pts = data["origins"][k] + rs[:, None] * data["normals"][k]
        jac = np.maximum(1.0 - rs * data["kappas"][k], 0.0)
        vals = integrand(pts, rs, k, data) * jac
        total += data["weights"][k] * float(np.trapezoid(vals, rs))
    return total


def tube_integrate(shape: PlanarShape, g, ray_step: float = 1e-4) -> float:
    """Domain integral of g by normal-ray quadrature with the tube Jacobian."""
    return _ray_quadrature(shape, lambda pts, rs, k, data: g(pts), ray_step)


def stokes_identity_residual(shape: PlanarShape, g, grad_g, ray_step: float = 1e-4):
    """Both sides of the boundary/skeleton integration-by-parts identity.

    lhs = int_D g h dmu;
    rhs = int_dD g - 2 int_S g sin(theta) + int_D <grad g, N> dmu,
    with N the inward normal field extended constant along normal rays.
    Returns (lhs, rhs, residual) with residual = |lhs - rhs| / max(1, |lhs|).
    """

    def gh(pts, rs, k, data):
        kap = data["kappas"][k]
        with np.errstate(divide="ignore", invalid="ignore"):
            h = np.where(1.0 - rs * kap > 0.0, kap / np.maximum(1.0 - rs * kap, 1e-300), 0.0)
        return g(pts) * h

    def flux(pts, rs, k, data):
        return grad_g(pts) @ data["normals"][k]

    lhs = _ray_quadrature(shape, gh, ray_step)
    rhs = (
        shape.boundary_integral(g)
        - 2.0 * shape.skeleton_integral(g)
        + _ray_quadrature(shape, flux, ray_step)
    )
    residual = abs(lhs - rhs) / max(1.0, abs(lhs))
    return lhs, rhs, residual


# scalar fields used across the verification corpus: (g, grad_g) pairs
FIELDS = {
    "one": (lambda p: np.ones(len(p)), lambda p: np.zeros_like(p)),
    "x": (lambda p: p[:, 0].copy(), lambda p: np.column_stack([np.ones(len(p)), np.zeros(len(p))])),
    "xx2": (
        lambda p: p[:, 0] ** 2 + 2.0,
        lambda p: np.column_stack([2.0 * p[:, 0], np.zeros(len(p))]),
    ),
    "expx4": (
        lambda p: np.exp(p[:, 0] / 4.0),
        lambda p: np.column_stack([np.exp(p[:, 0] / 4.0) / 4.0, np.zeros(len(p))]),
    ),
}


# ---------------------------------------------------------------------------
# skeleton motion (flat R^2)


def skeleton_motion(y1, y2, x, h1: float, dh1: float, h2: float, theta: float,
                    tol: float = 1e-9):
    """Velocity of a regular skeleton point from its two boundary feet.

    ``h1``/``h2`` are the normal boundary speeds at the feet y1/y2 and
    ``dh1`` the tangential derivative of the speed at y1, taken along the
    tangent obtained by rotating the y1->x direction clockwise by pi/2.

    normal velocity = (h1 - h2) / (4 sin^2 theta) * (N1 - N2)
    with N_i the unit vectors from y_i toward x; the tangential part combines
    the flat-space Jacobi value J1 = -|x - y1| dh1 T(y1) with its projection
    on the skeleton tangent.  Returns (normal_velocity, tangential_velocity).
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    x = np.asarray(x, dtype=float)
    if not (0.0 < theta <= math.pi / 2.0 + 1e-12):
        raise GeometryError("theta must lie in (0, pi/2]")
    r1 = float(np.linalg.norm(x - y1))
    r2 = float(np.linalg.norm(x - y2))
    if abs(r1 - r2) > tol * max(1.0, r1, r2):
        raise EquidistanceError("x is not equidistant from y1 and y2 (%.3g vs %.3g)" % (r1, r2))
    n1 = (x - y1) / r1
    n2 = (x - y2) / r2
    s = math.sin(theta)
    v_normal = (h1 - h2) / (4.0 * s * s) * (n1 - n2)
    # tangential part
    t1 = np.array([n1[1], -n1[0]])  # clockwise rotation of n1
    j_perp = -r1 * dh1 * t1
    n1s = (n1 - n2) / (2.0 * s)
    t_s = np.array([-n1s[1], n1s[0]])  # skeleton tangent (sign-irrelevant)
    v_tangential = (j_perp @ t_s) * t_s + (
        -(j_perp @ n1s) / (2.0 * s) + (h1 - h2) / (4.0 * s * s)
    ) * (n1 + n2)
    return v_normal, v_tangential


def skeleton_endpoint_rate(curve: SymmetricConvexCurve, speed_factor: float = 0.5) -> float:
    """Drift of the skeleton half-length under boundary speed H = speed_factor * h.

    Endpoint law dx*/dt = rho^2 * H''(vertex) with rho = 1/kappa(vertex) and
    the second derivative taken in arc length; H'' = speed_factor * h''.
    Estimated from the symmetric three-node stencil at the vertex.
    """
    kap = curvatures(curve)
    el = curve.edge_lengths()
    n = len(curve)
    ds = 0.5 * (el[0] + el[n - 1])
    # symmetric curve: kappa[1] == kappa[-1]
    hpp = (kap[1] - 2.0 * kap[0] + kap[n - 1]) / ds**2
    rho = 1.0 / kap[0]
    return rho * rho * speed_factor * hpp


def normal_flow_step(curve: SymmetricConvexCurve, speeds, dt: float) -> SymmetricConvexCurve:
    """Move every node along its inward normal by speed * dt (no resampling)."""
    speeds = np.asarray(speeds, dtype=float)
    nodes = curve.nodes + inward_normals(curve) * (speeds * dt)[:, None]
    return SymmetricConvexCurve(nodes, check=False)


# ---------------------------------------------------------------------------
# resampling and IO


def resample_equal_arclength(nodes: np.ndarray, n: int | None = None) -> np.ndarray:
    """Redistribute nodes at equal arc length, node 0 on the positive-x axis,
    and re-symmetrize exactly across both axes.

    Interpolation is a periodic cubic spline in the arc parameter: linear
    (chordal) resampling flattens tight-curvature stretches into collinear
    runs, which a curvature-driven flow then buckles.
    """
    from scipy.interpolate import CubicSpline

    nodes = np.asarray(nodes, dtype=float)
    if n is None:
        n = len(nodes)
    if n % 4 != 0:
        raise GeometryError("resampling needs a node count divisible by 4")
    # locate the positive-x axis crossing (y changes sign going up)
    y = nodes[:, 1]
    y_next = np.roll(y, -1)
    cross_up = (y <= 0.0) & (y_next > 0.0) & ((nodes[:, 0] + np.roll(nodes[:, 0], -1)) > 0.0)
    candidates = np.nonzero(cross_up)[0]
    if candidates.size == 0:
        raise GeometryError("curve does not cross the positive x axis")
    k0 = int(candidates[np.argmax(nodes[candidates, 0])])
    # periodic spline in the polyline arc parameter, anchored after the crossing
    order = np.roll(np.arange(len(nodes)), -(k0 + 1))
    loop = np.vstack([nodes[order], nodes[order][0]])
    seg = np.linalg.norm(np.diff(loop, axis=0), axis=1)
    if np.any(seg <= 1e-15):
        raise GeometryError("degenerate (duplicate) nodes in resampling input")
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    spline = CubicSpline(s, loop, bc_type="periodic", axis=0)
    # node 0 goes at the crossing located on the spline itself: a chordal
    # crossing would poke inward by the sagitta and kink the vertex
    lo, hi = s[-2], s[-1]  # bracket: y(lo) <= 0 < y(hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if spline(mid)[1] <= 0.0:
            lo = mid
        else:
            hi = mid
    s_star = 0.5 * (lo + hi)
    targets = (s_star + np.arange(n) * (total / n)) % total
    out = spline(targets)
    # exact 4-fold symmetrization: average the quarter, mirror it back
    m = n // 4
    k = np.arange(m + 1)
    my = out[(-k) % n] * np.array([1.0, -1.0])
    mx = out[(2 * m - k) % n] * np.array([-1.0, 1.0])
    mxy = out[(2 * m + k) % n] * np.array([-1.0, -1.0])
    quarter = 0.25 * (out[k] + my + mx + mxy)
    return _mirror_first_quadrant(quarter)


def write_curve(path, curve_or_nodes) -> None:
    """Plain text, one "x y" pair per line, counterclockwise, no header."""
    nodes = curve_or_nodes.nodes if hasattr(curve_or_nodes, "nodes") else curve_or_nodes
    with open(path, "w") as fh:
        for x, y in np.asarray(nodes, dtype=float):
            fh.write("%.17g %.17g\n" % (x, y))


def read_curve(path) -> np.ndarray:
    nodes = np.loadtxt(path, dtype=float)
    if nodes.ndim != 2 or nodes.shape[1] != 2:
        raise GeometryError("curve file must hold two columns")
    return nodes
