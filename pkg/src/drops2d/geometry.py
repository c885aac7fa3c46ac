"""Polygonal planar regions with holes and their discrete differential geometry.

A region is a list of components; each component is one counterclockwise outer
ring plus clockwise hole rings.  Rings are (n, 2) float arrays without a
repeated end vertex.  All operations are pure functions of immutable inputs.

Curvature at a vertex uses the turning angle:  kappa = 2 sin(theta/2) / lbar,
with lbar the mean adjacent edge length; the outward normal bisects the two
edge normals; the arclength weight is the half-sum of the adjacent edges.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import shapely
import shapely.geometry as sgeom

from .errors import (
    IllConditionedBoundaryError,
    InvalidRegionError,
    TopologyChangeError,
)

# Turning angles past this are treated as cusps (boundary_trace refuses them).
CUSP_ANGLE = math.pi - 0.1


def ring_area(ring: np.ndarray) -> float:
    """Signed shoelace area of a closed ring (positive for counterclockwise)."""
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def ring_length(ring: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.roll(ring, -1, axis=0) - ring, axis=1)))


def _as_ring(points) -> np.ndarray:
    ring = np.asarray(points, dtype=float)
    if ring.ndim != 2 or ring.shape[1] != 2 or ring.shape[0] < 3:
        raise InvalidRegionError("a ring needs at least 3 two-dimensional vertices")
    if np.allclose(ring[0], ring[-1]):
        ring = ring[:-1]
    if ring.shape[0] < 3:
        raise InvalidRegionError("a ring needs at least 3 distinct vertices")
    return ring


@dataclass(frozen=True)
class Component:
    outer: np.ndarray
    holes: tuple = ()

    def rings(self):
        yield self.outer
        yield from self.holes


@dataclass(frozen=True)
class Region:
    components: tuple

    def rings(self):
        for comp in self.components:
            yield from comp.rings()

    @property
    def n_vertices(self) -> int:
        return sum(len(r) for r in self.rings())

    def bbox(self) -> tuple:
        pts = np.vstack([r for r in self.rings()])
        return (
            float(pts[:, 0].min()),
            float(pts[:, 1].min()),
            float(pts[:, 0].max()),
            float(pts[:, 1].max()),
        )

    def diameter(self) -> float:
        """Max pairwise distance over outer-ring vertices (via the hull)."""
        pts = np.vstack([c.outer for c in self.components])
        hull = shapely.MultiPoint(pts).convex_hull
        if hull.geom_type == "Polygon":
            pts = np.asarray(hull.exterior.coords)[:-1]
        diffs = pts[:, None, :] - pts[None, :, :]
        d2 = np.max(np.einsum("ijk,ijk->ij", diffs, diffs))
        return float(math.sqrt(d2))


def region_from_rings(outer_rings, holes_per_outer=None) -> Region:
    comps = []
    holes_per_outer = holes_per_outer or [[] for _ in outer_rings]
    for outer, holes in zip(outer_rings, holes_per_outer):
        comps.append(Component(_as_ring(outer), tuple(_as_ring(h) for h in holes)))
    return Region(tuple(comps))


def make_region(components) -> Region:
    """Build a Region from [(outer, [holes...]), ...] with orientation fixing."""
    comps = []
    for outer, holes in components:
        outer = _as_ring(outer)
        if ring_area(outer) < 0:
            outer = outer[::-1]
        fixed_holes = []
        for h in holes:
            h = _as_ring(h)
            if ring_area(h) > 0:
                h = h[::-1]
            fixed_holes.append(h)
        comps.append(Component(outer, tuple(fixed_holes)))
    return Region(tuple(comps))


# ----------------------------------------------------------------------------
# global quantities
# ----------------------------------------------------------------------------


def area(region: Region) -> float:
    """Total area: shoelace over all rings (holes carry negative sign)."""
    total = 0.0
    for ring in region.rings():
        if len(ring) < 3:
            raise InvalidRegionError("degenerate ring")
        total += ring_area(ring)
    return total


def perimeter(region: Region) -> float:
    """Total boundary length, hole rings included."""
    total = 0.0
    for ring in region.rings():
        if len(ring) < 3:
            raise InvalidRegionError("degenerate ring")
        total += ring_length(ring)
    return total


def centroid(region: Region) -> np.ndarray:
    """Area centroid (holes subtract)."""
    cx = cy = a = 0.0
    for ring in region.rings():
        x, y = ring[:, 0], ring[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        a_r = 0.5 * np.sum(cross)
        cx += float(np.sum((x + xn) * cross) / 6.0)
        cy += float(np.sum((y + yn) * cross) / 6.0)
        a += float(a_r)
    if a <= 0:
        raise InvalidRegionError("non-positive total area")
    return np.array([cx / a, cy / a])


def to_shapely(region: Region):
    polys = [
        sgeom.Polygon(comp.outer, [h for h in comp.holes])
        for comp in region.components
    ]
    return sgeom.MultiPolygon(polys)


def contains_points(region: Region, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized point-in-region test (boundary counts as inside)."""
    geom = to_shapely(region)
    shapely.prepare(geom)
    return shapely.intersects_xy(geom, x, y)


def validate_region(region: Region, h_target: float | None = None) -> None:
    """Raise InvalidRegionError unless all structural invariants hold."""
    if not region.components:
        raise InvalidRegionError("region has no components")
    polys = []
    for ci, comp in enumerate(region.components):
        if ring_area(comp.outer) <= 0:
            raise InvalidRegionError(f"component {ci}: outer ring not counterclockwise")
        for hi, h in enumerate(comp.holes):
            if ring_area(h) >= 0:
                raise InvalidRegionError(f"component {ci} hole {hi}: not clockwise")
        for ri, ring in enumerate(comp.rings()):
            ls = sgeom.LinearRing(ring)
            if not ls.is_simple:
                raise InvalidRegionError(f"component {ci} ring {ri}: self-intersecting")
        poly = sgeom.Polygon(comp.outer, [h for h in comp.holes])
        if not poly.is_valid:
            raise InvalidRegionError(f"component {ci}: holes cross the outer ring")
        polys.append(poly)
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            if polys[i].intersects(polys[j]):
                raise InvalidRegionError(f"components {i} and {j} overlap")
    if area(region) <= 0:
        raise InvalidRegionError("total area must be positive")
    if h_target is not None:
        for ring in region.rings():
            edges = np.linalg.norm(np.roll(ring, -1, axis=0) - ring, axis=1)
            if edges.min() < 0.2 * h_target or edges.max() > 5.0 * h_target:
                raise InvalidRegionError(
                    f"vertex spacing [{edges.min():.3g}, {edges.max():.3g}] outside "
                    f"[0.2, 5] x h_target={h_target:.3g}"
                )


def feature_size(region: Region) -> float:
    """Smallest of: component diameters, hole sizes, inter-ring gaps."""
    fs = math.inf
    polys = [sgeom.Polygon(c.outer, [h for h in c.holes]) for c in region.components]
    for comp, poly in zip(region.components, polys):
        xmin, ymin, xmax, ymax = sgeom.Polygon(comp.outer).bounds
        fs = min(fs, xmax - xmin, ymax - ymin)
        outer_ls = sgeom.LinearRing(comp.outer)
        for h in comp.holes:
            hx0, hy0, hx1, hy1 = sgeom.Polygon(h).bounds
            fs = min(fs, hx1 - hx0, hy1 - hy0)
            fs = min(fs, outer_ls.distance(sgeom.LinearRing(h)))
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            fs = min(fs, polys[i].distance(polys[j]))
    return fs


# ----------------------------------------------------------------------------
# boundary trace
# ----------------------------------------------------------------------------


@dataclass
class BoundaryTrace:
    """Per-vertex boundary fields, ordered ring by ring.

    ``half_derivative`` (D), ``residual`` (R) and ``multiplier`` (p) start
    empty and are filled by shape_calculus.
    """

    points: np.ndarray          # (n, 2)
    normal: np.ndarray          # (n, 2) outward unit normals
    kappa: np.ndarray           # (n,) signed discrete curvature
    weight: np.ndarray          # (n,) arclength weights, sum = perimeter
    turning: np.ndarray         # (n,) signed turning angles
    ring_id: np.ndarray         # (n,) ring index (outer rings first per component)
    ring_is_hole: np.ndarray    # (n,) bool
    half_derivative: np.ndarray = field(default=None)
    flagged: np.ndarray = field(default=None)
    residual: np.ndarray = field(default=None)
    multiplier: float = field(default=None)

    @property
    def n(self) -> int:
        return len(self.points)

    def perimeter(self) -> float:
        return float(np.sum(self.weight))


def boundary_trace(region: Region) -> BoundaryTrace:
    """Discrete normals, curvatures and arclength weights at every vertex."""
    pts, nrm, kap, wgt, trn, rid, ish = [], [], [], [], [], [], []
    ring_index = 0
    for comp in region.components:
        for k, ring in enumerate(comp.rings()):
            is_hole = k > 0
            nv = len(ring)
            e_out = np.roll(ring, -1, axis=0) - ring         # edge i -> i+1
            len_out = np.linalg.norm(e_out, axis=1)
            if np.any(len_out == 0):
                raise InvalidRegionError("zero-length edge")
            t_out = e_out / len_out[:, None]
            t_in = np.roll(t_out, 1, axis=0)
            len_in = np.roll(len_out, 1)
            # signed turning angle at each vertex (positive = left turn)
            cross = t_in[:, 0] * t_out[:, 1] - t_in[:, 1] * t_out[:, 0]
            dot = np.einsum("ij,ij->i", t_in, t_out)
            theta = np.arctan2(cross, dot)
            if np.any(np.abs(theta) >= CUSP_ANGLE):
                bad = int(np.argmax(np.abs(theta)))
                raise IllConditionedBoundaryError(
                    f"near-cusp at ring {ring_index} vertex {bad}: "
                    f"|turning| = {abs(theta[bad]):.3f} rad"
                )
            lbar = 0.5 * (len_in + len_out)
            kappa = 2.0 * np.sin(theta / 2.0) / lbar
            # outward normal along the bisector: rotate mean tangent by -90 deg
            bis = t_in + t_out
            small = np.linalg.norm(bis, axis=1) < 1e-12
            bis[small] = t_out[small]
            bis /= np.linalg.norm(bis, axis=1)[:, None]
            normal = np.column_stack([bis[:, 1], -bis[:, 0]])
            pts.append(ring)
            nrm.append(normal)
            kap.append(kappa)
            wgt.append(lbar)
            trn.append(theta)
            rid.append(np.full(nv, ring_index))
            ish.append(np.full(nv, is_hole))
            ring_index += 1
    return BoundaryTrace(
        points=np.vstack(pts),
        normal=np.vstack(nrm),
        kappa=np.concatenate(kap),
        weight=np.concatenate(wgt),
        turning=np.concatenate(trn),
        ring_id=np.concatenate(rid),
        ring_is_hole=np.concatenate(ish),
    )


# ----------------------------------------------------------------------------
# transforms
# ----------------------------------------------------------------------------


def transform(region: Region, func) -> Region:
    """Apply a plane map to every vertex; ``func`` takes and returns (n, 2)."""
    comps = []
    for comp in region.components:
        comps.append(
            Component(
                np.asarray(func(comp.outer), dtype=float),
                tuple(np.asarray(func(h), dtype=float) for h in comp.holes),
            )
        )
    return Region(tuple(comps))


def scale_about(region: Region, factor: float, center) -> Region:
    c = np.asarray(center, dtype=float)
    return transform(region, lambda p: c + factor * (p - c))


def translate(region: Region, shift) -> Region:
    s = np.asarray(shift, dtype=float)
    return transform(region, lambda p: p + s)


def rescale_to_area(region: Region, m: float, center) -> Region:
    """Homothety about ``center`` restoring total area to ``m`` exactly."""
    if m <= 0:
        raise InvalidRegionError("target area must be positive")
    return scale_about(region, math.sqrt(m / area(region)), center)


def resample(region: Region, h_target: float) -> Region:
    """Resample every ring to uniform arclength spacing close to ``h_target``."""
    if h_target <= 0:
        raise InvalidRegionError("h_target must be positive")
    comps = []
    for comp in region.components:
        rings = [_resample_ring(r, h_target) for r in comp.rings()]
        comps.append(Component(rings[0], tuple(rings[1:])))
    return Region(tuple(comps))


def _resample_ring(ring: np.ndarray, h_target: float) -> np.ndarray:
    closed = np.vstack([ring, ring[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    n = max(8, int(round(total / h_target)))
    snew = np.linspace(0.0, total, n, endpoint=False)
    x = np.interp(snew, s, closed[:, 0])
    y = np.interp(snew, s, closed[:, 1])
    return np.column_stack([x, y])


def dilate(region: Region, delta: float, quad_segs: int = 16) -> Region:
    """Outward offset Omega^delta = {dist(x, Omega) <= delta}.

    Convex corners are rounded with arcs; offsets that would merge rings,
    swallow holes or split components raise TopologyChangeError.
    """
    if delta < 0:
        raise InvalidRegionError("delta must be nonnegative")
    if delta == 0:
        return Region(tuple(region.components))
    geom = to_shapely(region)
    out = geom.buffer(delta, quad_segs=quad_segs)
    if out.geom_type == "Polygon":
        polys = [out]
    else:
        polys = list(out.geoms)
    n_comp_in = len(region.components)
    n_holes_in = sum(len(c.holes) for c in region.components)
    n_holes_out = sum(len(p.interiors) for p in polys)
    if len(polys) != n_comp_in or n_holes_out != n_holes_in:
        raise TopologyChangeError(
            f"offset by {delta} changes topology "
            f"({n_comp_in} -> {len(polys)} components, "
            f"{n_holes_in} -> {n_holes_out} holes)"
        )
    comps = []
    for poly in polys:
        outer = _as_ring(np.asarray(poly.exterior.coords))
        if ring_area(outer) < 0:
            outer = outer[::-1]
        holes = []
        for interior in poly.interiors:
            h = _as_ring(np.asarray(interior.coords))
            if ring_area(h) > 0:
                h = h[::-1]
            holes.append(h)
        comps.append(Component(outer, tuple(holes)))
    return Region(tuple(comps))


# ----------------------------------------------------------------------------
# distances
# ----------------------------------------------------------------------------


def _points_to_segments_dist(points: np.ndarray, ring: np.ndarray) -> np.ndarray:
    """Min distance from each point to the closed polyline of ``ring``."""
    a = ring
    b = np.roll(ring, -1, axis=0)
    ab = b - a                                    # (m, 2)
    ap = points[:, None, :] - a[None, :, :]       # (n, m, 2)
    denom = np.einsum("ij,ij->j", ab, ab)
    t = np.clip(np.einsum("nmj,mj->nm", ap, ab) / np.maximum(denom, 1e-300), 0.0, 1.0)
    proj = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = np.linalg.norm(points[:, None, :] - proj, axis=2)
    return d.min(axis=1)


def boundary_distance(region: Region, points: np.ndarray) -> np.ndarray:
    """Distance from points to the region boundary (all rings)."""
    d = np.full(len(points), np.inf)
    for ring in region.rings():
        d = np.minimum(d, _points_to_segments_dist(points, ring))
    return d


def hausdorff_distance(a: Region, b: Region) -> float:
    """Symmetric boundary Hausdorff distance with edge-projection refinement."""
    pts_a = np.vstack([r for r in a.rings()])
    pts_b = np.vstack([r for r in b.rings()])
    d_ab = boundary_distance(b, pts_a).max()
    d_ba = boundary_distance(a, pts_b).max()
    return float(max(d_ab, d_ba))


# ----------------------------------------------------------------------------
# shape constructors
# ----------------------------------------------------------------------------


def disk_region(radius: float = 1.0, center=(0.0, 0.0), n: int = 256) -> Region:
    t = 2 * np.pi * np.arange(n) / n
    ring = np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])
    return Region((Component(ring),))


def ellipse_region(a: float, b: float, center=(0.0, 0.0), n: int = 256, angle: float = 0.0) -> Region:
    t = 2 * np.pi * np.arange(n) / n
    x, y = a * np.cos(t), b * np.sin(t)
    ca, sa = math.cos(angle), math.sin(angle)
    ring = np.column_stack([center[0] + ca * x - sa * y, center[1] + sa * x + ca * y])
    return Region((Component(ring),))


def square_region(side: float = 1.0, corner=(0.0, 0.0)) -> Region:
    x0, y0 = corner
    ring = np.array([[x0, y0], [x0 + side, y0], [x0 + side, y0 + side], [x0, y0 + side]])
    return Region((Component(ring),))


def rounded_square_region(side: float = 1.0, radius: float = 0.2, center=(0.0, 0.0), n_arc: int = 24) -> Region:
    """Square with circular corner fillets (a C^1 boundary)."""
    if not 0 < radius <= side / 2:
        raise InvalidRegionError("fillet radius must lie in (0, side/2]")
    h = side / 2 - radius
    cx, cy = center
    corners = [(cx + h, cy + h), (cx - h, cy + h), (cx - h, cy - h), (cx + h, cy - h)]
    start = [0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi]
    pts = []
    for (qx, qy), t0 in zip(corners, start):
        t = t0 + 0.5 * math.pi * (np.arange(n_arc) / (n_arc - 1) if n_arc > 1 else np.zeros(1))
        pts.append(np.column_stack([qx + radius * np.cos(t), qy + radius * np.sin(t)]))
    return Region((Component(np.vstack(pts)),))


def annulus_region(r_outer: float, r_inner: float, center=(0.0, 0.0), n: int = 256) -> Region:
    outer = disk_region(r_outer, center, n).components[0].outer
    inner = disk_region(r_inner, center, max(16, int(n * r_inner / r_outer))).components[0].outer
    return Region((Component(outer, (inner[::-1],)),))


def random_star_region(rng, target_area: float = math.pi, n: int = 160, max_modes: int = 6) -> Region:
    """Random smooth star-shaped polygon rescaled to ``target_area``.

    r(t) = 1 + sum_k a_k cos(k t + phi_k) with sum |a_k| <= 0.45, so the
    radius stays positive and the polygon is simple by construction.
    """
    amps, phases, modes = [], [], []
    budget = 0.45
    for k in range(2, max_modes + 1):
        a = rng.uniform(0.0, min(budget, 0.8 / k))
        amps.append(a)
        phases.append(rng.uniform(0.0, 2 * math.pi))
        modes.append(k)
        budget -= a
    t = 2 * np.pi * np.arange(n) / n
    r = np.ones(n)
    for a, ph, k in zip(amps, phases, modes):
        r += a * np.cos(k * t + ph)
    ring = np.column_stack([r * np.cos(t), r * np.sin(t)])
    region = Region((Component(ring),))
    return rescale_to_area(region, target_area, (0.0, 0.0))


# ----------------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------------


def region_to_json(region: Region) -> dict:
    return {
        "components": [
            {
                "outer": comp.outer.tolist(),
                "holes": [h.tolist() for h in comp.holes],
            }
            for comp in region.components
        ]
    }


def region_from_json(data: dict) -> Region:
    if not isinstance(data, dict) or "components" not in data:
        raise InvalidRegionError("region JSON must have a 'components' list")
    comps = []
    for ci, comp in enumerate(data["components"]):
        try:
            outer = _as_ring(comp["outer"])
            holes = [_as_ring(h) for h in comp.get("holes", [])]
        except (KeyError, TypeError) as exc:
            raise InvalidRegionError(f"component {ci}: malformed rings ({exc})")
        for ri, ring in enumerate([outer] + holes):
            if not sgeom.LinearRing(ring).is_simple:
                raise InvalidRegionError(f"component {ci} ring {ri}: self-intersecting")
        if ring_area(outer) < 0:
            outer = outer[::-1]
        holes = [h[::-1] if ring_area(h) > 0 else h for h in holes]
        comps.append(Component(outer, tuple(holes)))
    region = Region(tuple(comps))
    validate_region(region)
    return region


def load_region(path) -> Region:
    with open(path) as f:
        return region_from_json(json.load(f))


def save_region(region: Region, path) -> None:
    with open(path, "w") as f:
        json.dump(region_to_json(region), f)


def region_to_svg(region: Region, path, size: int = 640, stroke: str = "#1f4e79") -> None:
    """Write the region as a standalone SVG (even-odd fill for holes)."""
    xmin, ymin, xmax, ymax = region.bbox()
    pad = 0.05 * max(xmax - xmin, ymax - ymin, 1e-9)
    xmin, ymin, xmax, ymax = xmin - pad, ymin - pad, xmax + pad, ymax + pad
    scale = size / max(xmax - xmin, ymax - ymin)

    def pix(p):
        return (p[0] - xmin) * scale, (ymax - p[1]) * scale

    paths = []
    for ring in region.rings():
        coords = " L ".join(f"{pix(p)[0]:.2f} {pix(p)[1]:.2f}" for p in ring)
        paths.append(f"M {coords} Z")
    d = " ".join(paths)
    w = (xmax - xmin) * scale
    h = (ymax - ymin) * scale
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}">\n'
        f'  <path d="{d}" fill="#9ecae8" fill-rule="evenodd" '
        f'stroke="{stroke}" stroke-width="1.5"/>\n</svg>\n'
    )
    with open(path, "w") as f:
        f.write(svg)
