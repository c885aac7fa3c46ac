"""Interior quadrature cells and the singular 1/|x-y| interaction matrix.

The mesh is an axis-aligned grid clipped to the region.  Every cell carries a
4x4 subsample-point stencil; cut cells keep only the inside points and get the
matching area fraction.  Kernel entries are plain inverse center distances in
the far field, subsampled product quadrature for near pairs, and a scaled
unit-square self-energy on the diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import shapely

from . import geometry
from .errors import AssemblyError, ResolutionTooCoarseError

#: Double integral of 1/|x-y| over [0,1]^2 x [0,1]^2, precomputed once with an
#: adaptive-quadrature oracle (two independent reductions agree to 1e-15).
SQUARE_SELF_ENERGY = 2.9732095982473787

#: Near-field rule: pairs closer than NEAR_CUTOFF * cell size get subsampled.
NEAR_CUTOFF = 3.0

#: Subsample order per cell axis (4x4 stencil).
N_SUB = 4

MIN_CELLS = 50

# relative offsets of the 4x4 stencil inside a unit cell centered at 0
_SUB = (np.arange(N_SUB) + 0.5) / N_SUB - 0.5
_SUB_XY = np.stack(np.meshgrid(_SUB, _SUB, indexing="ij"), axis=-1).reshape(-1, 2)


@dataclass
class CellMesh:
    """Quadrature decomposition of a region's interior."""

    centers: np.ndarray        # (n, 2)
    areas: np.ndarray          # (n,)
    sizes: np.ndarray          # (n,) square side per cell (h or h/2 if refined)
    boundary: np.ndarray       # (n,) bool, True for cut cells
    qpts: np.ndarray           # (n, 16, 2) subsample points (grid positions)
    qmask: np.ndarray          # (n, 16) bool, inside-region mask
    h: float                   # base grid spacing
    region: geometry.Region

    @property
    def n_cells(self) -> int:
        return len(self.areas)

    @property
    def covered_area(self) -> float:
        return float(self.areas.sum())


def _subsample_cells(origins: np.ndarray, size: float, geom) -> tuple:
    """Inside-mask of the 4x4 stencil for cells at ``origins`` (centers)."""
    pts = origins[:, None, :] + size * _SUB_XY[None, :, :]
    flat = pts.reshape(-1, 2)
    inside = shapely.intersects_xy(geom, flat[:, 0], flat[:, 1]).reshape(len(origins), 16)
    return pts, inside


def build_mesh(
    region: geometry.Region,
    h: float,
    refine_boundary: bool = False,
    min_cells: int = MIN_CELLS,
) -> CellMesh:
    """Clip an axis-aligned grid of spacing ``h`` to the region.

    Interior cells get area h^2; cut cells get the 4x4 inside fraction and a
    boundary flag.  With ``refine_boundary`` every cut cell is split once into
    four half-size cells re-classified the same way.
    """
    fs = geometry.feature_size(region)
    if h >= fs / 4.0:
        raise ResolutionTooCoarseError(
            f"h = {h:.4g} exceeds a quarter of the feature size {fs:.4g}"
        )
    geom = geometry.to_shapely(region)
    shapely.prepare(geom)
    xmin, ymin, xmax, ymax = region.bbox()
    i0, i1 = math.floor(xmin / h), math.ceil(xmax / h)
    j0, j1 = math.floor(ymin / h), math.ceil(ymax / h)
    ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
    origins = np.column_stack([(ii.ravel() + 0.5) * h, (jj.ravel() + 0.5) * h])

    qpts, inside = _subsample_cells(origins, h, geom)
    counts = inside.sum(axis=1)
    keep = counts > 0
    origins, qpts, inside, counts = origins[keep], qpts[keep], inside[keep], counts[keep]
    full = counts == 16

    cells = []  # (center, area, size, boundary, qpts, qmask)

    def _emit(origin, pts, mask, size):
        count = int(mask.sum())
        if count == 0:
            return
        if count == 16:
            cells.append((origin, size * size, size, False, pts, mask))
            return
        center = pts[mask].mean(axis=0)
        if not bool(shapely.intersects_xy(geom, center[0], center[1])):
            # non-convex cut: snap to the inside subsample nearest the mean
            ins = pts[mask]
            center = ins[np.argmin(np.linalg.norm(ins - center, axis=1))]
        cells.append((center, count / 16.0 * size * size, size, True, pts, mask))

    for k in np.nonzero(full)[0]:
        cells.append((origins[k], h * h, h, False, qpts[k], inside[k]))

    cut_idx = np.nonzero(~full)[0]
    if refine_boundary and len(cut_idx) > 0:
        offsets = np.array([[-0.25, -0.25], [-0.25, 0.25], [0.25, -0.25], [0.25, 0.25]]) * h
        child_origins = (origins[cut_idx][:, None, :] + offsets[None, :, :]).reshape(-1, 2)
        cpts, cinside = _subsample_cells(child_origins, h / 2.0, geom)
        for k in range(len(child_origins)):
            _emit(child_origins[k], cpts[k], cinside[k], h / 2.0)
    else:
        for k in cut_idx:
            _emit(origins[k], qpts[k], inside[k], h)

    if len(cells) < min_cells:
        raise ResolutionTooCoarseError(
            f"only {len(cells)} cells at h = {h:.4g}; need at least {min_cells}"
        )
    centers = np.array([c[0] for c in cells])
    return CellMesh(
        centers=centers,
        areas=np.array([c[1] for c in cells]),
        sizes=np.array([c[2] for c in cells]),
        boundary=np.array([c[3] for c in cells], dtype=bool),
        qpts=np.stack([c[4] for c in cells]),
        qmask=np.stack([c[5] for c in cells]),
        h=h,
        region=region,
    )


def merge_meshes(meshes) -> CellMesh:
    """Concatenate component meshes (used for multi-resolution unions)."""
    regions = []
    for m in meshes:
        regions.extend(m.region.components)
    return CellMesh(
        centers=np.vstack([m.centers for m in meshes]),
        areas=np.concatenate([m.areas for m in meshes]),
        sizes=np.concatenate([m.sizes for m in meshes]),
        boundary=np.concatenate([m.boundary for m in meshes]),
        qpts=np.vstack([m.qpts for m in meshes]),
        qmask=np.vstack([m.qmask for m in meshes]),
        h=min(m.h for m in meshes),
        region=geometry.Region(tuple(regions)),
    )


@dataclass
class KernelMatrix:
    """Symmetric positive-definite mean-inverse-distance matrix."""

    matrix: np.ndarray
    mesh: CellMesh
    near_cutoff: float = NEAR_CUTOFF
    subsample_order: int = N_SUB

    @property
    def n(self) -> int:
        return len(self.matrix)


def _pair_quadrature(qa, ma, qb, mb) -> float:
    """Mean inverse distance between the inside points of two cells."""
    pa, pb = qa[ma], qb[mb]
    d = np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=2)
    return float(np.mean(1.0 / np.maximum(d, 1e-300)))


def _near_pairs(mesh: CellMesh):
    """Unordered index pairs with center distance below the near cutoff."""
    cut = NEAR_CUTOFF * float(mesh.sizes.max())
    tree = shapely.STRtree([shapely.Point(c) for c in mesh.centers])
    a, b = tree.query(tree.geometries, predicate="dwithin", distance=cut)
    sel = a < b
    a, b = a[sel], b[sel]
    d = np.linalg.norm(mesh.centers[a] - mesh.centers[b], axis=1)
    lim = NEAR_CUTOFF * np.maximum(mesh.sizes[a], mesh.sizes[b])
    keep = d < lim
    return a[keep], b[keep]


def _near_values(mesh: CellMesh, ia, ib) -> np.ndarray:
    """Subsampled kernel values for the near pairs, memoized by geometry class.

    Aligned full-cell pairs repeat the same relative geometry all over the
    grid, so their quadrature is computed once per (sizes, offset, masks) key.
    """
    vals = np.empty(len(ia))
    cache: dict = {}
    quantum = mesh.h / (2.0 * N_SUB)   # all grid positions are multiples
    for k in range(len(ia)):
        i, j = int(ia[k]), int(ib[k])
        off = mesh.centers[j] - mesh.centers[i]
        key = (
            round(mesh.sizes[i] / quantum),
            round(mesh.sizes[j] / quantum),
            round(off[0] / quantum),
            round(off[1] / quantum),
            mesh.qmask[i].tobytes(),
            mesh.qmask[j].tobytes(),
        )
        v = cache.get(key)
        if v is None:
            v = _pair_quadrature(mesh.qpts[i], mesh.qmask[i], mesh.qpts[j], mesh.qmask[j])
            cache[key] = v
        vals[k] = v
    return vals


def assemble_kernel(mesh: CellMesh, block: int = 512) -> KernelMatrix:
    """Assemble the dense kernel matrix for ``mesh``.

    Off-diagonal far entries are 1/|c_i - c_j|; pairs closer than three cell
    sizes use 4x4 product quadrature; the diagonal is the unit-square
    self-energy scaled to an effective square of side size*(A/size^2)^(1/2),
    i.e. K_ii = s0 / sqrt(A_i).  Shrinking the effective side (rather than
    the energy) keeps the matrix positive-definite at cut cells.
    """
    n = mesh.n_cells
    if n == 0:
        raise AssemblyError("empty mesh")
    cx, cy = mesh.centers[:, 0], mesh.centers[:, 1]
    K = np.empty((n, n))
    for s in range(0, n, block):
        e = min(s + block, n)
        d = np.hypot(cx[s:e, None] - cx[None, :], cy[s:e, None] - cy[None, :])
        np.reciprocal(d, out=d, where=d > 0)
        K[s:e] = d
    ia, ib = _near_pairs(mesh)
    if len(ia) and np.any(
        np.linalg.norm(mesh.centers[ia] - mesh.centers[ib], axis=1) < 1e-14
    ):
        raise AssemblyError("coincident cell centers")
    vals = _near_values(mesh, ia, ib)
    K[ia, ib] = vals
    K[ib, ia] = vals
    diag = SQUARE_SELF_ENERGY / np.sqrt(mesh.areas)
    K[np.arange(n), np.arange(n)] = diag
    return KernelMatrix(matrix=K, mesh=mesh)


def potential_at(mesh: CellMesh, masses: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Potential sum_i m_i <1/|x - cell_i|> at the given points.

    Far cells contribute the point kernel at the cell center; cells within
    three sizes of ``x`` are subsampled, so coincidence with a center never
    divides by zero.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = np.linalg.norm(pts[:, None, :] - mesh.centers[None, :, :], axis=2)  # (p, n)
    inv = 1.0 / np.maximum(d, 1e-300)
    near = d < NEAR_CUTOFF * mesh.sizes[None, :]
    for p, i in zip(*np.nonzero(near)):
        q = mesh.qpts[i][mesh.qmask[i]]
        dq = np.linalg.norm(q - pts[p], axis=1)
        inv[p, i] = np.mean(1.0 / np.maximum(dq, 1e-300))
    return inv @ masses
