"""Barrier field construction from the fused map.

The 3D map collapses to a 2.5D obstacle-proximity grid; cells near the zero
level become a labelled boundary; scaled distance transforms over that
boundary produce the object-aware barrier h (and its non-semantic baseline).
Consistency scales the slope of each object's distance cone, the stationarity
label enlarges the subtracted bias for likely-dynamic objects, and a cutoff
flattens the field far from obstacles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grids import Grid2D
from .mapping import GlobalTsdf, ObjectLibrary


@dataclass(frozen=True)
class CbfParams:
    theta_z: float = 1.0  # height window for the 2.5D projection (m)
    theta_zero: float = 0.15  # zero-level threshold (m)
    theta_cutoff: float = 1.8  # barrier cutoff (m)
    bias: float = 0.75  # robot-size buffer subtracted from distances (m)
    lambda_c: float = 3.0  # consistency slope factor
    lambda_s: float = 2.0  # stationarity bias factor, > 1

    def __post_init__(self):
        vals = (self.theta_z, self.theta_zero, self.theta_cutoff, self.bias, self.lambda_c, self.lambda_s)
        if min(vals) <= 0.0:
            raise ValueError("all barrier parameters must be positive")
        if self.lambda_s <= 1.0:
            raise ValueError("lambda_s must exceed 1")

    def bias_for(self, stationarity: int) -> float:
        return (self.lambda_s * (1 - stationarity) + stationarity) * self.bias


@dataclass
class LabeledBoundary:
    """Zero-level cells annotated with the owning object's labels."""

    cells: np.ndarray  # (N, 2) int grid indices
    positions: np.ndarray  # (N, 2) world cell centers
    owner_ids: np.ndarray  # (N,) int
    consistency: np.ndarray  # (N,) E[v] of the owner
    stationarity: np.ndarray  # (N,) {0, 1}

    def __len__(self) -> int:
        return self.cells.shape[0]


@dataclass
class CbfField:
    """Immutable barrier grid with bilinear value and finite-difference gradient queries."""

    grid: Grid2D
    params: CbfParams
    built_at: float = 0.0  # sim time of construction

    def query_h(self, x: float, y: float) -> float:
        v, _ = self.query_h_checked(x, y)
        return v

    def query_h_checked(self, x: float, y: float) -> tuple[float, bool]:
        """Interpolated barrier value and whether the query clamped to the edge."""
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError("query coordinates must be finite")
        v, clamped = self.grid.sample_bilinear(x, y)
        return float(v), bool(clamped)

    def query_grad(self, x: float, y: float) -> tuple[float, float]:
        """Central finite difference of the interpolated field, half-voxel step."""
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError("query coordinates must be finite")
        res = self.grid.resolution
        d = res / 4.0
        nx, ny = self.grid.dims
        # keep the probe stencil inside the interpolation domain
        x0, y0 = self.grid.origin + 0.5 * res
        x1 = x0 + (nx - 1) * res
        y1 = y0 + (ny - 1) * res
        cx = min(max(x, x0 + d), x1 - d)
        cy = min(max(y, y0 + d), y1 - d)
        gx = (self.grid.sample_bilinear(cx + d, cy)[0] - self.grid.sample_bilinear(cx - d, cy)[0]) / (2.0 * d)
        gy = (self.grid.sample_bilinear(cx, cy + d)[0] - self.grid.sample_bilinear(cx, cy - d)[0]) / (2.0 * d)
        return float(gx), float(gy)


def project_2p5d(global_tsdf: GlobalTsdf, theta_z: float) -> tuple[Grid2D, np.ndarray]:
    """Column-wise minimum magnitude of the 3D map over 0 < z <= theta_z.

    Returns the 2D grid and the per-cell owner id of the minimizing voxel.
    """
    res = global_tsdf.resolution
    z_centers = global_tsdf.origin[2] + (np.arange(global_tsdf.dims[2]) + 0.5) * res
    zsel = (z_centers > 0.0) & (z_centers <= theta_z)
    if not zsel.any():
        raise ValueError("no voxel layer falls inside the height window")
    mag = np.abs(global_tsdf.values[:, :, zsel])
    k_min = np.argmin(mag, axis=2)
    values = np.take_along_axis(mag, k_min[:, :, None], axis=2)[:, :, 0]
    owner = np.take_along_axis(global_tsdf.owner[:, :, zsel], k_min[:, :, None], axis=2)[:, :, 0]
    grid = Grid2D(origin=global_tsdf.origin[:2].copy(), resolution=res, values=values)
    return grid, owner


def extract_labeled_boundary(
    m25: Grid2D,
    owner: np.ndarray,
    theta_zero: float,
    library: ObjectLibrary,
    consistency_override: float | None = None,
) -> LabeledBoundary:
    """Cells at or below the zero-level threshold, labelled by their owner.

    Cells whose owner is missing from the library are dropped as stale.
    """
    sel = m25.values <= theta_zero
    ix, iy = np.nonzero(sel)
    oid = owner[ix, iy]
    ev = np.zeros(ix.shape[0])
    st = np.zeros(ix.shape[0], dtype=int)
    keep = np.zeros(ix.shape[0], dtype=bool)
    for n, o in enumerate(oid):
        rec = library.records.get(int(o))
        if rec is None:
            continue
        keep[n] = True
        ev[n] = rec.consistency.mean_consistency if consistency_override is None else consistency_override
        st[n] = rec.stationarity
    ix, iy, oid, ev, st = ix[keep], iy[keep], oid[keep], ev[keep], st[keep]
    xs = m25.origin[0] + (ix + 0.5) * m25.resolution
    ys = m25.origin[1] + (iy + 0.5) * m25.resolution
    return LabeledBoundary(
        cells=np.stack([ix, iy], axis=1),
        positions=np.stack([xs, ys], axis=1),
        owner_ids=oid.astype(int),
        consistency=ev,
        stationarity=st,
    )


def build_semantic_edf(boundary: LabeledBoundary, params: CbfParams, grid_spec: Grid2D) -> Grid2D:
    """Object-aware scaled distance field over the workspace grid.

    Per object: exact Euclidean distance to that object's boundary cells,
    scaled by lambda_c * E[v], minus the stationarity-dependent bias; the
    field is the pointwise minimum across objects. Grouping per object is
    exact because the labels are constant within an object.
    """
    out = np.full(grid_spec.dims, np.inf)
    if len(boundary) == 0:
        return Grid2D(origin=grid_spec.origin.copy(), resolution=grid_spec.resolution, values=out)
    res = grid_spec.resolution
    for oid in np.unique(boundary.owner_ids):
        sel = boundary.owner_ids == oid
        ev = boundary.consistency[sel][0]
        bias = params.bias_for(int(boundary.stationarity[sel][0]))
        mask = np.ones(grid_spec.dims, dtype=bool)
        cells = boundary.cells[sel]
        mask[cells[:, 0], cells[:, 1]] = False
        dist = ndimage.distance_transform_edt(mask, sampling=res)
        np.minimum(out, params.lambda_c * ev * dist - bias, out=out)
    return Grid2D(origin=grid_spec.origin.copy(), resolution=res, values=out)


def build_plain_edf(m25: Grid2D, theta_zero: float, params: CbfParams) -> Grid2D:
    """Non-semantic distance field: unscaled distance to all zero-level cells minus the bias."""
    sel = m25.values <= theta_zero
    if not sel.any():
        values = np.full(m25.dims, np.inf)
    else:
        dist = ndimage.distance_transform_edt(~sel, sampling=m25.resolution)
        values = dist - params.bias
    return Grid2D(origin=m25.origin.copy(), resolution=m25.resolution, values=values)


def build_cbf_field(edf: Grid2D, params: CbfParams, built_at: float = 0.0) -> CbfField:
    """Apply the cutoff: h = min(edf, theta_cutoff) pointwise."""
    values = np.minimum(edf.values, params.theta_cutoff)
    return CbfField(
        grid=Grid2D(origin=edf.origin.copy(), resolution=edf.resolution, values=values),
        params=params,
        built_at=built_at,
    )
