"""Object-level TSDF mapping: association, per-object fusion, global map.

Each mapped object keeps its own world-aligned truncated signed distance grid;
the joint scene map is the per-voxel minimum over objects. Because all grids
share one lattice, fusion is pure array slicing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .consistency import ConsistencyParams, GaussianBetaState, initial_state
from .grids import VoxelGrid3D, snap_to_lattice
from .world import SemanticPointCloud

FORBIDDEN_COST = 1.0e6


@dataclass
class MapParams:
    resolution: float = 0.05
    truncation: float = 0.3
    weight_cap: float = 100.0
    gate: float = 1.0


@dataclass
class Observation:
    """One instance-segmented group of labelled surface points."""

    instance_id: int
    class_id: int
    stationarity: int
    points: np.ndarray  # (N, 3)
    centroid: np.ndarray  # (3,)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass
class ObjectRecord:
    """A mapped object: pose summary, labels, consistency state, TSDF grid."""

    id: int
    class_id: int
    stationarity: int
    position: np.ndarray  # (3,) running centroid of integrated points
    heading: float
    consistency: GaussianBetaState
    tsdf: VoxelGrid3D
    n_points: int = 0


@dataclass
class GlobalTsdf:
    """Workspace-covering min-fused TSDF with per-voxel owning object id (-1 none)."""

    origin: np.ndarray  # (3,)
    resolution: float
    values: np.ndarray  # (nx, ny, nz)
    owner: np.ndarray  # (nx, ny, nz) int

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape


@dataclass
class ObjectLibrary:
    """Mutable collection of mapped objects plus the fixed workspace grid spec."""

    params: MapParams
    consistency_params: ConsistencyParams
    workspace: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    height: float  # z extent of the global grid
    records: dict[int, ObjectRecord] = field(default_factory=dict)
    next_id: int = 0

    def __post_init__(self):
        res = self.params.resolution
        xmin, ymin, xmax, ymax = self.workspace
        ox = snap_to_lattice(xmin, res)
        oy = snap_to_lattice(ymin, res)
        nx = int(np.ceil(round((xmax - ox) / res, 9)))
        ny = int(np.ceil(round((ymax - oy) / res, 9)))
        nz = int(np.ceil(round(self.height / res, 9)))
        self.grid_origin = np.array([ox, oy, 0.0])
        self.grid_dims = (nx, ny, nz)

    def objects(self) -> list[ObjectRecord]:
        return [self.records[k] for k in sorted(self.records)]


def segment_observations(cloud: SemanticPointCloud) -> list[Observation]:
    """Group cloud points by instance id; one observation per instance."""
    if len(cloud) == 0:
        return []
    out = []
    for inst in np.unique(cloud.instance_ids):
        mask = cloud.instance_ids == inst
        pts = cloud.points[mask]
        out.append(
            Observation(
                instance_id=int(inst),
                class_id=int(cloud.class_ids[mask][0]),
                stationarity=int(cloud.stationarity[mask][0]),
                points=pts,
                centroid=pts.mean(axis=0),
            )
        )
    return out


def associate_observations(
    observations: list[Observation],
    library: ObjectLibrary,
) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Match observations to mapped objects by horizontal centroid distance.

    Pairs with mismatched class or distance beyond the gate are forbidden.
    Among valid pairings the match count is maximized and total distance
    minimized (Hungarian assignment over a large-cost-padded matrix).

    Returns (matches [(obs_idx, object_id)], unmatched_obs_idx, unmatched_object_ids).
    """
    objs = library.objects()
    if not observations or not objs:
        return [], list(range(len(observations))), [o.id for o in objs]

    cost = np.full((len(observations), len(objs)), FORBIDDEN_COST)
    for i, ob in enumerate(observations):
        for j, rec in enumerate(objs):
            if ob.class_id != rec.class_id:
                continue
            d = float(np.hypot(ob.centroid[0] - rec.position[0], ob.centroid[1] - rec.position[1]))
            if d <= library.params.gate:
                cost[i, j] = d

    rows, cols = linear_sum_assignment(cost)
    matches = []
    matched_obs, matched_obj = set(), set()
    for r, c in zip(rows, cols):
        if cost[r, c] >= FORBIDDEN_COST:
            continue
        matches.append((int(r), objs[c].id))
        matched_obs.add(int(r))
        matched_obj.add(objs[c].id)
    unmatched_obs = [i for i in range(len(observations)) if i not in matched_obs]
    unmatched_objs = [o.id for o in objs if o.id not in matched_obj]
    return matches, unmatched_obs, unmatched_objs


def _band_samples(params: MapParams) -> np.ndarray:
    # sample offsets along the ray covering the truncation band; voxel pitch is
    # enough because every sample splats onto its full surrounding-center cube
    step = params.resolution
    n = int(np.ceil(params.truncation / step))
    return np.arange(-n, n + 1) * step


def integrate_observation(
    record: ObjectRecord,
    obs: Observation,
    sensor_origin,
    params: MapParams,
) -> ObjectRecord:
    """Projective TSDF update of one object from one matched observation.

    For every observed point, voxels traversed by the sensor ray within the
    truncation band receive the signed along-ray distance from the voxel
    center to the point (positive on the sensor side), clamped to the band and
    fused by a weighted running average with unit sample weight.
    """
    if len(obs) == 0:
        return record

    origin = np.asarray(sensor_origin, dtype=float)
    pts = obs.points
    rays = pts - origin[None, :]
    t_hit = np.linalg.norm(rays, axis=1)
    valid = t_hit > 1e-9
    pts, rays, t_hit = pts[valid], rays[valid], t_hit[valid]
    if pts.shape[0] == 0:
        return record
    dirs = rays / t_hit[:, None]

    tau = params.truncation
    # pad well beyond the band so a displaced re-observation still lands inside
    # the grid, where never-observed voxels read as free space (+truncation)
    pad = 2.0 * tau + 2.0 * params.resolution
    lo = pts.min(axis=0) - pad
    hi = pts.max(axis=0) + pad
    grid = record.tsdf.grown_to_include(lo, hi)

    offsets = _band_samples(params)
    # sample positions: (n_pts, n_samples, 3)
    t_samp = t_hit[:, None] + offsets[None, :]
    pos = origin[None, None, :] + t_samp[..., None] * dirs[:, None, :]

    n_pts, n_samp = t_samp.shape
    flat_pos = pos.reshape(-1, 3)
    # splat each band sample onto the 8 voxel centers surrounding it; the fan
    # is sparse vertically, so a one-voxel tube would leave unobserved gaps
    # right next to the surface and bias interpolated reads
    base = np.floor((flat_pos - grid.origin[None, :]) / grid.resolution - 0.5).astype(int)
    corner = np.array([[i & 1, (i >> 1) & 1, (i >> 2) & 1] for i in range(8)])
    vidx = (base[:, None, :] + corner[None, :, :]).reshape(-1, 3)
    ray_of = np.repeat(np.repeat(np.arange(n_pts), n_samp), 8)

    dims = np.array(grid.dims)
    inside = np.all((vidx >= 0) & (vidx < dims[None, :]), axis=1)
    ray_of = ray_of[inside]
    vidx = vidx[inside]

    centers = grid.origin[None, :] + (vidx + 0.5) * grid.resolution
    t_proj = np.einsum("ij,ij->i", centers - origin[None, :], dirs[ray_of])
    sdf = t_hit[ray_of] - t_proj
    in_band = np.abs(sdf) <= tau
    ray_of, vidx, sdf = ray_of[in_band], vidx[in_band], sdf[in_band]

    # one sample per (ray, voxel): drop duplicate stamps from adjacent steps
    flat = np.ravel_multi_index((vidx[:, 0], vidx[:, 1], vidx[:, 2]), grid.dims)
    key = ray_of.astype(np.int64) * int(np.prod(grid.dims)) + flat
    _, keep = np.unique(key, return_index=True)
    flat = flat[keep]
    sdf = sdf[keep]

    sums = np.zeros(int(np.prod(grid.dims)))
    counts = np.zeros(int(np.prod(grid.dims)))
    np.add.at(sums, flat, sdf)
    np.add.at(counts, flat, 1.0)
    touched = counts > 0

    v = grid.values.reshape(-1)
    w = grid.weights.reshape(-1)
    v[touched] = (v[touched] * w[touched] + sums[touched]) / (w[touched] + counts[touched])
    w[touched] = np.minimum(w[touched] + counts[touched], params.weight_cap)
    grid.values = v.reshape(grid.dims)
    grid.weights = w.reshape(grid.dims)

    n_new = pts.shape[0]
    total = record.n_points + n_new
    record.position = (record.position * record.n_points + pts.sum(axis=0)) / total
    record.n_points = total
    record.tsdf = grid
    return record


def spawn_object(
    obs: Observation,
    library: ObjectLibrary,
    sensor_origin,
) -> ObjectRecord:
    """Create a new object from an unmatched observation and integrate it."""
    if len(obs) == 0:
        raise ValueError("cannot spawn from an empty observation")
    oid = library.next_id
    library.next_id += 1
    if oid in library.records:
        raise RuntimeError(f"duplicate object id {oid}")
    params = library.params
    tau = params.truncation
    pad = 2.0 * tau
    grid = VoxelGrid3D.empty(
        obs.points.min(axis=0) - pad,
        params.resolution,
        np.ceil((np.ptp(obs.points, axis=0) + 2 * pad) / params.resolution).astype(int) + 1,
        fill=tau,
    )
    grid._background = tau
    rec = ObjectRecord(
        id=oid,
        class_id=obs.class_id,
        stationarity=obs.stationarity,
        position=obs.centroid.copy(),
        heading=0.0,
        consistency=initial_state(obs.stationarity, library.consistency_params),
        tsdf=grid,
        n_points=0,
    )
    integrate_observation(rec, obs, sensor_origin, params)
    library.records[oid] = rec
    return rec


def remove_object(library: ObjectLibrary, object_id: int) -> None:
    if object_id not in library.records:
        raise KeyError(f"no object with id {object_id}")
    del library.records[object_id]


def fuse_global_tsdf(library: ObjectLibrary) -> GlobalTsdf:
    """Per-voxel minimum over object TSDFs across the workspace grid.

    Voxels an object never observed contribute the truncation value. The
    owner is the object attaining a value strictly below the background,
    lowest id winning ties (objects are visited in ascending id order).
    """
    tau = library.params.truncation
    res = library.params.resolution
    values = np.full(library.grid_dims, tau, dtype=np.float64)
    owner = np.full(library.grid_dims, -1, dtype=np.int32)
    g_lo = np.round(library.grid_origin / res).astype(int)
    g_dims = np.array(library.grid_dims)

    for rec in library.objects():
        o_lo = rec.tsdf.index_origin()
        o_dims = np.array(rec.tsdf.dims)
        lo = np.maximum(o_lo, g_lo)
        hi = np.minimum(o_lo + o_dims, g_lo + g_dims)
        if np.any(lo >= hi):
            continue
        gsl = tuple(slice(lo[a] - g_lo[a], hi[a] - g_lo[a]) for a in range(3))
        osl = tuple(slice(lo[a] - o_lo[a], hi[a] - o_lo[a]) for a in range(3))
        cand = np.where(rec.tsdf.weights[osl] > 0.0, rec.tsdf.values[osl], tau)
        better = cand < values[gsl]
        values[gsl] = np.where(better, cand, values[gsl])
        owner_region = owner[gsl]
        owner_region[better] = rec.id
        owner[gsl] = owner_region

    return GlobalTsdf(origin=library.grid_origin.copy(), resolution=res, values=values, owner=owner)


def export_global_tsdf(global_tsdf: GlobalTsdf, path_stem: str) -> tuple[str, str]:
    """Write the fused grid as raw float32 plus a plain-text header.

    Produces ``<stem>.f32`` (C-order values) and ``<stem>.meta.txt`` with
    origin, resolution and dims, one ``key: value`` per line.
    """
    data_path = f"{path_stem}.f32"
    meta_path = f"{path_stem}.meta.txt"
    global_tsdf.values.astype(np.float32).tofile(data_path)
    with open(meta_path, "w", encoding="utf-8") as fh:
        fh.write(f"origin: {global_tsdf.origin[0]} {global_tsdf.origin[1]} {global_tsdf.origin[2]}\n")
        fh.write(f"resolution: {global_tsdf.resolution}\n")
        fh.write(f"dims: {global_tsdf.dims[0]} {global_tsdf.dims[1]} {global_tsdf.dims[2]}\n")
        fh.write("dtype: float32\norder: C\n")
    return data_path, meta_path
