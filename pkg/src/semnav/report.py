"""Run artifacts: trajectory CSV, metrics text, field snapshots, and an SVG map.

The SVG shows object footprints, the zero and cutoff contours of the final
barrier field (marching squares over cell centers), and the driven path as a
single polyline.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from .barrier import CbfField
from .geometry import rot2d
from .runner import Metrics, RunRecord, compute_metrics


def trajectory_csv_lines(record: RunRecord) -> list[str]:
    obj_ids = sorted({oid for row in record.rows for oid in row.object_ev})
    header = "t,x,y,theta,vx,vy,omega,h,solver_status,max_slack" + "".join(f",obj{oid}_ev" for oid in obj_ids)
    lines = [header]
    for row in record.rows:
        cells = [
            repr(row.t),
            repr(row.true_pose.x),
            repr(row.true_pose.y),
            repr(row.true_pose.theta),
            repr(row.input.vx),
            repr(row.input.vy),
            repr(row.input.omega),
            repr(row.h),
            row.solver_status,
            repr(row.max_slack),
        ]
        for oid in obj_ids:
            ev = row.object_ev.get(oid)
            cells.append("" if ev is None else repr(ev))
        lines.append(",".join(cells))
    return lines


def write_trajectory_csv(record: RunRecord, path: str | Path) -> None:
    Path(path).write_text("\n".join(trajectory_csv_lines(record)) + "\n", encoding="utf-8")


def write_metrics(metrics: Metrics, path: str | Path) -> None:
    lines = [
        f"goal_reached: {metrics.goal_reached}",
        f"time_to_goal: {metrics.time_to_goal if metrics.time_to_goal is not None else 'n/a'}",
        f"path_length: {metrics.path_length:.4f}",
        f"min_h: {metrics.min_h:.4f}",
        f"ticks_h_negative: {metrics.ticks_h_negative}",
        f"degraded_ticks: {metrics.degraded_ticks}",
        f"collision_ticks: {metrics.collision_ticks}",
        f"mean_solve_time_s: {metrics.mean_solve_time:.6f}",
        f"mean_tick_time_s: {metrics.mean_tick_time:.6f}",
        f"max_slack: {metrics.max_slack:.6g}",
    ]
    for oid in sorted(metrics.object_ev_min):
        lines.append(f"obj{oid}_ev_range: [{metrics.object_ev_min[oid]:.4f}, {metrics.object_ev_max[oid]:.4f}]")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_field_csv(field: CbfField, path: str | Path) -> None:
    xs, ys = field.grid.cell_centers()
    lines = ["ix,iy,x,y,h"]
    for ix in range(field.grid.dims[0]):
        for iy in range(field.grid.dims[1]):
            lines.append(f"{ix},{iy},{float(xs[ix])!r},{float(ys[iy])!r},{float(field.grid.values[ix, iy])!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def marching_squares(field: CbfField, level: float) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Level-set segments of the bilinear field, one or two per crossing cell.

    Works on the cell-center lattice; each lattice square contributes
    linearly interpolated edge crossings joined into segments.
    """
    values = field.grid.values - level
    xs, ys = field.grid.cell_centers()
    nx, ny = values.shape
    segments = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            corners = (
                (values[i, j], xs[i], ys[j]),
                (values[i + 1, j], xs[i + 1], ys[j]),
                (values[i + 1, j + 1], xs[i + 1], ys[j + 1]),
                (values[i, j + 1], xs[i], ys[j + 1]),
            )
            crossings = []
            for a in range(4):
                v0, x0, y0 = corners[a]
                v1, x1, y1 = corners[(a + 1) % 4]
                if (v0 < 0.0) != (v1 < 0.0):
                    t = v0 / (v0 - v1)
                    crossings.append((x0 + t * (x1 - x0), y0 + t * (y1 - y0)))
            if len(crossings) == 2:
                segments.append((crossings[0], crossings[1]))
            elif len(crossings) == 4:  # saddle: pair edge crossings in order
                segments.append((crossings[0], crossings[1]))
                segments.append((crossings[2], crossings[3]))
    return segments


def _svg_coords(x: float, y: float, workspace, scale: float, margin: float) -> tuple[float, float]:
    xmin, ymin, _, ymax = workspace
    return margin + (x - xmin) * scale, margin + (ymax - y) * scale


def write_run_svg(record: RunRecord, path: str | Path, scale: float = 80.0) -> None:
    """Render footprints, barrier contours, and the trajectory to an SVG file."""
    scenario = record.scenario
    workspace = scenario.workspace
    margin = 10.0
    width = (workspace[2] - workspace[0]) * scale + 2 * margin
    height = (workspace[3] - workspace[1]) * scale + 2 * margin

    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=f"{width:.0f}",
        height=f"{height:.0f}",
        viewBox=f"0 0 {width:.0f} {height:.0f}",
    )
    ET.SubElement(svg, "rect", x="0", y="0", width=f"{width:.0f}", height=f"{height:.0f}", fill="white")

    def pt(x, y):
        px, py = _svg_coords(x, y, workspace, scale, margin)
        return f"{px:.2f},{py:.2f}"

    # object footprints at their final simulated pose
    world = list(scenario.objects)
    applied: set[int] = set()
    from .world import apply_scene_events

    world = apply_scene_events(world, scenario.events, applied, float("inf"))
    for obj in world:
        rot = rot2d(obj.yaw)
        hx, hy = obj.half_extents[0], obj.half_extents[1]
        corners = [rot @ np.array(c) + np.array(obj.center) for c in ((-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy))]
        points = " ".join(pt(c[0], c[1]) for c in corners)
        fill = "#9aa5b1" if obj.stationarity == 1 else "#d9a66c"
        ET.SubElement(svg, "polygon", points=points, fill=fill, stroke="#333333")

    # barrier contours from the final field: zero level and cutoff level
    if record.final_field is not None:
        cutoff = record.final_field.params.theta_cutoff
        for level, color in ((0.0, "#e64980"), (cutoff - 1e-6, "#f59f00")):
            parts = []
            for (x0, y0), (x1, y1) in marching_squares(record.final_field, level):
                parts.append(f"M {pt(x0, y0).replace(',', ' ')} L {pt(x1, y1).replace(',', ' ')}")
            if parts:
                ET.SubElement(svg, "path", d=" ".join(parts), stroke=color, fill="none")

    # one trajectory polyline per run
    pts = [pt(r.true_pose.x, r.true_pose.y) for r in record.rows]
    if record.final_pose is not None:
        pts.append(pt(record.final_pose.x, record.final_pose.y))
    if pts:
        ET.SubElement(svg, "polyline", points=" ".join(pts), fill="none", stroke="#1864ab")

    for pose, color in ((scenario.start, "#2b8a3e"), (scenario.goal, "#c92a2a")):
        px, py = _svg_coords(pose[0], pose[1], workspace, scale, margin)
        ET.SubElement(svg, "circle", cx=f"{px:.2f}", cy=f"{py:.2f}", r="4", fill=color)

    ET.ElementTree(svg).write(path, encoding="utf-8", xml_declaration=True)


def emit_outputs(record: RunRecord, out_dir: str | Path) -> Metrics:
    """Write the standard artifact set for one run and return its metrics."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics = compute_metrics(record)
    write_trajectory_csv(record, out / "trajectory.csv")
    write_metrics(metrics, out / "metrics.txt")
    for tick, snapshot in sorted(record.field_snapshots.items()):
        write_field_csv(snapshot, out / f"field_t{tick:04d}.csv")
    if record.final_field is not None:
        write_field_csv(record.final_field, out / "field_final.csv")
    write_run_svg(record, out / "run.svg")
    return metrics
