"""Batch orchestration: single-subject runs, cohort reports, plots, CLI.

Outputs are deterministic: JSON is emitted full-precision with sorted keys,
CSV values are millimeter-rounded (the one place rounding happens), subjects
are processed by a worker pool but assembled in id order, so reruns and
thread-count changes are byte-identical.

Exit codes: 0 success, 2 input/validation failure, 3 geometry failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cohortstats as cs
from . import morphometry as mm
from .errors import EmptyMask, LineaMorphError
from .interslice import interpolate_stack, load_sparse_delineation
from .phantom import PhantomSpec, generate_phantom
from .volume import (
    LandmarkSet,
    VoxelMask,
    load_landmarks,
    load_mask,
    save_landmarks,
    save_mask,
    validate_mask,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_GEOMETRY = 3

REPORT_VARIABLES = (
    "sagitta_mm",
    "length_mm",
    "halfway_xiph_umb_mm",
    "above3cm_mm",
    "at_umbilicus_mm",
    "below2cm_mm",
    "halfway_umb_pubis_mm",
    "max_width_mm",
    "max_ird_mm",
)
FACTORS = ("age_group", "sex", "bmi_group")
REPRESENTATIVE_VARIABLES = ("length_mm", "sagitta_mm", "max_width_mm", "max_ird_mm")


@dataclass
class RunConfig:
    mask_path: str | None = None
    landmarks_path: str | None = None
    manifest_path: str | None = None
    out_dir: str = "."
    landmark_offset_mode: str = "arc"
    closing_enabled: bool = False
    emit: tuple = ("json", "csv", "svg")
    threads: int | None = None
    seed: int = 0

    def resolved_threads(self) -> int:
        env = os.environ.get("LINEAMORPH_THREADS")
        if env:
            return max(1, int(env))
        if self.threads:
            return max(1, self.threads)
        return min(8, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------
def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) else v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(obj, path) -> None:
    Path(path).write_text(
        json.dumps(_jsonify(obj), sort_keys=True, indent=1) + "\n"
    )


def _round_mm(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return str(int(round(float(v))))


def write_profile_csv(profile: mm.WidthProfile, path) -> None:
    """Per-slice CSV, mm-rounded: z_mm, t, width_mm, ird_mm, status."""
    slice_t = profile.normalized["slice_t"] if profile.normalized else None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["z_mm", "t", "width_mm", "ird_mm", "status"])
        for i in range(profile.z_mm.size):
            t = f"{slice_t[i]:.4f}" if slice_t is not None else ""
            writer.writerow(
                [
                    _round_mm(profile.z_mm[i]),
                    t,
                    _round_mm(profile.width_mm[i]),
                    _round_mm(profile.ird_mm[i]),
                    str(profile.status[i]),
                ]
            )


# ---------------------------------------------------------------------------
# SVG plotting (self-contained, no external resources)
# ---------------------------------------------------------------------------
_PALETTE = ("#1f6fb4", "#c4452c", "#3b8a4e", "#8355a0", "#b58a1f", "#3aa0a8")


def _svg_header(width: int, height: int) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]


def _polyline(xs, ys, color, width=1.5, dash=None, opacity=1.0) -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<polyline points="{pts}" fill="none" stroke="{color}" '
        f'stroke-width="{width}" stroke-opacity="{opacity:.2f}"{dash_attr}/>'
    )


def _band(xs, lo, hi, color, opacity=0.18) -> str:
    fwd = [f"{x:.2f},{y:.2f}" for x, y in zip(xs, hi)]
    back = [f"{x:.2f},{y:.2f}" for x, y in zip(xs[::-1], lo[::-1])]
    return (
        f'<polygon points="{" ".join(fwd + back)}" fill="{color}" '
        f'fill-opacity="{opacity:.2f}" stroke="none"/>'
    )


def _text(x, y, s, size=11, anchor="middle", rotate=None, color="#222222") -> str:
    rot = f' transform="rotate({rotate} {x:.1f} {y:.1f})"' if rotate else ""
    return (
        f'<text x="{x:.1f}" y="{y:.1f}" font-family="sans-serif" '
        f'font-size="{size}" fill="{color}" text-anchor="{anchor}"{rot}>{s}</text>'
    )


def group_width_curves_svg(
    curves_by_group: dict, landmark_ticks: dict, path, title: str
) -> None:
    """Mean width vs. normalized height per group with a +/-1 sd band.

    ``curves_by_group`` maps group label -> (n_subjects, 1001) width array;
    ``landmark_ticks`` maps tick label -> mean t position.
    """
    W, H = 720, 420
    ml, mr, mt, mb = 60, 20, 40, 50
    pw, ph = W - ml - mr, H - mt - mb

    all_vals = np.concatenate([np.ravel(v) for v in curves_by_group.values()])
    y_max = max(1.0, float(np.nanmax(all_vals)) * 1.15)
    t = np.linspace(0.0, 1.0, mm.NORMALIZED_SAMPLES)

    def sx(tv):
        return ml + tv * pw

    def sy(wv):
        return mt + ph * (1.0 - wv / y_max)

    parts = _svg_header(W, H)
    parts.append(_text(W / 2, 22, title, size=14))
    parts.append(
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#444444" stroke-width="1"/>'
    )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(_text(sx(frac), H - mb + 16, f"{frac:.2f}", size=10))
        wv = frac * y_max
        parts.append(_text(ml - 8, sy(wv) + 4, f"{wv:.0f}", size=10, anchor="end"))
    parts.append(_text(W / 2, H - 12, "normalized height t (0 = xiphoid, 1 = pubis)", size=11))
    parts.append(_text(16, mt + ph / 2, "width (mm)", size=11, rotate=-90, anchor="middle"))

    for label, tick_t in sorted(landmark_ticks.items()):
        x = sx(tick_t)
        parts.append(
            _polyline([x, x], [mt, mt + ph], "#999999", width=0.8, dash="4,4")
        )
        parts.append(_text(x, mt - 6, label, size=9, color="#666666"))

    for idx, (label, arr) in enumerate(sorted(curves_by_group.items())):
        color = _PALETTE[idx % len(_PALETTE)]
        mean = np.nanmean(arr, axis=0)
        sd = np.nanstd(arr, axis=0, ddof=1) if arr.shape[0] > 1 else np.zeros_like(mean)
        xs = [sx(v) for v in t]
        parts.append(
            _band(xs, [sy(v) for v in mean - sd], [sy(v) for v in mean + sd], color)
        )
        parts.append(_polyline(xs, [sy(v) for v in mean], color, width=2.0))
        parts.append(
            _text(ml + pw - 6, mt + 16 + 14 * idx, f"{label} (n={arr.shape[0]})",
                  size=11, anchor="end", color=color)
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def _corr_color(r: float | None) -> str:
    """White at 0, saturated blue at +1, saturated red at -1; gray undefined."""
    if r is None:
        return "#cccccc"
    mag = min(1.0, abs(r))
    if r >= 0:
        base = (31, 111, 180)   # blue
    else:
        base = (196, 69, 44)    # red
    rr = round(255 + (base[0] - 255) * mag)
    gg = round(255 + (base[1] - 255) * mag)
    bb = round(255 + (base[2] - 255) * mag)
    return f"#{rr:02x}{gg:02x}{bb:02x}"


def correlation_heatmap_svg(matrix: cs.CorrelationMatrix, path) -> None:
    names = matrix.variables
    n = len(names)
    cell = 26
    ml, mt = 170, 170
    W = ml + n * cell + 20
    H = mt + n * cell + 20

    parts = _svg_header(W, H)
    for i, name in enumerate(names):
        parts.append(
            _text(ml - 6, mt + i * cell + cell * 0.7, name, size=10, anchor="end")
        )
        parts.append(
            _text(ml + i * cell + cell / 2, mt - 8, name, size=10,
                  anchor="start", rotate=-60)
        )
    for i in range(n):
        for j in range(n):
            r = float(matrix.r[i, j]) if matrix.defined[i, j] else None
            color = _corr_color(r)
            x, y = ml + j * cell, mt + i * cell
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="{color}" stroke="#ffffff" stroke-width="1"/>'
            )
            if r is None:
                parts.append(_text(x + cell / 2, y + cell * 0.7, "x", size=10))
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# mesh export (presentation only; never feeds metrics)
# ---------------------------------------------------------------------------
def compute_mesh(mask: VoxelMask, smooth_factor: float = 0.5):
    """Marching-cubes isosurface at 0.5 occupancy plus one Laplacian pass."""
    from skimage.measure import marching_cubes

    if mask.occupied_count == 0:
        raise EmptyMask("cannot mesh an empty mask")
    vol = np.pad(mask.data.astype(np.float32), 1)
    sz, sy, sx = mask.spacing[2], mask.spacing[1], mask.spacing[0]
    verts, faces, _, _ = marching_cubes(vol, level=0.5, spacing=(sz, sy, sx))
    # padded (z, y, x) voxel frame -> physical (x, y, z)
    verts = verts[:, ::-1]
    verts += np.asarray(mask.origin) - np.array([0.5 * sx, 0.5 * sy, 0.5 * sz])

    neighbors: dict[int, set[int]] = {}
    for tri in faces:
        for u, v in ((0, 1), (1, 2), (2, 0)):
            neighbors.setdefault(tri[u], set()).add(tri[v])
            neighbors.setdefault(tri[v], set()).add(tri[u])
    smoothed = verts.copy()
    for idx, nbrs in neighbors.items():
        centroid = verts[list(nbrs)].mean(axis=0)
        smoothed[idx] = verts[idx] + smooth_factor * (centroid - verts[idx])
    return smoothed, faces


def render_mesh(mask: VoxelMask, path, smooth_factor: float = 0.5) -> tuple[int, int]:
    """Write the smoothed isosurface as ASCII OBJ; returns (n_verts, n_faces)."""
    verts, faces = compute_mesh(mask, smooth_factor)
    lines = ["# lineamorph surface export"]
    for v in verts:
        lines.append(f"v {v[0]:.6f} {v[1]:.6f} {v[2]:.6f}")
    for f in faces:
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    Path(path).write_text("\n".join(lines) + "\n")
    return len(verts), len(faces)


# ---------------------------------------------------------------------------
# single-subject run
# ---------------------------------------------------------------------------
def _apply_closing(mask: VoxelMask) -> VoxelMask:
    from scipy.ndimage import binary_closing, generate_binary_structure

    closed = binary_closing(mask.data, structure=generate_binary_structure(3, 1))
    return VoxelMask(dims=mask.dims, spacing=mask.spacing, origin=mask.origin,
                     data=closed)


def measure_subject(
    mask: VoxelMask, landmarks: LandmarkSet, config: RunConfig
) -> tuple[mm.MetricsRecord, mm.MidlineCurve, mm.WidthProfile]:
    if config.closing_enabled:
        mask = _apply_closing(mask)
    return mm.subject_metrics(
        mask, landmarks, offset_mode=config.landmark_offset_mode
    )


def run_measure(config: RunConfig) -> int:
    """Measure one subject and write metrics JSON / per-slice CSV."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        mask = load_mask(config.mask_path)
        landmarks = load_landmarks(config.landmarks_path)
    except LineaMorphError as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    report = validate_mask(mask, landmarks)
    if not report.ok:
        for issue in report.issues:
            print(f"error: validation: {issue.code}: {issue.message}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        record, curve, profile = measure_subject(mask, landmarks, config)
    except LineaMorphError as exc:
        print(f"error: geometry: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY

    if "json" in config.emit:
        write_json(
            {"metrics": record.to_dict(), "validation": {
                "occupied_voxels": report.occupied_voxel_count,
                "components": report.connected_component_count,
            }},
            out_dir / "metrics.json",
        )
    if "csv" in config.emit:
        write_profile_csv(profile, out_dir / "slices.csv")
    if "svg" in config.emit:
        ticks = {name: lw.t for name, lw in record.landmarks.as_dict().items()}
        group_width_curves_svg(
            {"subject": profile.normalized["width_mm"][None, :]},
            ticks,
            out_dir / "width_profile.svg",
            "width along the normalized height",
        )
    if "mesh" in config.emit:
        render_mesh(mask, out_dir / "surface.obj")
    return EXIT_OK


# ---------------------------------------------------------------------------
# cohort run
# ---------------------------------------------------------------------------
def _read_manifest(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"id", "age", "sex", "bmi", "mask_path", "landmarks_path"}
        missing = required - set(reader.fieldnames or ())
        if missing:
            raise LineaMorphError(f"manifest missing columns: {sorted(missing)}")
        for row in reader:
            rows.append(row)
    return rows


def _process_subject(row: dict, base_dir: Path, config: RunConfig):
    mask = load_mask(base_dir / row["mask_path"])
    landmarks = load_landmarks(base_dir / row["landmarks_path"])
    report = validate_mask(mask, landmarks)
    if not report.ok:
        codes = ",".join(i.code for i in report.issues if i.severity == "error")
        raise LineaMorphError(f"validation failed: {codes}")
    record, curve, profile = measure_subject(mask, landmarks, config)
    covariates = {
        k: float(v)
        for k, v in row.items()
        if k not in ("id", "age", "sex", "bmi", "mask_path", "landmarks_path")
        and v not in (None, "")
    }
    subject = cs.SubjectRecord(
        id=row["id"],
        age_years=float(row["age"]),
        sex=row["sex"],
        bmi_kg_m2=float(row["bmi"]),
        covariates=covariates,
        metrics=record.to_dict(),
    )
    ticks = {name: lw.t for name, lw in record.landmarks.as_dict().items()}
    return subject, profile.normalized["width_mm"], ticks


def run_cohort(config: RunConfig) -> int:
    """Batch-measure a cohort manifest and emit the statistics report + plots.

    Per-subject failures are quarantined into the report's errors section and
    the run continues; the exit code stays 0 unless the manifest itself is
    unreadable.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        rows = _read_manifest(config.manifest_path)
    except (OSError, LineaMorphError) as exc:
        print(f"error: manifest: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    base_dir = Path(config.manifest_path).parent

    results: dict[str, tuple] = {}
    errors: dict[str, dict] = {}

    def work(row):
        try:
            return row["id"], _process_subject(row, base_dir, config), None
        except Exception as exc:  # quarantined, run continues
            return row["id"], None, {"error": type(exc).__name__, "message": str(exc)}

    with ThreadPoolExecutor(max_workers=config.resolved_threads()) as pool:
        for sid, ok, err in pool.map(work, rows):
            if err is None:
                results[sid] = ok
            else:
                errors[sid] = err
                print(f"warning: subject {sid} quarantined: {err['message']}",
                      file=sys.stderr)

    subject_ids = sorted(results)
    subjects = [results[sid][0] for sid in subject_ids]
    report = {
        "n_manifest": len(rows),
        "n_analyzed": len(subjects),
        "n_quarantined": len(errors),
        "errors": {sid: errors[sid] for sid in sorted(errors)},
    }

    if subjects:
        report["summary"] = _summaries(subjects)
        report["comparisons"] = _comparisons(subjects)
        report["representatives"] = _representatives(subjects)
        var_table = _variable_table(subjects)
        corr = cs.pearson_matrix(var_table)
        report["correlations"] = corr.to_dict()
        report["subjects"] = {
            s.id: {"age": s.age_years, "sex": s.sex, "bmi": s.bmi_kg_m2,
                   **s.metrics} for s in subjects
        }
        if "csv" in config.emit:
            _write_subjects_csv(subjects, out_dir / "subjects.csv")
        if "svg" in config.emit:
            correlation_heatmap_svg(corr, out_dir / "correlation_matrix.svg")
            _emit_group_plots(subjects, results, out_dir)

    write_json(report, out_dir / "report.json")
    return EXIT_OK


def _write_subjects_csv(subjects, path) -> None:
    """One mm-rounded row per analyzed subject."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "age", "sex", "bmi"] + list(REPORT_VARIABLES))
        for s in subjects:
            row = [s.id, s.age_years, s.sex, s.bmi_kg_m2]
            row += [_round_mm(s.value(v)) for v in REPORT_VARIABLES]
            writer.writerow(row)


def _variable_table(subjects) -> dict:
    names = ["age", "bmi"] + list(REPORT_VARIABLES)
    covariate_names = sorted({k for s in subjects for k in s.covariates})
    names += covariate_names
    table = {}
    for name in names:
        vals = []
        for s in subjects:
            v = s.value(name)
            vals.append(np.nan if v is None else float(v))
        table[name] = np.asarray(vals)
    return table


def _summaries(subjects) -> dict:
    out = {}
    for name in ("age", "bmi") + REPORT_VARIABLES:
        vals = [s.value(name) for s in subjects]
        vals = [v for v in vals if v is not None and not math.isnan(v)]
        if vals:
            out[name] = cs.summarize(vals)
    return out


def _comparisons(subjects) -> dict:
    out = {}
    for factor in FACTORS:
        per_factor = {}
        for variable in REPORT_VARIABLES:
            entry = {}
            groups: dict[str, list[float]] = {}
            for s in subjects:
                label = cs.assign_groups(s)
                level = {"sex": label.sex, "age_group": str(label.age_group),
                         "bmi_group": label.bmi_group}[factor]
                v = s.value(variable)
                if v is not None and not math.isnan(v):
                    groups.setdefault(level, []).append(float(v))
            entry["groups"] = {
                level: cs.summarize(vals) for level, vals in sorted(groups.items())
            }
            try:
                entry["test"] = cs.compare(variable, factor, subjects).to_dict()
            except LineaMorphError as exc:
                entry["test"] = {"error": type(exc).__name__, "message": str(exc)}
            per_factor[variable] = entry
        out[factor] = per_factor
    return out


def _representatives(subjects) -> dict:
    out = {}
    for factor in FACTORS:
        levels: dict[str, list] = {}
        for s in subjects:
            label = cs.assign_groups(s)
            level = {"sex": label.sex, "age_group": str(label.age_group),
                     "bmi_group": label.bmi_group}[factor]
            levels.setdefault(level, []).append(s)
        out[factor] = {
            level: cs.representative_subject(members, REPRESENTATIVE_VARIABLES)
            for level, members in sorted(levels.items())
        }
    return out


def _emit_group_plots(subjects, results, out_dir: Path) -> None:
    curves = {s.id: results[s.id][1] for s in subjects}
    all_ticks = [results[s.id][2] for s in subjects]
    mean_ticks = {}
    for name in mm.LANDMARK_LEVELS:
        vals = [t[name] for t in all_ticks if name in t]
        if vals:
            mean_ticks[name] = float(np.mean(vals))
    mean_ticks["xiphoid"] = 0.0
    mean_ticks["pubis"] = 1.0

    for factor in FACTORS:
        by_group: dict[str, list] = {}
        for s in subjects:
            label = cs.assign_groups(s)
            level = {"sex": label.sex, "age_group": str(label.age_group),
                     "bmi_group": label.bmi_group}[factor]
            by_group.setdefault(level, []).append(curves[s.id])
        arrays = {level: np.vstack(v) for level, v in by_group.items()}
        group_width_curves_svg(
            arrays,
            mean_ticks,
            out_dir / f"width_by_{factor}.svg",
            f"mean width by {factor} (band: +/-1 sd)",
        )


# ---------------------------------------------------------------------------
# phantom / interp commands
# ---------------------------------------------------------------------------
def run_phantom(spec_path, out_dir) -> int:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        spec = PhantomSpec.from_json(Path(spec_path).read_text())
    except (OSError, json.JSONDecodeError, LineaMorphError) as exc:
        print(f"error: spec: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    mask, landmarks, gt = generate_phantom(spec)
    save_mask(mask, out_dir / "phantom.lmh")
    save_landmarks(landmarks, out_dir / "phantom_landmarks.json")
    max_w, max_t = gt.max_width()
    write_json(
        {
            "length_mm": gt.length_mm,
            "sagitta_mm": gt.sagitta_mm,
            "t_umbilicus": gt.t_umbilicus,
            "max_width_mm": max_w,
            "max_width_t": max_t,
            "max_ird_mm": gt.max_ird(),
            "landmark_levels": gt.landmark_levels(),
        },
        out_dir / "ground_truth.json",
    )
    return EXIT_OK


def run_interp(sparse_path, out_path, closing: bool) -> int:
    try:
        sparse = load_sparse_delineation(sparse_path)
    except LineaMorphError as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        dense = interpolate_stack(sparse, closing=closing)
    except LineaMorphError as exc:
        print(f"error: geometry: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    save_mask(dense, out_path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lineamorph",
        description="Midline-sheet morphometry: measurement, reconstruction, "
                    "cohort statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="measure one subject")
    p.add_argument("--mask", required=True)
    p.add_argument("--landmarks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--offset-mode", choices=("arc", "axial"), default="arc")
    p.add_argument("--closing", action="store_true")
    p.add_argument("--emit", default="json,csv,svg")

    p = sub.add_parser("cohort", help="measure a cohort manifest and report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--offset-mode", choices=("arc", "axial"), default="arc")
    p.add_argument("--closing", action="store_true")
    p.add_argument("--emit", default="json,csv,svg")

    p = sub.add_parser("phantom", help="generate a synthetic ribbon from a spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("interp", help="fill between delineated slices")
    p.add_argument("--sparse", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--closing", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "measure":
        config = RunConfig(
            mask_path=args.mask,
            landmarks_path=args.landmarks,
            out_dir=args.out,
            landmark_offset_mode=args.offset_mode,
            closing_enabled=args.closing,
            emit=tuple(args.emit.split(",")),
        )
        return run_measure(config)
    if args.command == "cohort":
        config = RunConfig(
            manifest_path=args.manifest,
            out_dir=args.out,
            threads=args.threads,
            landmark_offset_mode=args.offset_mode,
            closing_enabled=args.closing,
            emit=tuple(args.emit.split(",")),
        )
        return run_cohort(config)
    if args.command == "phantom":
        return run_phantom(args.spec, args.out)
    if args.command == "interp":
        return run_interp(args.sparse, args.out, args.closing)
    return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
