"""Midline-sheet metrics: curve, length, sagitta, width/IRD profiles, landmarks.

All measurements run on the raw voxel grid in physical mm.  The midline is
read per z-row of the median sagittal reslice (occupied-run centroids), the
width per axial slice as the arc length of the cross-section's medial path,
and the IRD as the straight chord between that path's lateral endpoints,
so width >= IRD holds by construction on every measured sample.

Values are kept at full precision here; millimeter rounding happens only at
report emission (pipeline module).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import binary_dilation, label as cc_label

from .errors import (
    CurveProfileMismatch,
    DegenerateChord,
    DegenerateCurve,
    EmptyCrossSection,
    EmptyIntersection,
    FragmentedMidline,
    LandmarkOutOfRange,
    NoMeasurableSlices,
    TooFewMeasured,
)
from .volume import LandmarkSet, VoxelMask, median_sagittal_slice

STATUS_MEASURED = "measured"
STATUS_INTERPOLATED = "interpolated"
STATUS_MISSING = "missing"

MAX_MIDLINE_GAP_ROWS = 3      # interior sagittal gap bridged linearly
CROSS_SECTION_BRIDGE_VOX = 2  # axial components closer than this are merged
MIDLINE_SMOOTH_WINDOW = 5     # endpoint-preserving moving average
PATH_SMOOTH_WINDOW = 3
NORMALIZED_SAMPLES = 1001

LANDMARK_LEVELS = (
    "halfway_xiph_umb",
    "above3cm",
    "at_umbilicus",
    "below2cm",
    "halfway_umb_pubis",
)
_ABOVE_OFFSET_MM = 30.0
_BELOW_OFFSET_MM = 20.0


@dataclass(frozen=True)
class MidlineCurve:
    """Arc-length parameterized midline polyline in the sagittal plane.

    ``points`` has shape (n, 2), columns (y_mm, z_mm), ordered from the
    xiphoid end (largest z) to the pubis end; ``cum_len`` is the cumulative
    arc length from the first point.
    """

    points: np.ndarray
    cum_len: np.ndarray

    @property
    def total_length(self) -> float:
        return float(self.cum_len[-1])


@dataclass
class WidthProfile:
    """Per-axial-slice width/IRD samples plus an optional normalized view.

    Arrays are aligned and ordered by ascending z.  ``width_mm``/``ird_mm``
    are NaN where ``status == "missing"``.  ``normalized`` is a dict with
    keys t / width_mm / ird_mm / status on the fixed uniform grid.
    """

    z_index: np.ndarray
    z_mm: np.ndarray
    width_mm: np.ndarray
    ird_mm: np.ndarray
    status: np.ndarray
    normalized: dict | None = None

    def copy(self) -> "WidthProfile":
        return WidthProfile(
            z_index=self.z_index.copy(),
            z_mm=self.z_mm.copy(),
            width_mm=self.width_mm.copy(),
            ird_mm=self.ird_mm.copy(),
            status=self.status.copy(),
            normalized=None if self.normalized is None else dict(self.normalized),
        )

    def missing_fraction(self) -> float:
        return float(np.mean(self.status != STATUS_MEASURED))


@dataclass(frozen=True)
class LandmarkWidth:
    width_mm: float | None
    status: str
    t: float
    z_mm: float


@dataclass(frozen=True)
class LandmarkWidths:
    halfway_xiph_umb: LandmarkWidth
    above3cm: LandmarkWidth
    at_umbilicus: LandmarkWidth
    below2cm: LandmarkWidth
    halfway_umb_pubis: LandmarkWidth

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in LANDMARK_LEVELS}


@dataclass(frozen=True)
class MetricsRecord:
    length_mm: float
    sagitta_mm: float
    max_width_mm: float
    max_width_t: float
    max_ird_mm: float
    landmarks: LandmarkWidths
    missing_fraction: float
    max_on_interpolated: bool = False

    def to_dict(self) -> dict:
        out = {
            "length_mm": self.length_mm,
            "sagitta_mm": self.sagitta_mm,
            "max_width_mm": self.max_width_mm,
            "max_width_t": self.max_width_t,
            "max_ird_mm": self.max_ird_mm,
            "missing_fraction": self.missing_fraction,
            "max_on_interpolated": self.max_on_interpolated,
        }
        for name, lw in self.landmarks.as_dict().items():
            out[f"{name}_mm"] = lw.width_mm
            out[f"{name}_status"] = lw.status
        return out


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------
def _smooth_preserving_ends(values: np.ndarray, window: int) -> np.ndarray:
    """Moving average with a symmetric window that shrinks near the ends,
    so the first/last samples are returned exactly."""
    n = values.size
    if window <= 1 or n <= 2:
        return values.copy()
    radius = window // 2
    out = np.empty_like(values, dtype=float)
    csum = np.concatenate([[0.0], np.cumsum(values, dtype=float)])
    for i in range(n):
        r = min(radius, i, n - 1 - i)
        out[i] = (csum[i + r + 1] - csum[i - r]) / (2 * r + 1)
    return out


def _runs_of_true(row: np.ndarray) -> list[tuple[int, int]]:
    """[start, stop) index pairs of consecutive True entries."""
    idx = np.flatnonzero(row)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    stops = np.concatenate([idx[breaks] + 1, [idx[-1] + 1]])
    return list(zip(starts.tolist(), stops.tolist()))


# ---------------------------------------------------------------------------
# midline curve
# ---------------------------------------------------------------------------
def extract_midline(mask: VoxelMask, landmarks: LandmarkSet) -> MidlineCurve:
    """Trace the sagittal midline between the xiphoid and pubis levels.

    Walks the median sagittal reslice row by row from the xiphoid end,
    taking the centroid of the occupied run nearest the previous point.
    Interior gaps of up to MAX_MIDLINE_GAP_ROWS empty rows are bridged by
    the connecting segment; longer gaps raise FragmentedMidline.  Rows
    outside the occupied extent shrink the curve instead of failing, so
    sub-resolution extremities degrade gracefully.
    """
    plane = median_sagittal_slice(mask, landmarks)  # data (ny, nz)
    sy, sz = plane.spacing
    oy = plane.frame_origin[1]
    oz = plane.frame_origin[2]
    occ = plane.data

    nz = occ.shape[1]
    z_centers = oz + (np.arange(nz) + 0.5) * sz
    z_lo, z_hi = float(landmarks.pubis[2]), float(landmarks.xiphoid[2])
    in_range = np.flatnonzero((z_centers >= z_lo) & (z_centers <= z_hi))
    if in_range.size == 0:
        raise EmptyIntersection("no axial rows between the pubis and xiphoid levels")

    ys: list[float] = []
    zs: list[float] = []
    prev_y = float(landmarks.xiphoid[1])
    gap = 0
    started = False
    for k in in_range[::-1]:  # xiphoid (high z) downward
        runs = _runs_of_true(occ[:, k])
        if not runs:
            if started:
                gap += 1
            continue
        if started and gap > MAX_MIDLINE_GAP_ROWS:
            raise FragmentedMidline(
                f"{gap} consecutive empty sagittal rows below z={zs[-1]:.2f} mm"
            )
        gap = 0
        started = True
        centroids = [oy + ((a + b - 1) / 2.0 + 0.5) * sy for a, b in runs]
        y = min(centroids, key=lambda c: abs(c - prev_y))
        ys.append(y)
        zs.append(float(z_centers[k]))
        prev_y = y

    if len(ys) < 2:
        raise EmptyIntersection("midline has fewer than two measurable rows")

    y_arr = _smooth_preserving_ends(np.asarray(ys), MIDLINE_SMOOTH_WINDOW)
    points = np.column_stack([y_arr, np.asarray(zs)])
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    cum_len = np.concatenate([[0.0], np.cumsum(seg)])
    return MidlineCurve(points=points, cum_len=cum_len)


def curve_length(curve: MidlineCurve) -> float:
    """Total arc length of the midline polyline, mm."""
    if curve.points.shape[0] < 2:
        raise DegenerateCurve("curve needs at least two points")
    return curve.total_length


def compute_sagitta(curve: MidlineCurve, landmarks: LandmarkSet) -> float:
    """Signed bulge of the midline relative to the xipho-pubic chord.

    Returns the perpendicular distance of the curve point farthest from the
    chord, positive when that point lies anterior to the chord and negative
    when posterior (inward-curved midline).
    """
    a = np.array([landmarks.xiphoid[1], landmarks.xiphoid[2]])
    b = np.array([landmarks.pubis[1], landmarks.pubis[2]])
    chord = b - a
    norm = float(np.linalg.norm(chord))
    if norm < 1e-9:
        raise DegenerateChord("xiphoid and pubis projections coincide")
    d = chord / norm
    normal = np.array([-d[1], d[0]])
    if normal[0] < 0:  # orient toward anterior (+y)
        normal = -normal
    dist = (curve.points - a) @ normal
    idx = int(np.argmax(np.abs(dist)))
    return float(dist[idx])


# ---------------------------------------------------------------------------
# axial cross-sections and the width profile
# ---------------------------------------------------------------------------
_DILATE_STRUCT = np.ones((3, 3), dtype=bool)


def axial_cross_section(mask: VoxelMask, z_index: int) -> np.ndarray:
    """Medial path of the axial cross-section at one slice, (m, 2) mm (x, y).

    Keeps the largest 8-connected component after merging components
    separated by <= CROSS_SECTION_BRIDGE_VOX empty voxels, reduces it to one
    medial point per x-column, and orders the points left to right.  Slices
    too thin to yield two distinct lateral points raise EmptyCrossSection.
    """
    nz = mask.dims[2]
    if not 0 <= z_index < nz:
        raise EmptyCrossSection(f"slice index {z_index} outside volume")
    occ = mask.data[z_index]
    js, iis = np.nonzero(occ)
    if js.size == 0:
        raise EmptyCrossSection(f"slice {z_index} holds no occupied voxel")

    j0, j1 = js.min(), js.max() + 1
    i0, i1 = iis.min(), iis.max() + 1
    crop = occ[j0:j1, i0:i1]

    bridged = binary_dilation(crop, structure=_DILATE_STRUCT)
    labels, n_labels = cc_label(bridged, structure=_DILATE_STRUCT)
    if n_labels > 1:
        counts = np.bincount(labels[crop], minlength=n_labels + 1)
        keep = int(np.argmax(counts[1:])) + 1
        component = crop & (labels == keep)
    else:
        component = crop

    sx, sy = mask.spacing[0], mask.spacing[1]
    ox, oy = mask.origin[0], mask.origin[1]
    cols = np.flatnonzero(component.any(axis=0))
    if cols.size < 2:
        raise EmptyCrossSection(
            f"slice {z_index} too thin to resolve two lateral points"
        )
    xs = ox + (cols + i0 + 0.5) * sx
    j_grid = np.arange(component.shape[0], dtype=float)
    counts = component[:, cols].sum(axis=0)
    centroids_j = (j_grid @ component[:, cols]) / counts
    ys = oy + (centroids_j + j0 + 0.5) * sy
    return np.column_stack([xs, ys])


def _path_metrics(points: np.ndarray) -> tuple[float, float]:
    """(width, ird) of an ordered medial path.

    Width is the polyline length after endpoint-preserving smoothing of the
    medial ordinates (removes rasterization sawtooth); IRD is the chord
    between the untouched endpoints, so width >= ird exactly.
    """
    ys = _smooth_preserving_ends(points[:, 1], PATH_SMOOTH_WINDOW)
    smoothed = np.column_stack([points[:, 0], ys])
    seg = np.linalg.norm(np.diff(smoothed, axis=0), axis=1)
    ird = float(np.linalg.norm(points[-1] - points[0]))
    # the polyline through the endpoints dominates the chord; the float
    # accumulation can land an ulp short of that on collinear paths
    width = max(float(seg.sum()), ird)
    return width, ird


def width_profile(mask: VoxelMask, landmarks: LandmarkSet) -> WidthProfile:
    """Width and IRD per axial slice between the pubis and xiphoid levels.

    Slices whose cross-section cannot be measured are kept with
    status="missing" (NaN values); raising is reserved for the case where
    no slice at all is measurable.
    """
    sz = mask.spacing[2]
    oz = mask.origin[2]
    nz = mask.dims[2]
    z_centers = oz + (np.arange(nz) + 0.5) * sz
    z_lo, z_hi = float(landmarks.pubis[2]), float(landmarks.xiphoid[2])
    in_range = np.flatnonzero((z_centers >= z_lo) & (z_centers <= z_hi))
    if in_range.size == 0:
        raise NoMeasurableSlices("no axial slices between the pubis and xiphoid levels")

    widths = np.full(in_range.size, np.nan)
    irds = np.full(in_range.size, np.nan)
    status = np.full(in_range.size, STATUS_MISSING, dtype=object)
    for row, k in enumerate(in_range):
        try:
            path = axial_cross_section(mask, int(k))
        except EmptyCrossSection:
            continue
        widths[row], irds[row] = _path_metrics(path)
        status[row] = STATUS_MEASURED

    if not (status == STATUS_MEASURED).any():
        raise NoMeasurableSlices("no measurable cross-section in the landmark range")
    return WidthProfile(
        z_index=in_range.astype(int),
        z_mm=z_centers[in_range],
        width_mm=widths,
        ird_mm=irds,
        status=status,
    )


def fill_profile_gaps(profile: WidthProfile) -> WidthProfile:
    """Replace missing samples: interior runs by linear interpolation between
    the flanking measured samples, extremity runs by constant extension of
    the nearest measured sample.  Filled samples are flagged "interpolated";
    measured samples are returned untouched.
    """
    measured = np.flatnonzero(profile.status == STATUS_MEASURED)
    if measured.size < 2:
        raise TooFewMeasured("gap filling needs at least two measured samples")

    out = profile.copy()
    missing = np.flatnonzero(profile.status == STATUS_MISSING)
    if missing.size == 0:
        return out
    z = profile.z_mm
    for arr_name in ("width_mm", "ird_mm"):
        arr = getattr(out, arr_name)
        filled = np.interp(z[missing], z[measured], arr[measured])
        arr[missing] = filled
    out.status[missing] = STATUS_INTERPOLATED
    return out


def normalize_profile(profile: WidthProfile, curve: MidlineCurve) -> WidthProfile:
    """Populate the normalized (relative-height) view of a profile.

    Each slice's t is its midline arc-length position divided by the total
    curve length (t=0 at the xiphoid insertion, 1 at the pubis insertion);
    the samples are then resampled onto the fixed uniform grid.
    """
    zs_desc = curve.points[:, 1]
    if profile.z_mm.max() < zs_desc.min() or profile.z_mm.min() > zs_desc.max():
        raise CurveProfileMismatch("curve and profile cover disjoint z ranges")

    total = curve.total_length
    zs_asc = zs_desc[::-1]
    cum_asc = curve.cum_len[::-1]
    t_slices = np.interp(profile.z_mm, zs_asc, cum_asc) / total

    order = np.argsort(t_slices)
    t_sorted = t_slices[order]
    t_grid = np.linspace(0.0, 1.0, NORMALIZED_SAMPLES)
    norm = {"t": t_grid, "slice_t": t_slices}
    for arr_name in ("width_mm", "ird_mm"):
        vals = getattr(profile, arr_name)[order]
        norm[arr_name] = np.interp(t_grid, t_sorted, vals)
    nearest = np.clip(
        np.searchsorted(t_sorted, t_grid), 0, t_sorted.size - 1
    )
    left = np.clip(nearest - 1, 0, t_sorted.size - 1)
    use_left = np.abs(t_grid - t_sorted[left]) <= np.abs(t_grid - t_sorted[nearest])
    norm["status"] = profile.status[order][np.where(use_left, left, nearest)]

    out = profile.copy()
    out.normalized = norm
    return out


def landmark_widths(
    profile: WidthProfile,
    curve: MidlineCurve,
    landmarks: LandmarkSet,
    offset_mode: str = "arc",
) -> LandmarkWidths:
    """Widths at the five reference levels around the umbilicus.

    The umbilicus anchor is the curve point nearest the umbilicus landmark.
    In "arc" mode (default) the 30 mm-above / 20 mm-below levels and the two
    halfway levels are arc-length offsets along the midline; "axial" mode
    measures the cm offsets straight along z instead.  The width is read
    from the profile at the nearest slice, status propagated.
    """
    if profile.normalized is None:
        raise CurveProfileMismatch("profile must be normalized before landmark lookup")
    if offset_mode not in ("arc", "axial"):
        raise ValueError(f"offset_mode must be 'arc' or 'axial', got {offset_mode!r}")

    u = np.array([landmarks.umbilicus[1], landmarks.umbilicus[2]])
    anchor = int(np.argmin(np.linalg.norm(curve.points - u, axis=1)))
    total = curve.total_length
    s_anchor = float(curve.cum_len[anchor])

    if offset_mode == "arc":
        arcs = {
            "halfway_xiph_umb": s_anchor / 2.0,
            "above3cm": s_anchor - _ABOVE_OFFSET_MM,
            "at_umbilicus": s_anchor,
            "below2cm": s_anchor + _BELOW_OFFSET_MM,
            "halfway_umb_pubis": (s_anchor + total) / 2.0,
        }
    else:
        z_anchor = float(curve.points[anchor, 1])
        z_top = float(curve.points[0, 1])
        z_bot = float(curve.points[-1, 1])
        z_levels = {
            "halfway_xiph_umb": (z_top + z_anchor) / 2.0,
            "above3cm": z_anchor + _ABOVE_OFFSET_MM,
            "at_umbilicus": z_anchor,
            "below2cm": z_anchor - _BELOW_OFFSET_MM,
            "halfway_umb_pubis": (z_anchor + z_bot) / 2.0,
        }
        zs_asc = curve.points[::-1, 1]
        cum_asc = curve.cum_len[::-1]
        arcs = {}
        for name, z_level in z_levels.items():
            if z_level > z_top + 1e-9 or z_level < z_bot - 1e-9:
                raise LandmarkOutOfRange(
                    f"{name} level at z={z_level:.1f} mm outside the curve range"
                )
            arcs[name] = float(np.interp(z_level, zs_asc, cum_asc))

    levels = {}
    zs_asc = curve.points[::-1, 1]
    cum_asc = curve.cum_len[::-1]
    for name, arc in arcs.items():
        if arc < -1e-9 or arc > total + 1e-9:
            raise LandmarkOutOfRange(
                f"{name} level at arc {arc:.1f} mm outside [0, {total:.1f}]"
            )
        z_level = float(np.interp(arc, curve.cum_len, curve.points[:, 1]))
        idx = int(np.argmin(np.abs(profile.z_mm - z_level)))
        status = str(profile.status[idx])
        value = None if status == STATUS_MISSING else float(profile.width_mm[idx])
        levels[name] = LandmarkWidth(
            width_mm=value, status=status, t=arc / total, z_mm=z_level
        )
    return LandmarkWidths(**levels)


def subject_metrics(
    mask: VoxelMask, landmarks: LandmarkSet, offset_mode: str = "arc"
) -> tuple[MetricsRecord, MidlineCurve, WidthProfile]:
    """Full per-subject measurement chain.

    Returns the metrics record along with the midline curve and the filled,
    normalized profile (callers emit those as per-slice reports).  Errors
    from constituent steps propagate unchanged.
    """
    curve = extract_midline(mask, landmarks)
    length = curve_length(curve)
    sagitta = compute_sagitta(curve, landmarks)
    raw = width_profile(mask, landmarks)
    missing_fraction = raw.missing_fraction()
    filled = fill_profile_gaps(raw)
    norm = normalize_profile(filled, curve)
    lw = landmark_widths(norm, curve, landmarks, offset_mode=offset_mode)

    usable = norm.status != STATUS_MISSING
    widths = norm.width_mm[usable]
    irds = norm.ird_mm[usable]
    i_max = int(np.argmax(widths))
    slice_t = norm.normalized["slice_t"][usable]
    record = MetricsRecord(
        length_mm=length,
        sagitta_mm=sagitta,
        max_width_mm=float(widths[i_max]),
        max_width_t=float(slice_t[i_max]),
        max_ird_mm=float(np.max(irds)),
        landmarks=lw,
        missing_fraction=missing_fraction,
        max_on_interpolated=bool(norm.status[usable][i_max] == STATUS_INTERPOLATED),
    )
    return record, curve, norm
