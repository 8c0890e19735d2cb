"""Voxel-mask data model, container I/O, validation, and median-sagittal reslicing.

Axis convention throughout the package: x = left-to-right, y =
posterior-to-anterior, z = caudal-to-cranial.  A mask's voxel (i, j, k)
(x-, y-, z-index) is the cell centered at ``origin + (index + 0.5) * spacing``,
so the physical bounding box is ``[origin, origin + dims * spacing]``.

In memory the occupancy array is stored with shape (nz, ny, nx); its C-order
ravel is therefore x-fastest, which is exactly the container payload order.

Container format (``<name>.lmh``): a JSON header with keys ``dims``,
``spacing_mm``, ``origin_mm``, ``data_file`` (relative path), ``encoding``
(``"raw_u8"``), next to a payload file holding one byte per voxel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import label as cc_label

from .errors import (
    DimensionMismatch,
    EmptyIntersection,
    IoFailure,
    MalformedHeader,
    UnsupportedEncoding,
)

REQUIRED_HEADER_KEYS = ("dims", "spacing_mm", "origin_mm", "data_file", "encoding")

SEVERITY_ERROR = "error"
SEVERITY_INFO = "info"


@dataclass(frozen=True)
class VoxelMask:
    """Binary occupancy grid with physical spacing.

    ``data`` has shape (nz, ny, nx), dtype bool.
    """

    dims: tuple[int, int, int]          # (nx, ny, nz)
    spacing: tuple[float, float, float]  # mm per voxel (sx, sy, sz)
    origin: tuple[float, float, float]   # mm corner of the grid
    data: np.ndarray

    def __post_init__(self):
        nx, ny, nz = self.dims
        if min(self.dims) < 1:
            raise ValueError(f"dims must be >= 1, got {self.dims}")
        if min(self.spacing) <= 0:
            raise ValueError(f"spacing must be > 0, got {self.spacing}")
        if self.data.shape != (nz, ny, nx):
            raise ValueError(
                f"data shape {self.data.shape} != (nz, ny, nx) = {(nz, ny, nx)}"
            )
        if self.data.dtype != np.bool_:
            raise ValueError("data must be boolean")

    @property
    def occupied_count(self) -> int:
        return int(np.count_nonzero(self.data))

    def bbox_mm(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical bounding box (lo, hi) of the whole grid, mm."""
        lo = np.asarray(self.origin, dtype=float)
        hi = lo + np.asarray(self.dims, dtype=float) * np.asarray(self.spacing)
        return lo, hi

    def voxel_centers_1d(self, axis: int) -> np.ndarray:
        """Physical center coordinates along one axis (0=x, 1=y, 2=z)."""
        n = self.dims[axis]
        return self.origin[axis] + (np.arange(n) + 0.5) * self.spacing[axis]


@dataclass(frozen=True)
class LandmarkSet:
    """Xiphoid, umbilicus, and pubis fiducials in physical mm coordinates."""

    xiphoid: np.ndarray
    umbilicus: np.ndarray
    pubis: np.ndarray

    def __post_init__(self):
        for name in ("xiphoid", "umbilicus", "pubis"):
            p = np.asarray(getattr(self, name), dtype=float)
            if p.shape != (3,):
                raise ValueError(f"{name} must be a 3-vector, got shape {p.shape}")
            object.__setattr__(self, name, p)


@dataclass(frozen=True)
class PlaneImage:
    """A 2D binary reslice of a volume.

    ``frame_origin`` plus the two orthonormal in-plane axes place pixel
    (u, v) at ``frame_origin + (u + 0.5) * su * axis_u + (v + 0.5) * sv * axis_v``.
    ``data`` has shape (nu, nv).
    """

    dims: tuple[int, int]
    spacing: tuple[float, float]
    frame_origin: np.ndarray
    axis_u: np.ndarray
    axis_v: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        if min(self.spacing) <= 0:
            raise ValueError("plane spacing must be > 0")
        for name in ("frame_origin", "axis_u", "axis_v"):
            v = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, v)
        if abs(np.dot(self.axis_u, self.axis_v)) > 1e-9:
            raise ValueError("plane axes must be orthonormal")
        for ax in (self.axis_u, self.axis_v):
            if abs(np.linalg.norm(ax) - 1.0) > 1e-9:
                raise ValueError("plane axes must be unit length")
        if self.data.shape != self.dims:
            raise ValueError(f"data shape {self.data.shape} != dims {self.dims}")


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str
    severity: str = SEVERITY_ERROR


@dataclass
class ValidationReport:
    ok: bool
    issues: list[ValidationIssue] = field(default_factory=list)
    occupied_voxel_count: int = 0
    connected_component_count: int = 0


# ---------------------------------------------------------------------------
# Container I/O
# ---------------------------------------------------------------------------
def _reject_duplicate_keys(pairs):
    seen = set()
    out = {}
    for k, v in pairs:
        if k in seen:
            raise MalformedHeader(f"duplicate header key: {k!r}")
        seen.add(k)
        out[k] = v
    return out


def _parse_header(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read header {path}: {exc}") from exc
    try:
        header = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except MalformedHeader:
        raise
    except json.JSONDecodeError as exc:
        raise MalformedHeader(f"header {path} is not valid JSON: {exc}") from exc
    if not isinstance(header, dict):
        raise MalformedHeader(f"header {path} must be a JSON object")
    for key in REQUIRED_HEADER_KEYS:
        if key not in header:
            raise MalformedHeader(f"header {path} missing required key {key!r}")
    return header


def load_mask(path) -> VoxelMask:
    """Read a mask container (JSON header + raw u8 payload).

    Raises MalformedHeader, DimensionMismatch, UnsupportedEncoding, IoFailure.
    """
    path = Path(path)
    header = _parse_header(path)

    if header["encoding"] != "raw_u8":
        raise UnsupportedEncoding(f"encoding {header['encoding']!r} not supported")

    try:
        dims = tuple(int(v) for v in header["dims"])
        spacing = tuple(float(v) for v in header["spacing_mm"])
        origin = tuple(float(v) for v in header["origin_mm"])
    except (TypeError, ValueError) as exc:
        raise MalformedHeader(f"malformed numeric field in header {path}: {exc}") from exc
    if len(dims) != 3 or len(spacing) != 3 or len(origin) != 3:
        raise MalformedHeader(f"dims/spacing_mm/origin_mm must be 3-vectors in {path}")

    payload_path = path.parent / header["data_file"]
    try:
        raw = payload_path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read payload {payload_path}: {exc}") from exc

    nx, ny, nz = dims
    if len(raw) != nx * ny * nz:
        raise DimensionMismatch(
            f"payload has {len(raw)} bytes, expected {nx * ny * nz} for dims {dims}"
        )
    data = np.frombuffer(raw, dtype=np.uint8).reshape((nz, ny, nx)) != 0
    return VoxelMask(dims=dims, spacing=spacing, origin=origin, data=data)


def save_mask(mask: VoxelMask, path, extra_header: dict | None = None) -> None:
    """Write a mask container; ``load_mask(save_mask(m)) == m`` bit-exactly.

    ``extra_header`` entries are merged into the JSON header (used for the
    sparse-delineation ``delineated_z`` key).
    """
    path = Path(path)
    payload_name = path.stem + ".raw"
    header = {
        "dims": list(mask.dims),
        "spacing_mm": list(mask.spacing),
        "origin_mm": list(mask.origin),
        "data_file": payload_name,
        "encoding": "raw_u8",
    }
    if extra_header:
        header.update(extra_header)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        (path.parent / payload_name).write_bytes(
            mask.data.astype(np.uint8).tobytes()
        )
        path.write_text(json.dumps(header, sort_keys=True, indent=1) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write mask container {path}: {exc}") from exc


def load_landmarks(path) -> LandmarkSet:
    """Read a landmark JSON file ({"xiphoid_mm": [...], ...})."""
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read landmarks {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedHeader(f"landmarks {path} not valid JSON: {exc}") from exc
    try:
        return LandmarkSet(
            xiphoid=np.asarray(obj["xiphoid_mm"], dtype=float),
            umbilicus=np.asarray(obj["umbilicus_mm"], dtype=float),
            pubis=np.asarray(obj["pubis_mm"], dtype=float),
        )
    except KeyError as exc:
        raise MalformedHeader(f"landmarks {path} missing key {exc}") from exc


def save_landmarks(landmarks: LandmarkSet, path) -> None:
    payload = {
        "xiphoid_mm": [float(v) for v in landmarks.xiphoid],
        "umbilicus_mm": [float(v) for v in landmarks.umbilicus],
        "pubis_mm": [float(v) for v in landmarks.pubis],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


# ---------------------------------------------------------------------------
# Reslicing and validation
# ---------------------------------------------------------------------------
def median_sagittal_slice(mask: VoxelMask, landmarks: LandmarkSet) -> PlaneImage:
    """Extract the median sagittal plane as a binary image.

    The plane passes through the mean x of the three landmarks, normal to
    the x axis; occupancy is nearest-voxel lookup, so the result is one
    x-column of the volume at resolution (sy, sz).  Raises EmptyIntersection
    when the plane holds no occupied voxel.
    """
    nx, ny, nz = mask.dims
    sx, sy, sz = mask.spacing
    x_plane = float(
        (landmarks.xiphoid[0] + landmarks.umbilicus[0] + landmarks.pubis[0]) / 3.0
    )
    i = int(np.floor((x_plane - mask.origin[0]) / sx))
    i = min(max(i, 0), nx - 1)

    column = mask.data[:, :, i]  # (nz, ny)
    if not column.any():
        raise EmptyIntersection(
            f"median sagittal plane at x={x_plane:.2f} mm intersects no occupied voxel"
        )
    # pixel (u, v) = (y-index, z-index)
    frame_origin = np.array(
        [mask.origin[0] + (i + 0.5) * sx, mask.origin[1], mask.origin[2]]
    )
    return PlaneImage(
        dims=(ny, nz),
        spacing=(sy, sz),
        frame_origin=frame_origin,
        axis_u=np.array([0.0, 1.0, 0.0]),
        axis_v=np.array([0.0, 0.0, 1.0]),
        data=column.T.copy(),  # (ny, nz)
    )


def validate_mask(mask: VoxelMask, landmarks: LandmarkSet) -> ValidationReport:
    """Check mask/landmark consistency without mutating either.

    Errors: empty mask, landmark ordering violations, out-of-bounds
    landmarks.  Multiple connected components are reported info-level
    (umbilical defects legitimately split the sheet).
    """
    issues: list[ValidationIssue] = []

    occupied = mask.occupied_count
    if occupied == 0:
        issues.append(
            ValidationIssue("EMPTY_MASK", "mask holds no occupied voxel")
        )

    zx, zu, zp = landmarks.xiphoid[2], landmarks.umbilicus[2], landmarks.pubis[2]
    if not (zx > zu > zp):
        issues.append(
            ValidationIssue(
                "LANDMARK_ORDER",
                f"expected xiphoid.z > umbilicus.z > pubis.z, got "
                f"{zx:.2f} / {zu:.2f} / {zp:.2f}",
            )
        )

    lo, hi = mask.bbox_mm()
    for name in ("xiphoid", "umbilicus", "pubis"):
        p = getattr(landmarks, name)
        if np.any(p < lo) or np.any(p > hi):
            issues.append(
                ValidationIssue(
                    "LANDMARK_OOB",
                    f"{name} at {p.tolist()} outside volume bbox "
                    f"[{lo.tolist()}, {hi.tolist()}]",
                )
            )

    n_components = 0
    if occupied:
        _, n_components = cc_label(mask.data, structure=np.ones((3, 3, 3), dtype=bool))
        if n_components > 1:
            issues.append(
                ValidationIssue(
                    "MULTIPLE_COMPONENTS",
                    f"mask splits into {n_components} connected components",
                    severity=SEVERITY_INFO,
                )
            )

    ok = not any(i.severity == SEVERITY_ERROR for i in issues)
    return ValidationReport(
        ok=ok,
        issues=issues,
        occupied_voxel_count=occupied,
        connected_component_count=int(n_components),
    )
