"""Synthetic midline-sheet phantoms with closed-form ground truth.

A phantom is a voxelized ribbon whose sagittal midline is a circular arc
(chord = xiphoid-pubis distance, bulge = sagitta) and whose axial
cross-section at relative height t is either a flat segment or an arc of a
lateral cylinder, with width given by a piecewise-linear profile.  Every
derived quantity (arc length, sagitta, width and IRD at any level) has an
exact expression, which makes these the measurement oracle for the whole
geometry pipeline.

``phantom_cohort`` additionally draws whole synthetic cohorts (demographics
plus per-subject metric values, optionally rasterized to mask files) for
statistical power and report testing.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SpecInvalid
from .volume import LandmarkSet, VoxelMask, save_landmarks, save_mask


@dataclass(frozen=True)
class PhantomSpec:
    """Generator parameters for one synthetic ribbon.

    length_mm is the straight xiphoid-to-pubis distance (the chord of the
    midline arc); the resulting curve length is reported by GroundTruth.
    width_knots is a piecewise-linear width profile over t in [0, 1]
    (t=0 at the xiphoid insertion).  notch, when set, forces width 0 over
    an interior t-interval (umbilical-defect simulation).
    """

    length_mm: float
    sagitta_mm: float = 0.0
    width_knots: tuple = ((0.0, 20.0), (1.0, 20.0))
    notch: tuple | None = None
    wrap_radius_mm: float | None = None
    spacing_mm: tuple = (1.0, 1.0, 1.25)
    thickness_vox: int = 2
    noise_vox: float = 0.0
    seed: int = 0
    # midline plane on a voxel boundary (False, symmetric rasterization) or
    # through a voxel center (True: sub-resolution widths keep one column
    # alive, the regime where a cross-section is visible but unmeasurable)
    center_on_voxel: bool = False

    def __post_init__(self):
        if self.length_mm <= 0:
            raise SpecInvalid(f"length_mm must be > 0, got {self.length_mm}")
        if abs(self.sagitta_mm) >= self.length_mm / 2:
            raise SpecInvalid(
                f"|sagitta| must be < length/2, got {self.sagitta_mm} vs {self.length_mm}"
            )
        knots = tuple((float(t), float(w)) for t, w in self.width_knots)
        if not knots or any(w < 0 for _, w in knots):
            raise SpecInvalid("width_knots must be non-empty with widths >= 0")
        ts = [t for t, _ in knots]
        if ts != sorted(ts) or ts[0] < 0 or ts[-1] > 1:
            raise SpecInvalid("width_knots t values must be sorted within [0, 1]")
        object.__setattr__(self, "width_knots", knots)
        if min(self.spacing_mm) <= 0:
            raise SpecInvalid("spacing_mm must be positive")
        if self.thickness_vox < 1:
            raise SpecInvalid("thickness_vox must be >= 1")
        if self.wrap_radius_mm is not None and self.wrap_radius_mm <= 0:
            raise SpecInvalid("wrap_radius_mm must be > 0 or None")
        if self.notch is not None:
            t0, t1 = self.notch
            if not (0.0 <= t0 < t1 <= 1.0):
                raise SpecInvalid(f"notch interval must satisfy 0 <= t0 < t1 <= 1, got {self.notch}")
        max_w = max(w for _, w in knots)
        if self.wrap_radius_mm is not None and max_w / self.wrap_radius_mm > 2.8:
            raise SpecInvalid("wrap angle exceeds 2.8 rad; cross-section would curl past the lateral edges")

    def to_json(self) -> str:
        obj = {
            "length_mm": self.length_mm,
            "sagitta_mm": self.sagitta_mm,
            "width_knots": [list(k) for k in self.width_knots],
            "notch": list(self.notch) if self.notch else None,
            "wrap_radius_mm": self.wrap_radius_mm,
            "spacing_mm": list(self.spacing_mm),
            "thickness_vox": self.thickness_vox,
            "noise_vox": self.noise_vox,
            "seed": self.seed,
            "center_on_voxel": self.center_on_voxel,
        }
        return json.dumps(obj, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "PhantomSpec":
        obj = json.loads(text)
        return cls(
            length_mm=obj["length_mm"],
            sagitta_mm=obj.get("sagitta_mm", 0.0),
            width_knots=tuple(tuple(k) for k in obj.get("width_knots", [[0.0, 20.0], [1.0, 20.0]])),
            notch=tuple(obj["notch"]) if obj.get("notch") else None,
            wrap_radius_mm=obj.get("wrap_radius_mm"),
            spacing_mm=tuple(obj.get("spacing_mm", (1.0, 1.0, 1.25))),
            thickness_vox=obj.get("thickness_vox", 2),
            noise_vox=obj.get("noise_vox", 0.0),
            seed=obj.get("seed", 0),
            center_on_voxel=obj.get("center_on_voxel", False),
        )


@dataclass(frozen=True)
class GroundTruth:
    """Exact geometry of a generated phantom."""

    spec: PhantomSpec
    length_mm: float            # midline curve length (arc)
    sagitta_mm: float
    t_umbilicus: float
    xiphoid_mm: np.ndarray
    umbilicus_mm: np.ndarray
    pubis_mm: np.ndarray
    # arc frame (internal, used by the closed forms below)
    x_center: float = field(repr=False, default=0.0)
    y_insert: float = field(repr=False, default=0.0)
    z_top: float = field(repr=False, default=0.0)
    z_bot: float = field(repr=False, default=0.0)
    arc_radius: float = field(repr=False, default=math.inf)
    arc_sign: float = field(repr=False, default=0.0)

    # -- closed forms ------------------------------------------------------
    def width_at(self, t) -> np.ndarray:
        """Piecewise-linear width profile, notch applied; 0 outside [0, 1]."""
        t = np.asarray(t, dtype=float)
        knots = self.spec.width_knots
        w = np.interp(t, [k[0] for k in knots], [k[1] for k in knots])
        if self.spec.notch is not None:
            t0, t1 = self.spec.notch
            w = np.where((t >= t0) & (t <= t1), 0.0, w)
        w = np.where((t < 0) | (t > 1), 0.0, w)
        return w

    def ird_at(self, t) -> np.ndarray:
        """Chord between lateral edges: equals width when flat, else 2R·sin(w/2R)."""
        w = self.width_at(t)
        r = self.spec.wrap_radius_mm
        if r is None:
            return w
        return 2.0 * r * np.sin(w / (2.0 * r))

    def _theta_top(self) -> float:
        if self.spec.sagitta_mm == 0.0:
            return 0.0
        return math.asin(self.spec.length_mm / (2.0 * self.arc_radius))

    def y_mid_at(self, z) -> np.ndarray:
        """Anterior position of the midline at height z."""
        z = np.asarray(z, dtype=float)
        s = self.spec.sagitta_mm
        if s == 0.0:
            return np.full_like(z, self.y_insert)
        z_mid = 0.5 * (self.z_top + self.z_bot)
        y_c = self.y_insert + s - self.arc_sign * self.arc_radius
        dz = np.clip(z - z_mid, -self.arc_radius, self.arc_radius)
        return y_c + self.arc_sign * np.sqrt(self.arc_radius**2 - dz**2)

    def t_at_z(self, z) -> np.ndarray:
        """Relative arc-length position of the midline point at height z."""
        z = np.asarray(z, dtype=float)
        if self.spec.sagitta_mm == 0.0:
            return (self.z_top - z) / (self.z_top - self.z_bot)
        z_mid = 0.5 * (self.z_top + self.z_bot)
        th_top = self._theta_top()
        th = np.arcsin(np.clip((z - z_mid) / self.arc_radius, -1.0, 1.0))
        return (th_top - th) / (2.0 * th_top)

    def z_at_t(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.spec.sagitta_mm == 0.0:
            return self.z_top - t * (self.z_top - self.z_bot)
        z_mid = 0.5 * (self.z_top + self.z_bot)
        th_top = self._theta_top()
        th = th_top * (1.0 - 2.0 * t)
        return z_mid + self.arc_radius * np.sin(th)

    def landmark_levels(self) -> dict:
        """The five landmark measurement levels with their exact widths.

        Levels are arc-length positions: halfway insertion-umbilicus on each
        side, plus/minus 30/20 mm along the curve from the umbilicus anchor,
        and the anchor itself.
        """
        s_u = self.t_umbilicus * self.length_mm
        arcs = {
            "halfway_xiph_umb": s_u / 2.0,
            "above3cm": s_u - 30.0,
            "at_umbilicus": s_u,
            "below2cm": s_u + 20.0,
            "halfway_umb_pubis": (s_u + self.length_mm) / 2.0,
        }
        out = {}
        for name, arc in arcs.items():
            t = arc / self.length_mm
            in_range = 0.0 <= t <= 1.0
            out[name] = {
                "arc_mm": arc,
                "t": t,
                "z_mm": float(self.z_at_t(t)) if in_range else None,
                "width_mm": float(self.width_at(t)) if in_range else None,
                "ird_mm": float(self.ird_at(t)) if in_range else None,
            }
        return out

    def max_width(self) -> tuple[float, float]:
        """(width, t) at the profile maximum over a fine grid."""
        t = np.linspace(0.0, 1.0, 4001)
        w = self.width_at(t)
        i = int(np.argmax(w))
        return float(w[i]), float(t[i])

    def max_ird(self) -> float:
        t = np.linspace(0.0, 1.0, 4001)
        return float(np.max(self.ird_at(t)))


def _arc_frame(spec: PhantomSpec):
    """Radius, sign, and total curve length of the midline arc."""
    c, s = spec.length_mm, spec.sagitta_mm
    if s == 0.0:
        return math.inf, 0.0, c
    radius = (c * c / 4.0 + s * s) / (2.0 * abs(s))
    theta_top = math.asin(c / (2.0 * radius))
    arc_len = 2.0 * radius * theta_top
    return radius, math.copysign(1.0, s), arc_len


def generate_phantom(spec: PhantomSpec) -> tuple[VoxelMask, LandmarkSet, GroundTruth]:
    """Rasterize a phantom ribbon and return it with landmarks and ground truth.

    The volume is sized to hold the ribbon plus margin; the midline plane
    x = x_center falls exactly on a voxel boundary so lateral rasterization
    is symmetric and sub-resolution behaviour is deterministic.
    """
    sx, sy, sz = spec.spacing_mm
    c, s = spec.length_mm, spec.sagitta_mm
    radius, sign, arc_len = _arc_frame(spec)
    max_w = max(w for _, w in spec.width_knots)
    th_mm = spec.thickness_vox * sy

    wrap = spec.wrap_radius_mm
    wrap_dip = 0.0
    if wrap is not None:
        half_angle = max_w / (2.0 * wrap)
        wrap_dip = wrap * (1.0 - math.cos(min(half_angle, math.pi / 2.0)))

    pad = 4.0 * max(sx, sy, sz) + spec.noise_vox * max(sx, sy)
    x_extent = max_w + th_mm + 2.0 * pad
    nx = 2 * int(math.ceil(x_extent / (2.0 * sx)))
    if spec.center_on_voxel:
        nx += 1
        x_center = (nx // 2 + 0.5) * sx  # center of the middle column
    else:
        x_center = (nx // 2) * sx        # voxel boundary

    y_lo = min(0.0, s) - wrap_dip - th_mm - pad
    y_hi = max(0.0, s) + th_mm + pad
    ny = int(math.ceil((y_hi - y_lo) / sy)) + 1
    y_insert = 0.0
    oy = y_lo

    mz = int(math.ceil(pad / sz))
    z_bot = mz * sz
    z_top = z_bot + c
    nz = int(math.ceil(z_top / sz)) + mz

    origin = (0.0, oy, 0.0)
    data = np.zeros((nz, ny, nx), dtype=bool)

    xs = (np.arange(nx) + 0.5) * sx
    ys = oy + (np.arange(ny) + 0.5) * sy
    X = xs[None, :]              # (1, nx)
    Y = ys[:, None]              # (ny, 1)

    # ground truth (landmarks at the arc endpoints and the width apex)
    gt_partial = GroundTruth(
        spec=spec,
        length_mm=arc_len,
        sagitta_mm=s,
        t_umbilicus=0.0,
        xiphoid_mm=np.zeros(3),
        umbilicus_mm=np.zeros(3),
        pubis_mm=np.zeros(3),
        x_center=x_center,
        y_insert=y_insert,
        z_top=z_top,
        z_bot=z_bot,
        arc_radius=radius,
        arc_sign=sign,
    )
    knot_ws = [w for _, w in spec.width_knots]
    t_u = spec.width_knots[int(np.argmax(knot_ws))][0]
    if len(set(knot_ws)) == 1:
        t_u = 0.5

    rng = np.random.default_rng(spec.seed)
    for k in range(nz):
        z = (k + 0.5) * sz
        if z < z_bot or z > z_top:
            continue
        y_m = float(gt_partial.y_mid_at(z))
        t = float(gt_partial.t_at_z(z))
        w = float(gt_partial.width_at(t))
        if spec.noise_vox > 0:
            w += spec.noise_vox * sx * rng.standard_normal()
            y_m += spec.noise_vox * sy * rng.standard_normal()
        if w <= 0:
            continue
        if wrap is None:
            occ = (np.abs(X - x_center) <= w / 2.0) & (np.abs(Y - y_m) <= th_mm / 2.0)
        else:
            cy = y_m - wrap
            rr = np.sqrt((X - x_center) ** 2 + (Y - cy) ** 2)
            phi = np.arctan2(X - x_center, Y - cy)
            occ = (np.abs(rr - wrap) <= th_mm / 2.0) & (np.abs(phi) <= w / (2.0 * wrap))
        data[k] = occ

    z_u = float(gt_partial.z_at_t(t_u))
    y_u = float(gt_partial.y_mid_at(z_u))
    landmarks = LandmarkSet(
        xiphoid=np.array([x_center, y_insert, z_top]),
        umbilicus=np.array([x_center, y_u, z_u]),
        pubis=np.array([x_center, y_insert, z_bot]),
    )
    gt = GroundTruth(
        spec=spec,
        length_mm=arc_len,
        sagitta_mm=s,
        t_umbilicus=t_u,
        xiphoid_mm=landmarks.xiphoid,
        umbilicus_mm=landmarks.umbilicus,
        pubis_mm=landmarks.pubis,
        x_center=x_center,
        y_insert=y_insert,
        z_top=z_top,
        z_bot=z_bot,
        arc_radius=radius,
        arc_sign=sign,
    )
    mask = VoxelMask(
        dims=(nx, ny, nz), spacing=(sx, sy, sz), origin=origin, data=data
    )
    return mask, landmarks, gt


# ---------------------------------------------------------------------------
# Synthetic cohorts
# ---------------------------------------------------------------------------
AGE_BANDS = ((18, 30), (31, 45), (46, 60), (61, 85))
BMI_PROBS = (52 / 120, 41 / 120, 27 / 120)      # under/normal, overweight, obese
BMI_RANGES = ((19.0, 24.9), (25.0, 29.9), (30.0, 40.0))

# mean landmark-width fractions of the maximal width
_LEVEL_FRACTIONS = {
    "halfway_xiph_umb_mm": 0.43,
    "above3cm_mm": 0.59,
    "at_umbilicus_mm": 0.84,
    "below2cm_mm": 0.39,
    "halfway_umb_pubis_mm": 0.16,
}

SAGITTA_MEAN = 26.0      # mm
SAGITTA_SD = 10.0
SAGITTA_FLOOR = -34.0


def _draw_sagitta(rng) -> float:
    """Skewed sagitta draw: shifted gamma, mean 26 / sd 10 mm, floor -34."""
    above = SAGITTA_MEAN - SAGITTA_FLOOR
    k = (above / SAGITTA_SD) ** 2
    theta = SAGITTA_SD**2 / above
    return SAGITTA_FLOOR + float(rng.gamma(k, theta))


def phantom_cohort(
    n: int,
    effects: dict | None = None,
    seed: int = 0,
    out_dir=None,
    spacing_mm: tuple = (1.2, 1.2, 2.5),
) -> list[dict]:
    """Draw a synthetic cohort of n subjects.

    Demographics cycle through the 4 age bands x 2 sexes; BMI categories are
    drawn at the reference cohort proportions.  ``effects`` maps
    variable -> factor -> level -> multiplier and is applied as a mean shift
    (value + (m - 1) * population_mean) so a x3 effect triples the group mean
    without inflating its spread.

    When ``out_dir`` is given, each subject's ribbon is rasterized and saved
    (mask container + landmark JSON) and a ``cohort.csv`` manifest is written;
    the subject dicts then also carry the file paths.  Deterministic for a
    fixed seed.
    """
    if n < 4:
        raise SpecInvalid(f"cohort size must be >= 4, got {n}")
    effects = effects or {}
    rng = np.random.default_rng(seed)
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    # quota-fill the BMI categories at the reference proportions (the cohort
    # was designed, not sampled), then shuffle the assignment order
    quotas = [int(math.floor(p * n)) for p in BMI_PROBS]
    remainders = sorted(
        range(3), key=lambda c: (BMI_PROBS[c] * n - quotas[c], -c), reverse=True
    )
    for c in remainders[: n - sum(quotas)]:
        quotas[c] += 1
    bmi_cats = np.repeat(np.arange(3), quotas)
    rng.shuffle(bmi_cats)

    subjects = []
    for i in range(n):
        band = AGE_BANDS[i % 4]
        sex = "M" if (i // 4) % 2 == 0 else "F"
        age = int(rng.integers(band[0], band[1] + 1))
        cat = int(bmi_cats[i])
        bmi = float(np.round(rng.uniform(*BMI_RANGES[cat]), 1))

        length = float(np.clip(rng.normal(375.0, 36.0), 300.0, 480.0))
        sagitta = _draw_sagitta(rng)
        max_w = float(np.clip(rng.normal(44.0, 15.0), 14.0, 110.0))
        row = {
            "id": f"S{i:04d}",
            "age": age,
            "sex": sex,
            "bmi": bmi,
            "length_mm": length,
            "sagitta_mm": sagitta,
            "max_width_mm": max_w,
        }
        for name, frac in _LEVEL_FRACTIONS.items():
            row[name] = max(1.0, frac * max_w * (1.0 + 0.15 * rng.standard_normal()))
        row["max_ird_mm"] = 0.7 * max_w * (1.0 + 0.1 * rng.standard_normal())
        row["waist_circumference_cm"] = 2.2 * bmi + 38.0 + 6.0 * rng.standard_normal()
        row["subcutaneous_fat_area_cm2"] = max(
            30.0, 24.0 * bmi - 380.0 + 60.0 * rng.standard_normal()
        )
        subjects.append(row)

    pop_means = {
        var: float(np.mean([s[var] for s in subjects]))
        for var in subjects[0]
        if var not in ("id", "sex")
    }
    for var, by_factor in effects.items():
        for factor, levels in by_factor.items():
            for subj in subjects:
                level = _factor_level(subj, factor)
                mult = levels.get(level)
                if mult is not None:
                    subj[var] = subj[var] + (mult - 1.0) * pop_means[var]

    if out_dir is not None:
        manifest_rows = []
        for subj in subjects:
            t_u = 0.55
            floor_w = max(10.0, 4.0 * max(spacing_mm))
            apex = max(subj["max_width_mm"], floor_w + 2.0)
            chord = max(120.0, subj["length_mm"] * 0.97)
            sag = float(np.clip(subj["sagitta_mm"], -chord / 2 + 1, chord / 2 - 1))
            spec = PhantomSpec(
                length_mm=chord,
                sagitta_mm=sag,
                width_knots=((0.0, floor_w), (t_u, apex), (1.0, floor_w)),
                spacing_mm=spacing_mm,
                seed=int(rng.integers(0, 2**31 - 1)),
            )
            mask, lms, gt = generate_phantom(spec)
            mask_path = out_dir / f"{subj['id']}.lmh"
            lm_path = out_dir / f"{subj['id']}_landmarks.json"
            save_mask(mask, mask_path)
            save_landmarks(lms, lm_path)
            # table reflects the rasterized truth
            subj["length_mm"] = gt.length_mm
            subj["sagitta_mm"] = gt.sagitta_mm
            subj["max_width_mm"] = gt.max_width()[0]
            subj["mask_path"] = mask_path.name
            subj["landmarks_path"] = lm_path.name
            manifest_rows.append(subj)
        _write_manifest(out_dir / "cohort.csv", manifest_rows)

    return subjects


def _factor_level(subj: dict, factor: str) -> str:
    from .cohortstats import age_group_of, bmi_group_of

    if factor == "sex":
        return subj["sex"]
    if factor == "age_group":
        return str(age_group_of(subj["age"]))
    if factor == "bmi_group":
        return bmi_group_of(subj["bmi"])
    raise KeyError(f"unknown factor {factor!r}")


def _write_manifest(path: Path, rows: list[dict]) -> None:
    covariates = ["waist_circumference_cm", "subcutaneous_fat_area_cm2"]
    fields = ["id", "age", "sex", "bmi", "mask_path", "landmarks_path"] + covariates
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
