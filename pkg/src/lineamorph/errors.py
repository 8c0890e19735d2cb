"""Exception taxonomy shared across the package.

Every operation raises one of these named errors so batch callers can
classify failures (input/format problems vs. geometry breakdowns) without
string matching.
"""


class LineaMorphError(Exception):
    """Base class for all lineamorph errors."""


# --- container / input format -------------------------------------------
class MalformedHeader(LineaMorphError):
    """Mask header is missing a required key, duplicates one, or is not JSON."""


class DimensionMismatch(LineaMorphError):
    """Payload length does not equal nx*ny*nz."""


class UnsupportedEncoding(LineaMorphError):
    """Header names an encoding this reader does not implement."""


class IoFailure(LineaMorphError):
    """Underlying file read/write failed."""


# --- volume geometry ------------------------------------------------------
class EmptyMask(LineaMorphError):
    """Operation requires at least one occupied voxel."""


class EmptyIntersection(LineaMorphError):
    """Requested plane or range contains no occupied voxels."""


# --- interslice -----------------------------------------------------------
class EmptySlice(LineaMorphError):
    """Distance field requested for a slice with no occupied pixels."""


class TooFewSlices(LineaMorphError):
    """Interpolation needs at least two delineated slices."""


class DimsMismatch(LineaMorphError):
    """Two masks passed to a comparison do not share dimensions."""


# --- morphometry ----------------------------------------------------------
class FragmentedMidline(LineaMorphError):
    """Midline has an interior gap too long to bridge."""


class DegenerateCurve(LineaMorphError):
    """Curve has fewer than two points."""


class DegenerateChord(LineaMorphError):
    """Xiphoid and pubis projections coincide; no chord direction."""


class EmptyCrossSection(LineaMorphError):
    """Axial slice holds no measurable cross-section."""


class NoMeasurableSlices(LineaMorphError):
    """No axial slice in the landmark range produced a measurement."""


class TooFewMeasured(LineaMorphError):
    """Gap filling needs at least two measured samples."""


class CurveProfileMismatch(LineaMorphError):
    """Curve and profile cover disjoint z ranges."""


class LandmarkOutOfRange(LineaMorphError):
    """A landmark-relative level falls outside the curve's arc range."""


# --- statistics -----------------------------------------------------------
class EmptySample(LineaMorphError):
    """Summary statistics of an empty sample."""


class SampleTooSmall(LineaMorphError):
    """Test preconditions on sample size not met."""


class ZeroVariance(LineaMorphError):
    """Sample has no spread where spread is required."""


class TooFewGroups(LineaMorphError):
    """k-group test called with fewer than two groups."""


class ConstantVariable(LineaMorphError):
    """Correlation undefined for a constant variable."""


class UnderAge(LineaMorphError):
    """Subject below the 18-year cohort floor."""


class EmptyGroup(LineaMorphError):
    """Representative subject requested from an empty group."""


class MissingVariable(LineaMorphError):
    """A required variable is absent from a subject record."""


# --- phantom --------------------------------------------------------------
class SpecInvalid(LineaMorphError):
    """Phantom specification violates its invariants."""
