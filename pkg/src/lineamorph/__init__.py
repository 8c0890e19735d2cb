"""Batch morphometry of midline abdominal-wall sheets from voxel masks.

Submodules:
  volume      mask container I/O, validation, median sagittal reslicing
  interslice  dense reconstruction from sparsely delineated slices
  morphometry midline curve, length, sagitta, width/IRD profiles, landmarks
  cohortstats normality-gated group tests, correlations, representatives
  phantom     closed-form synthetic ribbons (the measurement oracle)
  pipeline    batch runs, reports, plots, mesh export, CLI
"""

from .volume import (
    LandmarkSet,
    PlaneImage,
    ValidationReport,
    VoxelMask,
    load_landmarks,
    load_mask,
    median_sagittal_slice,
    save_landmarks,
    save_mask,
    validate_mask,
)
from .interslice import (
    DistanceField,
    SparseDelineation,
    dice,
    interpolate_stack,
    sdf_of_slice,
)
from .morphometry import (
    LandmarkWidths,
    MetricsRecord,
    MidlineCurve,
    WidthProfile,
    axial_cross_section,
    compute_sagitta,
    curve_length,
    extract_midline,
    fill_profile_gaps,
    landmark_widths,
    normalize_profile,
    subject_metrics,
    width_profile,
)
from .cohortstats import (
    CorrelationMatrix,
    GroupLabel,
    SubjectRecord,
    TestResult,
    anova,
    assign_groups,
    compare,
    kruskal_wallis,
    mann_whitney,
    pearson_matrix,
    representative_subject,
    shapiro_wilk,
    summarize,
    t_test,
)
from .phantom import GroundTruth, PhantomSpec, generate_phantom, phantom_cohort

__version__ = "0.1.0"
