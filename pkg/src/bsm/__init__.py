"""Binary stereo matching: BRIEF-style descriptors, binary-mask aggregation,
winner-take-all disparity selection and voting refinement."""

import warnings

# numba probes TBB at first parallel launch and warns when it is too old
warnings.filterwarnings("ignore", message=".*TBB.*")

from .bits import BitString, masked_hamming  # noqa: E402
from .config import BsmConfig  # noqa: E402
from .descriptor import (  # noqa: E402
    DescriptorField,
    SamplingPattern,
    compute_descriptor,
    compute_field,
    compute_mask,
    generate_pattern,
)
from .errors import DimensionMismatch, EmptyRegion, FormatError, LengthMismatch  # noqa: E402
from .imageio import (  # noqa: E402
    DisparityMap,
    load_gt_disparity,
    load_image,
    save_disparity,
    to_gray,
    to_lab,
)
from .matcher import MatchParams, cost, wta  # noqa: E402
from .pipeline import MatchResult, run_bsm  # noqa: E402
from .refine import RefineParams, lr_check, vote_refine  # noqa: E402

__version__ = "0.1.0"
