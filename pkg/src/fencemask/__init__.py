"""FenceMask occlusion augmentation, baseline masks and occlusion analysis."""
from fencemask.analysis import (
    BBox,
    Corpus,
    CorpusImage,
    OcclusionReport,
    calibrate_to_occlusion,
    object_occlusion_ratio,
    run_failure_study,
    synthesize_small_object_corpus,
)
from fencemask.baselines import (
    CutoutConfig,
    GridMaskConfig,
    HideAndSeekConfig,
    METHODS,
    RandomErasingConfig,
    cutout_mask,
    gridmask_mask,
    hide_and_seek_mask,
    make_config,
    random_erasing_mask,
)
from fencemask.geometry import (
    BinaryMask,
    FenceConfig,
    FenceSample,
    RelativeFenceConfig,
    combine_fences,
    generate_fence_mask,
    occluded_fraction,
    rasterize_stripes,
    sample_fence,
)
from fencemask.pipeline import ScheduleConfig, apply_mask, augment, schedule_probability

__version__ = "0.1.0"
