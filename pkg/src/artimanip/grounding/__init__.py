from .providers import (
    OfflineDescriber,
    OfflineGrounder,
    OfflineSegmenter,
    PerturbedSegmenter,
    Providers,
    describe_template,
    dilate_box,
    dominant_part,
    make_providers,
    tight_box,
)
from .reconstruct import (
    GroundingResult,
    backproject,
    backproject_pixels,
    ground_part,
    mask_from_pbm,
    mask_iou,
    mask_to_pbm,
    read_pbm,
    write_pbm,
)
from .remote import RemoteClient
from .types import (
    BBox,
    GroundingError,
    ImageRef,
    Mask,
    ProviderConfig,
    gt_mask,
    image_ref,
    limit_sentences,
)
