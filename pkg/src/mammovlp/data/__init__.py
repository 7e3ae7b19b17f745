"""Atlas mining, preprocessing, and manifest handling."""

from .extract import (
    PROFILES,
    ExtractionResult,
    LayoutProfile,
    OcrAdapter,
    extract_pairs,
    extract_pairs_from_layouts,
)
from .manifest import (
    ALLOWED_VIEWS,
    LabeledSample,
    Manifest,
    cap_class_counts,
    filter_views,
    load_manifest,
    write_manifest,
)
from .pairs import (
    CaptionRecord,
    ExtractedFigure,
    ImageTextPair,
    RejectRecord,
    expand_shared_captions,
    read_pairs,
    write_pairs,
)
from .pdfreader import Box, PageImage, PageLayout, TextBlock, read_page_layouts
from .preprocess import (
    BreastDetector,
    CropResult,
    DetectionBox,
    crop_breast,
    resize_letterbox,
)

__all__ = [
    "ALLOWED_VIEWS",
    "Box",
    "BreastDetector",
    "CaptionRecord",
    "CropResult",
    "DetectionBox",
    "ExtractedFigure",
    "ExtractionResult",
    "ImageTextPair",
    "LabeledSample",
    "LayoutProfile",
    "Manifest",
    "OcrAdapter",
    "PROFILES",
    "PageImage",
    "PageLayout",
    "RejectRecord",
    "TextBlock",
    "cap_class_counts",
    "crop_breast",
    "expand_shared_captions",
    "extract_pairs",
    "extract_pairs_from_layouts",
    "filter_views",
    "load_manifest",
    "read_page_layouts",
    "read_pairs",
    "resize_letterbox",
    "write_manifest",
    "write_pairs",
]
