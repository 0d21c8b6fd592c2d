"""Sparse-semantic-mask scene engine: instance scene graphs, detector
ingestion, label-map rasterization, conditional-normalization and
attention kernels with exact gradients, alpha compositing, and style
tools."""

from .vocab import AttributeDef, AttributeVocab, ClassDef, ClassVocab
from .scene import (Instance, InstanceMask, SceneGraph, build_hierarchy,
                    delete_instance, duplicate_instance, move_instance,
                    resolve_roles, scale_instance, set_attributes)
from .raster import (AttributePlane, LabelMaps, attribute_plane, export_png,
                     export_raw, export_rgb_png, import_png, import_raw,
                     rasterize, split_bg_fg)
from .ingest import (Detection, filter_and_merge, ingest_pipeline, mask_iou,
                     nms, parse_detections)
from .compositor import blend, blend_backward, blend_multi, blend_multi_backward
from .stylekit import (StyleDistribution, fit_distribution, interpolate_styles,
                       sample_styles, slerp)

__version__ = "0.1.0"
