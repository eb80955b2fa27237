"""flava: find, localize, adjust, verify. An interactive annotation suite for
LiDAR point clouds with KITTI-format I/O, an HTTP service and an evaluation
stack (rotated-box IoU, class-thresholded AP)."""

from .engine import (
    AnnotationSession,
    BevEdge,
    Edge,
    OperationEvent,
    OperationKind,
    View,
    ViewEdit,
    apply_view_edit,
    auto_height,
    replay_log,
    state_digest,
    verify_projection,
)
from .archive import export_session, import_session
from .evaluation import (
    EvalReport,
    MatchResult,
    average_precision,
    bev_iou,
    evaluate,
    iou_3d,
    match_annotations,
    mean_iou,
)
from .geometry import (
    Box3D,
    Calibration,
    Category,
    FrustumSelection,
    ImagePoint,
    Rect2D,
    bev_polygon,
    box_corners,
    convex_intersection_area,
    frustum_select,
    points_in_bev_footprint,
    points_in_box,
    project_point,
    project_points,
)
from .kitti_io import (
    LabelRecord,
    PointCloud,
    SequenceDescriptor,
    box_from_label,
    label_from_box,
    load_calibration,
    load_point_cloud,
    load_sequence,
    read_labels,
    scan_data_root,
    write_labels,
)

__version__ = "0.1.0"
