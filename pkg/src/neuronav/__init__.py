"""Pre-surgery neuronavigation pipeline.

CT slices in, registered scene out: volume ingestion, skull/ventricle
segmentation, surface extraction, fiducial-marker pose estimation, and a
command-driven scene for overlay verification.
"""

from .transforms import RigidPose, RigidTransform, rigid_compose, rigid_inverse
from .dicom import SliceRecord, parse_dicom_slice
from .volume import VoxelVolume, assemble_volume, load_raw_volume, read_raw_volume, \
    save_raw_volume, write_raw_volume
from .segmentation import LabelMask, SegmentationConfig, connected_components, \
    dice_coefficient, morphology, segment_skull, segment_ventricles, threshold_mask
from .mesh import MeshStats, TriangleMesh, export_obj, import_obj, marching_cubes, \
    mesh_stats, weld_and_normals
from .registration import CameraIntrinsics, DetectionResult, MarkerSpec, \
    detect_marker, homography_dlt, pose_from_homography, refine_pose, \
    render_marker_image
from .scene import ModelNode, SceneState, apply_command, default_scene, \
    parse_scene, place_models, serialize_scene
from .overlay import render_overlay
from .pipeline import PipelineConfig, run_pipeline

__version__ = "0.1.0"
