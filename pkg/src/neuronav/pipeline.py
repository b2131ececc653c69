"""End-to-end automated sequence: CT input -> masks -> meshes -> scene.

Every stage is wrapped with stage attribution so a failure reports where
it happened. Outputs are content-addressed in a manifest; identical inputs
produce byte-identical artifacts and manifest.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import time
import zipfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from .dicom import parse_dicom_slice
from .errors import NeuronavError, PipelineStageError
from .mesh import TriangleMesh, export_obj, marching_cubes, weld_and_normals
from .scene import DEFAULT_OFFSET_MM, default_scene, serialize_scene
from .segmentation import SegmentationConfig, segment_skull, segment_ventricles
from .volume import VoxelVolume, load_raw_volume, parse_raw_volume_bytes

logger = logging.getLogger(__name__)

WELD_EPS_MM = 1e-6


@dataclass(frozen=True)
class PipelineConfig:
    inputs: tuple[Path, ...]
    output_dir: Path
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    iso: float = 0.5
    offset_mm: tuple[float, float, float] = DEFAULT_OFFSET_MM
    marker_path: Path | None = None
    camera_path: Path | None = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(Path(p) for p in self.inputs))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        for p in self.inputs:
            if not p.exists():
                raise FileNotFoundError(f"input does not exist: {p}")
        for p in (self.marker_path, self.camera_path):
            if p is not None and not Path(p).exists():
                raise FileNotFoundError(f"referenced file does not exist: {p}")

    @staticmethod
    def from_json(text: str, base_dir: Path | None = None) -> "PipelineConfig":
        doc = json.loads(text)
        base = Path(base_dir) if base_dir else Path(".")

        def resolve(p):
            p = Path(p)
            return p if p.is_absolute() else base / p

        raw_inputs = doc["input"]
        if isinstance(raw_inputs, str):
            raw_inputs = [raw_inputs]
        inputs = [resolve(p) for p in raw_inputs]
        seg = SegmentationConfig(**doc.get("segmentation", {}))
        return PipelineConfig(
            inputs=tuple(inputs),
            output_dir=resolve(doc["output_dir"]),
            segmentation=seg,
            iso=float(doc.get("iso", 0.5)),
            offset_mm=tuple(doc.get("offset_mm", DEFAULT_OFFSET_MM)),
            marker_path=resolve(doc["marker"]) if "marker" in doc else None,
            camera_path=resolve(doc["camera"]) if "camera" in doc else None,
        )

    @staticmethod
    def load(path) -> "PipelineConfig":
        path = Path(path)
        return PipelineConfig.from_json(path.read_text(), base_dir=path.parent)

    def to_doc(self) -> dict:
        seg = self.segmentation
        return {
            "input": [str(p) for p in self.inputs],
            "output_dir": str(self.output_dir),
            "iso": self.iso,
            "offset_mm": list(self.offset_mm),
            "segmentation": {
                "bone_hu_min": seg.bone_hu_min,
                "csf_hu_min": seg.csf_hu_min,
                "csf_hu_max": seg.csf_hu_max,
                "min_component_voxels": seg.min_component_voxels,
                "closing_radius_vox": seg.closing_radius_vox,
                "connectivity": seg.connectivity,
            },
        }


@contextmanager
def _stage(name: str):
    t0 = time.perf_counter()
    try:
        yield
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(name, exc) from exc
    logger.info("stage %s: %.2fs", name, time.perf_counter() - t0)


def ingest_inputs(paths) -> VoxelVolume:
    """Load a volume from a raw sidecar, DICOM files/dir, or a DICOM zip."""
    paths = [Path(p) for p in paths]
    if len(paths) == 1 and paths[0].is_dir():
        paths = sorted(p for p in paths[0].iterdir() if p.is_file())
    if not paths:
        raise NeuronavError("no input files")

    first_bytes = paths[0].open("rb").read(4)
    if len(paths) == 1 and first_bytes[:2] == b"PK":
        with zipfile.ZipFile(paths[0]) as zf:
            blobs = [zf.read(n) for n in sorted(zf.namelist())
                     if not n.endswith("/")]
        return assemble_dicom_bytes(blobs)
    if len(paths) == 1 and not _looks_like_dicom(paths[0]):
        return load_raw_volume(paths[0])
    return assemble_dicom_bytes([p.read_bytes() for p in paths])


def _looks_like_dicom(path: Path) -> bool:
    with path.open("rb") as f:
        head = f.read(132)
    return len(head) >= 132 and head[128:132] == b"DICM"


def assemble_dicom_bytes(blobs: list[bytes]) -> VoxelVolume:
    from .volume import assemble_volume
    slices = [parse_dicom_slice(b) for b in blobs]
    return assemble_volume(slices)


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run ingest -> segment -> mesh -> export -> scene; return the manifest."""
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)

    with _stage("ingest"):
        volume = ingest_inputs(cfg.inputs)

    with _stage("segment_skull"):
        skull_mask = segment_skull(volume, cfg.segmentation)
    with _stage("segment_ventricles"):
        vent_mask = segment_ventricles(volume, skull_mask, cfg.segmentation)

    with _stage("mesh_skull"):
        skull_mesh = weld_and_normals(
            marching_cubes(skull_mask, volume, iso=cfg.iso), WELD_EPS_MM)
    with _stage("mesh_ventricles"):
        vent_mesh = weld_and_normals(
            marching_cubes(vent_mask, volume, iso=cfg.iso), WELD_EPS_MM)

    artifacts: list[tuple[str, Path]] = []
    with _stage("export"):
        for name, mesh in (("skull", skull_mesh), ("ventricles", vent_mesh)):
            path = out / f"{name}.obj"
            export_obj(mesh, path)
            artifacts.append((name, path))

    with _stage("scene"):
        scene = default_scene(offset_mm=cfg.offset_mm)
        scene_path = out / "scene.json"
        scene_path.write_text(serialize_scene(scene))
        artifacts.append(("scene", scene_path))

    with _stage("manifest"):
        manifest = {
            "artifacts": [
                {
                    "name": name,
                    "file": path.name,
                    "sha256": hashlib.sha256(path.read_bytes()).hexdigest(),
                    "bytes": path.stat().st_size,
                }
                for name, path in sorted(artifacts)
            ],
            "config": cfg.to_doc(),
        }
        manifest_path = out / "manifest.json"
        manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")

    return manifest


def segment_and_mesh(volume: VoxelVolume, seg_cfg: SegmentationConfig,
                     iso: float = 0.5) -> dict[str, TriangleMesh]:
    """The in-memory core of the pipeline (used by the upload endpoint)."""
    with _stage("segment_skull"):
        skull_mask = segment_skull(volume, seg_cfg)
    with _stage("segment_ventricles"):
        vent_mask = segment_ventricles(volume, skull_mask, seg_cfg)
    with _stage("mesh_skull"):
        skull = weld_and_normals(marching_cubes(skull_mask, volume, iso=iso), WELD_EPS_MM)
    with _stage("mesh_ventricles"):
        vents = weld_and_normals(marching_cubes(vent_mask, volume, iso=iso), WELD_EPS_MM)
    return {"skull": skull, "ventricles": vents}


def volume_from_upload(blob: bytes) -> VoxelVolume:
    """Parse an uploaded body: zip of DICOM slices or a raw-volume sidecar."""
    with _stage("ingest"):
        if blob[:2] == b"PK":
            with zipfile.ZipFile(io.BytesIO(blob)) as zf:
                blobs = [zf.read(n) for n in sorted(zf.namelist())
                         if not n.endswith("/")]
            return assemble_dicom_bytes(blobs)
        return parse_raw_volume_bytes(blob)
