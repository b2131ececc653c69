"""Command-line entry points.

    neuronav pipeline run <config.json>
    neuronav detect <image.png> <marker.txt> <camera.json>
    neuronav overlay <scene.json> <camera.json> [--view top|left|right|front]
    neuronav serve <manifest.json> --port N
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click
import numpy as np

from .errors import NeuronavError, PipelineStageError

logger = logging.getLogger(__name__)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log stage timings.")
def main(verbose: bool):
    """Pre-surgery neuronavigation pipeline."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")


def _fail(err: Exception) -> None:
    if isinstance(err, PipelineStageError):
        message = str(err)
    elif isinstance(err, NeuronavError):
        message = f"{err.__class__.__name__}: {err}"
    else:
        message = str(err)
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


@main.group()
def pipeline():
    """Automated upload-to-model sequence."""


@pipeline.command("run")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
def pipeline_run(config: str):
    """Run the full pipeline described by a config document."""
    from .pipeline import PipelineConfig, run_pipeline

    try:
        cfg = PipelineConfig.load(config)
        manifest = run_pipeline(cfg)
    except Exception as e:
        _fail(e)
    click.echo(json.dumps(manifest, indent=2))


@main.command()
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.argument("marker", type=click.Path(exists=True, dir_okay=False))
@click.argument("camera", type=click.Path(exists=True, dir_okay=False))
def detect(image: str, marker: str, camera: str):
    """Detect the marker in a grayscale PNG and print the pose."""
    from PIL import Image

    from .registration import CameraIntrinsics, MarkerSpec, detect_marker

    try:
        cam = CameraIntrinsics.load(camera)
        spec = MarkerSpec.load(marker)
        img = np.asarray(Image.open(image).convert("L"))
        result = detect_marker(img, spec, cam)
    except Exception as e:
        _fail(e)
    click.echo(json.dumps({
        "id": result.id,
        "corners_px": result.corners_px.tolist(),
        "rotation": list(result.pose.rotation),
        "translation_mm": list(result.pose.translation),
        "reprojection_rms_px": result.reprojection_rms_px,
    }, indent=2))


@main.command()
@click.argument("scene", type=click.Path(exists=True, dir_okay=False))
@click.argument("camera", type=click.Path(exists=True, dir_okay=False))
@click.option("--view", type=click.Choice(["top", "left", "right", "front"]),
              default=None, help="Orbit preset instead of the scene camera.")
@click.option("--background", type=click.Path(exists=True, dir_okay=False),
              default=None, help="PNG to composite over.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Output path (default overlay[_VIEW].png next to the scene).")
def overlay(scene: str, camera: str, view: str | None, background: str | None,
            out: str | None):
    """Render the scene's visible models to a PNG."""
    from PIL import Image

    from .mesh import import_obj
    from .overlay import render_overlay
    from .registration import CameraIntrinsics
    from .scene import parse_scene

    try:
        scene_path = Path(scene)
        state = parse_scene(scene_path.read_text())
        cam = CameraIntrinsics.load(camera)
        meshes = {}
        for node in state.nodes:
            mesh_file = scene_path.parent / f"{node.mesh_ref}.obj"
            if mesh_file.exists():
                meshes[node.mesh_ref] = import_obj(mesh_file)
        bg = None
        if background:
            bg = np.asarray(Image.open(background).convert("RGB"))
        frame = render_overlay(state, meshes, cam, background=bg, view=view)
    except Exception as e:
        _fail(e)

    if out is None:
        suffix = f"_{view}" if view else ""
        out = str(scene_path.parent / f"overlay{suffix}.png")
    Image.fromarray(frame).save(out)
    click.echo(out)


@main.command()
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--port", type=int, default=None,
              help="Port (default 8754, or NEURONAV_PORT).")
@click.option("--host", type=str, default="127.0.0.1")
def serve(manifest: str, port: int | None, host: str):
    """Serve the scene, meshes, commands and event stream over HTTP."""
    from .service import load_session, serve as run_service

    if port is None:
        port = int(os.environ.get("NEURONAV_PORT", "8754"))
    try:
        session = load_session(manifest)
        click.echo(f"serving on http://{host}:{port}")
        run_service(session, port=port, host=host)
    except Exception as e:
        _fail(e)


if __name__ == "__main__":
    main()
