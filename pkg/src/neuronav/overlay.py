"""CPU overlay renderer: depth-buffered flat shading with alpha compositing.

Deterministic by construction: fragments are resolved by a stable lexsort
on (pixel, depth, triangle index), so identical scenes give byte-identical
images. Transparency is single-layer: only the nearest transparent
fragment per pixel is composited (enough for the skull-over-background
verification views).
"""

from __future__ import annotations

import numpy as np

from .errors import MissingMesh, MissingPose
from .mesh import TriangleMesh
from .registration.camera import CameraIntrinsics
from .scene import SceneState
from .transforms import RigidTransform, rigid_compose

BACKGROUND_RGB = (30, 30, 34)
VIEW_PRESETS = ("top", "left", "right", "front")

_NEAR_MM = 1.0
_CHUNK = 4096


def render_overlay(scene: SceneState, meshes: dict[str, TriangleMesh],
                   cam: CameraIntrinsics, background: np.ndarray | None = None,
                   view: str | None = None) -> np.ndarray:
    """Render visible scene nodes over a background; returns (H,W,3) uint8.

    With view=None the scene's marker pose places the models in front of
    the registration camera (raises MissingPose without one). A view
    preset instead orbits a virtual camera around the model group: "top"
    looks down the patient +Z axis, "left"/"right" along -/+X, "front"
    along +Y.
    """
    if background is None:
        frame = np.empty((cam.height, cam.width, 3), dtype=np.uint8)
        frame[:] = BACKGROUND_RGB
    else:
        frame = np.asarray(background, dtype=np.uint8).copy()
        if frame.ndim == 2:
            frame = np.stack([frame] * 3, axis=-1)
        if frame.shape != (cam.height, cam.width, 3):
            raise ValueError("background size does not match the camera")

    visible = [n for n in scene.nodes if n.visible]
    for node in visible:
        if node.mesh_ref not in meshes:
            raise MissingMesh(f"scene references mesh '{node.mesh_ref}'")
    if view is None:
        if scene.marker_pose is None:
            raise MissingPose("scene has no marker pose")
    elif view not in VIEW_PRESETS:
        raise ValueError(f"unknown view preset '{view}'")
    if not visible:
        return frame

    node_verts_cam: list[np.ndarray] = []
    if view is None:
        for node in visible:
            placed = rigid_compose(scene.marker_pose, node.transform)
            node_verts_cam.append(placed.apply(meshes[node.mesh_ref].vertices))
    else:
        # frame against every scene mesh so toggling nodes keeps the view fixed
        framing = [meshes[n.mesh_ref].vertices for n in scene.nodes
                   if n.mesh_ref in meshes]
        eye_r, eye_t = _preset_extrinsics(view, framing, cam)
        for node in visible:
            v = meshes[node.mesh_ref].vertices
            node_verts_cam.append(v @ eye_r.T + eye_t)

    depth = np.full((cam.height, cam.width), np.inf)
    opaque = [i for i, n in enumerate(visible) if n.rgba[3] >= 1.0]
    translucent = [i for i, n in enumerate(visible) if n.rgba[3] < 1.0]

    for i in opaque:
        _rasterize_node(frame, depth, node_verts_cam[i],
                        meshes[visible[i].mesh_ref].triangles,
                        visible[i].rgba, cam, under=None)
    for i in translucent:
        _rasterize_node(frame, depth, node_verts_cam[i],
                        meshes[visible[i].mesh_ref].triangles,
                        visible[i].rgba, cam, under=frame.copy())
    return frame


def _preset_extrinsics(view: str, vertex_sets: list[np.ndarray],
                       cam: CameraIntrinsics):
    """World-to-camera (R, t) for an orbit preset fitted to the geometry."""
    allv = np.concatenate([v for v in vertex_sets if len(v)]) if vertex_sets else None
    if allv is None or len(allv) == 0:
        center = np.zeros(3)
        radius = 100.0
    else:
        lo = allv.min(axis=0)
        hi = allv.max(axis=0)
        center = 0.5 * (lo + hi)
        radius = max(float(np.linalg.norm(hi - lo)) / 2.0, 1e-3)

    directions = {
        "top": (np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0])),
        "left": (np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])),
        "right": (np.array([-1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])),
        "front": (np.array([0.0, -1.0, 0.0]), np.array([0.0, 0.0, 1.0])),
    }
    outward, up = directions[view]
    focal = min(cam.fx, cam.fy)
    half_extent = min(cam.cx, cam.cy)
    dist = focal * radius / (0.45 * half_extent)
    eye = center + outward * dist

    z = (center - eye) / np.linalg.norm(center - eye)
    x = np.cross(z, up)
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    r_wc = np.stack([x, y, z])
    return r_wc, -r_wc @ eye


def _rasterize_node(frame, depth, verts_cam, triangles, rgba, cam, under):
    """Draw one mesh into frame/depth. `under` holds the pre-composite image
    for translucent nodes (alpha blend against it where the node is nearest)."""
    if len(triangles) == 0:
        return
    tri_v = verts_cam[triangles]  # (T,3,3)
    in_front = np.all(tri_v[:, :, 2] > _NEAR_MM, axis=1)
    tri_v = tri_v[in_front]
    if len(tri_v) == 0:
        return

    # flat headlight shading from the face normal
    face_n = np.cross(tri_v[:, 1] - tri_v[:, 0], tri_v[:, 2] - tri_v[:, 0])
    norms = np.linalg.norm(face_n, axis=1)
    ok = norms > 0
    tri_v = tri_v[ok]
    face_n = face_n[ok] / norms[ok, None]
    shade = 0.35 + 0.65 * np.abs(face_n[:, 2])
    base = np.array(rgba[:3], dtype=float)
    tri_rgb = np.clip(shade[:, None] * base[None, :] * 255.0, 0, 255)

    z = tri_v[:, :, 2]
    u = cam.fx * tri_v[:, :, 0] / z + cam.cx
    v = cam.fy * tri_v[:, :, 1] / z + cam.cy
    inv_z = 1.0 / z

    alpha = float(rgba[3])
    h, w = depth.shape
    layer_depth = np.full((h, w), np.inf) if under is not None else depth
    layer_rgb = np.zeros((h, w, 3)) if under is not None else None

    for start in range(0, len(tri_v), _CHUNK):
        sl = slice(start, start + _CHUNK)
        _rasterize_chunk(frame, depth, layer_depth, layer_rgb,
                         u[sl], v[sl], inv_z[sl], tri_rgb[sl],
                         start, w, h, translucent=under is not None)

    if under is not None:
        covered = np.isfinite(layer_depth) & (layer_depth <= depth)
        blend = alpha * layer_rgb[covered] + (1.0 - alpha) * under[covered].astype(float)
        frame[covered] = np.clip(np.rint(blend), 0, 255).astype(np.uint8)


def _rasterize_chunk(frame, depth, layer_depth, layer_rgb, u, v, inv_z,
                     tri_rgb, tri_offset, w, h, translucent):
    u0 = np.clip(np.floor(u.min(axis=1)), 0, w - 1).astype(np.int64)
    u1 = np.clip(np.ceil(u.max(axis=1)), 0, w - 1).astype(np.int64)
    v0 = np.clip(np.floor(v.min(axis=1)), 0, h - 1).astype(np.int64)
    v1 = np.clip(np.ceil(v.max(axis=1)), 0, h - 1).astype(np.int64)
    on_screen = (u.max(axis=1) >= 0) & (u.min(axis=1) <= w - 1) \
        & (v.max(axis=1) >= 0) & (v.min(axis=1) <= h - 1)

    widths = np.where(on_screen, u1 - u0 + 1, 0)
    heights = np.where(on_screen, v1 - v0 + 1, 0)
    areas = widths * heights
    if areas.sum() == 0:
        return

    tri_idx = np.repeat(np.arange(len(u)), areas)
    local = np.arange(areas.sum()) - np.repeat(np.cumsum(areas) - areas, areas)
    px = u0[tri_idx] + local % np.maximum(widths[tri_idx], 1)
    py = v0[tri_idx] + local // np.maximum(widths[tri_idx], 1)

    ax, ay = u[tri_idx, 0], v[tri_idx, 0]
    bx, by = u[tri_idx, 1], v[tri_idx, 1]
    cx_, cy_ = u[tri_idx, 2], v[tri_idx, 2]
    d = (by - cy_) * (ax - cx_) + (cx_ - bx) * (ay - cy_)
    tiny = np.abs(d) < 1e-12
    d = np.where(tiny, 1.0, d)
    l0 = ((by - cy_) * (px - cx_) + (cx_ - bx) * (py - cy_)) / d
    l1 = ((cy_ - ay) * (px - cx_) + (ax - cx_) * (py - cy_)) / d
    l2 = 1.0 - l0 - l1
    eps = -1e-9
    covered = (~tiny) & (l0 >= eps) & (l1 >= eps) & (l2 >= eps)
    if not covered.any():
        return

    tri_idx = tri_idx[covered]
    px, py = px[covered], py[covered]
    l0, l1, l2 = l0[covered], l1[covered], l2[covered]
    frag_inv_z = (l0 * inv_z[tri_idx, 0] + l1 * inv_z[tri_idx, 1]
                  + l2 * inv_z[tri_idx, 2])
    frag_z = 1.0 / frag_inv_z
    pix = py * w + px

    order = np.lexsort((tri_idx, frag_z, pix))
    pix, frag_z, tri_idx = pix[order], frag_z[order], tri_idx[order]
    first = np.ones(len(pix), dtype=bool)
    first[1:] = pix[1:] != pix[:-1]
    pix, frag_z, tri_idx = pix[first], frag_z[first], tri_idx[first]

    target = layer_depth.reshape(-1)
    closer = frag_z < target[pix]
    pix, frag_z, tri_idx = pix[closer], frag_z[closer], tri_idx[closer]
    target[pix] = frag_z
    if translucent:
        layer_rgb.reshape(-1, 3)[pix] = tri_rgb[tri_idx]
    else:
        frame.reshape(-1, 3)[pix] = np.clip(
            np.rint(tri_rgb[tri_idx]), 0, 255).astype(np.uint8)
