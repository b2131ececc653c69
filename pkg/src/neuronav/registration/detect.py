"""Marker detection: threshold, quad fit, decode, subpixel corners, pose.

The pipeline mirrors classic square-tag detectors: adaptive threshold,
connected dark regions, convex-hull quadrilateral fit, projective unwarp
of the cell grid with per-cell majority vote, payload decode against the
spec (fixing the rotation), gradient-based subpixel corner refinement
(edge-line intersection, with a 5x5 structure-tensor fallback for tiny
quads), then DLT homography -> pose -> damped least-squares refinement.
Both planar pose hypotheses are refined and the lower-RMS one wins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

from ..errors import DecodeFailed, NoMarkerFound
from ..transforms import RigidPose
from .camera import CameraIntrinsics
from .homography import homography_dlt, pose_from_homography
from .marker import MarkerSpec
from .refine import ambiguity_flip, refine_pose

THRESHOLD_WINDOW = 31
THRESHOLD_OFFSET = 7
CORNER_WINDOW = 5
MIN_REGION_AREA = 60  # px
MAX_CANDIDATES = 8
MIN_CONTRAST = 30.0


@dataclass(frozen=True)
class DetectionResult:
    """Detected marker: image corners (TL,TR,BR,BL in marker frame), id, pose."""

    corners_px: np.ndarray  # (4,2) float
    id: int
    pose: RigidPose
    reprojection_rms_px: float

    def __post_init__(self):
        c = np.asarray(self.corners_px, dtype=float).reshape(4, 2)
        object.__setattr__(self, "corners_px", c)
        if self.reprojection_rms_px < 0:
            raise ValueError("reprojection RMS must be >= 0")


def box_mean(image: np.ndarray, window: int) -> np.ndarray:
    """Local mean over a window x window box, clipped at the borders."""
    half = window // 2
    f = image.astype(np.float64)
    integral = np.zeros((f.shape[0] + 1, f.shape[1] + 1))
    integral[1:, 1:] = f.cumsum(axis=0).cumsum(axis=1)

    rows = np.arange(f.shape[0])
    cols = np.arange(f.shape[1])
    r0 = np.clip(rows - half, 0, f.shape[0])[:, None]
    r1 = np.clip(rows + half + 1, 0, f.shape[0])[:, None]
    c0 = np.clip(cols - half, 0, f.shape[1])[None, :]
    c1 = np.clip(cols + half + 1, 0, f.shape[1])[None, :]
    total = integral[r1, c1] - integral[r0, c1] - integral[r1, c0] + integral[r0, c0]
    count = (r1 - r0) * (c1 - c0)
    return total / count


def adaptive_threshold(image: np.ndarray, window: int = THRESHOLD_WINDOW,
                       offset: float = THRESHOLD_OFFSET) -> np.ndarray:
    """Mask of pixels darker than their local box mean minus the offset."""
    return image.astype(np.float64) < (box_mean(image, window) - offset)


def _fit_quad(points_uv: np.ndarray) -> np.ndarray | None:
    """Max-area quadrilateral over the convex hull of the points.

    Returns 4 corners ordered by ascending angle about their centroid,
    or None when the hull is too thin to support a quad.
    """
    try:
        hull = ConvexHull(points_uv)
    except QhullError:
        return None
    hv = points_uv[hull.vertices].astype(float)  # counter-clockwise in (u,v)
    m = len(hv)
    if m < 4:
        return None

    def tri_area2(a, b, c):
        return abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    def quad_area2(idx):
        a, b, c, d = hv[idx[0]], hv[idx[1]], hv[idx[2]], hv[idx[3]]
        return tri_area2(a, b, c) + tri_area2(a, c, d)

    # seed with the diagonal extremes, then coordinate-ascent on hull indices
    seeds = [
        int(np.argmax(hv[:, 0] + hv[:, 1])),
        int(np.argmax(hv[:, 0] - hv[:, 1])),
        int(np.argmin(hv[:, 0] + hv[:, 1])),
        int(np.argmin(hv[:, 0] - hv[:, 1])),
    ]
    idx = sorted(set(seeds))
    while len(idx) < 4:  # degenerate seed overlap: pad with spread hull points
        for cand in np.linspace(0, m - 1, 8, dtype=int):
            if int(cand) not in idx:
                idx.append(int(cand))
                break
        else:
            return None
        idx = sorted(set(idx))
    idx = sorted(idx[:4])

    improved = True
    passes = 0
    while improved and passes < 12:
        improved = False
        passes += 1
        for slot in range(4):
            best = idx[slot]
            best_area = quad_area2(idx)
            lo = idx[(slot - 1) % 4]
            hi = idx[(slot + 1) % 4]
            j = (lo + 1) % m
            while j != hi:
                trial = list(idx)
                trial[slot] = j
                order = trial[:slot] + [j] + trial[slot + 1:]
                area = quad_area2(trial)
                if area > best_area:
                    best, best_area = j, area
                j = (j + 1) % m
            if best != idx[slot]:
                idx[slot] = best
                improved = True
    corners = hv[idx]
    center = corners.mean(axis=0)
    order = np.argsort(np.arctan2(corners[:, 1] - center[1], corners[:, 0] - center[0]))
    return corners[order]


def _sample_bilinear(image_f: np.ndarray, uv: np.ndarray) -> np.ndarray:
    h, w = image_f.shape
    u = np.clip(uv[:, 0], 0, w - 1.001)
    v = np.clip(uv[:, 1], 0, h - 1.001)
    u0 = np.floor(u).astype(int)
    v0 = np.floor(v).astype(int)
    fu = u - u0
    fv = v - v0
    return ((1 - fu) * (1 - fv) * image_f[v0, u0]
            + fu * (1 - fv) * image_f[v0, u0 + 1]
            + (1 - fu) * fv * image_f[v0 + 1, u0]
            + fu * fv * image_f[v0 + 1, u0 + 1])


def _unwarp_cells(image_f: np.ndarray, quad: np.ndarray, spec: MarkerSpec,
                  cam: CameraIntrinsics):
    """Sample the cell grid (plus margin/border rings) through the quad.

    Returns (payload_bits, border_ok) or None when contrast is inadequate.
    """
    w = spec.cells_per_side
    grid_corners = np.array([(0.0, w), (w, w), (w, 0.0), (0.0, 0.0)])
    try:
        h_grid = homography_dlt(grid_corners, quad)
    except Exception:
        return None

    offs = np.array([0.3, 0.5, 0.7])
    sx, sy = np.meshgrid(offs, offs)
    sub = np.stack([sx.ravel(), sy.ravel()], axis=1)  # (9,2)

    cells = np.arange(-1, w + 1)
    cc, rr = np.meshgrid(cells, cells)
    base = np.stack([cc.ravel(), rr.ravel()], axis=1).astype(float)  # (gx=col, gy=row)
    pts = (base[:, None, :] + sub[None, :, :]).reshape(-1, 2)
    ones = np.ones((len(pts), 1))
    mapped = np.concatenate([pts, ones], axis=1) @ h_grid.T
    uv = mapped[:, :2] / mapped[:, 2:3]

    in_img = ((uv[:, 0] >= 0) & (uv[:, 0] <= cam.width - 1)
              & (uv[:, 1] >= 0) & (uv[:, 1] <= cam.height - 1))
    vals = _sample_bilinear(image_f, uv)
    vals = vals.reshape(w + 2, w + 2, len(sub))
    valid = in_img.reshape(w + 2, w + 2, len(sub))

    rows = np.arange(w + 2) - 1  # cell row index, -1..w
    is_margin = (rows[:, None] < 0) | (rows[:, None] >= w) | (rows[None, :] < 0) | (rows[None, :] >= w)
    inner = ~is_margin
    is_border = inner & ((rows[:, None] == 0) | (rows[:, None] == w - 1)
                         | (rows[None, :] == 0) | (rows[None, :] == w - 1))

    cell_mean = np.where(valid.any(axis=2),
                         np.nanmean(np.where(valid, vals, np.nan), axis=2),
                         np.nan)
    border_vals = cell_mean[is_border]
    margin_vals = cell_mean[is_margin & ~np.isnan(cell_mean)]
    if np.isnan(border_vals).any():
        return None
    dark_ref = float(np.median(border_vals))
    light_ref = float(np.median(margin_vals)) if margin_vals.size else float(np.nanmax(cell_mean))
    if light_ref - dark_ref < MIN_CONTRAST:
        return None
    threshold = 0.5 * (dark_ref + light_ref)

    if np.any(border_vals >= threshold):
        return None  # border ring must be uniformly dark
    inner_mean = cell_mean[1:-1, 1:-1]  # strip margin -> w x w marker cells
    payload = inner_mean[1:-1, 1:-1] < threshold  # strip border -> n x n
    return payload


def _refine_quad_edges(image_f: np.ndarray, quad: np.ndarray,
                       passes: int = 2) -> np.ndarray | None:
    """Subpixel quad from edge-line fits.

    Samples 5-tap intensity profiles along each side's normal (away from the
    rounded corner regions), localizes the mid-level crossing per profile,
    fits a total-least-squares line per side, and intersects adjacent lines.
    Returns None when any side lacks usable edge crossings.
    """
    q = quad.astype(float).copy()
    h, w = image_f.shape
    taps = np.arange(-2, 3, dtype=float)
    for _ in range(passes):
        lines = []
        for i in range(4):
            a, b = q[i], q[(i + 1) % 4]
            length = float(np.linalg.norm(b - a))
            if length < 6.0:
                return None
            m = int(np.clip(length / 2.5, 5, 40))
            ts = np.linspace(0.18, 0.82, m)
            pts = a[None, :] + ts[:, None] * (b - a)[None, :]
            n = np.array([-(b - a)[1], (b - a)[0]]) / length
            sample_pts = (pts[:, None, :] + taps[None, :, None] * n[None, None, :]).reshape(-1, 2)
            ok = ((sample_pts[:, 0] >= 1) & (sample_pts[:, 0] <= w - 2)
                  & (sample_pts[:, 1] >= 1) & (sample_pts[:, 1] <= h - 2))
            vals = np.full(len(sample_pts), np.nan)
            vals[ok] = _sample_bilinear(image_f, sample_pts[ok])
            prof = vals.reshape(m, len(taps))
            rows_ok = ~np.isnan(prof).any(axis=1)
            prof, row_pts = prof[rows_ok], pts[rows_ok]
            if len(prof) < 4:
                return None
            lo = prof.min(axis=1)
            hi = prof.max(axis=1)
            mid = 0.5 * (lo + hi)
            offsets = np.full(len(prof), np.nan)
            for r in range(len(prof)):
                best = None
                for s in range(len(taps) - 1):
                    v0, v1 = prof[r, s], prof[r, s + 1]
                    if (v0 - mid[r]) * (v1 - mid[r]) <= 0 and v0 != v1:
                        cross = taps[s] + (mid[r] - v0) / (v1 - v0)
                        if best is None or abs(cross) < abs(best):
                            best = cross
                if best is not None:
                    offsets[r] = best
            valid = ~np.isnan(offsets) & (hi - lo > MIN_CONTRAST)
            if valid.sum() < 4:
                return None
            edge_pts = row_pts[valid] + offsets[valid, None] * n[None, :]
            centroid = edge_pts.mean(axis=0)
            _, _, vt = np.linalg.svd(edge_pts - centroid)
            lines.append((centroid, vt[0]))

        refined = np.empty_like(q)
        for i in range(4):
            c1, d1 = lines[(i - 1) % 4]
            c2, d2 = lines[i]
            a_mat = np.column_stack([d1, -d2])
            if abs(np.linalg.det(a_mat)) < 1e-9:
                return None
            t12 = np.linalg.solve(a_mat, c2 - c1)
            refined[i] = c1 + t12[0] * d1
        if np.any(np.linalg.norm(refined - q, axis=1) > 3.0):
            return None  # line fit wandered off the coarse quad
        q = refined
    return q


def _refine_corner(image_f, grad_u, grad_v, corner: np.ndarray,
                   window: int = CORNER_WINDOW, iterations: int = 15) -> np.ndarray:
    """Structure-tensor subpixel corner: solve sum(g g^T)(q - p) = 0."""
    half = window // 2
    h, w = image_f.shape
    q = corner.astype(float).copy()
    for _ in range(iterations):
        cu = int(round(q[0]))
        cv = int(round(q[1]))
        u0, u1 = cu - half, cu + half + 1
        v0, v1 = cv - half, cv + half + 1
        if u0 < 1 or v0 < 1 or u1 > w - 1 or v1 > h - 1:
            break
        gu = grad_u[v0:v1, u0:u1].ravel()
        gv = grad_v[v0:v1, u0:u1].ravel()
        uu, vv = np.meshgrid(np.arange(u0, u1, dtype=float),
                             np.arange(v0, v1, dtype=float))
        pu, pv = uu.ravel(), vv.ravel()
        a = float(np.sum(gu * gu))
        b = float(np.sum(gu * gv))
        c = float(np.sum(gv * gv))
        det = a * c - b * b
        if det < 1e-9:
            break
        ru = float(np.sum(gu * gu * pu + gu * gv * pv))
        rv = float(np.sum(gu * gv * pu + gv * gv * pv))
        new_q = np.array([(c * ru - b * rv) / det, (a * rv - b * ru) / det])
        if not np.all(np.isfinite(new_q)):
            break
        move = float(np.linalg.norm(new_q - q))
        q = new_q
        if move < 1e-4:
            break
    return q


def detect_marker(image: np.ndarray, spec: MarkerSpec,
                  cam: CameraIntrinsics) -> DetectionResult:
    """Find the given marker in an 8-bit grayscale image and estimate its pose.

    Raises NoMarkerFound when no plausible quad exists, DecodeFailed when a
    quad was found but its payload matches no rotation of the expected marker.
    """
    img = np.asarray(image)
    if img.shape != (cam.height, cam.width):
        raise ValueError(f"image shape {img.shape} != ({cam.height}, {cam.width})")
    image_f = img.astype(np.float64)

    dark = adaptive_threshold(image_f)
    labels, count = ndimage.label(dark, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        raise NoMarkerFound("no dark region")

    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    region_ids = [int(i) for i in np.argsort(sizes)[::-1]
                  if sizes[i] >= MIN_REGION_AREA][:MAX_CANDIDATES]
    if not region_ids:
        raise NoMarkerFound("no dark region above minimum area")

    grad_v, grad_u = np.gradient(image_f)
    marker_corners = spec.corners_mm()
    decode_failed = False
    best: DetectionResult | None = None

    for rid in region_ids:
        ys, xs = np.nonzero(labels == rid)
        pts = np.stack([xs, ys], axis=1).astype(float)  # (u, v)
        quad = _fit_quad(pts)
        if quad is None:
            continue
        payload = _unwarp_cells(image_f, quad, spec, cam)
        if payload is None:
            continue
        k = spec.match_rotation(payload)
        if k is None:
            decode_failed = True
            continue

        # ascending-angle corners are cyclically (BL, BR, TR, TL) shifted by k
        ordered = np.stack([
            quad[(3 - k) % 4],  # TL
            quad[(2 - k) % 4],  # TR
            quad[(1 - k) % 4],  # BR
            quad[(0 - k) % 4],  # BL
        ])
        refined = _refine_quad_edges(image_f, ordered)
        if refined is None:
            # degenerate sides: fall back to local structure-tensor corners
            refined = np.stack([
                _refine_corner(image_f, grad_u, grad_v, c) for c in ordered
            ])
        if not np.all(cam.contains(refined)):
            continue

        try:
            h_mm = homography_dlt(marker_corners[:, :2], refined)
            pose0 = pose_from_homography(h_mm, cam)
            pose_a, rms_a = refine_pose(pose0, marker_corners, refined, cam)
            candidates = [(pose_a, rms_a)]
            flip = ambiguity_flip(pose_a)
            if flip is not pose_a:
                try:
                    candidates.append(refine_pose(flip, marker_corners, refined, cam))
                except Exception:
                    pass
            pose, rms = min(candidates, key=lambda pr: pr[1])
        except Exception:
            continue

        result = DetectionResult(corners_px=refined, id=spec.id, pose=pose,
                                 reprojection_rms_px=rms)
        if best is None or result.reprojection_rms_px < best.reprojection_rms_px:
            best = result

    if best is not None:
        return best
    if decode_failed:
        raise DecodeFailed("quad found but payload matches no rotation of the expected marker")
    raise NoMarkerFound("no decodable marker quad")
