"""Triangle surfaces from voxel masks, plus OBJ interchange.

Marching cubes treats the mask as a 0/1 field sampled at voxel centers and
places vertices on grid edges by linear interpolation at the iso fraction.
Vertices are keyed by the global grid edge they sit on, so shared cell
faces stitch exactly and interior surfaces come out watertight without an
epsilon weld.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import mc_tables
from .errors import EmptyField, IndexOutOfRange, ObjParseError
from .segmentation import LabelMask
from .volume import VoxelVolume


@dataclass(frozen=True)
class GridGeometry:
    """Voxel-index to patient-mm mapping (spacing, origin, orientation)."""

    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation: np.ndarray = field(default_factory=lambda: np.eye(3))

    @staticmethod
    def of(source) -> "GridGeometry":
        if source is None:
            return GridGeometry()
        if isinstance(source, GridGeometry):
            return source
        return GridGeometry(spacing=tuple(source.spacing), origin=tuple(source.origin),
                            orientation=np.asarray(source.orientation, dtype=float))

    def to_world(self, ijk: np.ndarray) -> np.ndarray:
        scaled = np.asarray(ijk, dtype=float) * np.asarray(self.spacing)
        return scaled @ np.asarray(self.orientation).T + np.asarray(self.origin)


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangles in patient mm; windings are CCW seen from outside."""

    vertices: np.ndarray  # (V,3) float64
    triangles: np.ndarray  # (T,3) int64
    normals: np.ndarray | None = None  # (V,3) unit vectors where defined

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if t.size:
            if t.min() < 0 or t.max() >= len(v):
                raise ValueError("triangle index out of range")
            if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
                raise ValueError("degenerate triangle (repeated vertex index)")
        if self.normals is not None:
            n = np.asarray(self.normals, dtype=float).reshape(-1, 3)
            if len(n) != len(v):
                raise ValueError("normals count != vertex count")
            object.__setattr__(self, "normals", n)

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    def is_empty(self) -> bool:
        return self.triangle_count == 0


@dataclass(frozen=True)
class MeshStats:
    vertex_count: int
    triangle_count: int
    bbox_min: tuple[float, float, float]
    bbox_max: tuple[float, float, float]
    boundary_edge_count: int
    euler_characteristic: int

    @property
    def watertight(self) -> bool:
        return self.boundary_edge_count == 0


def _empty_mesh() -> TriangleMesh:
    return TriangleMesh(vertices=np.zeros((0, 3)), triangles=np.zeros((0, 3), dtype=np.int64),
                        normals=np.zeros((0, 3)))


def marching_cubes(mask: LabelMask, geometry=None, iso: float = 0.5) -> TriangleMesh:
    """Extract the iso surface of a binary mask as a triangle mesh.

    Output vertices are in patient mm (via the grid geometry); triangles
    wind counter-clockwise seen from outside the set region. An all-0 or
    all-1 mask gives an empty mesh; dims < 2 on any axis is an error.
    """
    nx, ny, nz = mask.dims
    if min(nx, ny, nz) < 2:
        raise EmptyField(f"mask dims {mask.dims} too small to form cells")
    if not 0.0 < iso < 1.0:
        raise ValueError("iso must be inside (0,1)")
    geom = GridGeometry.of(geometry)

    below = (~mask.bits).astype(np.uint8)  # sample < iso for a 0/1 field
    case = np.zeros((nz - 1, ny - 1, nx - 1), dtype=np.uint8)
    for bit, (cx, cy, cz) in enumerate(mc_tables.CORNERS):
        sl = below[cz:cz + nz - 1, cy:cy + ny - 1, cx:cx + nx - 1]
        case |= (sl << np.uint8(bit))

    active = np.nonzero((case != 0) & (case != 255))
    if active[0].size == 0:
        return _empty_mesh()
    kk, jj, ii = (a.astype(np.int64) for a in active)
    cell_case = case[active]

    # local edge -> (axis, corner offset of the low endpoint)
    edge_axis = np.empty(12, dtype=np.int64)
    edge_base = np.empty((12, 3), dtype=np.int64)
    for e, (a, b) in enumerate(mc_tables.EDGE_CORNERS):
        ca, cb = mc_tables.CORNERS[a], mc_tables.CORNERS[b]
        d = cb - ca
        edge_axis[e] = int(np.nonzero(d != 0)[0][0])
        edge_base[e] = np.minimum(ca, cb)

    def global_edge(local_e: np.ndarray, cell_i, cell_j, cell_k) -> np.ndarray:
        bi = cell_i + edge_base[local_e, 0]
        bj = cell_j + edge_base[local_e, 1]
        bk = cell_k + edge_base[local_e, 2]
        lin = (bk * ny + bj) * nx + bi
        return edge_axis[local_e] * (nx * ny * nz) + lin

    ntri = mc_tables.TRI_COUNT[cell_case]
    tri_edges = []
    for t in range(int(ntri.max())):
        sel = ntri > t
        rows = cell_case[sel]
        local = mc_tables.TRI_TABLE[rows, 3 * t:3 * t + 3]
        tri_edges.append(np.stack([
            global_edge(local[:, 0], ii[sel], jj[sel], kk[sel]),
            global_edge(local[:, 1], ii[sel], jj[sel], kk[sel]),
            global_edge(local[:, 2], ii[sel], jj[sel], kk[sel]),
        ], axis=1))
    tri_global = np.concatenate(tri_edges, axis=0)

    unique_edges, tri_idx = np.unique(tri_global, return_inverse=True)
    triangles = tri_idx.reshape(-1, 3)

    # place one vertex per crossed grid edge
    axis = unique_edges // (nx * ny * nz)
    lin = unique_edges % (nx * ny * nz)
    bi = lin % nx
    bj = (lin // nx) % ny
    bk = lin // (nx * ny)
    p0 = np.stack([bi, bj, bk], axis=1).astype(float)
    step = np.zeros_like(p0)
    step[np.arange(len(axis)), axis] = 1.0
    inside = mask.bits.astype(np.float64)
    v0 = inside[bk, bj, bi]
    hi = (p0 + step).astype(np.int64)
    v1 = inside[hi[:, 2], hi[:, 1], hi[:, 0]]
    t_interp = (iso - v0) / (v1 - v0)
    verts_ijk = p0 + t_interp[:, None] * step

    vertices = geom.to_world(verts_ijk)
    # the case table winds CCW seen from the 0-region, i.e. outward already
    return TriangleMesh(vertices=vertices, triangles=triangles)


def enclosed_volume(mesh: TriangleMesh) -> float:
    """Signed volume via the divergence theorem (positive for outward winding)."""
    if mesh.is_empty():
        return 0.0
    v = mesh.vertices
    a = v[mesh.triangles[:, 0]]
    b = v[mesh.triangles[:, 1]]
    c = v[mesh.triangles[:, 2]]
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def weld_and_normals(mesh: TriangleMesh, eps: float = 0.0) -> TriangleMesh:
    """Merge vertices within eps (grid-hash), drop degenerate triangles,
    and compute area-weighted per-vertex normals."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    v = mesh.vertices
    if len(v) == 0:
        return _empty_mesh()

    if eps == 0.0:
        keys = v
    else:
        keys = np.round(v / eps)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    # keep the first-seen original position of each merged group
    new_index = np.full(len(first), -1, dtype=np.int64)
    order = np.argsort(first, kind="stable")
    new_index[order] = np.arange(len(first))
    remap = new_index[inverse]
    new_verts = v[np.sort(first)]

    tris = remap[mesh.triangles]
    ok = (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])
    tris = tris[ok]

    normals = _vertex_normals(new_verts, tris)
    return TriangleMesh(vertices=new_verts, triangles=tris, normals=normals)


def _vertex_normals(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    normals = np.zeros_like(vertices)
    if len(triangles):
        a = vertices[triangles[:, 0]]
        b = vertices[triangles[:, 1]]
        c = vertices[triangles[:, 2]]
        face = np.cross(b - a, c - a)  # magnitude = 2x area -> area weighting
        for col in range(3):
            np.add.at(normals, triangles[:, col], face)
    norm = np.linalg.norm(normals, axis=1)
    nz = norm > 0
    normals[nz] /= norm[nz, None]
    return normals


def mesh_stats(mesh: TriangleMesh) -> MeshStats:
    """Counts, bounding box, boundary edges, and V - E + F."""
    v, t = mesh.vertices, mesh.triangles
    if len(v):
        bbox_min = tuple(float(x) for x in v.min(axis=0))
        bbox_max = tuple(float(x) for x in v.max(axis=0))
    else:
        bbox_min = bbox_max = (0.0, 0.0, 0.0)
    if len(t):
        edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        edges = np.sort(edges, axis=1)
        _, counts = np.unique(edges, axis=0, return_counts=True)
        e_count = len(counts)
        boundary = int(np.count_nonzero(counts == 1))
    else:
        e_count = 0
        boundary = 0
    return MeshStats(
        vertex_count=len(v),
        triangle_count=len(t),
        bbox_min=bbox_min,
        bbox_max=bbox_max,
        boundary_edge_count=boundary,
        euler_characteristic=len(v) - e_count + len(t),
    )


# --- OBJ ---------------------------------------------------------------

_OBJ_HEADER = "# neuronav mesh\n"


def export_obj(mesh: TriangleMesh, destination) -> int:
    """Write ASCII OBJ (v/vn/f with 9 significant digits); returns byte count.

    Output is deterministic: the same mesh always produces identical bytes.
    """
    normals = mesh.normals
    if normals is None:
        normals = _vertex_normals(mesh.vertices, mesh.triangles)

    buf = io.StringIO()
    buf.write(_OBJ_HEADER)
    for x, y, z in mesh.vertices:
        buf.write(f"v {x:.9g} {y:.9g} {z:.9g}\n")
    for x, y, z in normals:
        buf.write(f"vn {x:.9g} {y:.9g} {z:.9g}\n")
    for a, b, c in mesh.triangles + 1:
        buf.write(f"f {a}//{a} {b}//{b} {c}//{c}\n")
    data = buf.getvalue().encode("ascii")

    if hasattr(destination, "write"):
        destination.write(data)
    else:
        Path(destination).write_bytes(data)
    return len(data)


def import_obj(source) -> TriangleMesh:
    """Parse v/vn/f lines; fan-triangulates polygon faces, resolves negative
    indices, ignores other directives."""
    if hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("ascii", errors="replace")
    else:
        text = Path(source).read_text(encoding="ascii", errors="replace")

    verts: list[tuple[float, float, float]] = []
    norms: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    face_norm_idx: list[tuple[int, int, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "v":
            if len(parts) < 4:
                raise ObjParseError(lineno, "vertex needs 3 coordinates")
            try:
                verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
            except ValueError as e:
                raise ObjParseError(lineno, str(e)) from e
        elif kind == "vn":
            if len(parts) < 4:
                raise ObjParseError(lineno, "normal needs 3 components")
            try:
                norms.append((float(parts[1]), float(parts[2]), float(parts[3])))
            except ValueError as e:
                raise ObjParseError(lineno, str(e)) from e
        elif kind == "f":
            if len(parts) < 4:
                raise ObjParseError(lineno, "face needs at least 3 vertices")
            vi: list[int] = []
            ni: list[int] = []
            for token in parts[1:]:
                fields = token.split("/")
                try:
                    raw_v = int(fields[0])
                except ValueError as e:
                    raise ObjParseError(lineno, f"bad face token '{token}'") from e
                idx = raw_v - 1 if raw_v > 0 else len(verts) + raw_v
                if idx < 0 or idx >= len(verts):
                    raise IndexOutOfRange(lineno, raw_v)
                vi.append(idx)
                if len(fields) >= 3 and fields[2]:
                    raw_n = int(fields[2])
                    nidx = raw_n - 1 if raw_n > 0 else len(norms) + raw_n
                    if nidx < 0 or nidx >= len(norms):
                        raise IndexOutOfRange(lineno, raw_n)
                    ni.append(nidx)
            for t in range(1, len(vi) - 1):  # fan rule
                faces.append((vi[0], vi[t], vi[t + 1]))
                if len(ni) == len(vi):
                    face_norm_idx.append((ni[0], ni[t], ni[t + 1]))
        # everything else (o, g, s, usemtl, vt, ...) is ignored

    vertices = np.asarray(verts, dtype=float).reshape(-1, 3)
    triangles = np.asarray(faces, dtype=np.int64).reshape(-1, 3)

    normals = None
    if norms and len(face_norm_idx) == len(faces):
        # adopt file normals when they map one-to-one onto vertices
        normals = np.zeros((len(vertices), 3))
        assigned = np.zeros(len(vertices), dtype=bool)
        narr = np.asarray(norms, dtype=float)
        consistent = True
        for (va, vb, vc), (na, nb, nc) in zip(faces, face_norm_idx):
            for v_i, n_i in ((va, na), (vb, nb), (vc, nc)):
                if assigned[v_i] and not np.allclose(normals[v_i], narr[n_i]):
                    consistent = False
                    break
                normals[v_i] = narr[n_i]
                assigned[v_i] = True
            if not consistent:
                break
        if not consistent:
            normals = None
    if normals is None:
        normals = _vertex_normals(vertices, triangles)
    return TriangleMesh(vertices=vertices, triangles=triangles, normals=normals)
