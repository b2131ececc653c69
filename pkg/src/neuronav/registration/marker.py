"""Square binary fiducial markers.

A marker is an (n+2)x(n+2) cell grid: a one-cell black border around an
n x n payload. The payload's four corner cells anchor the orientation
(top-left black, the other three white); the remaining n*n-4 cells carry
the id bits in row-major order, most significant first. Bit value 1 is a
black cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

_ANCHOR = {(0, 0): 1}  # plus the other three corners forced to 0


def _corner_cells(n: int) -> list[tuple[int, int]]:
    return [(0, 0), (0, n - 1), (n - 1, 0), (n - 1, n - 1)]


def _id_cells(n: int) -> list[tuple[int, int]]:
    corners = set(_corner_cells(n))
    return [(r, c) for r in range(n) for c in range(n) if (r, c) not in corners]


def payload_for_id(marker_id: int, n: int = 6) -> np.ndarray:
    """Build the n x n payload bits for an id."""
    capacity = n * n - 4
    if capacity > 63:
        capacity = 63
    if not 0 <= marker_id < (1 << capacity):
        raise ValueError(f"id must fit in {capacity} bits")
    bits = np.zeros((n, n), dtype=bool)
    bits[0, 0] = True
    cells = _id_cells(n)
    for pos, (r, c) in enumerate(cells):
        shift = len(cells) - 1 - pos
        if shift < capacity and (marker_id >> shift) & 1:
            bits[r, c] = True
    return bits


def decode_payload(bits: np.ndarray) -> int | None:
    """Id encoded by an n x n payload, or None if the anchor is invalid."""
    n = bits.shape[0]
    if not bits[0, 0]:
        return None
    for r, c in _corner_cells(n)[1:]:
        if bits[r, c]:
            return None
    value = 0
    for (r, c) in _id_cells(n):
        value = (value << 1) | int(bits[r, c])
    return value


@dataclass(frozen=True)
class MarkerSpec:
    """Physical marker: side length, payload grid, and the id it encodes."""

    side_mm: float
    payload: np.ndarray  # n x n bool
    id: int

    def __post_init__(self):
        if self.side_mm <= 0:
            raise ValueError("side_mm must be positive")
        p = np.asarray(self.payload, dtype=bool)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 3:
            raise ValueError("payload must be a square grid, at least 3x3")
        object.__setattr__(self, "payload", p)
        rotations = [k for k in range(4) if decode_payload(np.rot90(p, k)) == self.id]
        if rotations != [0]:
            raise ValueError("payload must decode to the id in exactly the "
                             "unrotated orientation")

    @staticmethod
    def from_id(marker_id: int, side_mm: float, n: int = 6) -> "MarkerSpec":
        return MarkerSpec(side_mm=side_mm, payload=payload_for_id(marker_id, n), id=marker_id)

    @property
    def n(self) -> int:
        return int(self.payload.shape[0])

    @property
    def cells_per_side(self) -> int:
        return self.n + 2

    @property
    def cell_mm(self) -> float:
        return self.side_mm / self.cells_per_side

    def full_grid(self) -> np.ndarray:
        """(n+2)x(n+2) cell colors including the black border (True = black)."""
        g = np.ones((self.cells_per_side, self.cells_per_side), dtype=bool)
        g[1:-1, 1:-1] = self.payload
        return g

    def corners_mm(self) -> np.ndarray:
        """Marker-frame corners TL, TR, BR, BL (z = 0), y up in the plane."""
        h = self.side_mm / 2.0
        return np.array([
            [-h, +h, 0.0],
            [+h, +h, 0.0],
            [+h, -h, 0.0],
            [-h, -h, 0.0],
        ])

    def match_rotation(self, observed: np.ndarray) -> int | None:
        """How many CCW quarter turns map `observed` onto this payload.

        Returns k with rot90(observed, k) == payload (and decoding to our
        id), or None when no rotation matches.
        """
        for k in range(4):
            rotated = np.rot90(observed, k)
            if decode_payload(rotated) == self.id and np.array_equal(rotated, self.payload):
                return k
        return None

    # -- text document ----------------------------------------------------

    def to_text(self) -> str:
        rows = ["".join("1" if b else "0" for b in row) for row in self.payload]
        return (
            f"n: {self.n}\n"
            f"id: {self.id}\n"
            f"side_mm: {self.side_mm!r}\n"
            f"payload: {' '.join(rows)}\n"
        )

    @staticmethod
    def from_text(text: str) -> "MarkerSpec":
        fields: dict[str, str] = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            key, _, value = line.partition(":")
            fields[key.strip().lower()] = value.strip()
        n = int(fields["n"])
        rows = fields["payload"].split()
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError("payload rows do not match n")
        bits = np.array([[ch == "1" for ch in row] for row in rows])
        return MarkerSpec(side_mm=float(fields["side_mm"]), payload=bits,
                          id=int(fields["id"]))

    @staticmethod
    def load(path) -> "MarkerSpec":
        return MarkerSpec.from_text(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())
