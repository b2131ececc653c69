"""Scene state: model placement relative to the marker, visibility commands,
and the serialized scene document the viewer consumes.

Models sit at a fixed translation offset from the marker (identity rotation;
the meshes keep their exported patient-space orientation). Text commands
mutate the scene; every accepted command bumps the revision exactly once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .errors import UnknownCommand
from .transforms import RigidPose, RigidTransform, rigid_compose

SKULL_RGBA = (0.92, 0.89, 0.82, 0.4)  # bone tint at 40% opacity
VENTRICLE_RGBA = (0.15, 0.8, 0.25, 1.0)  # opaque green
DEFAULT_OFFSET_MM = (150.0, 0.0, 0.0)  # along marker +X ("to the right")
OFFSET_PRESETS = {
    "10cm": (100.0, 0.0, 0.0),
    "15cm": (150.0, 0.0, 0.0),
}


@dataclass(frozen=True)
class ModelNode:
    name: str
    mesh_ref: str
    transform: RigidTransform  # model in marker frame
    visible: bool
    rgba: tuple[float, float, float, float]

    def __post_init__(self):
        if not 0.0 <= self.rgba[3] <= 1.0:
            raise ValueError("alpha must be within [0, 1]")


@dataclass(frozen=True)
class SceneState:
    nodes: tuple[ModelNode, ...] = ()
    marker_pose: RigidPose | None = None
    offset_mm: tuple[float, float, float] = DEFAULT_OFFSET_MM
    revision: int = 0

    def __post_init__(self):
        names = [n.name for n in self.nodes]
        if len(names) != len(set(names)):
            raise ValueError("node names must be unique")

    def node(self, name: str) -> ModelNode | None:
        for n in self.nodes:
            if n.name == name:
                return n
        return None


def default_scene(marker_pose: RigidPose | None = None,
                  offset_mm=DEFAULT_OFFSET_MM) -> SceneState:
    """Skull + ventricles scene with the standard materials."""
    offset = tuple(float(v) for v in offset_mm)
    placement = RigidTransform.from_translation(offset)
    return SceneState(
        nodes=(
            ModelNode(name="skull", mesh_ref="skull", transform=placement,
                      visible=True, rgba=SKULL_RGBA),
            ModelNode(name="ventricles", mesh_ref="ventricles", transform=placement,
                      visible=True, rgba=VENTRICLE_RGBA),
        ),
        marker_pose=marker_pose,
        offset_mm=offset,
        revision=0,
    )


def place_models(marker_pose: RigidPose, offset_mm) -> dict[str, RigidTransform]:
    """Model-in-camera transforms for both models.

    The model frame is the marker frame translated by offset_mm (identity
    rotation), so both models share one placement.
    """
    placement = RigidTransform.from_translation(tuple(float(v) for v in offset_mm))
    in_camera = rigid_compose(marker_pose, placement)
    return {"skull": in_camera, "ventricles": in_camera}


def _normalize_command(text: str) -> list[str]:
    return text.strip().lower().split()


def apply_command(state: SceneState, command: str) -> SceneState:
    """Apply a text command, returning the new state (revision + 1).

    Commands: "toggle skull", "toggle ventricles", "set offset x y z".
    Anything else raises UnknownCommand and leaves the state untouched.
    """
    words = _normalize_command(command)

    if len(words) == 2 and words[0] == "toggle":
        name = words[1]
        target = state.node(name)
        if target is None:
            raise UnknownCommand(f"no model named '{name}'")
        nodes = tuple(
            replace(n, visible=not n.visible) if n.name == name else n
            for n in state.nodes
        )
        return replace(state, nodes=nodes, revision=state.revision + 1)

    if len(words) == 5 and words[0] == "set" and words[1] == "offset":
        try:
            offset = tuple(float(w) for w in words[2:5])
        except ValueError as e:
            raise UnknownCommand(f"bad offset values: {command!r}") from e
        placement = RigidTransform.from_translation(offset)
        nodes = tuple(replace(n, transform=placement) for n in state.nodes)
        return replace(state, nodes=nodes, offset_mm=offset,
                       revision=state.revision + 1)

    raise UnknownCommand(f"unrecognized command: {command!r}")


# --- scene document ---------------------------------------------------------


def _transform_doc(t: RigidTransform) -> dict:
    return {"rotation": list(t.rotation), "translation": list(t.translation)}


def _transform_from_doc(d: dict) -> RigidTransform:
    return RigidTransform(rotation=tuple(d["rotation"]),
                          translation=tuple(d["translation"]))


def serialize_scene(state: SceneState) -> str:
    """Deterministic JSON document; parse_scene() inverts it exactly."""
    doc = {
        "revision": state.revision,
        "marker_pose": None if state.marker_pose is None
        else _transform_doc(state.marker_pose),
        "offset_mm": list(state.offset_mm),
        "nodes": [
            {
                "name": n.name,
                "mesh": n.mesh_ref,
                "transform": _transform_doc(n.transform),
                "visible": n.visible,
                "material": {"rgba": list(n.rgba)},
            }
            for n in state.nodes
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_scene(text: str) -> SceneState:
    doc = json.loads(text)
    nodes = tuple(
        ModelNode(
            name=nd["name"],
            mesh_ref=nd["mesh"],
            transform=_transform_from_doc(nd["transform"]),
            visible=bool(nd["visible"]),
            rgba=tuple(nd["material"]["rgba"]),
        )
        for nd in doc["nodes"]
    )
    marker = doc.get("marker_pose")
    return SceneState(
        nodes=nodes,
        marker_pose=None if marker is None else _transform_from_doc(marker),
        offset_mm=tuple(doc["offset_mm"]),
        revision=int(doc["revision"]),
    )
