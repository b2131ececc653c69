/** Scene document schema as served by the pipeline service. */

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // (w, x, y, z)

export interface TransformDoc {
  rotation: Quat;
  translation: Vec3;
}

export interface NodeDoc {
  name: string;
  mesh: string;
  transform: TransformDoc;
  visible: boolean;
  material: { rgba: [number, number, number, number] };
}

export interface SceneDoc {
  revision: number;
  marker_pose: TransformDoc | null;
  offset_mm: Vec3;
  nodes: NodeDoc[];
}

function isNumberArray(value: unknown, length: number): boolean {
  return Array.isArray(value) && value.length === length
    && value.every((x) => typeof x === "number" && Number.isFinite(x));
}

function parseTransform(value: unknown): TransformDoc {
  const doc = value as Record<string, unknown>;
  if (!doc || !isNumberArray(doc.rotation, 4) || !isNumberArray(doc.translation, 3)) {
    throw new Error("bad transform in scene document");
  }
  return {
    rotation: [...(doc.rotation as number[])] as Quat,
    translation: [...(doc.translation as number[])] as Vec3,
  };
}

/** Validate and normalize a parsed JSON body into a SceneDoc. */
export function parseSceneDoc(json: unknown): SceneDoc {
  const doc = json as Record<string, unknown>;
  if (!doc || typeof doc.revision !== "number" || !Array.isArray(doc.nodes)
    || !isNumberArray(doc.offset_mm, 3)) {
    throw new Error("bad scene document");
  }
  const nodes: NodeDoc[] = doc.nodes.map((raw) => {
    const n = raw as Record<string, unknown>;
    const material = n.material as Record<string, unknown> | undefined;
    if (typeof n.name !== "string" || typeof n.mesh !== "string"
      || typeof n.visible !== "boolean" || !material
      || !isNumberArray(material.rgba, 4)) {
      throw new Error(`bad node in scene document`);
    }
    return {
      name: n.name,
      mesh: n.mesh,
      transform: parseTransform(n.transform),
      visible: n.visible,
      material: { rgba: [...(material.rgba as number[])] as [number, number, number, number] },
    };
  });
  const names = new Set(nodes.map((n) => n.name));
  if (names.size !== nodes.length) throw new Error("duplicate node names");
  return {
    revision: doc.revision,
    marker_pose: doc.marker_pose == null ? null : parseTransform(doc.marker_pose),
    offset_mm: [...(doc.offset_mm as number[])] as Vec3,
    nodes,
  };
}

export function visibilityOf(scene: SceneDoc): Record<string, boolean> {
  const out: Record<string, boolean> = {};
  for (const node of scene.nodes) out[node.name] = node.visible;
  return out;
}
