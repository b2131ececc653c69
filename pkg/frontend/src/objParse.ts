/** Minimal OBJ reader for the meshes the service exports (v / vn / f a//a).
 *
 * Polygon faces fan-triangulate; negative indices resolve against the
 * counts seen so far. The parsed vertex count is surfaced in the debug
 * panel so it can be compared against the served file.
 */

export interface ParsedMesh {
  positions: Float32Array;  // 3 per vertex
  normals: Float32Array | null;
  indices: Uint32Array;     // 3 per triangle
  vertexCount: number;
  triangleCount: number;
}

export function parseObj(text: string): ParsedMesh {
  const positions: number[] = [];
  const normalsRaw: number[] = [];
  const indices: number[] = [];
  const vertexNormal = new Map<number, number>(); // vertex index -> vn index

  let lineNo = 0;
  for (const raw of text.split("\n")) {
    lineNo += 1;
    const line = raw.trim();
    if (line === "" || line.startsWith("#")) continue;
    const parts = line.split(/\s+/);
    const kind = parts[0];
    if (kind === "v") {
      if (parts.length < 4) throw new Error(`line ${lineNo}: short vertex`);
      positions.push(Number(parts[1]), Number(parts[2]), Number(parts[3]));
    } else if (kind === "vn") {
      if (parts.length < 4) throw new Error(`line ${lineNo}: short normal`);
      normalsRaw.push(Number(parts[1]), Number(parts[2]), Number(parts[3]));
    } else if (kind === "f") {
      if (parts.length < 4) throw new Error(`line ${lineNo}: face needs 3+ vertices`);
      const vCount = positions.length / 3;
      const nCount = normalsRaw.length / 3;
      const face: number[] = [];
      for (const token of parts.slice(1)) {
        const fields = token.split("/");
        const rawV = Number(fields[0]);
        if (!Number.isInteger(rawV) || rawV === 0) {
          throw new Error(`line ${lineNo}: bad face token '${token}'`);
        }
        const v = rawV > 0 ? rawV - 1 : vCount + rawV;
        if (v < 0 || v >= vCount) {
          throw new Error(`line ${lineNo}: vertex index ${rawV} out of range`);
        }
        face.push(v);
        if (fields.length >= 3 && fields[2] !== "") {
          const rawN = Number(fields[2]);
          const n = rawN > 0 ? rawN - 1 : nCount + rawN;
          if (n < 0 || n >= nCount) {
            throw new Error(`line ${lineNo}: normal index ${rawN} out of range`);
          }
          vertexNormal.set(v, n);
        }
      }
      for (let t = 1; t < face.length - 1; t += 1) {
        indices.push(face[0], face[t], face[t + 1]);
      }
    }
    // other directives ignored
  }

  const vertexCount = positions.length / 3;
  let normals: Float32Array | null = null;
  if (normalsRaw.length > 0 && vertexNormal.size === vertexCount) {
    normals = new Float32Array(vertexCount * 3);
    for (const [v, n] of vertexNormal) {
      normals[3 * v] = normalsRaw[3 * n];
      normals[3 * v + 1] = normalsRaw[3 * n + 1];
      normals[3 * v + 2] = normalsRaw[3 * n + 2];
    }
  }
  return {
    positions: new Float32Array(positions),
    normals,
    indices: new Uint32Array(indices),
    vertexCount,
    triangleCount: indices.length / 3,
  };
}
