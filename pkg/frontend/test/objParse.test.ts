import { describe, expect, it } from "vitest";

import { parseObj } from "../src/objParse";

describe("parseObj", () => {
  it("parses a single triangle with normals", () => {
    const mesh = parseObj(
      "# header\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nvn 0 0 1\nvn 0 0 1\n"
      + "f 1//1 2//2 3//3\n");
    expect(mesh.vertexCount).toBe(3);
    expect(mesh.triangleCount).toBe(1);
    expect(Array.from(mesh.indices)).toEqual([0, 1, 2]);
    expect(mesh.normals).not.toBeNull();
    expect(Array.from(mesh.normals!.slice(0, 3))).toEqual([0, 0, 1]);
  });

  it("fan-triangulates polygons", () => {
    const mesh = parseObj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
    expect(mesh.triangleCount).toBe(2);
    expect(Array.from(mesh.indices)).toEqual([0, 1, 2, 0, 2, 3]);
  });

  it("resolves negative indices", () => {
    const mesh = parseObj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n");
    expect(Array.from(mesh.indices)).toEqual([0, 1, 2]);
  });

  it("rejects out-of-range indices", () => {
    expect(() => parseObj("v 0 0 0\nf 1 2 3\n")).toThrow(/out of range/);
  });

  it("ignores unknown directives", () => {
    const mesh = parseObj(
      "o thing\nusemtl m\nvt 0 0\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    expect(mesh.triangleCount).toBe(1);
  });

  it("counts vertices identically to the served text", () => {
    // the debug-panel equality check: parsed count == number of v-lines
    const lines = ["v 0 0 0", "v 1 0 0", "v 0 1 0", "v 1 1 0",
                   "f 1 2 3", "f 2 4 3"];
    const text = lines.join("\n") + "\n";
    const mesh = parseObj(text);
    const served = (text.match(/^v /gm) ?? []).length;
    expect(mesh.vertexCount).toBe(served);
  });
});
