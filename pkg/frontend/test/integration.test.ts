/** Live tests against the real pipeline service.
 *
 * Spawns `python -m neuronav.cli serve` on a phantom-scene manifest, then
 * drives two independent viewer models over HTTP + SSE:
 *   - interleaved commands from both clients converge to one visibility state
 *   - "Toggle Skull" hides the skull within a single event round trip
 *   - the inspection presets orbit the loaded phantom from above/left/right
 *
 * Skipped automatically when the python package is not importable.
 */

import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { fetchMeshText, fetchScene, postCommand } from "../src/api";
import { ViewerModel } from "../src/model";
import { parseObj } from "../src/objParse";
import { applyPreset, cameraPosition, fitDistance, OrbitState } from "../src/orbit";
import { parseSceneDoc } from "../src/sceneDoc";
import { EventStream } from "../src/sse";

const PYTHON = process.env.NEURONAV_PYTHON ?? "python3";

function pythonAvailable(): boolean {
  const probe = spawnSync(PYTHON, ["-c", "import neuronav"], { timeout: 30_000 });
  return probe.status === 0;
}

const available = pythonAvailable();
const maybe = available ? describe : describe.skip;

maybe("live service", () => {
  let server: ChildProcess;
  let base: string;
  const port = 18000 + Math.floor(Math.random() * 20000);

  beforeAll(async () => {
    const dir = mkdtempSync(join(tmpdir(), "neuronav-viewer-"));
    const prep = spawnSync(PYTHON, ["-c", `
from neuronav.phantom import head_phantom
from neuronav.volume import save_raw_volume
ph = head_phantom(dims=(48, 48, 48))
save_raw_volume(${JSON.stringify(dir)} + "/phantom.rawvol", ph.volume)
`], { timeout: 120_000 });
    if (prep.status !== 0) throw new Error(String(prep.stderr));
    writeFileSync(join(dir, "config.json"),
      JSON.stringify({ input: "phantom.rawvol", output_dir: "out" }));
    const run = spawnSync(PYTHON, ["-m", "neuronav.cli", "pipeline", "run",
                                   join(dir, "config.json")], { timeout: 120_000 });
    if (run.status !== 0) throw new Error(String(run.stderr));

    base = `http://127.0.0.1:${port}`;
    server = spawn(PYTHON, ["-m", "neuronav.cli", "serve",
                            join(dir, "out", "manifest.json"),
                            "--port", String(port)],
                   { stdio: ["ignore", "pipe", "pipe"] });
    for (let attempt = 0; ; attempt += 1) {
      try {
        const r = await fetch(`${base}/health`);
        if (r.ok) break;
      } catch { /* not up yet */ }
      if (attempt > 200) throw new Error("service did not come up");
      await new Promise((resolve) => setTimeout(resolve, 100));
    }
  });

  afterAll(() => {
    server?.kill();
  });

  function connectClient(): { model: ViewerModel; stream: EventStream } {
    const model = new ViewerModel();
    const stream = new EventStream(`${base}/events`, {
      onEvent(event) {
        if (event.data) model.apply(parseSceneDoc(JSON.parse(event.data)));
      },
    });
    void stream.run();
    return { model, stream };
  }

  it("loads the scene and matching meshes", async () => {
    const scene = await fetchScene(base);
    expect(scene.revision).toBeGreaterThanOrEqual(0);
    expect(scene.nodes.map((n) => n.name).sort()).toEqual(["skull", "ventricles"]);
    for (const node of scene.nodes) {
      const text = await fetchMeshText(base, node.mesh);
      const mesh = parseObj(text);
      const served = (text.match(/^v /gm) ?? []).length;
      expect(mesh.vertexCount).toBe(served); // bit-identical geometry contract
      expect(mesh.triangleCount).toBeGreaterThan(0);
    }
  });

  it("toggle skull hides it within one event round trip", async () => {
    const { model, stream } = connectClient();
    try {
      model.apply(await fetchScene(base));
      const skullBefore = model.visibility()["skull"];
      const result = await postCommand(base, "Toggle Skull");
      expect(result.ok).toBe(true);
      await model.waitForRevision(result.revision!, 5000);
      expect(model.visibility()["skull"]).toBe(!skullBefore);
    } finally {
      stream.stop();
    }
  });

  it("rejected commands change nothing", async () => {
    const before = await fetchScene(base);
    const result = await postCommand(base, "toggle brain");
    expect(result.ok).toBe(false);
    expect(result.error).toBe("UnknownCommand");
    const after = await fetchScene(base);
    expect(after.revision).toBe(before.revision);
  });

  it("two concurrent clients converge after interleaved commands", async () => {
    const a = connectClient();
    const b = connectClient();
    try {
      a.model.apply(await fetchScene(base));
      b.model.apply(await fetchScene(base));

      const commands = ["Toggle Skull", "toggle ventricles", "set offset 100 0 0",
                        "Toggle Skull", "toggle ventricles", "Toggle Skull"];
      const posts = commands.map((text, index) =>
        postCommand(base, text).then((r) => ({ index, r })));
      const results = await Promise.all(posts);
      const revisions = results.map(({ r }) => r.revision!).sort((x, y) => x - y);
      const top = Math.max(...revisions);
      // gap-free revision sequence across both...all posts
      expect(new Set(revisions).size).toBe(commands.length);

      await a.model.waitForRevision(top, 10_000);
      await b.model.waitForRevision(top, 10_000);
      expect(a.model.revision).toBe(b.model.revision);
      expect(a.model.visibility()).toEqual(b.model.visibility());

      const serverScene = await fetchScene(base);
      expect(a.model.revision).toBe(serverScene.revision);
      const serverVisibility = Object.fromEntries(
        serverScene.nodes.map((n) => [n.name, n.visible]));
      expect(a.model.visibility()).toEqual(serverVisibility);
    } finally {
      a.stream.stop();
      b.stream.stop();
    }
  });

  it("presets orbit the phantom scene from the canonical sides", async () => {
    const scene = await fetchScene(base);
    const text = await fetchMeshText(base, "skull");
    const mesh = parseObj(text);
    // bounding box of the placed skull (node transform is a pure translation)
    const t = scene.nodes.find((n) => n.name === "skull")!.transform.translation;
    let lo = [Infinity, Infinity, Infinity];
    let hi = [-Infinity, -Infinity, -Infinity];
    for (let i = 0; i < mesh.positions.length; i += 3) {
      for (let k = 0; k < 3; k += 1) {
        const v = mesh.positions[i + k] + t[k];
        lo[k] = Math.min(lo[k], v);
        hi[k] = Math.max(hi[k], v);
      }
    }
    const center: [number, number, number] = [
      (lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2];
    const radius = Math.hypot(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]) / 2;
    const orbit: OrbitState = {
      target: center,
      distance: fitDistance(radius, 45),
      azimuthDeg: 0,
      elevationDeg: 0,
    };
    const top = cameraPosition(applyPreset(orbit, "top"));
    expect(top[2]).toBeGreaterThan(hi[2]); // above the whole model
    const left = cameraPosition(applyPreset(orbit, "left"));
    const right = cameraPosition(applyPreset(orbit, "right"));
    expect(left[0]).toBeGreaterThan(hi[0]);  // beyond the +X face
    expect(right[0]).toBeLessThan(lo[0]);    // beyond the -X face
    expect(orbit.distance).toBeGreaterThan(radius); // model fully in front
  });
});

if (!available) {
  it("live service tests skipped (python neuronav not importable)", () => {
    expect(available).toBe(false);
  });
}
