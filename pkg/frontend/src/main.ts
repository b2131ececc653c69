/** Viewer bootstrap: load the scene, subscribe to events, wire the UI. */

import { fetchMeshText, fetchScene, offsetCommand, postCommand } from "./api";
import { ViewerModel } from "./model";
import { parseObj } from "./objParse";
import { OrbitState, applyPreset, fitDistance, rotate, zoom } from "./orbit";
import { Renderer3D } from "./render";
import { parseSceneDoc } from "./sceneDoc";
import { EventStream } from "./sse";
import { buildUi } from "./ui";

const params = new URLSearchParams(window.location.search);
const baseUrl = (params.get("service") ?? "").replace(/\/$/, "");

const canvas = document.getElementById("viewport") as HTMLCanvasElement;
const renderer = new Renderer3D(canvas);
const model = new ViewerModel();

let orbit: OrbitState = {
  target: [0, 0, 0],
  distance: 400,
  azimuthDeg: 35,
  elevationDeg: 20,
};

const ui = buildUi(document.getElementById("controls") as HTMLElement, {
  onToggle(name) {
    void postCommand(baseUrl, `toggle ${name}`).then((result) => {
      if (!result.ok) ui.toast(`${result.error}: ${result.detail ?? ""}`);
      // render state changes only when the event for the new revision lands
    });
  },
  onPreset(preset) {
    orbit = applyPreset(orbit, preset);
    requestDraw();
  },
  onOffset(x, y, z) {
    void postCommand(baseUrl, offsetCommand(x, y, z)).then((result) => {
      if (!result.ok) ui.toast(`${result.error}: ${result.detail ?? ""}`);
    });
  },
  onProxyToggle(on) {
    renderer.setProxyVisible(on);
    requestDraw();
  },
});

let drawQueued = false;
function requestDraw(): void {
  if (drawQueued) return;
  drawQueued = true;
  requestAnimationFrame(() => {
    drawQueued = false;
    renderer.draw(orbit);
  });
}

function resize(): void {
  const rect = canvas.parentElement!.getBoundingClientRect();
  renderer.resize(rect.width, rect.height);
  requestDraw();
}
window.addEventListener("resize", resize);

// basic orbit input
let dragging = false;
let last: [number, number] = [0, 0];
canvas.addEventListener("pointerdown", (e) => {
  dragging = true;
  last = [e.clientX, e.clientY];
  canvas.setPointerCapture(e.pointerId);
});
canvas.addEventListener("pointermove", (e) => {
  if (!dragging) return;
  orbit = rotate(orbit, -(e.clientX - last[0]) * 0.4, (e.clientY - last[1]) * 0.4);
  last = [e.clientX, e.clientY];
  requestDraw();
});
canvas.addEventListener("pointerup", () => { dragging = false; });
canvas.addEventListener("wheel", (e) => {
  e.preventDefault();
  orbit = zoom(orbit, e.deltaY > 0 ? 1.1 : 0.9);
  requestDraw();
});

model.onChange((scene) => {
  renderer.applyScene(scene);
  ui.setRevision(scene.revision);
  ui.setVisibility(
    Object.fromEntries(scene.nodes.map((n) => [n.name, n.visible])));
  ui.setOffset(scene.offset_mm);
  requestDraw();
});

async function boot(): Promise<void> {
  ui.setConnection("loading scene…", false);
  const scene = await fetchScene(baseUrl);
  const debug: string[] = [];
  for (const node of scene.nodes) {
    const text = await fetchMeshText(baseUrl, node.mesh);
    const mesh = parseObj(text);
    renderer.setMesh(node.mesh, mesh, node.material.rgba);
    const served = (text.match(/^v /gm) ?? []).length;
    debug.push(`${node.mesh}: ${mesh.vertexCount} vertices `
      + `(served ${served}${served === mesh.vertexCount ? ", match" : ", MISMATCH"}), `
      + `${mesh.triangleCount} triangles`);
  }
  ui.setDebug(debug);
  model.apply(scene);

  orbit = {
    ...applyPreset(orbit, "front"),
    target: renderer.boundingCenter(),
    distance: fitDistance(renderer.boundingRadius(), 45),
  };
  resize();

  const stream = new EventStream(`${baseUrl}/events`, {
    lastEventId: String(scene.revision),
    onEvent(event) {
      if (!event.data) return;
      try {
        model.apply(parseSceneDoc(JSON.parse(event.data)));
      } catch {
        ui.toast("bad event payload");
      }
    },
    onState(state) {
      ui.setConnection(state === "open" ? "live" : state, state === "retrying");
    },
  });
  void stream.run();
}

boot().catch((err) => {
  ui.setConnection(String(err), true);
  // retry the whole boot with backoff: the service may still be starting
  setTimeout(() => { boot().catch(() => undefined); }, 2000);
});
