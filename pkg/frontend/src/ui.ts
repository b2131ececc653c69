/** DOM controls: toggles, view presets, offset sliders, status surfaces. */

import { ViewPreset } from "./orbit";

export interface UiHandlers {
  onToggle(name: string): void;
  onPreset(preset: ViewPreset): void;
  onOffset(x: number, y: number, z: number): void;
  onProxyToggle(on: boolean): void;
}

export interface Ui {
  setRevision(revision: number): void;
  setConnection(text: string, bad: boolean): void;
  setVisibility(flags: Record<string, boolean>): void;
  setOffset(offset: [number, number, number]): void;
  setDebug(lines: string[]): void;
  toast(message: string): void;
}

export function buildUi(root: HTMLElement, handlers: UiHandlers): Ui {
  root.innerHTML = `
    <div id="banner" class="banner hidden"></div>
    <div class="panel">
      <div class="row">
        <button id="toggle-skull">Toggle Skull</button>
        <button id="toggle-ventricles">Toggle Ventricles</button>
        <label><input type="checkbox" id="proxy"> reference model</label>
      </div>
      <div class="row" id="views">
        <span>view:</span>
        <button data-view="top">top</button>
        <button data-view="left">left</button>
        <button data-view="right">right</button>
        <button data-view="front">front</button>
      </div>
      <div class="row offsets">
        <span>offset mm</span>
        <label>x <input id="off-x" type="number" step="5" value="150"></label>
        <label>y <input id="off-y" type="number" step="5" value="0"></label>
        <label>z <input id="off-z" type="number" step="5" value="0"></label>
        <button id="apply-offset">apply</button>
      </div>
      <div class="row status">
        <span id="revision">revision -</span>
        <span id="connection">connecting…</span>
      </div>
      <pre id="debug" class="debug"></pre>
    </div>
    <div id="toast" class="toast hidden"></div>
  `;

  const $ = <T extends HTMLElement>(sel: string) => root.querySelector(sel) as T;

  $("#toggle-skull").addEventListener("click", () => handlers.onToggle("skull"));
  $("#toggle-ventricles").addEventListener("click", () => handlers.onToggle("ventricles"));
  $("#proxy").addEventListener("change", (e) =>
    handlers.onProxyToggle((e.target as HTMLInputElement).checked));
  for (const button of root.querySelectorAll<HTMLButtonElement>("#views button")) {
    button.addEventListener("click", () =>
      handlers.onPreset(button.dataset.view as ViewPreset));
  }
  $("#apply-offset").addEventListener("click", () => {
    handlers.onOffset(
      Number(($("#off-x") as HTMLInputElement).value),
      Number(($("#off-y") as HTMLInputElement).value),
      Number(($("#off-z") as HTMLInputElement).value),
    );
  });

  let toastTimer: ReturnType<typeof setTimeout> | undefined;
  return {
    setRevision(revision) {
      $("#revision").textContent = `revision ${revision}`;
    },
    setConnection(text, bad) {
      $("#connection").textContent = text;
      const banner = $("#banner");
      banner.classList.toggle("hidden", !bad);
      banner.textContent = bad ? `service unreachable: ${text}` : "";
    },
    setVisibility(flags) {
      $("#toggle-skull").classList.toggle("off", flags["skull"] === false);
      $("#toggle-ventricles").classList.toggle("off", flags["ventricles"] === false);
    },
    setOffset(offset) {
      ($("#off-x") as HTMLInputElement).value = String(offset[0]);
      ($("#off-y") as HTMLInputElement).value = String(offset[1]);
      ($("#off-z") as HTMLInputElement).value = String(offset[2]);
    },
    setDebug(lines) {
      $("#debug").textContent = lines.join("\n");
    },
    toast(message) {
      const toast = $("#toast");
      toast.textContent = message;
      toast.classList.remove("hidden");
      if (toastTimer) clearTimeout(toastTimer);
      toastTimer = setTimeout(() => toast.classList.add("hidden"), 4000);
    },
  };
}
