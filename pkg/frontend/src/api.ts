/** REST calls against the pipeline service. */

import { SceneDoc, parseSceneDoc } from "./sceneDoc";

export interface CommandResult {
  ok: boolean;
  revision?: number;
  error?: string;
  detail?: string;
}

export async function fetchScene(baseUrl: string): Promise<SceneDoc> {
  const response = await fetch(`${baseUrl}/scene`);
  if (!response.ok) throw new Error(`GET /scene -> ${response.status}`);
  return parseSceneDoc(await response.json());
}

export async function fetchMeshText(baseUrl: string, name: string): Promise<string> {
  const response = await fetch(`${baseUrl}/mesh/${encodeURIComponent(name)}`);
  if (!response.ok) throw new Error(`GET /mesh/${name} -> ${response.status}`);
  return response.text();
}

export async function postCommand(baseUrl: string, text: string): Promise<CommandResult> {
  const response = await fetch(`${baseUrl}/command`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ text }),
  });
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    return { ok: false, error: body.error ?? `HTTP ${response.status}`, detail: body.detail };
  }
  return { ok: true, revision: body.revision };
}

export function offsetCommand(x: number, y: number, z: number): string {
  return `set offset ${x} ${y} ${z}`;
}
