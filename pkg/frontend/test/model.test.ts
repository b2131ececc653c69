import { describe, expect, it } from "vitest";

import { ViewerModel } from "../src/model";
import { SceneDoc } from "../src/sceneDoc";

function snapshot(revision: number, skull: boolean, ventricles: boolean): SceneDoc {
  const node = (name: string, visible: boolean) => ({
    name,
    mesh: name,
    transform: { rotation: [1, 0, 0, 0] as [number, number, number, number],
                 translation: [150, 0, 0] as [number, number, number] },
    visible,
    material: { rgba: [0.5, 0.5, 0.5, 1] as [number, number, number, number] },
  });
  return {
    revision,
    marker_pose: null,
    offset_mm: [150, 0, 0],
    nodes: [node("skull", skull), node("ventricles", ventricles)],
  };
}

describe("ViewerModel", () => {
  it("applies snapshots in revision order", () => {
    const model = new ViewerModel();
    expect(model.apply(snapshot(0, true, true))).toBe(true);
    expect(model.apply(snapshot(1, false, true))).toBe(true);
    expect(model.revision).toBe(1);
    expect(model.visibility()).toEqual({ skull: false, ventricles: true });
  });

  it("drops stale and duplicate snapshots", () => {
    const model = new ViewerModel();
    model.apply(snapshot(0, true, true));
    model.apply(snapshot(3, false, false));
    expect(model.apply(snapshot(1, true, true))).toBe(false);
    expect(model.apply(snapshot(3, true, true))).toBe(false);
    expect(model.revision).toBe(3);
    expect(model.visibility()).toEqual({ skull: false, ventricles: false });
  });

  it("adopts jumps forward (reconnect replay)", () => {
    const model = new ViewerModel();
    model.apply(snapshot(0, true, true));
    expect(model.apply(snapshot(5, false, true))).toBe(true);
    expect(model.revision).toBe(5);
  });

  it("out-of-order delivery converges to the newest revision", () => {
    const model = new ViewerModel();
    for (const rev of [2, 0, 3, 1]) {
      model.apply(snapshot(rev, rev % 2 === 0, true));
    }
    expect(model.revision).toBe(3);
    expect(model.visibility()["skull"]).toBe(false);
  });

  it("notifies listeners on change only", () => {
    const model = new ViewerModel();
    const seen: number[] = [];
    model.onChange((scene) => seen.push(scene.revision));
    model.apply(snapshot(0, true, true));
    model.apply(snapshot(0, true, true)); // duplicate: ignored
    model.apply(snapshot(1, false, true));
    expect(seen).toEqual([0, 1]);
  });

  it("waitForRevision resolves on arrival and rejects on timeout", async () => {
    const model = new ViewerModel();
    model.apply(snapshot(0, true, true));
    const waiting = model.waitForRevision(2, 1000);
    model.apply(snapshot(2, true, false));
    await expect(waiting).resolves.toBeUndefined();
    await expect(model.waitForRevision(9, 50)).rejects.toThrow(/not reached/);
  });

  it("two models fed the same events converge identically", () => {
    const a = new ViewerModel();
    const b = new ViewerModel();
    const events = [snapshot(0, true, true), snapshot(1, false, true),
                    snapshot(2, false, false), snapshot(3, true, false)];
    for (const e of events) a.apply(e);
    for (const e of [events[0], events[2], events[1], events[3]]) b.apply(e);
    expect(a.revision).toBe(b.revision);
    expect(a.visibility()).toEqual(b.visibility());
  });
});
