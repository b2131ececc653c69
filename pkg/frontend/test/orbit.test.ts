import { describe, expect, it } from "vitest";

import { OrbitState, applyPreset, cameraPosition, fitDistance, rotate, zoom }
  from "../src/orbit";

const base: OrbitState = {
  target: [10, 20, 30],
  distance: 100,
  azimuthDeg: 0,
  elevationDeg: 0,
};

describe("view presets", () => {
  it("top looks down from above the target", () => {
    const eye = cameraPosition(applyPreset(base, "top"));
    expect(eye[2]).toBeGreaterThan(base.target[2] + 99);
    expect(Math.abs(eye[0] - base.target[0])).toBeLessThan(1);
    expect(Math.abs(eye[1] - base.target[1])).toBeLessThan(1);
  });

  it("left and right are opposite sides along X", () => {
    const left = cameraPosition(applyPreset(base, "left"));
    const right = cameraPosition(applyPreset(base, "right"));
    expect(left[0]).toBeCloseTo(base.target[0] + 100, 5);
    expect(right[0]).toBeCloseTo(base.target[0] - 100, 5);
    expect(left[2]).toBeCloseTo(base.target[2], 5);
  });

  it("front looks along +Y", () => {
    const eye = cameraPosition(applyPreset(base, "front"));
    expect(eye[1]).toBeCloseTo(base.target[1] - 100, 5);
  });

  it("presets preserve target and distance", () => {
    const s = applyPreset({ ...base, distance: 321 }, "top");
    expect(s.distance).toBe(321);
    expect(s.target).toEqual(base.target);
  });
});

describe("orbit math", () => {
  it("camera stays on the sphere while rotating", () => {
    let s = base;
    for (let i = 0; i < 20; i += 1) {
      s = rotate(s, 33, 7);
      const eye = cameraPosition(s);
      const r = Math.hypot(eye[0] - s.target[0], eye[1] - s.target[1],
                           eye[2] - s.target[2]);
      expect(r).toBeCloseTo(s.distance, 6);
    }
  });

  it("elevation clamps at the poles", () => {
    const s = rotate(base, 0, 500);
    expect(s.elevationDeg).toBeLessThanOrEqual(89.9);
  });

  it("zoom scales distance with a floor", () => {
    expect(zoom(base, 0.5).distance).toBe(50);
    expect(zoom({ ...base, distance: 1 }, 0.001).distance).toBe(1);
  });

  it("fitDistance contains the bounding sphere", () => {
    const d = fitDistance(100, 45);
    // sphere subtends less than the vertical field of view
    expect(2 * Math.atan(100 / d)).toBeLessThan((45 * Math.PI) / 180);
  });
});
