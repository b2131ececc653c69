/** Orbit camera state with canonical inspection presets.
 *
 * Angles are spherical around the target in the model/patient frame:
 * azimuth 0 looks from +X, rotating toward +Y; elevation +90 deg is
 * straight above (+Z). The verification presets map to:
 * top = from +Z, left = from +X, right = from -X, front = from -Y.
 */

export type Vec3 = [number, number, number];
export type ViewPreset = "top" | "left" | "right" | "front";

export interface OrbitState {
  target: Vec3;
  distance: number;
  azimuthDeg: number;
  elevationDeg: number;
}

export const PRESET_ANGLES: Record<ViewPreset, { azimuthDeg: number; elevationDeg: number }> = {
  top: { azimuthDeg: 90, elevationDeg: 89.9 }, // just off the pole to keep up-vector stable
  left: { azimuthDeg: 0, elevationDeg: 0 },
  right: { azimuthDeg: 180, elevationDeg: 0 },
  front: { azimuthDeg: -90, elevationDeg: 0 },
};

export function applyPreset(state: OrbitState, preset: ViewPreset): OrbitState {
  const angles = PRESET_ANGLES[preset];
  return { ...state, ...angles };
}

/** Camera position for the orbit state. */
export function cameraPosition(state: OrbitState): Vec3 {
  const az = (state.azimuthDeg * Math.PI) / 180;
  const el = (state.elevationDeg * Math.PI) / 180;
  const horizontal = Math.cos(el) * state.distance;
  return [
    state.target[0] + horizontal * Math.cos(az),
    state.target[1] + horizontal * Math.sin(az),
    state.target[2] + Math.sin(el) * state.distance,
  ];
}

/** Distance at which a bounding sphere fits comfortably in the view. */
export function fitDistance(radiusMm: number, fovYDeg: number): number {
  const half = (fovYDeg * Math.PI) / 360;
  return Math.max(radiusMm / Math.sin(half), 1) * 1.25;
}

export function rotate(state: OrbitState, dAzimuthDeg: number,
                       dElevationDeg: number): OrbitState {
  const elevation = Math.max(-89.9, Math.min(89.9, state.elevationDeg + dElevationDeg));
  let azimuth = (state.azimuthDeg + dAzimuthDeg) % 360;
  if (azimuth > 180) azimuth -= 360;
  if (azimuth < -180) azimuth += 360;
  return { ...state, azimuthDeg: azimuth, elevationDeg: elevation };
}

export function zoom(state: OrbitState, factor: number): OrbitState {
  return { ...state, distance: Math.max(1, state.distance * factor) };
}

export const WORLD_UP: Vec3 = [0, 0, 1];
