/**
 * Local reconstruction of the catheter arc from the snapshot's bend
 * parameters. The gateway sends (theta, alpha, radius, length) plus roll and
 * translation; the console samples the constant-curvature curve itself so the
 * wire format stays minimal.
 */
import type { Bend, JointConfig } from "./protocol.js";

const DEG = Math.PI / 180;

/** Below this arc angle the bend renders as a straight segment. */
export const STRAIGHT_ALPHA_DEG = 0.5;

export type Vec3 = [number, number, number];

function rotZ(p: Vec3, deg: number): Vec3 {
  const c = Math.cos(deg * DEG);
  const s = Math.sin(deg * DEG);
  return [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]];
}

/**
 * Sample the bending section from base to tip in the base frame.
 * Applies the bulk roll and axial translation from the config.
 */
export function sampleArc(bend: Bend, config: JointConfig, samples = 33): Vec3[] {
  if (samples < 2) throw new Error("need at least 2 arc samples");
  const pts: Vec3[] = [];
  const straight = bend.alpha_deg < STRAIGHT_ALPHA_DEG || bend.radius_mm === null;
  for (let i = 0; i < samples; i++) {
    const f = i / (samples - 1);
    let local: Vec3;
    if (straight) {
      local = [0, 0, f * bend.length_mm];
    } else {
      const a = f * bend.alpha_deg * DEG;
      const r = bend.radius_mm as number;
      const rho = r * (1 - Math.cos(a));
      local = rotZ([rho, 0, r * Math.sin(a)], bend.theta_deg);
    }
    const rolled = rotZ(local, config.phi3);
    pts.push([rolled[0], rolled[1], rolled[2] + config.d4]);
  }
  return pts;
}

/** Tip frame axes (columns of the rotation matrix) as three unit vectors. */
export function tipAxes(rotation: number[][]): { x: Vec3; y: Vec3; z: Vec3 } {
  return {
    x: [rotation[0][0], rotation[1][0], rotation[2][0]],
    y: [rotation[0][1], rotation[1][1], rotation[2][1]],
    z: [rotation[0][2], rotation[1][2], rotation[2][2]],
  };
}
