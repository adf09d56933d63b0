/**
 * 3D view of the catheter: bending arc, tip frame triad, plant (EM) tip
 * marker, saved-view ghosts, and the active recovery trace. Geometry is
 * rebuilt from each snapshot; the camera orbits slowly for depth cues.
 */
import * as THREE from "three";

import { sampleArc, tipAxes, type Vec3 } from "./arc.js";
import type { StateFrame } from "./protocol.js";

const ARC_SAMPLES = 48;

function v3(p: Vec3): THREE.Vector3 {
  // gateway frame: z along the catheter axis; render with z up
  return new THREE.Vector3(p[0], p[2], -p[1]);
}

export class CatheterScene {
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private renderer: THREE.WebGLRenderer | null = null;
  private arcLine: THREE.Line;
  private triad: THREE.Group;
  private plantDot: THREE.Mesh;
  private ghosts = new THREE.Group();
  private recoveryLine: THREE.Line;
  private angle = 0;

  constructor(private readonly container?: HTMLElement) {
    this.camera = new THREE.PerspectiveCamera(45, 4 / 3, 1, 1000);
    this.scene.background = new THREE.Color(0x10141a);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.8));
    const sun = new THREE.DirectionalLight(0xffffff, 0.8);
    sun.position.set(60, 120, 80);
    this.scene.add(sun);
    this.scene.add(new THREE.GridHelper(160, 16, 0x30404f, 0x202a33));

    this.arcLine = new THREE.Line(
      new THREE.BufferGeometry(),
      new THREE.LineBasicMaterial({ color: 0xf0f4f8, linewidth: 2 }),
    );
    this.scene.add(this.arcLine);

    this.triad = new THREE.Group();
    this.scene.add(this.triad);

    this.plantDot = new THREE.Mesh(
      new THREE.SphereGeometry(1.6, 16, 16),
      new THREE.MeshStandardMaterial({ color: 0xffaa33 }),
    );
    this.scene.add(this.plantDot);
    this.scene.add(this.ghosts);

    this.recoveryLine = new THREE.Line(
      new THREE.BufferGeometry(),
      new THREE.LineBasicMaterial({ color: 0x44dd88 }),
    );
    this.scene.add(this.recoveryLine);

    if (container) {
      this.renderer = new THREE.WebGLRenderer({ antialias: true });
      this.renderer.setSize(container.clientWidth || 640, container.clientHeight || 480);
      container.appendChild(this.renderer.domElement);
    }
  }

  /** Rebuild the arc + markers from a snapshot. Returns the sampled points. */
  update(snapshot: StateFrame): Vec3[] {
    const pts = sampleArc(snapshot.bend, snapshot.config, ARC_SAMPLES);
    this.arcLine.geometry.dispose();
    this.arcLine.geometry = new THREE.BufferGeometry().setFromPoints(pts.map(v3));

    this.triad.clear();
    const axes = tipAxes(snapshot.tip.rotation);
    const origin = v3(snapshot.tip.position as Vec3);
    const colors: [Vec3, number][] = [
      [axes.x, 0xff5555], // image-facing direction
      [axes.y, 0x55ff55],
      [axes.z, 0x7799ff], // catheter axis
    ];
    for (const [axis, color] of colors) {
      const dir = v3(axis).normalize();
      this.triad.add(new THREE.ArrowHelper(dir, origin, 14, color, 4, 2));
    }

    this.plantDot.position.copy(v3(snapshot.plant_tip.position as Vec3));

    this.ghosts.clear();
    for (const view of snapshot.views) {
      const ghost = new THREE.Mesh(
        new THREE.SphereGeometry(1.1, 12, 12),
        new THREE.MeshStandardMaterial({ color: 0x8866ff, transparent: true, opacity: 0.6 }),
      );
      // ghost marks the saved config's model tip; derive it from the saved
      // knob pair through the same arc sampling
      const bend = approximateBend(view.config.phi1, view.config.phi2, snapshot.bend.length_mm);
      const end = sampleArc(bend, view.config, 9)[8];
      ghost.position.copy(v3(end));
      this.ghosts.add(ghost);
    }
    return pts;
  }

  setRecoveryTrace(points: Vec3[]) {
    this.recoveryLine.geometry.dispose();
    this.recoveryLine.geometry = new THREE.BufferGeometry().setFromPoints(points.map(v3));
  }

  frame() {
    if (!this.renderer) return;
    this.angle += 0.002;
    const r = 170;
    this.camera.position.set(Math.sin(this.angle) * r, 95, Math.cos(this.angle) * r);
    this.camera.lookAt(0, 40, 0);
    this.renderer.render(this.scene, this.camera);
  }
}

/** Constant-curvature bend parameters for a knob pair (unit knob ratio). */
export function approximateBend(phi1: number, phi2: number, lengthMm: number) {
  const alpha = Math.hypot(phi1, phi2);
  const theta = (Math.atan2(phi2, phi1) * 180) / Math.PI;
  return {
    theta_deg: theta,
    alpha_deg: alpha,
    radius_mm: alpha > 1e-9 ? lengthMm / ((alpha * Math.PI) / 180) : null,
    length_mm: lengthMm,
  };
}
