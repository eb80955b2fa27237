import * as THREE from "three";

import { boxCorners, pointInBox } from "./boxmath";
import type { AnnotationStore } from "./store";
import type { WireBox } from "./types";

const POINT_COLOR = new THREE.Color("#8a93a0");
const FRUSTUM_COLOR = new THREE.Color("#ffb347");
const IN_BOX_COLOR = new THREE.Color("#4cd964");

const WIRE_EDGES: [number, number][] = [
  [0, 1], [1, 2], [2, 3], [3, 0],
  [4, 5], [5, 6], [6, 7], [7, 4],
  [0, 4], [1, 5], [2, 6], [3, 7],
];

/** Perspective (free orbit) view of the raw cloud, scene-graph rendered.
 * Falls back to a text placeholder when WebGL is unavailable so the rest of
 * the UI keeps working. */
export class PerspectiveView {
  private renderer: THREE.WebGLRenderer | null = null;
  private readonly scene = new THREE.Scene();
  private readonly camera: THREE.PerspectiveCamera;
  private points: THREE.Points | null = null;
  private boxGroup = new THREE.Group();
  private orbit = { yaw: -Math.PI / 2, pitch: 0.5, dist: 40 };
  private dragging = false;

  constructor(
    canvas: HTMLCanvasElement,
    private readonly store: AnnotationStore,
  ) {
    this.camera = new THREE.PerspectiveCamera(
      60, canvas.width / canvas.height, 0.1, 500);
    this.scene.add(this.boxGroup);
    try {
      this.renderer = new THREE.WebGLRenderer({ canvas, antialias: false });
      this.renderer.setSize(canvas.width, canvas.height, false);
    } catch {
      this.renderer = null;
    }

    canvas.addEventListener("mousedown", () => {
      this.dragging = true;
    });
    window.addEventListener("mouseup", () => {
      this.dragging = false;
    });
    canvas.addEventListener("mousemove", (e) => {
      if (!this.dragging) return;
      this.orbit.yaw -= e.movementX * 0.008;
      this.orbit.pitch = Math.min(1.5, Math.max(-1.5,
        this.orbit.pitch + e.movementY * 0.008));
      this.render();
    });
    canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.orbit.dist = Math.min(200, Math.max(5,
        this.orbit.dist * (e.deltaY > 0 ? 1.15 : 1 / 1.15)));
      this.render();
    });
  }

  /** Rebuild the point buffer from raw cloud bytes (float32 x,y,z,r). */
  setCloud(cloud: Float32Array): void {
    if (this.points) {
      this.scene.remove(this.points);
      this.points.geometry.dispose();
      (this.points.material as THREE.Material).dispose();
    }
    const n = Math.floor(cloud.length / 4);
    const positions = new Float32Array(n * 3);
    for (let i = 0; i < n; i++) {
      positions[i * 3] = cloud[i * 4];
      positions[i * 3 + 1] = cloud[i * 4 + 1];
      positions[i * 3 + 2] = cloud[i * 4 + 2];
    }
    const colors = new Float32Array(n * 3);
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
    geometry.setAttribute("color", new THREE.BufferAttribute(colors, 3));
    this.points = new THREE.Points(
      geometry,
      new THREE.PointsMaterial({ size: 0.08, vertexColors: true }));
    this.scene.add(this.points);
    this.recolor(cloud);
  }

  /** Highlight frustum points and in-box points with distinct colors. */
  recolor(cloud: Float32Array | null): void {
    if (!this.points || !cloud) return;
    const colorAttr = this.points.geometry.getAttribute("color");
    const n = colorAttr.count;
    const selected = this.store.selectedBox;
    const highlight = this.store.state.highlight;
    for (let i = 0; i < n; i++) {
      let color = POINT_COLOR;
      if (selected && pointInBox(
            selected, cloud[i * 4], cloud[i * 4 + 1], cloud[i * 4 + 2])) {
        color = IN_BOX_COLOR;
      } else if (highlight.has(i)) {
        color = FRUSTUM_COLOR;
      }
      colorAttr.setXYZ(i, color.r, color.g, color.b);
    }
    colorAttr.needsUpdate = true;
  }

  private rebuildBoxes(): void {
    this.boxGroup.clear();
    for (const box of this.store.state.boxes.values()) {
      this.boxGroup.add(this.wireframe(box, box.track_id === this.store.state.selected));
    }
  }

  private wireframe(box: WireBox, selected: boolean): THREE.LineSegments {
    const corners = boxCorners(box);
    const positions = new Float32Array(WIRE_EDGES.length * 6);
    WIRE_EDGES.forEach(([a, b], i) => {
      positions.set(corners[a], i * 6);
      positions.set(corners[b], i * 6 + 3);
    });
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
    return new THREE.LineSegments(
      geometry,
      new THREE.LineBasicMaterial({ color: selected ? 0xffffff : 0x5ac8fa }));
  }

  render(cloud: Float32Array | null = null): void {
    if (!this.renderer) return;
    if (cloud) {
      this.recolor(cloud);
    }
    this.rebuildBoxes();
    const target = this.store.selectedBox;
    const center = target
      ? new THREE.Vector3(...target.center)
      : new THREE.Vector3(15, 0, 0);
    const { yaw, pitch, dist } = this.orbit;
    this.camera.position.set(
      center.x + dist * Math.cos(pitch) * Math.cos(yaw),
      center.y + dist * Math.cos(pitch) * Math.sin(yaw),
      center.z + dist * Math.sin(pitch));
    this.camera.up.set(0, 0, 1);
    this.camera.lookAt(center);
    this.renderer.render(this.scene, this.camera);
  }
}
